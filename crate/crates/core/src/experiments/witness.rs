use serde::Serialize;

use super::{growth_ratio, ls_slope, no_growth};
use crate::error::{Error, Result};
use crate::extension::smoothstep;
use crate::geometry::Cube;
use crate::growth::GrowthFunction;
use crate::polyapprox::{fit_grid, Grid, GridFunction, MultiIndex, Norm, Polynomial};

/// Product cutoff: 1 on `[-1/2, 1/2]^2`, 0 outside `[-3/4, 3/4]^2`.
pub fn cutoff(x: &[f64]) -> f64 {
    x.iter()
        .map(|&t| 1.0 - smoothstep(4, (4.0 * t.abs() - 2.0).clamp(0.0, 1.0)))
        .product()
}

/// `phi_k(x) = x^k xi(|x_1|) cutoff(x)`, zero on `x_1 = 0`.
#[derive(Clone, Debug)]
pub struct Witness {
    k: MultiIndex,
    omega: GrowthFunction,
}

impl Witness {
    /// Needs `|k| = n(omega)` and `k_1 != 0`.
    pub fn new(k: MultiIndex, omega: &GrowthFunction) -> Result<Self> {
        if k.dim() != 2 {
            return Err(Error::Precondition("the witness is planar".into()));
        }
        if k.0[0] == 0 {
            return Err(Error::Precondition("the witness needs k_1 != 0".into()));
        }
        if k.order() != omega.n() {
            return Err(Error::Precondition(format!(
                "|k| = {} differs from the type {} of the growth function",
                k.order(),
                omega.n()
            )));
        }
        Ok(Witness {
            k,
            omega: omega.clone(),
        })
    }

    pub fn k(&self) -> &MultiIndex {
        &self.k
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let c = cutoff(x);
        if c == 0.0 || x[0] == 0.0 {
            return 0.0;
        }
        let xi = self.omega.xi(x[0].abs()).expect("|x_1| in (0, 1)");
        self.k.pow(x) * xi * c
    }

    /// Samples on `grid`, one `xi` evaluation per column.
    pub fn sample(&self, grid: Grid) -> Result<GridFunction> {
        let xi: Vec<f64> = (0..grid.nx)
            .map(|i| {
                let t = grid.center(i, 0)[0].abs();
                if t == 0.0 || t >= 0.75 {
                    Ok(0.0)
                } else {
                    self.omega.xi(t)
                }
            })
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let x = grid.center(i, j);
                values[grid.index(i, j)] = self.k.pow(&x) * xi[i] * cutoff(&x);
            }
        }
        GridFunction::new(grid, values, None)
    }
}

/// The witness sampled on `grid`.
pub fn necessity_witness(k: MultiIndex, omega: &GrowthFunction, grid: Grid) -> Result<GridFunction> {
    Witness::new(k, omega)?.sample(grid)
}

/// Coefficient of `x^k` in `p_Q phi` on cubes centered at the origin with
/// the given sides, its regression slope against `1 + ln(1/l)`.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientProfile {
    pub k: MultiIndex,
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
}

pub fn witness_coefficients(phi: &GridFunction, k: &MultiIndex, sides: &[f64]) -> Result<CoefficientProfile> {
    let n = k.order();
    let points = sides
        .iter()
        .map(|&l| {
            let p = fit_grid(phi, &Cube::centered(&[0.0, 0.0], l), n)?.to_polynomial();
            Ok((l, p.coeff(k)))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = ls_slope(
        &points
            .iter()
            .map(|&(l, a)| (1.0 + (1.0 / l).ln(), a))
            .collect::<Vec<_>>(),
    );
    Ok(CoefficientProfile {
        k: k.clone(),
        points,
        slope,
    })
}

/// Membership of the witness in `C_omega`, on cubes centered at the origin:
/// `mean_Q |phi - x^k xi(l)| / omega(l)` and the same with `p_Q phi`.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessProfile {
    pub explicit: Vec<(f64, f64)>,
    pub near_best: Vec<(f64, f64)>,
    pub growth_ratio: Option<f64>,
    pub bounded: bool,
}

pub fn witness_profile(
    phi: &GridFunction,
    k: &MultiIndex,
    omega: &GrowthFunction,
    sides: &[f64],
) -> Result<WitnessProfile> {
    let n = k.order();
    let mut explicit = Vec::new();
    let mut near_best = Vec::new();
    for &l in sides {
        let q = Cube::centered(&[0.0, 0.0], l);
        let xi = omega.xi(l)?;
        let p = Polynomial::monomial(vec![0.0, 0.0], n, k.clone()).scale(xi);
        let r = phi.grid.cells_in(&q);
        let mut acc = 0.0;
        for (i, j) in r.iter() {
            let x = phi.grid.center(i, j);
            acc += (phi.get(i, j) - p.eval(&x)).abs();
        }
        let w = omega.eval(l);
        explicit.push((l, acc / r.len() as f64 / w));
        let (osc, _) = crate::polyapprox::oscillation(phi, &q, n, Norm::L1)?;
        near_best.push((l, osc / w));
    }
    Ok(WitnessProfile {
        growth_ratio: growth_ratio(&explicit),
        bounded: no_growth(&explicit),
        explicit,
        near_best,
    })
}
