use rayon::prelude::*;
use serde::Serialize;

use super::{anchor_lattice, growth_ratio, no_growth, usable_sides};
use crate::czoperator::{Kernel, Scheme, TruncatedOperator};
use crate::error::{Error, Result};
use crate::geometry::{Cube, Domain};
use crate::growth::GrowthFunction;
use crate::polyapprox::{
    campanato_seminorm, multi_indices, oscillation, weighted_seminorm, Grid, GridFunction, MultiIndex, Norm,
    Polynomial, SeminormOptions,
};

#[derive(Clone, Debug, Serialize)]
pub struct TpOptions {
    pub scheme: Scheme,
    /// Profile sides `2^-j` for `j` in this range, dropped when a cube would
    /// hold fewer than `n + 2` cells per axis.
    pub scales: (i32, i32),
    /// Least distance from an anchor to the boundary.
    pub anchor_reach: f64,
    /// Compute the full seminorm table.
    pub table: bool,
    /// Seminorm table over every anchor rather than the central one.
    pub table_all_anchors: bool,
}

impl Default for TpOptions {
    fn default() -> Self {
        TpOptions {
            scheme: Scheme::Corrected,
            scales: (2, 8),
            anchor_reach: 0.25,
            table: true,
            table_all_anchors: false,
        }
    }
}

/// One cube of a profile: `mean_Q |g - S_Q| / weight(l)` for the cube of side
/// `side` centered at `anchor`, with `S_Q = p_Q g` the comparison polynomial.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub kernel: String,
    pub k: String,
    pub anchor: [f64; 2],
    pub side: f64,
    pub weight: f64,
    pub oscillation: f64,
    pub value: f64,
    pub s_q: Polynomial,
}

/// Seminorm of `T_D (x - tau)^k` with modulus `omega~`.
#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub kernel: String,
    pub k: String,
    pub anchor: [f64; 2],
    pub value: f64,
    pub argmax: Cube,
}

/// Per-multi-index profile, max over anchors and kernels at each side.
#[derive(Clone, Debug, Serialize)]
pub struct MonomialProfile {
    pub k: String,
    pub points: Vec<(f64, f64)>,
    pub growth_ratio: Option<f64>,
    pub bounded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TpReport {
    pub kernels: Vec<String>,
    pub growth: String,
    pub n: u32,
    pub h: f64,
    pub options: TpOptions,
    pub anchors: Vec<[f64; 2]>,
    pub sides: Vec<f64>,
    pub target_cells: usize,
    pub boundary_cells: usize,
    pub table: Vec<TableRow>,
    /// Largest table entry.
    pub table_sup: Option<f64>,
    pub rows: Vec<ProfileRow>,
    pub profiles: Vec<MonomialProfile>,
    pub bounded: bool,
}

/// The sufficiency experiment for one kernel with default options.
pub fn tp_sufficiency(domain: &dyn Domain, kernel: Kernel, omega: &GrowthFunction, max_level: i32) -> Result<TpReport> {
    tp_sufficiency_with(domain, &[kernel], omega, max_level, &TpOptions::default())
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |a, i| a * f64::from(n - i) / f64::from(i + 1))
}

/// `T_D (x - tau)^k` for every anchor `tau` and `|k| <= n`, at grid spacing
/// `2^-max_level`, with the oscillation profile of each about its anchor in
/// `omega~` units and optionally the full `C_omega~` seminorm.
///
/// By linearity only the `(x - c)^j` with `c` the central anchor go through
/// the operator; shifted monomials are binomial combinations of those.
pub fn tp_sufficiency_with(
    domain: &dyn Domain,
    kernels: &[Kernel],
    omega: &GrowthFunction,
    max_level: i32,
    opts: &TpOptions,
) -> Result<TpReport> {
    if kernels.is_empty() {
        return Err(Error::Precondition("no kernel given".into()));
    }
    if let Some(k) = kernels.iter().find(|k| !k.is_even()) {
        return Err(Error::Precondition(format!("{k} is not even")));
    }
    let n = omega.n();
    let h = 2f64.powi(-max_level);
    let grid = Grid::aligned(&domain.bounding_box(), h)?;
    let op = TruncatedOperator::new(&grid, domain, opts.scheme)?;
    let anchors = anchor_lattice(domain, &grid, opts.anchor_reach);
    let center = anchors[anchors.len() / 2];
    let sides = usable_sides(opts.scales.0..=opts.scales.1, h, n as usize + 2);
    let weights: Vec<f64> = sides.iter().map(|&l| omega.omega_tilde(l)).collect::<Result<_>>()?;
    let basis = multi_indices(2, n);

    let fields: Vec<Vec<num_complex::Complex64>> = basis
        .iter()
        .map(|j| {
            let f = op.sample(|x| j.pow(&[x[0] - center[0], x[1] - center[1]]));
            op.apply_complex(&f)
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, &MultiIndex)> = (0..anchors.len())
        .flat_map(|a| basis.iter().map(move |k| (a, k)))
        .collect();
    let seminorm_opts = SeminormOptions::new(Norm::L1, false, max_level);
    let results: Vec<(Vec<ProfileRow>, Vec<TableRow>)> = jobs
        .par_iter()
        .map(|&(a, k)| {
            let tau = anchors[a];
            let shift = [center[0] - tau[0], center[1] - tau[1]];
            let mut z = vec![num_complex::Complex64::new(0.0, 0.0); grid.len()];
            for (j, field) in basis.iter().zip(&fields) {
                if j.0[0] > k.0[0] || j.0[1] > k.0[1] {
                    continue;
                }
                let c = (0..2)
                    .map(|i| binom(k.0[i], j.0[i]) * shift[i].powi((k.0[i] - j.0[i]) as i32))
                    .product::<f64>();
                if c != 0.0 {
                    z.iter_mut().zip(field).for_each(|(s, v)| *s += c * v);
                }
            }
            let mut prof = Vec::new();
            let mut table = Vec::new();
            for kernel in kernels {
                let values = z.iter().map(|&v| kernel.from_complex(v)).collect();
                let g = GridFunction::new(grid.clone(), values, Some(op.targets().to_vec()))?;
                for (&l, &w) in sides.iter().zip(&weights) {
                    let q = Cube::centered(&tau, l);
                    let (osc, fit) = oscillation(&g, &q, n, Norm::L1)?;
                    prof.push(ProfileRow {
                        kernel: kernel.to_string(),
                        k: k.to_string(),
                        anchor: tau,
                        side: l,
                        weight: w,
                        oscillation: osc,
                        value: osc / w,
                        s_q: fit.to_polynomial(),
                    });
                }
                if opts.table && (opts.table_all_anchors || tau == center) {
                    let r = weighted_seminorm(&g, domain, n, &seminorm_opts, |l| {
                        omega.omega_tilde(l).unwrap_or(f64::NAN)
                    })?;
                    table.push(TableRow {
                        kernel: kernel.to_string(),
                        k: k.to_string(),
                        anchor: tau,
                        value: r.value,
                        argmax: r.argmax,
                    });
                }
            }
            Ok((prof, table))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (p, t) in results {
        rows.extend(p);
        table.extend(t);
    }
    let profiles: Vec<MonomialProfile> = basis
        .iter()
        .map(|k| {
            let name = k.to_string();
            let points: Vec<(f64, f64)> = sides
                .iter()
                .map(|&l| {
                    let v = rows
                        .iter()
                        .filter(|r| r.k == name && r.side == l)
                        .map(|r| r.value)
                        .fold(0.0, f64::max);
                    (l, v)
                })
                .collect();
            MonomialProfile {
                k: name,
                growth_ratio: growth_ratio(&points),
                bounded: no_growth(&points),
                points,
            }
        })
        .collect();
    let table_sup = table.iter().map(|r| r.value).reduce(f64::max);
    Ok(TpReport {
        kernels: kernels.iter().map(|k| k.to_string()).collect(),
        growth: omega.modulus().to_string(),
        n,
        h,
        options: opts.clone(),
        sides,
        target_cells: op.targets().iter().filter(|&&t| t).count(),
        boundary_cells: op.boundary_cells(),
        bounded: profiles.iter().all(|p| p.bounded),
        anchors,
        table,
        table_sup,
        rows,
        profiles,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub kernels: Vec<String>,
    /// `||f||_{omega, D}`.
    pub seminorm: f64,
    /// `||f||_{L^inf(D)}`.
    pub sup: f64,
    pub norm: f64,
    /// Oscillations of `T_D f` in units of `omega(l) ||f||`.
    pub rows: Vec<ProfileRow>,
    pub profile: Vec<(f64, f64)>,
    pub growth_ratio: Option<f64>,
    pub bounded: bool,
}

/// `mean_Q |T_D f - S_Q| / (omega(l) ||f||)` on cubes centered at the
/// anchors, `||f|| = ||f||_{omega, D} + ||f||_{L^inf(D)}`.
pub fn boundedness_probe(
    op: &TruncatedOperator,
    kernels: &[Kernel],
    f: &GridFunction,
    domain: &dyn Domain,
    omega: &GrowthFunction,
    anchors: &[[f64; 2]],
    sides: &[f64],
) -> Result<ProbeReport> {
    let n = omega.n();
    let max_level = (-op.grid().h.log2()).round() as i32;
    let seminorm = campanato_seminorm(f, domain, omega, &SeminormOptions::new(Norm::L1, false, max_level))?.value;
    let sup = f.sup_norm();
    let norm = seminorm + sup;
    if norm == 0.0 {
        return Err(Error::Precondition("probe function vanishes".into()));
    }
    let z = op.apply_complex(f)?;
    let mut rows = Vec::new();
    for kernel in kernels {
        let values = z.iter().map(|&v| kernel.from_complex(v)).collect();
        let g = GridFunction::new(op.grid().clone(), values, Some(op.targets().to_vec()))?;
        for tau in anchors {
            for &l in sides {
                let (osc, fit) = oscillation(&g, &Cube::centered(tau, l), n, Norm::L1)?;
                let w = omega.eval(l) * norm;
                rows.push(ProfileRow {
                    kernel: kernel.to_string(),
                    k: String::new(),
                    anchor: *tau,
                    side: l,
                    weight: w,
                    oscillation: osc,
                    value: osc / w,
                    s_q: fit.to_polynomial(),
                });
            }
        }
    }
    let profile: Vec<(f64, f64)> = sides
        .iter()
        .map(|&l| {
            (
                l,
                rows.iter().filter(|r| r.side == l).map(|r| r.value).fold(0.0, f64::max),
            )
        })
        .collect();
    Ok(ProbeReport {
        kernels: kernels.iter().map(|k| k.to_string()).collect(),
        seminorm,
        sup,
        norm,
        growth_ratio: growth_ratio(&profile),
        bounded: no_growth(&profile),
        rows,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolygonDomain;

    #[test]
    fn beurling_constant_term_vanishes_on_disc() {
        let d = PolygonDomain::disc(1024);
        let omega = GrowthFunction::power(2.0).unwrap();
        let opts = TpOptions {
            table: false,
            ..Default::default()
        };
        let r = tp_sufficiency_with(&d, &[Kernel::BeurlingReal, Kernel::BeurlingImag], &omega, 6, &opts).unwrap();
        assert_eq!(r.anchors.len(), 25);
        assert_eq!(r.profiles.len(), 6);
        // n = 2 needs four cells per axis: sides 1/4 and 1/8 at h = 1/64.
        assert_eq!(r.sides, vec![0.25, 0.125, 0.0625]);
        for row in r.rows.iter().filter(|r| r.k == "(0,0)") {
            assert!(row.oscillation < 5e-3, "{row:?}");
        }
    }

    #[test]
    fn shifted_monomials_match_direct_application() {
        let d = PolygonDomain::disc(256);
        let omega = GrowthFunction::power(2.0).unwrap();
        let opts = TpOptions {
            table: false,
            scales: (2, 3),
            ..Default::default()
        };
        let kernel = Kernel::Riesz2 { i: 1, j: 2 };
        let r = tp_sufficiency_with(&d, &[kernel], &omega, 5, &opts).unwrap();
        let grid = Grid::aligned(&d.bounding_box(), 1.0 / 32.0).unwrap();
        let op = TruncatedOperator::new(&grid, &d, Scheme::Corrected).unwrap();
        let tau = r.anchors[3];
        let f = op.sample(|x| (x[0] - tau[0]) * (x[1] - tau[1]));
        let g = op.apply(&kernel, &f).unwrap();
        for row in r.rows.iter().filter(|r| r.k == "(1,1)" && r.anchor == tau) {
            let (osc, _) = oscillation(&g, &Cube::centered(&tau, row.side), 2, Norm::L1).unwrap();
            assert!(
                (osc - row.oscillation).abs() <= 1e-9 * osc.max(1e-3),
                "{osc} {}",
                row.oscillation
            );
        }
    }
}
