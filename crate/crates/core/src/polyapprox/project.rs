use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};

use super::grid::{CellRange, GridFunction};
use super::poly::{multi_indices, MultiIndex, Polynomial};
use crate::error::{Error, Result};
use crate::geometry::Cube;

/// Monomial coefficients of the Legendre polynomials `L_0..=L_n` on `[-1, 1]`.
pub fn legendre_coeffs(n: u32) -> Vec<Vec<f64>> {
    let n = n as usize;
    let mut out = vec![vec![0.0; n + 1]; n + 1];
    out[0][0] = 1.0;
    if n >= 1 {
        out[1][1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        for p in 0..=n {
            let up = if p > 0 { out[k][p - 1] } else { 0.0 };
            out[k + 1][p] = ((2.0 * kf + 1.0) * up - kf * out[k - 1][p]) / (kf + 1.0);
        }
    }
    out
}

fn legendre_into(n: usize, s: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n >= 1 {
        out[1] = s;
    }
    for k in 1..n {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * s * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Per-axis Legendre values at the cell centers of a cube.
struct Tables {
    range: CellRange,
    n: usize,
    tx: Vec<f64>,
    ty: Vec<f64>,
}

impl Tables {
    fn new(f: &GridFunction, q: &Cube, n: u32) -> Tables {
        let g = &f.grid;
        let range = g.cells_in(q);
        let n = n as usize;
        let axis = |lo: usize, hi: usize, axis: usize| {
            let mut t = vec![0.0; (hi - lo) * (n + 1)];
            for (k, i) in (lo..hi).enumerate() {
                let c = g.origin[axis] + (i as f64 + 0.5) * g.h;
                let s = 2.0 * (c - q.corner[axis]) / q.side - 1.0;
                legendre_into(n, s, &mut t[k * (n + 1)..(k + 1) * (n + 1)]);
            }
            t
        };
        let tx = axis(range.i0, range.i1, 0);
        let ty = axis(range.j0, range.j1, 1);
        Tables { range, n, tx, ty }
    }

    fn x(&self, i: usize) -> &[f64] {
        let k = i - self.range.i0;
        &self.tx[k * (self.n + 1)..(k + 1) * (self.n + 1)]
    }

    fn y(&self, j: usize) -> &[f64] {
        let k = j - self.range.j0;
        &self.ty[k * (self.n + 1)..(k + 1) * (self.n + 1)]
    }
}

/// Discrete `L^2(Q)` projection of grid samples onto `P_n`, held in the
/// tensor Legendre basis of `Q`.
#[derive(Clone, Debug)]
pub struct Fit {
    pub cube: Cube,
    pub n: u32,
    pub samples: usize,
    basis: Vec<MultiIndex>,
    coef: Vec<f64>,
}

impl Fit {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.n as usize;
        let mut lx = vec![0.0; n + 1];
        let mut ly = vec![0.0; n + 1];
        legendre_into(n, 2.0 * (x[0] - self.cube.corner[0]) / self.cube.side - 1.0, &mut lx);
        legendre_into(n, 2.0 * (x[1] - self.cube.corner[1]) / self.cube.side - 1.0, &mut ly);
        self.basis
            .iter()
            .zip(&self.coef)
            .map(|(mu, c)| c * lx[mu.0[0] as usize] * ly[mu.0[1] as usize])
            .sum()
    }

    /// Taylor form about the cube center.
    pub fn to_polynomial(&self) -> Polynomial {
        legendre_to_polynomial(&self.cube, self.n, &self.basis, &self.coef)
    }
}

fn legendre_to_polynomial(q: &Cube, n: u32, basis: &[MultiIndex], coef: &[f64]) -> Polynomial {
    let lc = legendre_coeffs(n);
    let d = q.dim();
    let mut p = Polynomial::zero(q.center(), n);
    for nu in multi_indices(d, n) {
        let s: f64 = basis
            .iter()
            .zip(coef)
            .map(|(mu, c)| {
                c * mu
                    .0
                    .iter()
                    .zip(&nu.0)
                    .map(|(&m, &v)| lc[m as usize][v as usize])
                    .product::<f64>()
            })
            .sum();
        let scale = (2.0 / q.side).powi(nu.order() as i32);
        p.set(nu, s * scale);
    }
    p
}

/// Least-squares fit of the active samples of `f` whose cell centers lie in `q`.
pub fn fit_grid(f: &GridFunction, q: &Cube, n: u32) -> Result<Fit> {
    fit_with(f, q, n, &Tables::new(f, q, n))
}

fn fit_with(f: &GridFunction, q: &Cube, n: u32, t: &Tables) -> Result<Fit> {
    let nn = n as usize + 1;
    let basis = multi_indices(2, n);
    let m = basis.len();
    let mut rr = vec![0.0; nn * nn];
    let mut rf = vec![0.0; nn];
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut samples = 0;
    for j in t.range.j0..t.range.j1 {
        rr.iter_mut().for_each(|v| *v = 0.0);
        rf.iter_mut().for_each(|v| *v = 0.0);
        let mut row = 0;
        for i in t.range.i0..t.range.i1 {
            if !f.active(i, j) {
                continue;
            }
            row += 1;
            let lx = t.x(i);
            let v = f.get(i, j);
            for a in 0..nn {
                rf[a] += v * lx[a];
                for b in a..nn {
                    rr[a * nn + b] += lx[a] * lx[b];
                }
            }
        }
        if row == 0 {
            continue;
        }
        samples += row;
        let ly = t.y(j);
        for (r, mu) in basis.iter().enumerate() {
            let (a, b) = (mu.0[0] as usize, mu.0[1] as usize);
            rhs[r] += rf[a] * ly[b];
            for (c, nu) in basis.iter().enumerate().skip(r) {
                let (a2, b2) = (nu.0[0] as usize, nu.0[1] as usize);
                let xx = if a <= a2 { rr[a * nn + a2] } else { rr[a2 * nn + a] };
                gram[(r, c)] += xx * ly[b] * ly[b2];
            }
        }
    }
    let need = (n as usize + 2).pow(2);
    if samples < need {
        return Err(Error::Resolution(format!(
            "cube with side {} holds {samples} samples, need {need}",
            q.side
        )));
    }
    for r in 0..m {
        for c in 0..r {
            gram[(r, c)] = gram[(c, r)];
        }
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned(format!("singular normal system on cube {:?}", q.corner)))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v * v), b.max(v * v)));
    if lo < 1e-12 * hi {
        return Err(Error::IllConditioned(format!(
            "normal system pivot ratio {:.1e} on cube {:?}",
            lo / hi,
            q.corner
        )));
    }
    let coef = chol.solve(&rhs);
    Ok(Fit {
        cube: q.clone(),
        n,
        samples,
        basis,
        coef: coef.iter().copied().collect(),
    })
}

/// The near-best polynomial of `f` on `q`: discrete `L^2(Q)` projection onto
/// `P_n` in Taylor form about the center of `q`.
pub fn project(f: &GridFunction, q: &Cube, n: u32) -> Result<Polynomial> {
    Ok(fit_grid(f, q, n)?.to_polynomial())
}

/// Which `L^p(Q, dx / |Q|)` norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    /// `1`, `2`, `inf`, optionally prefixed with `L`, any case.
    pub fn parse(s: &str) -> Option<Norm> {
        let t = s.trim().to_ascii_lowercase();
        match t.strip_prefix('l').unwrap_or(&t) {
            "1" => Some(Norm::L1),
            "2" => Some(Norm::L2),
            "inf" | "infinity" => Some(Norm::Linf),
            _ => None,
        }
    }
}

/// `||f - p_Q f||_{L^p(Q, dx/|Q|)}` over the active samples of `q`, with the fit.
pub fn oscillation(f: &GridFunction, q: &Cube, n: u32, p: Norm) -> Result<(f64, Fit)> {
    let t = Tables::new(f, q, n);
    let fit = fit_with(f, q, n, &t)?;
    let nn = n as usize + 1;
    let mut u = vec![0.0; nn];
    let mut acc = 0.0f64;
    for j in t.range.j0..t.range.j1 {
        let ly = t.y(j);
        u.iter_mut().for_each(|v| *v = 0.0);
        for (mu, c) in fit.basis.iter().zip(&fit.coef) {
            u[mu.0[0] as usize] += c * ly[mu.0[1] as usize];
        }
        for i in t.range.i0..t.range.i1 {
            if !f.active(i, j) {
                continue;
            }
            let lx = t.x(i);
            let pv: f64 = (0..nn).map(|a| u[a] * lx[a]).sum();
            let e = (f.get(i, j) - pv).abs();
            match p {
                Norm::L1 => acc += e,
                Norm::L2 => acc += e * e,
                Norm::Linf => acc = acc.max(e),
            }
        }
    }
    let k = fit.samples as f64;
    let v = match p {
        Norm::L1 => acc / k,
        Norm::L2 => (acc / k).sqrt(),
        Norm::Linf => acc,
    };
    Ok((v, fit))
}

/// Continuous `L^2(Q)` projection of a callable, by tensor Gauss-Legendre
/// quadrature with 8 nodes on each of `panels` subintervals per axis.
pub fn project_fn<F: Fn(&[f64]) -> f64>(f: F, q: &Cube, n: u32, panels: usize) -> Polynomial {
    let d = q.dim();
    let rule = GaussLegendre::new(8).expect("8-point rule");
    let mut nodes = Vec::new();
    let w = 2.0 / panels as f64;
    for k in 0..panels {
        let mid = -1.0 + (k as f64 + 0.5) * w;
        for &(x, wt) in rule.as_node_weight_pairs() {
            nodes.push((mid + 0.5 * w * x, 0.5 * w * wt));
        }
    }
    let basis = multi_indices(d, n);
    let nl = n as usize + 1;
    let tables: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&(s, _)| {
            let mut v = vec![0.0; nl];
            legendre_into(n as usize, s, &mut v);
            v
        })
        .collect();
    let mut coef = vec![0.0; basis.len()];
    let total = nodes.len().pow(d as u32);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for k in 0..total {
        let mut r = k;
        let mut wt = 1.0;
        for a in 0..d {
            idx[a] = r % nodes.len();
            r /= nodes.len();
            let (s, w) = nodes[idx[a]];
            x[a] = q.corner[a] + 0.5 * (s + 1.0) * q.side;
            wt *= w;
        }
        let v = f(&x) * wt;
        for (c, mu) in coef.iter_mut().zip(&basis) {
            *c += v * mu
                .0
                .iter()
                .zip(&idx)
                .map(|(&m, &i)| tables[i][m as usize])
                .product::<f64>();
        }
    }
    for (c, mu) in coef.iter_mut().zip(&basis) {
        let norm: f64 = mu.0.iter().map(|&m| (2.0 * m as f64 + 1.0) / 2.0).product();
        *c *= norm;
    }
    legendre_to_polynomial(q, n, &basis, &coef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyapprox::grid::Grid;
    use proptest::prelude::*;

    fn random_poly(c: &[f64], coeffs: &[f64], n: u32) -> Polynomial {
        Polynomial::from_coeffs(
            c.to_vec(),
            n,
            multi_indices(2, n).into_iter().zip(coeffs.iter().copied()),
        )
    }

    proptest! {
        #[test]
        fn grid_projection_is_idempotent(
            coeffs in prop::collection::vec(-2.0f64..2.0, 10),
            n in 1u32..4,
            ci in 0usize..8, cj in 0usize..8, lev in 2u32..4,
        ) {
            let g = Grid::over(&Cube::new(vec![-1.0, -1.0], 2.0), 64).unwrap();
            let p = random_poly(&[0.1, -0.2], &coeffs, n);
            let f = GridFunction::from_fn(g, |x| p.eval(x));
            let side = 2.0 / (1u32 << lev) as f64;
            let q = Cube::new(vec![-1.0 + (ci % (1 << lev)) as f64 * side, -1.0 + (cj % (1 << lev)) as f64 * side], side);
            let r = project(&f, &q, n).unwrap().recenter(p.center());
            for mu in multi_indices(2, n) {
                prop_assert!((r.coeff(&mu) - p.coeff(&mu)).abs() < 1e-10);
            }
        }

        #[test]
        fn projection_commutes_with_shift_and_dilation(
            vals in prop::collection::vec(-1.0f64..1.0, 256),
            n in 1u32..4,
            shift in prop::array::uniform2(-3i32..3),
            lev in -1i32..3,
        ) {
            // f on Q0 = [0, 1]^2 as 16 x 16 samples; sigma(x) = lam x + b.
            let q0 = Cube::new(vec![0.0, 0.0], 1.0);
            let lam = 2f64.powi(-lev);
            let b = [shift[0] as f64 * 0.5, shift[1] as f64 * 0.5];
            let g0 = Grid::over(&q0, 16).unwrap();
            let f0 = GridFunction::new(g0, vals.clone(), None).unwrap();
            let q1 = Cube::new(vec![b[0], b[1]], lam);
            let g1 = Grid::over(&q1, 16).unwrap();
            let f1 = GridFunction::new(g1, vals, None).unwrap();
            let p0 = project(&f0, &q0, n).unwrap();
            let p1 = project(&f1, &q1, n).unwrap();
            for k in 0..25 {
                let x = [(k % 5) as f64 / 4.0, (k / 5) as f64 / 4.0];
                let y = [lam * x[0] + b[0], lam * x[1] + b[1]];
                prop_assert!((p0.eval(&x) - p1.eval(&y)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn legendre_table() {
        let c = legendre_coeffs(3);
        assert_eq!(c[2], vec![-0.5, 0.0, 1.5, 0.0]);
        assert_eq!(c[3], vec![0.0, -1.5, 0.0, 2.5]);
    }

    #[test]
    fn square_of_first_coordinate_projects_to_constant() {
        // Orthogonality of x^2 - 1/12 to P_1 on [-1/2, 1/2]^2.
        let q = Cube::new(vec![-0.5, -0.5], 1.0);
        let p = project_fn(|x| x[0] * x[0], &q, 1, 1);
        assert!((p.coeff(&MultiIndex(vec![0, 0])) - 1.0 / 12.0).abs() < 1e-14);
        assert!(p.coeff(&MultiIndex(vec![1, 0])).abs() < 1e-14);
        assert!(p.coeff(&MultiIndex(vec![0, 1])).abs() < 1e-14);
        // The grid projection uses the midpoint rule: mean of x^2 is 1/12 - h^2/12.
        let g = Grid::over(&q, 64).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * x[0]);
        let p = project(&f, &q, 1).unwrap();
        let h = 1.0f64 / 64.0;
        assert!((p.coeff(&MultiIndex(vec![0, 0])) - (1.0 - h * h) / 12.0).abs() < 1e-14);
        assert!(p.coeff(&MultiIndex(vec![1, 0])).abs() < 1e-14);
    }

    #[test]
    fn too_few_samples() {
        let g = Grid::over(&Cube::new(vec![0.0, 0.0], 1.0), 8).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0]);
        let q = Cube::new(vec![0.0, 0.0], 0.375);
        assert!(matches!(fit_grid(&f, &q, 2), Err(Error::Resolution(_))));
    }

    #[test]
    fn collinear_samples_are_ill_conditioned() {
        let g = Grid::over(&Cube::new(vec![0.0, 0.0], 1.0), 16).unwrap();
        let mask = (0..g.len()).map(|k| k % 16 == k / 16).collect();
        let f = GridFunction::from_fn(g, |x| x[0]).with_mask(mask);
        let q = Cube::new(vec![0.0, 0.0], 1.0);
        assert!(matches!(fit_grid(&f, &q, 1), Err(Error::IllConditioned(_))));
    }
}
