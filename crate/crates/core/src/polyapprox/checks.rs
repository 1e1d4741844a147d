use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use super::grid::GridFunction;
use super::poly::Polynomial;
use super::project::fit_grid;
use crate::error::{Error, Result};
use crate::geometry::Cube;

/// Three sizes of a polynomial on a cube, comparable up to constants that
/// depend only on degree and dimension.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEquivalence {
    pub sup: f64,
    /// `sum |a_mu| l^|mu|` about the cube center.
    pub coefficients: f64,
    pub mean: f64,
}

impl NormEquivalence {
    pub fn sup_over_mean(&self) -> f64 {
        self.sup / self.mean
    }

    pub fn coefficients_over_sup(&self) -> f64 {
        self.coefficients / self.sup
    }
}

/// `mean_Q |P|` by composite 8-point Gauss-Legendre on `panels^d` sub-cubes.
pub fn mean_abs(p: &Polynomial, q: &Cube, panels: usize) -> f64 {
    let rule = GaussLegendre::new(8).expect("8-point rule");
    let pairs = rule.as_node_weight_pairs();
    let d = q.dim();
    let per = panels * pairs.len();
    let w = 1.0 / panels as f64;
    let node = |k: usize| {
        let (x, wt) = pairs[k % pairs.len()];
        ((k / pairs.len()) as f64 * w + 0.5 * w * (x + 1.0), 0.5 * w * wt)
    };
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    for k in 0..per.pow(d as u32) {
        let mut r = k;
        let mut wt = 1.0;
        for (a, xa) in x.iter_mut().enumerate() {
            let (t, ww) = node(r % per);
            r /= per;
            *xa = q.corner[a] + t * q.side;
            wt *= ww;
        }
        acc += wt * p.eval(&x).abs();
    }
    acc
}

pub fn poly_norm_equivalence_check(p: &Polynomial, q: &Cube) -> NormEquivalence {
    let local = p.recenter(&q.center());
    let m = if q.dim() <= 2 { 96 } else { 16 };
    NormEquivalence {
        sup: local.sup_on(q, m),
        coefficients: local.coefficient_norm(q.side),
        mean: mean_abs(&local, q, if q.dim() <= 2 { 8 } else { 2 }),
    }
}

/// `sup_{Q1 u Q2} |p_{Q1} f - p_{Q2} f|` for two touching cubes, sampled on
/// a 64 x 64 lattice of each cube.
pub fn neighbor_poly_gap(f: &GridFunction, q1: &Cube, q2: &Cube, n: u32) -> Result<f64> {
    if !q1.touches(q2) {
        return Err(Error::Precondition("cubes are not neighbors".into()));
    }
    let p1 = fit_grid(f, q1, n)?.to_polynomial();
    let p2 = fit_grid(f, q2, n)?.to_polynomial();
    let diff = p1.axpy(-1.0, &p2);
    Ok(diff.sup_on(q1, 64).max(diff.sup_on(q2, 64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyapprox::grid::Grid;
    use crate::polyapprox::poly::MultiIndex;

    #[test]
    fn constant_polynomial_sizes_agree() {
        let p = Polynomial::constant(vec![0.0, 0.0], 3, -2.5);
        let r = poly_norm_equivalence_check(&p, &Cube::new(vec![1.0, 1.0], 0.5));
        assert!((r.sup - 2.5).abs() < 1e-14);
        assert!((r.coefficients - 2.5).abs() < 1e-14);
        assert!((r.mean - 2.5).abs() < 1e-12);
    }

    #[test]
    fn mean_of_linear_form() {
        // mean of |x| over [-1, 1]^2 is 1/2.
        let p = Polynomial::monomial(vec![0.0, 0.0], 1, MultiIndex(vec![1, 0]));
        let m = mean_abs(&p, &Cube::new(vec![-1.0, -1.0], 2.0), 2);
        assert!((m - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gap_needs_touching_cubes() {
        let g = Grid::over(&Cube::new(vec![0.0, 0.0], 1.0), 32).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * x[1]);
        let a = Cube::new(vec![0.0, 0.0], 0.25);
        let b = Cube::new(vec![0.25, 0.0], 0.25);
        let c = Cube::new(vec![0.5, 0.0], 0.25);
        assert!(neighbor_poly_gap(&f, &a, &b, 2).unwrap() < 1e-12);
        assert!(matches!(neighbor_poly_gap(&f, &a, &c, 2), Err(Error::Precondition(_))));
    }
}
