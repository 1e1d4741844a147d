use serde::Serialize;

use super::cube_inside;
use crate::error::{Error, Result};
use crate::geometry::{Cube, Domain};
use crate::growth::GrowthFunction;
use crate::polyapprox::{fit_grid, GridFunction, MultiIndex, Polynomial};

#[derive(Clone, Debug, Serialize)]
pub struct LawOptions {
    /// Common centers of the cube pairs `(Q, 2Q)`.
    pub anchors: Vec<[f64; 2]>,
    /// Sides of `Q` are `2^-j` for `j` in this range.
    pub levels: (i32, i32),
    /// Lattice points per axis for sup norms over the domain.
    pub sup_lattice: usize,
}

impl Default for LawOptions {
    fn default() -> Self {
        let t = [-0.25, -0.125, 0.0, 0.125, 0.25];
        LawOptions {
            anchors: t.iter().flat_map(|&a| t.iter().map(move |&b| [a, b])).collect(),
            levels: (2, 8),
            sup_lattice: 65,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawLevel {
    pub side: f64,
    pub pairs: usize,
    /// `max |A_{k,2Q} - A_{k,Q}| l^{|k|} / omega(l)` over `k` and anchors.
    pub gap: f64,
    pub gap_k: Option<MultiIndex>,
    pub gap_anchor: Option<[f64; 2]>,
    /// `max ||p_Q f||_{L^inf(D)}` over anchors.
    pub poly_sup: f64,
    pub xi: f64,
    pub poly_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LawsReport {
    pub n: u32,
    pub levels: Vec<LawLevel>,
    pub gap_sup: f64,
    pub poly_sup: f64,
    /// Range of `poly_sup / xi(l)` across levels.
    pub poly_ratio_band: (f64, f64),
}

/// Sup of `p` over the lattice points of the bounding box in the closure of `D`.
fn sup_on_domain(p: &Polynomial, domain: &dyn Domain, m: usize) -> f64 {
    let bb = domain.bounding_box();
    let mut best: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let x = [
                bb.corner[0] + bb.side * a as f64 / (m - 1) as f64,
                bb.corner[1] + bb.side * b as f64 / (m - 1) as f64,
            ];
            if domain.contains(&x) || domain.dist_to_boundary(&x) < 1e-12 {
                best = best.max(p.eval(&x).abs());
            }
        }
    }
    best
}

/// Coefficient comparisons across concentric cubes `Q` and `2Q`, both fitted
/// polynomials written in Taylor form about the common center; and the
/// size of `p_Q f` over the domain against `xi(l)`. Pairs whose `2Q` leaves
/// the domain, or whose `Q` is too small for the grid, are skipped.
///
/// The cubes lie in the domain, where the extension agrees with `f`, so
/// the fits use `f` directly.
pub fn coefficient_laws(
    f: &GridFunction,
    omega: &GrowthFunction,
    domain: &dyn Domain,
    opts: &LawOptions,
) -> Result<LawsReport> {
    let n = omega.n();
    let h = f.grid.h;
    let mut levels = Vec::new();
    for j in opts.levels.0..=opts.levels.1 {
        let l = 2f64.powi(-j);
        if l / h < n as f64 + 2.0 - 1e-9 {
            continue;
        }
        let xi = omega.xi(l)?;
        let w = omega.eval(l);
        let mut lv = LawLevel {
            side: l,
            pairs: 0,
            gap: 0.0,
            gap_k: None,
            gap_anchor: None,
            poly_sup: 0.0,
            xi,
            poly_ratio: 0.0,
        };
        for tau in &opts.anchors {
            let q = Cube::centered(tau, l);
            let q2 = q.scaled(2.0);
            if !(cube_inside(domain, &q) && f.grid.covers(&q2) && domain.cube_dist2_to_boundary(&q2) >= 0.0) {
                continue;
            }
            let inner = fit_grid(f, &q, n)?.to_polynomial();
            let outer = fit_grid(f, &q2, n)?.to_polynomial();
            lv.pairs += 1;
            for (k, a) in inner.terms() {
                let g = (outer.coeff(k) - a).abs() * l.powi(k.order() as i32) / w;
                if g > lv.gap || lv.gap_k.is_none() {
                    lv.gap = g;
                    lv.gap_k = Some(k.clone());
                    lv.gap_anchor = Some(*tau);
                }
            }
            lv.poly_sup = lv.poly_sup.max(sup_on_domain(&inner, domain, opts.sup_lattice));
        }
        lv.poly_ratio = lv.poly_sup / xi;
        if lv.pairs > 0 {
            levels.push(lv);
        }
    }
    if levels.is_empty() {
        return Err(Error::NoAdmissibleCube);
    }
    let gap_sup = levels.iter().map(|l| l.gap).fold(0.0, f64::max);
    let poly_sup = levels.iter().map(|l| l.poly_sup).fold(0.0, f64::max);
    let lo = levels.iter().map(|l| l.poly_ratio).fold(f64::INFINITY, f64::min);
    let hi = levels.iter().map(|l| l.poly_ratio).fold(0.0, f64::max);
    Ok(LawsReport {
        n,
        levels,
        gap_sup,
        poly_sup,
        poly_ratio_band: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolygonDomain;
    use crate::polyapprox::Grid;

    #[test]
    fn polynomials_have_no_gaps() {
        let d = PolygonDomain::unit_square();
        let g = Grid::over(&d.bounding_box(), 128).unwrap();
        let f = GridFunction::on_domain(g, &d, |x| 2.0 - x[0] * x[1] + 0.5 * x[1] * x[1]);
        let omega = GrowthFunction::power(2.0).unwrap();
        let r = coefficient_laws(&f, &omega, &d, &LawOptions::default()).unwrap();
        assert!(r.gap_sup < 1e-8, "{}", r.gap_sup);
        // p_Q f = f, whose sup over the square is attained at a corner.
        assert!((r.poly_sup - 2.375).abs() < 1e-9);
        assert_eq!(r.levels.len(), 4);
    }
}
