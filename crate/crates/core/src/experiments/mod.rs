//! Runnable experiments around the polynomial condition for truncated
//! singular integrals: sufficiency profiles, the three-piece split,
//! coefficient growth laws and the necessity witness.

mod laws;
mod split;
mod tp;
mod witness;

pub use laws::{coefficient_laws, LawLevel, LawOptions, LawsReport};
pub use split::split;
pub use tp::{
    boundedness_probe, tp_sufficiency, tp_sufficiency_with, MonomialProfile, ProbeReport, ProfileRow, TableRow,
    TpOptions, TpReport,
};
pub use witness::{
    cutoff, necessity_witness, witness_coefficients, witness_profile, CoefficientProfile, Witness, WitnessProfile,
};

use crate::geometry::{Cube, Domain};
use crate::polyapprox::Grid;

/// Largest allowed ratio between the small-scale and large-scale ends of a
/// profile.
pub const NO_GROWTH_FACTOR: f64 = 1.5;

/// `(side, value)` profile check: the max over the two smallest sides is at
/// most `NO_GROWTH_FACTOR` times the max over the two largest. Needs at
/// least two points.
pub fn no_growth(profile: &[(f64, f64)]) -> bool {
    growth_ratio(profile).is_some_and(|r| r <= NO_GROWTH_FACTOR)
}

/// `max(small end) / max(large end)` of a profile; `None` with fewer than
/// two points. A vanishing profile has ratio 0.
pub fn growth_ratio(profile: &[(f64, f64)]) -> Option<f64> {
    if profile.len() < 2 {
        return None;
    }
    let mut p = profile.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = p.len().min(4) / 2;
    let small = p[..m].iter().map(|v| v.1).fold(0.0, f64::max);
    let large = p[p.len() - m..].iter().map(|v| v.1).fold(0.0, f64::max);
    if small == 0.0 {
        Some(0.0)
    } else {
        Some(small / large)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), p| {
        (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2))
    });
    num / den
}

/// 5x5 anchor lattice about the grid vertex nearest the center of the
/// bounding box, with the largest dyadic spacing that keeps every anchor at
/// distance at least `reach` inside the domain. Anchors are grid vertices.
pub fn anchor_lattice(domain: &dyn Domain, grid: &Grid, reach: f64) -> Vec<[f64; 2]> {
    let bb = domain.bounding_box();
    let snap = |v: f64, o: f64| o + ((v - o) / grid.h).round() * grid.h;
    let c = bb.center();
    let c = [snap(c[0], grid.origin[0]), snap(c[1], grid.origin[1])];
    let mut step = 2f64.powi(bb.side.log2().floor() as i32 - 2);
    while step >= grid.h {
        let pts: Vec<[f64; 2]> = (-2..=2)
            .flat_map(|a| (-2..=2).map(move |b| [c[0] + f64::from(a) * step, c[1] + f64::from(b) * step]))
            .collect();
        if pts
            .iter()
            .all(|x| domain.contains(x) && domain.dist_to_boundary(x) >= reach)
        {
            return pts;
        }
        step /= 2.0;
    }
    vec![c]
}

/// Dyadic sides `2^-j` for `j` in `levels` whose cubes hold at least
/// `min_cells` cells per axis.
pub(crate) fn usable_sides(levels: std::ops::RangeInclusive<i32>, h: f64, min_cells: usize) -> Vec<f64> {
    levels
        .map(|j| 2f64.powi(-j))
        .filter(|&l| l / h >= min_cells as f64 - 1e-9)
        .collect()
}

/// Whether `q` lies in the domain (center inside, no boundary crossing).
pub(crate) fn cube_inside(domain: &dyn Domain, q: &Cube) -> bool {
    domain.contains(&q.center()) && domain.cube_dist2_to_boundary(q) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolygonDomain;

    #[test]
    fn growth_rule() {
        let flat = [(0.25, 1.0), (0.125, 1.1), (0.0625, 0.9), (0.03125, 1.2)];
        assert!(no_growth(&flat));
        let rising = [(0.25, 1.0), (0.125, 2.0), (0.0625, 4.0), (0.03125, 8.0)];
        assert!(!no_growth(&rising));
        assert!(!no_growth(&[(0.5, 1.0)]));
        assert_eq!(growth_ratio(&[(0.5, 0.0), (0.25, 0.0)]), Some(0.0));
    }

    #[test]
    fn slope_of_line() {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, 2.0 - 0.5 * k as f64)).collect();
        assert!((ls_slope(&pts) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn anchors_keep_their_distance() {
        let d = PolygonDomain::disc(512);
        let g = Grid::aligned(&d.bounding_box(), 1.0 / 256.0).unwrap();
        let a = anchor_lattice(&d, &g, 0.25);
        assert_eq!(a.len(), 25);
        for x in &a {
            assert!(d.dist_to_boundary(x) >= 0.25);
            assert_eq!((x[0] / g.h).fract(), 0.0);
        }
        assert_eq!(a[24], [0.5, 0.5]);
        let s = PolygonDomain::unit_square();
        let a = anchor_lattice(&s, &Grid::over(&s.bounding_box(), 256).unwrap(), 0.25);
        assert_eq!(a[0], [-0.25, -0.25]);
    }
}
