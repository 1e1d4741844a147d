mod common;

use proptest::prelude::*;

use zygmund::geometry::{build_whitney, Domain, PolygonDomain, Side};
use zygmund::growth::GrowthFunction;
use zygmund::polyapprox::{campanato_seminorm, Grid, GridFunction, Norm, SeminormOptions};

fn whitney_matches(d: &PolygonDomain, min_level: i32) {
    let w = build_whitney(d, Side::Interior, min_level).unwrap();
    let mut got = w.cubes().to_vec();
    got.sort();
    let want = common::whitney_oracle(d.vertices(), min_level);
    assert_eq!(got.len(), want.len());
    assert!(got == want);
}

#[test]
fn whitney_presets_match_oracle() {
    whitney_matches(&PolygonDomain::unit_square(), 6);
    whitney_matches(&PolygonDomain::sawtooth(), 6);
    whitney_matches(&PolygonDomain::disc(256), 6);
}

fn star(radii: &[f64], phase: f64) -> PolygonDomain {
    let n = radii.len();
    let verts = radii
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let t = phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            [0.1 + r * t.cos(), -0.05 + r * t.sin()]
        })
        .collect();
    PolygonDomain::new(verts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn star_polygons_match_oracle(radii in prop::collection::vec(0.2f64..0.6, 3..12), phase in 0.0f64..1.0) {
        whitney_matches(&star(&radii, phase), 5);
    }
}

fn library_seminorm<F: Fn(&[f64]) -> f64 + Sync>(f: F, cells: usize, omega: &GrowthFunction, max_level: i32) -> f64 {
    let d = PolygonDomain::unit_square();
    let g = Grid::over(&d.bounding_box(), cells).unwrap();
    let f = GridFunction::on_domain(g, &d, f);
    campanato_seminorm(&f, &d, omega, &SeminormOptions::new(Norm::L1, false, max_level))
        .unwrap()
        .value
}

#[test]
fn abs_x1_seminorm_matches_oracle() {
    let omega = GrowthFunction::power(1.0).unwrap();
    for (cells, level) in [(64, 4), (128, 5), (128, 3)] {
        let want = common::square_seminorm_oracle(|x| x[0].abs(), cells, 1, level, |t| t);
        let got = library_seminorm(|x| x[0].abs(), cells, &omega, level);
        assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    }
}

#[test]
fn quadratic_fits_match_oracle() {
    let omega = GrowthFunction::power(2.5).unwrap();
    let f = |x: &[f64]| (4.0 * x[0]).sin() * (1.0 + x[1] * x[1]) + (x[0] - x[1]).abs().powf(2.5);
    let want = common::square_seminorm_oracle(|x| f(&x), 64, 2, 4, |t| t.powf(2.5));
    let got = library_seminorm(f, 64, &omega, 4);
    assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
}
