use super::cube_inside;
use crate::error::{Error, Result};
use crate::geometry::{Cube, Domain};
use crate::polyapprox::{project, GridFunction};

/// `f = f1 + f2 + f3` on `D` with `P = p_Q f`: `f1 = P` on `D`,
/// `f2 = f - P` on `2Q`, `f3 = f - P` on `D \ 2Q`. Cells belong to `2Q` by
/// their centers; all three carry the domain mask of `f`.
pub fn split(
    f: &GridFunction,
    q: &Cube,
    domain: &dyn Domain,
    n: u32,
) -> Result<(GridFunction, GridFunction, GridFunction)> {
    if !cube_inside(domain, q) {
        return Err(Error::Precondition("Q is not inside the domain".into()));
    }
    let p = project(f, q, n)?;
    let q2 = q.scaled(2.0);
    let g = &f.grid;
    let mask = GridFunction::domain_mask(g, domain);
    let mut parts = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.index(i, j);
            if !mask[k] {
                continue;
            }
            let x = g.center(i, j);
            let pv = p.eval(&x);
            parts[0][k] = pv;
            let r = f.values[k] - pv;
            if q2.contains_point(&x) {
                parts[1][k] = r;
            } else {
                parts[2][k] = r;
            }
        }
    }
    let [a, b, c] = parts;
    let mk = |v| GridFunction::new(g.clone(), v, Some(mask.clone()));
    Ok((mk(a)?, mk(b)?, mk(c)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolygonDomain;
    use crate::polyapprox::Grid;

    fn setup<F: Fn(&[f64]) -> f64 + Sync>(f: F) -> (PolygonDomain, GridFunction) {
        let d = PolygonDomain::unit_square();
        let g = Grid::over(&d.bounding_box(), 64).unwrap();
        (d.clone(), GridFunction::on_domain(g, &d, f))
    }

    #[test]
    fn polynomial_has_no_remainder() {
        let (d, f) = setup(|x| 1.0 - x[0] + 3.0 * x[0] * x[1]);
        let q = Cube::new(vec![0.0, -0.125], 0.125);
        let (f1, f2, f3) = split(&f, &q, &d, 2).unwrap();
        assert!(f2.values.iter().chain(&f3.values).all(|v| v.abs() < 1e-12));
        for (a, b) in f1.values.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pieces_sum_to_f() {
        let (d, f) = setup(|x| (5.0 * x[0]).sin() * x[1].abs().sqrt());
        let q = Cube::new(vec![-0.25, 0.0], 0.25);
        let (f1, f2, f3) = split(&f, &q, &d, 2).unwrap();
        for k in 0..f.values.len() {
            let s = f1.values[k] + f2.values[k] + f3.values[k];
            assert!((s - f.values[k]).abs() <= 4.0 * f64::EPSILON * f1.values[k].abs().max(1.0));
            assert!(f2.values[k] == 0.0 || f3.values[k] == 0.0);
        }
        let support = f2.values.iter().filter(|&&v| v != 0.0).count();
        assert!(support <= 32 * 32);
    }

    #[test]
    fn cube_must_lie_inside() {
        let (d, f) = setup(|_| 1.0);
        let q = Cube::new(vec![0.375, 0.0], 0.25);
        assert!(matches!(split(&f, &q, &d, 1), Err(Error::Precondition(_))));
    }
}
