use serde::Serialize;

use super::grid::GridFunction;
use crate::error::{Error, Result};
use crate::geometry::Cube;

#[derive(Clone, Debug, Serialize)]
pub struct CzFamily {
    pub threshold: f64,
    pub cubes: Vec<Cube>,
    /// `mean_{Q_i} |f|` for each selected cube.
    pub means: Vec<f64>,
    pub total_volume: f64,
    /// `int_Q |f|`.
    pub integral: f64,
}

/// Stopping-time dyadic subdivision of the grid-aligned cube `q`: children
/// whose mean of `|f|` exceeds `a` are selected, the rest are split down to
/// single cells.
///
/// Block sums are formed bottom-up from the cells, so every parent sum is
/// the floating-point sum of its children and the selection bounds hold
/// exactly.
pub fn cz_decompose(f: &GridFunction, q: &Cube, a: f64) -> Result<CzFamily> {
    let g = &f.grid;
    let r = g.cells_in(q);
    let cells = r.i1 - r.i0;
    let exact = (cells as f64 * g.h - q.side).abs() <= 1e-12 * q.side;
    if !g.covers(q) || r.j1 - r.j0 != cells || !cells.is_power_of_two() || !exact {
        return Err(Error::Precondition(
            "cube must be grid-aligned with a power-of-two number of cells per side".into(),
        ));
    }
    let depth = cells.trailing_zeros() as usize;
    let cell_area = g.cell_area();
    // pyramid[k] holds block sums of 2^k x 2^k cells.
    let mut pyramid: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
    let mut base = vec![0.0; cells * cells];
    for (i, j) in r.iter() {
        if f.active(i, j) {
            base[(j - r.j0) * cells + (i - r.i0)] = f.get(i, j).abs() * cell_area;
        }
    }
    pyramid.push(base);
    for k in 1..=depth {
        let w = cells >> k;
        let prev = &pyramid[k - 1];
        let mut cur = vec![0.0; w * w];
        for j in 0..w {
            for i in 0..w {
                let p = |di: usize, dj: usize| prev[(2 * j + dj) * (2 * w) + 2 * i + di];
                cur[j * w + i] = (p(0, 0) + p(1, 0)) + (p(0, 1) + p(1, 1));
            }
        }
        pyramid.push(cur);
    }
    let integral = pyramid[depth][0];
    let mean = integral / (q.side * q.side);
    if !(a > mean) {
        return Err(Error::Precondition(format!(
            "threshold {a} must exceed the mean {mean} of |f| over the cube"
        )));
    }
    let mut fam = CzFamily {
        threshold: a,
        cubes: Vec::new(),
        means: Vec::new(),
        total_volume: 0.0,
        integral,
    };
    let mut stack = vec![(depth, 0usize, 0usize)];
    while let Some((k, i, j)) = stack.pop() {
        if k == 0 {
            continue;
        }
        let w = cells >> (k - 1);
        let side = g.h * (1u64 << (k - 1)) as f64;
        let vol = side * side;
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (ci, cj) = (2 * i + di, 2 * j + dj);
            let m = pyramid[k - 1][cj * w + ci] / vol;
            if m > a {
                fam.cubes.push(Cube::new(
                    vec![q.corner[0] + ci as f64 * side, q.corner[1] + cj as f64 * side],
                    side,
                ));
                fam.means.push(m);
                fam.total_volume += vol;
            } else {
                stack.push((k - 1, ci, cj));
            }
        }
    }
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyapprox::grid::Grid;

    fn unit() -> (Grid, Cube) {
        let q = Cube::new(vec![0.0, 0.0], 1.0);
        (Grid::over(&q, 32).unwrap(), q)
    }

    #[test]
    fn small_function_selects_nothing() {
        let (g, q) = unit();
        let f = GridFunction::from_fn(g, |x| x[0] * 0.5);
        let fam = cz_decompose(&f, &q, 0.5).unwrap();
        assert!(fam.cubes.is_empty());
    }

    #[test]
    fn threshold_below_mean_is_rejected() {
        let (g, q) = unit();
        let f = GridFunction::from_fn(g, |_| 1.0);
        assert!(matches!(cz_decompose(&f, &q, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn indicator_of_subcube() {
        // |f| = 1 on [0, 1/4)^2, so v = 1/16 and A = 1/8: the quadrant
        // [0, 1/2)^2 has mean 1/4 and stops the subdivision.
        let (g, q) = unit();
        let f = GridFunction::from_fn(g, |x| f64::from(u8::from(x[0] < 0.25 && x[1] < 0.25)));
        let v = 1.0 / 16.0;
        let fam = cz_decompose(&f, &q, 2.0 * v).unwrap();
        assert_eq!(fam.cubes, vec![Cube::new(vec![0.0, 0.0], 0.5)]);
        assert_eq!(fam.means, vec![0.25]);
        assert!(fam.total_volume <= fam.integral / (2.0 * v));
    }
}
