use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::{CellRange, GridFunction};
use super::project::{oscillation, Norm};
use crate::error::{Error, Result};
use crate::geometry::{Cube, Domain};
use crate::growth::GrowthFunction;

#[derive(Clone, Debug, Serialize)]
pub struct SeminormOptions {
    pub p: Norm,
    /// Restrict to cubes with `2Q` inside the domain.
    pub interior: bool,
    /// Smallest cube side is `2^-max_level`.
    pub max_level: i32,
    /// Add the dyadic lattices shifted by half a side along each axis.
    pub shifted: bool,
    /// Cubes with fewer cells per axis are skipped.
    pub min_cells: usize,
}

impl SeminormOptions {
    pub fn new(p: Norm, interior: bool, max_level: i32) -> Self {
        SeminormOptions {
            p,
            interior,
            max_level,
            shifted: true,
            min_cells: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelMax {
    pub level: i32,
    pub side: f64,
    pub cubes: usize,
    pub max: f64,
    pub argmax: Option<Cube>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeminormReport {
    pub value: f64,
    pub argmax: Cube,
    pub levels: Vec<LevelMax>,
}

/// Summed-area table of inactive cells.
pub(crate) struct ActiveTable {
    nx: usize,
    sat: Vec<u32>,
}

impl ActiveTable {
    pub(crate) fn new(f: &GridFunction) -> Self {
        let (nx, ny) = (f.grid.nx, f.grid.ny);
        let mut sat = vec![0u32; (nx + 1) * (ny + 1)];
        for j in 0..ny {
            for i in 0..nx {
                let v = u32::from(!f.active(i, j));
                sat[(j + 1) * (nx + 1) + i + 1] =
                    v + sat[j * (nx + 1) + i + 1] + sat[(j + 1) * (nx + 1) + i] - sat[j * (nx + 1) + i];
            }
        }
        ActiveTable { nx, sat }
    }

    pub(crate) fn inactive(&self, r: &CellRange) -> u32 {
        if r.is_empty() {
            return 0;
        }
        let w = self.nx + 1;
        self.sat[r.j1 * w + r.i1] + self.sat[r.j0 * w + r.i0] - self.sat[r.j0 * w + r.i1] - self.sat[r.j1 * w + r.i0]
    }
}

struct Family<'a> {
    f: &'a GridFunction,
    table: ActiveTable,
    opts: &'a SeminormOptions,
    n: u32,
}

impl Family<'_> {
    /// `Q` (or `2Q`) lies in the grid and every cell under it is active.
    fn admissible(&self, q: &Cube) -> bool {
        let s = if self.opts.interior { q.scaled(2.0) } else { q.clone() };
        let g = &self.f.grid;
        if !g.covers(&s) {
            return false;
        }
        self.table.inactive(&g.cells_in(&s)) == 0
    }

    fn value(&self, q: &Cube, weight: f64) -> Result<f64> {
        let (v, _) = oscillation(self.f, q, self.n, self.opts.p)?;
        Ok(v / weight)
    }

    fn levels(&self) -> impl Iterator<Item = i32> + '_ {
        let g = &self.f.grid;
        let ext = g.extent().side.min(1.0);
        let top = (-ext.log2()).ceil() as i32;
        let floor = g.h * self.opts.min_cells.max(self.n as usize + 2) as f64;
        (top..=self.opts.max_level).filter(move |&k| crate::geometry::dyadic_side(k) >= floor * (1.0 - 1e-12))
    }

    fn lattice(&self, level: i32) -> Vec<Cube> {
        let g = &self.f.grid;
        let l = crate::geometry::dyadic_side(level);
        let up = g.upper();
        let shifts: &[[f64; 2]] = if self.opts.shifted {
            &[[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]]
        } else {
            &[[0.0, 0.0]]
        };
        let mut out = Vec::new();
        for sh in shifts {
            let i0 = (g.origin[0] / l - sh[0]).floor() as i64;
            let i1 = (up[0] / l - sh[0]).ceil() as i64;
            let j0 = (g.origin[1] / l - sh[1]).floor() as i64;
            let j1 = (up[1] / l - sh[1]).ceil() as i64;
            for j in j0..j1 {
                for i in i0..i1 {
                    let q = Cube::new(vec![(i as f64 + sh[0]) * l, (j as f64 + sh[1]) * l], l);
                    if self.admissible(&q) {
                        out.push(q);
                    }
                }
            }
        }
        out
    }
}

fn with_mask(f: &GridFunction, domain: &dyn Domain) -> GridFunction {
    if f.mask.is_some() {
        return f.clone();
    }
    let mask = GridFunction::domain_mask(&f.grid, domain);
    f.clone().with_mask(mask)
}

/// Largest of `max` with deterministic tie-break on the cube corner.
fn better(a: (f64, &Cube), b: (f64, &Cube)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1.corner < b.1.corner)
}

/// Max over dyadic (and half-shifted dyadic) cubes `Q` in the domain of
/// `omega(l)^{-1} ||f - p_Q f||_{L^p(Q, dx/|Q|)}`.
pub fn campanato_seminorm(
    f: &GridFunction,
    domain: &dyn Domain,
    omega: &GrowthFunction,
    opts: &SeminormOptions,
) -> Result<SeminormReport> {
    weighted_seminorm(f, domain, omega.n(), opts, |l| omega.eval(l))
}

/// As [`campanato_seminorm`] with polynomial degree `n` and scale weight `w(l)`.
pub fn weighted_seminorm<W: Fn(f64) -> f64>(
    f: &GridFunction,
    domain: &dyn Domain,
    n: u32,
    opts: &SeminormOptions,
    w: W,
) -> Result<SeminormReport> {
    let f = with_mask(f, domain);
    let fam = Family {
        f: &f,
        table: ActiveTable::new(&f),
        opts,
        n,
    };
    let mut levels = Vec::new();
    let mut best: Option<(f64, Cube)> = None;
    for level in fam.levels() {
        let cubes = fam.lattice(level);
        let l = crate::geometry::dyadic_side(level);
        let weight = w(l);
        let vals: Vec<f64> = cubes.par_iter().map(|q| fam.value(q, weight)).collect::<Result<_>>()?;
        let mut lm = LevelMax {
            level,
            side: l,
            cubes: cubes.len(),
            max: 0.0,
            argmax: None,
        };
        for (q, &v) in cubes.iter().zip(&vals) {
            let cur = lm.argmax.as_ref().map(|c| (lm.max, c));
            if cur.is_none_or(|c| better((v, q), c)) {
                lm.max = v;
                lm.argmax = Some(q.clone());
            }
        }
        if let Some(q) = &lm.argmax {
            if best.as_ref().is_none_or(|(v, c)| better((lm.max, q), (*v, c))) {
                best = Some((lm.max, q.clone()));
            }
        }
        levels.push(lm);
    }
    let (value, argmax) = best.ok_or(Error::NoAdmissibleCube)?;
    Ok(SeminormReport { value, argmax, levels })
}

/// Cross-check on randomly placed cubes: for every seminorm level, up to
/// `per_level` cubes with cell-aligned corners drawn uniformly, inadmissible
/// draws discarded.
pub fn random_cube_check(
    f: &GridFunction,
    domain: &dyn Domain,
    omega: &GrowthFunction,
    opts: &SeminormOptions,
    per_level: usize,
    seed: u64,
) -> Result<Vec<LevelMax>> {
    let f = with_mask(f, domain);
    let fam = Family {
        f: &f,
        table: ActiveTable::new(&f),
        opts,
        n: omega.n(),
    };
    let g = &f.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for level in fam.levels() {
        let l = crate::geometry::dyadic_side(level);
        let cells = (l / g.h).round() as usize;
        let span_x = g.nx.saturating_sub(cells) + 1;
        let span_y = g.ny.saturating_sub(cells) + 1;
        let cubes: Vec<Cube> = (0..per_level)
            .map(|_| {
                let i = rng.gen_range(0..span_x);
                let j = rng.gen_range(0..span_y);
                Cube::new(vec![g.origin[0] + i as f64 * g.h, g.origin[1] + j as f64 * g.h], l)
            })
            .filter(|q| fam.admissible(q))
            .collect();
        let weight = omega.eval(l);
        let vals: Vec<f64> = cubes.par_iter().map(|q| fam.value(q, weight)).collect::<Result<_>>()?;
        let mut lm = LevelMax {
            level,
            side: l,
            cubes: cubes.len(),
            max: 0.0,
            argmax: None,
        };
        for (q, &v) in cubes.iter().zip(&vals) {
            if lm.argmax.is_none() || v > lm.max {
                lm.max = v;
                lm.argmax = Some(q.clone());
            }
        }
        out.push(lm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolygonDomain;
    use crate::polyapprox::grid::Grid;

    fn square_grid(cells: usize) -> (PolygonDomain, Grid) {
        let d = PolygonDomain::unit_square();
        let g = Grid::over(&Cube::new(vec![-0.5, -0.5], 1.0), cells).unwrap();
        (d, g)
    }

    #[test]
    fn polynomials_have_zero_seminorm() {
        let (d, g) = square_grid(64);
        let f = GridFunction::from_fn(g, |x| 1.0 - 2.0 * x[0] + 0.5 * x[1]);
        let w = GrowthFunction::power(1.0).unwrap();
        for p in [Norm::L1, Norm::L2, Norm::Linf] {
            let r = campanato_seminorm(&f, &d, &w, &SeminormOptions::new(p, false, 6)).unwrap();
            assert!(r.value < 1e-9, "{p:?}: {}", r.value);
        }
    }

    #[test]
    fn interior_family_excludes_boundary_cubes() {
        let (d, g) = square_grid(64);
        let f = GridFunction::from_fn(g, |x| x[0].abs());
        let w = GrowthFunction::power(1.0).unwrap();
        let full = campanato_seminorm(&f, &d, &w, &SeminormOptions::new(Norm::L1, false, 4)).unwrap();
        let int = campanato_seminorm(&f, &d, &w, &SeminormOptions::new(Norm::L1, true, 4)).unwrap();
        // The unit cube itself is admissible only without the interior flag.
        assert_eq!(full.levels[0].cubes, 1);
        assert_eq!(int.levels[0].cubes, 0);
        assert!(int.value <= full.value);
        let big = int.argmax.scaled(2.0);
        assert!(big.corner.iter().all(|&c| c >= -0.5) && big.upper().iter().all(|&c| c <= 0.5));
    }

    #[test]
    fn no_cube_is_an_error() {
        let (d, g) = square_grid(8);
        let f = GridFunction::zeros(g);
        let w = GrowthFunction::power(1.0).unwrap();
        let opts = SeminormOptions::new(Norm::L1, true, 0);
        assert!(matches!(
            campanato_seminorm(&f, &d, &w, &opts),
            Err(Error::NoAdmissibleCube)
        ));
    }
}
