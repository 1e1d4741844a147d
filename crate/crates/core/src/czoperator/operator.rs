use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::geometry::bvh::{segment_hits_box, P2};
use crate::geometry::{Domain, PolygonDomain};
use crate::polyapprox::{Grid, GridFunction};

/// Offsets (in cells, per axis) within which the kernel table holds exact
/// cell integrals.
const EXACT_TABLE: i64 = 64;
/// Physical radius of the partial-cell correction stencil.
const CORRECTION_RADIUS: f64 = 1.0 / 32.0;
/// Corrections are kept between applications up to this many entries.
const CACHE_LIMIT: usize = 8 << 20;

/// Principal-value discretization of `T_D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Midpoint rule over source cells whose centers lie in `D`, skipping
    /// the target's own cell.
    Midpoint,
    /// Cells weighted by their area fraction in `D`, exact kernel integrals
    /// over nearby cells, and exact integrals over the clipped boundary
    /// cells near each target.
    Corrected,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "midpoint" => Some(Scheme::Midpoint),
            "corrected" => Some(Scheme::Corrected),
            _ => None,
        }
    }
}

/// `-1/pi int_P (w - y)^{-2} dA(w)` over a counter-clockwise polygon, as a
/// principal value when `y` lies inside.
///
/// Green's formula with `F = conj(w - y) / (w - y)^2 + conj(y) / (w - y)^2`;
/// along an edge `conj(u) = alpha + beta u` with `beta = conj(d) / d`.
pub fn beurling_polygon_integral(verts: &[P2], y: P2) -> Complex64 {
    let yc = Complex64::new(y[0], y[1]);
    let ybar = yc.conj();
    let n = verts.len();
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let a = Complex64::new(verts[k][0], verts[k][1]) - yc;
        let b = Complex64::new(verts[(k + 1) % n][0], verts[(k + 1) % n][1]) - yc;
        let d = b - a;
        if d.norm_sqr() == 0.0 {
            continue;
        }
        let beta = d.conj() / d;
        let alpha = a.conj() - beta * a;
        total += (ybar + alpha) * (a.inv() - b.inv()) + beta * (b / a).ln();
    }
    total / Complex64::new(0.0, 2.0) * (-1.0 / PI)
}

fn square(cx: f64, cy: f64, h: f64) -> [P2; 4] {
    let r = 0.5 * h;
    [[cx - r, cy - r], [cx + r, cy - r], [cx + r, cy + r], [cx - r, cy + r]]
}

/// In-place 2D FFT over an `n x n` row-major array.
struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
        }
    }

    fn transpose(&self, a: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            for i in j + 1..n {
                a.swap(j * n + i, i * n + j);
            }
        }
    }

    fn run(&self, a: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        a.par_chunks_mut(self.n).for_each(|row| plan.process(row));
        self.transpose(a);
        a.par_chunks_mut(self.n).for_each(|row| plan.process(row));
        self.transpose(a);
        if inverse {
            let s = 1.0 / (self.n * self.n) as f64;
            a.iter_mut().for_each(|v| *v *= s);
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Correction {
    target: u32,
    source: u32,
    delta: Complex64,
}

/// Boundary cell with its clipped polygon.
#[derive(Clone, Debug)]
struct PartialCell {
    index: usize,
    poly: Vec<P2>,
}

/// Truncated operator `T_D f = T(chi_D f) chi_D` on a fixed grid and domain,
/// for any of the shipped kernels.
pub struct TruncatedOperator {
    grid: Grid,
    scheme: Scheme,
    weights: Vec<f64>,
    targets: Vec<bool>,
    fft: Fft2,
    spectrum: Vec<Complex64>,
    partial: Vec<PartialCell>,
    stencil: i64,
    corrections: Option<Vec<Correction>>,
}

impl TruncatedOperator {
    pub fn new(grid: &Grid, domain: &dyn Domain, scheme: Scheme) -> Result<Self> {
        if grid.nx < 16 || grid.ny < 16 {
            return Err(Error::Resolution(format!(
                "operator grid needs at least 16 cells per axis, got {} x {}",
                grid.nx, grid.ny
            )));
        }
        let targets = GridFunction::domain_mask(grid, domain);
        let (weights, partial) = match scheme {
            Scheme::Midpoint => (targets.iter().map(|&t| f64::from(u8::from(t))).collect(), Vec::new()),
            Scheme::Corrected => {
                let poly = domain
                    .as_polygon()
                    .ok_or_else(|| Error::Precondition("the corrected scheme needs a polygon domain".into()))?;
                area_weights(grid, poly, &targets)
            }
        };
        let n = grid.nx.max(grid.ny);
        let size = (2 * n).next_power_of_two();
        let fft = Fft2::new(size);
        let mut spectrum = kernel_table(grid, size, scheme == Scheme::Corrected);
        fft.run(&mut spectrum, false);
        let stencil = match scheme {
            Scheme::Midpoint => 0,
            Scheme::Corrected => ((CORRECTION_RADIUS / grid.h).ceil() as i64).max(4),
        };
        let mut op = TruncatedOperator {
            grid: grid.clone(),
            scheme,
            weights,
            targets,
            fft,
            spectrum,
            partial,
            stencil,
            corrections: None,
        };
        let estimate = op.partial.len() * ((2 * op.stencil + 1) as usize).pow(2);
        if estimate <= CACHE_LIMIT {
            op.corrections = Some(op.build_corrections());
        }
        Ok(op)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Source weight of each cell: its area fraction in `D` (corrected) or
    /// center membership (midpoint).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cells whose center lies in `D`.
    pub fn targets(&self) -> &[bool] {
        &self.targets
    }

    pub fn boundary_cells(&self) -> usize {
        self.partial.len()
    }

    /// `f` at the center of every cell with positive weight, zero elsewhere,
    /// masked to the targets. Boundary cells whose centers lie just outside
    /// `D` still carry weight, so `f` is evaluated there too.
    pub fn sample<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> GridFunction {
        let g = &self.grid;
        let values = (0..g.len())
            .into_par_iter()
            .map(|k| {
                if self.weights[k] > 0.0 {
                    f(&g.center(k % g.nx, k / g.nx))
                } else {
                    0.0
                }
            })
            .collect();
        GridFunction {
            grid: g.clone(),
            values,
            mask: Some(self.targets.clone()),
        }
    }

    /// Kernel table entry for a cell offset, as used by the convolution.
    fn table(&self, di: i64, dj: i64) -> Complex64 {
        table_entry(&self.grid, di, dj, self.scheme == Scheme::Corrected)
    }

    fn corrections_for(&self, cell: &PartialCell) -> Vec<Correction> {
        let g = &self.grid;
        let w = self.weights[cell.index];
        let (ci, cj) = ((cell.index % g.nx) as i64, (cell.index / g.nx) as i64);
        let mut out = Vec::new();
        for dj in -self.stencil..=self.stencil {
            for di in -self.stencil..=self.stencil {
                let (ti, tj) = (ci + di, cj + dj);
                if ti < 0 || tj < 0 || ti >= g.nx as i64 || tj >= g.ny as i64 {
                    continue;
                }
                let t = g.index(ti as usize, tj as usize);
                if !self.targets[t] {
                    continue;
                }
                let exact = beurling_polygon_integral(&cell.poly, g.center(ti as usize, tj as usize));
                let delta = exact - w * self.table(di, dj);
                if delta.re.is_finite() && delta.im.is_finite() {
                    out.push(Correction {
                        target: t as u32,
                        source: cell.index as u32,
                        delta,
                    });
                }
            }
        }
        out
    }

    fn build_corrections(&self) -> Vec<Correction> {
        self.partial
            .par_iter()
            .flat_map_iter(|c| self.corrections_for(c))
            .collect()
    }

    /// `T_D f` for one kernel.
    pub fn apply(&self, kernel: &Kernel, f: &GridFunction) -> Result<GridFunction> {
        let z = self.apply_complex(f)?;
        let values = z.iter().map(|&v| kernel.from_complex(v)).collect();
        GridFunction::new(self.grid.clone(), values, Some(self.targets.clone()))
    }

    /// `T_D f` for every kernel in `kernels` from one convolution.
    pub fn apply_many(&self, kernels: &[Kernel], f: &GridFunction) -> Result<Vec<GridFunction>> {
        let z = self.apply_complex(f)?;
        kernels
            .iter()
            .map(|k| {
                let values = z.iter().map(|&v| k.from_complex(v)).collect();
                GridFunction::new(self.grid.clone(), values, Some(self.targets.clone()))
            })
            .collect()
    }

    /// `int_D -1/(pi (y - x)^2) f(x) dx` at every target, zero elsewhere.
    ///
    /// `f` is read on every cell with positive weight regardless of its mask;
    /// see [`TruncatedOperator::sample`].
    pub fn apply_complex(&self, f: &GridFunction) -> Result<Vec<Complex64>> {
        if f.grid != self.grid {
            return Err(Error::Precondition("function and operator grids differ".into()));
        }
        let g = &self.grid;
        let size = self.fft.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); size * size];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.index(i, j);
                let w = self.weights[k];
                if w > 0.0 {
                    buf[j * size + i] = Complex64::new(w * f.values[k], 0.0);
                }
            }
        }
        if buf.iter().all(|v| v.re == 0.0) {
            return Ok(vec![Complex64::new(0.0, 0.0); g.len()]);
        }
        self.fft.run(&mut buf, false);
        buf.par_iter_mut().zip(&self.spectrum).for_each(|(a, b)| *a *= b);
        self.fft.run(&mut buf, true);
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.index(i, j);
                if self.targets[k] {
                    out[k] = buf[j * size + i];
                }
            }
        }
        let mut add = |c: &Correction| {
            out[c.target as usize] += c.delta * f.values[c.source as usize];
        };
        match &self.corrections {
            Some(cs) => cs.iter().for_each(&mut add),
            None => {
                for cell in &self.partial {
                    self.corrections_for(cell).iter().for_each(&mut add);
                }
            }
        }
        Ok(out)
    }
}

fn table_entry(g: &Grid, di: i64, dj: i64, exact_near: bool) -> Complex64 {
    if di == 0 && dj == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let (x, y) = (di as f64 * g.h, dj as f64 * g.h);
    if exact_near && di.abs() <= EXACT_TABLE && dj.abs() <= EXACT_TABLE {
        beurling_polygon_integral(&square(x, y, g.h), [0.0, 0.0])
    } else {
        let z = Complex64::new(x, y);
        -g.h * g.h / (PI * z * z)
    }
}

/// Kernel table laid out for a circular convolution of size `size`.
fn kernel_table(g: &Grid, size: usize, exact_near: bool) -> Vec<Complex64> {
    let n = g.nx.max(g.ny) as i64;
    let mut t = vec![Complex64::new(0.0, 0.0); size * size];
    let s = size as i64;
    t.par_chunks_mut(size).enumerate().for_each(|(r, row)| {
        let dj = if (r as i64) < n {
            r as i64
        } else if r as i64 > s - n {
            r as i64 - s
        } else {
            return;
        };
        for (c, v) in row.iter_mut().enumerate() {
            let di = if (c as i64) < n {
                c as i64
            } else if c as i64 > s - n {
                c as i64 - s
            } else {
                continue;
            };
            *v = table_entry(g, di, dj, exact_near);
        }
    });
    t
}

/// Area fractions of the cells in the polygon, with the clipped polygons of
/// the cells the boundary crosses.
fn area_weights(g: &Grid, poly: &PolygonDomain, centers: &[bool]) -> (Vec<f64>, Vec<PartialCell>) {
    let mut weights: Vec<f64> = centers.iter().map(|&c| f64::from(u8::from(c))).collect();
    let mut crossed = vec![false; g.len()];
    let verts = poly.vertices();
    let nv = verts.len();
    for k in 0..nv {
        let (a, b) = (verts[k], verts[(k + 1) % nv]);
        let lo = [a[0].min(b[0]), a[1].min(b[1])];
        let hi = [a[0].max(b[0]), a[1].max(b[1])];
        let cell = |v: f64, o: f64, n: usize| (((v - o) / g.h).floor().max(0.0) as usize).min(n - 1);
        let (i0, i1) = (cell(lo[0], g.origin[0], g.nx), cell(hi[0], g.origin[0], g.nx));
        let (j0, j1) = (cell(lo[1], g.origin[1], g.ny), cell(hi[1], g.origin[1], g.ny));
        for j in j0.saturating_sub(1)..=(j1 + 1).min(g.ny - 1) {
            for i in i0.saturating_sub(1)..=(i1 + 1).min(g.nx - 1) {
                let c = g.center(i, j);
                let r = 0.5 * g.h;
                if segment_hits_box(a, b, [c[0] - r, c[1] - r], [c[0] + r, c[1] + r]) {
                    crossed[g.index(i, j)] = true;
                }
            }
        }
    }
    let ids: Vec<usize> = (0..g.len()).filter(|&k| crossed[k]).collect();
    let clipped: Vec<(usize, f64, Vec<P2>)> = ids
        .par_iter()
        .map(|&k| {
            let c = g.center(k % g.nx, k / g.nx);
            let r = 0.5 * g.h;
            let p = poly.clip([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]);
            let area = crate::geometry::signed_area(&p).abs();
            (k, (area / (g.h * g.h)).clamp(0.0, 1.0), p)
        })
        .collect();
    let mut partial = Vec::new();
    for (k, w, p) in clipped {
        weights[k] = w;
        if w > 0.0 {
            partial.push(PartialCell { index: k, poly: p });
        }
    }
    (weights, partial)
}

/// Brute-force midpoint sum `sum_{x != y} K(y - x) f(x) h^2` over cells with
/// centers in `D`, evaluated at the targets in row blocks. Quadratic cost;
/// an independent route for checking the convolution.
pub fn apply_direct(kernel: &Kernel, f: &GridFunction, domain: &dyn Domain) -> Result<GridFunction> {
    let g = &f.grid;
    let mask = GridFunction::domain_mask(g, domain);
    let src: Vec<(P2, f64)> = (0..g.len())
        .filter(|&k| mask[k] && f.values[k] != 0.0)
        .map(|k| (g.center(k % g.nx, k / g.nx), f.values[k]))
        .collect();
    let a = g.h * g.h;
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            if !mask[k] {
                return 0.0;
            }
            let y = g.center(k % g.nx, k / g.nx);
            let mut s = 0.0;
            for (x, v) in &src {
                let d = [y[0] - x[0], y[1] - x[1]];
                if d[0] != 0.0 || d[1] != 0.0 {
                    s += kernel.eval(&d) * v;
                }
            }
            s * a
        })
        .collect();
    GridFunction::new(g.clone(), values, Some(mask))
}

/// Power-iteration estimate of `||T_D||` on `L^2(D)`: `iters` steps of
/// `f <- T_D f / ||T_D f||` from a seeded random start on the targets,
/// returning the last ratio `||T_D f|| / ||f||`.
pub fn l2_norm_estimate(op: &TruncatedOperator, kernel: &Kernel, iters: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let g = op.grid().clone();
    let t = op.targets();
    let values = t
        .iter()
        .map(|&a| if a { rng.gen::<f64>() - 0.5 } else { 0.0 })
        .collect();
    let mut f = GridFunction::new(g, values, Some(t.to_vec()))?;
    let mut ratio = 0.0;
    for _ in 0..iters.max(1) {
        let norm = f.l2_norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let tf = op.apply(kernel, &f)?;
        let tn = tf.l2_norm();
        ratio = tn / norm;
        f = tf.map(|v| v / tn.max(f64::MIN_POSITIVE));
    }
    Ok(ratio)
}

/// `T_D f` with the corrected scheme on `f`'s grid.
pub fn apply_truncated(kernel: &Kernel, f: &GridFunction, domain: &dyn Domain) -> Result<GridFunction> {
    TruncatedOperator::new(&f.grid, domain, Scheme::Corrected)?.apply(kernel, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cube;

    #[test]
    fn polygon_integral_of_square_vanishes_at_center() {
        let v = beurling_polygon_integral(&square(0.3, -0.2, 0.1), [0.3, -0.2]);
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn polygon_integral_matches_quadrature() {
        // concave L-shape, far target: midpoint sum converges at O(h^2)
        let poly = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 0.5], [0.5, 1.0], [0.0, 1.0]];
        let y = [2.0, 1.5];
        let exact = beurling_polygon_integral(&poly, y);
        let m = 400;
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..m {
            for i in 0..m {
                let x = [(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64];
                if x[0] < 0.5 || x[1] < 0.5 {
                    let z = Complex64::new(y[0] - x[0], y[1] - x[1]);
                    s += -1.0 / (PI * z * z);
                }
            }
        }
        s /= (m * m) as f64;
        assert!((s - exact).norm() < 1e-5 * exact.norm(), "{s} vs {exact}");
    }

    #[test]
    fn additive_over_pieces() {
        let y = [0.31, 0.12];
        let whole = beurling_polygon_integral(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], y);
        let left = beurling_polygon_integral(&[[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [0.0, 1.0]], y);
        let right = beurling_polygon_integral(&[[0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 1.0]], y);
        assert!((whole - left - right).norm() < 1e-12);
    }

    #[test]
    fn fft_matches_direct_midpoint() {
        let d = PolygonDomain::disc(64);
        let g = Grid::over(&Cube::new(vec![-1.0, -1.0], 2.0), 24).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| 1.0 + x[0] - x[1] * x[1]);
        let op = TruncatedOperator::new(&g, &d, Scheme::Midpoint).unwrap();
        for k in Kernel::ALL {
            let a = op.apply(&k, &f).unwrap();
            let b = apply_direct(&k, &f, &d).unwrap();
            let err = a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-12 * b.sup_norm().max(1.0), "{k}: {err}");
        }
    }

    #[test]
    fn too_coarse() {
        let g = Grid::over(&Cube::new(vec![-1.0, -1.0], 2.0), 8).unwrap();
        assert!(matches!(
            TruncatedOperator::new(&g, &PolygonDomain::disc(32), Scheme::Midpoint),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn beurling_norm_estimate_near_one() {
        // the real part of the Beurling multiplier has modulus at most 1
        let d = PolygonDomain::disc(256);
        let g = Grid::over(&Cube::new(vec![-1.0, -1.0], 2.0), 64).unwrap();
        let op = TruncatedOperator::new(&g, &d, Scheme::Corrected).unwrap();
        let e = l2_norm_estimate(&op, &Kernel::BeurlingReal, 20, 1).unwrap();
        assert!((0.9..1.02).contains(&e), "{e}");
    }

    #[test]
    fn sample_reaches_outside_boundary_cells() {
        let d = PolygonDomain::disc(256);
        let g = Grid::over(&Cube::new(vec![-1.0, -1.0], 2.0), 64).unwrap();
        let op = TruncatedOperator::new(&g, &d, Scheme::Corrected).unwrap();
        let f = op.sample(|_| 1.0);
        let outside = (0..g.len()).filter(|&k| !op.targets()[k] && f.values[k] == 1.0).count();
        assert!(outside > 0);
        assert!((0..g.len()).all(|k| (f.values[k] == 1.0) == (op.weights()[k] > 0.0)));
    }
}
