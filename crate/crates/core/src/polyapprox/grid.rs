use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Cube, Domain};

/// Uniform cell-centered planar grid: cell `(i, j)` is
/// `origin + h * ([i, i + 1] x [j, j + 1])`, sampled at its center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Half-open cell index ranges `[i0, i1) x [j0, j1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellRange {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl CellRange {
    pub fn is_empty(&self) -> bool {
        self.i0 >= self.i1 || self.j0 >= self.j1
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.i1 - self.i0) * (self.j1 - self.j0)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.j0..self.j1).flat_map(move |j| (self.i0..self.i1).map(move |i| (i, j)))
    }
}

impl Grid {
    pub fn new(origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || !(h > 0.0) {
            return Err(Error::Resolution(format!(
                "grid needs h > 0 and at least 2 cells per axis, got {nx} x {ny}, h = {h}"
            )));
        }
        Ok(Grid { origin, h, nx, ny })
    }

    /// `cells x cells` grid over the square box `b`.
    pub fn over(b: &Cube, cells: usize) -> Result<Self> {
        Grid::new([b.corner[0], b.corner[1]], b.side / cells as f64, cells, cells)
    }

    /// Grid of spacing `h` over the smallest `h`-aligned square containing
    /// `b`, with origin on the lattice `h Z^2`.
    pub fn aligned(b: &Cube, h: f64) -> Result<Self> {
        let i0 = (b.corner[0] / h).floor();
        let j0 = (b.corner[1] / h).floor();
        let n = (((b.corner[0] + b.side) / h).ceil() - i0).max(((b.corner[1] + b.side) / h).ceil() - j0) as usize;
        Grid::new([i0 * h, j0 * h], h, n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn extent(&self) -> Cube {
        let w = self.nx.max(self.ny) as f64 * self.h;
        Cube::new(self.origin.to_vec(), w)
    }

    pub fn upper(&self) -> [f64; 2] {
        [
            self.origin[0] + self.nx as f64 * self.h,
            self.origin[1] + self.ny as f64 * self.h,
        ]
    }

    /// Cells whose centers lie in the half-open box `[corner, corner + side)`,
    /// clipped to the grid.
    pub fn cells_in(&self, q: &Cube) -> CellRange {
        let lo = |c: f64, o: f64, n: usize| ((c - o) / self.h - 0.5).ceil().clamp(0.0, n as f64) as usize;
        CellRange {
            i0: lo(q.corner[0], self.origin[0], self.nx),
            i1: lo(q.corner[0] + q.side, self.origin[0], self.nx),
            j0: lo(q.corner[1], self.origin[1], self.ny),
            j1: lo(q.corner[1] + q.side, self.origin[1], self.ny),
        }
    }

    /// `q` lies inside the grid box.
    pub fn covers(&self, q: &Cube) -> bool {
        let up = self.upper();
        let tol = 1e-12 * self.h;
        (0..2).all(|k| q.corner[k] >= self.origin[k] - tol && q.corner[k] + q.side <= up[k] + tol)
    }

    /// Cell containing `x` (half-open), if inside the grid.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, usize)> {
        let i = ((x[0] - self.origin[0]) / self.h).floor();
        let j = ((x[1] - self.origin[1]) / self.h).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }
}

/// Samples on a [`Grid`] with an optional activity mask; inactive cells are
/// excluded from every integral.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub mask: Option<Vec<bool>>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, mask: Option<Vec<bool>>) -> Result<Self> {
        if values.len() != grid.len() || mask.as_ref().is_some_and(|m| m.len() != grid.len()) {
            return Err(Error::Precondition(format!(
                "sample count does not match a {} x {} grid",
                grid.nx, grid.ny
            )));
        }
        Ok(GridFunction { grid, values, mask })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![0.0; n],
            mask: None,
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| f(&grid.center(k % grid.nx, k / grid.nx)))
            .collect();
        GridFunction {
            grid,
            values,
            mask: None,
        }
    }

    /// Cell-center membership in `domain`.
    pub fn domain_mask(grid: &Grid, domain: &dyn Domain) -> Vec<bool> {
        (0..grid.len())
            .into_par_iter()
            .map(|k| domain.contains(&grid.center(k % grid.nx, k / grid.nx)))
            .collect()
    }

    /// Samples `f` on the cells of `domain`; other cells hold 0 and are masked out.
    pub fn on_domain<F: Fn(&[f64]) -> f64 + Sync>(grid: Grid, domain: &dyn Domain, f: F) -> Self {
        let mask = GridFunction::domain_mask(&grid, domain);
        let mut g = GridFunction::from_fn(grid, f);
        for (v, &m) in g.values.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
        g.mask = Some(mask);
        g
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), self.grid.len());
        self.mask = Some(mask);
        self
    }

    pub fn active(&self, i: usize, j: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[self.grid.index(i, j)])
    }

    pub fn active_at(&self, k: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[k])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Midpoint-rule integral over active cells.
    pub fn integral(&self) -> f64 {
        self.active_values().sum::<f64>() * self.grid.cell_area()
    }

    pub fn l1_norm(&self) -> f64 {
        self.active_values().map(f64::abs).sum::<f64>() * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.active_values().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.active_values().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn active_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.active_at(*k))
            .map(|(_, &v)| v)
    }

    /// Text export: header `nx ny`, `x0 y0`, `h`, then one row of samples per
    /// grid row `j`, inactive cells written as `nan`.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(w, "{} {}", g.nx, g.ny)?;
        writeln!(w, "{} {}", g.origin[0], g.origin[1])?;
        writeln!(w, "{}", g.h)?;
        for j in 0..g.ny {
            let row: Vec<String> = (0..g.nx)
                .map(|i| {
                    if self.active(i, j) {
                        format!("{:e}", self.get(i, j))
                    } else {
                        "nan".to_string()
                    }
                })
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, Vec<f64>)> {
            let (k, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })?;
            let line = line?;
            let vals = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line: k + 1,
                        msg: format!("{what}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((k + 1, vals))
        };
        let (l, dims) = next("dimensions")?;
        let (_, origin) = next("origin")?;
        let (_, h) = next("spacing")?;
        if dims.len() != 2 || origin.len() != 2 || h.len() != 1 {
            return Err(Error::Parse {
                line: l,
                msg: "malformed header".into(),
            });
        }
        let grid = Grid::new([origin[0], origin[1]], h[0], dims[0] as usize, dims[1] as usize)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.ny {
            let (l, row) = next("row")?;
            if row.len() != grid.nx {
                return Err(Error::Parse {
                    line: l,
                    msg: format!("expected {} samples", grid.nx),
                });
            }
            values.extend(row);
        }
        let mask: Vec<bool> = values.iter().map(|v| !v.is_nan()).collect();
        let any_masked = mask.iter().any(|m| !m);
        for v in values.iter_mut().filter(|v| v.is_nan()) {
            *v = 0.0;
        }
        GridFunction::new(grid, values, any_masked.then_some(mask))
    }
}
