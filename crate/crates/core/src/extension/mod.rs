//! Whitney extension of grid functions from a Lipschitz domain to the whole
//! plane: polynomials of near-best approximation on reflected interior cubes,
//! glued by a normalized partition of unity over the exterior covering.

mod bump;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

pub use bump::{partition_of_unity, smoothstep, BumpFunction, PartitionOfUnity, PLATEAU, SUPPORT};

use crate::error::{Error, Result};
use crate::geometry::{build_whitney_with, reflect_all, Cube, Domain, Side, WhitneyCovering, WhitneyOptions};
use crate::growth::GrowthFunction;
use crate::polyapprox::{
    fit_grid, weighted_seminorm, ActiveTable, CellRange, Grid, GridFunction, Norm, Polynomial, SeminormOptions,
};

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionOptions {
    /// Only exterior cubes with side at most `cutoff` carry a polynomial.
    pub cutoff: f64,
    /// Smoothstep order of the bump template; `n + 2` when unset.
    pub order: Option<u32>,
    /// Finest exterior level, relative to the grid level `-log2 h`.
    pub exterior_refine: i32,
    /// Extra interior levels below the finest exterior level.
    pub interior_refine: i32,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        ExtensionOptions {
            cutoff: 1.0 / 16.0,
            order: None,
            exterior_refine: 2,
            interior_refine: 3,
        }
    }
}

/// Extended function on an `h`-aligned box around the domain and the
/// bump-covered collar.
#[derive(Clone, Debug)]
pub struct Extension {
    /// `f~` on the box, no mask.
    pub f: GridFunction,
    /// Cells copied from `f`.
    pub inside: Vec<bool>,
    /// Exterior cells on which every bump that does not vanish has side at
    /// most the cutoff.
    pub collar: Vec<bool>,
    /// Exterior cells next to the boundary missed by every bump (the
    /// exterior covering stops at a finest level); they take the polynomial
    /// of the nearest cube.
    pub uncovered: usize,
    /// Upper bound on the distance from the domain to the support of `f~`.
    pub support_radius: f64,
    pub cutoff: f64,
    pub exterior_cubes: usize,
    pub reflected_cubes: usize,
}

fn grid_level(h: f64) -> i32 {
    (-h.log2()).round() as i32
}

/// Interior and exterior coverings matched to the resolution of `f`.
pub fn coverings(
    f: &GridFunction,
    domain: &dyn Domain,
    opts: &ExtensionOptions,
) -> Result<(WhitneyCovering, WhitneyCovering)> {
    let ext_level = grid_level(f.grid.h) + opts.exterior_refine;
    let exterior = build_whitney_with(
        domain,
        Side::Exterior,
        &WhitneyOptions {
            min_level: ext_level,
            max_side: Some(4.0 * opts.cutoff),
        },
    )?;
    let interior = build_whitney_with(
        domain,
        Side::Interior,
        &WhitneyOptions {
            min_level: ext_level + opts.interior_refine,
            max_side: None,
        },
    )?;
    Ok((interior, exterior))
}

pub fn extend(
    f: &GridFunction,
    domain: &dyn Domain,
    omega: &GrowthFunction,
    opts: &ExtensionOptions,
) -> Result<Extension> {
    let (interior, exterior) = coverings(f, domain, opts)?;
    extend_with(f, domain, &interior, &exterior, omega.n(), opts)
}

/// Polynomial sources: the projection on the reflected cube when it holds
/// `n + 2` cells per side, otherwise on the nearest fully active aligned
/// block of `(n + 2)^2` cells.
struct Sources<'a> {
    f: &'a GridFunction,
    table: ActiveTable,
    n: u32,
}

impl Sources<'_> {
    fn polynomial(&self, q: &Cube) -> Result<Polynomial> {
        let m = self.n as usize + 2;
        if q.side >= m as f64 * self.f.grid.h * (1.0 - 1e-12) {
            if let Ok(fit) = fit_grid(self.f, q, self.n) {
                return Ok(fit.to_polynomial());
            }
        }
        let b = self.nearest_block(q)?;
        Ok(fit_grid(self.f, &b, self.n)?.to_polynomial())
    }

    fn nearest_block(&self, q: &Cube) -> Result<Cube> {
        let g = &self.f.grid;
        let m = self.n as usize + 2;
        if g.nx < m || g.ny < m {
            return Err(Error::Resolution("grid smaller than one fitting block".into()));
        }
        let c = q.center();
        let ci = ((c[0] - g.origin[0]) / g.h - m as f64 / 2.0).round() as i64;
        let cj = ((c[1] - g.origin[1]) / g.h - m as f64 / 2.0).round() as i64;
        let (imax, jmax) = ((g.nx - m) as i64, (g.ny - m) as i64);
        let mut best: Option<(f64, i64, i64)> = None;
        let mut found_at = None;
        for r in 0i64.. {
            if r > g.nx.max(g.ny) as i64 || found_at.is_some_and(|f| r > f + 1) {
                break;
            }
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let (i, j) = (ci + di, cj + dj);
                    if i < 0 || j < 0 || i > imax || j > jmax {
                        continue;
                    }
                    let (iu, ju) = (i as usize, j as usize);
                    let range = CellRange {
                        i0: iu,
                        i1: iu + m,
                        j0: ju,
                        j1: ju + m,
                    };
                    if self.table.inactive(&range) != 0 {
                        continue;
                    }
                    let bx = g.origin[0] + (i as f64 + m as f64 / 2.0) * g.h - c[0];
                    let by = g.origin[1] + (j as f64 + m as f64 / 2.0) * g.h - c[1];
                    let d2 = bx * bx + by * by;
                    if best.is_none_or(|(bd, bi, bj)| d2 < bd || (d2 == bd && (i, j) < (bi, bj))) {
                        best = Some((d2, i, j));
                    }
                }
            }
            if best.is_some() && found_at.is_none() {
                found_at = Some(r);
            }
        }
        let (_, i, j) =
            best.ok_or_else(|| Error::Resolution(format!("no active {m} x {m} block of cells near {c:?}")))?;
        Ok(Cube::new(
            vec![g.origin[0] + i as f64 * g.h, g.origin[1] + j as f64 * g.h],
            m as f64 * g.h,
        ))
    }
}

fn on_lattice(x: f64, h: f64) -> bool {
    let r = x / h;
    (r - r.round()).abs() < 1e-9
}

/// `f~ = f` on the domain cells and `sum_{l(Q) <= R} psi_Q P_{Q~}` outside,
/// with `psi_Q` normalized over every exterior bump of side at most `4R`.
pub fn extend_with(
    f: &GridFunction,
    domain: &dyn Domain,
    interior: &WhitneyCovering,
    exterior: &WhitneyCovering,
    n: u32,
    opts: &ExtensionOptions,
) -> Result<Extension> {
    let g = &f.grid;
    if g.nx != g.ny || !on_lattice(g.origin[0], g.h) || !on_lattice(g.origin[1], g.h) {
        return Err(Error::Precondition(
            "extension needs a square grid with origin on the lattice h Z^2".into(),
        ));
    }
    if !g.covers(&domain.bounding_box()) {
        return Err(Error::Precondition("grid does not cover the domain".into()));
    }
    let masked;
    let f = if f.mask.is_some() {
        f
    } else {
        masked = f.clone().with_mask(GridFunction::domain_mask(g, domain));
        &masked
    };
    let r = opts.cutoff;
    let order = opts.order.unwrap_or(n + 2);
    let pou = partition_of_unity(exterior, order, 4.0 * r)?;

    // Reflected polynomials, one projection per distinct interior cube.
    let refl = reflect_all(interior, exterior, r)?;
    let sources = Sources {
        f,
        table: ActiveTable::new(f),
        n,
    };
    let mut distinct: Vec<usize> = refl.pairs.iter().map(|&(_, j)| j).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let polys: Vec<Polynomial> = distinct
        .par_iter()
        .map(|&j| sources.polynomial(&interior.cube(j).cube()))
        .collect::<Result<_>>()?;
    let by_interior: HashMap<usize, usize> = distinct.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    let exterior_to_pou: HashMap<usize, usize> = (0..pou.len()).map(|k| (pou.source(k), k)).collect();
    let mut poly_of: Vec<Option<usize>> = vec![None; pou.len()];
    let mut support_radius: f64 = 0.0;
    for &(i, j) in &refl.pairs {
        let k = exterior_to_pou[&i];
        poly_of[k] = Some(by_interior[&j]);
        let q = pou.cube(k);
        support_radius = support_radius.max(exterior.dist(i) + 1.25 * q.diam());
    }

    // Output box: the domain grid plus every 5/4 Q carrying a polynomial.
    let mut lo = g.origin;
    let mut hi = g.upper();
    for k in 0..pou.len() {
        if poly_of[k].is_some() {
            let s = pou.cube(k).scaled(1.25);
            for a in 0..2 {
                lo[a] = lo[a].min(s.corner[a]);
                hi[a] = hi[a].max(s.corner[a] + s.side);
            }
        }
    }
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let out = Grid::aligned(&Cube::new(lo.to_vec(), side), g.h)?;
    let di = ((g.origin[0] - out.origin[0]) / g.h).round() as usize;
    let dj = ((g.origin[1] - out.origin[1]) / g.h).round() as usize;
    let nx = out.nx;
    let mut inside = vec![false; out.len()];
    let mut values = vec![0.0; out.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            if f.active(i, j) {
                let k = out.index(i + di, j + dj);
                inside[k] = true;
                values[k] = f.get(i, j);
            }
        }
    }

    // Rasterize the bumps band by band.
    const BAND: usize = 32;
    let bands = out.ny.div_ceil(BAND);
    let mut per_band: Vec<Vec<(usize, CellRange)>> = vec![Vec::new(); bands];
    for k in 0..pou.len() {
        let cells = out.cells_in(&pou.cube(k).scaled(1.25));
        if cells.is_empty() {
            continue;
        }
        for list in &mut per_band[cells.j0 / BAND..=(cells.j1 - 1) / BAND] {
            list.push((k, cells));
        }
    }
    let mut sum = vec![0.0; out.len()];
    let mut big = vec![false; out.len()];
    values
        .par_chunks_mut(BAND * nx)
        .zip(sum.par_chunks_mut(BAND * nx))
        .zip(big.par_chunks_mut(BAND * nx))
        .zip(inside.par_chunks(BAND * nx))
        .enumerate()
        .for_each(|(b, (((vals, sums), bigs), ins))| {
            let row0 = b * BAND;
            let rows = vals.len() / nx;
            for &(k, cells) in &per_band[b] {
                let q = pou.cube(k);
                let poly = poly_of[k].map(|p| &polys[p]);
                let j0 = cells.j0.max(row0);
                let j1 = cells.j1.min(row0 + rows);
                for j in j0..j1 {
                    for i in cells.i0..cells.i1 {
                        let local = (j - row0) * nx + i;
                        if ins[local] {
                            continue;
                        }
                        let x = out.center(i, j);
                        let w = pou.raw(k, &x);
                        if w <= 0.0 {
                            continue;
                        }
                        sums[local] += w;
                        match poly {
                            Some(p) if q.side <= r => vals[local] += w * p.eval(&x),
                            _ => bigs[local] = true,
                        }
                    }
                }
            }
        });

    let near = 2.0 * g.h;
    let fill: Vec<(usize, f64)> = (0..out.len())
        .into_par_iter()
        .filter(|&k| !inside[k] && sum[k] == 0.0)
        .filter_map(|k| {
            let x = out.center(k % nx, k / nx);
            if domain.dist_to_boundary(&x) > near {
                return None;
            }
            let c = nearest_carrier(&pou, &poly_of, &x, r)?;
            Some((k, polys[poly_of[c].expect("carrier has a polynomial")].eval(&x)))
        })
        .collect();
    let mut collar = vec![false; out.len()];
    for k in 0..out.len() {
        if !inside[k] && sum[k] > 0.0 {
            values[k] /= sum[k];
            collar[k] = !big[k];
        }
    }
    let uncovered = fill.len();
    for (k, v) in fill {
        values[k] = v;
    }

    Ok(Extension {
        f: GridFunction::new(out, values, None)?,
        inside,
        collar,
        uncovered,
        support_radius,
        cutoff: r,
        exterior_cubes: pou.len(),
        reflected_cubes: distinct.len(),
    })
}

/// Closest bump cube carrying a polynomial, searched among the lattice
/// neighbours of `x` on every level.
fn nearest_carrier(pou: &PartitionOfUnity, poly_of: &[Option<usize>], x: &[f64], r: f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for k in pou.nearby(x, 2) {
        let q = pou.cube(k);
        if q.side > r || poly_of[k].is_none() {
            continue;
        }
        let d = q.distance_to_point(x);
        if best.is_none_or(|(bd, bk)| d < bd || (d == bd && k < bk)) {
            best = Some((d, k));
        }
    }
    best.map(|(_, k)| k)
}

/// Measured quantities of the extension bound.
#[derive(Clone, Debug, Serialize)]
pub struct ExtensionReport {
    pub support_radius: f64,
    /// Largest distance from the domain boundary to an exterior cell where
    /// `f~` does not vanish.
    pub measured_support: f64,
    pub full_seminorm: f64,
    pub interior_seminorm: f64,
    /// `full / interior`, absent in the exact-polynomial case.
    pub seminorm_ratio: Option<f64>,
    pub exact_polynomial: bool,
    pub linf: f64,
    pub extension_seminorm: f64,
    /// `||f~||_omega / (||f||^int_omega + ||f||_inf)`.
    pub prop_constant: Option<f64>,
    pub extension_l1: f64,
    /// `int |f|` over points of the domain at distance at least `R / 2` from
    /// the boundary, `R` the window size.
    pub local_l1: f64,
    /// `||f~||_1 / (||f||^int_omega + local L^1)`.
    pub l1_ratio: Option<f64>,
    pub uncovered_cells: usize,
    pub cells: usize,
}

pub fn extension_report(
    f: &GridFunction,
    domain: &dyn Domain,
    omega: &GrowthFunction,
    opts: &ExtensionOptions,
    p: Norm,
) -> Result<ExtensionReport> {
    let ext = extend(f, domain, omega, opts)?;
    report_for(f, &ext, domain, omega, p)
}

/// Report for an extension built elsewhere.
pub fn report_for(
    f: &GridFunction,
    ext: &Extension,
    domain: &dyn Domain,
    omega: &GrowthFunction,
    p: Norm,
) -> Result<ExtensionReport> {
    let n = omega.n();
    let max_level = grid_level(f.grid.h);
    let w = |l: f64| omega.eval(l);
    let full = weighted_seminorm(f, domain, n, &SeminormOptions::new(p, false, max_level), w)?.value;
    let int = weighted_seminorm(f, domain, n, &SeminormOptions::new(p, true, max_level), w)?.value;
    let whole = ext.f.clone().with_mask(vec![true; ext.f.grid.len()]);
    let ext_semi = weighted_seminorm(&whole, domain, n, &SeminormOptions::new(p, false, max_level), w)?.value;
    let masked;
    let f = if f.mask.is_some() {
        f
    } else {
        masked = f.clone().with_mask(GridFunction::domain_mask(&f.grid, domain));
        &masked
    };
    let linf = f.sup_norm();
    let scale = 1e-9 * (1.0 + linf);
    let exact = full <= scale && int <= scale;
    let half_window = 0.5 * domain.lipschitz().1;
    let g = &f.grid;
    let local_l1 = (0..g.len())
        .into_par_iter()
        .filter(|&k| f.active_at(k))
        .map(|k| {
            let x = g.center(k % g.nx, k / g.nx);
            if domain.dist_to_boundary(&x) >= half_window {
                f.values[k].abs()
            } else {
                0.0
            }
        })
        .sum::<f64>()
        * g.cell_area();
    let og = &ext.f.grid;
    let measured_support = (0..og.len())
        .into_par_iter()
        .filter(|&k| !ext.inside[k] && ext.f.values[k] != 0.0)
        .map(|k| domain.dist_to_boundary(&og.center(k % og.nx, k / og.nx)))
        .reduce(|| 0.0, f64::max);
    let extension_l1 = ext.f.l1_norm();
    let denom_prop = int + linf;
    let denom_l1 = int + local_l1;
    Ok(ExtensionReport {
        support_radius: ext.support_radius,
        measured_support,
        full_seminorm: full,
        interior_seminorm: int,
        seminorm_ratio: (!exact && int > 0.0).then(|| full / int),
        exact_polynomial: exact,
        linf,
        extension_seminorm: ext_semi,
        prop_constant: (denom_prop > 0.0).then(|| ext_semi / denom_prop),
        extension_l1,
        local_l1,
        l1_ratio: (denom_l1 > 0.0).then(|| extension_l1 / denom_l1),
        uncovered_cells: ext.uncovered,
        cells: og.len(),
    })
}
