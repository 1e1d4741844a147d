use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use super::cube::{dyadic_side, Cube, DyadicCube};
use super::domain::{Domain, Window};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Cover the domain itself.
    Interior,
    /// Cover the interior of the complement.
    Exterior,
}

#[derive(Clone, Debug)]
pub struct WhitneyOptions {
    /// Finest admissible level; cubes that would need to be smaller are
    /// reported as truncated.
    pub min_level: i32,
    /// Largest kept side. Required for exterior coverings, where it defaults
    /// to the domain's window size.
    pub max_side: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TruncationReport {
    pub truncated_cubes: usize,
    pub uncovered_volume: f64,
    /// Exterior cubes larger than `max_side` that were left out.
    pub dropped_large: usize,
}

#[derive(Clone, Debug)]
pub struct WhitneyCovering {
    dim: usize,
    side: Side,
    min_level: i32,
    region: Cube,
    cubes: Vec<DyadicCube>,
    dist2: Vec<f64>,
    lookup: HashMap<DyadicCube, usize>,
    levels: BTreeMap<i32, Vec<usize>>,
    truncation: TruncationReport,
}

#[derive(Default)]
struct Acc {
    cubes: Vec<(DyadicCube, f64)>,
    truncated: usize,
    uncovered: f64,
}

impl Acc {
    fn merge(mut self, other: Acc) -> Acc {
        self.cubes.extend(other.cubes);
        self.truncated += other.truncated;
        self.uncovered += other.uncovered;
        self
    }
}

struct Builder<'a> {
    domain: &'a dyn Domain,
    side: Side,
    min_level: i32,
    region: Cube,
    parallel_above: i32,
}

enum Verdict {
    Accept(f64),
    Discard,
    Refine,
}

impl Builder<'_> {
    fn target_volume(&self, q: &Cube) -> f64 {
        match self.side {
            Side::Interior => self.domain.volume_in(q),
            Side::Exterior => q.volume() - self.domain.volume_in(q),
        }
    }

    fn verdict(&self, cube: &Cube) -> Verdict {
        let dist2 = self.domain.cube_dist2_to_boundary(cube);
        if dist2 > 0.0 {
            let inside = self.domain.contains(&cube.center());
            if inside != (self.side == Side::Interior) {
                return Verdict::Discard;
            }
            let diam2 = cube.dim() as f64 * cube.side * cube.side;
            if diam2 <= dist2 {
                return Verdict::Accept(dist2);
            }
        }
        Verdict::Refine
    }

    fn visit(&self, q: DyadicCube) -> Acc {
        let cube = q.cube();
        let mut acc = Acc::default();
        if !self.region.interiors_overlap(&cube) {
            return acc;
        }
        match self.verdict(&cube) {
            Verdict::Discard => acc,
            Verdict::Accept(d2) => {
                acc.cubes.push((q, d2));
                acc
            }
            Verdict::Refine if q.level >= self.min_level => {
                let v = self.target_volume(&cube);
                if v > 0.0 {
                    acc.truncated = 1;
                    acc.uncovered = v;
                }
                acc
            }
            Verdict::Refine => {
                let children = q.children();
                if q.level < self.parallel_above {
                    children
                        .into_par_iter()
                        .map(|c| self.visit(c))
                        .reduce(Acc::default, Acc::merge)
                } else {
                    children
                        .into_iter()
                        .map(|c| self.visit(c))
                        .fold(Acc::default(), Acc::merge)
                }
            }
        }
    }
}

/// Whitney covering of `domain` (or of its complement) by maximal dyadic
/// cubes with `diam(Q) <= dist(Q, boundary)`.
pub fn build_whitney(domain: &dyn Domain, side: Side, min_level: i32) -> Result<WhitneyCovering> {
    build_whitney_with(
        domain,
        side,
        &WhitneyOptions {
            min_level,
            max_side: None,
        },
    )
}

pub fn build_whitney_with(domain: &dyn Domain, side: Side, opts: &WhitneyOptions) -> Result<WhitneyCovering> {
    let d = domain.dim();
    let bbox = domain.bounding_box();
    let max_side = match side {
        Side::Interior => opts.max_side,
        Side::Exterior => Some(opts.max_side.unwrap_or(domain.lipschitz().1)),
    };
    let region = match (side, max_side) {
        (Side::Exterior, Some(s)) => {
            // a kept cube of side s lies within 5 sqrt(d) s of the boundary
            let margin = 5.0 * (d as f64).sqrt() * s;
            Cube::centered(&bbox.center(), bbox.side + 2.0 * margin)
        }
        _ => bbox.clone(),
    };
    let mut covering = WhitneyCovering {
        dim: d,
        side,
        min_level: opts.min_level,
        region: region.clone(),
        cubes: Vec::new(),
        dist2: Vec::new(),
        lookup: HashMap::new(),
        levels: BTreeMap::new(),
        truncation: TruncationReport::default(),
    };
    if side == Side::Interior && domain.volume() <= 0.0 {
        return Ok(covering);
    }

    let mut top = (-region.side.log2()).floor() as i32;
    if let Some(s) = max_side {
        top = top.min((-s.log2()).floor() as i32 - 1);
    }
    let top = top.min(opts.min_level);
    let s = dyadic_side(top);
    let ranges: Vec<(i64, i64)> = region
        .corner
        .iter()
        .map(|&c| ((c / s).floor() as i64, ((c + region.side) / s).floor() as i64))
        .collect();
    let mut tops = vec![DyadicCube::new(top, Vec::new())];
    for &(a, b) in &ranges {
        tops = tops
            .into_iter()
            .flat_map(|q| {
                (a..=b).map(move |i| {
                    let mut idx = q.index.clone();
                    idx.push(i);
                    DyadicCube::new(top, idx)
                })
            })
            .collect();
    }

    let builder = Builder {
        domain,
        side,
        min_level: opts.min_level,
        region,
        parallel_above: top + 4,
    };
    let acc = tops
        .into_par_iter()
        .map(|q| builder.visit(q))
        .reduce(Acc::default, Acc::merge);

    // A top-level acceptance may extend to larger ancestors.
    let mut found: Vec<(DyadicCube, f64)> = Vec::with_capacity(acc.cubes.len());
    for (mut q, mut d2) in acc.cubes {
        if q.level == top {
            loop {
                let p = q.parent();
                match builder.verdict(&p.cube()) {
                    Verdict::Accept(pd2) => {
                        q = p;
                        d2 = pd2;
                    }
                    _ => break,
                }
            }
        }
        found.push((q, d2));
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found.dedup_by(|a, b| a.0 == b.0);
    let set: HashSet<DyadicCube> = found.iter().map(|c| c.0.clone()).collect();
    let min_found = found.iter().map(|c| c.0.level).min().unwrap_or(top);
    found.retain(|(q, _)| (min_found..q.level).all(|l| !set.contains(&q.ancestor(l))));

    let mut dropped = 0;
    if let Some(s) = max_side {
        let before = found.len();
        found.retain(|(q, _)| q.side() <= s);
        dropped = before - found.len();
    }

    for (q, d2) in found {
        let i = covering.cubes.len();
        covering.levels.entry(q.level).or_default().push(i);
        covering.lookup.insert(q.clone(), i);
        covering.cubes.push(q);
        covering.dist2.push(d2);
    }
    covering.truncation = TruncationReport {
        truncated_cubes: acc.truncated,
        uncovered_volume: acc.uncovered,
        dropped_large: dropped,
    };
    Ok(covering)
}

/// Result of checking the covering properties.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub cube_count: usize,
    pub per_level: Vec<(i32, usize)>,
    pub disjoint: bool,
    pub covered_volume: f64,
    pub domain_volume: Option<f64>,
    pub uncovered_volume: f64,
    pub union_ok: bool,
    pub min_dist_over_diam: f64,
    pub max_dist_over_diam: f64,
    pub distance_ok: bool,
    pub touching_pairs: usize,
    pub max_neighbor_ratio: f64,
    pub neighbor_ok: bool,
    pub max_overlap: usize,
    pub overlap_bound: usize,
    pub overlap_ok: bool,
    pub max_vertical_count: usize,
    pub vertical_bound: usize,
    pub vertical_ok: bool,
}

impl InvariantReport {
    pub fn all_ok(&self) -> bool {
        self.disjoint && self.union_ok && self.distance_ok && self.neighbor_ok && self.overlap_ok && self.vertical_ok
    }
}

/// Uniform bound for the number of Whitney cubes of one size stacked on a
/// vertical line through a window with graph constant `delta`.
///
/// Heights above the graph of points in such a cube lie between `sqrt(d) s`
/// and `5 sqrt(d) sqrt(1 + delta^2) s`.
pub fn vertical_bound(d: usize, delta: f64) -> usize {
    ((5.0 * (1.0 + delta * delta).sqrt() - 1.0) * (d as f64).sqrt()).floor() as usize
}

/// Bound for the overlap of the `6/5`-dilated cubes.
pub fn overlap_bound(d: usize) -> usize {
    12usize.pow(d as u32)
}

impl WhitneyCovering {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn min_level(&self) -> i32 {
        self.min_level
    }

    pub fn region(&self) -> &Cube {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn cube(&self, i: usize) -> &DyadicCube {
        &self.cubes[i]
    }

    /// `dist(Q_i, boundary)`.
    pub fn dist(&self, i: usize) -> f64 {
        self.dist2[i].sqrt()
    }

    pub fn dist2(&self, i: usize) -> f64 {
        self.dist2[i]
    }

    pub fn index_of(&self, q: &DyadicCube) -> Option<usize> {
        self.lookup.get(q).copied()
    }

    pub fn truncation(&self) -> &TruncationReport {
        &self.truncation
    }

    /// Cube ids grouped by level, coarse to fine.
    pub fn levels(&self) -> &BTreeMap<i32, Vec<usize>> {
        &self.levels
    }

    pub fn finest_level(&self) -> Option<i32> {
        self.levels.keys().next_back().copied()
    }

    /// The covering cube containing the dyadic cell `cell`, if any.
    pub fn find_containing(&self, cell: &DyadicCube) -> Option<usize> {
        self.levels
            .keys()
            .filter(|&&l| l <= cell.level)
            .find_map(|&l| self.lookup.get(&cell.ancestor(l)).copied())
    }

    /// The covering cube whose half-open box contains `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let l = self.finest_level()?;
        self.find_containing(&DyadicCube::containing(l, x))
    }

    /// Touching cubes of every cube, found through the ring of finest-level
    /// cells around it.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let Some(fine) = self.finest_level() else {
            return Vec::new();
        };
        self.cubes
            .par_iter()
            .enumerate()
            .map(|(i, q)| {
                let m = 1i64 << (fine - q.level);
                let lo: Vec<i64> = q.index.iter().map(|&k| k * m - 1).collect();
                let n = (m + 2) as usize;
                let mut out = Vec::new();
                let total = n.pow(self.dim as u32);
                let mut idx = vec![0i64; self.dim];
                for flat in 0..total {
                    let mut r = flat;
                    let mut on_ring = false;
                    for k in 0..self.dim {
                        let t = (r % n) as i64;
                        r /= n;
                        idx[k] = lo[k] + t;
                        if t == 0 || t == m + 1 {
                            on_ring = true;
                        }
                    }
                    if !on_ring {
                        continue;
                    }
                    if let Some(j) = self.find_containing(&DyadicCube::new(fine, idx.clone())) {
                        if j != i && !out.contains(&j) {
                            out.push(j);
                        }
                    }
                }
                out.sort_unstable();
                out
            })
            .collect()
    }

    /// Checks every covering property against `domain`.
    pub fn check_invariants(&self, domain: &dyn Domain) -> InvariantReport {
        let d = self.dim;
        let per_level = self.levels.iter().map(|(&l, v)| (l, v.len())).collect();

        let disjoint = self.cubes.iter().all(|q| {
            self.levels
                .keys()
                .filter(|&&l| l < q.level)
                .all(|&l| !self.lookup.contains_key(&q.ancestor(l)))
        });

        let covered: f64 = self.cubes.iter().map(|q| q.cube().volume()).sum();
        let (domain_volume, union_ok) = match self.side {
            Side::Interior => {
                let dv = domain.volume();
                let total = covered + self.truncation.uncovered_volume;
                (Some(dv), (total - dv).abs() <= 1e-9 * dv.max(1e-300))
            }
            Side::Exterior => (None, true),
        };

        let mut min_r = f64::INFINITY;
        let mut max_r: f64 = 0.0;
        let mut distance_ok = true;
        for (i, q) in self.cubes.iter().enumerate() {
            let cube = q.cube();
            let d2 = domain.cube_dist2_to_boundary(&cube);
            let diam2 = d as f64 * cube.side * cube.side;
            distance_ok &= diam2 <= d2 && d2 <= 16.0 * diam2 && d2 == self.dist2[i];
            let r = (d2 / diam2).sqrt();
            min_r = min_r.min(r);
            max_r = max_r.max(r);
        }

        let nbrs = self.neighbors();
        let mut pairs = 0;
        let mut max_ratio: f64 = 1.0;
        for (i, list) in nbrs.iter().enumerate() {
            for &j in list {
                if i < j {
                    pairs += 1;
                }
                max_ratio = max_ratio.max(self.cubes[i].side() / self.cubes[j].side());
            }
        }

        let max_overlap = self.max_overlap(1.2);
        let mut max_vertical = 0;
        let mut vbound = usize::MAX;
        for w in domain.windows() {
            vbound = vbound.min(vertical_bound(d, w.delta));
            max_vertical = max_vertical.max(self.max_vertical_count(w, 64));
        }
        if domain.windows().is_empty() {
            vbound = 0;
        }

        InvariantReport {
            cube_count: self.cubes.len(),
            per_level,
            disjoint,
            covered_volume: covered,
            domain_volume,
            uncovered_volume: self.truncation.uncovered_volume,
            union_ok,
            min_dist_over_diam: min_r,
            max_dist_over_diam: max_r,
            distance_ok,
            touching_pairs: pairs,
            max_neighbor_ratio: max_ratio,
            neighbor_ok: max_ratio <= 4.0,
            max_overlap,
            overlap_bound: overlap_bound(d),
            overlap_ok: max_overlap <= overlap_bound(d),
            max_vertical_count: max_vertical,
            vertical_bound: vbound,
            vertical_ok: max_vertical <= vbound,
        }
    }

    /// Maximum over lattice sample points of `sum_Q chi_{sQ}`, sampling at
    /// half the finest cube side.
    pub fn max_overlap(&self, s: f64) -> usize {
        let Some(fine) = self.finest_level() else {
            return 0;
        };
        let d = self.dim;
        let mut h = 0.5 * dyadic_side(fine);
        let margin = 0.5 * (s - 1.0) * self.cubes.iter().map(|q| q.side()).fold(0.0, f64::max);
        let lo: Vec<f64> = self.region.corner.iter().map(|c| c - margin).collect();
        let ext = self.region.side + 2.0 * margin;
        while ((ext / h) as usize + 2).pow(d as u32) > 1 << 24 {
            h *= 2.0;
        }
        let n = (ext / h).ceil() as usize + 2;
        let base: Vec<i64> = lo.iter().map(|&l| (l / h).floor() as i64).collect();
        let mut count = vec![0u16; n.pow(d as u32)];
        for q in &self.cubes {
            let c = q.cube().scaled(s);
            let r: Vec<(usize, usize)> = (0..d)
                .map(|k| {
                    let a = ((c.corner[k] / h).ceil() as i64 - base[k]).max(0) as usize;
                    let b = (((c.corner[k] + c.side) / h).floor() as i64 - base[k]).min(n as i64 - 1) as usize;
                    (a, b)
                })
                .collect();
            if r.iter().any(|&(a, b)| a > b) {
                continue;
            }
            let mut idx: Vec<usize> = r.iter().map(|&(a, _)| a).collect();
            loop {
                let flat = idx.iter().rev().fold(0usize, |acc, &i| acc * n + i);
                count[flat] += 1;
                let mut k = 0;
                loop {
                    if k == d {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] <= r[k].1 {
                        break;
                    }
                    idx[k] = r[k].0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
        }
        count.into_iter().max().unwrap_or(0) as usize
    }

    /// Number of cubes of side `2^-level` meeting the window and the vertical
    /// line through `line` (coordinates along the non-vertical axes).
    pub fn vertical_line_count(&self, window: &Window, level: i32, line: &[f64]) -> usize {
        let axes: Vec<usize> = (0..self.dim).filter(|&k| k != window.vertical_axis).collect();
        let wc = &window.cube;
        let in_base = axes
            .iter()
            .zip(line)
            .all(|(&k, &x)| x >= wc.corner[k] && x < wc.corner[k] + wc.side);
        if !in_base {
            return 0;
        }
        let Some(ids) = self.levels.get(&level) else {
            return 0;
        };
        ids.iter()
            .filter(|&&i| {
                let c = self.cubes[i].cube();
                c.interiors_overlap(wc)
                    && axes
                        .iter()
                        .zip(line)
                        .all(|(&k, &x)| x >= c.corner[k] && x < c.corner[k] + c.side)
            })
            .count()
    }

    /// Largest `vertical_line_count` over all levels and `lines` evenly spaced
    /// lines in the window base (planar windows).
    pub fn max_vertical_count(&self, window: &Window, lines: usize) -> usize {
        if self.dim != 2 {
            return 0;
        }
        let k = 1 - window.vertical_axis;
        let wc = &window.cube;
        let levels: Vec<i32> = self.levels.keys().copied().collect();
        let mut best = 0;
        for j in 0..lines {
            let x = wc.corner[k] + (j as f64 + 0.5) / lines as f64 * wc.side;
            for &l in &levels {
                best = best.max(self.vertical_line_count(window, l, &[x]));
            }
        }
        best
    }

    /// Reflected cube of an exterior cube `q` with squared boundary distance
    /// `dist2_q`: the largest cube of this (interior) covering within
    /// `2 dist(q, boundary)`, ties broken by lexicographic corner.
    pub fn reflected_cube(&self, q: &Cube, dist2_q: f64) -> Result<usize> {
        let bound2 = 4.0 * dist2_q;
        let reach = 2.0 * dist2_q.sqrt() * (1.0 + 1e-12);
        for (&l, ids) in &self.levels {
            let s = dyadic_side(l);
            let ranges: Vec<(i64, i64)> = q
                .corner
                .iter()
                .map(|&c| {
                    (
                        ((c - reach) / s).floor() as i64,
                        ((c + q.side + reach) / s).floor() as i64,
                    )
                })
                .collect();
            let box_count = ranges.iter().map(|&(a, b)| (b - a + 1) as f64).product::<f64>();
            let mut hits: Vec<usize> = Vec::new();
            if box_count <= ids.len() as f64 {
                let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                'enumerate: loop {
                    if let Some(&j) = self.lookup.get(&DyadicCube::new(l, idx.clone())) {
                        if self.cubes[j].cube().distance2_to_cube(q) <= bound2 {
                            hits.push(j);
                        }
                    }
                    for k in 0..idx.len() {
                        idx[k] += 1;
                        if idx[k] <= ranges[k].1 {
                            continue 'enumerate;
                        }
                        idx[k] = ranges[k].0;
                    }
                    break;
                }
            } else {
                hits.extend(
                    ids.iter()
                        .copied()
                        .filter(|&j| self.cubes[j].cube().distance2_to_cube(q) <= bound2),
                );
            }
            if let Some(best) = hits.into_iter().min_by(|&a, &b| {
                self.cubes[a]
                    .corner()
                    .partial_cmp(&self.cubes[b].corner())
                    .expect("finite corners")
            }) {
                return Ok(best);
            }
        }
        Err(Error::Covering(format!(
            "no interior cube within {reach:e} of the cube at {:?}",
            q.corner
        )))
    }
}

/// Reflected cubes for every exterior cube of side at most `r`.
#[derive(Clone, Debug)]
pub struct ReflectionMap {
    /// `(exterior id, interior id)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Smallest reflected side over exterior cubes of the largest kept side.
    pub r1: f64,
}

pub fn reflect_all(interior: &WhitneyCovering, exterior: &WhitneyCovering, r: f64) -> Result<ReflectionMap> {
    if interior.is_empty() {
        return Err(Error::Covering("interior covering is empty".into()));
    }
    let ids: Vec<usize> = (0..exterior.len()).filter(|&i| exterior.cube(i).side() <= r).collect();
    let pairs: Vec<(usize, usize)> = ids
        .par_iter()
        .map(|&i| {
            let q = exterior.cube(i).cube();
            interior.reflected_cube(&q, exterior.dist2(i)).map(|j| (i, j))
        })
        .collect::<Result<_>>()?;
    let top = pairs.iter().map(|&(i, _)| exterior.cube(i).side()).fold(0.0, f64::max);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut r1 = f64::INFINITY;
    for &(i, j) in &pairs {
        let (a, b) = (exterior.cube(i).side(), interior.cube(j).side());
        min_ratio = min_ratio.min(b / a);
        max_ratio = max_ratio.max(b / a);
        if a == top {
            r1 = r1.min(b);
        }
    }
    Ok(ReflectionMap {
        pairs,
        min_ratio,
        max_ratio,
        r1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::{HalfSpace, PolygonDomain};

    /// Exhaustive oracle: every dyadic cube between `top` and `min_level` in
    /// the box, kept when it satisfies the distance condition, lies on the
    /// right side and its parent does not satisfy the condition.
    fn brute_force(domain: &dyn Domain, top: i32, min_level: i32) -> Vec<DyadicCube> {
        let bb = domain.bounding_box();
        let ok = |q: &DyadicCube| {
            let c = q.cube();
            let d2 = domain.cube_dist2_to_boundary(&c);
            d2 > 0.0 && domain.contains(&c.center()) && 2.0 * c.side * c.side <= d2
        };
        let mut out = Vec::new();
        for l in top..=min_level {
            let s = dyadic_side(l);
            let i0 = (bb.corner[0] / s).floor() as i64;
            let i1 = ((bb.corner[0] + bb.side) / s).ceil() as i64;
            let j0 = (bb.corner[1] / s).floor() as i64;
            let j1 = ((bb.corner[1] + bb.side) / s).ceil() as i64;
            for i in i0..i1 {
                for j in j0..j1 {
                    let q = DyadicCube::new(l, vec![i, j]);
                    if ok(&q) && !ok(&q.parent()) {
                        out.push(q);
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn square_matches_brute_force() {
        let sq = PolygonDomain::unit_square();
        let w = build_whitney(&sq, Side::Interior, 6).unwrap();
        let mut got = w.cubes().to_vec();
        got.sort();
        assert_eq!(got, brute_force(&sq, -1, 6));
        let rep = w.check_invariants(&sq);
        assert!(rep.all_ok(), "{rep:?}");
    }

    #[test]
    fn empty_domain_gives_empty_covering() {
        let below = HalfSpace::new(Cube::new(vec![0.0, -2.0], 1.0));
        let w = build_whitney(&below, Side::Interior, 5).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn halfspace_counts_double_per_level() {
        let hs = HalfSpace::new(Cube::new(vec![0.0, 0.0], 1.0));
        let w = build_whitney(&hs, Side::Interior, 9).unwrap();
        let counts: BTreeMap<i32, usize> = w.levels().iter().map(|(&l, v)| (l, v.len())).collect();
        // brute-force count of cubes at level k inside the unit window
        for k in 3..9 {
            let s = dyadic_side(k);
            let mut n = 0;
            for j in 0..(1i64 << k) {
                let q = DyadicCube::new(k, vec![0, j]);
                let c = q.cube();
                let d2 = hs.cube_dist2_to_boundary(&c);
                let p = q.parent().cube();
                let pd2 = hs.cube_dist2_to_boundary(&p);
                if 2.0 * s * s <= d2 && 2.0 * p.side * p.side > pd2 {
                    n += 1;
                }
            }
            let per_unit = n << k;
            assert_eq!(counts[&k], per_unit);
            assert_eq!(per_unit, 2 << k);
        }
        for k in 3..9 {
            for x in [0.1, 0.37, 0.5, 0.999] {
                let c = w.vertical_line_count(&hs.windows()[0], k, &[x]);
                assert!(c <= 2);
            }
        }
        assert_eq!(w.vertical_line_count(&hs.windows()[0], 5, &[1.5]), 0);
    }

    #[test]
    fn exterior_square_reflection_matches_exhaustive_search() {
        let sq = PolygonDomain::unit_square();
        let inner = build_whitney(&sq, Side::Interior, 9).unwrap();
        let outer = build_whitney_with(
            &sq,
            Side::Exterior,
            &WhitneyOptions {
                min_level: 6,
                max_side: Some(0.25),
            },
        )
        .unwrap();
        assert!(outer.check_invariants(&sq).distance_ok);
        for i in 0..outer.len() {
            let q = outer.cube(i).cube();
            let d2 = outer.dist2(i);
            let got = inner.reflected_cube(&q, d2).unwrap();
            // exhaustive: largest side, then smallest corner
            let best = (0..inner.len())
                .filter(|&j| inner.cube(j).cube().distance2_to_cube(&q) <= 4.0 * d2)
                .min_by(|&a, &b| {
                    let (qa, qb) = (inner.cube(a), inner.cube(b));
                    qa.level
                        .cmp(&qb.level)
                        .then(qa.corner().partial_cmp(&qb.corner()).unwrap())
                })
                .unwrap();
            assert_eq!(got, best);
            assert!(inner.cube(got).cube().distance2_to_cube(&q) <= 4.0 * d2);
        }
    }

    #[test]
    fn halfspace_reflection_height() {
        let hs = HalfSpace::new(Cube::new(vec![-2.0, -2.0], 4.0));
        let inner = build_whitney(&hs, Side::Interior, 10).unwrap();
        for k in 2..6 {
            let s = dyadic_side(k);
            // exterior Whitney cube directly below the axis at depth t
            let q = Cube::new(vec![0.0, -3.0 * s], s);
            let t = hs.dist_to_boundary(&q.center());
            let j = inner.reflected_cube(&q, hs.cube_dist2_to_boundary(&q)).unwrap();
            let h = inner.cube(j).cube().center()[1];
            assert!(h / t <= 4.0 && t / h <= 4.0, "t = {t}, h = {h}");
        }
    }
}
