use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{dyadic_side, Cube, DyadicCube, WhitneyCovering};

/// Half-width of the plateau and of the support, in units of the side.
pub const PLATEAU: f64 = 0.4;
pub const SUPPORT: f64 = 0.625;

/// `C^k` smoothstep on `[0, 1]`: `u^{k+1} sum_j C(k + j, j) (1 - u)^j`.
pub fn smoothstep(k: u32, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let mut s = 0.0;
    let mut binom = 1.0;
    let v = 1.0 - u;
    let mut vp = 1.0;
    for j in 0..=k {
        if j > 0 {
            binom *= f64::from(k + j) / f64::from(j);
            vp *= v;
        }
        s += binom * vp;
    }
    u.powi(k as i32 + 1) * s
}

/// Product template: 1 on `4/5 Q`, 0 off `5/4 Q`, a smoothstep of order
/// `order` across the gap along each axis.
#[derive(Clone, Debug)]
pub struct BumpFunction {
    pub cube: Cube,
    pub order: u32,
}

impl BumpFunction {
    pub fn new(cube: Cube, order: u32) -> Self {
        BumpFunction { cube, order }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        template(&self.cube.center(), self.cube.side, self.order, x)
    }
}

fn template(center: &[f64], side: f64, order: u32, x: &[f64]) -> f64 {
    let mut v = 1.0;
    for (&c, &xi) in center.iter().zip(x) {
        let t = (xi - c).abs() / side;
        if t >= SUPPORT {
            return 0.0;
        }
        if t > PLATEAU {
            v *= smoothstep(order, (SUPPORT - t) / (SUPPORT - PLATEAU));
        }
    }
    v
}

/// Bumps of the exterior cubes up to a side cap, normalized by their
/// pointwise sum.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    order: u32,
    cubes: Vec<Cube>,
    /// Index of each bump's cube in the source covering.
    source: Vec<usize>,
    levels: Vec<i32>,
    lookup: HashMap<DyadicCube, usize>,
}

/// Partition of unity over the cubes of `w` with side at most `max_side`.
pub fn partition_of_unity(w: &WhitneyCovering, order: u32, max_side: f64) -> Result<PartitionOfUnity> {
    let ids = (0..w.len()).filter(|&i| w.cube(i).side() <= max_side);
    PartitionOfUnity::build(ids.map(|i| (i, w.cube(i).clone())), order)
}

impl PartitionOfUnity {
    /// Bumps over an arbitrary family of disjoint dyadic cubes, tagged by
    /// caller-chosen ids.
    pub fn build(cubes: impl IntoIterator<Item = (usize, DyadicCube)>, order: u32) -> Result<Self> {
        let mut pou = PartitionOfUnity {
            order,
            cubes: Vec::new(),
            source: Vec::new(),
            levels: Vec::new(),
            lookup: HashMap::new(),
        };
        for (id, q) in cubes {
            if !pou.levels.contains(&q.level) {
                pou.levels.push(q.level);
            }
            pou.lookup.insert(q.clone(), pou.cubes.len());
            pou.cubes.push(q.cube());
            pou.source.push(id);
        }
        pou.levels.sort_unstable();
        pou.check()?;
        Ok(pou)
    }

    fn check(&self) -> Result<()> {
        for (k, q) in self.cubes.iter().enumerate() {
            let corners = (0..1usize << q.dim()).map(|m| {
                (0..q.dim())
                    .map(|a| q.corner[a] + if (m >> a) & 1 == 1 { q.side } else { 0.0 })
                    .collect::<Vec<f64>>()
            });
            for x in corners.chain(std::iter::once(q.center())) {
                if !(self.raw_sum(&x) > 0.0) {
                    return Err(Error::CoveringDefect(format!(
                        "bump sum vanishes at {x:?} in exterior cube {k}"
                    )));
                }
            }
        }
        Ok(())
    }
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn cube(&self, i: usize) -> &Cube {
        &self.cubes[i]
    }

    pub fn source(&self, i: usize) -> usize {
        self.source[i]
    }

    pub fn bump(&self, i: usize) -> BumpFunction {
        BumpFunction::new(self.cubes[i].clone(), self.order)
    }

    /// Unnormalized template value of bump `i`.
    pub fn raw(&self, i: usize, x: &[f64]) -> f64 {
        let q = &self.cubes[i];
        template(&q.center(), q.side, self.order, x)
    }

    /// Bumps whose cube lies within `reach` lattice steps of the cell
    /// containing `x`, on every level.
    pub fn nearby(&self, x: &[f64], reach: i64) -> Vec<usize> {
        let d = x.len();
        let w = (2 * reach + 1) as usize;
        let mut out = Vec::new();
        for &l in &self.levels {
            let s = dyadic_side(l);
            let base: Vec<i64> = x.iter().map(|&v| (v / s).floor() as i64).collect();
            for m in 0..w.pow(d as u32) {
                let mut r = m;
                let idx: Vec<i64> = base
                    .iter()
                    .map(|&b| {
                        let o = (r % w) as i64 - reach;
                        r /= w;
                        b + o
                    })
                    .collect();
                if let Some(&i) = self.lookup.get(&DyadicCube::new(l, idx)) {
                    out.push(i);
                }
            }
        }
        out
    }

    /// Bumps whose support contains `x`, with raw values.
    pub fn active(&self, x: &[f64]) -> Vec<(usize, f64)> {
        self.nearby(x, 1)
            .into_iter()
            .filter_map(|i| {
                let v = self.raw(i, x);
                (v > 0.0).then_some((i, v))
            })
            .collect()
    }

    pub fn raw_sum(&self, x: &[f64]) -> f64 {
        self.active(x).iter().map(|&(_, v)| v).sum()
    }

    /// Normalized values `psi_Q(x)` of all bumps nonzero at `x`.
    pub fn values(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut a = self.active(x);
        let s: f64 = a.iter().map(|&(_, v)| v).sum();
        for (_, v) in a.iter_mut() {
            *v /= s;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_ends_and_symmetry() {
        for k in 0..5 {
            assert_eq!(smoothstep(k, 0.0), 0.0);
            assert_eq!(smoothstep(k, 1.0), 1.0);
            for u in [0.1, 0.3, 0.5] {
                assert!((smoothstep(k, u) + smoothstep(k, 1.0 - u) - 1.0).abs() < 1e-14);
            }
        }
        // order 1 is the cubic 3u^2 - 2u^3
        assert!((smoothstep(1, 0.25) - (3.0 / 16.0 - 2.0 / 64.0)).abs() < 1e-15);
    }

    #[test]
    fn smoothstep_flat_ends() {
        // k-th order contact with 0 and 1: S(u) = O(u^{k+1}).
        let k = 4;
        let u = 1e-3;
        assert!(smoothstep(k, u) < 200.0 * u.powi(k as i32 + 1));
        assert!(1.0 - smoothstep(k, 1.0 - u) < 200.0 * u.powi(k as i32 + 1));
    }

    #[test]
    fn template_plateau_and_support() {
        let b = BumpFunction::new(Cube::new(vec![0.0, 0.0], 1.0), 3);
        assert_eq!(b.eval(&[0.5 + 0.4, 0.5 - 0.4]), 1.0);
        assert_eq!(b.eval(&[0.5, 0.5 + 0.625]), 0.0);
        assert_eq!(b.eval(&[-0.2, 0.5]), 0.0);
        let v = b.eval(&[0.5, 1.0]);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn isolated_cube_is_one_on_plateau() {
        let pou = PartitionOfUnity::build([(7, DyadicCube::new(2, vec![1, -1]))], 4).unwrap();
        assert_eq!(pou.source(0), 7);
        for x in [[0.3, -0.2], [0.26, -0.05], [0.49, -0.24]] {
            let v = pou.values(&x);
            assert_eq!(v.len(), 1);
            assert_eq!(v[0].1, 1.0);
        }
        assert!(pou.values(&[0.25 + 0.25 * 1.3, -0.1]).is_empty());
    }

    #[test]
    fn neighbours_sum_to_one() {
        let cubes = [
            DyadicCube::new(1, vec![0, 0]),
            DyadicCube::new(2, vec![2, 0]),
            DyadicCube::new(2, vec![2, 1]),
            DyadicCube::new(2, vec![3, 0]),
            DyadicCube::new(2, vec![3, 1]),
        ];
        let pou = PartitionOfUnity::build(cubes.into_iter().enumerate(), 3).unwrap();
        for x in [[0.45, 0.1], [0.5, 0.25], [0.55, 0.3], [0.74, 0.49]] {
            let s: f64 = pou.values(&x).iter().map(|v| v.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
