use serde::Serialize;

/// Closed axis-parallel cube `corner + [0, side]^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cube {
    pub corner: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(corner: Vec<f64>, side: f64) -> Self {
        assert!(side > 0.0, "cube side must be positive, got {side}");
        Cube { corner, side }
    }

    pub fn centered(center: &[f64], side: f64) -> Self {
        Cube::new(center.iter().map(|c| c - 0.5 * side).collect(), side)
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.corner.iter().map(|c| c + 0.5 * self.side).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.corner.iter().map(|c| c + self.side).collect()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn diam(&self) -> f64 {
        self.side * (self.dim() as f64).sqrt()
    }

    /// `sQ`: same center, side `s * side`.
    pub fn scaled(&self, s: f64) -> Cube {
        Cube::centered(&self.center(), s * self.side)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.corner
            .iter()
            .zip(x)
            .all(|(&c, &xi)| xi >= c && xi <= c + self.side)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        self.corner
            .iter()
            .zip(&other.corner)
            .all(|(&a, &b)| b >= a && b + other.side <= a + self.side)
    }

    pub fn distance_to_point(&self, x: &[f64]) -> f64 {
        self.corner
            .iter()
            .zip(x)
            .map(|(&c, &xi)| {
                let g = (c - xi).max(xi - c - self.side).max(0.0);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance_to_cube(&self, other: &Cube) -> f64 {
        self.distance2_to_cube(other).sqrt()
    }

    /// Squared distance; exact for dyadic coordinates.
    pub fn distance2_to_cube(&self, other: &Cube) -> f64 {
        self.corner
            .iter()
            .zip(&other.corner)
            .map(|(&a, &b)| {
                let g = (b - (a + self.side)).max(a - (b + other.side)).max(0.0);
                g * g
            })
            .sum::<f64>()
    }

    /// Open interiors intersect.
    pub fn interiors_overlap(&self, other: &Cube) -> bool {
        self.corner
            .iter()
            .zip(&other.corner)
            .all(|(&a, &b)| a < b + other.side && b < a + self.side)
    }

    /// Closures meet but interiors are disjoint.
    pub fn touches(&self, other: &Cube) -> bool {
        self.distance_to_cube(other) == 0.0 && !self.interiors_overlap(other)
    }
}

/// `prod_i [index_i 2^-level, (index_i + 1) 2^-level)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: Vec<i64>,
}

/// `2^-level`, exact for any level representable in f64.
pub fn dyadic_side(level: i32) -> f64 {
    2f64.powi(-level)
}

impl DyadicCube {
    pub fn new(level: i32, index: Vec<i64>) -> Self {
        DyadicCube { level, index }
    }

    /// The dyadic cube of the given level whose half-open box contains `x`.
    pub fn containing(level: i32, x: &[f64]) -> Self {
        let inv = dyadic_side(-level);
        DyadicCube::new(level, x.iter().map(|&xi| (xi * inv).floor() as i64).collect())
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        dyadic_side(self.level)
    }

    pub fn corner(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&i| i as f64 * s).collect()
    }

    pub fn cube(&self) -> Cube {
        Cube::new(self.corner(), self.side())
    }

    pub fn parent(&self) -> DyadicCube {
        self.ancestor(self.level - 1)
    }

    /// Ancestor at a coarser (or equal) level.
    pub fn ancestor(&self, level: i32) -> DyadicCube {
        debug_assert!(level <= self.level);
        let shift = (self.level - level) as u32;
        DyadicCube::new(level, self.index.iter().map(|&i| i >> shift).collect())
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let index = self
                    .index
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| 2 * i + ((mask >> k) & 1) as i64)
                    .collect();
                DyadicCube::new(self.level + 1, index)
            })
            .collect()
    }

    /// Nested-or-equal test: `other` lies inside `self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }
}
