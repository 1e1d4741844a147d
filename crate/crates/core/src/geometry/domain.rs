use std::path::Path;

use serde::Serialize;

use super::bvh::{SegmentBvh, P2};
use super::cube::Cube;
use crate::error::{Error, Result};

/// An R-window: a cube in which the boundary is the graph of a Lipschitz
/// function over the coordinates other than `vertical_axis`.
#[derive(Clone, Debug, Serialize)]
pub struct Window {
    pub cube: Cube,
    pub vertical_axis: usize,
    pub delta: f64,
}

/// A bounded open set (or a half-space) with an exact distance oracle.
pub trait Domain: Sync + Send {
    fn dim(&self) -> usize;

    /// Membership in the open set.
    fn contains(&self, x: &[f64]) -> bool;

    fn dist_to_boundary(&self, x: &[f64]) -> f64;

    /// Squared set distance from the closed cube to the boundary.
    fn cube_dist2_to_boundary(&self, q: &Cube) -> f64;

    /// `|D ∩ Q|`.
    fn volume_in(&self, q: &Cube) -> f64;

    /// Volume of `D` inside its bounding box.
    fn volume(&self) -> f64;

    fn bounding_box(&self) -> Cube;

    /// Lipschitz character `(delta, R)`.
    fn lipschitz(&self) -> (f64, f64);

    fn windows(&self) -> &[Window];

    fn as_polygon(&self) -> Option<&PolygonDomain> {
        None
    }
}

/// Planar domain bounded by a simple closed polyline, stored counter-clockwise.
#[derive(Clone, Debug)]
pub struct PolygonDomain {
    verts: Vec<P2>,
    bvh: SegmentBvh,
    bbox: Cube,
    area: f64,
    delta: f64,
    window: f64,
    windows: Vec<Window>,
}

pub fn signed_area(verts: &[P2]) -> f64 {
    let n = verts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

/// Sutherland-Hodgman clip of a polygon against an axis-parallel box.
///
/// For non-convex input the result may contain degenerate bridge edges along
/// the box boundary; area and boundary integrals are unaffected.
pub fn clip_to_box(poly: &[P2], lo: P2, hi: P2) -> Vec<P2> {
    let mut out: Vec<P2> = poly.to_vec();
    for axis in 0..2 {
        for (bound, keep_above) in [(lo[axis], true), (hi[axis], false)] {
            if out.is_empty() {
                return out;
            }
            let input = std::mem::take(&mut out);
            let inside = |p: &P2| {
                if keep_above {
                    p[axis] >= bound
                } else {
                    p[axis] <= bound
                }
            };
            let n = input.len();
            for i in 0..n {
                let cur = input[i];
                let prev = input[(i + n - 1) % n];
                let (ci, pi) = (inside(&cur), inside(&prev));
                if ci != pi {
                    let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                    let mut p = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])];
                    p[axis] = bound;
                    out.push(p);
                }
                if ci {
                    out.push(cur);
                }
            }
        }
    }
    out
}

impl PolygonDomain {
    /// Builds a domain from distinct vertices (no repeated closing vertex).
    pub fn new(mut verts: Vec<P2>) -> Result<Self> {
        if verts.len() < 3 {
            return Err(Error::Precondition(format!(
                "polygon needs at least 3 vertices, got {}",
                verts.len()
            )));
        }
        let a = signed_area(&verts);
        if a == 0.0 || !a.is_finite() {
            return Err(Error::Precondition("polygon has zero area".into()));
        }
        if a < 0.0 {
            verts.reverse();
        }
        let n = verts.len();
        let segs = (0..n).map(|i| (verts[i], verts[(i + 1) % n])).collect();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &verts {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        Ok(PolygonDomain {
            bvh: SegmentBvh::new(segs),
            bbox: Cube::centered(&c, side),
            area: a.abs(),
            verts,
            delta: 1.0,
            window: side / 4.0,
            windows: Vec::new(),
        })
    }

    pub fn with_lipschitz(mut self, delta: f64, window: f64) -> Self {
        self.delta = delta;
        self.window = window;
        self
    }

    pub fn with_windows(mut self, windows: Vec<Window>) -> Self {
        self.windows = windows;
        self
    }

    /// Open square `(-1/2, 1/2)^2`.
    pub fn unit_square() -> Self {
        let h = 0.5;
        let r = 0.25;
        let win = |c: [f64; 2], axis: usize| Window {
            cube: Cube::centered(&c, r),
            vertical_axis: axis,
            delta: 0.0,
        };
        PolygonDomain::new(vec![[-h, -h], [h, -h], [h, h], [-h, h]])
            .expect("square is a valid polygon")
            .with_lipschitz(1.0, r)
            .with_windows(vec![
                win([0.0, -h], 1),
                win([0.0, h], 1),
                win([-h, 0.0], 0),
                win([h, 0.0], 0),
            ])
    }

    /// Regular polygon with `segments` edges inscribed in the unit circle.
    pub fn disc(segments: usize) -> Self {
        let verts = (0..segments)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / segments as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        let r = 0.25;
        // Near the bottom point the circle is a graph over x with slope below
        // 1/sqrt(63) on a window of half-width 1/8.
        PolygonDomain::new(verts)
            .expect("disc is a valid polygon")
            .with_lipschitz(1.0, r)
            .with_windows(vec![Window {
                cube: Cube::centered(&[0.0, -1.0], r),
                vertical_axis: 1,
                delta: 0.13,
            }])
    }

    /// Square `(-1/2, 1/2)^2` whose bottom edge is a zigzag of slope 1/2.
    pub fn sawtooth() -> Self {
        let h = 0.5;
        let teeth = 8;
        let mut verts = Vec::new();
        for i in 0..=2 * teeth {
            let x = -h + i as f64 / (2 * teeth) as f64;
            let y = if i % 2 == 0 { -h } else { -h + 1.0 / 32.0 };
            verts.push([x, y]);
        }
        verts.push([h, h]);
        verts.push([-h, h]);
        let r = 0.25;
        PolygonDomain::new(verts)
            .expect("sawtooth is a valid polygon")
            .with_lipschitz(0.5, r)
            .with_windows(vec![Window {
                cube: Cube::centered(&[0.0, -h + 1.0 / 64.0], r),
                vertical_axis: 1,
                delta: 0.5,
            }])
    }

    /// Parses a closed polyline: one `x y` pair per line, last vertex equal to
    /// the first. Blank lines and `#` comments are ignored. Optional header
    /// lines `delta <value>` and `window <value>` set the Lipschitz character.
    pub fn parse(text: &str) -> Result<Self> {
        let mut verts: Vec<P2> = Vec::new();
        let mut delta = None;
        let mut window = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .collect();
            let num = |t: &str| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: ln + 1,
                    msg: format!("not a number: {t}"),
                })
            };
            match toks.as_slice() {
                ["delta", v] => delta = Some(num(v)?),
                ["window", v] => window = Some(num(v)?),
                [x, y] => verts.push([num(x)?, num(y)?]),
                _ => {
                    return Err(Error::Parse {
                        line: ln + 1,
                        msg: format!("expected `x y`, got `{line}`"),
                    })
                }
            }
        }
        if verts.len() < 2 || verts.first() != verts.last() {
            return Err(Error::Parse {
                line: 0,
                msg: "open polyline: last vertex must repeat the first".into(),
            });
        }
        verts.pop();
        let mut dom = PolygonDomain::new(verts)?;
        if let Some(d) = delta {
            dom.delta = d;
        }
        if let Some(w) = window {
            dom.window = w;
        }
        Ok(dom)
    }

    pub fn load(path: &Path) -> Result<Self> {
        PolygonDomain::parse(&std::fs::read_to_string(path)?)
    }

    pub fn vertices(&self) -> &[P2] {
        &self.verts
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Polygon `D ∩ box` (counter-clockwise, possibly with bridge edges).
    pub fn clip(&self, lo: P2, hi: P2) -> Vec<P2> {
        clip_to_box(&self.verts, lo, hi)
    }

    pub fn box_dist2(&self, lo: P2, hi: P2) -> f64 {
        self.bvh.box_dist2(lo, hi)
    }
}

impl Domain for PolygonDomain {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, x: &[f64]) -> bool {
        let p = [x[0], x[1]];
        self.bvh.ray_parity(p) && self.bvh.point_dist2(p) > 0.0
    }

    fn dist_to_boundary(&self, x: &[f64]) -> f64 {
        self.bvh.point_dist2([x[0], x[1]]).sqrt()
    }

    fn cube_dist2_to_boundary(&self, q: &Cube) -> f64 {
        let lo = [q.corner[0], q.corner[1]];
        self.bvh.box_dist2(lo, [lo[0] + q.side, lo[1] + q.side])
    }

    fn volume_in(&self, q: &Cube) -> f64 {
        let lo = [q.corner[0], q.corner[1]];
        let hi = [lo[0] + q.side, lo[1] + q.side];
        if self.bvh.box_dist2(lo, hi) > 0.0 {
            return if self.contains(&q.center()) { q.volume() } else { 0.0 };
        }
        signed_area(&self.clip(lo, hi)).abs()
    }

    fn volume(&self) -> f64 {
        self.area
    }

    fn bounding_box(&self) -> Cube {
        self.bbox.clone()
    }

    fn lipschitz(&self) -> (f64, f64) {
        (self.delta, self.window)
    }

    fn windows(&self) -> &[Window] {
        &self.windows
    }

    fn as_polygon(&self) -> Option<&PolygonDomain> {
        Some(self)
    }
}

/// `{x : x_{d-1} > 0}` restricted to a window cube for bookkeeping.
#[derive(Clone, Debug)]
pub struct HalfSpace {
    window: Cube,
    windows: Vec<Window>,
}

impl HalfSpace {
    pub fn new(window: Cube) -> Self {
        let axis = window.dim() - 1;
        HalfSpace {
            windows: vec![Window {
                cube: window.clone(),
                vertical_axis: axis,
                delta: 0.0,
            }],
            window,
        }
    }

    fn axis(&self) -> usize {
        self.window.dim() - 1
    }
}

impl Domain for HalfSpace {
    fn dim(&self) -> usize {
        self.window.dim()
    }

    fn contains(&self, x: &[f64]) -> bool {
        x[self.axis()] > 0.0
    }

    fn dist_to_boundary(&self, x: &[f64]) -> f64 {
        x[self.axis()].abs()
    }

    fn cube_dist2_to_boundary(&self, q: &Cube) -> f64 {
        let a = self.axis();
        let lo = q.corner[a];
        let hi = lo + q.side;
        let g = if lo > 0.0 {
            lo
        } else if hi < 0.0 {
            -hi
        } else {
            0.0
        };
        g * g
    }

    fn volume_in(&self, q: &Cube) -> f64 {
        let a = self.axis();
        let lo = q.corner[a].max(0.0);
        let hi = q.corner[a] + q.side;
        let h = (hi - lo).max(0.0);
        h * q.side.powi(q.dim() as i32 - 1)
    }

    fn volume(&self) -> f64 {
        self.volume_in(&self.window)
    }

    fn bounding_box(&self) -> Cube {
        self.window.clone()
    }

    fn lipschitz(&self) -> (f64, f64) {
        (0.0, self.window.side)
    }

    fn windows(&self) -> &[Window] {
        &self.windows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_distances() {
        let sq = PolygonDomain::unit_square();
        assert_eq!(sq.dist_to_boundary(&[0.0, 0.0]), 0.5);
        assert_eq!(sq.dist_to_boundary(&[0.5, 0.1]), 0.0);
        assert!(!sq.contains(&[0.5, 0.1]));
        assert!(sq.contains(&[0.49, 0.1]));
        assert!(!sq.contains(&[0.51, 0.1]));
        assert_eq!(sq.volume(), 1.0);
    }

    #[test]
    fn disc_center_distance_is_apothem() {
        let n = 4096;
        let disc = PolygonDomain::disc(n);
        let apothem = (std::f64::consts::PI / n as f64).cos();
        let d = disc.dist_to_boundary(&[0.0, 0.0]);
        assert!((d - apothem).abs() < 1e-14);
        // chord error of the polyline against the unit circle
        assert!(1.0 - d <= 1.0 - apothem + 1e-15);
        assert!(1.0 - d < 3e-7);
    }

    #[test]
    fn clip_area_nonconvex() {
        // L-shape, area 3
        let l = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        let dom = PolygonDomain::new(l).unwrap();
        assert_eq!(dom.area(), 3.0);
        let q = Cube::new(vec![0.5, 0.5], 1.0);
        assert!((dom.volume_in(&q) - 0.75).abs() < 1e-15);
        let far = Cube::new(vec![1.25, 1.25], 0.5);
        assert_eq!(dom.volume_in(&far), 0.0);
    }

    #[test]
    fn parse_rejects_open_polyline() {
        let open = "0 0\n1 0\n1 1\n0 1\n";
        assert!(matches!(PolygonDomain::parse(open), Err(Error::Parse { .. })));
        let closed = "# square\ndelta 0.5\n0 0\n1 0\n1 1\n0 1\n0 0\n";
        let d = PolygonDomain::parse(closed).unwrap();
        assert_eq!(d.vertices().len(), 4);
        assert_eq!(d.lipschitz().0, 0.5);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let d = PolygonDomain::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(signed_area(d.vertices()) > 0.0);
    }

    #[test]
    fn sawtooth_area() {
        let s = PolygonDomain::sawtooth();
        // eight teeth of height 1/32 and width 1/8 removed from the square
        assert!((s.area() - (1.0 - 8.0 * 0.5 * 0.125 / 32.0)).abs() < 1e-15);
    }

    #[test]
    fn halfspace_oracles() {
        let hs = HalfSpace::new(Cube::new(vec![0.0, -0.5], 1.0));
        assert_eq!(hs.dist_to_boundary(&[0.3, -0.25]), 0.25);
        assert_eq!(hs.volume(), 0.5);
        assert_eq!(hs.cube_dist2_to_boundary(&Cube::new(vec![0.0, 0.25], 0.25)), 0.0625);
    }
}
