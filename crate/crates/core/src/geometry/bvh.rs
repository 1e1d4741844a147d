//! Bounding-volume hierarchy over the edges of a closed polyline.
//!
//! Supports exact point and box distance queries and ray-crossing parity.

pub type P2 = [f64; 2];

const LEAF: usize = 4;

#[derive(Clone, Debug)]
struct Node {
    lo: P2,
    hi: P2,
    // leaf: start..start+count into `order`; inner: children at `left`, `left + 1`
    start: usize,
    count: usize,
    left: usize,
}

#[derive(Clone, Debug)]
pub struct SegmentBvh {
    segs: Vec<(P2, P2)>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

fn box_of(segs: &[(P2, P2)], ids: &[usize]) -> (P2, P2) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &i in ids {
        let (a, b) = segs[i];
        for k in 0..2 {
            lo[k] = lo[k].min(a[k]).min(b[k]);
            hi[k] = hi[k].max(a[k]).max(b[k]);
        }
    }
    (lo, hi)
}

pub fn point_segment_dist2(p: P2, a: P2, b: P2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        ((w[0] * d[0] + w[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let e = [w[0] - t * d[0], w[1] - t * d[1]];
    e[0] * e[0] + e[1] * e[1]
}

pub fn point_box_dist2(p: P2, lo: P2, hi: P2) -> f64 {
    let mut s = 0.0;
    for k in 0..2 {
        let g = (lo[k] - p[k]).max(p[k] - hi[k]).max(0.0);
        s += g * g;
    }
    s
}

fn box_box_dist2(alo: P2, ahi: P2, blo: P2, bhi: P2) -> f64 {
    let mut s = 0.0;
    for k in 0..2 {
        let g = (blo[k] - ahi[k]).max(alo[k] - bhi[k]).max(0.0);
        s += g * g;
    }
    s
}

/// Liang-Barsky: does segment `ab` meet the closed box?
pub fn segment_hits_box(a: P2, b: P2, lo: P2, hi: P2) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for k in 0..2 {
        let d = b[k] - a[k];
        if d == 0.0 {
            if a[k] < lo[k] || a[k] > hi[k] {
                return false;
            }
        } else {
            let mut ta = (lo[k] - a[k]) / d;
            let mut tb = (hi[k] - a[k]) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Exact squared distance between a segment and a closed box.
pub fn segment_box_dist2(a: P2, b: P2, lo: P2, hi: P2) -> f64 {
    if segment_hits_box(a, b, lo, hi) {
        return 0.0;
    }
    // Disjoint convex sets: the minimum is attained at an endpoint of the
    // segment or at a corner of the box.
    let mut best = point_box_dist2(a, lo, hi).min(point_box_dist2(b, lo, hi));
    for c in [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]] {
        best = best.min(point_segment_dist2(c, a, b));
    }
    best
}

impl SegmentBvh {
    pub fn new(segs: Vec<(P2, P2)>) -> Self {
        let mut bvh = SegmentBvh {
            order: (0..segs.len()).collect(),
            segs,
            nodes: Vec::new(),
        };
        if !bvh.segs.is_empty() {
            bvh.nodes.push(Node {
                lo: [0.0; 2],
                hi: [0.0; 2],
                start: 0,
                count: 0,
                left: 0,
            });
            bvh.build(0, 0, bvh.segs.len());
        }
        bvh
    }

    fn build(&mut self, node: usize, start: usize, end: usize) {
        let (lo, hi) = box_of(&self.segs, &self.order[start..end]);
        self.nodes[node].lo = lo;
        self.nodes[node].hi = hi;
        if end - start <= LEAF {
            self.nodes[node].start = start;
            self.nodes[node].count = end - start;
            return;
        }
        let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
        let segs = &self.segs;
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            let ci = segs[i].0[axis] + segs[i].1[axis];
            let cj = segs[j].0[axis] + segs[j].1[axis];
            ci.total_cmp(&cj)
        });
        let left = self.nodes.len();
        for _ in 0..2 {
            self.nodes.push(Node {
                lo: [0.0; 2],
                hi: [0.0; 2],
                start: 0,
                count: 0,
                left: 0,
            });
        }
        self.nodes[node].left = left;
        self.build(left, start, mid);
        self.build(left + 1, mid, end);
    }

    pub fn segments(&self) -> &[(P2, P2)] {
        &self.segs
    }

    pub fn point_dist2(&self, p: P2) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if point_box_dist2(p, node.lo, node.hi) >= best {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let (a, b) = self.segs[i];
                    best = best.min(point_segment_dist2(p, a, b));
                }
            } else {
                // visit the nearer child first
                let (l, r) = (node.left, node.left + 1);
                let dl = point_box_dist2(p, self.nodes[l].lo, self.nodes[l].hi);
                let dr = point_box_dist2(p, self.nodes[r].lo, self.nodes[r].hi);
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }

    pub fn box_dist2(&self, lo: P2, hi: P2) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if box_box_dist2(lo, hi, node.lo, node.hi) >= best {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let (a, b) = self.segs[i];
                    best = best.min(segment_box_dist2(a, b, lo, hi));
                    if best == 0.0 {
                        return 0.0;
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.left + 1);
            }
        }
        best
    }

    /// Parity of crossings of the ray `p + t e_x`, `t > 0`.
    pub fn ray_parity(&self, p: P2) -> bool {
        let mut inside = false;
        if self.nodes.is_empty() {
            return inside;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.hi[0] < p[0] || node.lo[1] > p[1] || node.hi[1] < p[1] {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let (a, b) = self.segs[i];
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if x > p[0] {
                            inside = !inside;
                        }
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.left + 1);
            }
        }
        inside
    }
}
