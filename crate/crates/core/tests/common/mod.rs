//! Reference implementations shared by the integration tests. They use only
//! the vertex list of a polygon and the raw grid samples, not the library's
//! distance, containment or fitting code.
#![allow(dead_code)]

use zygmund::geometry::{dyadic_side, DyadicCube};

type P = [f64; 2];

fn seg_point_dist2(a: P, b: P, p: P) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (ex, ey) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    ex * ex + ey * ey
}

fn box_point_dist2(lo: P, hi: P, p: P) -> f64 {
    let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
    let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
    dx * dx + dy * dy
}

fn orient(a: P, b: P, c: P) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: P, b: P, p: P) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_meet(a: P, b: P, c: P, d: P) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Squared distance between the closed box `[lo, hi]` and the segment `ab`.
/// For disjoint convex sets the minimum is attained at a vertex of one of them.
pub fn box_segment_dist2(lo: P, hi: P, a: P, b: P) -> f64 {
    if box_point_dist2(lo, hi, a) == 0.0 || box_point_dist2(lo, hi, b) == 0.0 {
        return 0.0;
    }
    let corners = [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    for k in 0..4 {
        if segments_meet(a, b, corners[k], corners[(k + 1) % 4]) {
            return 0.0;
        }
    }
    let mut best = box_point_dist2(lo, hi, a).min(box_point_dist2(lo, hi, b));
    for c in corners {
        best = best.min(seg_point_dist2(a, b, c));
    }
    best
}

/// Even-odd ray casting.
pub fn inside(verts: &[P], p: P) -> bool {
    let mut odd = false;
    let n = verts.len();
    for k in 0..n {
        let (a, b) = (verts[k], verts[(k + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                odd = !odd;
            }
        }
    }
    odd
}

pub fn cube_dist2(verts: &[P], q: &DyadicCube) -> f64 {
    let s = q.side();
    let lo = [q.index[0] as f64 * s, q.index[1] as f64 * s];
    let hi = [lo[0] + s, lo[1] + s];
    let n = verts.len();
    (0..n)
        .map(|k| box_segment_dist2(lo, hi, verts[k], verts[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Interior Whitney cubes of a polygon: maximal dyadic cubes `Q` with centre
/// inside and `diam(Q) <= dist(Q, boundary)`, down to `min_level`. Found by
/// refining from cubes larger than half the bounding box.
pub fn whitney_oracle(verts: &[P], min_level: i32) -> Vec<DyadicCube> {
    let xs = verts.iter().map(|v| v[0]);
    let ys = verts.iter().map(|v| v[1]);
    let (x0, x1) = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.clone().fold(f64::INFINITY, f64::min),
        ys.fold(f64::NEG_INFINITY, f64::max),
    );
    let extent = (x1 - x0).max(y1 - y0);
    let top = (-extent.log2()).floor() as i32;
    let s = dyadic_side(top);
    let mut stack = Vec::new();
    for i in (x0 / s).floor() as i64..=(x1 / s).floor() as i64 {
        for j in (y0 / s).floor() as i64..=(y1 / s).floor() as i64 {
            stack.push(DyadicCube::new(top, vec![i, j]));
        }
    }
    let mut out = Vec::new();
    while let Some(q) = stack.pop() {
        let d2 = cube_dist2(verts, &q);
        let c = q.cube().center();
        if d2 > 0.0 {
            if !inside(verts, [c[0], c[1]]) {
                continue;
            }
            if 2.0 * q.side() * q.side() <= d2 {
                out.push(q);
                continue;
            }
        }
        if q.level < min_level {
            stack.extend(q.children());
        }
    }
    out.sort();
    out
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            for k in c..m {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Least-squares fit of degree `n` in scaled monomials about the cube centre,
/// returning the residuals at the samples.
pub fn ls_residuals(pts: &[(P, f64)], center: P, side: f64, n: u32) -> Vec<f64> {
    let basis: Vec<(i32, i32)> = (0..=n as i32).flat_map(|t| (0..=t).map(move |b| (t - b, b))).collect();
    let phi = |x: P| -> Vec<f64> {
        let u = (x[0] - center[0]) / side;
        let v = (x[1] - center[1]) / side;
        basis.iter().map(|&(a, b)| u.powi(a) * v.powi(b)).collect()
    };
    let m = basis.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut r = vec![0.0; m];
    for &(x, y) in pts {
        let p = phi(x);
        for i in 0..m {
            r[i] += p[i] * y;
            for j in 0..m {
                a[i][j] += p[i] * p[j];
            }
        }
    }
    let c = solve(a, r);
    pts.iter()
        .map(|&(x, y)| y - phi(x).iter().zip(&c).map(|(p, c)| p * c).sum::<f64>())
        .collect()
}

/// Exhaustive seminorm of `f` sampled at the centres of an `cells x cells`
/// grid on `(-1/2, 1/2)^2`: every dyadic and half-shifted dyadic square
/// inside the grid with side between `max(4, n + 2) h` and `2^-max_level` (at most
/// 1), mean absolute residual over `omega(side)`.
pub fn square_seminorm_oracle<F: Fn(P) -> f64, W: Fn(f64) -> f64>(
    f: F,
    cells: usize,
    n: u32,
    max_level: i32,
    omega: W,
) -> f64 {
    let h = 1.0 / cells as f64;
    let vals: Vec<f64> = (0..cells * cells)
        .map(|k| {
            f([
                -0.5 + ((k % cells) as f64 + 0.5) * h,
                -0.5 + ((k / cells) as f64 + 0.5) * h,
            ])
        })
        .collect();
    let mut best: f64 = 0.0;
    for level in 0..=max_level {
        let m = cells >> level;
        if m < 4.max(n as usize + 2) {
            break;
        }
        let l = dyadic_side(level);
        // corners in cell units, dyadic and shifted by half a side
        let step = m / 2;
        for cj in (0..=cells - m).step_by(step) {
            for ci in (0..=cells - m).step_by(step) {
                let pts: Vec<(P, f64)> = (cj..cj + m)
                    .flat_map(|j| (ci..ci + m).map(move |i| (i, j)))
                    .map(|(i, j)| {
                        (
                            [-0.5 + (i as f64 + 0.5) * h, -0.5 + (j as f64 + 0.5) * h],
                            vals[j * cells + i],
                        )
                    })
                    .collect();
                let c = [
                    -0.5 + (ci as f64 + m as f64 / 2.0) * h,
                    -0.5 + (cj as f64 + m as f64 / 2.0) * h,
                ];
                let res = ls_residuals(&pts, c, l, n);
                let mean = res.iter().map(|r| r.abs()).sum::<f64>() / res.len() as f64;
                best = best.max(mean / omega(l));
            }
        }
    }
    best
}
