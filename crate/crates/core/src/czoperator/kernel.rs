use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyapprox::MultiIndex;

/// Even, degree `-2` homogeneous planar kernels `K(x) = Omega(x) / |x|^2`.
///
/// Each is `a C + b S` with `C = -cos(2 theta) / (pi r^2)` and
/// `S = -sin(2 theta) / (pi r^2)`; note `C - i S = -1 / (pi z^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kernel {
    BeurlingReal,
    BeurlingImag,
    /// `x_i x_j / |x|^4 - delta_ij / (2 |x|^2)`, indices 1-based.
    Riesz2 {
        i: usize,
        j: usize,
    },
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::BeurlingReal => write!(f, "beurling_real"),
            Kernel::BeurlingImag => write!(f, "beurling_imag"),
            Kernel::Riesz2 { i, j } => write!(f, "riesz2({i},{j})"),
        }
    }
}

/// Pointwise kernel diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct KernelCheck {
    pub kernel: String,
    pub sphere_mean: f64,
    /// `max |lambda^2 K(lambda x) - K(x)|` over sampled rays and dilations.
    pub homogeneity_error: f64,
    pub even: bool,
    /// Fitted `d log |grad^j K| / d log |x|` for `j = 0..=max_order`.
    pub decay_exponents: Vec<f64>,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [
        Kernel::BeurlingReal,
        Kernel::BeurlingImag,
        Kernel::Riesz2 { i: 1, j: 1 },
        Kernel::Riesz2 { i: 1, j: 2 },
        Kernel::Riesz2 { i: 2, j: 2 },
    ];

    /// `beurling_real`, `beurling_imag`, `riesz2(i,j)` or `riesz2:i,j`.
    pub fn parse(s: &str) -> Result<Kernel> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "beurling_real" | "beurling" => return Ok(Kernel::BeurlingReal),
            "beurling_imag" => return Ok(Kernel::BeurlingImag),
            _ => {}
        }
        let args = t
            .strip_prefix("riesz2")
            .map(|r| r.trim_start_matches([':', '(']).trim_end_matches(')'))
            .ok_or_else(|| Error::Precondition(format!("unknown kernel '{s}'")))?;
        let idx: Vec<usize> = args
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Precondition(format!("bad riesz2 indices in '{s}'")))?;
        match idx.as_slice() {
            &[i, j] if (1..=2).contains(&i) && (1..=2).contains(&j) => Ok(Kernel::Riesz2 {
                i: i.min(j),
                j: i.max(j),
            }),
            _ => Err(Error::Precondition(format!("riesz2 needs indices in 1..=2, got '{s}'"))),
        }
    }

    pub fn is_even(&self) -> bool {
        true
    }

    /// Derivative order available; the shipped kernels are smooth off the
    /// origin and this caps what the Taylor machinery is asked for.
    pub fn smoothness(&self) -> u32 {
        8
    }

    /// Coefficients `(a, b)` of `K = a C + b S`.
    pub fn mix(&self) -> (f64, f64) {
        match *self {
            Kernel::BeurlingReal => (1.0, 0.0),
            Kernel::BeurlingImag => (0.0, 1.0),
            Kernel::Riesz2 { i: 1, j: 1 } => (-PI / 2.0, 0.0),
            Kernel::Riesz2 { i: 2, j: 2 } => (PI / 2.0, 0.0),
            Kernel::Riesz2 { .. } => (0.0, -PI / 2.0),
        }
    }

    /// Angular part `Omega(theta)`.
    pub fn omega(&self, theta: f64) -> f64 {
        let (a, b) = self.mix();
        -(a * (2.0 * theta).cos() + b * (2.0 * theta).sin()) / PI
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let (a, b) = self.mix();
        -(a * (x[0] * x[0] - x[1] * x[1]) + b * 2.0 * x[0] * x[1]) / (PI * r2 * r2)
    }

    /// Value of `K` read off a complex `-1 / (pi z^2)` quantity.
    pub fn from_complex(&self, z: Complex64) -> f64 {
        let (a, b) = self.mix();
        a * z.re - b * z.im
    }

    /// Analytic `d^mu K(x)`: with `B = -1/(pi z^2)` holomorphic,
    /// `d_x^p d_y^q B = i^q B^{(p+q)}`.
    pub fn derivative(&self, x: &[f64], mu: &MultiIndex) -> f64 {
        self.from_complex(beurling_derivative(x, mu.0[0], mu.0[1]))
    }

    /// Mean of `Omega` over the circle, trapezoid rule on 4096 nodes (exact
    /// for trigonometric polynomials of lower degree).
    pub fn sphere_mean(&self) -> f64 {
        let m = 4096;
        (0..m).map(|k| self.omega(2.0 * PI * k as f64 / m as f64)).sum::<f64>() / m as f64
    }

    pub fn check(&self, max_order: u32) -> KernelCheck {
        let mut hom: f64 = 0.0;
        let mut even = true;
        for k in 0..64 {
            let t = 2.0 * PI * (k as f64 + 0.37) / 64.0;
            let x = [t.cos(), t.sin()];
            let k0 = self.eval(&x);
            even &= self.eval(&[-x[0], -x[1]]) == k0;
            for lambda in [1e-3, 0.1, 3.0, 250.0] {
                let v = lambda * lambda * self.eval(&[lambda * x[0], lambda * x[1]]);
                hom = hom.max((v - k0).abs());
            }
        }
        let decay_exponents = (0..=max_order).map(|j| self.decay_exponent(j)).collect();
        KernelCheck {
            kernel: self.to_string(),
            sphere_mean: self.sphere_mean(),
            homogeneity_error: hom,
            even,
            decay_exponents,
        }
    }

    /// Least-squares slope of `log max_{|mu| = j} |d^mu K(r e)|` against
    /// `log r` for `r` in `[1e-2, 1e2]` along a generic ray.
    pub fn decay_exponent(&self, j: u32) -> f64 {
        let e = [0.6f64.cos(), 0.6f64.sin()];
        let idx: Vec<MultiIndex> = (0..=j).map(|p| MultiIndex(vec![p, j - p])).collect();
        let pts: Vec<(f64, f64)> = (0..=40)
            .map(|k| {
                let r = 10f64.powf(-2.0 + 0.1 * k as f64);
                let g = idx
                    .iter()
                    .map(|mu| self.derivative(&[r * e[0], r * e[1]], mu).abs())
                    .fold(0.0, f64::max);
                (r.ln(), g.ln())
            })
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (mx, my) = (sx / n, sy / n);
        let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
            (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2))
        });
        num / den
    }
}

/// `d_x^p d_y^q (-1 / (pi z^2))` at `x`.
pub fn beurling_derivative(x: &[f64], p: u32, q: u32) -> Complex64 {
    let z = Complex64::new(x[0], x[1]);
    let m = p + q;
    let fact: f64 = (1..=m + 1).map(f64::from).product();
    let sign = if m.is_multiple_of(2) { -1.0 } else { 1.0 };
    let iq = Complex64::i().powu(q);
    iq * sign * fact / (PI * z.powu(m + 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_agree() {
        for k in Kernel::ALL {
            for t in [0.1, 0.9, 2.0, 4.4] {
                let r = 0.7;
                let x = [r * f64::cos(t), r * f64::sin(t)];
                let direct = match k {
                    Kernel::BeurlingReal => -(2.0 * t).cos() / PI,
                    Kernel::BeurlingImag => -(2.0 * t).sin() / PI,
                    Kernel::Riesz2 { i, j } => {
                        let d = if i == j { 0.5 } else { 0.0 };
                        x[i - 1] * x[j - 1] / (r * r) - d
                    }
                };
                assert!((k.omega(t) - direct).abs() < 1e-14, "{k} omega");
                assert!((k.eval(&x) - direct / (r * r)).abs() < 1e-13, "{k} eval");
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(Kernel::parse("riesz2(2,1)").unwrap(), Kernel::Riesz2 { i: 1, j: 2 });
        assert_eq!(Kernel::parse("riesz2:1,1").unwrap(), Kernel::Riesz2 { i: 1, j: 1 });
        assert_eq!(Kernel::parse("beurling_imag").unwrap(), Kernel::BeurlingImag);
        assert!(Kernel::parse("riesz2(1,3)").is_err());
        assert!(Kernel::parse("hilbert").is_err());
        for k in Kernel::ALL {
            assert_eq!(Kernel::parse(&k.to_string()).unwrap(), k);
        }
    }

    #[test]
    fn invariants() {
        for k in Kernel::ALL {
            let c = k.check(3);
            assert!(c.sphere_mean.abs() < 1e-10);
            assert!(c.homogeneity_error < 1e-12);
            assert!(c.even);
            for (j, e) in c.decay_exponents.iter().enumerate() {
                let want = -2.0 - j as f64;
                assert!(((e - want) / want).abs() < 0.02, "{k} j = {j}: {e}");
            }
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let x = [0.4, -0.3];
        let h = 1e-6;
        for k in Kernel::ALL {
            let dx = (k.eval(&[x[0] + h, x[1]]) - k.eval(&[x[0] - h, x[1]])) / (2.0 * h);
            let dy = (k.eval(&[x[0], x[1] + h]) - k.eval(&[x[0], x[1] - h])) / (2.0 * h);
            let ax = k.derivative(&x, &MultiIndex(vec![1, 0]));
            let ay = k.derivative(&x, &MultiIndex(vec![0, 1]));
            assert!((dx - ax).abs() < 1e-6 * ax.abs().max(1.0));
            assert!((dy - ay).abs() < 1e-6 * ay.abs().max(1.0));
        }
    }
}
