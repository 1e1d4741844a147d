//! Growth functions: evaluation, type, doubling constant, the divergence
//! factor `xi`, the associated modulus `omega / xi` and the Dini test.
//!
//! Every modulus is evaluated in logarithmic variables, `ln omega(e^{-u})`,
//! so that integrals of `omega(t) t^{-n-1}` become integrals of the smooth,
//! non-singular function `exp(ln omega(e^{-u}) + n u)` over `u >= 0`.

mod interp;

use std::fmt;

use serde::Serialize;

pub use interp::MonotoneCubic;

use crate::error::{Error, Result};

/// Sample grid `t_j = 2^{-j/4}`, `j = 0..=4K`.
pub const GRID_K: u32 = 40;
pub const TYPE_CAP: u32 = 8;
/// Relative tolerance of every `xi` quadrature.
pub const QUAD_RTOL: f64 = 1e-10;
/// Dini increments below this count as stabilized.
pub const DINI_TOL: f64 = 1e-6;
/// Doubling schedule `K = 2^m` of the Dini test, `m <= DINI_MAX_M`.
pub const DINI_MAX_M: u32 = 40;
/// An almost-monotonicity constant is accepted when halving the sampled
/// range changes it by less than this factor.
pub const STABILITY: f64 = 0.8;

#[derive(Clone, Debug)]
pub enum Modulus {
    /// `t^s`
    Power { s: f64 },
    /// `t^s log(e/t)^q`
    PowerLog { s: f64, q: f64 },
    /// Monotone cubic interpolation of `ln omega` against `ln t`.
    Tabulated(MonotoneCubic),
    /// `omega / xi_omega` for a base growth function.
    Associated(Box<GrowthFunction>),
}

impl Modulus {
    /// `ln omega(e^{-u})`.
    pub fn ln_at(&self, u: f64) -> f64 {
        match self {
            Modulus::Power { s } => -s * u,
            Modulus::PowerLog { s, q } => -s * u + q * (1.0 + u).ln(),
            Modulus::Tabulated(c) => c.eval(-u),
            Modulus::Associated(base) => base.modulus.ln_at(u) - base.xi_u(u).ln(),
        }
    }

    /// `ln omega(e^{-u}) + n u`, with the power part folded in before adding
    /// so large `u` does not cancel.
    pub fn ln_scaled(&self, u: f64, n: u32) -> f64 {
        let n = n as f64;
        match self {
            Modulus::Power { s } => (n - s) * u,
            Modulus::PowerLog { s, q } => (n - s) * u + q * (1.0 + u).ln(),
            Modulus::Associated(base) => base.modulus.ln_scaled(u, n as u32) - base.xi_u(u).ln(),
            Modulus::Tabulated(_) => self.ln_at(u) + n * u,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.ln_at(-t.ln()).exp()
    }

    /// Parses `power s=<s>` or `powerlog s=<s> q=<q>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut words = spec.split_whitespace();
        let kind = words.next().unwrap_or("");
        let mut s = None;
        let mut q = None;
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::InvalidGrowth(format!("expected key=value, got `{w}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::InvalidGrowth(format!("bad number `{v}`")))?;
            match k {
                "s" => s = Some(v),
                "q" => q = Some(v),
                _ => return Err(Error::InvalidGrowth(format!("unknown parameter `{k}`"))),
            }
        }
        let need =
            |x: Option<f64>, name: &str| x.ok_or_else(|| Error::InvalidGrowth(format!("missing parameter `{name}`")));
        match kind {
            "power" => Ok(Modulus::Power { s: need(s, "s")? }),
            "powerlog" => Ok(Modulus::PowerLog {
                s: need(s, "s")?,
                q: need(q, "q")?,
            }),
            _ => Err(Error::InvalidGrowth(format!("unknown growth function `{kind}`"))),
        }
    }

    /// Two whitespace- or comma-separated columns `t omega(t)`.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != 2 {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "expected two columns".into(),
                });
            }
            rows.push((vals[0], vals[1]));
        }
        Modulus::tabulated(&rows)
    }

    pub fn tabulated(rows: &[(f64, f64)]) -> Result<Self> {
        let mut rows = rows.to_vec();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.iter().any(|&(t, w)| !(t > 0.0 && w > 0.0)) {
            return Err(Error::InvalidGrowth("tabulated samples must be positive".into()));
        }
        let x = rows.iter().map(|r| r.0.ln()).collect();
        let y = rows.iter().map(|r| r.1.ln()).collect();
        Ok(Modulus::Tabulated(MonotoneCubic::new(x, y)?))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Power { s } => write!(f, "t^{s}"),
            Modulus::PowerLog { s, q } => write!(f, "t^{s} log(e/t)^{q}"),
            Modulus::Tabulated(_) => write!(f, "tabulated"),
            Modulus::Associated(b) => write!(f, "tilde[{}]", b.modulus),
        }
    }
}

/// Type `n` with the verified almost-monotonicity exponents and constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TypeInfo {
    pub n: u32,
    /// Smallest grid `eps` with `omega / t^{n + eps}` almost decreasing.
    pub epsilon: f64,
    /// Largest grid `alpha` with `omega / t^{n - alpha}` almost increasing.
    pub alpha: f64,
    /// `g(x) >= c g(y)` for `x < y`, `g = omega / t^{n + eps}`.
    pub decreasing_const: f64,
    /// `g(y) >= c g(x)` for `x < y`, `g = omega / t^{n - alpha}`.
    pub increasing_const: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiniReport {
    pub dini: bool,
    /// `int_{2^{-K}}^1 omega(t) t^{-n-1} dt` at the last schedule step.
    pub integral: f64,
    /// Last schedule exponent `m` (`K = 2^m`).
    pub steps: u32,
}

/// A modulus with cached type metadata.
#[derive(Clone, Debug)]
pub struct GrowthFunction {
    modulus: Modulus,
    info: TypeInfo,
    doubling: f64,
    dini: DiniReport,
}

fn grid_u(j: u32) -> f64 {
    j as f64 * std::f64::consts::LN_2 / 4.0
}

impl GrowthFunction {
    pub fn new(modulus: Modulus) -> Result<Self> {
        let doubling = doubling_constant(&modulus, GRID_K)?;
        let info = type_of(&modulus)?;
        let mut g = GrowthFunction {
            modulus,
            info,
            doubling,
            dini: DiniReport {
                dini: false,
                integral: 0.0,
                steps: 0,
            },
        };
        g.dini = is_dini(&g);
        Ok(g)
    }

    pub fn power(s: f64) -> Result<Self> {
        GrowthFunction::new(Modulus::Power { s })
    }

    pub fn power_log(s: f64, q: f64) -> Result<Self> {
        GrowthFunction::new(Modulus::PowerLog { s, q })
    }

    /// The associated growth function `omega / xi`.
    pub fn associated(&self) -> Result<Self> {
        GrowthFunction::new(Modulus::Associated(Box::new(self.clone())))
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn info(&self) -> TypeInfo {
        self.info
    }

    pub fn n(&self) -> u32 {
        self.info.n
    }

    pub fn doubling(&self) -> f64 {
        self.doubling
    }

    pub fn dini(&self) -> DiniReport {
        self.dini
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.modulus.eval(t)
    }

    /// `omega(e^{-u}) e^{n u}`.
    fn scaled(&self, u: f64) -> f64 {
        self.modulus.ln_scaled(u, self.info.n).exp()
    }

    /// `1 + int_0^u omega(e^{-v}) e^{n v} dv`, i.e. `xi(e^{-u})`.
    fn xi_u(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 1.0 - integrate_panels(|v| self.scaled(v), u, 0.0);
        }
        1.0 + integrate_panels(|v| self.scaled(v), 0.0, u)
    }

    /// `xi(r) = 1 + int_r^1 omega(t) t^{-n-1} dt`.
    pub fn xi(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::OutOfDomain(r));
        }
        Ok(self.xi_u(-r.ln()))
    }

    /// `omega(x) / xi(x)`.
    pub fn omega_tilde(&self, x: f64) -> Result<f64> {
        let xi = self.xi(x)?;
        Ok(self.eval(x) / xi)
    }
}

/// Adaptive double-exponential quadrature on a subinterval.
fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: u32) -> f64 {
    let scale = (f(a).abs() + f(0.5 * (a + b)).abs() + f(b).abs()) * (b - a) / 3.0;
    let target = (QUAD_RTOL * 1e-2 * scale).max(1e-300);
    let out = quadrature::integrate(f, a, b, target);
    if out.error_estimate <= target || depth == 0 {
        return out.integral;
    }
    let m = 0.5 * (a + b);
    let left = quadrature::integrate(f, a, m, 0.5 * target);
    let right = quadrature::integrate(f, m, b, 0.5 * target);
    // Halves agree with the whole to roundoff: the estimate is noise-limited.
    if (left.integral + right.integral - out.integral).abs() <= QUAD_RTOL * scale.max(1e-300) {
        return left.integral + right.integral;
    }
    integrate_adaptive(f, a, m, depth - 1) + integrate_adaptive(f, m, b, depth - 1)
}

/// `int_a^b f(u) du` over panels of width `ln 2` (one octave in `t`) for the
/// first 64 octaves and geometrically growing panels beyond.
fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let w = std::f64::consts::LN_2;
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let width = if lo.abs() < 64.0 * w { w } else { lo.abs() };
        let hi = (lo + width).min(b);
        total += integrate_adaptive(&f, lo, hi, 12);
        lo = hi;
    }
    total
}

/// `max omega(2t) / omega(t)` over the grid `t = 2^{-j/4} <= 1/2`. Fails
/// unless `omega` is positive, finite and strictly increasing on the grid.
pub fn doubling_constant(modulus: &Modulus, k: u32) -> Result<f64> {
    let n = 4 * k;
    let ln: Vec<f64> = (0..=n).map(|j| modulus.ln_at(grid_u(j))).collect();
    for (j, v) in ln.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidGrowth(format!(
                "omega(2^-{}) is not a positive finite number",
                j as f64 / 4.0
            )));
        }
    }
    if let Some(j) = (1..=n as usize).find(|&j| ln[j] >= ln[j - 1]) {
        return Err(Error::InvalidGrowth(format!(
            "omega is not increasing near t = 2^-{}",
            j as f64 / 4.0
        )));
    }
    Ok((4..=n as usize).map(|j| (ln[j - 4] - ln[j]).exp()).fold(0.0, f64::max))
}

/// Almost-decreasing constant `min_{x<y} g(x)/g(y)` for `ln g` sampled on a
/// grid ordered from `t = 1` downwards.
fn decreasing_const(ln_g: &[f64]) -> f64 {
    let mut running_max = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in ln_g {
        running_max = running_max.max(v);
        worst = worst.min(v - running_max);
    }
    worst.exp()
}

/// Almost-increasing constant `min_{x<y} g(y)/g(x)`.
fn increasing_const(ln_g: &[f64]) -> f64 {
    let mut suffix_max = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in ln_g.iter().rev() {
        suffix_max = suffix_max.max(v);
        worst = worst.min(v - suffix_max);
    }
    worst.exp()
}

/// Finds the type by grid search over `(n, eps, alpha)`.
///
/// A constant counts as verified when it stays put (within [`STABILITY`])
/// between the grids `K` and `K/2`; an unbounded ratio decays geometrically
/// with `K` and fails this test.
pub fn type_of(modulus: &Modulus) -> Result<TypeInfo> {
    let jmax = 4 * GRID_K;
    let u: Vec<f64> = (0..=jmax).map(grid_u).collect();
    let ln_w: Vec<f64> = u.iter().map(|&u| modulus.ln_at(u)).collect();
    let half = (jmax / 2) as usize + 1;
    let verified = |c_full: f64, c_half: f64| c_full > 0.0 && c_full >= STABILITY * c_half;
    let steps: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();

    for n in 1..=TYPE_CAP {
        // ln(omega / t^p) at t = e^{-u} equals ln omega + p u
        let ln_g = |p: f64| -> Vec<f64> { ln_w.iter().zip(&u).map(|(w, u)| w + p * u).collect() };
        let eps = steps.iter().find_map(|&e| {
            let g = ln_g(n as f64 + e);
            let (c, ch) = (decreasing_const(&g), decreasing_const(&g[..half]));
            verified(c, ch).then_some((e, c))
        });
        let alpha = steps.iter().rev().filter(|&&a| a > 0.0).find_map(|&a| {
            let g = ln_g(n as f64 - a);
            let (c, ch) = (increasing_const(&g), increasing_const(&g[..half]));
            verified(c, ch).then_some((a, c))
        });
        if let (Some((e, ce)), Some((a, ca))) = (eps, alpha) {
            return Ok(TypeInfo {
                n,
                epsilon: e,
                alpha: a,
                decreasing_const: ce,
                increasing_const: ca,
            });
        }
    }
    Err(Error::UnsupportedModulus { cap: TYPE_CAP })
}

/// Doubling schedule for `int_{2^{-K}}^1 omega(t) t^{-n-1} dt`, `K = 2^m`:
/// convergent when two successive increments fall below [`DINI_TOL`].
pub fn is_dini(g: &GrowthFunction) -> DiniReport {
    let w = std::f64::consts::LN_2;
    // For omega / xi the integrand is xi' / xi, so the integral is ln xi.
    let increment = |a: f64, b: f64| match &g.modulus {
        Modulus::Associated(base) if base.info.n == g.info.n => base.xi_u(b).ln() - base.xi_u(a).ln(),
        _ => integrate_panels(|v| g.scaled(v), a, b),
    };
    let mut prev = increment(0.0, w);
    let mut small = 0;
    for m in 1..=DINI_MAX_M {
        let a = w * (1u64 << (m - 1)) as f64;
        let inc = increment(a, 2.0 * a);
        let total = prev + inc;
        prev = total;
        if !total.is_finite() {
            return DiniReport {
                dini: false,
                integral: total,
                steps: m,
            };
        }
        small = if inc < DINI_TOL { small + 1 } else { 0 };
        if small == 2 {
            return DiniReport {
                dini: true,
                integral: total,
                steps: m,
            };
        }
    }
    DiniReport {
        dini: false,
        integral: prev,
        steps: DINI_MAX_M,
    }
}
