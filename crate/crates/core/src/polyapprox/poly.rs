use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::geometry::Cube;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|mu|`
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `x^mu`
    pub fn pow(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&m, &v)| v.powi(m as i32)).product()
    }

    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&m| (1..=m).map(f64::from).product::<f64>())
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All multi-indices in `d` variables with `|mu| <= n`, ordered by total
/// degree and then lexicographically from the first variable down.
pub fn multi_indices(d: usize, n: u32) -> Vec<MultiIndex> {
    fn fill(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if cur.len() == d - 1 {
            cur.push(left);
            out.push(MultiIndex(cur.clone()));
            cur.pop();
            return;
        }
        for m in (0..=left).rev() {
            cur.push(m);
            fill(d, left - m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for k in 0..=n {
        fill(d, k, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `sum_{|mu| <= n} a_mu (x - x0)^mu`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polynomial {
    center: Vec<f64>,
    degree: u32,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(center: Vec<f64>, degree: u32) -> Self {
        Polynomial {
            center,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(center: Vec<f64>, degree: u32, c: f64) -> Self {
        let mut p = Polynomial::zero(center, degree);
        let d = p.dim();
        p.set(MultiIndex::zero(d), c);
        p
    }

    /// `(x - center)^mu` as a polynomial of the given degree.
    pub fn monomial(center: Vec<f64>, degree: u32, mu: MultiIndex) -> Self {
        let mut p = Polynomial::zero(center, degree);
        p.set(mu, 1.0);
        p
    }

    pub fn from_coeffs(center: Vec<f64>, degree: u32, coeffs: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        let mut p = Polynomial::zero(center, degree);
        for (mu, a) in coeffs {
            p.set(mu, a);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeff(&self, mu: &MultiIndex) -> f64 {
        self.coeffs.get(mu).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, mu: MultiIndex, a: f64) {
        assert!(mu.dim() == self.dim(), "multi-index dimension mismatch");
        assert!(
            mu.order() <= self.degree,
            "multi-index {mu} exceeds degree {}",
            self.degree
        );
        if a == 0.0 {
            self.coeffs.remove(&mu);
        } else {
            self.coeffs.insert(mu, a);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(m, &a)| (m, a))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(mu, a)| {
                a * mu
                    .0
                    .iter()
                    .zip(x)
                    .zip(&self.center)
                    .map(|((&m, &xi), &ci)| (xi - ci).powi(m as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Same polynomial expanded about `c`.
    pub fn recenter(&self, c: &[f64]) -> Polynomial {
        // (x - x0)^mu = prod_i ((x - c)_i + s_i)^mu_i with s = c - x0.
        let s: Vec<f64> = c.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (mu, &a) in &self.coeffs {
            for nu in multi_indices(self.dim(), mu.order()) {
                if nu.0.iter().zip(&mu.0).any(|(n, m)| n > m) {
                    continue;
                }
                let w: f64 =
                    mu.0.iter()
                        .zip(&nu.0)
                        .zip(&s)
                        .map(|((&m, &n), &si)| binomial(m, n) * si.powi((m - n) as i32))
                        .product();
                *acc.entry(nu).or_insert(0.0) += a * w;
            }
        }
        Polynomial::from_coeffs(c.to_vec(), self.degree, acc)
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        Polynomial::from_coeffs(
            self.center.clone(),
            self.degree,
            self.coeffs.iter().map(|(m, a)| (m.clone(), a * k)),
        )
    }

    /// `self + k * other`, expanded about `self`'s center.
    pub fn axpy(&self, k: f64, other: &Polynomial) -> Polynomial {
        let other = other.recenter(&self.center);
        let mut out = self.clone();
        out.degree = self.degree.max(other.degree);
        for (mu, a) in other.coeffs {
            let v = out.coeff(&mu) + k * a;
            out.set(mu, v);
        }
        out
    }

    /// `sum |a_mu| l^|mu|`.
    pub fn coefficient_norm(&self, l: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(mu, a)| a.abs() * l.powi(mu.order() as i32))
            .sum()
    }

    /// `max |P|` over a `(m + 1)^d` lattice of `q` including its corners.
    pub fn sup_on(&self, q: &Cube, m: usize) -> f64 {
        let d = q.dim();
        let total = (m + 1).pow(d as u32);
        let mut x = vec![0.0; d];
        let mut best = 0.0f64;
        for k in 0..total {
            let mut r = k;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = q.corner[i] + q.side * (r % (m + 1)) as f64 / m as f64;
                r /= m + 1;
            }
            best = best.max(self.eval(&x).abs());
        }
        best
    }
}
