use rayon::prelude::*;

use super::kernel::Kernel;
use super::operator::TruncatedOperator;
use crate::error::{Error, Result};
use crate::geometry::{Cube, Domain};
use crate::polyapprox::{multi_indices, GridFunction, MultiIndex, Polynomial};

/// Nested central difference `prod_i delta_{s,i}^{mu_i} K(x) / s^|mu|`.
fn central_difference(kernel: &Kernel, x: &[f64], mu: &MultiIndex, s: f64) -> f64 {
    let (p, q) = (mu.0[0] as i32, mu.0[1] as i32);
    let binom = |n: i32, k: i32| (0..k).fold(1.0, |a, i| a * f64::from(n - i) / f64::from(i + 1));
    let mut acc = 0.0;
    for a in 0..=p {
        for b in 0..=q {
            let w = binom(p, a) * binom(q, b) * if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            let y = [
                x[0] + (f64::from(p) / 2.0 - f64::from(a)) * s,
                x[1] + (f64::from(q) / 2.0 - f64::from(b)) * s,
            ];
            acc += w * kernel.eval(&y);
        }
    }
    acc / s.powi(p + q)
}

/// `d^mu K(x)` by central differences at steps `s, 2s, 4s` with two rounds
/// of Richardson extrapolation in `s^2`.
pub fn numerical_derivative(kernel: &Kernel, x: &[f64], mu: &MultiIndex, s: f64) -> f64 {
    if mu.order() == 0 {
        return kernel.eval(x);
    }
    let d: Vec<f64> = [4.0, 2.0, 1.0]
        .iter()
        .map(|&k| central_difference(kernel, x, mu, k * s))
        .collect();
    let r1 = [(4.0 * d[1] - d[0]) / 3.0, (4.0 * d[2] - d[1]) / 3.0];
    (16.0 * r1[1] - r1[0]) / 15.0
}

/// Taylor polynomial of `K` about `x0` to order `n`, in the variable `x`:
/// `sum_{|mu| <= n} d^mu K(x0) (x - x0)^mu / mu!`, derivatives by
/// Richardson-extrapolated differences with step `|x0| 1e-3`.
pub fn kernel_taylor(kernel: &Kernel, x0: &[f64], n: u32) -> Result<Polynomial> {
    let r = x0[0].hypot(x0[1]);
    if r == 0.0 {
        return Err(Error::Singular("kernel expansion at the origin".into()));
    }
    if n + 1 > kernel.smoothness() {
        return Err(Error::Precondition(format!(
            "order {n} exceeds the smoothness of {kernel}"
        )));
    }
    let s = 1e-3 * r;
    let coeffs = multi_indices(2, n)
        .into_iter()
        .map(|mu| {
            let v = numerical_derivative(kernel, x0, &mu, s) / mu.factorial();
            (mu, v)
        })
        .collect::<Vec<_>>();
    Ok(Polynomial::from_coeffs(x0.to_vec(), n, coeffs))
}

/// Same expansion with analytic derivatives.
pub fn kernel_taylor_exact(kernel: &Kernel, x0: &[f64], n: u32) -> Result<Polynomial> {
    if x0[0] == 0.0 && x0[1] == 0.0 {
        return Err(Error::Singular("kernel expansion at the origin".into()));
    }
    let coeffs = multi_indices(2, n)
        .into_iter()
        .map(|mu| {
            let v = kernel.derivative(x0, &mu) / mu.factorial();
            (mu, v)
        })
        .collect::<Vec<_>>();
    Ok(Polynomial::from_coeffs(x0.to_vec(), n, coeffs))
}

/// `P(x) = int_{D \ 2Q} TK(x0 - u; x - x0) f(u) du`, the order-`n` Taylor
/// expansion in `x` about the center `x0` of `q` of the far part of
/// `T_D f`, integrated with the operator's source weights over cells whose
/// centers lie outside `2Q`.
pub fn polynomial_tail(
    op: &TruncatedOperator,
    kernel: &Kernel,
    f: &GridFunction,
    q: &Cube,
    domain: &dyn Domain,
    n: u32,
) -> Result<Polynomial> {
    let q2 = q.scaled(2.0);
    if !domain.contains(&q.center()) || domain.cube_dist2_to_boundary(&q2) <= 0.0 {
        return Err(Error::Precondition("2Q is not inside the domain".into()));
    }
    if f.grid != *op.grid() {
        return Err(Error::Precondition("function and operator grids differ".into()));
    }
    let g = &f.grid;
    let x0 = q.center();
    let basis = multi_indices(2, n);
    let w = op.weights();
    let area = g.cell_area();
    let sums = (0..g.len())
        .into_par_iter()
        .filter(|&k| w[k] > 0.0 && f.values[k] != 0.0)
        .filter_map(|k| {
            let u = g.center(k % g.nx, k / g.nx);
            if q2.contains_point(&u) {
                return None;
            }
            let z = [x0[0] - u[0], x0[1] - u[1]];
            let c = w[k] * f.values[k] * area;
            Some(
                basis
                    .iter()
                    .map(|mu| c * kernel.derivative(&z, mu))
                    .collect::<Vec<f64>>(),
            )
        })
        .reduce(
            || vec![0.0; basis.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(Polynomial::from_coeffs(
        x0,
        n,
        basis.iter().zip(sums).map(|(mu, s)| (mu.clone(), s / mu.factorial())),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_zero_is_constant() {
        for k in Kernel::ALL {
            let p = kernel_taylor(&k, &[0.3, 0.4], 0).unwrap();
            assert_eq!(p.terms().count(), 1);
            assert!((p.eval(&[9.0, -2.0]) - k.eval(&[0.3, 0.4])).abs() < 1e-15);
        }
    }

    #[test]
    fn origin_is_singular() {
        assert!(matches!(
            kernel_taylor(&Kernel::BeurlingReal, &[0.0, 0.0], 2),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn numerical_matches_analytic() {
        for k in Kernel::ALL {
            for x0 in [[0.3, 0.4], [-1.2, 0.05], [0.01, -0.02]] {
                let a = kernel_taylor(&k, &x0, 3).unwrap();
                let b = kernel_taylor_exact(&k, &x0, 3).unwrap();
                for (mu, v) in b.terms() {
                    let scale = v
                        .abs()
                        .max(k.eval(&x0).abs() / x0[0].hypot(x0[1]).powi(mu.order() as i32));
                    assert!((a.coeff(mu) - v).abs() <= 1e-6 * scale, "{k} {mu} at {x0:?}");
                }
            }
        }
    }
}
