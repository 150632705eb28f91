//! Nelder-Mead simplex minimizer with adaptive coefficients.

use alloc::vec;
use alloc::vec::Vec;

use libm::fabs;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Converged once the spread of objective values across the simplex falls below this.
    pub f_tol: f64,
    /// Initial edge length along each coordinate.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5_000,
            f_tol: 1e-9,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-finite objective values are treated as `+∞`.
///
/// Reflection/expansion/contraction/shrink coefficients follow the
/// dimension-adaptive choice of Gao and Han, which behaves better than the
/// classic (1, 2, ½, ½) set beyond three dimensions.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = x0.len();
    let nf = n as f64;
    let (rho, chi, gamma, sigma) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut evaluations = n + 1;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = fabs(values[n] - values[0]);
        if values[0].is_finite() && spread <= opts.f_tol {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }
        let worst = simplex[n].clone();
        for j in 0..n {
            trial[j] = centroid[j] + rho * (centroid[j] - worst[j]);
        }
        let fr = eval(&trial);
        evaluations += 1;

        if fr < values[0] {
            for j in 0..n {
                trial2[j] = centroid[j] + chi * (trial[j] - centroid[j]);
            }
            let fe = eval(&trial2);
            evaluations += 1;
            if fe < fr {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fe;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n].copy_from_slice(&trial);
            values[n] = fr;
            continue;
        }
        let outside = fr < values[n];
        for j in 0..n {
            trial2[j] = if outside {
                centroid[j] + gamma * (trial[j] - centroid[j])
            } else {
                centroid[j] - gamma * (centroid[j] - worst[j])
            };
        }
        let fc = eval(&trial2);
        evaluations += 1;
        if (outside && fc <= fr) || (!outside && fc < values[n]) {
            simplex[n].copy_from_slice(&trial2);
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best[j] + sigma * (simplex[i][j] - best[j]);
            }
            values[i] = eval(&simplex[i]);
            evaluations += 1;
        }
    }

    let (best, &fbest) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    SimplexResult {
        x: simplex[best].clone(),
        f: fbest,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + (x[2] - 0.5).powi(2),
            &[0.0, 0.0, 0.0],
            &SimplexOptions {
                f_tol: 1e-14,
                ..Default::default()
            },
        );
        assert!(r.converged);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-5
                && (r.x[1] + 2.0).abs() < 1e-5
                && (r.x[2] - 0.5).abs() < 1e-5
        );
    }

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &SimplexOptions {
                f_tol: 1e-16,
                max_iterations: 10_000,
                initial_step: 0.5,
            },
        );
        assert!(
            (r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r.x
        );
    }

    #[test]
    fn nan_is_rejected_and_budget_respected() {
        let r = minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 0.3).powi(2)
                }
            },
            &[1.0],
            &SimplexOptions {
                max_iterations: 7,
                ..Default::default()
            },
        );
        assert!(!r.converged);
        assert_eq!(r.iterations, 7);
        assert!(r.f.is_finite());
    }
}
