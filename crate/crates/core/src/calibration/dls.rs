//! Levenberg-Marquardt damped least squares.

use nalgebra::{DMatrix, DVector};

/// A nonlinear least-squares problem `min ½|r(x)|²`.
pub trait LeastSquares {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlsOptions {
    pub initial_damping: f64,
    /// Damping is multiplied by this after a rejected step and divided by it
    /// after an accepted one.
    pub damping_factor: f64,
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub relative_tolerance: f64,
    /// Stop when the largest gradient component is below this.
    pub gradient_tolerance: f64,
}

impl Default for DlsOptions {
    fn default() -> Self {
        DlsOptions {
            initial_damping: 1e-3,
            damping_factor: 10.0,
            max_iterations: 500,
            relative_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlsReport {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after every accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

/// Minimizes the problem from `x0`, scaling the damping by the diagonal of
/// `JᵀJ`.
pub fn damped_least_squares<P: LeastSquares>(
    problem: &P,
    x0: DVector<f64>,
    opts: &DlsOptions,
) -> DlsReport {
    let mut x = x0;
    let mut r = problem.residuals(&x);
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_damping;
    let mut history = vec![cost.sqrt()];
    let mut converged = false;
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;

    if !cost.is_finite() {
        return DlsReport {
            x,
            residual_norm: f64::NAN,
            gradient_norm,
            iterations,
            converged,
            history,
        };
    }

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        let j = problem.jacobian(&x);
        let g = j.transpose() * &r;
        gradient_norm = g.amax();
        if gradient_norm < opts.gradient_tolerance || cost == 0.0 {
            converged = true;
            break;
        }
        let jtj = j.transpose() * &j;
        loop {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * jtj[(k, k)].max(f64::MIN_POSITIVE);
            }
            let step = a.cholesky().map(|c| c.solve(&(-&g)));
            if let Some(dx) = step {
                let x_new = &x + dx;
                let r_new = problem.residuals(&x_new);
                let cost_new = r_new.norm_squared();
                if cost_new.is_finite() && cost_new < cost {
                    let drop = (cost - cost_new) / cost;
                    x = x_new;
                    r = r_new;
                    cost = cost_new;
                    history.push(cost.sqrt());
                    lambda /= opts.damping_factor;
                    if drop < opts.relative_tolerance {
                        converged = true;
                        break 'outer;
                    }
                    continue 'outer;
                }
            }
            lambda *= opts.damping_factor;
            if lambda > 1e20 {
                // no descent direction left at working precision
                converged = true;
                break 'outer;
            }
        }
    }

    DlsReport {
        x,
        residual_norm: cost.sqrt(),
        gradient_norm,
        iterations,
        converged,
        history,
    }
}

/// Forward-difference Jacobian, used to check analytic ones.
pub fn numerical_jacobian<P: LeastSquares>(problem: &P, x: &DVector<f64>) -> DMatrix<f64> {
    let r0 = problem.residuals(x);
    let mut j = DMatrix::zeros(r0.len(), x.len());
    for k in 0..x.len() {
        let h = 1e-7 * x[k].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (problem.residuals(&xp) - problem.residuals(&xm)) / (2.0 * h);
        j.set_column(k, &col);
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]])
        }
        fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[-20.0 * x[0], 10.0, -1.0, 0.0])
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let rep = damped_least_squares(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &DlsOptions::default());
        assert!(rep.converged);
        assert!((rep.x[0] - 1.0).abs() < 1e-8 && (rep.x[1] - 1.0).abs() < 1e-8);
        assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn numerical_jacobian_agrees() {
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let diff = numerical_jacobian(&Rosenbrock, &x) - Rosenbrock.jacobian(&x);
        assert!(diff.amax() < 1e-6);
    }
}
