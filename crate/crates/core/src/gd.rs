//! Full-batch gradient descent with Armijo backtracking, used by the
//! hindsight solvers in the regret traces.

/// Minimizes `f` from the zero vector until the gradient norm drops below
/// `tol` or `max_iter` iterations pass. Returns
/// `(argmin, min_value, final_gradient_norm)`; the gradient norm feeds the
/// strong-convexity optimum certificates in the regret traces.
pub(crate) fn minimize<F>(
    dim: usize,
    f_and_grad: F,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, f64)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    minimize_from(vec![0.0; dim], f_and_grad, tol, max_iter)
}

/// [`minimize`] with an explicit starting point; used to warm-start the
/// per-round prefix solves in the regret curves.
pub(crate) fn minimize_from<F>(
    start: Vec<f64>,
    f_and_grad: F,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, f64)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = start;
    let (mut fx, mut grad) = f_and_grad(&x);
    let mut step = 1.0_f64;
    let mut grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    for _ in 0..max_iter {
        if grad_norm <= tol {
            break;
        }
        // Armijo backtracking; step carries over so a good scale is reused.
        step = (step * 2.0).min(1e6);
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> =
                x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            let (fc, gc) = f_and_grad(&cand);
            if fc <= fx - 1e-4 * step * grad_norm * grad_norm {
                x = cand;
                fx = fc;
                grad = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // step underflowed; we are at numerical resolution
        }
        grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    }
    (x, fx, grad_norm)
}
