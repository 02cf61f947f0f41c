use super::{AutodiffError, Graph, Tensor, Var};

/// `|a - b| / max(|a|, |b|, 1e-12)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Worst elementwise [`relative_error`] between two gradient lists.
pub fn max_relative_error(analytic: &[Tensor], numeric: &[Tensor]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| a.data().iter().zip(n.data()))
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Central-difference gradient of a scalar function of several tensors.
pub fn numeric_gradient<F>(f: F, params: &[Tensor], h: f64) -> Result<Vec<Tensor>, AutodiffError>
where
    F: Fn(&[Tensor]) -> Result<f64, AutodiffError>,
{
    if !(h > 0.0) {
        return Err(AutodiffError::InvalidStep(h));
    }
    let mut work = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let mut grad = Tensor::zeros(params[pi].shape());
        for k in 0..params[pi].len() {
            let orig = params[pi].data()[k];
            work[pi].data_mut()[k] = orig + h;
            let up = f(&work)?;
            work[pi].data_mut()[k] = orig - h;
            let down = f(&work)?;
            work[pi].data_mut()[k] = orig;
            grad.data_mut()[k] = (up - down) / (2.0 * h);
        }
        grads.push(grad);
    }
    Ok(grads)
}

/// Compares the reverse-mode gradient of `build` against central differences.
///
/// `build` receives a fresh graph and one tracked input per entry of
/// `params`, and must return a scalar node. Returns the worst relative error.
pub fn finite_difference_check<F>(build: F, params: &[Tensor], h: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, AutodiffError>,
{
    let evaluate = |values: &[Tensor]| -> Result<f64, AutodiffError> {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.input(t.clone())).collect();
        let root = build(&mut g, &vars)?;
        g.scalar_value(root)
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|t| g.input(t.clone())).collect();
    let root = build(&mut g, &vars)?;
    let analytic = g.gradients_wrt(root, &vars)?;
    let numeric = numeric_gradient(evaluate, params, h)?;
    Ok(max_relative_error(&analytic, &numeric))
}
