use super::{Bound, ModelError, ParamSet};
use crate::autodiff::{numeric_gradient, Graph, Var};

/// Largest gradient error over every tensor of `params`, comparing reverse
/// mode with central differences. Errors are relative to
/// `max(|analytic|, |numeric|, 1e-3)` so tiny entries do not amplify roundoff.
pub(crate) fn fd_check_params<F>(params: &ParamSet, loss: F, h: f64) -> Result<f64, ModelError>
where
    F: Fn(&mut Graph, &Bound) -> Result<Var, ModelError>,
{
    let mut g = Graph::with_second_order();
    let bound = params.bind(&mut g)?;
    let root = loss(&mut g, &bound)?;
    let analytic = g.backward(root)?;

    let names: Vec<String> = params.iter().map(|(k, _)| k.to_string()).collect();
    let tensors: Vec<_> = params.iter().map(|(_, t)| t.clone()).collect();
    let numeric = numeric_gradient(
        |ts| {
            let mut p = ParamSet::new();
            for (n, t) in names.iter().zip(ts) {
                p.insert(n.clone(), t.clone());
            }
            let mut g = Graph::with_second_order();
            let b = p.bind_frozen(&mut g);
            let root = loss(&mut g, &b).map_err(|e| match e {
                ModelError::Autodiff(a) => a,
                other => panic!("{other}"),
            })?;
            g.scalar_value(root)
        },
        &tensors,
        h,
    )?;
    let mut worst: f64 = 0.0;
    for (name, num) in names.iter().zip(&numeric) {
        let ana = &analytic[name];
        for (a, b) in ana.data().iter().zip(num.data()) {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-3));
        }
    }
    Ok(worst)
}
