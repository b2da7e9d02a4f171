//! Central finite-difference gradient verification. Used by tests across
//! the workspace; runs at whatever precision the model is instantiated at
//! (gradient checks instantiate models at f64).

use crate::param::Parameter;

#[derive(Debug)]
pub struct GradCheckResult {
    pub max_rel_err: f64,
    pub worst: String,
    pub checked: usize,
}

/// Compare analytic gradients against central finite differences.
///
/// `run_backward` must leave d(loss)/d(param) in each parameter's grad
/// (gradients are zeroed first via the same accessor). `loss_of` must
/// recompute the identical scalar loss from the model's current
/// parameters without touching gradients.
pub fn central_difference_check<M>(
    model: &mut M,
    mut params_of: impl FnMut(&mut M) -> Vec<&mut Parameter<f64>>,
    run_backward: impl FnOnce(&mut M),
    mut loss_of: impl FnMut(&mut M) -> f64,
    step: f64,
) -> GradCheckResult {
    for p in params_of(model) {
        p.zero_grad();
    }
    run_backward(model);

    let analytic: Vec<(String, Vec<f64>)> = params_of(model)
        .iter()
        .map(|p| (p.name.clone(), p.grad.data().to_vec()))
        .collect();

    let mut max_rel_err = 0.0f64;
    let mut worst = String::new();
    let mut checked = 0usize;
    for (pi, (name, grads)) in analytic.iter().enumerate() {
        for ei in 0..grads.len() {
            let orig = params_of(model)[pi].value.data()[ei];
            params_of(model)[pi].value.data_mut()[ei] = orig + step;
            let plus = loss_of(model);
            params_of(model)[pi].value.data_mut()[ei] = orig - step;
            let minus = loss_of(model);
            params_of(model)[pi].value.data_mut()[ei] = orig;

            let numeric = (plus - minus) / (2.0 * step);
            let a = grads[ei];
            // Entries that agree absolutely are a match regardless of
            // scale; identically-zero gradients otherwise drown in
            // finite-difference roundoff.
            let diff = (a - numeric).abs();
            let rel = if diff < 1e-7 {
                0.0
            } else {
                diff / a.abs().max(numeric.abs())
            };
            checked += 1;
            if rel > max_rel_err {
                max_rel_err = rel;
                worst = format!("{name}[{ei}] analytic={a:.3e} numeric={numeric:.3e}");
            }
        }
    }
    GradCheckResult {
        max_rel_err,
        worst,
        checked,
    }
}
