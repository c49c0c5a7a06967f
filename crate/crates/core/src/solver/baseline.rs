use crate::error::{Error, Result};
use crate::grid::{curvature, ScalarField};
use crate::model::{q_field, region_means, ModelParams};

/// Explicit gradient descent on the Chan-Vese energy:
/// `phi += dt (gamma kappa - Q) delta(phi)`, with the region means refreshed
/// every step.
pub fn run_cv_gradient_descent(
    f: &ScalarField,
    init_phi: &ScalarField,
    params: &ModelParams,
    dt: f64,
    steps: usize,
) -> Result<ScalarField> {
    f.check_dims(init_phi)?;
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be nonnegative and finite, got {dt}"),
        });
    }
    let mollifier = params.mollifier()?;
    let mut phi = init_phi.clone();
    if dt == 0.0 {
        return Ok(phi);
    }
    for iteration in 1..=steps {
        let means = region_means(f, &phi, mollifier)?;
        let q = q_field(f, means, params);
        let kappa = curvature(&phi);
        for k in 0..phi.len() {
            let v = phi.values()[k];
            let speed = params.gamma * kappa.values()[k] - q.values()[k];
            phi.values_mut()[k] = v + dt * speed * mollifier.dirac(v);
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite {
                field: "phi",
                iteration,
            });
        }
    }
    Ok(phi)
}
