//! Central-difference gradient checking.
//!
//! Every hand-written backward pass in this crate is validated against this
//! oracle: perturb each scalar parameter by `±h`, evaluate the loss twice,
//! and compare the resulting slope with the analytic gradient. In 64-bit
//! arithmetic a step of `h = 1e-5` resolves correct gradients to relative
//! errors far below the `1e-4` bar used by the test suites.

use crate::error::{Error, Result};
use crate::nn::params::ParamStore;

/// Step size used throughout the test suites.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Maximum relative error between the analytic gradients stored in `store`
/// and central differences of `loss_fn` over every scalar parameter.
///
/// `loss_fn` must be a deterministic, side-effect-free function of the
/// parameter values; the analytic gradients must already be in the store's
/// grad buffers. The relative error for one entry is
/// `|a - n| / max(|a|, |n|, 1e-8)`. Parameter values are restored before
/// returning.
pub fn grad_check<F>(loss_fn: F, store: &mut ParamStore, h: f64) -> Result<f64>
where
    F: Fn(&ParamStore) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::Argument(format!("step size must be positive, got {h}")));
    }
    let names: Vec<String> = store.names().map(str::to_string).collect();
    let mut max_rel = 0.0_f64;
    for name in &names {
        let entries = store.value(name)?.len();
        for idx in 0..entries {
            let original = store.value(name)?.data()[idx];

            store.value_mut(name)?.data_mut()[idx] = original + h;
            let loss_plus = loss_fn(store)?;
            store.value_mut(name)?.data_mut()[idx] = original - h;
            let loss_minus = loss_fn(store)?;
            store.value_mut(name)?.data_mut()[idx] = original;

            if !loss_plus.is_finite() || !loss_minus.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss is not finite while perturbing {name:?}[{idx}]"
                )));
            }
            let numeric = (loss_plus - loss_minus) / (2.0 * h);
            let analytic = store.grad(name)?.data()[idx];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor::Tensor2;

    #[test]
    fn quadratic_gradient_matches() {
        // f(theta) = theta^2 at theta = 3: analytic gradient 6.
        let mut store = ParamStore::new();
        store.insert("theta", Tensor2::filled(1, 1, 3.0)).unwrap();
        store
            .accumulate_grad("theta", &Tensor2::filled(1, 1, 6.0))
            .unwrap();
        let err = grad_check(
            |s| {
                let x = s.value("theta")?.get(0, 0);
                Ok(x * x)
            },
            &mut store,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err < 1e-8, "relative error {err}");
        assert_eq!(store.value("theta").unwrap().get(0, 0), 3.0);
    }

    #[test]
    fn constant_loss_gives_zero_error() {
        let mut store = ParamStore::new();
        store.insert("theta", Tensor2::filled(2, 2, 1.0)).unwrap();
        let err = grad_check(|_| Ok(4.5), &mut store, DEFAULT_STEP).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn wrong_analytic_gradient_is_caught() {
        let mut store = ParamStore::new();
        store.insert("theta", Tensor2::filled(1, 1, 3.0)).unwrap();
        store
            .accumulate_grad("theta", &Tensor2::filled(1, 1, 5.0))
            .unwrap();
        let err = grad_check(
            |s| {
                let x = s.value("theta")?.get(0, 0);
                Ok(x * x)
            },
            &mut store,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(err > 0.1, "a wrong gradient must yield a large error, got {err}");
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut store = ParamStore::new();
        store.insert("theta", Tensor2::filled(1, 1, 0.0)).unwrap();
        let res = grad_check(|_| Ok(f64::NAN), &mut store, DEFAULT_STEP);
        assert!(matches!(res, Err(Error::Numeric(_))));
    }
}
