//! Central finite-difference check of analytic gradients.

use super::graph::{Graph, Var};
use super::params::{ParamId, ParamStore};
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Perturbation `h` of the central difference.
    pub step: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Denominator floor of the relative error, so that entries whose true
    /// gradient is exactly zero are compared absolutely.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tolerance: 1e-4,
            floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradMismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    pub failures: Vec<GradMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares the gradient of `build`'s scalar output against central
/// differences for every entry of every parameter in `store`.
pub fn grad_check<F>(store: &mut ParamStore<f64>, build: F, opts: GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let eval = |store: &ParamStore<f64>| -> Result<f64> {
        let mut g = Graph::new();
        let out = build(&mut g, store)?;
        Ok(g.value(out).item())
    };

    let mut g = Graph::new();
    let out = build(&mut g, store)?;
    let grads = g.backward(out)?;

    let mut report = GradCheckReport::default();
    for i in 0..store.len() {
        let id = ParamId(i);
        let len = store.value(id).len();
        let analytic: Vec<f64> = grads
            .get(id)
            .map(|g| g.to_vec())
            .unwrap_or_else(|| vec![0.0; len]);
        for k in 0..len {
            let orig = store.value(id).data()[k];
            store.get_mut(id).value_mut().data_mut()[k] = orig + opts.step;
            let plus = eval(store)?;
            store.get_mut(id).value_mut().data_mut()[k] = orig - opts.step;
            let minus = eval(store)?;
            store.get_mut(id).value_mut().data_mut()[k] = orig;

            let numeric = (plus - minus) / (2.0 * opts.step);
            let err = relative_error(analytic[k], numeric, opts.floor);
            report.checked += 1;
            report.max_relative_error = report.max_relative_error.max(err);
            if err >= opts.tolerance {
                report.failures.push(GradMismatch {
                    param: store.get(id).name.clone(),
                    index: k,
                    analytic: analytic[k],
                    numeric,
                    relative_error: err,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn identity_graph_matches_exactly() {
        let mut s = ParamStore::new();
        s.add("x", Tensor::from_f64(1, 3, &[0.5, -1.0, 2.0]).unwrap());
        let r = grad_check(
            &mut s,
            |g, s| {
                let x = g.param(s, ParamId(0));
                g.sum(x)
            },
            GradCheckOptions::default(),
        )
        .unwrap();
        assert!(r.passed());
        assert_eq!(r.checked, 3);
        assert!(r.max_relative_error < 1e-9);
    }

    #[test]
    fn corrupted_backward_fails() {
        let mut s = ParamStore::new();
        s.add("x", Tensor::from_f64(1, 2, &[0.5, -1.0]).unwrap());
        let r = grad_check(
            &mut s,
            |g, s| {
                let x = g.param(s, ParamId(0));
                let y = g.scale_gradient(x, 1.5)?;
                g.sum(y)
            },
            GradCheckOptions::default(),
        )
        .unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures.len(), 2);
    }
}
