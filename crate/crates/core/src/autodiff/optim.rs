use super::params::{ParamId, ParamStore};
use super::tensor::Real;
use crate::error::{Error, Result};

pub const DEFAULT_CLIP_NORM: f64 = 5.0;

/// Plain SGD on the accumulated gradients with global-norm clipping, then
/// zeroes the accumulators. Returns the gradient norm before clipping.
pub fn sgd_step<T: Real>(store: &mut ParamStore<T>, learning_rate: f64, clip_norm: f64) -> Result<f64> {
    let norm = store.grad_norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    let scale = if clip_norm > 0.0 && norm > clip_norm {
        clip_norm / norm
    } else {
        1.0
    };
    let step = learning_rate * scale;
    for i in 0..store.len() {
        let p = store.get_mut(ParamId(i));
        let grad = std::mem::take(&mut p.grad);
        let mut bad = false;
        for (v, g) in p.value_mut().data_mut().iter_mut().zip(&grad) {
            let nv = v.to_f64() - step * g;
            bad |= !nv.is_finite();
            *v = T::from_f64(nv);
        }
        p.grad = grad;
        if bad {
            return Err(Error::NonFinite(format!("parameter {}", p.name)));
        }
    }
    store.zero_grad();
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Graph, Tensor};

    fn scalar_store(p: f64, g: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        let id = s.add("p", Tensor::scalar(p));
        s.get_mut(id).grad[0] = g;
        s
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let mut s = scalar_store(1.0, 2.0);
        sgd_step(&mut s, 0.0, DEFAULT_CLIP_NORM).unwrap();
        assert_eq!(s.iter().next().unwrap().1.value.item(), 1.0);
        assert_eq!(s.grad_norm(), 0.0);
    }

    #[test]
    fn single_step() {
        let mut s = scalar_store(1.0, 2.0);
        sgd_step(&mut s, 0.1, DEFAULT_CLIP_NORM).unwrap();
        assert!((s.iter().next().unwrap().1.value.item() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn clipping_bounds_the_step() {
        let mut s = scalar_store(0.0, 50.0);
        let norm = sgd_step(&mut s, 1.0, 5.0).unwrap();
        assert_eq!(norm, 50.0);
        assert!((s.iter().next().unwrap().1.value.item() + 5.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut s = scalar_store(0.0, f64::NAN);
        assert!(matches!(sgd_step(&mut s, 0.1, 5.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn quadratic_bowl_descends_monotonically() {
        // loss = Σ (p_i - c_i)^2, closed-form minimum at c.
        let target = [1.5, -2.0, 0.25];
        let mut s = ParamStore::<f64>::new();
        let id = s.add("p", Tensor::from_f64(1, 3, &[0.0; 3]).unwrap());
        let c = Tensor::from_f64(1, 3, &target).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let mut g = Graph::new();
            let p = g.param(&s, id);
            let neg = g.constant(c.clone());
            let neg = g.scale(neg, -1.0).unwrap();
            let d = g.add(p, neg).unwrap();
            let sq = g.matmul_t(d, d).unwrap();
            let loss = g.value(sq).item();
            assert!(loss < prev || loss == 0.0, "loss went from {prev} to {loss}");
            prev = loss;
            let grads = g.backward(sq).unwrap();
            s.accumulate(&grads, 1.0);
            sgd_step(&mut s, 0.05, DEFAULT_CLIP_NORM).unwrap();
        }
        assert!(prev < 1e-6);
    }
}
