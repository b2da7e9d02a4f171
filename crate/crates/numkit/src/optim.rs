//! Adam with bias correction. Optimizer state binds to the parameter list
//! order on the first step and is checkpointable for exact resumption.

use crate::error::{NumError, NumResult};
use crate::param::Parameter;
use crate::real::Real;
use crate::tensor::Tensor;

pub struct Adam<R: Real> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step_count: u64,
    m: Vec<Tensor<R>>,
    v: Vec<Tensor<R>>,
}

impl<R: Real> Adam<R> {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Apply one Adam update using each parameter's accumulated gradient.
    /// Gradients are left untouched; callers zero them between steps.
    pub fn step(&mut self, params: &mut [&mut Parameter<R>]) -> NumResult<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(NumError::invalid(
                "adam",
                format!("optimizer bound to {} params, got {}", self.m.len(), params.len()),
            ));
        }
        for (p, m) in params.iter().zip(&self.m) {
            if p.value.shape() != m.shape() {
                return Err(NumError::shape(
                    "adam",
                    format!("parameter `{}` changed shape since first step", p.name),
                ));
            }
        }
        for p in params.iter() {
            if !p.grad.all_finite() {
                return Err(NumError::NanGradient { name: p.name.clone() });
            }
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (i, p) in params.iter_mut().enumerate() {
            let md = self.m[i].data_mut();
            let vd = self.v[i].data_mut();
            let gd = p.grad.data();
            let pd = p.value.data_mut();
            for j in 0..gd.len() {
                let g = gd[j].to_f64();
                let m_new = self.beta1 * md[j].to_f64() + (1.0 - self.beta1) * g;
                let v_new = self.beta2 * vd[j].to_f64() + (1.0 - self.beta2) * g * g;
                md[j] = R::from_f64(m_new);
                vd[j] = R::from_f64(v_new);
                let m_hat = m_new / bc1;
                let v_hat = v_new / bc2;
                pd[j] = R::from_f64(pd[j].to_f64() - self.lr * m_hat / (v_hat.sqrt() + self.eps));
            }
        }
        Ok(())
    }

    /// Moment tensors and step counter, for checkpointing.
    pub fn state(&self) -> (u64, &[Tensor<R>], &[Tensor<R>]) {
        (self.step_count, &self.m, &self.v)
    }

    pub fn restore_state(&mut self, step_count: u64, m: Vec<Tensor<R>>, v: Vec<Tensor<R>>) {
        self.step_count = step_count;
        self.m = m;
        self.v = v;
    }
}
