//! Rectified-flow numerics over flat tensors.
//!
//! The straight path between clean data `z0` and noise `z1` is
//! `z_t = (1 - t) z0 + t z1`; its velocity `z1 - z0` is the regression target
//! of conditional flow matching, and sampling integrates `dz = v(z, t) dt`
//! from `t = 1` back to `t = 0`. The noise endpoint is written `eps` or `z1`
//! interchangeably.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch(Vec<usize>, Vec<usize>),
    #[error("t = {0} is outside [0, 1]")]
    TOutOfRange(f64),
    #[error("integration needs 0 <= t_end <= t_start <= 1 and at least one step (t_start={t_start}, t_end={t_end}, steps={steps})")]
    InvalidSchedule { t_start: f64, t_end: f64, steps: usize },
    #[error("tensor contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatTensor {
    values: Vec<f64>,
    shape: Vec<usize>,
}

impl FlatTensor {
    pub fn new(values: Vec<f64>, shape: Vec<usize>) -> Result<FlatTensor, FlowError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite);
        }
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(FlowError::ShapeMismatch(shape, vec![values.len()]));
        }
        Ok(FlatTensor { values, shape })
    }

    /// One-dimensional tensor.
    pub fn from_vec(values: Vec<f64>) -> Result<FlatTensor, FlowError> {
        let n = values.len();
        FlatTensor::new(values, vec![n])
    }

    pub fn zeros_like(other: &FlatTensor) -> FlatTensor {
        FlatTensor { values: vec![0.0; other.values.len()], shape: other.shape.clone() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_shape(&self, o: &FlatTensor) -> Result<(), FlowError> {
        if self.shape != o.shape {
            return Err(FlowError::ShapeMismatch(self.shape.clone(), o.shape.clone()));
        }
        Ok(())
    }

    fn zip_with(&self, o: &FlatTensor, f: impl Fn(f64, f64) -> f64) -> Result<FlatTensor, FlowError> {
        self.check_shape(o)?;
        let values = self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(FlatTensor { values, shape: self.shape.clone() })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FlatTensor {
        FlatTensor { values: self.values.iter().map(|&v| f(v)).collect(), shape: self.shape.clone() }
    }
}

/// A velocity field `v(z, t)`; implemented for closures.
pub trait VelocityFn {
    fn velocity(&self, z: &FlatTensor, t: f64) -> FlatTensor;
}

impl<F> VelocityFn for F
where
    F: Fn(&FlatTensor, f64) -> FlatTensor,
{
    fn velocity(&self, z: &FlatTensor, t: f64) -> FlatTensor {
        self(z, t)
    }
}

/// Point on the straight path: `(1 - t) z0 + t eps`. Endpoints are exact.
pub fn interpolate(z0: &FlatTensor, eps: &FlatTensor, t: f64) -> Result<FlatTensor, FlowError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(FlowError::TOutOfRange(t));
    }
    if t == 0.0 {
        z0.check_shape(eps)?;
        return Ok(z0.clone());
    }
    if t == 1.0 {
        z0.check_shape(eps)?;
        return Ok(eps.clone());
    }
    z0.zip_with(eps, |a, b| (1.0 - t) * a + t * b)
}

/// Regression target `z1 - z0`.
pub fn cfm_target(z0: &FlatTensor, z1: &FlatTensor) -> Result<FlatTensor, FlowError> {
    z1.zip_with(z0, |b, a| b - a)
}

/// Mean over elements of `(pred_v - (z1 - z0))^2`.
pub fn cfm_loss(pred_v: &FlatTensor, z0: &FlatTensor, z1: &FlatTensor) -> Result<f64, FlowError> {
    let target = cfm_target(z0, z1)?;
    pred_v.check_shape(&target)?;
    if target.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred_v.values.iter().zip(&target.values).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / target.len() as f64)
}

/// Explicit Euler with `steps` uniform steps from `t_start` down to `t_end`.
pub fn euler_integrate(
    v: &impl VelocityFn,
    z_start: &FlatTensor,
    t_start: f64,
    t_end: f64,
    steps: usize,
) -> Result<FlatTensor, FlowError> {
    let valid = steps >= 1 && (0.0..=1.0).contains(&t_end) && (0.0..=1.0).contains(&t_start) && t_end <= t_start;
    if !valid {
        return Err(FlowError::InvalidSchedule { t_start, t_end, steps });
    }
    let dt = (t_end - t_start) / steps as f64;
    let mut z = z_start.clone();
    for i in 0..steps {
        let t = t_start + dt * i as f64;
        let vel = v.velocity(&z, t);
        z = z.zip_with(&vel, |a, b| a + b * dt)?;
    }
    Ok(z)
}
