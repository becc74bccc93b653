//! First-order parameter updates: plain SGD and Adam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;

/// Optimizer choice and hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimSpec {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimSpec {
    pub fn sgd(lr: f64) -> Self {
        OptimSpec::Sgd { lr }
    }

    /// Adam with the standard moment coefficients.
    pub fn adam(lr: f64) -> Self {
        OptimSpec::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            OptimSpec::Sgd { lr } | OptimSpec::Adam { lr, .. } => lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate() <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate()
            )));
        }
        Ok(())
    }
}

impl Default for OptimSpec {
    /// Adam at 1e-3.
    fn default() -> Self {
        OptimSpec::adam(1e-3)
    }
}

/// Per-parameter optimizer state. Moment accumulators match parameter shapes;
/// the step counter only ever increases.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    spec: OptimSpec,
    first_moment: Vec<Matrix>,
    second_moment: Vec<Matrix>,
    step: u64,
}

impl OptimizerState {
    pub fn new(spec: OptimSpec, shapes: &[(usize, usize)]) -> Result<Self> {
        spec.validate()?;
        let zeros = |(r, c): &(usize, usize)| Matrix::from_parts(*r, *c, vec![0.0; r * c]);
        Ok(Self {
            spec,
            first_moment: shapes.iter().map(zeros).collect(),
            second_moment: shapes.iter().map(zeros).collect(),
            step: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn spec(&self) -> &OptimSpec {
        &self.spec
    }

    /// Apply one update. `frozen[i]` parameters are left untouched (their
    /// moments do not advance either).
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix], frozen: &[bool]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::Contract(format!(
                "optimizer built for {} parameters, got {} params / {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(Error::Contract(format!(
                    "gradient shape {:?} does not match parameter shape {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
            if !g.all_finite() {
                return Err(Error::Diverged("non-finite gradient".to_string()));
            }
        }
        self.step += 1;
        match self.spec {
            OptimSpec::Sgd { lr } => {
                for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                    if frozen.get(i).copied().unwrap_or(false) {
                        continue;
                    }
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv -= lr * gv;
                    }
                }
            }
            OptimSpec::Adam { lr, beta1, beta2, eps } => {
                let bc1 = 1.0 - beta1.powi(self.step as i32);
                let bc2 = 1.0 - beta2.powi(self.step as i32);
                for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                    if frozen.get(i).copied().unwrap_or(false) {
                        continue;
                    }
                    let m = self.first_moment[i].data_mut();
                    let v = self.second_moment[i].data_mut();
                    for ((pv, gv), (mv, vv)) in
                        p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut().zip(v.iter_mut()))
                    {
                        *mv = beta1 * *mv + (1.0 - beta1) * gv;
                        *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                        let m_hat = *mv / bc1;
                        let v_hat = *vv / bc2;
                        *pv -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(v: f64) -> Matrix {
        Matrix::scalar(v).unwrap()
    }

    #[test]
    fn sgd_basic_step() {
        let mut p = one_param(1.0);
        let mut st = OptimizerState::new(OptimSpec::sgd(0.1), &[(1, 1)]).unwrap();
        st.step(&mut [&mut p], &[one_param(2.0)], &[false]).unwrap();
        assert!((p.data()[0] - 0.8).abs() < 1e-15);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = one_param(0.7);
        let mut st = OptimizerState::new(OptimSpec::default(), &[(1, 1)]).unwrap();
        st.step(&mut [&mut p], &[one_param(0.0)], &[false]).unwrap();
        assert_eq!(p.data()[0], 0.7);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        // Bias-corrected first step with g = 1 everywhere is lr * g / (|g| + eps).
        let mut p = Matrix::row_vector(vec![0.5, -0.3, 2.0]).unwrap();
        let before = p.data().to_vec();
        let mut st = OptimizerState::new(OptimSpec::adam(1e-3), &[(1, 3)]).unwrap();
        st.step(&mut [&mut p], &[Matrix::row_vector(vec![1.0, 1.0, 1.0]).unwrap()], &[false])
            .unwrap();
        for (b, a) in before.iter().zip(p.data()) {
            assert!((b - a - 1e-3).abs() < 1e-9, "step was {}", b - a);
        }
    }

    #[test]
    fn nan_gradient_is_divergence() {
        let mut p = one_param(1.0);
        let mut st = OptimizerState::new(OptimSpec::default(), &[(1, 1)]).unwrap();
        let bad = Matrix::from_parts(1, 1, vec![f64::NAN]);
        assert!(matches!(
            st.step(&mut [&mut p], &[bad], &[false]),
            Err(Error::Diverged(_))
        ));
    }

    #[test]
    fn frozen_parameters_do_not_move() {
        let mut p = one_param(1.0);
        let mut q = one_param(1.0);
        let mut st = OptimizerState::new(OptimSpec::sgd(0.5), &[(1, 1), (1, 1)]).unwrap();
        st.step(
            &mut [&mut p, &mut q],
            &[one_param(1.0), one_param(1.0)],
            &[true, false],
        )
        .unwrap();
        assert_eq!(p.data()[0], 1.0);
        assert!((q.data()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_positive_learning_rate_rejected() {
        assert!(OptimizerState::new(OptimSpec::sgd(0.0), &[]).is_err());
    }
}
