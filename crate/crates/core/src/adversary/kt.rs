use crate::error::{Error, Result};
use crate::learner::OnlineLearner;
use crate::vector::Vector;

/// One-dimensional Krichevsky-Trofimov coin bettor.
///
/// Bets the fraction `(sum -g_i) / (t + 1)` of its wealth
/// `eps + sum -g_i w_i`. Gradients must lie in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KtBettor {
    epsilon: f64,
    neg_grad_sum: f64,
    reward: f64,
    t: usize,
    w: f64,
}

impl KtBettor {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial wealth must be positive, got {epsilon}"
            )));
        }
        Ok(KtBettor {
            epsilon,
            neg_grad_sum: 0.0,
            reward: 0.0,
            t: 0,
            w: 0.0,
        })
    }

    pub fn wealth(&self) -> f64 {
        self.epsilon + self.reward
    }
}

impl OnlineLearner for KtBettor {
    fn dim(&self) -> usize {
        1
    }

    fn predict(&self) -> Vector {
        Vector::scalar(self.w)
    }

    fn observe(&mut self, gradient: &Vector, _hint: f64) -> Result<()> {
        gradient.check_dim(1)?;
        let g = gradient[0];
        if g.abs() > 1.0 {
            return Err(Error::HintViolated {
                norm: g.abs(),
                hint: 1.0,
            });
        }
        self.reward += -g * self.w;
        self.neg_grad_sum += -g;
        self.t += 1;
        let wealth = self.wealth();
        if wealth <= 0.0 || wealth.is_nan() {
            return Err(Error::WealthExhausted { wealth, round: self.t });
        }
        self.w = self.neg_grad_sum / (self.t + 1) as f64 * wealth;
        Ok(())
    }

    fn reset(&mut self) {
        *self = KtBettor::new(self.epsilon).expect("validated at construction");
    }
}
