use ndarray::ArrayView2;

use super::{GaussianHead, HeadSample, MlpParams, Params};
use crate::rng::Rng;
use crate::{Error, Result};

/// Actor network plus its action distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub net: MlpParams,
    pub head: GaussianHead,
}

impl Policy {
    /// Unsquashed Gaussian policy with a learned state-independent log-std.
    pub fn gaussian(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        init_logstd: f64,
        rng: &mut Rng,
    ) -> Self {
        let sizes = layer_sizes(obs_dim, hidden, act_dim);
        Self {
            net: MlpParams::init(&sizes, 0.01, rng),
            head: GaussianHead::StateIndependent {
                logstd: vec![init_logstd; act_dim],
            },
        }
    }

    /// Tanh-squashed policy whose network also outputs the log-std.
    pub fn squashed(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut Rng) -> Self {
        let sizes = layer_sizes(obs_dim, hidden, 2 * act_dim);
        Self {
            net: MlpParams::init(&sizes, 0.01, rng),
            head: GaussianHead::TanhSquashed { act_dim },
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.head.act_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        if self.net.output_dim() != self.head.net_outputs() {
            return Err(Error::contract(format!(
                "network has {} outputs but the head needs {}",
                self.net.output_dim(),
                self.head.net_outputs()
            )));
        }
        Ok(())
    }

    pub fn sample(&self, obs: &[f64], rng: &mut Rng) -> Result<HeadSample> {
        Ok(self.head.sample(&self.net.predict_one(obs)?, rng))
    }

    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.head.mean_action(&self.net.predict_one(obs)?))
    }

    /// Noise-free actions for every row of `obs`, row-major.
    pub fn mean_actions(&self, obs: ArrayView2<f64>) -> Result<Vec<f64>> {
        let out = self.net.predict(obs)?;
        let mut actions = Vec::with_capacity(obs.nrows() * self.act_dim());
        for row in out.rows() {
            actions.extend(
                self.head
                    .mean_action(row.as_slice().expect("standard layout")),
            );
        }
        Ok(actions)
    }
}

pub(crate) fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl Params for Policy {
    fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.net.slices();
        if let GaussianHead::StateIndependent { logstd } = &self.head {
            s.push(logstd);
        }
        s
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.net.slices_mut();
        if let GaussianHead::StateIndependent { logstd } = &mut self.head {
            s.push(logstd);
        }
        s
    }
}
