use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;

/// Discretized Ornstein–Uhlenbeck torque noise, one channel per human joint.
///
/// Stationary mean 0 and standard deviation `amplitude`; correlation time
/// `timescale`.
#[derive(Clone, Debug, PartialEq)]
pub struct TremorProcess {
    pub amplitude: f64,
    pub timescale: f64,
    pub value: [f64; 3],
}

impl TremorProcess {
    /// Starts from a draw of the stationary distribution.
    pub fn new(amplitude: f64, timescale: f64, rng: &mut Rng) -> Self {
        let mut value = [0.0; 3];
        for v in &mut value {
            let z: f64 = StandardNormal.sample(rng);
            *v = amplitude * z;
        }
        Self {
            amplitude,
            timescale,
            value,
        }
    }

    pub fn advance(&mut self, dt: f64, rng: &mut Rng) -> [f64; 3] {
        if self.amplitude == 0.0 {
            return [0.0; 3];
        }
        let decay = (-dt / self.timescale).exp();
        let diffusion = self.amplitude * (1.0 - decay * decay).sqrt();
        for v in &mut self.value {
            let z: f64 = StandardNormal.sample(rng);
            *v = decay * *v + diffusion * z;
        }
        self.value
    }
}
