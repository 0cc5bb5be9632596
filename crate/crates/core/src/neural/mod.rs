//! Small dense networks with exact gradients, Adam, Gaussian action heads
//! and the policy checkpoint format.

mod adam;
mod checkpoint;
mod head;
mod mlp;
mod policy;

pub use adam::{global_norm, AdamState};
pub use checkpoint::{Checkpoint, CheckpointHeader, HeadKind};
pub use head::{
    clamp_logstd, gaussian_entropy, gaussian_log_prob, log_one_minus_tanh_sq, policy_sample,
    softplus, GaussianHead, HeadSample, LOGSTD_MAX, LOGSTD_MIN,
};
pub use mlp::{Dense, MlpCache, MlpParams};
pub use policy::Policy;

/// Hidden layer widths used for every actor and critic.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// Parameter containers viewed as a list of flat slices, in a fixed order.
pub trait Params {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;
}

impl Params for Vec<f64> {
    fn slices(&self) -> Vec<&[f64]> {
        vec![self]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self]
    }
}
