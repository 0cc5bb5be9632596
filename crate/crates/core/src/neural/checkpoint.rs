use std::io::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Dense, GaussianHead, MlpParams, Policy};
use crate::envs::{AgentRole, DisabilityProfile, TaskId};
use crate::{Error, Result};

const MAGIC: &[u8; 5] = b"ASTX1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    StateIndependent,
    TanhSquashed,
}

/// JSON header of a policy checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub task: TaskId,
    pub algorithm: String,
    pub agent_role: AgentRole,
    pub disability: DisabilityProfile,
    pub seed: u64,
    pub head: HeadKind,
    /// Shape of every stored array in file order: weight and bias of each
    /// layer, then the log-std vector for state-independent heads.
    pub layer_shapes: Vec<Vec<usize>>,
}

/// A serialized actor.
///
/// Layout: `ASTX1`, header length as `u32` little-endian, the JSON header,
/// then every array as little-endian `f32` in header order. Loading rounds
/// parameters to `f32`, so load/save reproduces a file byte for byte.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub policy: Policy,
}

impl Checkpoint {
    pub fn new(
        task: TaskId,
        algorithm: &str,
        agent_role: AgentRole,
        disability: DisabilityProfile,
        seed: u64,
        policy: Policy,
    ) -> Self {
        let mut layer_shapes: Vec<Vec<usize>> = Vec::new();
        for l in &policy.net.layers {
            layer_shapes.push(vec![l.n_in(), l.n_out()]);
            layer_shapes.push(vec![l.n_out()]);
        }
        let head = match &policy.head {
            GaussianHead::StateIndependent { logstd } => {
                layer_shapes.push(vec![logstd.len()]);
                HeadKind::StateIndependent
            }
            GaussianHead::TanhSquashed { .. } => HeadKind::TanhSquashed,
        };
        Self {
            header: CheckpointHeader {
                task,
                algorithm: algorithm.to_owned(),
                agent_role,
                disability,
                seed,
                head,
                layer_shapes,
            },
            policy,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let header_len = u32::try_from(header.len())
            .map_err(|_| Error::Checkpoint("header too large".into()))?;
        let mut out = Vec::with_capacity(9 + header.len() + 4 * self.policy.net.num_params());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(&header);
        let mut push = |xs: &mut dyn Iterator<Item = f64>| {
            for x in xs {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        };
        for l in &self.policy.net.layers {
            push(&mut l.weight.iter().copied());
            push(&mut l.bias.iter().copied());
        }
        if let GaussianHead::StateIndependent { logstd } = &self.policy.head {
            push(&mut logstd.iter().copied());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_owned());
        if bytes.len() < 9 || &bytes[..5] != MAGIC {
            return Err(bad("missing ASTX1 magic"));
        }
        let header_len = u32::from_le_bytes(bytes[5..9].try_into().expect("four bytes")) as usize;
        let body = bytes
            .get(9..9 + header_len)
            .ok_or_else(|| bad("truncated header"))?;
        let header: CheckpointHeader = serde_json::from_slice(body)?;
        let mut floats = bytes[9 + header_len..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")) as f64);
        let expected: usize = header
            .layer_shapes
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum();
        if bytes.len() - 9 - header_len != 4 * expected {
            return Err(bad("parameter block size does not match the header"));
        }

        let shapes = &header.layer_shapes;
        let n_arrays = shapes.len() - usize::from(header.head == HeadKind::StateIndependent);
        if !n_arrays.is_multiple_of(2) || n_arrays == 0 {
            return Err(bad("layer shapes must come in weight/bias pairs"));
        }
        let mut layers = Vec::with_capacity(n_arrays / 2);
        for pair in shapes[..n_arrays].chunks(2) {
            let (w, b) = (&pair[0], &pair[1]);
            if w.len() != 2 || b.len() != 1 || b[0] != w[1] {
                return Err(bad("inconsistent layer shape"));
            }
            let weight =
                Array2::from_shape_vec((w[0], w[1]), floats.by_ref().take(w[0] * w[1]).collect())
                    .map_err(|e| bad(&e.to_string()))?;
            let bias = Array1::from_iter(floats.by_ref().take(b[0]));
            layers.push(Dense { weight, bias });
        }
        let net = MlpParams { layers };
        let head = match header.head {
            HeadKind::StateIndependent => GaussianHead::StateIndependent {
                logstd: floats.by_ref().take(shapes[n_arrays][0]).collect(),
            },
            HeadKind::TanhSquashed => GaussianHead::TanhSquashed {
                act_dim: net.output_dim() / 2,
            },
        };
        let policy = Policy { net, head };
        policy.validate().map_err(|e| bad(&e.to_string()))?;
        if policy.act_dim() != header.agent_role.action_dim() {
            return Err(bad("action dimension does not match the agent role"));
        }
        if policy.obs_dim() != header.task.obs_dim() {
            return Err(bad("observation dimension does not match the task"));
        }
        Ok(Self { header, policy })
    }

    /// Writes atomically through a temporary sibling file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read(path) {
            Ok(bytes) => Self::from_bytes(&bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(Error::MissingCheckpoint(path.to_owned()))
            }
            Err(e) => Err(e.into()),
        }
    }
}
