use rand::Rng as _;

use crate::rng::Rng;
use crate::{Error, Result};

/// Ring buffer of transitions stored as `f32`. Storage grows on demand up to
/// `capacity`, then the oldest entries are overwritten.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    cursor: usize,
    len: usize,
    obs: Vec<f32>,
    next_obs: Vec<f32>,
    actions: Vec<f32>,
    rewards: Vec<f32>,
    dones: Vec<bool>,
    tags: Vec<u32>,
}

/// A sampled minibatch, row-major in `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplaySample {
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub dones: Vec<bool>,
    /// Caller-defined label of each transition (the frozen partner in play).
    pub tags: Vec<usize>,
    pub indices: Vec<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_dim,
            act_dim,
            cursor: 0,
            len: 0,
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, obs: &[f64], action: &[f64], reward: f64, next_obs: &[f64], done: bool) {
        self.push_tagged(obs, action, reward, next_obs, done, 0);
    }

    pub fn push_tagged(
        &mut self,
        obs: &[f64],
        action: &[f64],
        reward: f64,
        next_obs: &[f64],
        done: bool,
        tag: usize,
    ) {
        assert_eq!(obs.len(), self.obs_dim);
        assert_eq!(next_obs.len(), self.obs_dim);
        assert_eq!(action.len(), self.act_dim);
        let i = self.cursor;
        if i == self.rewards.len() {
            self.obs.extend(obs.iter().map(|&x| x as f32));
            self.next_obs.extend(next_obs.iter().map(|&x| x as f32));
            self.actions.extend(action.iter().map(|&x| x as f32));
            self.rewards.push(reward as f32);
            self.dones.push(done);
            self.tags.push(tag as u32);
        } else {
            let (o, a) = (i * self.obs_dim, i * self.act_dim);
            for (dst, &x) in self.obs[o..o + self.obs_dim].iter_mut().zip(obs) {
                *dst = x as f32;
            }
            for (dst, &x) in self.next_obs[o..o + self.obs_dim].iter_mut().zip(next_obs) {
                *dst = x as f32;
            }
            for (dst, &x) in self.actions[a..a + self.act_dim].iter_mut().zip(action) {
                *dst = x as f32;
            }
            self.rewards[i] = reward as f32;
            self.dones[i] = done;
            self.tags[i] = tag as u32;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Uniform sample with replacement from the filled region.
    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Result<ReplaySample> {
        if self.len < batch || batch == 0 {
            return Err(Error::contract(format!(
                "cannot sample {batch} transitions from a buffer holding {}",
                self.len
            )));
        }
        let indices: Vec<usize> = (0..batch).map(|_| rng.random_range(0..self.len)).collect();
        let mut s = ReplaySample {
            obs: Vec::with_capacity(batch * self.obs_dim),
            actions: Vec::with_capacity(batch * self.act_dim),
            rewards: Vec::with_capacity(batch),
            next_obs: Vec::with_capacity(batch * self.obs_dim),
            dones: Vec::with_capacity(batch),
            tags: Vec::with_capacity(batch),
            indices,
        };
        for &i in &s.indices {
            let (o, a) = (i * self.obs_dim, i * self.act_dim);
            s.obs
                .extend(self.obs[o..o + self.obs_dim].iter().map(|&x| x as f64));
            s.next_obs
                .extend(self.next_obs[o..o + self.obs_dim].iter().map(|&x| x as f64));
            s.actions
                .extend(self.actions[a..a + self.act_dim].iter().map(|&x| x as f64));
            s.rewards.push(self.rewards[i] as f64);
            s.dones.push(self.dones[i]);
            s.tags.push(self.tags[i] as usize);
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn overwrites_oldest_at_capacity() {
        let mut b = ReplayBuffer::new(3, 1, 1);
        for k in 0..5 {
            b.push(&[k as f64], &[0.0], k as f64, &[0.0], false);
        }
        assert_eq!(b.len(), 3);
        // slots hold 3, 4, 2
        assert_eq!(b.rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn underfilled_sampling_is_rejected() {
        let mut b = ReplayBuffer::new(10, 2, 1);
        b.push(&[0.0, 0.0], &[0.0], 0.0, &[0.0, 0.0], false);
        assert!(matches!(
            b.sample(2, &mut from_seed(0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sampling_is_uniform() {
        let n = 20;
        let mut b = ReplayBuffer::new(n, 1, 1);
        for k in 0..n {
            b.push(&[k as f64], &[0.0], 0.0, &[0.0], false);
        }
        let mut counts = vec![0usize; n];
        let mut rng = from_seed(7);
        let draws = 200_000;
        for _ in 0..draws / 10 {
            for i in b.sample(10, &mut rng).unwrap().indices {
                counts[i] += 1;
            }
        }
        let p = 1.0 / n as f64;
        let expect = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - expect).abs() < 3.5 * sd,
                "count {c} vs {expect}"
            );
        }
    }
}
