use super::Params;

/// Adam with bias correction and optional global-norm gradient clipping.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<P: Params>(params: &P, lr: f64, eps: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Clip `grads` to `max_grad_norm` (if given) and take one step.
    /// Returns the gradient norm before clipping.
    pub fn update<P: Params>(
        &mut self,
        params: &mut P,
        grads: &P,
        max_grad_norm: Option<f64>,
    ) -> f64 {
        let gs = grads.slices();
        let mut ps = params.slices_mut();
        assert_eq!(
            ps.len(),
            self.m.len(),
            "optimizer state does not match parameters"
        );
        let norm = global_norm(&gs);
        let scale = match max_grad_norm {
            Some(max) if norm > max => max / norm,
            _ => 1.0,
        };
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in ps.iter_mut().zip(&gs).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(
                p.len(),
                m.len(),
                "optimizer state does not match parameters"
            );
            for i in 0..p.len() {
                let gi = g[i] * scale;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        norm
    }
}

pub fn global_norm(slices: &[&[f64]]) -> f64 {
    slices
        .iter()
        .flat_map(|s| s.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}
