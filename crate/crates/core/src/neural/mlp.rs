use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;

use crate::rng::Rng;
use crate::{Error, Result};

/// Fully connected layer computing `x · weight + bias` for row-vector inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// Shape `(inputs, outputs)`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            weight: Array2::zeros((n_in, n_out)),
            bias: Array1::zeros(n_out),
        }
    }

    pub fn n_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn n_out(&self) -> usize {
        self.weight.ncols()
    }
}

/// Feed-forward network: tanh on hidden layers, identity on the output.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

/// Activations saved by [`MlpParams::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// Input of every layer; entry 0 is the network input.
    inputs: Vec<Array2<f64>>,
    fingerprint: u64,
}

impl MlpParams {
    /// Uniform fan-in initialization; the last layer is scaled by `out_gain`.
    pub fn init(sizes: &[usize], out_gain: f64, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs an input and an output size");
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let gain = if k + 1 == n { out_gain } else { 1.0 };
                Dense {
                    weight: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        gain * rng.random_range(-bound..bound)
                    }),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.n_in(), l.n_out()))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::n_out)
    }

    /// `[inputs, hidden..., outputs]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::n_out));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::contract("network has no layers"));
        }
        for (k, pair) in self.layers.windows(2).enumerate() {
            if pair[0].n_out() != pair[1].n_in() {
                return Err(Error::contract(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    pair[0].n_out(),
                    k + 1,
                    pair[1].n_in()
                )));
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.n_out() {
                return Err(Error::contract("bias length differs from layer width"));
            }
            if l.weight.iter().chain(l.bias.iter()).any(|x| !x.is_finite()) {
                return Err(Error::contract("non-finite network parameter"));
            }
        }
        Ok(())
    }

    fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for l in &self.layers {
            for x in l.weight.iter().chain(l.bias.iter()) {
                h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    /// Batched forward pass over the rows of `x`.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::contract(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = h.dot(&l.weight);
            z += &l.bias;
            if k < last {
                z.mapv_inplace(f64::tanh);
            }
            inputs.push(h);
            h = z;
        }
        Ok((
            h,
            MlpCache {
                inputs,
                fingerprint: self.fingerprint(),
            },
        ))
    }

    /// Forward pass without keeping activations.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::contract(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (k, l) in self.layers.iter().enumerate() {
            h = h.dot(&l.weight);
            h += &l.bias;
            if k < last {
                h.mapv_inplace(f64::tanh);
            }
        }
        Ok(h)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view =
            ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::contract(e.to_string()))?;
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    /// Reverse pass: parameter gradients summed over the batch, and the input gradient.
    pub fn backward(
        &self,
        cache: &MlpCache,
        grad_out: ArrayView2<f64>,
    ) -> Result<(MlpParams, Array2<f64>)> {
        if cache.inputs.len() != self.layers.len() || cache.fingerprint != self.fingerprint() {
            return Err(Error::contract(
                "activation cache does not belong to these parameters",
            ));
        }
        let batch = cache.inputs[0].nrows();
        if grad_out.dim() != (batch, self.output_dim()) {
            return Err(Error::contract(format!(
                "output gradient has shape {:?}, expected ({batch}, {})",
                grad_out.dim(),
                self.output_dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.to_owned();
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let input = &cache.inputs[k];
            grads.push(Dense {
                weight: input.t().dot(&g).as_standard_layout().into_owned(),
                bias: g.sum_axis(Axis(0)),
            });
            let mut gin = g.dot(&l.weight.t());
            if k > 0 {
                // input of layer k is tanh output of layer k-1
                gin.zip_mut_with(input, |gi, &y| *gi *= 1.0 - y * y);
            }
            g = gin;
        }
        grads.reverse();
        Ok((MlpParams { layers: grads }, g))
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &MlpParams, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.scaled_add(scale, &b.weight);
            a.bias.scaled_add(scale, &b.bias);
        }
    }

    /// Polyak averaging: `self = (1 - tau) * self + tau * source`.
    pub fn polyak_from(&mut self, source: &MlpParams, tau: f64) {
        for (a, b) in self.layers.iter_mut().zip(&source.layers) {
            a.weight
                .zip_mut_with(&b.weight, |x, &y| *x = (1.0 - tau) * *x + tau * y);
            a.bias
                .zip_mut_with(&b.bias, |x, &y| *x = (1.0 - tau) * *x + tau * y);
        }
    }
}

impl super::Params for MlpParams {
    fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};

    use super::*;
    use crate::neural::Params;
    use crate::rng::from_seed;

    fn random_input(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = MlpParams {
            layers: vec![Dense {
                weight: Array2::eye(3),
                bias: Array1::zeros(3),
            }],
        };
        assert_eq!(
            net.predict_one(&[0.5, -2.0, 7.0]).unwrap(),
            vec![0.5, -2.0, 7.0]
        );
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = MlpParams::zeros(&[4, 5, 2]);
        net.layers[1].bias = array![1.5, -0.25];
        assert_eq!(
            net.predict_one(&[3.0, 1.0, -9.0, 2.0]).unwrap(),
            vec![1.5, -0.25]
        );
    }

    #[test]
    fn matches_scalar_loop_oracle() {
        let mut rng = from_seed(0);
        let net = MlpParams::init(&[52, 64, 64, 7], 1.0, &mut rng);
        let x = random_input(5, 52, &mut rng);
        let (y, _) = net.forward(x.view()).unwrap();
        for r in 0..5 {
            let mut h: Vec<f64> = x.row(r).to_vec();
            for (k, l) in net.layers.iter().enumerate() {
                let mut z = vec![0.0; l.n_out()];
                for (j, zj) in z.iter_mut().enumerate() {
                    let mut acc = l.bias[j];
                    for (i, hi) in h.iter().enumerate() {
                        acc += hi * l.weight[[i, j]];
                    }
                    *zj = if k + 1 < net.layers.len() {
                        acc.tanh()
                    } else {
                        acc
                    };
                }
                h = z;
            }
            for (a, b) in h.iter().zip(y.row(r)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let mut rng = from_seed(1);
        let net = MlpParams::init(&[3, 2], 1.0, &mut rng);
        let x = array![[0.3, -1.0, 2.0]];
        let c = array![[0.7, -0.4]];
        let (_, cache) = net.forward(x.view()).unwrap();
        let (g, gin) = net.backward(&cache, c.view()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(g.layers[0].weight[[i, j]], x[[0, i]] * c[[0, j]]);
            }
        }
        assert_eq!(g.layers[0].bias, array![0.7, -0.4]);
        assert_eq!(gin, c.dot(&net.layers[0].weight.t()));
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = from_seed(2);
        let net = MlpParams::init(&[4, 8, 3], 1.0, &mut rng);
        let x = random_input(6, 4, &mut rng);
        let (_, cache) = net.forward(x.view()).unwrap();
        let (g, gin) = net.backward(&cache, Array2::zeros((6, 3)).view()).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert!(gin.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_central_differences() {
        let shapes: [&[usize]; 10] = [
            &[1, 1],
            &[3, 2],
            &[2, 4, 1],
            &[5, 3, 3],
            &[4, 6, 6, 2],
            &[7, 5, 4, 3],
            &[3, 8, 2],
            &[6, 2, 2, 2],
            &[2, 3, 4, 5, 1],
            &[8, 16, 16, 4],
        ];
        let mut rng = from_seed(3);
        for sizes in shapes {
            let net = MlpParams::init(sizes, 1.0, &mut rng);
            let x = random_input(3, sizes[0], &mut rng);
            let c = random_input(3, *sizes.last().unwrap(), &mut rng);
            let loss = |n: &MlpParams, x: &Array2<f64>| (n.predict(x.view()).unwrap() * &c).sum();
            let (_, cache) = net.forward(x.view()).unwrap();
            let (g, gin) = net.backward(&cache, c.view()).unwrap();
            let h = 1e-5;
            let check = |analytic: f64, numeric: f64| {
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
                assert!(rel < 1e-4, "analytic {analytic} numeric {numeric}");
            };
            let gs = g.slices();
            for (si, s) in net.slices().iter().enumerate() {
                for k in 0..s.len() {
                    let mut plus = net.clone();
                    plus.slices_mut()[si][k] += h;
                    let mut minus = net.clone();
                    minus.slices_mut()[si][k] -= h;
                    check(gs[si][k], (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h));
                }
            }
            for idx in 0..x.len() {
                let (r, col) = (idx / x.ncols(), idx % x.ncols());
                let mut xp = x.clone();
                xp[[r, col]] += h;
                let mut xm = x.clone();
                xm[[r, col]] -= h;
                check(
                    gin[[r, col]],
                    (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h),
                );
            }
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = from_seed(4);
        let mut net = MlpParams::init(&[2, 3, 1], 1.0, &mut rng);
        let (_, cache) = net.forward(array![[0.1, 0.2]].view()).unwrap();
        net.layers[0].bias[0] += 1.0;
        assert!(matches!(
            net.backward(&cache, array![[1.0]].view()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let net = MlpParams::zeros(&[3, 2]);
        assert!(net.forward(array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn polyak_with_unit_tau_copies() {
        let mut rng = from_seed(5);
        let online = MlpParams::init(&[3, 4, 2], 1.0, &mut rng);
        let mut target = MlpParams::init(&[3, 4, 2], 1.0, &mut rng);
        target.polyak_from(&online, 1.0);
        assert_eq!(target, online);
    }
}
