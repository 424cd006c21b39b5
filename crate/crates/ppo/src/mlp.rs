//! Fully connected network over a flat parameter slice.
//!
//! Samples are columns: an input batch is `in × B`. Layer `l` stores its
//! weight matrix `out × in` column-major followed by its bias.

use nalgebra::{DMatrix, DMatrixView};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Elu,
}

/// `1 − 2/(e^{2x}+1)`: within a few ulps of `tanh` (absolute) and several
/// times faster than the libm routine, which dominates small-batch passes.
#[inline]
fn fast_tanh(x: f64) -> f64 {
    let e = (2.0 * x.clamp(-20.0, 20.0)).exp();
    1.0 - 2.0 / (e + 1.0)
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => fast_tanh(x),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Elu => {
                if a > 0.0 {
                    1.0
                } else {
                    a + 1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths including input and output.
    pub sizes: Vec<usize>,
    pub activation: Activation,
}

/// Layer outputs kept for the backward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct MlpCache {
    acts: Vec<DMatrix<f64>>,
}

impl Mlp {
    pub fn new(input: usize, hidden: &[usize], output: usize, activation: Activation) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        Mlp { sizes, activation }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (offset, in, out)
        let mut off = 0;
        self.sizes.windows(2).map(move |w| {
            let o = off;
            off += w[0] * w[1] + w[1];
            (o, w[0], w[1])
        })
    }

    pub fn num_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// LeCun-normal weights, zero biases; the last layer is scaled by
    /// `out_gain`.
    pub fn init<R: Rng>(&self, rng: &mut R, out_gain: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params()];
        let nl = self.sizes.len() - 1;
        for (l, (off, n_in, n_out)) in self.layers().enumerate() {
            let scale = (1.0 / n_in as f64).sqrt() * if l + 1 == nl { out_gain } else { 1.0 };
            for w in &mut p[off..off + n_in * n_out] {
                let z: f64 = StandardNormal.sample(rng);
                *w = scale * z;
            }
        }
        p
    }

    fn affine(params: &[f64], off: usize, n_in: usize, n_out: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
        let w = DMatrixView::from_slice(&params[off..off + n_in * n_out], n_out, n_in);
        let b = &params[off + n_in * n_out..off + n_in * n_out + n_out];
        let mut z = w * x;
        for mut col in z.column_iter_mut() {
            for (zi, bi) in col.iter_mut().zip(b) {
                *zi += bi;
            }
        }
        z
    }

    pub fn forward(&self, params: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward_cached(params, x).0
    }

    pub fn forward_cached(&self, params: &[f64], x: &DMatrix<f64>) -> (DMatrix<f64>, MlpCache) {
        debug_assert_eq!(params.len(), self.num_params());
        debug_assert_eq!(x.nrows(), self.input_dim());
        let nl = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(nl);
        let mut h = x.clone();
        for (l, (off, n_in, n_out)) in self.layers().enumerate() {
            let mut z = Self::affine(params, off, n_in, n_out, &h);
            if l + 1 < nl {
                z.apply(|v| *v = self.activation.apply(*v));
            }
            acts.push(std::mem::replace(&mut h, z));
        }
        (h, MlpCache { acts })
    }

    /// Accumulate `∂L/∂θ` into `grad` given `∂L/∂output`.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, d_out: DMatrix<f64>, grad: &mut [f64]) {
        let layers: Vec<_> = self.layers().collect();
        let mut delta = d_out;
        for (l, &(off, n_in, n_out)) in layers.iter().enumerate().rev() {
            let a_prev = &cache.acts[l];
            let dw = &delta * a_prev.transpose();
            for (g, d) in grad[off..off + n_in * n_out].iter_mut().zip(dw.iter()) {
                *g += d;
            }
            let gb = &mut grad[off + n_in * n_out..off + n_in * n_out + n_out];
            for col in delta.column_iter() {
                for (g, d) in gb.iter_mut().zip(col.iter()) {
                    *g += d;
                }
            }
            if l > 0 {
                let w = DMatrixView::from_slice(&params[off..off + n_in * n_out], n_out, n_in);
                let mut back = w.transpose() * &delta;
                back.zip_apply(a_prev, |d, a| *d *= self.activation.grad_from_output(a));
                delta = back;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_computed_forward() {
        // 2 → 2 (tanh) → 1
        let net = Mlp::new(2, &[2], 1, Activation::Tanh);
        // W1 column-major [[1, 2], [3, 4]] → [1, 3, 2, 4]
        let p = vec![1.0, 3.0, 2.0, 4.0, 0.1, -0.2, 0.5, -1.0, 0.3];
        let x = DMatrix::from_column_slice(2, 1, &[0.2, -0.1]);
        let h = [(0.2f64 - 0.2 + 0.1).tanh(), (0.6f64 - 0.4 - 0.2).tanh()];
        let expected = 0.5 * h[0] - h[1] + 0.3;
        assert!((net.forward(&p, &x)[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn backward_matches_finite_differences() {
        for act in [Activation::Tanh, Activation::Elu] {
            let net = Mlp::new(3, &[5, 4], 2, act);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let p = net.init(&mut rng, 1.0);
            let x = DMatrix::from_fn(3, 4, |i, j| ((i * 7 + j * 3) as f64 * 0.37).sin());
            // L = Σ c ⊙ y
            let c = DMatrix::from_fn(2, 4, |i, j| 0.5 + i as f64 - 0.3 * j as f64);
            let loss = |p: &[f64]| net.forward(p, &x).component_mul(&c).sum();
            let (_, cache) = net.forward_cached(&p, &x);
            let mut g = vec![0.0; p.len()];
            net.backward(&p, &cache, c.clone(), &mut g);
            for k in 0..p.len() {
                let mut pp = p.clone();
                let h = 1e-6;
                pp[k] += h;
                let up = loss(&pp);
                pp[k] -= 2.0 * h;
                let dn = loss(&pp);
                let fd = (up - dn) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "{act:?} param {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn fast_tanh_tracks_libm() {
        for k in -4000..=4000 {
            let x = k as f64 * 5e-3;
            assert!((fast_tanh(x) - x.tanh()).abs() < 1e-15);
        }
        assert_eq!(fast_tanh(1e3), 1.0);
        assert_eq!(fast_tanh(-1e3), -1.0);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::new(4, &[8, 8], 3, Activation::Tanh);
        let p = vec![0.0; net.num_params()];
        let y = net.forward(&p, &DMatrix::from_element(4, 2, 0.7));
        assert!(y.iter().all(|v| *v == 0.0));
    }
}
