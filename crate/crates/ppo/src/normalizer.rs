//! Streaming per-dimension mean/variance with parallel merging.

use serde::{Deserialize, Serialize};

pub const NORM_EPS: f64 = 1e-8;
pub const NORM_CLIP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNormalizer {
    pub count: f64,
    pub mean: Vec<f64>,
    /// Population variance.
    pub var: Vec<f64>,
    /// Below this many samples, `normalize` is the identity.
    pub warmup: f64,
}

impl RunningNormalizer {
    pub fn new(dim: usize) -> Self {
        RunningNormalizer {
            count: 0.0,
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            warmup: 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merge a batch of rows (each `dim` long) into the running statistics.
    pub fn update<'a>(&mut self, rows: impl IntoIterator<Item = &'a [f64]>) {
        let d = self.dim();
        let mut n = 0.0;
        let mut mean = vec![0.0; d];
        let mut m2 = vec![0.0; d];
        // Welford within the batch
        for row in rows {
            assert_eq!(row.len(), d, "observation dimension");
            n += 1.0;
            for i in 0..d {
                let delta = row[i] - mean[i];
                mean[i] += delta / n;
                m2[i] += delta * (row[i] - mean[i]);
            }
        }
        if n == 0.0 {
            return;
        }
        let batch_var: Vec<f64> = m2.iter().map(|m| m / n).collect();
        self.merge(n, &mean, &batch_var);
    }

    /// Chan et al. pairwise combination with another set of statistics.
    pub fn merge(&mut self, n_b: f64, mean_b: &[f64], var_b: &[f64]) {
        let n_a = self.count;
        let n = n_a + n_b;
        if n_a == 0.0 {
            self.mean.copy_from_slice(mean_b);
            self.var.copy_from_slice(var_b);
        } else {
            for i in 0..self.dim() {
                let delta = mean_b[i] - self.mean[i];
                let m2 = self.var[i] * n_a + var_b[i] * n_b + delta * delta * n_a * n_b / n;
                self.mean[i] += delta * n_b / n;
                self.var[i] = (m2 / n).max(0.0);
            }
        }
        self.count = n;
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut [f64]) {
        if self.count < self.warmup {
            out.copy_from_slice(x);
            return;
        }
        for i in 0..x.len() {
            out[i] = ((x[i] - self.mean[i]) / (self.var[i] + NORM_EPS).sqrt()).clamp(-NORM_CLIP, NORM_CLIP);
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.normalize_into(x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pass(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let n = rows.len() as f64;
        let d = rows[0].len();
        let mean: Vec<f64> = (0..d).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n).collect();
        let var = (0..d)
            .map(|i| rows.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / n)
            .collect();
        (mean, var)
    }

    fn sample_rows(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|k| {
                let t = k as f64;
                vec![(0.37 * t).sin() * 3.0 + 100.0, (t * 0.11).cos() * 1e-3, t * 0.5 - 7.0]
            })
            .collect()
    }

    #[test]
    fn single_batch_matches_two_pass() {
        let rows = sample_rows(257);
        let mut n = RunningNormalizer::new(3);
        n.update(rows.iter().map(Vec::as_slice));
        let (m, v) = two_pass(&rows);
        for i in 0..3 {
            assert!((n.mean[i] - m[i]).abs() < 1e-10 * (1.0 + m[i].abs()));
            assert!((n.var[i] - v[i]).abs() < 1e-10 * (1.0 + v[i].abs()));
        }
    }

    #[test]
    fn halves_merge_like_the_whole() {
        let rows = sample_rows(400);
        let mut split = RunningNormalizer::new(3);
        split.update(rows[..150].iter().map(Vec::as_slice));
        split.update(rows[150..].iter().map(Vec::as_slice));
        let (m, v) = two_pass(&rows);
        for i in 0..3 {
            assert!((split.mean[i] - m[i]).abs() < 1e-8 * (1.0 + m[i].abs()));
            assert!((split.var[i] - v[i]).abs() < 1e-8 * (1.0 + v[i].abs()));
        }
    }

    #[test]
    fn constant_input_normalizes_to_zero() {
        let rows = vec![vec![4.2, -1.0]; 50];
        let mut n = RunningNormalizer::new(2);
        n.update(rows.iter().map(Vec::as_slice));
        assert_eq!(n.var, vec![0.0, 0.0]);
        assert_eq!(n.normalize(&[4.2, -1.0]), vec![0.0, 0.0]);
        assert_eq!(n.normalize(&[1e9, -1.0])[0], NORM_CLIP);
    }

    #[test]
    fn identity_before_warmup() {
        let n = RunningNormalizer::new(2);
        assert_eq!(n.normalize(&[3.0, -5.0]), vec![3.0, -5.0]);
    }

    proptest! {
        #[test]
        fn variance_stays_non_negative(xs in proptest::collection::vec(-1e3..1e3f64, 1..60), split in 0usize..60) {
            let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
            let k = split.min(rows.len());
            let mut n = RunningNormalizer::new(1);
            n.update(rows[..k].iter().map(Vec::as_slice));
            n.update(rows[k..].iter().map(Vec::as_slice));
            prop_assert!(n.var[0] >= 0.0);
            prop_assert_eq!(n.count, rows.len() as f64);
        }
    }
}
