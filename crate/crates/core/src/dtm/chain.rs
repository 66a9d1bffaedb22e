//! Scalar Gaussian random-walk chain with pseudo-observations.
//!
//! Each topic-word natural parameter follows β_0 ~ N(0, σ0²),
//! β_t ~ N(β_{t-1}, σ²). The variational posterior of a chain is the Kalman
//! smoothing posterior given pseudo-observations β̂_t with noise ν̂². Its
//! covariance does not depend on β̂, so it is computed once and shared by all
//! chains; only the means move during fitting.

use crate::math;

#[derive(Debug, Clone)]
pub struct ChainPrior {
    slices: usize,
    chain_variance: f64,
    init_variance: f64,
    obs_variance: f64,
    // filter quantities
    filtered_var: Vec<f64>,
    gain: Vec<f64>,
    // smoother quantities
    smoother_gain: Vec<f64>,
    smoothed_var: Vec<f64>,
    lag_cov: Vec<f64>,
}

impl ChainPrior {
    pub fn new(slices: usize, chain_variance: f64, init_variance: f64, obs_variance: f64) -> Self {
        assert!(slices >= 1);
        let mut predicted_var = Vec::with_capacity(slices);
        let mut filtered_var = Vec::with_capacity(slices);
        let mut gain = Vec::with_capacity(slices);
        for t in 0..slices {
            let pred = if t == 0 {
                init_variance
            } else {
                filtered_var[t - 1] + chain_variance
            };
            let k = pred / (pred + obs_variance);
            predicted_var.push(pred);
            filtered_var.push((1.0 - k) * pred);
            gain.push(k);
        }
        let mut smoother_gain = vec![0.0; slices];
        let mut smoothed_var = filtered_var.clone();
        let mut lag_cov = vec![0.0; slices];
        for t in (0..slices.saturating_sub(1)).rev() {
            let j = filtered_var[t] / predicted_var[t + 1];
            smoother_gain[t] = j;
            smoothed_var[t] = filtered_var[t] + j * j * (smoothed_var[t + 1] - predicted_var[t + 1]);
            lag_cov[t + 1] = j * smoothed_var[t + 1];
        }
        ChainPrior {
            slices,
            chain_variance,
            init_variance,
            obs_variance,
            filtered_var,
            gain,
            smoother_gain,
            smoothed_var,
            lag_cov,
        }
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    /// Posterior marginal variances Ṽ_t.
    pub fn smoothed_variances(&self) -> &[f64] {
        &self.smoothed_var
    }

    /// Posterior covariances Cov(β_t, β_{t-1}); entry 0 is unused.
    pub fn lag_covariances(&self) -> &[f64] {
        &self.lag_cov
    }

    /// Forward filter then RTS smoother; returns posterior means.
    pub fn smooth(&self, pseudo_obs: &[f64]) -> Vec<f64> {
        let n = self.slices;
        debug_assert_eq!(pseudo_obs.len(), n);
        let mut filtered = vec![0.0; n];
        let mut prev = 0.0;
        for t in 0..n {
            filtered[t] = prev + self.gain[t] * (pseudo_obs[t] - prev);
            prev = filtered[t];
        }
        let mut means = filtered.clone();
        for t in (0..n.saturating_sub(1)).rev() {
            means[t] = filtered[t] + self.smoother_gain[t] * (means[t + 1] - filtered[t]);
        }
        means
    }

    /// Prior precision Λ as (diagonal, off-diagonal).
    pub fn precision(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.slices;
        let inv = 1.0 / self.chain_variance;
        let mut diag = vec![0.0; n];
        diag[0] = 1.0 / self.init_variance;
        for t in 1..n {
            diag[t - 1] += inv;
            diag[t] += inv;
        }
        (diag, vec![-inv; n - 1])
    }

    /// Λm for a tridiagonal Λ.
    pub fn apply_precision(diag: &[f64], off: &[f64], m: &[f64]) -> Vec<f64> {
        let n = m.len();
        (0..n)
            .map(|t| {
                let mut v = diag[t] * m[t];
                if t > 0 {
                    v += off[t - 1] * m[t - 1];
                }
                if t + 1 < n {
                    v += off[t] * m[t + 1];
                }
                v
            })
            .collect()
    }

    /// Pseudo-observations whose smoothed means are `means`:
    /// β̂ = (ν̂²Λ + I) m.
    pub fn pseudo_observations(&self, means: &[f64]) -> Vec<f64> {
        let (diag, off) = self.precision();
        Self::apply_precision(&diag, &off, means)
            .into_iter()
            .zip(means)
            .map(|(lm, m)| self.obs_variance * lm + m)
            .collect()
    }

    pub fn obs_variance(&self) -> f64 {
        self.obs_variance
    }

    /// Terms of E_q[log p(β)] + H(q) that do not depend on the means:
    /// ½ log|Λ| − ½ log|Λ + I/ν̂²| + T/2 − ½ tr(ΛΣ).
    pub fn entropy_constant(&self) -> f64 {
        let (diag, off) = self.precision();
        let logdet_prior = math::tridiagonal_logdet(&diag, &off);
        let post_diag: Vec<f64> = diag.iter().map(|d| d + 1.0 / self.obs_variance).collect();
        let logdet_post = math::tridiagonal_logdet(&post_diag, &off);
        let mut trace = 0.0;
        for t in 0..self.slices {
            trace += diag[t] * self.smoothed_var[t];
            if t > 0 {
                trace += 2.0 * off[t - 1] * self.lag_cov[t];
            }
        }
        0.5 * logdet_prior - 0.5 * logdet_post + 0.5 * self.slices as f64 - 0.5 * trace
    }

    pub fn chain_variance(&self) -> f64 {
        self.chain_variance
    }

    pub fn init_variance(&self) -> f64 {
        self.init_variance
    }

    pub fn filtered_variances(&self) -> &[f64] {
        &self.filtered_var
    }
}
