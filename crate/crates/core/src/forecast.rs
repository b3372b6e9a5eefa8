//! Demand realization and rolling forecasts with random-walk error.
//!
//! A scenario draws the realized demand around a mean profile; forecasts made
//! at interval `t` for `t + k` add a k-step random walk on top of the
//! realization, so error variance grows linearly in the look-ahead depth.
//! Every draw is derived from the scenario seed through per-(t) substreams,
//! which keeps traces identical no matter how scenarios are scheduled across
//! threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Demand can never drop below this fraction of its mean; large negative
/// Gaussian draws are clamped rather than resampled.
pub const DEMAND_FLOOR_FRACTION: f64 = 0.01;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForecastError {
    #[error("forecast target {target} is outside the horizon of length {horizon}")]
    IndexOutOfHorizon { target: usize, horizon: usize },
}

/// How the noise scales are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Sigmas are fractions of each interval's mean demand.
    #[default]
    FractionOfMean,
    /// Sigmas are absolute MW.
    AbsoluteMw,
}

/// One realized demand trace plus the parameters needed to forecast from it.
#[derive(Debug, Clone)]
pub struct DemandScenario {
    pub mean: Vec<f64>,
    pub realization: Vec<f64>,
    pub seed: u64,
    pub sigma_load: f64,
    pub sigma_step: f64,
    pub sigma_mode: SigmaMode,
}

fn substream(seed: u64, domain: u64, t: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&t.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

const DOMAIN_REALIZE: u64 = 0x1001;
const DOMAIN_FORECAST: u64 = 0x2002;

/// Draw a realized demand trace: `d_t = mean_t + sigma_t * N(0,1)`, clamped
/// at a floor of 1% of the mean so demand stays positive.
pub fn realize(
    mean: &[f64],
    sigma_load: f64,
    sigma_step: f64,
    sigma_mode: SigmaMode,
    seed: u64,
) -> DemandScenario {
    let mut rng = substream(seed, DOMAIN_REALIZE, 0);
    let realization = mean
        .iter()
        .map(|&m| {
            let sigma = match sigma_mode {
                SigmaMode::FractionOfMean => sigma_load * m,
                SigmaMode::AbsoluteMw => sigma_load,
            };
            let nu: f64 = rng.sample(StandardNormal);
            (m + sigma * nu).max(DEMAND_FLOOR_FRACTION * m)
        })
        .collect();
    DemandScenario {
        mean: mean.to_vec(),
        realization,
        seed,
        sigma_load,
        sigma_step,
        sigma_mode,
    }
}

impl DemandScenario {
    pub fn horizon(&self) -> usize {
        self.realization.len()
    }

    fn step_sigma(&self, interval: usize) -> f64 {
        match self.sigma_mode {
            SigmaMode::FractionOfMean => self.sigma_step * self.mean[interval],
            SigmaMode::AbsoluteMw => self.sigma_step,
        }
    }

    /// Forecast of demand at `t + k` made at interval `t` (0-based).
    ///
    /// `k = 0` returns the realization exactly. For `k >= 1` the forecast is
    /// the realization plus a k-step random walk whose increments are shared
    /// across look-ahead depths: the k-step and (k+1)-step forecasts made at
    /// the same `t` agree on the first k increments.
    pub fn forecast(&self, t: usize, k: usize) -> Result<f64, ForecastError> {
        let target = t + k;
        if target >= self.horizon() {
            return Err(ForecastError::IndexOutOfHorizon {
                target,
                horizon: self.horizon(),
            });
        }
        if k == 0 {
            return Ok(self.realization[t]);
        }
        let mut rng = substream(self.seed, DOMAIN_FORECAST, t as u64);
        let mut walk = 0.0;
        for i in 1..=k {
            let eps: f64 = rng.sample(StandardNormal);
            walk += self.step_sigma(t + i) * eps;
        }
        let m = self.mean[target];
        Ok((self.realization[target] + walk).max(DEMAND_FLOOR_FRACTION * m))
    }

    /// Forecasts for the window `t .. t+len-1`, truncated at the horizon end.
    pub fn window_forecasts(&self, t: usize, len: usize) -> Vec<f64> {
        let last = (t + len).min(self.horizon());
        (t..last)
            .map(|target| self.forecast(t, target - t).expect("target within horizon"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MEAN: [f64; 6] = [400.0, 450.0, 500.0, 480.0, 420.0, 380.0];

    #[test]
    fn zero_sigma_reproduces_mean() {
        let sc = realize(&MEAN, 0.0, 0.0, SigmaMode::FractionOfMean, 17);
        assert_eq!(sc.realization, MEAN.to_vec());
        for t in 0..6 {
            for k in 0..6 - t {
                assert_eq!(sc.forecast(t, k).unwrap(), MEAN[t + k]);
            }
        }
    }

    #[test]
    fn same_seed_is_deterministic() {
        let a = realize(&MEAN, 0.04, 0.006, SigmaMode::FractionOfMean, 99);
        let b = realize(&MEAN, 0.04, 0.006, SigmaMode::FractionOfMean, 99);
        assert_eq!(a.realization, b.realization);
        assert_eq!(a.forecast(1, 3).unwrap(), b.forecast(1, 3).unwrap());
    }

    #[test]
    fn first_interval_forecast_is_exact() {
        let sc = realize(&MEAN, 0.04, 0.006, SigmaMode::FractionOfMean, 3);
        for t in 0..6 {
            assert_eq!(sc.forecast(t, 0).unwrap(), sc.realization[t]);
        }
    }

    #[test]
    fn out_of_horizon_is_an_error() {
        let sc = realize(&MEAN, 0.0, 0.0, SigmaMode::FractionOfMean, 0);
        assert_eq!(
            sc.forecast(4, 2),
            Err(ForecastError::IndexOutOfHorizon {
                target: 6,
                horizon: 6
            })
        );
    }

    #[test]
    fn realization_std_matches_sigma_load() {
        // Statistical check on the per-interval noise scale.
        let mean = [500.0];
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..n {
            let d = realize(&mean, 0.04, 0.0, SigmaMode::FractionOfMean, seed).realization[0];
            sum += d;
            sumsq += d * d;
        }
        let m = sum / n as f64;
        let std = (sumsq / n as f64 - m * m).sqrt();
        let expected = 0.04 * 500.0;
        assert!(
            (std - expected).abs() < 0.05 * expected,
            "std {std} vs {expected}"
        );
    }

    #[test]
    fn walk_variance_grows_linearly_in_k() {
        let mean = [500.0; 8];
        let n = 100_000;
        for k in 1..=3usize {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for seed in 0..n {
                let sc = realize(&mean, 0.0, 0.006, SigmaMode::FractionOfMean, seed);
                let err = sc.forecast(0, k).unwrap() - sc.realization[k];
                sum += err;
                sumsq += err * err;
            }
            let m = sum / n as f64;
            let var = sumsq / n as f64 - m * m;
            let expected = k as f64 * (0.006 * 500.0_f64).powi(2);
            assert!(
                (var - expected).abs() < 0.1 * expected,
                "k={k}: var {var} vs {expected}"
            );
            // Martingale: mean forecast error is zero up to Monte Carlo noise.
            let se = (expected / n as f64).sqrt();
            assert!(m.abs() < 5.0 * se, "k={k}: bias {m}");
        }
    }

    #[test]
    fn forecasts_share_walk_increments_across_depths() {
        // The (k+1)-step forecast reuses the first k increments, so the
        // difference between consecutive depths is a single fresh step.
        let mean = [500.0; 8];
        let sc = realize(&mean, 0.0, 0.006, SigmaMode::FractionOfMean, 42);
        // Reconstruct increments from consecutive forecasts and check the
        // k-step walk equals their prefix sum.
        let walk = |k: usize| sc.forecast(0, k).unwrap() - sc.realization[k];
        let mut prefix = 0.0;
        for k in 1..=5 {
            let w = walk(k);
            let step = w - prefix;
            assert!(step.abs() < 6.0 * 0.006 * 500.0, "step {step} implausible");
            prefix = w;
        }
    }

    #[test]
    fn window_forecasts_truncate_at_horizon() {
        let sc = realize(&MEAN, 0.04, 0.006, SigmaMode::FractionOfMean, 5);
        let w = sc.window_forecasts(4, 4);
        assert_eq!(w.len(), 2);
        assert_eq!(w[0], sc.realization[4]);
    }
}
