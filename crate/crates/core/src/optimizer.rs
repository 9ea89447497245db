//! Numeric baseline for the destination SNR over gains inside the maximum-gain boxes.
//!
//! Multi-start projected coordinate ascent. Each coordinate update is a 1-D
//! search over `[-beta_max, beta_max]`: a coarse grid brackets the best point,
//! then golden-section search refines it. Updates are accepted only when they
//! do not lower the SNR, so every restart is monotone and stays feasible. The
//! closed-form schemes are always among the starting points. Nothing here
//! certifies global optimality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::snr_with_multipliers;
use crate::error::{AncError, Result};
use crate::gains::GainAssignment;
use crate::network::LayeredNetwork;
use crate::power::max_gain;
use crate::schemes::{full_power_gains, generalized_gains};

const GRID_POINTS: usize = 17;
const GOLDEN_STEPS: usize = 80;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Random restarts on top of the scheme seeds.
    pub restarts: usize,
    /// Maximum coordinate sweeps per restart.
    pub max_iterations: usize,
    /// Stop when a sweep improves the SNR by less than this relative amount.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 4, max_iterations: 200, tolerance: 1e-10, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(AncError::Config("optimizer needs at least one restart".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(AncError::Config(format!("optimizer tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub gains: GainAssignment,
    pub snr: f64,
    /// Index of the winning start; scheme seeds come first.
    pub best_start: usize,
    /// SNR after each sweep of the winning start, beginning with its initial value.
    pub trace: Vec<f64>,
}

/// Derives an independent stream seed from `(seed, index)`.
pub(crate) fn mix_seed(seed: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(splitmix(seed) ^ index)
}

struct Problem<'a> {
    net: &'a LayeredNetwork,
    bounds: Vec<f64>,
}

impl Problem<'_> {
    fn snr(&self, relays: &[f64], buf: &mut Vec<f64>) -> f64 {
        let mut mult = Vec::with_capacity(relays.len() + 2);
        mult.push(1.0);
        mult.extend_from_slice(relays);
        mult.push(0.0);
        snr_with_multipliers(self.net, &mult, buf)
    }

    fn line_search(&self, x: &mut [f64], k: usize, current: f64, buf: &mut Vec<f64>) -> f64 {
        let b = self.bounds[k];
        if b == 0.0 {
            return current;
        }
        let original = x[k];
        let eval = |x: &mut [f64], v: f64, buf: &mut Vec<f64>| {
            x[k] = v;
            self.snr(x, buf)
        };
        let step = 2.0 * b / (GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..GRID_POINTS).map(|i| if i + 1 == GRID_POINTS { b } else { -b + step * i as f64 }).collect();
        let values: Vec<f64> = grid.iter().map(|&v| eval(x, v, buf)).collect();
        let (mut best_i, mut best_v) = (0, values[0]);
        for (i, &v) in values.iter().enumerate() {
            if v > best_v {
                best_i = i;
                best_v = v;
            }
        }
        let mut best_x = grid[best_i];

        let mut lo = grid[best_i.saturating_sub(1)];
        let mut hi = grid[(best_i + 1).min(GRID_POINTS - 1)];
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - ratio * (hi - lo);
        let mut d = lo + ratio * (hi - lo);
        let mut fc = eval(x, c, buf);
        let mut fd = eval(x, d, buf);
        for _ in 0..GOLDEN_STEPS {
            if fc >= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - ratio * (hi - lo);
                fc = eval(x, c, buf);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + ratio * (hi - lo);
                fd = eval(x, d, buf);
            }
            if hi - lo <= 1e-14 * b {
                break;
            }
        }
        for (v, f) in [(c, fc), (d, fd)] {
            if f > best_v {
                best_v = f;
                best_x = v;
            }
        }
        if best_v > current {
            x[k] = best_x.clamp(-b, b);
            best_v
        } else {
            x[k] = original;
            current
        }
    }

    fn ascend(&self, start: Vec<f64>, config: &OptimizerConfig) -> (Vec<f64>, f64, Vec<f64>) {
        let mut buf = Vec::new();
        let mut x: Vec<f64> = start.iter().zip(&self.bounds).map(|(v, b)| v.clamp(-b, *b)).collect();
        let mut snr = self.snr(&x, &mut buf);
        let mut trace = vec![snr];
        for _ in 0..config.max_iterations {
            let before = snr;
            for k in 0..x.len() {
                snr = self.line_search(&mut x, k, snr, &mut buf);
            }
            trace.push(snr);
            if snr - before <= config.tolerance * before.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        (x, snr, trace)
    }
}

/// Box half-widths `beta_max` for every relay, layer-major.
pub fn gain_boxes(net: &LayeredNetwork) -> Result<Vec<f64>> {
    net.relays().map(|n| max_gain(net, n)).collect()
}

/// Starting points: maximum gains, the generalized scheme for every relay layer
/// where it is defined, then `config.restarts` uniform draws from the boxes.
pub fn starting_points(net: &LayeredNetwork, config: &OptimizerConfig) -> Result<Vec<Vec<f64>>> {
    let bounds = gain_boxes(net)?;
    let mut starts = vec![full_power_gains(net)?.relay_values()];
    for layer in 1..net.num_layers() {
        if let Ok((g, _)) = generalized_gains(net, layer) {
            starts.push(g.relay_values());
        }
    }
    for r in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, r as u64));
        starts.push(bounds.iter().map(|&b| if b > 0.0 { rng.gen_range(-b..=b) } else { 0.0 }).collect());
    }
    Ok(starts)
}

/// Runs coordinate ascent from one starting point.
pub fn ascend_from(net: &LayeredNetwork, start: &GainAssignment, config: &OptimizerConfig) -> Result<OptimizerResult> {
    config.validate()?;
    start.validate(net)?;
    let problem = Problem { net, bounds: gain_boxes(net)? };
    let (x, snr, trace) = problem.ascend(start.relay_values(), config);
    Ok(OptimizerResult { gains: GainAssignment::from_relay_values(net, &x)?, snr, best_start: 0, trace })
}

/// Best gains found over all starts. Ties go to the lowest start index.
pub fn optimize_gains(net: &LayeredNetwork, config: &OptimizerConfig) -> Result<OptimizerResult> {
    config.validate()?;
    let problem = Problem { net, bounds: gain_boxes(net)? };
    let starts = starting_points(net, config)?;
    let runs: Vec<_> = starts.into_par_iter().map(|s| problem.ascend(s, config)).collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = i;
        }
    }
    let (x, snr, trace) = runs.into_iter().nth(best).expect("at least one start");
    Ok(OptimizerResult { gains: GainAssignment::from_relay_values(net, &x)?, snr, best_start: best, trace })
}
