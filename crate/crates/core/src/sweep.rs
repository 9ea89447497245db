//! Parameter sweeps: source power, relay count and regime `delta`.
//!
//! Every sweep evaluates grid points independently (in parallel) and returns
//! rows in grid order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{anc_rate, destination_snr, lower_bound_r2, upper_bound_r1};
use crate::error::{AncError, Result};
use crate::network::{GainMatrix, LayeredNetwork};
use crate::optimizer::{optimize_gains, OptimizerConfig};
use crate::power::regime_delta;
use crate::schemes::{full_power_gains, generalized_gains};

/// Rejects empty or non-strictly-monotone grids.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(AncError::Config("sweep grid is empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(AncError::Config("sweep grid has non-finite values".into()));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(AncError::Config("sweep grid must be strictly monotone".into()));
    }
    Ok(())
}

fn validate_positive_grid(grid: &[f64]) -> Result<()> {
    validate_grid(grid)?;
    if grid.iter().any(|&v| v <= 0.0) {
        return Err(AncError::Config("sweep grid values must be positive".into()));
    }
    Ok(())
}

/// `count` points spaced evenly in log scale from `start` to `stop`.
pub fn log_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let (a, b) = (start.log10(), stop.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

/// Scales every received power outside layer `l` by `s` while leaving layer `l`'s untouched.
///
/// Multiplies `P_S` by `s` (unless `l = 1`) and every `H_t` with `t >= 1` whose
/// receivers are not layer `l` by `sqrt(s)`. Budgets stay fixed, so the regime
/// `delta` becomes `delta / s`.
pub fn scale_regime(net: &LayeredNetwork, layer: usize, s: f64) -> Result<LayeredNetwork> {
    if !(s.is_finite() && s > 0.0) {
        return Err(AncError::Config(format!("scale must be positive, got {s}")));
    }
    let max = net.num_layers();
    if layer == 0 || layer > max {
        return Err(AncError::LayerOutOfRange { layer, max });
    }
    let factors: Vec<(usize, f64)> = (1..max).filter(|&t| t + 1 != layer).map(|t| (t, s.sqrt())).collect();
    let scaled = net.with_scaled_gains(&factors)?;
    if layer == 1 {
        Ok(scaled)
    } else {
        scaled.with_source_power(net.source_power() * s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcePowerRow {
    pub source_power: f64,
    pub delta: f64,
    pub achieved_generalized: f64,
    pub achieved_full_power: f64,
    pub r1: f64,
    pub r2: f64,
    pub gap_generalized: f64,
    pub gap_full_power: f64,
    pub achieved_optimizer: Option<f64>,
}

/// Achieved rates of both schemes and the bounds as the source power varies.
pub fn sweep_source_power(
    base: &LayeredNetwork,
    layer: usize,
    grid: &[f64],
    optimizer: Option<&OptimizerConfig>,
) -> Result<Vec<SourcePowerRow>> {
    validate_positive_grid(grid)?;
    grid.par_iter()
        .map(|&ps| {
            let net = base.with_source_power(ps)?;
            let (gen, params) = generalized_gains(&net, layer)?;
            let achieved_generalized = anc_rate(destination_snr(&net, &gen)?)?;
            let achieved_full_power = anc_rate(destination_snr(&net, &full_power_gains(&net)?)?)?;
            let r1 = upper_bound_r1(&net, layer)?;
            let r2 = lower_bound_r2(&net, &params)?.r2;
            let achieved_optimizer =
                optimizer.map(|cfg| optimize_gains(&net, cfg).and_then(|r| anc_rate(r.snr))).transpose()?;
            Ok(SourcePowerRow {
                source_power: ps,
                delta: params.delta,
                achieved_generalized,
                achieved_full_power,
                r1,
                r2,
                gap_generalized: r1 - achieved_generalized,
                gap_full_power: r1 - achieved_full_power,
                achieved_optimizer,
            })
        })
        .collect()
}

/// Replaces the last relay layer of `base` by `n` relays, each with budget `budget`.
///
/// Relay `i` copies the incoming and outgoing gains of template relay
/// `i mod m`, where `m` is the size of the base's last relay layer.
pub fn fan_out_network(base: &LayeredNetwork, n: usize, budget: f64) -> Result<LayeredNetwork> {
    let hops = base.num_layers();
    if hops < 2 {
        return Err(AncError::Config("relay-count sweep needs at least one relay layer".into()));
    }
    if n == 0 {
        return Err(AncError::Config("relay count must be positive".into()));
    }
    let fan = hops - 1;
    let m = base.layer_size(fan);
    let mut sizes = base.layer_sizes().to_vec();
    sizes[fan] = n;
    let mut gains: Vec<GainMatrix> = (0..hops).map(|t| base.gain_matrix(t).clone()).collect();
    let into = base.gain_matrix(fan - 1);
    gains[fan - 1] = GainMatrix::from_fn(n, into.cols(), |r, c| into.get(r % m, c));
    let out = base.gain_matrix(fan);
    gains[fan] = GainMatrix::from_fn(1, n, |_, c| out.get(0, c % m));

    let mut budgets = Vec::new();
    for l in 1..hops {
        if l == fan {
            budgets.extend(std::iter::repeat(budget).take(n));
        } else {
            budgets.extend(base.nodes_in_layer(l).map(|node| base.power_budget(node).expect("relay budget")));
        }
    }
    Ok(LayeredNetwork::new(sizes, gains, budgets, base.source_power())?.with_rule(base.rule()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelayCountRow {
    pub relays: usize,
    pub delta: f64,
    pub achieved: f64,
    pub r1: f64,
    pub r2: f64,
    /// `r1 - achieved`.
    pub gap: f64,
}

/// Generalized scheme with the last relay layer exceptional, as the number of relays in it grows.
pub fn sweep_relay_count(base: &LayeredNetwork, grid: &[usize], budget: f64) -> Result<Vec<RelayCountRow>> {
    let as_f: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    validate_positive_grid(&as_f)?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(AncError::NonPositivePower { what: "relay budget".into(), value: budget });
    }
    let layer = base.num_layers().saturating_sub(1);
    grid.par_iter()
        .map(|&n| {
            let net = fan_out_network(base, n, budget)?;
            let (gen, params) = generalized_gains(&net, layer)?;
            let achieved = anc_rate(destination_snr(&net, &gen)?)?;
            let r1 = upper_bound_r1(&net, layer)?;
            let r2 = lower_bound_r2(&net, &params)?.r2;
            Ok(RelayCountRow { relays: n, delta: params.delta, achieved, r1, r2, gap: r1 - achieved })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    /// Requested regime `delta`.
    pub delta: f64,
    /// `delta` recomputed from the scaled network.
    pub delta_actual: f64,
    pub scale: f64,
    pub r1: f64,
    pub r2: f64,
    pub achieved: f64,
    /// `r1 - r2`.
    pub gap: f64,
}

/// Bounds as `delta` shrinks with layer-`l` received powers held fixed (see [`scale_regime`]).
pub fn sweep_delta(base: &LayeredNetwork, layer: usize, grid: &[f64]) -> Result<Vec<DeltaRow>> {
    validate_positive_grid(grid)?;
    let base_delta = regime_delta(base, layer)?;
    grid.par_iter()
        .map(|&delta| {
            let scale = base_delta / delta;
            let net = scale_regime(base, layer, scale)?;
            let (gen, params) = generalized_gains(&net, layer)?;
            let r1 = upper_bound_r1(&net, layer)?;
            let r2 = lower_bound_r2(&net, &params)?.r2;
            let achieved = anc_rate(destination_snr(&net, &gen)?)?;
            Ok(DeltaRow { delta, delta_actual: params.delta, scale, r1, r2, achieved, gap: r1 - r2 })
        })
        .collect()
}
