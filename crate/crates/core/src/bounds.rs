//! Destination SNR, achieved ANC rate and the closed-form rate bounds.
//!
//! Rates are in bits per channel use, `0.5 * log2(1 + snr)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coding::{propagate_coefficients, CodingState};
use crate::error::{AncError, Result};
use crate::gains::GainAssignment;
use crate::network::LayeredNetwork;
use crate::optimizer::{optimize_gains, OptimizerConfig};
use crate::power::{received_power, regime_delta};
use crate::schemes::{full_power_gains, generalized_gains, SchemeParams};

/// Singular-value ratio below which `H^T H` counts as rank one.
pub const RANK_THRESHOLD: f64 = 1e-10;

fn rate(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

/// `0.5 log2(1 + snr)`.
pub fn anc_rate(snr: f64) -> Result<f64> {
    if snr < 0.0 || snr.is_nan() {
        return Err(AncError::NegativeSnr(snr));
    }
    Ok(rate(snr))
}

/// `f_{S,D}^2 P_S / (sum_i f_{i,D}^2 + 1)`.
pub fn snr_from_state(net: &LayeredNetwork, state: &CodingState) -> f64 {
    let d = net.destination();
    let f = state.source_coeff(d);
    f * f * net.source_power() / state.noise_power(d)
}

pub fn destination_snr(net: &LayeredNetwork, gains: &GainAssignment) -> Result<f64> {
    Ok(snr_from_state(net, &propagate_coefficients(net, gains)?))
}

/// Destination SNR for flat per-node multipliers (see [`GainAssignment::multipliers`]),
/// reusing `buf` between calls. Used in the optimizer's inner loop.
pub fn snr_with_multipliers(net: &LayeredNetwork, mult: &[f64], buf: &mut Vec<f64>) -> f64 {
    let n = net.num_nodes();
    buf.clear();
    buf.resize(n, 0.0);
    let last = net.num_layers();
    let run = |start: usize, start_layer: usize, buf: &mut Vec<f64>| -> f64 {
        buf.iter_mut().for_each(|v| *v = 0.0);
        buf[start] = 1.0;
        for layer in start_layer + 1..=last {
            let h = net.gain_matrix(layer - 1);
            let prev = net.layer_range(layer - 1);
            for (row, k) in net.layer_range(layer).enumerate() {
                let mut acc = 0.0;
                for (&g, j) in h.row(row).iter().zip(prev.clone()) {
                    acc += mult[j] * g * buf[j];
                }
                buf[k] = acc;
            }
        }
        buf[n - 1]
    };
    let f_sd = run(0, 0, buf);
    let mut noise = 1.0;
    for layer in 1..last {
        for origin in net.layer_range(layer) {
            let f = run(origin, layer, buf);
            noise += f * f;
        }
    }
    f_sd * f_sd * net.source_power() / noise
}

fn check_layer(layer: usize, max: usize) -> Result<()> {
    if layer == 0 || layer > max {
        return Err(AncError::LayerOutOfRange { layer, max });
    }
    Ok(())
}

/// `S = P_{R,l}^T P_{R,l} = sum_{j in layer l} P_{R,j}`.
pub fn layer_received_sum(net: &LayeredNetwork, layer: usize) -> Result<f64> {
    check_layer(layer, net.num_layers())?;
    net.nodes_in_layer(layer).map(|n| received_power(net, n)).sum()
}

/// Upper bound on the ANC rate when layer `l` (`1 <= l <= L-1`) is exceptional.
pub fn upper_bound_r1(net: &LayeredNetwork, layer: usize) -> Result<f64> {
    check_layer(layer, net.num_layers().saturating_sub(1))?;
    Ok(rate(layer_received_sum(net, layer)?))
}

/// Terms of the generalized-regime lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundTerms {
    pub c2: f64,
    pub c3: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub r2: f64,
}

/// Lower bound on the rate of the generalized scheme, from its ingredients.
///
/// `s` is the layer-`l` received-power sum, `p_rd` the destination received
/// power and `hops` the network depth `L`. The geometric sum in `c2` runs over
/// `d = 1 ..= L - l - 1` and is empty for `l = L - 1`.
pub fn lower_bound_r2_formula(
    s: f64,
    delta: f64,
    c1: f64,
    p_rd: f64,
    layer: usize,
    hops: usize,
) -> Result<LowerBoundTerms> {
    if c1.is_nan() || c1 <= 0.0 {
        return Err(AncError::NonPositiveC1(c1));
    }
    let tail = hops.saturating_sub(layer + 1);
    let c2 = (1..=tail).map(|d| delta * p_rd / (1.0 + delta).powi(d as i32)).sum::<f64>() + 1.0;
    let c3 = 1.0 + c2 / (c1 * c1 * s);
    let attenuation = (1.0 + delta).powi(layer as i32 - 1);
    let numerator = s / attenuation;
    let denominator = (1.0 - 1.0 / attenuation) * s + c3;
    Ok(LowerBoundTerms { c2, c3, numerator, denominator, r2: rate(numerator / denominator) })
}

/// Lower bound for the scheme described by `params` on `net`.
pub fn lower_bound_r2(net: &LayeredNetwork, params: &SchemeParams) -> Result<LowerBoundTerms> {
    check_layer(params.layer, net.num_layers().saturating_sub(1))?;
    let c1 = params.c1.ok_or(AncError::NonPositiveC1(0.0))?;
    let s = layer_received_sum(net, params.layer)?;
    let p_rd = received_power(net, net.destination())?;
    lower_bound_r2_formula(s, params.delta, c1, p_rd, params.layer, net.num_layers())
}

/// Multiple-access cut-set bound at the destination, `0.5 log2(1 + P_{R,D})`.
pub fn mac_cutset(net: &LayeredNetwork) -> Result<f64> {
    Ok(rate(received_power(net, net.destination())?))
}

/// `0.5 log2(1 + P_{R,D} / (1 + delta)^(L-1))`.
pub fn high_snr_lower_formula(p_rd: f64, delta: f64, hops: usize) -> f64 {
    rate(p_rd / (1.0 + delta).powi(hops as i32 - 1))
}

/// Rate of the maximum-gain scheme in the plain high-SNR regime, with `delta`
/// taken over all relays.
pub fn high_snr_lower(net: &LayeredNetwork) -> Result<f64> {
    let delta = regime_delta(net, net.num_layers())?;
    Ok(high_snr_lower_formula(received_power(net, net.destination())?, delta, net.num_layers()))
}

/// Numeric rank test of `H_{l-1}^T H_{l-1}`.
pub fn is_rank_one(net: &LayeredNetwork, layer: usize) -> Result<bool> {
    check_layer(layer, net.num_layers())?;
    let h = net.gain_matrix(layer - 1);
    let m = DMatrix::from_fn(h.rows(), h.cols(), |r, c| h.get(r, c));
    let gram = m.transpose() * &m;
    let mut sv: Vec<f64> = gram.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(match sv.as_slice() {
        [] => false,
        [first, ..] if *first <= 0.0 => false,
        [_] => true,
        [first, second, ..] => second / first < RANK_THRESHOLD,
    })
}

/// MIMO cut-set value across layers `l-1 | l`, present only when the cut is rank one.
pub fn rank1_cutset(net: &LayeredNetwork, layer: usize) -> Result<Option<f64>> {
    if !is_rank_one(net, layer)? {
        return Ok(None);
    }
    Ok(Some(rate(layer_received_sum(net, layer)?)))
}

/// SNR of the ideal network where only layer-`l` relays add noise:
/// `f_{S,D}^2 P_S / sum_{i in l} f_{i,D}^2`.
pub fn ideal_snr(net: &LayeredNetwork, gains: &GainAssignment, layer: usize) -> Result<f64> {
    check_layer(layer, net.num_layers().saturating_sub(1))?;
    let st = propagate_coefficients(net, gains)?;
    let d = net.destination();
    let noise: f64 = net.nodes_in_layer(layer).map(|i| st.noise_coeff(i, d).powi(2)).sum();
    if noise == 0.0 {
        return Err(AncError::ZeroIdealNoise(layer));
    }
    let f = st.source_coeff(d);
    Ok(f * f * net.source_power() / noise)
}

/// Gain assignment used to compute the achieved rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    FullPower,
    Generalized,
    Optimizer,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullPower => "full_power",
            Scheme::Generalized => "generalized",
            Scheme::Optimizer => "optimizer",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub scheme: Scheme,
    pub layer: usize,
    pub delta: f64,
    pub snr: f64,
    pub achieved_rate: f64,
    pub r1: f64,
    pub r2: f64,
    pub mac_cutset: f64,
    pub high_snr_lower: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rank1_cutset: Option<f64>,
    /// Rate of the numeric baseline; a heuristic, not a proven optimum.
    pub optimizer_rate: Option<f64>,
}

impl BoundsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Header plus one data row.
    pub fn to_csv(&self) -> Result<String> {
        crate::report::csv_string([self])
    }
}

/// Gains for `scheme`. The optimizer needs `config`; the others ignore it.
pub fn scheme_gains(
    net: &LayeredNetwork,
    layer: usize,
    scheme: Scheme,
    config: &OptimizerConfig,
) -> Result<GainAssignment> {
    Ok(match scheme {
        Scheme::FullPower => full_power_gains(net)?,
        Scheme::Generalized => generalized_gains(net, layer)?.0,
        Scheme::Optimizer => optimize_gains(net, config)?.gains,
    })
}

/// Every bound for exceptional layer `l`, plus the rate achieved by `scheme`.
pub fn bounds_report(
    net: &LayeredNetwork,
    layer: usize,
    scheme: Scheme,
    config: &OptimizerConfig,
) -> Result<BoundsReport> {
    check_layer(layer, net.num_layers().saturating_sub(1))?;
    let (_, params) = generalized_gains(net, layer)?;
    let terms = lower_bound_r2(net, &params)?;
    let gains = scheme_gains(net, layer, scheme, config)?;
    let snr = destination_snr(net, &gains)?;
    let achieved = anc_rate(snr)?;
    Ok(BoundsReport {
        scheme,
        layer,
        delta: params.delta,
        snr,
        achieved_rate: achieved,
        r1: upper_bound_r1(net, layer)?,
        r2: terms.r2,
        mac_cutset: mac_cutset(net)?,
        high_snr_lower: high_snr_lower(net)?,
        c1: params.c1.expect("relay layer has c1"),
        c2: terms.c2,
        c3: terms.c3,
        rank1_cutset: rank1_cutset(net, layer)?,
        optimizer_rate: (scheme == Scheme::Optimizer).then_some(achieved),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, NodeId};
    use approx::assert_relative_eq;

    #[test]
    fn rate_examples() {
        assert_eq!(anc_rate(0.0).unwrap(), 0.0);
        assert_eq!(anc_rate(15.0).unwrap(), 2.0);
        assert_eq!(anc_rate(1.0).unwrap(), 0.5);
        assert!(anc_rate(-0.1).is_err());
    }

    #[test]
    fn chain_snr() {
        let net = build_network(&[1, 1, 1], &[vec![vec![1.0]], vec![vec![1.0]]], &[1.0], 1.0).unwrap();
        assert_eq!(destination_snr(&net, &GainAssignment::filled(&net, 1.0)).unwrap(), 0.5);
        assert_eq!(destination_snr(&net, &GainAssignment::zeros(&net)).unwrap(), 0.0);
        let mut buf = Vec::new();
        assert_eq!(snr_with_multipliers(&net, &[1.0, 1.0, 0.0], &mut buf), 0.5);
    }

    #[test]
    fn r1_examples() {
        // Layer 1 received powers 7 and 8.
        let net = build_network(
            &[1, 2, 1],
            &[vec![vec![7f64.sqrt()], vec![8f64.sqrt()]], vec![vec![1.0, 1.0]]],
            &[1.0, 1.0],
            1.0,
        )
        .unwrap();
        assert_relative_eq!(upper_bound_r1(&net, 1).unwrap(), 2.0, max_relative = 1e-14);
        assert!(matches!(upper_bound_r1(&net, 2), Err(AncError::LayerOutOfRange { .. })));

        let single = build_network(&[1, 1, 1], &[vec![vec![3.0]], vec![vec![1.0]]], &[1.0], 2.0).unwrap();
        assert_relative_eq!(upper_bound_r1(&single, 1).unwrap(), 0.5 * 19f64.log2(), max_relative = 1e-14);
    }

    #[test]
    fn r2_at_zero_delta() {
        let (s, c1) = (6.0, 0.7);
        let t = lower_bound_r2_formula(s, 0.0, c1, 50.0, 2, 3).unwrap();
        assert_eq!(t.c2, 1.0);
        let want = 0.5 * (1.0 + s / (1.0 + 1.0 / (c1 * c1 * s))).log2();
        assert_relative_eq!(t.r2, want, max_relative = 1e-14);
    }

    #[test]
    fn r2_first_layer_has_no_attenuation() {
        let (s, c1, delta) = (3.0, 0.4, 0.05);
        let t = lower_bound_r2_formula(s, delta, c1, 40.0, 1, 3).unwrap();
        // one tail term, d = 1
        let c2 = delta * 40.0 / (1.0 + delta) + 1.0;
        let c3 = 1.0 + c2 / (c1 * c1 * s);
        assert_relative_eq!(t.c3, c3, max_relative = 1e-14);
        assert_relative_eq!(t.r2, 0.5 * (1.0 + s / c3).log2(), max_relative = 1e-14);
        assert!(lower_bound_r2_formula(s, delta, 0.0, 40.0, 1, 3).is_err());
        assert!(lower_bound_r2_formula(s, delta, -1.0, 40.0, 1, 3).is_err());
    }

    #[test]
    fn mac_examples() {
        let net = build_network(&[1, 1], &[vec![vec![15f64.sqrt()]]], &[], 1.0).unwrap();
        assert_relative_eq!(mac_cutset(&net).unwrap(), 2.0, max_relative = 1e-14);
        let diamond =
            build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]]], &[1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(mac_cutset(&diamond).unwrap(), 0.5 * 5f64.log2(), max_relative = 1e-14);
    }

    #[test]
    fn high_snr_lower_examples() {
        assert_eq!(high_snr_lower_formula(3.0, 1.0, 2), 0.5 * 2.5f64.log2());
        assert_eq!(high_snr_lower_formula(3.0, 0.0, 4), 0.5 * 2.0);
        let mut last = f64::INFINITY;
        for k in 1..=8 {
            let d = 10f64.powi(-k);
            let gap = 0.5 * 11f64.log2() - high_snr_lower_formula(10.0, d, 3);
            assert!(gap > 0.0 && gap < last);
            last = gap;
        }
    }

    #[test]
    fn rank_one_detection() {
        // outer product u v^T
        let u = [1.0, 2.0, -0.5];
        let v = [0.3, 1.1];
        let outer: Vec<Vec<f64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let net = build_network(
            &[1, 2, 3, 1],
            &[vec![vec![2.0], vec![1.0]], outer, vec![vec![1.0, 1.0, 1.0]]],
            &[1.0; 5],
            10.0,
        )
        .unwrap();
        let r1 = upper_bound_r1(&net, 2).unwrap();
        assert_relative_eq!(rank1_cutset(&net, 2).unwrap().unwrap(), r1, max_relative = 1e-12);
        // layer 1 hangs off the single source: always rank one
        assert!(rank1_cutset(&net, 1).unwrap().is_some());

        let generic = build_network(
            &[1, 2, 2, 1],
            &[vec![vec![2.0], vec![1.0]], vec![vec![0.3, 1.2], vec![0.8, -0.4]], vec![vec![1.0, 1.0]]],
            &[1.0; 4],
            10.0,
        )
        .unwrap();
        assert_eq!(rank1_cutset(&generic, 2).unwrap(), None);
    }

    #[test]
    fn ideal_snr_dominates_and_is_scale_free() {
        let net = build_network(
            &[1, 2, 2, 1],
            &[vec![vec![2.0], vec![1.0]], vec![vec![0.3, 1.2], vec![0.8, -0.4]], vec![vec![1.5, 0.7]]],
            &[1.0; 4],
            10.0,
        )
        .unwrap();
        let g = GainAssignment::from_relay_values(&net, &[0.3, 0.5, 0.2, 0.9]).unwrap();
        let snr = destination_snr(&net, &g).unwrap();
        let ideal = ideal_snr(&net, &g, 2).unwrap();
        assert!(ideal >= snr);
        let mut scaled = g.clone();
        for j in 0..2 {
            let node = NodeId::new(2, j);
            scaled.set(node, 3.7 * g.beta(node));
        }
        assert_relative_eq!(ideal_snr(&net, &scaled, 2).unwrap(), ideal, max_relative = 1e-12);
        assert!(matches!(ideal_snr(&net, &GainAssignment::zeros(&net), 2), Err(AncError::ZeroIdealNoise(2))));
    }
}
