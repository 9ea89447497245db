//! Received powers, the high-SNR regime parameter, the maximum-gain rule and
//! exact transmit powers.

use serde::{Deserialize, Serialize};

use crate::coding::{propagate_coefficients, CodingState};
use crate::error::{AncError, Result};
use crate::gains::GainAssignment;
use crate::network::{LayeredNetwork, NodeId, ReceivedPowerRule};

/// Relative slack allowed when comparing a gain against its maximum.
pub const GAIN_TOLERANCE: f64 = 1e-12;
/// Absolute slack allowed when comparing a transmit power against its budget.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// `P_{R,k} = (sum_{j in N(k)} h_{j,k} sqrt(P_j))^2`, every in-neighbor at full budget.
///
/// Gains enter with or without sign depending on the network's [`ReceivedPowerRule`].
pub fn received_power(net: &LayeredNetwork, node: NodeId) -> Result<f64> {
    if !net.contains(node) || node.layer == 0 {
        return Err(AncError::InvalidNode(node, "received power is defined for non-source nodes"));
    }
    let h = net.gain_matrix(node.layer - 1);
    let amplitude: f64 = h
        .row(node.index)
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            let p = net.power_budget(NodeId::new(node.layer - 1, j)).expect("transmitters have budgets");
            let g = match net.rule() {
                ReceivedPowerRule::Magnitude => g.abs(),
                ReceivedPowerRule::Signed => g,
            };
            g * p.sqrt()
        })
        .sum();
    Ok(amplitude * amplitude)
}

/// `delta_k = 1 / P_{R,k}`.
pub fn delta_node(net: &LayeredNetwork, node: NodeId) -> Result<f64> {
    let pr = received_power(net, node)?;
    if pr <= 0.0 {
        return Err(AncError::DegenerateReceivedPower(node));
    }
    Ok(1.0 / pr)
}

/// Exceptional layer `l` together with its regime parameter `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub layer: usize,
    pub delta: f64,
}

impl Regime {
    pub fn new(net: &LayeredNetwork, layer: usize) -> Result<Self> {
        Ok(Self { layer, delta: regime_delta(net, layer)? })
    }
}

/// Smallest `delta` with `P_{R,j} >= 1/delta` for every non-source node outside layer `l`
/// (destination included).
pub fn regime_delta(net: &LayeredNetwork, layer: usize) -> Result<f64> {
    let max = net.num_layers();
    if layer == 0 || layer > max {
        return Err(AncError::LayerOutOfRange { layer, max });
    }
    let mut min_pr = f64::INFINITY;
    for node in net.nodes().filter(|n| n.layer != 0 && n.layer != layer) {
        let pr = received_power(net, node)?;
        if pr <= 0.0 {
            return Err(AncError::DegenerateReceivedPower(node));
        }
        min_pr = min_pr.min(pr);
    }
    Ok(1.0 / min_pr)
}

/// `sqrt(P / ((1 + delta) P_R))`.
pub fn max_gain_for_delta(budget: f64, received: f64, delta: f64) -> f64 {
    (budget / ((1.0 + delta) * received)).sqrt()
}

/// Largest `|beta_k|` admitted by the sufficient power condition at relay `k`.
pub fn max_gain(net: &LayeredNetwork, node: NodeId) -> Result<f64> {
    if !net.is_relay(node) || !net.contains(node) {
        return Err(AncError::InvalidNode(node, "maximum gain is defined for relays"));
    }
    let pr = received_power(net, node)?;
    if pr <= 0.0 {
        return Err(AncError::DegenerateReceivedPower(node));
    }
    let budget = net.power_budget(node).expect("relay budget");
    Ok(max_gain_for_delta(budget, pr, 1.0 / pr))
}

/// `E[X_k^2] = beta_k^2 E[Y_k^2]` under independent unit-variance noises; `P_S` for the source.
pub fn exact_transmit_power(net: &LayeredNetwork, gains: &GainAssignment, node: NodeId) -> Result<f64> {
    let state = propagate_coefficients(net, gains)?;
    transmit_power_from(net, gains, &state, node)
}

pub fn transmit_power_from(
    net: &LayeredNetwork,
    gains: &GainAssignment,
    state: &CodingState,
    node: NodeId,
) -> Result<f64> {
    if !net.contains(node) || node.layer == net.num_layers() {
        return Err(AncError::InvalidNode(node, "the destination does not transmit"));
    }
    if node.layer == 0 {
        return Ok(net.source_power());
    }
    let beta = gains.beta(node);
    Ok(beta * beta * state.received_second_moment(net, node))
}

/// Per-node received powers and the derived maximum gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub nodes: Vec<NodeId>,
    pub received_power: Vec<f64>,
    pub delta_node: Vec<f64>,
    /// `P_k / ((1 + delta_k) P_{R,k})` for relays, `None` for the destination.
    pub max_gain_sq: Vec<Option<f64>>,
    pub regime: Option<Regime>,
}

impl PowerProfile {
    pub fn new(net: &LayeredNetwork, exceptional_layer: Option<usize>) -> Result<Self> {
        let nodes: Vec<NodeId> = net.nodes().skip(1).collect();
        let mut received = Vec::with_capacity(nodes.len());
        let mut deltas = Vec::with_capacity(nodes.len());
        let mut max_sq = Vec::with_capacity(nodes.len());
        for &node in &nodes {
            let pr = received_power(net, node)?;
            let d = delta_node(net, node)?;
            received.push(pr);
            deltas.push(d);
            max_sq.push(net.is_relay(node).then(|| {
                let b = max_gain_for_delta(net.power_budget(node).expect("relay budget"), pr, d);
                b * b
            }));
        }
        let regime = exceptional_layer.map(|l| Regime::new(net, l)).transpose()?;
        Ok(Self { nodes, received_power: received, delta_node: deltas, max_gain_sq: max_sq, regime })
    }
}

/// One row of a [`FeasibilityReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeFeasibility {
    pub layer: usize,
    pub index: usize,
    pub beta: f64,
    pub beta_max: f64,
    pub exact_power: f64,
    pub budget: f64,
    /// `|beta| <= beta_max` (the sufficient condition).
    pub sufficient_ok: bool,
    /// `E[X^2] <= P` (the actual constraint).
    pub exact_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub nodes: Vec<NodeFeasibility>,
    pub all_sufficient: bool,
    pub all_exact: bool,
}

impl FeasibilityReport {
    pub fn to_csv(&self) -> Result<String> {
        crate::report::csv_string(&self.nodes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-relay comparison of each gain against its maximum and each exact power against its budget.
pub fn check_feasible(net: &LayeredNetwork, gains: &GainAssignment) -> Result<FeasibilityReport> {
    let state = propagate_coefficients(net, gains)?;
    let mut nodes = Vec::with_capacity(net.num_relays());
    for node in net.relays() {
        let beta = gains.beta(node);
        let beta_max = max_gain(net, node)?;
        let exact_power = transmit_power_from(net, gains, &state, node)?;
        let budget = net.power_budget(node).expect("relay budget");
        nodes.push(NodeFeasibility {
            layer: node.layer,
            index: node.index,
            beta,
            beta_max,
            exact_power,
            budget,
            sufficient_ok: beta.abs() <= beta_max * (1.0 + GAIN_TOLERANCE),
            exact_ok: exact_power <= budget + POWER_TOLERANCE,
        });
    }
    let all_sufficient = nodes.iter().all(|n| n.sufficient_ok);
    let all_exact = nodes.iter().all(|n| n.exact_ok);
    Ok(FeasibilityReport { nodes, all_sufficient, all_exact })
}
