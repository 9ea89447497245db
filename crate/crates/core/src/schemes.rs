//! Gain assignments: every relay at its maximum gain, and the generalized-regime
//! scheme that matches the exceptional layer's gains to the destination.

use serde::{Deserialize, Serialize};

pub use crate::gains::GainAssignment;

use crate::error::{AncError, Result};
use crate::network::{LayeredNetwork, NodeId};
use crate::power::{delta_node, max_gain_for_delta, received_power, regime_delta, max_gain};

/// Which `delta` the non-exceptional relays use in their maximum gain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaChoice {
    /// The regime-wide `delta`, which is at least every `delta_j`.
    Uniform,
    /// Each relay's own `delta_j`.
    PerNode,
}

/// Constants of the generalized scheme for exceptional layer `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub layer: usize,
    pub delta: f64,
    /// Common scale of the matched gains; absent when `l = L` (no relay in the exceptional layer).
    pub c1: Option<f64>,
    /// Compound gain from each layer-`l` node to the destination, excluding its own gain.
    pub g: Vec<f64>,
    /// `gamma_j = beta_j g_j = c1 sqrt(P_{R,j})`.
    pub gamma: Vec<f64>,
}

/// Every relay at its maximum gain `sqrt(P_j / ((1 + delta_j) P_{R,j}))`.
pub fn full_power_gains(net: &LayeredNetwork) -> Result<GainAssignment> {
    let mut gains = GainAssignment::zeros(net);
    for node in net.relays().collect::<Vec<_>>() {
        gains.set(node, max_gain(net, node)?);
    }
    Ok(gains)
}

/// Compound coefficient `g_j` from each layer-`l` node to the destination through
/// the gains already assigned in layers `l+1 .. L-1`.
pub fn downstream_g(net: &LayeredNetwork, gains: &GainAssignment, layer: usize) -> Result<Vec<f64>> {
    let last = net.num_layers();
    if layer == 0 || layer >= last {
        return Err(AncError::LayerOutOfRange { layer, max: last.saturating_sub(1) });
    }
    gains.validate(net)?;
    // reach[m] = sum over paths m -> D of the h * beta products past m, with beta_D = 1.
    let mut reach = vec![1.0];
    for t in (layer..last).rev() {
        let h = net.gain_matrix(t);
        let through: Vec<f64> = (0..net.layer_size(t + 1))
            .map(|m| if t + 1 == last { reach[m] } else { gains.layer(t + 1)[m] * reach[m] })
            .collect();
        reach = (0..net.layer_size(t)).map(|k| (0..h.rows()).map(|m| h.get(m, k) * through[m]).sum()).collect();
    }
    if let Some(j) = reach.iter().position(|&g| g == 0.0) {
        return Err(AncError::InvisibleNode(NodeId::new(layer, j)));
    }
    Ok(reach)
}

/// Generalized-regime scheme with the regime-wide `delta` outside the exceptional layer.
pub fn generalized_gains(net: &LayeredNetwork, layer: usize) -> Result<(GainAssignment, SchemeParams)> {
    generalized_gains_with(net, layer, DeltaChoice::Uniform)
}

/// Generalized-regime scheme for exceptional layer `l`.
///
/// Relays outside layer `l` get `sqrt(P_j / ((1 + delta) P_{R,j}))`; layer-`l`
/// relays get `c1 sqrt(P_{R,j}) / g_j` with
/// `c1 = min_j (|g_j| / P_{R,j}) sqrt(P_j / (1 + delta_j))`, so `beta_j` carries
/// the sign of `g_j` and every `gamma_j` is positive. With `l = L` there is no
/// matched layer and the scheme reduces to maximum gains.
pub fn generalized_gains_with(
    net: &LayeredNetwork,
    layer: usize,
    choice: DeltaChoice,
) -> Result<(GainAssignment, SchemeParams)> {
    let last = net.num_layers();
    if layer == 0 || layer > last {
        return Err(AncError::LayerOutOfRange { layer, max: last });
    }
    let delta = regime_delta(net, layer)?;
    let mut gains = GainAssignment::zeros(net);
    for node in net.relays().filter(|n| n.layer != layer).collect::<Vec<_>>() {
        let pr = received_power(net, node)?;
        let d = match choice {
            DeltaChoice::Uniform => delta,
            DeltaChoice::PerNode => delta_node(net, node)?,
        };
        gains.set(node, max_gain_for_delta(net.power_budget(node).expect("relay budget"), pr, d));
    }
    if layer == last {
        return Ok((gains, SchemeParams { layer, delta, c1: None, g: Vec::new(), gamma: Vec::new() }));
    }

    let g = downstream_g(net, &gains, layer)?;
    let mut c1 = f64::INFINITY;
    let mut received = Vec::with_capacity(g.len());
    for (j, node) in net.nodes_in_layer(layer).enumerate() {
        let pr = received_power(net, node)?;
        let dj = delta_node(net, node)?;
        let p = net.power_budget(node).expect("relay budget");
        c1 = c1.min(g[j].abs() / pr * (p / (1.0 + dj)).sqrt());
        received.push(pr);
    }
    let mut gamma = Vec::with_capacity(g.len());
    for (j, node) in net.nodes_in_layer(layer).enumerate() {
        let beta = c1 * received[j].sqrt() / g[j];
        gains.set(node, beta);
        gamma.push(beta * g[j]);
    }
    Ok((gains, SchemeParams { layer, delta, c1: Some(c1), g, gamma }))
}
