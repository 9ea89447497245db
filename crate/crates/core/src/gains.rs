use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::network::{LayeredNetwork, NodeId};

/// Amplification gains `beta_k` for every relay. The source gain is fixed to 1
/// and the destination has none.
///
/// Serialized as `{"layers": [[beta of layer 1 relays], [layer 2], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainAssignment {
    layers: Vec<Vec<f64>>,
}

impl GainAssignment {
    pub fn zeros(net: &LayeredNetwork) -> Self {
        Self::filled(net, 0.0)
    }

    pub fn filled(net: &LayeredNetwork, beta: f64) -> Self {
        Self { layers: (1..net.num_layers()).map(|l| vec![beta; net.layer_size(l)]).collect() }
    }

    pub fn from_layers(net: &LayeredNetwork, layers: Vec<Vec<f64>>) -> Result<Self> {
        let out = Self { layers };
        out.validate(net)?;
        Ok(out)
    }

    /// Builds from relay gains listed layer-major.
    pub fn from_relay_values(net: &LayeredNetwork, values: &[f64]) -> Result<Self> {
        if values.len() != net.num_relays() {
            return Err(AncError::GainShape(format!("expected {} relay gains, got {}", net.num_relays(), values.len())));
        }
        let mut it = values.iter().copied();
        let layers = (1..net.num_layers()).map(|l| it.by_ref().take(net.layer_size(l)).collect()).collect();
        Self::from_layers(net, layers)
    }

    /// Checks that the shape matches `net` and every gain is finite.
    pub fn validate(&self, net: &LayeredNetwork) -> Result<()> {
        let expected = net.num_layers().saturating_sub(1);
        if self.layers.len() != expected {
            return Err(AncError::GainShape(format!("expected {expected} relay layers, got {}", self.layers.len())));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let l = i + 1;
            if layer.len() != net.layer_size(l) {
                return Err(AncError::GainShape(format!(
                    "layer {l} has {} gains, expected {}",
                    layer.len(),
                    net.layer_size(l)
                )));
            }
            if let Some(j) = layer.iter().position(|b| !b.is_finite()) {
                return Err(AncError::NonFiniteBeta(NodeId::new(l, j)));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn layer(&self, layer: usize) -> &[f64] {
        &self.layers[layer - 1]
    }

    /// `beta_k`; 1 for the source. Panics for the destination or nodes outside the assignment.
    pub fn beta(&self, node: NodeId) -> f64 {
        if node.layer == 0 {
            1.0
        } else {
            self.layers[node.layer - 1][node.index]
        }
    }

    pub fn set(&mut self, node: NodeId, beta: f64) {
        assert!(node.layer > 0, "the source gain is fixed to 1");
        self.layers[node.layer - 1][node.index] = beta;
    }

    /// Relay gains, layer-major.
    pub fn relay_values(&self) -> Vec<f64> {
        self.layers.iter().flatten().copied().collect()
    }

    /// One multiplier per flat node id: 1 for the source, `beta_k` for relays, 0 for the destination.
    pub fn multipliers(&self, net: &LayeredNetwork) -> Vec<f64> {
        let mut out = Vec::with_capacity(net.num_nodes());
        out.push(1.0);
        out.extend(self.layers.iter().flatten());
        out.push(0.0);
        out
    }

    pub fn from_json(net: &LayeredNetwork, text: &str) -> Result<Self> {
        let out: Self = serde_json::from_str(text)?;
        out.validate(net)?;
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gains serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;

    fn chain3() -> LayeredNetwork {
        build_network(&[1, 2, 3, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]; 3], vec![vec![1.0; 3]]], &[1.0; 5], 1.0)
            .unwrap()
    }

    #[test]
    fn relay_values_round_trip() {
        let net = chain3();
        let g = GainAssignment::from_relay_values(&net, &[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_eq!(g.layer(2), &[0.3, 0.4, 0.5]);
        assert_eq!(g.relay_values(), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(g.multipliers(&net), vec![1.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.0]);
        assert_eq!(g.beta(net.source()), 1.0);
    }

    #[test]
    fn shape_errors() {
        let net = chain3();
        assert!(GainAssignment::from_relay_values(&net, &[0.1; 4]).is_err());
        assert!(GainAssignment::from_layers(&net, vec![vec![0.1; 2], vec![0.1; 2]]).is_err());
        assert!(matches!(
            GainAssignment::from_layers(&net, vec![vec![0.1; 2], vec![0.1, f64::INFINITY, 0.1]]),
            Err(AncError::NonFiniteBeta(_))
        ));
        assert!(GainAssignment::from_json(&net, r#"{"layers":[[1,1],[1,1,1]],"x":0}"#).is_err());
    }
}
