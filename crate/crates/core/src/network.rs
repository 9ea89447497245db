//! Strictly layered Gaussian relay networks.
//!
//! Layer 0 holds the source, layer `L` the destination, and every edge joins
//! two adjacent layers. Gains are real and signed; every node sees unit-variance
//! additive noise. The matrix `H_l` maps the transmissions of layer `l` onto the
//! receptions of layer `l + 1`, so it has shape `n_{l+1} x n_l`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};

/// Position of a node: its layer and its index within that layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub layer: usize,
    pub index: usize,
}

impl NodeId {
    pub const fn new(layer: usize, index: usize) -> Self {
        Self { layer, index }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.layer, self.index)
    }
}

/// How the received power `P_{R,k} = (sum_j h_{j,k} sqrt(P_j))^2` treats gain signs.
///
/// `Magnitude` sums `|h_{j,k}| sqrt(P_j)`, which upper-bounds the signal power a
/// node can receive whatever the signs; the maximum-gain rule built on it keeps
/// every node inside its budget. `Signed` sums the gains with their signs, which
/// agrees with `Magnitude` on nonnegative gains but can understate the received
/// power (down to zero) when incoming gains have mixed signs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceivedPowerRule {
    #[default]
    Magnitude,
    Signed,
}

/// Dense row-major matrix of channel gains between two adjacent layers.
///
/// Rows index receivers (layer `l + 1`), columns index transmitters (layer `l`).
#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(AncError::Shape("gain matrix rows have unequal lengths".into()));
        }
        Ok(Self { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() })
    }

    /// Builds a matrix from a generator `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Gain from transmitter `col` to receiver `row`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|g| g * factor).collect() }
    }
}

/// Serialized form of a [`LayeredNetwork`].
///
/// `power_budgets` lists the relays only, layer-major; the source budget is
/// `source_power` and the destination never transmits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    pub gain_matrices: Vec<Vec<Vec<f64>>>,
    pub power_budgets: Vec<f64>,
    pub source_power: f64,
    #[serde(default, skip_serializing_if = "is_default_rule")]
    pub received_power_rule: ReceivedPowerRule,
    /// Free-form note for shipped configs; not kept by [`LayeredNetwork`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

fn is_default_rule(rule: &ReceivedPowerRule) -> bool {
    *rule == ReceivedPowerRule::default()
}

/// Validated layered relay network. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredNetwork {
    layer_sizes: Vec<usize>,
    offsets: Vec<usize>,
    gains: Vec<GainMatrix>,
    // Indexed by flat node id; the destination entry is unused.
    budgets: Vec<f64>,
    rule: ReceivedPowerRule,
}

impl LayeredNetwork {
    /// Builds and validates a network.
    ///
    /// `power_budgets` holds one budget per relay in layer-major order.
    pub fn new(
        layer_sizes: Vec<usize>,
        gain_matrices: Vec<GainMatrix>,
        power_budgets: Vec<f64>,
        source_power: f64,
    ) -> Result<Self> {
        let net = Self::assemble(layer_sizes, gain_matrices, power_budgets, source_power)?;
        net.check_reachability()?;
        Ok(net)
    }

    fn assemble(
        layer_sizes: Vec<usize>,
        gain_matrices: Vec<GainMatrix>,
        power_budgets: Vec<f64>,
        source_power: f64,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(AncError::Shape("need at least a source and a destination layer".into()));
        }
        let last = layer_sizes.len() - 1;
        if layer_sizes[0] != 1 || layer_sizes[last] != 1 {
            return Err(AncError::Shape("source and destination layers must hold exactly one node".into()));
        }
        if let Some(l) = layer_sizes.iter().position(|&n| n == 0) {
            return Err(AncError::Shape(format!("layer {l} is empty")));
        }
        if gain_matrices.len() != last {
            return Err(AncError::Shape(format!(
                "expected {last} gain matrices, got {}",
                gain_matrices.len()
            )));
        }
        for (l, h) in gain_matrices.iter().enumerate() {
            if h.rows != layer_sizes[l + 1] || h.cols != layer_sizes[l] {
                return Err(AncError::Shape(format!(
                    "gain matrix {l} has shape {}x{}, expected {}x{}",
                    h.rows,
                    h.cols,
                    layer_sizes[l + 1],
                    layer_sizes[l]
                )));
            }
            for r in 0..h.rows {
                for c in 0..h.cols {
                    if !h.get(r, c).is_finite() {
                        return Err(AncError::NonFiniteGain { layer: l, row: r, col: c });
                    }
                }
            }
        }
        let relay_count: usize = layer_sizes[1..last].iter().sum();
        if power_budgets.len() != relay_count {
            return Err(AncError::Shape(format!(
                "expected {relay_count} relay power budgets, got {}",
                power_budgets.len()
            )));
        }
        if !(source_power.is_finite() && source_power > 0.0) {
            return Err(AncError::NonPositivePower { what: "source".into(), value: source_power });
        }

        let mut offsets = Vec::with_capacity(layer_sizes.len() + 1);
        let mut acc = 0;
        for &n in &layer_sizes {
            offsets.push(acc);
            acc += n;
        }
        offsets.push(acc);

        let mut budgets = Vec::with_capacity(acc);
        budgets.push(source_power);
        for (i, &p) in power_budgets.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(AncError::NonPositivePower { what: format!("relay #{i}"), value: p });
            }
            budgets.push(p);
        }
        budgets.push(0.0);

        Ok(Self { layer_sizes, offsets, gains: gain_matrices, budgets, rule: ReceivedPowerRule::default() })
    }

    fn check_reachability(&self) -> Result<()> {
        let last = self.num_layers();
        for node in self.nodes() {
            if node.layer > 0 {
                let h = &self.gains[node.layer - 1];
                if h.row(node.index).iter().all(|&g| g == 0.0) {
                    return Err(AncError::Unreachable(node));
                }
            }
            if node.layer < last {
                let h = &self.gains[node.layer];
                if (0..h.rows).all(|r| h.get(r, node.index) == 0.0) {
                    return Err(AncError::Unreachable(node));
                }
            }
        }
        Ok(())
    }

    /// Sets the received-power convention.
    pub fn with_rule(mut self, rule: ReceivedPowerRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn rule(&self) -> ReceivedPowerRule {
        self.rule
    }

    /// Number of hops `L`; the destination sits in layer `L`.
    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layer_size(&self, layer: usize) -> usize {
        self.layer_sizes[layer]
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets[self.layer_sizes.len()]
    }

    pub fn num_relays(&self) -> usize {
        self.num_nodes() - 2
    }

    pub fn source(&self) -> NodeId {
        NodeId::new(0, 0)
    }

    pub fn destination(&self) -> NodeId {
        NodeId::new(self.num_layers(), 0)
    }

    pub fn is_relay(&self, node: NodeId) -> bool {
        node.layer > 0 && node.layer < self.num_layers()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.layer < self.layer_sizes.len() && node.index < self.layer_sizes[node.layer]
    }

    /// Layer-major flat index of `node`.
    pub fn flat(&self, node: NodeId) -> usize {
        debug_assert!(self.contains(node));
        self.offsets[node.layer] + node.index
    }

    pub fn node_at(&self, flat: usize) -> NodeId {
        let layer = self.offsets.partition_point(|&o| o <= flat) - 1;
        NodeId::new(layer, flat - self.offsets[layer])
    }

    /// Flat index range of a layer.
    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        self.offsets[layer]..self.offsets[layer + 1]
    }

    pub fn nodes_in_layer(&self, layer: usize) -> impl Iterator<Item = NodeId> {
        (0..self.layer_sizes[layer]).map(move |i| NodeId::new(layer, i))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.layer_sizes.len()).flat_map(move |l| self.nodes_in_layer(l))
    }

    /// Relays in layer-major order (layers `1..L`).
    pub fn relays(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..self.num_layers()).flat_map(move |l| self.nodes_in_layer(l))
    }

    /// Channel gain `h_{from,to}`; zero unless `to` sits one layer after `from`.
    pub fn gain(&self, from: NodeId, to: NodeId) -> f64 {
        if to.layer != from.layer + 1 || !self.contains(from) || !self.contains(to) {
            return 0.0;
        }
        self.gains[from.layer].get(to.index, from.index)
    }

    /// `H_l`, mapping layer `l` onto layer `l + 1`.
    pub fn gain_matrix(&self, layer: usize) -> &GainMatrix {
        &self.gains[layer]
    }

    pub fn source_power(&self) -> f64 {
        self.budgets[0]
    }

    /// Transmit budget of `node`: `P_S` for the source, `P_j` for relays, none for the destination.
    pub fn power_budget(&self, node: NodeId) -> Option<f64> {
        if node.layer == self.num_layers() || !self.contains(node) {
            None
        } else {
            Some(self.budgets[self.flat(node)])
        }
    }

    /// Relay budgets in layer-major order.
    pub fn relay_budgets(&self) -> &[f64] {
        &self.budgets[1..self.num_nodes() - 1]
    }

    /// Previous-layer nodes with a nonzero gain into `node`.
    pub fn neighbors_in(&self, node: NodeId) -> Result<Vec<NodeId>> {
        if !self.contains(node) {
            return Err(AncError::InvalidNode(node, "not in network"));
        }
        if node.layer == 0 {
            return Err(AncError::InvalidNode(node, "the source has no incoming neighbors"));
        }
        let h = &self.gains[node.layer - 1];
        Ok(h.row(node.index)
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0.0)
            .map(|(j, _)| NodeId::new(node.layer - 1, j))
            .collect())
    }

    /// Next-layer nodes reached with a nonzero gain from `node`.
    pub fn neighbors_out(&self, node: NodeId) -> Vec<NodeId> {
        if node.layer >= self.num_layers() {
            return Vec::new();
        }
        let h = &self.gains[node.layer];
        (0..h.rows).filter(|&r| h.get(r, node.index) != 0.0).map(|r| NodeId::new(node.layer + 1, r)).collect()
    }

    /// Copy with a different source power.
    pub fn with_source_power(&self, source_power: f64) -> Result<Self> {
        if !(source_power.is_finite() && source_power > 0.0) {
            return Err(AncError::NonPositivePower { what: "source".into(), value: source_power });
        }
        let mut out = self.clone();
        out.budgets[0] = source_power;
        Ok(out)
    }

    /// Copy with `H_l` replaced by `factor * H_l` for every listed `(l, factor)`.
    pub fn with_scaled_gains(&self, factors: &[(usize, f64)]) -> Result<Self> {
        let mut gains = self.gains.clone();
        for &(l, factor) in factors {
            let h = gains.get_mut(l).ok_or_else(|| AncError::Shape(format!("no gain matrix {l}")))?;
            *h = h.scaled(factor);
        }
        let out = Self::assemble(self.layer_sizes.clone(), gains, self.relay_budgets().to_vec(), self.source_power())?
            .with_rule(self.rule);
        out.check_reachability()?;
        Ok(out)
    }

    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            layer_sizes: self.layer_sizes.clone(),
            gain_matrices: self.gains.iter().map(GainMatrix::to_rows).collect(),
            power_budgets: self.relay_budgets().to_vec(),
            source_power: self.source_power(),
            received_power_rule: self.rule,
            description: None,
        }
    }

    pub fn from_spec(spec: NetworkSpec) -> Result<Self> {
        let gains = spec.gain_matrices.into_iter().map(GainMatrix::from_rows).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(spec.layer_sizes, gains, spec.power_budgets, spec.source_power)?
            .with_rule(spec.received_power_rule))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("network spec serializes")
    }
}

/// Convenience constructor from nested row-major matrices.
pub fn build_network(
    layer_sizes: &[usize],
    gain_matrices: &[Vec<Vec<f64>>],
    power_budgets: &[f64],
    source_power: f64,
) -> Result<LayeredNetwork> {
    let gains = gain_matrices.iter().cloned().map(GainMatrix::from_rows).collect::<Result<Vec<_>>>()?;
    LayeredNetwork::new(layer_sizes.to_vec(), gains, power_budgets.to_vec(), source_power)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn diamond() -> LayeredNetwork {
        build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]]], &[1.0, 1.0], 1.0).unwrap()
    }

    fn fig3() -> LayeredNetwork {
        build_network(
            &[1, 2, 2, 1],
            &[
                vec![vec![1.0], vec![0.8]],
                vec![vec![0.5, 0.3], vec![0.2, 0.7]],
                vec![vec![4.0, 3.0]],
            ],
            &[1.0, 1.0, 1.0, 1.0],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn diamond_is_valid() {
        let net = diamond();
        assert_eq!(net.num_layers(), 2);
        assert_eq!(net.num_nodes(), 4);
        assert_eq!(net.num_relays(), 2);
        assert_eq!(net.power_budget(net.destination()), None);
        assert_eq!(net.power_budget(net.source()), Some(1.0));
    }

    #[test]
    fn zero_row_is_unreachable() {
        let err = build_network(&[1, 2, 1], &[vec![vec![1.0], vec![0.0]], vec![vec![1.0, 1.0]]], &[1.0, 1.0], 1.0)
            .unwrap_err();
        assert!(matches!(err, AncError::Unreachable(n) if n == NodeId::new(1, 1)));
    }

    #[test]
    fn dead_end_is_unreachable() {
        let err = build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 0.0]]], &[1.0, 1.0], 1.0)
            .unwrap_err();
        assert!(matches!(err, AncError::Unreachable(n) if n == NodeId::new(1, 1)));
    }

    #[test]
    fn fig3_shape_is_valid() {
        let net = fig3();
        assert_eq!(net.num_layers(), 3);
        assert_eq!(net.layer_sizes(), &[1, 2, 2, 1]);
        assert_eq!(net.gain(NodeId::new(1, 1), NodeId::new(2, 0)), 0.3);
    }

    #[test]
    fn shape_and_power_errors() {
        assert!(matches!(
            build_network(&[1, 2, 1], &[vec![vec![1.0, 1.0]], vec![vec![1.0, 1.0]]], &[1.0, 1.0], 1.0),
            Err(AncError::Shape(_))
        ));
        assert!(matches!(
            build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]]], &[1.0, 0.0], 1.0),
            Err(AncError::NonPositivePower { .. })
        ));
        assert!(matches!(
            build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]]], &[1.0, 1.0], -1.0),
            Err(AncError::NonPositivePower { .. })
        ));
        assert!(matches!(
            build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]]], &[1.0], 1.0),
            Err(AncError::Shape(_))
        ));
        assert!(matches!(
            build_network(&[2, 1], &[vec![vec![1.0, 1.0]]], &[], 1.0),
            Err(AncError::Shape(_))
        ));
        assert!(matches!(
            build_network(&[1, 1, 1], &[vec![vec![f64::NAN]], vec![vec![1.0]]], &[1.0], 1.0),
            Err(AncError::NonFiniteGain { .. })
        ));
    }

    #[test]
    fn neighbors_of_destination() {
        let net = diamond();
        assert_eq!(net.neighbors_in(net.destination()).unwrap(), vec![NodeId::new(1, 0), NodeId::new(1, 1)]);
        assert!(net.neighbors_in(net.source()).is_err());
    }

    #[test]
    fn neighbors_skip_zero_gain_before_validation() {
        let gains = vec![
            GainMatrix::from_rows(vec![vec![1.0], vec![0.0]]).unwrap(),
            GainMatrix::from_rows(vec![vec![1.0, 1.0]]).unwrap(),
        ];
        let raw = LayeredNetwork::assemble(vec![1, 2, 1], gains, vec![1.0, 1.0], 1.0).unwrap();
        assert!(raw.neighbors_in(NodeId::new(1, 1)).unwrap().is_empty());
    }

    #[test]
    fn neighbors_in_fig3_layer2() {
        let net = fig3();
        assert_eq!(net.neighbors_in(NodeId::new(2, 1)).unwrap(), vec![NodeId::new(1, 0), NodeId::new(1, 1)]);
    }

    #[test]
    fn flat_indexing_round_trips() {
        let net = fig3();
        for (i, node) in net.nodes().enumerate() {
            assert_eq!(net.flat(node), i);
            assert_eq!(net.node_at(i), node);
        }
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let text = r#"{"layer_sizes":[1,1],"gain_matrices":[[[1.0]]],"power_budgets":[],"source_power":1.0,"extra":1}"#;
        assert!(LayeredNetwork::from_json(text).is_err());
    }

    #[test]
    fn json_rule_field() {
        let text = r#"{"layer_sizes":[1,1,1],"gain_matrices":[[[1.0]],[[2.0]]],"power_budgets":[3.0],"source_power":1.0,"received_power_rule":"signed"}"#;
        let net = LayeredNetwork::from_json(text).unwrap();
        assert_eq!(net.rule(), ReceivedPowerRule::Signed);
        assert_eq!(LayeredNetwork::from_json(&net.to_json()).unwrap(), net);
    }
}
