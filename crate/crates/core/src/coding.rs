//! Local and global encoding coefficients of analog network coding.
//!
//! Node `k` receives `y_k = f_{S,k} x_S + sum_i f_{i,k} z_i + z_k`, where the
//! sum runs over upstream relays `i`. Every coefficient includes the gain of the
//! node it starts from (`beta_S = 1`), so a relay `i` feeding `k` directly
//! contributes `f_{i,k} = beta_i h_{i,k}`.

use crate::error::{AncError, Result};
use crate::gains::GainAssignment;
use crate::network::{LayeredNetwork, NodeId};

/// Maximum number of paths [`path_oracle`] will enumerate.
pub const PATH_GUARD: usize = 1_000_000;

pub type Edge = (NodeId, NodeId);

fn check_edge(net: &LayeredNetwork, (from, to): Edge) -> Result<()> {
    if !net.contains(from) || !net.contains(to) || to.layer != from.layer + 1 {
        return Err(AncError::NonAdjacentEdges(from, to, from, to));
    }
    Ok(())
}

/// `alpha = beta_k h_{k,m}` for the edge pair meeting at `k`.
///
/// `upstream` is `None` when `k` starts the path (the source, or a relay whose
/// own noise is being traced).
pub fn local_coefficient(
    net: &LayeredNetwork,
    gains: &GainAssignment,
    upstream: Option<Edge>,
    downstream: Edge,
) -> Result<f64> {
    check_edge(net, downstream)?;
    let (k, m) = downstream;
    if let Some(up) = upstream {
        check_edge(net, up)?;
        if up.1 != k {
            return Err(AncError::NonAdjacentEdges(up.0, up.1, k, m));
        }
    }
    Ok(gains.beta(k) * net.gain(k, m))
}

/// Global coefficients for the source signal and every relay noise.
#[derive(Clone, Debug, PartialEq)]
pub struct CodingState {
    source: Vec<f64>,
    origins: Vec<NodeId>,
    origin_start: usize,
    noise: Vec<Vec<f64>>,
    net_nodes: Vec<NodeId>,
}

impl CodingState {
    fn index(&self, node: NodeId) -> usize {
        self.net_nodes.binary_search(&node).expect("node belongs to the network")
    }

    /// `f_{S,k}`.
    pub fn source_coeff(&self, node: NodeId) -> f64 {
        self.source[self.index(node)]
    }

    /// Noise origins (all relays), layer-major.
    pub fn origins(&self) -> &[NodeId] {
        &self.origins
    }

    /// `f_{i,k}` for a relay origin `i`.
    pub fn noise_coeff(&self, origin: NodeId, node: NodeId) -> f64 {
        let o = self.index(origin) - self.origin_start;
        assert!(o < self.origins.len(), "{origin} is not a noise origin");
        self.noise[o][self.index(node)]
    }

    /// Propagated noise power at `k`: `sum_{i upstream} f_{i,k}^2 + 1`.
    pub fn noise_power(&self, node: NodeId) -> f64 {
        let k = self.index(node);
        let upstream: f64 = self
            .origins
            .iter()
            .zip(&self.noise)
            .filter(|(o, _)| o.layer < node.layer)
            .map(|(_, f)| f[k] * f[k])
            .sum();
        upstream + 1.0
    }

    /// `E[Y_k^2] = f_{S,k}^2 P_S + sum_i f_{i,k}^2 + 1` for a non-source node.
    pub fn received_second_moment(&self, net: &LayeredNetwork, node: NodeId) -> f64 {
        let f = self.source_coeff(node);
        f * f * net.source_power() + self.noise_power(node)
    }
}

/// Forward pass of `f_{o,k} = sum_{j in N(k)} beta_j h_{j,k} f_{o,j}` starting at `start`.
fn forward(net: &LayeredNetwork, mult: &[f64], start: NodeId) -> Vec<f64> {
    let mut f = vec![0.0; net.num_nodes()];
    f[net.flat(start)] = 1.0;
    for layer in start.layer + 1..=net.num_layers() {
        let h = net.gain_matrix(layer - 1);
        let prev = net.layer_range(layer - 1);
        for (row, k) in net.layer_range(layer).enumerate() {
            f[k] = h.row(row).iter().zip(prev.clone()).map(|(&g, j)| mult[j] * g * f[j]).sum();
        }
    }
    f
}

/// Computes every global coefficient by layer-wise dynamic programming.
pub fn propagate_coefficients(net: &LayeredNetwork, gains: &GainAssignment) -> Result<CodingState> {
    gains.validate(net)?;
    let mult = gains.multipliers(net);
    let origins: Vec<NodeId> = net.relays().collect();
    let source = forward(net, &mult, net.source());
    let noise = origins.iter().map(|&o| forward(net, &mult, o)).collect();
    Ok(CodingState { source, origins, origin_start: 1, noise, net_nodes: net.nodes().collect() })
}

/// Ordered node list crossing one layer per hop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelayPath(Vec<NodeId>);

impl RelayPath {
    pub fn new(net: &LayeredNetwork, nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(AncError::Shape("empty path".into()));
        }
        for w in nodes.windows(2) {
            check_edge(net, (w[0], w[1]))?;
            if net.gain(w[0], w[1]) == 0.0 {
                return Err(AncError::NonAdjacentEdges(w[0], w[1], w[0], w[1]));
            }
        }
        Ok(Self(nodes))
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Product of the local coefficients along the path, starting with the
    /// origin's own gain.
    pub fn product(&self, net: &LayeredNetwork, gains: &GainAssignment) -> Result<f64> {
        let mut acc = 1.0;
        for (m, w) in self.0.windows(2).enumerate() {
            let upstream = (m > 0).then(|| (self.0[m - 1], w[0]));
            acc *= local_coefficient(net, gains, upstream, (w[0], w[1]))?;
        }
        Ok(acc)
    }
}

/// Enumerates every relay path from `origin` to `target`, failing once more than `guard` exist.
pub fn enumerate_paths(net: &LayeredNetwork, origin: NodeId, target: NodeId, guard: usize) -> Result<Vec<RelayPath>> {
    fn walk(
        net: &LayeredNetwork,
        target: NodeId,
        stack: &mut Vec<NodeId>,
        out: &mut Vec<RelayPath>,
        guard: usize,
    ) -> Result<()> {
        let here = *stack.last().expect("nonempty");
        if here == target {
            if out.len() == guard {
                return Err(AncError::PathGuard(guard));
            }
            out.push(RelayPath(stack.clone()));
            return Ok(());
        }
        if here.layer >= target.layer {
            return Ok(());
        }
        for next in net.neighbors_out(here) {
            stack.push(next);
            walk(net, target, stack, out, guard)?;
            stack.pop();
        }
        Ok(())
    }

    let mut out = Vec::new();
    walk(net, target, &mut vec![origin], &mut out, guard)?;
    Ok(out)
}

/// `f_{origin,target}` as an explicit sum over enumerated relay paths.
///
/// Independent of [`propagate_coefficients`]; exponential in depth, guarded by [`PATH_GUARD`].
pub fn path_oracle(net: &LayeredNetwork, gains: &GainAssignment, origin: NodeId, target: NodeId) -> Result<f64> {
    gains.validate(net)?;
    enumerate_paths(net, origin, target, PATH_GUARD)?
        .iter()
        .map(|p| p.product(net, gains))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;

    fn diamond() -> LayeredNetwork {
        build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]]], &[1.0, 1.0], 1.0).unwrap()
    }

    fn chain(h: f64) -> LayeredNetwork {
        build_network(&[1, 1, 1], &[vec![vec![h]], vec![vec![h]]], &[1.0], 1.0).unwrap()
    }

    #[test]
    fn local_coefficient_examples() {
        let net = build_network(&[1, 1, 1], &[vec![vec![3.0]], vec![vec![2.0]]], &[1.0], 1.0).unwrap();
        let g = GainAssignment::filled(&net, 0.5);
        let (s, r, d) = (NodeId::new(0, 0), NodeId::new(1, 0), NodeId::new(2, 0));
        assert_eq!(local_coefficient(&net, &g, Some((s, r)), (r, d)).unwrap(), 1.0);
        assert_eq!(local_coefficient(&net, &g, None, (s, r)).unwrap(), 3.0);

        let neg = build_network(&[1, 1, 1], &[vec![vec![3.0]], vec![vec![-2.0]]], &[1.0], 1.0).unwrap();
        assert_eq!(local_coefficient(&neg, &g, Some((s, r)), (r, d)).unwrap(), -1.0);

        assert!(matches!(local_coefficient(&net, &g, Some((s, r)), (s, r)), Err(AncError::NonAdjacentEdges(..))));
        assert!(local_coefficient(&net, &g, None, (s, d)).is_err());
    }

    #[test]
    fn diamond_unit_gains() {
        let net = diamond();
        let st = propagate_coefficients(&net, &GainAssignment::filled(&net, 1.0)).unwrap();
        let d = net.destination();
        assert_eq!(st.source_coeff(d), 2.0);
        assert_eq!(st.noise_coeff(NodeId::new(1, 0), d), 1.0);
        assert_eq!(st.noise_coeff(NodeId::new(1, 1), d), 1.0);
        assert_eq!(st.noise_coeff(NodeId::new(1, 1), NodeId::new(1, 1)), 1.0);
        assert_eq!(st.noise_coeff(NodeId::new(1, 1), NodeId::new(1, 0)), 0.0);
        assert_eq!(st.source_coeff(net.source()), 1.0);
    }

    #[test]
    fn chain_one_path() {
        let net = chain(1.0);
        let b = 0.37;
        let st = propagate_coefficients(&net, &GainAssignment::filled(&net, b)).unwrap();
        assert_eq!(st.source_coeff(net.destination()), b);
        assert_eq!(st.noise_coeff(NodeId::new(1, 0), net.destination()), b);
        // y_D = b (x_S + z_r) + z_D
        assert_eq!(st.received_second_moment(&net, net.destination()), b * b + b * b + 1.0);
    }

    #[test]
    fn oracle_examples() {
        let net = chain(1.0);
        let g = GainAssignment::filled(&net, 0.8);
        assert_eq!(path_oracle(&net, &g, NodeId::new(1, 0), net.destination()).unwrap(), 0.8);
        assert_eq!(path_oracle(&net, &g, NodeId::new(1, 0), NodeId::new(1, 0)).unwrap(), 1.0);

        let net = build_network(&[1, 2, 1], &[vec![vec![2.0], vec![-1.5]], vec![vec![0.5, 3.0]]], &[1.0, 1.0], 1.0)
            .unwrap();
        let g = GainAssignment::from_relay_values(&net, &[0.3, 0.7]).unwrap();
        let want = 0.3 * 2.0 * 0.5 + 0.7 * (-1.5) * 3.0;
        assert_eq!(path_oracle(&net, &g, net.source(), net.destination()).unwrap(), want);
    }

    #[test]
    fn relay_path_checks_edges() {
        let net = diamond();
        assert!(RelayPath::new(&net, vec![net.source(), net.destination()]).is_err());
        let p = RelayPath::new(&net, vec![net.source(), NodeId::new(1, 1), net.destination()]).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn path_guard_trips() {
        // 6 relays per layer over 8 relay layers: 6^8 paths.
        let l = 9;
        let mut sizes = vec![1];
        sizes.extend(std::iter::repeat(6).take(l - 1));
        sizes.push(1);
        let gains: Vec<Vec<Vec<f64>>> =
            (0..l).map(|t| vec![vec![1.0; sizes[t]]; sizes[t + 1]]).collect();
        let net = build_network(&sizes, &gains, &vec![1.0; 6 * (l - 1)], 1.0).unwrap();
        let g = GainAssignment::filled(&net, 0.1);
        assert!(matches!(path_oracle(&net, &g, net.source(), net.destination()), Err(AncError::PathGuard(_))));
    }

    #[test]
    fn zero_gain_cut_kills_source_coefficient() {
        let net = build_network(&[1, 2, 1], &[vec![vec![1.0], vec![1.0]], vec![vec![1.0, 1.0]]], &[1.0, 1.0], 1.0)
            .unwrap();
        let st = propagate_coefficients(&net, &GainAssignment::zeros(&net)).unwrap();
        assert_eq!(st.source_coeff(net.destination()), 0.0);
    }
}
