//! Analog network coding (multihop amplify-and-forward) in layered Gaussian
//! relay networks.
//!
//! * [`network`]: validated layered topologies with signed real gains.
//! * [`coding`]: local and global encoding coefficients, plus a path-enumeration oracle.
//! * [`power`]: received powers, the high-SNR regime parameter, maximum gains, exact transmit powers.
//! * [`schemes`]: the maximum-gain scheme and the generalized-regime scheme.
//! * [`bounds`]: destination SNR, achieved rate and the closed-form rate bounds.
//! * [`optimizer`]: numeric SNR maximization inside the maximum-gain boxes.
//! * [`montecarlo`]: sample-level simulation used as a statistical oracle.
//! * [`sweep`]: source-power, relay-count and `delta` sweeps.

pub mod bounds;
pub mod coding;
pub mod error;
pub mod gains;
pub mod montecarlo;
pub mod network;
pub mod optimizer;
pub mod power;
pub mod random;
pub mod report;
pub mod schemes;
pub mod sweep;

pub use error::{AncError, Result};
pub use gains::GainAssignment;
pub use network::{build_network, GainMatrix, LayeredNetwork, NetworkSpec, NodeId, ReceivedPowerRule};
