//! Random instance generators for property tests and calibration runs.

use std::ops::RangeInclusive;

use rand::Rng;

use crate::gains::GainAssignment;
use crate::network::{GainMatrix, LayeredNetwork};
use crate::power::max_gain;

#[derive(Clone, Debug)]
pub struct RandomNetworkParams {
    /// Number of hops `L`.
    pub hops: RangeInclusive<usize>,
    /// Relays per relay layer.
    pub width: RangeInclusive<usize>,
    /// Gain magnitudes are drawn uniformly from this range (never zero).
    pub gain_magnitude: (f64, f64),
    /// Draw a random sign for every gain.
    pub signed: bool,
    pub budget: (f64, f64),
    pub source_power: (f64, f64),
}

impl Default for RandomNetworkParams {
    fn default() -> Self {
        Self {
            hops: 2..=5,
            width: 1..=6,
            gain_magnitude: (0.05, 2.0),
            signed: true,
            budget: (0.5, 4.0),
            source_power: (0.5, 4.0),
        }
    }
}

/// Fully connected layered network with nonzero gains.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, params: &RandomNetworkParams) -> LayeredNetwork {
    let hops = rng.gen_range(params.hops.clone());
    let mut sizes = vec![1];
    for _ in 1..hops {
        sizes.push(rng.gen_range(params.width.clone()));
    }
    sizes.push(1);
    let (lo, hi) = params.gain_magnitude;
    let gains = (0..hops)
        .map(|t| {
            GainMatrix::from_fn(sizes[t + 1], sizes[t], |_, _| {
                let g = rng.gen_range(lo..=hi);
                if params.signed && rng.gen_bool(0.5) {
                    -g
                } else {
                    g
                }
            })
        })
        .collect();
    let relays: usize = sizes[1..hops].iter().sum();
    let budgets = (0..relays).map(|_| rng.gen_range(params.budget.0..=params.budget.1)).collect();
    let ps = rng.gen_range(params.source_power.0..=params.source_power.1);
    LayeredNetwork::new(sizes, gains, budgets, ps).expect("random network is valid")
}

/// Every relay gain drawn uniformly from `[0, beta_max]`.
pub fn random_gains_in_boxes<R: Rng + ?Sized>(rng: &mut R, net: &LayeredNetwork) -> GainAssignment {
    let values: Vec<f64> = net
        .relays()
        .map(|n| {
            let b = max_gain(net, n).expect("nondegenerate received power");
            rng.gen_range(0.0..=b)
        })
        .collect();
    GainAssignment::from_relay_values(net, &values).expect("shape matches")
}

/// Arbitrary finite relay gains in `[-bound, bound]`.
pub fn random_gains<R: Rng + ?Sized>(rng: &mut R, net: &LayeredNetwork, bound: f64) -> GainAssignment {
    let values: Vec<f64> = (0..net.num_relays()).map(|_| rng.gen_range(-bound..=bound)).collect();
    GainAssignment::from_relay_values(net, &values).expect("shape matches")
}
