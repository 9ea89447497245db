//! Sample-level simulation of the relay network, used as a statistical oracle
//! for the analytic coefficients, powers and SNR.
//!
//! Each sample draws `x_S ~ N(0, P_S)` and an independent unit normal noise per
//! non-source node, then propagates `y_k = sum_j h_{j,k} x_j + z_k`,
//! `x_k = beta_k y_k` layer by layer. Samples are cut into fixed-size blocks and
//! every `(node, block)` pair owns a random stream derived from the seed, so the
//! result does not depend on how many workers run the blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::snr_from_state;
use crate::coding::propagate_coefficients;
use crate::error::{AncError, Result};
use crate::gains::GainAssignment;
use crate::network::LayeredNetwork;
use crate::optimizer::mix_seed;
use crate::power::transmit_power_from;

const BLOCK: usize = 8192;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0, workers: 0 }
    }
}

/// A sample estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodePower {
    pub layer: usize,
    pub index: usize,
    pub power: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub samples: usize,
    pub seed: u64,
    /// Empirical `E[X_k^2]` for every relay, layer-major.
    pub transmit_power: Vec<NodePower>,
    /// `E[Y_D X_S] / P_S`.
    pub f_sd: Estimate,
    /// `E[Y_D^2] - f_sd^2 P_S`.
    pub destination_noise: Estimate,
    pub snr: Estimate,
}

#[derive(Clone, Debug, Default)]
struct Sums {
    n: f64,
    // per relay: sum x^2, sum x^4
    p2: Vec<f64>,
    p4: Vec<f64>,
    // u = Y_D X_S, v = Y_D^2
    u: f64,
    v: f64,
    uu: f64,
    vv: f64,
    uv: f64,
}

impl Sums {
    fn zero(relays: usize) -> Self {
        Self { p2: vec![0.0; relays], p4: vec![0.0; relays], ..Default::default() }
    }

    fn merge(mut self, other: &Sums) -> Sums {
        self.n += other.n;
        for (a, b) in self.p2.iter_mut().zip(&other.p2) {
            *a += b;
        }
        for (a, b) in self.p4.iter_mut().zip(&other.p4) {
            *a += b;
        }
        self.u += other.u;
        self.v += other.v;
        self.uu += other.uu;
        self.vv += other.vv;
        self.uv += other.uv;
        self
    }
}

/// Pairwise reduction in a fixed order.
fn pairwise(blocks: &[Sums]) -> Sums {
    match blocks {
        [] => unreachable!("at least one block"),
        [one] => one.clone(),
        _ => {
            let mid = blocks.len() / 2;
            pairwise(&blocks[..mid]).merge(&pairwise(&blocks[mid..]))
        }
    }
}

fn run_block(net: &LayeredNetwork, mult: &[f64], seed: u64, block: usize, len: usize) -> Sums {
    let n = net.num_nodes();
    let last = net.num_layers();
    let relays = net.num_relays();
    let mut x = vec![vec![0.0; len]; n];
    let mut y = vec![0.0; len];
    let stream = |node: usize| ChaCha8Rng::seed_from_u64(mix_seed(mix_seed(seed, node as u64), block as u64));

    let sd = net.source_power().sqrt();
    let mut rng = stream(0);
    for v in x[0].iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = sd * z;
    }
    for layer in 1..=last {
        let h = net.gain_matrix(layer - 1);
        let prev = net.layer_range(layer - 1);
        for (row, k) in net.layer_range(layer).enumerate() {
            let mut rng = stream(k);
            for v in y.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for (&g, j) in h.row(row).iter().zip(prev.clone()) {
                if g != 0.0 {
                    for (yt, xt) in y.iter_mut().zip(&x[j]) {
                        *yt += g * xt;
                    }
                }
            }
            if layer < last {
                let b = mult[k];
                for (xt, yt) in x[k].iter_mut().zip(&y) {
                    *xt = b * yt;
                }
            }
        }
    }
    // y now holds the destination reception.
    let mut sums = Sums::zero(relays);
    sums.n = len as f64;
    for r in 0..relays {
        let (mut s2, mut s4) = (0.0, 0.0);
        for &v in &x[r + 1] {
            let sq = v * v;
            s2 += sq;
            s4 += sq * sq;
        }
        sums.p2[r] = s2;
        sums.p4[r] = s4;
    }
    for (&yd, &xs) in y.iter().zip(&x[0]) {
        let u = yd * xs;
        let v = yd * yd;
        sums.u += u;
        sums.v += v;
        sums.uu += u * u;
        sums.vv += v * v;
        sums.uv += u * v;
    }
    sums
}

fn simulate_inner(net: &LayeredNetwork, gains: &GainAssignment, config: &SimConfig) -> Result<SimReport> {
    if config.samples == 0 {
        return Err(AncError::Config("need at least one sample".into()));
    }
    gains.validate(net)?;
    let mult = gains.multipliers(net);
    let blocks = config.samples.div_ceil(BLOCK);
    let sums: Vec<Sums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = if b + 1 == blocks { config.samples - b * BLOCK } else { BLOCK };
            run_block(net, &mult, config.seed, b, len)
        })
        .collect();
    let total = pairwise(&sums);
    let n = total.n;
    let bessel = if n > 1.0 { n / (n - 1.0) } else { 0.0 };

    let transmit_power = net
        .relays()
        .enumerate()
        .map(|(r, node)| {
            let m2 = total.p2[r] / n;
            let var = (total.p4[r] / n - m2 * m2).max(0.0) * bessel;
            NodePower { layer: node.layer, index: node.index, power: Estimate { value: m2, std_error: (var / n).sqrt() } }
        })
        .collect();

    let ps = net.source_power();
    let (m1, m2) = (total.u / n, total.v / n);
    let s11 = (total.uu / n - m1 * m1) * bessel;
    let s22 = (total.vv / n - m2 * m2) * bessel;
    let s12 = (total.uv / n - m1 * m2) * bessel;
    let delta_se = |g1: f64, g2: f64| ((g1 * g1 * s11 + 2.0 * g1 * g2 * s12 + g2 * g2 * s22).max(0.0) / n).sqrt();

    let f_sd = Estimate { value: m1 / ps, std_error: delta_se(1.0 / ps, 0.0) };
    let signal = m1 * m1 / ps;
    let noise = m2 - signal;
    let destination_noise = Estimate { value: noise, std_error: delta_se(-2.0 * m1 / ps, 1.0) };
    let snr = Estimate {
        value: signal / noise,
        std_error: delta_se(2.0 * m1 / ps * m2 / (noise * noise), -signal / (noise * noise)),
    };
    Ok(SimReport { samples: config.samples, seed: config.seed, transmit_power, f_sd, destination_noise, snr })
}

/// Runs the simulation. Gains are measured, never enforced.
pub fn simulate(net: &LayeredNetwork, gains: &GainAssignment, config: &SimConfig) -> Result<SimReport> {
    if config.workers == 0 {
        return simulate_inner(net, gains, config);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| AncError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| simulate_inner(net, gains, config))
}

/// Analytic counterparts of the simulated quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticValues {
    pub transmit_power: Vec<f64>,
    pub f_sd: f64,
    pub destination_noise: f64,
    pub snr: f64,
}

pub fn analytic_values(net: &LayeredNetwork, gains: &GainAssignment) -> Result<AnalyticValues> {
    let st = propagate_coefficients(net, gains)?;
    let transmit_power = net.relays().map(|n| transmit_power_from(net, gains, &st, n)).collect::<Result<_>>()?;
    let d = net.destination();
    Ok(AnalyticValues {
        transmit_power,
        f_sd: st.source_coeff(d),
        destination_noise: st.noise_power(d),
        snr: snr_from_state(net, &st),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub quantity: String,
    pub empirical: f64,
    pub std_error: f64,
    pub analytic: f64,
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub z_threshold: f64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl Agreement {
    pub fn pass_count(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }

    pub fn to_csv(&self) -> Result<String> {
        crate::report::csv_string(&self.checks)
    }
}

fn check(quantity: String, est: Estimate, analytic: f64, z: f64) -> Check {
    let diff = (est.value - analytic).abs();
    let z_score = if est.std_error > 0.0 {
        diff / est.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Check { quantity, empirical: est.value, std_error: est.std_error, analytic, z_score, pass: z_score <= z }
}

/// Passes a quantity when `|empirical - analytic| <= z * std_error`.
///
/// A non-positive empirical destination noise fails the noise and SNR checks.
pub fn agreement_check(report: &SimReport, analytic: &AnalyticValues, z_threshold: f64) -> Result<Agreement> {
    if report.transmit_power.len() != analytic.transmit_power.len() {
        return Err(AncError::Mismatch(format!(
            "{} simulated powers vs {} analytic",
            report.transmit_power.len(),
            analytic.transmit_power.len()
        )));
    }
    let mut checks: Vec<Check> = report
        .transmit_power
        .iter()
        .zip(&analytic.transmit_power)
        .map(|(np, &a)| check(format!("power[{}:{}]", np.layer, np.index), np.power, a, z_threshold))
        .collect();
    checks.push(check("f_sd".into(), report.f_sd, analytic.f_sd, z_threshold));
    let degenerate = !(report.destination_noise.value > 0.0);
    let mut noise = check("destination_noise".into(), report.destination_noise, analytic.destination_noise, z_threshold);
    let mut snr = check("snr".into(), report.snr, analytic.snr, z_threshold);
    if degenerate {
        noise.pass = false;
        snr.pass = false;
    }
    checks.push(noise);
    checks.push(snr);
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(Agreement { z_threshold, checks, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;

    fn chain() -> LayeredNetwork {
        build_network(&[1, 1, 1], &[vec![vec![1.0]], vec![vec![1.0]]], &[1.0], 1.0).unwrap()
    }

    #[test]
    fn chain_snr_half() {
        let net = chain();
        let g = GainAssignment::filled(&net, 1.0);
        let rep = simulate(&net, &g, &SimConfig { samples: 1_000_000, seed: 7, workers: 0 }).unwrap();
        assert!((rep.snr.value - 0.5).abs() <= 3.0 * rep.snr.std_error, "{:?}", rep.snr);
        assert!(rep.snr.std_error > 0.0);
        let ag = agreement_check(&rep, &analytic_values(&net, &g).unwrap(), 4.0).unwrap();
        assert!(ag.all_pass, "{ag:?}");
    }

    #[test]
    fn zero_gains_give_pure_noise() {
        let net = chain();
        let g = GainAssignment::zeros(&net);
        let rep = simulate(&net, &g, &SimConfig { samples: 200_000, seed: 1, workers: 0 }).unwrap();
        assert!(rep.snr.value.abs() < 1e-3);
        assert!((rep.destination_noise.value - 1.0).abs() < 4.0 * rep.destination_noise.std_error);
        assert_eq!(rep.transmit_power[0].power.value, 0.0);
    }

    #[test]
    fn workers_do_not_change_results() {
        let net = build_network(&[1, 2, 1], &[vec![vec![1.0], vec![-0.5]], vec![vec![2.0, 1.0]]], &[1.0, 2.0], 3.0)
            .unwrap();
        let g = GainAssignment::from_relay_values(&net, &[0.4, 0.9]).unwrap();
        let a = simulate(&net, &g, &SimConfig { samples: 50_000, seed: 3, workers: 1 }).unwrap();
        let b = simulate(&net, &g, &SimConfig { samples: 50_000, seed: 3, workers: 3 }).unwrap();
        assert_eq!(a, b);
        let c = simulate(&net, &g, &SimConfig { samples: 50_000, seed: 4, workers: 3 }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturbed_analytic_fails() {
        let net = chain();
        let g = GainAssignment::filled(&net, 1.0);
        let rep = simulate(&net, &g, &SimConfig { samples: 100_000, seed: 5, workers: 0 }).unwrap();
        let mut a = analytic_values(&net, &g).unwrap();
        let good = agreement_check(&rep, &a, 4.0).unwrap();
        assert!(good.all_pass);
        a.transmit_power[0] += 10.0 * rep.transmit_power[0].power.std_error;
        let bad = agreement_check(&rep, &a, 4.0).unwrap();
        assert!(!bad.all_pass);
        assert_eq!(bad.pass_count(), bad.checks.len() - 1);
        a.transmit_power.push(1.0);
        assert!(matches!(agreement_check(&rep, &a, 4.0), Err(AncError::Mismatch(_))));
    }

    #[test]
    fn zero_samples_rejected() {
        let net = chain();
        assert!(simulate(&net, &GainAssignment::zeros(&net), &SimConfig { samples: 0, seed: 0, workers: 0 }).is_err());
    }
}
