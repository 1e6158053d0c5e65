//! Stochastic Pauli noise by Monte Carlo trajectories.
//!
//! After every gate each qubit it touches independently picks up an X with the
//! bit-flip rate and a Z with the phase rate of that gate's arity. Readout bits
//! flip independently with the measurement rate.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::protocol::{binomial_stderr, LogicalLabel, ProtocolParams, Scenario, ScenarioCircuits};
use crate::statevector::{QuantumState, SampleCounts};

pub const DEFAULT_TRAJECTORIES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PauliRates {
    pub bitflip: f64,
    pub phase: f64,
}

impl PauliRates {
    fn is_zero(&self) -> bool {
        self.bitflip == 0.0 && self.phase == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub one_qubit: PauliRates,
    pub two_qubit: PauliRates,
    pub eps_meas: f64,
    pub trajectories: usize,
}

impl Default for NoiseModel {
    fn default() -> NoiseModel {
        NoiseModel::uniform(0.0, 0.0, 0.0)
    }
}

impl NoiseModel {
    /// Same gate error rates for one- and two-qubit gates.
    pub fn uniform(eps_bitflip: f64, eps_phase: f64, eps_meas: f64) -> NoiseModel {
        let rates = PauliRates { bitflip: eps_bitflip, phase: eps_phase };
        NoiseModel { one_qubit: rates, two_qubit: rates, eps_meas, trajectories: DEFAULT_TRAJECTORIES }
    }

    pub fn with_trajectories(mut self, n: usize) -> NoiseModel {
        self.trajectories = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("one-qubit bit-flip", self.one_qubit.bitflip),
            ("one-qubit phase", self.one_qubit.phase),
            ("two-qubit bit-flip", self.two_qubit.bitflip),
            ("two-qubit phase", self.two_qubit.phase),
            ("measurement", self.eps_meas),
        ];
        for (name, p) in probs {
            if !(0.0..=0.5).contains(&p) {
                return Err(Error::InvalidNoise(format!("{name} rate {p} outside [0, 0.5]")));
            }
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidNoise("at least one trajectory is required".into()));
        }
        Ok(())
    }

    pub fn rates(&self, arity: usize) -> PauliRates {
        if arity == 2 {
            self.two_qubit
        } else {
            self.one_qubit
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.one_qubit.is_zero() && self.two_qubit.is_zero()
    }
}

/// RNG for trajectory `index` under `seed`: one ChaCha stream per trajectory.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One noisy trajectory of `circuit` from `initial`.
pub fn run_noisy(circuit: &Circuit, initial: &QuantumState, model: &NoiseModel, rng: &mut impl Rng) -> Result<QuantumState> {
    let mut state = initial.clone();
    for gate in circuit.gates() {
        state.apply_gate(gate)?;
        let rates = model.rates(gate.arity());
        if rates.is_zero() {
            continue;
        }
        for &q in gate.qubits() {
            if rates.bitflip > 0.0 && rng.random::<f64>() < rates.bitflip {
                state.apply_gate(&Gate::x(q))?;
            }
            if rates.phase > 0.0 && rng.random::<f64>() < rates.phase {
                state.apply_gate(&Gate::z(q))?;
            }
        }
    }
    Ok(state)
}

/// Flips every recorded bit independently with probability `eps_meas`.
pub fn apply_measurement_error(counts: &SampleCounts, eps_meas: f64, seed: u64) -> SampleCounts {
    if eps_meas <= 0.0 {
        return counts.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for (&outcome, &n) in counts.counts() {
        for _ in 0..n {
            let mut flipped = outcome;
            for bit in 0..counts.n_bits() {
                if rng.random::<f64>() < eps_meas {
                    flipped ^= 1 << bit;
                }
            }
            *out.entry(flipped).or_insert(0) += 1;
        }
    }
    SampleCounts::new(counts.n_bits(), out)
}

/// Mean and standard error of a sample, by Welford's recurrence.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
    }
    let n = xs.len() as f64;
    let stderr = if xs.len() > 1 { (m2 / (n - 1.0) / n).sqrt() } else { 0.0 };
    (mean, stderr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyFidelity {
    /// Trajectory mean of the exact chain fidelity.
    pub mean: f64,
    pub stderr: f64,
    /// All-zeros frequency after readout errors, shots pooled over trajectories.
    pub sampled: f64,
    pub sampled_stderr: f64,
    pub shots: u64,
    pub trajectories: usize,
    /// Noise acts on every gate: preparation, evolution and readout.
    pub noisy_stages: Vec<String>,
    pub model: NoiseModel,
}

/// Trajectory estimate of a scenario's fidelity under `model`.
pub fn noisy_fidelity(
    params: &ProtocolParams,
    scenario: Scenario,
    init: LogicalLabel,
    model: &NoiseModel,
) -> Result<NoisyFidelity> {
    model.validate()?;
    let full = ScenarioCircuits::build(params, scenario, init)?.full()?;
    let zero = QuantumState::zero(params.n_qubits())?;
    let chain = params.chain_qubits();
    let n = model.trajectories;
    let shots_each = params.shots.div_ceil(n as u64);
    let runs: Vec<(f64, SampleCounts)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(params.seed, k as u64);
            let state = run_noisy(&full, &zero, model, &mut rng)?;
            let counts = state.sample(shots_each, rng.random());
            let counts = apply_measurement_error(&counts, model.eps_meas, rng.random());
            Ok((state.zero_probability(&chain), counts))
        })
        .collect::<Result<_>>()?;
    let fids: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (mean, stderr) = mean_stderr(&fids);
    let total_shots = shots_each * n as u64;
    let zeros: u64 = runs.iter().map(|(_, c)| (c.zero_frequency(&chain) * c.shots() as f64).round() as u64).sum();
    let sampled = zeros as f64 / total_shots as f64;
    Ok(NoisyFidelity {
        mean,
        stderr,
        sampled,
        sampled_stderr: binomial_stderr(sampled, total_shots),
        shots: total_shots,
        trajectories: n,
        noisy_stages: vec!["preparation".into(), "evolution".into(), "readout".into()],
        model: model.clone(),
    })
}
