//! Dense statevector simulation.
//!
//! Qubit 0 is the least-significant bit of the basis index, and `|0⟩` is the
//! spin-up state.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 26;
/// Largest register for which [`dense_unitary`] will build a matrix.
pub const MAX_DENSE_QUBITS: usize = 10;

const NORM_TOLERANCE: f64 = 1e-9;
// below this many amplitudes the rayon overhead dominates
const PAR_MIN_LEN: usize = 1 << 14;

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl QuantumState {
    /// All-zeros (all spins up) state on `n` qubits.
    pub fn zero(n: usize) -> Result<QuantumState> {
        QuantumState::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<QuantumState> {
        check_register(n, MAX_QUBITS)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        if index >= amps.len() {
            return Err(Error::QubitOutOfRange { qubit: index, n_qubits: n });
        }
        amps[index] = C64::new(1.0, 0.0);
        Ok(QuantumState { n_qubits: n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm 1.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<QuantumState> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidParams(format!("{len} amplitudes is not 2^n with n >= 1")));
        }
        let n = len.trailing_zeros() as usize;
        check_register(n, MAX_QUBITS)?;
        let state = QuantumState { n_qubits: n, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParams(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if gate.max_qubit() >= self.n_qubits {
            return Err(Error::QubitOutOfRange { qubit: gate.max_qubit(), n_qubits: self.n_qubits });
        }
        let q = gate.qubits();
        match gate.kind() {
            GateKind::Cnot => apply_cnot(&mut self.amps, q[0], q[1]),
            GateKind::X => apply_x(&mut self.amps, q[0]),
            GateKind::Z => apply_diagonal(&mut self.amps, q[0], C64::new(1.0, 0.0), C64::new(-1.0, 0.0)),
            GateKind::Rz(t) => {
                let half = 0.5 * t;
                apply_diagonal(&mut self.amps, q[0], C64::from_polar(1.0, -half), C64::from_polar(1.0, half))
            }
            kind => apply_single(&mut self.amps, q[0], single_qubit_matrix(kind)),
        }
        Ok(())
    }

    /// Applies every gate of `circuit` in order.
    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        self.check_same_register(circuit.n_qubits())?;
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        self.check_same_register(other.n_qubits)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability that every qubit in `qubits` reads 0, marginalising the rest.
    pub fn zero_probability(&self, qubits: &[usize]) -> f64 {
        let mask = qubits.iter().fold(0usize, |m, &q| m | (1 << q));
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        p.min(1.0)
    }

    /// `⟨target|ρ|target⟩` where ρ is the reduced state on `qubits` and `target`
    /// is a state on `qubits.len()` qubits (target qubit k ↔ `qubits[k]`).
    pub fn subsystem_overlap(&self, qubits: &[usize], target: &QuantumState) -> Result<f64> {
        if target.n_qubits != qubits.len() {
            return Err(Error::RegisterMismatch { left: qubits.len(), right: target.n_qubits });
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits });
        }
        let mask = qubits.iter().fold(0usize, |m, &q| m | (1 << q));
        let scatter = |k: usize| {
            qubits.iter().enumerate().fold(0usize, |acc, (bit, &q)| acc | (((k >> bit) & 1) << q))
        };
        let offsets: Vec<usize> = (0..target.amps.len()).map(scatter).collect();
        let total: f64 = (0..self.amps.len())
            .filter(|i| i & mask == 0)
            .map(|rest| {
                offsets
                    .iter()
                    .zip(&target.amps)
                    .map(|(&off, t)| t.conj() * self.amps[rest | off])
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum();
        Ok(total.min(1.0))
    }

    /// Draws `shots` i.i.d. samples from the Born distribution.
    pub fn sample(&self, shots: u64, seed: u64) -> SampleCounts {
        let mut cumulative = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let last = cumulative.len() - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cumulative.partition_point(|&c| c <= u).min(last);
            *counts.entry(idx as u64).or_insert(0) += 1;
        }
        SampleCounts { n_bits: self.n_qubits, shots, counts }
    }

    fn check_same_register(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::RegisterMismatch { left: self.n_qubits, right: n });
        }
        Ok(())
    }
}

fn check_register(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::RegisterSize { n, min: 1, max });
    }
    Ok(())
}

/// Measurement record: basis index → occurrences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCounts {
    n_bits: usize,
    shots: u64,
    counts: BTreeMap<u64, u64>,
}

impl SampleCounts {
    pub fn new(n_bits: usize, counts: BTreeMap<u64, u64>) -> SampleCounts {
        let shots = counts.values().sum();
        SampleCounts { n_bits, shots, counts }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn get(&self, index: u64) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// Counts keyed by bit-string, highest qubit first (qubit 0 is the last character).
    pub fn bitstrings(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .map(|(&idx, &c)| {
                let s: String = (0..self.n_bits)
                    .rev()
                    .map(|b| if (idx >> b) & 1 == 1 { '1' } else { '0' })
                    .collect();
                (s, c)
            })
            .collect()
    }

    /// Fraction of shots in which every listed bit was 0.
    pub fn zero_frequency(&self, bits: &[usize]) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        let mask = bits.iter().fold(0u64, |m, &b| m | (1 << b));
        let hits: u64 = self.counts.iter().filter(|(&i, _)| i & mask == 0).map(|(_, &c)| c).sum();
        hits as f64 / self.shots as f64
    }
}

/// Full unitary of `circuit`, built column by column from basis states.
pub fn dense_unitary(circuit: &Circuit) -> Result<DMatrix<C64>> {
    let n = circuit.n_qubits();
    check_register(n, MAX_DENSE_QUBITS)?;
    let dim = 1usize << n;
    let columns: Vec<Vec<C64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut s = QuantumState::basis(n, j)?;
            s.run(circuit)?;
            Ok(s.amps)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(dim, dim, |r, c| columns[c][r]))
}

/// 2×2 matrix `[m00, m01, m10, m11]` of a single-qubit gate.
pub fn single_qubit_matrix(kind: GateKind) -> [C64; 4] {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    match kind {
        GateKind::Rx(t) => {
            let (s, c) = (0.5 * t).sin_cos();
            [C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0)]
        }
        GateKind::Ry(t) => {
            let (s, c) = (0.5 * t).sin_cos();
            [C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]
        }
        GateKind::Rz(t) => {
            [C64::from_polar(1.0, -0.5 * t), zero, zero, C64::from_polar(1.0, 0.5 * t)]
        }
        GateKind::H => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            [C64::new(r, 0.0), C64::new(r, 0.0), C64::new(r, 0.0), C64::new(-r, 0.0)]
        }
        GateKind::X => [zero, one, one, zero],
        GateKind::Z => [one, zero, zero, -one],
        GateKind::Cnot => panic!("CNOT is not a single-qubit gate"),
    }
}

fn for_each_pair<F>(amps: &mut [C64], q: usize, f: F)
where
    F: Fn(usize, &mut C64, &mut C64) + Sync,
{
    let stride = 1usize << q;
    let body = |(k, chunk): (usize, &mut [C64])| {
        let base = k * 2 * stride;
        let (lo, hi) = chunk.split_at_mut(stride);
        for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            f(base + j, a, b);
        }
    };
    if amps.len() >= PAR_MIN_LEN {
        amps.par_chunks_mut(2 * stride).enumerate().for_each(body);
    } else {
        amps.chunks_mut(2 * stride).enumerate().for_each(body);
    }
}

fn apply_single(amps: &mut [C64], q: usize, m: [C64; 4]) {
    for_each_pair(amps, q, |_, a, b| {
        let (x, y) = (*a, *b);
        *a = m[0] * x + m[1] * y;
        *b = m[2] * x + m[3] * y;
    });
}

fn apply_diagonal(amps: &mut [C64], q: usize, d0: C64, d1: C64) {
    for_each_pair(amps, q, |_, a, b| {
        *a *= d0;
        *b *= d1;
    });
}

fn apply_x(amps: &mut [C64], q: usize) {
    for_each_pair(amps, q, |_, a, b| std::mem::swap(a, b));
}

fn apply_cnot(amps: &mut [C64], control: usize, target: usize) {
    // pairs differ in the target bit; swap those whose control bit is set
    for_each_pair(amps, target, |idx, a, b| {
        if (idx >> control) & 1 == 1 {
            std::mem::swap(a, b);
        }
    });
}
