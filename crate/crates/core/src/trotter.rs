//! First-order product-formula compilation of the two-chain Hamiltonian
//!
//! ```text
//! H = -J Σ σᶻσᶻ (within each chain) - Σ hₙ σˣₙ - J_C σᶻ_L Sᶻ σᶻ_R
//! ```
//!
//! split into four summands (even bonds, odd bonds, Zeeman, coupler), each of
//! which exponentiates to a fixed-depth layer of gates.
//!
//! Register layout for chains of length `L`: qubits `0..L` hold the left chain
//! left to right, qubit `L` is the coupler, qubits `L+1..=2L` hold the right chain.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::operators::Pauli;

/// One of the four Hamiltonian summands, in product-formula order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Summand {
    EvenBonds,
    OddBonds,
    Zeeman,
    Coupler,
}

impl Summand {
    pub const ALL: [Summand; 4] = [Summand::EvenBonds, Summand::OddBonds, Summand::Zeeman, Summand::Coupler];
}

/// Weighted Pauli string on the full register.
pub type PauliTerm = (f64, Vec<(usize, Pauli)>);

/// Static description of the two chains and the coupler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    chain_len: usize,
    j: f64,
    j_c: f64,
    fields: Vec<f64>,
}

impl ChainConfig {
    pub fn new(chain_len: usize, j: f64, j_c: f64, fields: Vec<f64>) -> Result<ChainConfig> {
        if chain_len < 3 {
            return Err(Error::InvalidConfig(format!("chain length {chain_len} < 3")));
        }
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::InvalidConfig(format!("J must be positive, got {j}")));
        }
        if !(j_c >= 0.0 && j_c.is_finite()) {
            return Err(Error::InvalidConfig(format!("J_C must be non-negative, got {j_c}")));
        }
        if fields.len() != 2 * chain_len {
            return Err(Error::InvalidConfig(format!(
                "{} fields for {} sites",
                fields.len(),
                2 * chain_len
            )));
        }
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidConfig("non-finite field".into()));
        }
        Ok(ChainConfig { chain_len, j, j_c, fields })
    }

    pub fn chain_len(&self) -> usize {
        self.chain_len
    }

    pub fn n_sites(&self) -> usize {
        2 * self.chain_len
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.chain_len + 1
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn j_c(&self) -> f64 {
        self.j_c
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn coupler_index(&self) -> usize {
        self.chain_len
    }

    /// Register position of chain site `site` (sites are numbered left chain first).
    pub fn site_qubit(&self, site: usize) -> usize {
        if site < self.chain_len {
            site
        } else {
            site + 1
        }
    }

    /// Register positions of every chain site, in site order.
    pub fn chain_qubits(&self) -> Vec<usize> {
        (0..self.n_sites()).map(|s| self.site_qubit(s)).collect()
    }

    /// Same chains with a different field vector.
    pub fn with_fields(&self, fields: Vec<f64>) -> Result<ChainConfig> {
        ChainConfig::new(self.chain_len, self.j, self.j_c, fields)
    }

    /// Bonds `(site, site+1)` whose in-chain position has the given parity.
    pub fn bonds(&self, parity: usize) -> Vec<(usize, usize)> {
        (0..2)
            .flat_map(|chain| {
                let offset = chain * self.chain_len;
                (0..self.chain_len - 1)
                    .filter(move |k| k % 2 == parity)
                    .map(move |k| (offset + k, offset + k + 1))
            })
            .collect()
    }

    /// The summand as weighted Pauli strings on the full register.
    pub fn pauli_terms(&self, summand: Summand) -> Vec<PauliTerm> {
        match summand {
            Summand::EvenBonds | Summand::OddBonds => {
                let parity = usize::from(summand == Summand::OddBonds);
                self.bonds(parity)
                    .into_iter()
                    .map(|(a, b)| {
                        (-self.j, vec![(self.site_qubit(a), Pauli::Z), (self.site_qubit(b), Pauli::Z)])
                    })
                    .collect()
            }
            Summand::Zeeman => self
                .fields
                .iter()
                .enumerate()
                .map(|(s, &h)| (-h, vec![(self.site_qubit(s), Pauli::X)]))
                .collect(),
            Summand::Coupler => {
                let (left, right) = self.coupler_sites();
                vec![(
                    -self.j_c,
                    vec![
                        (self.site_qubit(left), Pauli::Z),
                        (self.coupler_index(), Pauli::Z),
                        (self.site_qubit(right), Pauli::Z),
                    ],
                )]
            }
        }
    }

    /// Last site of the left chain and first site of the right chain.
    pub fn coupler_sites(&self) -> (usize, usize) {
        (self.chain_len - 1, self.chain_len)
    }
}

/// `exp(-i·coupling·dt·σᶻᵢσᶻⱼ)` on sites `i`, `j` as CNOT · RZ · CNOT.
pub fn pair_interaction_circuit(cfg: &ChainConfig, i: usize, j: usize, coupling: f64, dt: f64) -> Result<Circuit> {
    let mut c = Circuit::new(cfg.n_qubits());
    append_pair_interaction(&mut c, cfg, i, j, coupling, dt)?;
    Ok(c)
}

fn append_pair_interaction(
    c: &mut Circuit,
    cfg: &ChainConfig,
    i: usize,
    j: usize,
    coupling: f64,
    dt: f64,
) -> Result<()> {
    let same_chain = i / cfg.chain_len == j / cfg.chain_len;
    if i >= cfg.n_sites() || j >= cfg.n_sites() || i.abs_diff(j) != 1 || !same_chain {
        return Err(Error::InvalidConfig(format!("sites {i} and {j} are not neighbours in one chain")));
    }
    let (qi, qj) = (cfg.site_qubit(i), cfg.site_qubit(j));
    c.append(Gate::cnot(qi, qj)?)?;
    c.append(Gate::rz(2.0 * coupling * dt, qj)?)?;
    c.append(Gate::cnot(qi, qj)?)?;
    Ok(())
}

/// `exp(-i H_Z dt)` with `H_Z = -Σ hₙσˣₙ`, i.e. `RX(-2hₙdt)` on every site.
pub fn zeeman_circuit(cfg: &ChainConfig, fields: &[f64], dt: f64) -> Result<Circuit> {
    let mut c = Circuit::new(cfg.n_qubits());
    append_zeeman(&mut c, cfg, fields, dt)?;
    Ok(c)
}

fn append_zeeman(c: &mut Circuit, cfg: &ChainConfig, fields: &[f64], dt: f64) -> Result<()> {
    if fields.len() != cfg.n_sites() {
        return Err(Error::InvalidConfig(format!("{} fields for {} sites", fields.len(), cfg.n_sites())));
    }
    for (s, &h) in fields.iter().enumerate() {
        c.append(Gate::rx(-2.0 * h * dt, cfg.site_qubit(s))?)?;
    }
    Ok(())
}

/// `exp(+i J_C dt σᶻ Sᶻ σᶻ)` on the chain ends and the coupler.
///
/// The parity of the three spins is accumulated onto the right-chain end with
/// two CNOTs, rotated, and uncomputed.
pub fn coupler_circuit(cfg: &ChainConfig, j_c: f64, dt: f64) -> Result<Circuit> {
    let mut c = Circuit::new(cfg.n_qubits());
    append_coupler(&mut c, cfg, j_c, dt)?;
    Ok(c)
}

fn append_coupler(c: &mut Circuit, cfg: &ChainConfig, j_c: f64, dt: f64) -> Result<()> {
    if j_c.is_nan() || j_c < 0.0 {
        return Err(Error::InvalidConfig(format!("J_C must be non-negative, got {j_c}")));
    }
    let (left, right) = cfg.coupler_sites();
    let (ql, qc, qr) = (cfg.site_qubit(left), cfg.coupler_index(), cfg.site_qubit(right));
    c.append(Gate::cnot(qc, ql)?)?;
    c.append(Gate::cnot(ql, qr)?)?;
    c.append(Gate::rz(-2.0 * j_c * dt, qr)?)?;
    c.append(Gate::cnot(ql, qr)?)?;
    c.append(Gate::cnot(qc, ql)?)?;
    Ok(())
}

/// Circuit for one summand's exponential `exp(-i H_X dt)`.
pub fn summand_circuit(cfg: &ChainConfig, summand: Summand, dt: f64) -> Result<Circuit> {
    let mut c = Circuit::new(cfg.n_qubits());
    append_summand(&mut c, cfg, summand, dt)?;
    Ok(c)
}

fn append_summand(c: &mut Circuit, cfg: &ChainConfig, summand: Summand, dt: f64) -> Result<()> {
    match summand {
        Summand::EvenBonds | Summand::OddBonds => {
            let parity = usize::from(summand == Summand::OddBonds);
            // the Hamiltonian carries -J on every bond
            for (a, b) in cfg.bonds(parity) {
                append_pair_interaction(c, cfg, a, b, -cfg.j, dt)?;
            }
            Ok(())
        }
        Summand::Zeeman => append_zeeman(c, cfg, &cfg.fields, dt),
        Summand::Coupler => append_coupler(c, cfg, cfg.j_c, dt),
    }
}

/// One first-order step: even bonds, odd bonds, Zeeman, coupler.
pub fn trotter_step_circuit(cfg: &ChainConfig, dt: f64) -> Result<Circuit> {
    let mut c = Circuit::with_capacity(cfg.n_qubits(), step_gate_count(cfg));
    append_trotter_step(&mut c, cfg, dt)?;
    Ok(c)
}

/// Appends one Trotter step to an existing circuit on the same register.
pub fn append_trotter_step(c: &mut Circuit, cfg: &ChainConfig, dt: f64) -> Result<()> {
    if c.n_qubits() != cfg.n_qubits() {
        return Err(Error::RegisterMismatch { left: c.n_qubits(), right: cfg.n_qubits() });
    }
    for s in Summand::ALL {
        append_summand(c, cfg, s, dt)?;
    }
    Ok(())
}

/// Gates emitted per Trotter step.
pub fn step_gate_count(cfg: &ChainConfig) -> usize {
    let bonds = 2 * (cfg.chain_len - 1);
    3 * bonds + cfg.n_sites() + 5
}
