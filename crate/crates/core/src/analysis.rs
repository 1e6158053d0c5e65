//! Error bounds, adiabaticity and depth accounting, plus dense exact-evolution
//! oracles for small registers.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::operators::{commutator, expm_hermitian, pauli_sum, phase_aligned_distance, spectral_norm};
use crate::protocol::{intervals, FieldSchedule, Interval, ProtocolParams};
use crate::statevector::{dense_unitary, QuantumState, MAX_DENSE_QUBITS};
use crate::trotter::{trotter_step_circuit, ChainConfig, Summand};

/// Largest site count the exact-evolution oracle accepts.
pub const MAX_EXACT_SITES: usize = 8;

/// Layers in one Trotter step of the reference geometry.
pub const STEP_DEPTH: usize = 12;

/// `(N_s·J + 2·J_C)·h_para·Δt²`
pub fn per_step_error_bound(p: &ProtocolParams) -> f64 {
    (p.n_s as f64 * p.j + 2.0 * p.j_c) * p.h_para * p.dt * p.dt
}

/// Per-step bound times the idealised number of steps `N_s·(h_para/Δh)·(T/Δt)`.
pub fn total_error_bound(p: &ProtocolParams) -> f64 {
    p.n_s as f64 * (p.h_para / p.dh) * (p.t_hold / p.dt) * per_step_error_bound(p)
}

/// `(2J·T/Δh)/Δt`; large values mean the field ramp is slow compared with the gap.
pub fn adiabatic_margin(p: &ProtocolParams) -> f64 {
    (2.0 * p.j * p.t_hold / p.dh) / p.dt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthBound {
    /// `12·(T/Δt)·(N_s·h_para/Δh + θ/Γ)` over the reals.
    pub ideal: f64,
    /// Same count with every ratio rounded up as the compiler does.
    pub rounded: usize,
}

pub fn depth_upper_bound(p: &ProtocolParams) -> Result<DepthBound> {
    let ideal = STEP_DEPTH as f64 * (p.t_hold / p.dt) * (p.n_s as f64 * p.h_para / p.dh + p.theta / p.gamma);
    let rounded = STEP_DEPTH * p.steps_per_hold()? * (p.n_s * p.updates_per_shift() + p.rotation_events());
    Ok(DepthBound { ideal, rounded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorTriple {
    pub jz_even: f64,
    pub jz_odd: f64,
    pub z_ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactCommutators {
    pub norms: CommutatorTriple,
    /// Largest norm among the summand pairs expected to commute.
    pub vanishing_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorNorms {
    /// Bounds from the commutator expressions at the actual fields.
    pub analytic: CommutatorTriple,
    /// `2·N_s·J·h_max` for both bond layers together and `4·J_C·h_max` for the coupler.
    pub coarse_bond_total: f64,
    pub coarse_coupler: f64,
    pub exact: Option<ExactCommutators>,
}

/// Commutator bounds for the three non-commuting summand pairs.
///
/// `[H_bond, H_Z]` is a sum of `2iJ(h_a Y_a Z_b + h_b Z_a Y_b)` over the bonds of the
/// layer and `[H_Z, H_CI]` is `-2iJ_C S^z (h_a Y_a Z_b + h_b Z_a Y_b)` on the two
/// chain ends, so the triangle inequality gives the analytic values.
pub fn commutator_norms(cfg: &ChainConfig, exact: bool) -> Result<CommutatorNorms> {
    let h = cfg.fields();
    let layer = |parity| cfg.bonds(parity).iter().map(|&(a, b)| 2.0 * cfg.j() * (h[a].abs() + h[b].abs())).sum();
    let (left, right) = cfg.coupler_sites();
    let analytic = CommutatorTriple {
        jz_even: layer(0),
        jz_odd: layer(1),
        z_ci: 2.0 * cfg.j_c() * (h[left].abs() + h[right].abs()),
    };
    let h_max = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let exact = if exact { Some(exact_commutators(cfg)?) } else { None };
    Ok(CommutatorNorms {
        analytic,
        coarse_bond_total: 2.0 * cfg.n_sites() as f64 * cfg.j() * h_max,
        coarse_coupler: 4.0 * cfg.j_c() * h_max,
        exact,
    })
}

fn check_dense(cfg: &ChainConfig) -> Result<()> {
    if cfg.n_qubits() > MAX_DENSE_QUBITS {
        return Err(Error::RegisterSize { n: cfg.n_qubits(), min: 1, max: MAX_DENSE_QUBITS });
    }
    Ok(())
}

pub fn summand_matrix(cfg: &ChainConfig, s: Summand) -> DMatrix<Complex64> {
    pauli_sum(cfg.n_qubits(), &cfg.pauli_terms(s))
}

pub fn hamiltonian_matrix(cfg: &ChainConfig) -> DMatrix<Complex64> {
    let terms: Vec<_> = Summand::ALL.iter().flat_map(|&s| cfg.pauli_terms(s)).collect();
    pauli_sum(cfg.n_qubits(), &terms)
}

fn exact_commutators(cfg: &ChainConfig) -> Result<ExactCommutators> {
    check_dense(cfg)?;
    let [e, o, z, c] = Summand::ALL.map(|s| summand_matrix(cfg, s));
    let norm = |a, b| spectral_norm(&commutator(a, b));
    let norms = CommutatorTriple { jz_even: norm(&e, &z), jz_odd: norm(&o, &z), z_ci: norm(&z, &c) };
    let vanishing_max = [norm(&e, &o), norm(&e, &c), norm(&o, &c)].into_iter().fold(0.0, f64::max);
    Ok(ExactCommutators { norms, vanishing_max })
}

/// `½·Σ_{X<X'} ‖[H_X, H_X']‖·Δt²`, the first-order bound from exact commutators.
pub fn commutator_step_bound(cfg: &ChainConfig, dt: f64) -> Result<f64> {
    check_dense(cfg)?;
    let m = Summand::ALL.map(|s| summand_matrix(cfg, s));
    let mut sum = 0.0;
    for i in 0..4 {
        for k in i + 1..4 {
            sum += spectral_norm(&commutator(&m[i], &m[k]));
        }
    }
    Ok(0.5 * sum * dt * dt)
}

/// Operator-norm distance between one compiled Trotter step and `exp(-iHΔt)`.
pub fn trotter_step_error(cfg: &ChainConfig, dt: f64) -> Result<f64> {
    check_dense(cfg)?;
    let step = dense_unitary(&trotter_step_circuit(cfg, dt)?)?;
    let exact = expm_hermitian(&hamiltonian_matrix(cfg), dt);
    Ok(phase_aligned_distance(&step, &exact))
}

/// Trotter-free reference: applies `exp(-iH(t_j)Δt)` exactly on every interval
/// the compiler would emit a Trotter step for. `substeps > 1` refines the time
/// grid (only changes anything in linear update mode).
pub fn exact_evolve(
    params: &ProtocolParams,
    schedule: &FieldSchedule,
    initial: &QuantumState,
    substeps: usize,
) -> Result<QuantumState> {
    if params.n_s > MAX_EXACT_SITES {
        return Err(Error::RegisterSize { n: params.n_qubits(), min: 7, max: MAX_EXACT_SITES + 1 });
    }
    if initial.n_qubits() != params.n_qubits() {
        return Err(Error::RegisterMismatch { left: initial.n_qubits(), right: params.n_qubits() });
    }
    let mut cache: HashMap<(Vec<u64>, u64), DMatrix<Complex64>> = HashMap::new();
    let mut psi = DVector::from_column_slice(initial.amplitudes());
    for interval in intervals(params, schedule, substeps)? {
        match interval {
            Interval::Evolve { fields, dt } => {
                let key = (fields.iter().map(|h| h.to_bits()).collect(), dt.to_bits());
                if !cache.contains_key(&key) {
                    let h = hamiltonian_matrix(&params.chain_config(&fields)?);
                    cache.insert(key.clone(), expm_hermitian(&h, dt));
                }
                psi = &cache[&key] * psi;
            }
            Interval::Rotate { angle } => {
                let mut s = QuantumState::from_amplitudes(psi.as_slice().to_vec())?;
                s.apply_gate(&Gate::ry(angle, params.coupler_qubit())?)?;
                psi = DVector::from_column_slice(s.amplitudes());
            }
        }
    }
    QuantumState::from_amplitudes(psi.as_slice().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub per_step_bound: f64,
    pub total_bound: f64,
    pub adiabatic_margin: f64,
    pub depth_bound: DepthBound,
    /// Commutators at the initial field configuration.
    pub commutators: CommutatorNorms,
    pub note: Option<String>,
    pub params: ProtocolParams,
}

/// All bound quantities; exact commutators are included for registers small
/// enough to hold dense operators.
pub fn bound_report(params: &ProtocolParams) -> Result<BoundReport> {
    params.validate()?;
    let cfg = params.chain_config(&params.initial_fields())?;
    let dense = cfg.n_qubits() <= MAX_DENSE_QUBITS;
    let note = (!dense).then(|| format!("exact commutator norms need N_s <= {}", MAX_DENSE_QUBITS - 1));
    Ok(BoundReport {
        per_step_bound: per_step_error_bound(params),
        total_bound: total_error_bound(params),
        adiabatic_margin: adiabatic_margin(params),
        depth_bound: depth_upper_bound(params)?,
        commutators: commutator_norms(&cfg, dense)?,
        note,
        params: params.clone(),
    })
}

/// Ordinary least-squares fit `y = a + b·x`, returning `(a, b, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (my - slope * mx, slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{build_field_schedule, build_protocol_circuit, FieldEvent};
    use approx::assert_relative_eq;

    fn reference_cfg(h_para: f64, j_c: f64) -> ChainConfig {
        ChainConfig::new(3, 1.0, j_c, vec![0.01, 0.01, 0.01, h_para, h_para, h_para]).unwrap()
    }

    #[test]
    fn scalar_bounds_on_reference_rows() {
        let hi = ProtocolParams::high_fidelity();
        assert_relative_eq!(per_step_error_bound(&hi), 1.32, epsilon = 1e-12);
        assert_relative_eq!(total_error_bound(&hi), 7920.0, epsilon = 1e-8);
        assert_relative_eq!(adiabatic_margin(&hi), 400.0, epsilon = 1e-9);
        let lo = ProtocolParams::low_depth();
        assert_relative_eq!(adiabatic_margin(&lo), 40.0 / 0.7, epsilon = 1e-9);
    }

    #[test]
    fn per_step_bound_scaling() {
        let p = ProtocolParams::high_fidelity();
        let doubled = ProtocolParams { dt: 0.4, ..p.clone() };
        assert_relative_eq!(per_step_error_bound(&doubled), 4.0 * per_step_error_bound(&p), epsilon = 1e-12);
        let single = ProtocolParams { dh: p.h_para, ..p.clone() };
        assert_relative_eq!(
            total_error_bound(&single),
            6.0 * 10.0 * per_step_error_bound(&p),
            epsilon = 1e-9
        );
        let half_dh = ProtocolParams { dh: 0.025, ..p.clone() };
        assert_relative_eq!(adiabatic_margin(&half_dh), 2.0 * adiabatic_margin(&p), epsilon = 1e-9);
    }

    #[test]
    fn depth_bounds_on_reference_rows() {
        let hi = depth_upper_bound(&ProtocolParams::high_fidelity()).unwrap();
        assert_relative_eq!(hi.ideal, 72360.0, epsilon = 1e-6);
        assert_eq!(hi.rounded, 72360);
        let lo = depth_upper_bound(&ProtocolParams::low_depth()).unwrap();
        assert_relative_eq!(lo.ideal, 12.0 * (2.0 / 0.7) * 92.0, epsilon = 1e-9);
        assert!((lo.ideal - 3154.3).abs() < 0.1);
        assert_eq!(lo.rounded, 12 * 3 * 92);
    }

    #[test]
    fn depth_bound_is_linear_in_sites() {
        let xs = [6.0, 10.0, 14.0, 18.0, 22.0];
        let ys: Vec<f64> = xs
            .iter()
            .map(|&n| {
                let p = ProtocolParams { n_s: n as usize, ..ProtocolParams::high_fidelity() };
                depth_upper_bound(&p).unwrap().ideal
            })
            .collect();
        let (_, slope, r2) = linear_fit(&xs, &ys);
        assert!(r2 > 0.999);
        assert_relative_eq!(slope, 12.0 * 10.0 * 100.0, epsilon = 1e-6);
    }

    #[test]
    fn built_circuit_respects_depth_bound() {
        for n_s in [6, 8, 10] {
            let p = ProtocolParams { n_s, dh: 1.0, ..ProtocolParams::high_fidelity() };
            let s = build_field_schedule(&p, true).unwrap();
            let d = build_protocol_circuit(&p, &s).unwrap().depth();
            assert!(d <= depth_upper_bound(&p).unwrap().rounded, "N_s = {n_s}: depth {d}");
        }
    }

    #[test]
    fn commutators_vanish_without_fields() {
        let cfg = ChainConfig::new(3, 1.0, 0.3, vec![0.0; 6]).unwrap();
        let c = commutator_norms(&cfg, true).unwrap();
        let e = c.exact.unwrap();
        assert!(e.norms.jz_even < 1e-12 && e.norms.jz_odd < 1e-12 && e.norms.z_ci < 1e-12);
        assert_eq!(c.analytic.z_ci, 0.0);
    }

    #[test]
    fn coupler_commutator_vanishes_without_coupling() {
        let c = commutator_norms(&reference_cfg(5.0, 0.0), true).unwrap();
        assert!(c.exact.unwrap().norms.z_ci < 1e-12);
        assert_eq!(c.coarse_coupler, 0.0);
    }

    #[test]
    fn exact_commutators_respect_analytic_bounds() {
        let c = commutator_norms(&reference_cfg(5.0, 0.3), true).unwrap();
        let e = c.exact.unwrap();
        assert!(e.norms.z_ci <= 6.0 + 1e-9);
        assert!(e.norms.z_ci <= c.analytic.z_ci + 1e-9);
        assert!(e.norms.jz_even <= c.analytic.jz_even + 1e-9);
        assert!(e.norms.jz_odd <= c.analytic.jz_odd + 1e-9);
        assert!(c.analytic.jz_even + c.analytic.jz_odd <= c.coarse_bond_total + 1e-9);
        assert!(e.vanishing_max < 1e-12);
    }

    #[test]
    fn single_coupler_commutator_is_exact() {
        // only the coupler ends carry a field: the bound is attained
        let cfg = ChainConfig::new(3, 1.0, 0.5, vec![0.0, 0.0, 2.0, 3.0, 0.0, 0.0]).unwrap();
        let c = commutator_norms(&cfg, true).unwrap();
        assert_relative_eq!(c.exact.unwrap().norms.z_ci, 2.0 * 0.5 * 5.0, epsilon = 1e-9);
    }

    #[test]
    fn reference_step_error_is_below_bounds() {
        let cfg = reference_cfg(5.0, 0.3);
        let err = trotter_step_error(&cfg, 0.2).unwrap();
        assert!(err <= 1.32);
        assert!(err <= commutator_step_bound(&cfg, 0.2).unwrap() + 1e-12);
        assert!(trotter_step_error(&cfg, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn exact_evolve_of_empty_schedule_is_identity() {
        let p = ProtocolParams::high_fidelity();
        let s = FieldSchedule::new(p.initial_fields(), vec![]);
        let psi = QuantumState::basis(7, 5).unwrap();
        assert_eq!(exact_evolve(&p, &s, &psi, 1).unwrap(), psi);
    }

    #[test]
    fn exact_evolve_tracks_trotter_within_bound() {
        let p = ProtocolParams { t_hold: 1.0, ..ProtocolParams::high_fidelity() };
        let f = p.initial_fields();
        let s = FieldSchedule::new(f.clone(), vec![FieldEvent::Hold { fields: f.clone(), duration: 1.0 }]);
        let mut psi = QuantumState::zero(7).unwrap();
        psi.run(&crate::protocol::initialization_circuit(&p, crate::protocol::LogicalLabel::L0, None).unwrap())
            .unwrap();
        let exact = exact_evolve(&p, &s, &psi, 1).unwrap();
        let mut trotter = psi.clone();
        trotter.run(&build_protocol_circuit(&p, &s).unwrap()).unwrap();
        let diff: f64 = exact
            .amplitudes()
            .iter()
            .zip(trotter.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 5.0 * per_step_error_bound(&p));
    }

    #[test]
    fn exact_evolve_rejects_large_registers() {
        let p = ProtocolParams { n_s: 10, ..ProtocolParams::high_fidelity() };
        let s = FieldSchedule::new(p.initial_fields(), vec![]);
        let psi = QuantumState::zero(11).unwrap();
        assert!(exact_evolve(&p, &s, &psi, 1).is_err());
    }

    #[test]
    fn bound_report_omits_exact_norms_on_large_systems() {
        let r = bound_report(&ProtocolParams { n_s: 12, ..ProtocolParams::high_fidelity() }).unwrap();
        assert!(r.commutators.exact.is_none());
        assert!(r.note.is_some());
        let r = bound_report(&ProtocolParams::high_fidelity()).unwrap();
        assert!(r.commutators.exact.is_some());
    }
}
