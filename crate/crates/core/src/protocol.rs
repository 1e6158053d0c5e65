//! The exchange protocol: state preparation, adiabatic domain transport,
//! mid-exchange coupler rotation, return transport and logical readout.

use std::f64::consts::{FRAC_PI_2, PI};

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::circuit::{Circuit, Gate, GateCounts};
use crate::error::{Error, Result};
use crate::statevector::{QuantumState, MAX_QUBITS};
use crate::trotter::{append_trotter_step, ChainConfig};

/// Slack used when rounding ratios of user-supplied reals up to integers.
const ROUNDING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Fields jump at each update and are held for `T`.
    #[default]
    Stepped,
    /// Fields interpolate linearly across the Trotter steps of each update.
    Linear,
}

/// Single-qubit gate placing the coupler in superposition before transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CouplerPrep {
    #[default]
    #[serde(rename = "RX_half_pi")]
    RxHalfPi,
    H,
    #[serde(rename = "RY_half_pi")]
    RyHalfPi,
}

impl CouplerPrep {
    pub fn gate(self, qubit: usize) -> Gate {
        match self {
            CouplerPrep::RxHalfPi => Gate::rx(FRAC_PI_2, qubit).expect("finite angle"),
            CouplerPrep::H => Gate::h(qubit),
            CouplerPrep::RyHalfPi => Gate::ry(FRAC_PI_2, qubit).expect("finite angle"),
        }
    }
}

/// How the energies in the parameter set map onto gate angles.
///
/// `Exact` compiles the Hamiltonian as written. `FigureLabels` halves `J` and
/// every field (the coupler is untouched), which is what reading the circuit
/// diagram labels as full-angle rotations amounts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    #[default]
    Exact,
    FigureLabels,
}

impl AngleConvention {
    fn scale(self) -> f64 {
        match self {
            AngleConvention::Exact => 1.0,
            AngleConvention::FigureLabels => 0.5,
        }
    }
}

/// Every tunable of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    #[serde(rename = "N_s")]
    pub n_s: usize,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J_C")]
    pub j_c: f64,
    pub h_ferro: f64,
    pub h_para: f64,
    pub dt: f64,
    pub dh: f64,
    #[serde(rename = "T")]
    pub t_hold: f64,
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    pub theta: f64,
    pub shots: u64,
    pub seed: u64,
    pub update_mode: UpdateMode,
    pub coupler_prep: CouplerPrep,
    pub angle_convention: AngleConvention,
}

impl ProtocolParams {
    /// Shallowest parameter set reaching 99 % fidelity on six sites.
    pub fn high_fidelity() -> ProtocolParams {
        ProtocolParams {
            n_s: 6,
            j: 1.0,
            j_c: 0.3,
            h_ferro: 0.01,
            h_para: 5.0,
            dt: 0.2,
            dh: 0.05,
            t_hold: 2.0,
            gamma: PI / 3.0,
            theta: PI,
            shots: 10_000,
            seed: 0,
            update_mode: UpdateMode::Stepped,
            coupler_prep: CouplerPrep::RxHalfPi,
            angle_convention: AngleConvention::Exact,
        }
    }

    /// Shallowest parameter set reaching 90 % fidelity on six sites.
    pub fn low_depth() -> ProtocolParams {
        ProtocolParams { dt: 0.7, h_para: 1.5, dh: 0.1, gamma: PI / 2.0, ..ProtocolParams::high_fidelity() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let reals = [
            ("J", self.j),
            ("J_C", self.j_c),
            ("h_ferro", self.h_ferro),
            ("h_para", self.h_para),
            ("dt", self.dt),
            ("dh", self.dh),
            ("T", self.t_hold),
            ("Gamma", self.gamma),
            ("theta", self.theta),
        ];
        if let Some((name, v)) = reals.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{name} must be finite, got {v}"));
        }
        if self.n_s < 6 || !self.n_s.is_multiple_of(2) || self.n_s + 1 > MAX_QUBITS {
            return bad(format!("N_s must be even and in 6..={}, got {}", MAX_QUBITS - 1, self.n_s));
        }
        if self.j <= 0.0 {
            return bad(format!("J must be positive, got {}", self.j));
        }
        if self.j_c < 0.0 {
            return bad(format!("J_C must be non-negative, got {}", self.j_c));
        }
        if !(0.0 < self.h_ferro && self.h_ferro < self.j) {
            return bad(format!("need 0 < h_ferro < J, got h_ferro = {}", self.h_ferro));
        }
        if self.h_para <= self.h_ferro {
            return bad(format!("need h_para > h_ferro, got h_para = {}", self.h_para));
        }
        if self.dt <= 0.0 {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(0.0 < self.dh && self.dh <= self.h_para) {
            return bad(format!("need 0 < dh <= h_para, got dh = {}", self.dh));
        }
        if self.t_hold < self.dt * (1.0 - ROUNDING_TOL) {
            return Err(Error::SubStepHold { hold: self.t_hold, dt: self.dt });
        }
        if !(0.0 < self.gamma && self.gamma <= PI + ROUNDING_TOL) {
            return bad(format!("need 0 < Gamma <= pi, got {}", self.gamma));
        }
        if self.theta < 0.0 {
            return bad(format!("theta must be non-negative, got {}", self.theta));
        }
        if self.shots == 0 {
            return bad("shots must be at least 1".into());
        }
        Ok(())
    }

    /// Validates and logs soft warnings.
    pub fn check(&self) -> Result<()> {
        self.validate()?;
        if self.h_para <= self.j {
            warn!("h_para = {} does not exceed J = {}; the far sites are not paramagnetic", self.h_para, self.j);
        }
        let margin = analysis::adiabatic_margin(self);
        if margin < 10.0 {
            warn!("adiabatic margin {margin:.3} is below 10");
        }
        Ok(())
    }

    pub fn chain_len(&self) -> usize {
        self.n_s / 2
    }

    pub fn n_qubits(&self) -> usize {
        self.n_s + 1
    }

    pub fn coupler_qubit(&self) -> usize {
        self.chain_len()
    }

    /// Register positions of the initial ferromagnetic domain (the left chain).
    pub fn domain_qubits(&self) -> Vec<usize> {
        (0..self.chain_len()).collect()
    }

    /// Register positions of every chain site, coupler excluded.
    pub fn chain_qubits(&self) -> Vec<usize> {
        (0..self.n_qubits()).filter(|&q| q != self.coupler_qubit()).collect()
    }

    /// Field updates needed to move one site between `h_ferro` and `h_para`.
    pub fn updates_per_shift(&self) -> usize {
        ceil_ratio(self.h_para - self.h_ferro, self.dh)
    }

    pub fn rotation_events(&self) -> usize {
        ceil_ratio(self.theta, self.gamma)
    }

    pub fn steps_per_hold(&self) -> Result<usize> {
        steps_for(self.t_hold, self.dt)
    }

    /// Field vector with the domain on the left chain.
    pub fn initial_fields(&self) -> Vec<f64> {
        let l = self.chain_len();
        (0..self.n_s).map(|s| if s < l { self.h_ferro } else { self.h_para }).collect()
    }

    /// Chain description the circuit compiler sees for the given fields.
    pub fn chain_config(&self, fields: &[f64]) -> Result<ChainConfig> {
        let s = self.angle_convention.scale();
        ChainConfig::new(self.chain_len(), self.j * s, self.j_c, fields.iter().map(|h| h * s).collect())
    }
}

fn ceil_ratio(num: f64, den: f64) -> usize {
    let r = num / den;
    if r <= ROUNDING_TOL {
        0
    } else {
        (r - ROUNDING_TOL).ceil() as usize
    }
}

fn steps_for(duration: f64, dt: f64) -> Result<usize> {
    let r = duration / dt;
    if r < 1.0 - ROUNDING_TOL {
        return Err(Error::SubStepHold { hold: duration, dt });
    }
    Ok((r - ROUNDING_TOL).ceil().max(1.0) as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldEvent {
    /// Move to `fields` and evolve for `duration`.
    Hold { fields: Vec<f64>, duration: f64 },
    /// Rotate the coupler about y by `angle`.
    RotateCoupler { angle: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSchedule {
    initial: Vec<f64>,
    events: Vec<FieldEvent>,
}

impl FieldSchedule {
    pub fn new(initial: Vec<f64>, events: Vec<FieldEvent>) -> FieldSchedule {
        FieldSchedule { initial, events }
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn events(&self) -> &[FieldEvent] {
        &self.events
    }

    /// Initial fields followed by the fields of every hold, in order.
    pub fn configurations(&self) -> Vec<&[f64]> {
        std::iter::once(self.initial.as_slice())
            .chain(self.events.iter().filter_map(|e| match e {
                FieldEvent::Hold { fields, .. } => Some(fields.as_slice()),
                FieldEvent::RotateCoupler { .. } => None,
            }))
            .collect()
    }

    pub fn final_fields(&self) -> &[f64] {
        self.configurations().last().copied().unwrap_or(&self.initial)
    }

    pub fn n_holds(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, FieldEvent::Hold { .. })).count()
    }

    pub fn n_rotations(&self) -> usize {
        self.events.len() - self.n_holds()
    }

    pub fn total_rotation(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                FieldEvent::RotateCoupler { angle } => *angle,
                FieldEvent::Hold { .. } => 0.0,
            })
            .sum()
    }
}

/// Rightward transport, optional coupler rotation, leftward transport.
///
/// Every shift applies the same rule: the site entering the domain drops by
/// `dh`, the site leaving it rises by `dh`, both clamped to `[h_ferro, h_para]`.
/// Leftward shifts run the rightward ones in reverse spatial order, so the
/// configuration list is a palindrome whenever `(h_para - h_ferro)/dh` is whole.
pub fn build_field_schedule(params: &ProtocolParams, include_rotation: bool) -> Result<FieldSchedule> {
    params.validate()?;
    let l = params.chain_len();
    let initial = params.initial_fields();
    let mut fields = initial.clone();
    let mut events = Vec::with_capacity(2 * l * params.updates_per_shift() + 2 * params.rotation_events());
    let shift = |fields: &mut Vec<f64>, events: &mut Vec<FieldEvent>, entering: usize, leaving: usize| {
        for _ in 0..params.updates_per_shift() {
            fields[entering] = (fields[entering] - params.dh).max(params.h_ferro);
            fields[leaving] = (fields[leaving] + params.dh).min(params.h_para);
            events.push(FieldEvent::Hold { fields: fields.clone(), duration: params.t_hold });
        }
    };
    for k in 0..l {
        shift(&mut fields, &mut events, k + l, k);
    }
    if include_rotation {
        let mut done = 0.0;
        for _ in 0..params.rotation_events() {
            let angle = params.gamma.min(params.theta - done);
            done += angle;
            events.push(FieldEvent::RotateCoupler { angle });
            events.push(FieldEvent::Hold { fields: fields.clone(), duration: params.t_hold });
        }
    }
    for k in (0..l).rev() {
        shift(&mut fields, &mut events, k, k + l);
    }
    Ok(FieldSchedule { initial, events })
}

/// One elementary piece of the compiled evolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Interval {
    Evolve { fields: Vec<f64>, dt: f64 },
    Rotate { angle: f64 },
}

/// Splits the schedule into constant-field intervals of length `dt / substeps`.
///
/// In linear mode the fields of step `i` of `k` within a hold sit at fraction
/// `(i+1)/k` of the way from the previous configuration to the new one.
pub fn intervals(params: &ProtocolParams, schedule: &FieldSchedule, substeps: usize) -> Result<Vec<Interval>> {
    if substeps == 0 {
        return Err(Error::InvalidParams("substeps must be at least 1".into()));
    }
    let dt = params.dt / substeps as f64;
    let mut out = Vec::new();
    let mut prev = schedule.initial().to_vec();
    for event in schedule.events() {
        match event {
            FieldEvent::RotateCoupler { angle } => out.push(Interval::Rotate { angle: *angle }),
            FieldEvent::Hold { fields, duration } => {
                let k = steps_for(*duration, params.dt)? * substeps;
                for i in 0..k {
                    let f = match params.update_mode {
                        UpdateMode::Stepped => fields.clone(),
                        UpdateMode::Linear => {
                            let x = (i + 1) as f64 / k as f64;
                            prev.iter().zip(fields).map(|(a, b)| a + (b - a) * x).collect()
                        }
                    };
                    out.push(Interval::Evolve { fields: f, dt });
                }
                prev.clone_from(fields);
            }
        }
    }
    Ok(out)
}

/// Trotterised evolution for the schedule, without preparation or readout.
pub fn build_protocol_circuit(params: &ProtocolParams, schedule: &FieldSchedule) -> Result<Circuit> {
    params.validate()?;
    let mut c = Circuit::new(params.n_qubits());
    for interval in intervals(params, schedule, 1)? {
        match interval {
            Interval::Evolve { fields, dt } => append_trotter_step(&mut c, &params.chain_config(&fields)?, dt)?,
            Interval::Rotate { angle } => {
                c.append(Gate::ry(angle, params.coupler_qubit())?)?;
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalLabel {
    L0,
    L1,
    #[serde(rename = "ALL_UP")]
    AllUp,
    #[serde(rename = "ALL_DOWN")]
    AllDown,
}

impl LogicalLabel {
    pub fn name(self) -> &'static str {
        match self {
            LogicalLabel::L0 => "L0",
            LogicalLabel::L1 => "L1",
            LogicalLabel::AllUp => "ALL_UP",
            LogicalLabel::AllDown => "ALL_DOWN",
        }
    }
}

/// `up·|↑…↑⟩ + down·|↓…↓⟩` on the domain qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalState {
    pub up: Complex64,
    pub down: Complex64,
}

impl LogicalState {
    pub fn from_label(label: LogicalLabel) -> LogicalState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (up, down) = match label {
            LogicalLabel::L0 => (r, r),
            LogicalLabel::L1 => (r, -r),
            LogicalLabel::AllUp => (1.0, 0.0),
            LogicalLabel::AllDown => (0.0, 1.0),
        };
        LogicalState { up: Complex64::new(up, 0.0), down: Complex64::new(down, 0.0) }
    }

    /// Applies `RZ(-theta)` in the `(L0, L1)` basis.
    pub fn exchanged(self, theta: f64) -> LogicalState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let l0 = (self.up + self.down) * r * Complex64::from_polar(1.0, theta / 2.0);
        let l1 = (self.up - self.down) * r * Complex64::from_polar(1.0, -theta / 2.0);
        LogicalState { up: (l0 + l1) * r, down: (l0 - l1) * r }
    }

    /// Phase-insensitive overlap with another logical state.
    pub fn fidelity(&self, other: &LogicalState) -> f64 {
        (self.up.conj() * other.up + self.down.conj() * other.down).norm_sqr()
    }
}

/// Preparation of the protocol's initial state: domain, then para sites, then coupler.
pub fn initialization_circuit(
    params: &ProtocolParams,
    label: LogicalLabel,
    coupler_prep: Option<CouplerPrep>,
) -> Result<Circuit> {
    let mut c = Circuit::new(params.n_qubits());
    let domain = params.domain_qubits();
    match label {
        LogicalLabel::AllUp => {}
        LogicalLabel::AllDown => {
            for &q in &domain {
                c.append(Gate::x(q))?;
            }
        }
        LogicalLabel::L0 | LogicalLabel::L1 => {
            c.append(Gate::h(domain[0]))?;
            for &q in &domain[1..] {
                c.append(Gate::cnot(domain[0], q)?)?;
            }
            if label == LogicalLabel::L1 {
                c.append(Gate::z(domain[0]))?;
            }
        }
    }
    for s in params.chain_len()..params.n_s {
        c.append(Gate::h(s + 1))?;
    }
    if let Some(prep) = coupler_prep {
        c.append(prep.gate(params.coupler_qubit()))?;
    }
    Ok(c)
}

/// Prepares `target` on the domain and `|+⟩` on every paramagnetic site from `|0…0⟩`.
///
/// Its inverse maps the ideal final chain state to all zeros, which is how the
/// fidelity is read out.
pub fn target_preparation_circuit(params: &ProtocolParams, target: &LogicalState) -> Result<Circuit> {
    let mut c = Circuit::new(params.n_qubits());
    let domain = params.domain_qubits();
    let polar = 2.0 * target.down.norm().atan2(target.up.norm());
    let relative = target.down.arg() - target.up.arg();
    if polar != 0.0 {
        c.append(Gate::ry(polar, domain[0])?)?;
        if target.up.norm() > 0.0 && target.down.norm() > 0.0 && relative != 0.0 {
            c.append(Gate::rz(relative, domain[0])?)?;
        }
        for &q in &domain[1..] {
            c.append(Gate::cnot(domain[0], q)?)?;
        }
    }
    for s in params.chain_len()..params.n_s {
        c.append(Gate::h(s + 1))?;
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    TranslateNoCoupler,
    TranslateWithCoupler,
    Braid,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::TranslateNoCoupler => "translate_no_coupler",
            Scenario::TranslateWithCoupler => "translate_with_coupler",
            Scenario::Braid => "braid",
        }
    }

    pub fn id(self) -> u64 {
        match self {
            Scenario::TranslateNoCoupler => 0,
            Scenario::TranslateWithCoupler => 1,
            Scenario::Braid => 2,
        }
    }

    /// Coupler preparation actually applied. Without the coupler it stays `|↑⟩`.
    pub fn coupler_prep(self, params: &ProtocolParams) -> Option<CouplerPrep> {
        match self {
            Scenario::TranslateNoCoupler => None,
            _ => Some(params.coupler_prep),
        }
    }

    /// Logical state the domain should end in.
    pub fn target(self, params: &ProtocolParams, init: LogicalLabel) -> LogicalState {
        let start = LogicalState::from_label(init);
        match self {
            Scenario::Braid => start.exchanged(params.theta),
            _ => start,
        }
    }
}

/// The five benchmark situations: both translations from both initial states, and the braid.
pub fn benchmark_situations() -> [(Scenario, LogicalLabel); 5] {
    [
        (Scenario::TranslateNoCoupler, LogicalLabel::AllUp),
        (Scenario::TranslateNoCoupler, LogicalLabel::L0),
        (Scenario::TranslateWithCoupler, LogicalLabel::AllUp),
        (Scenario::TranslateWithCoupler, LogicalLabel::L0),
        (Scenario::Braid, LogicalLabel::AllUp),
    ]
}

/// All circuits of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioCircuits {
    pub preparation: Circuit,
    pub evolution: Circuit,
    pub readout: Circuit,
    pub schedule: FieldSchedule,
    pub target: LogicalState,
}

impl ScenarioCircuits {
    pub fn build(params: &ProtocolParams, scenario: Scenario, init: LogicalLabel) -> Result<ScenarioCircuits> {
        params.check()?;
        let schedule = build_field_schedule(params, scenario == Scenario::Braid)?;
        let target = scenario.target(params, init);
        Ok(ScenarioCircuits {
            preparation: initialization_circuit(params, init, scenario.coupler_prep(params))?,
            evolution: build_protocol_circuit(params, &schedule)?,
            readout: target_preparation_circuit(params, &target)?.inverse(),
            schedule,
            target,
        })
    }

    /// Preparation, evolution and readout in one circuit.
    pub fn full(&self) -> Result<Circuit> {
        let mut c = Circuit::compose(&self.preparation, &self.evolution)?;
        c.extend_from(&self.readout)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValues {
    pub per_step: f64,
    pub total: f64,
    pub adiabatic_margin: f64,
    pub depth_ideal: f64,
    pub depth_rounded: usize,
}

impl BoundValues {
    pub fn for_params(params: &ProtocolParams) -> Result<BoundValues> {
        let depth = analysis::depth_upper_bound(params)?;
        Ok(BoundValues {
            per_step: analysis::per_step_error_bound(params),
            total: analysis::total_error_bound(params),
            adiabatic_margin: analysis::adiabatic_margin(params),
            depth_ideal: depth.ideal,
            depth_rounded: depth.rounded,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub scenario: Scenario,
    pub init: LogicalLabel,
    /// Overlap of the final chain state with the target (coupler traced out).
    pub exact_fidelity: f64,
    /// Same overlap restricted to the domain qubits.
    pub domain_fidelity: f64,
    pub sampled_fidelity: f64,
    pub sampled_stderr: f64,
    pub depth_total: usize,
    pub depth_evolution: usize,
    pub gate_counts_total: GateCounts,
    pub gate_counts_evolution: GateCounts,
    pub trotter_steps: usize,
    pub rotation_events: usize,
    pub bounds: BoundValues,
    /// Coupler preparation gate used, `None` when the coupler is left in `|↑⟩`.
    pub coupler_prep_applied: Option<CouplerPrep>,
    pub params: ProtocolParams,
}

/// Simulates one scenario and reads out its fidelity.
pub fn run_scenario(params: &ProtocolParams, scenario: Scenario, init: LogicalLabel) -> Result<FidelityReport> {
    let circuits = ScenarioCircuits::build(params, scenario, init)?;
    let full = circuits.full()?;
    let mut state = QuantumState::zero(params.n_qubits())?;
    state.run(&full)?;
    let chain = params.chain_qubits();
    let exact = state.zero_probability(&chain);
    let domain = state.zero_probability(&params.domain_qubits());
    let counts = state.sample(params.shots, params.seed);
    let sampled = counts.zero_frequency(&chain);
    let steps = params.steps_per_hold()? * circuits.schedule.n_holds();
    Ok(FidelityReport {
        scenario,
        init,
        exact_fidelity: exact,
        domain_fidelity: domain,
        sampled_fidelity: sampled,
        sampled_stderr: binomial_stderr(sampled, params.shots),
        depth_total: full.depth(),
        depth_evolution: circuits.evolution.depth(),
        gate_counts_total: full.gate_counts(),
        gate_counts_evolution: circuits.evolution.gate_counts(),
        trotter_steps: steps,
        rotation_events: circuits.schedule.n_rotations(),
        bounds: BoundValues::for_params(params)?,
        coupler_prep_applied: scenario.coupler_prep(params),
        params: params.clone(),
    })
}

pub fn binomial_stderr(p: f64, shots: u64) -> f64 {
    (p * (1.0 - p) / shots as f64).max(0.0).sqrt()
}
