//! Gate-level circuit representation.
//!
//! A [`Circuit`] is an ordered list of gates over a fixed register. Rotations use
//! the half-angle convention `R_a(θ) = exp(-iθσ^a/2)`.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate type. Rotation variants carry their angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    Rx(f64),
    Ry(f64),
    Rz(f64),
    H,
    X,
    Z,
    Cnot,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) => Some(t),
            _ => None,
        }
    }

    /// The adjoint gate. Rotations flip sign; the remaining gates are self-inverse.
    pub fn adjoint(&self) -> GateKind {
        match *self {
            GateKind::Rx(t) => GateKind::Rx(-t),
            GateKind::Ry(t) => GateKind::Ry(-t),
            GateKind::Rz(t) => GateKind::Rz(-t),
            other => other,
        }
    }

    /// True when the gate is diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, GateKind::Rz(_) | GateKind::Z)
    }

    fn qasm_name(&self) -> &'static str {
        match self {
            GateKind::Rx(_) => "rx",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Z => "z",
            GateKind::Cnot => "cx",
        }
    }
}

/// A gate bound to register positions. For CNOT, `qubits()` is `[control, target]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
}

impl Gate {
    pub fn single(kind: GateKind, qubit: usize) -> Result<Gate> {
        if kind.arity() != 1 {
            return Err(Error::InvalidGate(format!("{kind:?} is not a single-qubit gate")));
        }
        if let Some(angle) = kind.angle() {
            if !angle.is_finite() {
                return Err(Error::InvalidGate(format!("non-finite angle {angle}")));
            }
        }
        Ok(Gate { kind, qubits: [qubit, qubit] })
    }

    pub fn cnot(control: usize, target: usize) -> Result<Gate> {
        if control == target {
            return Err(Error::InvalidGate(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        Ok(Gate { kind: GateKind::Cnot, qubits: [control, target] })
    }

    pub fn rx(theta: f64, q: usize) -> Result<Gate> {
        Gate::single(GateKind::Rx(theta), q)
    }

    pub fn ry(theta: f64, q: usize) -> Result<Gate> {
        Gate::single(GateKind::Ry(theta), q)
    }

    pub fn rz(theta: f64, q: usize) -> Result<Gate> {
        Gate::single(GateKind::Rz(theta), q)
    }

    pub fn h(q: usize) -> Gate {
        Gate { kind: GateKind::H, qubits: [q, q] }
    }

    pub fn x(q: usize) -> Gate {
        Gate { kind: GateKind::X, qubits: [q, q] }
    }

    pub fn z(q: usize) -> Gate {
        Gate { kind: GateKind::Z, qubits: [q, q] }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }

    /// Largest register index touched.
    pub fn max_qubit(&self) -> usize {
        self.qubits[0].max(self.qubits[1])
    }

    pub fn adjoint(&self) -> Gate {
        Gate { kind: self.kind.adjoint(), qubits: self.qubits }
    }
}

impl fmt::Display for Gate {
    /// OpenQASM 2.0 statement for this gate.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.kind.qasm_name();
        match self.kind {
            GateKind::Cnot => write!(f, "{name} q[{}],q[{}];", self.qubits[0], self.qubits[1]),
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) => {
                // 17 significant digits round-trips every f64.
                write!(f, "{name}({t:.17e}) q[{}];", self.qubits[0])
            }
            _ => write!(f, "{name} q[{}];", self.qubits[0]),
        }
    }
}

/// Gate tallies by arity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub one_qubit: usize,
    pub two_qubit: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.one_qubit + self.two_qubit
    }
}

/// Ordered gate program over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Circuit {
        Circuit { n_qubits, gates: Vec::new() }
    }

    pub fn with_capacity(n_qubits: usize, capacity: usize) -> Circuit {
        Circuit { n_qubits, gates: Vec::with_capacity(capacity) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn append(&mut self, gate: Gate) -> Result<&mut Circuit> {
        if gate.max_qubit() >= self.n_qubits {
            return Err(Error::QubitOutOfRange { qubit: gate.max_qubit(), n_qubits: self.n_qubits });
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Appends every gate of `other`. Registers must match.
    pub fn extend_from(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::RegisterMismatch { left: self.n_qubits, right: other.n_qubits });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// `a` followed by `b`.
    pub fn compose(a: &Circuit, b: &Circuit) -> Result<Circuit> {
        let mut out = Circuit::with_capacity(a.n_qubits, a.len() + b.len());
        out.extend_from(a)?;
        out.extend_from(b)?;
        Ok(out)
    }

    /// Reversed gate order with every gate replaced by its adjoint.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Copy of this circuit on a larger register, with qubit `i` sent to `map[i]`.
    pub fn remap(&self, n_qubits: usize, map: &[usize]) -> Result<Circuit> {
        let mut out = Circuit::with_capacity(n_qubits, self.len());
        for g in &self.gates {
            let mapped = match g.kind {
                GateKind::Cnot => Gate::cnot(map[g.qubits[0]], map[g.qubits[1]])?,
                kind => Gate::single(kind, map[g.qubits[0]])?,
            };
            out.append(mapped)?;
        }
        Ok(out)
    }

    /// Number of layers under greedy as-soon-as-possible scheduling.
    pub fn depth(&self) -> usize {
        self.layer_assignment().into_iter().max().map_or(0, |l| l + 1)
    }

    /// Zero-based layer index of every gate under ASAP scheduling.
    pub fn layer_assignment(&self) -> Vec<usize> {
        let mut frontier = vec![0usize; self.n_qubits];
        self.gates
            .iter()
            .map(|g| {
                let layer = g.qubits().iter().map(|&q| frontier[q]).max().unwrap_or(0);
                for &q in g.qubits() {
                    frontier[q] = layer + 1;
                }
                layer
            })
            .collect()
    }

    pub fn gate_counts(&self) -> GateCounts {
        self.gates.iter().fold(GateCounts::default(), |mut acc, g| {
            match g.arity() {
                1 => acc.one_qubit += 1,
                _ => acc.two_qubit += 1,
            }
            acc
        })
    }

    /// Merges runs of same-axis rotations that are adjacent on one qubit.
    ///
    /// Off by default in the protocol builder; exposed for depth studies.
    pub fn merge_adjacent_rotations(&self) -> Circuit {
        // index into `out` of the last gate seen on each qubit
        let mut last: Vec<Option<usize>> = vec![None; self.n_qubits];
        let mut out: Vec<Gate> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            if g.arity() == 1 {
                let q = g.qubits[0];
                if let Some(idx) = last[q] {
                    let prev = out[idx];
                    let merged = match (prev.kind, g.kind) {
                        (GateKind::Rx(a), GateKind::Rx(b)) => Some(GateKind::Rx(a + b)),
                        (GateKind::Ry(a), GateKind::Ry(b)) => Some(GateKind::Ry(a + b)),
                        (GateKind::Rz(a), GateKind::Rz(b)) => Some(GateKind::Rz(a + b)),
                        _ => None,
                    };
                    if let Some(kind) = merged {
                        out[idx].kind = kind;
                        continue;
                    }
                }
            }
            let idx = out.len();
            out.push(*g);
            for &q in g.qubits() {
                last[q] = Some(idx);
            }
        }
        Circuit { n_qubits: self.n_qubits, gates: out }
    }

    /// OpenQASM 2.0 program text.
    pub fn to_qasm(&self) -> String {
        let mut s = String::with_capacity(32 * (self.gates.len() + 3));
        s.push_str(QASM_HEADER);
        let _ = writeln!(s, "qreg q[{}];", self.n_qubits);
        for g in &self.gates {
            let _ = writeln!(s, "{g}");
        }
        s
    }
}

const QASM_HEADER: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";

/// Lines of header emitted by [`Circuit::to_qasm`] before the first gate.
pub const QASM_HEADER_LINES: usize = 3;
