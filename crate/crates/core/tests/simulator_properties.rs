use ising_exchange::circuit::{Circuit, Gate};
use ising_exchange::operators::equal_up_to_phase;
use ising_exchange::statevector::{dense_unitary, QuantumState};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn gate_from(kind: usize, a: usize, b: usize, angle: f64) -> Gate {
    match kind {
        0 => Gate::rx(angle, a).unwrap(),
        1 => Gate::ry(angle, a).unwrap(),
        2 => Gate::rz(angle, a).unwrap(),
        3 => Gate::h(a),
        4 => Gate::x(a),
        5 => Gate::z(a),
        _ if a != b => Gate::cnot(a, b).unwrap(),
        _ => Gate::h(a),
    }
}

fn arb_circuit(n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    proptest::collection::vec((0usize..7, 0..n, 0..n, -6.3f64..6.3), 0..max_len).prop_map(move |spec| {
        let mut c = Circuit::new(n);
        for (k, a, b, t) in spec {
            c.append(gate_from(k, a, b, t)).unwrap();
        }
        c
    })
}

fn random_state(n: usize, rng: &mut impl Rng) -> QuantumState {
    let amps: Vec<Complex64> =
        (0..1 << n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    QuantumState::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuit_times_inverse_is_identity(n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Circuit::new(n);
        for _ in 0..rng.random_range(0..30) {
            c.append(gate_from(rng.random_range(0..7), rng.random_range(0..n), rng.random_range(0..n), rng.random_range(-6.3..6.3))).unwrap();
        }
        let both = Circuit::compose(&c, &c.inverse()).unwrap();
        let id = DMatrix::identity(1 << n, 1 << n);
        prop_assert!(equal_up_to_phase(&dense_unitary(&both).unwrap(), &id, 1e-10));
        let product = dense_unitary(&c).unwrap() * dense_unitary(&c.inverse()).unwrap();
        prop_assert!((product - id).iter().all(|d| d.norm() < 1e-10));
    }

    #[test]
    fn inverse_is_an_involution(c in arb_circuit(4, 30)) {
        prop_assert_eq!(c.inverse().inverse(), c);
    }

    #[test]
    fn gate_kernels_agree_with_dense_action(kind in 0usize..7, a in 0usize..4, b in 0usize..4, angle in -6.3f64..6.3, seed in any::<u64>()) {
        let g = gate_from(kind, a, b, angle);
        let mut c = Circuit::new(4);
        c.append(g).unwrap();
        let psi = random_state(4, &mut ChaCha8Rng::seed_from_u64(seed));
        let expected = dense_unitary(&c).unwrap() * DVector::from_column_slice(psi.amplitudes());
        let mut out = psi.clone();
        out.apply_gate(&g).unwrap();
        for (x, y) in out.amplitudes().iter().zip(expected.iter()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn gates_preserve_norm(c in arb_circuit(4, 40), seed in any::<u64>()) {
        let mut psi = random_state(4, &mut ChaCha8Rng::seed_from_u64(seed));
        for g in c.gates() {
            let before = psi.norm();
            psi.apply_gate(g).unwrap();
            prop_assert!((psi.norm() - before).abs() < 1e-12);
        }
    }

    #[test]
    fn layering_keeps_shared_qubit_order(c in arb_circuit(4, 40)) {
        let layers = c.layer_assignment();
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                let shared = c.gates()[i].qubits().iter().any(|q| c.gates()[j].qubits().contains(q));
                if shared {
                    prop_assert!(layers[i] < layers[j]);
                }
            }
        }
    }
}

#[test]
fn norm_survives_a_hundred_thousand_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut psi = random_state(5, &mut rng);
    for _ in 0..100_000 {
        let g = gate_from(rng.random_range(0..7), rng.random_range(0..5), rng.random_range(0..5), rng.random_range(-3.2..3.2));
        psi.apply_gate(&g).unwrap();
    }
    assert!((psi.norm() - 1.0).abs() < 1e-9);
}

#[test]
fn sampling_passes_chi_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let shots = 10_000u64;
    let dist = ChiSquared::new(15.0).unwrap();
    for trial in 0..5 {
        let psi = random_state(4, &mut rng);
        let counts = psi.sample(shots, 100 + trial);
        assert_eq!(counts.counts().values().sum::<u64>(), shots);
        let stat: f64 = psi
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let expected = p * shots as f64;
                (counts.get(i as u64) as f64 - expected).powi(2) / expected
            })
            .sum();
        let p_value = 1.0 - dist.cdf(stat);
        assert!(p_value > 0.001, "trial {trial}: chi² {stat:.2}, p {p_value:.2e}");
    }
}

#[test]
fn seven_qubit_register() {
    let psi = QuantumState::zero(7).unwrap();
    assert_eq!(psi.amplitudes().len(), 128);
    assert_eq!(psi.amplitudes()[0], Complex64::new(1.0, 0.0));
}

#[test]
fn greedy_prep_inverse_returns_to_all_up() {
    // (|000⟩+|111⟩)/√2 is mapped back to |000⟩ by the inverse preparation
    let mut prep = Circuit::new(3);
    prep.append(Gate::h(0)).unwrap();
    prep.append(Gate::cnot(0, 1).unwrap()).unwrap();
    prep.append(Gate::cnot(0, 2).unwrap()).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0] = Complex64::new(r, 0.0);
    amps[7] = Complex64::new(r, 0.0);
    let mut psi = QuantumState::from_amplitudes(amps).unwrap();
    psi.run(&prep.inverse()).unwrap();
    assert!((psi.amplitudes()[0].norm_sqr() - 1.0).abs() < 1e-12);
}
