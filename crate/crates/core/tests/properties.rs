use proptest::prelude::*;
use vqint_core::losses::{log_cosh_scalar, mse_kl, softmax, LossConfig, LossKind};
use vqint_core::metrics::{normalized_cumulative, r2_score, w1_from_cumulative};
use vqint_core::noise::{channel_ops, NoiseKind};
use vqint_core::quantum::gates::controlled;
use vqint_core::quantum::{gate_matrix, pauli, Axis, CMatrix, GateKind, Observable, QuantumState, C64};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im)), len)
}

fn pure_state(n: usize) -> impl Strategy<Value = QuantumState> {
    complex_vec(1 << n)
        .prop_filter("non-zero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|mut v| {
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= norm);
            QuantumState::from_amplitudes(v).unwrap()
        })
}

/// ρ = AA†/Tr(AA†) for a random square A.
fn mixed_state(n: usize) -> impl Strategy<Value = QuantumState> {
    let d = 1 << n;
    complex_vec(d * d).prop_filter_map("full rank enough", move |v| {
        let a = CMatrix::from_rows(d, d, v).unwrap();
        let mut rho = &a * &a.dagger();
        let tr = rho.trace().re;
        (tr > 1e-3).then(|| {
            rho = rho.scale_real(1.0 / tr);
            QuantumState::from_density(rho).unwrap()
        })
    })
}

fn hermitian(d: usize) -> impl Strategy<Value = Observable> {
    complex_vec(d * d).prop_map(move |v| {
        let a = CMatrix::from_rows(d, d, v).unwrap();
        let mut h = a.clone();
        h.add_scaled(&a.dagger(), 1.0);
        Observable::new(h.scale_real(0.5)).unwrap()
    })
}

#[derive(Clone, Debug)]
enum Op {
    Single(GateKind, f64, usize),
    Controlled(GateKind, f64, usize, usize),
    Cz(usize, usize),
}

fn op() -> impl Strategy<Value = Op> {
    let kind = prop_oneof![Just(GateKind::Rx), Just(GateKind::Ry), Just(GateKind::Rz), Just(GateKind::H)];
    let rot = prop_oneof![Just(GateKind::Rx), Just(GateKind::Ry), Just(GateKind::Rz)];
    let pair = (0usize..3, 1usize..3).prop_map(|(a, k)| (a, (a + k) % 3));
    prop_oneof![
        (kind, -7.0f64..7.0, 0usize..3).prop_map(|(k, a, q)| Op::Single(k, a, q)),
        (rot, -7.0f64..7.0, pair.clone()).prop_map(|(k, a, (c, t))| Op::Controlled(k, a, c, t)),
        pair.prop_map(|(a, b)| Op::Cz(a, b)),
    ]
}

fn apply(s: &QuantumState, op: &Op) -> QuantumState {
    match *op {
        Op::Single(k, a, q) => s.apply_gate(&gate_matrix(k, Some(a)).unwrap(), &[q]).unwrap(),
        Op::Controlled(k, a, c, t) => s.apply_gate(&controlled(&gate_matrix(k, Some(a)).unwrap()), &[c, t]).unwrap(),
        Op::Cz(a, b) => s.apply_gate(&gate_matrix(GateKind::Cz, None).unwrap(), &[a, b]).unwrap(),
    }
}

fn kl(f: &[f64], q: &[f64]) -> f64 {
    let (p, r) = (softmax(f), softmax(q));
    p.iter().zip(&r).map(|(a, b)| a * (a / b).ln()).sum()
}

fn loss_kind() -> impl Strategy<Value = LossKind> {
    prop_oneof![Just(LossKind::Mse), Just(LossKind::Chi2), Just(LossKind::LogCosh), Just(LossKind::MseKl)]
}

fn batch() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| (prop::collection::vec(-3.0f64..3.0, n), prop::collection::vec(-3.0f64..3.0, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gates_are_unitary(angle in -20.0f64..20.0) {
        for k in [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::H, GateKind::Cz] {
            let g = gate_matrix(k, Some(angle)).unwrap();
            prop_assert!(g.unitarity_defect() < 1e-12);
            prop_assert!(controlled(&g).unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn statevector_and_density_agree(psi in pure_state(3), ops in prop::collection::vec(op(), 1..12), obs in hermitian(8)) {
        let mut pure = psi.clone();
        let mut mixed = psi.to_density();
        for op in &ops {
            pure = apply(&pure, op);
            mixed = apply(&mixed, op);
        }
        let a = pure.expectation(&obs).unwrap();
        let b = mixed.expectation(&obs).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        pure.check_invariants().unwrap();
        mixed.check_invariants().unwrap();
    }

    #[test]
    fn channels_preserve_trace_and_hermiticity(rho in mixed_state(2), p in 0.0f64..=1.0, q in 0usize..2) {
        for kind in [NoiseKind::BitFlip, NoiseKind::Depolarizing] {
            let out = rho.apply_kraus(&channel_ops(kind, p).unwrap(), &[q]).unwrap();
            let m = out.density_matrix().unwrap();
            prop_assert!((m.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(m.is_hermitian(1e-12));
        }
    }

    #[test]
    fn depolarizing_is_the_affine_map(rho in mixed_state(1), p in 0.0f64..=1.0) {
        let out = rho.apply_kraus(&channel_ops(NoiseKind::Depolarizing, p).unwrap(), &[0]).unwrap();
        let mut affine = rho.density_matrix().unwrap().scale_real(1.0 - p);
        affine.add_scaled(&CMatrix::identity(2), 0.5 * p);
        prop_assert!(out.density_matrix().unwrap().max_abs_diff(&affine) < 1e-12);
    }

    #[test]
    fn bit_flip_shrinks_z_on_diagonal_states(w in 0.0f64..=1.0, pi in 0usize..4) {
        let p = [0.0, 0.001, 0.1, 0.5][pi];
        let rho = CMatrix::diag(&[C64::new(w, 0.0), C64::new(1.0 - w, 0.0)]);
        let s = QuantumState::from_density(rho).unwrap();
        let z = Observable::new(pauli(Axis::Z)).unwrap();
        let before = s.expectation(&z).unwrap();
        let after = s.apply_kraus(&channel_ops(NoiseKind::BitFlip, p).unwrap(), &[0]).unwrap().expectation(&z).unwrap();
        prop_assert!((after - (1.0 - 2.0 * p) * before).abs() < 1e-15);
    }

    #[test]
    fn losses_are_non_negative((q, f) in batch(), kind in loss_kind(), lambda in 0.0f64..2.0) {
        let cfg = LossConfig { kind, lambda, ..Default::default() };
        prop_assert!(cfg.evaluate(&q, &f).unwrap().value >= 0.0);
    }

    #[test]
    fn loss_gradients_match_finite_differences((q, f) in batch(), kind in loss_kind(), lambda in 0.0f64..2.0) {
        let cfg = LossConfig { kind, lambda, eps: 0.5 };
        let g = cfg.evaluate(&q, &f).unwrap().gradient;
        let h = 1e-6;
        for i in 0..q.len() {
            let mut qp = q.clone();
            qp[i] += h;
            let mut qm = q.clone();
            qm[i] -= h;
            let fd = (cfg.evaluate(&qp, &f).unwrap().value - cfg.evaluate(&qm, &f).unwrap().value) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() < 1e-7, "{kind:?} component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn kl_term_ignores_a_common_shift((q, f) in batch(), c in -50.0f64..50.0, lambda in 0.01f64..2.0) {
        let shift = |v: &[f64]| v.iter().map(|x| x + c).collect::<Vec<_>>();
        let (qs, fs) = (shift(&q), shift(&f));
        prop_assert!((kl(&f, &q) - kl(&fs, &qs)).abs() < 1e-12);
        let a = mse_kl(&q, &f, lambda).unwrap().value;
        let b = mse_kl(&qs, &fs, lambda).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn mse_kl_matches_direct_recomputation((q, f) in batch(), lambda in 0.0f64..2.0) {
        let mse = q.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / q.len() as f64;
        let expect = mse + lambda * kl(&f, &q);
        let got = mse_kl(&q, &f, lambda).unwrap().value;
        prop_assert!((got - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn log_cosh_is_even_and_below_abs(r in -700.0f64..700.0) {
        let v = log_cosh_scalar(r);
        prop_assert!(v.is_finite() && v >= 0.0 && v <= r.abs());
        prop_assert_eq!(v, log_cosh_scalar(-r));
    }

    #[test]
    fn w1_ignores_joint_rescaling(pairs in prop::collection::vec((0.01f64..2.0, 0.01f64..2.0), 30), k in 1e-6f64..1e6) {
        let (t, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let scaled = |v: &[f64]| v.iter().map(|x| x * k).collect::<Vec<_>>();
        let dx = 2.0 / 30.0;
        let w = w1_from_cumulative(&normalized_cumulative(&t).unwrap(), &normalized_cumulative(&p).unwrap(), dx);
        let ws = w1_from_cumulative(&normalized_cumulative(&scaled(&t)).unwrap(), &normalized_cumulative(&scaled(&p)).unwrap(), dx);
        prop_assert!(w >= 0.0);
        prop_assert!((w - ws).abs() < 1e-12);
    }

    #[test]
    fn r2_of_a_perfect_fit_is_one(f in prop::collection::vec(-5.0f64..5.0, 3..60)) {
        prop_assume!(f.iter().any(|v| (v - f[0]).abs() > 1e-6));
        prop_assert_eq!(r2_score(&f, &f).unwrap(), 1.0);
    }

    #[test]
    fn r2_matches_direct_recomputation(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 50)) {
        let (f, q): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mean = f.iter().sum::<f64>() / 50.0;
        let ss_res: f64 = f.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
        let ss_tot: f64 = f.iter().map(|a| (a - mean).powi(2)).sum();
        let expect = 1.0 - ss_res / ss_tot;
        let got = r2_score(&f, &q).unwrap();
        prop_assert!((got - expect).abs() <= 1e-14 * expect.abs().max(1.0));
        prop_assert!(got <= 1.0);
    }
}
