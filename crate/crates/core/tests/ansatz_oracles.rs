//! Circuit outputs against explicit matrix products written out by hand.

use proptest::prelude::*;
use vqint_core::ansatz::{AnsatzKind, CircuitModel, ParamRole};
use vqint_core::circuit::NoiseInjection;
use vqint_core::gradients::input_derivative;
use vqint_core::quantum::C64;

type M = Vec<Vec<C64>>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mul(a: &M, b: &M) -> M {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

fn kron(a: &M, b: &M) -> M {
    let (n, m) = (a.len(), b.len());
    (0..n * m).map(|i| (0..n * m).map(|j| a[i / m][j / m] * b[i % m][j % m]).collect()).collect()
}

fn eye(n: usize) -> M {
    (0..n).map(|i| (0..n).map(|j| c(f64::from(u8::from(i == j)), 0.0)).collect()).collect()
}

fn rx(t: f64) -> M {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]]
}

fn ry(t: f64) -> M {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
}

fn rz(t: f64) -> M {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, -s), c(0.0, 0.0)], vec![c(0.0, 0.0), c(co, s)]]
}

fn cz() -> M {
    let mut m = eye(4);
    m[3][3] = c(-1.0, 0.0);
    m
}

fn qnn_oracle(m: &CircuitModel, x: f64) -> f64 {
    let t = &m.theta;
    let mut u = eye(4);
    for l in 0..m.layers {
        let v = |q: usize| {
            let b = 6 * l + 3 * q;
            mul(&rx(t[b]), &mul(&rz(t[b + 1] * x), &ry(t[b + 2])))
        };
        u = mul(&cz(), &mul(&kron(&v(0), &v(1)), &u));
    }
    // ⟨00|U†(Z⊗Z)U|00⟩ with the first column of U
    let zz = [1.0, -1.0, -1.0, 1.0];
    let raw: f64 = (0..4).map(|i| zz[i] * u[i][0].norm_sqr()).sum();
    let af = m.affine.unwrap();
    m.output_scale * (af.a * raw + af.b)
}

fn signal(x: f64) -> M {
    let s = (1.0 - x * x).sqrt();
    vec![vec![c(x, 0.0), c(0.0, s)], vec![c(0.0, s), c(x, 0.0)]]
}

fn chain_oracle(phases: &[f64], x: f64) -> f64 {
    let mut u = rz(phases[0]);
    for &p in &phases[1..] {
        u = mul(&rz(p), &mul(&signal(x), &u));
    }
    // Re⟨+|U|+⟩ = Re(ΣU)/2
    u.iter().flatten().map(|z| z.re).sum::<f64>() / 2.0
}

fn qsp_oracle(m: &CircuitModel, x: f64) -> f64 {
    let l = m.layers;
    chain_oracle(&m.theta[..=l], x) + chain_oracle(&m.theta[l + 1..], x)
}

fn dqc1_oracle(m: &CircuitModel, x: f64) -> f64 {
    let t = &m.theta;
    let w = |r: usize| mul(&rx(t[2 * r]), &ry(t[2 * r + 1]));
    let mut u = kron(&w(0), &w(1));
    for l in 0..m.layers {
        let base = 4 + 8 * l;
        let v = |r: usize| {
            let b = base + 3 * r;
            mul(&rx(t[b]), &mul(&ry(t[b + 1]), &rz(t[b + 2])))
        };
        u = mul(&kron(&v(0), &v(1)), &u);
        u = mul(&cz(), &u);
        u = mul(&kron(&rx(t[base + 6] * x), &rx(t[base + 7] * x)), &u);
    }
    let tr: C64 = (0..4).map(|i| u[i][i]).sum();
    let af = m.affine.unwrap();
    m.output_scale * (af.a * tr.re / 4.0 + af.b)
}

fn chebyshev(d: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if d == 0 {
        return a;
    }
    for _ in 1..d {
        (a, b) = (b, 2.0 * x * b - a);
    }
    b
}

#[test]
fn qnn_frozen_point() {
    let m = CircuitModel::build(AnsatzKind::Qnn, 3, 42).unwrap();
    let v = m.evaluate(0.3).unwrap();
    assert!((v - qnn_oracle(&m, 0.3)).abs() < 1e-12, "{v}");
}

#[test]
fn qsp_frozen_point() {
    let m = CircuitModel::build(AnsatzKind::Qsp, 3, 7).unwrap();
    let v = m.evaluate(-0.5).unwrap();
    assert!((v - qsp_oracle(&m, -0.5)).abs() < 1e-12, "{v}");
}

#[test]
fn dqc1_frozen_point() {
    let m = CircuitModel::build(AnsatzKind::Dqc1, 3, 11).unwrap();
    let v = m.evaluate(0.25).unwrap();
    assert!((v - dqc1_oracle(&m, 0.25)).abs() < 1e-12, "{v}");
}

#[test]
fn single_signal_with_zero_phases_is_identity_in_x() {
    let mut m = CircuitModel::build(AnsatzKind::Qsp, 1, 0).unwrap();
    m.theta.iter_mut().for_each(|t| *t = 0.0);
    let compiled = m.compile();
    for i in 1..20 {
        let x = -0.95 + 0.1 * i as f64;
        let even = compiled.circuits[0].run(&m.theta, x, NoiseInjection::None).unwrap();
        assert!((even - x).abs() < 1e-12);
        assert!((input_derivative(&m, x).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn zero_phase_chains_are_chebyshev_with_parity() {
    for layers in 1..=6 {
        let mut m = CircuitModel::build(AnsatzKind::Qsp, layers, 3).unwrap();
        m.theta.iter_mut().for_each(|t| *t = 0.0);
        let compiled = m.compile();
        for i in 0..=40 {
            let x = -0.99 + 0.0495 * i as f64;
            for (k, d) in [(0, layers), (1, layers - 1)] {
                let run = |x| compiled.circuits[k].run(&m.theta, x, NoiseInjection::None).unwrap();
                assert!((run(x) - chebyshev(d, x)).abs() < 1e-10);
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                assert!((run(-x) - sign * run(x)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn counts_for_every_depth() {
    for l in 1..=12 {
        for (kind, p, e) in [
            (AnsatzKind::Qnn, 6 * l + 2, 2 * l),
            (AnsatzKind::Qsp, 2 * l + 1, 2 * l - 1),
            (AnsatzKind::Dqc1, 8 * l + 6, 2 * l),
        ] {
            let m = CircuitModel::build(kind, l, 0).unwrap();
            assert_eq!((m.param_count(), m.encoding_count()), (p, e), "{kind:?} L={l}");
            assert_eq!((kind.param_count(l), kind.encoding_count(l)), (p, e));
        }
    }
}

#[test]
fn input_derivative_integrates_back() {
    let m = CircuitModel::build(AnsatzKind::Qnn, 4, 9).unwrap();
    let n = 2001;
    let h = 2.0 / (n - 1) as f64;
    let q: Vec<f64> = (0..n).map(|i| input_derivative(&m, -1.0 + h * i as f64).unwrap()).collect();
    let trap = h * (q.iter().sum::<f64>() - 0.5 * (q[0] + q[n - 1]));
    let exact = m.evaluate(1.0).unwrap() - m.evaluate(-1.0).unwrap();
    assert!((trap - exact).abs() < 1e-4, "{trap} vs {exact}");
}

#[test]
fn model_document_round_trips_bit_exactly() {
    for kind in AnsatzKind::ALL {
        let m = CircuitModel::build(kind, 5, 77).unwrap().with_output_scale(1.0 / 3.0);
        let text = serde_json::to_string(&m).unwrap();
        let back: CircuitModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}

fn kind() -> impl Strategy<Value = AnsatzKind> {
    prop_oneof![Just(AnsatzKind::Qnn), Just(AnsatzKind::Qsp), Just(AnsatzKind::Dqc1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn matches_dense_oracle(kind in kind(), layers in 1usize..5, seed in any::<u64>(), x in -0.99f64..0.99) {
        let m = CircuitModel::build(kind, layers, seed).unwrap();
        let oracle = match kind {
            AnsatzKind::Qnn => qnn_oracle(&m, x),
            AnsatzKind::Qsp => qsp_oracle(&m, x),
            AnsatzKind::Dqc1 => dqc1_oracle(&m, x),
        };
        prop_assert!((m.evaluate(x).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn dqc1_is_a_trace_estimator(layers in 1usize..5, seed in any::<u64>(), x in -1.0f64..=1.0) {
        let m = CircuitModel::build(AnsatzKind::Dqc1, layers, seed).unwrap();
        prop_assert!((m.evaluate(x).unwrap() - dqc1_oracle(&m, x)).abs() < 1e-10);
    }

    #[test]
    fn raw_outputs_stay_in_range(kind in kind(), layers in 1usize..6, seed in any::<u64>(), x in -1.0f64..=1.0) {
        let m = CircuitModel::build(kind, layers, seed).unwrap();
        let compiled = m.compile();
        let x = m.clamp_input(x);
        let parts: Vec<f64> = compiled.circuits.iter().map(|c| c.run(&m.theta, x, NoiseInjection::None).unwrap()).collect();
        for p in &parts {
            prop_assert!(p.abs() <= 1.0 + 1e-9);
        }
        let bound = if kind == AnsatzKind::Qsp { 2.0 } else { 1.0 };
        prop_assert!(parts.iter().sum::<f64>().abs() <= bound + 1e-9);
    }

    #[test]
    fn angles_are_4pi_periodic(layers in 1usize..4, seed in any::<u64>(), x in -1.0f64..=1.0, pick in any::<prop::sample::Index>()) {
        let m = CircuitModel::build(AnsatzKind::Qnn, layers, seed).unwrap();
        let angles: Vec<usize> = m.roles().iter().enumerate().filter(|(_, r)| **r == ParamRole::Angle).map(|(i, _)| i).collect();
        let i = angles[pick.index(angles.len())];
        let mut shifted = m.clone();
        shifted.theta[i] += 4.0 * std::f64::consts::PI;
        prop_assert!((m.evaluate(x).unwrap() - shifted.evaluate(x).unwrap()).abs() < 1e-10);
    }
}
