//! Analytic derivatives of the model output.
//!
//! The forward pass carries the pair `(s, ∂s/∂x)` through the circuit, where
//! `s` is a statevector (as a column) or a density matrix. That gives the
//! value `Q` and the input derivative `q = ∂Q/∂x` in one sweep. A reverse
//! sweep over the stored tape then yields `∂(ḡ_Q·Q + ḡ_q·q)/∂θ` for any
//! upstream pair, which is all the trainer needs for derivative-based
//! losses. Parameter-shift estimates are provided separately for checking.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

use crate::ansatz::{AnsatzKind, CircuitModel, CompiledModel};
use crate::circuit::{AngleSource, Circuit, NoiseInjection, Readout, Step};
use crate::error::{Error, Result};
use crate::quantum::local;
use crate::quantum::matrix::{CMatrix, C64};
use crate::quantum::state::{check_completeness, real_part, QuantumState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Repr {
    Pure,
    Mixed,
}

/// Register positions of a gate's wires, gate order.
#[derive(Clone, Copy, Debug)]
struct Wires {
    q: [usize; 3],
    len: usize,
    n: usize,
}

impl Wires {
    fn new(targets: &[usize], n: usize) -> Result<Self> {
        if targets.is_empty() || targets.len() > 3 {
            return Err(Error::invalid_input("gates act on one to three qubits"));
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= n || targets[..i].contains(&t) {
                return Err(Error::invalid_input("target qubits must be distinct and inside the register"));
            }
        }
        let mut q = [0; 3];
        q[..targets.len()].copy_from_slice(targets);
        Ok(Wires { q, len: targets.len(), n })
    }

    fn t(&self) -> &[usize] {
        &self.q[..self.len]
    }

    fn left(&self, g: &[C64], s: &CMatrix) -> CMatrix {
        local::left(g, self.t(), self.n, s)
    }

    fn left_dagger(&self, g: &[C64], s: &CMatrix) -> CMatrix {
        local::left_dagger(g, self.t(), self.n, s)
    }

    fn right(&self, s: &CMatrix, g: &[C64]) -> CMatrix {
        local::right(s, g, self.t(), self.n)
    }

    fn right_dagger(&self, s: &CMatrix, g: &[C64]) -> CMatrix {
        local::right_dagger(s, g, self.t(), self.n)
    }

    fn apply(&self, r: Repr, m: &[C64], s: &CMatrix) -> CMatrix {
        match r {
            Repr::Pure => self.left(m, s),
            Repr::Mixed => self.right_dagger(&self.left(m, s), m),
        }
    }

    /// dA/dφ applied to s.
    fn apply_d(&self, r: Repr, m: &[C64], dm: &[C64], s: &CMatrix) -> CMatrix {
        match r {
            Repr::Pure => self.left(dm, s),
            Repr::Mixed => {
                let mut out = self.right_dagger(&self.left(dm, s), m);
                out.add_scaled(&self.right_dagger(&self.left(m, s), dm), 1.0);
                out
            }
        }
    }

    /// d²A/dφ² applied to s.
    fn apply_dd(&self, r: Repr, m: &[C64], dm: &[C64], ddm: &[C64], s: &CMatrix) -> CMatrix {
        match r {
            Repr::Pure => self.left(ddm, s),
            Repr::Mixed => {
                let mut out = self.right_dagger(&self.left(ddm, s), m);
                out.add_scaled(&self.right_dagger(&self.left(dm, s), dm), 2.0);
                out.add_scaled(&self.right_dagger(&self.left(m, s), ddm), 1.0);
                out
            }
        }
    }

    fn adjoint(&self, r: Repr, m: &[C64], g: &CMatrix) -> CMatrix {
        match r {
            Repr::Pure => self.left_dagger(m, g),
            Repr::Mixed => self.right(&self.left_dagger(m, g), m),
        }
    }

    fn adjoint_d(&self, r: Repr, m: &[C64], dm: &[C64], g: &CMatrix) -> CMatrix {
        match r {
            Repr::Pure => self.left_dagger(dm, g),
            Repr::Mixed => {
                let mut out = self.right(&self.left_dagger(dm, g), m);
                out.add_scaled(&self.right(&self.left_dagger(m, g), dm), 1.0);
                out
            }
        }
    }

    fn channel(&self, kraus: &[CMatrix], s: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(s.rows(), s.cols());
        for e in kraus {
            out.add_scaled(&self.apply(Repr::Mixed, e.data(), s), 1.0);
        }
        out
    }

    fn channel_adjoint(&self, kraus: &[CMatrix], g: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(g.rows(), g.cols());
        for e in kraus {
            out.add_scaled(&self.adjoint(Repr::Mixed, e.data(), g), 1.0);
        }
        out
    }
}

#[allow(clippy::large_enum_variant)]
enum Op<'a> {
    Rotation { mats: [[C64; 16]; 3], phi_x: f64, source: AngleSource },
    Fixed(&'a [C64]),
    Channel(&'a [CMatrix]),
}

struct Tape<'a> {
    repr: Repr,
    x: f64,
    /// Operation, its wires and the (state, x-tangent) it was applied to.
    ops: Vec<(Op<'a>, Wires, CMatrix, CMatrix)>,
    last: (CMatrix, CMatrix),
}

fn forward<'a>(circuit: &'a Circuit, theta: &[f64], x: f64, noise: NoiseInjection<'a>) -> Result<(f64, f64, Tape<'a>)> {
    let initial = match noise {
        NoiseInjection::Channel(ops) => {
            check_completeness(ops)?;
            if ops.iter().any(|e| e.rows() != 2) {
                return Err(Error::Channel("noise channels act on one qubit".into()));
            }
            circuit.initial.to_density()
        }
        _ => circuit.initial.clone(),
    };
    let (repr, mut s) = match &initial {
        QuantumState::Statevector { amps, .. } => (Repr::Pure, CMatrix::column(amps)),
        QuantumState::Density { rho, .. } => (Repr::Mixed, rho.clone()),
    };
    let mut ds = CMatrix::zeros(s.rows(), s.cols());
    let n = circuit.n_qubits;
    let mut ops = Vec::new();
    let mut rot = 0;
    for step in &circuit.steps {
        let (op, wires) = match step {
            Step::Rotation { axis, target, control, angle } => {
                let (mut phi, phi_x) = angle.angle(theta, x);
                if let NoiseInjection::AngleOffsets(off) = noise {
                    phi += off[rot];
                }
                rot += 1;
                let mats = Circuit::rotation_blocks(*axis, control.is_some(), phi);
                let wires = match control {
                    Some(c) => Wires::new(&[*c, *target], n)?,
                    None => Wires::new(&[*target], n)?,
                };
                (Op::Rotation { mats, phi_x, source: *angle }, wires)
            }
            Step::Fixed { gate, targets, .. } => {
                if gate.rows() != 1 << targets.len() {
                    return Err(Error::invalid_input("gate dimension does not match number of targets"));
                }
                (Op::Fixed(gate.data()), Wires::new(targets, n)?)
            }
        };
        push(repr, op, wires, &mut s, &mut ds, &mut ops);
        if let NoiseInjection::Channel(kraus) = noise {
            for &q in step.channel_targets() {
                push(repr, Op::Channel(kraus), Wires::new(&[q], n)?, &mut s, &mut ds, &mut ops);
            }
        }
    }
    let (value, slope) = readout(repr, &circuit.readout, &s, &ds)?;
    Ok((value, slope, Tape { repr, x, ops, last: (s, ds) }))
}

#[allow(clippy::type_complexity)]
fn push<'a>(repr: Repr, op: Op<'a>, w: Wires, s: &mut CMatrix, ds: &mut CMatrix, ops: &mut Vec<(Op<'a>, Wires, CMatrix, CMatrix)>) {
    let (u, du) = match &op {
        Op::Rotation { mats: [m, dm, _], phi_x, .. } => {
            let mut du = w.apply(repr, m, ds);
            if *phi_x != 0.0 {
                du.add_scaled(&w.apply_d(repr, m, dm, s), *phi_x);
            }
            (w.apply(repr, m, s), du)
        }
        Op::Fixed(m) => (w.apply(repr, m, s), w.apply(repr, m, ds)),
        Op::Channel(kraus) => (w.channel(kraus, s), w.channel(kraus, ds)),
    };
    let prev_s = core::mem::replace(s, u);
    let prev_ds = core::mem::replace(ds, du);
    ops.push((op, w, prev_s, prev_ds));
}

fn readout(repr: Repr, readout: &Readout, s: &CMatrix, ds: &CMatrix) -> Result<(f64, f64)> {
    match (repr, readout) {
        (Repr::Pure, Readout::Expectation(obs)) => {
            let os = obs.matrix() * s;
            let os_d = obs.matrix() * ds;
            let q = real_part(inner(s, &os))?;
            Ok((q, 2.0 * inner(s, &os_d).re))
        }
        (Repr::Pure, Readout::Amplitude(bra)) => {
            let b = CMatrix::column(bra);
            Ok((inner(&b, s).re, inner(&b, ds).re))
        }
        (Repr::Mixed, Readout::Expectation(obs)) => {
            let q = real_part((s * obs.matrix()).trace())?;
            Ok((q, (ds * obs.matrix()).trace().re))
        }
        (Repr::Mixed, Readout::Amplitude(_)) => Err(Error::Mode("amplitude readout needs a pure state".into())),
    }
}

/// Σ conj(a)·b over matching entries.
fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum()
}

/// Adjoints of `(Q, q)` with respect to the final `(s, ∂s/∂x)`.
fn readout_adjoint(tape: &Tape<'_>, readout: &Readout, gq: f64, gslope: f64) -> (CMatrix, CMatrix) {
    let (s, ds) = &tape.last;
    match (tape.repr, readout) {
        (Repr::Pure, Readout::Expectation(obs)) => {
            let os = obs.matrix() * s;
            let mut g_s = os.scale_real(2.0 * gq);
            g_s.add_scaled(&(obs.matrix() * ds), 2.0 * gslope);
            (g_s, os.scale_real(2.0 * gslope))
        }
        (Repr::Pure, Readout::Amplitude(bra)) => {
            let b = CMatrix::column(bra);
            (b.scale_real(gq), b.scale_real(gslope))
        }
        // Tr(Oρ) = Re⟨O, ρ⟩ for Hermitian O.
        (_, Readout::Expectation(obs)) => (obs.matrix().scale_real(gq), obs.matrix().scale_real(gslope)),
        (Repr::Mixed, Readout::Amplitude(_)) => unreachable!("rejected during the forward pass"),
    }
}

fn backward(tape: &Tape<'_>, readout: &Readout, gq: f64, gslope: f64, grad: &mut [f64]) {
    let repr = tape.repr;
    let (mut g, mut gd) = readout_adjoint(tape, readout, gq, gslope);
    for (op, w, s, ds) in tape.ops.iter().rev() {
        match op {
            Op::Rotation { mats: [m, dm, ddm], phi_x, source } => {
                let a1s = w.apply_d(repr, m, dm, s);
                let mut dphi = g.real_inner(&a1s) + gd.real_inner(&w.apply_d(repr, m, dm, ds));
                if *phi_x != 0.0 {
                    dphi += phi_x * gd.real_inner(&w.apply_dd(repr, m, dm, ddm, s));
                }
                match *source {
                    AngleSource::Param(j) => grad[j] += dphi,
                    AngleSource::Embed(j) => grad[j] += dphi * tape.x + gd.real_inner(&a1s),
                    AngleSource::Signal => {}
                }
                let mut new_g = w.adjoint(repr, m, &g);
                if *phi_x != 0.0 {
                    new_g.add_scaled(&w.adjoint_d(repr, m, dm, &gd), *phi_x);
                }
                gd = w.adjoint(repr, m, &gd);
                g = new_g;
            }
            Op::Fixed(m) => {
                g = w.adjoint(repr, m, &g);
                gd = w.adjoint(repr, m, &gd);
            }
            Op::Channel(kraus) => {
                g = w.channel_adjoint(kraus, &g);
                gd = w.channel_adjoint(kraus, &gd);
            }
        }
    }
}

/// Value, input slope and the gradient of `ḡ_Q·Q + ḡ_q·q` over the
/// flattened parameters (`theta` then `a, b`). All quantities are post-affine.
#[derive(Clone, Debug, PartialEq)]
pub struct Backprop {
    pub value: f64,
    pub slope: f64,
    pub grad: Vec<f64>,
}

pub fn backprop(
    model: &CircuitModel,
    compiled: &CompiledModel,
    x: f64,
    noise: NoiseInjection<'_>,
    upstream_value: f64,
    upstream_slope: f64,
) -> Result<Backprop> {
    model.check_input(x)?;
    if let NoiseInjection::AngleOffsets(off) = noise {
        if off.len() != compiled.rotation_count() {
            return Err(Error::invalid_input("one angle offset per rotation gate required"));
        }
    }
    let gain = model.output_gain();
    let mut grad = vec![0.0; model.param_count()];
    let (mut raw, mut raw_slope) = (0.0, 0.0);
    for (circuit, n) in compiled.circuits.iter().zip(compiled.split_noise(noise)) {
        let (v, d, tape) = forward(circuit, &model.theta, x, n)?;
        raw += v;
        raw_slope += d;
        backward(&tape, &circuit.readout, gain * upstream_value, gain * upstream_slope, &mut grad);
    }
    if model.affine.is_some() {
        let k = model.theta.len();
        grad[k] = model.output_scale * (upstream_value * raw + upstream_slope * raw_slope);
        grad[k + 1] = model.output_scale * upstream_value;
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient(i));
    }
    Ok(Backprop { value: model.apply_affine(raw), slope: gain * raw_slope, grad })
}

/// (Q, ∂Q/∂x) from one forward sweep.
pub fn value_and_slope(model: &CircuitModel, compiled: &CompiledModel, x: f64, noise: NoiseInjection<'_>) -> Result<(f64, f64)> {
    model.check_input(x)?;
    let gain = model.output_gain();
    let (mut raw, mut raw_slope) = (0.0, 0.0);
    for (circuit, n) in compiled.circuits.iter().zip(compiled.split_noise(noise)) {
        let (v, d, _) = forward(circuit, &model.theta, x, n)?;
        raw += v;
        raw_slope += d;
    }
    Ok((model.apply_affine(raw), gain * raw_slope))
}

/// ∂Q/∂x, the model's stand-in for the target function.
pub fn input_derivative(model: &CircuitModel, x: f64) -> Result<f64> {
    Ok(value_and_slope(model, &model.compile(), x, NoiseInjection::None)?.1)
}

/// `upstream · ∂Q/∂θ` over the flattened parameters.
pub fn param_gradient(model: &CircuitModel, x: f64, upstream: f64) -> Result<Vec<f64>> {
    Ok(backprop(model, &model.compile(), x, NoiseInjection::None, upstream, 0.0)?.grad)
}

/// Derivatives of Q at one input.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientReport {
    pub value: f64,
    /// ∂Q/∂x
    pub d_x: f64,
    /// ∂Q/∂θ over the flattened parameters.
    pub d_params: Vec<f64>,
    /// ∂²Q/∂x∂θ over the flattened parameters.
    pub d_x_params: Vec<f64>,
}

pub fn gradient_report(model: &CircuitModel, x: f64) -> Result<GradientReport> {
    let compiled = model.compile();
    let a = backprop(model, &compiled, x, NoiseInjection::None, 1.0, 0.0)?;
    let b = backprop(model, &compiled, x, NoiseInjection::None, 0.0, 1.0)?;
    Ok(GradientReport { value: a.value, d_x: a.slope, d_params: a.grad, d_x_params: b.grad })
}

/// Parameter-shift estimate of ∂Q/∂θⱼ.
///
/// Plain rotations use shifts of ±π/2; an embedding scale multiplies `x`, so
/// its shift is ±π/(2x) and the difference is rescaled by `x`. Amplitude
/// readouts are linear rather than quadratic in the gate, so their
/// frequency is 1/2 and the shift becomes ±π. Controlled rotations have
/// three generator eigenvalues and no two-term rule, and the affine
/// coefficients are not gate angles; both are rejected.
pub fn psr_gradient(model: &CircuitModel, x: f64, index: usize) -> Result<f64> {
    model.check_input(x)?;
    let compiled = model.compile();
    if index >= model.theta.len() {
        let reason = if index < model.param_count() { "affine coefficient" } else { "index out of range" };
        return Err(Error::UnsupportedParameter { index, reason: reason.into() });
    }
    let mut embed = false;
    let mut amplitude = false;
    let mut found = false;
    for c in &compiled.circuits {
        for step in &c.steps {
            if let Step::Rotation { control, angle, .. } = step {
                if angle.param_index() == Some(index) {
                    if control.is_some() {
                        return Err(Error::UnsupportedParameter {
                            index,
                            reason: "controlled rotation has no two-term shift rule".into(),
                        });
                    }
                    found = true;
                    embed = matches!(angle, AngleSource::Embed(_));
                    amplitude = matches!(c.readout, Readout::Amplitude(_));
                }
            }
        }
    }
    if !found {
        return Err(Error::UnsupportedParameter { index, reason: "parameter is not a gate angle".into() });
    }
    if embed && x == 0.0 {
        return Err(Error::UnsupportedParameter { index, reason: "embedding shift undefined at x = 0".into() });
    }
    let (shift, denom) = if amplitude { (PI, 4.0) } else { (FRAC_PI_2, 2.0) };
    let scale = if embed { x } else { 1.0 };
    let delta = shift / scale;
    let mut theta = model.theta.clone();
    theta[index] += delta;
    let plus = compiled.raw_value(&theta, x, NoiseInjection::None)?;
    theta[index] -= 2.0 * delta;
    let minus = compiled.raw_value(&theta, x, NoiseInjection::None)?;
    Ok(model.output_gain() * scale * (plus - minus) / denom)
}

/// Whether [`psr_gradient`] supports every circuit parameter of this kind.
pub fn psr_supported(kind: AnsatzKind) -> bool {
    !matches!(kind, AnsatzKind::Dqc1)
}
