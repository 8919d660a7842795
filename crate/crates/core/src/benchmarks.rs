//! Target integrands, coordinate normalization and reference integrals.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Z boson mass in GeV.
pub const Z_MASS: f64 = 91.1876;
/// Z width that reproduces the reference integrals.
pub const Z_WIDTH_FITTED: f64 = 2.4896;
/// Z width as quoted alongside the line shape.
pub const Z_WIDTH_STATED: f64 = 2.4952;

/// Relative quadrature tolerance, applied to `max|f|·(b − a)`.
const QUAD_REL_TOL: f64 = 1e-10;

/// A named integration window used in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedInterval {
    pub label: String,
    pub a: f64,
    pub b: f64,
    /// The exact integral vanishes; reports show the predicted value alone.
    pub exact_zero: bool,
}

impl NamedInterval {
    fn new(label: &str, a: f64, b: f64, exact_zero: bool) -> Self {
        NamedInterval { label: label.to_string(), a, b, exact_zero }
    }
}

/// A one-dimensional target integrand on a physical domain.
pub trait Integrand: Send + Sync {
    fn name(&self) -> &str;
    /// (s_min, s_max) in physical units.
    fn domain(&self) -> (f64, f64);
    fn evaluate(&self, s: f64) -> f64;

    fn named_intervals(&self) -> Vec<NamedInterval> {
        Vec::new()
    }

    /// ∫ₐᵇ f ds by adaptive quadrature.
    fn reference_integral(&self, a: f64, b: f64) -> Result<f64> {
        check_inside(self.domain(), a, b)?;
        quadrature_integral(|s| self.evaluate(s), a, b)
    }

    fn normalize(&self, s: f64) -> f64 {
        let (lo, hi) = self.domain();
        (2.0 * s - (hi + lo)) / (hi - lo)
    }

    fn denormalize(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        0.5 * (x * (hi - lo) + (hi + lo))
    }

    /// ds/dx, converting normalized-coordinate integrals to physical ones.
    fn jacobian(&self) -> f64 {
        let (lo, hi) = self.domain();
        0.5 * (hi - lo)
    }

    /// Target as seen by the model: f at the denormalized point.
    fn target(&self, x: f64) -> f64 {
        self.evaluate(self.denormalize(x))
    }
}

fn check_inside((lo, hi): (f64, f64), a: f64, b: f64) -> Result<()> {
    let slack = 1e-12 * (hi - lo);
    for e in [a, b] {
        if !e.is_finite() || e < lo - slack || e > hi + slack {
            return Err(Error::Extrapolation(e));
        }
    }
    Ok(())
}

fn quadrature_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let peak = (0..=256).map(|i| f(lo + (hi - lo) * i as f64 / 256.0).abs()).fold(0.0, f64::max);
    let tol = (QUAD_REL_TOL * peak * (hi - lo)).max(f64::MIN_POSITIVE);
    integrate(f, a, b, tol)
}

/// Relativistic Breit–Wigner line shape `1/((s² − M²)² + M²Γ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreitWigner {
    pub mass: f64,
    pub width: f64,
}

impl Default for BreitWigner {
    fn default() -> Self {
        BreitWigner { mass: Z_MASS, width: Z_WIDTH_FITTED }
    }
}

impl BreitWigner {
    /// The Z line shape with the quoted width of 2.4952 GeV.
    pub fn stated_width() -> Self {
        BreitWigner { mass: Z_MASS, width: Z_WIDTH_STATED }
    }

    pub fn value(&self, s: f64) -> f64 {
        let m2 = self.mass * self.mass;
        let d = s * s - m2;
        1.0 / (d * d + m2 * self.width * self.width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkKind {
    Cpf,
    Step,
    Bw,
}

impl BenchmarkKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cpf" => Some(BenchmarkKind::Cpf),
            "step" => Some(BenchmarkKind::Step),
            "bw" | "breit-wigner" | "breit_wigner" => Some(BenchmarkKind::Bw),
            _ => None,
        }
    }
}

/// The built-in benchmark integrands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Benchmark {
    /// cos(s + 0.5·sin 4s) on [−2π, 2π].
    Cpf,
    /// −0.5 for s < 0, +0.5 for s ≥ 0 on [−1, 1].
    Step,
    /// Breit–Wigner on [60, 120] GeV.
    Bw(BreitWigner),
}

impl Benchmark {
    pub fn from_kind(kind: BenchmarkKind) -> Self {
        match kind {
            BenchmarkKind::Cpf => Benchmark::Cpf,
            BenchmarkKind::Step => Benchmark::Step,
            BenchmarkKind::Bw => Benchmark::Bw(BreitWigner::default()),
        }
    }

    pub fn kind(&self) -> BenchmarkKind {
        match self {
            Benchmark::Cpf => BenchmarkKind::Cpf,
            Benchmark::Step => BenchmarkKind::Step,
            Benchmark::Bw(_) => BenchmarkKind::Bw,
        }
    }

    /// Multiplier applied when tabulating integrals (BW values are shown ×10⁵).
    pub fn display_scale(&self) -> f64 {
        match self {
            Benchmark::Bw(_) => 1e5,
            _ => 1.0,
        }
    }

    pub fn boxed(self) -> Box<dyn Integrand> {
        Box::new(self)
    }
}

impl Integrand for Benchmark {
    fn name(&self) -> &str {
        match self {
            Benchmark::Cpf => "cpf",
            Benchmark::Step => "step",
            Benchmark::Bw(_) => "bw",
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            Benchmark::Cpf => (-2.0 * PI, 2.0 * PI),
            Benchmark::Step => (-1.0, 1.0),
            Benchmark::Bw(_) => (60.0, 120.0),
        }
    }

    fn evaluate(&self, s: f64) -> f64 {
        match self {
            Benchmark::Cpf => (s + 0.5 * (4.0 * s).sin()).cos(),
            Benchmark::Step => {
                if s < 0.0 {
                    -0.5
                } else {
                    0.5
                }
            }
            Benchmark::Bw(bw) => bw.value(s),
        }
    }

    fn named_intervals(&self) -> Vec<NamedInterval> {
        match self {
            Benchmark::Cpf => vec![
                NamedInterval::new("[0, pi/2]", 0.0, FRAC_PI_2, false),
                NamedInterval::new("[-pi/2, pi/2]", -FRAC_PI_2, FRAC_PI_2, false),
                NamedInterval::new("[-pi, pi]", -PI, PI, true),
            ],
            Benchmark::Step => vec![
                NamedInterval::new("[0, 0.5]", 0.0, 0.5, false),
                NamedInterval::new("[-0.5, 0]", -0.5, 0.0, false),
                NamedInterval::new("[-0.5, 0.5]", -0.5, 0.5, true),
            ],
            Benchmark::Bw(bw) => [3.0, 5.0, 10.0]
                .iter()
                .map(|&k| {
                    let label = alloc::format!("M_Z +/- {k}G");
                    NamedInterval::new(&label, bw.mass - k * bw.width, bw.mass + k * bw.width, false)
                })
                .collect(),
        }
    }

    fn reference_integral(&self, a: f64, b: f64) -> Result<f64> {
        check_inside(self.domain(), a, b)?;
        match self {
            // Piecewise constant: the integral is exact, not a quadrature.
            Benchmark::Step => {
                let pos = |s: f64| 0.5 * s.abs();
                Ok(pos(b) - pos(a))
            }
            _ => quadrature_integral(|s| self.evaluate(s), a, b),
        }
    }
}

/// A user-supplied integrand.
pub struct CustomIntegrand<F> {
    name: String,
    domain: (f64, f64),
    f: F,
    intervals: Vec<NamedInterval>,
}

impl<F: Fn(f64) -> f64 + Send + Sync> CustomIntegrand<F> {
    pub fn new(name: &str, domain: (f64, f64), f: F) -> Result<Self> {
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::invalid_config("integrand domain must satisfy s_min < s_max"));
        }
        Ok(CustomIntegrand { name: name.to_string(), domain, f, intervals: Vec::new() })
    }

    pub fn with_interval(mut self, label: &str, a: f64, b: f64) -> Result<Self> {
        check_inside(self.domain, a, b)?;
        self.intervals.push(NamedInterval::new(label, a, b, false));
        Ok(self)
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Integrand for CustomIntegrand<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn evaluate(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    fn named_intervals(&self) -> Vec<NamedInterval> {
        self.intervals.clone()
    }
}
