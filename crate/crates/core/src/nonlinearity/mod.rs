//! Nonlinear reaction terms `f`, `g` together with their antiderivatives
//! `F(k, t) = ∫₀ᵗ f(k, s) ds` and `G(k, t) = ∫₀ᵗ g(k, s) ds`.
//!
//! Sites are numbered like grid points, `k = 1..=T`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::NonlinearityError;

mod assumptions;
mod example1;
mod quadrature;

pub use assumptions::{
    verify_assumptions, AssumptionCheck, AssumptionReport, SamplingConfig, Verdict, Witness,
};
pub use example1::{
    example1_pair, gaussian_g_zero, Example1F, Example1G, GVariant, EXAMPLE1_M, EXAMPLE1_S,
};
pub use quadrature::{anti_by_quadrature, integrate, Integral};

/// Constants a nonlinearity may declare about itself. `m`, `s1`, `s2` belong
/// to the f-term and `m1` to the g-term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    pub m: Option<f64>,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub m1: Option<f64>,
}

/// The structural constants `m > 0`, `s2 >= s1 > m` and `M1 > 0` of a
/// nonlinearity pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub m: f64,
    pub s1: f64,
    pub s2: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
}

impl StructuralConstants {
    pub fn new(m: f64, s1: f64, s2: f64, m1: f64) -> Result<Self, NonlinearityError> {
        if !(m > 0.0) {
            return Err(NonlinearityError::InvalidConstants(format!("m = {m} must be positive")));
        }
        if !(s1 > m && s2 >= s1) {
            return Err(NonlinearityError::InvalidConstants(format!(
                "need s2 >= s1 > m, got m = {m}, s1 = {s1}, s2 = {s2}"
            )));
        }
        if !(m1 > 0.0) {
            return Err(NonlinearityError::InvalidConstants(format!("M1 = {m1} must be positive")));
        }
        Ok(Self { m, s1, s2, m1 })
    }

    /// Collects `m, s1, s2` from the f-term and `M1` from the g-term.
    pub fn from_terms(f: &dyn Nonlinearity, g: &dyn Nonlinearity) -> Result<Self, NonlinearityError> {
        let fd = f.declared();
        let gd = g.declared();
        Self::new(
            fd.m.ok_or(NonlinearityError::MissingConstant("m"))?,
            fd.s1.ok_or(NonlinearityError::MissingConstant("s1"))?,
            fd.s2.ok_or(NonlinearityError::MissingConstant("s2"))?,
            gd.m1.ok_or(NonlinearityError::MissingConstant("M1"))?,
        )
    }
}

/// A site-dependent scalar nonlinearity with a known antiderivative.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// `f(k, t)`.
    fn value(&self, site: usize, t: f64) -> f64;

    /// `F(k, t) = ∫₀ᵗ f(k, s) ds`.
    fn antiderivative(&self, site: usize, t: f64) -> f64;

    /// `∂ₜ f(k, t)`. At a kink the derivative of the branch owning `t` is
    /// returned.
    fn derivative(&self, site: usize, t: f64) -> f64 {
        finite_difference_derivative(self, site, t)
    }

    /// Points where `value` is continuous but not differentiable.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Points where `value` jumps.
    fn discontinuities(&self) -> Vec<f64> {
        Vec::new()
    }

    fn declared(&self) -> DeclaredConstants {
        DeclaredConstants::default()
    }

    /// Number of sites the term is defined on, if it carries per-site data.
    fn sites(&self) -> Option<usize> {
        None
    }

    /// Closed-form `inf_t G(k, t)` when known.
    fn infimum(&self, _site: usize) -> Option<f64> {
        None
    }
}

pub type SharedTerm = Arc<dyn Nonlinearity>;

/// Central difference with step `1e-7·max(1, |t|)`, switched to a one-sided
/// difference when a kink or jump lies inside the stencil.
pub fn finite_difference_derivative<N: Nonlinearity + ?Sized>(nl: &N, site: usize, t: f64) -> f64 {
    let h = 1e-7 * t.abs().max(1.0);
    let mut breaks = nl.kinks();
    breaks.extend(nl.discontinuities());
    let left_break = breaks.iter().any(|&b| b > t - h && b <= t);
    let right_break = breaks.iter().any(|&b| b > t && b < t + h);
    match (left_break, right_break) {
        (false, false) => (nl.value(site, t + h) - nl.value(site, t - h)) / (2.0 * h),
        (true, false) => (nl.value(site, t + h) - nl.value(site, t)) / h,
        (false, true) => (nl.value(site, t) - nl.value(site, t - h)) / h,
        (true, true) => {
            let h = h * 1e-3;
            (nl.value(site, t + h) - nl.value(site, t)) / h
        }
    }
}

/// `f ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroTerm;

impl Nonlinearity for ZeroTerm {
    fn name(&self) -> String {
        "zero".into()
    }
    fn value(&self, _: usize, _: f64) -> f64 {
        0.0
    }
    fn antiderivative(&self, _: usize, _: f64) -> f64 {
        0.0
    }
    fn derivative(&self, _: usize, _: f64) -> f64 {
        0.0
    }
}

/// `f(k, t) = c·t`.
#[derive(Debug, Clone, Copy)]
pub struct LinearTerm {
    pub slope: f64,
}

impl Nonlinearity for LinearTerm {
    fn name(&self) -> String {
        format!("linear:{}", self.slope)
    }
    fn value(&self, _: usize, t: f64) -> f64 {
        self.slope * t
    }
    fn antiderivative(&self, _: usize, t: f64) -> f64 {
        0.5 * self.slope * t * t
    }
    fn derivative(&self, _: usize, _: f64) -> f64 {
        self.slope
    }
}

/// `f(k, t) = t³ - t`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CubicTerm;

impl Nonlinearity for CubicTerm {
    fn name(&self) -> String {
        "cubic".into()
    }
    fn value(&self, _: usize, t: f64) -> f64 {
        t * t * t - t
    }
    fn antiderivative(&self, _: usize, t: f64) -> f64 {
        let t2 = t * t;
        0.25 * t2 * t2 - 0.5 * t2
    }
    fn derivative(&self, _: usize, t: f64) -> f64 {
        3.0 * t * t - 1.0
    }
}

/// `f(k, t) = c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTerm {
    pub c: f64,
}

impl Nonlinearity for ConstantTerm {
    fn name(&self) -> String {
        format!("constant:{}", self.c)
    }
    fn value(&self, _: usize, _: f64) -> f64 {
        self.c
    }
    fn antiderivative(&self, _: usize, t: f64) -> f64 {
        self.c * t
    }
    fn derivative(&self, _: usize, _: f64) -> f64 {
        0.0
    }
}

/// A user nonlinearity given only by its values; the antiderivative is
/// computed by adaptive quadrature.
pub struct QuadratureTerm<F> {
    name: String,
    eval: F,
    tol: f64,
    declared: DeclaredConstants,
}

impl<F> QuadratureTerm<F>
where
    F: Fn(usize, f64) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, eval: F) -> Self {
        Self {
            name: name.into(),
            eval,
            tol: 1e-12,
            declared: DeclaredConstants::default(),
        }
    }

    pub fn with_declared(mut self, declared: DeclaredConstants) -> Self {
        self.declared = declared;
        self
    }
}

impl<F> fmt::Debug for QuadratureTerm<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadratureTerm").field("name", &self.name).finish()
    }
}

impl<F> Nonlinearity for QuadratureTerm<F>
where
    F: Fn(usize, f64) -> f64 + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }
    fn value(&self, site: usize, t: f64) -> f64 {
        (self.eval)(site, t)
    }
    fn antiderivative(&self, site: usize, t: f64) -> f64 {
        // Unconverged integrals still return the best estimate.
        integrate(|s| (self.eval)(site, s), 0.0, t, self.tol, &[]).value
    }
    fn declared(&self) -> DeclaredConstants {
        self.declared
    }
}
