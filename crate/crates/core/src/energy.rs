//! The action functional
//!
//! ```text
//! E(x) = Σ_{k=1}^{T+1} |Δx(k-1)|^{p(k-1)} / p(k-1) + λ Σ_{k=1}^{T} F(k, x(k)) + γ Σ_{k=1}^{T} G(k, x(k))
//! ```
//!
//! split as `E = μ₁ + λJ` with `μ₁ = μ₂ + γ ΣG`, together with its gradient,
//! the strong-form residual of the boundary value problem, and the Hessian.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::SpecError;
use crate::grid::{forward_difference, CompensatedSum, GridFunction};
use crate::nonlinearity::{Nonlinearity, SharedTerm};

/// Variable exponent `p(0), ..., p(T+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentProfile {
    p: Vec<f64>,
}

impl ExponentProfile {
    pub fn new(p: Vec<f64>) -> Result<Self, SpecError> {
        if p.len() < 3 {
            return Err(SpecError::EmptyGrid);
        }
        for (index, &value) in p.iter().enumerate() {
            if !(value > 1.0) || !value.is_finite() {
                return Err(SpecError::Exponent { index, value });
            }
        }
        Ok(Self { p })
    }

    pub fn constant(len: usize, p: f64) -> Result<Self, SpecError> {
        Self::new(vec![p; len + 2])
    }

    /// `p(k) = a + b·k/(T+1)`.
    pub fn linear(len: usize, a: f64, b: f64) -> Result<Self, SpecError> {
        let n = (len + 1) as f64;
        Self::new((0..len + 2).map(|k| a + b * k as f64 / n).collect())
    }

    /// Number of interior points `T`.
    pub fn len(&self) -> usize {
        self.p.len() - 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Exponent of the edge between points `k` and `k + 1`.
    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.p[k]
    }

    pub fn p_minus(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn p_plus(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The common value if all exponents coincide.
    pub fn constant_value(&self) -> Option<f64> {
        let first = self.p[0];
        self.p.iter().all(|&v| v == first).then_some(first)
    }
}

/// Problem data: grid size, exponent profile, nonlinear terms and the two
/// positive parameters.
#[derive(Clone)]
pub struct ProblemSpec {
    exponents: ExponentProfile,
    fterm: SharedTerm,
    gterm: SharedTerm,
    gamma: f64,
    lambda: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("T", &self.len())
            .field("p", &self.exponents.values())
            .field("f", &self.fterm.name())
            .field("g", &self.gterm.name())
            .field("gamma", &self.gamma)
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        exponents: ExponentProfile,
        fterm: SharedTerm,
        gterm: SharedTerm,
        gamma: f64,
        lambda: f64,
    ) -> Result<Self, SpecError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(SpecError::Gamma(gamma));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(SpecError::Lambda(lambda));
        }
        let t = exponents.len();
        for (what, term) in [("f-term", &fterm), ("g-term", &gterm)] {
            if let Some(n) = term.sites() {
                if n != t {
                    return Err(SpecError::Length { what, got: n, expected: t });
                }
            }
        }
        Ok(Self {
            exponents,
            fterm,
            gterm,
            gamma,
            lambda,
        })
    }

    /// Same problem with other parameter values.
    pub fn with_params(&self, gamma: f64, lambda: f64) -> Result<Self, SpecError> {
        Self::new(
            self.exponents.clone(),
            Arc::clone(&self.fterm),
            Arc::clone(&self.gterm),
            gamma,
            lambda,
        )
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn exponents(&self) -> &ExponentProfile {
        &self.exponents
    }

    pub fn fterm(&self) -> &dyn Nonlinearity {
        self.fterm.as_ref()
    }

    pub fn gterm(&self) -> &dyn Nonlinearity {
        self.gterm.as_ref()
    }

    pub fn shared_fterm(&self) -> SharedTerm {
        Arc::clone(&self.fterm)
    }

    pub fn shared_gterm(&self) -> SharedTerm {
        Arc::clone(&self.gterm)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn check_point(&self, x: &GridFunction) -> Result<(), SpecError> {
        if x.len() != self.len() {
            return Err(SpecError::Dimension {
                got: x.len(),
                expected: self.len(),
            });
        }
        Ok(())
    }

    pub fn require_p_minus_two(&self) -> Result<(), SpecError> {
        let pm = self.exponents.p_minus();
        if pm < 2.0 {
            return Err(SpecError::ExponentBelowTwo(pm));
        }
        Ok(())
    }

    fn assert_dims(&self, x: &GridFunction) {
        assert_eq!(
            x.len(),
            self.len(),
            "grid function has T = {}, problem has T = {}",
            x.len(),
            self.len()
        );
    }
}

/// `|t|^p / p`.
#[inline]
fn edge_energy(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        0.5 * t * t
    } else {
        t.abs().powf(p) / p
    }
}

/// `|t|^{p-2} t`, evaluated as `sgn(t)|t|^{p-1}` with value 0 at `t = 0`.
#[inline]
pub fn flux(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(p - 1.0)
    }
}

/// `d/dt (|t|^{p-2} t) = (p-1)|t|^{p-2}`.
#[inline]
pub fn flux_slope(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if t == 0.0 {
        if p > 2.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (p - 1.0) * t.abs().powf(p - 2.0)
    }
}

/// `μ₂(x) = Σ_{k=1}^{T+1} |Δx(k-1)|^{p(k-1)} / p(k-1)`.
pub fn mu2(x: &GridFunction, spec: &ProblemSpec) -> f64 {
    spec.assert_dims(x);
    let mut acc = CompensatedSum::new();
    push_edges(&mut acc, x, spec);
    acc.value()
}

/// `Σ_{k=1}^{T+1} |Δx(k-1)|^{p(k-1)}` (without the `1/p` weights).
pub fn modular(x: &GridFunction, exponents: &ExponentProfile) -> f64 {
    forward_difference(x)
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.abs().powf(exponents.at(i)))
        .collect::<CompensatedSum>()
        .value()
}

fn push_edges(acc: &mut CompensatedSum, x: &GridFunction, spec: &ProblemSpec) {
    for (i, d) in forward_difference(x).into_iter().enumerate() {
        acc.add(edge_energy(d, spec.exponents.at(i)));
    }
}

/// `Σ_{k=1}^{T} G(k, x(k))`.
pub fn g_sum(x: &GridFunction, spec: &ProblemSpec) -> f64 {
    spec.assert_dims(x);
    x.interior()
        .iter()
        .enumerate()
        .map(|(i, &v)| spec.gterm.antiderivative(i + 1, v))
        .collect::<CompensatedSum>()
        .value()
}

/// `μ₁(x) = μ₂(x) + γ Σ G(k, x(k))`.
pub fn mu1(x: &GridFunction, spec: &ProblemSpec) -> f64 {
    spec.assert_dims(x);
    let mut acc = CompensatedSum::new();
    push_edges(&mut acc, x, spec);
    for (i, &v) in x.interior().iter().enumerate() {
        acc.add(spec.gamma * spec.gterm.antiderivative(i + 1, v));
    }
    acc.value()
}

/// `J(x) = Σ_{k=1}^{T} F(k, x(k))`.
pub fn j_term(x: &GridFunction, spec: &ProblemSpec) -> f64 {
    spec.assert_dims(x);
    x.interior()
        .iter()
        .enumerate()
        .map(|(i, &v)| spec.fterm.antiderivative(i + 1, v))
        .collect::<CompensatedSum>()
        .value()
}

/// The action functional `E_{γ,λ}(x)`.
pub fn energy(x: &GridFunction, spec: &ProblemSpec) -> f64 {
    spec.assert_dims(x);
    let mut acc = CompensatedSum::new();
    push_edges(&mut acc, x, spec);
    for (i, &v) in x.interior().iter().enumerate() {
        let k = i + 1;
        acc.add(spec.lambda * spec.fterm.antiderivative(k, v));
        acc.add(spec.gamma * spec.gterm.antiderivative(k, v));
    }
    acc.value()
}

/// `⟨E'(x), e_j⟩` for `j = 1..=T`, assembled from the weak form: every edge
/// contributes `φ(Δx)·Δv` to its two end points.
pub fn gradient(x: &GridFunction, spec: &ProblemSpec) -> Vec<f64> {
    spec.assert_dims(x);
    let t = spec.len();
    let mut grad = vec![0.0; t];
    for (i, d) in forward_difference(x).into_iter().enumerate() {
        let q = flux(d, spec.exponents.at(i));
        // edge i joins points i and i + 1; Δv = v(i+1) - v(i)
        if i >= 1 {
            grad[i - 1] -= q;
        }
        if i < t {
            grad[i] += q;
        }
    }
    for (j, g) in grad.iter_mut().enumerate() {
        let k = j + 1;
        let v = x.at(k);
        *g += spec.lambda * spec.fterm.value(k, v) + spec.gamma * spec.gterm.value(k, v);
    }
    grad
}

/// Strong-form residual
/// `-Δ(|Δx(k-1)|^{p(k-1)-2} Δx(k-1)) + γ g(k, x(k)) + λ f(k, x(k))`, `k = 1..=T`.
pub fn residual(x: &GridFunction, spec: &ProblemSpec) -> Vec<f64> {
    spec.assert_dims(x);
    let v = x.values();
    let p = &spec.exponents;
    (1..=spec.len())
        .map(|k| {
            let back = flux(v[k] - v[k - 1], p.at(k - 1));
            let fwd = flux(v[k + 1] - v[k], p.at(k));
            -(fwd - back) + spec.gamma * spec.gterm.value(k, v[k]) + spec.lambda * spec.fterm.value(k, v[k])
        })
        .collect()
}

/// Largest absolute residual component.
pub fn residual_inf_norm(x: &GridFunction, spec: &ProblemSpec) -> f64 {
    residual(x, spec).into_iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// Dense `T × T` Hessian of `E`: the tridiagonal second derivative of the
/// difference part plus `diag(λ ∂ₜf + γ ∂ₜg)`.
pub fn hessian(x: &GridFunction, spec: &ProblemSpec) -> DMatrix<f64> {
    spec.assert_dims(x);
    let t = spec.len();
    let mut h = DMatrix::zeros(t, t);
    for (i, d) in forward_difference(x).into_iter().enumerate() {
        let c = flux_slope(d, spec.exponents.at(i));
        let (a, b) = (i.checked_sub(1), (i < t).then_some(i));
        if let Some(a) = a {
            h[(a, a)] += c;
        }
        if let Some(b) = b {
            h[(b, b)] += c;
        }
        if let (Some(a), Some(b)) = (a, b) {
            h[(a, b)] -= c;
            h[(b, a)] -= c;
        }
    }
    for j in 0..t {
        let k = j + 1;
        let v = x.at(k);
        h[(j, j)] += spec.lambda * spec.fterm.derivative(k, v) + spec.gamma * spec.gterm.derivative(k, v);
    }
    h
}

/// True if some interior value sits on a jump of f or g, where the Hessian
/// does not exist.
pub fn touches_discontinuity(x: &GridFunction, spec: &ProblemSpec) -> bool {
    let mut jumps = spec.fterm.discontinuities();
    jumps.extend(spec.gterm.discontinuities());
    x.interior().iter().any(|v| jumps.contains(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{example1_pair, GVariant, LinearTerm, ZeroTerm};

    fn free_spec(t: usize, p: f64) -> ProblemSpec {
        ProblemSpec::new(
            ExponentProfile::constant(t, p).unwrap(),
            Arc::new(ZeroTerm),
            Arc::new(ZeroTerm),
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn example_spec(t: usize, variant: GVariant, gamma: f64, lambda: f64) -> ProblemSpec {
        let (f, g) = example1_pair(variant, vec![1.0; t], vec![1.0; t]).unwrap();
        ProblemSpec::new(ExponentProfile::constant(t, 2.0).unwrap(), f, g, gamma, lambda).unwrap()
    }

    #[test]
    fn spec_validation() {
        let e = ExponentProfile::constant(3, 2.0).unwrap();
        let z: SharedTerm = Arc::new(ZeroTerm);
        assert!(matches!(
            ProblemSpec::new(e.clone(), z.clone(), z.clone(), 0.0, 1.0),
            Err(SpecError::Gamma(_))
        ));
        assert!(matches!(
            ProblemSpec::new(e, z.clone(), z, 1.0, -1.0),
            Err(SpecError::Lambda(_))
        ));
        assert!(matches!(
            ExponentProfile::new(vec![2.0, 1.0, 2.0]),
            Err(SpecError::Exponent { index: 1, .. })
        ));
    }

    #[test]
    fn exponent_profiles() {
        let lin = ExponentProfile::linear(3, 2.0, 1.0).unwrap();
        assert_eq!(lin.values(), &[2.0, 2.25, 2.5, 2.75, 3.0]);
        assert_eq!(lin.p_minus(), 2.0);
        assert_eq!(lin.p_plus(), 3.0);
        assert_eq!(lin.constant_value(), None);
        assert_eq!(ExponentProfile::constant(2, 3.0).unwrap().constant_value(), Some(3.0));
    }

    #[test]
    fn mu2_examples() {
        let s = free_spec(4, 2.0);
        assert_eq!(mu2(&GridFunction::zeros(4), &s), 0.0);
        let x = GridFunction::from_interior(&[0.3, -1.0, 2.0, 0.5]).unwrap();
        let h = crate::grid::h_norm(&x);
        assert!((mu2(&x, &s) - 0.5 * h * h).abs() < 1e-14);
        let s3 = free_spec(4, 3.0);
        assert!((mu2(&GridFunction::spike(4, 2, 1.0), &s3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mu1_and_energy_examples() {
        let s = example_spec(4, GVariant::CorrectedOddG, 1.0, 1.0);
        let z = GridFunction::zeros(4);
        assert_eq!(mu1(&z, &s), 0.0);
        assert_eq!(energy(&z, &s), 0.0);
        let x = GridFunction::spike(4, 2, 1.0);
        let g1 = s.gterm().antiderivative(2, 1.0);
        assert!((g1 + 0.2468).abs() < 1e-4);
        assert!((mu1(&x, &s) - (1.0 + g1)).abs() < 1e-15);
        let e = energy(&x, &s);
        assert!((e - (1.0 + 0.25 + g1)).abs() < 1e-15);
        assert!((e - 1.0032).abs() < 1e-4);
    }

    #[test]
    fn j_term_examples() {
        let t = 5;
        let s = example_spec(t, GVariant::CorrectedOddG, 0.1, 1.0);
        let six = GridFunction::from_interior(&[6.0; 5]).unwrap();
        assert_eq!(j_term(&six, &s), -(t as f64));
        let two = GridFunction::from_interior(&[2.0; 5]).unwrap();
        assert_eq!(j_term(&two, &s), t as f64);
        assert_eq!(j_term(&GridFunction::zeros(t), &s), 0.0);
    }

    #[test]
    fn linear_case_gradient() {
        let f: SharedTerm = Arc::new(LinearTerm { slope: 0.7 });
        let g: SharedTerm = Arc::new(LinearTerm { slope: -0.2 });
        let s = ProblemSpec::new(ExponentProfile::constant(3, 2.0).unwrap(), f, g, 0.5, 2.0).unwrap();
        let x = GridFunction::from_interior(&[1.0, -2.0, 0.5]).unwrap();
        let grad = gradient(&x, &s);
        let v = x.values();
        for j in 1..=3 {
            let expect = 2.0 * v[j] - v[j - 1] - v[j + 1] + 2.0 * 0.7 * v[j] + 0.5 * -0.2 * v[j];
            assert!((grad[j - 1] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn origin_residuals() {
        let corrected = example_spec(3, GVariant::CorrectedOddG, 0.3, 1.0);
        let z = GridFunction::zeros(3);
        assert_eq!(residual(&z, &corrected), vec![0.0; 3]);
        assert_eq!(gradient(&z, &corrected), vec![0.0; 3]);
        let uncorrected = example_spec(3, GVariant::PaperG, 0.3, 1.0);
        for r in residual(&z, &uncorrected) {
            assert!((r + 0.5 * 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn hessian_linear_and_degenerate() {
        let h = hessian(&GridFunction::from_interior(&[0.1, 5.0, -2.0]).unwrap(), &free_spec(3, 2.0));
        let lap = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        assert_eq!(h, lap);
        let h3 = hessian(&GridFunction::zeros(3), &free_spec(3, 3.0));
        assert_eq!(h3, DMatrix::zeros(3, 3));
    }

    #[test]
    fn flux_is_exact_at_zero() {
        assert_eq!(flux(0.0, 2.0), 0.0);
        assert_eq!(flux(0.0, 2.5), 0.0);
        assert_eq!(flux(-2.0, 3.0), -4.0);
        assert_eq!(flux_slope(0.0, 3.0), 0.0);
        assert_eq!(flux_slope(0.0, 2.0), 1.0);
    }
}
