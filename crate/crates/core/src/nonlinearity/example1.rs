//! The five-branch piecewise f-term and the Gaussian g-term, in the original
//! form and in a sign-corrected form whose antiderivative is even.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DeclaredConstants, Nonlinearity, SharedTerm};
use crate::error::NonlinearityError;

/// `m` for the piecewise f-term: `F > 0` on `[-2, 2] \ {0}`.
pub const EXAMPLE1_M: f64 = 2.0;
/// `s1 = s2` for the piecewise f-term: `F(k, 6) < 0`.
pub const EXAMPLE1_S: f64 = 6.0;

const KINKS: [f64; 8] = [-8.0, -6.0, -4.0, -2.0, 2.0, 4.0, 6.0, 8.0];

fn check_positive(name: &'static str, coeffs: &[f64]) -> Result<(), NonlinearityError> {
    for (i, &v) in coeffs.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(NonlinearityError::NonPositiveCoefficient {
                name,
                site: i + 1,
                value: v,
            });
        }
    }
    Ok(())
}

/// Piecewise f with continuous branches joined at `|x| ∈ {2, 4, 6, 8}`:
///
/// ```text
/// α(k)·x/2              |x| < 2
/// α(k)·(-x + 3 sgn x)   2 ≤ |x| < 4
/// α(k)·(-sgn x)         4 ≤ |x| < 6
/// α(k)·(x - 7 sgn x)    6 ≤ |x| < 8
/// α(k)·sgn x·e^{8-|x|}  |x| ≥ 8
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Example1F {
    alpha: Vec<f64>,
}

impl Example1F {
    pub fn new(alpha: Vec<f64>) -> Result<Self, NonlinearityError> {
        check_positive("alpha", &alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    #[inline]
    fn coeff(&self, site: usize) -> f64 {
        self.alpha[site - 1]
    }
}

/// Branch profile on `a = |x|` (the odd extension gives f).
fn f_profile(a: f64) -> f64 {
    if a < 2.0 {
        0.5 * a
    } else if a < 4.0 {
        3.0 - a
    } else if a < 6.0 {
        -1.0
    } else if a < 8.0 {
        a - 7.0
    } else {
        (8.0 - a).exp()
    }
}

fn f_profile_slope(a: f64) -> f64 {
    if a < 2.0 {
        0.5
    } else if a < 4.0 {
        -1.0
    } else if a < 6.0 {
        0.0
    } else if a < 8.0 {
        1.0
    } else {
        -(8.0 - a).exp()
    }
}

/// Antiderivative of the profile from 0 to `a`, assembled branch by branch.
fn f_profile_anti(a: f64) -> f64 {
    if a < 2.0 {
        0.25 * a * a
    } else if a < 4.0 {
        -0.5 * a * a + 3.0 * a - 3.0
    } else if a < 6.0 {
        5.0 - a
    } else if a < 8.0 {
        0.5 * a * a - 7.0 * a + 23.0
    } else {
        -(8.0 - a).exp()
    }
}

impl Nonlinearity for Example1F {
    fn name(&self) -> String {
        "example1-f".into()
    }

    fn value(&self, site: usize, t: f64) -> f64 {
        let v = f_profile(t.abs());
        let v = if t < 0.0 { -v } else { v };
        self.coeff(site) * v
    }

    fn antiderivative(&self, site: usize, t: f64) -> f64 {
        self.coeff(site) * f_profile_anti(t.abs())
    }

    fn derivative(&self, site: usize, t: f64) -> f64 {
        self.coeff(site) * f_profile_slope(t.abs())
    }

    fn kinks(&self) -> Vec<f64> {
        KINKS.to_vec()
    }

    fn sites(&self) -> Option<usize> {
        Some(self.alpha.len())
    }

    fn declared(&self) -> DeclaredConstants {
        DeclaredConstants {
            m: Some(EXAMPLE1_M),
            s1: Some(EXAMPLE1_S),
            s2: Some(EXAMPLE1_S),
            m1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GVariant {
    /// `g = β(0.5 - e^{-x²})`; G is odd.
    PaperG,
    /// `g = β·sgn(x)·(0.5 - e^{-x²})`; G is even.
    CorrectedOddG,
}

/// `∫₀ᵗ (0.5 - e^{-s²}) ds = 0.5t - (√π/2)·erf(t)`.
fn gaussian_anti(t: f64) -> f64 {
    0.5 * t - 0.5 * PI.sqrt() * libm::erf(t)
}

/// Positive zero of `0.5t - ∫₀ᵗ e^{-s²} ds`, by bisection to width `1e-10`.
/// The returned value is the lower end of the final bracket, so the
/// antiderivative is still non-positive there.
pub fn gaussian_g_zero() -> f64 {
    let (mut lo, mut hi) = (1.0, 3.0);
    debug_assert!(gaussian_anti(lo) < 0.0 && gaussian_anti(hi) > 0.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if gaussian_anti(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1G {
    beta: Vec<f64>,
    variant: GVariant,
    m1: f64,
}

impl Example1G {
    pub fn new(beta: Vec<f64>, variant: GVariant) -> Result<Self, NonlinearityError> {
        check_positive("beta", &beta)?;
        Ok(Self {
            beta,
            variant,
            m1: gaussian_g_zero(),
        })
    }

    pub fn variant(&self) -> GVariant {
        self.variant
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    #[inline]
    fn coeff(&self, site: usize) -> f64 {
        self.beta[site - 1]
    }
}

impl Nonlinearity for Example1G {
    fn name(&self) -> String {
        match self.variant {
            GVariant::PaperG => "example1-g-uncorrected".into(),
            GVariant::CorrectedOddG => "example1-g-corrected".into(),
        }
    }

    fn value(&self, site: usize, t: f64) -> f64 {
        let base = 0.5 - (-t * t).exp();
        let v = match self.variant {
            GVariant::PaperG => base,
            GVariant::CorrectedOddG if t > 0.0 => base,
            GVariant::CorrectedOddG if t < 0.0 => -base,
            GVariant::CorrectedOddG => 0.0,
        };
        self.coeff(site) * v
    }

    fn antiderivative(&self, site: usize, t: f64) -> f64 {
        let v = match self.variant {
            GVariant::PaperG => gaussian_anti(t),
            GVariant::CorrectedOddG => gaussian_anti(t.abs()),
        };
        self.coeff(site) * v
    }

    fn derivative(&self, site: usize, t: f64) -> f64 {
        let v = match self.variant {
            GVariant::PaperG => 2.0 * t * (-t * t).exp(),
            // Both one-sided limits at the jump are 0.
            GVariant::CorrectedOddG => 2.0 * t.abs() * (-t * t).exp(),
        };
        self.coeff(site) * v
    }

    fn discontinuities(&self) -> Vec<f64> {
        match self.variant {
            GVariant::PaperG => Vec::new(),
            GVariant::CorrectedOddG => vec![0.0],
        }
    }

    fn declared(&self) -> DeclaredConstants {
        DeclaredConstants {
            m1: Some(self.m1),
            ..DeclaredConstants::default()
        }
    }

    fn sites(&self) -> Option<usize> {
        Some(self.beta.len())
    }

    fn infimum(&self, site: usize) -> Option<f64> {
        // g vanishes where e^{-t²} = 1/2; for the corrected variant that is the
        // global minimum of the even G, which increases beyond it. The uncorrected
        // variant is unbounded below as t -> -∞.
        match self.variant {
            GVariant::CorrectedOddG => Some(self.coeff(site) * gaussian_anti(2f64.ln().sqrt())),
            GVariant::PaperG => Some(f64::NEG_INFINITY),
        }
    }
}

/// The f-term and g-term of the built-in example pair.
pub fn example1_pair(
    variant: GVariant,
    alpha: Vec<f64>,
    beta: Vec<f64>,
) -> Result<(SharedTerm, SharedTerm), NonlinearityError> {
    let f: SharedTerm = Arc::new(Example1F::new(alpha)?);
    let g: SharedTerm = Arc::new(Example1G::new(beta, variant)?);
    Ok((f, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::anti_by_quadrature;

    fn unit_f() -> Example1F {
        Example1F::new(vec![1.0; 3]).unwrap()
    }

    #[test]
    fn f_antiderivative_reference_values() {
        let f = Example1F::new(vec![1.0, 2.5, 0.3]).unwrap();
        for k in 1..=3 {
            let a = f.alpha()[k - 1];
            assert_eq!(f.antiderivative(k, 2.0), a);
            assert_eq!(f.antiderivative(k, 6.0), -a);
            assert_eq!(f.antiderivative(k, 4.0), a);
            assert_eq!(f.antiderivative(k, -6.0), -a);
            for &x in &[0.3, -1.1, 1.9] {
                assert!((f.antiderivative(k, x) - a * x * x / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn f_antiderivative_matches_quadrature() {
        let f = unit_f();
        for &t in &[2.0, 4.0, 6.0, -6.0, 7.3, 11.0, -9.5] {
            let q = anti_by_quadrature(&f, 1, t, 1e-12).unwrap();
            assert!((q - f.antiderivative(1, t)).abs() < 1e-11, "t = {t}");
        }
        assert!((anti_by_quadrature(&f, 1, 6.0, 1e-9).unwrap() + 1.0).abs() <= 1e-9);
    }

    #[test]
    fn f_branches_are_continuous() {
        // Left-hand branch formula evaluated exactly at each junction.
        let left_limits = [(2.0, 0.5 * 2.0), (4.0, 3.0 - 4.0), (6.0, -1.0), (8.0, 8.0 - 7.0)];
        let f = unit_f();
        for (b, left) in left_limits {
            assert_eq!(f_profile(b), left, "jump at {b}");
            assert_eq!(f.value(1, b), left);
            assert_eq!(f.value(1, -b), -left);
        }
    }

    #[test]
    fn gaussian_zero_near_one_point_seven_five() {
        let m1 = gaussian_g_zero();
        assert!((m1 - 1.75).abs() < 0.01, "{m1}");
        assert!(gaussian_anti(m1) <= 0.0);
        assert!(gaussian_anti(m1 + 1e-9) > 0.0);
    }

    #[test]
    fn g_variants_symmetry() {
        let beta = vec![1.0, 3.0];
        let uncorrected = Example1G::new(beta.clone(), GVariant::PaperG).unwrap();
        let corr = Example1G::new(beta, GVariant::CorrectedOddG).unwrap();
        for k in 1..=2 {
            for i in 0..200 {
                let t = -10.0 + 0.1 * i as f64;
                assert!((uncorrected.antiderivative(k, t) + uncorrected.antiderivative(k, -t)).abs() < 1e-12);
                assert!((corr.antiderivative(k, t) - corr.antiderivative(k, -t)).abs() < 1e-12);
            }
        }
        assert_eq!(corr.value(1, 0.0), 0.0);
        assert_eq!(uncorrected.value(1, 0.0), -0.5);
    }

    #[test]
    fn g_at_one() {
        let g = Example1G::new(vec![1.0], GVariant::CorrectedOddG).unwrap();
        let expected = 0.5 - anti_by_quadrature(
            &crate::nonlinearity::QuadratureTerm::new("gauss", |_, s: f64| (-s * s).exp()),
            1,
            1.0,
            1e-14,
        )
        .unwrap();
        assert!((g.antiderivative(1, 1.0) - expected).abs() < 1e-13);
        assert!((g.antiderivative(1, 1.0) + 0.2468).abs() < 1e-4);
    }

    #[test]
    fn corrected_g_infimum_matches_dense_sampling() {
        let g = Example1G::new(vec![2.0], GVariant::CorrectedOddG).unwrap();
        let sampled = (0..=200_000)
            .map(|i| -10.0 + 1e-4 * i as f64)
            .map(|t| g.antiderivative(1, t))
            .fold(f64::INFINITY, f64::min);
        let closed = g.infimum(1).unwrap();
        assert!(closed <= sampled + 1e-12);
        assert!(sampled - closed < 1e-8);
    }

    #[test]
    fn rejects_non_positive_coefficients() {
        assert!(matches!(
            Example1F::new(vec![1.0, 0.0]),
            Err(NonlinearityError::NonPositiveCoefficient { name: "alpha", site: 2, .. })
        ));
        assert!(Example1G::new(vec![-1.0], GVariant::PaperG).is_err());
    }
}
