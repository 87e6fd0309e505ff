//! Locating and certifying critical points of the action functional.
//!
//! * [`minimize_coercive`]: descent to a global-minimum candidate.
//! * [`deflated_multistart`]: Newton from many starts with deflation of the
//!   roots already found, for multiplicity.
//! * [`brute_force_oracle`]: exhaustive grid search for `T ≤ 3`.
//! * [`classify`]: Morse labels from Hessian eigenvalues.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, hessian, residual_inf_norm, touches_discontinuity, ProblemSpec};
use crate::error::SolverError;
use crate::grid::{h_norm, GridFunction};

mod descent;
mod multistart;
mod newton;
mod oracle;

pub use descent::{minimize_coercive, minimize_coercive_traced, DescentOutcome};
pub use multistart::{deflated_multistart, deflated_multistart_with_diagnostics, MultistartDiagnostics};
pub use oracle::brute_force_oracle;

/// Start radius used when neither the configuration nor the f-term supplies
/// one.
const FALLBACK_START_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n_starts: usize,
    /// Sup-norm radius of the start box. `None` means `2·s2` of the f-term.
    pub start_radius: Option<f64>,
    pub certify_tol: f64,
    /// Sup-norm distance under which two points are the same.
    pub dedup_tol: f64,
    /// H-norm below which a point counts as trivial.
    pub trivial_tol: f64,
    pub max_newton_iters: usize,
    pub deflation_power: f64,
    pub deflation_shift: f64,
    pub seed: u64,
    /// Starts per batch-synchronous deflation round.
    pub round_size: usize,
    /// Deflated re-solves from the same start after each success.
    pub solves_per_start: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_starts: 64,
            start_radius: None,
            certify_tol: 1e-10,
            dedup_tol: 1e-6,
            trivial_tol: 1e-8,
            max_newton_iters: 100,
            deflation_power: 2.0,
            deflation_shift: 1.0,
            seed: 0,
            round_size: 8,
            solves_per_start: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::Config(msg));
        if self.n_starts == 0 {
            return bad("n_starts must be at least 1".into());
        }
        for (name, v) in [
            ("certify_tol", self.certify_tol),
            ("dedup_tol", self.dedup_tol),
            ("trivial_tol", self.trivial_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(r) = self.start_radius {
            if !(r > 0.0) || !r.is_finite() {
                return bad(format!("start_radius must be positive, got {r}"));
            }
        }
        if !(self.deflation_power >= 1.0) {
            return bad(format!("deflation_power must be >= 1, got {}", self.deflation_power));
        }
        if !(self.deflation_shift >= 0.0) {
            return bad(format!("deflation_shift must be >= 0, got {}", self.deflation_shift));
        }
        if self.max_newton_iters == 0 || self.round_size == 0 || self.solves_per_start == 0 {
            return bad("max_newton_iters, round_size and solves_per_start must be at least 1".into());
        }
        Ok(())
    }

    /// The configured radius, else `2·s2`, else a fixed fallback.
    pub fn resolved_start_radius(&self, spec: &ProblemSpec) -> f64 {
        self.start_radius
            .or_else(|| spec.fterm().declared().s2.map(|s2| 2.0 * s2))
            .unwrap_or(FALLBACK_START_RADIUS)
    }

    /// `n_starts` points uniform in the sup-norm ball, from `seed`.
    pub fn sample_starts(&self, spec: &ProblemSpec) -> Vec<Vec<f64>> {
        let radius = self.resolved_start_radius(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_starts)
            .map(|_| (0..spec.len()).map(|_| rng.gen_range(-radius..=radius)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Morse {
    Minimum,
    Saddle,
    Maximum,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: GridFunction,
    pub residual_inf_norm: f64,
    pub energy_value: f64,
    pub morse: Morse,
    pub is_trivial: bool,
}

/// Morse label from the signs of the Hessian eigenvalues, with tolerance
/// `1e-8·(1 + max|eigenvalue|)`. Points sitting on a jump of `f` or `g`
/// have no Hessian and are labelled degenerate.
pub fn classify(x: &GridFunction, spec: &ProblemSpec) -> Morse {
    if touches_discontinuity(x, spec) {
        return Morse::Degenerate;
    }
    let eig = SymmetricEigen::new(hessian(x, spec)).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-8 * (1.0 + scale);
    if eig.iter().any(|v| v.abs() <= tol || !v.is_finite()) {
        Morse::Degenerate
    } else if eig.iter().all(|&v| v > 0.0) {
        Morse::Minimum
    } else if eig.iter().all(|&v| v < 0.0) {
        Morse::Maximum
    } else {
        Morse::Saddle
    }
}

/// Wraps `x` as a [`CriticalPoint`] if its raw residual passes `certify_tol`.
pub fn certify(x: GridFunction, spec: &ProblemSpec, cfg: &SolverConfig) -> Option<CriticalPoint> {
    let res = residual_inf_norm(&x, spec);
    if !(res <= cfg.certify_tol) {
        return None;
    }
    Some(CriticalPoint {
        residual_inf_norm: res,
        energy_value: energy(&x, spec),
        morse: classify(&x, spec),
        is_trivial: h_norm(&x) <= cfg.trivial_tol,
        point: x,
    })
}

/// Orders by energy, then lexicographically by values.
pub(crate) fn sort_points(points: &mut [CriticalPoint]) {
    points.sort_by(|a, b| {
        a.energy_value.total_cmp(&b.energy_value).then_with(|| {
            a.point
                .values()
                .iter()
                .zip(b.point.values())
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
}

/// Appends `cp` unless a point within `tol` (sup norm) is already present.
pub(crate) fn push_unique(points: &mut Vec<CriticalPoint>, cp: CriticalPoint, tol: f64) -> bool {
    if points.iter().any(|q| q.point.sup_distance(&cp.point) <= tol) {
        return false;
    }
    points.push(cp);
    true
}
