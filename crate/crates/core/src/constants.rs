//! Constants bounding the parameter `γ`, and sampling checks of the
//! implications each constant is meant to guarantee.
//!
//! For `‖x‖ ≤ 1` every forward difference satisfies `|Δx| ≤ 1`, so
//! `μ₂(x) ≥ Σ|Δx|^{p⁺}/p⁺ ≥ (T+1)^{(2-p⁺)/2}·‖x‖^{p⁺}/p⁺` by the power-mean
//! inequality over the `T + 1` edges. All small-ball radii below use that
//! factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{g_sum, mu1, mu2, ProblemSpec};
use crate::error::ConstantsError;
use crate::grid::{h_norm, sup_norm, GridFunction};
use crate::nonlinearity::{verify_assumptions, Nonlinearity, SamplingConfig, StructuralConstants, Verdict};

pub const DEFAULT_R_FRACTION: f64 = 0.5;

/// Radii at which the liminf of `G(k, t)/|t|` is read off.
const TAIL_RADII: [f64; 2] = [1e4, 1e6];
const SCAN_STEP: f64 = 0.01;
/// Dense scan window for the tail threshold.
const TAIL_WINDOW: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    /// `‖x‖^{p⁻} ≥ c·Σ|x(k)|^{p⁻}`.
    pub c: f64,
    pub c1: f64,
    pub r_star: f64,
    pub r1: f64,
    pub r2: f64,
    pub r: f64,
    /// Global lower bound of `G`.
    pub l: f64,
    /// Positive slope below `liminf G(k, t)/|t|`.
    pub d: f64,
    /// `G(k, t)/|t| > d/2` for `|t| > t_star` and every `k`.
    pub t_star: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    pub m: f64,
    pub gamma_max: f64,
    /// `‖x‖ ≥ M_coerc` implies `μ₁(x) ≥ μ₂(x)`.
    #[serde(rename = "M_coerc")]
    pub m_coerc: f64,
    pub r_fraction: f64,
    pub p_minus: f64,
    pub p_plus: f64,
}

/// `(T+1)^{(2-p)/2}/p`, the lower bound of `μ₂` on the unit sphere when all
/// exponents are at most `p`.
fn unit_sphere_factor(len: usize, p: f64) -> f64 {
    ((len + 1) as f64).powf(0.5 * (2.0 - p)) / p
}

/// `(r_star, r1, r2)`: `μ₂(x) ≤ r_star` forces `‖x‖ ≤ 1`, and `μ₂(x) ≤ r2`
/// forces `‖x‖ ≤ 2·min(m, M1)/√(T+1)`, hence `‖x‖_C ≤ min(m, M1)`.
fn small_ball_radii(len: usize, p_plus: f64, m: f64, m1: f64) -> (f64, f64, f64) {
    let r_star = unit_sphere_factor(len, p_plus);
    let ball = |radius: f64| (2.0 * radius / ((len + 1) as f64).sqrt()).powf(p_plus) * r_star;
    let r1 = ball(m1).min(r_star);
    (r_star, r1, ball(m).min(r1))
}

/// Smallest radius beyond which `G(k, t)/|t| > level` for every site,
/// located on a scan of `[-window, window]` and refined by bisection.
/// Returns `None` if the ratio fails at the edge of the window or on a
/// logarithmic probe of `[window, max(TAIL_RADII)]`.
fn tail_threshold(g: &dyn Nonlinearity, sites: usize, level: f64, window: f64) -> Option<f64> {
    let ratio = |k: usize, t: f64| g.antiderivative(k, t) / t.abs();
    let n = (window / SCAN_STEP).ceil() as usize;
    let outer = TAIL_RADII[TAIL_RADII.len() - 1];
    let mut threshold: f64 = 0.0;
    for k in 1..=sites {
        for sign in [-1.0, 1.0] {
            let far_ok = (0..=200).all(|j| {
                let t = window * (outer / window).powf(j as f64 / 200.0);
                ratio(k, sign * t) > level
            });
            if !far_ok {
                return None;
            }
            // last grid point (from the origin outward) where the ratio fails
            let last_bad = (1..=n).rev().find(|&i| ratio(k, sign * i as f64 * SCAN_STEP) <= level);
            let Some(i) = last_bad else { continue };
            let (mut lo, mut hi) = (i as f64 * SCAN_STEP, (i + 1) as f64 * SCAN_STEP);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ratio(k, sign * mid) <= level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            threshold = threshold.max(hi);
        }
    }
    Some(threshold)
}

/// Minimum of `G` over all sites on `[-window, window]`: a dense scan
/// followed by golden-section refinement around each site's best sample.
fn sampled_infimum(g: &dyn Nonlinearity, sites: usize, window: f64) -> f64 {
    let n = (window / SCAN_STEP).ceil() as i64;
    let mut best = f64::INFINITY;
    for k in 1..=sites {
        let (mut arg, mut val) = (0.0, g.antiderivative(k, 0.0));
        for i in -n..=n {
            let t = i as f64 * SCAN_STEP;
            let v = g.antiderivative(k, t);
            if v < val {
                (arg, val) = (t, v);
            }
        }
        let refined = golden_section(|t| g.antiderivative(k, t), arg - SCAN_STEP, arg + SCAN_STEP);
        best = best.min(val).min(refined);
    }
    best
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

/// Computes every constant for `spec` with `r = r_fraction·r2`.
pub fn compute_constants(spec: &ProblemSpec, r_fraction: f64) -> Result<TheoremConstants, ConstantsError> {
    if !(r_fraction > 0.0 && r_fraction < 1.0) {
        return Err(ConstantsError::RFraction(r_fraction));
    }
    spec.require_p_minus_two()?;
    let (f, g) = (spec.fterm(), spec.gterm());
    let sites = spec.len();
    let tf = sites as f64;
    let p_minus = spec.exponents().p_minus();
    let p_plus = spec.exponents().p_plus();

    let structural = StructuralConstants::from_terms(f, g)?;
    let sampling = SamplingConfig {
        range: SamplingConfig::default().range.max(structural.s2).max(structural.m1),
        ..SamplingConfig::default()
    };
    let report = verify_assumptions(f, g, sites, p_minus, &sampling)?;
    if report.a4.verdict == Verdict::Violated {
        return Err(ConstantsError::Hypothesis(report.a4.detail));
    }

    let c = (2.0 / (tf + 1.0).sqrt()).powf(p_minus) / tf;
    let c1 = c * unit_sphere_factor(sites, p_minus) * p_minus / (2.0 * p_plus);

    let (r_star, r1, r2) = small_ball_radii(sites, p_plus, structural.m, structural.m1);
    let r = r_fraction * r2;

    let mut slope = f64::INFINITY;
    for k in 1..=sites {
        for &radius in &TAIL_RADII {
            for t in [-radius, radius] {
                slope = slope.min(g.antiderivative(k, t) / radius);
            }
        }
    }
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(ConstantsError::TailSlope(format!(
            "min G(k, ±R)/R over R in {TAIL_RADII:?} is {slope}"
        )));
    }
    let d = 0.5 * slope;
    let t_star = tail_threshold(g, sites, 0.5 * d, TAIL_WINDOW).ok_or_else(|| {
        ConstantsError::TailSlope(format!("G/|t| does not stay above d/2 = {} in the tail", 0.5 * d))
    })?;

    // Beyond t_star, G > (d/2)|t| > 0, so the window contains the infimum.
    let window = 10f64.max(4.0 * t_star);
    let mut l = sampled_infimum(g, sites, window);
    for k in 1..=sites {
        if let Some(v) = g.infimum(k) {
            l = l.min(v);
        }
    }
    if !l.is_finite() {
        return Err(ConstantsError::Hypothesis(format!("G is unbounded below (infimum {l})")));
    }
    if l >= 0.0 {
        return Err(ConstantsError::DegenerateG(l));
    }

    let gamma_max = (r2 - r) / (-(tf + 1.0) * l);
    let m_coerc = (2.0 * tf.sqrt() * t_star).max(-4.0 * l * tf * tf.sqrt() / d);

    Ok(TheoremConstants {
        c,
        c1,
        r_star,
        r1,
        r2,
        r,
        l,
        d,
        t_star,
        m1: structural.m1,
        m: structural.m,
        gamma_max,
        m_coerc,
        r_fraction,
        p_minus,
        p_plus,
    })
}

/// Counts for one implication `premise ⇒ conclusion`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationStats {
    pub statement: String,
    /// Points drawn.
    pub sampled: usize,
    /// Points satisfying the premise.
    pub tested: usize,
    pub counterexamples: usize,
    /// Up to four failing points.
    pub witnesses: Vec<GridFunction>,
}

impl ImplicationStats {
    fn new(statement: &str) -> Self {
        Self {
            statement: statement.into(),
            sampled: 0,
            tested: 0,
            counterexamples: 0,
            witnesses: Vec::new(),
        }
    }

    fn record(&mut self, x: &GridFunction, premise: bool, conclusion: bool) {
        self.sampled += 1;
        if !premise {
            return;
        }
        self.tested += 1;
        if !conclusion {
            self.counterexamples += 1;
            if self.witnesses.len() < 4 {
                self.witnesses.push(x.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationReport {
    pub seed: u64,
    pub gamma: f64,
    pub gamma_within_bound: bool,
    pub small_ball: ImplicationStats,
    pub sublevel: ImplicationStats,
    pub coercive: ImplicationStats,
}

impl ImplicationReport {
    pub fn counterexamples(&self) -> usize {
        self.small_ball.counterexamples + self.sublevel.counterexamples + self.coercive.counterexamples
    }
}

/// `s > 0` with `μ₂(s·x) = level`; `μ₂` is strictly increasing along rays.
fn scale_to_mu2(x: &GridFunction, spec: &ProblemSpec, level: f64) -> GridFunction {
    let at = |s: f64| mu2(&x.map_interior(|_, v| s * v), spec);
    let mut hi = 1.0;
    while at(hi) < level {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x.map_interior(|_, v| lo * v)
}

/// Spikes, the constant interior, two alternating patterns and the tent:
/// unit-sup shapes where the norm comparisons are extremal.
fn structured_shapes(len: usize) -> Vec<GridFunction> {
    let mut shapes: Vec<GridFunction> = (1..=len).map(|q| GridFunction::spike(len, q, 1.0)).collect();
    let make = |f: &dyn Fn(usize) -> f64| {
        let v: Vec<f64> = (1..=len).map(f).collect();
        let top = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        GridFunction::from_interior(&v.iter().map(|a| a / top).collect::<Vec<_>>()).expect("finite shape")
    };
    shapes.push(make(&|_| 1.0));
    shapes.push(make(&|k| if k % 2 == 1 { 1.0 } else { 0.0 }));
    shapes.push(make(&|k| if k % 2 == 1 { 1.0 } else { -1.0 }));
    shapes.push(make(&|k| k.min(len + 1 - k) as f64));
    shapes
}

fn random_direction(len: usize, rng: &mut ChaCha8Rng) -> GridFunction {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if v.iter().any(|a| *a != 0.0) {
            return GridFunction::from_interior(&v).expect("finite sample");
        }
    }
}

/// Samples the three implications that the constants are built for:
///
/// * `μ₂(x) ≤ r2 ⇒ ‖x‖_C ≤ m` and `‖x‖_C ≤ M1`,
/// * `μ₁(x) ≤ r ⇒ μ₂(x) ≤ r2` (guaranteed only for `γ ≤ gamma_max`),
/// * `‖x‖ ≥ M_coerc ⇒ μ₁(x) ≥ μ₂(x)`.
///
/// Each implication receives `samples` random points on rays through random
/// directions, plus deterministic probes along structured shapes. A
/// counterexample yields [`ConstantsError::Implication`] carrying the full
/// report.
pub fn check_constant_implications(
    consts: &TheoremConstants,
    spec: &ProblemSpec,
    samples: usize,
    seed: u64,
) -> Result<ImplicationReport, ConstantsError> {
    let len = spec.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut small_ball = ImplicationStats::new("mu2(x) <= r2 implies |x|_C <= min(m, M1)");
    let mut sublevel = ImplicationStats::new("mu1(x) <= r implies mu2(x) <= r2");
    let mut coercive = ImplicationStats::new("|x| >= M_coerc implies mu1(x) >= mu2(x)");
    let bound = consts.m.min(consts.m1);

    let check_small = |x: &GridFunction, stats: &mut ImplicationStats| {
        stats.record(x, mu2(x, spec) <= consts.r2, sup_norm(x) <= bound);
    };
    let check_sub = |x: &GridFunction, stats: &mut ImplicationStats| {
        stats.record(x, mu1(x, spec) <= consts.r, mu2(x, spec) <= consts.r2);
    };
    // μ₁ - μ₂ = γ ΣG, compared through the sign of ΣG.
    let check_coercive = |x: &GridFunction, stats: &mut ImplicationStats| {
        stats.record(x, h_norm(x) >= consts.m_coerc, g_sum(x, spec) >= 0.0);
    };

    let shapes = structured_shapes(len);
    for shape in &shapes {
        for i in 1..=20 {
            let u = i as f64 / 20.0;
            check_small(&scale_to_mu2(shape, spec, u * consts.r2), &mut small_ball);
            // amplitudes up to 4·M1 cover the whole negative well of G
            let amp = 4.0 * consts.m1 * u;
            check_sub(&shape.map_interior(|_, v| amp * v), &mut sublevel);
            let far = consts.m_coerc * (1.0 + 3.0 * u) / h_norm(shape);
            check_coercive(&shape.map_interior(|_, v| far * v), &mut coercive);
        }
    }

    for _ in 0..samples {
        let dir = random_direction(len, &mut rng);
        let u: f64 = rng.gen_range(0.0..=1.0);
        check_small(&scale_to_mu2(&dir, spec, u * consts.r2), &mut small_ball);

        let dir = random_direction(len, &mut rng);
        let level = rng.gen_range(0.0..=4.0) * consts.r2;
        check_sub(&scale_to_mu2(&dir, spec, level), &mut sublevel);

        let dir = random_direction(len, &mut rng);
        let scale = consts.m_coerc * rng.gen_range(1.0..=4.0) / h_norm(&dir);
        check_coercive(&dir.map_interior(|_, v| scale * v), &mut coercive);
    }

    let report = ImplicationReport {
        seed,
        gamma: spec.gamma(),
        gamma_within_bound: spec.gamma() <= consts.gamma_max,
        small_ball,
        sublevel,
        coercive,
    };
    if report.counterexamples() > 0 {
        Err(ConstantsError::Implication(Box::new(report)))
    } else {
        Ok(report)
    }
}
