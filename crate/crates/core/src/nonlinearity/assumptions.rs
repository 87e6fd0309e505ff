//! Sampling-based checks of the structural hypotheses on `f` and `g`.
//!
//! The asymptotic (liminf) conditions cannot be decided from finitely many
//! samples. They are replaced by tail checks on `R/2 ≤ |t| ≤ R`: the ratio
//! at the sampling boundary `|t| = R` must lie on the admissible side of
//! `eps_tail`, and its trend over the tail decides between "violated" and
//! "inconclusive" when it does not.

use serde::{Deserialize, Serialize};

use super::{Nonlinearity, StructuralConstants};
use crate::error::NonlinearityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnSamples,
    Violated,
    Inconclusive,
}

/// A concrete sample `(k, t)` with the offending quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub site: usize,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub label: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub detail: String,
}

impl AssumptionCheck {
    fn new(label: &str) -> Self {
        Self {
            label: label.into(),
            verdict: Verdict::HoldsOnSamples,
            witnesses: Vec::new(),
            detail: String::new(),
        }
    }

    fn violate(&mut self, w: Witness) {
        self.verdict = Verdict::Violated;
        if self.witnesses.len() < 4 {
            self.witnesses.push(w);
        }
    }

    fn merge(&mut self, other: AssumptionCheck) {
        self.verdict = match (self.verdict, other.verdict) {
            (Verdict::Violated, _) | (_, Verdict::Violated) => Verdict::Violated,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::HoldsOnSamples,
        };
        self.witnesses.extend(other.witnesses);
        self.witnesses.truncate(4);
        if !other.detail.is_empty() {
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&other.detail);
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnSamples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Samples cover `[-range, range]`.
    pub range: f64,
    pub step: f64,
    pub eps_tail: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            range: 20.0,
            step: 0.01,
            eps_tail: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub sampling: SamplingConfig,
    pub sites: usize,
    pub constants: StructuralConstants,
    #[serde(rename = "A.1")]
    pub a1: AssumptionCheck,
    #[serde(rename = "A.2")]
    pub a2: AssumptionCheck,
    #[serde(rename = "A.4")]
    pub a4: AssumptionCheck,
    #[serde(rename = "A.5")]
    pub a5: AssumptionCheck,
    pub g_continuity: AssumptionCheck,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.a1.holds() && self.a2.holds() && self.a4.holds() && self.a5.holds()
    }
}

/// Symmetric sample grid `i·step`, `|i·step| ≤ range`; contains 0 exactly.
fn symmetric_grid(range: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = (range / step).floor() as i64;
    (-n..=n).map(move |i| i as f64 * step)
}

/// Points of `[a, b]` spaced by at most `step`, both ends included.
fn interval_grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    if b <= a {
        return vec![a];
    }
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Tail behaviour of `ratio(k, t)` on `R/2 ≤ |t| ≤ R`, both signs.
struct Tail {
    /// Worst ratio over the tail and where it occurs.
    worst: Witness,
    /// Worst ratio at the sampling boundary `|t| = R`.
    boundary: Witness,
    /// Smallest change `ratio(±R) - ratio(±R/2)` over sites and signs.
    trend: f64,
}

fn tail_scan(sites: usize, cfg: &SamplingConfig, ratio: impl Fn(usize, f64) -> f64) -> Tail {
    let half = 0.5 * cfg.range;
    let pts = interval_grid(half, cfg.range, cfg.step);
    let mut worst = Witness { site: 1, t: cfg.range, value: f64::INFINITY };
    let mut boundary = worst;
    let mut trend = f64::INFINITY;
    for site in 1..=sites {
        for sign in [1.0, -1.0] {
            for &a in &pts {
                let t = sign * a;
                let v = ratio(site, t);
                if v < worst.value {
                    worst = Witness { site, t, value: v };
                }
            }
            let t = sign * cfg.range;
            let at_boundary = ratio(site, t);
            if at_boundary < boundary.value {
                boundary = Witness { site, t, value: at_boundary };
            }
            trend = trend.min(at_boundary - ratio(site, sign * half));
        }
    }
    Tail { worst, boundary, trend }
}

/// Locates jumps of `t -> value(k, t)` by repeated halving of every sample
/// interval with non-negligible variation. A continuous function loses its
/// variation under refinement, a jump keeps it.
fn continuity_check(label: &str, nl: &dyn Nonlinearity, sites: usize, cfg: &SamplingConfig) -> AssumptionCheck {
    let mut check = AssumptionCheck::new(label);
    let grid: Vec<f64> = symmetric_grid(cfg.range, cfg.step).collect();
    for site in 1..=sites {
        for w in grid.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (mut fa, mut fb) = (nl.value(site, a), nl.value(site, b));
            let coarse = (fb - fa).abs();
            if coarse <= 1e-9 * (1.0 + fa.abs()) {
                continue;
            }
            for _ in 0..16 {
                let mid = 0.5 * (a + b);
                let fm = nl.value(site, mid);
                if (fm - fa).abs() >= (fb - fm).abs() {
                    b = mid;
                    fb = fm;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            let fine = (fb - fa).abs();
            if fine > 0.5 * coarse && fine > 1e-9 {
                check.violate(Witness { site, t: 0.5 * (a + b), value: fine });
            }
        }
    }
    if !check.holds() {
        check.detail = "jump detected under 2^16-fold refinement".into();
    }
    check
}

/// Checks (A.1), (A.2), (A.4), (A.5) for the pair `(f, g)` on `sites`
/// sites. The structural constants are taken from the terms' declarations.
pub fn verify_assumptions(
    f: &dyn Nonlinearity,
    g: &dyn Nonlinearity,
    sites: usize,
    p_minus: f64,
    cfg: &SamplingConfig,
) -> Result<AssumptionReport, NonlinearityError> {
    let consts = StructuralConstants::from_terms(f, g)?;
    if !(cfg.step > 0.0) || !(cfg.eps_tail > 0.0) {
        return Err(NonlinearityError::Sampling(format!(
            "step {} and eps_tail {} must be positive",
            cfg.step, cfg.eps_tail
        )));
    }
    let needed = consts.s2.max(consts.m1).max(10.0);
    if cfg.range < needed {
        return Err(NonlinearityError::Sampling(format!(
            "range {} must cover max(s2, M1, 10) = {needed}",
            cfg.range
        )));
    }

    // (A.1): continuity of f and liminf F/|t|^{p-} >= 0.
    let mut a1 = continuity_check("A.1", f, sites, cfg);
    let tail = tail_scan(sites, cfg, |k, t| f.antiderivative(k, t) / t.abs().powf(p_minus));
    let mut a1_tail = AssumptionCheck::new("A.1");
    if tail.worst.value >= -cfg.eps_tail {
        a1_tail.detail = format!("min F/|t|^p- on tail = {:.3e}", tail.worst.value);
    } else if tail.boundary.value >= -cfg.eps_tail && tail.trend > 0.0 {
        a1_tail.detail = format!(
            "tail ratio rises to {:.3e} at |t| = R",
            tail.boundary.value
        );
    } else if tail.trend <= 0.0 {
        a1_tail.violate(tail.boundary);
        a1_tail.detail = format!(
            "F/|t|^p- = {:.3e} at the sampling boundary and not recovering",
            tail.boundary.value
        );
    } else {
        a1_tail.verdict = Verdict::Inconclusive;
        a1_tail.detail = format!(
            "F/|t|^p- = {:.3e} at the sampling boundary, still rising",
            tail.boundary.value
        );
    }
    a1.merge(a1_tail);

    // (A.2): F > 0 on [-m, m] \ {0}, F < 0 on [s1, s2].
    let mut a2 = AssumptionCheck::new("A.2");
    let inner: Vec<f64> = interval_grid(-consts.m, consts.m, cfg.step)
        .into_iter()
        .filter(|t| t.abs() > 0.25 * cfg.step)
        .collect();
    let outer = interval_grid(consts.s1, consts.s2, cfg.step);
    for site in 1..=sites {
        for &t in &inner {
            let v = f.antiderivative(site, t);
            if !(v > 0.0) {
                a2.violate(Witness { site, t, value: v });
            }
        }
        for &t in &outer {
            let v = f.antiderivative(site, t);
            if !(v < 0.0) {
                a2.violate(Witness { site, t, value: v });
            }
        }
    }

    // (A.4): G <= 0 on [-M1, M1] and liminf G/|t| > 0 in both directions.
    let mut a4 = AssumptionCheck::new("A.4");
    for site in 1..=sites {
        for t in interval_grid(-consts.m1, consts.m1, cfg.step) {
            let v = g.antiderivative(site, t);
            if v > 0.0 {
                a4.violate(Witness { site, t, value: v });
            }
        }
    }
    if !a4.holds() {
        a4.detail = "G > 0 inside [-M1, M1]".into();
    }
    let tail = tail_scan(sites, cfg, |k, t| g.antiderivative(k, t) / t.abs());
    let mut a4_tail = AssumptionCheck::new("A.4");
    if tail.worst.value >= cfg.eps_tail {
        a4_tail.detail = format!("min G/|t| on tail = {:.3e}", tail.worst.value);
    } else if tail.boundary.value < cfg.eps_tail && tail.trend <= 0.0 {
        a4_tail.violate(tail.boundary);
        a4_tail.detail = format!(
            "G/|t| = {:.3e} at t = {} and not increasing",
            tail.boundary.value, tail.boundary.t
        );
    } else {
        a4_tail.verdict = Verdict::Inconclusive;
        a4_tail.detail = format!(
            "G/|t| = {:.3e} at the sampling boundary, margin below eps_tail",
            tail.boundary.value
        );
    }
    a4.merge(a4_tail);

    // (A.5): f(k, .) non-decreasing on [-m, m].
    let mut a5 = AssumptionCheck::new("A.5");
    let pts = interval_grid(-consts.m, consts.m, cfg.step);
    for site in 1..=sites {
        for w in pts.windows(2) {
            let (lo, hi) = (f.value(site, w[0]), f.value(site, w[1]));
            if hi < lo - 1e-12 * (1.0 + lo.abs()) {
                a5.violate(Witness { site, t: w[1], value: hi - lo });
            }
        }
    }

    let g_continuity = continuity_check("g-continuity", g, sites, cfg);

    Ok(AssumptionReport {
        sampling: *cfg,
        sites,
        constants: consts,
        a1,
        a2,
        a4,
        a5,
        g_continuity,
        notes: vec![
            "the hypothesis labels skip (A.3)".into(),
            "(A.5) is checked on every site k in [1, T]".into(),
            "liminf conditions replaced by tail checks on R/2 <= |t| <= R".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{
        DeclaredConstants, Example1F, Example1G, GVariant, LinearTerm, QuadratureTerm,
    };

    fn pair(variant: GVariant) -> (Example1F, Example1G) {
        (
            Example1F::new(vec![1.0; 4]).unwrap(),
            Example1G::new(vec![1.0; 4], variant).unwrap(),
        )
    }

    #[test]
    fn corrected_pair_passes_everything() {
        let (f, g) = pair(GVariant::CorrectedOddG);
        let r = verify_assumptions(&f, &g, 4, 2.0, &SamplingConfig::default()).unwrap();
        assert!(r.all_hold(), "{r:#?}");
        // the sign correction makes g jump at 0
        assert_eq!(r.g_continuity.verdict, Verdict::Violated);
        assert!(r.g_continuity.witnesses[0].t.abs() < 1e-3);
    }

    #[test]
    fn uncorrected_g_violates_a4_on_negative_side() {
        let (f, g) = pair(GVariant::PaperG);
        let r = verify_assumptions(&f, &g, 4, 2.0, &SamplingConfig::default()).unwrap();
        assert!(r.a1.holds() && r.a2.holds() && r.a5.holds());
        assert_eq!(r.a4.verdict, Verdict::Violated);
        assert!(!r.a4.witnesses.is_empty());
        assert!(r.a4.witnesses.iter().all(|w| w.t < 0.0));
        assert_eq!(r.g_continuity.verdict, Verdict::HoldsOnSamples);
    }

    #[test]
    fn linear_f_violates_a2() {
        let f = QuadratureTerm::new("lin", |_, t| t).with_declared(DeclaredConstants {
            m: Some(1.0),
            s1: Some(2.0),
            s2: Some(2.0),
            m1: None,
        });
        let (_, g) = pair(GVariant::CorrectedOddG);
        let r = verify_assumptions(&f, &g, 2, 2.0, &SamplingConfig::default()).unwrap();
        assert_eq!(r.a2.verdict, Verdict::Violated);
        let w = r.a2.witnesses[0];
        assert_eq!(w.t, 2.0);
        assert!((w.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn growing_negative_tail_violates_a1() {
        let f = QuadratureTerm::new("cubic-neg", |_, t: f64| -t * t * t).with_declared(
            DeclaredConstants { m: Some(1.0), s1: Some(2.0), s2: Some(2.0), m1: None },
        );
        let (_, g) = pair(GVariant::CorrectedOddG);
        let r = verify_assumptions(&f, &g, 1, 2.0, &SamplingConfig::default()).unwrap();
        assert_eq!(r.a1.verdict, Verdict::Violated);
    }

    #[test]
    fn missing_constants_are_configuration_errors() {
        let (_, g) = pair(GVariant::CorrectedOddG);
        let err = verify_assumptions(&LinearTerm { slope: 1.0 }, &g, 1, 2.0, &SamplingConfig::default())
            .unwrap_err();
        assert_eq!(err, NonlinearityError::MissingConstant("m"));
    }

    #[test]
    fn range_must_cover_constants() {
        let (f, g) = pair(GVariant::CorrectedOddG);
        let cfg = SamplingConfig { range: 5.0, ..SamplingConfig::default() };
        assert!(matches!(
            verify_assumptions(&f, &g, 1, 2.0, &cfg),
            Err(NonlinearityError::Sampling(_))
        ));
    }
}
