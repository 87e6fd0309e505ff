//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Nonlinearity;
use crate::error::NonlinearityError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SUBDIVISIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: match ((kronrod - gauss) * half).abs() {
            e if e.is_nan() => f64::INFINITY,
            e => e,
        },
    }
}

/// `∫ₐᵇ f` to absolute accuracy `tol`. Interior `breakpoints` (kinks, jumps)
/// seed the initial partition. For `b < a` the orientation is reversed.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, breakpoints: &[f64]) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut left = lo;
    for &c in cuts.iter().chain(std::iter::once(&hi)) {
        heap.push(kronrod(&f, left, c));
        left = c;
    }

    let mut subdivisions = 0;
    let mut exhausted = false;
    loop {
        let total_err: f64 = heap.iter().map(|s| s.error).sum();
        let done = total_err <= tol;
        if done || exhausted || subdivisions >= MAX_SUBDIVISIONS {
            let mut segs = heap.into_vec();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value: f64 = crate::grid::compensated_sum(segs.iter().map(|s| s.value));
            return Integral {
                value: sign * value,
                error_estimate: total_err,
                converged: done,
            };
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot be split further in floating point
            heap.push(worst);
            exhausted = true;
            continue;
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
        subdivisions += 1;
    }
}

/// `∫₀ᵗ f(k, s) ds` by adaptive quadrature, split at the declared kinks and
/// jumps of the nonlinearity.
pub fn anti_by_quadrature(
    nl: &dyn Nonlinearity,
    site: usize,
    t: f64,
    tol: f64,
) -> Result<f64, NonlinearityError> {
    let mut breaks = nl.kinks();
    breaks.extend(nl.discontinuities());
    let integral = integrate(|s| nl.value(site, s), 0.0, t, tol, &breaks);
    if integral.converged {
        Ok(integral.value)
    } else {
        Err(NonlinearityError::Quadrature {
            tol,
            estimate: integral.error_estimate,
        })
    }
}
