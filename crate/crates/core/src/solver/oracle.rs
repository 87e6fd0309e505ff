//! Exhaustive residual scan on a uniform grid over `[-R, R]^T`, `T ≤ 3`.
//!
//! Candidates are the centres of cells in which every residual component
//! changes sign across the corners (one per piece when a jump of `f` or `g`
//! crosses the cell), and grid nodes where `‖r‖₂` has a strict
//! local minimum below `2√T·h·L` (`L` a local Lipschitz estimate of `r`).
//! Candidates are polished by undeflated Newton. The grid is processed one
//! slab of the first axis at a time so memory stays at three slabs.

use rayon::prelude::*;

use crate::energy::{residual, ProblemSpec};
use crate::error::SolverError;
use crate::grid::{sup_norm, GridFunction};

use super::newton::solve;
use super::{certify, push_unique, sort_points, CriticalPoint, SolverConfig};

const MIN_GRID: usize = 64;

/// Residual vector (padded to 3) and its Euclidean norm at one node.
type Sample = ([f64; 3], f64);

struct Lattice {
    dim: usize,
    n: usize,
    lo: f64,
    h: f64,
}

impl Lattice {
    fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    /// Nodes per slab: `n^(T-1)`.
    fn slab_len(&self) -> usize {
        self.n.pow(self.dim as u32 - 1)
    }

    /// Slab-local index to the remaining `T - 1` axis indices.
    fn split(&self, j: usize) -> [usize; 2] {
        match self.dim {
            1 => [0, 0],
            2 => [j, 0],
            _ => [j / self.n, j % self.n],
        }
    }

    fn join(&self, rest: [usize; 2]) -> usize {
        match self.dim {
            1 => 0,
            2 => rest[0],
            _ => rest[0] * self.n + rest[1],
        }
    }

    fn point(&self, s: usize, rest: [usize; 2]) -> Vec<f64> {
        let mut x = vec![self.coord(s)];
        for &r in rest.iter().take(self.dim - 1) {
            x.push(self.coord(r));
        }
        x
    }

    fn slab(&self, spec: &ProblemSpec, s: usize) -> Vec<Sample> {
        (0..self.slab_len())
            .into_par_iter()
            .map(|j| {
                let x = self.point(s, self.split(j));
                let r = residual(&GridFunction::from_interior(&x).expect("finite node"), spec);
                let mut out = [0.0; 3];
                out[..r.len()].copy_from_slice(&r);
                (out, r.iter().map(|v| v * v).sum::<f64>().sqrt())
            })
            .collect()
    }

    /// Offsets in `{-1, 0, 1}` (or `{0, 1}` for cell corners) over the
    /// `T - 1` slab axes.
    fn offsets(&self, values: &[isize]) -> Vec<[isize; 2]> {
        let m = self.dim - 1;
        let mut out = vec![[0isize; 2]];
        for axis in 0..m {
            out = out
                .into_iter()
                .flat_map(|o| {
                    values.iter().map(move |&v| {
                        let mut o = o;
                        o[axis] = v;
                        o
                    })
                })
                .collect();
        }
        out
    }

    fn shift(&self, rest: [usize; 2], off: [isize; 2]) -> Option<[usize; 2]> {
        let mut out = [0usize; 2];
        for axis in 0..self.dim - 1 {
            let v = rest[axis] as isize + off[axis];
            if v < 0 || v >= self.n as isize {
                return None;
            }
            out[axis] = v as usize;
        }
        Some(out)
    }
}

/// Cells between slabs `s` and `s + 1` in which every component changes
/// sign. Cells crossed by a jump of `f` or `g` contribute one candidate per
/// piece.
fn sign_change_cells(
    lat: &Lattice,
    s: usize,
    a: &[Sample],
    b: &[Sample],
    jumps: &[f64],
    out: &mut Vec<Vec<f64>>,
) {
    let corners = lat.offsets(&[0, 1]);
    for j in 0..lat.slab_len() {
        let rest = lat.split(j);
        if rest.iter().take(lat.dim - 1).any(|&r| r + 1 >= lat.n) {
            continue;
        }
        let mut neg = [false; 3];
        let mut pos = [false; 3];
        let mut zero = [false; 3];
        for off in &corners {
            let k = lat.join(lat.shift(rest, *off).expect("interior cell"));
            for slab in [a, b] {
                for c in 0..lat.dim {
                    let v = slab[k].0[c];
                    neg[c] |= v < 0.0;
                    pos[c] |= v > 0.0;
                    zero[c] |= v == 0.0;
                }
            }
        }
        if (0..lat.dim).all(|c| (neg[c] && pos[c]) || zero[c]) {
            out.extend(piece_centres(&lat.point(s, rest), lat.h, jumps));
        }
    }
}

/// Centres of the pieces into which the jumps split the cell with lower
/// corner `lo` and width `h`; just the cell centre if no jump crosses it.
fn piece_centres(lo: &[f64], h: f64, jumps: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(lo.len())];
    for &a in lo {
        let b = a + h;
        let mut cuts = vec![a];
        cuts.extend(jumps.iter().copied().filter(|&j| j > a && j < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        let mids: Vec<f64> = cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        out = out
            .into_iter()
            .flat_map(|p| {
                mids.iter().map(move |&m| {
                    let mut p = p.clone();
                    p.push(m);
                    p
                })
            })
            .collect();
    }
    if out.len() > 1 {
        // the plain centre as well, which may sit on the jump itself
        out.push(lo.iter().map(|a| a + 0.5 * h).collect());
    }
    out
}

/// Strict local minima of `‖r‖` on slab `s` (neighbours from `prev`, `cur`,
/// `next`) below the Lipschitz threshold.
fn local_minima(
    lat: &Lattice,
    s: usize,
    prev: Option<&[Sample]>,
    cur: &[Sample],
    next: Option<&[Sample]>,
    out: &mut Vec<Vec<f64>>,
) {
    let offs = lat.offsets(&[-1, 0, 1]);
    let slabs: [(isize, Option<&[Sample]>); 3] = [(-1, prev), (0, Some(cur)), (1, next)];
    let radius = 2.0 * (lat.dim as f64).sqrt() * lat.h;
    for j in 0..lat.slab_len() {
        let rest = lat.split(j);
        let (r0, rho) = cur[j];
        let mut strict = true;
        let mut lip = 0.0f64;
        'nb: for &(ds, slab) in &slabs {
            let Some(slab) = slab else { continue };
            for off in &offs {
                if ds == 0 && off.iter().all(|&o| o == 0) {
                    continue;
                }
                let Some(nb) = lat.shift(rest, *off) else { continue };
                let (r1, rho1) = slab[lat.join(nb)];
                if rho1 <= rho {
                    strict = false;
                    break 'nb;
                }
                let steps = (ds.unsigned_abs() + off.iter().map(|o| o.unsigned_abs()).sum::<usize>()) as f64;
                let dist = lat.h * steps.sqrt();
                let diff: f64 = (0..lat.dim).map(|c| (r1[c] - r0[c]).powi(2)).sum::<f64>().sqrt();
                lip = lip.max(diff / dist);
            }
        }
        if strict && rho <= radius * lip {
            out.push(lat.point(s, rest));
        }
    }
}

/// All certified critical points in `[-box_radius, box_radius]^T` that the
/// grid resolves, deduplicated with `cfg.dedup_tol` and sorted by
/// (energy, values). Only `certify_tol`, `dedup_tol`, `trivial_tol` and
/// `max_newton_iters` of `cfg` are used.
pub fn brute_force_oracle(
    spec: &ProblemSpec,
    box_radius: f64,
    grid_n: usize,
    cfg: &SolverConfig,
) -> Result<Vec<CriticalPoint>, SolverError> {
    cfg.validate()?;
    let dim = spec.len();
    if dim > 3 {
        return Err(SolverError::OracleDimension(dim));
    }
    if grid_n < MIN_GRID {
        return Err(SolverError::OracleGrid(grid_n));
    }
    if !(box_radius > 0.0) || !box_radius.is_finite() {
        return Err(SolverError::Config(format!("box radius must be positive, got {box_radius}")));
    }
    let lat = Lattice {
        dim,
        n: grid_n,
        lo: -box_radius,
        h: 2.0 * box_radius / (grid_n - 1) as f64,
    };

    let mut jumps = spec.fterm().discontinuities();
    jumps.extend(spec.gterm().discontinuities());
    let mut candidates = vec![vec![0.0; dim]];
    let mut prev: Option<Vec<Sample>> = None;
    let mut cur = lat.slab(spec, 0);
    for s in 0..grid_n {
        let next = (s + 1 < grid_n).then(|| lat.slab(spec, s + 1));
        if let Some(next) = &next {
            sign_change_cells(&lat, s, &cur, next, &jumps, &mut candidates);
        }
        local_minima(&lat, s, prev.as_deref(), &cur, next.as_deref(), &mut candidates);
        prev = Some(cur);
        match next {
            Some(n) => cur = n,
            None => break,
        }
    }

    let polished: Vec<Option<CriticalPoint>> = candidates
        .par_iter()
        .map(|x0| {
            let out = solve(spec, x0, &[], cfg);
            if !out.converged {
                return None;
            }
            let x = GridFunction::from_interior(&out.best).expect("finite iterate");
            if sup_norm(&x) > box_radius {
                return None;
            }
            certify(x, spec, cfg)
        })
        .collect();
    let mut found = Vec::new();
    for cp in polished.into_iter().flatten() {
        push_unique(&mut found, cp, cfg.dedup_tol);
    }
    sort_points(&mut found);
    Ok(found)
}
