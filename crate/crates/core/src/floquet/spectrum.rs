//! Whole quasienergy spectra: branch tracing, grid sampling and the
//! quasienergy triangle.

use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use super::continuation::{continue_branch, Branch, BranchLabel, StepControl};
use super::seed::{monodromy_seeds, normalized, ramp_chi, seed_from_averaged};
use super::solver::{default_cutoff, solve_floquet_with, NewtonSettings, Symmetry};
use super::state::FloquetState;
use crate::averaged::{averaged_quasienergies, bessel_j0, first_j0_root, StationaryKind};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::zone_reduce;

/// States closer than this after phase alignment count as one.
pub const DISTINCT_TOLERANCE: f64 = 1e-6;

/// Parity overlap below which a solved state counts as broken.
const BROKEN_PARITY: f64 = 1.0 - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BranchSettings {
    /// Harmonic cutoff; [`default_cutoff`] when `None`.
    pub cutoff: Option<usize>,
    pub step: StepControl,
}

/// Period-averaged intensity in the first guide, `sum |a_n|^2`.
pub fn floquet_localization(state: &FloquetState) -> f64 {
    state.localization()
}

/// Traces the Floquet branches of `base` across `S/w` in `range`.
///
/// The two symmetric branches start from the linear states at the lower
/// end of the range and are ramped to the target nonlinearity. If the
/// averaged model predicts broken-symmetry states somewhere in the range, a
/// broken branch is seeded where `|J0(S/w)|` is smallest and followed in
/// both directions. Returned order: upper, lower, then the broken branch.
pub fn quasienergy_branches(
    base: &ModelParams,
    range: (f64, f64),
    settings: &BranchSettings,
) -> Result<Vec<Branch>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(Error::InvalidParameter {
            name: "S/w range",
            value: hi - lo,
            reason: "need 0 <= lower < upper",
        });
    }
    let cutoff = settings
        .cutoff
        .unwrap_or_else(|| default_cutoff(base.frequency() / base.coupling()));
    let start = base.with_drive_ratio(lo)?;
    let [even, odd] = monodromy_seeds(&start, cutoff)?;
    let mut branches = Vec::new();
    for (seed, symmetry) in [(even, Symmetry::Even), (odd, Symmetry::Odd)] {
        let state = ramp_chi(&seed, base.chi(), symmetry)?;
        branches.push(continue_branch(&state, range, &settings.step)?);
    }
    if let Some(state) = broken_seed(base, range, cutoff)? {
        branches.push(continue_branch(&state, range, &settings.step)?);
    }
    Ok(branches)
}

/// A converged broken-symmetry state near the first root of `J0`, or
/// `None` when the averaged model has no broken states in the range.
fn broken_seed(
    base: &ModelParams,
    range: (f64, f64),
    cutoff: usize,
) -> Result<Option<FloquetState>> {
    if base.chi() == 0.0 {
        return Ok(None);
    }
    let ratio = first_j0_root().clamp(range.0, range.1);
    let params = base.with_drive_ratio(ratio)?;
    let Some(level) = averaged_quasienergies(&params)
        .into_iter()
        .find(|l| l.state.kind == StationaryKind::BrokenA)
    else {
        return Ok(None);
    };
    let seed = seed_from_averaged(&params, &level.state, cutoff);
    let state = solve_floquet_with(&seed, Symmetry::None, &NewtonSettings::default())?;
    if state.parity().abs() > BROKEN_PARITY {
        return Ok(None);
    }
    Ok(Some(state))
}

/// A solved state at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub label: BranchLabel,
    /// Index of the source branch.
    pub branch: usize,
    /// Constructed as the swap partner of a broken state.
    pub partner: bool,
    pub state: FloquetState,
}

/// All branch states at one `S/w`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub ratio: f64,
    pub states: Vec<GridState>,
    /// Interpolated seeds that did not converge.
    pub failures: usize,
}

fn aligned_mix(x: &FloquetState, y: &FloquetState, t: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut overlap = Complex64::new(0.0, 0.0);
    for (p, q) in x
        .first
        .iter()
        .chain(&x.second)
        .zip(y.first.iter().chain(&y.second))
    {
        overlap += q.conj() * p;
    }
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mix = |p: &[Complex64], q: &[Complex64]| -> Vec<Complex64> {
        p.iter()
            .zip(q)
            .map(|(p, q)| p * (1.0 - t) + q * phase * t)
            .collect()
    };
    (mix(&x.first, &y.first), mix(&x.second, &y.second))
}

/// Solves every branch at `ratio`, seeding from the bracketing continuation
/// points. Broken states are accompanied by their swap partners.
pub fn states_at(branches: &[Branch], ratio: f64) -> GridPoint {
    let mut out = GridPoint {
        ratio,
        states: Vec::new(),
        failures: 0,
    };
    let settings = NewtonSettings::default();
    for (index, branch) in branches.iter().enumerate() {
        let mut found: Vec<FloquetState> = Vec::new();
        for pair in branch.points.windows(2) {
            let (s0, s1) = (pair[0].drive_ratio(), pair[1].drive_ratio());
            let inside = (s0 <= ratio && ratio <= s1) || (s1 <= ratio && ratio <= s0);
            if !inside {
                continue;
            }
            let t = if s1 == s0 {
                0.0
            } else {
                (ratio - s0) / (s1 - s0)
            };
            let (a, b) = aligned_mix(&pair[0], &pair[1], t);
            let w = pair[0].params.frequency();
            let eps = pair[0].epsilon + t * zone_reduce(pair[1].epsilon - pair[0].epsilon, w);
            let Ok(params) = pair[0].params.with_drive_ratio(ratio) else {
                out.failures += 1;
                continue;
            };
            let seed = normalized(params, pair[0].cutoff, a, b, eps);
            match solve_floquet_with(&seed, branch.symmetry, &settings) {
                Ok(state) => {
                    if found
                        .iter()
                        .all(|f| f.distance(&state) > DISTINCT_TOLERANCE)
                    {
                        found.push(state);
                    }
                }
                Err(_) => out.failures += 1,
            }
        }
        for state in found {
            let broken = branch.label == BranchLabel::BrokenPair;
            let partner = broken.then(|| state.swap_partner());
            out.states.push(GridState {
                label: branch.label,
                branch: index,
                partner: false,
                state,
            });
            if let Some(p) = partner {
                out.states.push(GridState {
                    label: branch.label,
                    branch: index,
                    partner: true,
                    state: p,
                });
            }
        }
    }
    out
}

/// Number of distinct states (phase-aligned distance above
/// [`DISTINCT_TOLERANCE`]) and the distinct quasienergies among them, the
/// latter merged when closer than `epsilon_tolerance`.
pub fn distinct_quasienergies(
    states: &[FloquetState],
    epsilon_tolerance: f64,
) -> (usize, Vec<f64>) {
    let mut unique: Vec<&FloquetState> = Vec::new();
    for s in states {
        if unique.iter().all(|u| u.distance(s) > DISTINCT_TOLERANCE) {
            unique.push(s);
        }
    }
    let mut levels: Vec<f64> = Vec::new();
    for s in &unique {
        let w = s.params.frequency();
        if levels
            .iter()
            .all(|e| zone_reduce(s.epsilon - e, w).abs() > epsilon_tolerance)
        {
            levels.push(s.epsilon);
        }
    }
    levels.sort_by(f64::total_cmp);
    (unique.len(), levels)
}

/// Corners of the quasienergy triangle in the `(S/w, eps)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleGeometry {
    /// Bifurcation of the broken pair at the smallest `S/w`.
    pub left_corner: Option<(f64, f64)>,
    /// Crossing of the two symmetric branches.
    pub apex: Option<(f64, f64)>,
    /// Where the broken pair merges again; `None` when it stays open
    /// through the end of the traced range.
    pub right_corner: Option<(f64, f64)>,
    /// `S/w` distance from the left corner to the apex.
    pub width: f64,
}

impl TriangleGeometry {
    const NONE: Self = Self {
        left_corner: None,
        apex: None,
        right_corner: None,
        width: 0.0,
    };
}

/// `S/w` values where two branches carry equal quasienergies, with the
/// common quasienergy, from linear interpolation of the second branch onto
/// the points of the first.
pub fn level_crossings(first: &Branch, second: &Branch) -> Vec<(f64, f64)> {
    let sample = |branch: &Branch, s: f64| -> Option<f64> {
        for pair in branch.points.windows(2) {
            let (s0, s1) = (pair[0].drive_ratio(), pair[1].drive_ratio());
            if (s0 <= s && s <= s1) || (s1 <= s && s <= s0) {
                let t = if s1 == s0 { 0.0 } else { (s - s0) / (s1 - s0) };
                let w = pair[0].params.frequency();
                return Some(
                    pair[0].epsilon + t * zone_reduce(pair[1].epsilon - pair[0].epsilon, w),
                );
            }
        }
        None
    };
    let mut out = Vec::new();
    let mut previous: Option<(f64, f64, f64)> = None;
    for p in &first.points {
        let s = p.drive_ratio();
        let Some(other) = sample(second, s) else {
            previous = None;
            continue;
        };
        let w = p.params.frequency();
        let gap = zone_reduce(p.epsilon - other, w);
        if let Some((s_prev, gap_prev, eps_prev)) = previous {
            let small = gap.abs() < 0.25 * w && gap_prev.abs() < 0.25 * w;
            if small && (gap == 0.0 || gap.signum() != gap_prev.signum()) && s != s_prev {
                let t = gap_prev / (gap_prev - gap);
                out.push((
                    s_prev + t * (s - s_prev),
                    eps_prev + t * zone_reduce(p.epsilon - eps_prev, w),
                ));
            }
        }
        previous = Some((s, gap, p.epsilon));
    }
    out
}

fn nearest_epsilon(branch: &Branch, s: f64) -> f64 {
    branch
        .points
        .iter()
        .min_by(|a, b| {
            (a.drive_ratio() - s)
                .abs()
                .total_cmp(&(b.drive_ratio() - s).abs())
        })
        .map_or(f64::NAN, |p| p.epsilon)
}

/// Width of the quasienergy triangle: the `S/w` distance between the left
/// corner, where the broken pair bifurcates, and the apex where the two
/// symmetric branches cross.
///
/// Returns zero corners and width when no broken branch exists. Fails when
/// the broken branch or the crossing runs into the end of the traced range.
pub fn triangle_width(branches: &[Branch]) -> Result<TriangleGeometry> {
    let broken: Vec<&Branch> = branches
        .iter()
        .filter(|b| b.label == BranchLabel::BrokenPair && !b.points.is_empty())
        .collect();
    let Some(pair) = broken.first() else {
        return Ok(TriangleGeometry::NONE);
    };
    let upper = branches.iter().find(|b| b.label == BranchLabel::Upper);
    let lower = branches.iter().find(|b| b.label == BranchLabel::Lower);
    let (Some(upper), Some(lower)) = (upper, lower) else {
        return Err(Error::IncompleteBranches(
            "both symmetric branches are required",
        ));
    };
    if pair.truncated {
        return Err(Error::IncompleteBranches("broken branch truncated"));
    }
    let (span_lo, span_hi) = pair.span();
    let edge = 1e-12 * (1.0 + pair.range.1.abs());
    if span_lo <= pair.range.0 + edge {
        return Err(Error::IncompleteBranches(
            "broken branch reaches the lower end of the range; widen it",
        ));
    }
    let Some(&left) = pair.fold_points.first() else {
        return Err(Error::IncompleteBranches(
            "broken branch ends without turning",
        ));
    };
    let right = if span_hi >= pair.range.1 - edge {
        None
    } else {
        match pair.fold_points.last() {
            Some(&r) if pair.fold_points.len() > 1 => Some(r),
            _ => {
                return Err(Error::IncompleteBranches(
                    "broken branch ends without turning",
                ))
            }
        }
    };
    let end = right.unwrap_or(span_hi);
    let apex = level_crossings(upper, lower)
        .into_iter()
        .find(|(s, _)| *s > left && *s < end);
    let Some(apex) = apex else {
        return Err(Error::IncompleteBranches(
            "no symmetric-branch crossing inside the broken region; widen the range",
        ));
    };
    Ok(TriangleGeometry {
        left_corner: Some((left, nearest_epsilon(pair, left))),
        apex: Some(apex),
        right_corner: right.map(|r| (r, nearest_epsilon(pair, r))),
        width: apex.0 - left,
    })
}

/// Averaged-model prediction of whether broken states exist at `params`,
/// `chi > |v J0(S/w)|`.
pub fn averaged_predicts_broken(params: &ModelParams) -> bool {
    params.chi() > (params.coupling() * bessel_j0(params.drive_ratio())).abs()
}
