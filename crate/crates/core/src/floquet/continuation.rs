//! Pseudo-arclength continuation of Floquet states in `S/w`.

use alloc::vec::Vec;

use nalgebra::DVector;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use super::solver::{
    least_squares, newton, solve_floquet_with, Constraint, NewtonSettings, Problem, Symmetry,
};
use super::state::FloquetState;
use crate::error::{Error, Result};
use crate::zone_index;

/// Arclength step adaptation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub initial: f64,
    /// Smallest step tried before the branch is declared truncated.
    pub min: f64,
    pub max: f64,
    /// Growth factor after a fast Newton correction.
    pub growth: f64,
    /// Corrections taking at most this many iterations count as fast.
    pub fast_iterations: usize,
    /// Hard limit on stored points per direction.
    pub max_points: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial: 0.02,
            min: 1e-5,
            max: 0.1,
            growth: 1.3,
            fast_iterations: 3,
            max_points: 5000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchLabel {
    /// Even under the swap symmetry; the upper level below the first root
    /// of `J0`.
    Upper,
    /// Odd under the swap symmetry.
    Lower,
    /// Broken-symmetry states. Only one member of each degenerate pair is
    /// stored; the other is its [`FloquetState::swap_partner`].
    BrokenPair,
}

/// A continuation curve of Floquet states ordered by arclength.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub points: Vec<FloquetState>,
    /// `S/w` where the curve turns back.
    pub fold_points: Vec<f64>,
    pub label: BranchLabel,
    pub symmetry: Symmetry,
    /// Continuation stopped because the step fell below its minimum.
    pub truncated: bool,
    /// The curve returned to its starting point.
    pub closed: bool,
    /// `S/w` interval the continuation was confined to.
    pub range: (f64, f64),
}

impl Branch {
    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.drive_ratio()).collect()
    }

    /// Smallest and largest `S/w` on the branch.
    pub fn span(&self) -> (f64, f64) {
        self.points
            .iter()
            .map(|p| p.drive_ratio())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            })
    }
}

/// State-space distance allowed between consecutive points relative to
/// the arclength step.
const JUMP_FACTOR: f64 = 2.0;

/// Parity overlap above which a broken branch counts as merged into a
/// symmetric one.
const MERGE_TOLERANCE: f64 = 1e-7;

struct Walk {
    points: Vec<FloquetState>,
    folds: Vec<f64>,
    truncated: bool,
    closed: bool,
}

fn unit_tangent(
    problem: &Problem,
    u: &DVector<f64>,
    previous: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (_, j) = problem.evaluate(u);
    let rows = j.nrows();
    let mut j = j.insert_row(rows, 0.0);
    j.row_mut(rows).copy_from(&previous.transpose());
    let mut rhs = DVector::zeros(rows + 1);
    rhs[rows] = 1.0;
    let t = least_squares(j, &rhs)?;
    Ok(&t / t.norm())
}

fn finish(problem: &Problem, u: &DVector<f64>) -> Result<FloquetState> {
    let mut state = problem.state(u)?;
    if zone_index(state.epsilon, state.params.frequency()) != 0 {
        return solve_floquet_with(&state, problem.symmetry, &NewtonSettings::default());
    }
    state.canonicalize();
    state.residual_norm = super::hb_residual(&state).norm();
    Ok(state)
}

/// Broken-branch bookkeeping: which guide the start favours.
fn side(state: &FloquetState) -> f64 {
    (state.localization() - 0.5).signum()
}

fn walk(
    start: &FloquetState,
    symmetry: Symmetry,
    range: (f64, f64),
    direction: f64,
    control: &StepControl,
) -> Result<Walk> {
    let settings = NewtonSettings::default();
    let mut problem = Problem::for_state(start, symmetry, true);
    let mut u = problem.pack(start);
    let s_index = problem.ratio_index();
    let dim = problem.dim();
    let mut axis = DVector::zeros(dim);
    axis[s_index] = direction;
    let mut tangent = unit_tangent(&problem, &u, &axis)?;
    if tangent[s_index] * direction < 0.0 {
        tangent = -tangent;
    }
    let origin = u.clone();
    let start_side = side(start);

    let mut out = Walk {
        points: Vec::new(),
        folds: Vec::new(),
        truncated: false,
        closed: false,
    };
    let mut h = control.initial;
    let (lo, hi) = range;
    while out.points.len() < control.max_points {
        let s = u[s_index];
        let ts = tangent[s_index];
        let mut step = h;
        let mut at_boundary = false;
        let bound = if ts > 0.0 { hi } else { lo };
        if ts != 0.0 && (s + step * ts - bound) * ts.signum() >= 0.0 {
            step = (bound - s) / ts;
            at_boundary = true;
        }
        let predicted = &u + &tangent * step;
        let attempt = if at_boundary {
            // Land exactly on the boundary with a natural-parameter row.
            let mut axis = DVector::zeros(dim);
            axis[s_index] = 1.0;
            newton(
                &problem,
                predicted.clone(),
                Some(&Constraint {
                    tangent: &axis,
                    anchor: &predicted,
                }),
                &settings,
            )
        } else {
            newton(
                &problem,
                predicted.clone(),
                Some(&Constraint {
                    tangent: &tangent,
                    anchor: &predicted,
                }),
                &settings,
            )
        };
        let accepted = attempt.and_then(|solution| {
            let next = solution.unknowns;
            if (&next - &u).norm() > JUMP_FACTOR * step.abs().max(control.min) {
                return Err(Error::NoConvergence {
                    iterations: solution.iterations,
                    residual: f64::NAN,
                });
            }
            let mut probe = problem.clone();
            probe.reference = reference_of(&problem, &next);
            let new_tangent = unit_tangent(&probe, &next, &tangent)?;
            Ok((next, new_tangent, solution.iterations, probe))
        });
        let (next, new_tangent, iterations, probe) = match accepted {
            Ok(v) => v,
            Err(_) => {
                h *= 0.5;
                if h < control.min {
                    out.truncated = true;
                    break;
                }
                continue;
            }
        };
        let fold = new_tangent[s_index] * ts < 0.0;
        let state = finish(&probe, &next)?;
        if symmetry == Symmetry::None {
            let merged = state.parity().abs() > 1.0 - MERGE_TOLERANCE;
            let crossed = side(&state) != start_side;
            if merged || crossed {
                if fold {
                    out.folds
                        .push(fold_location(s, ts, new_tangent[s_index], step));
                    break;
                }
                h *= 0.5;
                if h < control.min {
                    // Converged onto the merging point itself.
                    out.folds.push(s);
                    break;
                }
                continue;
            }
        }
        if fold {
            out.folds
                .push(fold_location(s, ts, new_tangent[s_index], step));
        }
        u = next;
        tangent = new_tangent;
        problem = probe;
        out.points.push(state);
        if iterations <= control.fast_iterations {
            h = (h * control.growth).min(control.max);
        }
        if at_boundary {
            break;
        }
        if out.points.len() > 3 && (&u - &origin).norm() < h {
            out.closed = true;
            break;
        }
    }
    Ok(out)
}

fn reference_of(problem: &Problem, u: &DVector<f64>) -> Vec<num_complex::Complex64> {
    let (a, b, _) = problem.unpack(u);
    a.into_iter().chain(b).collect()
}

/// `S/w` of a turning point between two points `length` apart in
/// arclength whose tangents have `S/w` components `t0` and `t1` of opposite
/// sign, assuming that component varies linearly along the step.
fn fold_location(s0: f64, t0: f64, t1: f64, length: f64) -> f64 {
    s0 + 0.5 * length * t0 * t0 / (t0 - t1)
}

/// Continues `start` in both directions of `S/w` across `range`.
///
/// Symmetric starts are followed inside their symmetric subspace. A broken
/// start is followed until the range ends or the curve turns back into its
/// swap partner, which marks the bifurcation from a symmetric branch.
pub fn continue_branch(
    start: &FloquetState,
    range: (f64, f64),
    control: &StepControl,
) -> Result<Branch> {
    let (lo, hi) = range;
    let s = start.drive_ratio();
    if !(lo <= s && s <= hi) {
        return Err(Error::InvalidParameter {
            name: "S/w",
            value: s,
            reason: "start outside continuation range",
        });
    }
    let symmetry = Symmetry::of(start, 1e-9);
    let label = match symmetry {
        Symmetry::Even => BranchLabel::Upper,
        Symmetry::Odd => BranchLabel::Lower,
        Symmetry::None => BranchLabel::BrokenPair,
    };
    let backward = if s > lo {
        walk(start, symmetry, range, -1.0, control)?
    } else {
        Walk {
            points: Vec::new(),
            folds: Vec::new(),
            truncated: false,
            closed: false,
        }
    };
    let forward = if backward.closed || s >= hi {
        Walk {
            points: Vec::new(),
            folds: Vec::new(),
            truncated: false,
            closed: false,
        }
    } else {
        walk(start, symmetry, range, 1.0, control)?
    };
    let mut points: Vec<FloquetState> = backward.points.into_iter().rev().collect();
    points.push(start.clone());
    points.extend(forward.points);
    let mut fold_points = backward.folds;
    fold_points.extend(forward.folds);
    fold_points.sort_by(f64::total_cmp);
    Ok(Branch {
        points,
        fold_points,
        label,
        symmetry,
        truncated: backward.truncated || forward.truncated,
        closed: backward.closed,
        range,
    })
}
