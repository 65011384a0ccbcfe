//! Gauss-Newton solution of the harmonic-balance system.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use super::harmonic::{self, Coefficients};
use super::state::FloquetState;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::zone_index;

type C = Complex64;

/// Subspace the solution is restricted to.
///
/// `Even` and `Odd` impose `b_n = +-(-1)^n a_n`, the states invariant under
/// the swap-and-half-period-shift symmetry. Solving there keeps the
/// Jacobian regular where broken-symmetry states bifurcate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symmetry {
    None,
    Even,
    Odd,
}

impl Symmetry {
    fn sign(self) -> f64 {
        match self {
            Symmetry::Odd => -1.0,
            _ => 1.0,
        }
    }

    /// The same subspace after relabelling harmonics by `k`.
    pub(crate) fn shifted(self, k: i64) -> Self {
        match (self, k.rem_euclid(2)) {
            (Symmetry::Even, 1) => Symmetry::Odd,
            (Symmetry::Odd, 1) => Symmetry::Even,
            (s, _) => s,
        }
    }

    /// Classifies a state by its parity overlap.
    pub fn of(state: &FloquetState, tolerance: f64) -> Self {
        let p = state.parity();
        if (p - 1.0).abs() <= tolerance {
            Symmetry::Even
        } else if (p + 1.0).abs() <= tolerance {
            Symmetry::Odd
        } else {
            Symmetry::None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSettings {
    /// Convergence threshold on the residual norm.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
        }
    }
}

/// Relative pivot size below which the Jacobian counts as singular.
const PIVOT_RATIO: f64 = 1e-12;

/// Backtracking halvings before a Newton step is given up.
const MAX_HALVINGS: usize = 10;

/// A harmonic-balance system in packed real unknowns.
#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub params: ModelParams,
    pub cutoff: usize,
    pub symmetry: Symmetry,
    /// Phase reference in full space, `a` then `b`.
    pub reference: Vec<C>,
    /// `S/w` is an unknown (continuation).
    pub free_ratio: bool,
}

pub(crate) struct Solution {
    pub unknowns: DVector<f64>,
    pub iterations: usize,
}

impl Problem {
    pub fn for_state(state: &FloquetState, symmetry: Symmetry, free_ratio: bool) -> Self {
        Self {
            params: state.params,
            cutoff: state.cutoff,
            symmetry,
            reference: state.first.iter().chain(&state.second).copied().collect(),
            free_ratio,
        }
    }

    fn harmonics(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Columns carrying coefficients.
    fn coefficient_dim(&self) -> usize {
        match self.symmetry {
            Symmetry::None => 4 * self.harmonics(),
            _ => 2 * self.harmonics(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficient_dim() + 1 + usize::from(self.free_ratio)
    }

    pub fn epsilon_index(&self) -> usize {
        self.coefficient_dim()
    }

    pub fn ratio_index(&self) -> usize {
        self.coefficient_dim() + 1
    }

    fn mirror(&self, k: usize) -> f64 {
        let n = k as i64 - self.cutoff as i64;
        if n.rem_euclid(2) == 0 {
            self.symmetry.sign()
        } else {
            -self.symmetry.sign()
        }
    }

    pub fn pack(&self, state: &FloquetState) -> DVector<f64> {
        let n = self.harmonics();
        let mut u = DVector::zeros(self.dim());
        for k in 0..n {
            u[k] = state.first[k].re;
            u[n + k] = state.first[k].im;
            if self.symmetry == Symmetry::None {
                u[2 * n + k] = state.second[k].re;
                u[3 * n + k] = state.second[k].im;
            }
        }
        u[self.epsilon_index()] = state.epsilon;
        if self.free_ratio {
            u[self.ratio_index()] = state.params.drive_ratio();
        }
        u
    }

    pub fn ratio(&self, u: &DVector<f64>) -> f64 {
        if self.free_ratio {
            u[self.ratio_index()]
        } else {
            self.params.drive_ratio()
        }
    }

    pub fn unpack(&self, u: &DVector<f64>) -> (Vec<C>, Vec<C>, f64) {
        let n = self.harmonics();
        let a: Vec<C> = (0..n).map(|k| C::new(u[k], u[n + k])).collect();
        let b: Vec<C> = match self.symmetry {
            Symmetry::None => (0..n).map(|k| C::new(u[2 * n + k], u[3 * n + k])).collect(),
            _ => (0..n).map(|k| a[k] * self.mirror(k)).collect(),
        };
        (a, b, u[self.epsilon_index()])
    }

    fn coefficients(&self, ratio: f64) -> Coefficients {
        Coefficients {
            coupling: self.params.coupling(),
            drive: ratio * self.params.frequency(),
            frequency: self.params.frequency(),
            signed_chi: self.params.signed_chi(),
        }
    }

    /// Residual and Jacobian in packed coordinates.
    pub fn evaluate(&self, u: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (a, b, eps) = self.unpack(u);
        let coeffs = self.coefficients(self.ratio(u));
        let (f, full) = harmonic::system(&coeffs, &a, &b, eps, &self.reference, self.free_ratio);
        if self.symmetry == Symmetry::None {
            return (f, full);
        }
        // Chain rule through b_n = mirror_n a_n.
        let n = self.harmonics();
        let mut j = DMatrix::zeros(full.nrows(), self.dim());
        for k in 0..n {
            let s = self.mirror(k);
            for row in 0..full.nrows() {
                j[(row, k)] = full[(row, k)] + s * full[(row, 2 * n + k)];
                j[(row, n + k)] = full[(row, n + k)] + s * full[(row, 3 * n + k)];
            }
        }
        for extra in 0..(1 + usize::from(self.free_ratio)) {
            j.set_column(2 * n + extra, &full.column(4 * n + extra));
        }
        (f, j)
    }

    #[cfg(test)]
    pub fn residual(&self, u: &DVector<f64>) -> DVector<f64> {
        self.evaluate(u).0
    }

    pub fn state(&self, u: &DVector<f64>) -> Result<FloquetState> {
        let (a, b, eps) = self.unpack(u);
        let params = self.params.with_drive_ratio(self.ratio(u))?;
        Ok(FloquetState::new(params, self.cutoff, a, b, eps))
    }
}

/// Least-squares solution of `j x = rhs` by Householder QR.
pub(crate) fn least_squares(j: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let cols = j.ncols();
    let qr = j.qr();
    let r = qr.r();
    let mut smallest = f64::INFINITY;
    let mut largest: f64 = 0.0;
    for i in 0..cols {
        let d = r[(i, i)].abs();
        smallest = smallest.min(d);
        largest = largest.max(d);
    }
    if !largest.is_finite() || smallest <= PIVOT_RATIO * largest {
        return Err(Error::SingularJacobian {
            min_pivot: if largest > 0.0 {
                smallest / largest
            } else {
                0.0
            },
        });
    }
    let mut qtb = rhs.clone();
    qr.q_tr_mul(&mut qtb);
    let top = qtb.rows(0, cols).into_owned();
    r.solve_upper_triangular(&top)
        .ok_or(Error::SingularJacobian { min_pivot: 0.0 })
}

/// An extra linear row `t . (u - anchor) = 0`, the pseudo-arclength
/// constraint.
pub(crate) struct Constraint<'a> {
    pub tangent: &'a DVector<f64>,
    pub anchor: &'a DVector<f64>,
}

fn bordered(
    problem: &Problem,
    u: &DVector<f64>,
    constraint: Option<&Constraint>,
) -> (DVector<f64>, DMatrix<f64>) {
    let (f, j) = problem.evaluate(u);
    match constraint {
        None => (f, j),
        Some(c) => {
            let rows = f.len();
            let f = f.insert_row(rows, c.tangent.dot(&(u - c.anchor)));
            let mut j = j.insert_row(rows, 0.0);
            j.row_mut(rows).copy_from(&c.tangent.transpose());
            (f, j)
        }
    }
}

/// Damped Gauss-Newton iteration from `u`.
pub(crate) fn newton(
    problem: &Problem,
    mut u: DVector<f64>,
    constraint: Option<&Constraint>,
    settings: &NewtonSettings,
) -> Result<Solution> {
    let (mut f, mut j) = bordered(problem, &u, constraint);
    let mut norm = f.norm();
    for iteration in 0..=settings.max_iterations {
        if !norm.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iteration,
                residual: norm,
            });
        }
        if norm < settings.tolerance {
            return Ok(Solution {
                unknowns: u,
                iterations: iteration,
            });
        }
        if iteration == settings.max_iterations {
            break;
        }
        let step = least_squares(j.clone(), &(-&f))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &u + &step * lambda;
            let (tf, tj) = bordered(problem, &trial, constraint);
            let tn = tf.norm();
            if tn < norm {
                u = trial;
                f = tf;
                j = tj;
                norm = tn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: iteration + 1,
                residual: norm,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iterations,
        residual: norm,
    })
}

/// Solves at fixed parameters in the given subspace, reduces the
/// quasienergy to the first zone and returns the canonical state.
pub fn solve_floquet_with(
    seed: &FloquetState,
    symmetry: Symmetry,
    settings: &NewtonSettings,
) -> Result<FloquetState> {
    if !seed.residual_norm.is_finite() {
        return Err(Error::NonFinite { z: 0.0 });
    }
    if seed.cutoff == 0 {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let problem = Problem::for_state(seed, symmetry, false);
    let solution = newton(&problem, problem.pack(seed), None, settings)?;
    let state = problem.state(&solution.unknowns)?;
    let k = zone_index(state.epsilon, state.params.frequency());
    let mut state = if k == 0 {
        state
    } else {
        let shifted = state.shifted(k);
        let problem = Problem::for_state(&shifted, symmetry.shifted(k), false);
        let solution = newton(&problem, problem.pack(&shifted), None, settings)?;
        problem.state(&solution.unknowns)?
    };
    state.canonicalize();
    state.residual_norm = super::hb_residual(&state).norm();
    Ok(state)
}

/// Solves with default settings, restricting to a symmetric subspace when
/// the seed already lies in one.
pub fn solve_floquet(seed: &FloquetState) -> Result<FloquetState> {
    solve_floquet_with(seed, Symmetry::of(seed, 1e-12), &NewtonSettings::default())
}

/// Outcome of re-solving a state with twice the cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffCheck {
    /// Quasienergy shift between cutoffs `M` and `2M`.
    pub epsilon_change: f64,
    pub resolved: bool,
    pub refined: FloquetState,
}

/// Largest quasienergy change tolerated when the cutoff is doubled.
pub const CUTOFF_TOLERANCE: f64 = 1e-8;

/// Re-solves `state` with cutoff `2M` and compares quasienergies.
pub fn check_cutoff(state: &FloquetState, symmetry: Symmetry) -> Result<CutoffCheck> {
    let wide = state.with_cutoff(2 * state.cutoff);
    let refined = solve_floquet_with(&wide, symmetry, &NewtonSettings::default())?;
    let w = state.params.frequency();
    let change = crate::zone_reduce(refined.epsilon - state.epsilon, w).abs();
    Ok(CutoffCheck {
        epsilon_change: change,
        resolved: change < CUTOFF_TOLERANCE,
        refined,
    })
}

/// Solves and doubles the cutoff until [`check_cutoff`] passes, at most
/// `max_doublings` times. Returns the last state and whether it passed.
pub fn solve_resolved(
    seed: &FloquetState,
    symmetry: Symmetry,
    max_doublings: usize,
) -> Result<(FloquetState, bool)> {
    let mut state = solve_floquet_with(seed, symmetry, &NewtonSettings::default())?;
    for _ in 0..=max_doublings {
        let check = check_cutoff(&state, symmetry)?;
        if check.resolved {
            return Ok((state, true));
        }
        state = check.refined;
    }
    Ok((state, false))
}

/// Default harmonic cutoff for a driving frequency `w/v`.
pub fn default_cutoff(w_over_v: f64) -> usize {
    if w_over_v >= 10.0 {
        12
    } else if w_over_v >= 3.0 {
        32
    } else {
        64
    }
}
