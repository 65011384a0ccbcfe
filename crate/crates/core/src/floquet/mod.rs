//! Nonlinear Floquet states by harmonic balance.
//!
//! A Floquet state is written `c(z) = exp(-i eps z) sum_n (a_n, b_n)
//! exp(-i n w z)` with harmonics `|n| <= M`. Substituting into the coupled
//! equations gives algebraic equations for the coefficients, closed by a
//! normalization row and a phase row. They are solved by Gauss-Newton,
//! followed along `S/w` by pseudo-arclength continuation, and the resulting
//! branches are analysed for the quasienergy triangle.

mod continuation;
mod harmonic;
mod seed;
mod solver;
mod spectrum;
mod state;

use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

pub use continuation::{continue_branch, Branch, BranchLabel, StepControl};
pub use seed::{monodromy_seeds, ramp_chi, seed_from_averaged, CHI_RAMP_STEP};
pub use solver::{
    check_cutoff, default_cutoff, solve_floquet, solve_floquet_with, solve_resolved, CutoffCheck,
    NewtonSettings, Symmetry, CUTOFF_TOLERANCE,
};
pub use spectrum::{
    averaged_predicts_broken, distinct_quasienergies, floquet_localization, level_crossings,
    quasienergy_branches, states_at, triangle_width, BranchSettings, GridPoint, GridState,
    TriangleGeometry, DISTINCT_TOLERANCE,
};
pub use state::{fourier_coefficients, Component, FloquetState};

/// Harmonic-balance residual of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    /// Residual of the first mode equation at harmonics `-M..=M`.
    pub first: Vec<Complex64>,
    /// Residual of the second mode equation.
    pub second: Vec<Complex64>,
    /// `sum |a_n|^2 + |b_n|^2 - 1`.
    pub normalization: f64,
    /// Imaginary part of the anchor coefficient.
    pub gauge: f64,
}

impl Residual {
    /// Euclidean norm over all real components.
    pub fn norm(&self) -> f64 {
        let eq: f64 = self
            .first
            .iter()
            .chain(&self.second)
            .map(|c| c.norm_sqr())
            .sum();
        (eq + self.normalization * self.normalization + self.gauge * self.gauge).sqrt()
    }
}

/// Residual of the truncated harmonic-balance equations.
///
/// For harmonic `n` the first equation reads
/// `(eps + n w) a_n - (v/2) b_n + (S/4)(a_{n-1} + a_{n+1}) + s chi T_n`
/// with `T_n = sum_{j,k} a_j conj(a_k) a_{n-j+k}` over in-range indices; the
/// second swaps `a` and `b` and flips the sign of the drive term.
pub fn hb_residual(state: &FloquetState) -> Residual {
    let coeffs = harmonic::Coefficients {
        coupling: state.params.coupling(),
        drive: state.params.drive(),
        frequency: state.params.frequency(),
        signed_chi: state.params.signed_chi(),
    };
    let (first, second) = harmonic::equations(&coeffs, &state.first, &state.second, state.epsilon);
    let (component, n) = state.anchor();
    Residual {
        first,
        second,
        normalization: state.norm_sqr() - 1.0,
        gauge: state.coefficient(component, n).im,
    }
}
