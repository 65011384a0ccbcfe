//! Initial guesses for the Newton solver.

use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use super::solver::{solve_floquet_with, NewtonSettings, Symmetry};
use super::state::{fourier_coefficients, FloquetState};
use crate::averaged::StationaryState;
use crate::error::{Error, Result};
use crate::integrator::{default_step, monodromy, rk4_step, DEFAULT_STEP_DIVISOR};
use crate::model::{frame_phase, ModelParams};
use crate::zone_reduce;

type C = Complex64;

/// Increment of `chi/v` per continuation step in [`ramp_chi`].
pub const CHI_RAMP_STEP: f64 = 0.05;

fn sample_count(cutoff: usize) -> usize {
    4 * (2 * cutoff + 1)
}

/// `(a_n, b_n) -> ((-1)^n b_n, (-1)^n a_n)`.
fn parity_image(a: &[C], b: &[C]) -> (Vec<C>, Vec<C>) {
    let m = (a.len() / 2) as i64;
    let sign = |k: usize| {
        if (k as i64 - m).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    };
    (
        b.iter().enumerate().map(|(k, x)| x * sign(k)).collect(),
        a.iter().enumerate().map(|(k, x)| x * sign(k)).collect(),
    )
}

pub(crate) fn normalized(
    params: ModelParams,
    cutoff: usize,
    a: Vec<C>,
    b: Vec<C>,
    eps: f64,
) -> FloquetState {
    let norm = a.iter().chain(&b).map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut state = FloquetState::new(
        params,
        cutoff,
        a.iter().map(|c| c / norm).collect(),
        b.iter().map(|c| c / norm).collect(),
        eps,
    );
    state.canonicalize();
    state
}

/// The two linear Floquet states at `params` with `chi` set to zero,
/// `[even, odd]` under the swap symmetry.
///
/// Each monodromy eigenvector is propagated over one period, stripped of
/// its quasienergy phase and Fourier transformed. The results are projected
/// onto the symmetric subspaces, which also separates the pair at the
/// degeneracy point, and polished by Newton.
pub fn monodromy_seeds(params: &ModelParams, cutoff: usize) -> Result<[FloquetState; 2]> {
    let linear = params.with_chi(0.0)?;
    let step = default_step(&linear, DEFAULT_STEP_DIVISOR);
    let matrix = monodromy(&linear, step)?;
    let period = linear.period();
    let w = linear.frequency();
    let count = sample_count(cutoff);
    let dz = period / count as f64;
    let sub = (dz / step).ceil() as usize;
    let h = dz / sub as f64;

    let eigenvalues = matrix.eigenvalues();
    let vectors = matrix.eigenvectors();
    let mut candidates = Vec::new();
    for (lambda, vector) in eigenvalues.iter().zip(vectors.iter()) {
        let eps = zone_reduce(-lambda.arg() / period, w);
        let mut y = *vector;
        let mut first = Vec::with_capacity(count);
        let mut second = Vec::with_capacity(count);
        for j in 0..count {
            let z = j as f64 * dz;
            let unwind = C::from_polar(1.0, eps * z);
            first.push(y[0] * unwind);
            second.push(y[1] * unwind);
            for i in 0..sub {
                y = rk4_step(&linear, z + i as f64 * h, &y, h);
            }
        }
        let a = fourier_coefficients(&first, cutoff);
        let b = fourier_coefficients(&second, cutoff);
        let (pa, pb) = parity_image(&a, &b);
        let even: (Vec<C>, Vec<C>) = (
            a.iter().zip(&pa).map(|(x, y)| (x + y) * 0.5).collect(),
            b.iter().zip(&pb).map(|(x, y)| (x + y) * 0.5).collect(),
        );
        let odd: (Vec<C>, Vec<C>) = (
            a.iter().zip(&pa).map(|(x, y)| (x - y) * 0.5).collect(),
            b.iter().zip(&pb).map(|(x, y)| (x - y) * 0.5).collect(),
        );
        candidates.push((eps, even, odd));
    }
    let weight =
        |x: &(Vec<C>, Vec<C>)| -> f64 { x.0.iter().chain(&x.1).map(|c| c.norm_sqr()).sum() };
    let pick = |take_even: bool| {
        let best = candidates
            .iter()
            .max_by(|p, q| {
                let (wp, wq) = if take_even {
                    (weight(&p.1), weight(&q.1))
                } else {
                    (weight(&p.2), weight(&q.2))
                };
                wp.total_cmp(&wq)
            })
            .expect("two eigenvectors");
        let part = if take_even { &best.1 } else { &best.2 };
        (best.0, part.0.clone(), part.1.clone())
    };
    let settings = NewtonSettings::default();
    let (eps, a, b) = pick(true);
    let even = solve_floquet_with(
        &normalized(linear, cutoff, a, b, eps),
        Symmetry::Even,
        &settings,
    )?;
    let (eps, a, b) = pick(false);
    let odd = solve_floquet_with(
        &normalized(linear, cutoff, a, b, eps),
        Symmetry::Odd,
        &settings,
    )?;
    Ok([even, odd])
}

/// Follows a state from its current `chi` to `target_chi` in increments of
/// [`CHI_RAMP_STEP`] times `v`, solving at each stage.
pub fn ramp_chi(state: &FloquetState, target_chi: f64, symmetry: Symmetry) -> Result<FloquetState> {
    if !(target_chi.is_finite() && target_chi >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "chi",
            value: target_chi,
            reason: "must be non-negative",
        });
    }
    let start = state.params.chi();
    let span = target_chi - start;
    let increment = CHI_RAMP_STEP * state.params.coupling();
    let stages = ((span.abs() / increment).ceil() as usize).max(1);
    let settings = NewtonSettings::default();
    let mut current = state.clone();
    // Symmetry labels follow zone shifts inside the solver.
    let mut symmetry = symmetry;
    for k in 1..=stages {
        let chi = start + span * k as f64 / stages as f64;
        let mut seed = current.clone();
        seed.params = seed.params.with_chi(chi)?;
        let next = solve_floquet_with(&seed, symmetry, &settings)?;
        if symmetry != Symmetry::None {
            symmetry = Symmetry::of(&next, 1e-9);
        }
        current = next;
    }
    Ok(current)
}

/// Fourier coefficients of the averaged-model state mapped back to the
/// laboratory frame, `c1 = phi1 exp(i theta)`, `c2 = phi2 exp(-i theta)`
/// with `theta = S sin(w z)/(2 w)`. The result is a Newton seed, not a
/// solution.
pub fn seed_from_averaged(
    params: &ModelParams,
    stationary: &StationaryState,
    cutoff: usize,
) -> FloquetState {
    let count = sample_count(cutoff);
    let dz = params.period() / count as f64;
    let mut first = Vec::with_capacity(count);
    let mut second = Vec::with_capacity(count);
    for j in 0..count {
        let phase = C::from_polar(1.0, frame_phase(params, j as f64 * dz));
        first.push(stationary.phi[0] * phase);
        second.push(stationary.phi[1] * phase.conj());
    }
    normalized(
        *params,
        cutoff,
        fourier_coefficients(&first, cutoff),
        fourier_coefficients(&second, cutoff),
        stationary.mu,
    )
}
