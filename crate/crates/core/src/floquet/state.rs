use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::integrator::{default_step, integrate, DEFAULT_STEP_DIVISOR};
use crate::model::{ModePair, ModelParams};

/// Which mode a Fourier coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    First,
    Second,
}

/// A Floquet solution `c(z) = exp(-i eps z) sum_n (a_n, b_n) exp(-i n w z)`
/// truncated to harmonics `-M..=M`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetState {
    /// Harmonics of the periodic part of `c1`; entry `k` holds `n = k - M`.
    pub first: Vec<Complex64>,
    /// Harmonics of the periodic part of `c2`.
    pub second: Vec<Complex64>,
    /// Quasienergy.
    pub epsilon: f64,
    pub params: ModelParams,
    /// Harmonic cutoff `M`.
    pub cutoff: usize,
    /// Norm of the harmonic-balance residual, including the normalization
    /// and gauge rows.
    pub residual_norm: f64,
}

impl FloquetState {
    /// Wraps coefficient vectors of length `2M + 1` and records their
    /// residual.
    pub fn new(
        params: ModelParams,
        cutoff: usize,
        first: Vec<Complex64>,
        second: Vec<Complex64>,
        epsilon: f64,
    ) -> Self {
        assert_eq!(first.len(), 2 * cutoff + 1, "first harmonics length");
        assert_eq!(second.len(), 2 * cutoff + 1, "second harmonics length");
        let mut state = Self {
            first,
            second,
            epsilon,
            params,
            cutoff,
            residual_norm: f64::NAN,
        };
        state.residual_norm = super::hb_residual(&state).norm();
        state
    }

    pub fn harmonic_count(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Coefficient of harmonic `n`, zero outside the cutoff.
    pub fn coefficient(&self, component: Component, n: i64) -> Complex64 {
        let m = self.cutoff as i64;
        if n < -m || n > m {
            return Complex64::new(0.0, 0.0);
        }
        let k = (n + m) as usize;
        match component {
            Component::First => self.first[k],
            Component::Second => self.second[k],
        }
    }

    pub fn drive_ratio(&self) -> f64 {
        self.params.drive_ratio()
    }

    /// `sum |a_n|^2 + |b_n|^2`, the period average of the total intensity.
    pub fn norm_sqr(&self) -> f64 {
        self.first
            .iter()
            .chain(&self.second)
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Period-averaged intensity in the first guide, `sum |a_n|^2`.
    pub fn localization(&self) -> f64 {
        self.first.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `<x, P x>` for the swap-and-shift symmetry
    /// `P: (a_n, b_n) -> ((-1)^n b_n, (-1)^n a_n)`. Equals `+1` or `-1` on
    /// symmetric states and lies strictly inside for broken ones.
    pub fn parity(&self) -> f64 {
        let m = self.cutoff as i64;
        let mut acc = 0.0;
        for (k, (a, b)) in self.first.iter().zip(&self.second).enumerate() {
            let sign = if (k as i64 - m).rem_euclid(2) == 0 {
                1.0
            } else {
                -1.0
            };
            acc += sign * (a.conj() * b).re;
        }
        2.0 * acc / self.norm_sqr()
    }

    /// The image under `c1(z) <-> c2(z + T/2)`, again a Floquet state with
    /// the same quasienergy.
    pub fn swap_partner(&self) -> Self {
        let m = self.cutoff as i64;
        let flip = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter()
                .enumerate()
                .map(|(k, c)| {
                    if (k as i64 - m).rem_euclid(2) == 0 {
                        *c
                    } else {
                        -*c
                    }
                })
                .collect()
        };
        let mut partner = Self {
            first: flip(&self.second),
            second: flip(&self.first),
            ..self.clone()
        };
        partner.canonicalize();
        partner.residual_norm = super::hb_residual(&partner).norm();
        partner
    }

    /// Largest-modulus coefficient, used as the phase anchor.
    pub fn anchor(&self) -> (Component, i64) {
        let m = self.cutoff as i64;
        let mut best = (Component::First, 0, -1.0);
        for (k, (a, b)) in self.first.iter().zip(&self.second).enumerate() {
            if a.norm_sqr() > best.2 {
                best = (Component::First, k as i64 - m, a.norm_sqr());
            }
            if b.norm_sqr() > best.2 {
                best = (Component::Second, k as i64 - m, b.norm_sqr());
            }
        }
        (best.0, best.1)
    }

    /// Rotates the global phase so the anchor coefficient is real and
    /// non-negative.
    pub(crate) fn canonicalize(&mut self) {
        let (component, n) = self.anchor();
        let c = self.coefficient(component, n);
        if c.norm() == 0.0 {
            return;
        }
        let phase = c.conj() / c.norm();
        for x in self.first.iter_mut().chain(self.second.iter_mut()) {
            *x *= phase;
        }
    }

    /// Amplitudes `c(z)` including the quasienergy phase.
    pub fn amplitudes_at(&self, z: f64) -> ModePair {
        let m = self.cutoff as i64;
        let w = self.params.frequency();
        let mut c1 = Complex64::new(0.0, 0.0);
        let mut c2 = Complex64::new(0.0, 0.0);
        for (k, (a, b)) in self.first.iter().zip(&self.second).enumerate() {
            let n = (k as i64 - m) as f64;
            let e = Complex64::from_polar(1.0, -n * w * z);
            c1 += a * e;
            c2 += b * e;
        }
        let phase = Complex64::from_polar(1.0, -self.epsilon * z);
        [c1 * phase, c2 * phase]
    }

    /// Propagates `c(0)` over one period with the Runge-Kutta integrator
    /// and returns `max_k |c_k(T) - exp(-i eps T) c_k(0)|`.
    pub fn round_trip_error(&self, step_divisor: f64) -> f64 {
        let period = self.params.period();
        let start = self.amplitudes_at(0.0);
        let steps = (period / default_step(&self.params, step_divisor)).ceil() as usize;
        let end = integrate(&self.params, start, period, steps.max(1));
        let phase = Complex64::from_polar(1.0, -self.epsilon * period);
        (end[0] - start[0] * phase)
            .norm()
            .max((end[1] - start[1] * phase).norm())
    }

    /// [`FloquetState::round_trip_error`] at the default step.
    pub fn round_trip_default(&self) -> f64 {
        self.round_trip_error(DEFAULT_STEP_DIVISOR)
    }

    /// Distance between coefficient vectors after the best global phase
    /// alignment, `min_theta |x - exp(i theta) y|`.
    pub fn distance(&self, other: &Self) -> f64 {
        let m = self.cutoff.max(other.cutoff) as i64;
        let mut overlap = Complex64::new(0.0, 0.0);
        let mut total = 0.0;
        for n in -m..=m {
            for comp in [Component::First, Component::Second] {
                let x = self.coefficient(comp, n);
                let y = other.coefficient(comp, n);
                overlap += x.conj() * y;
                total += x.norm_sqr() + y.norm_sqr();
            }
        }
        (total - 2.0 * overlap.norm()).max(0.0).sqrt()
    }

    /// Same state with harmonics embedded in (or truncated to) cutoff `m`.
    pub fn with_cutoff(&self, m: usize) -> Self {
        let resize = |comp: Component| -> Vec<Complex64> {
            (-(m as i64)..=m as i64)
                .map(|n| self.coefficient(comp, n))
                .collect()
        };
        Self::new(
            self.params,
            m,
            resize(Component::First),
            resize(Component::Second),
            self.epsilon,
        )
    }

    /// Relabels harmonics so that the quasienergy drops by `k w`. The
    /// time-domain solution is unchanged except for coefficients pushed
    /// past the cutoff.
    pub fn shifted(&self, k: i64) -> Self {
        let m = self.cutoff as i64;
        let shift = |comp: Component| -> Vec<Complex64> {
            (-m..=m).map(|n| self.coefficient(comp, n - k)).collect()
        };
        Self::new(
            self.params,
            self.cutoff,
            shift(Component::First),
            shift(Component::Second),
            self.epsilon - k as f64 * self.params.frequency(),
        )
    }
}

/// Fourier coefficients `x_n = (1/K) sum_j f(z_j) exp(+i n w z_j)` of
/// `K` equispaced samples over one period, for `n = -m..=m`.
pub fn fourier_coefficients(samples: &[Complex64], m: usize) -> Vec<Complex64> {
    let count = samples.len() as f64;
    (-(m as i64)..=m as i64)
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, f) in samples.iter().enumerate() {
                let angle = 2.0 * core::f64::consts::PI * (n as f64) * (j as f64) / count;
                acc += f * Complex64::from_polar(1.0, angle);
            }
            acc / count
        })
        .collect()
}
