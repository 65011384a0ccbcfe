//! Fixed-step classical Runge-Kutta propagation and the linear monodromy
//! matrix.

use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{Amplitudes, ModePair, ModelParams};
use crate::zone_reduce;

/// Norm drift accepted before a trajectory is flagged invalid.
pub const DEFAULT_DRIFT_TOLERANCE: f64 = 1e-9;

/// Default number of steps per resolved length scale.
pub const DEFAULT_STEP_DIVISOR: f64 = 400.0;

/// Step length `min(period, 1/v, 1/h_max) / divisor`, where
/// `h_max = (v + S)/2 + chi` bounds the instantaneous generator. The last
/// term keeps the Runge-Kutta norm loss below `1e-9` over `200/v` for drives
/// up to `S/w = 3` at `w/v = 10`.
pub fn default_step(params: &ModelParams, divisor: f64) -> f64 {
    let generator = 0.5 * (params.coupling() + params.drive()) + params.chi();
    params
        .period()
        .min(1.0 / params.coupling())
        .min(1.0 / generator)
        / divisor
}

#[inline]
fn axpy(y: &ModePair, a: f64, k: &ModePair) -> ModePair {
    [y[0] + k[0] * a, y[1] + k[1] * a]
}

/// One classical fourth-order Runge-Kutta step.
#[inline]
pub(crate) fn rk4_step(params: &ModelParams, z: f64, y: &ModePair, h: f64) -> ModePair {
    let k1 = params.derivative(z, y);
    let k2 = params.derivative(z + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = params.derivative(z + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = params.derivative(z + h, &axpy(y, h, &k3));
    let w = h / 6.0;
    [
        y[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * w,
        y[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * w,
    ]
}

fn step_count(length: f64, step: f64) -> usize {
    let n = (length / step - 1e-9).ceil();
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

/// Integrates `initial` from `z = 0` to `z_end` in `steps` equal steps,
/// returning the final state.
pub(crate) fn integrate(
    params: &ModelParams,
    initial: ModePair,
    z_end: f64,
    steps: usize,
) -> ModePair {
    let h = z_end / steps as f64;
    let mut y = initial;
    for k in 0..steps {
        y = rk4_step(params, k as f64 * h, &y, h);
    }
    y
}

/// Sampled solution of the driven coupler.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: ModelParams,
    pub z: Vec<f64>,
    pub states: Vec<ModePair>,
    /// Largest `| |c1|^2 + |c2|^2 - 1 |` seen over every integration step.
    pub norm_drift: f64,
    pub drift_tolerance: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.norm_drift <= self.drift_tolerance
    }

    /// `Ok` when the norm drift stayed inside tolerance.
    pub fn check(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::NormDrift {
                drift: self.norm_drift,
                tolerance: self.drift_tolerance,
            })
        }
    }

    pub fn initial(&self) -> Option<&ModePair> {
        self.states.first()
    }

    pub fn z_max(&self) -> f64 {
        self.z.last().copied().unwrap_or(0.0)
    }
}

/// Propagation settings; `step` and `z_max` are in the model's length unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Propagation {
    pub z_max: f64,
    pub step: f64,
    pub sample_every: usize,
    pub drift_tolerance: f64,
}

impl Propagation {
    /// Window `z_max` with the default step for `params`, sampling every
    /// step.
    pub fn new(params: &ModelParams, z_max: f64) -> Self {
        Self {
            z_max,
            step: default_step(params, DEFAULT_STEP_DIVISOR),
            sample_every: 1,
            drift_tolerance: DEFAULT_DRIFT_TOLERANCE,
        }
    }

    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    pub fn with_sample_every(self, sample_every: usize) -> Self {
        Self {
            sample_every,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: self.step,
                reason: "must be positive",
            });
        }
        if !(self.z_max.is_finite() && self.z_max >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "z_max",
                value: self.z_max,
                reason: "must be non-negative",
            });
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter {
                name: "sample_every",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Propagates `initial` over `[0, z_max]`.
///
/// The step is shrunk slightly so that an integer number of steps lands
/// exactly on `z_max`. Samples are taken every `sample_every` steps and at
/// the final point. The norm is monitored at every step and never
/// corrected; a trajectory whose drift exceeds the tolerance is returned
/// with [`Trajectory::is_valid`] false. Non-finite states abort.
pub fn propagate(
    params: &ModelParams,
    initial: &Amplitudes,
    settings: &Propagation,
) -> Result<Trajectory> {
    settings.validate()?;
    let start = initial.as_pair();
    let mut traj = Trajectory {
        params: *params,
        z: Vec::new(),
        states: Vec::new(),
        norm_drift: 0.0,
        drift_tolerance: settings.drift_tolerance,
    };
    traj.z.push(0.0);
    traj.states.push(start);
    if settings.z_max == 0.0 {
        return Ok(traj);
    }

    let steps = step_count(settings.z_max, settings.step);
    let h = settings.z_max / steps as f64;
    let mut y = start;
    let mut drift: f64 = 0.0;
    for k in 0..steps {
        let z = k as f64 * h;
        y = rk4_step(params, z, &y, h);
        let norm = y[0].norm_sqr() + y[1].norm_sqr();
        if !norm.is_finite() {
            return Err(Error::NonFinite { z: z + h });
        }
        drift = drift.max((norm - 1.0).abs());
        let done = k + 1;
        if done % settings.sample_every == 0 || done == steps {
            traj.z.push(if done == steps {
                settings.z_max
            } else {
                done as f64 * h
            });
            traj.states.push(y);
        }
    }
    traj.norm_drift = drift;
    Ok(traj)
}

/// One-period propagator of the linear (`chi = 0`) coupler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonodromyMatrix {
    /// Row-major entries; column `j` is the image of basis vector `j`.
    pub entries: [[Complex64; 2]; 2],
    pub period: f64,
}

impl MonodromyMatrix {
    pub fn determinant(&self) -> Complex64 {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Largest entry of `|M^H M - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.entries;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for row in m {
                    acc += row[i].conj() * row[j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the 2x2 matrix, ordered by increasing argument.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let m = &self.entries;
        let half_trace = (m[0][0] + m[1][1]) * 0.5;
        let disc = (half_trace * half_trace - self.determinant()).sqrt();
        let mut ev = [half_trace - disc, half_trace + disc];
        if ev[0].arg() > ev[1].arg() {
            ev.swap(0, 1);
        }
        ev
    }

    /// Normalized eigenvectors matching [`MonodromyMatrix::eigenvalues`].
    pub fn eigenvectors(&self) -> [[Complex64; 2]; 2] {
        let m = &self.entries;
        let ev = self.eigenvalues();
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (k, lambda) in ev.iter().enumerate() {
            // Two candidate null vectors of (M - lambda); keep the better
            // conditioned one.
            let a = [m[0][1], *lambda - m[0][0]];
            let b = [*lambda - m[1][1], m[1][0]];
            let pick = if a[0].norm_sqr() + a[1].norm_sqr() >= b[0].norm_sqr() + b[1].norm_sqr() {
                a
            } else {
                b
            };
            let n = (pick[0].norm_sqr() + pick[1].norm_sqr()).sqrt();
            out[k] = if n < 1e-14 {
                // M is proportional to the identity.
                if k == 0 {
                    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
                } else {
                    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
                }
            } else {
                [pick[0] / n, pick[1] / n]
            };
        }
        out
    }

    /// Quasienergies `eps` with `lambda = exp(-i eps T)`, reduced to
    /// `(-w/2, w/2]` and sorted ascending.
    pub fn quasienergies(&self) -> [f64; 2] {
        let w = 2.0 * core::f64::consts::PI / self.period;
        let ev = self.eigenvalues();
        let mut eps = [
            zone_reduce(-ev[0].arg() / self.period, w),
            zone_reduce(-ev[1].arg() / self.period, w),
        ];
        if eps[0] > eps[1] {
            eps.swap(0, 1);
        }
        eps
    }
}

/// Integrates the basis states over one driving period. `step` is rounded
/// down so that the period holds an integer number of steps.
pub fn monodromy(params: &ModelParams, step: f64) -> Result<MonodromyMatrix> {
    if params.chi() != 0.0 {
        return Err(Error::NonlinearMonodromy { chi: params.chi() });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
            reason: "must be positive",
        });
    }
    let period = params.period();
    let steps = step_count(period, step);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let col0 = integrate(params, [one, zero], period, steps);
    let col1 = integrate(params, [zero, one], period, steps);
    Ok(MonodromyMatrix {
        entries: [[col0[0], col1[0]], [col0[1], col1[1]]],
        period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Nonlinearity;

    fn linear(w: f64, s_over_w: f64) -> ModelParams {
        ModelParams::from_ratios(w, s_over_w, 0.0, Nonlinearity::Focusing).unwrap()
    }

    #[test]
    fn rabi_oscillation_matches_closed_form() {
        let p = linear(3.0, 0.0);
        let traj = propagate(&p, &Amplitudes::FIRST, &Propagation::new(&p, 50.0)).unwrap();
        assert!(traj.is_valid());
        for (z, s) in traj.z.iter().zip(&traj.states) {
            let expected = (0.5 * z).sin().powi(2);
            assert!((s[1].norm_sqr() - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_window_returns_initial() {
        let p = linear(10.0, 2.2).with_chi(0.4).unwrap();
        let traj = propagate(&p, &Amplitudes::FIRST, &Propagation::new(&p, 0.0)).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], Amplitudes::FIRST.as_pair());
        assert_eq!(traj.norm_drift, 0.0);
    }

    #[test]
    fn final_sample_lands_on_window_end() {
        let p = linear(10.0, 1.0);
        let settings = Propagation::new(&p, 3.3)
            .with_step(0.07)
            .with_sample_every(5);
        let traj = propagate(&p, &Amplitudes::FIRST, &settings).unwrap();
        assert_eq!(traj.z_max(), 3.3);
        assert!(traj.z.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let p = linear(10.0, 1.0);
        let base = Propagation::new(&p, 1.0);
        assert!(propagate(&p, &Amplitudes::FIRST, &base.with_step(0.0)).is_err());
        assert!(propagate(&p, &Amplitudes::FIRST, &base.with_sample_every(0)).is_err());
        let neg = Propagation {
            z_max: -1.0,
            ..base
        };
        assert!(propagate(&p, &Amplitudes::FIRST, &neg).is_err());
    }

    #[test]
    fn coarse_steps_are_flagged() {
        let p = linear(10.0, 3.0).with_chi(0.4).unwrap();
        let settings = Propagation::new(&p, 20.0).with_step(0.05);
        let traj = propagate(&p, &Amplitudes::FIRST, &settings).unwrap();
        assert!(!traj.is_valid());
        assert!(matches!(traj.check(), Err(Error::NormDrift { .. })));
    }

    #[test]
    fn self_trapping_above_threshold() {
        let p = linear(3.0, 0.0).with_chi(4.0).unwrap();
        let coarse = propagate(&p, &Amplitudes::FIRST, &Propagation::new(&p, 200.0)).unwrap();
        assert!(coarse.is_valid());
        let min_coarse = coarse
            .states
            .iter()
            .map(|s| s[0].norm_sqr())
            .fold(f64::INFINITY, f64::min);
        // Reference run with a quarter of the step.
        let fine_settings = Propagation::new(&p, 200.0).with_step(default_step(&p, 1600.0));
        let fine = propagate(&p, &Amplitudes::FIRST, &fine_settings).unwrap();
        let min_fine = fine
            .states
            .iter()
            .map(|s| s[0].norm_sqr())
            .fold(f64::INFINITY, f64::min);
        assert!(min_coarse > 0.5);
        assert!((min_coarse - min_fine).abs() < 1e-6);
    }

    #[test]
    fn static_monodromy_eigenvalues() {
        let p = linear(3.0, 0.0);
        let m = monodromy(&p, default_step(&p, DEFAULT_STEP_DIVISOR)).unwrap();
        let t = p.period();
        let eps = m.quasienergies();
        assert!((eps[0] + 0.5).abs() < 1e-8);
        assert!((eps[1] - 0.5).abs() < 1e-8);
        assert!(m.unitarity_defect() < 1e-8);
        assert!((m.determinant().norm() - 1.0).abs() < 1e-8);
        let ev = m.eigenvalues();
        for lambda in ev {
            let ok = (lambda - Complex64::from_polar(1.0, -0.5 * t)).norm() < 1e-8
                || (lambda - Complex64::from_polar(1.0, 0.5 * t)).norm() < 1e-8;
            assert!(ok);
        }
    }

    #[test]
    fn monodromy_eigenvectors_are_eigenvectors() {
        let p = linear(3.0, 1.3);
        let m = monodromy(&p, default_step(&p, DEFAULT_STEP_DIVISOR)).unwrap();
        let ev = m.eigenvalues();
        let vecs = m.eigenvectors();
        for k in 0..2 {
            let x = vecs[k];
            for r in 0..2 {
                let mx = m.entries[r][0] * x[0] + m.entries[r][1] * x[1];
                assert!((mx - ev[k] * x[r]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn vanishing_coupling_gauges_drive_away() {
        let p = ModelParams::new(1e-9, 7.0, 3.0, 0.0, Nonlinearity::Focusing).unwrap();
        let m = monodromy(&p, p.period() / 2000.0).unwrap();
        for lambda in m.eigenvalues() {
            assert!((lambda - 1.0).norm() < 1e-7);
        }
    }

    #[test]
    fn monodromy_rejects_nonlinear_models() {
        let p = linear(3.0, 1.0).with_chi(0.1).unwrap();
        assert!(matches!(
            monodromy(&p, 0.01),
            Err(Error::NonlinearMonodromy { .. })
        ));
    }

    #[test]
    fn smallest_linear_splitting_near_first_bessel_root() {
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=150 {
            let ratio = 1.5 + 1.5 * k as f64 / 150.0;
            let p = linear(3.0, ratio);
            let m = monodromy(&p, default_step(&p, DEFAULT_STEP_DIVISOR)).unwrap();
            let eps = m.quasienergies();
            let gap = (eps[1] - eps[0]).min(3.0 - (eps[1] - eps[0]));
            if gap < best.0 {
                best = (gap, ratio);
            }
        }
        assert!(
            (best.1 - crate::averaged::first_j0_root()).abs() < 0.15,
            "{best:?}"
        );
    }
}
