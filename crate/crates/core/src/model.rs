//! The driven nonlinear two-mode coupler.
//!
//! In the accelerated frame of the bent waveguides the mode amplitudes obey
//!
//! ```text
//! i dc1/dz = (v/2) c2 - (S/2) cos(w z) c1 - s chi |c1|^2 c1
//! i dc2/dz = (v/2) c1 + (S/2) cos(w z) c2 - s chi |c2|^2 c2
//! ```
//!
//! with `s = +1` for a self-focusing medium and `s = -1` for a
//! self-defocusing one. Lengths are measured in units of `1/v` everywhere
//! except [`physical_to_model`].

use core::f64::consts::PI;

use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// A pair of complex mode amplitudes `[c1, c2]` with no normalization
/// guarantee.
pub type ModePair = [Complex64; 2];

/// Tolerance on `|c1|^2 + |c2|^2 - 1` accepted by [`Amplitudes::new`].
pub const NORM_TOLERANCE: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sign of the Kerr term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Nonlinearity {
    #[default]
    Focusing,
    Defocusing,
}

impl Nonlinearity {
    pub fn sign(self) -> f64 {
        match self {
            Nonlinearity::Focusing => 1.0,
            Nonlinearity::Defocusing => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Nonlinearity::Focusing => Nonlinearity::Defocusing,
            Nonlinearity::Defocusing => Nonlinearity::Focusing,
        }
    }
}

/// Dimensionless parameters of the driven dimer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    coupling: f64,
    drive: f64,
    frequency: f64,
    chi: f64,
    nonlinearity: Nonlinearity,
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

impl ModelParams {
    /// Builds parameters from the coupling `v`, drive strength `S`, drive
    /// frequency `w` and nonlinear coefficient `chi`.
    pub fn new(
        coupling: f64,
        drive: f64,
        frequency: f64,
        chi: f64,
        nonlinearity: Nonlinearity,
    ) -> Result<Self> {
        check("v", coupling, coupling > 0.0, "must be positive")?;
        check("S", drive, drive >= 0.0, "must be non-negative")?;
        check("w", frequency, frequency > 0.0, "must be positive")?;
        check("chi", chi, chi >= 0.0, "must be non-negative")?;
        Ok(Self {
            coupling,
            drive,
            frequency,
            chi,
            nonlinearity,
        })
    }

    /// Parameters in the ratio convention used on the command line: `v = 1`,
    /// `w = w/v`, `S = (S/w) w` and `chi = chi/v`.
    pub fn from_ratios(
        w_over_v: f64,
        s_over_w: f64,
        chi_over_v: f64,
        nonlinearity: Nonlinearity,
    ) -> Result<Self> {
        check("S/w", s_over_w, s_over_w >= 0.0, "must be non-negative")?;
        check("w/v", w_over_v, w_over_v > 0.0, "must be positive")?;
        Self::new(1.0, s_over_w * w_over_v, w_over_v, chi_over_v, nonlinearity)
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn drive(&self) -> f64 {
        self.drive
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    /// Driving period `2 pi / w`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.frequency
    }

    /// The ratio `S/w` that controls tunneling suppression.
    pub fn drive_ratio(&self) -> f64 {
        self.drive / self.frequency
    }

    /// Signed nonlinear coefficient `s chi`.
    pub fn signed_chi(&self) -> f64 {
        self.nonlinearity.sign() * self.chi
    }

    pub fn with_drive_ratio(self, s_over_w: f64) -> Result<Self> {
        check("S/w", s_over_w, s_over_w >= 0.0, "must be non-negative")?;
        Ok(Self {
            drive: s_over_w * self.frequency,
            ..self
        })
    }

    pub fn with_chi(self, chi: f64) -> Result<Self> {
        check("chi", chi, chi >= 0.0, "must be non-negative")?;
        Ok(Self { chi, ..self })
    }

    pub fn with_nonlinearity(self, nonlinearity: Nonlinearity) -> Self {
        Self {
            nonlinearity,
            ..self
        }
    }

    /// Right-hand side without input validation; used by the integrators.
    #[inline]
    pub(crate) fn derivative(&self, z: f64, state: &ModePair) -> ModePair {
        let [c1, c2] = *state;
        let half_coupling = 0.5 * self.coupling;
        let half_drive = 0.5 * self.drive * (self.frequency * z).cos();
        let g = self.signed_chi();
        let h1 = c2 * half_coupling - c1 * (half_drive + g * c1.norm_sqr());
        let h2 = c1 * half_coupling + c2 * (half_drive - g * c2.norm_sqr());
        [-I * h1, -I * h2]
    }
}

/// A normalized pair of mode amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Amplitudes {
    c1: Complex64,
    c2: Complex64,
}

impl Amplitudes {
    /// Light entirely in the first waveguide.
    pub const FIRST: Amplitudes = Amplitudes {
        c1: Complex64::new(1.0, 0.0),
        c2: Complex64::new(0.0, 0.0),
    };

    /// Accepts `(c1, c2)` only if `|c1|^2 + |c2|^2 = 1` within
    /// [`NORM_TOLERANCE`].
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(Error::NonFinite { z: f64::NAN });
        }
        let norm = c1.norm_sqr() + c2.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { c1, c2 })
    }

    /// Explicit renormalization of an arbitrary non-zero pair.
    pub fn normalized(c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite { z: f64::NAN });
        }
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            c1: c1 / norm,
            c2: c2 / norm,
        })
    }

    pub fn c1(&self) -> Complex64 {
        self.c1
    }

    pub fn c2(&self) -> Complex64 {
        self.c2
    }

    pub fn as_pair(&self) -> ModePair {
        [self.c1, self.c2]
    }

    /// Population of the first waveguide, `|c1|^2`.
    pub fn first_population(&self) -> f64 {
        self.c1.norm_sqr()
    }

    pub fn swapped(&self) -> Self {
        Self {
            c1: self.c2,
            c2: self.c1,
        }
    }
}

/// Time derivative of the mode amplitudes at propagation distance `z`.
pub fn rhs(params: &ModelParams, z: f64, state: &ModePair) -> Result<ModePair> {
    if !(z.is_finite() && state[0].is_finite() && state[1].is_finite()) {
        return Err(Error::NonFinite { z });
    }
    Ok(params.derivative(z, state))
}

/// Phase `S sin(w z) / (2 w)` removed by the rotating-frame transform.
pub fn frame_phase(params: &ModelParams, z: f64) -> f64 {
    0.5 * params.drive_ratio() * (params.frequency * z).sin()
}

/// Maps lab-frame amplitudes to the frame in which the drive is gauged away:
/// `c1' = c1 exp(-i theta)`, `c2' = c2 exp(+i theta)` with
/// `theta = S sin(w z) / (2 w)`.
pub fn to_rotating_frame(state: &Amplitudes, z: f64, params: &ModelParams) -> Amplitudes {
    let phase = Complex64::from_polar(1.0, frame_phase(params, z));
    Amplitudes {
        c1: state.c1 * phase.conj(),
        c2: state.c2 * phase,
    }
}

/// Inverse of [`to_rotating_frame`].
pub fn from_rotating_frame(state: &Amplitudes, z: f64, params: &ModelParams) -> Amplitudes {
    let phase = Complex64::from_polar(1.0, frame_phase(params, z));
    Amplitudes {
        c1: state.c1 * phase,
        c2: state.c2 * phase.conj(),
    }
}

/// Laboratory description of a nonlinear curved coupler, SI units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Free-space wavelength (m).
    pub wavelength: f64,
    /// Nonlinear refractive index (m^2/W).
    pub n2: f64,
    /// Effective mode cross-section (m^2).
    pub sigma_eff: f64,
    /// Input power (W).
    pub power: f64,
    /// Bend amplitude (m).
    pub bend_amplitude: f64,
    /// Bend period (m).
    pub bend_period: f64,
    /// Waveguide separation (m).
    pub separation: f64,
    /// Substrate refractive index.
    pub substrate_index: f64,
    /// Linear full-transfer length (m).
    pub transfer_length: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("n2", self.n2),
            ("sigma_eff", self.sigma_eff),
            ("power", self.power),
            ("bend_period", self.bend_period),
            ("separation", self.separation),
            ("transfer_length", self.transfer_length),
        ];
        for (name, value) in positive {
            check(name, value, value > 0.0, "must be positive")?;
        }
        // Straight guides (A = 0) are allowed and give S = 0.
        check(
            "bend_amplitude",
            self.bend_amplitude,
            self.bend_amplitude >= 0.0,
            "must be non-negative",
        )?;
        check(
            "substrate_index",
            self.substrate_index,
            self.substrate_index > 1.0,
            "must exceed 1",
        )
    }
}

/// Converts laboratory parameters to model parameters in inverse metres.
///
/// `v = pi / L_c` follows from complete linear transfer at `z = pi / v`.
pub fn physical_to_model(phys: &PhysicalParams, nonlinearity: Nonlinearity) -> Result<ModelParams> {
    phys.validate()?;
    let lambda = phys.wavelength;
    let drive = 8.0 * PI.powi(3) * phys.separation * phys.bend_amplitude * phys.substrate_index
        / (phys.bend_period * phys.bend_period * lambda);
    let frequency = 2.0 * PI / phys.bend_period;
    let chi = 2.0 * PI * phys.n2 * phys.power / (lambda * phys.sigma_eff);
    let coupling = PI / phys.transfer_length;
    ModelParams::new(coupling, drive, frequency, chi, nonlinearity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn coupling_only_acts_on_empty_guide() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 0.0, Nonlinearity::Focusing).unwrap();
        let d = rhs(&p, 0.0, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(close(d[0], c(0.0, 0.0), 1e-15));
        assert!(close(d[1], c(0.0, -0.5), 1e-15));
    }

    #[test]
    fn symmetric_state_is_eigen_direction() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 0.0, Nonlinearity::Focusing).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let state = [c(h, 0.0), c(h, 0.0)];
        let d = rhs(&p, 0.3, &state).unwrap();
        for k in 0..2 {
            assert!(close(d[k], c(0.0, -0.5) * state[k], 1e-15));
        }
    }

    #[test]
    fn drive_and_kerr_terms() {
        let p = ModelParams::new(1.0, 2.0, 1.0, 0.4, Nonlinearity::Focusing).unwrap();
        let d = rhs(&p, 0.0, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(close(d[0], c(0.0, 1.4), 1e-15));
        assert!(close(d[1], c(0.0, -0.5), 1e-15));
        // Defocusing flips only the Kerr contribution.
        let p = p.with_nonlinearity(Nonlinearity::Defocusing);
        let d = rhs(&p, 0.0, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(close(d[0], c(0.0, 0.6), 1e-15));
    }

    #[test]
    fn rhs_rejects_non_finite() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 0.0, Nonlinearity::Focusing).unwrap();
        assert!(rhs(&p, 0.0, &[c(f64::NAN, 0.0), c(0.0, 0.0)]).is_err());
        assert!(rhs(&p, f64::INFINITY, &[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn parameter_validation() {
        use Nonlinearity::Focusing;
        assert!(ModelParams::new(0.0, 1.0, 1.0, 0.0, Focusing).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 0.0, Focusing).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 0.0, Focusing).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, -0.1, Focusing).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0, 0.0, Focusing).is_err());
        let p = ModelParams::from_ratios(10.0, 2.2, 0.4, Focusing).unwrap();
        assert!((p.drive() - 22.0).abs() < 1e-12);
        assert!((p.period() - 2.0 * PI / 10.0).abs() < 1e-15);
    }

    #[test]
    fn amplitudes_enforce_normalization() {
        assert!(Amplitudes::new(c(1.0, 0.0), c(0.1, 0.0)).is_err());
        assert!(Amplitudes::new(c(0.6, 0.0), c(0.0, 0.8)).is_ok());
        let a = Amplitudes::normalized(c(3.0, 0.0), c(0.0, 4.0)).unwrap();
        assert!((a.first_population() - 0.36).abs() < 1e-15);
        assert!(Amplitudes::normalized(c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn rotating_frame_identity_at_period_boundaries() {
        let p = ModelParams::from_ratios(3.0, 2.0, 0.4, Nonlinearity::Focusing).unwrap();
        let s = Amplitudes::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        for z in [0.0, p.period()] {
            let r = to_rotating_frame(&s, z, &p);
            assert!(close(r.c1(), s.c1(), 1e-14));
            assert!(close(r.c2(), s.c2(), 1e-14));
        }
    }

    #[test]
    fn rotating_frame_quarter_period_phase() {
        // S/w = pi and w z = pi/2 give a phase of pi/2 on c1.
        let w = 2.0;
        let p = ModelParams::new(1.0, PI * w, w, 0.0, Nonlinearity::Focusing).unwrap();
        let z = 0.5 * PI / w;
        let r = to_rotating_frame(&Amplitudes::FIRST, z, &p);
        assert!(close(r.c1(), c(0.0, -1.0), 1e-14));
        let back = from_rotating_frame(&r, z, &p);
        assert!(close(back.c1(), c(1.0, 0.0), 1e-14));
    }

    fn experiment() -> PhysicalParams {
        PhysicalParams {
            wavelength: 1.55e-6,
            n2: 1.2e-17,
            sigma_eff: 12e-12,
            power: 100.0,
            bend_amplitude: 10e-6,
            bend_period: 1e-2,
            separation: 15e-6,
            substrate_index: 1.5,
            transfer_length: 2e-2,
        }
    }

    #[test]
    fn experimental_estimate_is_order_two() {
        let m = physical_to_model(&experiment(), Nonlinearity::Focusing).unwrap();
        let ratio = m.chi() / m.coupling();
        // 2 n2 P L_c / (lambda sigma) evaluated by hand.
        let expected = 2.0 * 1.2e-17 * 100.0 * 2e-2 / (1.55e-6 * 12e-12);
        assert!((ratio - expected).abs() < 1e-12 * expected);
        assert!((1.5..=3.0).contains(&ratio));
    }

    #[test]
    fn straight_guides_have_no_drive() {
        let phys = PhysicalParams {
            bend_amplitude: 0.0,
            ..experiment()
        };
        let m = physical_to_model(&phys, Nonlinearity::Focusing).unwrap();
        assert_eq!(m.drive(), 0.0);
    }

    #[test]
    fn doubling_bend_period_halves_ratio() {
        let base = physical_to_model(&experiment(), Nonlinearity::Focusing).unwrap();
        let phys = PhysicalParams {
            bend_period: 2.0 * experiment().bend_period,
            ..experiment()
        };
        let m = physical_to_model(&phys, Nonlinearity::Focusing).unwrap();
        assert!((m.drive() * 4.0 / base.drive() - 1.0).abs() < 1e-14);
        assert!((m.frequency() * 2.0 / base.frequency() - 1.0).abs() < 1e-14);
        assert!((m.drive_ratio() * 2.0 / base.drive_ratio() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn physical_validation() {
        let bad = PhysicalParams {
            power: 0.0,
            ..experiment()
        };
        assert!(physical_to_model(&bad, Nonlinearity::Focusing).is_err());
        let bad = PhysicalParams {
            substrate_index: 1.0,
            ..experiment()
        };
        assert!(physical_to_model(&bad, Nonlinearity::Focusing).is_err());
        let bad = PhysicalParams {
            bend_amplitude: -1e-6,
            ..experiment()
        };
        assert!(physical_to_model(&bad, Nonlinearity::Focusing).is_err());
    }

    fn arb_params() -> impl Strategy<Value = ModelParams> {
        (
            0.1f64..3.0,
            0.0f64..30.0,
            0.5f64..20.0,
            0.0f64..3.0,
            any::<bool>(),
        )
            .prop_map(|(v, s, w, chi, focusing)| {
                let nl = if focusing {
                    Nonlinearity::Focusing
                } else {
                    Nonlinearity::Defocusing
                };
                ModelParams::new(v, s, w, chi, nl).unwrap()
            })
    }

    fn arb_state() -> impl Strategy<Value = Amplitudes> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-zero", |(a, b, c_, d)| {
                a * a + b * b + c_ * c_ + d * d > 1e-3
            })
            .prop_map(|(a, b, c_, d)| Amplitudes::normalized(c(a, b), c(c_, d)).unwrap())
    }

    proptest! {
        #[test]
        fn norm_flux_vanishes(p in arb_params(), s in arb_state(), z in -10.0f64..10.0) {
            let st = s.as_pair();
            let d = rhs(&p, z, &st).unwrap();
            let flux = (st[0].conj() * d[0] + st[1].conj() * d[1]).re;
            prop_assert!(flux.abs() < 1e-14 * (1.0 + p.drive() + p.chi()));
        }

        #[test]
        fn swap_with_half_period_shift(p in arb_params(), s in arb_state(), z in -10.0f64..10.0) {
            let st = s.as_pair();
            let d = rhs(&p, z, &st).unwrap();
            let ds = rhs(&p, z + 0.5 * p.period(), &[st[1], st[0]]).unwrap();
            let scale = 1.0 + p.drive() + p.chi();
            prop_assert!(close(ds[0], d[1], 1e-13 * scale));
            prop_assert!(close(ds[1], d[0], 1e-13 * scale));
        }

        #[test]
        fn rotating_frame_preserves_norm_and_is_periodic(
            p in arb_params(), s in arb_state(), z in -10.0f64..10.0
        ) {
            let r = to_rotating_frame(&s, z, &p);
            let norm = r.c1().norm_sqr() + r.c2().norm_sqr();
            prop_assert!((norm - 1.0).abs() < 1e-14);
            let r2 = to_rotating_frame(&s, z + p.period(), &p);
            prop_assert!(close(r.c1(), r2.c1(), 1e-12));
            prop_assert!(close(r.c2(), r2.c2(), 1e-12));
        }
    }
}
