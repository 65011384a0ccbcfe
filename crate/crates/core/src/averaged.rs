//! High-frequency averaged coupler.
//!
//! For `w >> max(v, chi)` the drive only renormalizes the coupling,
//! `v -> v J0(S/w)`, and the rotating-frame amplitudes obey a static
//! nonlinear dimer. Its stationary states map onto Floquet states of the
//! driven model, which makes this module an independent check on the
//! harmonic-balance solver.

use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{ModelParams, Nonlinearity};
use crate::zone_reduce;

/// Zeroth-order Bessel function of the first kind from its power series
/// `sum_m (-1)^m (x/2)^(2m) / (m!)^2`.
///
/// Terms are summed until one falls below `1e-16` in magnitude. The
/// absolute error stays under `1e-12` for `|x| <= 10`; larger arguments
/// lose digits to cancellation.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0;
    while m < 500.0 {
        term *= q / (m * m);
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        m += 1.0;
    }
    sum
}

/// Solves `J0(x) = level` by bisection on `[lo, hi]`, which must bracket a
/// single crossing.
pub fn bessel_j0_crossing(level: f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let f = |x: f64| bessel_j0(x) - level;
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 1e-15 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// First positive zero of `J0`, about 2.40483.
pub fn first_j0_root() -> f64 {
    bessel_j0_crossing(0.0, 2.0, 3.0).expect("J0 changes sign on [2, 3]")
}

/// Location of the first minimum of `J0` (first zero of `J1`), used to
/// bracket crossings to the right of the first root.
const FIRST_J0_MINIMUM: f64 = 3.831_705_970_207_512;

/// Range of `S/w` around the first `J0` root where `chi > |v J0(S/w)|`.
///
/// The right end is `None` when `chi/v` exceeds `|J0|` at its first
/// minimum, so the region stays open until `J0` rises again.
pub fn broken_region(chi_over_v: f64) -> Option<(f64, Option<f64>)> {
    if chi_over_v <= 0.0 {
        return None;
    }
    let root = first_j0_root();
    let left = if chi_over_v >= 1.0 {
        0.0
    } else {
        bessel_j0_crossing(chi_over_v, 0.0, root)?
    };
    let right = bessel_j0_crossing(-chi_over_v, root, FIRST_J0_MINIMUM);
    Some((left, right))
}

/// Coupling of the averaged model, `v J0(S/w)`. May be negative.
pub fn effective_coupling(params: &ModelParams) -> f64 {
    params.coupling() * bessel_j0(params.drive_ratio())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StationaryKind {
    Symmetric,
    Antisymmetric,
    /// Broken-symmetry state with most of the light in the first guide.
    BrokenA,
    /// Mirror image of [`StationaryKind::BrokenA`].
    BrokenB,
}

/// Eigenstate of the averaged dimer,
/// `mu phi1 = (v_eff/2) phi2 - s chi |phi1|^2 phi1` and its mirror.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryState {
    pub phi: [Complex64; 2],
    pub mu: f64,
    pub kind: StationaryKind,
    /// Set on the symmetric state that the broken pair merges into when
    /// `chi = |v_eff|`.
    pub at_threshold: bool,
}

impl StationaryState {
    pub fn population(&self) -> f64 {
        self.phi[0].norm_sqr()
    }

    /// Largest residual of the two stationary equations.
    pub fn residual(&self, v_eff: f64, chi: f64, nonlinearity: Nonlinearity) -> f64 {
        let g = nonlinearity.sign() * chi;
        let [p1, p2] = self.phi;
        let r1 = p1 * self.mu - (p2 * (0.5 * v_eff) - p1 * (g * p1.norm_sqr()));
        let r2 = p2 * self.mu - (p1 * (0.5 * v_eff) - p2 * (g * p2.norm_sqr()));
        r1.norm().max(r2.norm())
    }
}

fn real_pair(a: f64, b: f64) -> [Complex64; 2] {
    [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
}

/// Relative tolerance used to decide `chi == |v_eff|`.
const THRESHOLD_TOLERANCE: f64 = 1e-12;

/// All stationary states of the averaged dimer.
///
/// The symmetric and antisymmetric states always exist. When
/// `chi > |v_eff|` a degenerate pair of broken-symmetry states with
/// populations `p` and `1 - p`, `p (1 - p) = v_eff^2 / (4 chi^2)`, is added.
/// For a focusing medium they split off the lower symmetric level, for a
/// defocusing medium off the upper one.
pub fn stationary_states(v_eff: f64, chi: f64, nonlinearity: Nonlinearity) -> Vec<StationaryState> {
    let g = nonlinearity.sign() * chi;
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut states = alloc::vec![
        StationaryState {
            phi: real_pair(h, h),
            mu: 0.5 * v_eff - 0.5 * g,
            kind: StationaryKind::Symmetric,
            at_threshold: false,
        },
        StationaryState {
            phi: real_pair(h, -h),
            mu: -0.5 * v_eff - 0.5 * g,
            kind: StationaryKind::Antisymmetric,
            at_threshold: false,
        },
    ];
    if chi == 0.0 {
        return states;
    }
    let scale = chi.max(v_eff.abs());
    if (chi - v_eff.abs()).abs() <= THRESHOLD_TOLERANCE * scale {
        // phi1 phi2 = -v_eff / (2 g) = +-1/2 picks the merging state.
        let merged = if -v_eff / g > 0.0 { 0 } else { 1 };
        states[merged].at_threshold = true;
        return states;
    }
    if chi < v_eff.abs() {
        return states;
    }
    let product = -v_eff / (2.0 * g);
    let p = 0.5 * (1.0 + (1.0 - 4.0 * product * product).max(0.0).sqrt());
    let major = p.sqrt();
    let minor = product.signum() * (1.0 - p).sqrt();
    // Back-substitute through the equation of the dominant component.
    let mu = 0.5 * v_eff * minor / major - g * major * major;
    states.push(StationaryState {
        phi: real_pair(major, minor),
        mu,
        kind: StationaryKind::BrokenA,
        at_threshold: false,
    });
    states.push(StationaryState {
        phi: real_pair(minor, major),
        mu,
        kind: StationaryKind::BrokenB,
        at_threshold: false,
    });
    states
}

/// A level of the averaged model seen as a quasienergy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragedLevel {
    /// Eigenenergy reduced to `(-w/2, w/2]`.
    pub epsilon: f64,
    /// `|phi1|^2`, constant over a period in this approximation.
    pub localization: f64,
    pub state: StationaryState,
}

/// Quasienergies predicted by the averaged model for `params`.
pub fn averaged_quasienergies(params: &ModelParams) -> Vec<AveragedLevel> {
    let v_eff = effective_coupling(params);
    stationary_states(v_eff, params.chi(), params.nonlinearity())
        .into_iter()
        .map(|state| AveragedLevel {
            epsilon: zone_reduce(state.mu, params.frequency()),
            localization: state.population(),
            state,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    /// `(1/pi) int_0^pi cos(x sin t) dt` by the trapezoid rule, which is
    /// spectrally accurate for this periodic integrand.
    fn j0_quadrature(x: f64) -> f64 {
        let n = 2000;
        let h = PI / n as f64;
        let mut acc = 0.5 * (1.0 + (x * PI.sin()).cos());
        for k in 1..n {
            acc += (x * (k as f64 * h).sin()).cos();
        }
        acc * h / PI
    }

    #[test]
    fn j0_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!(bessel_j0(2.40483).abs() < 1e-5);
        assert!((bessel_j0(2.2) - 0.1104).abs() < 1e-4);
        for k in 0..=100 {
            let x = -10.0 + 0.2 * k as f64;
            assert!((bessel_j0(x) - j0_quadrature(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn first_root_from_bisection() {
        let root = first_j0_root();
        assert!((root - 2.40483).abs() < 1e-5);
        assert!(j0_quadrature(root).abs() < 1e-12);
    }

    #[test]
    fn effective_coupling_values() {
        let p = ModelParams::from_ratios(10.0, 0.0, 0.4, Nonlinearity::Focusing).unwrap();
        assert_eq!(effective_coupling(&p), 1.0);
        let p = p.with_drive_ratio(first_j0_root()).unwrap();
        assert!(effective_coupling(&p).abs() < 1e-4);
        let p = p.with_drive_ratio(2.2).unwrap();
        assert!((effective_coupling(&p) - 0.1104).abs() < 1e-4);
    }

    #[test]
    fn linear_dimer_has_two_levels() {
        let s = stationary_states(0.7, 0.0, Nonlinearity::Focusing);
        assert_eq!(s.len(), 2);
        assert!((s[0].mu - 0.35).abs() < 1e-15);
        assert!((s[1].mu + 0.35).abs() < 1e-15);
    }

    #[test]
    fn strong_nonlinearity_adds_broken_pair() {
        let s = stationary_states(1.0, 2.0, Nonlinearity::Focusing);
        assert_eq!(s.len(), 4);
        let a = s[2];
        let b = s[3];
        assert_eq!(a.kind, StationaryKind::BrokenA);
        let p = a.population();
        assert!((p * (1.0 - p) - 1.0 / 16.0).abs() < 1e-14);
        assert!((p - 0.9330127).abs() < 1e-6);
        assert!((b.population() - (1.0 - p)).abs() < 1e-14);
        assert_eq!(a.mu, b.mu);
        for st in &s {
            assert!(st.residual(1.0, 2.0, Nonlinearity::Focusing) < 1e-12);
        }
        // Broken pair sits at -chi, below both symmetric levels.
        assert!((a.mu + 2.0).abs() < 1e-12);
    }

    /// Real stationary states with `phi = (sqrt(p), +-sqrt(1-p))` make the
    /// two equations give the same `mu`. Scan `p` and bisect sign changes
    /// of their difference.
    fn brute_force_populations(v_eff: f64, chi: f64) -> std::vec::Vec<f64> {
        let mismatch = |p: f64, sign: f64| {
            let (a, b) = (p.sqrt(), sign * (1.0 - p).sqrt());
            let mu1 = 0.5 * v_eff * b / a - chi * a * a;
            let mu2 = 0.5 * v_eff * a / b - chi * b * b;
            mu1 - mu2
        };
        let mut roots = std::vec::Vec::new();
        for sign in [1.0, -1.0] {
            let n = 20000;
            for k in 0..n {
                let (mut lo, mut hi) = ((k as f64 + 0.5) / n as f64, (k as f64 + 1.5) / n as f64);
                if hi >= 1.0 {
                    continue;
                }
                let (flo, fhi) = (mismatch(lo, sign), mismatch(hi, sign));
                if flo.signum() == fhi.signum() {
                    continue;
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mismatch(mid, sign).signum() == mismatch(lo, sign).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn broken_populations_match_brute_force_scan() {
        let roots = brute_force_populations(1.0, 2.0);
        // p = 1/2 (antisymmetric) plus the broken pair.
        let s = stationary_states(1.0, 2.0, Nonlinearity::Focusing);
        for st in &s[2..] {
            assert!(roots.iter().any(|r| (r - st.population()).abs() < 1e-9));
        }
        assert!(roots.iter().any(|r| (r - 0.5).abs() < 1e-9));
    }

    #[test]
    fn threshold_is_reported_once() {
        let s = stationary_states(0.4, 0.4, Nonlinearity::Focusing);
        assert_eq!(s.len(), 2);
        // Focusing with positive coupling merges into the antisymmetric state.
        assert!(s[1].at_threshold && !s[0].at_threshold);
        let s = stationary_states(-0.4, 0.4, Nonlinearity::Focusing);
        assert!(s[0].at_threshold);
    }

    #[test]
    fn broken_states_exist_at_bessel_root_for_any_chi() {
        for chi in [1e-3, 0.1, 0.4, 2.0] {
            let s = stationary_states(0.0, chi, Nonlinearity::Focusing);
            assert_eq!(s.len(), 4);
            assert!((s[2].population() - 1.0).abs() < 1e-15);
            assert!((s[2].mu + chi).abs() < 1e-15);
        }
    }

    #[test]
    fn defocusing_reverses_the_spectrum() {
        for (v_eff, chi) in [(0.3, 0.4), (-0.2, 0.4), (0.9, 0.4), (0.0, 0.8)] {
            let f = stationary_states(v_eff, chi, Nonlinearity::Focusing);
            let d = stationary_states(v_eff, chi, Nonlinearity::Defocusing);
            assert_eq!(f.len(), d.len());
            assert!((f[0].mu + d[1].mu).abs() < 1e-14);
            assert!((f[1].mu + d[0].mu).abs() < 1e-14);
            if f.len() == 4 {
                assert!((f[2].mu + d[2].mu).abs() < 1e-14);
                assert!(d[2].residual(v_eff, chi, Nonlinearity::Defocusing) < 1e-12);
                // Focusing: pair below both symmetric levels; defocusing: above.
                assert!(f[2].mu < f[0].mu.min(f[1].mu));
                assert!(d[2].mu > d[0].mu.max(d[1].mu));
            }
        }
    }

    #[test]
    fn four_state_region_matches_bessel_crossings() {
        let (left, right) = broken_region(0.4).unwrap();
        assert!((bessel_j0(left) - 0.4).abs() < 1e-12);
        assert!((bessel_j0(right.unwrap()) + 0.4).abs() < 1e-12);
        assert!(left < first_j0_root() && right.unwrap() > first_j0_root());
        for k in 0..=300 {
            let ratio = 1.5 + 1.5 * k as f64 / 300.0;
            let p = ModelParams::from_ratios(10.0, ratio, 0.4, Nonlinearity::Focusing).unwrap();
            let levels = averaged_quasienergies(&p);
            let inside = ratio > left && ratio < right.unwrap();
            assert_eq!(levels.len() == 4, inside, "S/w = {ratio}");
        }
        // |J0| never reaches 0.8 past the first root, so the region stays open.
        assert!(broken_region(0.8).unwrap().1.is_none());
        assert!(broken_region(0.0).is_none());
    }

    #[test]
    fn undriven_levels_sit_at_half_coupling() {
        let p = ModelParams::from_ratios(3.0, 0.0, 0.0, Nonlinearity::Focusing).unwrap();
        let mut eps: std::vec::Vec<f64> = averaged_quasienergies(&p)
            .iter()
            .map(|l| l.epsilon)
            .collect();
        eps.sort_by(f64::total_cmp);
        assert_eq!(eps, [-0.5, 0.5]);
    }
}
