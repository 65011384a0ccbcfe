//! Return intensity, localization and the width of the localization peak.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::integrator::{propagate, Propagation, Trajectory};
use crate::model::{Amplitudes, ModelParams};

/// `P'(z) = |c1*(0) c1(z) + c2*(0) c2(z)|^2` at every sample.
pub fn return_intensity(traj: &Trajectory) -> Result<Vec<f64>> {
    traj.check()?;
    let first = traj.initial().ok_or(Error::Empty("trajectory"))?;
    Ok(traj
        .states
        .iter()
        .map(|s| (first[0].conj() * s[0] + first[1].conj() * s[1]).norm_sqr())
        .collect())
}

/// Minimum of the return intensity over the propagation window.
pub fn localization(traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    Ok(return_intensity(traj)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Localization sampled along `S/w` at fixed `w/v`, `chi/v` and window.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationCurve {
    pub ratios: Vec<f64>,
    pub localization: Vec<f64>,
    pub w_over_v: f64,
    pub chi_over_v: f64,
    pub z_max: f64,
}

impl LocalizationCurve {
    /// Assembles a curve from `(S/w, localization)` pairs in any order.
    pub fn from_points(
        mut points: Vec<(f64, f64)>,
        w_over_v: f64,
        chi_over_v: f64,
        z_max: f64,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("localization curve"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidParameter {
                    name: "S/w",
                    value: pair[1].0,
                    reason: "duplicate sample",
                });
            }
        }
        for &(ratio, value) in &points {
            if !(-1e-9..=1.0 + 1e-9).contains(&value) {
                return Err(Error::InvalidParameter {
                    name: "localization",
                    value,
                    reason: "outside [0, 1]",
                });
            }
            if !ratio.is_finite() {
                return Err(Error::NonFinite { z: ratio });
            }
        }
        let (ratios, localization) = points.into_iter().unzip();
        Ok(Self {
            ratios,
            localization,
            w_over_v,
            chi_over_v,
            z_max,
        })
    }
}

/// Width of the super-threshold region of a localization curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakWidth {
    /// Length of the widest contiguous super-threshold interval.
    pub width: f64,
    /// Interpolated interval ends; `None` when nothing crosses threshold.
    pub interval: Option<(f64, f64)>,
    /// No sample reached the threshold.
    pub empty: bool,
    /// More than one disjoint interval reached the threshold.
    pub ambiguous: bool,
}

impl PeakWidth {
    pub fn center(&self) -> Option<f64> {
        self.interval.map(|(a, b)| 0.5 * (a + b))
    }
}

fn crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        return 0.5 * (x0 + x1);
    }
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

/// Length in `S/w` of the widest run of samples with localization at or
/// above `threshold`, with ends placed by linear interpolation against the
/// neighbouring sub-threshold samples. Runs touching the ends of the curve
/// are cut at the first or last sample.
pub fn localization_width(curve: &LocalizationCurve, threshold: f64) -> PeakWidth {
    let xs = &curve.ratios;
    let ys = &curve.localization;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &y) in ys.iter().enumerate() {
        match (y >= threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, ys.len() - 1));
    }

    let mut best: Option<(f64, f64)> = None;
    for &(lo, hi) in &runs {
        let left = if lo == 0 {
            xs[0]
        } else {
            crossing(xs[lo - 1], ys[lo - 1], xs[lo], ys[lo], threshold)
        };
        let right = if hi + 1 == xs.len() {
            xs[hi]
        } else {
            crossing(xs[hi], ys[hi], xs[hi + 1], ys[hi + 1], threshold)
        };
        if best.is_none_or(|(a, b)| right - left > b - a) {
            best = Some((left, right));
        }
    }
    PeakWidth {
        width: best.map_or(0.0, |(a, b)| b - a),
        interval: best,
        empty: runs.is_empty(),
        ambiguous: runs.len() > 1,
    }
}

/// Localization at each `S/w` in `ratios`, computed sequentially.
pub fn localization_curve(
    base: &ModelParams,
    ratios: &[f64],
    initial: &Amplitudes,
    z_max: f64,
    step_divisor: f64,
) -> Result<LocalizationCurve> {
    let mut points = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let params = base.with_drive_ratio(ratio)?;
        let settings = Propagation::new(&params, z_max)
            .with_step(crate::integrator::default_step(&params, step_divisor));
        let traj = propagate(&params, initial, &settings)?;
        points.push((ratio, localization(&traj)?));
    }
    LocalizationCurve::from_points(
        points,
        base.frequency() / base.coupling(),
        base.chi() / base.coupling(),
        z_max,
    )
}
