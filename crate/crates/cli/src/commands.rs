//! The subcommands. Each computes typed results first and renders them to
//! a [`Table`] or JSON document second.

use anyhow::{anyhow, bail, Result};
use ncdt_core::averaged::{
    averaged_quasienergies, broken_region, effective_coupling, StationaryKind,
};
use ncdt_core::floquet::{
    check_cutoff, distinct_quasienergies, level_crossings, quasienergy_branches, states_at,
    triangle_width, Branch, BranchLabel, BranchSettings, FloquetState, Symmetry, TriangleGeometry,
};
use ncdt_core::integrator::{default_step, propagate, Propagation};
use ncdt_core::model::physical_to_model;
use ncdt_core::observables::{
    localization, localization_width, return_intensity, LocalizationCurve, PeakWidth,
};
use ncdt_core::{Amplitudes, ModelParams};

use crate::config::{defaults_listing, Command, RunConfig};
use crate::format::{num, Table, VERSION};
use crate::pool::map_ordered;

/// Rendered output of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub text: String,
    pub flagged: usize,
}

impl From<Table> for Report {
    fn from(table: Table) -> Self {
        Self {
            text: table.render(),
            flagged: table.flagged(),
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Report> {
    Ok(match config.command {
        Command::Propagate => propagate_table(config)?.into(),
        Command::SweepLocalization => sweep_table(&sweep_localization(config)?, config).into(),
        Command::Floquet => floquet_table(&floquet_scan(config)?, config).into(),
        Command::Averaged => averaged_table(config)?.into(),
        Command::Physical => Report {
            text: physical_json(config)?,
            flagged: 0,
        },
        Command::Defaults => Report {
            text: defaults_listing(),
            flagged: 0,
        },
    })
}

fn params_at(config: &RunConfig, ratio: f64) -> Result<ModelParams> {
    config
        .base_params()?
        .with_drive_ratio(ratio)
        .map_err(|e| anyhow!("{e}"))
}

/// Rows written by `propagate` when `sample-every` is zero.
const DEFAULT_ROWS: usize = 2000;

fn propagate_table(config: &RunConfig) -> Result<Table> {
    let params = params_at(config, config.grid.max())?;
    let settings = Propagation::new(&params, config.z_max)
        .with_step(default_step(&params, config.step_divisor));
    let traj = propagate(&params, &Amplitudes::FIRST, &settings).map_err(|e| anyhow!("{e}"))?;
    if !traj.is_valid() {
        bail!(
            "invalid trajectory: norm drift {:e} exceeds {:e}",
            traj.norm_drift,
            traj.drift_tolerance
        );
    }
    let p_return = return_intensity(&traj).map_err(|e| anyhow!("{e}"))?;
    let mut table = Table::new(
        config,
        &[
            ("z_times_v", "1 (z in units of 1/v)"),
            ("re_c1", "1"),
            ("im_c1", "1"),
            ("re_c2", "1"),
            ("im_c2", "1"),
            ("p_return", "1"),
        ],
    );
    let every = match config.sample_every {
        0 => traj.len().div_ceil(DEFAULT_ROWS).max(1),
        k => k,
    };
    let last = traj.len() - 1;
    for k in (0..traj.len()).filter(|&k| k % every == 0 || k == last) {
        let [c1, c2] = traj.states[k];
        table.push(
            vec![
                num(traj.z[k] * params.coupling()),
                num(c1.re),
                num(c1.im),
                num(c2.re),
                num(c2.im),
                num(p_return[k]),
            ],
            false,
        );
    }
    let loc = p_return.iter().copied().fold(f64::INFINITY, f64::min);
    table.summary(format!("localization={}", num(loc)));
    table.summary(format!("norm_drift={}", num(traj.norm_drift)));
    table.summary(format!("steps={last}"));
    Ok(table)
}

/// One point of a localization sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub ratio: f64,
    /// `Err` holds the diagnostic of a failed trajectory.
    pub localization: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Width of the peak over the successful points; `None` when no point
    /// succeeded.
    pub width: Option<PeakWidth>,
}

/// Localization of the initially excited guide across the `S/w` grid.
pub fn sweep_localization(config: &RunConfig) -> Result<Sweep> {
    let base = config.base_params()?;
    let ratios = config.grid.points();
    let points = map_ordered(&ratios, config.workers, |&ratio| {
        let result = (|| {
            let params = base.with_drive_ratio(ratio)?;
            let settings = Propagation::new(&params, config.z_max)
                .with_step(default_step(&params, config.step_divisor));
            let traj = propagate(&params, &Amplitudes::FIRST, &settings)?;
            localization(&traj)
        })();
        SweepPoint {
            ratio,
            localization: result.map_err(|e| e.to_string()),
        }
    });
    let good: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.localization.as_ref().ok().map(|&l| (p.ratio, l)))
        .collect();
    let width = if good.is_empty() {
        None
    } else {
        let curve =
            LocalizationCurve::from_points(good, config.w_over_v, config.chi_over_v, config.z_max)
                .map_err(|e| anyhow!("{e}"))?;
        Some(localization_width(&curve, config.threshold))
    };
    Ok(Sweep { points, width })
}

fn sweep_table(sweep: &Sweep, config: &RunConfig) -> Table {
    let mut table = Table::new(
        config,
        &[
            ("s_over_w", "1"),
            (
                "localization",
                "1 (minimum return intensity over the window)",
            ),
            ("flag", "ok or failure diagnostic"),
        ],
    );
    for p in &sweep.points {
        match &p.localization {
            Ok(l) => table.push(vec![num(p.ratio), num(*l), "ok".into()], false),
            Err(e) => table.push(vec![num(p.ratio), num(f64::NAN), format!("\"{e}\"")], true),
        }
    }
    match &sweep.width {
        Some(w) => {
            table.summary(format!("threshold={}", num(config.threshold)));
            table.summary(format!("delta_gamma={}", num(w.width)));
            match w.interval {
                Some((a, b)) => {
                    table.summary(format!("interval={},{}", num(a), num(b)));
                    table.summary(format!("center={}", num(0.5 * (a + b))));
                }
                None => table.summary("interval=none"),
            }
            if w.empty {
                table.summary("warning=no point reaches the threshold");
            }
            if w.ambiguous {
                table.summary("warning=several disjoint intervals; widest reported");
            }
        }
        None => table.summary("delta_gamma=nan"),
    }
    table
}

/// Where a quasienergy row comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    HarmonicBalance,
    Averaged,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::HarmonicBalance => "harmonic-balance",
            Source::Averaged => "averaged",
        }
    }
}

/// One reported quasienergy.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRow {
    pub ratio: f64,
    pub branch_id: &'static str,
    pub source: Source,
    pub epsilon: f64,
    pub localization: f64,
    pub residual: f64,
    /// Harmonic cutoff; zero for averaged rows.
    pub cutoff: usize,
    /// Round-trip error over one period; `NaN` for averaged rows.
    pub round_trip: f64,
    /// A fold (or the averaged threshold) lies within half a grid step.
    pub fold: bool,
    pub flags: Vec<&'static str>,
    /// The solved state, for harmonic-balance rows.
    pub state: Option<FloquetState>,
}

/// Largest round-trip error accepted for a reported state.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct FloquetScan {
    pub branches: Vec<Branch>,
    pub rows: Vec<LevelRow>,
    /// Per grid point: `(S/w, distinct states, distinct quasienergies)`
    /// among the harmonic-balance rows.
    pub counts: Vec<(f64, usize, usize)>,
    pub triangle: std::result::Result<TriangleGeometry, String>,
    pub crossings: Vec<(f64, f64)>,
}

/// Quasienergies below this separation are counted as one level.
pub const LEVEL_TOLERANCE: f64 = 1e-8;

fn hb_branch_id(label: BranchLabel, state: &FloquetState) -> &'static str {
    match label {
        BranchLabel::Upper => "upper",
        BranchLabel::Lower => "lower",
        BranchLabel::BrokenPair if state.localization() >= 0.5 => "broken-a",
        BranchLabel::BrokenPair => "broken-b",
    }
}

fn averaged_branch_id(kind: StationaryKind) -> &'static str {
    match kind {
        StationaryKind::Symmetric => "symmetric",
        StationaryKind::Antisymmetric => "antisymmetric",
        StationaryKind::BrokenA => "broken-a",
        StationaryKind::BrokenB => "broken-b",
    }
}

/// Traces the branches over `[0, max S/w]` and reports every state at each
/// grid point together with the averaged-model levels.
pub fn floquet_scan(config: &RunConfig) -> Result<FloquetScan> {
    let base = config.base_params()?;
    let top = config.grid.max();
    if top <= 0.0 {
        bail!("floquet needs a grid reaching above S/w = 0");
    }
    let settings = BranchSettings {
        cutoff: config.cutoff,
        ..BranchSettings::default()
    };
    let branches =
        quasienergy_branches(&base, (0.0, top), &settings).map_err(|e| anyhow!("{e}"))?;
    let ratios = config.grid.points();
    let half_step = 0.5 * config.grid.spacing();
    let per_point = map_ordered(&ratios, config.workers, |&ratio| {
        grid_rows(config, &base, &branches, ratio, half_step)
    });
    let mut rows = Vec::new();
    let mut counts = Vec::new();
    for (ratio, point_rows) in ratios.iter().zip(per_point) {
        let point_rows = point_rows?;
        let states: Vec<FloquetState> = point_rows.iter().filter_map(|r| r.state.clone()).collect();
        let (n_states, levels) = distinct_quasienergies(&states, LEVEL_TOLERANCE);
        counts.push((*ratio, n_states, levels.len()));
        rows.extend(point_rows);
    }
    let triangle = triangle_width(&branches).map_err(|e| e.to_string());
    let crossings = match (
        branches.iter().find(|b| b.label == BranchLabel::Upper),
        branches.iter().find(|b| b.label == BranchLabel::Lower),
    ) {
        (Some(u), Some(l)) => level_crossings(u, l),
        _ => Vec::new(),
    };
    Ok(FloquetScan {
        branches,
        rows,
        counts,
        triangle,
        crossings,
    })
}

fn grid_rows(
    config: &RunConfig,
    base: &ModelParams,
    branches: &[Branch],
    ratio: f64,
    half_step: f64,
) -> Result<Vec<LevelRow>> {
    let point = states_at(branches, ratio);
    let mut rows = Vec::new();
    for gs in point.states {
        let branch = &branches[gs.branch];
        let symmetry = if gs.partner {
            Symmetry::None
        } else {
            branch.symmetry
        };
        let mut flags = Vec::new();
        if branch.truncated {
            flags.push("truncated");
        }
        match check_cutoff(&gs.state, symmetry) {
            Ok(check) if check.resolved => {}
            _ => flags.push("unresolved-cutoff"),
        }
        let round_trip = gs.state.round_trip_error(config.step_divisor);
        if round_trip.is_nan() || round_trip >= ROUND_TRIP_TOLERANCE {
            flags.push("round-trip");
        }
        let fold = branch
            .fold_points
            .iter()
            .any(|&f| (f - ratio).abs() <= half_step);
        rows.push(LevelRow {
            ratio,
            branch_id: hb_branch_id(gs.label, &gs.state),
            source: Source::HarmonicBalance,
            epsilon: gs.state.epsilon,
            localization: gs.state.localization(),
            residual: gs.state.residual_norm,
            cutoff: gs.state.cutoff,
            round_trip,
            fold,
            flags,
            state: Some(gs.state),
        });
    }
    for _ in 0..point.failures {
        rows.push(LevelRow {
            ratio,
            branch_id: "none",
            source: Source::HarmonicBalance,
            epsilon: f64::NAN,
            localization: f64::NAN,
            residual: f64::NAN,
            cutoff: 0,
            round_trip: f64::NAN,
            fold: false,
            flags: vec!["no-convergence"],
            state: None,
        });
    }
    rows.extend(averaged_rows(base, ratio)?);
    Ok(rows)
}

fn averaged_rows(base: &ModelParams, ratio: f64) -> Result<Vec<LevelRow>> {
    let params = base.with_drive_ratio(ratio).map_err(|e| anyhow!("{e}"))?;
    let v_eff = effective_coupling(&params);
    Ok(averaged_quasienergies(&params)
        .into_iter()
        .map(|level| LevelRow {
            ratio,
            branch_id: averaged_branch_id(level.state.kind),
            source: Source::Averaged,
            epsilon: level.epsilon,
            localization: level.localization,
            residual: level
                .state
                .residual(v_eff, params.chi(), params.nonlinearity()),
            cutoff: 0,
            round_trip: f64::NAN,
            fold: level.state.at_threshold,
            flags: Vec::new(),
            state: None,
        })
        .collect())
}

const LEVEL_COLUMNS: &[(&str, &str)] = &[
    ("s_over_w", "1"),
    (
        "branch_id",
        "upper|lower|broken-a|broken-b or symmetric|antisymmetric|broken-a|broken-b",
    ),
    ("source", "harmonic-balance|averaged"),
    ("epsilon_over_v", "1 (zone-reduced to (-w/2, w/2])"),
    ("localization", "1 (period-averaged |c1|^2)"),
    ("residual_norm", "1"),
    ("cutoff_M", "harmonics"),
    ("round_trip", "1 (max |c(T) - exp(-i eps T) c(0)|)"),
    ("fold_flag", "0|1"),
    ("flag", "ok or ;-separated problems"),
];

fn level_table(rows: &[LevelRow], config: &RunConfig) -> Table {
    let mut table = Table::new(config, LEVEL_COLUMNS);
    for r in rows {
        let flag = if r.flags.is_empty() {
            "ok".to_string()
        } else {
            r.flags.join(";")
        };
        table.push(
            vec![
                num(r.ratio),
                r.branch_id.into(),
                r.source.name().into(),
                num(r.epsilon),
                num(r.localization),
                num(r.residual),
                r.cutoff.to_string(),
                num(r.round_trip),
                u8::from(r.fold).to_string(),
                flag,
            ],
            !r.flags.is_empty(),
        );
    }
    table
}

fn corner(c: Option<(f64, f64)>) -> String {
    c.map_or_else(
        || "open".to_string(),
        |(s, e)| format!("{},{}", num(s), num(e)),
    )
}

fn floquet_table(scan: &FloquetScan, config: &RunConfig) -> Table {
    let mut table = level_table(&scan.rows, config);
    for b in &scan.branches {
        let (lo, hi) = b.span();
        let folds: Vec<String> = b.fold_points.iter().map(|&f| num(f)).collect();
        table.summary(format!(
            "branch {:?}: span={},{} points={} folds=[{}] truncated={}",
            b.label,
            num(lo),
            num(hi),
            b.points.len(),
            folds.join(","),
            b.truncated
        ));
    }
    for (s, e) in &scan.crossings {
        table.summary(format!("crossing={},{}", num(*s), num(*e)));
    }
    match &scan.triangle {
        Ok(t) => {
            table.summary(format!("triangle_left_corner={}", corner(t.left_corner)));
            table.summary(format!("triangle_apex={}", corner(t.apex)));
            table.summary(format!("triangle_right_corner={}", corner(t.right_corner)));
            table.summary(format!("triangle_width={}", num(t.width)));
        }
        Err(e) => table.summary(format!("triangle=unavailable ({e})")),
    }
    let four: Vec<f64> = scan
        .counts
        .iter()
        .filter(|(_, states, levels)| *states == 4 && *levels == 3)
        .map(|(s, _, _)| *s)
        .collect();
    match (four.first(), four.last()) {
        (Some(a), Some(b)) => table.summary(format!(
            "four_states_three_levels={},{} ({} grid points)",
            num(*a),
            num(*b),
            four.len()
        )),
        _ => table.summary("four_states_three_levels=none"),
    }
    table
}

fn averaged_table(config: &RunConfig) -> Result<Table> {
    let base = config.base_params()?;
    let ratios = config.grid.points();
    let mut rows = Vec::new();
    for &ratio in &ratios {
        rows.extend(averaged_rows(&base, ratio)?);
    }
    let mut table = level_table(&rows, config);
    match broken_region(config.chi_over_v) {
        Some((left, right)) => {
            let right = right.map_or_else(|| "open".to_string(), num);
            table.summary(format!("broken_region={},{}", num(left), right));
        }
        None => table.summary("broken_region=none"),
    }
    Ok(table)
}

fn physical_json(config: &RunConfig) -> Result<String> {
    let p = physical_to_model(&config.physical, config.nonlinearity).map_err(|e| anyhow!("{e}"))?;
    let v = p.coupling();
    let doc = serde_json::json!({
        "version": VERSION,
        "units": "inverse metres for S, w, chi, v",
        "S": p.drive(),
        "w": p.frequency(),
        "chi": p.chi(),
        "v": v,
        "s_over_w": p.drive_ratio(),
        "w_over_v": p.frequency() / v,
        "chi_over_v": p.chi() / v,
        "defocusing": config.nonlinearity == ncdt_core::Nonlinearity::Defocusing,
        "config": config.echo(),
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc)?))
}
