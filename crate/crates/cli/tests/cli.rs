//! End-to-end runs of the `ncdt` binary.

use std::process::{Command, Output};

fn ncdt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncdt"))
        .args(args)
        .output()
        .expect("run ncdt")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

fn summary(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .map(str::to_string)
}

fn json(args: &[&str]) -> serde_json::Value {
    let out = ncdt(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn zero_window_gives_one_row() {
    let out = ncdt(&["propagate", "--z-max", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let fields: Vec<f64> = rows[0].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields, vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn header_echoes_config_version_and_units() {
    let text = stdout(&ncdt(&[
        "propagate",
        "--z-max",
        "1",
        "--chi-over-v",
        "0.25",
    ]));
    assert!(text.starts_with(&format!("# ncdt {} propagate", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("#   chi-over-v=0.25\n"));
    assert!(text.contains("#   z_times_v: "));
    assert!(text.contains("\nz_times_v,re_c1,im_c1,re_c2,im_c2,p_return\n"));
    assert_eq!(summary(&text, "flagged_rows").as_deref(), Some("0"));
}

#[test]
fn propagate_is_byte_identical_across_runs() {
    let args = ["propagate", "--z-max", "20", "--s-over-w", "2.2"];
    assert_eq!(ncdt(&args).stdout, ncdt(&args).stdout);
}

#[test]
fn nonlinear_trace_stays_localized() {
    let text = stdout(&ncdt(&[
        "propagate",
        "--s-over-w",
        "2.2",
        "--chi-over-v",
        "0.4",
    ]));
    let min = data_rows(&text)
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min >= 0.8, "p_return min {min}");
}

#[test]
fn sweep_rows_do_not_depend_on_worker_count() {
    let base = [
        "sweep-localization",
        "--s-over-w",
        "2.2:2.6:9",
        "--z-max",
        "20",
    ];
    let runs: Vec<Vec<u8>> = ["1", "3", "16"]
        .iter()
        .map(|w| {
            let mut args = base.to_vec();
            args.extend(["--workers", w]);
            let out = ncdt(&args);
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    // The echoed config differs only in the worker count, which is not
    // echoed, so whole files match.
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    let ratios: Vec<f64> = data_rows(&text)
        .iter()
        .map(|r| r.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 9);
    assert!(ratios.windows(2).all(|p| p[0] < p[1]));
}

#[test]
fn full_threshold_gives_zero_width() {
    let out = ncdt(&[
        "sweep-localization",
        "--s-over-w",
        "2.3:2.5:5",
        "--z-max",
        "20",
        "--threshold",
        "1.0",
    ]);
    let text = stdout(&out);
    let width: f64 = summary(&text, "delta_gamma").unwrap().parse().unwrap();
    assert_eq!(width, 0.0);
    assert!(text.contains("# warning=no point reaches the threshold"));
    assert!(out.status.success());
}

#[test]
fn straight_guides_have_no_drive() {
    let v = json(&["physical", "--bend-amplitude", "0"]);
    assert_eq!(v["S"].as_f64(), Some(0.0));
    assert_eq!(v["s_over_w"].as_f64(), Some(0.0));
}

#[test]
fn doubling_power_doubles_chi() {
    let one = json(&["physical", "--power", "50"]);
    let two = json(&["physical", "--power", "100"]);
    assert_eq!(
        two["chi"].as_f64().unwrap(),
        2.0 * one["chi"].as_f64().unwrap()
    );
    assert_eq!(one["v"], two["v"]);
}

#[test]
fn invalid_physical_values_fail() {
    let out = ncdt(&["physical", "--wavelength=-1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wavelength"));
}

#[test]
fn invalid_settings_fail() {
    for args in [
        &["propagate", "--w-over-v", "0"][..],
        &["sweep-localization", "--s-over-w", "3:2:5"],
        &["sweep-localization", "--s-over-w", "2:3:0"],
        &["propagate", "--z-max", "nope"],
    ] {
        let out = ncdt(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = std::env::temp_dir().join(format!("ncdt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("run.conf");
    std::fs::write(&file, "# test\nchi-over-v = 0.8\nz-max = 3\n").unwrap();
    let path = file.to_str().unwrap();
    let text = stdout(&ncdt(&["propagate", "--config", path, "--z-max", "2"]));
    assert!(text.contains("#   chi-over-v=0.8\n"));
    assert!(text.contains("#   z-max=2\n"));

    std::fs::write(&file, "unknown-key = 1\n").unwrap();
    assert!(!ncdt(&["propagate", "--config", path]).status.success());

    let out_file = dir.join("out.csv");
    let out = ncdt(&[
        "averaged",
        "--s-over-w",
        "2.4",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&out_file).unwrap();
    assert_eq!(data_rows(&written).len(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn defaults_lists_every_flag() {
    let text = stdout(&ncdt(&["defaults"]));
    for key in [
        "w-over-v=10",
        "chi-over-v=0.4",
        "z-max=200",
        "threshold=0.5",
        "step-div=400",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    assert!(text.contains("s-over-w=0:3:61"));
}

#[test]
fn floquet_scan_reports_both_sources() {
    let out = ncdt(&[
        "floquet",
        "--w-over-v",
        "3",
        "--chi-over-v",
        "0.4",
        "--s-over-w",
        "0:2.5:11",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let rows = data_rows(&text);
    let sources: Vec<&str> = rows.iter().map(|r| r.split(',').nth(2).unwrap()).collect();
    assert!(sources.contains(&"harmonic-balance"));
    assert!(sources.contains(&"averaged"));
    assert!(rows
        .iter()
        .any(|r| r.contains(",broken-a,harmonic-balance,")));
    assert!(rows
        .iter()
        .any(|r| r.contains(",broken-b,harmonic-balance,")));
    assert!(summary(&text, "triangle_width").is_some());
    assert_eq!(
        summary(&text, "triangle_right_corner").as_deref(),
        Some("open")
    );
}
