mod common;

use std::process::Command;

use refractbench::config::{Method, RunConfig};
use refractbench::metrics::report::{parse_report_csv, read_report_csv};
use refractbench::metrics::BenchmarkTable;
use refractbench::pipeline::{Pipeline, CALIBRATION_FILE, ERRORS_FILE, PREDICTION_MANIFEST, REPORT_FILE, TABLE_CSV_FILE};
use refractbench::refraction::SeverityLevel;
use refractbench::renderer::dataset::sequence_dir;
use refractbench::renderer::io::frame_file;
use refractbench::Error;

use common::{smoke_config, tree};

fn full_run(cfg: RunConfig) -> Pipeline {
    let p = Pipeline::new(cfg).unwrap();
    p.calibrate().unwrap();
    p.generate().unwrap();
    p.restore(&Method::ALL).unwrap();
    p.evaluate().unwrap();
    p
}

#[test]
fn smoke_run_gives_one_row_per_sequence_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let p = full_run(smoke_config(dir.path()));
    let rows = read_report_csv(&p.root().join(REPORT_FILE)).unwrap();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(row.multi_frame, row.method == "grid_registration");
        let expected_frames = if row.multi_frame { 6 } else { 1 };
        assert_eq!(row.n_frames_evaluated, expected_frames);
        assert!(row.psnr_db > 0.0 && row.ssim <= 1.0);
        assert!(row.lpips_vgg.is_none() && row.clip.is_none());
    }
    // report and aggregate table re-parse bit-exactly
    let text = std::fs::read_to_string(p.root().join(REPORT_FILE)).unwrap();
    assert_eq!(parse_report_csv(&text).unwrap(), rows);
    let table = p.report().unwrap();
    let cells = BenchmarkTable::parse_csv(&std::fs::read_to_string(p.root().join(TABLE_CSV_FILE)).unwrap()).unwrap();
    assert_eq!(cells.len(), 3);
    for cell in cells {
        assert_eq!(Some(&cell), table.cell(&cell.method, cell.wave_type, cell.level));
    }
}

#[test]
fn grid_registration_writes_frames_and_grid_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let p = full_run(smoke_config(dir.path()));
    let index = p.load_index().unwrap();
    for entry in &index.sequences {
        let out = p.prediction_dir("grid_registration", &entry.sequence_id);
        for i in 0..6 {
            assert!(out.join(frame_file(i, 6)).is_file());
            let grid = refractbench::renderer::read_raw(&out.join(refractbench::pipeline::grid_file(i, 6))).unwrap();
            assert_eq!((grid.width, grid.height, grid.channels), (2, 2, 2));
        }
        assert!(p.prediction_dir("first_frame", &entry.sequence_id).join("restored.png").is_file());
    }
}

#[test]
fn identical_configs_produce_identical_trees() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    full_run(smoke_config(a.path()));
    full_run(smoke_config(b.path()));
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.len() > 20);
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (path, bytes) in &ta {
        assert!(bytes == &tb[path], "{} differs", path.display());
    }
}

#[test]
fn resume_redoes_only_missing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = full_run(smoke_config(dir.path()));
    let before = tree(dir.path());
    let index = p.load_index().unwrap();
    let victim = &index.sequences[1].sequence_id;

    std::fs::remove_dir_all(sequence_dir(&p.dataset_root(), victim)).unwrap();
    let (_, summary) = p.generate().unwrap();
    assert_eq!((summary.written, summary.skipped), (1, 1));

    std::fs::remove_dir_all(p.prediction_dir("pixel_average", victim)).unwrap();
    let summary = p.restore(&Method::ALL).unwrap();
    assert_eq!((summary.written, summary.skipped), (1, 5));
    p.evaluate().unwrap();
    assert_eq!(tree(dir.path()), before);
}

#[test]
fn changed_registration_settings_invalidate_only_that_method() {
    let dir = tempfile::tempdir().unwrap();
    full_run(smoke_config(dir.path()));
    let mut cfg = smoke_config(dir.path());
    cfg.registration.iterations = 30;
    let p = Pipeline::new(cfg).unwrap();
    let summary = p.restore(&Method::ALL).unwrap();
    assert_eq!((summary.written, summary.skipped), (2, 4));
}

#[test]
fn evaluating_twice_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = full_run(smoke_config(dir.path()));
    let first = std::fs::read(p.root().join(REPORT_FILE)).unwrap();
    p.evaluate().unwrap();
    assert_eq!(std::fs::read(p.root().join(REPORT_FILE)).unwrap(), first);
}

#[test]
fn generate_requires_a_matching_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(smoke_config(dir.path())).unwrap();
    let err = p.generate().unwrap_err();
    assert!(matches!(&err, Error::Config(m) if m.contains("calibrate")), "{err}");
    assert!(!p.dataset_root().exists());

    p.calibrate().unwrap();
    let mut other = smoke_config(dir.path());
    other.refraction.background_distance = 2.0;
    let err = Pipeline::new(other).unwrap().generate().unwrap_err();
    assert!(matches!(&err, Error::Config(m) if m.contains("different settings")), "{err}");
}

#[test]
fn two_backgrounds_by_two_profiles_give_four_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke_config(dir.path());
    cfg.profile_count = 2;
    let p = Pipeline::new(cfg).unwrap();
    p.calibrate().unwrap();
    let (index, summary) = p.generate().unwrap();
    assert_eq!(index.sequences.len(), 4);
    assert_eq!(summary.written, 4);
    let reread = p.load_index().unwrap();
    assert_eq!(reread, index);
    for e in &index.sequences {
        let dir = sequence_dir(&p.dataset_root(), &e.sequence_id);
        assert!(dir.join("gt.png").is_file() && dir.join("manifest.json").is_file());
        assert_eq!(e.manifest.config.as_ref(), Some(&p.config().resolved()));
    }
}

#[test]
fn calibration_hits_every_level_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke_config(dir.path());
    cfg.levels = SeverityLevel::ALL.to_vec();
    cfg.wave_types = vec![refractbench::wavefield::WaveType::Ocean, refractbench::wavefield::WaveType::Sine];
    let p = Pipeline::new(cfg).unwrap();
    let file = p.calibrate().unwrap();
    let bytes = std::fs::read(p.root().join(CALIBRATION_FILE)).unwrap();
    for wave in [refractbench::wavefield::WaveType::Ocean, refractbench::wavefield::WaveType::Sine] {
        let stds: Vec<f64> = SeverityLevel::ALL
            .iter()
            .map(|&l| {
                let r = file.record(wave, l).unwrap();
                assert!((r.achieved_std - r.target_std).abs() <= 0.02 * r.target_std);
                r.achieved_std
            })
            .collect();
        assert!(stds.windows(2).all(|w| w[0] < w[1]), "{stds:?}");
    }
    assert_eq!(file.record(refractbench::wavefield::WaveType::Ocean, SeverityLevel::Low).unwrap().speed_multiplier, 1.0);
    p.calibrate().unwrap();
    assert_eq!(std::fs::read(p.root().join(CALIBRATION_FILE)).unwrap(), bytes);
}

#[test]
fn corrupted_prediction_is_reported_per_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let p = full_run(smoke_config(dir.path()));
    let index = p.load_index().unwrap();
    let victim = &index.sequences[0].sequence_id;
    let png = p.prediction_dir("first_frame", victim).join("restored.png");
    let mut bytes = std::fs::read(&png).unwrap();
    let last = bytes.len() - 20;
    bytes[last] ^= 0xff;
    std::fs::write(&png, bytes).unwrap();

    let err = p.evaluate().unwrap_err();
    assert!(matches!(err, Error::Integrity { .. }), "{err}");
    assert_ne!(err.exit_code(), 0);
    let rows = read_report_csv(&p.root().join(REPORT_FILE)).unwrap();
    assert_eq!(rows.len(), 5);
    let errors = std::fs::read_to_string(p.root().join(ERRORS_FILE)).unwrap();
    assert!(errors.contains(victim.as_str()) && errors.contains("first_frame"));
}

#[test]
fn stale_prediction_manifest_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let p = full_run(smoke_config(dir.path()));
    let index = p.load_index().unwrap();
    let path = p
        .prediction_dir("pixel_average", &index.sequences[0].sequence_id)
        .join(PREDICTION_MANIFEST);
    let text = std::fs::read_to_string(&path).unwrap();
    let hash = &index.sequences[0].manifest.content_hash;
    std::fs::write(&path, text.replace(hash.as_str(), &"0".repeat(hash.len()))).unwrap();
    assert!(p.evaluate().is_err());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_refractbench"))
}

#[test]
fn cli_runs_every_subcommand_with_the_env_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"wave_types": ["sine"], "levels": ["low"], "profile_count": 1, "frame_count": 4,
            "resolution": 24, "synthetic_backgrounds": 1, "registration": {"iterations": 10}}"#,
    )
    .unwrap();
    let out = dir.path().join("from-env");
    for args in [
        vec!["calibrate"],
        vec!["generate"],
        vec!["restore", "--method", "first_frame", "--method", "pixel_average"],
        vec!["evaluate"],
        vec!["report"],
    ] {
        let status = cli()
            .args(&args)
            .arg("--config")
            .arg(&config)
            .args(["--seed", "5", "--workers", "1"])
            .env("REFRACTBENCH_OUTPUT", &out)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap();
        assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
    }
    let rows = read_report_csv(&out.join(REPORT_FILE)).unwrap();
    assert_eq!(rows.len(), 2);

    // --output wins over the environment
    let flag_out = dir.path().join("from-flag");
    let status = cli()
        .args(["calibrate", "--output"])
        .arg(&flag_out)
        .arg("--config")
        .arg(&config)
        .env("REFRACTBENCH_OUTPUT", &out)
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(flag_out.join(CALIBRATION_FILE).is_file());
}

#[test]
fn cli_exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        cli()
            .args(args)
            .env("REFRACTBENCH_OUTPUT", dir.path())
            .env("RUST_LOG", "off")
            .output()
            .unwrap()
    };
    let out = run(&["restore", "--method", "magic"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("first_frame") && stderr.contains("grid_registration"), "{stderr}");

    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["generate"]).status.code(), Some(3));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"frame_count": 3, "colour": "blue"}"#).unwrap();
    let out = run(&["calibrate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["calibrate", "--config", missing.to_str().unwrap()]).status.code(), Some(5));
}
