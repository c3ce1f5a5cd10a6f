//! Command-level orchestration: calibrate, generate, restore, evaluate, report.
//!
//! Output tree under the run root:
//!
//! ```text
//! calibration.json
//! dataset/dataset_index.json
//! dataset/{wave}/{level}/{background}_{seed}/...
//! predictions/{method}/{wave}/{level}/{background}_{seed}/...
//! report.csv, table.csv, table.txt
//! ```
//!
//! Every sequence-level job writes into its own directory through a staged
//! swap, so an interrupted command leaves either complete outputs or none.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::report::{read_report_csv, write_report_csv};
use crate::metrics::{aggregate_table, evaluate_method, BenchmarkTable, MetricRow, Prediction};
use crate::refraction::{
    calibrate_amplitude, calibrate_speed, distortion_rate, CalibrationRecord, ProfileSet, SeverityLevel,
    SpeedCalibration,
};
use crate::renderer::dataset::{sequence_dir, DatasetIndex, IndexEntry, SubsetPair};
use crate::renderer::io::{
    frame_file, read_manifest, read_verified, sha256_hex, write_atomic, StagedDir, GROUND_TRUTH_FILE,
};
use crate::renderer::{
    ingest_background, render_sequence_to_dir, synthetic_background, Background, Manifest, RawField, RenderRequest,
};
use crate::restore::{grid_register, restore_first_frame, Checkpoint, FrameAverager};
use crate::wavefield::{profile_seed, ProfileGenerator, ProfileSpec, WaveType};

pub const CALIBRATION_FILE: &str = "calibration.json";
pub const DATASET_DIR: &str = "dataset";
pub const PREDICTIONS_DIR: &str = "predictions";
pub const REPORT_FILE: &str = "report.csv";
pub const ERRORS_FILE: &str = "errors.csv";
pub const TABLE_CSV_FILE: &str = "table.csv";
pub const TABLE_TEXT_FILE: &str = "table.txt";
pub const PREDICTION_MANIFEST: &str = "prediction.json";
pub const RESTORED_FILE: &str = "restored.png";
/// Method name of the optional row scoring the distorted frames themselves.
pub const ENTIRE_VIDEO: &str = "entire_video";

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(value).map_err(|e| Error::Numerical(e.to_string()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::integrity(path, e.to_string()))
}

/// Stored calibration: the records plus the settings they were derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub inputs: serde_json::Value,
    pub records: Vec<CalibrationRecord>,
}

impl CalibrationFile {
    pub fn record(&self, wave: WaveType, level: SeverityLevel) -> Option<&CalibrationRecord> {
        self.records.iter().find(|r| r.wave_type == wave && r.level == level)
    }
}

/// Written next to each restored output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionManifest {
    pub method: Method,
    pub sequence_id: String,
    /// Content hash of the sequence the prediction was computed from.
    pub source_hash: String,
    /// Method settings; resumed outputs must match them.
    pub settings: serde_json::Value,
    pub files: BTreeMap<String, String>,
    pub frame_count: usize,
    pub trace: Vec<Checkpoint>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JobSummary {
    pub written: usize,
    pub skipped: usize,
}

/// One job per sequence: background, profile, level.
#[derive(Debug, Clone)]
struct SequenceJob {
    wave: WaveType,
    level: SeverityLevel,
    background: usize,
    profile_index: u64,
}

pub struct Pipeline {
    cfg: RunConfig,
    root: PathBuf,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let root = cfg.output_root();
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.workers {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Self { cfg, root, pool })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset_root(&self) -> PathBuf {
        self.root.join(DATASET_DIR)
    }

    pub fn prediction_dir(&self, method: &str, sequence_id: &str) -> PathBuf {
        sequence_dir(&self.root.join(PREDICTIONS_DIR).join(method), sequence_id)
    }

    /// The settings a calibration depends on; generation refuses to use a
    /// calibration whose inputs differ.
    fn calibration_inputs(&self) -> serde_json::Value {
        let c = &self.cfg;
        serde_json::json!({
            "seed": c.seed,
            "wave_types": c.wave_types,
            "profiles": c.calibration_profiles(),
            "frames": c.calibration_frames(),
            "resolution": c.calibration_resolution(),
            "waves": c.waves,
            "refraction": c.refraction,
            "calibration": c.calibration,
        })
    }

    fn profile_specs(&self, wave: WaveType, count: usize, resolution: usize, multiplier: f64) -> Vec<ProfileSpec> {
        (0..count as u64)
            .map(|i| ProfileSpec {
                wave_type: wave,
                seed: profile_seed(self.cfg.seed, wave, i),
                resolution,
                frame_interval: self.cfg.waves.frame_dt * multiplier,
            })
            .collect()
    }

    /// Displacement change per frame relative to displacement std, at unit
    /// severity; nearly independent of amplitude, so it compares families.
    fn relative_rate(&self, wave: WaveType, multiplier: f64) -> Result<f64> {
        let c = &self.cfg.calibration;
        let mut resolution = self.cfg.calibration_resolution();
        if wave == WaveType::Ocean {
            // the FFT surface needs power-of-two sides; the rate is per std, so
            // the reference barely depends on resolution
            resolution = resolution.next_power_of_two();
        }
        let specs = self.profile_specs(wave, c.speed_profiles, resolution, multiplier);
        let set = ProfileSet::generate(&specs, &self.cfg.waves, c.speed_frames, 1)?;
        let p = self.cfg.refraction.with_severity(1.0);
        let std = set.displacement_std(&p);
        if !(std > 0.0) {
            return Err(Error::Numerical(format!("{wave}: flat surface, displacement std is {std}")));
        }
        Ok(distortion_rate(&set, &p) / std)
    }

    /// Matches each family's distortion speed to the ocean, then finds the
    /// severity knob of every level on the speed-adjusted profiles.
    pub fn calibrate(&self) -> Result<CalibrationFile> {
        self.pool.install(|| self.calibrate_inner())
    }

    fn calibrate_inner(&self) -> Result<CalibrationFile> {
        let c = &self.cfg.calibration;
        let base = self.cfg.refraction;
        let needs_reference = !c.skip_speed && self.cfg.wave_types.iter().any(|&w| w != WaveType::Ocean);
        let reference = if needs_reference {
            Some(self.relative_rate(WaveType::Ocean, 1.0)?)
        } else {
            None
        };
        let mut records = Vec::new();
        for &wave in &self.cfg.wave_types {
            let speed = match reference {
                Some(r) => calibrate_speed(wave, r, c.speed_tolerance, c.max_iterations, |m| {
                    self.relative_rate(wave, m)
                })?,
                None => SpeedCalibration {
                    multiplier: 1.0,
                    achieved_rate: 0.0,
                    reference_rate: 0.0,
                },
            };
            log::info!("{wave}: speed multiplier {:.4}", speed.multiplier);
            let specs = self.profile_specs(
                wave,
                self.cfg.calibration_profiles(),
                self.cfg.calibration_resolution(),
                speed.multiplier,
            );
            let set = ProfileSet::generate(&specs, &self.cfg.waves, self.cfg.calibration_frames(), c.frame_stride)?;
            for &level in &self.cfg.levels {
                let cal = calibrate_amplitude(&set, level, &base, c.tolerance, c.max_iterations)?;
                log::info!("{wave}/{level}: s = {:.5}, std {:.6}", cal.s, cal.achieved_std);
                records.push(CalibrationRecord {
                    wave_type: wave,
                    level,
                    s: cal.s,
                    alpha: cal.params.alpha,
                    distance_scale: cal.params.distance_scale,
                    target_std: level.target_std(),
                    achieved_std: cal.achieved_std,
                    speed_multiplier: speed.multiplier,
                    achieved_rate: speed.achieved_rate,
                    reference_rate: speed.reference_rate,
                });
            }
        }
        let file = CalibrationFile {
            inputs: self.calibration_inputs(),
            records,
        };
        write_atomic(&self.root.join(CALIBRATION_FILE), &to_json(&file)?)?;
        Ok(file)
    }

    pub fn load_calibration(&self) -> Result<CalibrationFile> {
        let path = self.root.join(CALIBRATION_FILE);
        if !path.exists() {
            return Err(Error::Config(format!(
                "{} not found; run `refractbench calibrate` with this config first",
                path.display()
            )));
        }
        let file: CalibrationFile = read_json(&path)?;
        if file.inputs != self.calibration_inputs() {
            return Err(Error::Config(format!(
                "{} was computed with different settings; rerun `refractbench calibrate`",
                path.display()
            )));
        }
        Ok(file)
    }

    pub fn backgrounds(&self) -> Result<Vec<Background>> {
        let n = self.cfg.resolution;
        let mut out = self
            .cfg
            .backgrounds
            .iter()
            .map(|p| ingest_background(p, n))
            .collect::<Result<Vec<_>>>()?;
        out.extend((0..self.cfg.synthetic_backgrounds as u64).map(|i| synthetic_background(i, n)));
        let mut seen = BTreeSet::new();
        for bg in &out {
            if !seen.insert(bg.id.as_str()) || bg.id.contains(['/', '\\']) {
                return Err(Error::Config(format!("background id `{}` is repeated or invalid", bg.id)));
            }
        }
        Ok(out)
    }

    fn jobs(&self, backgrounds: usize) -> Vec<SequenceJob> {
        let mut jobs = Vec::new();
        for &wave in &self.cfg.wave_types {
            for &level in &self.cfg.levels {
                for background in 0..backgrounds {
                    for profile_index in 0..self.cfg.profile_count as u64 {
                        jobs.push(SequenceJob {
                            wave,
                            level,
                            background,
                            profile_index,
                        });
                    }
                }
            }
        }
        jobs
    }

    /// Renders every sequence, reusing complete ones from an earlier run.
    pub fn generate(&self) -> Result<(DatasetIndex, JobSummary)> {
        let calibration = self.load_calibration()?;
        let backgrounds = self.backgrounds()?;
        let root = self.dataset_root();
        let config = self.cfg.resolved();
        let jobs = self.jobs(backgrounds.len());
        let results = self.pool.install(|| {
            jobs.par_iter()
                .map(|job| {
                    let record = calibration.record(job.wave, job.level).ok_or_else(|| {
                        Error::Config(format!("calibration has no entry for {}/{}", job.wave, job.level))
                    })?;
                    let bg = &backgrounds[job.background];
                    let spec = ProfileSpec {
                        wave_type: job.wave,
                        seed: profile_seed(self.cfg.seed, job.wave, job.profile_index),
                        resolution: self.cfg.resolution,
                        frame_interval: self.cfg.waves.frame_dt * record.speed_multiplier,
                    };
                    let sequence_id = Manifest::sequence_id_for(job.wave, job.level, &bg.id, spec.seed);
                    let dir = sequence_dir(&root, &sequence_id);
                    if let Ok(m) = read_manifest(&dir) {
                        if m.config.as_ref() == Some(&config) && m.calibration == *record {
                            return Ok((IndexEntry { sequence_id, manifest: m }, false));
                        }
                    }
                    let mut profile = ProfileGenerator::new(spec, &self.cfg.waves)?;
                    let req = RenderRequest {
                        frame_count: self.cfg.frame_count,
                        calibration: *record,
                        refraction: self.cfg.refraction,
                        profile_index: job.profile_index,
                        keep_displacements: self.cfg.keep_displacements,
                        config: Some(config.clone()),
                    };
                    let manifest = render_sequence_to_dir(bg, &mut profile, &req, &dir)?;
                    log::info!("rendered {sequence_id}");
                    Ok((IndexEntry { sequence_id, manifest }, true))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut summary = JobSummary::default();
        let mut entries = Vec::with_capacity(results.len());
        for (entry, written) in results {
            if written {
                summary.written += 1;
            } else {
                summary.skipped += 1;
            }
            entries.push(entry);
        }
        let index = DatasetIndex::new(entries);
        index.write(&root)?;
        Ok((index, summary))
    }

    pub fn load_index(&self) -> Result<DatasetIndex> {
        let root = self.dataset_root();
        if !root.join(crate::renderer::dataset::INDEX_FILE).exists() {
            return Err(Error::Config(format!(
                "no dataset under {}; run `refractbench generate` first",
                root.display()
            )));
        }
        DatasetIndex::read(&root)
    }

    /// Sequences whose (background, profile) pair is in the benchmark subset.
    fn benchmark_entries(index: &DatasetIndex) -> Vec<&IndexEntry> {
        let subset: BTreeSet<&SubsetPair> = index.benchmark_subset.iter().collect();
        index
            .sequences
            .iter()
            .filter(|e| {
                subset.contains(&SubsetPair {
                    background_id: e.manifest.background_id.clone(),
                    profile_seed: e.manifest.profile_seed,
                })
            })
            .collect()
    }

    fn method_settings(&self, method: Method) -> serde_json::Value {
        match method {
            Method::GridRegistration => serde_json::to_value(&self.cfg.registration).expect("config serializes"),
            _ => serde_json::Value::Null,
        }
    }

    /// Runs `methods` on every benchmark sequence. Existing outputs computed
    /// from the same sequence with the same settings are kept.
    pub fn restore(&self, methods: &[Method]) -> Result<JobSummary> {
        let index = self.load_index()?;
        let entries = Self::benchmark_entries(&index);
        let tasks: Vec<(&IndexEntry, Method)> = entries
            .iter()
            .flat_map(|e| methods.iter().map(move |&m| (*e, m)))
            .collect();
        let results = self.pool.install(|| {
            tasks
                .par_iter()
                .map(|&(entry, method)| self.restore_one(entry, method))
                .collect::<Result<Vec<bool>>>()
        })?;
        let written = results.iter().filter(|&&w| w).count();
        Ok(JobSummary {
            written,
            skipped: results.len() - written,
        })
    }

    fn restore_one(&self, entry: &IndexEntry, method: Method) -> Result<bool> {
        let out = self.prediction_dir(method.name(), &entry.sequence_id);
        let settings = self.method_settings(method);
        if let Ok(m) = read_json::<PredictionManifest>(&out.join(PREDICTION_MANIFEST)) {
            if m.source_hash == entry.manifest.content_hash && m.settings == settings && m.method == method {
                return Ok(false);
            }
        }
        let src = sequence_dir(&self.dataset_root(), &entry.sequence_id);
        let manifest = read_manifest(&src)?;
        if manifest.content_hash != entry.manifest.content_hash {
            return Err(Error::integrity(&src, "sequence differs from the dataset index"));
        }
        let count = manifest.frame_count;
        let frame = |i: usize| read_image(&src, &read_verified(&src, &manifest, &frame_file(i, count))?, &frame_file(i, count));
        let staged = StagedDir::new(&out)?;
        let mut files = BTreeMap::new();
        let mut trace = Vec::new();
        let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
            files.insert(name.clone(), staged.put(&name, &bytes)?);
            Ok(())
        };
        let frame_count = match method {
            Method::FirstFrame => {
                put(RESTORED_FILE.into(), restore_first_frame(&[frame(0)?])?.encode_png16()?)?;
                1
            }
            Method::PixelAverage => {
                let mut avg = FrameAverager::default();
                for i in 0..count {
                    avg.push(&frame(i)?)?;
                }
                let img = avg.finish()?;
                put(RESTORED_FILE.into(), img.encode_png16()?)?;
                1
            }
            Method::GridRegistration => {
                let frames = (0..count).map(frame).collect::<Result<Vec<_>>>()?;
                let reg = grid_register(&frames, &self.cfg.registration)?;
                for (i, img) in reg.frames.iter().enumerate() {
                    put(frame_file(i, count), img.encode_png16()?)?;
                }
                if self.cfg.dump_grids {
                    for (i, g) in reg.grids.iter().enumerate() {
                        let raw = RawField {
                            width: g.cols as u32,
                            height: g.rows as u32,
                            channels: 2,
                            data: g.offsets.iter().flat_map(|o| [o[0] as f32, o[1] as f32]).collect(),
                        };
                        put(grid_file(i, count), raw.encode())?;
                    }
                }
                trace = reg.trace;
                count
            }
        };
        let pm = PredictionManifest {
            method,
            sequence_id: entry.sequence_id.clone(),
            source_hash: manifest.content_hash.clone(),
            settings,
            files,
            frame_count,
            trace,
        };
        staged.put(PREDICTION_MANIFEST, &to_json(&pm)?)?;
        staged.commit()?;
        log::info!("{method}: restored {}", entry.sequence_id);
        Ok(true)
    }

    fn load_prediction(&self, entry: &IndexEntry, method: Method) -> Result<Prediction> {
        let dir = self.prediction_dir(method.name(), &entry.sequence_id);
        let path = dir.join(PREDICTION_MANIFEST);
        if !path.exists() {
            return Err(Error::Config(format!(
                "no {method} output for {}; run `refractbench restore` first",
                entry.sequence_id
            )));
        }
        let pm: PredictionManifest = read_json(&path)?;
        if pm.source_hash != entry.manifest.content_hash {
            return Err(Error::integrity(&dir, "prediction is stale; rerun `refractbench restore`"));
        }
        let load = |name: &str| -> Result<Image> {
            let bytes = read_checked(&dir, &pm.files, name)?;
            read_image(&dir, &bytes, name)
        };
        if method.multi_frame() {
            let frames = (0..pm.frame_count)
                .map(|i| load(&frame_file(i, pm.frame_count)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Prediction::Frames(frames))
        } else {
            Ok(Prediction::Single(load(RESTORED_FILE)?))
        }
    }

    /// Methods with a predictions directory, in canonical order.
    pub fn present_methods(&self) -> Vec<Method> {
        let dir = self.root.join(PREDICTIONS_DIR);
        Method::ALL.into_iter().filter(|m| dir.join(m.name()).is_dir()).collect()
    }

    /// One result per scored (sequence, method); a broken sequence yields a
    /// single error under the method name `*`.
    fn evaluate_sequence(&self, entry: &IndexEntry, methods: &[Method]) -> Vec<(String, Result<MetricRow>)> {
        let src = sequence_dir(&self.dataset_root(), &entry.sequence_id);
        let manifest = match read_manifest(&src).and_then(|m| {
            if m.content_hash == entry.manifest.content_hash {
                Ok(m)
            } else {
                Err(Error::integrity(&src, "sequence differs from the dataset index"))
            }
        }) {
            Ok(m) => m,
            Err(e) => return vec![("*".into(), Err(e))],
        };
        let gt = match read_verified(&src, &manifest, GROUND_TRUTH_FILE)
            .and_then(|b| read_image(&src, &b, GROUND_TRUTH_FILE))
        {
            Ok(g) => g,
            Err(e) => return vec![("*".into(), Err(e))],
        };
        let (wave, level, id) = (manifest.wave_type, manifest.level, entry.sequence_id.as_str());
        let mut out: Vec<(String, Result<MetricRow>)> = methods
            .iter()
            .map(|&m| {
                let row = self
                    .load_prediction(entry, m)
                    .and_then(|pred| evaluate_method(m.name(), id, wave, level, &pred, &gt));
                (m.name().to_string(), row)
            })
            .collect();
        if self.cfg.entire_video_row {
            let count = manifest.frame_count;
            let row = (0..count)
                .map(|i| read_image(&src, &read_verified(&src, &manifest, &frame_file(i, count))?, &frame_file(i, count)))
                .collect::<Result<Vec<_>>>()
                .and_then(|frames| evaluate_method(ENTIRE_VIDEO, id, wave, level, &Prediction::Frames(frames), &gt));
            out.push((ENTIRE_VIDEO.into(), row));
        }
        out
    }

    /// Scores every benchmark sequence for each method with predictions and
    /// writes `report.csv` plus the aggregated tables. Failed (sequence,
    /// method) pairs go to `errors.csv`, and the first failure is returned
    /// once everything else is written.
    pub fn evaluate(&self) -> Result<Vec<MetricRow>> {
        let index = self.load_index()?;
        let entries = Self::benchmark_entries(&index);
        let methods = self.present_methods();
        if methods.is_empty() && !self.cfg.entire_video_row {
            return Err(Error::Config(format!(
                "no predictions under {}; run `refractbench restore` first",
                self.root.join(PREDICTIONS_DIR).display()
            )));
        }
        let results: Vec<Vec<(String, Result<MetricRow>)>> =
            self.pool.install(|| entries.par_iter().map(|e| self.evaluate_sequence(e, &methods)).collect());
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for (entry, per_method) in entries.iter().zip(results) {
            for (method, r) in per_method {
                match r {
                    Ok(row) => rows.push(row),
                    Err(e) => {
                        log::error!("{} / {method}: {e}", entry.sequence_id);
                        failures.push((entry.sequence_id.clone(), method, e));
                    }
                }
            }
        }
        rows.sort_by(|a, b| (&a.sequence_id, &a.method).cmp(&(&b.sequence_id, &b.method)));
        write_report_csv(&self.root.join(REPORT_FILE), &rows)?;
        if !rows.is_empty() {
            self.write_tables(&aggregate_table(&rows)?)?;
        }
        let errors_path = self.root.join(ERRORS_FILE);
        if failures.is_empty() {
            if errors_path.exists() {
                fs::remove_file(&errors_path).map_err(|e| Error::io(&errors_path, e))?;
            }
            return Ok(rows);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Numerical(e.to_string());
        w.write_record(["sequence_id", "method", "error"]).map_err(csv_err)?;
        for (id, method, e) in &failures {
            w.write_record([id.as_str(), method.as_str(), &e.to_string()]).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        write_atomic(&errors_path, &bytes)?;
        Err(failures.swap_remove(0).2)
    }

    fn write_tables(&self, table: &BenchmarkTable) -> Result<()> {
        write_atomic(&self.root.join(TABLE_CSV_FILE), table.to_csv()?.as_bytes())?;
        write_atomic(&self.root.join(TABLE_TEXT_FILE), table.to_text().as_bytes())
    }

    /// Rebuilds the tables from `report.csv`.
    pub fn report(&self) -> Result<BenchmarkTable> {
        let path = self.root.join(REPORT_FILE);
        if !path.exists() {
            return Err(Error::Config(format!(
                "{} not found; run `refractbench evaluate` first",
                path.display()
            )));
        }
        let table = aggregate_table(&read_report_csv(&path)?)?;
        self.write_tables(&table)?;
        Ok(table)
    }
}

pub fn grid_file(i: usize, count: usize) -> String {
    format!("grid_{i:0width$}.rfb", width = crate::renderer::io::frame_digits(count))
}

fn read_image(dir: &Path, bytes: &[u8], name: &str) -> Result<Image> {
    let path = dir.join(name);
    Image::decode_png(bytes, &path).map_err(|e| Error::integrity(&path, e.to_string()))
}

fn read_checked(dir: &Path, files: &BTreeMap<String, String>, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    let expected = files
        .get(name)
        .ok_or_else(|| Error::integrity(&path, "file not listed in manifest"))?;
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if &sha256_hex(&bytes) != expected {
        return Err(Error::integrity(&path, "digest mismatch"));
    }
    Ok(bytes)
}
