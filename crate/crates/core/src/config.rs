//! Run configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refraction::{RefractionParams, SeverityLevel};
use crate::restore::RegistrationConfig;
use crate::wavefield::{WaveSettings, WaveType};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "REFRACTBENCH_OUTPUT";
pub const DEFAULT_OUTPUT: &str = "refractbench-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FirstFrame,
    PixelAverage,
    GridRegistration,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FirstFrame, Method::PixelAverage, Method::GridRegistration];

    pub fn name(self) -> &'static str {
        match self {
            Method::FirstFrame => "first_frame",
            Method::PixelAverage => "pixel_average",
            Method::GridRegistration => "grid_registration",
        }
    }

    pub fn multi_frame(self) -> bool {
        self == Method::GridRegistration
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            Error::Usage(format!("unknown method `{s}`; valid methods: {}", valid.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    /// Profiles per wave type; `None` uses the run's `profile_count`.
    pub profile_count: Option<usize>,
    /// Frames per profile; `None` uses the run's `frame_count`.
    pub frame_count: Option<usize>,
    /// Field resolution; `None` uses the run's `resolution`.
    pub resolution: Option<usize>,
    /// Use every `frame_stride`-th frame only.
    pub frame_stride: usize,
    /// Relative tolerance on the target std.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative tolerance when matching distortion speed to the ocean.
    pub speed_tolerance: f64,
    /// Skip speed matching and keep every multiplier at 1.
    pub skip_speed: bool,
    /// Profiles and consecutive frames used to measure distortion speed.
    pub speed_profiles: usize,
    pub speed_frames: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            profile_count: None,
            frame_count: None,
            resolution: None,
            frame_stride: 1,
            tolerance: 0.02,
            max_iterations: 60,
            speed_tolerance: 0.05,
            skip_speed: false,
            speed_profiles: 2,
            speed_frames: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Run-level seed from which every profile seed derives.
    pub seed: u64,
    pub wave_types: Vec<WaveType>,
    pub levels: Vec<SeverityLevel>,
    pub profile_count: usize,
    pub frame_count: usize,
    pub resolution: usize,
    /// Background image files, resampled to `resolution`.
    pub backgrounds: Vec<PathBuf>,
    /// Procedural backgrounds added after the files.
    pub synthetic_backgrounds: usize,
    pub methods: Vec<Method>,
    /// Output root; falls back to the environment, then a local directory.
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    /// Store per-frame displacement fields next to the frames.
    pub keep_displacements: bool,
    /// Dump registration grids next to registered frames.
    pub dump_grids: bool,
    /// Add a reference row scoring every distorted frame against the ground truth.
    pub entire_video_row: bool,
    pub waves: WaveSettings,
    pub refraction: RefractionParams,
    pub calibration: CalibrationSettings,
    pub registration: RegistrationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            wave_types: WaveType::ALL.to_vec(),
            levels: SeverityLevel::ALL.to_vec(),
            profile_count: 10,
            frame_count: 200,
            resolution: 512,
            backgrounds: Vec::new(),
            synthetic_backgrounds: 30,
            methods: Method::ALL.to_vec(),
            output: None,
            workers: None,
            keep_displacements: false,
            dump_grids: true,
            entire_video_row: false,
            waves: WaveSettings::default(),
            refraction: RefractionParams::default(),
            calibration: CalibrationSettings::default(),
            registration: RegistrationConfig::default(),
        }
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.wave_types.is_empty() || has_duplicates(&self.wave_types) {
            return bad("wave_types must be a non-empty list without repeats".into());
        }
        if self.levels.is_empty() || has_duplicates(&self.levels) {
            return bad("levels must be a non-empty list without repeats".into());
        }
        if has_duplicates(&self.methods) {
            return bad("methods must not repeat".into());
        }
        if self.profile_count == 0 || self.frame_count == 0 {
            return bad("profile_count and frame_count must be >= 1".into());
        }
        if self.resolution < 16 {
            return bad(format!("resolution {} is below the minimum of 16", self.resolution));
        }
        if self.wave_types.contains(&WaveType::Ocean)
            && !(self.resolution.is_power_of_two() && self.calibration_resolution().is_power_of_two())
        {
            return bad("the ocean family needs power-of-two resolutions".into());
        }
        if self.backgrounds.is_empty() && self.synthetic_backgrounds == 0 {
            return bad("no backgrounds: list files or set synthetic_backgrounds".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        let c = &self.calibration;
        if c.profile_count == Some(0) || c.frame_count == Some(0) || c.frame_stride == 0 {
            return bad("calibration counts and frame_stride must be >= 1".into());
        }
        if c.speed_profiles == 0 || c.speed_frames < 2 {
            return bad("calibration needs speed_profiles >= 1 and speed_frames >= 2".into());
        }
        if c.resolution.is_some_and(|r| r < 2) {
            return bad("calibration resolution must be >= 2".into());
        }
        if !(c.tolerance > 0.0 && c.speed_tolerance > 0.0) || c.max_iterations == 0 {
            return bad("calibration tolerances and max_iterations must be positive".into());
        }
        if !(self.waves.frame_dt.is_finite() && self.waves.frame_dt >= 0.0) {
            return bad("waves.frame_dt must be finite and >= 0".into());
        }
        self.refraction.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.registration.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Output root: config value, then `REFRACTBENCH_OUTPUT`, then `./refractbench-out`.
    pub fn output_root(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }

    /// The configuration with every default spelled out, as stored in manifests.
    /// Output root and worker count are left out: neither changes any result.
    pub fn resolved(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output");
            map.remove("workers");
        }
        v
    }

    pub fn calibration_profiles(&self) -> usize {
        self.calibration.profile_count.unwrap_or(self.profile_count)
    }

    pub fn calibration_frames(&self) -> usize {
        self.calibration.frame_count.unwrap_or(self.frame_count)
    }

    pub fn calibration_resolution(&self) -> usize {
        self.calibration.resolution.unwrap_or(self.resolution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.profile_count, 10);
        assert_eq!(cfg.frame_count, 200);
        assert_eq!(cfg.resolution, 512);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"frames": 3}"#), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_json(r#"{"waves": {"ocean": {"windspeed": 3}}}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_json(r#"{"levels": []}"#).is_err());
        assert!(RunConfig::from_json(r#"{"levels": ["low", "low"]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"resolution": 8}"#).is_err());
        assert!(RunConfig::from_json(r#"{"resolution": 48}"#).is_err());
        assert!(RunConfig::from_json(r#"{"resolution": 48, "wave_types": ["sine"]}"#).is_ok());
        assert!(RunConfig::from_json(r#"{"registration": {"pairs_per_frame": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"methods": ["magic"]}"#).is_err());
    }

    #[test]
    fn resolved_copy_round_trips() {
        let cfg = RunConfig::from_json(r#"{"seed": 9, "wave_types": ["sine"], "output": "/tmp/x"}"#).unwrap();
        let v = cfg.resolved();
        assert!(v.get("output").is_none());
        assert_eq!(v["registration"]["pairs_per_frame"], 12);
        let back: RunConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back.seed, 9);
        assert_eq!(back.wave_types, vec![WaveType::Sine]);
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let err = "nope".parse::<Method>().unwrap_err();
        assert!(matches!(err, Error::Usage(ref m) if m.contains("grid_registration")));
    }
}
