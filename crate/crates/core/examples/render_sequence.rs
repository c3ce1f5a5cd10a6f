//! Calibrates the low severity level on two ocean profiles, renders one
//! sequence over a procedural background into a directory and reads it back.
//!
//! Usage: `render_sequence [output_dir] [resolution] [frames]`

use std::path::PathBuf;

use refractbench::metrics::psnr;
use refractbench::refraction::{calibrate_amplitude, CalibrationRecord, ProfileSet, RefractionParams, SeverityLevel};
use refractbench::renderer::dataset::sequence_dir;
use refractbench::renderer::{read_sequence, render_sequence_to_dir, synthetic_background, RenderRequest};
use refractbench::wavefield::{profile_seed, ProfileGenerator, ProfileSpec, WaveSettings, WaveType};

fn main() -> refractbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let root = args
        .first()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("refractbench-render"));
    let resolution = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(128);
    let frames = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(30);

    let settings = WaveSettings::default();
    let wave = WaveType::Ocean;
    let level = SeverityLevel::Low;
    let spec = |i: u64| ProfileSpec {
        wave_type: wave,
        seed: profile_seed(0, wave, i),
        resolution,
        frame_interval: settings.frame_dt,
    };
    let set = ProfileSet::generate(&[spec(0), spec(1)], &settings, frames, 1)?;
    let base = RefractionParams::default();
    let cal = calibrate_amplitude(&set, level, &base, 0.02, 60)?;
    let record = CalibrationRecord {
        wave_type: wave,
        level,
        s: cal.s,
        alpha: cal.params.alpha,
        distance_scale: cal.params.distance_scale,
        target_std: level.target_std(),
        achieved_std: cal.achieved_std,
        speed_multiplier: 1.0,
        achieved_rate: 0.0,
        reference_rate: 0.0,
    };
    println!("severity knob {:.4} gives displacement std {:.5}", cal.s, cal.achieved_std);

    let bg = synthetic_background(3, resolution);
    let mut profile = ProfileGenerator::new(spec(0), &settings)?;
    let req = RenderRequest {
        frame_count: frames,
        calibration: record,
        refraction: base,
        profile_index: 0,
        keep_displacements: true,
        config: None,
    };
    let id = refractbench::renderer::Manifest::sequence_id_for(wave, level, &bg.id, spec(0).seed);
    let dir = sequence_dir(&root, &id);
    let manifest = render_sequence_to_dir(&bg, &mut profile, &req, &dir)?;
    println!("wrote {} files to {}", manifest.files.len(), dir.display());

    let seq = read_sequence(&dir)?;
    assert_eq!(seq.manifest.content_hash, manifest.content_hash);
    for (i, f) in seq.frames.iter().enumerate().step_by(10) {
        println!("frame {i:3}: psnr {:.2} dB", psnr(f, &seq.ground_truth)?);
    }
    Ok(())
}
