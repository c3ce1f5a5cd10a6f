//! Renders ocean sequences at every severity level over a few synthetic
//! backgrounds and scores the restoration baselines against the mean
//! quality of the distorted frames.
//!
//! Usage: `baseline_trends [resolution] [frames] [backgrounds]`

use std::time::Instant;

use refractbench::metrics::psnr;
use refractbench::refraction::{calibrate_amplitude, CalibrationRecord, ProfileSet, RefractionParams, SeverityLevel};
use refractbench::renderer::{render_sequence, synthetic_background, RenderRequest};
use refractbench::restore::{grid_register, restore_first_frame, restore_pixel_average, RegistrationConfig};
use refractbench::wavefield::{profile_seed, ProfileGenerator, ProfileSpec, WaveSettings, WaveType};

fn main() -> refractbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: usize| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(d);
    let (resolution, frames, backgrounds) = (arg(0, 128), arg(1, 50), arg(2, 2));
    let settings = WaveSettings::default();
    let wave = WaveType::Ocean;
    let specs: Vec<ProfileSpec> = (0..2)
        .map(|i| ProfileSpec {
            wave_type: wave,
            seed: profile_seed(0, wave, i),
            resolution,
            frame_interval: settings.frame_dt,
        })
        .collect();
    let set = ProfileSet::generate(&specs, &settings, frames, 1)?;
    let base = RefractionParams::default();
    for level in SeverityLevel::ALL {
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
        for b in 0..backgrounds {
            let bg = synthetic_background(b as u64, resolution);
            for (p, spec) in specs.iter().enumerate() {
                let mut gen = ProfileGenerator::new(*spec, &settings)?;
                let req = RenderRequest {
                    frame_count: frames,
                    calibration: record,
                    refraction: base,
                    profile_index: p as u64,
                    keep_displacements: false,
                    config: None,
                };
                let seq = render_sequence(&bg, &mut gen, &req)?;
                let gt = &seq.ground_truth;
                let mean_psnr = |list: &[refractbench::image::Image]| -> refractbench::Result<f64> {
                    Ok(list.iter().map(|f| psnr(f, gt)).sum::<refractbench::Result<f64>>()? / list.len() as f64)
                };
                let entire = mean_psnr(&seq.frames)?;
                let first = psnr(&restore_first_frame(&seq.frames)?, gt)?;
                let avg = psnr(&restore_pixel_average(&seq.frames)?, gt)?;
                // registration is the slow part; run it where the gap is measured
                let registered = if level == SeverityLevel::Low {
                    let t = Instant::now();
                    let reg = grid_register(&seq.frames, &RegistrationConfig::default())?;
                    format!("registered {:6.2} ({:.1}s)", mean_psnr(&reg.frames)?, t.elapsed().as_secs_f64())
                } else {
                    String::new()
                };
                println!(
                    "{level:8} {} profile {p}: entire {entire:6.2} first {first:6.2} average {avg:6.2} {registered}",
                    bg.id
                );
            }
        }
    }
    Ok(())
}
