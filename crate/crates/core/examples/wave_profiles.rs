//! Generates one profile of each wave family and prints how the surface
//! height and slope evolve over a few frames.
//!
//! Usage: `wave_profiles [resolution] [frames]`

use refractbench::wavefield::{profile_seed, ProfileGenerator, ProfileSpec, WaveSettings, WaveType};

fn main() -> refractbench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let resolution = args.first().copied().unwrap_or(64);
    let frames = args.get(1).copied().unwrap_or(5);
    let settings = WaveSettings::default();
    for wave in WaveType::ALL {
        let spec = ProfileSpec {
            wave_type: wave,
            seed: profile_seed(0, wave, 0),
            resolution,
            frame_interval: settings.frame_dt,
        };
        let mut gen = ProfileGenerator::new(spec, &settings)?;
        println!("{wave} (seed {:016x})", spec.seed);
        for f in 0..frames {
            let h = gen.height(f)?;
            let slopes = gen.slopes(f)?;
            let rms_slope = (slopes.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum::<f64>() / slopes.len() as f64).sqrt();
            let (lo, hi) = h.data.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            println!(
                "  t {:6.3} s  height std {:.3e}  range [{lo:+.3e}, {hi:+.3e}]  rms slope {rms_slope:.3e}",
                gen.time_of(f),
                h.std()
            );
        }
    }
    Ok(())
}
