use refractbench::refraction::{CalibrationRecord, RefractionParams, SeverityLevel};
use refractbench::renderer::io::{frame_file, read_sequence, write_sequence};
use refractbench::renderer::{render_sequence, render_sequence_to_dir, synthetic_background, RenderRequest};
use refractbench::wavefield::{profile_seed, ProfileGenerator, ProfileSpec, WaveSettings, WaveType};
use refractbench::Error;

fn request(wave: WaveType, keep: bool) -> RenderRequest {
    let params = RefractionParams::default().with_severity(0.5);
    RenderRequest {
        frame_count: 5,
        calibration: CalibrationRecord {
            wave_type: wave,
            level: SeverityLevel::Mid,
            s: 0.5,
            alpha: params.alpha,
            distance_scale: params.distance_scale,
            target_std: SeverityLevel::Mid.target_std(),
            achieved_std: 0.0,
            speed_multiplier: 1.0,
            achieved_rate: 0.0,
            reference_rate: 0.0,
        },
        refraction: RefractionParams::default(),
        profile_index: 0,
        keep_displacements: keep,
        config: Some(serde_json::json!({"note": "test"})),
    }
}

fn generator(wave: WaveType, n: usize) -> ProfileGenerator {
    let settings = WaveSettings::default();
    let spec = ProfileSpec {
        wave_type: wave,
        seed: profile_seed(9, wave, 0),
        resolution: n,
        frame_interval: settings.frame_dt,
    };
    ProfileGenerator::new(spec, &settings).unwrap()
}

#[test]
fn round_trip_respects_sixteen_bit_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let bg = synthetic_background(1, 32);
    let seq = render_sequence(&bg, &mut generator(WaveType::Ripples, 32), &request(WaveType::Ripples, true)).unwrap();
    let manifest = write_sequence(&seq, dir.path()).unwrap();
    let back = read_sequence(dir.path()).unwrap();
    assert_eq!(back.manifest, manifest);
    let bound = 0.5 / 65535.0 + 1e-7;
    for (a, b) in seq.frames.iter().zip(&back.frames).chain([(&seq.ground_truth, &back.ground_truth)]) {
        let worst = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).fold(0.0f32, f32::max);
        assert!(f64::from(worst) <= bound, "{worst}");
    }
    // displacement fields are stored as f32 and come back bit-exactly
    assert_eq!(back.displacements.unwrap(), seq.displacements.unwrap());
}

#[test]
fn streamed_and_in_memory_rendering_write_the_same_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let bg = synthetic_background(2, 32);
    let req = request(WaveType::Sine, true);
    let seq = render_sequence(&bg, &mut generator(WaveType::Sine, 32), &req).unwrap();
    let m1 = write_sequence(&seq, a.path()).unwrap();
    let m2 = render_sequence_to_dir(&bg, &mut generator(WaveType::Sine, 32), &req, b.path()).unwrap();
    assert_eq!(m1, m2);
    for name in m1.files.keys() {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn tampered_frame_fails_the_digest_check() {
    let dir = tempfile::tempdir().unwrap();
    let bg = synthetic_background(3, 32);
    let seq = render_sequence(&bg, &mut generator(WaveType::Sine, 32), &request(WaveType::Sine, false)).unwrap();
    write_sequence(&seq, dir.path()).unwrap();
    let path = dir.path().join(frame_file(2, 5));
    let mut bytes = std::fs::read(&path).unwrap();
    let k = bytes.len() / 2;
    bytes[k] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(read_sequence(dir.path()), Err(Error::Integrity { .. })));
}

#[test]
fn mismatched_profile_and_background_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bg = synthetic_background(3, 32);
    let err = render_sequence_to_dir(&bg, &mut generator(WaveType::Sine, 16), &request(WaveType::Sine, false), dir.path());
    assert!(matches!(err, Err(Error::Shape(_))));
    let err = render_sequence(&bg, &mut generator(WaveType::Sine, 32), &request(WaveType::Ocean, false));
    assert!(matches!(err, Err(Error::Input(_))));
}
