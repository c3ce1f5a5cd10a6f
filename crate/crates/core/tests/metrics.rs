mod common;

use refractbench::image::Image;
use refractbench::metrics::{evaluate_method, psnr, ssim, Prediction};
use refractbench::refraction::SeverityLevel;
use refractbench::wavefield::WaveType;

use common::{noisy, random_image, reference_psnr, reference_ssim};

#[test]
fn psnr_matches_direct_reference_on_random_pairs() {
    for seed in 0..10 {
        let (a, b) = (random_image(32, 32, seed), random_image(32, 32, seed + 100));
        let got = psnr(&a, &b).unwrap();
        assert!((got - reference_psnr(&a, &b)).abs() < 1e-9);
        assert_eq!(got, psnr(&b, &a).unwrap());
    }
}

#[test]
fn ssim_matches_windowed_reference_and_is_symmetric() {
    for seed in 0..3 {
        let a = random_image(64, 64, seed);
        let b = noisy(&a, 0.2, seed + 7);
        let got = ssim(&a, &b).unwrap();
        assert!((got - reference_ssim(&a, &b)).abs() < 1e-6);
        assert!((got - ssim(&b, &a).unwrap()).abs() < 1e-9);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn psnr_falls_along_a_noise_ladder() {
    let gt = Image::from_fn(48, 48, 3, |x, y, c| 0.3 + 0.4 * (((x + 2 * y + c) % 9) as f32 / 8.0));
    let ladder = [0.001, 0.003, 0.01, 0.03, 0.1, 0.2];
    let values: Vec<f64> = ladder.iter().map(|&s| psnr(&noisy(&gt, s, 5), &gt).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn frames_at_twenty_and_thirty_db_report_twenty_five() {
    let gt = Image::filled(16, 16, 3, 0.5);
    let at = |mse: f64| Image::filled(16, 16, 3, (0.5 + mse.sqrt()) as f32);
    let pred = Prediction::Frames(vec![at(1e-2), at(1e-3)]);
    let row = evaluate_method("m", "s", WaveType::Sine, SeverityLevel::Low, &pred, &gt).unwrap();
    assert!((row.psnr_db - 25.0).abs() < 1e-5, "{}", row.psnr_db);
    assert!(row.multi_frame);
    assert_eq!(row.n_frames_evaluated, 2);
}
