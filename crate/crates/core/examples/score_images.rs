//! Scores an image against a reference with PSNR and SSIM.
//!
//! Usage: `score_images <prediction.png> <reference.png>`; without arguments
//! it scores noisy copies of a procedural background.

use std::path::Path;

use refractbench::image::Image;
use refractbench::metrics::{psnr, ssim};
use refractbench::renderer::synthetic_background;
use refractbench::rng::CounterRng;

fn load(path: &str) -> refractbench::Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| refractbench::Error::Input(format!("{path}: {e}")))?;
    Image::decode_png(&bytes, Path::new(path))
}

fn main() -> refractbench::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [pred, gt] = args.as_slice() {
        let (pred, gt) = (load(pred)?, load(gt)?);
        println!("psnr {:.4} dB  ssim {:.6}", psnr(&pred, &gt)?, ssim(&pred, &gt)?);
        return Ok(());
    }
    let gt = synthetic_background(0, 128).image;
    let rng = CounterRng::new(1);
    for sigma in [0.0, 0.01, 0.03, 0.1] {
        let noisy = Image {
            data: gt
                .data
                .iter()
                .enumerate()
                .map(|(i, &v)| (v as f64 + sigma * rng.normal_pair_at(i as u64).0).clamp(0.0, 1.0) as f32)
                .collect(),
            ..gt.clone()
        };
        println!("noise {sigma:.2}: psnr {:8.3} dB  ssim {:.5}", psnr(&noisy, &gt)?, ssim(&noisy, &gt)?);
    }
    Ok(())
}
