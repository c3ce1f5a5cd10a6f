//! Registers two frames where the second is the first shifted 4 px right and
//! prints the recovered relative offsets on interior control points.

use std::time::Instant;

use refractbench::image::Image;
use refractbench::renderer::{sample_bilinear, synthetic_background};
use refractbench::restore::{grid_register, RegistrationConfig};

fn main() -> refractbench::Result<()> {
    let size = 256;
    let shift = 4.0;
    let bg = synthetic_background(7, size);
    let first = bg.image.clone();
    let second = Image::from_fn(size, size, 3, |x, y, c| {
        sample_bilinear(&first, x as f64 - shift, y as f64, c) as f32
    });
    let cfg = RegistrationConfig::default();
    let start = Instant::now();
    let reg = grid_register(&[first, second], &cfg)?;
    let (g0, g1) = (&reg.grids[0], &reg.grids[1]);
    let mut worst: f64 = 0.0;
    let mut sum = [0.0, 0.0];
    let mut n = 0.0;
    for b in 1..g0.rows - 1 {
        for a in 1..g0.cols - 1 {
            let d = [g1.at(a, b)[0] - g0.at(a, b)[0], g1.at(a, b)[1] - g0.at(a, b)[1]];
            worst = worst.max((d[0] - shift).abs()).max(d[1].abs());
            sum = [sum[0] + d[0], sum[1] + d[1]];
            n += 1.0;
        }
    }
    println!("mean relative offset ({:.3}, {:.3}) px", sum[0] / n, sum[1] / n);
    println!("worst interior error {worst:.3} px");
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    for c in &reg.trace {
        let mark = if c.accepted { "" } else { "  (rejected)" };
        println!("  iter {:4} sigma {:.1} loss {:.6}{mark}", c.iteration, c.sigma, c.loss);
    }
    Ok(())
}
