//! Traces the vertical ray from the background up through tilted water
//! surfaces and prints the transmitted direction and background offset.
//! Past the critical tilt the ray is totally internally reflected.

use refractbench::refraction::{ray_offset, refract, RefractionParams};

fn main() {
    let p = RefractionParams::default();
    let critical = (p.n2 / p.n1).asin().to_degrees();
    println!("water {} -> air {}, critical angle {critical:.2} deg", p.n1, p.n2);
    for deg in [0.0f64, 5.0, 15.0, 30.0, 45.0, 48.0, 49.0, 60.0] {
        let t = deg.to_radians();
        let normal = [t.sin(), 0.0, t.cos()];
        let r = refract([0.0, 0.0, 1.0], normal, p.n1, p.n2);
        let (offset, _) = ray_offset(normal, &p);
        let tir = if r.tir { "  total internal reflection" } else { "" };
        println!(
            "tilt {deg:4.1} deg: direction ({:+.4}, {:+.4}, {:+.4})  offset ({:+.4}, {:+.4}){tir}",
            r.direction[0], r.direction[1], r.direction[2], offset[0], offset[1]
        );
    }
}
