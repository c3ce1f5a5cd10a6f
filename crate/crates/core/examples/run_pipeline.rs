//! Runs calibrate, generate, restore, evaluate and report on a tiny
//! configuration and prints the benchmark tables.
//!
//! Usage: `run_pipeline [output_dir]`

use std::path::PathBuf;

use refractbench::config::{Method, RunConfig};
use refractbench::pipeline::Pipeline;

fn main() -> refractbench::Result<()> {
    let output = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("refractbench-pipeline"));
    let cfg = RunConfig::from_json(
        r#"{
            "resolution": 64,
            "frame_count": 8,
            "profile_count": 1,
            "synthetic_backgrounds": 2,
            "levels": ["low", "extreme"],
            "entire_video_row": true,
            "registration": {"iterations": 40}
        }"#,
    )?;
    let pipeline = Pipeline::new(RunConfig {
        output: Some(output),
        ..cfg
    })?;
    pipeline.calibrate()?;
    let (index, _) = pipeline.generate()?;
    println!("{} sequences under {}", index.sequences.len(), pipeline.dataset_root().display());
    pipeline.restore(&Method::ALL)?;
    pipeline.evaluate()?;
    print!("{}", pipeline.report()?.to_text());
    Ok(())
}
