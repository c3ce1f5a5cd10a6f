//! Non-learned restoration baselines.

mod register;

pub use register::{
    grid_register, Checkpoint, DeformationGrid, PhotometricLoss, Registration, RegistrationConfig,
    RegistrationProblem, warp_with_grid,
};

use crate::error::{Error, Result};
use crate::image::Image;

fn check_frames(frames: &[Image]) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Input("sequence has no frames".into()))?;
    frames.iter().try_for_each(|f| first.check_same_shape(f))
}

/// Returns frame 0 unchanged.
pub fn restore_first_frame(frames: &[Image]) -> Result<Image> {
    check_frames(frames)?;
    Ok(frames[0].clone())
}

/// Per-pixel arithmetic mean over all frames.
pub fn restore_pixel_average(frames: &[Image]) -> Result<Image> {
    check_frames(frames)?;
    let mut avg = FrameAverager::default();
    frames.iter().try_for_each(|f| avg.push(f))?;
    avg.finish()
}

/// Running per-pixel mean, for sequences streamed one frame at a time.
#[derive(Debug, Clone, Default)]
pub struct FrameAverager {
    first: Option<Image>,
    acc: Vec<f64>,
    count: usize,
}

impl FrameAverager {
    pub fn push(&mut self, frame: &Image) -> Result<()> {
        match &self.first {
            Some(first) => first.check_same_shape(frame)?,
            None => {
                self.first = Some(frame.clone());
                self.acc = vec![0.0; frame.data.len()];
            }
        }
        self.acc.iter_mut().zip(&frame.data).for_each(|(a, &v)| *a += v as f64);
        self.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<Image> {
        let first = self.first.ok_or_else(|| Error::Input("sequence has no frames".into()))?;
        let n = self.count as f64;
        Ok(Image {
            data: self.acc.into_iter().map(|a| (a / n) as f32).collect(),
            ..first
        })
    }
}
