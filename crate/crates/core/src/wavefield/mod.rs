//! Time-resolved water-surface generators for the four wave families.

pub mod normals;
pub mod ocean;
pub mod profile;
pub mod ripples;
pub mod shallow;
pub mod sine;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use normals::{height_gradient, normals_from_height};
pub use ocean::{ocean_height_at, ocean_spectral_init, phillips_spectrum, OceanParams, OceanSurface, SpectralField};
pub use profile::{profile_seed, ProfileGenerator, ProfileSpec, WaveSettings};
pub use ripples::{ripples_height, RippleParams};
pub use shallow::{shallow_step, Bump, ShallowSimulator, ShallowState};
pub use sine::{sine_height, SineParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveType {
    Ocean,
    ShallowWater,
    Sine,
    Ripples,
}

impl WaveType {
    pub const ALL: [WaveType; 4] = [
        WaveType::Ocean,
        WaveType::ShallowWater,
        WaveType::Sine,
        WaveType::Ripples,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveType::Ocean => "ocean",
            WaveType::ShallowWater => "shallow_water",
            WaveType::Sine => "sine",
            WaveType::Ripples => "ripples",
        }
    }

    /// Random-stream tag.
    pub fn tag(self) -> u64 {
        match self {
            WaveType::Ocean => 0x6f63_6561_6e00_0001,
            WaveType::ShallowWater => 0x7368_616c_6c00_0002,
            WaveType::Sine => 0x7369_6e65_0000_0003,
            WaveType::Ripples => 0x7269_7070_6c00_0004,
        }
    }
}

impl fmt::Display for WaveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WaveType::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown wave type {s:?}; expected ocean, shallow_water, sine or ripples")))
    }
}
