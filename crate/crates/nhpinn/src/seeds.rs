//! Stage seeds derived from the master seed.
//!
//! `stage_seed(master, stage) = splitmix64(master ^ (0x9E3779B97F4A7C15 · (stage.index() + 1)))`,
//! so every stage gets an independent, reproducible stream.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    CellX,
    CellY,
    CellDr,
    SlowField,
    Homogenized,
    Baseline,
    Transfer,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::CellX,
        Stage::CellY,
        Stage::CellDr,
        Stage::SlowField,
        Stage::Homogenized,
        Stage::Baseline,
        Stage::Transfer,
    ];

    pub fn index(self) -> u64 {
        self as u64
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::CellX => "cell_x",
            Stage::CellY => "cell_y",
            Stage::CellDr => "cell_dr",
            Stage::SlowField => "slow_field",
            Stage::Homogenized => "homogenized",
            Stage::Baseline => "baseline",
            Stage::Transfer => "transfer",
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stage_seed(master: u64, stage: Stage) -> u64 {
    splitmix64(master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stage.index() + 1))
}
