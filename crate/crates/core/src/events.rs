//! Diagnostic events surfaced on the run event stream.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Diagnostic {
    /// A block did not fit inside the grid and was shifted to fit.
    BlockClamped { index: usize, from: [f64; 2], to: [f64; 2] },
    /// The flow state went non-finite and was reset to inflow equilibrium.
    FlowReset { step: u64 },
    /// No fluid cell was available to seed tracers into.
    NoFluidCells,
    /// Nonameland placement failed; the centered unrotated fallback was used.
    NonamelandFallback { seed: u64, attempts: u32 },
    /// A storm reached the X target.
    StormHit { step: u64, storm: u32, pos: [f64; 2] },
    /// A storm crossed the east edge.
    StormExit { step: u64, storm: u32, lat: f64 },
}
