//! Counting quasimorphisms on free groups, Stallings subgroup automata, and
//! a projection-complex toolkit, with an end-to-end pipeline that certifies
//! an infinite family of independent homogeneous quasimorphisms.

pub mod barrier;
pub mod countqm;
pub mod family;
pub mod pipeline;
pub mod projcx;
pub mod stallings;
pub mod word;

pub use barrier::{BarrierError, BarrierParams, G0Certificate};
pub use countqm::{QmError, QmSpec};
pub use family::{FamilyError, FamilyMember, FamilySchedule, PairConfig};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, RunOptions};
pub use projcx::{ProjConfig, ProjError, ProjFamily};
pub use stallings::{StallingsError, SubgroupAutomaton};
pub use word::{Axis, CyclicData, Footprint, Word, WordError};
