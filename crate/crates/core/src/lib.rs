//! Ballistic deposition with heavy-tailed block heights and a sticking
//! parameter `p`.
//!
//! The crate simulates the interface forward in time, evaluates the height
//! above the origin exactly through its backward last-passage representation,
//! samples the continuous last-passage limit, and runs the Monte Carlo
//! experiments that probe the scaling limits and the vanishing-stickiness
//! phase transition.

pub mod bbd;
pub mod cone;
pub mod continuous;
pub mod error;
pub mod experiments;
pub mod field;
pub mod forward;
pub mod heavy_tail;
pub mod output;
pub mod stats;

pub use cone::{attainable, build_cone, height_at_origin, lpp_height, max_collect_count, AttainableSet, Cone, ConeSample, LppPoint};
pub use continuous::{compatible, h_k, remainder_estimate, rotate, sample_points, ChainResult, WeightedPoint};
pub use error::{Error, Result};
pub use field::{site_stream, DepositionEvent, EventField, FieldSeed, SiteStream};
pub use forward::{window_is_exact, BlockLog, Geometry, Interface};
pub use heavy_tail::{weight_sequence, HeightDistribution, WeightSequence};
