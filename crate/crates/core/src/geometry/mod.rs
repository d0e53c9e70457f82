//! Convex-surface geometry: flatness ladders, graded normal forms, gauge
//! curves with flat points, slab heights, and level-set charts.

pub mod chart;
pub mod curve;
pub mod height;
pub mod ladder;
pub mod schulz;
pub mod surface;

pub use chart::LevelSetChart;
pub use curve::{cap_measure, theorem5_integrability, ConvexCurve, Theorem5Report};
pub use height::{implicit_height, lemma_scaling_report, HeightScalingReport};
pub use ladder::{flatness_ladder, FlatnessLadder, LadderLevel};
pub use schulz::{schulz_decompose, SchulzForm};
pub use surface::{ClosedForm, Psi, SurfaceSpec};
