//! Finitely presented Borel measures on the real line and the exact
//! operations on them.

mod borel;
mod function;
mod partition;

pub use borel::{
    hellinger_distance, is_abs_continuous, is_mutually_singular, lebesgue_decompose,
    radon_nikodym, tv_distance, BorelMeasure, NotAbsolutelyContinuous,
};
pub use function::{partition_of, PiecewiseFunction};
pub(crate) use partition::layer_from_pieces;
pub use partition::{common_refinement, Ext, Interval, IntervalSet, Partition, Partitioned, StepLayer};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("pieces overlap or point locations repeat")]
    Overlap,
    #[error("negative mass or density")]
    NegativeMass,
    #[error("empty interval")]
    EmptyInterval,
    #[error("density would be non-zero on an unbounded set")]
    Unbounded,
}
