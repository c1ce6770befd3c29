//! Finitely presented models: an orthogonal sum of eigen-slots `ℂ^n` with
//! `Q = λ`, and spaces `L²(μ_s)` with `Q` the multiplication by `x`.

mod calculus;
mod sum;
mod vector;

use std::fmt;
use std::sync::Arc;

use crate::measure::{BorelMeasure, MeasureError};
use crate::scalar::Scalar;

pub use calculus::{
    apply_borel, graph_distance, inner_product, norm_sq, operator_moment, spectral_measure,
    spectral_projection, GraphDistance,
};
pub use sum::{direct_sum, Embedding};
pub use vector::{SummandPart, StepVector, VectorBuilder};

/// Dimension of an eigenspace: finite and positive, or countably infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Multiplicity {
    Finite(u64),
    Omega,
}

impl Multiplicity {
    pub fn is_omega(self) -> bool {
        self == Multiplicity::Omega
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Multiplicity::Finite(n) => Some(n),
            Multiplicity::Omega => None,
        }
    }

    /// Sum of dimensions; ω absorbs.
    pub fn plus(self, other: Multiplicity) -> Multiplicity {
        match (self, other) {
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => Multiplicity::Finite(a + b),
            _ => Multiplicity::Omega,
        }
    }

    /// Whether `copy` indexes a basis vector of the eigenspace.
    pub fn admits(self, copy: u64) -> bool {
        match self {
            Multiplicity::Finite(n) => copy < n,
            Multiplicity::Omega => true,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(n) => write!(f, "{n}"),
            Multiplicity::Omega => write!(f, "ω"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenSlot<T> {
    pub eigenvalue: T,
    pub multiplicity: Multiplicity,
}

impl<T> EigenSlot<T> {
    pub fn new(eigenvalue: T, multiplicity: Multiplicity) -> Self {
        EigenSlot {
            eigenvalue,
            multiplicity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("vectors belong to different models")]
    ModelMismatch,
    #[error("eigen-slot multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("summand {0} has zero measure")]
    ZeroSummand(usize),
    #[error("no eigen-slot with index {0}")]
    UnknownSlot(usize),
    #[error("copy {copy} exceeds multiplicity of slot {slot}")]
    CopyOutOfRange { slot: usize, copy: u64 },
    #[error("no summand with index {0}")]
    UnknownSummand(usize),
    #[error("summand {summand} has no atom at the given location")]
    NotAnAtom { summand: usize },
    #[error("moment order {0} exceeds 4")]
    MomentOrder(u32),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// `H = (⊕ slots) ⊕ (⊕_s L²(μ_s))`. Slots are sorted by eigenvalue with
/// distinct eigenvalues; summands are non-zero and keep their order.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorModel<T> {
    slots: Vec<EigenSlot<T>>,
    summands: Vec<BorelMeasure<T>>,
}

impl<T: Scalar> OperatorModel<T> {
    /// Slots with equal eigenvalues are merged by adding multiplicities.
    pub fn new(
        mut slots: Vec<EigenSlot<T>>,
        summands: Vec<BorelMeasure<T>>,
    ) -> Result<Self, ModelError> {
        if slots.iter().any(|s| s.multiplicity == Multiplicity::Finite(0)) {
            return Err(ModelError::ZeroMultiplicity);
        }
        if let Some(i) = summands.iter().position(|m| m.is_zero()) {
            return Err(ModelError::ZeroSummand(i));
        }
        slots.sort_by(|a, b| a.eigenvalue.partial_cmp(&b.eigenvalue).expect("ordered"));
        let mut merged: Vec<EigenSlot<T>> = Vec::with_capacity(slots.len());
        for s in slots {
            match merged.last_mut() {
                Some(last) if last.eigenvalue == s.eigenvalue => {
                    last.multiplicity = last.multiplicity.plus(s.multiplicity)
                }
                _ => merged.push(s),
            }
        }
        Ok(OperatorModel {
            slots: merged,
            summands,
        })
    }

    pub fn slots(&self) -> &[EigenSlot<T>] {
        &self.slots
    }

    pub fn summands(&self) -> &[BorelMeasure<T>] {
        &self.summands
    }

    pub fn slot_index(&self, eigenvalue: &T) -> Option<usize> {
        self.slots
            .binary_search_by(|s| s.eigenvalue.partial_cmp(eigenvalue).expect("ordered"))
            .ok()
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// Same model, by identity or by value.
pub(crate) fn same_model<T: Scalar>(a: &Arc<OperatorModel<T>>, b: &Arc<OperatorModel<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}
