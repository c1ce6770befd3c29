//! Types over parameter sets, represented by the complete invariant
//! `(P_G v, μ_{v − P_G v})`, their distances and their realizations.

use std::sync::Arc;

use crate::measure::{
    hellinger_distance, is_abs_continuous, is_mutually_singular, lebesgue_decompose, tv_distance,
    BorelMeasure,
};
use crate::model::{
    direct_sum, norm_sq, spectral_measure, Embedding, ModelError, OperatorModel, StepVector,
};
use crate::scalar::{real, Scalar};
use crate::spectra::{spectrally_equivalent, EquivalenceViolation};
use crate::subspace::{cyclic_subspace, project, ParameterSet};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TypeError<T: Scalar> {
    #[error("types are over different parameter sets")]
    ContextMismatch,
    #[error("realizing the type would change the spectrum or essential spectrum")]
    ClassViolation { violations: Vec<EquivalenceViolation<T>> },
    #[error("base vector is not in the subspace generated by the context")]
    BaseOutsideContext,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `gatp(v/G)` as `(P_G v, μ_{P_G^⊥ v})`.
#[derive(Clone, Debug)]
pub struct TypeInvariant<T> {
    base: StepVector<T>,
    residual: BorelMeasure<T>,
    context: ParameterSet<T>,
}

impl<T: Scalar> PartialEq for TypeInvariant<T> {
    fn eq(&self, other: &Self) -> bool {
        self.context == other.context && self.base == other.base && self.residual == other.residual
    }
}

impl<T: Scalar> TypeInvariant<T> {
    /// Checks `base ∈ H_G`.
    pub fn new(
        base: StepVector<T>,
        residual: BorelMeasure<T>,
        context: ParameterSet<T>,
    ) -> Result<Self, TypeError<T>> {
        if !crate::subspace::in_subspace(&cyclic_subspace(&context), &base)? {
            return Err(TypeError::BaseOutsideContext);
        }
        Ok(TypeInvariant {
            base,
            residual,
            context,
        })
    }

    pub fn base(&self) -> &StepVector<T> {
        &self.base
    }

    pub fn residual_measure(&self) -> &BorelMeasure<T> {
        &self.residual
    }

    pub fn context(&self) -> &ParameterSet<T> {
        &self.context
    }

    pub fn model(&self) -> &Arc<OperatorModel<T>> {
        self.context.model()
    }

    /// The same type read in a larger model.
    pub fn transport(&self, e: &Embedding<T>) -> Result<Self, ModelError> {
        Ok(TypeInvariant {
            base: e.apply(&self.base)?,
            residual: self.residual.clone(),
            context: self.context.embed(e)?,
        })
    }
}

pub fn type_of<T: Scalar>(
    v: &StepVector<T>,
    g: &ParameterSet<T>,
) -> Result<TypeInvariant<T>, ModelError> {
    let h = cyclic_subspace(g);
    let base = project(&h, v)?;
    let residual = spectral_measure(&v.checked_sub(&base)?);
    Ok(TypeInvariant {
        base,
        residual,
        context: g.clone(),
    })
}

fn same_context<T: Scalar>(t1: &TypeInvariant<T>, t2: &TypeInvariant<T>) -> Result<(), TypeError<T>> {
    if t1.context == t2.context {
        Ok(())
    } else {
        Err(TypeError::ContextMismatch)
    }
}

pub fn types_equal<T: Scalar>(t1: &TypeInvariant<T>, t2: &TypeInvariant<T>) -> Result<bool, TypeError<T>> {
    same_context(t1, t2)?;
    Ok(t1.base == t2.base && t1.residual == t2.residual)
}

/// The three-case distance between types over `∅` given by their measures:
/// the orthogonal-sum value when singular, total variation when one is
/// absolutely continuous with respect to the other, and the Lebesgue split
/// of `ν` against `μ` otherwise.
pub fn measure_type_distance_paper<T: Scalar>(mu: &BorelMeasure<T>, nu: &BorelMeasure<T>) -> f64 {
    if is_mutually_singular(mu, nu) {
        let a = mu.total_mass().to_real();
        let b = nu.total_mass().to_real();
        return a.hypot(b);
    }
    if is_abs_continuous(mu, nu) || is_abs_continuous(nu, mu) {
        return tv_distance(mu, nu).to_real();
    }
    let (par, perp) = lebesgue_decompose(nu, mu);
    tv_distance(mu, &par).to_real().hypot(perp.total_mass().to_real())
}

fn base_gap<T: Scalar>(t1: &TypeInvariant<T>, t2: &TypeInvariant<T>) -> Result<f64, TypeError<T>> {
    Ok(norm_sq(&t1.base.checked_sub(&t2.base)?).to_real())
}

pub fn type_distance_paper<T: Scalar>(t1: &TypeInvariant<T>, t2: &TypeInvariant<T>) -> Result<f64, TypeError<T>> {
    same_context(t1, t2)?;
    let d = measure_type_distance_paper(&t1.residual, &t2.residual);
    Ok((base_gap(t1, t2)? + d * d).sqrt())
}

/// Infimum of `‖v − w‖` over joint realizations.
pub fn type_distance_realization<T: Scalar>(
    t1: &TypeInvariant<T>,
    t2: &TypeInvariant<T>,
) -> Result<f64, TypeError<T>> {
    same_context(t1, t2)?;
    let h = hellinger_distance(&t1.residual, &t2.residual);
    Ok((base_gap(t1, t2)? + h * h).sqrt())
}

/// A vector of type `t` in an extension of the context model.
#[derive(Clone, Debug)]
pub struct Realization<T> {
    pub model: Arc<OperatorModel<T>>,
    pub vector: StepVector<T>,
    /// Inclusion of the context model.
    pub embedding: Embedding<T>,
}

/// Rejects extensions that move `σ` or `σ_e`. Eigenspaces at the discrete
/// spectrum may grow.
pub(crate) fn check_class<T: Scalar>(
    model: &Arc<OperatorModel<T>>,
    extended: &OperatorModel<T>,
) -> Result<(), TypeError<T>> {
    let report = spectrally_equivalent(model, extended);
    let violations: Vec<_> = report
        .violations
        .into_iter()
        .filter(|v| !matches!(v, EquivalenceViolation::Multiplicity { .. }))
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(TypeError::ClassViolation { violations })
    }
}

/// Extended model, inclusion of the original, and the unit vectors of the
/// fresh summands.
pub(crate) type Extended<T> = (Arc<OperatorModel<T>>, Embedding<T>, Vec<StepVector<T>>);

/// Context model plus `copies` fresh summands `L²(μ)`.
pub(crate) fn extend_with<T: Scalar>(
    model: &Arc<OperatorModel<T>>,
    mu: &BorelMeasure<T>,
    copies: usize,
) -> Result<Extended<T>, TypeError<T>> {
    let fresh = OperatorModel::new(Vec::new(), vec![mu.clone(); copies])?.into_shared();
    let (target, emb) = direct_sum(&[model.clone(), fresh.clone()]);
    check_class(model, &target)?;
    let units = (0..copies)
        .map(|s| emb[1].apply(&StepVector::constant_on(&fresh, s, real(T::one()))?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((target, emb[0].clone(), units))
}

/// `base ⊕ 1` in the context model plus one fresh summand `L²(residual)`.
pub fn realize_type<T: Scalar>(t: &TypeInvariant<T>) -> Result<Realization<T>, TypeError<T>> {
    let model = t.model();
    if t.residual.is_zero() {
        return Ok(Realization {
            model: model.clone(),
            vector: t.base.clone(),
            embedding: Embedding::identity(model),
        });
    }
    let (target, embedding, units) = extend_with(model, &t.residual, 1)?;
    let vector = embedding.apply(&t.base)?.checked_add(&units[0])?;
    Ok(Realization {
        model: target,
        vector,
        embedding,
    })
}
