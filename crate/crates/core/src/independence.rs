//! Spectral independence `v ⫫*_F G`, its ε-relaxation, non-forking
//! extensions, canonical bases, splitting witnesses, orthogonality and
//! domination of types.

use std::sync::Arc;

use crate::galois::{extend_with, realize_type, type_of, TypeError, TypeInvariant};
use crate::measure::{
    is_abs_continuous, lebesgue_decompose, BorelMeasure, IntervalSet, PiecewiseFunction,
};
use crate::model::{
    apply_borel, norm_sq, same_model, spectral_measure, Embedding, ModelError, OperatorModel,
    StepVector,
};
use crate::scalar::Scalar;
use crate::spectra::compute_spectrum;
use crate::subspace::{acl, cyclic_subspace, discrete_basis, project, ParameterSet};

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceVerdict<T> {
    pub independent: bool,
    /// `‖P_{acl(F∪G)} v − P_{acl(F)} v‖²`.
    pub defect: T,
}

/// `‖P_{acl(F∪G)} v − P_{acl(F)} v‖²`.
pub fn independence_defect<T: Scalar>(
    v: &StepVector<T>,
    f: &ParameterSet<T>,
    g: &ParameterSet<T>,
) -> Result<T, ModelError> {
    let small = project(&acl(f), v)?;
    let large = project(&acl(&f.union(g)?), v)?;
    Ok(norm_sq(&large.checked_sub(&small)?))
}

pub fn is_independent<T: Scalar>(
    v: &StepVector<T>,
    f: &ParameterSet<T>,
    g: &ParameterSet<T>,
) -> Result<IndependenceVerdict<T>, ModelError> {
    let defect = independence_defect(v, f, g)?;
    Ok(IndependenceVerdict {
        independent: defect.is_zero(),
        defect,
    })
}

/// `‖P_{acl(F∪G)} v − P_{acl(F)} v‖ ≤ ε`, decided on squares.
pub fn is_eps_independent<T: Scalar>(
    v: &StepVector<T>,
    f: &ParameterSet<T>,
    g: &ParameterSet<T>,
    eps: &T,
) -> Result<bool, ModelError> {
    assert!(!eps.is_negative(), "ε must be non-negative");
    Ok(independence_defect(v, f, g)? <= eps.clone() * eps.clone())
}

/// A finite `G₀ ⊆ G` with `v ⫫^ε_{G₀} G`.
#[derive(Clone, Debug)]
pub struct LocalCharacter<T> {
    /// Positions in `G`, in the order they were chosen.
    pub indices: Vec<usize>,
    pub subset: ParameterSet<T>,
    pub defect: T,
}

/// Greedy: repeatedly adds the generator that lowers the defect most
/// (lowest index on ties) until it is at most `ε²`.
pub fn local_character_witness<T: Scalar>(
    v: &StepVector<T>,
    g: &ParameterSet<T>,
    eps: &T,
) -> Result<LocalCharacter<T>, ModelError> {
    assert!(eps.is_positive(), "ε must be positive");
    let target = project(&acl(g), v)?;
    let bound = eps.clone() * eps.clone();
    let gap = |idx: &[usize]| -> Result<T, ModelError> {
        let p = project(&acl(&g.subset(idx)), v)?;
        Ok(norm_sq(&target.checked_sub(&p)?))
    };
    let mut chosen: Vec<usize> = Vec::new();
    let mut defect = gap(&chosen)?;
    while defect > bound {
        let mut best: Option<(usize, T)> = None;
        for i in 0..g.len() {
            if chosen.contains(&i) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(i);
            let d = gap(&trial)?;
            if best.as_ref().is_none_or(|(_, b)| d < *b) {
                best = Some((i, d));
            }
        }
        let (i, d) = best.expect("the full set has zero defect");
        chosen.push(i);
        defect = d;
    }
    Ok(LocalCharacter {
        subset: g.subset(&chosen),
        indices: chosen,
        defect,
    })
}

/// A type together with the vector and model realizing it.
#[derive(Clone, Debug)]
pub struct Extension<T> {
    pub ty: TypeInvariant<T>,
    pub model: Arc<OperatorModel<T>>,
    pub vector: StepVector<T>,
    /// Inclusions from the original model, applied in order.
    pub embeddings: Vec<Embedding<T>>,
}

impl<T: Scalar> Extension<T> {
    pub fn transport_vector(&self, v: &StepVector<T>) -> Result<StepVector<T>, ModelError> {
        self.embeddings.iter().try_fold(v.clone(), |acc, e| e.apply(&acc))
    }

    pub fn transport_set(&self, s: &ParameterSet<T>) -> Result<ParameterSet<T>, ModelError> {
        self.embeddings.iter().try_fold(s.clone(), |acc, e| acc.embed(e))
    }
}

fn contains_all<T: Scalar>(big: &ParameterSet<T>, small: &ParameterSet<T>) -> bool {
    same_model(big.model(), small.model())
        && small
            .generators()
            .iter()
            .all(|x| big.generators().iter().any(|y| y == x))
}

/// The non-forking extension over `G ⊇ F` of a type over `F`: realized by
/// `P_{acl(F)} v` plus a fresh vector carrying the measure of the rest.
pub fn nonforking_extension<T: Scalar>(
    t: &TypeInvariant<T>,
    g: &ParameterSet<T>,
) -> Result<Extension<T>, TypeError<T>> {
    if !contains_all(g, t.context()) {
        return Err(TypeError::ContextMismatch);
    }
    let r = realize_type(t)?;
    let f1 = t.context().embed(&r.embedding)?;
    let kept = project(&acl(&f1), &r.vector)?;
    let rest = r.vector.checked_sub(&kept)?;
    let nu = spectral_measure(&rest);
    let mut embeddings = vec![r.embedding];
    let (model, vector) = if nu.is_zero() {
        (r.model, kept)
    } else {
        let (target, e, units) = extend_with(&r.model, &nu, 1)?;
        let w = e.apply(&kept)?.checked_add(&units[0])?;
        embeddings.push(e);
        (target, w)
    };
    let ext = Extension {
        ty: type_of(&vector, &ParameterSet::empty(&model))?,
        model,
        vector,
        embeddings,
    };
    let g2 = ext.transport_set(g)?;
    Ok(Extension {
        ty: type_of(&ext.vector, &g2)?,
        ..ext
    })
}

/// `(P_G v_1, …, P_G v_n)`.
pub fn canonical_base<T: Scalar>(
    vs: &[StepVector<T>],
    g: &ParameterSet<T>,
) -> Result<Vec<StepVector<T>>, ModelError> {
    let h = cyclic_subspace(g);
    vs.iter().map(|v| project(&h, v)).collect()
}

/// `k` realizations of a type on fresh, mutually orthogonal summands.
#[derive(Clone, Debug)]
pub struct MorleySequence<T> {
    pub model: Arc<OperatorModel<T>>,
    pub embedding: Embedding<T>,
    pub vectors: Vec<StepVector<T>>,
}

impl<T: Scalar> MorleySequence<T> {
    /// `(v_1 + … + v_k) / k`.
    pub fn average(&self, k: usize) -> StepVector<T> {
        assert!(k >= 1 && k <= self.vectors.len());
        let sum = self.vectors[1..k]
            .iter()
            .fold(self.vectors[0].clone(), |acc, v| acc.checked_add(v).expect("same model"));
        sum.scale_real(&(T::one() / T::from_int(k as i64)))
    }
}

pub fn morley_sequence<T: Scalar>(
    t: &TypeInvariant<T>,
    k: usize,
) -> Result<MorleySequence<T>, TypeError<T>> {
    assert!(k >= 1);
    let model = t.model();
    if t.residual_measure().is_zero() {
        return Ok(MorleySequence {
            model: model.clone(),
            embedding: Embedding::identity(model),
            vectors: vec![t.base().clone(); k],
        });
    }
    let (target, e, units) = extend_with(model, t.residual_measure(), k)?;
    let base = e.apply(t.base())?;
    let vectors = units
        .iter()
        .map(|u| base.checked_add(u))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MorleySequence {
        model: target,
        embedding: e,
        vectors,
    })
}

#[derive(Clone, Debug)]
pub struct SplittingWitness<T> {
    pub model: Arc<OperatorModel<T>>,
    pub w1: StepVector<T>,
    pub w2: StepVector<T>,
    /// `w2` lives on a fresh summand added to the model.
    pub fresh_copy: bool,
    /// Embedding of the input model into `model`.
    pub embedding: Embedding<T>,
}

#[derive(Clone, Debug)]
pub enum SplittingOutcome<T> {
    Found(SplittingWitness<T>),
    /// `v ⫫*_F G`, so no witness exists.
    NotSplitting,
    /// Dependent, but no candidate pair separates.
    Inconclusive,
}

impl<T> SplittingOutcome<T> {
    pub fn witness(&self) -> Option<&SplittingWitness<T>> {
        match self {
            SplittingOutcome::Found(w) => Some(w),
            _ => None,
        }
    }
}

const DICTIONARY_LIMIT: usize = 32;

/// Generators, their restrictions to each spectral cell they are constant
/// on, and pairwise differences, without zeros or repeats.
fn splitting_candidates<T: Scalar>(g: &ParameterSet<T>) -> Vec<StepVector<T>> {
    let mut out: Vec<StepVector<T>> = Vec::new();
    let push = |w: StepVector<T>, out: &mut Vec<StepVector<T>>| {
        if !w.is_zero() && !out.contains(&w) {
            out.push(w);
        }
    };
    let gens = g.generators();
    for w in gens {
        push(w.clone(), &mut out);
    }
    for w in gens {
        let mut sets: Vec<IntervalSet<T>> = Vec::new();
        for p in w.parts() {
            for (iv, _) in p.density().pieces() {
                sets.push(IntervalSet::interval(iv.clone()));
            }
            for (x, _) in p.atoms() {
                sets.push(IntervalSet::point(x.clone()));
            }
        }
        for &(s, _) in w.slot_coords().keys() {
            sets.push(IntervalSet::point(w.model().slots()[s].eigenvalue.clone()));
        }
        for set in sets.into_iter().take(DICTIONARY_LIMIT) {
            push(apply_borel(&PiecewiseFunction::indicator(&set), w), &mut out);
        }
    }
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            push(gens[i].checked_sub(&gens[j]).expect("same model"), &mut out);
        }
    }
    out
}

type Invariant<T> = (StepVector<T>, BorelMeasure<T>);

fn invariant<T: Scalar>(
    h: &crate::subspace::SubspaceHandle<T>,
    w: &StepVector<T>,
) -> Result<Invariant<T>, ModelError> {
    let p = project(h, w)?;
    let mu = spectral_measure(&w.checked_sub(&p)?);
    Ok((p, mu))
}

/// Searches for `w1, w2` with equal types over `acl(F)` and different types
/// over `acl(F) ∪ {v}`.
pub fn find_splitting_witness<T: Scalar>(
    v: &StepVector<T>,
    f: &ParameterSet<T>,
    g: &ParameterSet<T>,
) -> Result<SplittingOutcome<T>, TypeError<T>> {
    let model = f.model();
    let closed = ParameterSet::new(model, {
        let mut gens = f.generators().to_vec();
        gens.extend(discrete_basis(model));
        gens
    })?;
    let with_v = closed.with(v)?;
    let h = cyclic_subspace(&closed);
    let hv = cyclic_subspace(&with_v);
    let candidates = splitting_candidates(g);
    let over_f = candidates
        .iter()
        .map(|w| invariant(&h, w))
        .collect::<Result<Vec<_>, _>>()?;
    let over_fv = candidates
        .iter()
        .map(|w| invariant(&hv, w))
        .collect::<Result<Vec<_>, _>>()?;
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if over_f[i] == over_f[j] && over_fv[i] != over_fv[j] {
                return Ok(SplittingOutcome::Found(SplittingWitness {
                    model: model.clone(),
                    w1: candidates[i].clone(),
                    w2: candidates[j].clone(),
                    fresh_copy: false,
                    embedding: Embedding::identity(model),
                }));
            }
        }
    }
    for (w, (p, nu)) in candidates.iter().zip(&over_f) {
        if nu.is_zero() {
            continue;
        }
        let (target, e, units) = extend_with(model, nu, 1)?;
        let copy = e.apply(p)?.checked_add(&units[0])?;
        let w1 = e.apply(w)?;
        let hv2 = cyclic_subspace(&with_v.embed(&e)?);
        if invariant(&hv2, &w1)? != invariant(&hv2, &copy)? {
            return Ok(SplittingOutcome::Found(SplittingWitness {
                model: target,
                w1,
                w2: copy,
                fresh_copy: true,
                embedding: e,
            }));
        }
    }
    if is_independent(v, f, g)?.independent {
        Ok(SplittingOutcome::NotSplitting)
    } else {
        Ok(SplittingOutcome::Inconclusive)
    }
}

/// Residual measure with the atoms at the discrete spectrum removed.
pub fn essential_residual<T: Scalar>(t: &TypeInvariant<T>) -> BorelMeasure<T> {
    let discrete = compute_spectrum(t.model()).discrete_points();
    t.residual_measure().without_atoms_at(&discrete)
}

fn same_context<T: Scalar>(t1: &TypeInvariant<T>, t2: &TypeInvariant<T>) -> Result<(), TypeError<T>> {
    if t1.context() == t2.context() {
        Ok(())
    } else {
        Err(TypeError::ContextMismatch)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityReport<T> {
    pub orthogonal: bool,
    /// Part of the first essential residual not singular to the second.
    pub overlap: BorelMeasure<T>,
}

pub fn is_orthogonal<T: Scalar>(
    t1: &TypeInvariant<T>,
    t2: &TypeInvariant<T>,
) -> Result<OrthogonalityReport<T>, TypeError<T>> {
    same_context(t1, t2)?;
    let (overlap, _) = lebesgue_decompose(&essential_residual(t1), &essential_residual(t2));
    Ok(OrthogonalityReport {
        orthogonal: overlap.is_zero(),
        overlap,
    })
}

/// `t1 ▷ t2`: the essential residual of `t2` is absolutely continuous with
/// respect to that of `t1`.
pub fn dominates<T: Scalar>(t1: &TypeInvariant<T>, t2: &TypeInvariant<T>) -> Result<bool, TypeError<T>> {
    same_context(t1, t2)?;
    Ok(is_abs_continuous(&essential_residual(t2), &essential_residual(t1)))
}
