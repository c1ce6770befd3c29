use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use super::{same_model, ModelError, OperatorModel};
use crate::measure::{layer_from_pieces, Interval, StepLayer};
use crate::scalar::{real, Cx, Scalar};

/// The component of a vector in one `L²(μ_s)`: a step function on the
/// density support plus values at the atoms of `μ_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummandPart<T> {
    pub(crate) density: StepLayer<T, Cx<T>>,
    pub(crate) atoms: Vec<(T, Cx<T>)>,
}

impl<T: Scalar> SummandPart<T> {
    pub(crate) fn zero() -> Self {
        SummandPart {
            density: StepLayer::constant(Cx::zero()),
            atoms: Vec::new(),
        }
    }

    pub fn density(&self) -> &StepLayer<T, Cx<T>> {
        &self.density
    }

    /// Values at atoms; only non-zero values are stored.
    pub fn atoms(&self) -> &[(T, Cx<T>)] {
        &self.atoms
    }

    pub fn atom_value(&self, x: &T) -> Cx<T> {
        self.atoms
            .binary_search_by(|(p, _)| p.partial_cmp(x).expect("ordered"))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| Cx::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.pieces().is_empty()
    }
}

/// A vector of an [`OperatorModel`].
///
/// Canonical: zero coordinates are never stored and density values vanish
/// off the density support of their summand, so two vectors are equal in
/// `H` exactly when they are structurally equal.
#[derive(Clone, Debug)]
pub struct StepVector<T> {
    pub(crate) model: Arc<OperatorModel<T>>,
    pub(crate) slots: BTreeMap<(usize, u64), Cx<T>>,
    pub(crate) parts: Vec<SummandPart<T>>,
}

impl<T: Scalar> PartialEq for StepVector<T> {
    fn eq(&self, other: &Self) -> bool {
        same_model(&self.model, &other.model)
            && self.slots == other.slots
            && self.parts == other.parts
    }
}

impl<T: Scalar> StepVector<T> {
    pub fn zero(model: &Arc<OperatorModel<T>>) -> Self {
        StepVector {
            model: model.clone(),
            slots: BTreeMap::new(),
            parts: vec![SummandPart::zero(); model.summands().len()],
        }
    }

    pub fn builder(model: &Arc<OperatorModel<T>>) -> VectorBuilder<T> {
        VectorBuilder {
            model: model.clone(),
            slots: Vec::new(),
            pieces: vec![Vec::new(); model.summands().len()],
            atoms: vec![Vec::new(); model.summands().len()],
        }
    }

    /// Basis vector `e_copy` of eigen-slot `slot`.
    pub fn unit_slot(
        model: &Arc<OperatorModel<T>>,
        slot: usize,
        copy: u64,
    ) -> Result<Self, ModelError> {
        Self::builder(model).slot(slot, copy, real(T::one())).build()
    }

    /// The constant function `value` on summand `s`.
    pub fn constant_on(
        model: &Arc<OperatorModel<T>>,
        s: usize,
        value: Cx<T>,
    ) -> Result<Self, ModelError> {
        let mu = model.summands().get(s).ok_or(ModelError::UnknownSummand(s))?;
        let mut b = Self::builder(model);
        for (a, c, _) in mu.pieces() {
            b = b.density(s, a, c, value.clone());
        }
        for (x, _) in mu.atoms() {
            b = b.atom(s, x.clone(), value.clone());
        }
        b.build()
    }

    /// Canonicalises raw parts; callers guarantee indices are valid.
    pub(crate) fn from_raw(
        model: Arc<OperatorModel<T>>,
        mut slots: BTreeMap<(usize, u64), Cx<T>>,
        parts: Vec<SummandPart<T>>,
    ) -> Self {
        slots.retain(|_, z| !z.is_zero());
        let parts = parts
            .into_iter()
            .zip(model.summands())
            .map(|(mut p, mu)| {
                p.density = p.density.zip(mu.density(), |v, h| {
                    if h.is_zero() {
                        Cx::zero()
                    } else {
                        v.clone()
                    }
                });
                p.atoms.retain(|(x, z)| !z.is_zero() && mu.has_atom_at(x));
                p
            })
            .collect();
        StepVector {
            model,
            slots,
            parts,
        }
    }

    pub fn model(&self) -> &Arc<OperatorModel<T>> {
        &self.model
    }

    /// Non-zero eigen-slot coordinates keyed by `(slot, copy)`.
    pub fn slot_coords(&self) -> &BTreeMap<(usize, u64), Cx<T>> {
        &self.slots
    }

    pub fn parts(&self) -> &[SummandPart<T>] {
        &self.parts
    }

    pub fn slot_coord(&self, slot: usize, copy: u64) -> Cx<T> {
        self.slots
            .get(&(slot, copy))
            .cloned()
            .unwrap_or_else(Cx::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.slots.is_empty() && self.parts.iter().all(SummandPart::is_zero)
    }

    fn check(&self, other: &Self) -> Result<(), ModelError> {
        if same_model(&self.model, &other.model) {
            Ok(())
        } else {
            Err(ModelError::ModelMismatch)
        }
    }

    /// Pointwise combination `f(self, other)` on every coordinate, with
    /// `f(0, 0) = 0`.
    pub(crate) fn combine(&self, other: &Self, f: impl Fn(&Cx<T>, &Cx<T>) -> Cx<T>) -> Self {
        let zero = Cx::zero();
        let mut slots = BTreeMap::new();
        for k in self.slots.keys().chain(other.slots.keys()) {
            let a = self.slots.get(k).unwrap_or(&zero);
            let b = other.slots.get(k).unwrap_or(&zero);
            slots.insert(*k, f(a, b));
        }
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .map(|(p, r)| {
                let mut locs: Vec<T> = p.atoms.iter().map(|(x, _)| x.clone()).collect();
                locs.extend(r.atoms.iter().map(|(x, _)| x.clone()));
                crate::scalar::sort_dedup(&mut locs);
                SummandPart {
                    density: p.density.zip(&r.density, &f),
                    atoms: locs
                        .into_iter()
                        .map(|x| {
                            let z = f(&p.atom_value(&x), &r.atom_value(&x));
                            (x, z)
                        })
                        .collect(),
                }
            })
            .collect();
        Self::from_raw(self.model.clone(), slots, parts)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ModelError> {
        self.check(other)?;
        Ok(self.combine(other, |a, b| a.clone() + b.clone()))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ModelError> {
        self.check(other)?;
        Ok(self.combine(other, |a, b| a.clone() - b.clone()))
    }

    pub fn scale(&self, c: &Cx<T>) -> Self {
        self.map_values(|z| z.clone() * c.clone())
    }

    pub fn scale_real(&self, c: &T) -> Self {
        self.scale(&real(c.clone()))
    }

    pub fn neg(&self) -> Self {
        self.map_values(|z| -z.clone())
    }

    pub(crate) fn map_values(&self, f: impl Fn(&Cx<T>) -> Cx<T>) -> Self {
        let slots = self.slots.iter().map(|(k, z)| (*k, f(z))).collect();
        let parts = self
            .parts
            .iter()
            .map(|p| SummandPart {
                density: p.density.map(&f),
                atoms: p.atoms.iter().map(|(x, z)| (x.clone(), f(z))).collect(),
            })
            .collect();
        Self::from_raw(self.model.clone(), slots, parts)
    }

    /// Keeps the slot coordinates and atom values selected by the predicates;
    /// densities are kept iff `keep_density`.
    pub(crate) fn filter(
        &self,
        keep_slot: impl Fn(usize) -> bool,
        keep_atom: impl Fn(&T) -> bool,
        keep_density: bool,
    ) -> Self {
        let slots = self
            .slots
            .iter()
            .filter(|((s, _), _)| keep_slot(*s))
            .map(|(k, z)| (*k, z.clone()))
            .collect();
        let parts = self
            .parts
            .iter()
            .map(|p| SummandPart {
                density: if keep_density {
                    p.density.clone()
                } else {
                    StepLayer::constant(Cx::zero())
                },
                atoms: p.atoms.iter().filter(|(x, _)| keep_atom(x)).cloned().collect(),
            })
            .collect();
        Self::from_raw(self.model.clone(), slots, parts)
    }
}

/// Accumulates coordinates; repeated entries add up.
#[derive(Clone, Debug)]
pub struct VectorBuilder<T> {
    model: Arc<OperatorModel<T>>,
    slots: Vec<(usize, u64, Cx<T>)>,
    pieces: Vec<Vec<(T, T, Cx<T>)>>,
    atoms: Vec<Vec<(T, Cx<T>)>>,
}

impl<T: Scalar> VectorBuilder<T> {
    pub fn slot(mut self, slot: usize, copy: u64, value: Cx<T>) -> Self {
        self.slots.push((slot, copy, value));
        self
    }

    /// `value` on `[a, b)` of summand `s`; ignored off the density support.
    pub fn density(mut self, s: usize, a: T, b: T, value: Cx<T>) -> Self {
        if s >= self.pieces.len() {
            self.pieces.resize(s + 1, Vec::new());
        }
        self.pieces[s].push((a, b, value));
        self
    }

    pub fn atom(mut self, s: usize, x: T, value: Cx<T>) -> Self {
        if s >= self.atoms.len() {
            self.atoms.resize(s + 1, Vec::new());
        }
        self.atoms[s].push((x, value));
        self
    }

    pub fn build(self) -> Result<StepVector<T>, ModelError> {
        let model = self.model;
        let mut slots: BTreeMap<(usize, u64), Cx<T>> = BTreeMap::new();
        for (slot, copy, z) in self.slots {
            let s = model.slots().get(slot).ok_or(ModelError::UnknownSlot(slot))?;
            if !s.multiplicity.admits(copy) {
                return Err(ModelError::CopyOutOfRange { slot, copy });
            }
            let e = slots.entry((slot, copy)).or_insert_with(Cx::zero);
            *e = e.clone() + z;
        }
        let n = model.summands().len();
        if self.pieces.len() > n || self.atoms.len() > n {
            return Err(ModelError::UnknownSummand(n));
        }
        let mut parts = Vec::with_capacity(n);
        for (s, mu) in model.summands().iter().enumerate() {
            let pieces = &self.pieces[s];
            if pieces.iter().any(|(a, b, _)| a >= b) {
                return Err(crate::measure::MeasureError::EmptyInterval.into());
            }
            let density = layer_from_pieces(pieces, Cx::zero(), |x, y| x.clone() + y.clone());
            debug_assert!(density.pieces().iter().all(|(iv, _)| Interval::is_bounded(iv)));
            let mut atoms: Vec<(T, Cx<T>)> = Vec::new();
            let mut raw = self.atoms[s].clone();
            raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered"));
            for (x, z) in raw {
                if !mu.has_atom_at(&x) {
                    return Err(ModelError::NotAnAtom { summand: s });
                }
                match atoms.last_mut() {
                    Some((y, acc)) if *y == x => *acc = acc.clone() + z,
                    _ => atoms.push((x, z)),
                }
            }
            parts.push(SummandPart { density, atoms });
        }
        Ok(StepVector::from_raw(model, slots, parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::BorelMeasure;
    use crate::model::{EigenSlot, Multiplicity};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Scalar::ratio(n, d)
    }

    fn model() -> Arc<OperatorModel<Rational>> {
        OperatorModel::new(
            vec![EigenSlot::new(q(2, 1), Multiplicity::Finite(2))],
            vec![BorelMeasure::new(vec![(q(3, 1), q(1, 1))], vec![(q(0, 1), q(1, 1), q(1, 1))])
                .unwrap()],
        )
        .unwrap()
        .into_shared()
    }

    #[test]
    fn density_is_clipped_to_support() {
        let m = model();
        let a = StepVector::builder(&m)
            .density(0, q(-1, 1), q(2, 1), real(q(1, 1)))
            .build()
            .unwrap();
        let b = StepVector::builder(&m)
            .density(0, q(0, 1), q(1, 1), real(q(1, 1)))
            .build()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn builder_validates_indices() {
        let m = model();
        assert_eq!(
            StepVector::unit_slot(&m, 0, 2).unwrap_err(),
            ModelError::CopyOutOfRange { slot: 0, copy: 2 }
        );
        assert_eq!(
            StepVector::builder(&m).atom(0, q(1, 2), real(q(1, 1))).build().unwrap_err(),
            ModelError::NotAnAtom { summand: 0 }
        );
    }

    #[test]
    fn subtraction_cancels_to_canonical_zero() {
        let m = model();
        let v = StepVector::constant_on(&m, 0, real(q(1, 1))).unwrap();
        let z = v.checked_sub(&v).unwrap();
        assert!(z.is_zero());
        assert_eq!(z, StepVector::zero(&m));
        let other = model();
        assert!(v.checked_add(&StepVector::zero(&other)).is_ok());
        let different = OperatorModel::new(vec![], vec![]).unwrap().into_shared();
        assert_eq!(
            v.checked_add(&StepVector::zero(&different)),
            Err(ModelError::ModelMismatch)
        );
    }
}
