//! Cyclic subspaces `H_G = span{f(Q) g}`, their projections, the algebraic
//! closure `span(H_G ∪ H_d)`, and the discrete/essential split.
//!
//! On a cell where every generator is constant, `f(Q)` can only rescale the
//! tuple of generator values, so `H_G` is the cell-wise span of those tuples.
//! Each cell stores an exact orthogonal (unnormalised) basis for its span.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::measure::{Partition, StepLayer};
use crate::model::{
    norm_sq, same_model, Embedding, ModelError, Multiplicity, OperatorModel, StepVector,
    SummandPart,
};
use crate::scalar::{mul_conj, real, sort_dedup, Cx, Scalar};
use crate::spectra::compute_spectrum;

/// A finite list of generators in one model.
#[derive(Clone, Debug)]
pub struct ParameterSet<T> {
    model: Arc<OperatorModel<T>>,
    generators: Vec<StepVector<T>>,
}

impl<T: Scalar> PartialEq for ParameterSet<T> {
    fn eq(&self, other: &Self) -> bool {
        same_model(&self.model, &other.model) && self.generators == other.generators
    }
}

impl<T: Scalar> ParameterSet<T> {
    pub fn new(
        model: &Arc<OperatorModel<T>>,
        generators: Vec<StepVector<T>>,
    ) -> Result<Self, ModelError> {
        if generators.iter().any(|g| !same_model(g.model(), model)) {
            return Err(ModelError::ModelMismatch);
        }
        Ok(ParameterSet {
            model: model.clone(),
            generators,
        })
    }

    pub fn empty(model: &Arc<OperatorModel<T>>) -> Self {
        ParameterSet {
            model: model.clone(),
            generators: Vec::new(),
        }
    }

    pub fn model(&self) -> &Arc<OperatorModel<T>> {
        &self.model
    }

    pub fn generators(&self) -> &[StepVector<T>] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn union(&self, other: &Self) -> Result<Self, ModelError> {
        let mut g = self.generators.clone();
        g.extend(other.generators.iter().cloned());
        Self::new(&self.model, g)
    }

    pub fn with(&self, v: &StepVector<T>) -> Result<Self, ModelError> {
        let mut g = self.generators.clone();
        g.push(v.clone());
        Self::new(&self.model, g)
    }

    /// The generators selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        ParameterSet {
            model: self.model.clone(),
            generators: indices.iter().map(|&i| self.generators[i].clone()).collect(),
        }
    }

    pub fn embed(&self, e: &Embedding<T>) -> Result<Self, ModelError> {
        let g = self
            .generators
            .iter()
            .map(|v| e.apply(v))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(e.target(), g)
    }
}

/// Coordinate inside a point cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Coord {
    Slot(usize, u64),
    Atom(usize),
}

type Family<T> = Vec<(Vec<Cx<T>>, T)>;

fn weighted_ip<T: Scalar>(a: &[Cx<T>], b: &[Cx<T>], w: &[T]) -> Cx<T> {
    a.iter()
        .zip(b)
        .zip(w)
        .fold(Cx::zero(), |acc, ((x, y), h)| acc + mul_conj(x, y).scale(h.clone()))
}

/// Exact Gram–Schmidt; zero directions are dropped.
fn orthogonalize<T: Scalar>(vectors: impl IntoIterator<Item = Vec<Cx<T>>>, w: &[T]) -> Family<T> {
    let mut family: Family<T> = Vec::new();
    for g in vectors {
        let mut e = g.clone();
        for (b, n) in &family {
            let c = weighted_ip(&g, b, w) / real(n.clone());
            for (ei, bi) in e.iter_mut().zip(b) {
                *ei = ei.clone() - c.clone() * bi.clone();
            }
        }
        let n = weighted_ip(&e, &e, w).re;
        if !n.is_zero() {
            family.push((e, n));
        }
    }
    family
}

fn project_onto<T: Scalar>(x: &[Cx<T>], family: &Family<T>, w: &[T]) -> Vec<Cx<T>> {
    let mut out = vec![Cx::zero(); x.len()];
    for (b, n) in family {
        let c = weighted_ip(x, b, w) / real(n.clone());
        if c.is_zero() {
            continue;
        }
        for (o, bi) in out.iter_mut().zip(b) {
            *o = o.clone() + c.clone() * bi.clone();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
struct IntervalCell<T> {
    summands: Vec<usize>,
    weights: Vec<T>,
    family: Family<T>,
}

impl<T> IntervalCell<T> {
    fn empty() -> Self {
        IntervalCell {
            summands: Vec::new(),
            weights: Vec::new(),
            family: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct PointCell<T> {
    at: T,
    coords: Vec<Coord>,
    weights: Vec<T>,
    family: Family<T>,
}

/// A closed `Q`-invariant subspace given cell by cell.
#[derive(Clone, Debug)]
pub struct SubspaceHandle<T> {
    model: Arc<OperatorModel<T>>,
    intervals: StepLayer<T, IntervalCell<T>>,
    points: Vec<PointCell<T>>,
    includes_discrete: bool,
}

impl<T: Scalar> SubspaceHandle<T> {
    pub fn model(&self) -> &Arc<OperatorModel<T>> {
        &self.model
    }

    pub fn includes_discrete_part(&self) -> bool {
        self.includes_discrete
    }

    /// Dimension of the span on each interval cell, as `(a, b, rank)`.
    pub fn interval_ranks(&self) -> Vec<(T, T, usize)> {
        self.intervals
            .pieces()
            .iter()
            .map(|(iv, c)| {
                let (a, b) = iv.bounds().expect("bounded");
                (a.clone(), b.clone(), c.family.len())
            })
            .collect()
    }

    /// Dimension of the span at each spectral point carrying one.
    pub fn point_ranks(&self) -> Vec<(T, usize)> {
        self.points
            .iter()
            .map(|p| (p.at.clone(), p.family.len()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.intervals.pieces().is_empty() && self.points.is_empty()
    }
}

/// `H_G`.
pub fn cyclic_subspace<T: Scalar>(g: &ParameterSet<T>) -> SubspaceHandle<T> {
    let model = g.model().clone();
    let gens: Vec<&StepVector<T>> = g.generators().iter().filter(|v| !v.is_zero()).collect();

    let mut breaks = Vec::new();
    for mu in model.summands() {
        mu.density().collect_breaks(&mut breaks);
    }
    for v in &gens {
        for p in v.parts() {
            p.density().collect_breaks(&mut breaks);
        }
    }
    let part = Partition::from_breaks(breaks, Vec::new());
    let cells = part.bounded_cells().into_iter().filter_map(|c| {
        let mut summands = Vec::new();
        let mut weights = Vec::new();
        for (s, mu) in model.summands().iter().enumerate() {
            let h = mu.density().value_on(&c);
            if !h.is_zero() {
                summands.push(s);
                weights.push(h.clone());
            }
        }
        if summands.is_empty() {
            return None;
        }
        let tuples = gens.iter().map(|v| {
            summands
                .iter()
                .map(|&s| v.parts()[s].density().value_on(&c).clone())
                .collect::<Vec<_>>()
        });
        let family = orthogonalize(tuples, &weights);
        if family.is_empty() {
            None
        } else {
            Some((
                c,
                IntervalCell {
                    summands,
                    weights,
                    family,
                },
            ))
        }
    });
    let intervals = StepLayer::from_sorted_cells(cells, IntervalCell::empty());

    let points = point_cells(&model, &gens);
    SubspaceHandle {
        model,
        intervals,
        points,
        includes_discrete: false,
    }
}

fn point_cells<T: Scalar>(model: &OperatorModel<T>, gens: &[&StepVector<T>]) -> Vec<PointCell<T>> {
    let mut locs: Vec<T> = Vec::new();
    for v in gens {
        for &(s, _) in v.slot_coords().keys() {
            locs.push(model.slots()[s].eigenvalue.clone());
        }
        for p in v.parts() {
            locs.extend(p.atoms().iter().map(|(x, _)| x.clone()));
        }
    }
    sort_dedup(&mut locs);
    let mut out = Vec::new();
    for x in locs {
        let mut coords: Vec<Coord> = Vec::new();
        let mut weights: Vec<T> = Vec::new();
        if let Some(slot) = model.slot_index(&x) {
            let mut copies: Vec<u64> = gens
                .iter()
                .flat_map(|v| {
                    v.slot_coords()
                        .keys()
                        .filter(|(s, _)| *s == slot)
                        .map(|&(_, k)| k)
                        .collect::<Vec<_>>()
                })
                .collect();
            copies.sort_unstable();
            copies.dedup();
            for k in copies {
                coords.push(Coord::Slot(slot, k));
                weights.push(T::one());
            }
        }
        for (s, mu) in model.summands().iter().enumerate() {
            let m = mu.mass_at(&x);
            if !m.is_zero() && gens.iter().any(|v| !v.parts()[s].atom_value(&x).is_zero()) {
                coords.push(Coord::Atom(s));
                weights.push(m);
            }
        }
        let tuples = gens.iter().map(|v| {
            coords
                .iter()
                .map(|&c| value_at_point(v, c, &x))
                .collect::<Vec<_>>()
        });
        let family = orthogonalize(tuples, &weights);
        if !family.is_empty() {
            out.push(PointCell {
                at: x,
                coords,
                weights,
                family,
            });
        }
    }
    out
}

fn value_at_point<T: Scalar>(v: &StepVector<T>, c: Coord, x: &T) -> Cx<T> {
    match c {
        Coord::Slot(s, k) => v.slot_coord(s, k),
        Coord::Atom(s) => v.parts()[s].atom_value(x),
    }
}

/// Orthogonal projection onto the subspace.
pub fn project<T: Scalar>(h: &SubspaceHandle<T>, v: &StepVector<T>) -> Result<StepVector<T>, ModelError> {
    if !same_model(&h.model, v.model()) {
        return Err(ModelError::ModelMismatch);
    }
    let model = &h.model;
    let n = model.summands().len();

    let mut slots: BTreeMap<(usize, u64), Cx<T>> = BTreeMap::new();
    let mut atoms: Vec<Vec<(T, Cx<T>)>> = vec![Vec::new(); n];
    for cell in &h.points {
        let x: Vec<Cx<T>> = cell
            .coords
            .iter()
            .map(|&c| value_at_point(v, c, &cell.at))
            .collect();
        let y = project_onto(&x, &cell.family, &cell.weights);
        for (&c, z) in cell.coords.iter().zip(y) {
            match c {
                Coord::Slot(s, k) => {
                    slots.insert((s, k), z);
                }
                Coord::Atom(s) => atoms[s].push((cell.at.clone(), z)),
            }
        }
    }

    let mut breaks = Vec::new();
    h.intervals.collect_breaks(&mut breaks);
    for p in v.parts() {
        p.density().collect_breaks(&mut breaks);
    }
    let part = Partition::from_breaks(breaks, Vec::new());
    let mut cells: Vec<Vec<(crate::measure::Interval<T>, Cx<T>)>> = vec![Vec::new(); n];
    for c in part.bounded_cells() {
        let hc = h.intervals.value_on(&c);
        if hc.family.is_empty() {
            continue;
        }
        let x: Vec<Cx<T>> = hc
            .summands
            .iter()
            .map(|&s| v.parts()[s].density().value_on(&c).clone())
            .collect();
        if x.iter().all(Zero::is_zero) {
            continue;
        }
        let y = project_onto(&x, &hc.family, &hc.weights);
        for (&s, z) in hc.summands.iter().zip(y) {
            cells[s].push((c.clone(), z));
        }
    }
    let parts = cells
        .into_iter()
        .zip(atoms)
        .map(|(c, a)| SummandPart {
            density: StepLayer::from_sorted_cells(c, Cx::zero()),
            atoms: a,
        })
        .collect();
    Ok(StepVector::from_raw(model.clone(), slots, parts))
}

/// `v − P v`.
pub fn project_complement<T: Scalar>(
    h: &SubspaceHandle<T>,
    v: &StepVector<T>,
) -> Result<StepVector<T>, ModelError> {
    v.checked_sub(&project(h, v)?)
}

/// `‖v − P v‖² = 0`.
pub fn in_subspace<T: Scalar>(h: &SubspaceHandle<T>, v: &StepVector<T>) -> Result<bool, ModelError> {
    Ok(norm_sq(&project_complement(h, v)?).is_zero())
}

/// Unit vectors spanning the eigenspaces at the discrete spectrum.
pub fn discrete_basis<T: Scalar>(model: &Arc<OperatorModel<T>>) -> Vec<StepVector<T>> {
    let report = compute_spectrum(model);
    let mut out = Vec::new();
    for lambda in report.discrete_points() {
        if let Some(slot) = model.slot_index(&lambda) {
            let n = match model.slots()[slot].multiplicity {
                Multiplicity::Finite(n) => n,
                Multiplicity::Omega => unreachable!("ω slots lie in the essential spectrum"),
            };
            for k in 0..n {
                out.push(StepVector::unit_slot(model, slot, k).expect("valid copy"));
            }
        }
        for (s, mu) in model.summands().iter().enumerate() {
            if mu.has_atom_at(&lambda) {
                out.push(
                    StepVector::builder(model)
                        .atom(s, lambda.clone(), real(T::one()))
                        .build()
                        .expect("valid atom"),
                );
            }
        }
    }
    out
}

/// `span(H_G ∪ H_d)`.
pub fn acl<T: Scalar>(g: &ParameterSet<T>) -> SubspaceHandle<T> {
    let mut gens = g.generators().to_vec();
    gens.extend(discrete_basis(g.model()));
    let mut h = cyclic_subspace(&ParameterSet {
        model: g.model().clone(),
        generators: gens,
    });
    h.includes_discrete = true;
    h
}

/// `(v_d, v_e)`: the components at the discrete spectrum and the rest.
pub fn split_discrete_essential<T: Scalar>(v: &StepVector<T>) -> (StepVector<T>, StepVector<T>) {
    let model = v.model();
    let discrete = compute_spectrum(model).discrete_points();
    let v_d = v.filter(
        |s| discrete.contains(&model.slots()[s].eigenvalue),
        |x| discrete.contains(x),
        false,
    );
    let v_e = v.checked_sub(&v_d).expect("same model");
    (v_d, v_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{BorelMeasure, Interval, PiecewiseFunction};
    use crate::model::{apply_borel, inner_product, EigenSlot};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Scalar::ratio(n, d)
    }

    fn c(n: i64, d: i64) -> Cx<Rational> {
        real(q(n, d))
    }

    fn unif() -> BorelMeasure<Rational> {
        BorelMeasure::uniform(q(0, 1), q(1, 1), q(1, 1)).unwrap()
    }

    fn model(k: usize) -> Arc<OperatorModel<Rational>> {
        OperatorModel::new(
            vec![
                EigenSlot::new(q(5, 1), Multiplicity::Finite(2)),
                EigenSlot::new(q(7, 1), Multiplicity::Omega),
            ],
            vec![unif(); k],
        )
        .unwrap()
        .into_shared()
    }

    fn on(m: &Arc<OperatorModel<Rational>>, s: usize, a: Rational, b: Rational) -> StepVector<Rational> {
        StepVector::builder(m).density(s, a, b, c(1, 1)).build().unwrap()
    }

    #[test]
    fn single_generator_is_fixed() {
        let m = model(2);
        let v = StepVector::builder(&m)
            .density(0, q(0, 1), q(1, 2), c(3, 1))
            .density(1, q(1, 4), q(1, 1), c(-1, 2))
            .slot(0, 1, c(2, 1))
            .build()
            .unwrap();
        let h = cyclic_subspace(&ParameterSet::new(&m, vec![v.clone()]).unwrap());
        assert_eq!(project(&h, &v).unwrap(), v);
        assert!(h.interval_ranks().iter().all(|(_, _, r)| *r == 1));
    }

    #[test]
    fn indicator_generator_spans_its_support() {
        let m = model(1);
        let g = on(&m, 0, q(0, 1), q(1, 2));
        let h = cyclic_subspace(&ParameterSet::new(&m, vec![g]).unwrap());
        let inside = StepVector::builder(&m)
            .density(0, q(0, 1), q(1, 4), c(5, 1))
            .density(0, q(1, 4), q(1, 2), c(-2, 3))
            .build()
            .unwrap();
        assert!(in_subspace(&h, &inside).unwrap());
        let whole = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert_eq!(project(&h, &whole).unwrap(), on(&m, 0, q(0, 1), q(1, 2)));
    }

    #[test]
    fn empty_set_is_zero_subspace() {
        let m = model(1);
        let h = cyclic_subspace(&ParameterSet::empty(&m));
        assert!(h.is_zero());
        let v = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert!(project(&h, &v).unwrap().is_zero());
    }

    #[test]
    fn diagonal_generator_on_two_copies() {
        let m = model(2);
        let g = StepVector::constant_on(&m, 0, c(1, 1))
            .unwrap()
            .checked_add(&StepVector::constant_on(&m, 1, c(1, 1)).unwrap())
            .unwrap();
        let h = cyclic_subspace(&ParameterSet::new(&m, vec![g]).unwrap());
        let v = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        let expect = StepVector::constant_on(&m, 0, c(1, 2))
            .unwrap()
            .checked_add(&StepVector::constant_on(&m, 1, c(1, 2)).unwrap())
            .unwrap();
        assert_eq!(project(&h, &v).unwrap(), expect);
    }

    #[test]
    fn disjoint_vector_projects_to_zero() {
        let m = model(2);
        let g = on(&m, 0, q(0, 1), q(1, 1));
        let h = cyclic_subspace(&ParameterSet::new(&m, vec![g]).unwrap());
        let v = on(&m, 1, q(0, 1), q(1, 1));
        assert!(project(&h, &v).unwrap().is_zero());
        assert!(!in_subspace(&h, &v).unwrap());
    }

    #[test]
    fn orbit_membership() {
        let m = model(2);
        let g = StepVector::builder(&m)
            .density(0, q(0, 1), q(1, 1), c(1, 1))
            .density(1, q(0, 1), q(1, 1), c(2, 1))
            .slot(1, 3, c(1, 1))
            .build()
            .unwrap();
        let h = cyclic_subspace(&ParameterSet::new(&m, vec![g.clone()]).unwrap());
        let f = PiecewiseFunction::new(
            vec![
                (Interval::finite(q(0, 1), q(1, 3)).unwrap(), c(4, 1)),
                (Interval::finite(q(1, 3), q(6, 1)).unwrap(), c(-1, 7)),
            ],
            vec![(q(7, 1), c(9, 1))],
            c(0, 1),
        )
        .unwrap();
        assert!(in_subspace(&h, &apply_borel(&f, &g)).unwrap());
        assert!(in_subspace(&h, &g).unwrap());
    }

    #[test]
    fn acl_of_empty_is_discrete_part() {
        let m = model(1);
        let v = StepVector::builder(&m)
            .slot(0, 0, c(1, 1))
            .slot(1, 0, c(1, 1))
            .density(0, q(0, 1), q(1, 1), c(1, 1))
            .build()
            .unwrap();
        let (vd, ve) = split_discrete_essential(&v);
        assert_eq!(vd, StepVector::unit_slot(&m, 0, 0).unwrap());
        assert_eq!(inner_product(&vd, &ve).unwrap(), c(0, 1));
        let h = acl(&ParameterSet::empty(&m));
        assert!(h.includes_discrete_part());
        assert_eq!(project(&h, &v).unwrap(), vd);
    }

    #[test]
    fn split_of_pure_parts() {
        let m = model(1);
        let e = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert_eq!(split_discrete_essential(&e), (StepVector::zero(&m), e.clone()));
        let d = StepVector::unit_slot(&m, 0, 1).unwrap();
        assert_eq!(split_discrete_essential(&d), (d.clone(), StepVector::zero(&m)));
    }

    #[test]
    fn discrete_atoms_belong_to_acl_of_empty() {
        let mu = BorelMeasure::new(vec![(q(3, 1), q(2, 1))], vec![(q(0, 1), q(1, 1), q(1, 1))])
            .unwrap();
        let m = OperatorModel::new(vec![], vec![mu]).unwrap().into_shared();
        let v = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        let (vd, _) = split_discrete_essential(&v);
        let expect = StepVector::builder(&m).atom(0, q(3, 1), c(1, 1)).build().unwrap();
        assert_eq!(vd, expect);
        assert_eq!(project(&acl(&ParameterSet::empty(&m)), &v).unwrap(), vd);
    }
}
