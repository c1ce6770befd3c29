#![allow(dead_code)]

use std::sync::Arc;

use hilbert_spectra::measure::{BorelMeasure, Interval, IntervalSet, PiecewiseFunction};
use hilbert_spectra::model::{EigenSlot, Multiplicity, OperatorModel, StepVector};
use hilbert_spectra::scalar::real;
use hilbert_spectra::subspace::ParameterSet;
use hilbert_spectra::{Cx, Rational, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Q = Rational;
pub type Model = Arc<OperatorModel<Q>>;
pub type Vector = StepVector<Q>;

pub fn q(n: i64, d: i64) -> Q {
    Scalar::ratio(n, d)
}

pub fn cx(re: Q, im: Q) -> Cx<Q> {
    Cx::new(re, im)
}

/// Grid point `k / 4` with `k ∈ [−8, 8]`.
pub fn grid_point(rng: &mut ChaCha8Rng) -> Q {
    q(rng.gen_range(-8..=8), 4)
}

pub fn small_positive(rng: &mut ChaCha8Rng) -> Q {
    q(rng.gen_range(1..=6), rng.gen_range(1..=3))
}

pub fn small_complex(rng: &mut ChaCha8Rng) -> Cx<Q> {
    let re = q(rng.gen_range(-3..=3), rng.gen_range(1..=2));
    let im = if rng.gen_bool(0.4) {
        q(rng.gen_range(-2..=2), 1)
    } else {
        q(0, 1)
    };
    cx(re, im)
}

/// `k` sorted distinct grid points.
pub fn distinct_points(rng: &mut ChaCha8Rng, k: usize) -> Vec<Q> {
    let mut all: Vec<i64> = (-8..=8).collect();
    all.shuffle(rng);
    let mut pts: Vec<i64> = all.into_iter().take(k).collect();
    pts.sort();
    pts.into_iter().map(|k| q(k, 4)).collect()
}

/// Disjoint bounded pieces `(a, b)` on the grid.
pub fn disjoint_pieces(rng: &mut ChaCha8Rng, k: usize) -> Vec<(Q, Q)> {
    let pts = distinct_points(rng, 2 * k);
    pts.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
}

pub fn random_measure(rng: &mut ChaCha8Rng, atoms: bool, density: bool) -> BorelMeasure<Q> {
    loop {
        let na = if atoms { rng.gen_range(0..=2) } else { 0 };
        let nd = if density { rng.gen_range(0..=2) } else { 0 };
        let atoms_v: Vec<(Q, Q)> = distinct_points(rng, na)
            .into_iter()
            .map(|x| (x, small_positive(rng)))
            .collect();
        let pieces: Vec<(Q, Q, Q)> = disjoint_pieces(rng, nd)
            .into_iter()
            .map(|(a, b)| (a, b, small_positive(rng)))
            .collect();
        let mu = BorelMeasure::new(atoms_v, pieces).expect("valid measure");
        if !mu.is_zero() {
            return mu;
        }
    }
}

/// Any finite measure on the grid, possibly zero.
pub fn any_measure(rng: &mut ChaCha8Rng) -> BorelMeasure<Q> {
    let na = rng.gen_range(0..=3);
    let nd = rng.gen_range(0..=3);
    let atoms: Vec<(Q, Q)> = distinct_points(rng, na)
        .into_iter()
        .map(|x| (x, small_positive(rng)))
        .collect();
    let pieces: Vec<(Q, Q, Q)> = (0..nd)
        .map(|_| {
            let a = rng.gen_range(-8..8);
            let b = rng.gen_range(a + 1..=8);
            (q(a, 4), q(b, 4), small_positive(rng))
        })
        .collect();
    BorelMeasure::new(atoms, pieces).expect("valid measure")
}

pub fn random_multiplicity(rng: &mut ChaCha8Rng) -> Multiplicity {
    if rng.gen_bool(0.25) {
        Multiplicity::Omega
    } else {
        Multiplicity::Finite(rng.gen_range(1..=3))
    }
}

pub fn random_model(rng: &mut ChaCha8Rng, min_summands: usize) -> Model {
    let ns = rng.gen_range(0..=2);
    let slots: Vec<EigenSlot<Q>> = distinct_points(rng, ns)
        .into_iter()
        .map(|x| EigenSlot::new(x, random_multiplicity(rng)))
        .collect();
    let nm = rng.gen_range(min_summands..=min_summands.max(1) + 1);
    let summands = (0..nm).map(|_| random_measure(rng, true, true)).collect();
    OperatorModel::new(slots, summands).expect("valid model").into_shared()
}

/// A model whose summands are all atomic, with finite slots only.
pub fn random_atomic_model(rng: &mut ChaCha8Rng, max_dim: usize) -> Model {
    loop {
        let ns = rng.gen_range(0..=3);
        let slots: Vec<EigenSlot<Q>> = distinct_points(rng, ns)
            .into_iter()
            .map(|x| EigenSlot::new(x, Multiplicity::Finite(rng.gen_range(1..=4))))
            .collect();
        let nm = rng.gen_range(0..=4);
        let summands: Vec<BorelMeasure<Q>> = (0..nm)
            .map(|_| {
                let k = rng.gen_range(1..=5);
                let atoms: Vec<(Q, Q)> = distinct_points(rng, k)
                    .into_iter()
                    .map(|x| (x, small_positive(rng)))
                    .collect();
                BorelMeasure::new(atoms, vec![]).expect("valid measure")
            })
            .collect();
        let dim: u64 = slots.iter().map(|s| s.multiplicity.finite().unwrap()).sum::<u64>()
            + summands.iter().map(|m| m.atoms().len() as u64).sum::<u64>();
        if dim == 0 || dim as usize > max_dim {
            continue;
        }
        return OperatorModel::new(slots, summands).expect("valid model").into_shared();
    }
}

/// Number of slot copies a random vector may populate.
fn copies(m: Multiplicity) -> u64 {
    match m {
        Multiplicity::Finite(k) => k,
        Multiplicity::Omega => 3,
    }
}

pub struct VectorShape {
    pub skip_summands: Vec<usize>,
    pub slots: bool,
    pub density: f64,
}

impl Default for VectorShape {
    fn default() -> Self {
        VectorShape {
            skip_summands: Vec::new(),
            slots: true,
            density: 0.6,
        }
    }
}

impl VectorShape {
    /// Supported on summand `s` alone.
    pub fn only_summand(model: &Model, s: usize) -> Self {
        VectorShape {
            skip_summands: (0..model.summands().len()).filter(|&i| i != s).collect(),
            slots: false,
            density: 0.8,
        }
    }

    pub fn avoiding(s: usize) -> Self {
        VectorShape {
            skip_summands: vec![s],
            ..Default::default()
        }
    }
}

pub fn random_vector_shaped(rng: &mut ChaCha8Rng, model: &Model, shape: &VectorShape) -> Vector {
    let mut b = StepVector::builder(model);
    for (i, s) in model.slots().iter().enumerate() {
        if !shape.slots {
            break;
        }
        for c in 0..copies(s.multiplicity) {
            if rng.gen_bool(shape.density) {
                b = b.slot(i, c, small_complex(rng));
            }
        }
    }
    for (s, mu) in model.summands().iter().enumerate() {
        if shape.skip_summands.contains(&s) {
            continue;
        }
        for (x, _) in mu.atoms() {
            if rng.gen_bool(shape.density) {
                b = b.atom(s, x.clone(), small_complex(rng));
            }
        }
        let k = rng.gen_range(0..=3);
        for (a, bb) in disjoint_pieces(rng, k) {
            if rng.gen_bool(shape.density) {
                b = b.density(s, a, bb, small_complex(rng));
            }
        }
    }
    b.build().expect("valid vector")
}

pub fn random_vector(rng: &mut ChaCha8Rng, model: &Model) -> Vector {
    random_vector_shaped(rng, model, &VectorShape::default())
}

pub fn random_set(rng: &mut ChaCha8Rng, model: &Model, k: usize, shape: &VectorShape) -> ParameterSet<Q> {
    let gens = (0..k).map(|_| random_vector_shaped(rng, model, shape)).collect();
    ParameterSet::new(model, gens).expect("same model")
}

pub fn random_interval_set(rng: &mut ChaCha8Rng) -> IntervalSet<Q> {
    let k = rng.gen_range(0..=3);
    let intervals = disjoint_pieces(rng, k)
        .into_iter()
        .map(|(a, b)| Interval::finite(a, b).expect("non-empty"))
        .collect();
    let np = rng.gen_range(0..=2);
    let points = distinct_points(rng, np);
    IntervalSet::new(intervals, points)
}

/// Two disjoint sets built by assigning grid cells and grid points to
/// either side.
pub fn disjoint_sets(rng: &mut ChaCha8Rng) -> (IntervalSet<Q>, IntervalSet<Q>) {
    let (mut ai, mut bi, mut ap, mut bp) = (vec![], vec![], vec![], vec![]);
    for k in -8..8 {
        let iv = Interval::finite(q(k, 4), q(k + 1, 4)).unwrap();
        match rng.gen_range(0..3) {
            0 => ai.push(iv),
            1 => bi.push(iv),
            _ => {}
        }
    }
    for k in -8..=8 {
        match rng.gen_range(0..6) {
            0 => ap.push(q(k, 4)),
            1 => bp.push(q(k, 4)),
            _ => {}
        }
    }
    // points land on cell boundaries; remove those already covered by the
    // other side
    let a = IntervalSet::new(ai, vec![]);
    let b = IntervalSet::new(bi, vec![]);
    ap.retain(|p| !b.contains(p));
    bp.retain(|p| !a.contains(p) && !ap.contains(p));
    (
        a.union(&IntervalSet::new(vec![], ap)),
        b.union(&IntervalSet::new(vec![], bp)),
    )
}

pub fn random_function(rng: &mut ChaCha8Rng) -> PiecewiseFunction<Q, Cx<Q>> {
    let k = rng.gen_range(0..=3);
    let pieces = disjoint_pieces(rng, k)
        .into_iter()
        .map(|(a, b)| (Interval::finite(a, b).unwrap(), small_complex(rng)))
        .collect();
    let np = rng.gen_range(0..=2);
    let points = distinct_points(rng, np)
        .into_iter()
        .map(|x| (x, small_complex(rng)))
        .collect();
    let default = if rng.gen_bool(0.5) {
        small_complex(rng)
    } else {
        real(q(0, 1))
    };
    PiecewiseFunction::new(pieces, points, default).expect("valid function")
}

/// Sum of `c · e_(slot, copy)` terms added to `v`.
pub fn add_slot_terms(v: &Vector, terms: &[(usize, u64, Cx<Q>)]) -> Vector {
    let mut out = v.clone();
    for (slot, copy, c) in terms {
        let e = StepVector::unit_slot(v.model(), *slot, *copy).expect("valid slot");
        out = out.checked_add(&e.scale(c)).expect("same model");
    }
    out
}

/// Applies the 2×2 matrix `[[a, b], [c, d]]` to copies `0, 1` of `slot`.
pub fn act_on_copies(v: &Vector, slot: usize, m: [[Q; 2]; 2]) -> Vector {
    let x0 = v.slot_coord(slot, 0);
    let x1 = v.slot_coord(slot, 1);
    let y0 = x0.scale(m[0][0].clone()) + x1.scale(m[0][1].clone());
    let y1 = x0.scale(m[1][0].clone()) + x1.scale(m[1][1].clone());
    add_slot_terms(v, &[(slot, 0, y0 - x0.clone()), (slot, 1, y1 - x1.clone())])
}

/// A rational rotation `((n² − 1)/(n² + 1), 2n/(n² + 1))`.
pub fn pythagorean(n: i64) -> [[Q; 2]; 2] {
    let d = n * n + 1;
    let c = q(n * n - 1, d);
    let s = q(2 * n, d);
    [[c.clone(), -s.clone()], [s, c]]
}

pub fn swap() -> [[Q; 2]; 2] {
    [[q(0, 1), q(1, 1)], [q(1, 1), q(0, 1)]]
}
