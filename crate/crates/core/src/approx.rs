//! Approximate unitary equivalence: the back-and-forth matching of dense
//! sequences, diagonal plus small-norm splitting on a cell grid, and
//! permutation unitaries between diagonal truncations.

use num_traits::Float;

use crate::measure::{Interval, IntervalSet};
use crate::model::{Multiplicity, OperatorModel, StepVector};
use crate::scalar::{real, Scalar};
use crate::spectra::{compute_spectrum, spectrally_equivalent, EquivalenceReport};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ApproxError<T> {
    #[error("sequences have different lengths")]
    LengthMismatch,
    #[error("no unused partner inside the window at step {0}")]
    MatchingExhausted(usize),
    #[error("cell budget too small: at least {required} cells are needed")]
    CellBudgetTooSmall { required: usize },
    #[error("models are not spectrally equivalent")]
    NotSpectrallyEquivalent(EquivalenceReport<T>),
    #[error("truncation too small: at least {required} basis vectors are needed")]
    TruncationTooSmall { required: usize },
    #[error("no witness at this truncation (best operator gap {operator_gap})")]
    NoWitnessFound { operator_gap: f64 },
}

/// Minimum of original indices over a range of sorted positions, with
/// removal.
struct MinTree {
    size: usize,
    data: Vec<usize>,
}

impl MinTree {
    fn new(values: &[usize]) -> Self {
        let size = values.len().next_power_of_two().max(1);
        let mut data = vec![usize::MAX; 2 * size];
        data[size..size + values.len()].copy_from_slice(values);
        for i in (1..size).rev() {
            data[i] = data[2 * i].min(data[2 * i + 1]);
        }
        MinTree { size, data }
    }

    fn remove(&mut self, pos: usize) {
        let mut i = pos + self.size;
        self.data[i] = usize::MAX;
        while i > 1 {
            i /= 2;
            self.data[i] = self.data[2 * i].min(self.data[2 * i + 1]);
        }
    }

    /// Minimum over positions `lo..hi`.
    fn min(&self, lo: usize, hi: usize) -> usize {
        let (mut l, mut r) = (lo + self.size, hi + self.size);
        let mut best = usize::MAX;
        while l < r {
            if l & 1 == 1 {
                best = best.min(self.data[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                best = best.min(self.data[r]);
            }
            l /= 2;
            r /= 2;
        }
        best
    }
}

/// One side of the matching: values sorted with their original indices.
struct Side<F> {
    sorted: Vec<F>,
    pos_of: Vec<usize>,
    tree: MinTree,
}

impl<F: Float> Side<F> {
    fn new(values: &[F]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
        let mut pos_of = vec![0; values.len()];
        for (p, &i) in order.iter().enumerate() {
            pos_of[i] = p;
        }
        Side {
            sorted: order.iter().map(|&i| values[i]).collect(),
            tree: MinTree::new(&order),
            pos_of,
        }
    }

    /// Least unused index whose value is within the window of `x`.
    fn take(&mut self, x: F, within: impl Fn(F, F) -> bool) -> Option<usize> {
        let lo = self.sorted.partition_point(|&y| y < x && !within(x, y));
        let hi = self.sorted.partition_point(|&y| y <= x || within(x, y));
        let i = self.tree.min(lo, hi);
        if i == usize::MAX {
            return None;
        }
        self.tree.remove(self.pos_of[i]);
        Some(i)
    }
}

/// A bijection between two sequences with its gap schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchingWitness<F> {
    /// `permutation[i]` is the partner in `ys` of `xs[i]` (0-based).
    pub permutation: Vec<usize>,
    /// `|xs[i] − ys[π(i)]|`.
    pub per_index_gap: Vec<F>,
    /// The 1-based step `min(i, π(i))` whose window bounds the gap of `xs[i]`.
    pub schedule: Vec<usize>,
    pub eps: F,
}

/// `gap < ε / 2^k`, evaluated through logarithms so that tiny windows do not
/// underflow; a zero gap is inside every window.
pub fn within_schedule<F: Float>(gap: F, eps: F, k: usize) -> bool {
    gap == F::zero() || gap.log2() < eps.log2() - F::from(k).expect("index fits")
}

impl<F: Float> MatchingWitness<F> {
    pub fn satisfies_schedule(&self) -> bool {
        self.per_index_gap
            .iter()
            .zip(&self.schedule)
            .all(|(&g, &k)| within_schedule(g, self.eps, k))
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.permutation.len()];
        self.permutation.iter().all(|&j| {
            j < seen.len() && !std::mem::replace(&mut seen[j], true)
        })
    }
}

/// Back-and-forth greedy: at step `k`, `π(k)` is the least unused index
/// with `|ξ_k − ζ_l| < ε/2^k`, then `π⁻¹(k)` likewise.
pub fn match_sequences<F: Float, T>(xs: &[F], ys: &[F], eps: F) -> Result<MatchingWitness<F>, ApproxError<T>> {
    let n = xs.len();
    if ys.len() != n {
        return Err(ApproxError::LengthMismatch);
    }
    let mut fwd: Vec<Option<usize>> = vec![None; n];
    let mut bwd: Vec<Option<usize>> = vec![None; n];
    let mut schedule = vec![0; n];
    let mut left = Side::new(xs);
    let mut right = Side::new(ys);
    for k in 0..n {
        let step = k + 1;
        let within = |a: F, b: F| within_schedule((a - b).abs(), eps, step);
        if fwd[k].is_none() {
            let l = right
                .take(xs[k], within)
                .ok_or(ApproxError::MatchingExhausted(step))?;
            left.tree.remove(left.pos_of[k]);
            fwd[k] = Some(l);
            bwd[l] = Some(k);
            schedule[k] = step;
        }
        if bwd[k].is_none() {
            let j = left
                .take(ys[k], within)
                .ok_or(ApproxError::MatchingExhausted(step))?;
            right.tree.remove(right.pos_of[k]);
            bwd[k] = Some(j);
            fwd[j] = Some(k);
            schedule[j] = step;
        }
    }
    let permutation: Vec<usize> = fwd.into_iter().map(|p| p.expect("total")).collect();
    let per_index_gap = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| (xs[i] - ys[j]).abs())
        .collect();
    Ok(MatchingWitness {
        permutation,
        per_index_gap,
        schedule,
        eps,
    })
}

/// What a diagonal entry stands for.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisTag<T> {
    /// The range of `E_{cell}` on the essential spectrum.
    Cell { lo: T, hi: T },
    /// An eigenvalue outside the essential spectrum.
    Eigenvalue,
    /// An isolated eigenvalue of infinite multiplicity.
    IsolatedOmega,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalEntry<T> {
    pub value: T,
    pub multiplicity: Multiplicity,
    pub tag: BasisTag<T>,
}

/// `Q = D + K` with `D` diagonal and `‖K‖ ≤ k_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct WvnbSplit<T> {
    pub diagonal: Vec<DiagonalEntry<T>>,
    pub k_bound: T,
}

impl<T: Scalar> WvnbSplit<T> {
    /// Indicators of the grid cells on every summand carrying mass there,
    /// with the cell center; unnormalised since norms are square roots.
    pub fn cell_vectors(&self, model: &std::sync::Arc<OperatorModel<T>>) -> Vec<(T, StepVector<T>)> {
        let mut out = Vec::new();
        for e in &self.diagonal {
            if let BasisTag::Cell { lo, hi } = &e.tag {
                let set = cell_set(lo, hi, self.is_last_cell(lo, hi));
                for (s, mu) in model.summands().iter().enumerate() {
                    if mu.measure_of(&set).is_zero() {
                        continue;
                    }
                    let mut b = StepVector::builder(model).density(s, lo.clone(), hi.clone(), real(T::one()));
                    for (x, _) in mu.atoms() {
                        if set.contains(x) {
                            b = b.atom(s, x.clone(), real(T::one()));
                        }
                    }
                    out.push((e.value.clone(), b.build().expect("valid cell vector")));
                }
            }
        }
        out
    }

    fn is_last_cell(&self, lo: &T, hi: &T) -> bool {
        !self.diagonal.iter().any(|e| matches!(&e.tag, BasisTag::Cell { lo: l, .. } if l == hi && l != lo))
    }
}

fn cell_set<T: Scalar>(lo: &T, hi: &T, closed: bool) -> IntervalSet<T> {
    if closed {
        IntervalSet::closed(lo.clone(), hi.clone())
    } else {
        IntervalSet::interval(Interval::finite(lo.clone(), hi.clone()).expect("non-empty cell"))
    }
}

/// Closed components `[a, b]` of the interval part of `σ_e`.
fn essential_components<T: Scalar>(m: &OperatorModel<T>) -> Vec<(T, T)> {
    let mut ivs: Vec<(T, T)> = m
        .summands()
        .iter()
        .flat_map(|mu| mu.pieces().into_iter().map(|(a, b, _)| (a, b)))
        .collect();
    ivs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("ordered"));
    let mut out: Vec<(T, T)> = Vec::new();
    for (a, b) in ivs {
        match out.last_mut() {
            Some((_, hi)) if a <= *hi => {
                if b > *hi {
                    *hi = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

/// Grid cells per component: at least `⌊len/2ε⌋ + 1` each, leftovers to
/// the widest component.
fn grid<T: Scalar>(comps: &[(T, T)], eps: &T, cells: usize) -> Result<Vec<usize>, usize> {
    let two_eps = eps.clone() + eps.clone();
    let mut counts: Vec<usize> = comps
        .iter()
        .map(|(a, b)| {
            let r = (b.clone() - a.clone()) / two_eps.clone();
            r.to_real().floor() as usize + 1
        })
        .collect();
    // correct float flooring against the exact ratio
    for ((a, b), n) in comps.iter().zip(counts.iter_mut()) {
        let len = b.clone() - a.clone();
        while T::from_int(*n as i64) * two_eps.clone() <= len {
            *n += 1;
        }
        while *n > 1 && T::from_int(*n as i64 - 1) * two_eps.clone() > len {
            *n -= 1;
        }
    }
    let required: usize = counts.iter().sum();
    if cells < required {
        return Err(required);
    }
    if let Some(widest) = (0..comps.len()).max_by(|&i, &j| {
        let li = comps[i].1.clone() - comps[i].0.clone();
        let lj = comps[j].1.clone() - comps[j].0.clone();
        li.partial_cmp(&lj).expect("ordered").then(j.cmp(&i))
    }) {
        counts[widest] += cells - required;
    }
    Ok(counts)
}

/// Diagonalisation up to `k_bound < ε` on a grid of `cells` cells covering
/// the interval part of the essential spectrum.
pub fn diagonal_compact_split<T: Scalar>(
    m: &OperatorModel<T>,
    eps: &T,
    cells: usize,
) -> Result<WvnbSplit<T>, ApproxError<T>> {
    assert!(eps.is_positive(), "ε must be positive");
    let report = compute_spectrum(m);
    let comps = essential_components(m);
    let counts = grid(&comps, eps, cells).map_err(|required| ApproxError::CellBudgetTooSmall { required })?;
    let mut diagonal = Vec::new();
    let mut k_bound = T::zero();
    for ((a, b), n) in comps.iter().zip(counts) {
        let width = (b.clone() - a.clone()) / T::from_int(n as i64);
        let half = width.clone() * T::half();
        for i in 0..n {
            let lo = a.clone() + width.clone() * T::from_int(i as i64);
            let hi = if i + 1 == n {
                b.clone()
            } else {
                lo.clone() + width.clone()
            };
            diagonal.push(DiagonalEntry {
                value: lo.clone() + half.clone(),
                multiplicity: Multiplicity::Omega,
                tag: BasisTag::Cell { lo, hi },
            });
        }
        k_bound = T::max_of(k_bound, half);
    }
    for (x, k) in &report.point_spectrum {
        let in_grid = comps.iter().any(|(a, b)| a <= x && x <= b);
        if in_grid {
            continue;
        }
        let tag = if k.is_omega() {
            BasisTag::IsolatedOmega
        } else {
            BasisTag::Eigenvalue
        };
        diagonal.push(DiagonalEntry {
            value: x.clone(),
            multiplicity: *k,
            tag,
        });
    }
    diagonal.sort_by(|x, y| x.value.partial_cmp(&y.value).expect("ordered"));
    Ok(WvnbSplit { diagonal, k_bound })
}

/// A permutation unitary between diagonal truncations, with its gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationWitness<T> {
    /// Diagonal of the first truncation, in basis order.
    pub left: Vec<T>,
    /// Diagonal of the second truncation, in basis order.
    pub right: Vec<T>,
    /// `permutation[i]`: basis vector of the second model receiving the
    /// `i`-th basis vector of the first. Rotations inside eigenspaces are
    /// the identity.
    pub permutation: Vec<usize>,
    pub matched_gap: f64,
    /// `(‖K₁‖, ‖K₂‖)` bounds of the two splits.
    pub split_bounds: (T, T),
    /// `‖Q₂ − U Q₁ U*‖` on the truncation.
    pub operator_gap: f64,
    /// `‖Q₁ − U* Q₂ U‖` on the truncation.
    pub reverse_gap: f64,
    /// `max_{k ≥ j} |ξ_k − ζ_{π(k)}|` for each `j`.
    pub tail_norms: Vec<f64>,
}

/// Diagonal of a truncation: discrete eigenvalues repeated by multiplicity,
/// then the infinite-multiplicity entries round-robin up to `n`.
fn truncated_diagonal<T: Scalar>(split: &WvnbSplit<T>, n: usize) -> Result<Vec<T>, ApproxError<T>> {
    let mut out = Vec::new();
    let mut omega = Vec::new();
    for e in &split.diagonal {
        match e.multiplicity {
            Multiplicity::Finite(k) => {
                for _ in 0..k {
                    out.push(e.value.clone());
                }
            }
            Multiplicity::Omega => omega.push(e.value.clone()),
        }
    }
    if omega.is_empty() {
        return Ok(out);
    }
    let required = out.len() + omega.len();
    if n < required {
        return Err(ApproxError::TruncationTooSmall { required });
    }
    let mut i = 0;
    while out.len() < n {
        out.push(omega[i % omega.len()].clone());
        i += 1;
    }
    Ok(out)
}

fn sorted_order<T: Scalar>(v: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("ordered").then(a.cmp(&b)));
    order
}

fn tail_norms(gaps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; gaps.len()];
    let mut m = 0.0f64;
    for i in (0..gaps.len()).rev() {
        m = m.max(gaps[i]);
        out[i] = m;
    }
    out
}

fn witness_from<T: Scalar>(
    left: Vec<T>,
    right: Vec<T>,
    pairing: Vec<usize>,
    bounds: (T, T),
) -> PerturbationWitness<T> {
    let gaps: Vec<f64> = pairing
        .iter()
        .enumerate()
        .map(|(i, &j)| (left[i].clone() - right[j].clone()).abs().to_real())
        .collect();
    let matched_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let operator_gap = matched_gap + bounds.0.to_real() + bounds.1.to_real();
    PerturbationWitness {
        left,
        right,
        permutation: pairing,
        matched_gap,
        split_bounds: bounds,
        operator_gap,
        reverse_gap: operator_gap,
        tail_norms: tail_norms(&gaps),
    }
}

/// The unitary of approximate equivalence between spectrally equivalent
/// models, at truncation `n`.
pub fn approx_unitary_equivalence<T: Scalar>(
    m1: &OperatorModel<T>,
    m2: &OperatorModel<T>,
    eps: &T,
    n: usize,
) -> Result<PerturbationWitness<T>, ApproxError<T>> {
    let report = spectrally_equivalent(m1, m2);
    if !report.equivalent {
        return Err(ApproxError::NotSpectrallyEquivalent(report));
    }
    let eps_s = eps.clone() / T::from_int(4);
    let cells = match grid(&essential_components(m1), &eps_s, 0) {
        Ok(_) => 0,
        Err(required) => required,
    };
    let s1 = diagonal_compact_split(m1, &eps_s, cells)?;
    let s2 = diagonal_compact_split(m2, &eps_s, cells)?;
    let left = truncated_diagonal(&s1, n)?;
    let mut right = truncated_diagonal(&s2, n)?;
    right.reverse();
    if left.len() != right.len() {
        return Err(ApproxError::LengthMismatch);
    }
    let o1 = sorted_order(&left);
    let o2 = sorted_order(&right);
    let xs: Vec<f64> = o1.iter().map(|&i| left[i].to_real()).collect();
    let ys: Vec<f64> = o2.iter().map(|&j| right[j].to_real()).collect();
    let w = match_sequences::<f64, T>(&xs, &ys, eps.to_real())?;
    let mut pairing = vec![0; left.len()];
    for (p, &q) in w.permutation.iter().enumerate() {
        pairing[o1[p]] = o2[q];
    }
    let witness = witness_from(left, right, pairing, (s1.k_bound, s2.k_bound));
    Ok(witness)
}

/// An ε-perturbation between two models found by sorted pairing of their
/// truncated diagonals; inconclusive when none is found.
pub fn find_perturbation<T: Scalar>(
    m1: &OperatorModel<T>,
    m2: &OperatorModel<T>,
    eps: &T,
    n: usize,
) -> Result<PerturbationWitness<T>, ApproxError<T>> {
    let eps_s = eps.clone() / T::from_int(8);
    let need = |m: &OperatorModel<T>| match grid(&essential_components(m), &eps_s, 0) {
        Ok(_) => 0,
        Err(required) => required,
    };
    let s1 = diagonal_compact_split(m1, &eps_s, need(m1))?;
    let s2 = diagonal_compact_split(m2, &eps_s, need(m2))?;
    let left = truncated_diagonal(&s1, n)?;
    let right = truncated_diagonal(&s2, n)?;
    if left.len() != right.len() {
        return Err(ApproxError::NoWitnessFound {
            operator_gap: f64::INFINITY,
        });
    }
    let o1 = sorted_order(&left);
    let o2 = sorted_order(&right);
    let mut pairing = vec![0; left.len()];
    for (&i, &j) in o1.iter().zip(&o2) {
        pairing[i] = j;
    }
    let witness = witness_from(left, right, pairing, (s1.k_bound, s2.k_bound));
    if witness.operator_gap < eps.to_real() {
        Ok(witness)
    } else {
        Err(ApproxError::NoWitnessFound {
            operator_gap: witness.operator_gap,
        })
    }
}
