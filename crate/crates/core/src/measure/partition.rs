//! Half-open intervals, finite unions of intervals and points, step layers,
//! and common refinements of partitions of the real line.
//!
//! The line is always cut into half-open cells `[a, b)`. Points live in a
//! separate layer: a piecewise-constant density never sees them, atoms and
//! point values only see them.

use std::cmp::Ordering;
use std::fmt;

use crate::scalar::{sort_dedup, Scalar};

/// A point of the extended real line.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub enum Ext<T> {
    NegInf,
    Fin(T),
    PosInf,
}

impl<T: Scalar> Ext<T> {
    pub fn finite(&self) -> Option<&T> {
        match self {
            Ext::Fin(x) => Some(x),
            _ => None,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Ext<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::Fin(x) => write!(f, "{x}"),
            Ext::PosInf => write!(f, "+inf"),
        }
    }
}

fn cmp<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("scalars must be totally ordered")
}

/// Half-open interval `[lo, hi)` with `lo < hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<T> {
    lo: Ext<T>,
    hi: Ext<T>,
}

impl<T: Scalar> Interval<T> {
    /// `[lo, hi)`; `None` unless `lo < hi` and the bounds are on the correct side.
    pub fn new(lo: Ext<T>, hi: Ext<T>) -> Option<Self> {
        if lo == Ext::PosInf || hi == Ext::NegInf || lo >= hi {
            return None;
        }
        Some(Interval { lo, hi })
    }

    /// Bounded `[a, b)`; `None` when `a >= b`.
    pub fn finite(a: T, b: T) -> Option<Self> {
        Self::new(Ext::Fin(a), Ext::Fin(b))
    }

    pub fn full() -> Self {
        Interval {
            lo: Ext::NegInf,
            hi: Ext::PosInf,
        }
    }

    pub fn lo(&self) -> &Ext<T> {
        &self.lo
    }

    pub fn hi(&self) -> &Ext<T> {
        &self.hi
    }

    pub fn is_bounded(&self) -> bool {
        matches!((&self.lo, &self.hi), (Ext::Fin(_), Ext::Fin(_)))
    }

    /// Finite endpoints, if the interval is bounded.
    pub fn bounds(&self) -> Option<(&T, &T)> {
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => Some((a, b)),
            _ => None,
        }
    }

    /// Lebesgue length; `None` for unbounded intervals.
    pub fn length(&self) -> Option<T> {
        self.bounds().map(|(a, b)| b.clone() - a.clone())
    }

    pub fn contains(&self, x: &T) -> bool {
        self.contains_ext(&Ext::Fin(x.clone()))
    }

    pub(crate) fn contains_ext(&self, x: &Ext<T>) -> bool {
        &self.lo <= x && x < &self.hi
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = if self.lo >= other.lo {
            self.lo.clone()
        } else {
            other.lo.clone()
        };
        let hi = if self.hi <= other.hi {
            self.hi.clone()
        } else {
            other.hi.clone()
        };
        Self::new(lo, hi)
    }

    /// Midpoint of a bounded interval; some interior point otherwise.
    pub fn sample(&self) -> T {
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => (a.clone() + b.clone()) * T::half(),
            (Ext::Fin(a), _) => a.clone() + T::one(),
            (_, Ext::Fin(b)) => b.clone() - T::one(),
            _ => T::zero(),
        }
    }
}

impl<T: fmt::Display> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// A finite union of half-open intervals and isolated points.
///
/// Canonical: intervals sorted, pairwise disjoint and non-adjacent; points
/// sorted, distinct, and outside every interval. Structural equality is set
/// equality.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet<T> {
    intervals: Vec<Interval<T>>,
    points: Vec<T>,
}

impl<T: Scalar> IntervalSet<T> {
    pub fn new(mut intervals: Vec<Interval<T>>, mut points: Vec<T>) -> Self {
        intervals.sort_by(|a, b| cmp(&a.lo, &b.lo));
        let mut merged: Vec<Interval<T>> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        sort_dedup(&mut points);
        points.retain(|p| !merged.iter().any(|iv| iv.contains(p)));
        IntervalSet {
            intervals: merged,
            points,
        }
    }

    pub fn empty() -> Self {
        IntervalSet {
            intervals: Vec::new(),
            points: Vec::new(),
        }
    }

    pub fn full() -> Self {
        IntervalSet {
            intervals: vec![Interval::full()],
            points: Vec::new(),
        }
    }

    pub fn interval(iv: Interval<T>) -> Self {
        Self::new(vec![iv], Vec::new())
    }

    pub fn point(p: T) -> Self {
        Self::new(Vec::new(), vec![p])
    }

    /// Closed interval `[a, b]` as `[a, b) ∪ {b}`.
    pub fn closed(a: T, b: T) -> Self {
        if a == b {
            return Self::point(a);
        }
        match Interval::finite(a, b.clone()) {
            Some(iv) => Self::new(vec![iv], vec![b]),
            None => Self::empty(),
        }
    }

    pub fn intervals(&self) -> &[Interval<T>] {
        &self.intervals
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
            || self.points.binary_search_by(|p| cmp(p, x)).is_ok()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut ivs = self.intervals.clone();
        ivs.extend(other.intervals.iter().cloned());
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        Self::new(ivs, pts)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut ivs = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                if let Some(c) = a.intersect(b) {
                    ivs.push(c);
                }
            }
        }
        let mut pts: Vec<T> = self
            .points
            .iter()
            .filter(|p| other.contains(p))
            .cloned()
            .collect();
        pts.extend(other.points.iter().filter(|p| self.contains(p)).cloned());
        Self::new(ivs, pts)
    }

    /// Some point in exactly one of the two sets, if they differ.
    pub fn difference_witness(&self, other: &Self) -> Option<T> {
        let mut probes = Vec::new();
        let mut breaks = Vec::new();
        self.collect_breaks(&mut breaks);
        other.collect_breaks(&mut breaks);
        self.collect_points(&mut breaks);
        other.collect_points(&mut breaks);
        sort_dedup(&mut breaks);
        for cell in Partition::from_breaks(breaks.clone(), Vec::new()).cells() {
            probes.push(cell.sample());
        }
        probes.extend(breaks);
        probes
            .into_iter()
            .find(|x| self.contains(x) != other.contains(x))
    }
}

impl<T: fmt::Display> fmt::Display for IntervalSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.intervals.iter().map(|iv| iv.to_string()).collect();
        parts.extend(self.points.iter().map(|p| format!("{{{p}}}")));
        if parts.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "{}", parts.join(" ∪ "))
        }
    }
}

/// A function of the line that is constant on finitely many half-open pieces
/// and equal to `background` elsewhere. Canonical: pieces sorted, disjoint,
/// never carrying the background value, adjacent equal pieces merged.
#[derive(Clone, Debug, PartialEq)]
pub struct StepLayer<T, V> {
    pieces: Vec<(Interval<T>, V)>,
    background: V,
}

impl<T: Scalar, V: Clone + PartialEq> StepLayer<T, V> {
    pub fn constant(background: V) -> Self {
        StepLayer {
            pieces: Vec::new(),
            background,
        }
    }

    /// Builds from cells that are sorted and pairwise disjoint.
    pub(crate) fn from_sorted_cells<I>(cells: I, background: V) -> Self
    where
        I: IntoIterator<Item = (Interval<T>, V)>,
    {
        let mut pieces: Vec<(Interval<T>, V)> = Vec::new();
        for (iv, v) in cells {
            if v == background {
                continue;
            }
            if let Some((last, lv)) = pieces.last_mut() {
                debug_assert!(last.hi <= iv.lo, "cells must be sorted and disjoint");
                if last.hi == iv.lo && *lv == v {
                    last.hi = iv.hi;
                    continue;
                }
            }
            pieces.push((iv, v));
        }
        StepLayer { pieces, background }
    }

    pub fn pieces(&self) -> &[(Interval<T>, V)] {
        &self.pieces
    }

    pub fn background(&self) -> &V {
        &self.background
    }

    pub fn value_at(&self, x: &T) -> &V {
        self.value_at_ext(&Ext::Fin(x.clone()))
    }

    pub(crate) fn value_at_ext(&self, x: &Ext<T>) -> &V {
        // last piece with lo <= x
        let idx = self.pieces.partition_point(|(iv, _)| &iv.lo <= x);
        if idx > 0 {
            let (iv, v) = &self.pieces[idx - 1];
            if x < &iv.hi {
                return v;
            }
        }
        &self.background
    }

    /// Value on a cell that lies inside a single piece or gap.
    pub(crate) fn value_on(&self, cell: &Interval<T>) -> &V {
        self.value_at_ext(&cell.lo)
    }

    pub(crate) fn collect_breaks(&self, out: &mut Vec<T>) {
        for (iv, _) in &self.pieces {
            if let Ext::Fin(a) = &iv.lo {
                out.push(a.clone());
            }
            if let Ext::Fin(b) = &iv.hi {
                out.push(b.clone());
            }
        }
    }

    pub fn map<W: Clone + PartialEq>(&self, f: impl Fn(&V) -> W) -> StepLayer<T, W> {
        let background = f(&self.background);
        StepLayer::from_sorted_cells(
            self.pieces.iter().map(|(iv, v)| (iv.clone(), f(v))),
            background,
        )
    }

    /// Pointwise combination over the common refinement.
    pub fn zip<W: Clone + PartialEq, R: Clone + PartialEq>(
        &self,
        other: &StepLayer<T, W>,
        f: impl Fn(&V, &W) -> R,
    ) -> StepLayer<T, R> {
        let mut breaks = Vec::new();
        self.collect_breaks(&mut breaks);
        other.collect_breaks(&mut breaks);
        let part = Partition::from_breaks(breaks, Vec::new());
        let background = f(&self.background, &other.background);
        StepLayer::from_sorted_cells(
            part.cells().into_iter().map(|c| {
                let v = f(self.value_on(&c), other.value_on(&c));
                (c, v)
            }),
            background,
        )
    }
}

/// A partition of the line: breakpoints cut the continuous layer into
/// half-open cells, points form the atomic layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T> {
    breaks: Vec<T>,
    points: Vec<T>,
}

impl<T: Scalar> Partition<T> {
    pub fn from_breaks(mut breaks: Vec<T>, mut points: Vec<T>) -> Self {
        sort_dedup(&mut breaks);
        sort_dedup(&mut points);
        Partition { breaks, points }
    }

    pub fn breaks(&self) -> &[T] {
        &self.breaks
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// All cells, including the two unbounded rays, in order.
    pub fn cells(&self) -> Vec<Interval<T>> {
        let mut out = Vec::with_capacity(self.breaks.len() + 1);
        let mut lo = Ext::NegInf;
        for b in &self.breaks {
            let hi = Ext::Fin(b.clone());
            out.push(Interval {
                lo: lo.clone(),
                hi: hi.clone(),
            });
            lo = hi;
        }
        out.push(Interval {
            lo,
            hi: Ext::PosInf,
        });
        out
    }

    /// Bounded cells only.
    pub fn bounded_cells(&self) -> Vec<Interval<T>> {
        self.breaks
            .windows(2)
            .map(|w| Interval {
                lo: Ext::Fin(w[0].clone()),
                hi: Ext::Fin(w[1].clone()),
            })
            .collect()
    }
}

/// Anything that is constant on the cells of some partition.
pub trait Partitioned<T> {
    fn collect_breaks(&self, out: &mut Vec<T>);
    fn collect_points(&self, out: &mut Vec<T>);
}

impl<T: Scalar> Partitioned<T> for IntervalSet<T> {
    fn collect_breaks(&self, out: &mut Vec<T>) {
        for iv in &self.intervals {
            if let Ext::Fin(a) = &iv.lo {
                out.push(a.clone());
            }
            if let Ext::Fin(b) = &iv.hi {
                out.push(b.clone());
            }
        }
    }

    fn collect_points(&self, out: &mut Vec<T>) {
        out.extend(self.points.iter().cloned());
    }
}

/// Coarsest partition on which every input is constant. Points of the atomic
/// layer also cut the continuous layer.
pub fn common_refinement<T: Scalar>(items: &[&dyn Partitioned<T>]) -> Partition<T> {
    let mut breaks = Vec::new();
    let mut points = Vec::new();
    for item in items {
        item.collect_breaks(&mut breaks);
        item.collect_points(&mut points);
    }
    breaks.extend(points.iter().cloned());
    Partition::from_breaks(breaks, points)
}

/// Sum of possibly overlapping bounded pieces `(a, b, value)` with `a < b`.
pub(crate) fn layer_from_pieces<T: Scalar, V: Clone + PartialEq>(
    pieces: &[(T, T, V)],
    zero: V,
    add: impl Fn(&V, &V) -> V,
) -> StepLayer<T, V> {
    let mut breaks = Vec::with_capacity(2 * pieces.len());
    for (a, b, _) in pieces {
        breaks.push(a.clone());
        breaks.push(b.clone());
    }
    let part = Partition::from_breaks(breaks, Vec::new());
    let cells = part.bounded_cells().into_iter().map(|c| {
        let x = c.sample();
        let v = pieces
            .iter()
            .filter(|(a, b, _)| a <= &x && &x < b)
            .fold(zero.clone(), |acc, (_, _, v)| add(&acc, v));
        (c, v)
    });
    StepLayer::from_sorted_cells(cells, zero.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Scalar::ratio(n, d)
    }

    fn iv(a: Rational, b: Rational) -> Interval<Rational> {
        Interval::finite(a, b).unwrap()
    }

    #[test]
    fn interval_set_merges_adjacent_and_absorbs_points() {
        let s = IntervalSet::new(
            vec![iv(q(1, 1), q(2, 1)), iv(q(0, 1), q(1, 1))],
            vec![q(1, 2), q(2, 1), q(3, 1)],
        );
        assert_eq!(s.intervals(), &[iv(q(0, 1), q(2, 1))]);
        assert_eq!(s.points(), &[q(2, 1), q(3, 1)]);
        assert!(s.contains(&q(0, 1)));
        assert!(s.contains(&q(2, 1)));
        assert!(!s.contains(&q(5, 2)));
    }

    #[test]
    fn closed_intervals_union_to_closed_interval() {
        let s = IntervalSet::closed(q(0, 1), q(1, 1)).union(&IntervalSet::closed(q(1, 1), q(2, 1)));
        assert_eq!(s, IntervalSet::closed(q(0, 1), q(2, 1)));
    }

    #[test]
    fn intersection_of_half_open_sets() {
        let a = IntervalSet::interval(iv(q(0, 1), q(1, 1)));
        let b = IntervalSet::new(vec![iv(q(1, 2), q(3, 2))], vec![q(0, 1)]);
        let c = a.intersection(&b);
        assert_eq!(c, IntervalSet::new(vec![iv(q(1, 2), q(1, 1))], vec![q(0, 1)]));
        assert!(a.intersection(&IntervalSet::empty()).is_empty());
        assert_eq!(a.intersection(&IntervalSet::full()), a);
    }

    #[test]
    fn witness_separates_unequal_sets() {
        let a = IntervalSet::closed(q(0, 1), q(1, 1));
        let b = IntervalSet::interval(iv(q(0, 1), q(1, 1)));
        let w = a.difference_witness(&b).unwrap();
        assert_eq!(w, q(1, 1));
        assert!(a.difference_witness(&a).is_none());
    }

    #[test]
    fn refinement_of_two_intervals() {
        let a = IntervalSet::interval(iv(q(0, 1), q(1, 1)));
        let b = IntervalSet::interval(iv(q(1, 2), q(3, 2)));
        let p = common_refinement(&[&a, &b]);
        assert_eq!(
            p.bounded_cells(),
            vec![iv(q(0, 1), q(1, 2)), iv(q(1, 2), q(1, 1)), iv(q(1, 1), q(3, 2))]
        );
        let single = common_refinement(&[&a]);
        assert_eq!(single.bounded_cells(), vec![iv(q(0, 1), q(1, 1))]);
    }

    #[test]
    fn refinement_isolates_atoms() {
        let a = IntervalSet::interval(iv(q(0, 1), q(1, 1)));
        let atom = IntervalSet::point(q(1, 2));
        let p = common_refinement(&[&a, &atom]);
        assert_eq!(
            p.bounded_cells(),
            vec![iv(q(0, 1), q(1, 2)), iv(q(1, 2), q(1, 1))]
        );
        assert_eq!(p.points(), &[q(1, 2)]);
    }

    #[test]
    fn step_layer_merges_and_evaluates() {
        let layer = StepLayer::from_sorted_cells(
            vec![
                (iv(q(0, 1), q(1, 1)), 2),
                (iv(q(1, 1), q(2, 1)), 2),
                (iv(q(2, 1), q(3, 1)), 0),
            ],
            0,
        );
        assert_eq!(layer.pieces().len(), 1);
        assert_eq!(*layer.value_at(&q(3, 2)), 2);
        assert_eq!(*layer.value_at(&q(2, 1)), 0);
        assert_eq!(*layer.value_at(&q(-1, 1)), 0);
        let doubled = layer.zip(&layer, |a, b| a + b);
        assert_eq!(*doubled.value_at(&q(1, 2)), 4);
    }
}
