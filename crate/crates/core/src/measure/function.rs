use num_traits::{One, Zero};

use super::partition::{IntervalSet, Interval, Partition, Partitioned, StepLayer};
use super::MeasureError;
use crate::scalar::{sort_dedup, Scalar};

/// A bounded Borel step function: constant on finitely many half-open
/// pieces, overridden at finitely many points, `default` elsewhere.
///
/// Canonical form drops pieces equal to the default and point values equal
/// to the surrounding piece value, so equal functions compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseFunction<T, V> {
    layer: StepLayer<T, V>,
    points: Vec<(T, V)>,
}

impl<T: Scalar, V: Clone + PartialEq> PiecewiseFunction<T, V> {
    /// Pieces must be pairwise disjoint; point locations must be distinct.
    pub fn new(
        mut pieces: Vec<(Interval<T>, V)>,
        points: Vec<(T, V)>,
        default: V,
    ) -> Result<Self, MeasureError> {
        pieces.sort_by(|a, b| a.0.lo().partial_cmp(b.0.lo()).expect("ordered"));
        for w in pieces.windows(2) {
            if w[1].0.lo() < w[0].0.hi() {
                return Err(MeasureError::Overlap);
            }
        }
        let mut locs: Vec<T> = points.iter().map(|(p, _)| p.clone()).collect();
        let n = locs.len();
        sort_dedup(&mut locs);
        if locs.len() != n {
            return Err(MeasureError::Overlap);
        }
        let layer = StepLayer::from_sorted_cells(pieces, default);
        Ok(Self::from_parts(layer, points))
    }

    pub(crate) fn from_parts(layer: StepLayer<T, V>, mut points: Vec<(T, V)>) -> Self {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered"));
        points.retain(|(p, v)| layer.value_at(p) != v);
        PiecewiseFunction { layer, points }
    }

    pub fn constant(value: V) -> Self {
        PiecewiseFunction {
            layer: StepLayer::constant(value),
            points: Vec::new(),
        }
    }

    pub fn pieces(&self) -> &[(Interval<T>, V)] {
        self.layer.pieces()
    }

    pub fn point_values(&self) -> &[(T, V)] {
        &self.points
    }

    pub fn default_value(&self) -> &V {
        self.layer.background()
    }

    pub fn layer(&self) -> &StepLayer<T, V> {
        &self.layer
    }

    /// Value at `x`, honouring point overrides.
    pub fn value_at(&self, x: &T) -> V {
        match self
            .points
            .binary_search_by(|(p, _)| p.partial_cmp(x).expect("ordered"))
        {
            Ok(i) => self.points[i].1.clone(),
            Err(_) => self.layer.value_at(x).clone(),
        }
    }

    pub fn map<W: Clone + PartialEq>(&self, f: impl Fn(&V) -> W) -> PiecewiseFunction<T, W> {
        let layer = self.layer.map(&f);
        let points = self.points.iter().map(|(p, v)| (p.clone(), f(v))).collect();
        PiecewiseFunction::from_parts(layer, points)
    }

    /// Pointwise combination.
    pub fn zip<W: Clone + PartialEq, R: Clone + PartialEq>(
        &self,
        other: &PiecewiseFunction<T, W>,
        f: impl Fn(&V, &W) -> R,
    ) -> PiecewiseFunction<T, R> {
        let layer = self.layer.zip(&other.layer, &f);
        let mut locs: Vec<T> = self.points.iter().map(|(p, _)| p.clone()).collect();
        locs.extend(other.points.iter().map(|(p, _)| p.clone()));
        sort_dedup(&mut locs);
        let points = locs
            .into_iter()
            .map(|p| {
                let v = f(&self.value_at(&p), &other.value_at(&p));
                (p, v)
            })
            .collect();
        PiecewiseFunction::from_parts(layer, points)
    }

    /// Every value the function takes.
    pub fn values(&self) -> impl Iterator<Item = &V> {
        std::iter::once(self.layer.background())
            .chain(self.layer.pieces().iter().map(|(_, v)| v))
            .chain(self.points.iter().map(|(_, v)| v))
    }
}

impl<T: Scalar, V: Clone + PartialEq + Zero + One> PiecewiseFunction<T, V> {
    /// Characteristic function of a set.
    pub fn indicator(set: &IntervalSet<T>) -> Self {
        let layer = StepLayer::from_sorted_cells(
            set.intervals().iter().map(|iv| (iv.clone(), V::one())),
            V::zero(),
        );
        let points = set.points().iter().map(|p| (p.clone(), V::one())).collect();
        Self::from_parts(layer, points)
    }
}

impl<T: Scalar, V: Clone + PartialEq> Partitioned<T> for PiecewiseFunction<T, V> {
    fn collect_breaks(&self, out: &mut Vec<T>) {
        self.layer.collect_breaks(out);
    }

    fn collect_points(&self, out: &mut Vec<T>) {
        out.extend(self.points.iter().map(|(p, _)| p.clone()));
    }
}

/// The partition a function is constant on.
pub fn partition_of<T: Scalar, V: Clone + PartialEq>(f: &PiecewiseFunction<T, V>) -> Partition<T> {
    let mut b = Vec::new();
    let mut p = Vec::new();
    f.collect_breaks(&mut b);
    f.collect_points(&mut p);
    Partition::from_breaks(b, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Scalar::ratio(n, d)
    }

    #[test]
    fn point_values_override_pieces() {
        let f = PiecewiseFunction::new(
            vec![(Interval::finite(q(0, 1), q(1, 1)).unwrap(), q(2, 1))],
            vec![(q(1, 2), q(5, 1)), (q(1, 4), q(2, 1))],
            q(0, 1),
        )
        .unwrap();
        assert_eq!(f.value_at(&q(1, 2)), q(5, 1));
        assert_eq!(f.value_at(&q(1, 3)), q(2, 1));
        assert_eq!(f.value_at(&q(3, 1)), q(0, 1));
        // the redundant override at 1/4 is dropped
        assert_eq!(f.point_values().len(), 1);
    }

    #[test]
    fn overlapping_pieces_rejected() {
        let r = PiecewiseFunction::new(
            vec![
                (Interval::finite(q(0, 1), q(1, 1)).unwrap(), q(1, 1)),
                (Interval::finite(q(1, 2), q(2, 1)).unwrap(), q(1, 1)),
            ],
            vec![],
            q(0, 1),
        );
        assert_eq!(r, Err(MeasureError::Overlap));
    }

    #[test]
    fn indicator_product_is_intersection() {
        let a = IntervalSet::interval(Interval::finite(q(0, 1), q(1, 1)).unwrap());
        let b = IntervalSet::new(
            vec![Interval::finite(q(1, 2), q(2, 1)).unwrap()],
            vec![q(0, 1)],
        );
        let fa = PiecewiseFunction::<Rational, Rational>::indicator(&a);
        let fb = PiecewiseFunction::<Rational, Rational>::indicator(&b);
        let prod = fa.zip(&fb, |x, y| x * y);
        assert_eq!(prod, PiecewiseFunction::indicator(&a.intersection(&b)));
    }
}
