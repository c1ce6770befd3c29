//! Point, essential, discrete and full spectrum of a finitely presented
//! model, Weyl dimension counts, and spectral equivalence.

use crate::measure::IntervalSet;
use crate::model::{Multiplicity, OperatorModel};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport<T> {
    /// Eigenvalues with eigenspace dimension, sorted.
    pub point_spectrum: Vec<(T, Multiplicity)>,
    pub essential_spectrum: IntervalSet<T>,
    /// Isolated eigenvalues of finite multiplicity, sorted.
    pub discrete_spectrum: Vec<(T, u64)>,
    pub full_spectrum: IntervalSet<T>,
}

impl<T: Scalar> SpectrumReport<T> {
    pub fn multiplicity_at(&self, lambda: &T) -> Option<Multiplicity> {
        self.point_spectrum
            .iter()
            .find(|(x, _)| x == lambda)
            .map(|(_, m)| *m)
    }

    pub fn is_discrete(&self, lambda: &T) -> bool {
        self.discrete_spectrum.iter().any(|(x, _)| x == lambda)
    }

    pub fn discrete_points(&self) -> Vec<T> {
        self.discrete_spectrum.iter().map(|(x, _)| x.clone()).collect()
    }
}

/// Eigenvalues with multiplicity: slot dimensions plus one per summand
/// carrying an atom at the point.
pub fn point_spectrum<T: Scalar>(m: &OperatorModel<T>) -> Vec<(T, Multiplicity)> {
    let mut out: Vec<(T, Multiplicity)> = m
        .slots()
        .iter()
        .map(|s| (s.eigenvalue.clone(), s.multiplicity))
        .collect();
    for mu in m.summands() {
        for (x, _) in mu.atoms() {
            out.push((x.clone(), Multiplicity::Finite(1)));
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered"));
    let mut merged: Vec<(T, Multiplicity)> = Vec::with_capacity(out.len());
    for (x, k) in out {
        match merged.last_mut() {
            Some((y, acc)) if *y == x => *acc = acc.plus(k),
            _ => merged.push((x, k)),
        }
    }
    merged
}

pub fn compute_spectrum<T: Scalar>(m: &OperatorModel<T>) -> SpectrumReport<T> {
    let point_spectrum = point_spectrum(m);
    let mut intervals = Vec::new();
    let mut ends = Vec::new();
    for mu in m.summands() {
        for (iv, _) in mu.density().pieces() {
            intervals.push(iv.clone());
            ends.push(iv.hi().finite().expect("bounded").clone());
        }
    }
    ends.extend(
        point_spectrum
            .iter()
            .filter(|(_, k)| k.is_omega())
            .map(|(x, _)| x.clone()),
    );
    let essential_spectrum = IntervalSet::new(intervals, ends);
    let full_spectrum = essential_spectrum.union(&IntervalSet::new(
        Vec::new(),
        point_spectrum.iter().map(|(x, _)| x.clone()).collect(),
    ));
    let discrete_spectrum = point_spectrum
        .iter()
        .filter(|(x, _)| !essential_spectrum.contains(x))
        .filter_map(|(x, k)| k.finite().map(|n| (x.clone(), n)))
        .collect();
    SpectrumReport {
        point_spectrum,
        essential_spectrum,
        discrete_spectrum,
        full_spectrum,
    }
}

/// `dim E_{(λ−ε, λ+ε)} H`; `Finite(0)` for an empty window.
pub fn weyl_dimension<T: Scalar>(m: &OperatorModel<T>, lambda: &T, eps: &T) -> Multiplicity {
    assert!(eps.is_positive(), "window radius must be positive");
    let lo = lambda.clone() - eps.clone();
    let hi = lambda.clone() + eps.clone();
    let dense = m.summands().iter().any(|mu| {
        mu.pieces()
            .iter()
            .any(|(a, b, _)| *a < hi && *b > lo)
    });
    if dense {
        return Multiplicity::Omega;
    }
    point_spectrum(m)
        .into_iter()
        .filter(|(x, _)| *x > lo && *x < hi)
        .fold(Multiplicity::Finite(0), |acc, (_, k)| acc.plus(k))
}

#[derive(Clone, Debug, PartialEq)]
pub enum EquivalenceViolation<T> {
    /// A point in exactly one of the two spectra.
    Spectrum { witness: T },
    /// A point in exactly one of the two essential spectra.
    Essential { witness: T },
    /// Eigenspace dimensions differ at a point outside the essential spectrum.
    Multiplicity {
        eigenvalue: T,
        left: Multiplicity,
        right: Multiplicity,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport<T> {
    pub equivalent: bool,
    pub violations: Vec<EquivalenceViolation<T>>,
}

pub fn spectrally_equivalent<T: Scalar>(
    m1: &OperatorModel<T>,
    m2: &OperatorModel<T>,
) -> EquivalenceReport<T> {
    let s1 = compute_spectrum(m1);
    let s2 = compute_spectrum(m2);
    let mut violations = Vec::new();
    if let Some(witness) = s1.full_spectrum.difference_witness(&s2.full_spectrum) {
        violations.push(EquivalenceViolation::Spectrum { witness });
    }
    if let Some(witness) = s1.essential_spectrum.difference_witness(&s2.essential_spectrum) {
        violations.push(EquivalenceViolation::Essential { witness });
    }
    let none = Multiplicity::Finite(0);
    let mut lambdas: Vec<T> = s1.discrete_points();
    lambdas.extend(s2.discrete_points());
    crate::scalar::sort_dedup(&mut lambdas);
    for lambda in lambdas {
        if s1.essential_spectrum.contains(&lambda) || s2.essential_spectrum.contains(&lambda) {
            continue;
        }
        let left = s1.multiplicity_at(&lambda).unwrap_or(none);
        let right = s2.multiplicity_at(&lambda).unwrap_or(none);
        if left != right {
            violations.push(EquivalenceViolation::Multiplicity {
                eigenvalue: lambda,
                left,
                right,
            });
        }
    }
    EquivalenceReport {
        equivalent: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::BorelMeasure;
    use crate::model::EigenSlot;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Scalar::ratio(n, d)
    }

    fn unif(a: Rational, b: Rational) -> BorelMeasure<Rational> {
        BorelMeasure::uniform(a, b, q(1, 1)).unwrap()
    }

    #[test]
    fn slot_plus_interval() {
        let m = OperatorModel::new(
            vec![EigenSlot::new(q(1, 1), Multiplicity::Finite(1))],
            vec![unif(q(2, 1), q(3, 1))],
        )
        .unwrap();
        let s = compute_spectrum(&m);
        assert_eq!(s.point_spectrum, vec![(q(1, 1), Multiplicity::Finite(1))]);
        assert_eq!(s.essential_spectrum, IntervalSet::closed(q(2, 1), q(3, 1)));
        assert_eq!(s.discrete_spectrum, vec![(q(1, 1), 1)]);
        assert!(s.full_spectrum.contains(&q(1, 1)) && s.full_spectrum.contains(&q(3, 1)));
    }

    #[test]
    fn omega_slot_is_essential() {
        let m = OperatorModel::new(vec![EigenSlot::new(q(0, 1), Multiplicity::Omega)], vec![])
            .unwrap();
        let s = compute_spectrum(&m);
        assert!(s.essential_spectrum.contains(&q(0, 1)));
        assert!(s.discrete_spectrum.is_empty());
    }

    #[test]
    fn embedded_atom() {
        let mu = BorelMeasure::new(vec![(q(5, 2), q(1, 1))], vec![(q(2, 1), q(3, 1), q(1, 1))])
            .unwrap();
        let m = OperatorModel::new(vec![], vec![mu]).unwrap();
        let s = compute_spectrum(&m);
        assert_eq!(s.point_spectrum, vec![(q(5, 2), Multiplicity::Finite(1))]);
        assert!(s.essential_spectrum.contains(&q(5, 2)));
        assert!(s.discrete_spectrum.is_empty());
    }

    #[test]
    fn weyl_examples() {
        let m = OperatorModel::new(vec![], vec![unif(q(0, 1), q(1, 1))]).unwrap();
        assert_eq!(weyl_dimension(&m, &q(1, 2), &q(1, 1000)), Multiplicity::Omega);
        let s = OperatorModel::new(vec![EigenSlot::new(q(3, 1), Multiplicity::Finite(2))], vec![])
            .unwrap();
        assert_eq!(weyl_dimension(&s, &q(3, 1), &q(1, 1)), Multiplicity::Finite(2));
        assert_eq!(weyl_dimension(&s, &q(0, 1), &q(1, 1)), Multiplicity::Finite(0));
        // open window: the endpoint 1 of a density piece is not reached from 2 with radius 1
        assert_eq!(weyl_dimension(&m, &q(2, 1), &q(1, 1)), Multiplicity::Finite(0));
    }

    #[test]
    fn equivalence_examples() {
        let a = OperatorModel::new(vec![], vec![unif(q(0, 1), q(1, 1)), unif(q(2, 1), q(3, 1))])
            .unwrap();
        let b = OperatorModel::new(vec![], vec![unif(q(2, 1), q(3, 1)), unif(q(0, 1), q(1, 1))])
            .unwrap();
        assert!(spectrally_equivalent(&a, &b).equivalent);

        let one = |k| {
            OperatorModel::new(
                vec![EigenSlot::new(q(1, 1), Multiplicity::Finite(k))],
                vec![unif(q(2, 1), q(3, 1))],
            )
            .unwrap()
        };
        let r = spectrally_equivalent(&one(1), &one(2));
        assert!(!r.equivalent);
        assert_eq!(
            r.violations,
            vec![EquivalenceViolation::Multiplicity {
                eigenvalue: q(1, 1),
                left: Multiplicity::Finite(1),
                right: Multiplicity::Finite(2),
            }]
        );

        let single = OperatorModel::new(vec![], vec![unif(q(0, 1), q(1, 1))]).unwrap();
        let double =
            OperatorModel::new(vec![], vec![unif(q(0, 1), q(1, 1)), unif(q(0, 1), q(1, 1))])
                .unwrap();
        assert!(spectrally_equivalent(&single, &double).equivalent);
    }

    #[test]
    fn essential_mismatch_reports_witness() {
        let a = OperatorModel::new(vec![EigenSlot::new(q(0, 1), Multiplicity::Omega)], vec![])
            .unwrap();
        let b = OperatorModel::new(vec![EigenSlot::new(q(0, 1), Multiplicity::Finite(1))], vec![])
            .unwrap();
        let r = spectrally_equivalent(&a, &b);
        assert_eq!(
            r.violations,
            vec![EquivalenceViolation::Essential { witness: q(0, 1) }]
        );
    }
}
