use std::collections::BTreeMap;

use num_traits::Zero;

use super::vector::{StepVector, SummandPart};
use super::{same_model, ModelError};
use crate::measure::{BorelMeasure, IntervalSet, PiecewiseFunction, StepLayer};
use crate::scalar::{abs_sq, mul_conj, Cx, Scalar};

fn check<T: Scalar>(v: &StepVector<T>, w: &StepVector<T>) -> Result<(), ModelError> {
    if same_model(&v.model, &w.model) {
        Ok(())
    } else {
        Err(ModelError::ModelMismatch)
    }
}

/// `⟨v, w⟩`, linear in `v` and conjugate-linear in `w`.
pub fn inner_product<T: Scalar>(v: &StepVector<T>, w: &StepVector<T>) -> Result<Cx<T>, ModelError> {
    check(v, w)?;
    let mut acc = Cx::zero();
    for (k, a) in &v.slots {
        if let Some(b) = w.slots.get(k) {
            acc = acc + mul_conj(a, b);
        }
    }
    for ((p, r), mu) in v.parts.iter().zip(&w.parts).zip(v.model.summands()) {
        for (x, a) in &p.atoms {
            let b = r.atom_value(x);
            if !b.is_zero() {
                acc = acc + mul_conj(a, &b).scale(mu.mass_at(x));
            }
        }
        let prod = p.density.zip(&r.density, mul_conj);
        let weighted = prod.zip(mu.density(), |z, h| z.clone().scale(h.clone()));
        for (iv, z) in weighted.pieces() {
            acc = acc + z.clone().scale(iv.length().expect("bounded"));
        }
    }
    Ok(acc)
}

/// `‖v‖²`.
pub fn norm_sq<T: Scalar>(v: &StepVector<T>) -> T {
    inner_product(v, v).expect("same model").re
}

/// `f(Q) v` for a bounded step function `f`.
pub fn apply_borel<T: Scalar>(f: &PiecewiseFunction<T, Cx<T>>, v: &StepVector<T>) -> StepVector<T> {
    let model = &v.model;
    let slots: BTreeMap<(usize, u64), Cx<T>> = v
        .slots
        .iter()
        .map(|(&(s, c), z)| ((s, c), z.clone() * f.value_at(&model.slots()[s].eigenvalue)))
        .collect();
    let parts = v
        .parts
        .iter()
        .map(|p| SummandPart {
            density: p.density.zip(f.layer(), |z, y| z.clone() * y.clone()),
            atoms: p
                .atoms
                .iter()
                .map(|(x, z)| (x.clone(), z.clone() * f.value_at(x)))
                .collect(),
        })
        .collect();
    StepVector::from_raw(model.clone(), slots, parts)
}

/// `E_Ω v = χ_Ω(Q) v`.
pub fn spectral_projection<T: Scalar>(omega: &IntervalSet<T>, v: &StepVector<T>) -> StepVector<T> {
    apply_borel(&PiecewiseFunction::indicator(omega), v)
}

/// `μ_v(Ω) = ⟨E_Ω v, v⟩`.
pub fn spectral_measure<T: Scalar>(v: &StepVector<T>) -> BorelMeasure<T> {
    let model = &v.model;
    let mut atoms: Vec<(T, T)> = v
        .slots
        .iter()
        .map(|(&(s, _), z)| (model.slots()[s].eigenvalue.clone(), abs_sq(z)))
        .collect();
    let mut density: StepLayer<T, T> = StepLayer::constant(T::zero());
    for (p, mu) in v.parts.iter().zip(model.summands()) {
        atoms.extend(
            p.atoms
                .iter()
                .map(|(x, z)| (x.clone(), abs_sq(z) * mu.mass_at(x))),
        );
        let part = p.density.zip(mu.density(), |z, h| abs_sq(z) * h.clone());
        density = density.zip(&part, |a, b| a.clone() + b.clone());
    }
    BorelMeasure::new(atoms, Vec::new())
        .expect("masses are non-negative")
        .add(&BorelMeasure::from_parts(Vec::new(), density))
}

/// `Γ_Q(v, w)` with an absolute error bound on `value`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphDistance {
    pub value: f64,
    pub error_bound: f64,
    /// `(v, w)` lies on the graph of `Q`; decided exactly.
    pub on_graph: bool,
}

/// `|x a − b|² / (1 + x²)`, the squared distance of `(a, b)` to the line
/// `{(u, x u)}`.
fn pointwise_gap<T: Scalar>(x: &T, a: &Cx<T>, b: &Cx<T>) -> T {
    let d = a.clone().scale(x.clone()) - b.clone();
    abs_sq(&d) / (T::one() + x.clone() * x.clone())
}

/// Distance from `(v, w)` to the graph of `Q`.
pub fn graph_distance<T: Scalar>(
    v: &StepVector<T>,
    w: &StepVector<T>,
) -> Result<GraphDistance, ModelError> {
    check(v, w)?;
    let model = &v.model;
    let zero = Cx::zero();
    let mut exact = T::zero();
    let mut keys: Vec<&(usize, u64)> = v.slots.keys().chain(w.slots.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let a = v.slots.get(k).unwrap_or(&zero);
        let b = w.slots.get(k).unwrap_or(&zero);
        exact = exact + pointwise_gap(&model.slots()[k.0].eigenvalue, a, b);
    }
    let mut float = 0.0f64;
    let mut err = 0.0f64;
    let mut dense_terms = false;
    for ((p, r), mu) in v.parts.iter().zip(&w.parts).zip(model.summands()) {
        for (x, m) in mu.atoms() {
            exact = exact + pointwise_gap(x, &p.atom_value(x), &r.atom_value(x)) * m.clone();
        }
        let pair = p.density.zip(&r.density, |a, b| (a.clone(), b.clone()));
        let cells = pair.zip(mu.density(), |ab, h| (ab.0.clone(), ab.1.clone(), h.clone()));
        for (iv, (a, b, h)) in cells.pieces() {
            if a.is_zero() && b.is_zero() {
                continue;
            }
            if h.is_zero() {
                continue;
            }
            dense_terms = true;
            let (lo, hi) = iv.bounds().expect("bounded");
            let (lo, hi, h) = (lo.to_real(), hi.to_real(), h.to_real());
            let aa = abs_sq(a).to_real();
            let bb = abs_sq(b).to_real();
            let ab = mul_conj(a, b).re.to_real();
            let datan = hi.atan() - lo.atan();
            let dlog = (hi * hi).ln_1p() - (lo * lo).ln_1p();
            let term = aa * ((hi - lo) - datan) - ab * dlog + bb * datan;
            float += h * term.max(0.0);
            let size = aa * ((hi - lo) + datan.abs()) + ab.abs() * dlog.abs() + bb * datan.abs();
            err += 32.0 * f64::EPSILON * h * size;
        }
    }
    let on_graph = exact.is_zero() && !dense_terms;
    if on_graph {
        return Ok(GraphDistance {
            value: 0.0,
            error_bound: 0.0,
            on_graph,
        });
    }
    let sq = exact.to_real() + float;
    err += 4.0 * f64::EPSILON * sq;
    let value = sq.sqrt();
    let error_bound = if value > 0.0 {
        err / value
    } else {
        err.sqrt()
    };
    Ok(GraphDistance {
        value,
        error_bound,
        on_graph,
    })
}

fn pow<T: Scalar>(x: &T, k: u32) -> T {
    (0..k).fold(T::one(), |acc, _| acc * x.clone())
}

/// `∫ x^k dμ_v` for `k ≤ 4`.
pub fn operator_moment<T: Scalar>(v: &StepVector<T>, k: u32) -> Result<T, ModelError> {
    if k > 4 {
        return Err(ModelError::MomentOrder(k));
    }
    let mu = spectral_measure(v);
    let atoms = mu
        .atoms()
        .iter()
        .fold(T::zero(), |acc, (x, m)| acc + m.clone() * pow(x, k));
    let k1 = T::from_int(i64::from(k) + 1);
    Ok(mu.pieces().iter().fold(atoms, |acc, (a, b, h)| {
        acc + h.clone() * (pow(b, k + 1) - pow(a, k + 1)) / k1.clone()
    }))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::measure::Interval;
    use crate::model::{EigenSlot, Multiplicity, OperatorModel};
    use crate::scalar::real;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Scalar::ratio(n, d)
    }

    fn c(n: i64, d: i64) -> Cx<Rational> {
        real(q(n, d))
    }

    fn unit_interval() -> Arc<OperatorModel<Rational>> {
        OperatorModel::new(
            vec![],
            vec![BorelMeasure::uniform(q(0, 1), q(1, 1), q(1, 1)).unwrap()],
        )
        .unwrap()
        .into_shared()
    }

    fn slot_model(lambda: i64, mult: u64) -> Arc<OperatorModel<Rational>> {
        OperatorModel::new(
            vec![EigenSlot::new(q(lambda, 1), Multiplicity::Finite(mult))],
            vec![],
        )
        .unwrap()
        .into_shared()
    }

    fn on(m: &Arc<OperatorModel<Rational>>, a: Rational, b: Rational, z: Cx<Rational>) -> StepVector<Rational> {
        StepVector::builder(m).density(0, a, b, z).build().unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let m = unit_interval();
        let one = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert_eq!(inner_product(&one, &one).unwrap(), c(1, 1));
        let half = on(&m, q(1, 2), q(1, 1), c(1, 1));
        assert_eq!(inner_product(&one, &half).unwrap(), c(1, 2));
        let s = slot_model(0, 2);
        let e0 = StepVector::unit_slot(&s, 0, 0).unwrap();
        let e1 = StepVector::unit_slot(&s, 0, 1).unwrap();
        assert_eq!(inner_product(&e0, &e1).unwrap(), c(0, 1));
        assert_eq!(inner_product(&e0, &one), Err(ModelError::ModelMismatch));
    }

    #[test]
    fn apply_borel_examples() {
        let m = unit_interval();
        let one = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert_eq!(apply_borel(&PiecewiseFunction::constant(c(1, 1)), &one), one);
        let chi = PiecewiseFunction::indicator(&IntervalSet::interval(
            Interval::finite(q(0, 1), q(1, 2)).unwrap(),
        ));
        assert_eq!(apply_borel(&chi, &one), on(&m, q(0, 1), q(1, 2), c(1, 1)));
    }

    #[test]
    fn projection_examples() {
        let m = unit_interval();
        let one = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert_eq!(spectral_projection(&IntervalSet::full(), &one), one);
        assert!(spectral_projection(&IntervalSet::empty(), &one).is_zero());
        let low = IntervalSet::interval(Interval::finite(q(0, 1), q(1, 2)).unwrap());
        assert_eq!(norm_sq(&spectral_projection(&low, &one)), q(1, 2));
    }

    #[test]
    fn spectral_measure_examples() {
        let m = unit_interval();
        let one = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert_eq!(spectral_measure(&one), m.summands()[0]);
        let two = on(&m, q(0, 1), q(1, 2), c(2, 1));
        assert_eq!(
            spectral_measure(&two),
            BorelMeasure::uniform(q(0, 1), q(1, 2), q(4, 1)).unwrap()
        );
        let s = slot_model(5, 2);
        let v = StepVector::builder(&s)
            .slot(0, 0, c(3, 5))
            .slot(0, 1, c(4, 5))
            .build()
            .unwrap();
        assert_eq!(spectral_measure(&v), BorelMeasure::atom(q(5, 1), q(1, 1)).unwrap());
    }

    #[test]
    fn graph_distance_examples() {
        let s = slot_model(2, 1);
        let e = StepVector::unit_slot(&s, 0, 0).unwrap();
        let d = graph_distance(&e, &e.scale_real(&q(2, 1))).unwrap();
        assert!(d.on_graph && d.value == 0.0);
        let d = graph_distance(&e, &StepVector::zero(&s)).unwrap();
        assert!((d.value - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        let z = StepVector::zero(&s);
        assert_eq!(graph_distance(&z, &z).unwrap().value, 0.0);
    }

    #[test]
    fn graph_distance_density_closed_form() {
        // ∫₀¹ x²/(1+x²) dx = 1 − π/4
        let m = unit_interval();
        let one = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        let d = graph_distance(&one, &StepVector::zero(&m)).unwrap();
        let expect = (1.0 - std::f64::consts::FRAC_PI_4).sqrt();
        assert!((d.value - expect).abs() < 1e-12);
        assert!(d.error_bound < 1e-10);
        // ∫₀¹ 1/(1+x²) dx = π/4
        let d = graph_distance(&StepVector::zero(&m), &one).unwrap();
        assert!((d.value - std::f64::consts::FRAC_PI_4.sqrt()).abs() < 1e-12);
        assert!(!d.on_graph);
    }

    #[test]
    fn moment_examples() {
        let m = unit_interval();
        let one = StepVector::constant_on(&m, 0, c(1, 1)).unwrap();
        assert_eq!(operator_moment(&one, 0).unwrap(), norm_sq(&one));
        assert_eq!(operator_moment(&one, 1).unwrap(), q(1, 2));
        let s = slot_model(3, 1);
        let e = StepVector::unit_slot(&s, 0, 0).unwrap();
        assert_eq!(operator_moment(&e, 2).unwrap(), q(9, 1));
        assert_eq!(operator_moment(&e, 5), Err(ModelError::MomentOrder(5)));
    }
}
