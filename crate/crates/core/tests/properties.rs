mod common;

use common::*;
use hilbert_spectra::approx::{diagonal_compact_split, match_sequences, ApproxError};
use hilbert_spectra::galois::type_of;
use hilbert_spectra::galois::type_distance_realization;
use hilbert_spectra::measure::{
    hellinger_distance, tv_distance, BorelMeasure, IntervalSet, PiecewiseFunction,
};
use hilbert_spectra::model::{
    apply_borel, direct_sum, inner_product, norm_sq, operator_moment, spectral_measure,
    OperatorModel,
};
use hilbert_spectra::oracle::{jacobi_eigensolve, HermitianMatrix};
use hilbert_spectra::scalar::abs_sq;
use hilbert_spectra::spectra::{compute_spectrum, spectrally_equivalent, weyl_dimension};
use hilbert_spectra::model::Multiplicity;
use hilbert_spectra::subspace::{cyclic_subspace, project};
use hilbert_spectra::Scalar;
use num_complex::Complex;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn measure_strategy() -> impl Strategy<Value = BorelMeasure<Q>> {
    let atoms = prop::collection::btree_map(-8i64..=8, 1i64..=9, 0..4);
    let pieces = prop::collection::vec((-8i64..8, 1i64..6, 1i64..9), 0..4);
    (atoms, pieces).prop_map(|(atoms, pieces)| {
        BorelMeasure::new(
            atoms.into_iter().map(|(x, m)| (q(x, 4), q(m, 2))).collect(),
            pieces
                .into_iter()
                .map(|(a, len, h)| (q(a, 4), q(a + len, 4), q(h, 3)))
                .collect(),
        )
        .expect("valid measure")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_is_additive_on_disjoint_sets(mu in measure_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = disjoint_sets(&mut r);
        prop_assert_eq!(mu.measure_of(&a.union(&b)), mu.measure_of(&a) + mu.measure_of(&b));
        prop_assert_eq!(mu.measure_of(&IntervalSet::full()), mu.total_mass());
        prop_assert_eq!(mu.restrict(&a).total_mass(), mu.measure_of(&a));
        prop_assert_eq!(mu.measure_of(&IntervalSet::empty()), q(0, 1));
    }

    #[test]
    fn hellinger_is_dominated_by_total_variation(mu in measure_strategy(), nu in measure_strategy()) {
        let h = hellinger_distance(&mu, &nu);
        prop_assert!(h * h <= tv_distance(&mu, &nu).to_real() + 1e-12);
    }

    #[test]
    fn sum_of_measures_is_monotone(mu in measure_strategy(), nu in measure_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_interval_set(&mut r);
        prop_assert!(mu.add(&nu).measure_of(&a) >= mu.measure_of(&a));
        prop_assert_eq!(mu.add(&nu).measure_of(&a), mu.measure_of(&a) + nu.measure_of(&a));
    }

    #[test]
    fn calculus_transforms_spectral_measure(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 1);
        let v = random_vector(&mut r, &m);
        let f = random_function(&mut r);
        let weight: PiecewiseFunction<Q, Q> = f.map(abs_sq);
        let expected = spectral_measure(&v).weighted_by(&weight).expect("bounded weight");
        prop_assert_eq!(spectral_measure(&apply_borel(&f, &v)), expected);
        prop_assert_eq!(operator_moment(&v, 0).unwrap(), norm_sq(&v));
    }

    #[test]
    fn larger_contexts_capture_more(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 1);
        let g = random_set(&mut r, &m, 1, &VectorShape::default());
        let h = random_set(&mut r, &m, 1, &VectorShape::default());
        let v = random_vector(&mut r, &m);
        let small = project(&cyclic_subspace(&g), &v).unwrap();
        let large = project(&cyclic_subspace(&g.union(&h).unwrap()), &v).unwrap();
        prop_assert!(norm_sq(&small) <= norm_sq(&large));
        prop_assert_eq!(project(&cyclic_subspace(&g), &large).unwrap(), small);
    }

    #[test]
    fn embeddings_are_isometric_intertwiners(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m1 = random_model(&mut r, 1);
        let m2 = random_model(&mut r, 1);
        let (sum, emb) = direct_sum(&[m1.clone(), m2.clone()]);
        let v = random_vector(&mut r, &m1);
        let w = random_vector(&mut r, &m1);
        let u = random_vector(&mut r, &m2);
        let f = random_function(&mut r);
        let (ev, ew, eu) = (emb[0].apply(&v).unwrap(), emb[0].apply(&w).unwrap(), emb[1].apply(&u).unwrap());
        prop_assert!(std::sync::Arc::ptr_eq(ev.model(), &sum));
        prop_assert_eq!(inner_product(&ev, &ew).unwrap(), inner_product(&v, &w).unwrap());
        prop_assert!(inner_product(&ev, &eu).unwrap() == Complex::new(q(0, 1), q(0, 1)));
        prop_assert_eq!(emb[0].apply(&apply_borel(&f, &v)).unwrap(), apply_borel(&f, &ev));
    }

    #[test]
    fn realization_distance_is_a_pseudometric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 1);
        let k = r.gen_range(0..=2);
        let g = random_set(&mut r, &m, k, &VectorShape::default());
        let ts: Vec<_> = (0..3).map(|_| type_of(&random_vector(&mut r, &m), &g).unwrap()).collect();
        let d = |i: usize, j: usize| type_distance_realization(&ts[i], &ts[j]).unwrap();
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert!((d(0, 1) - d(1, 0)).abs() <= 1e-12);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
    }

    #[test]
    fn spectral_equivalence_is_an_equivalence(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_model(&mut r, 1);
        let b = random_model(&mut r, 1);
        prop_assert!(spectrally_equivalent(&a, &a).equivalent);
        prop_assert_eq!(spectrally_equivalent(&a, &b).equivalent, spectrally_equivalent(&b, &a).equivalent);
        let mut summands = a.summands().to_vec();
        summands.reverse();
        let c = OperatorModel::new(a.slots().to_vec(), summands).unwrap();
        prop_assert!(spectrally_equivalent(&a, &c).equivalent);
    }

    #[test]
    fn weyl_dimension_detects_essential_points(seed in any::<u64>(), k in 1i64..100) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 1);
        let s = compute_spectrum(&*m);
        let eps = q(1, k);
        for (x, mult) in &s.point_spectrum {
            let w = weyl_dimension(&*m, x, &eps);
            if s.essential_spectrum.contains(x) {
                prop_assert_eq!(w, Multiplicity::Omega);
            } else if k > 8 {
                // the grid spacing is 1/4, so the window holds only x
                prop_assert_eq!(w, *mult);
            }
        }
    }

    #[test]
    fn split_bound_is_below_eps(k in 1i64..40, extra in 0usize..10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_model(&mut r, 1);
        let eps = q(1, k);
        let needed = match diagonal_compact_split(&*m, &eps, 0) {
            Ok(_) => 0,
            Err(ApproxError::CellBudgetTooSmall { required }) => required,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let s = diagonal_compact_split(&*m, &eps, needed + extra).unwrap();
        prop_assert!(s.k_bound < eps);
    }

    #[test]
    fn identical_sequences_match_exactly(n in 1usize..300, seed in any::<u64>()) {
        let mut r = rng(seed);
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut ys = xs.clone();
        ys.shuffle(&mut r);
        let w = match_sequences::<f64, Q>(&xs, &ys, 0.5).unwrap();
        prop_assert!(w.is_bijection() && w.satisfies_schedule());
        prop_assert!(w.per_index_gap.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn jacobi_preserves_trace_and_obeys_weyl(n in 1usize..16, seed in any::<u64>()) {
        let mut r = rng(seed);
        let entries: Vec<Vec<Complex<f64>>> = (0..n)
            .map(|_| (0..n).map(|_| Complex::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0))).collect())
            .collect();
        let a = HermitianMatrix::from_upper(n, |i, j| entries[i][j]).unwrap();
        let d = jacobi_eigensolve(&a).unwrap();
        prop_assert!(d.residual <= 1e-10 && d.orthonormality <= 1e-10);
        prop_assert!((d.eigenvalues.iter().sum::<f64>() - a.trace()).abs() <= 1e-9);
        let u: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        let norm: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if norm > 1e-6 {
            let delta = 0.5;
            let b = a.plus_rank_one(delta / norm, &u).unwrap();
            let e = jacobi_eigensolve(&b).unwrap();
            for (x, y) in d.eigenvalues.iter().zip(&e.eigenvalues) {
                prop_assert!(*y >= *x - 1e-10 && *y <= *x + delta + 1e-10);
            }
        }
    }
}
