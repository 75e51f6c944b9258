mod common;

use common::{rank_q, QMat};
use daeindex::arrays::pointwise_profile;
use daeindex::generator::{self, ScfSpec, Variant};
use daeindex::numlin::{self, TolerancePolicy};
use daeindex::scanner::{self, GridSpec, PointKind};
use daeindex::solver::consistent_initialization;
use daeindex::{fixtures, CharacteristicProfile, DaeProblem, PiecewiseMatrixFunction as Pmf, Point};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3i64..=3, rows * cols).prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v.iter().map(|&x| x as f64).collect::<Vec<_>>()))
}

/// Integer product `U V` with inner dimension `k`, so the rank is at most `k`.
fn low_rank() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..7, 1usize..7, 0usize..5).prop_flat_map(|(r, c, k)| (int_matrix(r, k), int_matrix(k, c)).prop_map(|(u, v)| u * v))
}

fn poly_pmf(rows: usize, cols: usize, deg: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(int_matrix(rows, cols), deg + 1).prop_map(|c| Pmf::polynomial(c, -1.0, 1.0))
}

fn thetas() -> impl Strategy<Value = (usize, Vec<usize>, Variant)> {
    (0usize..3, prop::collection::vec(1usize..3, 0..3), any::<bool>()).prop_map(|(d, mut th, col)| {
        th.sort_unstable_by(|a, b| b.cmp(a));
        th.push(0);
        (d, th, if col { Variant::FullColumn } else { Variant::FullRow })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn numerical_rank_is_exact_on_integer_products(m in low_rank()) {
        let tol = TolerancePolicy::default();
        prop_assert_eq!(numlin::rank_of(&m, &tol).unwrap(), rank_q(&QMat::from_f64(&m)));
        prop_assert_eq!(numlin::rank_of(&m.transpose(), &tol).unwrap(), numlin::rank_of(&m, &tol).unwrap());
    }

    #[test]
    fn fundamental_subspaces_split_both_sides(m in low_rank()) {
        let tol = TolerancePolicy::default();
        let f = numlin::fundamental_subspaces(&m, &tol).unwrap();
        let r = f.rank.rank;
        prop_assert_eq!(r + f.kernel.dim(), m.ncols());
        prop_assert_eq!(r + f.cokernel.dim(), m.nrows());
        prop_assert!((&m * &f.kernel.basis).amax() < 1e-9);
        prop_assert!((f.cokernel.basis.transpose() * &m).amax() < 1e-9);
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose(m in low_rank()) {
        let tol = TolerancePolicy::default();
        let p = numlin::pseudo_inverse(&m, &tol).unwrap();
        let scale = 1.0 + m.amax() * p.amax();
        prop_assert!((&m * &p * &m - &m).amax() < 1e-9 * scale * (1.0 + m.amax()));
        prop_assert!((&p * &m * &p - &p).amax() < 1e-9 * scale * (1.0 + p.amax()));
        let mp = &m * &p;
        prop_assert!((&mp - mp.transpose()).amax() < 1e-9 * scale);
    }

    #[test]
    fn orthoprojectors_are_idempotent_and_symmetric(m in low_rank()) {
        let tol = TolerancePolicy::default();
        let s = numlin::Subspace::span(&m, &tol).unwrap();
        let p = s.projector();
        prop_assert!(p.idempotency_defect() < 1e-10);
        prop_assert!(p.symmetry_defect() < 1e-10);
    }

    #[test]
    fn one_fullness_verdicts_agree(m in int_matrix(6, 6), block in prop::sample::select(vec![1usize, 2, 3])) {
        let tol = TolerancePolicy::default();
        let a = numlin::one_fullness(&m, block, &tol).unwrap().is_one_full;
        let b = numlin::one_fullness_by_ranks(&m, block, &tol).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, common::one_full_q(&QMat::from_f64(&m), block));
    }

    #[test]
    fn products_and_sums_evaluate_pointwise(a in poly_pmf(2, 3, 2), b in poly_pmf(3, 2, 1), c in poly_pmf(2, 3, 1), t in -1.0f64..1.0) {
        let ab = a.mul(&b).unwrap().eval_at(t).unwrap();
        prop_assert!((ab - a.eval_at(t).unwrap() * b.eval_at(t).unwrap()).amax() < 1e-9);
        let ac = a.add(&c).unwrap().eval_at(t).unwrap();
        prop_assert!((ac - a.eval_at(t).unwrap() - c.eval_at(t).unwrap()).amax() < 1e-12);
        let at = a.transpose().eval_at(t).unwrap();
        prop_assert_eq!(at, a.eval_at(t).unwrap().transpose());
    }

    #[test]
    fn derivative_matches_difference_quotient(a in poly_pmf(2, 2, 3), t in -0.9f64..0.9) {
        let h = 1e-5;
        let fd = (a.eval_at(t + h).unwrap() - a.eval_at(t - h).unwrap()) / (2.0 * h);
        prop_assert!((a.derivative(1).eval_at(t).unwrap() - fd).amax() < 1e-6);
    }

    #[test]
    fn json_round_trip_is_lossless(a in poly_pmf(3, 2, 2)) {
        let back = Pmf::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn expected_profiles_are_consistent((d, th, variant) in thetas(), seed in any::<u64>()) {
        let spec = ScfSpec::new(d, th.clone(), variant, seed);
        let p = spec.expected_profile().unwrap();
        let l = spec.block_sizes().unwrap();
        prop_assert_eq!(p.m, d + l.iter().sum::<usize>());
        prop_assert_eq!(p.d, p.r - th.iter().sum::<usize>());
        prop_assert_eq!(p.a, p.m - p.d);
        prop_assert_eq!(p.mu, th.len());
        prop_assert_eq!(CharacteristicProfile::from_thetas(p.m, p.r, p.thetas.clone()).unwrap(), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_pairs_have_their_profile(seed in any::<u64>(), degree in 0usize..=2, t in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = generator::random_spec(&mut rng, 9, 4);
        let g = generator::generate(&spec, Some(degree), 50.0).unwrap();
        let (p, _) = pointwise_profile(&g.problem, Point::new(t), g.problem.m()).unwrap();
        prop_assert_eq!(p, g.expected);
    }

    #[test]
    fn initialization_is_a_projection(a in prop::collection::vec(-5.0f64..5.0, 4), t0 in 0.0f64..1.0, c in -2.0f64..2.0) {
        let q = Pmf::polynomial(vec![DMatrix::from_column_slice(4, 1, &[c, 1.0, 0.0, c]), DMatrix::from_column_slice(4, 1, &[0.0, c, 1.0, 0.0])], 0.0, 1.0);
        let p = fixtures::theta_switch(&[0.0, 0.0, 1.0], &[1.0], 0.0, 1.0).with_q(q).unwrap();
        let alpha = DVector::from_vec(a);
        let (x0, _) = consistent_initialization(&p, t0, &alpha, 3).unwrap();
        let (x1, _) = consistent_initialization(&p, t0, &x0, 3).unwrap();
        prop_assert!((&x0 - &x1).norm() < 1e-9 * (1.0 + x0.norm()));
    }

    #[test]
    fn scan_segments_are_ordered_and_disjoint(a0 in -1.0f64..1.0, a1 in -2.0f64..2.0, b0 in -1.0f64..1.0) {
        let p = fixtures::theta_switch(&[a0, a1], &[b0], -1.0, 1.0);
        let r = scanner::scan(&p, &GridSpec::with_n(41));
        let (lo, hi) = p.interval();
        for s in &r.segments {
            prop_assert!(lo <= s.t0 && s.t0 < s.t1 && s.t1 <= hi);
            prop_assert!(s.probes >= 2);
        }
        for w in r.segments.windows(2) {
            prop_assert!(w[0].t1 <= w[1].t0);
        }
        for b in &r.points {
            prop_assert!(b.t_lo <= b.t_hi);
            for s in &r.segments {
                prop_assert!(!(s.t0 < b.t_lo && b.t_hi < s.t1), "bracket inside a segment");
            }
        }
        prop_assert!([0, 10, 20, 30].contains(&r.exit_code()));
        for i in 0..r.grid.len() {
            if let PointKind::Regular(p) = r.classify_probe(i) {
                prop_assert!(r.segments.iter().any(|s| s.profile == p));
            }
        }
        prop_assert_eq!(r.almost_regular, !r.segments.is_empty() && r.points.iter().all(|b| matches!(b.kind, PointKind::HarmlessCritical(_))));
    }
}

#[test]
fn problem_json_round_trip() {
    for (_, p) in fixtures::catalogue() {
        let back = DaeProblem::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(back.m(), p.m());
        for t in [p.interval().0, 0.5 * (p.interval().0 + p.interval().1)] {
            assert_eq!(back.e.eval_at(t).unwrap(), p.e.eval_at(t).unwrap());
            assert_eq!(back.f.eval_at(t).unwrap(), p.f.eval_at(t).unwrap());
        }
    }
}
