use nalgebra::DMatrix;
use proptest::prelude::*;

use signum_core::filtering::{
    apply_filter, dropped_norm, filter_to_budget, partition, select_threshold, FilterPhase, HISTOGRAM_BUCKETS,
    HISTOGRAM_SPAN,
};
use signum_core::io::{read_matrix_market_from, write_matrix_market_to, Symmetry};
use signum_core::matgen::{gen_banded, gen_rand_sparse, gen_rand_spd};
use signum_core::sparse::{lu_invert, LuFactors};
use signum_core::{NormKind, SparseMatrix};

fn sparse(rows: usize, cols: usize, max_entries: usize) -> impl Strategy<Value = SparseMatrix> {
    prop::collection::vec((0..rows, 0..cols, -10.0f64..10.0), 0..=max_entries).prop_map(move |t| {
        let mut seen = std::collections::HashSet::new();
        let t: Vec<_> = t.into_iter().filter(|&(i, j, _)| seen.insert((i, j))).collect();
        SparseMatrix::from_triplets(rows, cols, &t).unwrap()
    })
}

/// Square matrix with entries spanning many orders of magnitude.
fn graded(n: usize) -> impl Strategy<Value = SparseMatrix> {
    prop::collection::vec((0..n, 0..n, -20i32..1, prop::bool::ANY, 0.1f64..1.0), 1..=n * n).prop_map(move |t| {
        let mut seen = std::collections::HashSet::new();
        let t: Vec<_> = t
            .into_iter()
            .filter(|&(i, j, ..)| seen.insert((i, j)))
            .map(|(i, j, e, neg, m)| (i, j, if neg { -m } else { m } * 10f64.powi(e)))
            .collect();
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    })
}

fn to_na(a: &SparseMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.iter() {
        m[(i, j)] = v;
    }
    m
}

fn no_stored_zeros(a: &SparseMatrix) -> bool {
    a.values().iter().all(|&v| v != 0.0)
}

fn norms() -> impl Strategy<Value = NormKind> {
    prop_oneof![Just(NormKind::Frobenius), Just(NormKind::One)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_matches_dense(a in sparse(7, 5, 20), b in sparse(5, 6, 20)) {
        let c = a.matmul(&b).unwrap();
        let oracle = to_na(&a) * to_na(&b);
        prop_assert!(no_stored_zeros(&c));
        for i in 0..7 {
            for j in 0..6 {
                prop_assert!((c.get(i, j) - oracle[(i, j)]).abs() <= 1e-12 * (1.0 + oracle[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn contiguous_rows_match_dense(n in 2usize..30, lo in -3isize..0, hi in 0isize..4, seed in 0u64..1000) {
        let offsets: Vec<isize> = (lo..=hi).collect();
        let stencil: Vec<f64> = offsets.iter().map(|&d| 1.0 + d as f64 * 0.25 + seed as f64 * 1e-3).collect();
        let a = gen_banded(n, &stencil, &offsets).unwrap();
        let b = gen_rand_sparse(n, 0.3, seed).unwrap();
        for (x, y) in [(&a, &a), (&a, &b), (&b, &a)] {
            let c = x.matmul(y).unwrap();
            let oracle = to_na(x) * to_na(y);
            prop_assert!((to_na(&c) - oracle).amax() <= 1e-12 * (1.0 + x.norm(NormKind::Inf) * y.norm(NormKind::Inf)));
        }
    }

    #[test]
    fn add_matches_dense(a in sparse(6, 6, 20), b in sparse(6, 6, 20), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let c = a.add(&b, alpha, beta).unwrap();
        prop_assert!(no_stored_zeros(&c));
        let oracle = to_na(&a) * alpha + to_na(&b) * beta;
        prop_assert!((to_na(&c) - oracle).amax() <= 1e-12);
        prop_assert!(no_stored_zeros(&a.add(&a, 1.0, -1.0).unwrap()));
        prop_assert_eq!(a.add(&a, 1.0, -1.0).unwrap().nnz(), 0);
    }

    #[test]
    fn one_and_inf_norms_swap_under_transpose(a in sparse(8, 5, 25)) {
        let t = a.transpose();
        prop_assert_eq!(a.norm(NormKind::One), t.norm(NormKind::Inf));
        prop_assert_eq!(a.norm(NormKind::Inf), t.norm(NormKind::One));
        let (fa, ft) = (a.norm(NormKind::Frobenius), t.norm(NormKind::Frobenius));
        prop_assert!((fa - ft).abs() <= 1e-15 * fa);
        prop_assert_eq!(t.transpose(), a);
    }

    #[test]
    fn lu_inverse_residual(n in 1usize..40, density in 0.02f64..0.5, seed in 0u64..10_000) {
        let a = gen_rand_sparse(n, density, seed).unwrap();
        let inv = lu_invert(&a).unwrap();
        let r = a.matmul(&inv).unwrap().add(&SparseMatrix::identity(n), 1.0, -1.0).unwrap();
        prop_assert!(r.norm(NormKind::Frobenius) <= 1e-8);
        prop_assert!(no_stored_zeros(&inv));
    }

    #[test]
    fn lu_solve_residual(a in sparse(8, 8, 30), b in sparse(8, 3, 10)) {
        let shifted = a.shift_diagonal(100.0).unwrap();
        let x = LuFactors::factor(&shifted).unwrap().solve(&b).unwrap();
        let r = shifted.matmul(&x).unwrap().add(&b, 1.0, -1.0).unwrap();
        prop_assert!(r.norm(NormKind::Frobenius) <= 1e-8 * (1.0 + b.norm(NormKind::Frobenius)));
    }

    #[test]
    fn filter_respects_budget(a in graded(12), budget in 1e-12f64..10.0, kind in norms()) {
        let (kept, report) = filter_to_budget(&a, budget, kind, FilterPhase::Adaptive);
        prop_assert!(report.dropped_norm <= budget);
        prop_assert!(no_stored_zeros(&kept));
        prop_assert_eq!(kept.diagonal(), a.diagonal());
        prop_assert_eq!(kept.nnz() + report.dropped_count, a.nnz());
    }

    #[test]
    fn partition_reconstructs(a in graded(10), thr in 0.0f64..1.0) {
        let (kept, dropped) = partition(&a, thr);
        prop_assert_eq!(kept.add(&dropped, 1.0, 1.0).unwrap(), a.clone());
        prop_assert_eq!(dropped_norm(&a, thr, NormKind::Frobenius), dropped.norm(NormKind::Frobenius));
        let (k2, stats) = apply_filter(&a, thr, NormKind::One);
        prop_assert_eq!(k2, kept);
        prop_assert_eq!(stats.dropped_norm, dropped.norm(NormKind::One));
    }

    #[test]
    fn threshold_monotone_in_budget(a in graded(10), b1 in 1e-15f64..1.0, factor in 1.0f64..100.0, kind in norms()) {
        let t1 = select_threshold(&a, b1, kind);
        let t2 = select_threshold(&a, b1 * factor, kind);
        prop_assert!(t1 <= t2);
    }

    /// Everything at least one bucket below the best feasible threshold is
    /// dropped.
    #[test]
    fn threshold_near_brute_force(a in graded(6), budget in 1e-15f64..1.0, kind in norms()) {
        let mut mags: Vec<f64> = a.iter().filter(|&(i, j, _)| i != j).map(|(.., v)| v.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let best = mags
            .iter()
            .copied()
            .filter(|&m| dropped_norm(&a, m, kind) <= budget)
            .fold(0.0, f64::max);
        let ours = select_threshold(&a, budget, kind);
        prop_assert!(ours <= best);
        prop_assert!(dropped_norm(&a, ours, kind) <= budget);
        let max = mags.last().copied().unwrap_or(0.0);
        let bucket = (1.0 / HISTOGRAM_SPAN).powf(1.0 / HISTOGRAM_BUCKETS as f64);
        for &m in &mags {
            if m * bucket * (1.0 + 1e-12) < best && m > HISTOGRAM_SPAN * max {
                prop_assert!(m <= ours, "entry {m} below best {best} kept; ours {ours}");
            }
        }
    }

    #[test]
    fn banded_matches_brute_force(n in 1usize..20, entries in prop::collection::btree_map(-25isize..25, -5.0f64..5.0, 1..6)) {
        let offsets: Vec<isize> = entries.keys().copied().collect();
        let stencil: Vec<f64> = entries.values().copied().collect();
        let a = gen_banded(n, &stencil, &offsets).unwrap();
        for i in 0..n {
            for j in 0..n {
                let d = j as isize - i as isize;
                let want = entries.get(&d).copied().unwrap_or(0.0);
                prop_assert_eq!(a.get(i, j), want);
            }
        }
    }

    #[test]
    fn matrix_market_roundtrip(a in graded(9)) {
        let mut buf = Vec::new();
        write_matrix_market_to(&a, &mut buf, Symmetry::General).unwrap();
        prop_assert_eq!(read_matrix_market_from(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn spd_generator_is_symmetric_and_dominant(n in 1usize..60, density in 0.01f64..0.3, seed in 0u64..1000) {
        let a = gen_rand_spd(n, density, seed).unwrap();
        prop_assert!(a.is_symmetric());
        for i in 0..n {
            let (cols, vals) = a.row(i);
            let off: f64 = cols.iter().zip(vals).filter(|(&j, _)| j != i).map(|(_, v)| v.abs()).sum();
            prop_assert!(a.get(i, i) - off >= 0.1);
        }
    }
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(gen_rand_sparse(50, 0.05, 11).unwrap(), gen_rand_sparse(50, 0.05, 11).unwrap());
    assert_ne!(gen_rand_sparse(50, 0.05, 11).unwrap(), gen_rand_sparse(50, 0.05, 12).unwrap());
    assert_eq!(gen_rand_spd(50, 0.05, 3).unwrap(), gen_rand_spd(50, 0.05, 3).unwrap());
}

#[test]
fn rand_sparse_is_invertible_up_to_500() {
    for (n, seed) in [(10, 1), (100, 2), (250, 3), (500, 4)] {
        let a = gen_rand_sparse(n, 0.01, seed).unwrap();
        assert!(lu_invert(&a).is_ok(), "n={n}");
    }
}

#[test]
fn rand_sparse_count_near_target() {
    let a = gen_rand_sparse_raw(400, 0.01, 5);
    let target = 0.01 * 400.0 * 400.0;
    assert!((a.nnz() as f64 - target).abs() <= 0.2 * target);
}

fn gen_rand_sparse_raw(n: usize, density: f64, seed: u64) -> SparseMatrix {
    signum_core::matgen::gen_rand_sparse_with(n, density, seed, false).unwrap()
}
