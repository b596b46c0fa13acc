//! Randomized invariants of the building blocks.

use bregkacz::linops::BlockPartition;
use bregkacz::potentials::CoordinateGroups;
use bregkacz::sampling::BlockSampler;
use bregkacz::solvers::theta_next;
use bregkacz::{generate_gaussian, DenseMatrixF64, Method, PotentialF64, ProblemF64, RestartSchedule, RunConfigF64};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A matrix with a block count, and two vectors of matching sizes.
fn matrix_and_blocks() -> impl Strategy<Value = (DenseMatrixF64, usize, Vec<f64>, Vec<f64>)> {
    (1usize..9, 1usize..9).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(-3.0f64..3.0, m * n),
            1..=m,
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-2.0f64..2.0, m),
        )
            .prop_map(move |(data, blocks, u, r)| (DenseMatrixF64::new(m, n, data).unwrap(), blocks, u, r))
    })
}

const N: usize = 6;

fn potential() -> impl Strategy<Value = PotentialF64> {
    prop_oneof![
        Just(PotentialF64::squared_norm()),
        (0.0f64..3.0).prop_map(|l| PotentialF64::sparse(l).unwrap()),
        (0.0f64..3.0).prop_map(|l| PotentialF64::group_sparse(l, CoordinateGroups::contiguous(N, 3).unwrap()).unwrap()),
    ]
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, N)
}

/// Distance of `d` to the set where `f*` is not twice differentiable.
fn kink_margin(p: &PotentialF64, d: &[f64]) -> f64 {
    match p {
        PotentialF64::SquaredNorm => f64::INFINITY,
        PotentialF64::Sparse { lambda } => d.iter().map(|v| (v.abs() - lambda).abs()).fold(f64::INFINITY, f64::min),
        PotentialF64::GroupSparse { lambda, .. } => d
            .chunks(3)
            .map(|g| (norm_sq(g).sqrt() - lambda).abs())
            .fold(f64::INFINITY, f64::min),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn block_products_are_adjoint((a, blocks, u, r) in matrix_and_blocks()) {
        let p = BlockPartition::equal(&a, blocks).unwrap();
        for i in 0..blocks {
            let rr = &r[p.range(i)];
            let lhs = dot(&p.block_apply(&a, i, &u), rr);
            let rhs = dot(&u, &p.block_apply_transpose(&a, i, rr));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
        }
    }

    #[test]
    fn block_lipschitz_bounds_the_gain((a, blocks, u, _r) in matrix_and_blocks()) {
        let p = BlockPartition::equal(&a, blocks).unwrap();
        for i in 0..blocks {
            let gain = norm_sq(&p.block_apply(&a, i, &u));
            prop_assert!(gain <= p.lipschitz(i) * norm_sq(&u) * (1.0 + 1e-9) + 1e-300);
        }
    }

    #[test]
    fn blocks_reassemble_the_product((a, blocks, u, _r) in matrix_and_blocks()) {
        let p = BlockPartition::equal(&a, blocks).unwrap();
        let stacked: Vec<f64> = (0..blocks).flat_map(|i| p.block_apply(&a, i, &u)).collect();
        prop_assert_eq!(stacked, a.apply(&u));
    }

    #[test]
    fn fenchel_equality(p in potential(), d in point()) {
        let x = p.conj_grad(&d);
        let pairing = dot(&x, &d);
        let gap = p.f_value(&x) + p.conj_value(&d) - pairing;
        prop_assert!(gap.abs() <= 1e-10 * (1.0 + pairing.abs()), "gap {gap}");
    }

    #[test]
    fn bregman_distance_dominates_half_squared_distance(p in potential(), d in point(), y in point()) {
        let x = p.conj_grad(&d);
        let dist = p.bregman_distance(&d, &y);
        prop_assert!(dist >= 0.0);
        let half = 0.5 * dist_sq(&x, &y);
        prop_assert!(dist >= half - 1e-10 * (1.0 + half), "{dist} < {half}");
    }

    #[test]
    fn conjugate_gradient_is_nonexpansive(p in potential(), d1 in point(), d2 in point()) {
        let g = dist_sq(&p.conj_grad(&d1), &p.conj_grad(&d2));
        prop_assert!(g <= dist_sq(&d1, &d2) * (1.0 + 1e-12));
    }

    #[test]
    fn conjugate_gradient_matches_finite_differences(p in potential(), d in point()) {
        prop_assume!(kink_margin(&p, &d) > 1e-3);
        let h = 1e-5;
        let g = p.conj_grad(&d);
        for j in 0..N {
            let mut plus = d.clone();
            let mut minus = d.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (p.conj_value(&plus) - p.conj_value(&minus)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + g[j].abs()), "j={j}: fd {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn inverse_cdf_picks_the_bracketing_bin(
        l in prop::collection::vec(0.01f64..10.0, 1..8),
        alpha in 0.0f64..=1.0,
        u in 0.0f64..1.0,
    ) {
        let s = BlockSampler::new(&l, alpha, 0).unwrap();
        let cum = s.cumulative();
        let i = s.index_for(u);
        let lo = if i == 0 { 0.0 } else { cum[i - 1] };
        prop_assert!(lo <= u && u < cum[i], "u={u} i={i} cum={cum:?}");
    }

    #[test]
    fn seed_replay_is_exact(l in prop::collection::vec(0.01f64..10.0, 1..8), seed in any::<u64>()) {
        let mut a = BlockSampler::new(&l, 0.5, seed).unwrap();
        let mut b = BlockSampler::new(&l, 0.5, seed).unwrap();
        let xs: Vec<usize> = (0..500).map(|_| a.sample()).collect();
        let ys: Vec<usize> = (0..500).map(|_| b.sample()).collect();
        prop_assert_eq!(xs, ys);
    }

    #[test]
    fn theta_bounds(m in 1usize..500) {
        let t0 = 1.0 / m as f64;
        let mut t = t0;
        for k in 0..2000usize {
            let k = k as f64;
            prop_assert!((2.0 - t0) / (k + (2.0 - t0) / t0) <= t * (1.0 + 1e-12));
            prop_assert!(t <= 2.0 / (k + 2.0 / t0) * (1.0 + 1e-12));
            let next = theta_next(t);
            prop_assert!(next < t);
            t = next;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_instances_are_consistent_and_reproducible(
        m in 1usize..12, n in 1usize..12, lambda in 0.0f64..2.0, seed in any::<u64>(),
    ) {
        let p = generate_gaussian::<f64>(m, n, lambda, seed).unwrap();
        let q = generate_gaussian::<f64>(m, n, lambda, seed).unwrap();
        prop_assert_eq!(&p, &q);
        let x_hat = p.x_hat.as_ref().unwrap();
        prop_assert!(x_hat.iter().any(|v| *v != 0.0));
        let r = dist_sq(&p.a.apply(x_hat), &p.b).sqrt();
        prop_assert!(r <= 1e-10 * (1.0 + norm_sq(&p.b).sqrt()));
    }

    #[test]
    fn save_load_round_trip(m in 1usize..10, n in 1usize..10, seed in any::<u64>(), with_kappa in any::<bool>()) {
        let mut p = generate_gaussian::<f64>(m, n, 0.5, seed).unwrap();
        if with_kappa {
            p.kappa = Some(p.condition_number().unwrap());
        }
        let dir = tempfile::tempdir().unwrap();
        p.save(dir.path()).unwrap();
        prop_assert_eq!(ProblemF64::load(dir.path()).unwrap(), p);
    }

    #[test]
    fn accepted_restart_objectives_never_increase(seed in any::<u64>(), period in 1usize..40, doubling in any::<bool>()) {
        let p = generate_gaussian::<f64>(8, 12, 1.0, seed).unwrap();
        let f = PotentialF64::sparse(1.0).unwrap();
        let mut c = RunConfigF64::new(Method::Rarbk, 4);
        c.seed = seed;
        c.tol = None;
        c.max_epochs = 60;
        c.schedule = Some(if doubling {
            RestartSchedule::doubling(period).unwrap()
        } else {
            RestartSchedule::fixed(period).unwrap()
        });
        let out = bregkacz::solvers::rarbk_run(&c, &p, &f).unwrap();
        prop_assert!(out.restart_objectives.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(out.trace.windows(2).all(|w| w[1].epoch > w[0].epoch));
        prop_assert!(out.trace.iter().all(|r| r.rel_residual.is_finite()));
    }
}
