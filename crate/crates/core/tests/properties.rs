//! Cross-module properties on randomly generated finite chains.

use proptest::prelude::*;
use siplab_core::coefficients::{
    alpha_inf4_exact, sigma2_exact, symmetrization_check, theta_exact,
};
use siplab_core::coupling::{block_sum_dist, make_schedule, skorohod_split, ScheduleVariant};
use siplab_core::processes::{sample_path, FiniteChain, Process};
use siplab_core::rng::{substream, StreamTag};

/// Doubly stochastic mixture of the identity, a cyclic shift and a few
/// permutations: irreducible, aperiodic, uniform stationary law.
fn birkhoff(n: usize, weights: &[f64], perms: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n]; n];
    let total: f64 = weights.iter().sum();
    for (w, perm) in weights.iter().zip(perms) {
        for (i, &j) in perm.iter().enumerate() {
            p[i][j] += w / total;
        }
    }
    p
}

fn chain_strategy() -> impl Strategy<Value = FiniteChain> {
    (2usize..=4)
        .prop_flat_map(|n| {
            let perms =
                proptest::collection::vec(Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), 2);
            let weights = proptest::collection::vec(0.1f64..1.0, 4);
            let obs = proptest::collection::vec(-2i32..=2, n);
            (Just(n), perms, weights, obs)
        })
        .prop_filter_map("constant observable", |(n, extra, w, obs)| {
            if obs.iter().all(|&o| o == obs[0]) {
                return None;
            }
            let mut perms = vec![
                (0..n).collect::<Vec<_>>(),
                (0..n).map(|i| (i + 1) % n).collect(),
            ];
            perms.extend(extra);
            let p = birkhoff(n, &w, &perms);
            let f: Vec<f64> = obs.iter().map(|&o| f64::from(o)).collect();
            FiniteChain::new(p, &f, 1.0).ok()
        })
}

fn stationary_variance(chain: &FiniteChain, m: u32) -> f64 {
    let pi = chain.stationary();
    let step = chain.step();
    (0..chain.n_states())
        .map(|s| {
            let d = block_sum_dist(chain, s, m).unwrap();
            pi[s]
                * d.atoms()
                    .iter()
                    .zip(d.probs())
                    .map(|(&u, &q)| (u as f64 * step).powi(2) * q)
                    .sum::<f64>()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stationary_law_is_invariant(chain in chain_strategy()) {
        let pi = chain.stationary();
        let back = chain.apply_left(pi);
        for (a, b) in pi.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!(chain.stationary_mean(&chain.observable()).abs() < 1e-9);
    }

    #[test]
    fn sigma2_matches_richardson_variance(chain in chain_strategy()) {
        let s2 = sigma2_exact(&chain).unwrap().value;
        let r1 = stationary_variance(&chain, 7) / 128.0;
        let r2 = stationary_variance(&chain, 8) / 256.0;
        let extrapolated = 2.0 * r2 - r1;
        prop_assert!((extrapolated - s2).abs() <= 1e-3 * s2.max(1e-3), "{extrapolated} vs {s2}");
    }

    #[test]
    fn symmetrized_theta_bounded(chain in chain_strategy(), k in 0usize..=3) {
        for (p, q) in [(1usize, 1usize), (2, 2)] {
            let (z, bound) = symmetrization_check(&chain, p, q, k, 4).unwrap();
            prop_assert!(z <= bound * (1.0 + 1e-10) + 1e-12, "p={p} q={q} k={k}: {z} > {bound}");
        }
    }

    #[test]
    fn symmetrized_covariances_double(chain in chain_strategy(), lag in 0usize..5) {
        // Cov(Z_0, Z_lag) = 2 Cov(X_0, X_lag) for independent copies.
        let cov = |c: &FiniteChain| {
            let f = c.observable();
            let mut v = f.clone();
            for _ in 0..lag {
                v = c.apply(&v);
            }
            c.stationary().iter().zip(&f).zip(&v).map(|((p, a), b)| p * a * b).sum::<f64>()
        };
        let z = chain.symmetrize().unwrap();
        prop_assert!((cov(&z) - 2.0 * cov(&chain)).abs() < 1e-10);
    }

    #[test]
    fn theta_scales_with_normalization(chain in chain_strategy(), k in 0usize..4) {
        let m = chain.sup_norm();
        let normalized = chain.normalize();
        let raw = theta_exact(&chain, 1, 1, k, 6).unwrap().value;
        let scaled = theta_exact(&normalized, 1, 1, k, 6).unwrap().value;
        prop_assert!((raw / m - scaled).abs() < 1e-10);
        prop_assert!((normalized.sup_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_inf4_bounded_and_nonincreasing(chain in chain_strategy()) {
        let a: Vec<f64> = (0..4).map(|k| alpha_inf4_exact(&chain, k, 4).unwrap()).collect();
        for w in a.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert!(a[0] <= 0.25 + 1e-12);
    }

    #[test]
    fn coboundary_sums_stay_bounded(
        chain in chain_strategy(),
        g in proptest::collection::vec(-3i32..=3, 4),
        seed in any::<u64>(),
    ) {
        let g: Vec<f64> = g[..chain.n_states()].iter().map(|&v| f64::from(v) * chain.step()).collect();
        let osc = g.iter().cloned().fold(f64::MIN, f64::max) - g.iter().cloned().fold(f64::MAX, f64::min);
        let cob = chain.make_coboundary(&g).unwrap();
        prop_assert!(sigma2_exact(&cob).unwrap().value.abs() < 1e-9);
        let path = sample_path(&Process::from(cob), 2000, seed).unwrap();
        prop_assert!(path.running_abs_max.iter().all(|&m| m <= osc + 1e-9));
    }

    #[test]
    fn block_mass_is_one(chain in chain_strategy(), m in 0u32..=5) {
        for s in 0..chain.n_states() {
            let d = block_sum_dist(&chain, s, m).unwrap();
            prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_schedule_sandwich(top in 2u32..=40, p in 2.01f64..=4.0) {
        let s = make_schedule(top, p, ScheduleVariant::Balanced, 1.0).unwrap();
        for (&l, &m) in s.levels.iter().zip(&s.m).skip(2) {
            let lf = f64::from(l);
            let hi = 2f64.powf(2.0 * lf / p) * lf.powf(-2.0 / p);
            let block = 2f64.powi(m as i32);
            prop_assert!(block <= hi * (1.0 + 1e-12), "L={l}: {block} > {hi}");
            prop_assert!(block >= hi / 2.0 * (1.0 - 1e-12), "L={l}: {block} < {}", hi / 2.0);
            prop_assert!(m <= l);
        }
    }

    #[test]
    fn split_sums_exactly(v in -50.0f64..50.0, m in 1u32..=10, s2 in 0.1f64..5.0, seed in any::<u64>()) {
        let mut rng = substream(seed, StreamTag::Block, 1);
        let inc = skorohod_split(v, m, s2, &mut rng).unwrap();
        prop_assert_eq!(inc.len(), 1usize << m);
        let total: f64 = inc.iter().sum();
        prop_assert!((total - v).abs() <= 1e-12 * v.abs().max(1.0));
    }
}
