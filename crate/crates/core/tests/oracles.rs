//! Monte Carlo and coupling checks against exact oracles.

use siplab_core::bounds::{empirical_tail, tail_curve, TailStatistic};
use siplab_core::coefficients::{alpha_inf4_exact, sigma2_exact};
use siplab_core::coupling::{make_schedule, Coupler, ScheduleVariant};
use siplab_core::normal;
use siplab_core::processes::{FiniteChain, Process};
use siplab_core::stats::{correlation, ks_test};

/// `P(max_{k≤n} S_k ≥ x)` for the simple symmetric walk, by a DP over
/// positions below `x` with absorption at `x`.
fn walk_max_tail(n: usize, x: i64) -> f64 {
    let width = (n as i64 + x + 1) as usize;
    let offset = n as i64;
    let mut p = vec![0.0; width];
    p[offset as usize] = 1.0;
    let mut absorbed = if x <= 0 { 1.0 } else { 0.0 };
    if x <= 0 {
        return 1.0;
    }
    for _ in 0..n {
        let mut next = vec![0.0; width];
        for (i, &q) in p.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let pos = i as i64 - offset;
            for d in [-1i64, 1] {
                let np = pos + d;
                if np >= x {
                    absorbed += 0.5 * q;
                } else {
                    next[(np + offset) as usize] += 0.5 * q;
                }
            }
        }
        p = next;
    }
    absorbed
}

#[test]
fn walk_tail_matches_reflection_principle() {
    // P(M_n ≥ x) = P(S_n ≥ x) + P(S_n > x) for the simple walk.
    let n = 20u64;
    let x = 4i64;
    let binom = |k: u64| -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c / 2f64.powi(n as i32)
    };
    let tail = |level: i64, strict: bool| -> f64 {
        (0..=n)
            .filter(|&k| {
                let s = 2 * k as i64 - n as i64;
                if strict {
                    s > level
                } else {
                    s >= level
                }
            })
            .map(binom)
            .sum()
    };
    let reflected = tail(x, false) + tail(x, true);
    assert!((walk_max_tail(n as usize, x) - reflected).abs() < 1e-14);
}

#[test]
fn empirical_tail_covers_exact_walk_value() {
    // Each 95% interval misses with probability 5%, so check coverage over
    // independent seeds and the pooled deviation.
    let process: Process = FiniteChain::flip(0.5).unwrap().into();
    let exact = walk_max_tail(100, 10);
    let reps = 100_000u64;
    let mut covered = 0;
    let mut hits = 0u64;
    for seed in 0..20 {
        let est = empirical_tail(&process, 100, 10.0, reps, seed).unwrap();
        covered += usize::from(est.ci_low <= exact && exact <= est.ci_high);
        hits += est.hits;
    }
    let pooled = hits as f64 / (20 * reps) as f64;
    let z = (pooled - exact) / (exact * (1.0 - exact) / (20 * reps) as f64).sqrt();
    assert!(covered >= 16, "only {covered}/20 intervals cover {exact}");
    assert!(z.abs() < 3.5, "pooled z-score {z}");
}

#[test]
fn tail_edges_and_monotonicity() {
    let process: Process = FiniteChain::flip(0.25).unwrap().into();
    let xs = [0.0, 5.0, 10.0, 20.0, 40.0, 65.0];
    let curve = tail_curve(&process, 64, &xs, 2000, 4, TailStatistic::OneSided).unwrap();
    assert_eq!(curve[0].p_hat, 1.0);
    assert_eq!(curve[5].p_hat, 0.0);
    for w in curve.windows(2) {
        assert!(w[1].p_hat <= w[0].p_hat);
    }
}

#[test]
fn alpha_reduces_to_pairwise_mixing() {
    let chain = FiniteChain::flip(0.25).unwrap();
    assert!((alpha_inf4_exact(&chain, 1, 6).unwrap() - 0.125).abs() < 1e-12);
    assert!((alpha_inf4_exact(&chain, 2, 6).unwrap() - 0.0625).abs() < 1e-12);
}

#[test]
fn coupling_gaussian_marginals_and_independence() {
    // i.i.d. ±1: Z increments are N(0, 1).
    let iid = FiniteChain::flip(0.5).unwrap();
    let s = make_schedule(9, 4.0, ScheduleVariant::Balanced, 1.0).unwrap();
    let coupler = Coupler::new(&iid, s, 1.0).unwrap();
    let mut zs = Vec::new();
    for seed in 0..20 {
        zs.extend(coupler.run(seed).unwrap().z);
    }
    assert!(zs.len() >= 10_000);
    assert!(ks_test(&zs, normal::cdf).passes(0.01));

    // V is independent of the block-start state and of the past sum.
    let chain = FiniteChain::flip(0.25).unwrap();
    let sigma2 = sigma2_exact(&chain).unwrap().value;
    let s = make_schedule(11, 4.0, ScheduleVariant::Balanced, 1.0).unwrap();
    let coupler = Coupler::new(&chain, s, sigma2).unwrap();
    let (mut v, mut state, mut past) = (Vec::new(), Vec::new(), Vec::new());
    let mut seed = 1000;
    while v.len() < 10_000 {
        let path = coupler.run(seed).unwrap();
        seed += 1;
        for b in &path.blocks {
            v.push(b.v / (sigma2 * f64::from(1u32 << b.m)).sqrt());
            state.push(if b.start_state == 0 { 1.0 } else { -1.0 });
            past.push(b.start_sum);
        }
    }
    let band = 3.0 / (v.len() as f64).sqrt();
    assert!(correlation(&v, &state).abs() <= band);
    assert!(correlation(&v, &past).abs() <= band);
}

#[test]
fn coupling_decompositions_hold_on_every_path() {
    let chain = FiniteChain::new(
        vec![
            vec![0.6, 0.4, 0.0],
            vec![0.1, 0.5, 0.4],
            vec![0.3, 0.0, 0.7],
        ],
        &[-1.0, 0.0, 2.0],
        1.0,
    )
    .unwrap();
    let sigma2 = sigma2_exact(&chain).unwrap().value;
    for variant in [
        ScheduleVariant::Balanced,
        ScheduleVariant::Inflated { epsilon: 0.5 },
        ScheduleVariant::LogInflated { epsilon: 0.5 },
    ] {
        let s = make_schedule(10, 3.0, variant, 1.0).unwrap();
        let coupler = Coupler::new(&chain, s, sigma2).unwrap();
        for seed in 0..10 {
            let path = coupler.run(seed).unwrap();
            siplab_core::coupling::coupling_errors(&path).unwrap();
        }
    }
}
