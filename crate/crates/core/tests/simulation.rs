use ivpi_core::bounds::{ate_bounds, check_instrumental_inequalities, AssumptionSet};
use ivpi_core::simulate::{
    run_proxy, run_two_physician, PreferenceLevel, ProxyScenario, TwoPhysicianScenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct BruteForce {
    ate: f64,
    late: Option<f64>,
    wald: Option<f64>,
    defiers: f64,
}

/// Enumerates every unit profile `(z, diabetic, active, y0, y1)` with its
/// probability and accumulates the estimands directly.
fn brute_force(s: &TwoPhysicianScenario) -> BruteForce {
    let (pd, pa) = (s.p_diabetic, s.p_active);
    let both = pd * pa + s.correlation * (pd * (1.0 - pd) * pa * (1.0 - pa)).sqrt();
    let cov = |d: bool, a: bool| match (d, a) {
        (true, true) => both,
        (true, false) => pd - both,
        (false, true) => pa - both,
        (false, false) => 1.0 - pd - pa + both,
    };
    let bern = |p: f64, v: bool| if v { p } else { 1.0 - p };
    let mut ate = 0.0;
    let (mut late_num, mut late_den, mut defiers) = (0.0, 0.0, 0.0);
    // E[Y | Z = z], E[X | Z = z] accumulated with P(Z = z) factored out.
    let mut ey = [0.0; 2];
    let mut ex = [0.0; 2];
    for d in [false, true] {
        for a in [false, true] {
            let w = cov(d, a);
            let risk = s.outcome_risk[d as usize][a as usize];
            let gets = |z: bool| if z { !d } else { a };
            for y0 in [false, true] {
                for y1 in [false, true] {
                    let mass = w * bern(risk[0], y0) * bern(risk[1], y1);
                    let effect = y1 as i32 as f64 - y0 as i32 as f64;
                    ate += mass * effect;
                    if gets(true) && !gets(false) {
                        late_num += mass * effect;
                        late_den += mass;
                    }
                    if !gets(true) && gets(false) {
                        defiers += mass;
                    }
                    for z in [false, true] {
                        let x = gets(z);
                        let y = if x { y1 } else { y0 };
                        ex[z as usize] += mass * x as i32 as f64;
                        ey[z as usize] += mass * y as i32 as f64;
                    }
                }
            }
        }
    }
    let ittx = ex[1] - ex[0];
    BruteForce {
        ate,
        late: (late_den > 0.0).then(|| late_num / late_den),
        wald: (ittx.abs() > 1e-9).then(|| (ey[1] - ey[0]) / ittx),
        defiers,
    }
}

fn random_scenario(rng: &mut ChaCha8Rng, p_diabetic: f64) -> TwoPhysicianScenario {
    let mut outcome_risk = [[[0.0; 2]; 2]; 2];
    outcome_risk
        .iter_mut()
        .flatten()
        .flatten()
        .for_each(|r| *r = rng.random_range(0.0..1.0));
    TwoPhysicianScenario {
        p_diabetic,
        p_active: rng.random_range(0.05..0.95),
        correlation: 0.0,
        outcome_risk,
        instrument_split: rng.random_range(0.2..0.8),
    }
}

#[test]
fn two_physician_matches_brute_force() {
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pd = rng.random_range(0.05..0.6);
        let mut s = random_scenario(&mut rng, pd);
        s.correlation = rng.random_range(-0.2..0.2);
        let Ok(r) = run_two_physician(&s) else {
            continue;
        };
        let oracle = brute_force(&s);
        assert!((r.true_ate - oracle.ate).abs() < 1e-9, "seed {seed}");
        assert!(
            (r.defier_share - oracle.defiers).abs() < 1e-12,
            "seed {seed}"
        );
        match (r.true_late, oracle.late) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "seed {seed}"),
            (a, b) => assert_eq!(a.is_some(), b.is_some()),
        }
        match (r.iv_estimand, oracle.wald) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "seed {seed}"),
            (a, b) => assert_eq!(a.is_some(), b.is_some()),
        }
        assert!((r.shares.total() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn defiers_with_heterogeneous_effects_bias_the_wald_ratio() {
    let s = TwoPhysicianScenario {
        p_diabetic: 0.3,
        p_active: 0.5,
        correlation: 0.0,
        outcome_risk: [[[0.3, 0.1], [0.2, 0.15]], [[0.5, 0.45], [0.4, 0.1]]],
        instrument_split: 0.5,
    };
    let r = run_two_physician(&s).unwrap();
    let oracle = brute_force(&s);
    let iv = r.iv_estimand.unwrap();
    assert!((r.defier_share - 0.15).abs() < 1e-15);
    assert!((iv - oracle.wald.unwrap()).abs() < 1e-9);
    assert!((iv - r.true_late.unwrap()).abs() > 1e-3);
    assert!((iv - r.true_ate).abs() > 1e-3);
}

#[test]
fn induced_laws_are_compatible_with_the_iv_model() {
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let pd = if seed % 4 == 0 {
            0.0
        } else {
            rng.random_range(0.0..0.6)
        };
        let s = random_scenario(&mut rng, pd);
        let r = run_two_physician(&s).unwrap();
        assert!(check_instrumental_inequalities(&r.law).is_ok());
        let b = ate_bounds(&r.law, &AssumptionSet::none()).unwrap();
        assert!(
            b.bounds().unwrap().contains(r.true_ate, 1e-9),
            "seed {seed}"
        );
        if r.defier_share == 0.0 {
            let b = ate_bounds(&r.law, &AssumptionSet::monotone()).unwrap();
            assert!(
                b.bounds().unwrap().contains(r.true_ate, 1e-9),
                "seed {seed}"
            );
        }
    }
}

fn brute_force_proxy(s: &ProxyScenario) -> f64 {
    // E[Y | Z = z] = sum_k w_k (b_k + t_zk e_k),  E[X | Z = z] = sum_k w_k t_zk
    let e = |z: usize| -> (f64, f64) {
        s.levels.iter().fold((0.0, 0.0), |(y, x), l| {
            (
                y + l.weight * (l.baseline_risk + l.uptake[z] * l.effect),
                x + l.weight * l.uptake[z],
            )
        })
    };
    let (y0, x0) = e(0);
    let (y1, x1) = e(1);
    (y1 - y0) / (x1 - x0)
}

#[test]
fn proxy_with_non_monotone_uptake_matches_direct_computation() {
    let s = ProxyScenario {
        levels: vec![
            PreferenceLevel {
                preference: 0.2,
                weight: 0.3,
                uptake: [0.2, 0.6],
                baseline_risk: 0.2,
                effect: -0.15,
            },
            PreferenceLevel {
                preference: 0.5,
                weight: 0.4,
                uptake: [0.5, 0.3],
                baseline_risk: 0.3,
                effect: 0.2,
            },
            PreferenceLevel {
                preference: 0.8,
                weight: 0.3,
                uptake: [0.1, 0.9],
                baseline_risk: 0.1,
                effect: -0.05,
            },
        ],
        threshold: 0.5,
    };
    let r = run_proxy(&s).unwrap();
    let iv = r.report.iv_estimand.unwrap();
    assert!((iv - brute_force_proxy(&s)).abs() < 1e-9);
    assert!(r.weighted_average_matches);
    assert!(r.level_weights[1] < 0.0);
    assert!((r.report.defier_share - 0.4 * 0.2).abs() < 1e-12);
    assert!(check_instrumental_inequalities(&r.report.law).is_ok());
    let b = ate_bounds(&r.report.law, &AssumptionSet::none()).unwrap();
    assert!(b.bounds().unwrap().contains(r.report.true_ate, 1e-9));
}

#[test]
fn random_proxies_match_direct_computation() {
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let k = rng.random_range(2..6);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let levels = raw
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let baseline_risk = rng.random_range(0.2..0.8);
                PreferenceLevel {
                    preference: i as f64,
                    weight: w / total,
                    uptake: [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
                    baseline_risk,
                    effect: rng.random_range(-0.2..0.2),
                }
            })
            .collect();
        let s = ProxyScenario {
            levels,
            threshold: 1.5,
        };
        let r = run_proxy(&s).unwrap();
        if let Some(iv) = r.report.iv_estimand {
            let direct = brute_force_proxy(&s);
            assert!(
                (iv - direct).abs() < 1e-9 * direct.abs().max(1.0),
                "seed {seed}"
            );
            assert!(r.weighted_average_matches, "seed {seed}");
        }
    }
}
