mod common;

use common::{naive_a, random_model};
use nalgebra::DVector;
use pgglmm::diagnostics::batch_means_se_default;
use pgglmm::gibbs::{draw_omega, eta_conditional, gibbs_step, initial_state, sample_chain, IterationRng, SamplerConfig};
use pgglmm::model::{assemble_workspace, ChainState};
use pgglmm::oracles::linalg;
use pgglmm::oracles::stats::{ks_two_sample, mean_se};
use pgglmm::oracles::TinyModel;
use pgglmm::rng::StreamRoot;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn conditional_precision_matches_naive_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..50 {
        let m = random_model(&mut rng);
        let ws = assemble_workspace(&m.data, &m.groups, &m.priors).unwrap();
        let omega: Vec<f64> = (0..ws.observations()).map(|_| rng.random_range(0.01..4.0)).collect();
        let tau: Vec<f64> = (0..m.groups.len()).map(|_| m.priors.tau0() + rng.random_range(0.0..3.0)).collect();
        let cond = eta_conditional(&DVector::from_vec(omega.clone()), &tau, &ws, &m.priors).unwrap();
        let a = naive_a(&m.priors, &m.groups, &tau);
        let naive = linalg::weighted_gram(&linalg::from_nalgebra(&ws.m), &omega, &a);
        let scale = naive.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        for (i, row) in naive.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((cond.precision[(i, j)] - v).abs() <= 1e-10 * scale);
            }
        }
        let mean_naive = linalg::solve(&naive, ws.mu.as_slice()).unwrap();
        for (i, v) in mean_naive.iter().enumerate() {
            assert!((cond.mean[i] - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn omega_at_zero_predictor_has_mean_n_over_four() {
    let tiny = TinyModel::reference();
    let ws = assemble_workspace(&tiny.data, &tiny.groups, &tiny.priors).unwrap();
    let root = StreamRoot::new(201);
    let eta = DVector::zeros(ws.dim());
    let draws: Vec<DVector<f64>> = (0..100_000).map(|it| draw_omega(&eta, &ws, IterationRng::new(&root, it))).collect();
    for (i, &n) in ws.trials.iter().enumerate() {
        let col: Vec<f64> = draws.iter().map(|d| d[i]).collect();
        assert!(col.iter().all(|&w| w > 0.0));
        let (m, se) = mean_se(&col);
        assert!((m - n as f64 / 4.0).abs() < 3.0 * se, "obs {i}: {m} vs {}", n as f64 / 4.0);
    }
}

#[test]
fn omega_law_is_sign_invariant() {
    let tiny = TinyModel::reference();
    let ws = assemble_workspace(&tiny.data, &tiny.groups, &tiny.priors).unwrap();
    let eta = DVector::from_vec(vec![0.8, -1.4]);
    let neg = -&eta;
    let (r1, r2) = (StreamRoot::new(202), StreamRoot::new(203));
    let a: Vec<f64> = (0..10_000).map(|it| draw_omega(&eta, &ws, IterationRng::new(&r1, it))[0]).collect();
    let b: Vec<f64> = (0..10_000).map(|it| draw_omega(&neg, &ws, IterationRng::new(&r2, it))[0]).collect();
    assert!(ks_two_sample(&a, &b).passed);
}

#[test]
fn states_satisfy_invariants_for_many_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let m = random_model(&mut rng);
    let ws = assemble_workspace(&m.data, &m.groups, &m.priors).unwrap();
    let cfg = SamplerConfig::new(10_000, 0, 1, 5);
    let mut s = initial_state(&cfg, &ws, &m.priors).unwrap();
    let root = StreamRoot::new(5);
    for it in 0..10_000u64 {
        s = gibbs_step(&s, &ws, &m.priors, IterationRng::new(&root, it)).unwrap();
        assert!(s.is_valid(m.priors.tau0()));
    }
}

#[test]
fn lag_one_joint_is_exchangeable() {
    let tiny = TinyModel::reference();
    let ws = assemble_workspace(&tiny.data, &tiny.groups, &tiny.priors).unwrap();
    let cfg = SamplerConfig::new(100_000, 1_000, 1, 205);
    let start = initial_state(&cfg, &ws, &tiny.priors).unwrap();
    let (draws, _, _) = sample_chain(&cfg, &ws, &tiny.priors, start).unwrap();
    let beta = draws.column(0);
    let u = draws.column(1);
    let d: Vec<f64> = (0..beta.len() - 1).map(|m| beta[m] * u[m + 1] - u[m] * beta[m + 1]).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let se = batch_means_se_default(&d).unwrap().se;
    assert!(mean.abs() < 3.5 * se, "{mean} (se {se})");
}

#[test]
fn long_run_means_do_not_depend_on_the_start() {
    let tiny = TinyModel::reference();
    let ws = assemble_workspace(&tiny.data, &tiny.groups, &tiny.priors).unwrap();
    let starts = [(vec![5.0, -5.0], 0.1), (vec![-5.0, 5.0], 20.0), (vec![0.0, 0.0], 1.0)];
    let mut results = Vec::new();
    for (k, (eta, tau)) in starts.iter().enumerate() {
        let mut cfg = SamplerConfig::new(40_000, 1_000, 1, 206 + k as u64);
        cfg.init_eta = Some(eta.clone());
        cfg.init_tau = Some(vec![*tau]);
        let start = initial_state(&cfg, &ws, &tiny.priors).unwrap();
        let (draws, _, _) = sample_chain(&cfg, &ws, &tiny.priors, start).unwrap();
        let col = draws.column(0);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        results.push((mean, batch_means_se_default(&col).unwrap().se));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (results[i], results[j]);
            assert!((a.0 - b.0).abs() < 3.5 * (a.1 * a.1 + b.1 * b.1).sqrt(), "{results:?}");
        }
    }
}

#[test]
fn initial_state_overrides_are_respected() {
    let tiny = TinyModel::reference();
    let ws = assemble_workspace(&tiny.data, &tiny.groups, &tiny.priors).unwrap();
    let mut cfg = SamplerConfig::new(10, 0, 1, 0);
    cfg.init_tau = Some(vec![0.05]);
    assert!(initial_state(&cfg, &ws, &tiny.priors).is_err());
    cfg.init_tau = None;
    let s: ChainState = initial_state(&cfg, &ws, &tiny.priors).unwrap();
    assert_eq!(s.tau[0], tiny.priors.tau0());
    assert!(s.eta.iter().all(|&v| v == 0.0));
}
