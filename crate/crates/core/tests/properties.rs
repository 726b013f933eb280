mod common;

use common::random_model;
use pgglmm::diagnostics::{batch_means_se, effective_sample_size};
use pgglmm::ergodicity::{iterations_for, tv_bound};
use pgglmm::gibbs::{draw_tau, gibbs_step, initial_state, IterationRng, SamplerConfig};
use pgglmm::model::{assemble_workspace, build_a};
use pgglmm::pg::{pg_sample, PgParams};
use pgglmm::rng::{Block, StreamRoot};
use proptest::prelude::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_bound_decreases_and_budget_is_tight(delta in 1e-6f64..0.999, eps in 1e-6f64..0.999) {
        let m = iterations_for(delta, eps).unwrap();
        prop_assert!(tv_bound(delta, m).unwrap() <= eps);
        if m > 0 {
            prop_assert!(tv_bound(delta, m - 1).unwrap() > eps);
        }
        prop_assert!(tv_bound(delta, m + 1).unwrap() <= tv_bound(delta, m).unwrap());
    }

    #[test]
    fn budget_grows_as_epsilon_shrinks(delta in 1e-4f64..0.9, e1 in 1e-6f64..0.5, f in 0.01f64..1.0) {
        let e2 = e1 * f;
        prop_assert!(iterations_for(delta, e2).unwrap() >= iterations_for(delta, e1).unwrap());
    }

    #[test]
    fn assembly_is_pure(seed in any::<u64>()) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = assemble_workspace(&m.data, &m.groups, &m.priors).unwrap();
        let b = assemble_workspace(&m.data, &m.groups, &m.priors).unwrap();
        prop_assert_eq!(&a, &b);
        let kappa_ok = a.kappa.iter().zip(m.data.y()).zip(m.data.n())
            .all(|((k, &y), &n)| *k == y as f64 - n as f64 / 2.0);
        prop_assert!(kappa_ok);
        prop_assert_eq!(a.n_total, m.data.n().iter().map(|&n| n as u64).sum::<u64>());
    }

    #[test]
    fn precision_is_block_diagonal(seed in any::<u64>(), t in proptest::collection::vec(0.01f64..10.0, 2)) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let tau = &t[..m.groups.len()];
        let a = build_a(tau, &m.priors, &m.groups).unwrap();
        let p = m.priors.q().nrows();
        prop_assert_eq!(a.nrows(), p + m.groups.total());
        let mut k = p;
        for (j, &s) in m.groups.sizes().iter().enumerate() {
            for _ in 0..s {
                prop_assert_eq!(a[(k, k)], tau[j]);
                k += 1;
            }
        }
        let det_expected = m.priors.q().determinant()
            * m.groups.sizes().iter().zip(tau).map(|(&s, &t)| t.powi(s as i32)).product::<f64>();
        prop_assert!((a.determinant() - det_expected).abs() <= 1e-9 * det_expected.abs().max(1.0));
        for i in p..a.nrows() {
            for j in 0..a.ncols() {
                if i != j {
                    prop_assert_eq!(a[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn tau_draws_respect_truncation(seed in any::<u64>(), scale in 0.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng);
        let u: Vec<f64> = (0..m.groups.total()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let root = StreamRoot::new(seed);
        let tau = draw_tau(&u, &m.priors, &m.groups, IterationRng::new(&root, 0)).unwrap();
        prop_assert!(tau.iter().all(|&t| t.is_finite() && t >= m.priors.tau0()));
    }

    #[test]
    fn steps_stay_valid(seed in any::<u64>()) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let ws = assemble_workspace(&m.data, &m.groups, &m.priors).unwrap();
        let cfg = SamplerConfig::new(20, 0, 1, seed);
        let mut s = initial_state(&cfg, &ws, &m.priors).unwrap();
        let root = StreamRoot::new(seed);
        for it in 0..20 {
            s = gibbs_step(&s, &ws, &m.priors, IterationRng::new(&root, it)).unwrap();
            prop_assert!(s.is_valid(m.priors.tau0()));
            prop_assert_eq!(s.eta.len(), ws.dim());
            prop_assert_eq!(s.omega.len(), ws.observations());
        }
    }

    #[test]
    fn batch_means_are_sane(xs in proptest::collection::vec(-1e3f64..1e3, 20..400)) {
        let bm = batch_means_se(&xs, 4).unwrap();
        prop_assert!(bm.se >= 0.0 && bm.se.is_finite());
        let ess = effective_sample_size(&xs).unwrap();
        prop_assert!(ess > 0.0 && ess <= xs.len() as f64);
    }

    #[test]
    fn streams_do_not_depend_on_request_order(seed in any::<u64>(), ids in proptest::collection::vec((0u64..1000, 0u64..4, 0u64..64), 1..20)) {
        let root = StreamRoot::new(seed);
        let block = |b: u64| [Block::Tau, Block::Omega, Block::Eta, Block::Aux][b as usize];
        let forward: Vec<u64> = ids.iter().map(|&(i, b, k)| root.stream(i, block(b), k).next_u64()).collect();
        let mut backward: Vec<u64> = ids.iter().rev().map(|&(i, b, k)| root.stream(i, block(b), k).next_u64()).collect();
        backward.reverse();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn pg_draws_are_positive(b in 1u32..20, c in -100.0f64..100.0, seed in any::<u64>()) {
        let p = PgParams::folded(b, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let w = pg_sample(p, &mut rng);
            prop_assert!(w > 0.0 && w.is_finite());
        }
    }
}

#[cfg(feature = "cli")]
mod config {
    use pgglmm::io::RunConfig;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn config_round_trips(
            iters in 2usize..100_000,
            seed in any::<u64>(),
            chains in 1usize..5,
            precision in 1e-4f64..100.0,
            a in 0.5f64..5.0,
            tau0 in 1e-6f64..1.0,
            eps in proptest::collection::vec(1e-6f64..0.9, 1..4),
        ) {
            let text = format!(
                "[data]\npath = \"d.csv\"\ny = \"y\"\nfixed = [\"x\"]\ngroups = [\"g\"]\n\
                 [prior]\nprecision = {precision:?}\na = {a:?}\ntau0 = {tau0:?}\n\
                 [sampler]\niterations = {iters}\nburnin = 1\nseed = {seed}\nchains = {chains}\n\
                 [planner]\nepsilon = {eps:?}\n"
            );
            let cfg = RunConfig::from_toml_str(&text).unwrap();
            prop_assert_eq!(cfg.sampler.iterations, iters);
            prop_assert_eq!(cfg.sampler.seed, seed);
            let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            prop_assert_eq!(cfg, again);
        }
    }
}
