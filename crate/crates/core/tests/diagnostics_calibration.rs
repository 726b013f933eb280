mod common;

use common::{ar1, ar1_mean_sd};
use pgglmm::diagnostics::{batch_means_se_default, effective_sample_size, summarize};
use pgglmm::gibbs::{run_chain, SamplerConfig};
use pgglmm::oracles::TinyModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn average_se(rho: f64, len: usize, reps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..reps)
        .map(|_| batch_means_se_default(&ar1(rho, len, &mut rng)).unwrap().se)
        .sum::<f64>()
        / reps as f64
}

#[test]
fn iid_mcse_is_calibrated() {
    let got = average_se(0.0, 10_000, 100, 400);
    assert!((got / 0.01 - 1.0).abs() < 0.2, "{got}");
}

#[test]
fn ar1_mcse_is_calibrated() {
    let want = ar1_mean_sd(0.5, 10_000);
    let got = average_se(0.5, 10_000, 100, 401);
    assert!((got / want - 1.0).abs() < 0.2, "{got} vs {want}");
}

#[test]
fn ess_tracks_autocorrelation() {
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    let iid = effective_sample_size(&ar1(0.0, 20_000, &mut rng)).unwrap();
    let sticky = effective_sample_size(&ar1(0.9, 20_000, &mut rng)).unwrap();
    // (1 − ρ)/(1 + ρ) of the length for ρ = 0.9 is about 1050.
    assert!(sticky < 0.25 * iid, "{sticky} vs {iid}");
    assert!(sticky > 400.0 && sticky < 2_500.0, "{sticky}");
}

#[test]
fn tiny_model_mcse_shrinks_with_length() {
    let tiny = TinyModel::reference();
    let mut ratios = Vec::new();
    for rep in 0..20u64 {
        let mut se = [0.0; 2];
        for (slot, len) in [5_000usize, 10_000].into_iter().enumerate() {
            let cfg = SamplerConfig::new(len, 500, 1, 1_000 + 2 * rep + slot as u64);
            let out = run_chain(&cfg, &tiny.data, &tiny.groups, &tiny.priors).unwrap();
            se[slot] = batch_means_se_default(&out.draws.column(0)).unwrap().se;
        }
        ratios.push(se[1] / se[0]);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((0.6..=0.85).contains(&mean), "{mean}");
}

#[test]
fn identical_seeds_give_identical_tables() {
    let tiny = TinyModel::reference();
    let cfg = SamplerConfig::new(3_000, 100, 2, 403);
    let a = run_chain(&cfg, &tiny.data, &tiny.groups, &tiny.priors).unwrap();
    let b = run_chain(&cfg, &tiny.data, &tiny.groups, &tiny.priors).unwrap();
    let (ta, tb) = (summarize(&a.draws).unwrap(), summarize(&b.draws).unwrap());
    assert_eq!(serde_json::to_string(&ta).unwrap(), serde_json::to_string(&tb).unwrap());
    assert_eq!(a.draws.nrows(), 1_450);
}
