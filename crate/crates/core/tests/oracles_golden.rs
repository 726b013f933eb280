mod common;

use common::{GOLDEN_ERROR, GOLDEN_MEAN};
use pgglmm::oracles::stats::mean_se;
use pgglmm::oracles::{exact_posterior_draws, quadrature_posterior_mean, verify_proof_inequalities, TinyModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn quadrature_reproduces_frozen_means() {
    let q = quadrature_posterior_mean(&TinyModel::reference()).unwrap();
    assert_eq!(q.names, ["beta.1", "tau.1"]);
    for k in 0..2 {
        assert!(q.error[k] <= GOLDEN_ERROR[k], "error {} exceeds frozen bar", q.error[k]);
        assert!((q.mean[k] - GOLDEN_MEAN[k]).abs() <= GOLDEN_ERROR[k], "{} vs {}", q.mean[k], GOLDEN_MEAN[k]);
    }
    assert!(q.points_per_axis <= 200);
}

#[test]
fn exact_draws_agree_with_quadrature() {
    let tiny = TinyModel::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let exact = exact_posterior_draws(&tiny, 20_000, &mut rng).unwrap();
    assert!(exact.acceptance_rate > 1e-4);
    let names = exact.draws.names().to_vec();
    for (k, target) in ["beta.1", "tau.1"].iter().enumerate() {
        let j = names.iter().position(|n| n == target).unwrap();
        let (m, se) = mean_se(&exact.draws.column(j));
        assert!((m - GOLDEN_MEAN[k]).abs() < 3.5 * se + GOLDEN_ERROR[k], "{target}: {m} vs {}", GOLDEN_MEAN[k]);
    }
}

#[test]
fn proof_inequalities_hold_on_a_small_battery() {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let report = verify_proof_inequalities(1_000, &mut rng);
    assert!(report.passed(), "{report:?}");
}
