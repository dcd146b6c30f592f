mod common;

use common::perturb_off_diagonal;
use love::covariance::CovMatrix;
use love::fixtures::overlap_example;
use love::model::PurePartition;
use love::moments::estimate_c;
use love::pure::estimate_pure_rows;
use love::tuning::cv_criterion;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// CV value of `groups` with the fit on `fit_sigma` and the score on
/// `holdout`.
pub fn cv_of(groups: Vec<Vec<usize>>, fit_sigma: &CovMatrix, holdout: &CovMatrix) -> f64 {
    let rows = estimate_pure_rows(fit_sigma, &PurePartition::from_groups(groups)).unwrap();
    let c = estimate_c(fit_sigma, &rows.partition).unwrap();
    cv_criterion(holdout, &rows.partition, &c).unwrap()
}

#[test]
fn true_partition_beats_misspecified_ones() {
    let (tau, eps) = (1.0, 0.05);
    let sigma = overlap_example(tau).population_covariance().values;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let s1 = CovMatrix::population(perturb_off_diagonal(&sigma, eps, &mut rng));
        let s2 = CovMatrix::population(perturb_off_diagonal(&sigma, eps, &mut rng));
        let truth = cv_of(vec![vec![0, 1], vec![2, 3], vec![4, 5]], &s2, &s1);
        assert!(truth <= 2.0 * eps, "true partition scored {truth}");
        let swapped = cv_of(vec![vec![0, 1], vec![2, 4], vec![3, 5]], &s2, &s1);
        assert!(swapped > 2.0 * eps);
        let contaminated = cv_of(vec![vec![0, 1], vec![2, 3], vec![4, 5, 6]], &s2, &s1);
        assert!(contaminated > 2.0 * eps);
    }
}

#[test]
fn exact_halves_score_zero_at_truth() {
    let s = overlap_example(1.0).population_covariance();
    assert!(cv_of(vec![vec![0, 1], vec![2, 3], vec![4, 5]], &s, &s) < 1e-15);
}
