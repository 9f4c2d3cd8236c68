use rand::seq::SliceRandom;

use crate::data::Diagnosis;
use crate::error::{Error, Result};
use crate::numcore::seeded_rng;

/// Stratified fold assignment: `result[i]` is the validation fold of session `i`.
///
/// Each class is shuffled with the seeded generator and dealt round-robin, the
/// second class continuing where the first stopped so fold sizes differ by at
/// most one.
pub fn split_cv(labels: &[Diagnosis], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::config(format!("need at least 2 folds, got {folds}")));
    }
    if folds > labels.len() {
        return Err(Error::config(format!(
            "{folds} folds requested for {} sessions",
            labels.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [Diagnosis::Ad, Diagnosis::NonAd] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// (train, validation) session indices for fold `k`.
pub fn fold_indices(assignment: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != k)
}

/// Stratified hold-out split returning (train, test) indices; the test share
/// of each class is `round(n_class * test_fraction)`.
pub fn split_holdout(labels: &[Diagnosis], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!("test fraction {test_fraction} must lie in (0, 1)")));
    }
    let mut rng = seeded_rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Diagnosis::Ad, Diagnosis::NonAd] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::data("hold-out split left an empty side"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
