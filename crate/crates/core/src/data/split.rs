//! Seeded train/test splits, optionally class-balanced.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::krr::LabeledSample;

/// Indices of the training and test items.
///
/// With `balance`, each split holds equally many labels `>= 0` and `< 0`.
pub fn split_indices(
    labels: &[f64],
    n_train: usize,
    n_test: usize,
    seed: u64,
    balance: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let requested = n_train + n_test;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !balance {
        if requested > labels.len() {
            return Err(Error::InsufficientData {
                requested,
                available: labels.len(),
            });
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        let test = order[n_train..requested].to_vec();
        order.truncate(n_train);
        return Ok((order, test));
    }

    if !n_train.is_multiple_of(2) || !n_test.is_multiple_of(2) {
        return Err(Error::OddBalancedSplit { n_train, n_test });
    }
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| labels[i] >= 0.0);
    let per_class = requested / 2;
    let available = 2 * pos.len().min(neg.len());
    if per_class > pos.len().min(neg.len()) {
        return Err(Error::InsufficientData {
            requested,
            available,
        });
    }
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let half_train = n_train / 2;
    let mut train: Vec<usize> = pos[..half_train]
        .iter()
        .chain(&neg[..half_train])
        .copied()
        .collect();
    let mut test: Vec<usize> = pos[half_train..per_class]
        .iter()
        .chain(&neg[half_train..per_class])
        .copied()
        .collect();
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

fn subset(sample: &LabeledSample, indices: &[usize]) -> Result<LabeledSample> {
    LabeledSample::new(
        indices.iter().map(|&i| sample.points()[i].clone()).collect(),
        indices.iter().map(|&i| sample.labels()[i]).collect(),
    )
}

pub fn split(
    sample: &LabeledSample,
    n_train: usize,
    n_test: usize,
    seed: u64,
    balance: bool,
) -> Result<(LabeledSample, LabeledSample)> {
    let (train, test) = split_indices(sample.labels(), n_train, n_test, seed, balance)?;
    Ok((subset(sample, &train)?, subset(sample, &test)?))
}
