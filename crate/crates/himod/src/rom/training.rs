use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::ParameterDomain;
use crate::error::{Error, Result};

/// Seeded uniform samples of a box-shaped parameter domain.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    domain: ParameterDomain,
    samples: Vec<Vec<f64>>,
    seed: Option<u64>,
}

impl TrainingSet {
    /// Wraps explicit samples after checking they lie in `domain`.
    pub fn from_samples(domain: ParameterDomain, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("training set must hold at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !domain.contains(s)) {
            return Err(Error::Config(format!("sample {bad:?} lies outside the parameter domain")));
        }
        Ok(TrainingSet { domain, samples, seed: None })
    }

    pub fn domain(&self) -> &ParameterDomain {
        &self.domain
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn get(&self, j: usize) -> &[f64] {
        &self.samples[j]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Draws `m` points uniformly in `domain`. Degenerate intervals give constant components.
pub fn sample_training_set(domain: &ParameterDomain, m: usize, seed: u64) -> Result<TrainingSet> {
    if m == 0 {
        return Err(Error::Config("training set size M must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..m)
        .map(|_| {
            domain
                .intervals()
                .iter()
                .map(|&(a, b)| if a == b { a } else { rng.gen_range(a..=b) })
                .collect()
        })
        .collect();
    Ok(TrainingSet { domain: domain.clone(), samples, seed: Some(seed) })
}
