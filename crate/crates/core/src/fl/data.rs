use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::ClassDistribution;

/// Labelled feature vectors stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn empty(dim: usize, n_classes: usize) -> Self {
        Dataset {
            dim,
            n_classes,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_samples(dim: usize, n_classes: usize, samples: Vec<(Vec<f64>, usize)>) -> Result<Self> {
        let mut ds = Dataset::empty(dim, n_classes);
        for (x, y) in samples {
            ds.push(&x, y)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, x: &[f64], label: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!("feature length {} != {}", x.len(), self.dim)));
        }
        if label >= self.n_classes {
            return Err(Error::invalid(format!("label {label} outside {} classes", self.n_classes)));
        }
        self.features.extend_from_slice(x);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_counts(&self) -> ClassDistribution {
        let mut counts = vec![0u64; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        ClassDistribution(counts)
    }

    pub fn extend(&mut self, other: &Dataset) {
        assert_eq!((self.dim, self.n_classes), (other.dim, other.n_classes));
        self.features.extend_from_slice(&other.features);
        self.labels.extend_from_slice(&other.labels);
    }

    /// Removes the last `count` samples of `class` and returns them.
    pub fn take_class(&mut self, class: usize, count: usize) -> Result<Dataset> {
        let positions: Vec<usize> = (0..self.len()).rev().filter(|&i| self.labels[i] == class).take(count).collect();
        if positions.len() < count {
            return Err(Error::invalid(format!(
                "asked for {count} samples of class {class}, only {} held",
                positions.len()
            )));
        }
        let mut taken = Dataset::empty(self.dim, self.n_classes);
        for &i in positions.iter().rev() {
            taken.features.extend_from_slice(self.features(i));
            taken.labels.push(class);
        }
        // positions is descending, so removal never shifts a later target.
        for &i in &positions {
            self.labels.remove(i);
            self.features.drain(i * self.dim..(i + 1) * self.dim);
        }
        Ok(taken)
    }
}

/// Isotropic Gaussian class clusters with random centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub means: Vec<Vec<f64>>,
    pub noise_std: f64,
}

impl GaussianMixture {
    /// Class centres drawn from `N(0, separation^2 I)`.
    pub fn random<R: Rng + ?Sized>(n_classes: usize, dim: usize, separation: f64, noise_std: f64, rng: &mut R) -> Self {
        let means = (0..n_classes)
            .map(|_| {
                (0..dim)
                    .map(|_| separation * Distribution::<f64>::sample(&StandardNormal, rng))
                    .collect::<Vec<f64>>()
            })
            .collect();
        GaussianMixture { means, noise_std }
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.means.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> Vec<f64> {
        self.means[class]
            .iter()
            .map(|&m| m + self.noise_std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect()
    }

    /// A dataset with exactly `counts[class]` samples of each class.
    pub fn dataset<R: Rng + ?Sized>(&self, counts: &ClassDistribution, rng: &mut R) -> Dataset {
        let mut ds = Dataset::empty(self.dim(), self.n_classes());
        for (class, &count) in counts.0.iter().enumerate() {
            for _ in 0..count {
                let x = self.sample(class, rng);
                ds.push(&x, class).expect("dimensions match the mixture");
            }
        }
        ds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn generated_counts_match_request() {
        let mut rng = rng_from_seed(1);
        let mix = GaussianMixture::random(4, 3, 2.0, 1.0, &mut rng);
        let counts = ClassDistribution(vec![5, 0, 2, 7]);
        let ds = mix.dataset(&counts, &mut rng);
        assert_eq!(ds.class_counts(), counts);
        assert_eq!(ds.len(), 14);
    }

    #[test]
    fn take_class_moves_samples() {
        let mut rng = rng_from_seed(2);
        let mix = GaussianMixture::random(3, 2, 2.0, 1.0, &mut rng);
        let mut ds = mix.dataset(&ClassDistribution(vec![4, 3, 2]), &mut rng);
        let before = ds.clone();
        let taken = ds.take_class(1, 2).unwrap();
        assert_eq!(taken.class_counts().0, vec![0, 2, 0]);
        assert_eq!(ds.class_counts().0, vec![4, 1, 2]);
        // The moved rows are the last two class-1 rows of the original.
        assert_eq!(taken.features(0), before.features(5));
        assert_eq!(taken.features(1), before.features(6));
        assert!(ds.take_class(2, 3).is_err());
    }

    #[test]
    fn push_validates() {
        let mut ds = Dataset::empty(2, 2);
        assert!(ds.push(&[1.0], 0).is_err());
        assert!(ds.push(&[1.0, 2.0], 2).is_err());
        assert!(ds.push(&[1.0, 2.0], 1).is_ok());
    }
}
