//! Nadaraya-Watson smoothing over Hamming distance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::data::TrainingData;
use crate::stream::BinaryVector;

/// Kernel profile as a function of the Hamming distance `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// `exp(-d / h)`; strictly positive everywhere.
    Exponential,
    /// `exp(-d / h)` for `d <= radius`, zero beyond.
    Truncated { radius: usize },
}

/// Kernel-weighted average of the training targets. Identical training rows are
/// pooled into one entry with a multiplicity and a positive count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSmoother {
    kernel: Kernel,
    bandwidth: f64,
    rows: Vec<BinaryVector>,
    count: Vec<u32>,
    positive: Vec<u32>,
    base_rate: f64,
    /// Kernel value per distance 0..=n_features.
    weights: Vec<f64>,
}

impl KernelSmoother {
    pub fn fit(data: &TrainingData, bandwidth: f64, kernel: Kernel) -> KernelSmoother {
        assert!(bandwidth > 0.0, "bandwidth must be positive");
        let mut slot: HashMap<BinaryVector, usize> = HashMap::new();
        let mut rows = Vec::new();
        let mut count = Vec::new();
        let mut positive = Vec::new();
        for r in 0..data.len() {
            let v = data.row_vector(r);
            let idx = *slot.entry(v.clone()).or_insert_with(|| {
                rows.push(v);
                count.push(0);
                positive.push(0);
                rows.len() - 1
            });
            count[idx] += 1;
            positive[idx] += data.target(r) as u32;
        }
        let weights = (0..=data.n_features())
            .map(|d| match kernel {
                Kernel::Truncated { radius } if d > radius => 0.0,
                _ => (-(d as f64) / bandwidth).exp(),
            })
            .collect();
        KernelSmoother {
            kernel,
            bandwidth,
            rows,
            count,
            positive,
            base_rate: data.base_rate(),
            weights,
        }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Training base rate, returned when the query has no kernel mass.
    pub fn base_rate(&self) -> f64 {
        self.base_rate
    }

    pub fn predict(&self, x: &BinaryVector) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((row, &c), &p) in self.rows.iter().zip(&self.count).zip(&self.positive) {
            let k = self.weights[row.hamming(x)];
            num += k * p as f64;
            den += k * c as f64;
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            self.base_rate
        }
    }
}
