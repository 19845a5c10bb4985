//! Choice of `delta` by cross-validated false positive rate on normal data.

use serde::{Deserialize, Serialize};

use super::{BoundMode, HalfWidths, Side};
use crate::error::{Error, Result};
use crate::regression::{fit_all, RegressorConfig};
use crate::stream::{node_count_in_window, window_stream, EventStream, Window};

/// Candidate levels, largest first.
pub const DELTA_GRID: [f64; 10] = [0.2, 0.1, 0.05, 0.02, 0.01, 5e-3, 1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub target_fpr: f64,
    pub folds: usize,
    pub mode: BoundMode,
    pub side: Side,
    pub window_length: f64,
    pub origin: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            target_fpr: 0.05,
            folds: 5,
            mode: BoundMode::Plugin,
            side: Side::Bilateral,
            window_length: 1.0,
            origin: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub delta: f64,
    /// False when no grid value met the target; `delta` is then the smallest grid value.
    pub achieved: bool,
    /// Pooled cross-validated FPR for each grid value.
    pub fpr: Vec<(f64, f64)>,
}

/// Contiguous K-fold cross-validation over the training windows.
///
/// Each fold is held out in turn, models are fitted on the remaining windows,
/// and every (node, held-out window) pair is tested at each grid level. The
/// largest level whose pooled detection rate is at most `target_fpr` wins.
pub fn calibrate_delta(train: &EventStream, config: &RegressorConfig, cal: &CalibrationConfig) -> Result<Calibration> {
    if !(cal.target_fpr > 0.0 && cal.target_fpr <= 1.0) {
        return Err(Error::Config(format!("target FPR must lie in (0, 1], got {}", cal.target_fpr)));
    }
    if cal.folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {}", cal.folds)));
    }
    config.validate()?;
    let windowed = window_stream(train.clone(), cal.window_length, cal.origin)?;
    let t = windowed.len();
    if t < cal.folds {
        return Err(Error::InsufficientData(format!(
            "{t} training windows cannot be split into {} folds",
            cal.folds
        )));
    }
    let n_nodes = train.node_count();
    let nodes: Vec<usize> = (0..n_nodes).collect();
    let mut detections = [0u64; DELTA_GRID.len()];
    let mut total = 0u64;
    let mut widths = HalfWidths::default();

    for k in 0..cal.folds {
        let (lo, hi) = (k * t / cal.folds, (k + 1) * t / cal.folds);
        let fit_stream = windowed.substream((0..lo).chain(hi..t));
        if fit_stream.is_empty() {
            return Err(Error::InsufficientData(format!("fold {k} leaves no training events")));
        }
        let models = fit_all(&fit_stream, config)?;
        let held: Vec<Window<'_>> = (lo..hi).map(|p| windowed.window(p)).collect();
        let means = models.predicted_means_in(&held, &nodes)?;
        for (&j, mu) in nodes.iter().zip(&means) {
            for (w, &mu_hat) in held.iter().zip(mu) {
                total += 1;
                let n_t = w.n();
                if n_t == 0 {
                    continue;
                }
                let m = node_count_in_window(w.events, n_nodes, j)? as f64;
                for (g, &delta) in DELTA_GRID.iter().enumerate() {
                    let s = widths.get(cal.mode, n_t, delta)?;
                    let hit = match cal.side {
                        Side::Bilateral => (m - mu_hat).abs() > s,
                        Side::Unilateral => m < mu_hat - s,
                    };
                    detections[g] += hit as u64;
                }
            }
        }
    }

    let fpr: Vec<(f64, f64)> = DELTA_GRID
        .iter()
        .zip(detections)
        .map(|(&d, c)| (d, c as f64 / total as f64))
        .collect();
    let chosen = fpr.iter().find(|(_, rate)| *rate <= cal.target_fpr);
    Ok(match chosen {
        Some(&(delta, _)) => Calibration {
            delta,
            achieved: true,
            fpr,
        },
        None => Calibration {
            delta: DELTA_GRID[DELTA_GRID.len() - 1],
            achieved: false,
            fpr,
        },
    })
}
