//! ROC curves, AUC and false positive rates over (node, window) instances.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::AnomalyVerdict;
use crate::simulator::Label;

/// One (node, window) pair with its score (larger is more anomalous) and label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredInstance {
    pub node: usize,
    pub window: i64,
    pub score: f64,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocResult {
    pub method: String,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps thresholds over the distinct scores in decreasing order; tied scores
/// form a single vertex. AUC is the trapezoid area under the resulting curve.
pub fn roc(method: &str, instances: &[ScoredInstance]) -> Result<RocResult> {
    if let Some(bad) = instances.iter().find(|i| !i.score.is_finite()) {
        return Err(Error::Evaluation(format!(
            "non-finite score at node {} window {}",
            bad.node, bad.window
        )));
    }
    let pos = instances.iter().filter(|i| i.label).count();
    let neg = instances.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation(format!(
            "ROC needs both classes, got {pos} positives and {neg} negatives"
        )));
    }
    let mut sorted: Vec<&ScoredInstance> = instances.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let (p, n) = (pos as f64, neg as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut twice_area = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].score;
        let (tp0, fp0) = (tp, fp);
        while i < sorted.len() && sorted[i].score == s {
            if sorted[i].label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // exact integer trapezoid: (fp - fp0) * (tp + tp0)
        twice_area += ((fp - fp0) * (tp + tp0)) as f64;
        points.push((fp as f64 / n, tp as f64 / p));
    }
    Ok(RocResult {
        method: method.to_string(),
        points,
        auc: twice_area / (2.0 * p * n),
    })
}

/// Detections among negatives divided by the number of negatives.
pub fn empirical_fpr(verdicts: &[AnomalyVerdict], labels: &[Label]) -> Result<f64> {
    let negatives: std::collections::HashSet<(usize, i64)> =
        labels.iter().filter(|l| l.label == 0).map(|l| (l.node, l.window)).collect();
    let mut total = 0usize;
    let mut hits = 0usize;
    for v in verdicts {
        if negatives.contains(&(v.node, v.window_index)) {
            total += 1;
            hits += v.is_anomaly as usize;
        }
    }
    if total == 0 {
        return Err(Error::Evaluation("no negative instances to compute a false positive rate".into()));
    }
    Ok(hits as f64 / total as f64)
}

/// Scores keyed by (node, window).
pub type ScoreTable = BTreeMap<(usize, i64), f64>;

#[derive(Deserialize)]
struct ScoreRow {
    node: usize,
    window_index: i64,
    score: f64,
}

/// Reads the `node`, `window_index` and `score` columns of a score CSV.
pub fn read_scores<R: Read>(input: R) -> Result<ScoreTable> {
    let mut table = ScoreTable::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: ScoreRow = row?;
        if table.insert((row.node, row.window_index), row.score).is_some() {
            return Err(Error::Evaluation(format!(
                "duplicate score for node {} window {}",
                row.node, row.window_index
            )));
        }
    }
    Ok(table)
}

/// Reads a `node,window,label` CSV.
pub fn read_labels<R: Read>(input: R) -> Result<Vec<Label>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_labels<W: Write>(out: W, labels: &[Label]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for l in labels {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}

/// Joins a score table with the labels. Every labelled pair must be scored;
/// scores for unlabelled pairs (training windows, say) are ignored.
pub fn instances(scores: &ScoreTable, labels: &[Label]) -> Result<Vec<ScoredInstance>> {
    labels
        .iter()
        .map(|l| match scores.get(&(l.node, l.window)) {
            Some(&score) => Ok(ScoredInstance {
                node: l.node,
                window: l.window,
                score,
                label: l.label != 0,
            }),
            None => Err(Error::Evaluation(format!(
                "no score for labelled instance (node {}, window {})",
                l.node, l.window
            ))),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AucRow {
    pub method: String,
    pub auc: f64,
}

/// One ROC per method over the identical labelled instance set.
pub fn compare(methods: &[(String, ScoreTable)], labels: &[Label]) -> Result<Vec<RocResult>> {
    let mut seen = HashMap::new();
    for l in labels {
        if seen.insert((l.node, l.window), ()).is_some() {
            return Err(Error::Evaluation(format!(
                "duplicate label for node {} window {}",
                l.node, l.window
            )));
        }
    }
    methods
        .iter()
        .map(|(name, table)| {
            let inst = instances(table, labels).map_err(|e| Error::Evaluation(format!("{name}: {e}")))?;
            roc(name, &inst)
        })
        .collect()
}

/// `method,fpr,tpr`.
pub fn write_roc_csv<W: Write>(out: W, results: &[RocResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "fpr", "tpr"])?;
    for r in results {
        for &(f, t) in &r.points {
            w.write_record([r.method.clone(), f.to_string(), t.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `method,auc`.
pub fn write_auc_csv<W: Write>(out: W, results: &[RocResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(AucRow {
            method: r.method.clone(),
            auc: r.auc,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting one half.
pub fn mann_whitney(instances: &[ScoredInstance]) -> f64 {
    let pos: Vec<f64> = instances.iter().filter(|i| i.label).map(|i| i.score).collect();
    let neg: Vec<f64> = instances.iter().filter(|i| !i.label).map(|i| i.score).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}
