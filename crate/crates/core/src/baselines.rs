//! Competitor detectors on the per-window aggregated graphs.
//!
//! * heard-node: leave-one-out Poisson fit on each node's event count.
//! * heard-edge: leave-one-out Poisson fit on each edge; a node scores minus
//!   the sum of its edges' p-values.
//! * scan: weighted degree standardised against the preceding `w` windows.
//! * scan-batch: weighted degree standardised against a training batch.
//!
//! Every score table is oriented so that larger means more anomalous.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::evaluation::ScoreTable;
use crate::scoring::Side;
use crate::stream::{aggregate_window, node_count_in_window, AggregatedGraph, Window, WindowedStream};

/// Rate floor for leave-one-out Poisson fits.
pub const LAMBDA_FLOOR: f64 = 0.5;
/// Default scan lookback in windows.
pub const DEFAULT_SCAN_WINDOW: usize = 20;
const SD_FLOOR: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    HeardNode,
    HeardEdge,
    Scan,
    ScanBatch,
}

impl BaselineMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::HeardNode => "heard-node",
            BaselineMethod::HeardEdge => "heard-edge",
            BaselineMethod::Scan => "scan",
            BaselineMethod::ScanBatch => "scan-batch",
        }
    }

    pub const ALL: [BaselineMethod; 4] = [
        BaselineMethod::HeardNode,
        BaselineMethod::HeardEdge,
        BaselineMethod::Scan,
        BaselineMethod::ScanBatch,
    ];
}

/// Mid-p two-sided Poisson p-value `2 min(P(X<k) + P(X=k)/2, P(X>k) + P(X=k)/2)`, capped at 1.
///
/// The smaller tail is summed term by term from `k` outwards; the other is its complement.
pub fn poisson_two_sided_pvalue(k: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("Poisson rate must be positive, got {lambda}")));
    }
    let kf = k as f64;
    let ln_l = lambda.ln();
    let pmf_k = (kf * ln_l - lambda - ln_gamma(kf + 1.0)).exp();
    let (below, above) = if kf <= lambda {
        // P(X < k): terms shrink going down from k - 1
        let mut sum = 0.0;
        let mut term = pmf_k;
        let mut i = k;
        while i > 0 {
            term *= i as f64 / lambda;
            sum += term;
            i -= 1;
            if term <= sum * 1e-17 {
                break;
            }
        }
        (sum, (1.0 - sum - pmf_k).max(0.0))
    } else {
        // P(X > k): terms shrink going up from k + 1
        let mut sum = 0.0;
        let mut term = pmf_k;
        let mut i = k + 1;
        loop {
            term *= lambda / i as f64;
            sum += term;
            i += 1;
            if term <= sum * 1e-17 || term == 0.0 {
                break;
            }
        }
        ((1.0 - sum - pmf_k).max(0.0), sum)
    };
    let p = 2.0 * (below + 0.5 * pmf_k).min(above + 0.5 * pmf_k);
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Leave-one-out means: entry `t` is the mean of every value but `series[t]`.
pub fn leave_one_out_rates(series: &[u64]) -> Vec<f64> {
    let total: u64 = series.iter().sum();
    let others = (series.len() - 1).max(1) as f64;
    series.iter().map(|&x| (total - x) as f64 / others).collect()
}

/// A series that never leaves zero carries no evidence and gets `p = 1` everywhere.
fn heard_pvalues(series: &[u64]) -> Vec<f64> {
    if series.iter().all(|&x| x == 0) {
        return vec![1.0; series.len()];
    }
    leave_one_out_rates(series)
        .into_iter()
        .zip(series)
        .map(|(rate, &x)| poisson_two_sided_pvalue(x, rate.max(LAMBDA_FLOOR)).expect("rate is floored"))
        .collect()
}

fn check_len(series_len: usize, what: &str) -> Result<()> {
    if series_len < 2 {
        return Err(Error::Config(format!("{what} needs at least 2 windows, got {series_len}")));
    }
    Ok(())
}

/// Minus the leave-one-out Poisson p-value of each window's count.
pub fn heard_node_scores(series: &[u64]) -> Result<Vec<f64>> {
    check_len(series.len(), "heard-node")?;
    Ok(heard_pvalues(series).into_iter().map(|p| -p).collect())
}

/// `scores[node][window]`: minus the sum of the p-values of the node's active edges.
pub fn heard_edge_scores(graphs: &[AggregatedGraph]) -> Result<Vec<Vec<f64>>> {
    check_len(graphs.len(), "heard-edge")?;
    let n = graphs[0].node_count();
    let t = graphs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
    let edge_p: Vec<Option<Vec<f64>>> = pairs
        .par_iter()
        .map(|&(u, v)| {
            let series: Vec<u64> = graphs.iter().map(|g| g.get(u, v) as u64).collect();
            series.iter().any(|&x| x > 0).then(|| heard_pvalues(&series))
        })
        .collect();
    let mut scores = vec![vec![0.0; t]; n];
    for (&(u, v), p) in pairs.iter().zip(&edge_p) {
        let Some(p) = p else { continue };
        for (k, &pk) in p.iter().enumerate() {
            scores[u][k] -= pk;
            scores[v][k] -= pk;
        }
    }
    Ok(scores)
}

fn mean_sd(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn orient(z: f64, side: Side) -> f64 {
    match side {
        Side::Bilateral => z.abs(),
        Side::Unilateral => -z,
    }
}

/// Standardised deviation from the preceding `w` values; 0 while fewer than `w` precede.
pub fn scan_statistic_scores(series: &[u64], w: usize, side: Side) -> Result<Vec<f64>> {
    if w < 2 {
        return Err(Error::Config(format!("scan lookback must be at least 2, got {w}")));
    }
    Ok((0..series.len())
        .map(|t| {
            if t < w {
                return 0.0;
            }
            let (mean, sd) = mean_sd(&series[t - w..t]);
            orient((series[t] as f64 - mean) / sd.max(SD_FLOOR), side)
        })
        .collect())
}

/// Standardised deviation from the mean and sd of a fixed batch.
pub fn scan_batch_scores(series: &[u64], batch: &[u64], side: Side) -> Result<Vec<f64>> {
    if batch.len() < 2 {
        return Err(Error::Config(format!("scan batch needs at least 2 windows, got {}", batch.len())));
    }
    let (mean, sd) = mean_sd(batch);
    Ok(series
        .iter()
        .map(|&x| orient((x as f64 - mean) / sd.max(SD_FLOOR), side))
        .collect())
}

/// Baseline settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub method: BaselineMethod,
    /// Scan lookback.
    pub window: usize,
    pub side: Side,
}

impl BaselineParams {
    pub fn new(method: BaselineMethod) -> Self {
        BaselineParams {
            method,
            window: DEFAULT_SCAN_WINDOW,
            side: Side::Bilateral,
        }
    }
}

/// Scores for every node over the scored windows.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineScoreTable {
    pub method: BaselineMethod,
    pub window_indices: Vec<i64>,
    pub n_t: Vec<usize>,
    /// `m[node][window]`: events the node took part in.
    pub m: Vec<Vec<usize>>,
    /// `scores[node][window]`.
    pub scores: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct BaselineRow<'a> {
    node: usize,
    window_index: i64,
    n_t: usize,
    m: usize,
    mu_hat: Option<f64>,
    half_width: Option<f64>,
    score: f64,
    is_anomaly: Option<bool>,
    side: &'a str,
    mode: Option<&'a str>,
    delta: Option<f64>,
}

impl BaselineScoreTable {
    pub fn node_count(&self) -> usize {
        self.scores.len()
    }

    /// Scores keyed by `(node, window_index)`, as read back by evaluation.
    pub fn score_table(&self) -> ScoreTable {
        self.scores
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().zip(&self.window_indices).map(move |(&s, &w)| ((j, w), s)))
            .collect()
    }

    /// Same columns as the detector's score CSV; detector-only fields are empty.
    pub fn write_csv<W: Write>(&self, out: W, side: Side) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (node, row) in self.scores.iter().enumerate() {
            for (k, &score) in row.iter().enumerate() {
                w.serialize(BaselineRow {
                    node,
                    window_index: self.window_indices[k],
                    n_t: self.n_t[k],
                    m: self.m[node][k],
                    mu_hat: None,
                    half_width: None,
                    score,
                    is_anomaly: None,
                    side: side.as_str(),
                    mode: None,
                    delta: None,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn count_series(windows: &[Window<'_>], node_count: usize) -> Vec<Vec<u64>> {
    (0..node_count)
        .into_par_iter()
        .map(|j| {
            windows
                .iter()
                .map(|w| node_count_in_window(w.events, node_count, j).expect("node in range") as u64)
                .collect()
        })
        .collect()
}

fn degree_series(graphs: &[AggregatedGraph], node_count: usize) -> Vec<Vec<u64>> {
    (0..node_count)
        .map(|j| graphs.iter().map(|g| g.weighted_degree(j)).collect())
        .collect()
}

/// Runs a baseline on `target`. Windows of `context`, when given, precede the
/// target windows: they enter leave-one-out fits and scan lookbacks, and form
/// the batch of scan-batch, but are not scored.
pub fn run_baseline(
    target: &WindowedStream,
    context: Option<&WindowedStream>,
    params: &BaselineParams,
) -> Result<BaselineScoreTable> {
    let n = target.node_count();
    if let Some(c) = context {
        if c.node_count() != n {
            return Err(Error::Config(format!(
                "training stream has {} nodes but the scored stream has {n}",
                c.node_count()
            )));
        }
    }
    let ctx: Vec<Window<'_>> = context.map(|c| c.windows().collect()).unwrap_or_default();
    let tgt: Vec<Window<'_>> = target.windows().collect();
    let all: Vec<Window<'_>> = ctx.iter().chain(&tgt).copied().collect();
    let skip = ctx.len();

    let counts = count_series(&tgt, n);
    let full_scores: Vec<Vec<f64>> = match params.method {
        BaselineMethod::HeardNode => count_series(&all, n)
            .par_iter()
            .map(|s| heard_node_scores(s))
            .collect::<Result<_>>()?,
        BaselineMethod::HeardEdge => {
            let graphs: Vec<AggregatedGraph> = all.par_iter().map(|w| aggregate_window(w.events, n)).collect();
            heard_edge_scores(&graphs)?
        }
        BaselineMethod::Scan => {
            let graphs: Vec<AggregatedGraph> = all.par_iter().map(|w| aggregate_window(w.events, n)).collect();
            degree_series(&graphs, n)
                .iter()
                .map(|s| scan_statistic_scores(s, params.window, params.side))
                .collect::<Result<_>>()?
        }
        BaselineMethod::ScanBatch => {
            if ctx.is_empty() {
                return Err(Error::Config("scan-batch needs a training stream as its batch".into()));
            }
            let batch_graphs: Vec<AggregatedGraph> = ctx.par_iter().map(|w| aggregate_window(w.events, n)).collect();
            let graphs: Vec<AggregatedGraph> = tgt.par_iter().map(|w| aggregate_window(w.events, n)).collect();
            let batch = degree_series(&batch_graphs, n);
            let series = degree_series(&graphs, n);
            let scores: Vec<Vec<f64>> = series
                .iter()
                .zip(&batch)
                .map(|(s, b)| scan_batch_scores(s, b, params.side))
                .collect::<Result<_>>()?;
            // already restricted to the target windows
            return Ok(BaselineScoreTable {
                method: params.method,
                window_indices: target.window_indices(),
                n_t: tgt.iter().map(|w| w.n()).collect(),
                m: to_usize(counts),
                scores,
            });
        }
    };
    Ok(BaselineScoreTable {
        method: params.method,
        window_indices: target.window_indices(),
        n_t: tgt.iter().map(|w| w.n()).collect(),
        m: to_usize(counts),
        scores: full_scores.into_iter().map(|s| s[skip..].to_vec()).collect(),
    })
}

fn to_usize(counts: Vec<Vec<u64>>) -> Vec<Vec<usize>> {
    counts
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as usize).collect())
        .collect()
}
