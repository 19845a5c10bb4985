//! Confidence bands, anomaly scores and detection verdicts.
//!
//! For node `j` in a window with `n_t` events, the expected participation
//! count `mu_hat` is the sum of the fitted conditional probabilities over the
//! window's events. A count outside `mu_hat ± s`, where `s` inverts the chosen
//! tail bound at level `delta`, is flagged.

mod bounds;
mod calibrate;

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{predicted_mean, ConditionalModel, ModelSet};
use crate::stream::{node_count_in_window, Window, WindowedStream};

pub use bounds::{
    bound, hoeffding_halfwidth, hoeffding_tail, invert_bound, theorem_bound, theorem_bound_closed, BoundMode,
};
pub use calibrate::{calibrate_delta, Calibration, CalibrationConfig, DELTA_GRID};

/// Direction of deviations that count as anomalous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Too many or too few participations.
    Bilateral,
    /// Too few participations only.
    Unilateral,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Bilateral => "bilateral",
            Side::Unilateral => "unilateral",
        }
    }
}

/// `2 exp(-2 (m - mu)^2 / n_t)`; small values are anomalous.
pub fn bilateral_score(m: usize, mu: f64, n_t: usize) -> f64 {
    let d = m as f64 - mu;
    2.0 * (-2.0 * d * d / n_t as f64).exp()
}

/// `-exp(-2 (mu_hat - m) / (9 n_t))`; increases as `m` falls below `mu_hat`.
pub fn unilateral_score(m: usize, mu_hat: f64, n_t: usize) -> f64 {
    -(-2.0 * (mu_hat - m as f64) / (9.0 * n_t as f64)).exp()
}

/// Variant of [`unilateral_score`] with a signed squared deviation in the exponent.
pub fn unilateral_score_squared(m: usize, mu_hat: f64, n_t: usize) -> f64 {
    let d = mu_hat - m as f64;
    -(-2.0 * d * d.abs() / (9.0 * n_t as f64)).exp()
}

/// Detection settings shared by every (node, window) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    pub delta: f64,
    pub mode: BoundMode,
    pub side: Side,
    /// Use [`unilateral_score_squared`] as the unilateral ranking score.
    pub squared_unilateral: bool,
}

impl DetectParams {
    pub fn new(delta: f64, mode: BoundMode, side: Side) -> Self {
        DetectParams {
            delta,
            mode,
            side,
            squared_unilateral: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        bounds::check_delta(self.delta)
    }
}

/// Feasible range of counts at level `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub node: usize,
    pub window_index: i64,
    pub center: f64,
    pub half_width: f64,
    pub delta: f64,
    pub mode: BoundMode,
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of testing one node in one window; serialises as one score CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyVerdict {
    pub node: usize,
    pub window_index: i64,
    pub n_t: usize,
    pub m: usize,
    pub mu_hat: f64,
    pub half_width: f64,
    /// Ranking score: larger is more anomalous.
    pub score: f64,
    pub is_anomaly: bool,
    pub side: Side,
    pub mode: BoundMode,
    pub delta: f64,
}

/// Memoises half-widths by window size; bisection for the minimised bound is not free.
#[derive(Debug, Default)]
pub struct HalfWidths {
    cache: HashMap<(usize, u64, BoundMode), f64>,
}

impl HalfWidths {
    pub fn get(&mut self, mode: BoundMode, n_t: usize, delta: f64) -> Result<f64> {
        let key = (n_t, delta.to_bits(), mode);
        if let Some(&s) = self.cache.get(&key) {
            return Ok(s);
        }
        let s = invert_bound(mode, n_t, delta)?;
        self.cache.insert(key, s);
        Ok(s)
    }
}

/// Verdict and band from a precomputed count and expected count.
pub fn assess(
    node: usize,
    window_index: i64,
    n_t: usize,
    m: usize,
    mu_hat: f64,
    params: &DetectParams,
    widths: &mut HalfWidths,
) -> Result<(AnomalyVerdict, ConfidenceBand)> {
    params.validate()?;
    if n_t == 0 {
        let zero_score = match params.side {
            Side::Bilateral => -2.0,
            Side::Unilateral => -1.0,
        };
        let verdict = AnomalyVerdict {
            node,
            window_index,
            n_t,
            m: 0,
            mu_hat: 0.0,
            half_width: 0.0,
            score: zero_score,
            is_anomaly: false,
            side: params.side,
            mode: params.mode,
            delta: params.delta,
        };
        let band = ConfidenceBand {
            node,
            window_index,
            center: 0.0,
            half_width: 0.0,
            delta: params.delta,
            mode: params.mode,
            lower: 0.0,
            upper: 0.0,
        };
        return Ok((verdict, band));
    }
    if m > n_t {
        return Err(Error::Domain(format!("count {m} exceeds window size {n_t}")));
    }
    let s = widths.get(params.mode, n_t, params.delta)?;
    let (score, is_anomaly) = match params.side {
        Side::Bilateral => (-bilateral_score(m, mu_hat, n_t), (m as f64 - mu_hat).abs() > s),
        Side::Unilateral => {
            let score = if params.squared_unilateral {
                unilateral_score_squared(m, mu_hat, n_t)
            } else {
                unilateral_score(m, mu_hat, n_t)
            };
            (score, (m as f64) < mu_hat - s)
        }
    };
    let verdict = AnomalyVerdict {
        node,
        window_index,
        n_t,
        m,
        mu_hat,
        half_width: s,
        score,
        is_anomaly,
        side: params.side,
        mode: params.mode,
        delta: params.delta,
    };
    let band = ConfidenceBand {
        node,
        window_index,
        center: mu_hat,
        half_width: s,
        delta: params.delta,
        mode: params.mode,
        lower: (mu_hat - s).max(0.0),
        upper: (mu_hat + s).min(n_t as f64),
    };
    Ok((verdict, band))
}

/// Tests the model's node in one window.
pub fn detect(
    model: &ConditionalModel,
    window: Window<'_>,
    params: &DetectParams,
) -> Result<(AnomalyVerdict, ConfidenceBand)> {
    let j = model.node();
    let m = node_count_in_window(window.events, model.node_count(), j)?;
    let mu_hat = predicted_mean(model, window.events);
    assess(j, window.index, window.n(), m, mu_hat, params, &mut HalfWidths::default())
}

/// Verdicts for `nodes` over every window, grouped by node in the order given.
pub fn detect_all(
    models: &ModelSet,
    windows: &WindowedStream,
    nodes: &[usize],
    params: &DetectParams,
) -> Result<Vec<Vec<(AnomalyVerdict, ConfidenceBand)>>> {
    params.validate()?;
    let means = models.predicted_means(windows, nodes)?;
    let mut widths = HalfWidths::default();
    let mut out = Vec::with_capacity(nodes.len());
    for (&j, mu) in nodes.iter().zip(&means) {
        let mut rows = Vec::with_capacity(windows.len());
        for (w, &mu_hat) in windows.windows().zip(mu) {
            let m = node_count_in_window(w.events, windows.node_count(), j)?;
            rows.push(assess(j, w.index, w.n(), m, mu_hat, params, &mut widths)?);
        }
        out.push(rows);
    }
    Ok(out)
}

/// Score CSV: `node,window_index,n_t,m,mu_hat,half_width,score,is_anomaly,side,mode,delta`.
pub fn write_scores<'a, W: Write, I: IntoIterator<Item = &'a AnomalyVerdict>>(out: W, verdicts: I) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for v in verdicts {
        w.serialize(v)?;
    }
    w.flush()?;
    Ok(())
}

/// Band CSV for one node: `window_index,m,lower,upper`.
pub fn write_band<'a, W: Write, I: IntoIterator<Item = &'a (AnomalyVerdict, ConfidenceBand)>>(
    out: W,
    rows: I,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_index", "m", "lower", "upper"])?;
    for (v, b) in rows {
        w.write_record([
            v.window_index.to_string(),
            v.m.to_string(),
            b.lower.to_string(),
            b.upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plugin(delta: f64, side: Side) -> DetectParams {
        DetectParams::new(delta, BoundMode::Plugin, side)
    }

    #[test]
    fn bilateral_score_examples() {
        assert_eq!(bilateral_score(40, 40.0, 100), 2.0);
        assert!((bilateral_score(60, 50.0, 100) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(bilateral_score(40, 50.0, 100), bilateral_score(60, 50.0, 100));
    }

    #[test]
    fn unilateral_score_examples() {
        assert_eq!(unilateral_score(30, 30.0, 80), -1.0);
        let v = unilateral_score(0, 450.0, 100);
        assert!((v + 0.367_879_441_171_442_33).abs() < 1e-15, "{v}");
        for mu in [0.0, 12.5, 50.0, 100.0] {
            assert!(unilateral_score(0, mu, 100) > unilateral_score(100, mu, 100));
        }
    }

    #[test]
    fn squared_variant_orders_like_printed() {
        assert_eq!(unilateral_score_squared(10, 10.0, 50), -1.0);
        for m in 0..50 {
            assert!(unilateral_score_squared(m, 20.0, 50) > unilateral_score_squared(m + 1, 20.0, 50));
        }
    }

    #[test]
    fn zero_deviation_is_never_anomalous() {
        let mut w = HalfWidths::default();
        for side in [Side::Bilateral, Side::Unilateral] {
            for mode in [BoundMode::Plugin, BoundMode::Theorem, BoundMode::TheoremClosed] {
                for delta in DELTA_GRID {
                    let p = DetectParams::new(delta, mode, side);
                    let (v, b) = assess(0, 0, 40, 17, 17.0, &p, &mut w).unwrap();
                    assert!(!v.is_anomaly);
                    assert!(b.lower <= 17.0 && b.upper >= 17.0);
                }
            }
        }
    }

    #[test]
    fn low_count_is_flagged() {
        let mut w = HalfWidths::default();
        let (v, b) = assess(4, 9, 100, 20, 50.0, &plugin(0.01, Side::Bilateral), &mut w).unwrap();
        assert!(v.is_anomaly);
        assert!((v.half_width - 16.276_236_307_187_293).abs() < 1e-9);
        assert!((b.lower - 33.723_763_692_812_71).abs() < 1e-9);
        assert_eq!((v.node, v.window_index, v.m), (4, 9, 20));
        let (v, _) = assess(4, 9, 100, 20, 50.0, &plugin(0.01, Side::Unilateral), &mut w).unwrap();
        assert!(v.is_anomaly);
        let (v, _) = assess(4, 9, 100, 80, 50.0, &plugin(0.01, Side::Unilateral), &mut w).unwrap();
        assert!(!v.is_anomaly);
    }

    #[test]
    fn empty_window_contract() {
        let mut w = HalfWidths::default();
        let (v, b) = assess(1, 3, 0, 0, 0.0, &plugin(0.05, Side::Bilateral), &mut w).unwrap();
        assert!(!v.is_anomaly);
        assert_eq!((b.lower, b.upper, v.m), (0.0, 0.0, 0));
    }

    #[test]
    fn band_is_clipped() {
        let mut w = HalfWidths::default();
        let (v, b) = assess(0, 0, 10, 9, 9.5, &plugin(0.01, Side::Bilateral), &mut w).unwrap();
        assert_eq!(b.upper, 10.0);
        assert!(b.lower >= 0.0);
        assert!(v.half_width > 0.5);
    }

    #[test]
    fn invalid_inputs() {
        let mut w = HalfWidths::default();
        assert!(assess(0, 0, 10, 11, 5.0, &plugin(0.05, Side::Bilateral), &mut w).is_err());
        assert!(matches!(
            assess(0, 0, 10, 5, 5.0, &plugin(1.5, Side::Bilateral), &mut w),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn band_verdict_matches_score_threshold() {
        let n = 50;
        let mut w = HalfWidths::default();
        for delta in DELTA_GRID {
            for mu in [25.0, 25.3, 7.75, 44.1] {
                for m in 0..=n {
                    let (v, _) = assess(0, 0, n, m, mu, &plugin(delta, Side::Bilateral), &mut w).unwrap();
                    assert_eq!(v.is_anomaly, bilateral_score(m, mu, n) < delta, "m={m} mu={mu} delta={delta}");
                }
            }
        }
    }

    #[test]
    fn score_csv_columns() {
        let mut w = HalfWidths::default();
        let (v, b) = assess(2, 5, 10, 3, 4.0, &plugin(0.1, Side::Bilateral), &mut w).unwrap();
        let mut buf = Vec::new();
        write_scores(&mut buf, [&v]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "node,window_index,n_t,m,mu_hat,half_width,score,is_anomaly,side,mode,delta"
        );
        assert!(lines.next().unwrap().ends_with(",false,bilateral,plugin,0.1"));
        let mut buf = Vec::new();
        write_band(&mut buf, [&(v, b)]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("window_index,m,lower,upper\n5,3,"));
    }

    proptest! {
        #[test]
        fn unilateral_score_strictly_decreasing_in_m(n in 1usize..400, mu in 0.0f64..400.0) {
            for m in 0..n {
                prop_assert!(unilateral_score(m, mu, n) > unilateral_score(m + 1, mu, n));
            }
        }

        #[test]
        fn band_contains_center_and_is_feasible(n in 1usize..300, frac in 0.0f64..1.0, delta in 1e-6f64..0.5, mode in 0usize..3) {
            let mode = [BoundMode::Plugin, BoundMode::Theorem, BoundMode::TheoremClosed][mode];
            let mu = frac * n as f64;
            let mut w = HalfWidths::default();
            let (_, b) = assess(0, 0, n, 0, mu, &DetectParams::new(delta, mode, Side::Bilateral), &mut w).unwrap();
            prop_assert!(0.0 <= b.lower && b.lower <= mu && mu <= b.upper && b.upper <= n as f64);
        }
    }
}
