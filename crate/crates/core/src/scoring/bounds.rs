//! Tail bounds for the count of events a node takes part in, and their inverses.
//!
//! With `n_t` events in a window and known per-event participation
//! probabilities summing to `mu`, the count `M` satisfies
//! `P(|M - mu| >= eps) <= 2 exp(-2 eps^2 / n_t)`. When the probabilities are
//! replaced by a consistent estimate, the deviation from the estimated mean is
//! controlled by the two-term bound minimised over the split point `k`, or by
//! its closed form at `k = s / 3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_POINTS: usize = 1001;
const BISECTION_TOL: f64 = 1e-9;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Which bound a confidence band is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum BoundMode {
    /// Hoeffding band around the plug-in estimate.
    #[serde(rename = "plugin")]
    #[value(name = "plugin")]
    Plugin,
    /// Two-term bound minimised over the split point.
    #[serde(rename = "theorem")]
    #[value(name = "theorem")]
    Theorem,
    /// Two-term bound at the split point `s / 3`.
    #[serde(rename = "theorem_closed")]
    #[value(name = "theorem_closed")]
    TheoremClosed,
}

impl BoundMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::Plugin => "plugin",
            BoundMode::Theorem => "theorem",
            BoundMode::TheoremClosed => "theorem_closed",
        }
    }
}

fn check_n(n_t: usize) -> Result<f64> {
    if n_t == 0 {
        return Err(Error::Domain("window must contain at least one event".into()));
    }
    Ok(n_t as f64)
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite and non-negative, got {x}")));
    }
    Ok(())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `2 exp(-2 eps^2 / n_t)`.
pub fn hoeffding_tail(eps: f64, n_t: usize) -> Result<f64> {
    check_nonneg("eps", eps)?;
    let n = check_n(n_t)?;
    Ok(2.0 * (-2.0 * eps * eps / n).exp())
}

/// `sqrt(n_t ln(2 / delta) / 2)`, the half-width at which the Hoeffding tail equals `delta`.
pub fn hoeffding_halfwidth(n_t: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let n = check_n(n_t)?;
    Ok((n * (2.0 / delta).ln() / 2.0).sqrt())
}

#[inline]
fn two_term(k: f64, s: f64, n: f64) -> f64 {
    2.0 * (-2.0 * k * k / n).exp() + 2.0 * (-(s - k) * (s - k) / (2.0 * n)).exp()
}

/// `min over k in [0, s]` of `2 exp(-2k^2/n_t) + 2 exp(-(s-k)^2/(2 n_t))`.
///
/// Evaluated on a 1001-point grid, then refined by golden-section search
/// between the neighbours of the best grid point.
pub fn theorem_bound(s: f64, n_t: usize) -> Result<f64> {
    check_nonneg("s", s)?;
    let n = check_n(n_t)?;
    if s == 0.0 {
        return Ok(4.0);
    }
    let step = s / (GRID_POINTS - 1) as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..GRID_POINTS {
        let v = two_term(step * i as f64, s, n);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = step * best_i.saturating_sub(1) as f64;
    let mut b = (step * (best_i + 1) as f64).min(s);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (two_term(c, s, n), two_term(d, s, n));
    for _ in 0..100 {
        if b - a <= 1e-12 * s.max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = two_term(c, s, n);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = two_term(d, s, n);
        }
    }
    Ok(best.min(fc).min(fd).min(two_term(0.5 * (a + b), s, n)))
}

/// `4 exp(-2 s^2 / (9 n_t))`, the two-term bound at `k = s / 3`.
pub fn theorem_bound_closed(s: f64, n_t: usize) -> Result<f64> {
    check_nonneg("s", s)?;
    let n = check_n(n_t)?;
    Ok(4.0 * (-2.0 * s * s / (9.0 * n)).exp())
}

/// Tail bound of the given mode at half-width `s`.
pub fn bound(mode: BoundMode, s: f64, n_t: usize) -> Result<f64> {
    match mode {
        BoundMode::Plugin => hoeffding_tail(s, n_t),
        BoundMode::Theorem => theorem_bound(s, n_t),
        BoundMode::TheoremClosed => theorem_bound_closed(s, n_t),
    }
}

/// Smallest half-width `s` whose bound is at most `delta`.
///
/// Closed form for the plug-in band, bisection to 1e-9 otherwise.
pub fn invert_bound(mode: BoundMode, n_t: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let n = check_n(n_t)?;
    if mode == BoundMode::Plugin {
        // absorb rounding so that the tail at the returned width never exceeds delta
        let mut s = hoeffding_halfwidth(n_t, delta)?;
        while hoeffding_tail(s, n_t)? > delta {
            s = s.next_up();
        }
        return Ok(s);
    }
    // closed-form starting bracket; the minimised bound never exceeds the closed one
    let mut hi = 3.0 * (n * (4.0 / delta).ln() / 2.0).sqrt() * 1.01 + 1e-6;
    while bound(mode, hi, n_t)? > delta {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if bound(mode, mid, n_t)? <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values computed with 40-digit arithmetic; the minimised bound
    // uses a brute-force grid over k with step s / 100 000.
    const THEOREM_30_100: f64 = 0.503_255_996_834_225_6;
    const HALFWIDTH_100_001: f64 = 16.276_236_307_187_293;

    #[test]
    fn hoeffding_tail_examples() {
        assert_eq!(hoeffding_tail(0.0, 7).unwrap(), 2.0);
        assert!((hoeffding_tail(10.0, 100).unwrap() - 0.270_670_566_473_225_4).abs() < 1e-15);
        assert!((hoeffding_tail(20.0, 100).unwrap() - 6.709_252_558_050_237e-4).abs() < 1e-17);
        assert!(hoeffding_tail(-1.0, 10).is_err());
        assert!(hoeffding_tail(1.0, 0).is_err());
    }

    #[test]
    fn hoeffding_halfwidth_examples() {
        assert!((hoeffding_halfwidth(100, 0.01).unwrap() - HALFWIDTH_100_001).abs() < 1e-12);
        let d = 2.0 * (-2.0f64).exp();
        assert!((hoeffding_halfwidth(100, d).unwrap() - 10.0).abs() < 1e-12);
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(hoeffding_halfwidth(10, bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn theorem_bound_examples() {
        assert_eq!(theorem_bound(0.0, 10).unwrap(), 4.0);
        let v = theorem_bound(30.0, 100).unwrap();
        assert!((v - THEOREM_30_100).abs() < 1e-8 * THEOREM_30_100, "{v}");
        assert!(v <= 4.0 * (-2.0f64).exp());
        assert!(theorem_bound(-1.0, 10).is_err());
    }

    #[test]
    fn theorem_bound_other_reference_points() {
        for (s, n, expected) in [
            (10.0, 20, 1.201_703_952_776_452_4),
            (5.0, 50, 2.735_758_882_342_884_6),
            (60.0, 200, 0.068_720_895_322_465_62),
        ] {
            let v = theorem_bound(s, n).unwrap();
            assert!((v - expected).abs() <= 1e-8 * expected, "s={s} n={n}: {v} vs {expected}");
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(theorem_bound_closed(0.0, 3).unwrap(), 4.0);
        assert!((theorem_bound_closed(30.0, 100).unwrap() - 0.541_341_132_946_450_8).abs() < 1e-15);
        assert!(theorem_bound_closed(-0.5, 3).is_err());
    }

    #[test]
    fn invert_examples() {
        let s = invert_bound(BoundMode::Plugin, 100, 0.01).unwrap();
        assert!((s - HALFWIDTH_100_001).abs() < 1e-8);
        let s = invert_bound(BoundMode::TheoremClosed, 100, 4.0 * (-2.0f64).exp()).unwrap();
        assert!((s - 30.0).abs() < 1e-8, "{s}");
        assert!(invert_bound(BoundMode::Theorem, 100, 1.0).is_err());
        assert!(invert_bound(BoundMode::Theorem, 0, 0.1).is_err());
    }

    #[test]
    fn plugin_band_is_narrowest() {
        for n in [1usize, 5, 20, 100, 1000] {
            for delta in [0.5, 0.2, 0.05, 0.01, 1e-4, 1e-8] {
                let p = invert_bound(BoundMode::Plugin, n, delta).unwrap();
                let t = invert_bound(BoundMode::Theorem, n, delta).unwrap();
                let c = invert_bound(BoundMode::TheoremClosed, n, delta).unwrap();
                let closed_form = 3.0 * (n as f64 * (4.0 / delta).ln() / 2.0).sqrt();
                assert!(p <= c && t <= c + 1e-8, "n={n} delta={delta}");
                assert!((c - closed_form).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn halfwidth_inverts_tail(n in 1usize..5000, delta in 1e-9f64..0.999) {
            let s = hoeffding_halfwidth(n, delta).unwrap();
            let back = hoeffding_tail(s, n).unwrap();
            prop_assert!((back - delta).abs() <= 1e-12 * delta.max(1e-3), "{} vs {}", back, delta);
        }

        #[test]
        fn minimised_bound_is_below_closed(s in 0.0f64..500.0, n in 1usize..2000) {
            prop_assert!(theorem_bound(s, n).unwrap() <= theorem_bound_closed(s, n).unwrap());
        }

        #[test]
        fn closed_form_is_the_third_split(s in 0.0f64..500.0, n in 1usize..2000) {
            let nf = n as f64;
            let k = s / 3.0;
            let sub = 2.0 * (-2.0 * k * k / nf).exp() + 2.0 * (-(s - k) * (s - k) / (2.0 * nf)).exp();
            let closed = theorem_bound_closed(s, n).unwrap();
            prop_assert!((sub - closed).abs() <= 1e-12 * closed);
        }

        #[test]
        fn bounds_decrease_in_s(s in 0.0f64..300.0, ds in 0.0f64..50.0, n in 1usize..1000, m in 0usize..3) {
            let mode = [BoundMode::Plugin, BoundMode::Theorem, BoundMode::TheoremClosed][m];
            prop_assert!(bound(mode, s + ds, n).unwrap() <= bound(mode, s, n).unwrap() + 1e-12);
        }

        #[test]
        fn invert_round_trip(n in 1usize..3000, delta in 1e-8f64..0.999, m in 0usize..3) {
            let mode = [BoundMode::Plugin, BoundMode::Theorem, BoundMode::TheoremClosed][m];
            let s = invert_bound(mode, n, delta).unwrap();
            let b = bound(mode, s, n).unwrap();
            prop_assert!(b <= delta && b >= delta - 1e-6, "mode {:?}: {} vs {}", mode, b, delta);
        }
    }
}
