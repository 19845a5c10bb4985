// Tail bounds, their inversion into band half-widths, and the verdicts they
// give for a range of observed counts around one predicted mean.
//
// cargo run --example confidence_bands

use cliquewatch::scoring::{
    assess, bound, invert_bound, theorem_bound, theorem_bound_closed, BoundMode, DetectParams, HalfWidths, Side,
};

pub fn run_example() -> cliquewatch::Result<()> {
    let n_t = 100;
    for s in [10.0, 20.0, 30.0] {
        println!(
            "s = {s}: plugin {:.4}, theorem {:.4}, closed {:.4}",
            bound(BoundMode::Plugin, s, n_t)?,
            theorem_bound(s, n_t)?,
            theorem_bound_closed(s, n_t)?
        );
    }

    for mode in [BoundMode::Plugin, BoundMode::Theorem, BoundMode::TheoremClosed] {
        let s = invert_bound(mode, n_t, 0.01)?;
        println!("{:<14} half-width at delta 0.01: {s:.3}", mode.as_str());
    }

    let mu_hat = 40.0;
    let mut widths = HalfWidths::default();
    for side in [Side::Bilateral, Side::Unilateral] {
        let params = DetectParams::new(0.01, BoundMode::Plugin, side);
        let flagged: Vec<usize> = (0..=n_t)
            .filter(|&m| {
                assess(0, 0, n_t, m, mu_hat, &params, &mut widths)
                    .map(|(v, _)| v.is_anomaly)
                    .unwrap_or(false)
            })
            .collect();
        let (_, band) = assess(0, 0, n_t, 40, mu_hat, &params, &mut widths)?;
        println!(
            "{:<10} band [{:.2}, {:.2}]; flagged counts {}..={} and {} more",
            side.as_str(),
            band.lower,
            band.upper,
            flagged.first().copied().unwrap_or(0),
            flagged.iter().take_while(|&&m| m < 40).last().copied().unwrap_or(0),
            flagged.iter().filter(|&&m| m > 40).count()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cliquewatch::Result<()> {
    run_example()
}
