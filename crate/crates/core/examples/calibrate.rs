// Choose delta by cross-validated false positive rate on normal training windows.
//
// cargo run --release --example calibrate

use cliquewatch::regression::RegressorConfig;
use cliquewatch::scoring::{calibrate_delta, BoundMode, CalibrationConfig, Side};
use cliquewatch::simulator::{generate, SimulationConfig, Visibility};

pub fn run_example() -> cliquewatch::Result<()> {
    let config = SimulationConfig {
        nodes: 20,
        components: 3,
        timestamps: 61,
        train_windows: 60,
        events_per_timestamp: 30,
        sigma_g: 0.05,
        sigma_x: Visibility::Constant(0.15),
        dirichlet_mixing: true,
        layout_seed: 4,
        seed: 0,
        anomaly: None,
    };
    let train = generate(&config)?.train();
    let regressor = RegressorConfig {
        forest_size: 10,
        ..RegressorConfig::default()
    };
    for (mode, side) in [(BoundMode::Plugin, Side::Bilateral), (BoundMode::Plugin, Side::Unilateral)] {
        let cal = CalibrationConfig {
            target_fpr: 0.01,
            folds: 4,
            mode,
            side,
            ..CalibrationConfig::default()
        };
        let result = calibrate_delta(&train, &regressor, &cal)?;
        println!("{} / {}: delta {}", mode.as_str(), side.as_str(), result.delta);
        for (delta, fpr) in &result.fpr {
            println!("  delta {delta:<8} cv fpr {fpr:.4}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cliquewatch::Result<()> {
    run_example()
}
