// Fit the three conditional regressors for one node and compare their
// predicted window means with the observed counts on held-out windows.
//
// cargo run --release --example conditional_models

use cliquewatch::regression::{fit_node, predicted_mean, Method, RegressorConfig};
use cliquewatch::simulator::{generate, SimulationConfig, Visibility};
use cliquewatch::stream::{node_count_in_window, window_stream};

pub fn run_example() -> cliquewatch::Result<()> {
    let config = SimulationConfig {
        nodes: 25,
        components: 3,
        timestamps: 120,
        train_windows: 80,
        events_per_timestamp: 40,
        sigma_g: 0.05,
        sigma_x: Visibility::Constant(0.15),
        dirichlet_mixing: true,
        layout_seed: 8,
        seed: 2,
        anomaly: None,
    };
    let sim = generate(&config)?;
    let train = sim.train();
    let test = window_stream(sim.test(), 1.0, 0.0)?;
    let j = 0;

    for method in [Method::Tree, Method::Forest, Method::Kernel] {
        let rc = RegressorConfig {
            method,
            forest_size: 30,
            bandwidth: 1.5,
            ..RegressorConfig::default()
        };
        let model = fit_node(&train, j, &rc)?;
        let mut abs_err = 0.0;
        for w in test.windows() {
            let m = node_count_in_window(w.events, test.node_count(), j)? as f64;
            abs_err += (predicted_mean(&model, w.events) - m).abs();
        }
        println!(
            "{:<6} mean |mu_hat - m| over {} windows: {:.3}",
            method.as_str(),
            test.len(),
            abs_err / test.len() as f64
        );
    }

    // a single fingerprint: probability that node j joins given the others
    let model = fit_node(&train, j, &RegressorConfig { method: Method::Tree, ..RegressorConfig::default() })?;
    let e = &test.stream().events()[0];
    println!("P(node {j} joins event at t = {:.3}) = {:.3}", e.timestamp, model.predict_event(&e.fingerprint));
    Ok(())
}

#[allow(dead_code)]
fn main() -> cliquewatch::Result<()> {
    run_example()
}
