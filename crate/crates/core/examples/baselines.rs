// Score a labelled stream with the four baselines and list each method's
// highest-scoring (node, window) pairs.
//
// cargo run --release --example baselines

use cliquewatch::baselines::{run_baseline, BaselineMethod, BaselineParams};
use cliquewatch::simulator::{generate, AnomalySpec, SimulationConfig, Visibility};
use cliquewatch::stream::window_stream;

pub fn run_example() -> cliquewatch::Result<()> {
    let config = SimulationConfig {
        nodes: 20,
        components: 3,
        timestamps: 150,
        train_windows: 100,
        events_per_timestamp: 40,
        sigma_g: 0.05,
        sigma_x: Visibility::Constant(0.15),
        dirichlet_mixing: false,
        layout_seed: 6,
        seed: 3,
        anomaly: Some(AnomalySpec {
            node: 2,
            intervals: vec![[120, 134]],
            visibility_multipliers: vec![0.2],
            count_multipliers: vec![1.0],
        }),
    };
    let sim = generate(&config)?;
    let train = window_stream(sim.train(), 1.0, 0.0)?;
    let test = window_stream(sim.test(), 1.0, 0.0)?;

    for method in BaselineMethod::ALL {
        let table = run_baseline(&test, Some(&train), &BaselineParams::new(method))?;
        let scores = table.score_table();
        let mut ranked: Vec<_> = scores.iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(a.1));
        let top: Vec<String> = ranked.iter().take(3).map(|((j, w), s)| format!("({j}, {w}) {s:.3}")).collect();
        println!("{:<10} top: {}", method.as_str(), top.join(", "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cliquewatch::Result<()> {
    run_example()
}
