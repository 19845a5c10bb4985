// Generate a small labelled stream with one anomalous node whose visibility
// drops inside two test intervals, then compare its counts inside and outside.
//
// cargo run --example simulate

use cliquewatch::simulator::{generate, preset, AnomalySpec, Preset, SimulationConfig, Visibility};

pub fn small_config() -> SimulationConfig {
    SimulationConfig {
        nodes: 30,
        components: 4,
        timestamps: 200,
        train_windows: 100,
        events_per_timestamp: 50,
        sigma_g: 0.05,
        sigma_x: Visibility::Constant(0.12),
        dirichlet_mixing: false,
        layout_seed: 3,
        seed: 1,
        anomaly: Some(AnomalySpec {
            node: 0,
            intervals: vec![[130, 149], [170, 189]],
            visibility_multipliers: vec![0.6, 0.3],
            count_multipliers: vec![1.0, 1.0],
        }),
    }
}

pub fn run_example() -> cliquewatch::Result<()> {
    let mut config = small_config();
    // make the busiest node the anomalous one
    config.anomaly.as_mut().unwrap().node = cliquewatch::simulator::busiest_node(&config)?;
    let node = config.anomaly.as_ref().unwrap().node;
    let sim = generate(&config)?;
    println!("{} events over {} timestamps; anomalous node {node}", sim.stream.len(), config.timestamps);

    let mut inside = (0usize, 0usize);
    let mut outside = (0usize, 0usize);
    let anomaly = config.anomaly.as_ref().unwrap();
    let mut counts = vec![0usize; config.timestamps];
    for (e, &t) in sim.stream.events().iter().zip(&sim.event_window) {
        counts[t] += e.fingerprint.contains(node) as usize;
    }
    for (t, &c) in counts.iter().enumerate().skip(config.train_windows) {
        let slot = if anomaly.interval_of(t).is_some() { &mut inside } else { &mut outside };
        slot.0 += c;
        slot.1 += 1;
    }
    println!(
        "mean count outside anomalies {:.2}, inside {:.2}",
        outside.0 as f64 / outside.1 as f64,
        inside.0 as f64 / inside.1 as f64
    );
    let positives = sim.labels().iter().filter(|l| l.label == 1).count();
    println!("{positives} positive labels");

    let sizes: f64 = sim.stream.events().iter().map(|e| e.fingerprint.size() as f64).sum();
    println!("mean clique size {:.2}", sizes / sim.stream.len() as f64);

    let e3 = preset(Preset::E3, 0);
    println!(
        "preset E3: {} nodes, {} timestamps, anomalous node {}",
        e3.nodes,
        e3.timestamps,
        e3.anomaly.as_ref().unwrap().node
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> cliquewatch::Result<()> {
    run_example()
}
