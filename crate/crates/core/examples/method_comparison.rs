//! Full pipeline on one synthetic preset: simulate, fit, score the test
//! windows with the detector and the four baselines, and compare AUCs.
//!
//! cargo run --release --example method_comparison -- E1 7

use std::time::Instant;

use cliquewatch::baselines::{run_baseline, BaselineMethod, BaselineParams};
use cliquewatch::evaluation::{compare, ScoreTable};
use cliquewatch::regression::{fit_all, RegressorConfig};
use cliquewatch::scoring::{detect_all, BoundMode, DetectParams, Side};
use cliquewatch::simulator::{generate, preset, Preset};
use cliquewatch::stream::window_stream;

fn main() -> cliquewatch::Result<()> {
    let mut args = std::env::args().skip(1);
    let which: Preset = args.next().unwrap_or_else(|| "E1".into()).parse()?;
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(7);

    let clock = Instant::now();
    let sim = generate(&preset(which, seed))?;
    let labels = sim.labels();
    let train = window_stream(sim.train(), 1.0, 0.0)?;
    let test = window_stream(sim.test(), 1.0, 0.0)?;
    println!("simulated {} events in {:.1?}", sim.stream.len(), clock.elapsed());

    let clock = Instant::now();
    let models = fit_all(train.stream(), &RegressorConfig::default())?;
    println!("fitted {} models in {:.1?}", models.node_count(), clock.elapsed());

    let nodes: Vec<usize> = (0..models.node_count()).collect();
    let params = DetectParams::new(0.01, BoundMode::Plugin, Side::Bilateral);
    let verdicts = detect_all(&models, &test, &nodes, &params)?;
    let proposed: ScoreTable = verdicts
        .iter()
        .flatten()
        .map(|(v, _)| ((v.node, v.window_index), v.score))
        .collect();

    let mut tables = vec![("proposed".to_string(), proposed)];
    for method in BaselineMethod::ALL {
        let t = run_baseline(&test, Some(&train), &BaselineParams::new(method))?;
        let table = t.score_table();
        tables.push((method.as_str().to_string(), table));
    }
    for r in compare(&tables, &labels)? {
        println!("{:<12} AUC {:.4}", r.method, r.auc);
    }
    Ok(())
}
