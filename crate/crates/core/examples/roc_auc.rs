// ROC curve and AUC for a handful of scored instances, checked against the
// Mann-Whitney pairwise fraction.
//
// cargo run --example roc_auc

use cliquewatch::evaluation::{mann_whitney, roc, write_roc_csv, ScoredInstance};

pub fn run_example() -> cliquewatch::Result<()> {
    let data = [(0.9, true), (0.8, false), (0.7, true), (0.7, false), (0.4, true), (0.2, false), (0.1, false)];
    let instances: Vec<ScoredInstance> = data
        .iter()
        .enumerate()
        .map(|(i, &(score, label))| ScoredInstance {
            node: i,
            window: 0,
            score,
            label,
        })
        .collect();
    let result = roc("demo", &instances)?;
    println!("AUC {:.4}, Mann-Whitney {:.4}", result.auc, mann_whitney(&instances));
    let mut out = Vec::new();
    write_roc_csv(&mut out, std::slice::from_ref(&result))?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}

#[allow(dead_code)]
fn main() -> cliquewatch::Result<()> {
    run_example()
}
