//! Interquartile mean, stratified bootstrap intervals and run-log summaries.

use assistive_marl::envs::TaskId;
use assistive_marl::metrics::{
    auc, iqm, stratified_bootstrap_ci, MetricSummary, RunLog, RunLogRow, RunSetSummary,
};
use assistive_marl::rng::from_seed;
use rand_distr::{Distribution, Normal};

fn main() -> assistive_marl::Result<()> {
    println!(
        "iqm of 1..8 = {}",
        iqm(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])?
    );
    println!(
        "iqm with an outlier = {}",
        iqm(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 100.0])?
    );

    // 5 seeds x 10 evaluation episodes
    let mut rng = from_seed(0);
    let runs: Vec<Vec<f64>> = (0..5)
        .map(|seed| {
            let d = Normal::new(100.0 + 10.0 * seed as f64, 15.0).unwrap();
            (0..10).map(|_| d.sample(&mut rng)).collect()
        })
        .collect();
    let (lo, hi) = stratified_bootstrap_ci(&runs, 0.95, 2000, 1)?;
    println!("95% stratified bootstrap CI of the IQM: [{lo:.1}, {hi:.1}]");
    println!("{:?}", MetricSummary::from_runs(&runs, 2000, 1)?);

    let logs: Vec<RunLog> = (0..3)
        .map(|seed| RunLog {
            rows: (0..5)
                .map(|k| RunLogRow {
                    run_id: format!("ippo-scratch-s{seed}"),
                    task: TaskId::Scratch,
                    algorithm: "ippo".into(),
                    seed,
                    env_step: k * 100_000,
                    eval_return_iqm: 50.0 * k as f64 + seed as f64,
                    eval_return_ci_lo: 0.0,
                    eval_return_ci_hi: 0.0,
                    wallclock_s: 0.0,
                })
                .collect(),
        })
        .collect();
    println!("auc of the first curve {:.1}", auc(&logs[0].curve())?);
    let summary = RunSetSummary::from_logs(&logs, 1000, 0)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
