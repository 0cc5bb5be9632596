//! Open-loop throughput across batch sizes, written as CSV to stdout.
//!
//! cargo run --release --example throughput -- [task] [steps_per_point]

use assistive_marl::bench::{random_policy_returns, scaling_curve, write_csv, REFERENCE_SPS};
use assistive_marl::envs::TaskId;
use assistive_marl::metrics::iqm;

fn main() -> assistive_marl::Result<()> {
    let mut args = std::env::args().skip(1);
    let task: TaskId = args.next().as_deref().unwrap_or("scratch").parse()?;
    let steps: u64 = args
        .next()
        .map_or(200_000, |s| s.parse().expect("step count"));

    let rows = scaling_curve(task, &[1, 8, 64, 512], steps, 0)?;
    write_csv(&rows, std::io::stdout())?;
    let speedup = rows.last().unwrap().sps / rows[0].sps;
    let reference = REFERENCE_SPS.iter().find(|(t, _)| *t == task).unwrap().1;
    println!("speedup 512 vs 1: {speedup:.1}x (reference SPS at 512 envs on other hardware: {reference})");
    println!(
        "random-policy IQM return: {:.1}",
        iqm(&random_policy_returns(task, 32, 0)?)?
    );
    Ok(())
}
