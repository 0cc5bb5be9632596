use std::sync::Mutex;
use std::time::{Duration, Instant};

use assistive_marl::bench::{open_loop_sps, open_loop_sps_with, BatchStepper};
use assistive_marl::envs::TaskId;
use assistive_marl::Result;

// Timing tests share the machine; run them one at a time.
static CLOCK: Mutex<()> = Mutex::new(());

/// One environment whose step spins for exactly one millisecond.
struct BusyWait {
    steps: u64,
}

impl BatchStepper for BusyWait {
    fn num_envs(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn step(&mut self, _actions: &[f64]) -> Result<Vec<f64>> {
        let start = Instant::now();
        while start.elapsed() < Duration::from_millis(1) {
            std::hint::spin_loop();
        }
        self.steps += 1;
        Ok(Vec::new())
    }
}

#[test]
fn busy_wait_stub_runs_at_a_thousand_steps_per_second() {
    let _guard = CLOCK.lock().unwrap();
    let mut stub = BusyWait { steps: 0 };
    let row = open_loop_sps_with(TaskId::Scratch, &mut stub, 500, 0).unwrap();
    assert_eq!(row.total_steps, 500);
    assert_eq!(stub.steps, 503, "three warm-up steps plus the timed ones");
    assert!(
        (row.sps - 1000.0).abs() < 100.0,
        "stub measured at {:.0} SPS",
        row.sps
    );
}

#[test]
fn repeated_measurements_are_stable() {
    let _guard = CLOCK.lock().unwrap();
    let sps: Vec<f64> = (0..3)
        .map(|_| open_loop_sps(TaskId::BedBath, 64, 64_000, 3).unwrap().sps)
        .collect();
    let mean = sps.iter().sum::<f64>() / 3.0;
    let sd = (sps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
    assert!(sd / mean < 0.15, "SPS {sps:?}, cv {:.3}", sd / mean);
}
