//! Leave-one-class-out novelty detection: the novelty autoencoder never sees
//! the held-out class and must flag it among known attacks.
//!
//! Usage: cargo run --release --example novelty_leave_one_out [flows_per_network] [seed]

use std::time::Instant;

use zdt::eval::experiments::{prepare_corpus, run_novelty_loo_all, ExperimentConfig};
use zdt::synth::{generate_corpus, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let flows: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let start = Instant::now();
    let corpus = generate_corpus(&CorpusSpec::demo(flows, seed))?;
    let cfg = ExperimentConfig {
        seed,
        ..ExperimentConfig::default()
    };
    let prepared = prepare_corpus(&corpus.networks, &cfg)?;
    let report = run_novelty_loo_all(&prepared, &cfg)?;
    print!("{}", report.render_table());
    for row in &report.rows {
        println!(
            "{:<16} threshold {:.3e}  calibration recall {:.3}  holdout rows {}",
            row.attack,
            row.details["threshold"],
            row.details["calibration_recall"],
            row.details["holdout_rows"]
        );
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
