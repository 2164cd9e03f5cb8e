//! The full two-stage detector with each attack class held out in turn.
//!
//! Usage: cargo run --release --example end_to_end [flows_per_network] [seed]

use std::time::Instant;

use zdt::eval::experiments::{prepare_corpus, run_end_to_end_all, ExperimentConfig};
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
    let report = run_end_to_end_all(&prepared, &cfg)?;
    print!("{}", report.render_table());
    for row in &report.rows {
        println!(
            "{:<16} tau_ad {:.3e}  tau_nd {:.3e}  holdout rejected by AD {}/{}",
            row.attack,
            row.details["tau_ad"],
            row.details["tau_nd"],
            row.details["holdout_rejected_by_ad"],
            row.details["holdout_rows"]
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
