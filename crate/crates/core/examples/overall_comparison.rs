//! Single autoencoder versus the dual detector, with and without graph features.
//!
//! Usage: cargo run --release --example overall_comparison [flows_per_network] [seed]

use std::time::Instant;

use zdt::eval::experiments::{prepare_corpus, run_overall_comparison, ExperimentConfig};
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
    let report = run_overall_comparison(&prepared, &cfg)?;
    print!("{}", report.render_table());
    for row in &report.rows {
        let per_class: Vec<String> = row
            .details
            .iter()
            .map(|(k, v)| format!("{}={v:.3}", k.trim_start_matches("auc:")))
            .collect();
        println!("{:<12} {}", row.attack, per_class.join(" "));
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
