//! Generates the three-network demo corpus and writes it as CSV plus a manifest.
//!
//! Usage: cargo run --release --example generate_corpus [out_dir] [flows_per_network] [seed]

use std::path::PathBuf;

use zdt::flow::FlowFormat;
use zdt::synth::{generate_corpus, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "corpus".into()));
    let flows: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let spec = CorpusSpec::demo(flows, seed);
    let corpus = generate_corpus(&spec)?;
    std::fs::create_dir_all(&out)?;
    for ds in &corpus.networks {
        ds.save(&out.join(format!("{}.csv", ds.network_id)), FlowFormat::Csv)?;
    }
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&corpus.manifest)?)?;

    for n in &corpus.manifest.networks {
        let attacks: usize = n.counts.iter().filter(|(k, _)| *k != "benign").map(|(_, v)| v).sum();
        println!(
            "{:<11} {:>6} flows, {:>5} malicious over {} classes, {} hosts",
            n.network_id,
            n.total,
            attacks,
            n.counts.len() - 1,
            n.profile.hosts
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
