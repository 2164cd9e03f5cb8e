//! Streams flows through both detectors in fixed-size batches against a
//! prebuilt node feature table, then scores a second network whose hosts
//! the table has never seen.
//!
//! Usage: cargo run --release --example streaming_detect [batch_size] [flows] [seed]

use std::time::{Duration, Instant};

use zdt::detectors::{
    batch_detect_stream, calibrate_threshold_unsupervised, AnomalyDetector, NoveltyDetector, VerdictWriter,
};
use zdt::features::{featurize, FeatureMode};
use zdt::flow::FlowDataset;
use zdt::graph::{compute_node_features, NetworkGraph, NodeFeatureConfig, NodeFeatureTable};
use zdt::neural::{AEModel, ModelRole, TrainConfig};
use zdt::synth::{generate_corpus, CorpusSpec};

fn stream(ad: &AnomalyDetector, nd: &NoveltyDetector, ds: &FlowDataset, nft: &NodeFeatureTable, batch: usize) {
    let start = Instant::now();
    let mut writer = VerdictWriter::new(std::io::sink());
    let mut unknown = 0;
    let mut worst = Duration::ZERO;
    for item in batch_detect_stream(ad, nd, ds.records.iter().cloned().map(Ok), nft, batch).unwrap() {
        unknown += usize::from(item.unknown_node);
        worst = worst.max(item.latency);
        writer
            .write(item.index, item.outcome.as_ref().map_err(String::as_str), item.unknown_node)
            .unwrap();
    }
    let summary = writer.finish().unwrap();
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{:<11} {:>6} flows in {secs:.3}s ({:.0}/s), worst per-flow latency {worst:?}",
        ds.network_id,
        ds.len(),
        ds.len() as f64 / secs
    );
    println!(
        "            benign {}, known {}, novel {}, unknown-node flags {unknown}",
        summary.benign, summary.known_attack, summary.novel_threat
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let batch: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(256);
    let flows: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let corpus = generate_corpus(&CorpusSpec::demo(flows, seed))?;
    let ds = &corpus.networks[0];
    let nft = compute_node_features(&NetworkGraph::from_dataset(ds), &NodeFeatureConfig::default());
    let x = featurize(ds, &nft, FeatureMode::FlowAndGraph)?;
    let labels = ds.labels();
    let benign: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_benign()).collect();
    let attacks: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_attack()).collect();
    let cfg = TrainConfig {
        seed,
        max_epochs: 20,
        ..TrainConfig::default()
    };
    let (ad, _) = AEModel::fit(&x.select_rows(&benign), ModelRole::Anomaly, Vec::new(), &cfg)?;
    let (nd, _) = AEModel::fit(&x.select_rows(&attacks), ModelRole::Novelty, Vec::new(), &cfg)?;
    let tau_ad = calibrate_threshold_unsupervised(&ad.score_raw(&x.select_rows(&benign))?, 0.995)?;
    let tau_nd = calibrate_threshold_unsupervised(&nd.score_raw(&x.select_rows(&attacks))?, 0.995)?;
    let ad = AnomalyDetector::new(ad, tau_ad);
    let nd = NoveltyDetector::new(nd, tau_nd);

    stream(&ad, &nd, ds, &nft, batch);
    // endpoints of another network are missing from the table: zero-filled and flagged
    stream(&ad, &nd, &corpus.networks[1], &nft, batch);
    Ok(())
}
