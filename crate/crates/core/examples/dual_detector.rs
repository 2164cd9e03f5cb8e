//! Both detectors on one network: each test flow is called benign, a known
//! attack, or a novel threat. One attack class is withheld from training.
//!
//! Usage: cargo run --release --example dual_detector [holdout_class] [flows] [seed]

use std::collections::BTreeMap;

use zdt::detectors::{attack_classes, calibrate_threshold_unsupervised, detect, AnomalyDetector, NoveltyDetector};
use zdt::features::{featurize, FeatureMode};
use zdt::flow::split_indices;
use zdt::graph::{compute_node_features, NetworkGraph, NodeFeatureConfig};
use zdt::neural::{AEModel, ModelRole, TrainConfig};
use zdt::synth::{generate_corpus, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let holdout = args.next().unwrap_or_else(|| "scanning".into());
    let flows: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let corpus = generate_corpus(&CorpusSpec::demo(flows, seed))?;
    let ds = &corpus.networks[0];
    let nft = compute_node_features(&NetworkGraph::from_dataset(ds), &NodeFeatureConfig::default());
    let x = featurize(ds, &nft, FeatureMode::FlowAndGraph)?;
    let labels = ds.labels();
    let (train, test) = split_indices(ds.len(), 0.7, seed)?;
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };

    let benign: Vec<usize> = train.iter().copied().filter(|&i| labels[i].is_benign()).collect();
    let known_rows: Vec<usize> = train
        .iter()
        .copied()
        .filter(|&i| labels[i].is_attack() && labels[i].class() != Some(holdout.as_str()))
        .collect();
    let known = attack_classes(&known_rows.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>());

    let (ad, _) = AEModel::fit(&x.select_rows(&benign), ModelRole::Anomaly, Vec::new(), &cfg)?;
    // few attack rows: smaller batches and more epochs
    let nd_cfg = TrainConfig {
        batch_size: 64,
        max_epochs: 80,
        patience: 8,
        ..cfg.clone()
    };
    let (nd, _) = AEModel::fit(&x.select_rows(&known_rows), ModelRole::Novelty, known, &nd_cfg)?;
    let tau_ad = calibrate_threshold_unsupervised(&ad.score_raw(&x.select_rows(&benign))?, 0.995)?;
    let tau_nd = calibrate_threshold_unsupervised(&nd.score_raw(&x.select_rows(&known_rows))?, 0.95)?;
    let ad = AnomalyDetector::new(ad, tau_ad);
    let nd = NoveltyDetector::new(nd, tau_nd);

    let verdicts = detect(&ad, &nd, &x.select_rows(&test))?;
    let mut table: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for (&i, v) in test.iter().zip(&verdicts) {
        let slot = match v.kind {
            zdt::detectors::VerdictKind::Benign => 0,
            zdt::detectors::VerdictKind::KnownAttack => 1,
            zdt::detectors::VerdictKind::NovelThreat => 2,
        };
        table.entry(labels[i].to_string()).or_default()[slot] += 1;
    }
    println!("holdout: {holdout}");
    println!("{:<16} {:>8} {:>8} {:>8}", "true label", "benign", "known", "novel");
    for (label, c) in &table {
        println!("{label:<16} {:>8} {:>8} {:>8}", c[0], c[1], c[2]);
    }
    Ok(())
}
