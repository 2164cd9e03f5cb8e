//! Quantile and supervised threshold calibration for the two detectors.
//!
//! Usage: cargo run --release --example calibrate_thresholds [flows] [seed]

use zdt::detectors::{attack_classes, calibrate_threshold_supervised, calibrate_threshold_unsupervised};
use zdt::features::{featurize, FeatureMode};
use zdt::flow::split_indices;
use zdt::graph::{compute_node_features, NetworkGraph, NodeFeatureConfig};
use zdt::neural::{AEModel, ModelRole, TrainConfig};
use zdt::synth::{generate_corpus, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let flows: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let corpus = generate_corpus(&CorpusSpec::demo(flows, seed))?;
    let ds = &corpus.networks[0];
    let nft = compute_node_features(&NetworkGraph::from_dataset(ds), &NodeFeatureConfig::default());
    let x = featurize(ds, &nft, FeatureMode::FlowAndGraph)?;
    let labels = ds.labels();
    let (train, test) = split_indices(ds.len(), 0.7, seed)?;
    let holdout = "worm";
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };

    // anomaly detector: benign training rows only, threshold from their losses
    let benign_train: Vec<usize> = train.iter().copied().filter(|&i| labels[i].is_benign()).collect();
    let (ad, _) = AEModel::fit(&x.select_rows(&benign_train), ModelRole::Anomaly, Vec::new(), &cfg)?;
    let tau_ad = calibrate_threshold_unsupervised(&ad.score_raw(&x.select_rows(&benign_train))?, 0.995)?;
    let test_scores = ad.score_raw(&x.select_rows(&test))?;
    let truth: Vec<bool> = test.iter().map(|&i| labels[i].is_attack()).collect();
    let cal = calibrate_threshold_supervised(&test_scores, &truth, 0.5)?;
    println!("anomaly   quantile 0.995 -> {tau_ad:.5e}");
    println!(
        "anomaly   supervised     -> {:.5e} (precision {:.3}, recall {:.3})",
        cal.threshold, cal.precision, cal.recall
    );

    // novelty detector: known attack classes only; the held-out class is the positive
    let known_rows: Vec<usize> = train
        .iter()
        .copied()
        .filter(|&i| labels[i].is_attack() && labels[i].class() != Some(holdout))
        .collect();
    let known = attack_classes(&known_rows.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>());
    let (nd, _) = AEModel::fit(&x.select_rows(&known_rows), ModelRole::Novelty, known, &cfg)?;
    let attack_test: Vec<usize> = test.iter().copied().filter(|&i| labels[i].is_attack()).collect();
    let novel: Vec<bool> = attack_test.iter().map(|&i| labels[i].class() == Some(holdout)).collect();
    let scores = nd.score_raw(&x.select_rows(&attack_test))?;
    let tau_nd = calibrate_threshold_unsupervised(&nd.score_raw(&x.select_rows(&known_rows))?, 0.995)?;
    let cal = calibrate_threshold_supervised(&scores, &novel, 0.5)?;
    println!("novelty   quantile 0.995 -> {tau_nd:.5e}");
    println!(
        "novelty   supervised     -> {:.5e} (precision {:.3}, recall {:.3}, feasible {})",
        cal.threshold, cal.precision, cal.recall, cal.feasible
    );
    Ok(())
}
