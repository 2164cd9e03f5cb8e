//! Trains an anomaly autoencoder on one network's benign flows, saves it and
//! checks that the reloaded model scores identically.
//!
//! Usage: cargo run --release --example train_autoencoder [flows] [seed]

use zdt::features::{featurize, FeatureMode};
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
    let benign: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_benign()).collect();
    let attacks: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_attack()).collect();

    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let (model, outcome) = AEModel::fit(&x.select_rows(&benign), ModelRole::Anomaly, Vec::new(), &cfg)?;
    println!("architecture {:?}", model.autoencoder.architecture.widths);
    println!("{} parameters", model.autoencoder.parameter_count());
    for e in outcome.history.iter().step_by(5) {
        println!("epoch {:>3}  train {:.6}  val {:.6}", e.epoch, e.train_loss, e.val_loss);
    }
    println!("best epoch {} (val {:.6})", outcome.best_epoch, outcome.best_val_loss());

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let b = model.score_raw(&x.select_rows(&benign))?;
    let a = model.score_raw(&x.select_rows(&attacks))?;
    println!("mean loss: benign {:.5}, malicious {:.5}", mean(&b), mean(&a));

    let path = std::env::temp_dir().join("zdt_example_ad.model.json");
    model.save(&path)?;
    let back = AEModel::load(&path)?;
    assert_eq!(back.score_raw(&x)?, model.score_raw(&x)?);
    println!("saved and reloaded {}", path.display());
    Ok(())
}
