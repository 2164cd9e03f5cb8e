//! Builds the flow graph of one network and shows what the graph features
//! say about a scanner hiding in benign traffic.
//!
//! Usage: cargo run --release --example graph_features [seed]

use zdt::graph::{compute_node_features, NetworkGraph, NodeFeatureConfig};
use zdt::synth::{generate_attack, generate_benign, AttackTemplate, NetworkProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let profile = NetworkProfile::preset("campus")?;
    let mut ds = generate_benign(&profile, 10_000, seed);
    let scan = generate_attack(&AttackTemplate::builtin("scanning")?, &profile, 300, seed + 1);
    let scanners: Vec<String> = {
        let mut s: Vec<String> = scan.records.iter().map(|r| r.src_ip.clone()).collect();
        s.sort();
        s.dedup();
        s
    };
    ds.records.extend(scan.records);

    let g = NetworkGraph::from_dataset(&ds);
    let nft = compute_node_features(&g, &NodeFeatureConfig::default());
    println!("{} nodes, {} edges, {} communities", g.node_count(), g.edge_count(), {
        let mut c = nft.community.clone();
        c.sort();
        c.dedup();
        c.len()
    });

    let mut order: Vec<usize> = (0..nft.len()).collect();
    order.sort_by(|&a, &b| nft.out_degree[b].cmp(&nft.out_degree[a]));
    println!("{:<16} {:>7} {:>8} {:>9} {:>7} {:>7}", "node", "out_deg", "pagerank", "between", "hub", "cc");
    for &i in order.iter().take(8) {
        let tag = if scanners.contains(&nft.nodes[i]) { "  <- scanner" } else { "" };
        println!(
            "{:<16} {:>7} {:>8.5} {:>9.1} {:>7.4} {:>7.3}{tag}",
            nft.nodes[i],
            nft.out_degree[i],
            nft.pagerank[i],
            nft.betweenness[i],
            nft.hub[i],
            nft.clustering_coefficient[i],
        );
    }
    for w in &nft.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
