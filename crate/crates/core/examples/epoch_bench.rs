use std::time::Instant;

use sparsegnn::featenc::EncoderConfig;
use sparsegnn::graphrep::coo_to_graph;
use sparsegnn::matgen::{generate_all, DimsRange, Registry};
use sparsegnn::nn::{AdamConfig, AdamState, Model};
use sparsegnn::rng;
use sparsegnn::trainer::{evaluate_indices, prepare_graph, train_epoch};

fn main() -> sparsegnn::Result<()> {
    let encoder = EncoderConfig::DEFAULT_EBOH;
    let registry = Registry::builtin(500)?;
    let samples = generate_all(&registry, DimsRange::DESK, 7)
        .map(|r| r.and_then(|(label, p)| prepare_graph(&coo_to_graph(&p)?, &encoder, false, label)))
        .collect::<sparsegnn::Result<Vec<_>>>()?;
    let nnz: usize = samples.iter().map(|s| s.adjacency.nnz()).sum();
    let nodes: usize = samples.iter().map(|s| s.num_nodes()).sum();
    println!("nodes {nodes} nnz {nnz}");
    let mut model = Model::new(encoder, registry.class_names(), 64, 0.5, 1)?;
    let mut adam = AdamState::new(AdamConfig::default(), &model.param_sizes());
    let idx: Vec<usize> = (0..samples.len()).collect();
    let mut r = rng::stream(1, 1);
    for _ in 0..2 {
        let t = Instant::now();
        let l = train_epoch(&mut model, &mut adam, &samples, &idx, 256, &mut r)?;
        println!("train epoch {:.2?} loss {l:.4}", t.elapsed());
        let t = Instant::now();
        evaluate_indices(&model, &samples, &idx, 256)?;
        println!("eval {:.2?}", t.elapsed());
    }
    Ok(())
}
