//! Desk-scale cross-validation run: `cargo run --release --example desk_run -- [eboh|lboh] [per_class] [seed]`.

use std::time::Instant;

use sparsegnn::featenc::EncoderConfig;
use sparsegnn::graphrep::coo_to_graph;
use sparsegnn::matgen::{generate_all, DimsRange, Registry};
use sparsegnn::trainer::{mean_accuracy, mean_class_accuracy, prepare_graph, train_prepared, TrainConfig};

fn main() -> sparsegnn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let encoder = match args.get(1).map(String::as_str) {
        Some("lboh") => EncoderConfig::DEFAULT_LBOH,
        _ => EncoderConfig::DEFAULT_EBOH,
    };
    let per_class: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(7);
    let t = Instant::now();
    let registry = Registry::builtin(per_class)?;
    let samples = generate_all(&registry, DimsRange::DESK, seed)
        .map(|r| r.and_then(|(label, p)| prepare_graph(&coo_to_graph(&p)?, &encoder, false, label)))
        .collect::<sparsegnn::Result<Vec<_>>>()?;
    eprintln!("generated {} graphs in {:.1?}", samples.len(), t.elapsed());
    let mut config = TrainConfig::new("", encoder);
    config.seed = seed;
    let folds = train_prepared(&samples, &registry.class_names(), &config)?;
    for f in &folds {
        eprintln!(
            "fold {} acc {:.4} epoch {}/{} train_acc {:.4}",
            f.fold,
            f.metrics.accuracy,
            f.selected_epoch + 1,
            f.epochs_run(),
            f.train_accuracy
        );
        eprintln!("{}", f.metrics.confusion_tsv());
    }
    println!("mean accuracy {:.4}", mean_accuracy(&folds));
    println!("class accuracy {:?}", mean_class_accuracy(&folds));
    eprintln!("total {:.1?}", t.elapsed());
    Ok(())
}
