use proptest::prelude::*;
use sparsegnn::featenc::EncoderConfig;
use sparsegnn::graphrep::{coo_to_graph, Graph};
use sparsegnn::matgen::{build_dataset, generate_all, DimsRange, Registry};
use sparsegnn::nn::{Model, PreparedGraph};
use sparsegnn::trainer::*;
use sparsegnn::Error;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn small_corpus(per_class: usize, seed: u64) -> (Vec<Graph>, Vec<usize>, Vec<String>) {
    let reg = Registry::builtin(per_class).unwrap();
    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    for item in generate_all(&reg, DimsRange::new(16, 48).unwrap(), seed) {
        let (c, p) = item.unwrap();
        graphs.push(coo_to_graph(&p).unwrap());
        labels.push(c);
    }
    (graphs, labels, reg.class_names())
}

fn prepare(graphs: &[Graph], labels: &[usize], enc: &EncoderConfig) -> Vec<PreparedGraph> {
    graphs.iter().zip(labels).map(|(g, &l)| prepare_graph(g, enc, false, l).unwrap()).collect()
}

fn quick_config(enc: EncoderConfig, folds: usize, epochs: usize, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::new("unused", enc);
    cfg.folds = folds;
    cfg.epochs = epochs;
    cfg.batch_size = 16;
    cfg.hidden_dim = 16;
    cfg.seed = seed;
    cfg
}

#[test]
fn kfold_examples() {
    let splits = kfold_split(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 5, 1).unwrap();
    assert_eq!(splits.len(), 5);
    for (train, val) in &splits {
        assert_eq!(val.len(), 2);
        assert_eq!(train.len(), 8);
        let labels: Vec<usize> = val.iter().map(|&i| usize::from(i >= 5)).collect();
        assert_eq!(labels.iter().sum::<usize>(), 1, "each fold holds one of each class");
    }
    assert!(matches!(kfold_split(&[0; 10], 1, 0), Err(Error::InvalidParameter(_))));
    assert!(matches!(kfold_split(&[0; 3], 4, 0), Err(Error::InvalidParameter(_))));
}

proptest! {
    #[test]
    fn kfold_partitions_and_stratifies(
        labels in proptest::collection::vec(0usize..4, 10..200),
        folds in 2usize..8,
        seed in any::<u64>(),
    ) {
        prop_assume!(folds <= labels.len());
        let splits = kfold_split(&labels, folds, seed).unwrap();
        prop_assert_eq!(&splits, &kfold_split(&labels, folds, seed).unwrap());
        let mut seen = vec![0usize; labels.len()];
        for (train, val) in &splits {
            prop_assert_eq!(train.len() + val.len(), labels.len());
            for &v in val {
                seen[v] += 1;
            }
            for c in 0..4 {
                let total = labels.iter().filter(|&&l| l == c).count();
                let in_val = val.iter().filter(|&&i| labels[i] == c).count();
                prop_assert!(in_val >= total / folds && in_val <= total.div_ceil(folds));
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        let sizes: Vec<usize> = splits.iter().map(|(_, v)| v.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn metrics_match_brute_force(
        pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..100),
    ) {
        let m = Metrics::from_pairs(&names(3), &pairs).unwrap();
        let correct = pairs.iter().filter(|(t, p)| t == p).count();
        prop_assert!((m.accuracy - correct as f64 / pairs.len() as f64).abs() < 1e-15);
        let mut f1_sum = 0.0;
        for k in 0..3 {
            let tp = pairs.iter().filter(|&&(t, p)| t == k && p == k).count() as f64;
            let actual = pairs.iter().filter(|&&(t, _)| t == k).count() as f64;
            let predicted = pairs.iter().filter(|&&(_, p)| p == k).count() as f64;
            let recall = if actual > 0.0 { tp / actual } else { 0.0 };
            let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            let c = &m.per_class[k];
            prop_assert!((c.recall - recall).abs() < 1e-15);
            prop_assert!((c.accuracy - recall).abs() < 1e-15);
            prop_assert!((c.precision - precision).abs() < 1e-15);
            prop_assert!((c.f1 - f1).abs() < 1e-12);
            prop_assert_eq!(c.support, actual as usize);
            f1_sum += f1;
        }
        prop_assert!((m.f1 - f1_sum / 3.0).abs() < 1e-12);
        prop_assert_eq!(m.total(), pairs.len());
    }
}

#[test]
fn metrics_examples() {
    let pairs = [(0, 0), (0, 0), (0, 1), (1, 1), (1, 1), (2, 0)];
    let m = Metrics::from_pairs(&names(3), &pairs).unwrap();
    assert_eq!(m.confusion, vec![vec![2, 1, 0], vec![0, 2, 0], vec![1, 0, 0]]);
    assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-15);
    assert!((m.per_class[0].accuracy - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(m.per_class[2].f1, 0.0);
    assert_eq!(m.class_accuracy("c1"), Some(1.0));
    assert_eq!(m.class_accuracy("nope"), None);
    assert_eq!(m.confusion_tsv(), "true\\predicted\tc0\tc1\tc2\nc0\t2\t1\t0\nc1\t0\t2\t0\nc2\t1\t0\t0\n");
    assert!(Metrics::from_pairs(&names(2), &[]).is_err());
    assert!(Metrics::from_pairs(&names(2), &[(0, 2)]).is_err());
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let enc = [EncoderConfig::DEFAULT_EBOH, EncoderConfig::DEFAULT_LBOH, EncoderConfig::Ldp][seed % 3];
        let model = Model::new(enc, names(4), 8 + seed, 0.5, seed as u64).unwrap();
        let path = dir.path().join(format!("m{seed}.json"));
        save_checkpoint(&model, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, model);
        for (a, b) in back.param_slices().iter().zip(model.param_slices()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

#[test]
fn checkpoint_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_checkpoint(dir.path().join("missing.json")),
        Err(Error::NotFound { .. })
    ));
    let model = Model::new(EncoderConfig::DEFAULT_EBOH, names(4), 8, 0.5, 0).unwrap();
    let text = checkpoint_to_string(&model);
    assert!(matches!(checkpoint_from_str(&text[..text.len() / 2]), Err(Error::Integrity(_))));
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["tensors"][0]["values"].as_array_mut().unwrap().pop();
    assert!(matches!(checkpoint_from_str(&v.to_string()), Err(Error::Integrity(_))));
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["hidden_dim"] = 9.into();
    assert!(matches!(checkpoint_from_str(&v.to_string()), Err(Error::Integrity(_))));
}

#[test]
fn training_is_deterministic() {
    let (graphs, labels, classes) = small_corpus(5, 3);
    let samples = prepare(&graphs, &labels, &EncoderConfig::DEFAULT_EBOH);
    let cfg = quick_config(EncoderConfig::DEFAULT_EBOH, 2, 4, 11);
    let a = train_prepared(&samples, &classes, &cfg).unwrap();
    let b = train_prepared(&samples, &classes, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2);
    for f in &a {
        assert!(f.train_loss.iter().chain(&f.val_loss).all(|l| l.is_finite()));
        assert_eq!(f.metrics.total(), 10);
    }
}

#[test]
fn one_graph_per_class_is_memorised() {
    let (graphs, labels, classes) = small_corpus(2, 5);
    let samples = prepare(&graphs, &labels, &EncoderConfig::DEFAULT_EBOH);
    let mut cfg = quick_config(EncoderConfig::DEFAULT_EBOH, 2, 300, 2);
    cfg.selection = ModelSelection::LastEpoch;
    cfg.patience = None;
    cfg.dropout = 0.0;
    let folds = train_prepared(&samples, &classes, &cfg).unwrap();
    for f in &folds {
        assert_eq!(f.epochs_run(), 300);
        assert_eq!(f.selected_epoch, 299);
        assert_eq!(f.train_accuracy, 1.0, "fold {}: {:?}", f.fold, f.train_loss.last());
    }
}

#[test]
fn early_stopping_and_outputs() {
    let (graphs, labels, classes) = small_corpus(4, 9);
    let samples = prepare(&graphs, &labels, &EncoderConfig::DEFAULT_LBOH);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(EncoderConfig::DEFAULT_LBOH, 2, 40, 1);
    cfg.patience = Some(1);
    cfg.output_dir = Some(dir.path().to_path_buf());
    let folds = train_prepared(&samples, &classes, &cfg).unwrap();
    for f in &folds {
        assert!(f.epochs_run() <= 40);
        assert!(f.selected_epoch < f.epochs_run());
        let best = f.val_loss.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(f.val_loss[f.selected_epoch], best);
        let model = load_checkpoint(f.checkpoint.as_ref().unwrap()).unwrap();
        let refs: Vec<&Graph> = graphs.iter().collect();
        assert_eq!(model.class_names, classes);
        assert_eq!(predict(&model, &refs, false).unwrap().len(), graphs.len());
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.tsv")).unwrap();
    assert!(summary.starts_with("fold\taccuracy"));
    assert_eq!(summary_tsv(&folds), summary);
}

#[test]
fn config_and_input_errors() {
    let (graphs, labels, classes) = small_corpus(2, 0);
    let samples = prepare(&graphs, &labels, &EncoderConfig::DEFAULT_EBOH);
    let mut cfg = quick_config(EncoderConfig::DEFAULT_EBOH, 1, 1, 0);
    assert!(matches!(train_prepared(&samples, &classes, &cfg), Err(Error::InvalidParameter(_))));
    cfg.folds = 2;
    cfg.lr = 0.0;
    assert!(train_prepared(&samples, &classes, &cfg).is_err());
    let lboh = quick_config(EncoderConfig::DEFAULT_LBOH, 2, 1, 0);
    assert!(matches!(train_prepared(&samples, &classes, &lboh), Err(Error::Shape(_))));
    assert!(matches!(
        train(&quick_config(EncoderConfig::DEFAULT_EBOH, 2, 1, 0)),
        Err(Error::NotFound { .. })
    ));
    assert_eq!(TrainConfig::new("m", EncoderConfig::OneHot { max_degree: 4 }).effective_batch_size(), 1);
}

#[test]
fn predictions_are_probabilities() {
    let (graphs, _, classes) = small_corpus(2, 4);
    let model = Model::new(EncoderConfig::DEFAULT_EBOH, classes, 16, 0.5, 1).unwrap();
    let refs: Vec<&Graph> = graphs.iter().collect();
    let p = predict_proba(&model, &refs, false).unwrap();
    assert_eq!(p.dim(), (8, 4));
    for row in p.rows() {
        assert!((row.sum() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&v| v > 0.0));
    }
}

#[test]
fn relabelled_variants_keep_predictions() {
    let (graphs, labels, classes) = small_corpus(3, 6);
    let model = Model::new(EncoderConfig::DEFAULT_EBOH, classes.clone(), 16, 0.5, 3).unwrap();
    let refs: Vec<&Graph> = graphs.iter().collect();
    let original = predict(&model, &refs, false).unwrap();
    let report =
        evaluate_perturbed_graphs(&model, &graphs, &labels, Perturbation::Relabel, 4, 8, false).unwrap();
    for (preds, &o) in report.predictions.iter().zip(&original) {
        assert_eq!(preds, &vec![o; 4]);
    }
    let plain = evaluate_graphs(&model, &graphs, &labels, false).unwrap();
    assert_eq!(report.metrics.accuracy, plain.accuracy);

    let table = robustness_table(&model, &graphs, &labels, 0.5, 2, 1).unwrap();
    assert_eq!(table.relabelling.accuracy, plain.accuracy);
    assert_eq!(table.original, plain);
    let tsv = table.to_tsv();
    assert!(tsv.starts_with("class\tnode_sampling\tnode_relabelling\toriginal\n"));
    assert_eq!(tsv.lines().count(), classes.len() + 2);
}

#[test]
fn perturbation_errors() {
    let (graphs, labels, classes) = small_corpus(1, 1);
    let model = Model::new(EncoderConfig::DEFAULT_EBOH, classes, 8, 0.5, 0).unwrap();
    assert!(matches!(
        evaluate_perturbed_graphs(&model, &graphs, &labels, Perturbation::Relabel, 0, 0, false),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        evaluate_perturbed_graphs(&model, &graphs, &labels, Perturbation::Urns { fraction: 0.0 }, 2, 0, false),
        Err(Error::InvalidParameter(_))
    ));
    assert!(evaluate_perturbed_graphs(&model, &graphs, &labels[..2], Perturbation::Relabel, 2, 0, false).is_err());
}

#[test]
fn file_based_evaluation_checks_classes() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::builtin(2).unwrap();
    build_dataset(&reg, DimsRange::new(16, 32).unwrap(), 0, dir.path()).unwrap();
    let manifest = dir.path().join("manifest.txt");
    let model = Model::new(EncoderConfig::DEFAULT_EBOH, reg.class_names(), 8, 0.5, 0).unwrap();
    let ckpt = dir.path().join("model.json");
    save_checkpoint(&model, &ckpt).unwrap();
    let m = evaluate(&ckpt, &manifest).unwrap();
    assert_eq!(m.total(), 8);

    let other = model.replace_head(names(4), false, 0).unwrap();
    save_checkpoint(&other, &ckpt).unwrap();
    assert!(evaluate(&ckpt, &manifest).is_err());
}
