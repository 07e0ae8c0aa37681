use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lpwm_bench::{fixture, scores};
use lpwm_core::attacks::{prune, quantize};
use lpwm_core::embed::{embed_genie, TrainConfig};
use lpwm_core::stats::{auc, dwt_threshold, kde_sample, shapiro_wilk, smoothed_bootstrap_test, AucSamples};

const BETA: [f64; 10] = [0.1437, 0.0673, 0.1249, 0.1554, 0.1021, 0.0803, 0.0423, 0.4005, 0.0502, 0.1072];
const ALPHA: [f64; 10] = [0.9750, 0.9802, 0.9809, 0.9775, 0.9783, 0.9721, 0.9747, 0.9715, 0.9787, 0.9796];

fn stats(c: &mut Criterion) {
    let (s, l) = scores(100_000);
    c.bench_function("auc 100k", |b| b.iter(|| auc(black_box(&s), &l).unwrap()));
    let x: Vec<f64> = s[..5000].to_vec();
    c.bench_function("shapiro_wilk 5000", |b| b.iter(|| shapiro_wilk(black_box(&x)).unwrap()));
    let samples = AucSamples::new(BETA.to_vec(), ALPHA.to_vec());
    c.bench_function("bootstrap 10k", |b| b.iter(|| smoothed_bootstrap_test(&samples, 10_000, 1).unwrap()));
    c.bench_function("kde_sample 100k", |b| b.iter(|| kde_sample(&BETA, 0.05, 100_000, 1)));
    c.bench_function("dwt n=10k gamma=0.9999", |b| b.iter(|| dwt_threshold(&BETA, &ALPHA, 10_000, 0.9999, 1).unwrap()));
}

fn model(c: &mut Criterion) {
    let f = fixture(100, 64, 64);
    c.bench_function("gcn encode 200 nodes", |b| b.iter(|| f.model.encode(black_box(&f.input)).unwrap()));
    c.bench_function("train loss+grad", |b| b.iter(|| f.train.loss_and_grad(&f.model).unwrap()));
    let wm = f.wm.task().unwrap();
    let cfg = TrainConfig { hidden: 64, epochs: 1, ..TrainConfig::default() };
    c.bench_function("genie epoch", |b| b.iter(|| embed_genie(f.model.clone(), &f.train, &wm, &cfg).unwrap()));
    c.bench_function("prune 0.4", |b| b.iter(|| prune(&f.model, 0.4).unwrap()));
    c.bench_function("quantize 3", |b| b.iter(|| quantize(&f.model, 3).unwrap()));
}

fn watermark(c: &mut Criterion) {
    let f = fixture(100, 64, 16);
    let g = f.ds.train_graph().unwrap();
    c.bench_function("gen_node_rep_wm 200 nodes", |b| b.iter(|| lpwm_core::wm::gen_node_rep_wm(&g, 0.1, 4).unwrap()));
    c.bench_function("wm encode+hash", |b| b.iter(|| f.wm.hash_hex()));
}

criterion_group!(benches, stats, model, watermark);
criterion_main!(benches);
