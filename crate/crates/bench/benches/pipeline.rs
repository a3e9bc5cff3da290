use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use semrob_core::attacks::plan_l2_weak;
use semrob_core::bayes::{semantic_flip_count, BayesPredictor};
use semrob_core::classifiers::{label_propagation, predict_node, train};
use semrob_core::graphgen::{extend_graph, sample_graph};
use semrob_core::metrics::robustness_trace;
use semrob_core::predictor::LabelOracle;
use semrob_core::{classify_bayes, Architecture, BayesMode, BudgetSpec, GenModel, LPConfig, TrainConfig};

fn csbm() -> GenModel {
    GenModel::csbm(1000, 0.0063, 0.0015, 1.0, 21, 1.0)
}

fn sampling(c: &mut Criterion) {
    let model = csbm();
    c.bench_function("sample_csbm_1000", |b| b.iter(|| sample_graph(black_box(&model), 7).unwrap()));
    let g = sample_graph(&model, 7).unwrap();
    c.bench_function("extend_one_node", |b| b.iter(|| extend_graph(black_box(&g), 1, 11).unwrap()));
}

fn bayes(c: &mut Criterion) {
    let g = extend_graph(&sample_graph(&csbm(), 7).unwrap(), 1, 11).unwrap();
    let v = g.n() - 1;
    c.bench_function("bayes_classify", |b| b.iter(|| classify_bayes(black_box(&g), v, BayesMode::Full).unwrap()));
    c.bench_function("bayes_flip_count", |b| b.iter(|| semantic_flip_count(black_box(&g), v, None).unwrap()));
}

fn training(c: &mut Criterion) {
    let g = sample_graph(&csbm(), 7).unwrap();
    let cfg = TrainConfig { max_epochs: 50, ..Default::default() };
    let mut group = c.benchmark_group("train_50_epochs");
    group.sample_size(10);
    for arch in [Architecture::Mlp, Architecture::Sgc, Architecture::Gcn] {
        group.bench_function(arch.tag(), |b| b.iter(|| train(arch, black_box(&g), &cfg, 0.2).unwrap()));
    }
    group.finish();
}

fn propagation(c: &mut Criterion) {
    let g = sample_graph(&csbm(), 7).unwrap();
    let cfg = LPConfig::default();
    c.bench_function("label_propagation", |b| b.iter(|| label_propagation(black_box(&g), None, &cfg).unwrap()));
}

fn trace(c: &mut Criterion) {
    let g0 = sample_graph(&csbm(), 7).unwrap();
    let params = train(Architecture::Gcn, &g0, &TrainConfig::default(), 0.2).unwrap();
    let g = extend_graph(&g0, 1, 11).unwrap();
    let v = g.n() - 1;
    let budget = BudgetSpec::Unbounded { cap: 32 };
    let plan = plan_l2_weak(&g, v, &budget).unwrap();
    let bayes = BayesPredictor { mode: BayesMode::Full };
    c.bench_function("gcn_predict_node", |b| b.iter(|| predict_node(&params, black_box(&g), v).unwrap()));
    c.bench_function("trace_bayes_32", |b| {
        b.iter(|| robustness_trace(black_box(&g), v, &plan, &bayes, &LabelOracle, 32).unwrap())
    });
}

criterion_group!(benches, sampling, bayes, training, propagation, trace);
criterion_main!(benches);
