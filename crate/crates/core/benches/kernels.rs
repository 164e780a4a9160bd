use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qpatch_core::dsp::{FrontEnd, FrontEndConfig};
use qpatch_core::kernel::{build_gram_with, KernelSpec};
use qpatch_core::par::{map_slice, Execution};
use qpatch_core::patch::extract_features;
use qpatch_core::quantum::EmbeddingConfig;
use qpatch_core::synth::synthetic_utterance;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn features(fe: &FrontEnd, waves: &[qpatch_core::dsp::Waveform], exec: Execution) -> Vec<Vec<f64>> {
    map_slice(waves, exec, |w| extract_features(&fe.process(w).unwrap(), 4, 2).unwrap().values)
}

fn bench_features(c: &mut Criterion) {
    let fe = FrontEnd::new(FrontEndConfig::default()).unwrap();
    let waves: Vec<_> = (0..32).map(|i| synthetic_utterance(0, i)).collect();
    let mut g = c.benchmark_group("features_32_utterances");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| features(&fe, black_box(&waves), exec)));
    }
    g.finish();
}

fn bench_gram(c: &mut Criterion) {
    let fe = FrontEnd::new(FrontEndConfig::default()).unwrap();
    let waves: Vec<_> = (0..80).map(|i| synthetic_utterance(1, i)).collect();
    let xs = features(&fe, &waves, Execution::Parallel);
    let mut g = c.benchmark_group("gram");
    g.sample_size(20);
    for (kind, spec) in [
        ("quantum", KernelSpec::Quantum(EmbeddingConfig::default())),
        ("rbf", KernelSpec::Rbf { gamma: 0.1 }),
    ] {
        for n in [40, 80] {
            for (name, exec) in MODES {
                g.bench_with_input(BenchmarkId::new(format!("{kind}/{name}"), n), &n, |b, &n| {
                    b.iter(|| build_gram_with(black_box(&xs[..n]), &spec, exec).unwrap())
                });
            }
        }
    }
    g.finish();
}

criterion_group!(benches, bench_features, bench_gram);
criterion_main!(benches);
