//! One thread against all cores on the per-sentence corpus loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sac_oie::alignment::aggregate_alignment;
use sac_oie::extractor::{extract_documents, OieModel, OieSettings};
use sac_oie::model::ChunkInventory;
use sac_oie::synth::{random_chunking, random_sentence, random_tuples, DEP_LABELS};
use sac_oie::vocab::Vocab;

fn pools() -> Vec<(usize, rayon::ThreadPool)> {
    // At least two threads, so the comparison exists on single-core hosts too.
    let all = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    [1, all]
        .into_iter()
        .map(|n| (n, rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()))
        .collect()
}

fn alignment(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inventory = ChunkInventory::conll();
    let corpus: Vec<_> = (0..20_000)
        .map(|i| {
            let n = rng.gen_range(5..=40);
            let cs = random_chunking(&mut rng, &format!("b{i}"), n, &inventory);
            (cs, random_tuples(&mut rng, n, 3, 3))
        })
        .collect();
    let mut group = c.benchmark_group("alignment_20k");
    for (threads, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &corpus, |b, corpus| {
            b.iter(|| pool.install(|| aggregate_alignment(corpus).unwrap()))
        });
    }
    group.finish();
}

fn extraction(c: &mut Criterion) {
    let d_h = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inventory = ChunkInventory::conll();
    let items: Vec<_> = (0..200)
        .map(|i| {
            let n = rng.gen_range(8..=30);
            let id = format!("e{i}");
            let s = random_sentence(&mut rng, &id, n, d_h, 1.0);
            let cs = random_chunking(&mut rng, &id, n, &inventory);
            (s, cs)
        })
        .collect();
    let settings = OieSettings {
        d_h,
        d_l: 32,
        ..Default::default()
    };
    let labels = Vocab::build(DEP_LABELS.iter().copied().chain(["root"]));
    let model = OieModel::<f32>::new(settings, labels, 3).unwrap();
    let mut group = c.benchmark_group("extract_200");
    group.sample_size(10);
    for (threads, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &items, |b, items| {
            b.iter(|| pool.install(|| extract_documents(&model, items).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, alignment, extraction);
criterion_main!(benches);
