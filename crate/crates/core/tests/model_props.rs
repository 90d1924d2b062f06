use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sac_oie::autodiff::Graph;
use sac_oie::chunker::{chunk_targets, chunking_loss, decode_chunks, score_chunkings, ChunkTagging, ChunkerModel};
use sac_oie::depgraph::to_chunk_graph;
use sac_oie::extractor::{
    decode_tuples, derive_gold_tags, extract_documents, oie_loss, project_to_tokens, OieModel, OieSettings, TagSet,
};
use sac_oie::model::{chunk_of_token, ChunkInventory, ChunkSequence};
use sac_oie::synth::{random_chunking, random_sentence, random_tuples, DEP_LABELS, POS_TAGS};
use sac_oie::vocab::Vocab;

fn simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0f64).powi(3) + 1e-12).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / z).collect()
}

fn oie_model(seed: u64, layers: usize, inv: &ChunkInventory) -> OieModel<f64> {
    let settings = OieSettings {
        d_h: 5,
        d_l: 3,
        gcn_layers: layers,
        arg_roles: 4,
        inventory: inv.clone(),
    };
    OieModel::new(settings, Vocab::build(DEP_LABELS.iter().copied().chain(["root"])), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn chunkings_partition_tokens(n in 1usize..30, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = random_chunking(&mut rng, "x", n, &ChunkInventory::conll());
        prop_assert_eq!(cs.chunks.iter().map(|c| c.len()).sum::<usize>(), n);
        prop_assert!(cs.chunks.windows(2).all(|w| w[0].start < w[1].start));
        for t in 0..n {
            let k = chunk_of_token(&cs, t).unwrap();
            prop_assert!(cs.chunks[k].contains(t));
            prop_assert_eq!(cs.chunks.iter().filter(|c| c.contains(t)).count(), 1);
        }
        prop_assert!(chunk_of_token(&cs, n).is_err());
    }

    #[test]
    fn chunk_graph_shape(n in 1usize..16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_sentence(&mut rng, "x", n, 0, 1.0);
        let cs = random_chunking(&mut rng, "x", n, &ChunkInventory::conll());
        let g = to_chunk_graph(&s, &cs);
        let m = cs.len();
        prop_assert_eq!(g.node_count(), m);
        prop_assert_eq!(g.labels.len(), m);
        prop_assert!(g.labels.iter().all(|l| l == "root" || DEP_LABELS.contains(&l.as_str())));
        let owner = cs.token_to_chunk();
        for i in 0..m {
            prop_assert!(g.has_edge(i, i));
            for j in 0..m {
                prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
                if i != j {
                    let linked = s.arcs.iter().any(|a| match a.head.token() {
                        Some(h) => (owner[h], owner[a.dependent]) == (i, j) || (owner[h], owner[a.dependent]) == (j, i),
                        None => false,
                    });
                    prop_assert_eq!(g.has_edge(i, j), linked);
                }
            }
        }
        prop_assert!(g.edges().len() + m <= s.arcs.len() + m);
        // Single-token chunks: the chunk graph is the undirected token tree.
        let single = ChunkSequence::singletons("x", n, "NP");
        let tg = to_chunk_graph(&s, &single);
        prop_assert_eq!(tg.edges().len(), n - 1);
        for a in &s.arcs {
            if let Some(h) = a.head.token() {
                prop_assert!(tg.has_edge(h, a.dependent));
            } else {
                prop_assert_eq!(tg.labels[a.dependent].as_str(), "root");
            }
        }
    }

    #[test]
    fn decoded_chunkings_are_valid(n in 1usize..20, seed in any::<u64>(), threshold in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::oia_simple_phrase();
        let tagging = ChunkTagging {
            boundary: (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect(),
            types: (0..n).map(|_| simplex(&mut rng, inv.len())).collect(),
        };
        let cs = decode_chunks(&tagging, threshold, &inv, "x");
        cs.validate(n).unwrap();
        cs.validate_types(&inv).unwrap();
    }

    #[test]
    fn chunking_loss_is_zero_only_at_gold(n in 1usize..12, seed in any::<u64>(), alpha in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::conll();
        let gold = random_chunking(&mut rng, "x", n, &inv);
        let y = chunk_targets(&gold, &inv).unwrap();
        let onehot = |k: usize, c: usize| (0..c).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        let exact = ChunkTagging {
            boundary: y.boundary.iter().map(|&b| b as f64).collect(),
            types: y.types.iter().map(|&t| onehot(t, inv.len())).collect(),
        };
        prop_assert!(chunking_loss(&exact, &gold, &inv, alpha).unwrap().abs() < 1e-7);
        prop_assert_eq!(decode_chunks(&exact, 0.5, &inv, "x"), gold.clone());
        let noisy = ChunkTagging {
            boundary: (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect(),
            types: (0..n).map(|_| simplex(&mut rng, inv.len())).collect(),
        };
        let l = chunking_loss(&noisy, &gold, &inv, alpha).unwrap();
        prop_assert!(l > 1e-7);
    }

    #[test]
    fn typed_hits_are_boundary_hits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::conll();
        let pairs: Vec<_> = (0..5)
            .map(|_| {
                let n = rng.gen_range(1..10);
                (random_chunking(&mut rng, "x", n, &inv), random_chunking(&mut rng, "x", n, &inv))
            })
            .collect();
        let r = score_chunkings(&pairs).unwrap();
        prop_assert!(r.typed.correct <= r.boundary.correct);
        let by_type: usize = r.by_type.iter().map(|b| b.score.correct).sum();
        prop_assert_eq!(by_type, r.typed.correct);
        for p in [r.boundary, r.typed] {
            for v in [p.precision, p.recall, p.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn chunker_outputs_are_distributions(n in 1usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::conll();
        let m = ChunkerModel::<f64>::new(Vocab::build(POS_TAGS.iter().copied()), inv, 4, 1.0, seed).unwrap();
        let s = random_sentence(&mut rng, "x", n, 4, 3.0);
        let t = m.forward(&s).unwrap();
        for i in 0..n {
            prop_assert!((0.0..=1.0).contains(&t.boundary[i]));
            prop_assert!((t.types[i].iter().sum::<f64>() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn attention_rows_are_stochastic(n in 1usize..14, seed in any::<u64>(), layers in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::conll();
        let model = oie_model(seed, layers, &inv);
        let s = random_sentence(&mut rng, "x", n, 5, 2.0);
        let cs = random_chunking(&mut rng, "x", n, &inv);
        let graph = to_chunk_graph(&s, &cs);
        let x = model.prepare(&s, &cs, &graph, rng.gen_range(0..n)).unwrap();
        let mut g = Graph::new();
        let h_c = model.encode_chunks(&mut g, &model.params, &x).unwrap();
        let enc = model.gcn_forward(&mut g, &model.params, h_c, &x).unwrap();
        let m = cs.len();
        prop_assert_eq!(enc.alpha.len(), layers);
        for &a in &enc.alpha {
            let a = g.value(a);
            for i in 0..m {
                let row: f64 = (0..m).map(|j| a.get(i, j)).sum();
                prop_assert!((row - 1.0).abs() < 1e-5, "row {} sums to {}", i, row);
                for j in 0..m {
                    if !graph.has_edge(i, j) {
                        prop_assert_eq!(a.get(i, j), 0.0);
                    }
                }
            }
        }
        prop_assert!(g.value(enc.h_dep).data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn token_rows_copy_their_chunk(n in 1usize..14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::conll();
        let model = oie_model(seed, 1 + (seed % 2) as usize, &inv);
        let s = random_sentence(&mut rng, "x", n, 5, 2.0);
        let cs = random_chunking(&mut rng, "x", n, &inv);
        let graph = to_chunk_graph(&s, &cs);
        let x = model.prepare(&s, &cs, &graph, rng.gen_range(0..n)).unwrap();
        let chunk_rows = model.chunk_distribution(&x).unwrap();
        let token_rows = project_to_tokens(&chunk_rows, &cs).unwrap();
        for c in &cs.chunks {
            for t in c.tokens() {
                prop_assert_eq!(&token_rows[t], &token_rows[c.start]);
            }
        }
        let tuple = random_tuples(&mut rng, n, 1, 3).remove(0);
        let gold = derive_gold_tags(&cs, Some(&tuple), model.tags()).unwrap();
        let mut g = Graph::new();
        let l = model.loss_graph(&mut g, &model.params, &x, &gold.token_tags).unwrap();
        let direct = oie_loss(&token_rows, &gold.token_tags).unwrap();
        prop_assert!((g.value(l).item() - direct).abs() < 1e-9 * direct.max(1.0));
    }

    #[test]
    fn decoded_spans_follow_chunks(n in 1usize..16, seed in any::<u64>(), roles in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = random_chunking(&mut rng, "x", n, &ChunkInventory::conll());
        let tags = TagSet::new(roles).unwrap();
        let dist: Vec<Vec<f64>> = (0..cs.len()).map(|_| simplex(&mut rng, tags.len())).collect();
        if let Some(t) = decode_tuples(&dist, &cs, 0, tags) {
            prop_assert!(!t.arguments.is_empty());
            prop_assert!(t.arguments.windows(2).all(|w| w[0].role < w[1].role));
            prop_assert!(t.confidence > 0.0 && t.confidence <= 1.0);
            for span in std::iter::once(&t.relation).chain(&t.arguments) {
                let (a, b) = span.chunk_span;
                prop_assert!(a <= b && b < cs.len());
                prop_assert_eq!(span.token_span, (cs.chunks[a].start, cs.chunks[b].end));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn corpus_extraction_is_permutation_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::conll();
        let model = oie_model(seed, 1, &inv);
        let items: Vec<_> = (0..6)
            .map(|k| {
                let n = rng.gen_range(1..10);
                let s = random_sentence(&mut rng, &format!("s{k}"), n, 5, 3.0);
                let cs = random_chunking(&mut rng, &s.id, n, &inv);
                (s, cs)
            })
            .collect();
        let docs = extract_documents(&model, &items).unwrap();
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<_> = order.iter().map(|&i| items[i].clone()).collect();
        let again = extract_documents(&model, &permuted).unwrap();
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(&again[k], &docs[i]);
        }
        // Renaming sentences changes nothing but the ids.
        let renamed: Vec<_> = items
            .iter()
            .map(|(s, cs)| {
                let (mut s, mut cs) = (s.clone(), cs.clone());
                s.id = format!("r-{}", s.id);
                cs.sentence_id = s.id.clone();
                (s, cs)
            })
            .collect();
        for (a, b) in extract_documents(&model, &renamed).unwrap().iter().zip(&docs) {
            prop_assert_eq!(&a.tuples, &b.tuples);
        }
    }
}
