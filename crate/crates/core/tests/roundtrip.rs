use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sac_oie::autodiff::ParamStore;
use sac_oie::chunker::ChunkerModel;
use sac_oie::extractor::{OieModel, OieSettings};
use sac_oie::io::{
    parse_conll2000, parse_conllu, parse_tuples, read_embeddings, write_conll2000, write_conllu, write_embeddings,
    write_tuples, TupleDocument, TupleEntry,
};
use sac_oie::model::{AnnotatedSentence, Chunk, ChunkInventory, ChunkSequence};
use sac_oie::synth::{random_chunking, random_sentence, random_tuples, DEP_LABELS, POS_TAGS};
use sac_oie::vocab::Vocab;

fn corpus(seed: u64, count: usize, dim: usize) -> Vec<AnnotatedSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = rng.gen_range(1..=12);
            let mut s = random_sentence(&mut rng, &format!("s{}", k + 1), n, dim, 2.0);
            for t in &mut s.tokens {
                t.surface = format!("{}{}", ["tok", "Ab", "x-y", "ünï"][rng.gen_range(0..4)], t.index);
            }
            s
        })
        .collect()
}

fn same_params<T: sac_oie::autodiff::Real>(a: &ParamStore<T>, b: &ParamStore<T>) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|((_, x), (_, y))| x.name == y.name && x.value.data() == y.value.data())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conllu_round_trip(seed in any::<u64>(), count in 1usize..6) {
        let mut sentences = corpus(seed, count, 0);
        for s in &mut sentences {
            for t in &mut s.tokens {
                t.is_verb = t.pos == "VERB";
            }
        }
        let mut buf = Vec::new();
        write_conllu(&mut buf, &sentences).unwrap();
        let back = parse_conllu(buf.as_slice()).unwrap();
        prop_assert_eq!(back, sentences);
    }

    #[test]
    fn conll2000_round_trip(seed in any::<u64>(), count in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
        let inv = ChunkInventory::conll();
        let items: Vec<(AnnotatedSentence, ChunkSequence)> = corpus(seed, count, 0)
            .into_iter()
            .map(|mut s| {
                s.arcs.clear();
                for t in &mut s.tokens {
                    t.is_verb = false;
                }
                let mut cs = random_chunking(&mut rng, &s.id, s.len(), &inv);
                // Multi-token O chunks have no tag encoding; split them.
                cs.chunks = cs
                    .chunks
                    .into_iter()
                    .flat_map(|c| {
                        if c.chunk_type == "O" {
                            c.tokens().map(|t| Chunk::new(t, t, "O")).collect()
                        } else {
                            vec![c]
                        }
                    })
                    .collect();
                (s, cs)
            })
            .collect();
        let mut buf = Vec::new();
        write_conll2000(&mut buf, &items).unwrap();
        let back = parse_conll2000(buf.as_slice()).unwrap();
        prop_assert!(back.repairs.is_empty());
        for (s, cs) in &back.items {
            cs.validate(s.len()).unwrap();
        }
        prop_assert_eq!(back.items, items);
    }

    #[test]
    fn tuple_jsonl_round_trip(seed in any::<u64>(), count in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xaa);
        let docs: Vec<TupleDocument> = corpus(seed, count, 0)
            .into_iter()
            .map(|sentence| {
                let n = sentence.len();
                let k = rng.gen_range(0..=3);
                let tuples = random_tuples(&mut rng, n, k, 4)
                    .into_iter()
                    .map(|tuple| TupleEntry {
                        tuple,
                        confidence: rng.gen_bool(0.5).then(|| rng.gen_range(0.0..1.0)),
                        verb: rng.gen_bool(0.5).then(|| rng.gen_range(0..n)),
                        synset: rng.gen_bool(0.3).then(|| rng.gen_range(0..3)),
                    })
                    .collect();
                TupleDocument { sentence, tuples }
            })
            .collect();
        let mut buf = Vec::new();
        write_tuples(&mut buf, &docs).unwrap();
        prop_assert_eq!(parse_tuples(buf.as_slice()).unwrap(), docs);
    }

    #[test]
    fn embedding_file_round_trip(seed in any::<u64>(), count in 1usize..6, dim in 1usize..9) {
        let sentences = corpus(seed, count, dim);
        let entries: Vec<(&str, &sac_oie::model::Matrix)> =
            sentences.iter().map(|s| (s.id.as_str(), s.embeddings.as_ref().unwrap())).collect();
        let mut buf = Vec::new();
        write_embeddings(&mut buf, dim, &entries).unwrap();
        let table = read_embeddings(buf.as_slice()).unwrap();
        prop_assert_eq!(table.dim, dim);
        let mut stripped: Vec<AnnotatedSentence> = sentences
            .iter()
            .cloned()
            .map(|mut s| {
                s.embeddings = None;
                s
            })
            .collect();
        table.attach(&mut stripped, Some(dim)).unwrap();
        prop_assert_eq!(stripped, sentences);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn checkpoints_round_trip(seed in any::<u64>(), d in 1usize..8, layers in 1usize..3) {
        let inv = ChunkInventory::oia_simple_phrase();
        let c = ChunkerModel::<f32>::new(Vocab::build(POS_TAGS.iter().copied()), inv.clone(), d, 0.7, seed).unwrap();
        let mut buf = Vec::new();
        c.save(&mut buf).unwrap();
        let back = ChunkerModel::<f32>::load(buf.as_slice()).unwrap();
        prop_assert!(same_params(&c.params, &back.params));
        prop_assert_eq!((back.d_h(), back.alpha()), (d, 0.7));
        prop_assert_eq!(back.pos_vocab(), c.pos_vocab());
        prop_assert_eq!(back.inventory(), c.inventory());

        let settings = OieSettings { d_h: d, d_l: 3, gcn_layers: layers, arg_roles: 4, inventory: inv };
        let o = OieModel::<f32>::new(settings, Vocab::build(DEP_LABELS.iter().copied().chain(["root"])), seed).unwrap();
        let mut buf = Vec::new();
        o.save(&mut buf).unwrap();
        let back = OieModel::<f32>::load(buf.as_slice()).unwrap();
        prop_assert!(same_params(&o.params, &back.params));
        prop_assert_eq!(back.labels(), o.labels());
        prop_assert_eq!(back.tags(), o.tags());
    }
}

proptest! {
    #[test]
    fn chunk_file_round_trip(seed in any::<u64>(), count in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = ChunkInventory::oia_simple_phrase();
        let seqs: Vec<ChunkSequence> = (0..count)
            .map(|k| {
                let n = rng.gen_range(1..15);
                random_chunking(&mut rng, &format!("s{k}"), n, &inv)
            })
            .collect();
        let mut buf = Vec::new();
        sac_oie::io::write_chunks(&mut buf, &seqs).unwrap();
        prop_assert_eq!(sac_oie::io::parse_chunks(buf.as_slice()).unwrap(), seqs);
    }
}
