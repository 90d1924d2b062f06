//! `sac-oie`: chunking, chunk-level dependency graphs, tuple extraction and
//! scoring from the command line.
//!
//! Exit status is 0 on success, 1 when the inputs or arguments are at fault
//! and 2 for internal failures.

mod inputs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use sac_oie::alignment::{aggregate_alignment, render_table};
use sac_oie::chunker::{chunk_corpus, render_chunking_report, score_chunkings, train_chunker, ChunkerModel};
use sac_oie::config::RunConfig;
use sac_oie::depgraph::to_chunk_graph;
use sac_oie::eval::{render_report, score_documents, Scheme};
use sac_oie::extractor::{build_instances, extract_documents, tag_accuracy, train_oie, OieExample, OieModel};
use sac_oie::io::{self, TupleDocument};
use sac_oie::model::{AnnotatedSentence, ChunkSequence, Matrix};
use sac_oie::toy::{generate, TOY_SEED, TOY_SENTENCES};
use sac_oie::Error;

use inputs::{align_chunks, attach_embeddings, load_chunks, load_corpus, load_tuples, open, write_file};

#[derive(Parser)]
#[command(name = "sac-oie", version, about = "Chunk-level open information extraction")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration value, e.g. `--set train.epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads for per-sentence work.
    #[arg(long, default_value_t = 1, global = true)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Conllu,
    Conll2000,
    Tuples,
    Chunks,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite a corpus file in another format.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        to: Target,
        /// Chunkings for targets that need them, when the input has none.
        #[arg(long)]
        chunks: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chunk sentences with a trained chunker.
    Chunk {
        #[arg(long)]
        chunker: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Chunk file to write (JSON Lines).
        #[arg(long)]
        out: PathBuf,
        /// Gold chunkings to score against; CoNLL-2000 input is its own gold.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Boundary alignment between chunks and gold tuple spans.
    AnalyzeAlignment {
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump chunk-level dependency graphs as JSON Lines.
    ConvertDep {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        chunks: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a chunker on gold chunkings.
    TrainChunker {
        /// CoNLL-2000 file, or any corpus together with `--chunks`.
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        chunks: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a tuple extractor on gold tuples.
    TrainOie {
        /// Tuple file (JSON Lines) with dependency arcs.
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        chunks: Option<PathBuf>,
        /// Chunk with this model when no chunk file is given.
        #[arg(long)]
        chunker: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract tuples, one pass per verb.
    Extract {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        chunks: Option<PathBuf>,
        #[arg(long)]
        chunker: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted tuples against gold tuples.
    Score {
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Add the precision-recall curve and its area.
        #[arg(long)]
        auc: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the rule-generated toy corpus with synthetic embeddings.
    GenToy {
        #[arg(long)]
        out_dir: PathBuf,
        /// Embedding width; defaults to `model.d_h`.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = TOY_SENTENCES)]
        count: usize,
        #[arg(long, default_value_t = TOY_SEED)]
        seed: u64,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return if err.is_input_error() { 1 } else { 2 };
        }
        if cause.is::<std::io::Error>() {
            return 1;
        }
    }
    2
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let base = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let env = RunConfig::env_overrides(std::env::vars());
    Ok(base.with_overrides(env)?.with_overrides(&cli.overrides)?)
}

fn set_workers(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("--workers must be at least 1").into());
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("starting the worker pool")?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        log::warn!("built without parallel support; running on one thread");
    }
    Ok(())
}

fn require(path: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.or_else(|| fallback.clone())
        .ok_or_else(|| Error::invalid(format!("{what} is required (flag or [paths] entry)")).into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, |w| Ok(w.write_all(text.as_bytes())?)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_chunker(path: &Path) -> Result<ChunkerModel> {
    ChunkerModel::load(open(path)?).with_context(|| format!("loading {}", path.display()))
}

fn load_oie(path: &Path) -> Result<OieModel> {
    OieModel::load(open(path)?).with_context(|| format!("loading {}", path.display()))
}

/// Chunkings for `sentences`: from a file when given, else from a chunker.
fn chunkings_for(
    sentences: &[AnnotatedSentence],
    chunks: Option<PathBuf>,
    chunker: Option<PathBuf>,
    cfg: &RunConfig,
) -> Result<Vec<ChunkSequence>> {
    if let Some(p) = chunks {
        return align_chunks(sentences, load_chunks(&p)?);
    }
    let p = require(chunker, &cfg.paths.chunker, "--chunks or --chunker")?;
    let model = load_chunker(&p)?;
    Ok(chunk_corpus(&model, sentences)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    set_workers(cli.workers)?;
    match cli.command {
        Command::Convert { input, to, chunks, out } => {
            let corpus = load_corpus(&input)?;
            let sentences = corpus.sentences();
            let chunked = |given: Option<Vec<ChunkSequence>>| -> Result<Vec<ChunkSequence>> {
                match (chunks.as_deref(), given) {
                    (Some(p), _) => align_chunks(&sentences, load_chunks(p)?),
                    (None, Some(c)) => Ok(c),
                    (None, None) => Err(Error::invalid("this target needs chunkings: pass --chunks").into()),
                }
            };
            match to {
                Target::Conllu => write_file(&out, |w| io::write_conllu(w, &sentences))?,
                Target::Tuples => write_file(&out, |w| io::write_tuples(w, &corpus.docs))?,
                Target::Chunks => {
                    let c = chunked(corpus.chunks)?;
                    write_file(&out, |w| io::write_chunks(w, &c))?
                }
                Target::Conll2000 => {
                    let c = chunked(corpus.chunks)?;
                    let items: Vec<_> = sentences.into_iter().zip(c).collect();
                    write_file(&out, |w| io::write_conll2000(w, &items))?
                }
            }
            info!("wrote {}", out.display());
        }
        Command::Chunk {
            chunker,
            input,
            embeddings,
            out,
            gold,
        } => {
            let model = load_chunker(&require(chunker, &cfg.paths.chunker, "--chunker")?)?;
            let corpus = load_corpus(&input)?;
            let mut sentences = corpus.sentences();
            let emb = require(embeddings, &cfg.paths.embeddings, "--embeddings")?;
            attach_embeddings(&emb, &mut sentences, model.d_h())?;
            let pred = chunk_corpus(&model, &sentences)?;
            write_file(&out, |w| io::write_chunks(w, &pred))?;
            let gold = match gold {
                Some(p) => Some(align_chunks(&sentences, load_chunks(&p)?)?),
                None => corpus.chunks,
            };
            if let Some(gold) = gold {
                let pairs: Vec<_> = pred.into_iter().zip(gold).collect();
                print!("{}", render_chunking_report(&score_chunkings(&pairs)?));
            }
        }
        Command::AnalyzeAlignment {
            chunks,
            gold,
            format,
            out,
        } => {
            let docs = load_tuples(&gold)?;
            let sentences: Vec<_> = docs.iter().map(|d| d.sentence.clone()).collect();
            let chunks = align_chunks(&sentences, load_chunks(&chunks)?)?;
            let corpus: Vec<_> = chunks.into_iter().zip(docs.iter().map(TupleDocument::gold_tuples)).collect();
            let a = aggregate_alignment(&corpus)?;
            let text = match format {
                OutputFormat::Table => render_table(&a),
                OutputFormat::Json => serde_json::to_string_pretty(&a)? + "\n",
            };
            emit(out.as_deref(), &text)?;
        }
        Command::ConvertDep { input, chunks, out } => {
            let sentences = load_corpus(&input)?.sentences();
            let chunks = align_chunks(&sentences, load_chunks(&chunks)?)?;
            let mut text = String::new();
            for (s, cs) in sentences.iter().zip(&chunks) {
                let g = to_chunk_graph(s, cs);
                let nodes: Vec<_> = cs
                    .chunks
                    .iter()
                    .zip(&g.labels)
                    .map(|(c, l)| serde_json::json!({"start": c.start, "end": c.end, "type": c.chunk_type, "label": l}))
                    .collect();
                let rec = serde_json::json!({"id": s.id, "nodes": nodes, "edges": g.edges()});
                text.push_str(&serde_json::to_string(&rec)?);
                text.push('\n');
            }
            emit(out.as_deref(), &text)?;
        }
        Command::TrainChunker {
            train,
            chunks,
            embeddings,
            out,
        } => {
            let corpus = load_corpus(&train)?;
            let mut sentences = corpus.sentences();
            let gold = match chunks {
                Some(p) => align_chunks(&sentences, load_chunks(&p)?)?,
                None => corpus
                    .chunks
                    .ok_or_else(|| Error::invalid("training needs gold chunkings: pass --chunks"))?,
            };
            let emb = require(embeddings, &cfg.paths.embeddings, "--embeddings")?;
            let settings = cfg.chunker_settings()?;
            attach_embeddings(&emb, &mut sentences, settings.d_h)?;
            let out = require(out, &cfg.paths.chunker, "--out")?;
            let items: Vec<_> = sentences.into_iter().zip(gold).collect();
            let (model, log) = train_chunker(&items, &settings, &cfg.train)?;
            write_file(&out, |w| model.save(w))?;
            print_losses(&log.epoch_losses);
            let pred = chunk_corpus(&model, &items.iter().map(|(s, _)| s.clone()).collect::<Vec<_>>())?;
            let pairs: Vec<_> = pred.into_iter().zip(items.into_iter().map(|(_, g)| g)).collect();
            print!("{}", render_chunking_report(&score_chunkings(&pairs)?));
        }
        Command::TrainOie {
            train,
            chunks,
            chunker,
            embeddings,
            out,
        } => {
            let docs = load_tuples(&train)?;
            let mut sentences: Vec<_> = docs.iter().map(|d| d.sentence.clone()).collect();
            let settings = cfg.oie_settings()?;
            let emb = require(embeddings, &cfg.paths.embeddings, "--embeddings")?;
            attach_embeddings(&emb, &mut sentences, settings.d_h)?;
            let chunks = chunkings_for(&sentences, chunks, chunker, &cfg)?;
            let out = require(out, &cfg.paths.model, "--out")?;
            let examples: Vec<OieExample> = sentences
                .into_iter()
                .zip(chunks)
                .zip(&docs)
                .map(|((s, cs), d)| {
                    let explicit: Vec<Option<usize>> = d.tuples.iter().map(|e| e.verb).collect();
                    OieExample::new(s, cs, d.gold_tuples(), &explicit)
                })
                .collect();
            let trained = train_oie(&examples, &settings, &cfg.train)?;
            write_file(&out, |w| trained.model.save(w))?;
            print_losses(&trained.log.epoch_losses);
            let s = trained.stats;
            println!(
                "instances {}  tuples {}  expanded {}  dropped {}  conflicts {}  duplicate-indicators {}",
                s.instances, s.tuples, s.expanded_spans, s.dropped_arguments, s.conflicting_chunks, s.duplicate_indicators
            );
            let (instances, _) = build_instances(&trained.model, &examples)?;
            let acc = tag_accuracy(&trained.model, &instances)?;
            println!("token accuracy {:.2} ({}/{})", 100.0 * acc.accuracy, acc.correct, acc.total);
        }
        Command::Extract {
            model,
            input,
            chunks,
            chunker,
            embeddings,
            out,
        } => {
            let model = load_oie(&require(model, &cfg.paths.model, "--model")?)?;
            let mut sentences = load_corpus(&input)?.sentences();
            let emb = require(embeddings, &cfg.paths.embeddings, "--embeddings")?;
            attach_embeddings(&emb, &mut sentences, model.settings().d_h)?;
            let chunks = chunkings_for(&sentences, chunks, chunker, &cfg)?;
            let items: Vec<_> = sentences.into_iter().zip(chunks).collect();
            let docs = extract_documents(&model, &items)?;
            write_file(&out, |w| io::write_tuples(w, &docs))?;
            let n: usize = docs.iter().map(|d| d.tuples.len()).sum();
            println!("extracted {n} tuples from {} sentences", docs.len());
        }
        Command::Score {
            scheme,
            pred,
            gold,
            auc,
            format,
            out,
        } => {
            let report = score_documents(scheme, &load_tuples(&pred)?, &load_tuples(&gold)?, auc)?;
            let text = match format {
                OutputFormat::Table => render_report(&report),
                OutputFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
            };
            emit(out.as_deref(), &text)?;
        }
        Command::GenToy {
            out_dir,
            dim,
            count,
            seed,
        } => {
            let dim = dim.unwrap_or(cfg.model.d_h);
            if dim == 0 || count == 0 {
                return Err(Error::invalid("--dim and --count must be positive").into());
            }
            let items = generate(count, seed, dim);
            let docs: Vec<_> = items.iter().map(|t| t.tuple_document()).collect();
            let chunks: Vec<_> = items.iter().map(|t| t.chunks.clone()).collect();
            let conll: Vec<_> = items
                .iter()
                .map(|t| {
                    let mut s = t.sentence.clone();
                    s.embeddings = None;
                    (s, t.chunks.clone())
                })
                .collect();
            let matrices: Vec<(&str, &Matrix)> = items
                .iter()
                .map(|t| (t.sentence.id.as_str(), t.sentence.embeddings.as_ref().expect("toy embeddings")))
                .collect();
            write_file(&out_dir.join("toy.jsonl"), |w| io::write_tuples(w, &docs))?;
            write_file(&out_dir.join("toy.chunks.jsonl"), |w| io::write_chunks(w, &chunks))?;
            write_file(&out_dir.join("toy.conll"), |w| io::write_conll2000(w, &conll))?;
            write_file(&out_dir.join("toy.sace"), |w| io::write_embeddings(w, dim, &matrices))?;
            println!("wrote {count} sentences (dim {dim}) to {}", out_dir.display());
        }
    }
    Ok(())
}

fn print_losses(losses: &[f64]) {
    for (k, l) in losses.iter().enumerate() {
        println!("epoch {:>4}  loss {l:.6}", k + 1);
    }
}
