//! Readers and writers for every corpus and interchange format.

pub mod chunks;
pub mod conll2000;
pub mod conllu;
pub mod embeddings;
pub mod tuples;

pub use chunks::{parse_chunks, write_chunks};
pub use conll2000::{parse_conll2000, write_conll2000, Conll2000Corpus, TagRepair};
pub use conllu::{parse_conllu, write_conllu};
pub use embeddings::{read_embeddings, write_embeddings, EmbeddingFileHeader, EmbeddingTable};
pub use tuples::{parse_tuples, write_tuples, TupleDocument, TupleEntry};
