//! Token dependency trees lifted to chunk level.
//!
//! Arcs whose head and dependent share a chunk are dropped; every remaining
//! arc becomes an undirected edge between the two chunks. Each node carries a
//! self-loop and the label of the arc that attaches the chunk to its parent.

use serde::Serialize;

use crate::model::{AnnotatedSentence, ChunkSequence, Head};

pub const ROOT_LABEL: &str = "root";
/// Node label used when a chunk has no outward head token (cyclic input).
pub const UNKNOWN_LABEL: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkDepGraph {
    node_count: usize,
    adjacency: Vec<bool>,
    pub labels: Vec<String>,
}

impl ChunkDepGraph {
    /// Graph with only self-loops and empty labels.
    pub fn isolated(m: usize) -> Self {
        let mut adjacency = vec![false; m * m];
        for i in 0..m {
            adjacency[i * m + i] = true;
        }
        Self {
            node_count: m,
            adjacency,
            labels: vec![String::new(); m],
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.node_count + j]
    }

    pub fn connect(&mut self, i: usize, j: usize) {
        let m = self.node_count;
        self.adjacency[i * m + j] = true;
        self.adjacency[j * m + i] = true;
    }

    /// Row-major `m × m` adjacency with self-loops.
    pub fn adjacency(&self) -> &[bool] {
        &self.adjacency
    }

    /// Undirected edges `i < j`, excluding self-loops.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let m = self.node_count;
        (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_edge(i, j))
            .collect()
    }
}

/// Builds the chunk graph (edges and node labels) for a sentence.
pub fn to_chunk_graph(s: &AnnotatedSentence, cs: &ChunkSequence) -> ChunkDepGraph {
    let owner = cs.token_to_chunk();
    let mut g = ChunkDepGraph::isolated(cs.len());
    for arc in &s.arcs {
        let Head::Token(h) = arc.head else { continue };
        let (Some(&ci), Some(&cj)) = (owner.get(h), owner.get(arc.dependent)) else {
            continue;
        };
        if ci != cj {
            g.connect(ci, cj);
        }
    }
    g.labels = label_nodes(s, cs);
    g
}

/// Label of the arc leaving each chunk. The chunk holding the sentence root is
/// `root`; a chunk with several outward heads takes the leftmost one.
pub fn label_nodes(s: &AnnotatedSentence, cs: &ChunkSequence) -> Vec<String> {
    let heads = s.heads();
    cs.chunks
        .iter()
        .map(|c| {
            let head_of = |t: usize| heads.get(t).copied().flatten();
            if c.tokens().any(|t| matches!(head_of(t), Some((Head::Root, _)))) {
                return ROOT_LABEL.to_string();
            }
            c.tokens()
                .find_map(|t| match head_of(t)? {
                    (Head::Token(h), label) if !c.contains(h) => Some(label),
                    _ => None,
                })
                .unwrap_or(UNKNOWN_LABEL)
                .to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Chunk, DependencyArc};

    fn sentence(arcs: &[(i64, usize, &str)]) -> AnnotatedSentence {
        let words: Vec<(String, String)> = (0..arcs.len())
            .map(|i| (format!("w{i}"), "X".to_string()))
            .collect();
        let mut s = AnnotatedSentence::from_words("t", &words);
        s.arcs = arcs
            .iter()
            .map(|&(h, d, l)| DependencyArc::new(Head::from_signed(h).unwrap(), d, l))
            .collect();
        s
    }

    #[test]
    fn whole_sentence_one_chunk() {
        let s = sentence(&[(1, 0, "det"), (-1, 1, "root")]);
        let cs = ChunkSequence::new("t", vec![Chunk::new(0, 1, "NP")]);
        let g = to_chunk_graph(&s, &cs);
        assert_eq!(g.node_count(), 1);
        assert!(g.has_edge(0, 0));
        assert!(g.edges().is_empty());
        assert_eq!(g.labels, vec!["root"]);
    }

    #[test]
    fn two_chunks_one_arc() {
        let s = sentence(&[(1, 0, "nsubj"), (-1, 1, "root")]);
        let cs = ChunkSequence::singletons("t", 2, "NP");
        let g = to_chunk_graph(&s, &cs);
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert!(g.has_edge(1, 0) && g.has_edge(0, 0) && g.has_edge(1, 1));
        assert_eq!(g.labels, vec!["nsubj", "root"]);
    }

    #[test]
    fn two_outward_heads_take_the_leftmost() {
        // Chunk [1..2]: token 1 hangs off token 0, token 2 off token 3.
        let s = sentence(&[(3, 0, "nsubj"), (0, 1, "amod"), (3, 2, "obj"), (-1, 3, "root")]);
        let cs = ChunkSequence::new(
            "t",
            vec![Chunk::new(0, 0, "NP"), Chunk::new(1, 2, "NP"), Chunk::new(3, 3, "VP")],
        );
        let g = to_chunk_graph(&s, &cs);
        assert_eq!(g.labels, vec!["nsubj", "amod", "root"]);
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn duplicate_arcs_between_chunks_collapse() {
        let s = sentence(&[(2, 0, "a"), (2, 1, "b"), (-1, 2, "root")]);
        let cs = ChunkSequence::new("t", vec![Chunk::new(0, 1, "NP"), Chunk::new(2, 2, "VP")]);
        let g = to_chunk_graph(&s, &cs);
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert_eq!(g.labels, vec!["a", "root"]);
    }
}
