//! CoNLL-U reader/writer. Only ID, FORM, UPOS, HEAD and DEPREL are used;
//! HEAD `0` is the root. Multiword ranges and empty nodes are skipped.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, DependencyArc, Head, Token};

/// UPOS value that marks a relation-indicator candidate.
pub const VERB_UPOS: &str = "VERB";

pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<AnnotatedSentence>> {
    let mut out = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    // (head column value, deprel, line)
    let mut heads: Vec<(usize, String, usize)> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut first_line = 0;

    let mut finish = |tokens: &mut Vec<Token>,
                      heads: &mut Vec<(usize, String, usize)>,
                      sent_id: &mut Option<String>,
                      first_line: usize|
     -> Result<()> {
        if tokens.is_empty() {
            *sent_id = None;
            return Ok(());
        }
        let n = tokens.len();
        let mut arcs = Vec::with_capacity(n);
        for (dep, (head, label, line)) in heads.drain(..).enumerate() {
            let head = match head {
                0 => Head::Root,
                h if h <= n => Head::Token(h - 1),
                h => {
                    return Err(Error::Parse {
                        line,
                        message: format!("HEAD {h} out of range for {n} tokens"),
                    })
                }
            };
            if head == Head::Token(dep) {
                return Err(Error::Parse {
                    line,
                    message: "token is its own head".into(),
                });
            }
            arcs.push(DependencyArc::new(head, dep, label));
        }
        check_tree(&arcs, n).map_err(|message| Error::Parse {
            line: first_line,
            message,
        })?;
        let id = sent_id.take().unwrap_or_else(|| format!("s{}", out.len() + 1));
        out.push(AnnotatedSentence {
            id,
            tokens: std::mem::take(tokens),
            arcs,
            embeddings: None,
        });
        Ok(())
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            finish(&mut tokens, &mut heads, &mut sent_id, first_line)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("sent_id") {
                let id = id.trim_start().trim_start_matches('=').trim();
                sent_id = Some(id.to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("non-integer ID {:?}", cols[0]),
        })?;
        if id != tokens.len() + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected ID {}, found {id}", tokens.len() + 1),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("non-integer HEAD {:?}", cols[6]),
        })?;
        if tokens.is_empty() {
            first_line = lineno;
        }
        tokens.push(Token {
            index: id - 1,
            surface: cols[1].to_string(),
            pos: cols[3].to_string(),
            is_verb: cols[3] == VERB_UPOS,
        });
        heads.push((head, cols[7].to_string(), lineno));
    }
    finish(&mut tokens, &mut heads, &mut sent_id, first_line)?;
    Ok(out)
}

/// Verifies a single root and no cycles. `arcs[i].dependent == i` is assumed.
fn check_tree(arcs: &[DependencyArc], n: usize) -> std::result::Result<(), String> {
    let roots = arcs.iter().filter(|a| a.head == Head::Root).count();
    if roots != 1 {
        return Err(format!("sentence has {roots} root tokens, expected 1"));
    }
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while let Head::Token(h) = arcs[cur].head {
            cur = h;
            steps += 1;
            if steps > n {
                return Err(format!("cyclic HEAD chain through token {}", start + 1));
            }
        }
    }
    Ok(())
}

pub fn write_conllu<W: Write>(mut w: W, sentences: &[AnnotatedSentence]) -> Result<()> {
    for s in sentences {
        writeln!(w, "# sent_id = {}", s.id)?;
        let heads = s.heads();
        for (i, tok) in s.tokens.iter().enumerate() {
            let (head, label) = match heads[i] {
                Some((Head::Root, l)) => (0, l),
                Some((Head::Token(h), l)) => (h + 1, l),
                None => {
                    return Err(Error::invalid(format!(
                        "sentence {}: token {i} has no arc",
                        s.id
                    )))
                }
            };
            writeln!(
                w,
                "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_",
                i + 1,
                tok.surface,
                tok.pos,
                head,
                label
            )?;
        }
        writeln!(w)?;
    }
    Ok(())
}
