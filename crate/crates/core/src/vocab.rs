use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub const UNK: &str = "<unk>";

/// String-to-index table with an unknown-item row at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    items: Vec<String>,
}

impl Vocab {
    /// Sorted, de-duplicated items after the `<unk>` row.
    pub fn build<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set: BTreeSet<String> = items
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .filter(|s| s != UNK)
            .collect();
        let mut v = vec![UNK.to_string()];
        v.extend(set);
        Self { items: v }
    }

    /// Uses the given order as-is; `<unk>` is prepended when missing.
    pub fn from_items(items: Vec<String>) -> Self {
        if items.first().map(String::as_str) == Some(UNK) {
            Self { items }
        } else {
            let mut v = vec![UNK.to_string()];
            v.extend(items.into_iter().filter(|s| s != UNK));
            Self { items: v }
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Index of `s`, or 0 (`<unk>`) when absent.
    pub fn index(&self, s: &str) -> usize {
        // Items past the first are sorted when built; fall back to a scan otherwise.
        match self.items[1..].binary_search_by(|x| x.as_str().cmp(s)) {
            Ok(i) => i + 1,
            Err(_) => self.items.iter().position(|x| x == s).unwrap_or(0),
        }
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknowns_map_to_zero() {
        let v = Vocab::build(["NOUN", "VERB", "DET", "NOUN"]);
        assert_eq!(v.items(), &["<unk>", "DET", "NOUN", "VERB"]);
        assert_eq!(v.index("VERB"), 3);
        assert_eq!(v.index("ADJ"), 0);
    }
}
