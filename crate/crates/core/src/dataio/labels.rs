use serde::{Deserialize, Serialize};

/// Bijection between original label strings and class indices `0..n`.
///
/// Indices follow first appearance in the training data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    labels: Vec<String>,
}

impl LabelMap {
    /// Builds the map from raw labels and returns the remapped indices.
    pub fn from_labels<S: AsRef<str>>(raw: &[S]) -> (Self, Vec<usize>) {
        let mut labels: Vec<String> = Vec::new();
        let indices = raw
            .iter()
            .map(|l| {
                let l = l.as_ref();
                match labels.iter().position(|k| k == l) {
                    Some(i) => i,
                    None => {
                        labels.push(l.to_owned());
                        labels.len() - 1
                    }
                }
            })
            .collect();
        (Self { labels }, indices)
    }

    /// Map with the given labels in index order. Labels must be distinct.
    pub fn new(labels: Vec<String>) -> Option<Self> {
        let distinct = labels
            .iter()
            .enumerate()
            .all(|(i, l)| !labels[..i].contains(l));
        distinct.then_some(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}
