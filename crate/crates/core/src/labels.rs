//! Label universes, label sets and paired evaluation batches.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// The ordered, duplicate-free list of every label a task can emit.
#[derive(Debug, Clone)]
pub struct LabelUniverse {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelUniverse {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::invalid("label universe must contain at least one label"));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate label `{label}` in universe")));
            }
        }
        Ok(Self { labels, index })
    }

    /// Universe whose labels are the decimal strings `"0"`, `"1"`, ... `n-1`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> Option<&str> {
        self.labels.get(idx).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Resolves identifiers into a [`LabelSet`]; `row` is only used for the
    /// error message.
    pub fn label_set<'a, I>(&self, ids: I, row: usize) -> Result<LabelSet>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut members = Vec::new();
        for id in ids {
            let idx = self.index_of(id).ok_or_else(|| Error::UnknownLabel {
                label: id.to_string(),
                row,
            })?;
            members.push(idx);
        }
        Ok(LabelSet::from_indices(members))
    }
}

impl PartialEq for LabelUniverse {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for LabelUniverse {}

pub(crate) fn same_universe(a: &Arc<LabelUniverse>, b: &Arc<LabelUniverse>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A set of label indices, stored sorted and deduplicated.
///
/// Iteration is always in ascending index order, which the matching code
/// relies on for lowest-index tie breaking.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(Vec<usize>);

impl LabelSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.0.binary_search(&idx).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn intersection_len(&self, other: &LabelSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

impl FromIterator<usize> for LabelSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::from_indices(iter)
    }
}

impl<'a> IntoIterator for &'a LabelSet {
    type Item = usize;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// Paired gold and predicted label sets over a shared universe.
#[derive(Debug, Clone)]
pub struct EvaluationBatch {
    universe: Arc<LabelUniverse>,
    gold: Vec<LabelSet>,
    pred: Vec<LabelSet>,
}

impl EvaluationBatch {
    pub fn new(universe: Arc<LabelUniverse>, gold: Vec<LabelSet>, pred: Vec<LabelSet>) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::invalid(format!(
                "gold has {} examples but predictions have {}",
                gold.len(),
                pred.len()
            )));
        }
        let n = universe.len();
        for (i, set) in gold.iter().chain(pred.iter()).enumerate() {
            if let Some(m) = set.max_index() {
                if m >= n {
                    let row = i % gold.len().max(1);
                    return Err(Error::invalid(format!(
                        "label index {m} in example {row} is outside the universe of {n} labels"
                    )));
                }
            }
        }
        Ok(Self { universe, gold, pred })
    }

    pub fn universe(&self) -> &Arc<LabelUniverse> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn gold(&self) -> &[LabelSet] {
        &self.gold
    }

    pub fn pred(&self) -> &[LabelSet] {
        &self.pred
    }

    /// Iterates `(pred, gold)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (&LabelSet, &LabelSet)> {
        self.pred.iter().zip(self.gold.iter())
    }

    /// A batch with gold and predictions exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            universe: self.universe.clone(),
            gold: self.pred.clone(),
            pred: self.gold.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universe_rejects_duplicates_and_empty() {
        assert!(LabelUniverse::new(["a", "b", "a"]).is_err());
        assert!(LabelUniverse::new(Vec::<String>::new()).is_err());
        let u = LabelUniverse::new(["joy", "anger"]).unwrap();
        assert_eq!(u.index_of("anger"), Some(1));
        assert_eq!(u.label(0), Some("joy"));
    }

    #[test]
    fn label_set_is_sorted_and_unique() {
        let s = LabelSet::from_indices([3, 1, 3, 2]);
        assert_eq!(s.as_slice(), &[1, 2, 3]);
        assert_eq!(s.intersection_len(&LabelSet::from_indices([2, 3, 9])), 2);
        assert_eq!(s.to_string(), "{1,2,3}");
    }

    #[test]
    fn unknown_label_names_row() {
        let u = LabelUniverse::new(["a", "b"]).unwrap();
        let err = u.label_set(["a", "z"], 7).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel { ref label, row: 7 } if label == "z"));
    }

    #[test]
    fn batch_validates_lengths_and_range() {
        let u = Arc::new(LabelUniverse::numbered(3).unwrap());
        assert!(EvaluationBatch::new(u.clone(), vec![LabelSet::empty()], vec![]).is_err());
        assert!(EvaluationBatch::new(
            u.clone(),
            vec![LabelSet::from_indices([5])],
            vec![LabelSet::empty()]
        )
        .is_err());
        let b = EvaluationBatch::new(u, vec![LabelSet::from_indices([0])], vec![LabelSet::empty()]).unwrap();
        assert_eq!(b.len(), 1);
    }
}
