//! Categorical sample paths: label alphabets, integer-encoded segments,
//! and the within-chain window split.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A raw category label, either an integer or a text token.
///
/// Ordering sorts integers numerically, text lexicographically, and all
/// integers before all text so mixed inputs still encode deterministically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Text(String),
}

impl Label {
    /// Parses a raw token, preferring the integer reading.
    pub fn parse(token: &str) -> Label {
        match token.trim().parse::<i64>() {
            Ok(v) => Label::Int(v),
            Err(_) => Label::Text(token.trim().to_string()),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(v) => write!(f, "{v}"),
            Label::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Label {
    fn from(v: i64) -> Self {
        Label::Int(v)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::Text(s.to_string())
    }
}

/// The dense category alphabet: distinct labels in sorted order, so that
/// label `labels[j]` carries index `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryAlphabet {
    labels: Vec<Label>,
}

impl CategoryAlphabet {
    /// Builds an alphabet from labels in any order, deduplicating and sorting.
    pub fn from_labels<I: IntoIterator<Item = Label>>(labels: I) -> Result<Self> {
        let mut labels: Vec<Label> = labels.into_iter().collect();
        labels.sort();
        labels.dedup();
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(CategoryAlphabet { labels })
    }

    /// The alphabet {1, ..., r} used when data arrive pre-encoded.
    pub fn integers(r: usize) -> Self {
        CategoryAlphabet {
            labels: (1..=r as i64).map(Label::Int).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &Label {
        &self.labels[index]
    }

    /// Index of a label, if present.
    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.labels.binary_search(label).ok()
    }
}

/// A collection of integer-encoded segments over a shared alphabet.
///
/// Segment values are 0-based indices into the alphabet. Every segment must
/// hold at least two draws so transition counts are defined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentSet {
    alphabet: CategoryAlphabet,
    segments: Vec<Vec<usize>>,
}

pub const MIN_SEGMENT_LEN: usize = 2;

impl SegmentSet {
    /// Wraps already-encoded segments, validating lengths and index range.
    pub fn from_indices(segments: Vec<Vec<usize>>, alphabet: CategoryAlphabet) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyInput);
        }
        let r = alphabet.size();
        for (i, seg) in segments.iter().enumerate() {
            if seg.len() < MIN_SEGMENT_LEN {
                return Err(Error::SegmentTooShort {
                    index: i,
                    len: seg.len(),
                    min: MIN_SEGMENT_LEN,
                });
            }
            for (t, &v) in seg.iter().enumerate() {
                if v >= r {
                    return Err(Error::IndexOutOfRange {
                        index: v,
                        categories: r,
                        segment: i,
                        position: t,
                    });
                }
            }
        }
        Ok(SegmentSet { alphabet, segments })
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn num_categories(&self) -> usize {
        self.alphabet.size()
    }

    pub fn alphabet(&self) -> &CategoryAlphabet {
        &self.alphabet
    }

    pub fn segments(&self) -> &[Vec<usize>] {
        &self.segments
    }

    pub fn segment(&self, i: usize) -> &[usize] {
        &self.segments[i]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.segments.iter().map(Vec::len).collect()
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn min_len(&self) -> usize {
        self.segments.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Maps a segment back to its raw labels.
    pub fn decode(&self, i: usize) -> Vec<Label> {
        self.segments[i]
            .iter()
            .map(|&v| self.alphabet.label(v).clone())
            .collect()
    }

    /// A copy truncated to the first `len` draws of every segment,
    /// used by sequential checkpointing.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .map(|seg| seg[..len.min(seg.len())].to_vec())
            .collect();
        SegmentSet::from_indices(segments, self.alphabet.clone())
    }
}

/// Encodes raw label sequences over the sorted union of observed labels.
pub fn encode(raw_segments: &[Vec<Label>]) -> Result<SegmentSet> {
    if raw_segments.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, seg) in raw_segments.iter().enumerate() {
        if seg.len() < MIN_SEGMENT_LEN {
            return Err(Error::SegmentTooShort {
                index: i,
                len: seg.len(),
                min: MIN_SEGMENT_LEN,
            });
        }
    }
    let alphabet = CategoryAlphabet::from_labels(raw_segments.iter().flatten().cloned())?;
    let segments = raw_segments
        .iter()
        .map(|seg| {
            seg.iter()
                .map(|label| alphabet.index_of(label).expect("label came from this data"))
                .collect()
        })
        .collect();
    SegmentSet::from_indices(segments, alphabet)
}

/// Splits one chain into its first and last `fraction` windows, discarding
/// the middle, and returns the two windows as a fresh two-segment set.
pub fn split_within(
    chain: &[usize],
    alphabet: &CategoryAlphabet,
    window_fraction: f64,
) -> Result<SegmentSet> {
    if !(window_fraction > 0.0 && window_fraction < 0.5) {
        return Err(Error::InvalidWindowFraction {
            got: window_fraction,
        });
    }
    let n = chain.len();
    let window = (window_fraction * n as f64).floor() as usize;
    if window < MIN_SEGMENT_LEN {
        let min = (MIN_SEGMENT_LEN as f64 / window_fraction).ceil() as usize;
        return Err(Error::ChainTooShort {
            len: n,
            fraction: window_fraction,
            min: MIN_SEGMENT_LEN.max(min),
        });
    }
    let head = chain[..window].to_vec();
    let tail = chain[n - window..].to_vec();
    SegmentSet::from_indices(vec![head, tail], alphabet.clone())
}
