//! The value tree scored by the metric, and its JSON ingestion.
//!
//! Ground truth and predictions share one data model: `null`, strings,
//! one-of alternative sets (tuples), order-insensitive lists and string-keyed
//! dictionaries, nested arbitrarily. JSON has no tuple, so ground-truth
//! alternatives are written as an object with the single key `"$oneof"`:
//!
//! ```json
//! {"date": {"$oneof": ["31.12.2023", "2023-12-31"]}, "items": ["a", "b"]}
//! ```
//!
//! Numbers and booleans become strings on the way in. The metric compares
//! text only, so `0.2` and `0.199999999` are two different strings.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};
use thiserror::Error;

/// Key of the single-entry object that encodes a ground-truth tuple.
pub const ONE_OF_KEY: &str = "$oneof";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("`{ONE_OF_KEY}` alternatives are only allowed in ground truth")]
    TupleInPrediction,
    #[error("`{ONE_OF_KEY}` needs at least one alternative")]
    EmptyTuple,
    #[error("number is not finite")]
    NonFiniteNumber,
}

/// Which side of the comparison a document is parsed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    GroundTruth,
    Prediction,
}

/// Non-empty set of acceptable ground-truth answers.
#[derive(Debug, Clone, PartialEq)]
pub struct Alternatives(Vec<ValueTree>);

impl Alternatives {
    /// Returns `None` for an empty set.
    pub fn new(alternatives: Vec<ValueTree>) -> Option<Self> {
        if alternatives.is_empty() {
            None
        } else {
            Some(Self(alternatives))
        }
    }

    pub fn as_slice(&self) -> &[ValueTree] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ValueTree> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_vec(self) -> Vec<ValueTree> {
        self.0
    }
}

impl<'a> IntoIterator for &'a Alternatives {
    type Item = &'a ValueTree;
    type IntoIter = std::slice::Iter<'a, ValueTree>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A ground truth or a prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueTree {
    /// Absent / unanswerable.
    None,
    String(String),
    /// "One of": the best matching alternative is scored.
    Tuple(Alternatives),
    /// "All of": order-insensitive, duplicates allowed.
    List(Vec<ValueTree>),
    Dict(BTreeMap<String, ValueTree>),
}

impl ValueTree {
    pub fn string(s: impl Into<String>) -> Self {
        Self::String(s.into())
    }

    pub fn list<I: IntoIterator<Item = ValueTree>>(items: I) -> Self {
        Self::List(items.into_iter().collect())
    }

    /// Later duplicates of a key replace earlier ones.
    pub fn dict<K, I>(entries: I) -> Self
    where
        K: Into<String>,
        I: IntoIterator<Item = (K, ValueTree)>,
    {
        Self::Dict(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Fails with [`TreeError::EmptyTuple`] when `alternatives` is empty.
    pub fn one_of<I: IntoIterator<Item = ValueTree>>(alternatives: I) -> Result<Self, TreeError> {
        Alternatives::new(alternatives.into_iter().collect())
            .map(Self::Tuple)
            .ok_or(TreeError::EmptyTuple)
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }

    pub fn contains_tuple(&self) -> bool {
        match self {
            Self::None | Self::String(_) => false,
            Self::Tuple(_) => true,
            Self::List(items) => items.iter().any(Self::contains_tuple),
            Self::Dict(map) => map.values().any(Self::contains_tuple),
        }
    }

    /// Nesting depth: scalars are 0, every container adds one.
    ///
    /// Stops descending once `limit` is exceeded and returns `limit + 1`.
    pub fn depth_bounded(&self, limit: usize) -> usize {
        let children: Box<dyn Iterator<Item = &ValueTree>> = match self {
            Self::None | Self::String(_) => return 0,
            Self::Tuple(alts) => Box::new(alts.iter()),
            Self::List(items) => Box::new(items.iter()),
            Self::Dict(map) => Box::new(map.values()),
        };
        if limit == 0 {
            return 1;
        }
        1 + children.map(|child| child.depth_bounded(limit - 1)).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("value trees always serialize")
    }
}

impl From<&str> for ValueTree {
    fn from(s: &str) -> Self {
        Self::String(s.to_owned())
    }
}

impl From<String> for ValueTree {
    fn from(s: String) -> Self {
        Self::String(s)
    }
}

impl Serialize for ValueTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::None => serializer.serialize_unit(),
            Self::String(s) => serializer.serialize_str(s),
            Self::Tuple(alts) => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry(ONE_OF_KEY, alts.as_slice())?;
                map.end()
            }
            Self::List(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            Self::Dict(entries) => {
                let mut map = serializer.serialize_map(Some(entries.len()))?;
                for (k, v) in entries {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

/// A JSON number or boolean before it is turned into text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawScalar {
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
}

/// Text form of a JSON scalar.
///
/// Booleans are `true`/`false`, integers (including integral floats) have no
/// fraction or exponent, other floats use the shortest digits that parse
/// back to the same `f64`.
pub fn canonical_scalar(raw: RawScalar) -> Result<String, TreeError> {
    Ok(match raw {
        RawScalar::Bool(b) => b.to_string(),
        RawScalar::Int(i) => i.to_string(),
        RawScalar::UInt(u) => u.to_string(),
        RawScalar::Float(f) if !f.is_finite() => return Err(TreeError::NonFiniteNumber),
        // `Display` for f64 never uses an exponent and prints the shortest
        // round-tripping digits; -0.0 would render as "-0".
        RawScalar::Float(0.0) => "0".to_owned(),
        RawScalar::Float(f) => f.to_string(),
    })
}

/// JSON as read, before role checks and scalar canonicalization.
#[derive(Debug)]
pub(crate) enum RawNode {
    Null,
    Scalar(RawScalar),
    Str(String),
    Array(Vec<RawNode>),
    Object(Vec<(String, RawNode)>),
}

impl<'de> Deserialize<'de> for RawNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(RawNodeVisitor)
    }
}

struct RawNodeVisitor;

impl<'de> Visitor<'de> for RawNodeVisitor {
    type Value = RawNode;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_unit<E>(self) -> Result<RawNode, E> {
        Ok(RawNode::Null)
    }

    fn visit_none<E>(self) -> Result<RawNode, E> {
        Ok(RawNode::Null)
    }

    fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<RawNode, D::Error> {
        RawNode::deserialize(d)
    }

    fn visit_bool<E>(self, v: bool) -> Result<RawNode, E> {
        Ok(RawNode::Scalar(RawScalar::Bool(v)))
    }

    fn visit_i64<E>(self, v: i64) -> Result<RawNode, E> {
        Ok(RawNode::Scalar(RawScalar::Int(v)))
    }

    fn visit_u64<E>(self, v: u64) -> Result<RawNode, E> {
        Ok(RawNode::Scalar(RawScalar::UInt(v)))
    }

    fn visit_f64<E>(self, v: f64) -> Result<RawNode, E> {
        Ok(RawNode::Scalar(RawScalar::Float(v)))
    }

    fn visit_str<E>(self, v: &str) -> Result<RawNode, E> {
        Ok(RawNode::Str(v.to_owned()))
    }

    fn visit_string<E>(self, v: String) -> Result<RawNode, E> {
        Ok(RawNode::Str(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RawNode, A::Error> {
        let mut items = Vec::with_capacity(seq.size_hint().unwrap_or(0));
        while let Some(item) = seq.next_element()? {
            items.push(item);
        }
        Ok(RawNode::Array(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawNode, A::Error> {
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        while let Some(key) = map.next_key::<String>()? {
            if !seen.insert(key.clone()) {
                return Err(de::Error::custom(format_args!("duplicate key `{key}`")));
            }
            let value = map.next_value()?;
            entries.push((key, value));
        }
        Ok(RawNode::Object(entries))
    }
}

impl RawNode {
    pub(crate) fn into_tree(self, role: Role) -> Result<ValueTree, TreeError> {
        Ok(match self {
            RawNode::Null => ValueTree::None,
            RawNode::Scalar(raw) => ValueTree::String(canonical_scalar(raw)?),
            RawNode::Str(s) => ValueTree::String(s),
            RawNode::Array(items) => ValueTree::List(
                items
                    .into_iter()
                    .map(|item| item.into_tree(role))
                    .collect::<Result<_, _>>()?,
            ),
            RawNode::Object(entries) => {
                if entries.iter().any(|(k, _)| k == ONE_OF_KEY) {
                    return one_of_from_entries(entries, role);
                }
                ValueTree::Dict(
                    entries
                        .into_iter()
                        .map(|(k, v)| Ok((k, v.into_tree(role)?)))
                        .collect::<Result<_, TreeError>>()?,
                )
            }
        })
    }
}

fn one_of_from_entries(mut entries: Vec<(String, RawNode)>, role: Role) -> Result<ValueTree, TreeError> {
    if role == Role::Prediction {
        return Err(TreeError::TupleInPrediction);
    }
    if entries.len() != 1 {
        return Err(TreeError::Malformed(format!(
            "`{ONE_OF_KEY}` must be the only key of its object"
        )));
    }
    match entries.pop() {
        Some((_, RawNode::Array(items))) => {
            let alternatives = items
                .into_iter()
                .map(|item| item.into_tree(role))
                .collect::<Result<Vec<_>, _>>()?;
            ValueTree::one_of(alternatives)
        }
        _ => Err(TreeError::Malformed(format!(
            "`{ONE_OF_KEY}` must hold an array of alternatives"
        ))),
    }
}

/// Parses one JSON document into a tree.
pub fn parse_tree(input: &str, role: Role) -> Result<ValueTree, TreeError> {
    let raw: RawNode =
        serde_json::from_str(input).map_err(|e| TreeError::Malformed(e.to_string()))?;
    raw.into_tree(role)
}

/// Like [`parse_tree`], for raw bytes that still have to be checked for UTF-8.
pub fn parse_tree_bytes(input: &[u8], role: Role) -> Result<ValueTree, TreeError> {
    let text = std::str::from_utf8(input).map_err(|_| TreeError::InvalidUtf8)?;
    parse_tree(text, role)
}

#[derive(serde::Deserialize)]
struct RawRecord {
    id: String,
    value: RawNode,
}

/// Parses a `{"id": ..., "value": ...}` line.
pub fn parse_record(line: &str, role: Role) -> Result<Sample, TreeError> {
    let record: RawRecord =
        serde_json::from_str(line).map_err(|e| TreeError::Malformed(e.to_string()))?;
    Ok(Sample {
        id: record.id,
        tree: record.value.into_tree(role)?,
    })
}

/// Best-effort recovery of the `id` of a line that failed [`parse_record`].
pub(crate) fn recover_record_id(line: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    value.get("id")?.as_str().map(str::to_owned)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub tree: ValueTree,
}

impl Sample {
    pub fn new(id: impl Into<String>, tree: ValueTree) -> Self {
        Self { id: id.into(), tree }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {source}")]
    Line { line: usize, source: TreeError },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Samples with unique ids, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocumentSet {
    samples: Vec<Sample>,
}

impl DocumentSet {
    pub fn new(samples: Vec<Sample>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for sample in &samples {
            if !seen.insert(sample.id.as_str()) {
                return Err(DatasetError::DuplicateId(sample.id.clone()));
            }
        }
        Ok(Self { samples })
    }

    /// Reads line-delimited records. Blank lines are skipped; any bad line
    /// fails the whole set.
    pub fn from_jsonl<R: BufRead>(reader: R, role: Role) -> Result<Self, DatasetError> {
        let mut samples = Vec::new();
        for (index, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| match e.kind() {
                std::io::ErrorKind::InvalidData => DatasetError::Line {
                    line: index + 1,
                    source: TreeError::InvalidUtf8,
                },
                _ => DatasetError::Io(e),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let sample = parse_record(&line, role).map_err(|source| DatasetError::Line {
                line: index + 1,
                source,
            })?;
            samples.push(sample);
        }
        Self::new(samples)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }
}
