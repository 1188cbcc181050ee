//! Self-delimiting label encoding.
//!
//! Layout: a 4-bit kind tag, then every field with each payload bit doubled
//! and a trailing `01` terminator. Encoded length is `4 + Σ (2·|field| + 2)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::tree::NodeId;

#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// Shortest binary representation of `x` (`"0"` for zero).
    pub fn binary(x: u64) -> Self {
        let width = (64 - x.leading_zeros()).max(1);
        Self::with_width(x, width as usize)
    }

    /// `x` in exactly `width` bits, most significant first.
    ///
    /// Panics if `x` does not fit.
    pub fn with_width(x: u64, width: usize) -> Self {
        assert!(width >= 64 || x >> width == 0, "{x} does not fit in {width} bits");
        BitString((0..width).rev().map(|i| i < 64 && (x >> i) & 1 == 1).collect())
    }

    /// Value as an unsigned integer; `None` if empty or wider than 64 bits
    /// after stripping leading zeros.
    pub fn to_u64(&self) -> Option<u64> {
        if self.0.is_empty() {
            return None;
        }
        let first = self.0.iter().position(|&b| b).unwrap_or(self.0.len());
        if self.0.len() - first > 64 {
            return None;
        }
        Some(self.0[first..].iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn truncated(&self, len: usize) -> BitString {
        BitString(self.0[..len.min(self.0.len())].to_vec())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid bit character {0:?}")]
pub struct BadBit(pub char);

impl FromStr for BitString {
    type Err = BadBit;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BadBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl From<&str> for BitString {
    /// Panics on non-binary characters; intended for literals.
    fn from(s: &str) -> Self {
        s.parse().expect("bit literal")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelKind {
    MainScheme,
    RootD3,
    HubD3,
    LeafD3,
    LeafD3Null,
    StarLeaf,
    StarLeafNull,
    StarCenter,
    Line,
    LineTiny,
}

impl LabelKind {
    pub const ALL: [LabelKind; 10] = [
        LabelKind::MainScheme,
        LabelKind::RootD3,
        LabelKind::HubD3,
        LabelKind::LeafD3,
        LabelKind::LeafD3Null,
        LabelKind::StarLeaf,
        LabelKind::StarLeafNull,
        LabelKind::StarCenter,
        LabelKind::Line,
        LabelKind::LineTiny,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    /// Number of fields every label of this kind carries.
    pub fn field_count(self) -> usize {
        match self {
            LabelKind::MainScheme => 12,
            LabelKind::RootD3 | LabelKind::LeafD3Null | LabelKind::StarLeafNull => 0,
            LabelKind::HubD3 | LabelKind::StarCenter => 1,
            LabelKind::StarLeaf | LabelKind::LineTiny => 2,
            LabelKind::LeafD3 => 3,
            LabelKind::Line => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LabelKind::MainScheme => "MainScheme",
            LabelKind::RootD3 => "RootD3",
            LabelKind::HubD3 => "HubD3",
            LabelKind::LeafD3 => "LeafD3",
            LabelKind::LeafD3Null => "LeafD3Null",
            LabelKind::StarLeaf => "StarLeaf",
            LabelKind::StarLeafNull => "StarLeafNull",
            LabelKind::StarCenter => "StarCenter",
            LabelKind::Line => "Line",
            LabelKind::LineTiny => "LineTiny",
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelKind {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| CodecError::UnknownKind(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StructuredLabel {
    pub kind: LabelKind,
    pub fields: Vec<BitString>,
}

impl StructuredLabel {
    /// Panics if the field count does not match the kind.
    pub fn new(kind: LabelKind, fields: Vec<BitString>) -> Self {
        assert_eq!(fields.len(), kind.field_count(), "field count for {kind}");
        StructuredLabel { kind, fields }
    }

    pub fn encoded_len(&self) -> usize {
        4 + self.fields.iter().map(|f| 2 * f.len() + 2).sum::<usize>()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("malformed label: {0}")]
    MalformedLabel(&'static str),
    #[error("unknown label kind `{0}`")]
    UnknownKind(String),
    #[error("scheme length of an empty label set")]
    EmptySet,
    #[error("label file line {line}: {msg}")]
    Format { line: usize, msg: String },
}

pub fn encode(label: &StructuredLabel) -> BitString {
    let mut out = BitString::with_width(u64::from(label.kind.tag()), 4);
    for field in &label.fields {
        for &b in field.bits() {
            out.push(b);
            out.push(b);
        }
        out.push(false);
        out.push(true);
    }
    out
}

pub fn decode(bits: &BitString) -> Result<StructuredLabel, CodecError> {
    let b = bits.bits();
    if b.len() < 4 {
        return Err(CodecError::MalformedLabel("shorter than the kind tag"));
    }
    let tag = b[..4].iter().fold(0u8, |acc, &x| (acc << 1) | u8::from(x));
    let kind = LabelKind::from_tag(tag).ok_or(CodecError::MalformedLabel("bad kind tag"))?;
    let mut fields = Vec::with_capacity(kind.field_count());
    let mut cur = BitString::new();
    for pair in b[4..].chunks(2) {
        match pair {
            [x, y] if x == y => cur.push(*x),
            [false, true] => fields.push(std::mem::take(&mut cur)),
            [true, false] => return Err(CodecError::MalformedLabel("invalid bit pair")),
            _ => return Err(CodecError::MalformedLabel("dangling bit")),
        }
    }
    if !cur.is_empty() {
        return Err(CodecError::MalformedLabel("missing terminator"));
    }
    if fields.len() != kind.field_count() {
        return Err(CodecError::MalformedLabel("wrong field count for kind"));
    }
    Ok(StructuredLabel { kind, fields })
}

/// Maximum length over a non-empty set of encoded labels.
pub fn scheme_length<'a, I>(labels: I) -> Result<usize, CodecError>
where
    I: IntoIterator<Item = &'a BitString>,
{
    labels.into_iter().map(BitString::len).max().ok_or(CodecError::EmptySet)
}

/// One line per node: `<node_id> <kind_name> <bitstring>`.
pub fn write_label_file(labels: &[StructuredLabel]) -> String {
    let mut out = String::new();
    for (v, l) in labels.iter().enumerate() {
        out.push_str(&format!("{v} {} {}\n", l.kind, encode(l)));
    }
    out
}

/// Parses a label file; every node id `0..n` must appear exactly once.
pub fn parse_label_file(text: &str) -> Result<Vec<StructuredLabel>, CodecError> {
    let mut slots: Vec<Option<StructuredLabel>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| CodecError::Format { line: i + 1, msg };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [id, kind, bits] = parts[..] else {
            return Err(err("expected `<node> <kind> <bits>`".into()));
        };
        let id: NodeId = id.parse().map_err(|_| err(format!("bad node id `{id}`")))?;
        let kind: LabelKind = kind.parse().map_err(|e: CodecError| err(e.to_string()))?;
        let bits: BitString = bits.parse().map_err(|e: BadBit| err(e.to_string()))?;
        let label = decode(&bits).map_err(|e| err(e.to_string()))?;
        if label.kind != kind {
            return Err(err(format!("kind name {kind} disagrees with encoded tag {}", label.kind)));
        }
        if slots.len() <= id {
            slots.resize(id + 1, None);
        }
        if slots[id].replace(label).is_some() {
            return Err(err(format!("duplicate node {id}")));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.ok_or(CodecError::Format { line: 0, msg: format!("node {v} has no label") }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bit_field() {
        let l = StructuredLabel::new(LabelKind::HubD3, vec!["1".into()]);
        let e = encode(&l);
        assert_eq!(e.to_string(), "0010".to_owned() + "1101");
        assert_eq!(e.len(), l.encoded_len());
        assert_eq!(decode(&e).unwrap(), l);
    }

    #[test]
    fn empty_field() {
        let l = StructuredLabel::new(LabelKind::StarCenter, vec![BitString::new()]);
        assert_eq!(encode(&l).to_string(), "011101");
    }

    #[test]
    fn malformed_inputs() {
        for bad in ["", "000", "1111", "0010", "001011", "0010110", "00101"] {
            assert!(decode(&bad.into()).is_err(), "{bad}");
        }
    }

    #[test]
    fn scheme_lengths() {
        assert_eq!(scheme_length([&BitString::from("01")]), Ok(2));
        assert_eq!(scheme_length([&"01".into(), &"1101".into()]), Ok(4));
        assert_eq!(scheme_length(std::iter::empty()), Err(CodecError::EmptySet));
    }

    #[test]
    fn integer_helpers() {
        assert_eq!(BitString::binary(0).to_string(), "0");
        assert_eq!(BitString::binary(16).to_string(), "10000");
        assert_eq!(BitString::with_width(3, 5).to_string(), "00011");
        assert_eq!(BitString::from("00011").to_u64(), Some(3));
        assert_eq!(BitString::new().to_u64(), None);
    }

    #[test]
    fn label_file_round_trip() {
        let labels = vec![
            StructuredLabel::new(LabelKind::RootD3, vec![]),
            StructuredLabel::new(LabelKind::LeafD3, vec!["1".into(), "01".into(), "10".into()]),
        ];
        let text = write_label_file(&labels);
        assert_eq!(parse_label_file(&text).unwrap(), labels);
        assert!(parse_label_file("0 HubD3 0001").is_err());
        assert!(parse_label_file("1 RootD3 0001").is_err());
        assert!(parse_label_file("0 Bogus 0001").is_err());
    }
}
