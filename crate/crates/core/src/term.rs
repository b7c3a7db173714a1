//! Index terms: the values produced by indexing systems.
//!
//! Textual form: atoms are integers, tuples `(x,y)`, sets `{x,y}`, tagged
//! values `s:x`. JSON form: atoms are integers, `{"tuple":[..]}`, `{"set":[..]}`
//! and `{"slot":s,"of":x}`.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ids::Label;

/// The derived order is the canonical total order on indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Atom(Label),
    Tuple(Vec<Index>),
    Set(BTreeSet<Index>),
    Tagged(u32, Box<Index>),
}

impl Index {
    pub fn tuple(items: Vec<Index>) -> Self {
        Index::Tuple(items)
    }

    pub fn set<I: IntoIterator<Item = Index>>(items: I) -> Self {
        Index::Set(items.into_iter().collect())
    }

    pub fn atoms(labels: &[Label]) -> Vec<Index> {
        labels.iter().map(|&l| Index::Atom(l)).collect()
    }

    pub fn label_tuple(labels: &[Label]) -> Self {
        Index::Tuple(Index::atoms(labels))
    }

    pub fn label_set(labels: &[Label]) -> Self {
        Index::set(Index::atoms(labels))
    }

    pub fn tagged(slot: u32, inner: Index) -> Self {
        Index::Tagged(slot, Box::new(inner))
    }

    /// Every base label mentioned anywhere in the term.
    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<Label>) {
        match self {
            Index::Atom(l) => {
                out.insert(*l);
            }
            Index::Tuple(v) => v.iter().for_each(|x| x.collect_labels(out)),
            Index::Set(s) => s.iter().for_each(|x| x.collect_labels(out)),
            Index::Tagged(_, x) => x.collect_labels(out),
        }
    }

    /// Canonical byte serialization; its lexicographic order agrees with `Ord`
    /// between terms of the same shape.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_bytes(&mut out);
        out
    }

    fn write_bytes(&self, out: &mut Vec<u8>) {
        match self {
            Index::Atom(l) => {
                out.push(0);
                out.extend_from_slice(&l.to_be_bytes());
            }
            Index::Tuple(v) => {
                out.push(1);
                out.extend_from_slice(&(v.len() as u32).to_be_bytes());
                v.iter().for_each(|x| x.write_bytes(out));
            }
            Index::Set(s) => {
                out.push(2);
                out.extend_from_slice(&(s.len() as u32).to_be_bytes());
                s.iter().for_each(|x| x.write_bytes(out));
            }
            Index::Tagged(t, x) => {
                out.push(3);
                out.extend_from_slice(&t.to_be_bytes());
                x.write_bytes(out);
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Index::Atom(l) => json!(l),
            Index::Tuple(v) => json!({ "tuple": v.iter().map(Index::to_json).collect::<Vec<_>>() }),
            Index::Set(s) => json!({ "set": s.iter().map(Index::to_json).collect::<Vec<_>>() }),
            Index::Tagged(t, x) => json!({ "slot": t, "of": x.to_json() }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        if let Some(n) = v.as_u64() {
            return Label::try_from(n)
                .map(Index::Atom)
                .map_err(|_| Error::Term(format!("label out of range: {n}")));
        }
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Term(format!("not an index term: {v}")))?;
        let items = |key: &str| -> Result<Vec<Index>> {
            obj[key]
                .as_array()
                .ok_or_else(|| Error::Term(format!("{key} needs an array")))?
                .iter()
                .map(Index::from_json)
                .collect()
        };
        if obj.contains_key("tuple") {
            Ok(Index::Tuple(items("tuple")?))
        } else if obj.contains_key("set") {
            Ok(Index::set(items("set")?))
        } else if let (Some(t), Some(x)) = (obj.get("slot"), obj.get("of")) {
            let t = t
                .as_u64()
                .ok_or_else(|| Error::Term("slot must be an integer".into()))?;
            Ok(Index::tagged(t as u32, Index::from_json(x)?))
        } else {
            Err(Error::Term(format!("not an index term: {v}")))
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = TermParser { s: text.as_bytes(), pos: 0 };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(Error::Parse { offset: p.pos, expected: vec!["end of input".into()] });
        }
        Ok(t)
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<'a>(f: &mut fmt::Formatter<'_>, items: impl Iterator<Item = &'a Index>) -> fmt::Result {
            for (p, x) in items.enumerate() {
                if p > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
        match self {
            Index::Atom(l) => write!(f, "{l}"),
            Index::Tuple(v) => {
                write!(f, "(")?;
                list(f, v.iter())?;
                write!(f, ")")
            }
            Index::Set(s) => {
                write!(f, "{{")?;
                list(f, s.iter())?;
                write!(f, "}}")
            }
            Index::Tagged(t, x) => write!(f, "{t}:{x}"),
        }
    }
}

struct TermParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl TermParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Parse { offset: self.pos, expected: expected.iter().map(|s| s.to_string()).collect() })
    }

    fn int(&mut self) -> Result<u32> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .map_or_else(|| { self.pos = start; self.fail(&["integer"]) }, Ok)
    }

    fn items(&mut self, close: u8) -> Result<Vec<Index>> {
        let mut out = Vec::new();
        self.skip_ws();
        if self.s.get(self.pos) == Some(&close) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            self.skip_ws();
            match self.s.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(&c) if c == close => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return self.fail(&[",", &(close as char).to_string()]),
            }
        }
    }

    fn term(&mut self) -> Result<Index> {
        self.skip_ws();
        match self.s.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                Ok(Index::Tuple(self.items(b')')?))
            }
            Some(b'{') => {
                self.pos += 1;
                Ok(Index::set(self.items(b'}')?))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.int()?;
                self.skip_ws();
                if self.s.get(self.pos) == Some(&b':') {
                    self.pos += 1;
                    Ok(Index::tagged(n, self.term()?))
                } else {
                    Ok(Index::Atom(n))
                }
            }
            _ => self.fail(&["integer", "(", "{"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse_round_trip() {
        let t = Index::set(vec![
            Index::label_tuple(&[1, 2, 3]),
            Index::tagged(2, Index::Atom(9)),
            Index::Tuple(vec![]),
            Index::set(vec![]),
        ]);
        let text = t.to_string();
        assert_eq!(Index::parse(&text).unwrap(), t);
        assert_eq!(Index::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn parse_reports_offset() {
        match Index::parse("(1,2") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
    }
}
