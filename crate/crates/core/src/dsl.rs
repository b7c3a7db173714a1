//! Text syntax for indexing systems and data structures.
//!
//! ```text
//! IS := id | powerset | subsets(INT) | subsets_le(INT) | tuples(INT) | dtuples(INT)
//!     | dtuples_star | pair(INT) | product(IS,IS) | coproduct(IS,IS) | compose(IS,IS)
//! DS := array(ALPHABET,IS) | setsystem | graph1 | graph2 | graph3 | binrel | total
//!     | product(DS,DS) | coproduct(DS,DS) | composeI(DS,IS) | sub(DS,NAME) | env(DS,INT)
//!     | sep_c1(DS,INT) | sep_c2(DS,INT)
//! ALPHABET := {INT(,INT)*}
//! ```
//!
//! Printing with `Display` and parsing again yields the same tree.

use crate::error::{Error, Result};
use crate::indexing::IndexingSystem;
use crate::structures::{Alphabet, DataStructure};

const IS_WORDS: &[&str] = &[
    "id", "powerset", "subsets", "subsets_le", "tuples", "dtuples", "dtuples_star", "pair", "product", "coproduct",
    "compose",
];
const DS_WORDS: &[&str] = &[
    "array", "setsystem", "graph1", "graph2", "graph3", "binrel", "total", "product", "coproduct", "composeI", "sub",
    "env", "sep_c1", "sep_c2",
];

pub fn parse_indexing(text: &str) -> Result<IndexingSystem> {
    let mut p = Parser::new(text);
    let out = p.indexing()?;
    p.finish()?;
    Ok(out)
}

pub fn parse_structure(text: &str) -> Result<DataStructure> {
    let mut p = Parser::new(text);
    let out = p.structure()?;
    p.finish()?;
    Ok(out)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { s: text.as_bytes(), pos: 0 }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn fail<T>(&self, at: usize, expected: &[&str]) -> Result<T> {
        Err(Error::Parse { offset: at, expected: expected.iter().map(|s| s.to_string()).collect() })
    }

    fn finish(&mut self) -> Result<()> {
        self.ws();
        if self.pos != self.s.len() {
            return self.fail(self.pos, &["end of input"]);
        }
        Ok(())
    }

    fn punct(&mut self, c: u8) -> Result<()> {
        self.ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(self.pos, &[&(c as char).to_string()])
        }
    }

    fn word(&mut self) -> (usize, String) {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        (start, String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
    }

    fn int(&mut self) -> Result<i64> {
        self.ws();
        let start = self.pos;
        if self.s.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        match std::str::from_utf8(&self.s[start..self.pos]).ok().and_then(|t| t.parse().ok()) {
            Some(n) => Ok(n),
            None => {
                self.pos = start;
                self.fail(start, &["integer"])
            }
        }
    }

    fn count(&mut self) -> Result<usize> {
        let start = {
            self.ws();
            self.pos
        };
        let n = self.int()?;
        usize::try_from(n).or_else(|_| self.fail(start, &["non-negative integer"]))
    }

    fn one_int_arg(&mut self) -> Result<usize> {
        self.punct(b'(')?;
        let n = self.count()?;
        self.punct(b')')?;
        Ok(n)
    }

    fn indexing(&mut self) -> Result<IndexingSystem> {
        use IndexingSystem as IS;
        let (start, w) = self.word();
        Ok(match w.as_str() {
            "id" => IS::Id,
            "powerset" => IS::Powerset,
            "dtuples_star" => IS::DTuplesStar,
            "subsets" => IS::Subsets(self.one_int_arg()?),
            "subsets_le" => IS::SubsetsLe(self.one_int_arg()?),
            "tuples" => IS::Tuples(self.one_int_arg()?),
            "dtuples" => IS::DTuples(self.one_int_arg()?),
            "pair" => IS::Pair(self.one_int_arg()?),
            "product" | "coproduct" | "compose" => {
                self.punct(b'(')?;
                let a = self.indexing()?;
                self.punct(b',')?;
                let b = self.indexing()?;
                self.punct(b')')?;
                match w.as_str() {
                    "product" => IS::product(a, b),
                    "coproduct" => IS::coproduct(a, b),
                    _ => IS::compose(a, b),
                }
            }
            _ => return self.fail(start, IS_WORDS),
        })
    }

    fn alphabet(&mut self) -> Result<Alphabet> {
        self.punct(b'{')?;
        let start = self.pos;
        let mut symbols = vec![self.int()?];
        loop {
            self.ws();
            match self.s.get(self.pos) {
                Some(b',') => {
                    self.pos += 1;
                    symbols.push(self.int()?);
                }
                Some(b'}') => {
                    self.pos += 1;
                    break;
                }
                _ => return self.fail(self.pos, &[",", "}"]),
            }
        }
        Alphabet::new(symbols).or_else(|_| self.fail(start, &["distinct symbols"]))
    }

    fn structure(&mut self) -> Result<DataStructure> {
        use DataStructure as DS;
        let (start, w) = self.word();
        Ok(match w.as_str() {
            "setsystem" => DS::SetSystem,
            "graph1" => DS::Graph1,
            "graph2" => DS::Graph2,
            "graph3" => DS::Graph3,
            "binrel" => DS::BinRel,
            "total" => DS::Total,
            "array" => {
                self.punct(b'(')?;
                let alphabet = self.alphabet()?;
                self.punct(b',')?;
                let indexing = self.indexing()?;
                self.punct(b')')?;
                DS::array(alphabet, indexing)
            }
            "product" | "coproduct" => {
                self.punct(b'(')?;
                let a = self.structure()?;
                self.punct(b',')?;
                let b = self.structure()?;
                self.punct(b')')?;
                if w == "product" {
                    DS::product(a, b)
                } else {
                    DS::coproduct(a, b)
                }
            }
            "composeI" => {
                self.punct(b'(')?;
                let d = self.structure()?;
                self.punct(b',')?;
                let i = self.indexing()?;
                self.punct(b')')?;
                DS::compose_i(d, i)
            }
            "sub" => {
                self.punct(b'(')?;
                let d = self.structure()?;
                self.punct(b',')?;
                let (at, name) = self.word();
                if name.is_empty() {
                    return self.fail(at, &["predicate name"]);
                }
                self.punct(b')')?;
                DS::Sub(Box::new(d), name)
            }
            "env" | "sep_c1" | "sep_c2" => {
                self.punct(b'(')?;
                let d = Box::new(self.structure()?);
                self.punct(b',')?;
                let k = self.count()?;
                self.punct(b')')?;
                match w.as_str() {
                    "env" => DS::Env(d, k),
                    "sep_c1" => DS::SepC1(d, k),
                    _ => DS::SepC2(d, k),
                }
            }
            _ => return self.fail(start, DS_WORDS),
        })
    }
}
