//! Data structures: contravariant functors from label sets to finite sets of elements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ids::{
    binomial, compose, enumerate_injections, enumerate_subsets, factorial, permutations, IdSet, Injection, Label,
    SizeFilter,
};
use crate::indexing::{IndexRule, IndexingSystem, Skeleton};
use crate::term::Index;

pub type Symbol = i64;

/// Largest element set that will be materialized.
pub const ELEMENT_BOUND: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alphabet(Vec<Symbol>);

impl Alphabet {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        let set: BTreeSet<Symbol> = symbols.iter().copied().collect();
        if set.len() != symbols.len() || symbols.is_empty() {
            return Err(Error::Invalid(format!("alphabet needs distinct symbols: {symbols:?}")));
        }
        Ok(Alphabet(set.into_iter().collect()))
    }

    pub fn binary() -> Self {
        Alphabet(vec![0, 1])
    }

    pub fn range(n: usize) -> Self {
        Alphabet((0..n.max(1) as Symbol).collect())
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.0.binary_search(&s).is_ok()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// An element of some `D_a`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Array(BTreeMap<Index, Symbol>),
    Sets(BTreeSet<IdSet>),
    Graph { vertices: IdSet, edges: BTreeSet<(Label, Label)> },
    Relation(BTreeSet<(Label, Label)>),
    Pair(Box<Element>, Box<Element>),
    Left(Box<Element>),
    Right(Box<Element>),
}

impl Element {
    pub fn pair(x: Element, y: Element) -> Self {
        Element::Pair(Box::new(x), Box::new(y))
    }

    pub fn array<I: IntoIterator<Item = (Index, Symbol)>>(entries: I) -> Self {
        Element::Array(entries.into_iter().collect())
    }

    /// A sequence `(x_1, ..., x_n)` as an array over the identity system.
    pub fn sequence(values: &[Symbol]) -> Self {
        Element::array(values.iter().enumerate().map(|(p, &v)| (Index::Atom(p as Label + 1), v)))
    }

    pub fn relation<I: IntoIterator<Item = (Label, Label)>>(pairs: I) -> Self {
        Element::Relation(pairs.into_iter().collect())
    }

    /// The strict total order listing `order` from least to greatest.
    pub fn total_order(order: &[Label]) -> Self {
        let mut pairs = BTreeSet::new();
        for p in 0..order.len() {
            for q in p + 1..order.len() {
                pairs.insert((order[p], order[q]));
            }
        }
        Element::Relation(pairs)
    }

    pub fn entry(&self, i: &Index) -> Option<Symbol> {
        match self {
            Element::Array(m) => m.get(i).copied(),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Element::Array(m) => json!({ "array": m.iter().map(|(i, s)| json!([i.to_json(), s])).collect::<Vec<_>>() }),
            Element::Sets(s) => json!({ "sets": s.iter().map(IdSet::to_json).collect::<Vec<_>>() }),
            Element::Graph { vertices, edges } => json!({
                "vertices": vertices.to_json(),
                "edges": edges.iter().map(|(i, j)| json!([i, j])).collect::<Vec<_>>(),
            }),
            Element::Relation(r) => json!({ "relation": r.iter().map(|(i, j)| json!([i, j])).collect::<Vec<_>>() }),
            Element::Pair(x, y) => json!({ "pair": [x.to_json(), y.to_json()] }),
            Element::Left(x) => json!({ "left": x.to_json() }),
            Element::Right(x) => json!({ "right": x.to_json() }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Term(format!("not an element term: {v}"));
        let obj = v.as_object().ok_or_else(bad)?;
        let label_pairs = |key: &str| -> Result<BTreeSet<(Label, Label)>> {
            obj[key]
                .as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|p| match (p.get(0).and_then(Value::as_u64), p.get(1).and_then(Value::as_u64)) {
                    (Some(i), Some(j)) => Ok((i as Label, j as Label)),
                    _ => Err(bad()),
                })
                .collect()
        };
        if let Some(entries) = obj.get("array") {
            let mut m = BTreeMap::new();
            for e in entries.as_array().ok_or_else(bad)? {
                let i = Index::from_json(&e[0])?;
                let s = e[1].as_i64().ok_or_else(bad)?;
                m.insert(i, s);
            }
            Ok(Element::Array(m))
        } else if let Some(sets) = obj.get("sets") {
            Ok(Element::Sets(sets.as_array().ok_or_else(bad)?.iter().map(IdSet::from_json).collect::<Result<_>>()?))
        } else if obj.contains_key("vertices") {
            Ok(Element::Graph { vertices: IdSet::from_json(&obj["vertices"])?, edges: label_pairs("edges")? })
        } else if obj.contains_key("relation") {
            Ok(Element::Relation(label_pairs("relation")?))
        } else if let Some(p) = obj.get("pair") {
            let p = p.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
            Ok(Element::pair(Element::from_json(&p[0])?, Element::from_json(&p[1])?))
        } else if let Some(x) = obj.get("left") {
            Ok(Element::Left(Box::new(Element::from_json(x)?)))
        } else if let Some(x) = obj.get("right") {
            Ok(Element::Right(Box::new(Element::from_json(x)?)))
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// Anything with element sets and restriction maps. The expression language
/// implements this; so do test fixtures.
pub trait StructureRule {
    /// `D_a`, sorted.
    fn elements(&self, a: &IdSet) -> Result<Vec<Element>>;

    fn contains(&self, a: &IdSet, x: &Element) -> Result<bool> {
        Ok(self.elements(a)?.binary_search(x).is_ok())
    }

    /// `D[tau](x)` for `x` in `D_{cod tau}`.
    fn restrict(&self, tau: &Injection, x: &Element) -> Result<Element>;

    /// `D[tau](x)` for `x` already known to lie in `D_{cod tau}`.
    fn restrict_member(&self, tau: &Injection, x: &Element) -> Result<Element> {
        self.restrict(tau, x)
    }

    fn describe(&self) -> String;
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataStructure {
    Array { alphabet: Alphabet, indexing: IndexingSystem },
    SetSystem,
    Graph1,
    Graph2,
    Graph3,
    BinRel,
    Total,
    Product(Box<DataStructure>, Box<DataStructure>),
    Coproduct(Box<DataStructure>, Box<DataStructure>),
    ComposeI(Box<DataStructure>, IndexingSystem),
    Sub(Box<DataStructure>, String),
    Env(Box<DataStructure>, usize),
    SepC1(Box<DataStructure>, usize),
    SepC2(Box<DataStructure>, usize),
}

use DataStructure as DS;

impl DataStructure {
    pub fn array(alphabet: Alphabet, indexing: IndexingSystem) -> DS {
        DS::Array { alphabet, indexing }
    }

    /// Sequences over `alphabet`.
    pub fn sequence(alphabet: Alphabet) -> DS {
        DS::array(alphabet, IndexingSystem::Id)
    }

    pub fn product(a: DS, b: DS) -> DS {
        DS::Product(Box::new(a), Box::new(b))
    }

    pub fn coproduct(a: DS, b: DS) -> DS {
        DS::Coproduct(Box::new(a), Box::new(b))
    }

    pub fn compose_i(d: DS, i: IndexingSystem) -> DS {
        DS::ComposeI(Box::new(d), i)
    }

    pub fn env(d: DS, e: usize) -> DS {
        DS::Env(Box::new(d), e)
    }

    /// `sub(base, name)`, checking that the named predicate exists and is hereditary
    /// over label sets up to `[REGISTRATION_N_MAX]`.
    pub fn sub(base: DS, name: &str) -> Result<DS> {
        let d = DS::Sub(Box::new(base), name.to_string());
        d.validate(REGISTRATION_N_MAX)?;
        Ok(d)
    }

    /// The alphabet and indexing system when this is naturally an array.
    pub fn as_array(&self) -> Option<(Alphabet, IndexingSystem)> {
        match self {
            DS::Array { alphabet, indexing } => Some((alphabet.clone(), indexing.clone())),
            DS::Graph2 => Some((Alphabet::binary(), IndexingSystem::Subsets(2))),
            _ => None,
        }
    }

    fn desugared(&self) -> Option<DS> {
        match self {
            DS::SepC1(d, k) => Some(DS::compose_i((**d).clone(), IndexingSystem::Tuples(*k))),
            DS::SepC2(d, k) => Some(DS::compose_i((**d).clone(), IndexingSystem::Pair(*k))),
            _ => None,
        }
    }

    /// Check every `sub(...)` node: the predicate is registered and hereditary up to `n_max`.
    pub fn validate(&self, n_max: usize) -> Result<()> {
        match self {
            DS::Product(a, b) | DS::Coproduct(a, b) => {
                a.validate(n_max)?;
                b.validate(n_max)
            }
            DS::ComposeI(d, _) | DS::Env(d, _) | DS::SepC1(d, _) | DS::SepC2(d, _) => d.validate(n_max),
            DS::Sub(d, name) => {
                d.validate(n_max)?;
                let pred = lookup_predicate(name)?;
                check_hereditary(d, name, &pred, n_max)
            }
            _ => Ok(()),
        }
    }

    /// `|D_a|` for `|a| = n` (an upper bound for `sub`), `None` on overflow.
    pub fn count(&self, n: usize) -> Option<u128> {
        let pow2 = |e: u128| if e < 127 { Some(1u128 << e) } else { None };
        match self {
            DS::Array { alphabet, indexing } => {
                let m = indexing.count_over(n)?;
                (alphabet.len() as u128).checked_pow(u32::try_from(m).ok()?)
            }
            DS::SetSystem => pow2(pow2(n as u128)?),
            DS::Graph1 | DS::Graph2 | DS::Graph3 => pow2(binomial(n, 2)),
            DS::BinRel => pow2((n * n) as u128),
            DS::Total => Some(factorial(n)),
            DS::Product(a, b) => a.count(n)?.checked_mul(b.count(n)?),
            DS::Coproduct(a, b) => a.count(n)?.checked_add(b.count(n)?),
            DS::ComposeI(d, i) => d.count(usize::try_from(i.count_over(n)?).ok()?),
            DS::Sub(d, _) => d.count(n),
            DS::Env(d, e) => d.count(n + e),
            DS::SepC1(..) | DS::SepC2(..) => self.desugared().unwrap().count(n),
        }
    }

    fn bounded(&self, a: &IdSet) -> Result<()> {
        let size = self.count(a.len()).unwrap_or(u128::MAX);
        if size > ELEMENT_BOUND {
            return Err(Error::TooLarge { what: format!("elements of {self} over {a}"), size, bound: ELEMENT_BOUND });
        }
        Ok(())
    }

    fn not_element(a: &IdSet) -> Error {
        Error::NotElement { set: a.labels().to_vec() }
    }
}

/// Label sets up to this size are checked when a `sub` predicate is attached.
pub const REGISTRATION_N_MAX: usize = 3;

fn relabeling(i: &IndexingSystem, a: &IdSet) -> Result<Vec<Index>> {
    i.indices(a)
}

/// The injection `[|I_b|] -> [|I_a|]` induced by `I[tau]` on canonical positions.
fn induced_on_positions(i: &IndexingSystem, tau: &Injection) -> Result<Injection> {
    let small = relabeling(i, tau.dom())?;
    let big = relabeling(i, tau.cod())?;
    let images = small
        .iter()
        .map(|j| {
            let t = i.apply_unchecked(tau, j)?;
            big.binary_search(&t)
                .map(|p| p as Label + 1)
                .map_err(|_| Error::NotMember { index: t.to_string(), set: tau.cod().labels().to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    Injection::new(IdSet::standard(small.len()), IdSet::standard(big.len()), images)
}

/// `a ⊔ e`: `e` fresh labels placed above `max(a)`.
pub fn env_extension(a: &IdSet, e: usize) -> (IdSet, IdSet) {
    let base = a.max().map_or(1, |m| m + 1);
    let extra: IdSet = (base..base + e as Label).collect();
    (a.union(&extra), extra)
}

fn env_injection(tau: &Injection, e: usize) -> Result<Injection> {
    let (b_ext, b_extra) = env_extension(tau.dom(), e);
    let (a_ext, a_extra) = env_extension(tau.cod(), e);
    let images = b_ext
        .iter()
        .map(|l| tau.apply(l).unwrap_or_else(|| a_extra.labels()[b_extra.position(l).unwrap()]))
        .collect();
    Injection::new(b_ext, a_ext, images)
}

fn all_arrays(keys: &[Index], alphabet: &Alphabet) -> Vec<Element> {
    let mut out = Vec::new();
    let q = alphabet.len();
    let total = (q as u128).pow(keys.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut m = BTreeMap::new();
        for k in keys {
            m.insert(k.clone(), alphabet.symbols()[(c % q as u128) as usize]);
            c /= q as u128;
        }
        out.push(Element::Array(m));
    }
    out
}

fn edge_pairs(a: &IdSet) -> Vec<(Label, Label)> {
    let l = a.labels();
    let mut out = Vec::new();
    for p in 0..l.len() {
        for q in p + 1..l.len() {
            out.push((l[p], l[q]));
        }
    }
    out
}

fn graph3_from_edges(a: &IdSet, edges: &BTreeSet<(Label, Label)>) -> Element {
    let mut m = BTreeMap::new();
    for i in a.iter() {
        for j in a.iter() {
            let v = i != j && edges.contains(&(i.min(j), i.max(j)));
            m.insert(Index::label_tuple(&[i, j]), v as Symbol);
        }
    }
    Element::Array(m)
}

fn is_strict_total(a: &IdSet, r: &BTreeSet<(Label, Label)>) -> bool {
    for i in a.iter() {
        if r.contains(&(i, i)) {
            return false;
        }
        for j in a.iter() {
            if i != j && r.contains(&(i, j)) == r.contains(&(j, i)) {
                return false;
            }
            for k in a.iter() {
                if r.contains(&(i, j)) && r.contains(&(j, k)) && !r.contains(&(i, k)) {
                    return false;
                }
            }
        }
    }
    true
}

fn array_contains(alphabet: &Alphabet, indexing: &IndexingSystem, a: &IdSet, x: &Element) -> bool {
    match x {
        Element::Array(m) => {
            indexing.count_over(a.len()) == Some(m.len() as u128)
                && m.iter().all(|(i, s)| alphabet.contains(*s) && indexing.is_member(a, i))
        }
        _ => false,
    }
}

fn array_restrict(indexing: &IndexingSystem, tau: &Injection, x: &Element) -> Result<Element> {
    let Element::Array(m) = x else {
        return Err(DS::not_element(tau.cod()));
    };
    let mut out = BTreeMap::new();
    for j in indexing.indices(tau.dom())? {
        let t = indexing.apply_unchecked(tau, &j)?;
        let v = *m.get(&t).ok_or_else(|| DS::not_element(tau.cod()))?;
        out.insert(j, v);
    }
    Ok(Element::Array(out))
}

impl StructureRule for DataStructure {
    fn elements(&self, a: &IdSet) -> Result<Vec<Element>> {
        if let Some(d) = self.desugared() {
            return d.elements(a);
        }
        if !matches!(self, DS::Sub(..) | DS::ComposeI(..) | DS::Env(..) | DS::Product(..) | DS::Coproduct(..)) {
            self.bounded(a)?;
        }
        let mut out = match self {
            DS::Array { alphabet, indexing } => all_arrays(&indexing.indices(a)?, alphabet),
            DS::Graph2 => all_arrays(&IndexingSystem::Subsets(2).indices(a)?, &Alphabet::binary()),
            DS::SetSystem => {
                let subsets = enumerate_subsets(a, SizeFilter::All);
                (0u64..1 << subsets.len())
                    .map(|m| {
                        Element::Sets(
                            subsets.iter().enumerate().filter(|(p, _)| m >> p & 1 == 1).map(|(_, s)| s.clone()).collect(),
                        )
                    })
                    .collect()
            }
            DS::Graph1 | DS::Graph3 => {
                let pairs = edge_pairs(a);
                (0u64..1 << pairs.len())
                    .map(|m| {
                        let edges: BTreeSet<_> =
                            pairs.iter().enumerate().filter(|(p, _)| m >> p & 1 == 1).map(|(_, e)| *e).collect();
                        if matches!(self, DS::Graph1) {
                            Element::Graph { vertices: a.clone(), edges }
                        } else {
                            graph3_from_edges(a, &edges)
                        }
                    })
                    .collect()
            }
            DS::BinRel => {
                let pairs: Vec<(Label, Label)> = a.iter().flat_map(|i| a.iter().map(move |j| (i, j))).collect();
                (0u64..1 << pairs.len())
                    .map(|m| Element::Relation(pairs.iter().enumerate().filter(|(p, _)| m >> p & 1 == 1).map(|(_, e)| *e).collect()))
                    .collect()
            }
            DS::Total => permutations(a).iter().map(|pi| Element::total_order(pi.images())).collect(),
            DS::Product(d1, d2) => {
                self.bounded(a)?;
                let left = d1.elements(a)?;
                let right = d2.elements(a)?;
                let mut out = Vec::with_capacity(left.len() * right.len());
                for x in &left {
                    for y in &right {
                        out.push(Element::pair(x.clone(), y.clone()));
                    }
                }
                out
            }
            DS::Coproduct(d1, d2) => {
                self.bounded(a)?;
                let mut out: Vec<_> = d1.elements(a)?.into_iter().map(|x| Element::Left(Box::new(x))).collect();
                out.extend(d2.elements(a)?.into_iter().map(|x| Element::Right(Box::new(x))));
                out
            }
            DS::ComposeI(d, i) => d.elements(&IdSet::standard(relabeling(i, a)?.len()))?,
            DS::Sub(d, name) => {
                let pred = lookup_predicate(name)?;
                d.elements(a)?.into_iter().filter(|x| pred(a, x)).collect()
            }
            DS::Env(d, e) => d.elements(&env_extension(a, *e).0)?,
            DS::SepC1(..) | DS::SepC2(..) => unreachable!(),
        };
        out.sort();
        Ok(out)
    }

    fn contains(&self, a: &IdSet, x: &Element) -> Result<bool> {
        if let Some(d) = self.desugared() {
            return d.contains(a, x);
        }
        Ok(match (self, x) {
            (DS::Array { alphabet, indexing }, _) => array_contains(alphabet, indexing, a, x),
            (DS::Graph2, _) => array_contains(&Alphabet::binary(), &IndexingSystem::Subsets(2), a, x),
            (DS::Graph3, Element::Array(m)) => {
                array_contains(&Alphabet::binary(), &IndexingSystem::Tuples(2), a, x)
                    && a.iter().all(|i| {
                        a.iter().all(|j| {
                            let v = m[&Index::label_tuple(&[i, j])];
                            let w = m[&Index::label_tuple(&[j, i])];
                            v == w && (i != j || v == 0)
                        })
                    })
            }
            (DS::SetSystem, Element::Sets(s)) => s.iter().all(|b| b.is_subset(a)),
            (DS::Graph1, Element::Graph { vertices, edges }) => {
                vertices == a && edges.iter().all(|&(i, j)| i < j && a.contains(i) && a.contains(j))
            }
            (DS::BinRel, Element::Relation(r)) => r.iter().all(|&(i, j)| a.contains(i) && a.contains(j)),
            (DS::Total, Element::Relation(r)) => {
                r.iter().all(|&(i, j)| a.contains(i) && a.contains(j)) && is_strict_total(a, r)
            }
            (DS::Product(d1, d2), Element::Pair(x, y)) => d1.contains(a, x)? && d2.contains(a, y)?,
            (DS::Coproduct(d1, _), Element::Left(x)) => d1.contains(a, x)?,
            (DS::Coproduct(_, d2), Element::Right(x)) => d2.contains(a, x)?,
            (DS::ComposeI(d, i), _) => d.contains(&IdSet::standard(relabeling(i, a)?.len()), x)?,
            (DS::Sub(d, name), _) => d.contains(a, x)? && lookup_predicate(name)?(a, x),
            (DS::Env(d, e), _) => d.contains(&env_extension(a, *e).0, x)?,
            _ => false,
        })
    }

    fn restrict(&self, tau: &Injection, x: &Element) -> Result<Element> {
        if let Some(d) = self.desugared() {
            return d.restrict(tau, x);
        }
        let (b, a) = (tau.dom(), tau.cod());
        match (self, x) {
            (DS::Array { alphabet, indexing }, _) => {
                if !array_contains(alphabet, indexing, a, x) {
                    return Err(DS::not_element(a));
                }
                array_restrict(indexing, tau, x)
            }
            (DS::Graph2 | DS::Graph3, _) => {
                if !self.contains(a, x)? {
                    return Err(DS::not_element(a));
                }
                let sys = if matches!(self, DS::Graph2) { IndexingSystem::Subsets(2) } else { IndexingSystem::Tuples(2) };
                array_restrict(&sys, tau, x)
            }
            (DS::SetSystem, Element::Sets(s)) if self.contains(a, x)? => {
                Ok(Element::Sets(s.iter().map(|c| tau.preimage(c)).collect()))
            }
            (DS::Graph1, Element::Graph { edges, .. }) if self.contains(a, x)? => {
                let kept = edge_pairs(b)
                    .into_iter()
                    .filter(|&(i, j)| {
                        let (s, t) = (tau.apply(i).unwrap(), tau.apply(j).unwrap());
                        edges.contains(&(s.min(t), s.max(t)))
                    })
                    .collect();
                Ok(Element::Graph { vertices: b.clone(), edges: kept })
            }
            (DS::BinRel | DS::Total, Element::Relation(r)) if self.contains(a, x)? => {
                let mut out = BTreeSet::new();
                for i in b.iter() {
                    for j in b.iter() {
                        if r.contains(&(tau.apply(i).unwrap(), tau.apply(j).unwrap())) {
                            out.insert((i, j));
                        }
                    }
                }
                Ok(Element::Relation(out))
            }
            (DS::Product(d1, d2), Element::Pair(x, y)) => Ok(Element::pair(d1.restrict(tau, x)?, d2.restrict(tau, y)?)),
            (DS::Coproduct(d1, _), Element::Left(x)) => Ok(Element::Left(Box::new(d1.restrict(tau, x)?))),
            (DS::Coproduct(_, d2), Element::Right(x)) => Ok(Element::Right(Box::new(d2.restrict(tau, x)?))),
            (DS::ComposeI(d, i), _) => d.restrict(&induced_on_positions(i, tau)?, x),
            (DS::Sub(d, name), _) => {
                if !lookup_predicate(name)?(a, x) {
                    return Err(DS::not_element(a));
                }
                d.restrict(tau, x)
            }
            (DS::Env(d, e), _) => d.restrict(&env_injection(tau, *e)?, x),
            _ => Err(DS::not_element(a)),
        }
    }

    fn restrict_member(&self, tau: &Injection, x: &Element) -> Result<Element> {
        match self {
            DS::Array { indexing, .. } => array_restrict(indexing, tau, x),
            DS::Graph2 => array_restrict(&IndexingSystem::Subsets(2), tau, x),
            DS::Graph3 => array_restrict(&IndexingSystem::Tuples(2), tau, x),
            _ => self.restrict(tau, x),
        }
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DataStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DS::Array { alphabet, indexing } => write!(f, "array({alphabet},{indexing})"),
            DS::SetSystem => write!(f, "setsystem"),
            DS::Graph1 => write!(f, "graph1"),
            DS::Graph2 => write!(f, "graph2"),
            DS::Graph3 => write!(f, "graph3"),
            DS::BinRel => write!(f, "binrel"),
            DS::Total => write!(f, "total"),
            DS::Product(a, b) => write!(f, "product({a},{b})"),
            DS::Coproduct(a, b) => write!(f, "coproduct({a},{b})"),
            DS::ComposeI(d, i) => write!(f, "composeI({d},{i})"),
            DS::Sub(d, name) => write!(f, "sub({d},{name})"),
            DS::Env(d, e) => write!(f, "env({d},{e})"),
            DS::SepC1(d, k) => write!(f, "sep_c1({d},{k})"),
            DS::SepC2(d, k) => write!(f, "sep_c2({d},{k})"),
        }
    }
}

/// `D[ι_{b,a}](x)`.
pub fn restrict_to<S: StructureRule + ?Sized>(d: &S, b: &IdSet, a: &IdSet, x: &Element) -> Result<Element> {
    d.restrict(&Injection::inclusion(b, a)?, x)
}

pub type Predicate = Arc<dyn Fn(&IdSet, &Element) -> bool + Send + Sync>;

fn registry() -> &'static RwLock<BTreeMap<String, Predicate>> {
    static REGISTRY: OnceLock<RwLock<BTreeMap<String, Predicate>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut m: BTreeMap<String, Predicate> = BTreeMap::new();
        m.insert("partition".into(), Arc::new(is_partition));
        m.insert("hierarchy".into(), Arc::new(is_hierarchy));
        m.insert("interval".into(), Arc::new(is_interval_hypergraph));
        m.insert("total".into(), Arc::new(|a, x| matches!(x, Element::Relation(r) if is_strict_total(a, r))));
        m.insert("symmetric".into(), Arc::new(|_, x| matches!(x, Element::Relation(r) if r.iter().all(|&(i, j)| r.contains(&(j, i))))));
        m.insert("irreflexive".into(), Arc::new(|_, x| matches!(x, Element::Relation(r) if r.iter().all(|&(i, j)| i != j))));
        m.insert("transitive".into(), Arc::new(|_, x| matches!(x, Element::Relation(r) if is_transitive(r))));
        m.insert("triangle_free".into(), Arc::new(|a, x| graph_edges(a, x).is_some_and(|e| triangle_free(a, &e))));
        m.insert("connected".into(), Arc::new(|a, x| graph_edges(a, x).is_some_and(|e| connected(a, &e))));
        RwLock::new(m)
    })
}

/// Register a named predicate for use in `sub(D, name)`. Hereditarity is checked
/// when the predicate is attached to a base structure.
pub fn register_predicate(name: &str, pred: Predicate) {
    registry().write().unwrap().insert(name.to_string(), pred);
}

pub fn lookup_predicate(name: &str) -> Result<Predicate> {
    registry().read().unwrap().get(name).cloned().ok_or_else(|| Error::UnknownPredicate(name.to_string()))
}

pub fn predicate_names() -> Vec<String> {
    registry().read().unwrap().keys().cloned().collect()
}

fn check_hereditary(base: &DS, name: &str, pred: &Predicate, n_max: usize) -> Result<()> {
    for n in 0..=n_max {
        let a = IdSet::standard(n);
        for x in base.elements(&a)?.into_iter().filter(|x| pred(&a, x)) {
            for m in 0..=n {
                let b = IdSet::standard(m);
                for tau in enumerate_injections(&b, &a) {
                    let y = base.restrict(&tau, &x)?;
                    if !pred(&b, &y) {
                        return Err(Error::NotHereditary {
                            name: name.to_string(),
                            witness: format!("{x} over {a} satisfies it, its restriction {y} along {tau} does not"),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn is_partition(a: &IdSet, x: &Element) -> bool {
    let Element::Sets(s) = x else { return false };
    if !s.contains(&IdSet::empty()) {
        return false;
    }
    let blocks: Vec<&IdSet> = s.iter().collect();
    for p in 0..blocks.len() {
        for q in p + 1..blocks.len() {
            if !blocks[p].is_disjoint(blocks[q]) {
                return false;
            }
        }
    }
    let cover = blocks.iter().fold(IdSet::empty(), |acc, b| acc.union(b));
    cover == *a
}

fn is_hierarchy(a: &IdSet, x: &Element) -> bool {
    let Element::Sets(s) = x else { return false };
    if !s.contains(&IdSet::empty()) || !s.contains(a) || !a.iter().all(|l| s.contains(&[l].into_iter().collect())) {
        return false;
    }
    s.iter().all(|p| {
        s.iter().all(|q| {
            let m = p.intersection(q);
            m == *p || m == *q || m.is_empty()
        })
    })
}

fn is_interval_hypergraph(a: &IdSet, x: &Element) -> bool {
    let Element::Sets(s) = x else { return false };
    if !s.contains(&IdSet::empty()) || !a.iter().all(|l| s.contains(&[l].into_iter().collect())) {
        return false;
    }
    permutations(a).iter().any(|pi| {
        let order = pi.images();
        s.iter().all(|b| {
            let pos: Vec<usize> = order.iter().enumerate().filter(|(_, l)| b.contains(**l)).map(|(p, _)| p).collect();
            pos.windows(2).all(|w| w[1] == w[0] + 1)
        })
    })
}

fn is_transitive(r: &BTreeSet<(Label, Label)>) -> bool {
    r.iter().all(|&(i, j)| r.iter().filter(|&&(k, _)| k == j).all(|&(_, l)| r.contains(&(i, l))))
}

/// Edge set of any graph-like element over `a`.
pub fn graph_edges(_a: &IdSet, x: &Element) -> Option<BTreeSet<(Label, Label)>> {
    match x {
        Element::Graph { edges, .. } => Some(edges.clone()),
        Element::Array(m) => {
            let mut out = BTreeSet::new();
            for (e, v) in m {
                if *v == 0 {
                    continue;
                }
                let l: Vec<Label> = e.labels().into_iter().collect();
                match (e, l.as_slice()) {
                    (Index::Set(_), [i, j]) | (Index::Tuple(_), [i, j]) => {
                        out.insert((*i, *j));
                    }
                    _ => return None,
                }
            }
            Some(out)
        }
        _ => None,
    }
}

fn triangle_free(a: &IdSet, e: &BTreeSet<(Label, Label)>) -> bool {
    let l = a.labels();
    for p in 0..l.len() {
        for q in p + 1..l.len() {
            for r in q + 1..l.len() {
                if e.contains(&(l[p], l[q])) && e.contains(&(l[q], l[r])) && e.contains(&(l[p], l[r])) {
                    return false;
                }
            }
        }
    }
    true
}

fn connected(a: &IdSet, e: &BTreeSet<(Label, Label)>) -> bool {
    let Some(start) = a.labels().first() else { return true };
    let mut seen = BTreeSet::from([*start]);
    let mut stack = vec![*start];
    while let Some(v) = stack.pop() {
        for &(i, j) in e {
            for (s, t) in [(i, j), (j, i)] {
                if s == v && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
    }
    seen.len() == a.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctorViolation {
    pub sets: Vec<IdSet>,
    pub element: Element,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct FunctorReport {
    pub violations: Vec<FunctorViolation>,
    pub checks: u64,
}

impl FunctorReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Identity and composition laws over all label sets in `[n_max]`.
pub fn check_functor_axioms<S: StructureRule + ?Sized>(d: &S, n_max: usize) -> Result<FunctorReport> {
    let sets = enumerate_subsets(&IdSet::standard(n_max), SizeFilter::All);
    let mut report = FunctorReport::default();
    let cap = 16;
    for a in &sets {
        let xs = d.elements(a)?;
        for x in &xs {
            report.checks += 1;
            let y = d.restrict(&Injection::identity(a), x)?;
            if y != *x && report.violations.len() < cap {
                report.violations.push(FunctorViolation {
                    sets: vec![a.clone()],
                    element: x.clone(),
                    detail: format!("identity restricts to {y}"),
                });
            }
        }
        for b in &sets {
            for sigma in enumerate_injections(b, a) {
                let restricted: Vec<Element> = xs.iter().map(|x| d.restrict(&sigma, x)).collect::<Result<_>>()?;
                for (x, y) in xs.iter().zip(&restricted) {
                    if !d.contains(b, y)? && report.violations.len() < cap {
                        report.violations.push(FunctorViolation {
                            sets: vec![b.clone(), a.clone()],
                            element: x.clone(),
                            detail: format!("restriction along {sigma} leaves the structure: {y}"),
                        });
                    }
                }
                for c in &sets {
                    for tau in enumerate_injections(c, b) {
                        let st = compose(&sigma, &tau)?;
                        for (x, y) in xs.iter().zip(&restricted) {
                            report.checks += 1;
                            let two_step = d.restrict(&tau, y)?;
                            let one_step = d.restrict(&st, x)?;
                            if two_step != one_step && report.violations.len() < cap {
                                report.violations.push(FunctorViolation {
                                    sets: vec![c.clone(), b.clone(), a.clone()],
                                    element: x.clone(),
                                    detail: format!("stepwise {two_step} differs from composite {one_step}"),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Depth {
    pub k: usize,
    pub certified: bool,
}

/// Least `k` such that restrictions to subsets of size at most `k` separate the elements
/// of every `D_[n]`, `n <= n_max`. Arrays with a bounded indexing system are answered
/// from the skeleton and marked certified.
pub fn depth(d: &DS, n_max: usize) -> Result<Depth> {
    if let Some((alphabet, indexing)) = d.as_array() {
        if alphabet.len() < 2 {
            return Ok(Depth { k: 0, certified: true });
        }
        if let Some(bound) = indexing.max_dom_size() {
            if bound <= n_max {
                let sk = Skeleton::cached(&indexing, bound)?;
                return Ok(Depth { k: sk.max_representative_size(), certified: true });
            }
        }
    }
    Ok(Depth { k: depth_brute_force(d, n_max)?, certified: false })
}

pub fn depth_brute_force<S: StructureRule + ?Sized>(d: &S, n_max: usize) -> Result<usize> {
    let mut overall = 0;
    for n in 0..=n_max {
        let a = IdSet::standard(n);
        let xs = d.elements(&a)?;
        let mut k = 0;
        loop {
            let parts = enumerate_subsets(&a, SizeFilter::AtMost(k));
            let mut seen = BTreeSet::new();
            let mut separated = true;
            for x in &xs {
                let sig = parts.iter().map(|b| restrict_to(d, b, &a, x)).collect::<Result<Vec<_>>>()?;
                if !seen.insert(sig) {
                    separated = false;
                    break;
                }
            }
            if separated || k >= n {
                break;
            }
            k += 1;
        }
        overall = overall.max(k);
    }
    Ok(overall)
}

/// `#{ y in D_a : D[ι_{b,a}](y) = x }`.
pub fn count_fiber<S: StructureRule + ?Sized>(d: &S, b: &IdSet, a: &IdSet, x: &Element) -> Result<u128> {
    if !d.contains(b, x)? {
        return Err(Error::NotElement { set: b.labels().to_vec() });
    }
    let incl = Injection::inclusion(b, a)?;
    let mut count = 0;
    for y in d.elements(a)? {
        if d.restrict(&incl, &y)? == *x {
            count += 1;
        }
    }
    Ok(count)
}
