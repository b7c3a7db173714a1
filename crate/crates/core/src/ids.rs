//! Finite label sets and injections between them.

use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Label = u32;

/// A finite set of labels, kept sorted and distinct.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdSet(Vec<Label>);

impl IdSet {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIdSet(labels));
        }
        Ok(IdSet(labels))
    }

    pub fn empty() -> Self {
        IdSet(Vec::new())
    }

    /// The standardized set `{1, ..., n}`.
    pub fn standard(n: usize) -> Self {
        IdSet((1..=n as Label).collect())
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, l: Label) -> bool {
        self.0.binary_search(&l).is_ok()
    }

    pub fn position(&self, l: Label) -> Option<usize> {
        self.0.binary_search(&l).ok()
    }

    pub fn max(&self) -> Option<Label> {
        self.0.last().copied()
    }

    pub fn is_subset(&self, other: &IdSet) -> bool {
        self.0.iter().all(|&l| other.contains(l))
    }

    pub fn is_disjoint(&self, other: &IdSet) -> bool {
        self.0.iter().all(|&l| !other.contains(l))
    }

    pub fn intersection(&self, other: &IdSet) -> IdSet {
        IdSet(self.0.iter().copied().filter(|&l| other.contains(l)).collect())
    }

    pub fn union(&self, other: &IdSet) -> IdSet {
        self.0.iter().chain(other.0.iter()).copied().collect()
    }

    pub fn difference(&self, other: &IdSet) -> IdSet {
        IdSet(self.0.iter().copied().filter(|&l| !other.contains(l)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        self.0.iter().copied()
    }

    /// Bitmask of this set relative to the positions of `ambient`.
    pub fn mask_in(&self, ambient: &IdSet) -> u64 {
        self.0
            .iter()
            .filter_map(|&l| ambient.position(l))
            .fold(0, |m, p| m | (1 << p))
    }

    pub fn from_mask(ambient: &IdSet, mask: u64) -> IdSet {
        IdSet(
            ambient
                .0
                .iter()
                .enumerate()
                .filter(|(p, _)| mask >> p & 1 == 1)
                .map(|(_, &l)| l)
                .collect(),
        )
    }

    pub fn to_json(&self) -> Value {
        json!(self.0)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Term(format!("expected label array, got {v}")))?;
        let labels = arr
            .iter()
            .map(|x| {
                x.as_u64()
                    .and_then(|n| Label::try_from(n).ok())
                    .ok_or_else(|| Error::Term(format!("bad label {x}")))
            })
            .collect::<Result<Vec<_>>>()?;
        IdSet::new(labels)
    }
}

impl FromIterator<Label> for IdSet {
    fn from_iter<T: IntoIterator<Item = Label>>(iter: T) -> Self {
        let mut v: Vec<Label> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        IdSet(v)
    }
}

impl fmt::Display for IdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (p, l) in self.0.iter().enumerate() {
            if p > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeFilter {
    All,
    Exactly(usize),
    AtMost(usize),
}

impl SizeFilter {
    fn admits(self, k: usize) -> bool {
        match self {
            SizeFilter::All => true,
            SizeFilter::Exactly(j) => k == j,
            SizeFilter::AtMost(j) => k <= j,
        }
    }
}

/// Subsets of `a` ordered by size, then lexicographically.
pub fn enumerate_subsets(a: &IdSet, filter: SizeFilter) -> Vec<IdSet> {
    let mut out = Vec::new();
    for k in 0..=a.len() {
        if filter.admits(k) {
            combinations(a.labels(), k, &mut |c| out.push(IdSet(c.to_vec())));
        }
    }
    out
}

fn combinations(items: &[Label], k: usize, emit: &mut dyn FnMut(&[Label])) {
    fn go(items: &[Label], k: usize, start: usize, cur: &mut Vec<Label>, emit: &mut dyn FnMut(&[Label])) {
        if cur.len() == k {
            emit(cur);
            return;
        }
        let need = k - cur.len();
        for p in start..=items.len().saturating_sub(need) {
            if p >= items.len() {
                break;
            }
            cur.push(items[p]);
            go(items, k, p + 1, cur, emit);
            cur.pop();
        }
    }
    go(items, k, 0, &mut Vec::with_capacity(k), emit);
}

/// An injective map between label sets, stored as the images of `dom` in order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Injection {
    dom: IdSet,
    cod: IdSet,
    images: Vec<Label>,
}

impl Injection {
    pub fn new(dom: IdSet, cod: IdSet, images: Vec<Label>) -> Result<Self> {
        if images.len() != dom.len() {
            return Err(Error::InvalidInjection(format!(
                "{} images for a domain of size {}",
                images.len(),
                dom.len()
            )));
        }
        if let Some(&t) = images.iter().find(|&&t| !cod.contains(t)) {
            return Err(Error::InvalidInjection(format!("image {t} outside codomain {cod}")));
        }
        let distinct: IdSet = images.iter().copied().collect();
        if distinct.len() != images.len() {
            return Err(Error::InvalidInjection(format!("images {images:?} repeat")));
        }
        Ok(Injection { dom, cod, images })
    }

    pub fn from_pairs(dom: IdSet, cod: IdSet, pairs: &[(Label, Label)]) -> Result<Self> {
        let mut images = Vec::with_capacity(dom.len());
        for s in dom.iter() {
            let hits: Vec<_> = pairs.iter().filter(|p| p.0 == s).collect();
            match hits.as_slice() {
                [p] => images.push(p.1),
                _ => return Err(Error::InvalidInjection(format!("label {s} must be mapped exactly once"))),
            }
        }
        if pairs.len() != dom.len() {
            return Err(Error::InvalidInjection("map has pairs outside the domain".into()));
        }
        Injection::new(dom, cod, images)
    }

    pub fn identity(a: &IdSet) -> Self {
        Injection { dom: a.clone(), cod: a.clone(), images: a.labels().to_vec() }
    }

    pub fn inclusion(b: &IdSet, a: &IdSet) -> Result<Self> {
        if !b.is_subset(a) {
            return Err(Error::InvalidInjection(format!("{b} is not a subset of {a}")));
        }
        Ok(Injection { dom: b.clone(), cod: a.clone(), images: b.labels().to_vec() })
    }

    /// The order-preserving bijection `b -> a`.
    pub fn canonical_bijection(b: &IdSet, a: &IdSet) -> Result<Self> {
        if b.len() != a.len() {
            return Err(Error::InvalidInjection(format!("{b} and {a} differ in size")));
        }
        Ok(Injection { dom: b.clone(), cod: a.clone(), images: a.labels().to_vec() })
    }

    pub fn dom(&self) -> &IdSet {
        &self.dom
    }

    pub fn cod(&self) -> &IdSet {
        &self.cod
    }

    pub fn images(&self) -> &[Label] {
        &self.images
    }

    pub fn apply(&self, l: Label) -> Option<Label> {
        self.dom.position(l).map(|p| self.images[p])
    }

    pub fn image(&self) -> IdSet {
        self.images.iter().copied().collect()
    }

    /// `{ s in dom : self(s) in set }`.
    pub fn preimage(&self, set: &IdSet) -> IdSet {
        IdSet(
            self.dom
                .iter()
                .zip(&self.images)
                .filter(|(_, t)| set.contains(**t))
                .map(|(s, _)| s)
                .collect(),
        )
    }

    pub fn is_bijection(&self) -> bool {
        self.dom.len() == self.cod.len()
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_bijection() {
            return Err(Error::InvalidInjection("only bijections are invertible".into()));
        }
        let mut images = vec![0; self.cod.len()];
        for (s, &t) in self.dom.iter().zip(&self.images) {
            images[self.cod.position(t).unwrap()] = s;
        }
        Ok(Injection { dom: self.cod.clone(), cod: self.dom.clone(), images })
    }

    pub fn pairs(&self) -> Vec<(Label, Label)> {
        self.dom.iter().zip(self.images.iter().copied()).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dom": self.dom.to_json(),
            "cod": self.cod.to_json(),
            "map": self.pairs().iter().map(|(s, t)| json!([s, t])).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let dom = IdSet::from_json(&v["dom"])?;
        let cod = IdSet::from_json(&v["cod"])?;
        let map = v["map"]
            .as_array()
            .ok_or_else(|| Error::Term("injection needs a map array".into()))?;
        let pairs = map
            .iter()
            .map(|p| match (p[0].as_u64(), p[1].as_u64()) {
                (Some(s), Some(t)) => Ok((s as Label, t as Label)),
                _ => Err(Error::Term(format!("bad map pair {p}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Injection::from_pairs(dom, cod, &pairs)
    }
}

impl fmt::Display for Injection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (p, (s, t)) in self.pairs().iter().enumerate() {
            if p > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}->{t}")?;
        }
        write!(f, "]:{}->{}", self.dom, self.cod)
    }
}

/// `tau ∘ sigma`, defined when `cod(sigma) = dom(tau)`.
pub fn compose(tau: &Injection, sigma: &Injection) -> Result<Injection> {
    if sigma.cod != tau.dom {
        return Err(Error::CompositionMismatch {
            left: sigma.cod.labels().to_vec(),
            right: tau.dom.labels().to_vec(),
        });
    }
    let images = sigma.images.iter().map(|&m| tau.apply(m).unwrap()).collect();
    Ok(Injection { dom: sigma.dom.clone(), cod: tau.cod.clone(), images })
}

/// Factor `tau = ι ∘ τ̂` into the inclusion of its image and a bijection onto the image.
pub fn decompose(tau: &Injection) -> (Injection, Injection) {
    let image = tau.image();
    let incl = Injection::inclusion(&image, &tau.cod).unwrap();
    let hat = Injection { dom: tau.dom.clone(), cod: image, images: tau.images.clone() };
    (incl, hat)
}

/// All injections `b -> a`, ordered lexicographically by their image tuples.
pub fn enumerate_injections(b: &IdSet, a: &IdSet) -> Vec<Injection> {
    let mut out = Vec::new();
    if b.len() > a.len() {
        return out;
    }
    let mut used = vec![false; a.len()];
    let mut cur = Vec::with_capacity(b.len());
    fn go(b: &IdSet, a: &IdSet, used: &mut [bool], cur: &mut Vec<Label>, out: &mut Vec<Injection>) {
        if cur.len() == b.len() {
            out.push(Injection { dom: b.clone(), cod: a.clone(), images: cur.clone() });
            return;
        }
        for p in 0..a.len() {
            if !used[p] {
                used[p] = true;
                cur.push(a.labels()[p]);
                go(b, a, used, cur, out);
                cur.pop();
                used[p] = false;
            }
        }
    }
    go(b, a, &mut used, &mut cur, &mut out);
    out
}

pub fn enumerate_bijections(b: &IdSet, a: &IdSet) -> Vec<Injection> {
    if b.len() != a.len() {
        return Vec::new();
    }
    enumerate_injections(b, a)
}

pub fn permutations(a: &IdSet) -> Vec<Injection> {
    enumerate_injections(a, a)
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

pub fn falling_factorial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    ((n - k + 1) as u128..=n as u128).product()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    falling_factorial(n, k) / factorial(k)
}
