//! Finite laws: one probability table per standardized level `[0], ..., [n_max]`.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ids::{enumerate_injections, enumerate_subsets, IdSet, Injection, SizeFilter};
use crate::nat::NaturalTransformation;
use crate::structures::{Alphabet, DataStructure, Element, StructureRule};
use crate::IndexingSystem;

pub type Rational = BigRational;

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidLaw(format!("not a rational: {s}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

/// A probability value: exact rationals or floating point.
pub trait Mass:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const EXACT: bool;
    fn from_rational(r: &Rational) -> Self;
    fn from_count(n: u128) -> Self;
    fn as_f64(&self) -> f64;
    fn is_negative(&self) -> bool;
    /// Equality for exact masses, `|x - y| <= tol` for floats.
    fn close(&self, other: &Self, tol: f64) -> bool;
    fn to_json(&self) -> Value;
}

impl Mass for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn from_count(n: u128) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn as_f64(&self) -> f64 {
        self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_json(&self) -> Value {
        json!(self.to_string())
    }
}

impl Mass for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        r.as_f64()
    }

    fn from_count(n: u128) -> Self {
        n as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }

    fn close(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn to_json(&self) -> Value {
        json!(self)
    }
}

/// Default tolerance for floating-point laws.
pub const FLOAT_TOL: f64 = 1e-9;

pub type Table<P> = BTreeMap<Element, P>;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteLaw<P: Mass = Rational> {
    pub structure: DataStructure,
    pub n_max: usize,
    tables: Vec<Table<P>>,
}

pub type ExactLaw = FiniteLaw<Rational>;

fn add_mass<P: Mass>(t: &mut Table<P>, x: Element, p: P) {
    let slot = t.entry(x).or_insert_with(P::zero);
    *slot = slot.clone() + p;
}

impl<P: Mass> FiniteLaw<P> {
    /// Validates that every table is a probability distribution on `D_[n]`.
    pub fn new(structure: DataStructure, tables: Vec<Table<P>>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidLaw("a law needs at least level 0".into()));
        }
        let n_max = tables.len() - 1;
        let mut cleaned = Vec::with_capacity(tables.len());
        for (n, t) in tables.into_iter().enumerate() {
            let a = IdSet::standard(n);
            let mut total = P::zero();
            let mut kept = Table::new();
            for (x, p) in t {
                if p.is_negative() {
                    return Err(Error::InvalidLaw(format!("negative mass at level {n} on {x}")));
                }
                if !structure.contains(&a, &x)? {
                    return Err(Error::InvalidLaw(format!("{x} is not an element over {a}")));
                }
                total = total + p.clone();
                if !p.is_zero() {
                    kept.insert(x, p);
                }
            }
            if !total.close(&P::one(), FLOAT_TOL) {
                return Err(Error::InvalidLaw(format!("level {n} has total mass {:?}", total)));
            }
            cleaned.push(kept);
        }
        Ok(FiniteLaw { structure, n_max, tables: cleaned })
    }

    pub fn table(&self, n: usize) -> &Table<P> {
        &self.tables[n]
    }

    pub fn tables(&self) -> &[Table<P>] {
        &self.tables
    }

    pub fn mass(&self, n: usize, x: &Element) -> P {
        self.tables[n].get(x).cloned().unwrap_or_else(P::zero)
    }

    /// `μ_a({x})` for any label set, through the order-preserving bijection `[|a|] -> a`.
    pub fn mass_on(&self, a: &IdSet, x: &Element) -> Result<P> {
        let canon = Injection::canonical_bijection(&IdSet::standard(a.len()), a)?;
        Ok(self.mass(a.len(), &self.structure.restrict(&canon, x)?))
    }

    /// The law of `μ_a` transported to the labels of `a`.
    pub fn table_on(&self, a: &IdSet) -> Result<Table<P>> {
        let canon = Injection::canonical_bijection(a, &IdSet::standard(a.len()))?;
        let mut out = Table::new();
        for (y, p) in &self.tables[a.len()] {
            add_mass(&mut out, self.structure.restrict(&canon, y)?, p.clone());
        }
        Ok(out)
    }

    /// Lower levels are the images of the top table under the inclusions `[m] ⊆ [n_max]`.
    pub fn from_top(structure: DataStructure, n_max: usize, top: Table<P>) -> Result<Self> {
        let a = IdSet::standard(n_max);
        let mut tables = Vec::with_capacity(n_max + 1);
        for m in 0..=n_max {
            let incl = Injection::inclusion(&IdSet::standard(m), &a)?;
            let mut t = Table::new();
            for (x, p) in &top {
                add_mass(&mut t, structure.restrict(&incl, x)?, p.clone());
            }
            tables.push(t);
        }
        FiniteLaw::new(structure, tables)
    }

    pub fn point_mass(structure: DataStructure, n_max: usize, x: Element) -> Result<Self> {
        FiniteLaw::from_top(structure, n_max, Table::from([(x, P::one())]))
    }

    /// `x ↦ ∏ ν(x_i)` on `array(alphabet, indexing)`.
    pub fn iid_array(alphabet: Alphabet, indexing: IndexingSystem, weights: &[P], n_max: usize) -> Result<Self> {
        if weights.len() != alphabet.len() {
            return Err(Error::InvalidLaw("one weight per symbol is required".into()));
        }
        let structure = DataStructure::array(alphabet.clone(), indexing);
        let mut tables = Vec::new();
        for n in 0..=n_max {
            let mut t = Table::new();
            for x in structure.elements(&IdSet::standard(n))? {
                let Element::Array(m) = &x else { unreachable!() };
                let p = m.values().fold(P::one(), |acc, s| {
                    acc * weights[alphabet.symbols().binary_search(s).unwrap()].clone()
                });
                t.insert(x, p);
            }
            tables.push(t);
        }
        FiniteLaw::new(structure, tables)
    }

    pub fn bernoulli_sequence(p: P, n_max: usize) -> Result<Self> {
        FiniteLaw::iid_array(Alphabet::binary(), IndexingSystem::Id, &[P::one() - p.clone(), p], n_max)
    }

    pub fn erdos_renyi(p: P, n_max: usize) -> Result<Self> {
        let law = FiniteLaw::iid_array(Alphabet::binary(), IndexingSystem::Subsets(2), &[P::one() - p.clone(), p], n_max)?;
        Ok(FiniteLaw { structure: DataStructure::Graph2, ..law })
    }

    pub fn uniform(structure: DataStructure, n_max: usize) -> Result<Self> {
        let mut tables = Vec::new();
        for n in 0..=n_max {
            let xs = structure.elements(&IdSet::standard(n))?;
            let w = P::one() / P::from_count(xs.len() as u128);
            tables.push(xs.into_iter().map(|x| (x, w.clone())).collect());
        }
        FiniteLaw::new(structure, tables)
    }

    pub fn uniform_total(n_max: usize) -> Result<Self> {
        FiniteLaw::uniform(DataStructure::Total, n_max)
    }

    /// Uniform over injective sequences into `{0, ..., grid-1}`: a tie-free stand-in for
    /// iid uniform labels, consistent up to `n_max <= grid`.
    pub fn uniform_distinct_sequence(grid: usize, n_max: usize) -> Result<Self> {
        if n_max > grid {
            return Err(Error::InvalidLaw(format!("{n_max} distinct values do not fit in a grid of {grid}")));
        }
        let structure = DataStructure::sequence(Alphabet::range(grid));
        let mut tables = Vec::new();
        for n in 0..=n_max {
            let xs: Vec<Element> = structure
                .elements(&IdSet::standard(n))?
                .into_iter()
                .filter(|x| match x {
                    Element::Array(m) => {
                        let vals: std::collections::BTreeSet<_> = m.values().collect();
                        vals.len() == m.len()
                    }
                    _ => false,
                })
                .collect();
            let w = P::one() / P::from_count(xs.len() as u128);
            tables.push(xs.into_iter().map(|x| (x, w.clone())).collect());
        }
        FiniteLaw::new(structure, tables)
    }

    pub fn to_f64_law(&self) -> FiniteLaw<f64> {
        FiniteLaw {
            structure: self.structure.clone(),
            n_max: self.n_max,
            tables: self
                .tables
                .iter()
                .map(|t| t.iter().map(|(x, p)| (x.clone(), p.as_f64())).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let tables: serde_json::Map<String, Value> = self
            .tables
            .iter()
            .enumerate()
            .map(|(n, t)| {
                let rows: Vec<Value> =
                    t.iter().map(|(x, p)| json!({ "element": x.to_json(), "mass": p.to_json() })).collect();
                (n.to_string(), Value::Array(rows))
            })
            .collect();
        json!({ "structure": self.structure.to_string(), "n_max": self.n_max, "tables": tables })
    }
}

/// Convex combination, level by level.
pub fn mix<P: Mass>(components: &[FiniteLaw<P>], weights: &[P]) -> Result<FiniteLaw<P>> {
    let first = components.first().ok_or_else(|| Error::InvalidLaw("mixture of nothing".into()))?;
    if components.len() != weights.len() {
        return Err(Error::InvalidLaw("one weight per component is required".into()));
    }
    let mut tables = vec![Table::new(); first.n_max + 1];
    for (mu, w) in components.iter().zip(weights) {
        if mu.structure != first.structure || mu.n_max != first.n_max {
            return Err(Error::LevelMismatch("mixture components must share structure and n_max".into()));
        }
        for (n, t) in mu.tables.iter().enumerate() {
            for (x, p) in t {
                add_mass(&mut tables[n], x.clone(), w.clone() * p.clone());
            }
        }
    }
    FiniteLaw::new(first.structure.clone(), tables)
}

/// `μ_a ∘ η_a^{-1}` at every level.
pub fn pushforward_law<P: Mass>(mu: &FiniteLaw<P>, eta: &NaturalTransformation) -> Result<FiniteLaw<P>> {
    if eta.source != mu.structure {
        return Err(Error::LevelMismatch(format!(
            "transformation starts at {} but the law lives on {}",
            eta.source, mu.structure
        )));
    }
    let mut tables = Vec::with_capacity(mu.n_max + 1);
    for (n, t) in mu.tables.iter().enumerate() {
        let a = IdSet::standard(n);
        let mut out = Table::new();
        for (x, p) in t {
            add_mass(&mut out, eta.apply(&a, x)?, p.clone());
        }
        tables.push(out);
    }
    FiniteLaw::new(eta.target.clone(), tables)
}

/// Law of the pair `(X, Y)` with independent coordinates, on `product(D1, D2)`.
pub fn product_law<P: Mass>(left: &FiniteLaw<P>, right: &FiniteLaw<P>) -> Result<FiniteLaw<P>> {
    if left.n_max != right.n_max {
        return Err(Error::LevelMismatch("product factors need equal n_max".into()));
    }
    let mut tables = Vec::new();
    for n in 0..=left.n_max {
        let mut t = Table::new();
        for (x, p) in &left.tables[n] {
            for (y, q) in &right.tables[n] {
                t.insert(Element::pair(x.clone(), y.clone()), p.clone() * q.clone());
            }
        }
        tables.push(t);
    }
    FiniteLaw::new(DataStructure::product(left.structure.clone(), right.structure.clone()), tables)
}

fn push_along<P: Mass>(d: &DataStructure, tau: &Injection, t: &Table<P>) -> Result<Table<P>> {
    let mut out = Table::new();
    for (x, p) in t {
        add_mass(&mut out, d.restrict(tau, x)?, p.clone());
    }
    Ok(out)
}

/// First differing key of two tables, with both masses.
fn first_difference<P: Mass>(lhs: &Table<P>, rhs: &Table<P>, tol: f64) -> Option<(Element, P, P)> {
    let keys: std::collections::BTreeSet<&Element> = lhs.keys().chain(rhs.keys()).collect();
    for k in keys {
        let l = lhs.get(k).cloned().unwrap_or_else(P::zero);
        let r = rhs.get(k).cloned().unwrap_or_else(P::zero);
        if !l.close(&r, tol) {
            return Some((k.clone(), l, r));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeabilityWitness<P> {
    pub tau: Injection,
    pub element: Element,
    /// `μ_{[n]}(D[τ]^{-1}{x})`.
    pub pushed: P,
    /// `μ_{[m]}({x})`.
    pub direct: P,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeabilityReport<P> {
    pub witness: Option<ExchangeabilityWitness<P>>,
    pub checks: u64,
}

impl<P> ExchangeabilityReport<P> {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// `μ_{[m]} = μ_{[n]} ∘ D[τ]^{-1}` for every injection `τ: [m] -> [n]`, `m <= n <= n_max`.
/// Bijections of each level are tried before proper injections.
pub fn check_exchangeable<P: Mass>(mu: &FiniteLaw<P>, tol: f64) -> Result<ExchangeabilityReport<P>> {
    let mut checks = 0;
    for n in 0..=mu.n_max {
        let a = IdSet::standard(n);
        for m in (0..=n).rev() {
            for tau in enumerate_injections(&IdSet::standard(m), &a) {
                checks += 1;
                let pushed = push_along(&mu.structure, &tau, &mu.tables[n])?;
                if let Some((element, p, d)) = first_difference(&pushed, &mu.tables[m], tol) {
                    return Ok(ExchangeabilityReport {
                        witness: Some(ExchangeabilityWitness { tau, element, pushed: p, direct: d }),
                        checks,
                    });
                }
            }
        }
    }
    Ok(ExchangeabilityReport { witness: None, checks })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceWitness<P> {
    pub a: IdSet,
    pub b: IdSet,
    pub x_a: Element,
    pub x_b: Element,
    pub joint: P,
    pub product: P,
}

impl<P: Mass> IndependenceWitness<P> {
    /// `Cov(1{X_a = x_a}, 1{X_b = x_b})`.
    pub fn covariance(&self) -> P {
        self.joint.clone() - self.product.clone()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport<P> {
    pub witness: Option<IndependenceWitness<P>>,
    pub checks: u64,
}

impl<P> IndependenceReport<P> {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// `μ_{a⊔b} ∘ (D[ι_a], D[ι_b])^{-1} = μ_a ⊗ μ_b` for every split `a ⊔ b = [n]`, `n <= n_max`.
pub fn check_independence<P: Mass>(mu: &FiniteLaw<P>, tol: f64) -> Result<IndependenceReport<P>> {
    let d = &mu.structure;
    let mut checks = 0;
    for n in 0..=mu.n_max {
        let whole = IdSet::standard(n);
        for a in enumerate_subsets(&whole, SizeFilter::All) {
            let b = whole.difference(&a);
            checks += 1;
            let ia = Injection::inclusion(&a, &whole)?;
            let ib = Injection::inclusion(&b, &whole)?;
            let mut joint: BTreeMap<(Element, Element), P> = BTreeMap::new();
            for (x, p) in &mu.tables[n] {
                let key = (d.restrict(&ia, x)?, d.restrict(&ib, x)?);
                let slot = joint.entry(key).or_insert_with(P::zero);
                *slot = slot.clone() + p.clone();
            }
            let ma = mu.table_on(&a)?;
            let mb = mu.table_on(&b)?;
            let mut keys: std::collections::BTreeSet<(Element, Element)> = joint.keys().cloned().collect();
            for xa in ma.keys() {
                for xb in mb.keys() {
                    keys.insert((xa.clone(), xb.clone()));
                }
            }
            for (xa, xb) in keys {
                let j = joint.get(&(xa.clone(), xb.clone())).cloned().unwrap_or_else(P::zero);
                let pa = ma.get(&xa).cloned().unwrap_or_else(P::zero);
                let pb = mb.get(&xb).cloned().unwrap_or_else(P::zero);
                let prod = pa * pb;
                if !j.close(&prod, tol) {
                    return Ok(IndependenceReport {
                        witness: Some(IndependenceWitness { a, b, x_a: xa, x_b: xb, joint: j, product: prod }),
                        checks,
                    });
                }
            }
        }
    }
    Ok(IndependenceReport { witness: None, checks })
}

/// A law file with either exact or floating masses.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyLaw {
    Exact(FiniteLaw<Rational>),
    Float(FiniteLaw<f64>),
}

impl AnyLaw {
    pub fn structure(&self) -> &DataStructure {
        match self {
            AnyLaw::Exact(l) => &l.structure,
            AnyLaw::Float(l) => &l.structure,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyLaw::Exact(l) => l.to_json(),
            AnyLaw::Float(l) => l.to_json(),
        }
    }
}

/// Parse `{"structure": DS, "n_max": n, "tables": {"n": [{"element": .., "mass": "p/q" | float}]}}`.
/// Any floating mass makes the whole law floating.
pub fn law_from_json(v: &Value) -> Result<AnyLaw> {
    let text = v["structure"].as_str().ok_or_else(|| Error::InvalidLaw("structure must be a string".into()))?;
    let structure = crate::dsl::parse_structure(text)?;
    structure.validate(crate::structures::REGISTRATION_N_MAX)?;
    let n_max = v["n_max"].as_u64().ok_or_else(|| Error::InvalidLaw("n_max must be an integer".into()))? as usize;
    let tables = v["tables"].as_object().ok_or_else(|| Error::InvalidLaw("tables must be an object".into()))?;
    let mut rows: Vec<Vec<(Element, Value)>> = vec![Vec::new(); n_max + 1];
    for (k, list) in tables {
        let n: usize = k.parse().map_err(|_| Error::InvalidLaw(format!("bad level key {k}")))?;
        if n > n_max {
            return Err(Error::InvalidLaw(format!("level {n} exceeds n_max {n_max}")));
        }
        for row in list.as_array().ok_or_else(|| Error::InvalidLaw("table must be a list".into()))? {
            rows[n].push((Element::from_json(&row["element"])?, row["mass"].clone()));
        }
    }
    let floating = rows.iter().flatten().any(|(_, m)| m.is_number());
    if floating {
        let tables = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(x, m)| {
                        let p = match &m {
                            Value::String(s) => parse_rational(s)?.as_f64(),
                            other => other.as_f64().ok_or_else(|| Error::InvalidLaw(format!("bad mass {other}")))?,
                        };
                        Ok((x, p))
                    })
                    .collect::<Result<Table<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnyLaw::Float(FiniteLaw::new(structure, tables)?))
    } else {
        let tables = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(x, m)| {
                        let s = m.as_str().ok_or_else(|| Error::InvalidLaw(format!("bad mass {m}")))?;
                        Ok((x, parse_rational(s)?))
                    })
                    .collect::<Result<Table<Rational>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnyLaw::Exact(FiniteLaw::new(structure, tables)?))
    }
}
