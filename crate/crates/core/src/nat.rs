//! Natural transformations between data structures, and their kernel representation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::dsl::{parse_indexing, parse_structure};
use crate::error::{Error, Result};
use crate::ids::{compose, enumerate_injections, enumerate_subsets, IdSet, Injection, Label, SizeFilter};
use crate::indexing::{AlignChoice, IndexRule, IndexingSystem, Skeleton};
use crate::structures::{depth, graph_edges, Alphabet, DataStructure, Element, StructureRule, Symbol};
use crate::term::Index;

pub type Component = Arc<dyn Fn(&IdSet, &Element) -> Result<Element> + Send + Sync>;

/// A family of maps `η_a: S_a -> T_a`, one per label set.
#[derive(Clone)]
pub struct NaturalTransformation {
    pub name: String,
    pub source: DataStructure,
    pub target: DataStructure,
    component: Component,
}

impl fmt::Debug for NaturalTransformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.name, self.source, self.target)
    }
}

impl NaturalTransformation {
    pub fn new<F>(name: &str, source: DataStructure, target: DataStructure, f: F) -> Self
    where
        F: Fn(&IdSet, &Element) -> Result<Element> + Send + Sync + 'static,
    {
        NaturalTransformation { name: name.to_string(), source, target, component: Arc::new(f) }
    }

    pub fn apply(&self, a: &IdSet, x: &Element) -> Result<Element> {
        (self.component)(a, x)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &NaturalTransformation) -> Result<NaturalTransformation> {
        if self.target != other.source {
            return Err(Error::LevelMismatch(format!("{} does not feed {}", self.target, other.source)));
        }
        let (f, g) = (self.clone(), other.clone());
        Ok(NaturalTransformation::new(
            &format!("{} then {}", self.name, other.name),
            self.source.clone(),
            other.target.clone(),
            move |a, x| g.apply(a, &f.apply(a, x)?),
        ))
    }
}

#[derive(Clone)]
pub enum Kernel {
    Table(BTreeMap<Element, Symbol>),
    Func(Arc<dyn Fn(&Element) -> Result<Symbol> + Send + Sync>),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Table(t) => write!(f, "Table({} rows)", t.len()),
            Kernel::Func(_) => write!(f, "Func"),
        }
    }
}

impl Kernel {
    pub fn eval(&self, x: &Element) -> Result<Symbol> {
        match self {
            Kernel::Table(t) => t.get(x).copied().ok_or_else(|| Error::Term(format!("kernel table has no row for {x}"))),
            Kernel::Func(f) => f(x),
        }
    }
}

/// Kernels `f_ī: S_[k] -> X`, one per representative of `indexing` up to `max_size`.
#[derive(Clone, Debug)]
pub struct KernelFamily {
    pub source: DataStructure,
    pub alphabet: Alphabet,
    pub indexing: IndexingSystem,
    pub max_size: usize,
    pub kernels: BTreeMap<Index, Kernel>,
}

impl KernelFamily {
    pub fn target(&self) -> DataStructure {
        DataStructure::array(self.alphabet.clone(), self.indexing.clone())
    }

    /// Tables of every kernel, evaluated on all source elements.
    pub fn tables(&self) -> Result<BTreeMap<Index, BTreeMap<Element, Symbol>>> {
        let mut out = BTreeMap::new();
        for (rep, f) in &self.kernels {
            let k = rep.labels().len();
            let mut t = BTreeMap::new();
            for x in self.source.elements(&IdSet::standard(k))? {
                t.insert(x.clone(), f.eval(&x)?);
            }
            out.insert(rep.clone(), t);
        }
        Ok(out)
    }
}

impl KernelFamily {
    /// `{"source": DS, "alphabet": [..], "indexing": IS, "max_size": k,
    ///   "kernels": {"<rep>": [{"element": x, "value": s}, ..]}}`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let text = |key: &str| {
            v[key].as_str().ok_or_else(|| Error::Term(format!("{key} must be a string")))
        };
        let source = parse_structure(text("source")?)?;
        let indexing = parse_indexing(text("indexing")?)?;
        let symbols = v["alphabet"]
            .as_array()
            .ok_or_else(|| Error::Term("alphabet must be a list".into()))?
            .iter()
            .map(|s| s.as_i64().ok_or_else(|| Error::Term(format!("bad symbol {s}"))))
            .collect::<Result<Vec<_>>>()?;
        let alphabet = Alphabet::new(symbols)?;
        let specs = v["kernels"].as_object().ok_or_else(|| Error::Term("kernels must be an object".into()))?;
        let mut kernels = BTreeMap::new();
        let mut largest = 0;
        for (rep, rows) in specs {
            let rep = Index::parse(rep)?;
            largest = largest.max(rep.labels().len());
            let mut table = BTreeMap::new();
            for row in rows.as_array().ok_or_else(|| Error::Term("kernel rows must be a list".into()))? {
                let value = row["value"].as_i64().ok_or_else(|| Error::Term(format!("bad kernel value in {row}")))?;
                table.insert(Element::from_json(&row["element"])?, value);
            }
            kernels.insert(rep, Kernel::Table(table));
        }
        let max_size = match v.get("max_size") {
            Some(m) => m.as_u64().ok_or_else(|| Error::Term("max_size must be an integer".into()))? as usize,
            None => largest,
        };
        Ok(KernelFamily { source, alphabet, indexing, max_size, kernels })
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut kernels = serde_json::Map::new();
        for (rep, t) in self.tables()? {
            let rows: Vec<Value> = t.iter().map(|(x, s)| json!({ "element": x.to_json(), "value": s })).collect();
            kernels.insert(rep.to_string(), Value::Array(rows));
        }
        Ok(json!({
            "source": self.source.to_string(),
            "alphabet": self.alphabet.symbols(),
            "indexing": self.indexing.to_string(),
            "max_size": self.max_size,
            "kernels": kernels,
        }))
    }
}

/// Every representative has a kernel, tables cover the source, outputs lie in the
/// alphabet, and `f(D[π](x)) = f(x)` for `π ∈ stab(ī)`.
pub fn validate_kernels(family: &KernelFamily) -> Result<()> {
    let sk = Skeleton::cached(&family.indexing, family.max_size)?;
    for (rep, stab) in sk.representatives.iter().zip(&sk.stabilizers) {
        let f = family.kernels.get(rep).ok_or_else(|| Error::MissingKernel(rep.to_string()))?;
        let ground = IdSet::standard(rep.labels().len());
        let inputs = family.source.elements(&ground)?;
        for x in &inputs {
            let v = f.eval(x)?;
            if !family.alphabet.contains(v) {
                return Err(Error::Invalid(format!("kernel for {rep} outputs {v}, outside {}", family.alphabet)));
            }
        }
        for pi in stab {
            for x in &inputs {
                if f.eval(&family.source.restrict(pi, x)?)? != f.eval(x)? {
                    return Err(Error::Asymmetric {
                        rep: rep.to_string(),
                        perm: pi.images().to_vec(),
                        input: x.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// `η_{a,i} = f_{r(i)} ∘ D[π_i] ∘ D[ι_{dom(i),a}]`.
pub fn build_from_kernels(family: &KernelFamily) -> Result<NaturalTransformation> {
    build_from_kernels_with(family, AlignChoice::First)
}

pub fn build_from_kernels_with(family: &KernelFamily, choice: AlignChoice) -> Result<NaturalTransformation> {
    validate_kernels(family)?;
    let sk = Arc::new(Skeleton::build(&family.indexing, family.max_size, choice)?);
    let fam = family.clone();
    Ok(NaturalTransformation::new(
        &format!("kernels into {}", family.target()),
        family.source.clone(),
        family.target(),
        move |a, x| {
            let mut out = BTreeMap::new();
            for i in fam.indexing.indices(a)? {
                let (rep, pi) = sk.locate(&i)?;
                let f = fam.kernels.get(&rep).ok_or_else(|| Error::MissingKernel(rep.to_string()))?;
                let incl = Injection::inclusion(pi.cod(), a)?;
                let y = fam.source.restrict(&compose(&incl, &pi)?, x)?;
                out.insert(i, f.eval(&y)?);
            }
            Ok(Element::Array(out))
        },
    ))
}

/// `f_ī = η_{[k], ī}` for every representative up to `max_size`.
pub fn extract_kernels(eta: &NaturalTransformation, max_size: usize) -> Result<KernelFamily> {
    let (alphabet, indexing) = eta
        .target
        .as_array()
        .ok_or_else(|| Error::Invalid(format!("{} is not an array structure", eta.target)))?;
    let sk = Skeleton::cached(&indexing, max_size)?;
    let mut kernels = BTreeMap::new();
    for rep in &sk.representatives {
        let ground = IdSet::standard(rep.labels().len());
        let mut t = BTreeMap::new();
        for x in eta.source.elements(&ground)? {
            let y = eta.apply(&ground, &x)?;
            let v = y.entry(rep).ok_or_else(|| Error::Term(format!("{y} has no entry at {rep}")))?;
            t.insert(x, v);
        }
        kernels.insert(rep.clone(), Kernel::Table(t));
    }
    Ok(KernelFamily { source: eta.source.clone(), alphabet, indexing, max_size, kernels })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaturalityWitness {
    pub tau: Injection,
    pub element: Element,
    /// `T[τ](η_a(x))`.
    pub restricted_image: Element,
    /// `η_b(S[τ](x))`.
    pub image_of_restriction: Element,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NaturalityReport {
    pub witness: Option<NaturalityWitness>,
    pub checks: u64,
}

impl NaturalityReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// `T[τ] ∘ η_a = η_b ∘ S[τ]` for every injection between label sets in `[n_max]`.
pub fn check_naturality(eta: &NaturalTransformation, n_max: usize) -> Result<NaturalityReport> {
    let sets = enumerate_subsets(&IdSet::standard(n_max), SizeFilter::All);
    naturality_over(eta, &sets, &sets, &|_, _| true)
}

/// The same identity, only on elements `x ∈ S_[n]` with `support(n, x)`.
pub fn check_naturality_almost_surely(
    eta: &NaturalTransformation,
    n_max: usize,
    support: &dyn Fn(&IdSet, &Element) -> bool,
) -> Result<NaturalityReport> {
    let tops: Vec<IdSet> = (0..=n_max).map(IdSet::standard).collect();
    let sets = enumerate_subsets(&IdSet::standard(n_max), SizeFilter::All);
    naturality_over(eta, &tops, &sets, support)
}

fn naturality_over(
    eta: &NaturalTransformation,
    tops: &[IdSet],
    smalls: &[IdSet],
    keep: &dyn Fn(&IdSet, &Element) -> bool,
) -> Result<NaturalityReport> {
    let mut report = NaturalityReport::default();
    let mut memo: BTreeMap<(usize, Element), Element> = BTreeMap::new();
    for a in tops {
        let xs: Vec<Element> = eta.source.elements(a)?.into_iter().filter(|x| keep(a, x)).collect();
        let images: Vec<Element> = xs.iter().map(|x| eta.apply(a, x)).collect::<Result<_>>()?;
        for y in &images {
            if !eta.target.contains(a, y)? {
                return Err(Error::NotElement { set: a.labels().to_vec() });
            }
        }
        for (bi, b) in smalls.iter().enumerate() {
            for tau in enumerate_injections(b, a) {
                for (x, y) in xs.iter().zip(&images) {
                    report.checks += 1;
                    let lhs = eta.target.restrict_member(&tau, y)?;
                    let small = eta.source.restrict_member(&tau, x)?;
                    let rhs = match memo.get(&(bi, small.clone())) {
                        Some(v) => v.clone(),
                        None => {
                            let v = eta.apply(b, &small)?;
                            memo.insert((bi, small), v.clone());
                            v
                        }
                    };
                    if lhs != rhs {
                        report.witness = Some(NaturalityWitness {
                            tau,
                            element: x.clone(),
                            restricted_image: lhs,
                            image_of_restriction: rhs,
                        });
                        return Ok(report);
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Components `η_[n]` are injective for every `n <= n_max`; the first collision otherwise.
pub fn check_injective(eta: &NaturalTransformation, n_max: usize) -> Result<Option<(usize, Element, Element)>> {
    for n in 0..=n_max {
        let a = IdSet::standard(n);
        let mut seen: BTreeMap<Element, Element> = BTreeMap::new();
        for x in eta.source.elements(&a)? {
            let y = eta.apply(&a, &x)?;
            if let Some(prev) = seen.insert(y, x.clone()) {
                return Ok(Some((n, prev, x)));
            }
        }
    }
    Ok(None)
}

/// `D -> array(codes, dtuples_star)`, with `f_k(x)` the position of `x` in `D_[k]`.
pub fn universal_embedding(d: &DataStructure, n_max: usize) -> Result<NaturalTransformation> {
    let mut kernels = BTreeMap::new();
    let mut width = 1;
    for k in 0..=n_max {
        let xs = d.elements(&IdSet::standard(k))?;
        width = width.max(xs.len());
        let table = xs.into_iter().enumerate().map(|(p, x)| (x, p as Symbol)).collect();
        kernels.insert(Index::label_tuple(&(1..=k as Label).collect::<Vec<_>>()), Kernel::Table(table));
    }
    let family = KernelFamily {
        source: d.clone(),
        alphabet: Alphabet::range(width),
        indexing: IndexingSystem::DTuplesStar,
        max_size: n_max,
        kernels,
    };
    let eta = build_from_kernels(&family)?;
    Ok(NaturalTransformation { name: format!("universal embedding of {d}"), ..eta })
}

fn atom_of(indexing: &IndexingSystem, probe: usize) -> Result<(Index, usize)> {
    let sk = Skeleton::cached(indexing, probe)?;
    match sk.representatives.as_slice() {
        [rep] => Ok((rep.clone(), rep.labels().len())),
        reps => Err(Error::Invalid(format!("{indexing} has {} representatives up to size {probe}, not one", reps.len()))),
    }
}

/// For atomic `I` with representative of size `k`:
/// `φ¹: array(X, subsets(k)) -> array(X, I)`, `x ↦ (x(dom i))_i`, and
/// `φ²: array(X, I) -> array(X, dtuples(k))`, `x ↦ (x(I[τ_j](ī)))_j`.
pub fn embed_atomic(
    alphabet: &Alphabet,
    indexing: &IndexingSystem,
    probe: usize,
) -> Result<(NaturalTransformation, NaturalTransformation)> {
    let (rep, k) = atom_of(indexing, probe)?;
    let ground = IdSet::standard(k);
    let whole = Index::label_set(ground.labels());
    let src1 = DataStructure::array(alphabet.clone(), IndexingSystem::Subsets(k));
    let phi1 = build_table_family(src1, alphabet, indexing.clone(), k, &rep, move |x| x.entry(&whole))?;
    let src2 = DataStructure::array(alphabet.clone(), indexing.clone());
    let r = rep.clone();
    let phi2 = build_table_family(
        src2,
        alphabet,
        IndexingSystem::DTuples(k),
        k,
        &Index::label_tuple(ground.labels()),
        move |x| x.entry(&r),
    )?;
    Ok((phi1, phi2))
}

fn build_table_family(
    source: DataStructure,
    alphabet: &Alphabet,
    indexing: IndexingSystem,
    k: usize,
    rep: &Index,
    f: impl Fn(&Element) -> Option<Symbol>,
) -> Result<NaturalTransformation> {
    let mut table = BTreeMap::new();
    for x in source.elements(&IdSet::standard(k))? {
        let v = f(&x).ok_or_else(|| Error::Term(format!("{x} lacks the kernel coordinate")))?;
        table.insert(x, v);
    }
    let family = KernelFamily {
        source,
        alphabet: alphabet.clone(),
        indexing,
        max_size: k,
        kernels: BTreeMap::from([(rep.clone(), Kernel::Table(table))]),
    };
    build_from_kernels(&family)
}

/// `r: array(G, powerset) -> array(G, subsets_le(k))`, dropping coordinates of subsets larger than `k`.
pub fn depth_projection(grid: &Alphabet, k: usize) -> NaturalTransformation {
    let source = DataStructure::array(grid.clone(), IndexingSystem::Powerset);
    let target = DataStructure::array(grid.clone(), IndexingSystem::SubsetsLe(k));
    NaturalTransformation::new(&format!("drop subsets above {k}"), source, target, move |_, x| match x {
        Element::Array(m) => Ok(Element::Array(
            m.iter().filter(|(e, _)| e.labels().len() <= k).map(|(e, v)| (e.clone(), *v)).collect(),
        )),
        _ => Err(Error::Term(format!("{x} is not an array"))),
    })
}

/// For `η` from a grid randomizer `array(G, powerset)` into a structure of depth at most `k`,
/// the rule `η̃` on `array(G, subsets_le(k))` with `η = η̃ ∘ r`. The depth must be certified
/// or verified by enumeration up to `n_max`.
pub fn depth_restrict(eta: &NaturalTransformation, k: usize, n_max: usize) -> Result<NaturalTransformation> {
    let grid = match &eta.source {
        DataStructure::Array { alphabet, indexing: IndexingSystem::Powerset } => alphabet.clone(),
        other => return Err(Error::Invalid(format!("{other} is not a grid randomizer array(G,powerset)"))),
    };
    let d = depth(&eta.target, n_max)?;
    if d.k > k {
        return Err(Error::Invalid(format!("{} has depth {} > {k}", eta.target, d.k)));
    }
    let fill = grid.symbols()[0];
    let inner = eta.clone();
    Ok(NaturalTransformation::new(
        &format!("{} restricted to depth {k}", eta.name),
        DataStructure::array(grid, IndexingSystem::SubsetsLe(k)),
        eta.target.clone(),
        move |a, v| {
            let Element::Array(m) = v else {
                return Err(Error::Term(format!("{v} is not an array")));
            };
            let mut full = BTreeMap::new();
            for e in IndexingSystem::Powerset.indices(a)? {
                let val = m.get(&e).copied().unwrap_or(fill);
                full.insert(e, val);
            }
            inner.apply(a, &Element::Array(full))
        },
    ))
}

pub fn graph1_to_graph2() -> NaturalTransformation {
    NaturalTransformation::new("edge indicator", DataStructure::Graph1, DataStructure::Graph2, |a, x| {
        let edges = graph_edges(a, x).ok_or_else(|| Error::NotElement { set: a.labels().to_vec() })?;
        Ok(Element::Array(
            IndexingSystem::Subsets(2)
                .indices(a)?
                .into_iter()
                .map(|e| {
                    let l: Vec<Label> = e.labels().into_iter().collect();
                    let v = edges.contains(&(l[0], l[1])) as Symbol;
                    (e, v)
                })
                .collect(),
        ))
    })
}

pub fn graph2_to_graph3() -> NaturalTransformation {
    NaturalTransformation::new("adjacency matrix", DataStructure::Graph2, DataStructure::Graph3, |a, x| {
        let mut m = BTreeMap::new();
        for i in a.iter() {
            for j in a.iter() {
                let v = if i == j { 0 } else { x.entry(&Index::label_set(&[i, j])).unwrap_or(0) };
                m.insert(Index::label_tuple(&[i, j]), v);
            }
        }
        Ok(Element::Array(m))
    })
}

pub fn graph3_to_graph1() -> NaturalTransformation {
    NaturalTransformation::new("edge set", DataStructure::Graph3, DataStructure::Graph1, |a, x| {
        let mut edges = BTreeSet::new();
        for i in a.iter() {
            for j in a.iter() {
                if i < j
                    && x.entry(&Index::label_tuple(&[i, j])) == Some(1)
                    && x.entry(&Index::label_tuple(&[j, i])) == Some(1)
                {
                    edges.insert((i, j));
                }
            }
        }
        Ok(Element::Graph { vertices: a.clone(), edges })
    })
}

/// Order labels by their value, breaking ties by label. Natural only off ties.
pub fn order_from_values(grid: usize) -> NaturalTransformation {
    NaturalTransformation::new(
        "order by value",
        DataStructure::sequence(Alphabet::range(grid)),
        DataStructure::Total,
        |a, x| {
            let mut labels: Vec<Label> = a.labels().to_vec();
            labels.sort_by_key(|&l| (x.entry(&Index::Atom(l)).unwrap_or(0), l));
            Ok(Element::total_order(&labels))
        },
    )
}
