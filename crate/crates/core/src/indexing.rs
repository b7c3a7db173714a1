//! Indexing systems: functors assigning a finite set of indices to each label set.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::ids::{
    binomial, enumerate_bijections, enumerate_injections, enumerate_subsets, factorial, falling_factorial,
    permutations, IdSet, Injection, Label, SizeFilter,
};
use crate::term::Index;

/// Largest index set that will be materialized.
pub const INDEX_BOUND: u128 = 1 << 20;

/// Anything that behaves like an indexing system. The built-in expression
/// language implements this, as do atoms and test fixtures.
pub trait IndexRule {
    /// `I_b`, sorted in canonical order.
    fn indices(&self, b: &IdSet) -> Result<Vec<Index>>;

    fn contains(&self, b: &IdSet, i: &Index) -> Result<bool> {
        Ok(self.indices(b)?.binary_search(i).is_ok())
    }

    /// `I[tau](i)` for `i` in `I_{dom tau}`.
    fn apply(&self, tau: &Injection, i: &Index) -> Result<Index>;

    fn describe(&self) -> String;
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexingSystem {
    Id,
    Powerset,
    Subsets(usize),
    SubsetsLe(usize),
    Tuples(usize),
    DTuples(usize),
    DTuplesStar,
    Pair(usize),
    Product(Box<IndexingSystem>, Box<IndexingSystem>),
    Coproduct(Box<IndexingSystem>, Box<IndexingSystem>),
    Compose(Box<IndexingSystem>, Box<IndexingSystem>),
}

use IndexingSystem as IS;

impl IndexingSystem {
    pub fn product(a: IS, b: IS) -> IS {
        IS::Product(Box::new(a), Box::new(b))
    }

    pub fn coproduct(a: IS, b: IS) -> IS {
        IS::Coproduct(Box::new(a), Box::new(b))
    }

    /// `(I ∘ J)_a = I_{J_a}`.
    pub fn compose(outer: IS, inner: IS) -> IS {
        IS::Compose(Box::new(outer), Box::new(inner))
    }

    /// Number of indices over `n` atoms, or `None` on overflow.
    pub fn count_over(&self, n: usize) -> Option<u128> {
        match self {
            IS::Id => Some(n as u128),
            IS::Powerset => 1u128.checked_shl(u32::try_from(n).ok()?).filter(|_| n < 127),
            IS::Subsets(k) => Some(binomial(n, *k)),
            IS::SubsetsLe(k) => Some((0..=*k).map(|j| binomial(n, j)).sum()),
            IS::Tuples(k) => (n as u128).checked_pow(*k as u32),
            IS::DTuples(k) => Some(falling_factorial(n, *k)),
            IS::DTuplesStar => {
                if n > 30 {
                    return None;
                }
                Some((0..=n).map(|j| falling_factorial(n, j)).sum())
            }
            IS::Pair(k) => Some((n * k) as u128),
            IS::Product(a, b) => a.count_over(n)?.checked_mul(b.count_over(n)?),
            IS::Coproduct(a, b) => a.count_over(n)?.checked_add(b.count_over(n)?),
            IS::Compose(outer, inner) => {
                let m = inner.count_over(n)?;
                outer.count_over(usize::try_from(m).ok()?)
            }
        }
    }

    /// Upper bound on `|dom(i)|` over all indices, or `None` when unbounded.
    pub fn max_dom_size(&self) -> Option<usize> {
        match self {
            IS::Id | IS::Pair(_) => Some(1),
            IS::Powerset | IS::DTuplesStar => None,
            IS::Subsets(k) | IS::SubsetsLe(k) | IS::Tuples(k) | IS::DTuples(k) => Some(*k),
            IS::Product(a, b) | IS::Coproduct(a, b) => Some(a.max_dom_size()?.max(b.max_dom_size()?)),
            IS::Compose(outer, inner) => match (outer.max_dom_size(), inner.max_dom_size()) {
                (Some(0), _) | (_, Some(0)) => Some(0),
                (Some(p), Some(q)) => Some(p * q),
                _ => None,
            },
        }
    }

    fn enumerate_over(&self, atoms: &[Index]) -> Result<Vec<Index>> {
        let size = self.count_over(atoms.len()).unwrap_or(u128::MAX);
        if size > INDEX_BOUND {
            return Err(Error::TooLarge { what: format!("indices of {self}"), size, bound: INDEX_BOUND });
        }
        let mut out = match self {
            IS::Id => atoms.to_vec(),
            IS::Powerset => {
                let n = atoms.len();
                (0u64..1 << n)
                    .map(|m| Index::set((0..n).filter(|p| m >> p & 1 == 1).map(|p| atoms[p].clone())))
                    .collect()
            }
            IS::Subsets(k) => subsets_of(atoms, *k, *k),
            IS::SubsetsLe(k) => subsets_of(atoms, 0, *k),
            IS::Tuples(k) => {
                let mut out = vec![Vec::new()];
                for _ in 0..*k {
                    out = out
                        .into_iter()
                        .flat_map(|t: Vec<Index>| {
                            atoms.iter().map(move |x| {
                                let mut t = t.clone();
                                t.push(x.clone());
                                t
                            })
                        })
                        .collect();
                }
                out.into_iter().map(Index::Tuple).collect()
            }
            IS::DTuples(k) => distinct_tuples(atoms, *k, *k),
            IS::DTuplesStar => distinct_tuples(atoms, 0, atoms.len()),
            IS::Pair(k) => (1..=*k as u32)
                .flat_map(|l| atoms.iter().map(move |x| Index::tagged(l, x.clone())))
                .collect(),
            IS::Product(a, b) => {
                let left = a.enumerate_over(atoms)?;
                let right = b.enumerate_over(atoms)?;
                let mut out = Vec::with_capacity(left.len() * right.len());
                for x in &left {
                    for y in &right {
                        out.push(Index::Tuple(vec![x.clone(), y.clone()]));
                    }
                }
                out
            }
            IS::Coproduct(a, b) => {
                let mut out: Vec<Index> = a.enumerate_over(atoms)?.into_iter().map(|x| Index::tagged(1, x)).collect();
                out.extend(b.enumerate_over(atoms)?.into_iter().map(|x| Index::tagged(2, x)));
                out
            }
            IS::Compose(outer, inner) => outer.enumerate_over(&inner.enumerate_over(atoms)?)?,
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn member_over(&self, i: &Index, atom_ok: &dyn Fn(&Index) -> bool) -> bool {
        let all = |items: &mut dyn Iterator<Item = &Index>| {
            for x in items {
                if !atom_ok(x) {
                    return false;
                }
            }
            true
        };
        match (self, i) {
            (IS::Id, x) => atom_ok(x),
            (IS::Powerset, Index::Set(s)) => all(&mut s.iter()),
            (IS::Subsets(k), Index::Set(s)) => s.len() == *k && all(&mut s.iter()),
            (IS::SubsetsLe(k), Index::Set(s)) => s.len() <= *k && all(&mut s.iter()),
            (IS::Tuples(k), Index::Tuple(t)) => t.len() == *k && all(&mut t.iter()),
            (IS::DTuples(k), Index::Tuple(t)) => t.len() == *k && distinct(t) && all(&mut t.iter()),
            (IS::DTuplesStar, Index::Tuple(t)) => distinct(t) && all(&mut t.iter()),
            (IS::Pair(k), Index::Tagged(l, x)) => (1..=*k as u32).contains(l) && atom_ok(x),
            (IS::Product(a, b), Index::Tuple(t)) => {
                t.len() == 2 && a.member_over(&t[0], atom_ok) && b.member_over(&t[1], atom_ok)
            }
            (IS::Coproduct(a, _), Index::Tagged(1, x)) => a.member_over(x, atom_ok),
            (IS::Coproduct(_, b), Index::Tagged(2, x)) => b.member_over(x, atom_ok),
            (IS::Compose(outer, inner), x) => outer.member_over(x, &|j| inner.member_over(j, atom_ok)),
            _ => false,
        }
    }

    fn map_over(&self, i: &Index, f: &dyn Fn(&Index) -> Result<Index>) -> Result<Index> {
        let shape = || Error::Term(format!("{i} does not have the shape of an index of {self}"));
        Ok(match (self, i) {
            (IS::Id, x) => f(x)?,
            (IS::Powerset | IS::Subsets(_) | IS::SubsetsLe(_), Index::Set(s)) => {
                Index::Set(s.iter().map(f).collect::<Result<BTreeSet<_>>>()?)
            }
            (IS::Tuples(_) | IS::DTuples(_) | IS::DTuplesStar, Index::Tuple(t)) => {
                Index::Tuple(t.iter().map(f).collect::<Result<Vec<_>>>()?)
            }
            (IS::Pair(_), Index::Tagged(l, x)) => Index::tagged(*l, f(x)?),
            (IS::Product(a, b), Index::Tuple(t)) if t.len() == 2 => {
                Index::Tuple(vec![a.map_over(&t[0], f)?, b.map_over(&t[1], f)?])
            }
            (IS::Coproduct(a, _), Index::Tagged(1, x)) => Index::tagged(1, a.map_over(x, f)?),
            (IS::Coproduct(_, b), Index::Tagged(2, x)) => Index::tagged(2, b.map_over(x, f)?),
            (IS::Compose(outer, inner), x) => outer.map_over(x, &|j| inner.map_over(j, f))?,
            _ => return Err(shape()),
        })
    }

    /// `I[tau](i)` without checking `i ∈ I_{dom tau}`; labels outside `dom tau` are an error.
    pub fn apply_unchecked(&self, tau: &Injection, i: &Index) -> Result<Index> {
        self.map_over(i, &|x| match x {
            Index::Atom(l) => tau.apply(*l).map(Index::Atom).ok_or_else(|| Error::NotMember {
                index: i.to_string(),
                set: tau.dom().labels().to_vec(),
            }),
            other => Err(Error::Term(format!("expected a label, found {other}"))),
        })
    }

    pub fn is_member(&self, b: &IdSet, i: &Index) -> bool {
        self.member_over(i, &|x| matches!(x, Index::Atom(l) if b.contains(*l)))
    }

    /// `dom(i)`: the least label set whose index set contains `i`.
    pub fn dom(&self, i: &Index) -> Result<IdSet> {
        let support: IdSet = i.labels().into_iter().collect();
        if !self.is_member(&support, i) {
            return Err(Error::NotMember { index: i.to_string(), set: support.labels().to_vec() });
        }
        Ok(support)
    }
}

fn distinct(t: &[Index]) -> bool {
    let s: BTreeSet<&Index> = t.iter().collect();
    s.len() == t.len()
}

fn subsets_of(atoms: &[Index], lo: usize, hi: usize) -> Vec<Index> {
    let n = atoms.len();
    let positions = IdSet::standard(n);
    enumerate_subsets(&positions, SizeFilter::AtMost(hi))
        .into_iter()
        .filter(|s| s.len() >= lo)
        .map(|s| Index::set(s.iter().map(|p| atoms[p as usize - 1].clone())))
        .collect()
}

fn distinct_tuples(atoms: &[Index], lo: usize, hi: usize) -> Vec<Index> {
    let positions = IdSet::standard(atoms.len());
    let mut out = Vec::new();
    for k in lo..=hi.min(atoms.len()) {
        for tau in enumerate_injections(&IdSet::standard(k), &positions) {
            out.push(Index::Tuple(tau.images().iter().map(|&p| atoms[p as usize - 1].clone()).collect()));
        }
    }
    out
}

impl IndexRule for IndexingSystem {
    fn indices(&self, b: &IdSet) -> Result<Vec<Index>> {
        self.enumerate_over(&Index::atoms(b.labels()))
    }

    fn contains(&self, b: &IdSet, i: &Index) -> Result<bool> {
        Ok(self.is_member(b, i))
    }

    fn apply(&self, tau: &Injection, i: &Index) -> Result<Index> {
        if !self.is_member(tau.dom(), i) {
            return Err(Error::NotMember { index: i.to_string(), set: tau.dom().labels().to_vec() });
        }
        self.apply_unchecked(tau, i)
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for IndexingSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IS::Id => write!(f, "id"),
            IS::Powerset => write!(f, "powerset"),
            IS::Subsets(k) => write!(f, "subsets({k})"),
            IS::SubsetsLe(k) => write!(f, "subsets_le({k})"),
            IS::Tuples(k) => write!(f, "tuples({k})"),
            IS::DTuples(k) => write!(f, "dtuples({k})"),
            IS::DTuplesStar => write!(f, "dtuples_star"),
            IS::Pair(k) => write!(f, "pair({k})"),
            IS::Product(a, b) => write!(f, "product({a},{b})"),
            IS::Coproduct(a, b) => write!(f, "coproduct({a},{b})"),
            IS::Compose(a, b) => write!(f, "compose({a},{b})"),
        }
    }
}

/// `I[tau](i)`, checking that `i ∈ I_{dom tau}`.
pub fn apply_index<R: IndexRule + ?Sized>(r: &R, tau: &Injection, i: &Index) -> Result<Index> {
    r.apply(tau, i)
}

/// `dom(i)` by searching subsets of `ambient`: the intersection of all `b ⊆ ambient` with `i ∈ I_b`.
pub fn dom_by_search<R: IndexRule + ?Sized>(r: &R, i: &Index, ambient: &IdSet) -> Result<IdSet> {
    let mut acc: Option<IdSet> = None;
    for b in enumerate_subsets(ambient, SizeFilter::All) {
        if r.contains(&b, i)? {
            acc = Some(match acc {
                None => b,
                Some(d) => d.intersection(&b),
            });
        }
    }
    acc.ok_or_else(|| Error::NotMember { index: i.to_string(), set: ambient.labels().to_vec() })
}

/// Permutations of `dom(i)` fixing `i`.
pub fn stab(is: &IndexingSystem, i: &Index) -> Result<Vec<Injection>> {
    let d = is.dom(i)?;
    let mut out = Vec::new();
    for pi in permutations(&d) {
        if is.apply_unchecked(&pi, i)? == *i {
            out.push(pi);
        }
    }
    Ok(out)
}

/// Which minimizing normalization to keep when several attain the canonical minimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlignChoice {
    First,
    Last,
}

/// The representative of `i` and an alignment `pi: [k] -> dom(i)` with `I[pi](rep) = i`.
pub fn normalize<R: IndexRule + ?Sized>(
    r: &R,
    i: &Index,
    dom: &IdSet,
    choice: AlignChoice,
) -> Result<(Index, Injection)> {
    let target = IdSet::standard(dom.len());
    let mut best: Option<(Index, Injection)> = None;
    for sigma in enumerate_bijections(dom, &target) {
        let j = r.apply(&sigma, i)?;
        let better = match &best {
            None => true,
            Some((b, _)) => match choice {
                AlignChoice::First => j < *b,
                AlignChoice::Last => j <= *b,
            },
        };
        if better {
            best = Some((j, sigma));
        }
    }
    let (rep, sigma) = best.expect("a bijection always exists between equal-size sets");
    Ok((rep, sigma.inverse()?))
}

/// Orbit representatives of indices with `|dom| <= max_size`, their stabilizers, and alignment.
#[derive(Clone, Debug)]
pub struct Skeleton {
    pub system: IndexingSystem,
    pub max_size: usize,
    pub representatives: Vec<Index>,
    pub stabilizers: Vec<Vec<Injection>>,
    pub choice: AlignChoice,
}

impl Skeleton {
    pub fn build(system: &IndexingSystem, max_size: usize, choice: AlignChoice) -> Result<Self> {
        let mut reps = Vec::new();
        for k in 0..=max_size {
            let ground = IdSet::standard(k);
            let mut found = BTreeSet::new();
            for i in system.indices(&ground)? {
                if system.dom(&i)? == ground {
                    found.insert(normalize(system, &i, &ground, choice)?.0);
                }
            }
            reps.extend(found);
        }
        let stabilizers = reps.iter().map(|r| stab(system, r)).collect::<Result<Vec<_>>>()?;
        Ok(Skeleton { system: system.clone(), max_size, representatives: reps, stabilizers, choice })
    }

    /// Memoized build with the default alignment choice.
    pub fn cached(system: &IndexingSystem, max_size: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(IndexingSystem, usize), Arc<Skeleton>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(s) = cache.lock().unwrap().get(&(system.clone(), max_size)) {
            return Ok(s.clone());
        }
        let built = Arc::new(Skeleton::build(system, max_size, AlignChoice::First)?);
        cache.lock().unwrap().insert((system.clone(), max_size), built.clone());
        Ok(built)
    }

    /// `(rep_of(i), align_of(i))`.
    pub fn locate(&self, i: &Index) -> Result<(Index, Injection)> {
        let d = self.system.dom(i)?;
        normalize(&self.system, i, &d, self.choice)
    }

    pub fn rep_of(&self, i: &Index) -> Result<Index> {
        Ok(self.locate(i)?.0)
    }

    pub fn align_of(&self, i: &Index) -> Result<Injection> {
        Ok(self.locate(i)?.1)
    }

    pub fn position(&self, rep: &Index) -> Option<usize> {
        self.representatives.iter().position(|r| r == rep)
    }

    pub fn stabilizer(&self, rep: &Index) -> Option<&[Injection]> {
        self.position(rep).map(|p| self.stabilizers[p].as_slice())
    }

    pub fn max_representative_size(&self) -> usize {
        self.representatives.iter().map(|r| r.labels().len()).max().unwrap_or(0)
    }
}

pub fn skeleton(system: &IndexingSystem, max_size: usize) -> Result<Arc<Skeleton>> {
    Skeleton::cached(system, max_size)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    Functoriality,
    Intersection,
    Inclusion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub sets: Vec<IdSet>,
    pub index: Option<Index>,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
    pub checks: u64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self, axiom: Axiom) -> Option<&AxiomViolation> {
        self.violations.iter().find(|v| v.axiom == axiom)
    }
}

const VIOLATION_CAP: usize = 16;

fn sorted_meet<'a>(left: &'a [Index], right: &[Index]) -> Vec<&'a Index> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < left.len() && j < right.len() {
        match left[i].cmp(&right[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(&left[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Exhaustive check of the three indexing-system axioms over all label sets in `[n_max]`.
/// Up to a fixed number of violations per axiom are collected, in enumeration order.
pub fn check_axioms<R: IndexRule + ?Sized>(r: &R, n_max: usize) -> Result<AxiomReport> {
    let sets = enumerate_subsets(&IdSet::standard(n_max), SizeFilter::All);
    let index_sets: Vec<Vec<Index>> = sets.iter().map(|s| r.indices(s)).collect::<Result<_>>()?;
    let at = |s: &IdSet| sets.iter().position(|t| t == s).unwrap();
    let mut report = AxiomReport::default();
    let mut counts = [0usize; 3];
    let mut push = |report: &mut AxiomReport, v: AxiomViolation| {
        let slot = v.axiom as usize;
        if counts[slot] < VIOLATION_CAP {
            counts[slot] += 1;
            report.violations.push(v);
        }
    };

    for (ci, c) in sets.iter().enumerate() {
        for i in &index_sets[ci] {
            report.checks += 1;
            if r.apply(&Injection::identity(c), i)? != *i {
                push(&mut report, AxiomViolation {
                    axiom: Axiom::Functoriality,
                    sets: vec![c.clone()],
                    index: Some(i.clone()),
                    detail: "identity does not act trivially".into(),
                });
            }
        }
    }
    let lookup: Vec<HashMap<Vec<u8>, usize>> = index_sets
        .iter()
        .map(|v| v.iter().enumerate().map(|(p, i)| (i.canonical_bytes(), p)).collect())
        .collect();
    // Images of I_c under an injection out of c, as positions in the codomain's index list.
    let mut images: HashMap<(usize, Injection), Arc<Vec<Option<usize>>>> = HashMap::new();
    let mut moved_by = |ci: usize, tau: &Injection| -> Result<Arc<Vec<Option<usize>>>> {
        if let Some(v) = images.get(&(ci, tau.clone())) {
            return Ok(v.clone());
        }
        let table = &lookup[at(tau.cod())];
        let v = index_sets[ci]
            .iter()
            .map(|i| Ok(table.get(&r.apply(tau, i)?.canonical_bytes()).copied()))
            .collect::<Result<Vec<_>>>()?;
        let v = Arc::new(v);
        images.insert((ci, tau.clone()), v.clone());
        Ok(v)
    };
    for (ci, c) in sets.iter().enumerate() {
        for (bi, b) in sets.iter().enumerate() {
            for tau in enumerate_injections(c, b) {
                let moved = moved_by(ci, &tau)?;
                for (i, p) in index_sets[ci].iter().zip(moved.iter()) {
                    if p.is_none() {
                        push(&mut report, AxiomViolation {
                            axiom: Axiom::Functoriality,
                            sets: vec![c.clone(), b.clone()],
                            index: Some(i.clone()),
                            detail: format!("image {} under {tau} is not an index over the codomain", r.apply(&tau, i)?),
                        });
                    }
                }
                for (ai, a) in sets.iter().enumerate() {
                    for sigma in enumerate_injections(b, a) {
                        let st = crate::ids::compose(&sigma, &tau)?;
                        let one = moved_by(ci, &st)?;
                        let further = moved_by(bi, &sigma)?;
                        for (k, i) in index_sets[ci].iter().enumerate() {
                            report.checks += 1;
                            let Some(p) = moved[k] else { continue };
                            if further[p] != one[k] {
                                let show = |x: Option<usize>| x.map_or("nothing".to_string(), |q| index_sets[ai][q].to_string());
                                push(&mut report, AxiomViolation {
                                    axiom: Axiom::Functoriality,
                                    sets: vec![c.clone(), b.clone(), a.clone()],
                                    index: Some(i.clone()),
                                    detail: format!(
                                        "I[{sigma}]I[{tau}] gives {}, I[composite] gives {}",
                                        show(further[p]),
                                        show(one[k])
                                    ),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    for (ai, a) in sets.iter().enumerate() {
        for (bi, b) in sets.iter().enumerate() {
            report.checks += 1;
            let meet = sorted_meet(&index_sets[ai], &index_sets[bi]);
            let expected: Vec<&Index> = index_sets[at(&a.intersection(b))].iter().collect();
            if meet != expected {
                let (m, e): (BTreeSet<&Index>, BTreeSet<&Index>) = (meet.into_iter().collect(), expected.into_iter().collect());
                let extra: Vec<String> = m.symmetric_difference(&e).map(|x| x.to_string()).collect();
                push(&mut report, AxiomViolation {
                    axiom: Axiom::Intersection,
                    sets: vec![a.clone(), b.clone()],
                    index: None,
                    detail: format!("I_a ∩ I_b and I_(a∩b) differ on {}", extra.join(" ")),
                });
            }
        }
    }
    for (bi, b) in sets.iter().enumerate() {
        for (ai, a) in sets.iter().enumerate() {
            if !b.is_subset(a) {
                continue;
            }
            let incl = Injection::inclusion(b, a)?;
            for i in &index_sets[bi] {
                report.checks += 1;
                let j = r.apply(&incl, i)?;
                if j != *i || index_sets[ai].binary_search(i).is_err() {
                    push(&mut report, AxiomViolation {
                        axiom: Axiom::Inclusion,
                        sets: vec![b.clone(), a.clone()],
                        index: Some(i.clone()),
                        detail: format!("inclusion sends {i} to {j}"),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// One orbit of a parent system: the indices whose representative is `rep`.
#[derive(Clone, Debug)]
pub struct AtomicSystem {
    pub parent: IndexingSystem,
    pub rep: Index,
    skeleton: Arc<Skeleton>,
}

impl AtomicSystem {
    pub fn rep_size(&self) -> usize {
        self.rep.labels().len()
    }

    pub fn stabilizer_order(&self) -> usize {
        self.skeleton.stabilizer(&self.rep).map_or(0, |s| s.len())
    }

    /// `|I_a| = (k! / |stab|) * C(|a|, k)`.
    pub fn predicted_size(&self, n: usize) -> u128 {
        let k = self.rep_size();
        factorial(k) / self.stabilizer_order() as u128 * binomial(n, k)
    }
}

impl IndexRule for AtomicSystem {
    fn indices(&self, b: &IdSet) -> Result<Vec<Index>> {
        let mut out = Vec::new();
        for i in self.parent.indices(b)? {
            if self.skeleton.rep_of(&i)? == self.rep {
                out.push(i);
            }
        }
        Ok(out)
    }

    fn contains(&self, b: &IdSet, i: &Index) -> Result<bool> {
        Ok(self.parent.is_member(b, i) && self.skeleton.rep_of(i)? == self.rep)
    }

    fn apply(&self, tau: &Injection, i: &Index) -> Result<Index> {
        if !self.contains(tau.dom(), i)? {
            return Err(Error::NotMember { index: i.to_string(), set: tau.dom().labels().to_vec() });
        }
        self.parent.apply_unchecked(tau, i)
    }

    fn describe(&self) -> String {
        format!("atom {} of {}", self.rep, self.parent)
    }
}

/// Split `I` into one atomic system per representative of size at most `max_size`.
pub fn atomic_decompose(system: &IndexingSystem, max_size: usize) -> Result<Vec<AtomicSystem>> {
    let sk = Skeleton::cached(system, max_size)?;
    Ok(sk
        .representatives
        .iter()
        .map(|r| AtomicSystem { parent: system.clone(), rep: r.clone(), skeleton: sk.clone() })
        .collect())
}

/// An index of `compose(powerset, dtuples_star)` over `[k]` whose stabilizer is exactly `group`.
pub fn group_index(group: &[Injection]) -> Index {
    Index::set(group.iter().map(|pi| Index::label_tuple(pi.images())))
}

/// `I_b = b` when `|b| >= threshold`, else empty. A functor that is not an indexing system.
#[derive(Clone, Debug)]
pub struct SizeGatedIdentity {
    pub threshold: usize,
}

impl IndexRule for SizeGatedIdentity {
    fn indices(&self, b: &IdSet) -> Result<Vec<Index>> {
        Ok(if b.len() >= self.threshold { Index::atoms(b.labels()) } else { Vec::new() })
    }

    fn apply(&self, tau: &Injection, i: &Index) -> Result<Index> {
        match i {
            Index::Atom(l) if tau.dom().len() >= self.threshold => tau
                .apply(*l)
                .map(Index::Atom)
                .ok_or_else(|| Error::NotMember { index: i.to_string(), set: tau.dom().labels().to_vec() }),
            _ => Err(Error::NotMember { index: i.to_string(), set: tau.dom().labels().to_vec() }),
        }
    }

    fn describe(&self) -> String {
        format!("size-gated identity (threshold {})", self.threshold)
    }
}

/// The labels of a tuple index, when every entry is an atom.
pub fn tuple_labels(i: &Index) -> Option<Vec<Label>> {
    match i {
        Index::Tuple(t) => t
            .iter()
            .map(|x| match x {
                Index::Atom(l) => Some(*l),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}
