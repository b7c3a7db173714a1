//! Exchangeable sampling from keyed uniform randomizers.
//!
//! `U_e` for a finite label set `e` is a deterministic function of `(seed, e)`, so the
//! uniforms seen by `[3]` are exactly those seen by `[8]` restricted to `[3]`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::ids::{IdSet, Injection, Label};
use crate::indexing::{IndexRule, IndexingSystem, Skeleton};
use crate::laws::{FiniteLaw, Mass};
use crate::structures::{Alphabet, DataStructure, Element, StructureRule, Symbol};
use crate::term::Index;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A seed for the `j`-th of several independent draws.
pub fn derive_seed(seed: u64, j: u64) -> u64 {
    splitmix(splitmix(seed) ^ splitmix(j.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

fn keyed(seed: u64, tag: u64, e: &IdSet) -> u64 {
    let mut h = splitmix(seed ^ tag);
    for l in e.iter() {
        h = splitmix(h ^ (u64::from(l) + 1));
    }
    splitmix(h ^ (e.len() as u64).rotate_left(32))
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `U_e` for every finite `e`.
    Full,
    /// Only `|e| <= k`.
    Depth(usize),
    /// No `U_∅`.
    Ergodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Randomizer {
    pub seed: u64,
    pub mode: Mode,
}

const UNIFORM_TAG: u64 = 0x243f_6a88_85a3_08d3;
const MEASUREMENT_TAG: u64 = 0x1319_8a2e_0370_7344;

impl Randomizer {
    pub fn new(seed: u64, mode: Mode) -> Self {
        Randomizer { seed, mode }
    }

    pub fn full(seed: u64) -> Self {
        Randomizer::new(seed, Mode::Full)
    }

    /// `U_e ∈ [0, 1)`.
    pub fn value(&self, e: &IdSet) -> Result<f64> {
        match self.mode {
            Mode::Depth(k) if e.len() > k => {
                return Err(Error::Invalid(format!("depth-{k} randomizer has no coordinate for {e}")))
            }
            Mode::Ergodic if e.is_empty() => {
                return Err(Error::Invalid("ergodic randomizer has no coordinate for the empty set".into()))
            }
            _ => {}
        }
        Ok(unit(keyed(self.seed, UNIFORM_TAG, e)))
    }
}

/// Kernel input on `[k]`: the uniforms `u(e) = U_{π(e)}` for `e ⊆ [k]`, by bitmask.
#[derive(Clone, Debug)]
pub struct Uniforms {
    k: usize,
    values: Vec<Option<f64>>,
}

impl Uniforms {
    pub fn from_values(k: usize, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != 1 << k {
            return Err(Error::Arity(format!("{} uniforms for 2^{k} subsets", values.len())));
        }
        Ok(Uniforms { k, values })
    }

    fn fetch(r: &Randomizer, pi: &Injection) -> Result<Self> {
        let k = pi.dom().len();
        let ground = pi.dom();
        let mut values = Vec::with_capacity(1 << k);
        for mask in 0u64..1 << k {
            let e = IdSet::from_mask(ground, mask);
            let image: IdSet = e.iter().map(|l| pi.apply(l).unwrap()).collect();
            values.push(match (r.mode, image.is_empty()) {
                (Mode::Ergodic, true) => None,
                _ => Some(r.value(&image)?),
            });
        }
        Ok(Uniforms { k, values })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, e: &IdSet) -> Result<f64> {
        let ground = IdSet::standard(self.k);
        if !e.is_subset(&ground) {
            return Err(Error::Invalid(format!("{e} is not a subset of [{}]", self.k)));
        }
        self.values[e.mask_in(&ground) as usize]
            .ok_or_else(|| Error::Invalid(format!("no uniform for {e} in this mode")))
    }

    /// `u ∘ im(π)` for a permutation `π` of `[k]`.
    pub fn permuted(&self, pi: &Injection) -> Self {
        let ground = IdSet::standard(self.k);
        let values = (0u64..1 << self.k)
            .map(|mask| {
                let e = IdSet::from_mask(&ground, mask);
                let image: IdSet = e.iter().map(|l| pi.apply(l).unwrap()).collect();
                self.values[image.mask_in(&ground) as usize]
            })
            .collect();
        Uniforms { k: self.k, values }
    }
}

pub type RandomKernel = Arc<dyn Fn(&Uniforms) -> Result<Symbol> + Send + Sync>;

/// Kernels over randomizer inputs, one per representative of `indexing`.
#[derive(Clone)]
pub struct RandomFamily {
    pub alphabet: Alphabet,
    pub indexing: IndexingSystem,
    pub kernels: BTreeMap<Index, RandomKernel>,
}

impl fmt::Debug for RandomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reps: Vec<String> = self.kernels.keys().map(|r| r.to_string()).collect();
        write!(f, "RandomFamily({}, {}, [{}])", self.alphabet, self.indexing, reps.join(" "))
    }
}

impl RandomFamily {
    pub fn target(&self) -> DataStructure {
        DataStructure::array(self.alphabet.clone(), self.indexing.clone())
    }

    fn largest_rep(&self) -> usize {
        self.kernels.keys().map(|r| r.labels().len()).max().unwrap_or(0)
    }
}

/// `1(u(coord) < p)`.
pub fn threshold(coord: &[Label], p: f64) -> RandomKernel {
    let c: IdSet = coord.iter().copied().collect();
    Arc::new(move |u| Ok((u.get(&c)? < p) as Symbol))
}

/// `1(u(coord) < u(other))`.
pub fn threshold_against(coord: &[Label], other: &[Label]) -> RandomKernel {
    let c: IdSet = coord.iter().copied().collect();
    let o: IdSet = other.iter().copied().collect();
    Arc::new(move |u| Ok((u.get(&c)? < u.get(&o)?) as Symbol))
}

/// The `j`-th symbol when `u(coord)` falls into the `j`-th cell of the cumulative weights.
pub fn categorical(coord: &[Label], symbols: &[Symbol], cumulative: &[f64]) -> RandomKernel {
    let c: IdSet = coord.iter().copied().collect();
    let symbols = symbols.to_vec();
    let cumulative = cumulative.to_vec();
    Arc::new(move |u| {
        let v = u.get(&c)?;
        let j = cumulative.iter().position(|&t| v < t).unwrap_or(symbols.len() - 1);
        Ok(symbols[j.min(symbols.len() - 1)])
    })
}

/// `1(u_{12} < W(u_1, u_2))` for a symmetric `W`.
pub fn graphon(w: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> RandomKernel {
    Arc::new(move |u| {
        let x = u.get(&IdSet::standard(1))?;
        let y = u.get(&[2].into_iter().collect())?;
        Ok((u.get(&IdSet::standard(2))? < w(x, y)) as Symbol)
    })
}

/// Erdős–Rényi graphs: `1(u_{ij} < p)` on `subsets(2)`.
pub fn erdos_renyi(p: f64) -> RandomFamily {
    RandomFamily {
        alphabet: Alphabet::binary(),
        indexing: IndexingSystem::Subsets(2),
        kernels: BTreeMap::from([(Index::label_set(&[1, 2]), threshold(&[1, 2], p))]),
    }
}

/// Binary sequences with a single kernel on the representative `1`.
pub fn binary_sequence(kernel: RandomKernel) -> RandomFamily {
    RandomFamily {
        alphabet: Alphabet::binary(),
        indexing: IndexingSystem::Id,
        kernels: BTreeMap::from([(Index::Atom(1), kernel)]),
    }
}

/// The directing-measure mixture `1(u_i < u_∅)`.
pub fn uniform_mixture_sequence() -> RandomFamily {
    binary_sequence(threshold_against(&[1], &[]))
}

/// Entry `i`: `f_{r(i)}((U_e)_{e ⊆ dom(i)} ∘ im(π_i))`.
pub fn sample_array_on(family: &RandomFamily, a: &IdSet, r: &Randomizer) -> Result<Element> {
    if let Mode::Depth(k) = r.mode {
        if family.largest_rep() > k {
            return Err(Error::Invalid(format!(
                "kernels need uniforms on sets of size {}, randomizer has depth {k}",
                family.largest_rep()
            )));
        }
    }
    let sk = Skeleton::cached(&family.indexing, family.largest_rep())?;
    let mut out = BTreeMap::new();
    for i in family.indexing.indices(a)? {
        let (rep, pi) = sk.locate(&i)?;
        let f = family.kernels.get(&rep).ok_or_else(|| Error::MissingKernel(rep.to_string()))?;
        let u = Uniforms::fetch(r, &pi)?;
        out.insert(i, f(&u)?);
    }
    Ok(Element::Array(out))
}

pub fn sample_array(family: &RandomFamily, n: usize, r: &Randomizer) -> Result<Element> {
    sample_array_on(family, &IdSet::standard(n), r)
}

/// Sort labels by `U_i`, ties broken by label.
pub fn sample_total_order_on(a: &IdSet, r: &Randomizer) -> Result<Element> {
    let mut keyed = a
        .iter()
        .map(|l| Ok((r.value(&[l].into_iter().collect())?, l)))
        .collect::<Result<Vec<(f64, Label)>>>()?;
    keyed.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(Element::total_order(&keyed.iter().map(|p| p.1).collect::<Vec<_>>()))
}

pub fn sample_total_order(n: usize, r: &Randomizer) -> Result<Element> {
    sample_total_order_on(&IdSet::standard(n), r)
}

/// Draw `X_[n_max]` from the top table, then restrict to `[n]`.
pub fn sample_measurement<P: Mass>(mu: &FiniteLaw<P>, n: usize, seed: u64) -> Result<Element> {
    if n > mu.n_max {
        return Err(Error::Invalid(format!("level {n} is above n_max {}", mu.n_max)));
    }
    let top = mu.table(mu.n_max);
    let v = unit(keyed(seed, MEASUREMENT_TAG, &IdSet::empty()));
    let mut acc = 0.0;
    let mut pick = None;
    for (x, p) in top {
        acc += p.as_f64();
        pick = Some(x);
        if v < acc {
            break;
        }
    }
    let x = pick.ok_or_else(|| Error::InvalidLaw("empty top table".into()))?;
    let incl = Injection::inclusion(&IdSet::standard(n), &IdSet::standard(mu.n_max))?;
    mu.structure.restrict(&incl, x)
}

/// Spot-check `f(u ∘ im(π)) = f(u)` for `π ∈ stab(ī)` on `trials` random inputs per representative.
pub fn check_random_symmetry(family: &RandomFamily, trials: u64, seed: u64) -> Result<Option<(Index, Vec<Label>)>> {
    let sk = Skeleton::cached(&family.indexing, family.largest_rep())?;
    for (rep, f) in &family.kernels {
        let stab = sk.stabilizer(rep).ok_or_else(|| Error::Invalid(format!("{rep} is not a representative")))?;
        let ground = IdSet::standard(rep.labels().len());
        for t in 0..trials {
            let r = Randomizer::full(derive_seed(seed, t));
            let u = Uniforms::fetch(&r, &Injection::identity(&ground))?;
            for pi in stab {
                if f(&u.permuted(pi))? != f(&u)? {
                    return Ok(Some((rep.clone(), pi.images().to_vec())));
                }
            }
        }
    }
    Ok(None)
}

/// A measurement given by a kernel family: `X_a` for any finite label set.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub family: RandomFamily,
    pub randomizer: Randomizer,
}

impl Measurement {
    pub fn at(&self, a: &IdSet) -> Result<Element> {
        sample_array_on(&self.family, a, &self.randomizer)
    }
}

fn coord(v: &Value) -> Result<Vec<Label>> {
    v.as_array()
        .ok_or_else(|| Error::Term(format!("coordinate must be a label list: {v}")))?
        .iter()
        .map(|x| x.as_u64().map(|n| n as Label).ok_or_else(|| Error::Term(format!("bad label {x}"))))
        .collect()
}

/// Built-in kernel specs: `{"threshold": {"coord": [..], "below": p}}`,
/// `{"threshold": {"coord": [..], "below_coord": [..]}}` and
/// `{"categorical": {"coord": [..], "cumulative": [..]}}`.
pub fn random_kernel_from_json(v: &Value, alphabet: &Alphabet) -> Result<RandomKernel> {
    if let Some(t) = v.get("threshold") {
        let c = coord(&t["coord"])?;
        return match (t.get("below").and_then(Value::as_f64), t.get("below_coord")) {
            (Some(p), _) => Ok(threshold(&c, p)),
            (None, Some(o)) => Ok(threshold_against(&c, &coord(o)?)),
            _ => Err(Error::Term("threshold needs below or below_coord".into())),
        };
    }
    if let Some(t) = v.get("categorical") {
        let c = coord(&t["coord"])?;
        let cum: Vec<f64> = t["cumulative"]
            .as_array()
            .ok_or_else(|| Error::Term("cumulative must be a list".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::Term(format!("bad weight {x}"))))
            .collect::<Result<_>>()?;
        return Ok(categorical(&c, alphabet.symbols(), &cum));
    }
    Err(Error::Term(format!("unknown kernel spec {v}")))
}

/// `{"kernels": {"<rep>": spec, ..}}` for the target `array(alphabet, indexing)`.
pub fn random_family_from_json(v: &Value, target: &DataStructure) -> Result<RandomFamily> {
    let (alphabet, indexing) =
        target.as_array().ok_or_else(|| Error::Invalid(format!("{target} is not an array structure")))?;
    let specs = v["kernels"].as_object().ok_or_else(|| Error::Term("kernels must be an object".into()))?;
    let mut kernels = BTreeMap::new();
    for (rep, spec) in specs {
        kernels.insert(Index::parse(rep)?, random_kernel_from_json(spec, &alphabet)?);
    }
    Ok(RandomFamily { alphabet, indexing, kernels })
}
