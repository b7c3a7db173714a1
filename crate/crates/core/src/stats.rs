//! Densities, averages, exact variances and U-statistic covariances.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::ids::{enumerate_injections, binomial, falling_factorial, permutations, IdSet, Injection, Label};
use crate::laws::{ratio, FiniteLaw, Mass, Rational, Table};
use crate::structures::{DataStructure, Element, StructureRule, Symbol};
use crate::term::Index;

/// `g: D_[k] -> Q`.
#[derive(Clone)]
pub struct KernelStatistic {
    pub name: String,
    pub structure: DataStructure,
    pub k: usize,
    g: Arc<dyn Fn(&Element) -> Result<Rational> + Send + Sync>,
}

impl fmt::Debug for KernelStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {} at level {}", self.name, self.structure, self.k)
    }
}

impl KernelStatistic {
    pub fn new<F>(name: &str, structure: DataStructure, k: usize, g: F) -> Self
    where
        F: Fn(&Element) -> Result<Rational> + Send + Sync + 'static,
    {
        KernelStatistic { name: name.to_string(), structure, k, g: Arc::new(g) }
    }

    pub fn eval(&self, x: &Element) -> Result<Rational> {
        (self.g)(x)
    }

    /// `1{x = target}` for `target ∈ D_[k]`.
    pub fn indicator(structure: DataStructure, k: usize, target: Element) -> Self {
        let name = format!("indicator of {target}");
        KernelStatistic::new(&name, structure, k, move |x| Ok(Rational::from_integer((x == &target).into())))
    }

    /// `x_1 x_2 ... x_k` on sequences.
    pub fn coordinate_product(structure: DataStructure, k: usize) -> Self {
        KernelStatistic::new(&format!("product of {k} coordinates"), structure, k, move |x| {
            let mut acc = Rational::one();
            for l in 1..=k as Label {
                let v = x.entry(&Index::Atom(l)).ok_or_else(|| Error::Term(format!("{x} has no coordinate {l}")))?;
                acc *= Rational::from_integer(v.into());
            }
            Ok(acc)
        })
    }

    /// `g ∘ D[π] = g` for every permutation `π` of `[k]`.
    pub fn is_symmetric(&self) -> Result<bool> {
        let ground = IdSet::standard(self.k);
        for x in self.structure.elements(&ground)? {
            let v = self.eval(&x)?;
            for pi in permutations(&ground) {
                if self.eval(&self.structure.restrict(&pi, &x)?)? != v {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `t(x, y) = ((|a|-|b|)! / |a|!) #{τ: b -> a : D[τ](y) = x}`.
pub fn density<S: StructureRule + ?Sized>(d: &S, b: &IdSet, x: &Element, a: &IdSet, y: &Element) -> Result<Rational> {
    if b.len() > a.len() {
        return Err(Error::Arity(format!("pattern on {} labels cannot occur in {} labels", b.len(), a.len())));
    }
    if !d.contains(a, y)? {
        return Err(Error::NotElement { set: a.labels().to_vec() });
    }
    let mut hits: i64 = 0;
    for tau in enumerate_injections(b, a) {
        if d.restrict_member(&tau, y)? == *x {
            hits += 1;
        }
    }
    Ok(ratio(hits, falling_factorial(a.len(), b.len()) as i64))
}

/// `(1/(n)_k) Σ_{τ:[k]->a} g(D[τ](x))` for `x ∈ D_a`.
pub fn avg(g: &KernelStatistic, a: &IdSet, x: &Element) -> Result<Rational> {
    if a.len() < g.k {
        return Err(Error::Arity(format!("average of a {}-ary statistic over {} labels", g.k, a.len())));
    }
    if !g.structure.contains(a, x)? {
        return Err(Error::NotElement { set: a.labels().to_vec() });
    }
    let mut total = Rational::zero();
    let mut count: i64 = 0;
    for tau in enumerate_injections(&IdSet::standard(g.k), a) {
        total += g.eval(&g.structure.restrict_member(&tau, x)?)?;
        count += 1;
    }
    Ok(total / Rational::from_integer(count.into()))
}

/// The same average, accumulated in floating point.
pub fn avg_f64(g: &KernelStatistic, a: &IdSet, x: &Element) -> Result<f64> {
    if a.len() < g.k {
        return Err(Error::Arity(format!("average of a {}-ary statistic over {} labels", g.k, a.len())));
    }
    if !g.structure.contains(a, x)? {
        return Err(Error::NotElement { set: a.labels().to_vec() });
    }
    let (mut total, mut count) = (0.0, 0.0);
    for tau in enumerate_injections(&IdSet::standard(g.k), a) {
        total += Mass::as_f64(&g.eval(&g.structure.restrict_member(&tau, x)?)?);
        count += 1.0;
    }
    Ok(total / count)
}

fn expectation<P: Mass>(t: &Table<P>, f: impl Fn(&Element) -> Result<P>) -> Result<P> {
    let mut acc = P::zero();
    for (x, p) in t {
        acc = acc + p.clone() * f(x)?;
    }
    Ok(acc)
}

fn statistic_values<P: Mass>(g: &KernelStatistic, taus: &[Injection], x: &Element) -> Result<Vec<P>> {
    taus.iter()
        .map(|tau| Ok(P::from_rational(&g.eval(&g.structure.restrict(tau, x)?)?)))
        .collect()
}

/// `Var(avg(g, X_[n]))` computed directly and through
/// `((n-k)!/n!) Σ_{a} Σ_{π:[k]->a} Cov(g(X_[k]), g∘D[π](X_a))`.
pub fn variance_exact<P: Mass>(mu: &FiniteLaw<P>, g: &KernelStatistic, n: usize) -> Result<(P, P)> {
    if n > mu.n_max {
        return Err(Error::Invalid(format!("level {n} is above n_max {}", mu.n_max)));
    }
    if n < g.k {
        return Err(Error::Arity(format!("average of a {}-ary statistic over {n} labels", g.k)));
    }
    if g.structure != mu.structure {
        return Err(Error::LevelMismatch(format!("statistic on {} against law on {}", g.structure, mu.structure)));
    }
    let taus = enumerate_injections(&IdSet::standard(g.k), &IdSet::standard(n));
    let ident = taus
        .iter()
        .position(|t| t.images().iter().copied().eq(1..=g.k as Label))
        .expect("the inclusion [k] ⊆ [n] is among the injections");
    let m = P::from_count(taus.len() as u128);
    let table = mu.table(n);
    let values: Vec<(P, Vec<P>)> = table
        .iter()
        .map(|(x, p)| Ok((p.clone(), statistic_values::<P>(g, &taus, x)?)))
        .collect::<Result<_>>()?;
    let mean = |f: &dyn Fn(&[P]) -> P| values.iter().fold(P::zero(), |acc, (p, v)| acc + p.clone() * f(v));
    let avg_of = |v: &[P]| v.iter().fold(P::zero(), |acc, y| acc + y.clone()) / m.clone();
    let e_avg = mean(&|v| avg_of(v));
    let direct = mean(&|v| {
        let s = avg_of(v);
        s.clone() * s
    }) - e_avg.clone() * e_avg;
    let e_first = mean(&|v| v[ident].clone());
    let mut formula = P::zero();
    for t in 0..taus.len() {
        let joint = mean(&|v| v[ident].clone() * v[t].clone());
        let e_t = mean(&|v| v[t].clone());
        formula = formula + (joint - e_first.clone() * e_t);
    }
    Ok((direct, formula / m))
}

/// `c_l = Cov(g(X_[k]), g(X_{[l] ∪ {k+1..2k-l}}))` for `l = 0..=k`.
pub fn u_stat_covariances<P: Mass>(mu: &FiniteLaw<P>, g: &KernelStatistic) -> Result<Vec<P>> {
    let k = g.k;
    if mu.n_max < 2 * k {
        return Err(Error::Invalid(format!("n_max {} is below 2k = {}", mu.n_max, 2 * k)));
    }
    let mut out = Vec::with_capacity(k + 1);
    for l in 0..=k {
        let m = 2 * k - l;
        let whole = IdSet::standard(m);
        let first = Injection::inclusion(&IdSet::standard(k), &whole)?;
        let other: IdSet = (1..=l as Label).chain(k as Label + 1..=m as Label).collect();
        let second = Injection::canonical_bijection(&IdSet::standard(k), &other)
            .and_then(|c| crate::ids::compose(&Injection::inclusion(&other, &whole)?, &c))?;
        let t = mu.table(m);
        let val = |tau: &Injection, x: &Element| -> Result<P> {
            Ok(P::from_rational(&g.eval(&g.structure.restrict(tau, x)?)?))
        };
        let e1 = expectation(t, |x| val(&first, x))?;
        let e2 = expectation(t, |x| val(&second, x))?;
        let joint = expectation(t, |x| Ok(val(&first, x)? * val(&second, x)?))?;
        out.push(joint - e1 * e2);
    }
    Ok(out)
}

/// `σ² = k² c_1`.
pub fn asymptotic_variance<P: Mass>(k: usize, c: &[P]) -> P {
    if k == 0 {
        return P::zero();
    }
    P::from_count((k * k) as u128) * c[1].clone()
}

/// `Var(avg) = Σ_l C(k,l) C(n-k,k-l) / C(n,k) · c_l` for symmetric `g`.
pub fn variance_from_covariances<P: Mass>(n: usize, k: usize, c: &[P]) -> P {
    let total = P::from_count(binomial(n, k));
    let mut acc = P::zero();
    for (l, cl) in c.iter().enumerate() {
        let w = P::from_count(binomial(k, l) * binomial(n.saturating_sub(k), k - l));
        acc = acc + w * cl.clone();
    }
    acc / total
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitTrace {
    pub target: Element,
    pub level: usize,
    pub values: Vec<(usize, f64)>,
    pub converged: bool,
}

impl LimitTrace {
    pub fn estimate(&self) -> Option<f64> {
        self.values.last().map(|v| v.1)
    }
}

/// Densities of each target along a growing sequence `x_n ∈ D_[n]`. A target converges when
/// its last three densities lie within `tol` of each other.
pub fn limit_estimate(
    d: &DataStructure,
    sequence: &[(usize, Element)],
    targets: &[(usize, Element)],
    tol: f64,
) -> Result<Vec<LimitTrace>> {
    if sequence.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Invalid("host sizes must be strictly increasing".into()));
    }
    let mut out = Vec::new();
    for (level, target) in targets {
        let b = IdSet::standard(*level);
        let mut values = Vec::new();
        for (n, y) in sequence {
            let v = density(d, &b, target, &IdSet::standard(*n), y)?;
            values.push((*n, Mass::as_f64(&v)));
        }
        let converged = values.len() >= 3 && {
            let tail: Vec<f64> = values[values.len() - 3..].iter().map(|v| v.1).collect();
            let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
            let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
            hi - lo < tol
        };
        out.push(LimitTrace { target: target.clone(), level: *level, values, converged });
    }
    Ok(out)
}

/// The rule `μ_[m]({x}) = t(x, y)` for `m <= max_level`, from one host `y ∈ D_[n]`.
pub fn induced_law(d: &DataStructure, n: usize, y: &Element, max_level: usize) -> Result<FiniteLaw<f64>> {
    let host = IdSet::standard(n);
    let mut tables = Vec::new();
    for m in 0..=max_level {
        let b = IdSet::standard(m);
        let mut t = Table::new();
        for x in d.elements(&b)? {
            let v = Mass::as_f64(&density(d, &b, &x, &host, y)?);
            if v > 0.0 {
                t.insert(x, v);
            }
        }
        tables.push(t);
    }
    FiniteLaw::new(d.clone(), tables)
}

/// Sample mean and standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The value of the unique entry of a level-`k` array at index `i`, as a rational.
pub fn entry_value(x: &Element, i: &Index) -> Result<Rational> {
    let v: Symbol = x.entry(i).ok_or_else(|| Error::Term(format!("{x} has no entry at {i}")))?;
    Ok(Rational::from_integer(v.into()))
}
