//! Diagonal constructions for several populations and the outer-product criterion.

use crate::error::{Error, Result};
use crate::indexing::IndexingSystem;
use crate::laws::{mix, product_law, FiniteLaw, Mass};
use crate::structures::{DataStructure, Element};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SepMode {
    /// Compose with `k`-fold tuples.
    C1,
    /// Compose with `pair(k)`.
    C2,
    /// `k`-fold product of the base.
    Outer,
}

/// `compose(id, J)` and `J` have the same indices; keep the shorter form.
fn compose_simplified(outer: IndexingSystem, inner: IndexingSystem) -> IndexingSystem {
    match outer {
        IndexingSystem::Id => inner,
        outer => IndexingSystem::compose(outer, inner),
    }
}

pub fn build_separate(base: DataStructure, k: usize, mode: SepMode) -> Result<DataStructure> {
    if k == 0 {
        return Err(Error::Invalid("at least one population is required".into()));
    }
    Ok(match mode {
        SepMode::Outer => {
            let mut d = base.clone();
            for _ in 1..k {
                d = DataStructure::product(base.clone(), d);
            }
            d
        }
        SepMode::C1 | SepMode::C2 => {
            let inner = if mode == SepMode::C1 { IndexingSystem::Tuples(k) } else { IndexingSystem::Pair(k) };
            match base.as_array() {
                Some((alphabet, indexing)) if matches!(base, DataStructure::Array { .. }) => {
                    DataStructure::array(alphabet, compose_simplified(indexing, inner))
                }
                _ => DataStructure::compose_i(base, inner),
            }
        }
    })
}

/// The `k` factors of a right-nested product.
pub fn product_factors(d: &DataStructure, k: usize) -> Result<Vec<DataStructure>> {
    let mut out = Vec::with_capacity(k);
    let mut rest = d;
    while out.len() + 1 < k {
        match rest {
            DataStructure::Product(a, b) => {
                out.push((**a).clone());
                rest = b;
            }
            _ => return Err(Error::Invalid(format!("{d} is not a product of {k} structures"))),
        }
    }
    out.push(rest.clone());
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparateReport<P> {
    /// First cell where the law and the mixture differ: `(n, x, law, mixture)`.
    pub witness: Option<(usize, Element, P, P)>,
    pub checks: usize,
}

impl<P> SeparateReport<P> {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Compare `μ` with `Σ_j w_j μ¹_j ⊗ ... ⊗ μᵏ_j`, level by level.
pub fn check_separate_product<P: Mass>(
    mu: &FiniteLaw<P>,
    mixture: &[(P, Vec<FiniteLaw<P>>)],
    tol: f64,
) -> Result<SeparateReport<P>> {
    let k = mixture.first().map(|(_, c)| c.len()).ok_or_else(|| Error::InvalidLaw("empty mixture".into()))?;
    let factors = product_factors(&mu.structure, k)?;
    let mut products = Vec::new();
    let mut weights = Vec::new();
    for (w, components) in mixture {
        if components.len() != k {
            return Err(Error::InvalidLaw("every mixture term needs one law per factor".into()));
        }
        for (c, f) in components.iter().zip(&factors) {
            if &c.structure != f || c.n_max != mu.n_max {
                return Err(Error::LevelMismatch(format!("component on {} does not match factor {f}", c.structure)));
            }
        }
        let mut law = components[k - 1].clone();
        for c in components[..k - 1].iter().rev() {
            law = product_law(c, &law)?;
        }
        products.push(law);
        weights.push(w.clone());
    }
    let target = mix(&products, &weights)?;
    let mut checks = 0;
    for n in 0..=mu.n_max {
        let (left, right) = (mu.table(n), target.table(n));
        for x in left.keys().chain(right.keys()) {
            checks += 1;
            let (p, q) = (mu.mass(n, x), target.mass(n, x));
            if !p.close(&q, tol) {
                return Ok(SeparateReport { witness: Some((n, x.clone(), p, q)), checks });
            }
        }
    }
    Ok(SeparateReport { witness: None, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{ratio, Rational, Table};
    use crate::structures::Alphabet;

    #[test]
    fn matrices_from_sequences() {
        let seq = DataStructure::sequence(Alphabet::binary());
        let d = build_separate(seq.clone(), 2, SepMode::C1).unwrap();
        assert_eq!(d.to_string(), "array({0,1},tuples(2))");
        assert_eq!(build_separate(seq.clone(), 1, SepMode::C1).unwrap().to_string(), "array({0,1},tuples(1))");
        let t = build_separate(DataStructure::Total, 2, SepMode::C2).unwrap();
        assert_eq!(t.to_string(), "composeI(total,pair(2))");
    }

    #[test]
    fn coupling_is_not_a_product() {
        let seq = DataStructure::sequence(Alphabet::binary());
        let iid = FiniteLaw::<Rational>::bernoulli_sequence(ratio(1, 2), 2).unwrap();
        let both = DataStructure::product(seq.clone(), seq.clone());
        let mut tables = Vec::new();
        for t in iid.tables() {
            let mut out = Table::new();
            for (x, p) in t {
                out.insert(Element::pair(x.clone(), x.clone()), p.clone());
            }
            tables.push(out);
        }
        let coupled = FiniteLaw::new(both, tables).unwrap();
        let mixture = vec![(ratio(1, 1), vec![iid.clone(), iid.clone()])];
        assert!(!check_separate_product(&coupled, &mixture, 0.0).unwrap().passed());
        let prod = product_law(&iid, &iid).unwrap();
        assert!(check_separate_product(&prod, &mixture, 0.0).unwrap().passed());
    }
}
