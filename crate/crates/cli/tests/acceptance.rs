//! One line per acceptance criterion: `PASS`/`FAIL`, the criterion number and a summary.
//! Run with `cargo test -p exchg-cli --test acceptance`; pass a number to run one criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::panic;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use exchg::dsl::{parse_indexing, parse_structure};
use exchg::ids::{enumerate_injections, enumerate_subsets, permutations, SizeFilter};
use exchg::indexing::{check_axioms, group_index, stab, AlignChoice, Axiom, IndexRule, SizeGatedIdentity, Skeleton};
use exchg::laws::{check_exchangeable, check_independence, mix, ratio, ExactLaw, Mass, Rational};
use exchg::nat::{
    build_from_kernels, build_from_kernels_with, check_injective, check_naturality, embed_atomic, extract_kernels,
    graph1_to_graph2, graph2_to_graph3, graph3_to_graph1, universal_embedding, validate_kernels, Kernel,
    KernelFamily, NaturalTransformation,
};
use exchg::sample::{
    binary_sequence, derive_seed, erdos_renyi, graphon, sample_array, threshold, uniform_mixture_sequence, Mode,
    RandomFamily, Randomizer,
};
use exchg::stats::{
    avg_f64, density, induced_law, limit_estimate, mean_stderr, u_stat_covariances, variance_exact,
    variance_from_covariances, KernelStatistic,
};
use exchg::structures::{count_fiber, depth, depth_brute_force};
use exchg::{Alphabet, DataStructure as DS, Element, Error, IdSet, Index, IndexingSystem as IS, Injection, StructureRule};

type Check = Result<String, String>;

trait OrFail<T> {
    fn or_fail(self) -> Result<T, String>;
}

impl<T> OrFail<T> for exchg::Result<T> {
    fn or_fail(self) -> Result<T, String> {
        self.map_err(|e| e.to_string())
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria: Vec<(usize, &str, fn() -> Check)> = vec![
        (1, "indexing axioms", indexing_axioms),
        (2, "index arithmetic", index_arithmetic),
        (3, "stabilizer realization", stabilizer_realization),
        (4, "fiber counts", fiber_counts),
        (5, "kernel round trips", kernel_round_trips),
        (6, "naturality", naturality),
        (7, "depth", depth_values),
        (8, "sampler consistency", sampler_consistency),
        (9, "sampler exchangeability", sampler_exchangeability),
        (10, "exact law suite", exact_law_suite),
        (11, "variance identity", variance_identity),
        (12, "u-statistics", u_statistics),
        (13, "limits", limits),
        (14, "universal embedding", universal_embedding_injective),
        (15, "cli", cli),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn built_in_systems() -> Vec<IS> {
    let mut out = vec![IS::Id, IS::Powerset, IS::DTuplesStar];
    for k in 0..=3 {
        out.extend([IS::Subsets(k), IS::SubsetsLe(k), IS::Tuples(k), IS::DTuples(k)]);
    }
    for k in 1..=3 {
        out.push(IS::Pair(k));
    }
    out
}

fn indexing_axioms() -> Check {
    let start = Instant::now();
    let mut systems = built_in_systems();
    let base = [IS::Id, IS::Powerset, IS::DTuples(2)];
    for a in &base {
        for b in &base {
            systems.push(IS::product(a.clone(), b.clone()));
            systems.push(IS::coproduct(a.clone(), b.clone()));
            systems.push(IS::compose(a.clone(), b.clone()));
        }
    }
    let mut checks = 0;
    for s in &systems {
        let r = check_axioms(s, 3).or_fail()?;
        checks += r.checks;
        if let Some(v) = r.violations.first() {
            return Err(format!("{s} violates {:?}: {}", v.axiom, v.detail));
        }
    }
    let gate = SizeGatedIdentity { threshold: 2 };
    let r = check_axioms(&gate, 3).or_fail()?;
    let v = r.first(Axiom::Intersection).ok_or("the size-gated identity passed the intersection axiom")?;
    let (a, b) = (&v.sets[0], &v.sets[1]);
    let meet = a.intersection(b);
    let (ia, ib) = (gate.indices(a).or_fail()?, gate.indices(b).or_fail()?);
    let common: BTreeSet<Label> = ia.iter().filter(|i| ib.contains(i)).flat_map(|i| i.labels()).collect();
    ensure(
        !meet.is_empty() && common == meet.iter().collect() && gate.indices(&meet).or_fail()?.is_empty(),
        || format!("unexpected witness {a}, {b}"),
    )?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{} systems pass ({checks} checks); non-example fails at a={a}, b={b}: I_a∩I_b={meet}, I_(a∩b)=∅",
        systems.len()
    ))
}

type Label = u32;

/// `τ` cut down to `d`, keeping the codomain.
fn cut(tau: &Injection, d: &IdSet) -> Injection {
    Injection::new(d.clone(), tau.cod().clone(), d.iter().map(|l| tau.apply(l).unwrap()).collect()).unwrap()
}

fn index_arithmetic() -> Check {
    let ground = IdSet::standard(4);
    let sets = enumerate_subsets(&ground, SizeFilter::All);
    let mut checks = 0u64;
    for s in [IS::Powerset, IS::Tuples(2), IS::DTuples(2)] {
        for b in &sets {
            let ib = s.indices(b).or_fail()?;
            for a in &sets {
                for tau in enumerate_injections(b, a) {
                    for i in &ib {
                        let d = s.dom(i).or_fail()?;
                        let hat = cut(&tau, &d);
                        let full = s.apply(&tau, i).or_fail()?;
                        ensure(full == s.apply(&hat, i).or_fail()?, || format!("{s}: I[τ]({i}) ≠ I[τ̂]({i}) for {tau}"))?;
                        ensure(s.dom(&full).or_fail()? == hat.image(), || {
                            format!("{s}: dom(I[τ]({i})) ≠ τ(dom {i}) for {tau}")
                        })?;
                        checks += 2;
                    }
                }
            }
        }
        for i in s.indices(&ground).or_fail()? {
            let d = s.dom(&i).or_fail()?;
            let st = stab(&s, &i).or_fail()?;
            for a in &sets {
                for b in &sets {
                    for tau in enumerate_injections(&d, a) {
                        let ti = s.apply(&tau, &i).or_fail()?;
                        for sigma in enumerate_injections(&d, b) {
                            let same = ti == s.apply(&sigma, &i).or_fail()?;
                            let related = st
                                .iter()
                                .any(|pi| d.iter().all(|l| tau.apply(pi.apply(l).unwrap()) == sigma.apply(l)));
                            ensure(same == related, || format!("{s}: {i} under {tau} and {sigma}"))?;
                            checks += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("zero violations in {checks} checks at n_max=4"))
}

fn stabilizer_realization() -> Check {
    let s3: Vec<Vec<u32>> = permutations(&IdSet::standard(3)).iter().map(|p| p.images().to_vec()).collect();
    let groups: Vec<(&str, usize, Vec<Vec<u32>>)> = vec![
        ("trivial", 3, vec![vec![1, 2, 3]]),
        ("C2", 3, vec![vec![1, 2, 3], vec![2, 1, 3]]),
        ("C3", 3, vec![vec![1, 2, 3], vec![2, 3, 1], vec![3, 1, 2]]),
        ("S3", 3, s3),
        ("Klein four", 4, vec![vec![1, 2, 3, 4], vec![2, 1, 4, 3], vec![3, 4, 1, 2], vec![4, 3, 2, 1]]),
    ];
    let system = IS::compose(IS::Powerset, IS::DTuplesStar);
    let mut names = Vec::new();
    for (name, k, elems) in groups {
        let ground = IdSet::standard(k);
        let g: Vec<Injection> =
            elems.iter().map(|im| Injection::new(ground.clone(), ground.clone(), im.clone()).unwrap()).collect();
        let idx = group_index(&g);
        ensure(system.is_member(&ground, &idx), || format!("{idx} is not an index over [{k}]"))?;
        ensure(system.dom(&idx).or_fail()? == ground, || format!("dom of {idx} is not [{k}]"))?;
        let found: BTreeSet<Vec<u32>> = stab(&system, &idx).or_fail()?.iter().map(|p| p.images().to_vec()).collect();
        let expected: BTreeSet<Vec<u32>> = elems.into_iter().collect();
        ensure(found == expected, || format!("{name}: stabilizer {found:?}"))?;
        names.push(format!("{name} (order {})", found.len()));
    }
    Ok(format!("stab equals G for {}", names.join(", ")))
}

fn fiber_counts() -> Check {
    let arr = DS::array(Alphabet::binary(), IS::Powerset);
    let mut rows = Vec::new();
    for (n, k) in [(2usize, 1usize), (3, 1), (3, 2)] {
        let (a, b) = (IdSet::standard(n), IdSet::standard(k));
        let incl = Injection::inclusion(&b, &a).or_fail()?;
        let expect_arr = 1u128 << ((1usize << n) - (1usize << k));
        let ys = arr.elements(&a).or_fail()?;
        for x in arr.elements(&b).or_fail()? {
            let c = count_fiber(&arr, &b, &a, &x).or_fail()?;
            let brute = ys.iter().filter(|y| arr.restrict(&incl, y).unwrap() == x).count() as u128;
            ensure(c == expect_arr && brute == c, || format!("array fiber over {x} at ({n},{k}): {c}, brute {brute}"))?;
        }
        let x = Element::Sets([b.clone()].into_iter().collect());
        let expect_sets = (1u128 << (1usize << (n - k))) - 1;
        let c = count_fiber(&DS::SetSystem, &b, &a, &x).or_fail()?;
        let brute = DS::SetSystem
            .elements(&a)
            .or_fail()?
            .iter()
            .filter(|y| DS::SetSystem.restrict(&incl, y).unwrap() == x)
            .count() as u128;
        ensure(c == expect_sets && brute == c, || format!("setsystem fiber at ({n},{k}): {c}, brute {brute}"))?;
        rows.push(format!("({n},{k}): {c_arr} vs {c}", c_arr = expect_arr));
    }
    Ok(rows.join("; "))
}

/// Random kernels that are constant on orbits of each stabilizer.
fn random_family(source: &DS, indexing: &IS, max_size: usize, alphabet: &Alphabet, rng: &mut ChaCha8Rng) -> KernelFamily {
    let sk = Skeleton::build(indexing, max_size, AlignChoice::First).unwrap();
    let mut kernels = BTreeMap::new();
    for (rep, st) in sk.representatives.iter().zip(&sk.stabilizers) {
        let ground = IdSet::standard(rep.labels().len());
        let mut orbit_value: BTreeMap<Element, i64> = BTreeMap::new();
        let mut table = BTreeMap::new();
        for x in source.elements(&ground).unwrap() {
            let key = st.iter().map(|pi| source.restrict(pi, &x).unwrap()).min().unwrap();
            let v = *orbit_value
                .entry(key)
                .or_insert_with(|| alphabet.symbols()[rng.gen_range(0..alphabet.len())]);
            table.insert(x, v);
        }
        kernels.insert(rep.clone(), Kernel::Table(table));
    }
    KernelFamily { source: source.clone(), alphabet: alphabet.clone(), indexing: indexing.clone(), max_size, kernels }
}

fn same_components(f: &NaturalTransformation, g: &NaturalTransformation, n_max: usize) -> Result<(), String> {
    for n in 0..=n_max {
        let a = IdSet::standard(n);
        for x in f.source.elements(&a).or_fail()? {
            let (y, z) = (f.apply(&a, &x).or_fail()?, g.apply(&a, &x).or_fail()?);
            ensure(y == z, || format!("{} and {} differ at {x}: {y} vs {z}", f.name, g.name))?;
        }
    }
    Ok(())
}

fn kernel_round_trips() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let systems = [IS::Id, IS::Subsets(2), IS::DTuples(2), IS::SubsetsLe(2)];
    let source = DS::BinRel;
    let mut families = 0;
    for fam in 0..100 {
        let indexing = &systems[fam % systems.len()];
        let family = random_family(&source, indexing, 2, &Alphabet::binary(), &mut rng);
        let eta = build_from_kernels(&family).or_fail()?;
        let back = extract_kernels(&eta, 2).or_fail()?;
        ensure(back.tables().or_fail()? == family.tables().or_fail()?, || format!("{indexing}: extracted kernels differ"))?;
        same_components(&eta, &build_from_kernels(&back).or_fail()?, 3)?;
        same_components(&eta, &build_from_kernels_with(&family, AlignChoice::Last).or_fail()?, 3)?;
        families += 1;
    }
    let mut table = BTreeMap::new();
    for x in source.elements(&IdSet::standard(2)).or_fail()? {
        let v = match &x {
            Element::Relation(r) => (r.contains(&(1, 2)) && !r.contains(&(2, 1))) as i64,
            _ => 0,
        };
        table.insert(x, v);
    }
    let skewed = KernelFamily {
        source,
        alphabet: Alphabet::binary(),
        indexing: IS::Subsets(2),
        max_size: 2,
        kernels: BTreeMap::from([(Index::label_set(&[1, 2]), Kernel::Table(table))]),
    };
    match validate_kernels(&skewed) {
        Err(Error::Asymmetric { rep, perm, input }) if perm == vec![2, 1] => Ok(format!(
            "{families} random families round-trip exactly to n_max=3; asymmetric kernel rejected at {rep}, perm {perm:?}, input {input}"
        )),
        other => Err(format!("asymmetric kernel not rejected: {other:?}")),
    }
}

fn naturality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut built: Vec<NaturalTransformation> = Vec::new();
    for source in [DS::Graph2, DS::Total] {
        for indexing in [IS::Id, IS::Subsets(2), IS::DTuples(2), IS::SubsetsLe(2)] {
            for _ in 0..3 {
                built.push(build_from_kernels(&random_family(&source, &indexing, 2, &Alphabet::binary(), &mut rng)).or_fail()?);
            }
        }
    }
    built.push(universal_embedding(&DS::Total, 4).or_fail()?);
    built.push(universal_embedding(&DS::Graph2, 4).or_fail()?);
    for indexing in [IS::Subsets(2), IS::DTuples(2)] {
        let (phi1, phi2) = embed_atomic(&Alphabet::binary(), &indexing, 3).or_fail()?;
        built.extend([phi1, phi2]);
    }
    let isos = [graph1_to_graph2(), graph2_to_graph3(), graph3_to_graph1()];
    let mut checks = 0;
    for eta in built.iter().chain(&isos) {
        let r = check_naturality(eta, 4).or_fail()?;
        checks += r.checks;
        if let Some(w) = r.witness {
            return Err(format!("{} is not natural: {w:?}", eta.name));
        }
    }
    let cycles = [
        isos[0].then(&isos[1]).or_fail()?.then(&isos[2]).or_fail()?,
        isos[1].then(&isos[2]).or_fail()?.then(&isos[0]).or_fail()?,
        isos[2].then(&isos[0]).or_fail()?.then(&isos[1]).or_fail()?,
    ];
    let mut graphs = 0;
    for cycle in &cycles {
        for n in 0..=5 {
            let a = IdSet::standard(n);
            let xs = cycle.source.elements(&a).or_fail()?;
            ensure(xs.len() == 1 << (n * n.saturating_sub(1) / 2), || format!("{} graphs on [{n}]", xs.len()))?;
            for x in xs {
                ensure(cycle.apply(&a, &x).or_fail()? == x, || format!("{} moves {x}", cycle.name))?;
                graphs += 1;
            }
        }
    }
    Ok(format!(
        "{} transformations natural to n_max=4 ({checks} checks); graph isomorphism cycles fix all {graphs} graphs, n<=5",
        built.len() + isos.len()
    ))
}

fn depth_values() -> Check {
    let bin = Alphabet::binary();
    let cases = [
        (DS::array(bin.clone(), IS::Subsets(2)), 2),
        (DS::Total, 2),
        (DS::array(bin.clone(), IS::Id), 1),
    ];
    let mut rows = Vec::new();
    for (d, expect) in cases {
        let got = depth(&d, 4).or_fail()?;
        ensure(got.k == expect, || format!("depth({d}) = {}, expected {expect}", got.k))?;
        rows.push(format!("{d}: {}", got.k));
    }
    let mut certified = 0;
    for s in built_in_systems() {
        let d = DS::array(bin.clone(), s.clone());
        let bounded = s.max_dom_size().is_some();
        let n_max = if s == IS::DTuplesStar { 2 } else { 3 };
        let got = depth(&d, n_max).or_fail()?;
        let sk = Skeleton::cached(&s, n_max).or_fail()?;
        ensure(got.k == sk.max_representative_size(), || {
            format!("depth({d}) = {} but largest representative has size {}", got.k, sk.max_representative_size())
        })?;
        ensure(got.certified == bounded, || format!("depth({d}) certification is {}", got.certified))?;
        if got.certified && s != IS::Tuples(3) {
            let brute = depth_brute_force(&d, 3).or_fail()?;
            ensure(brute == got.k, || format!("depth({d}): brute force gives {brute}"))?;
        }
        certified += got.certified as usize;
    }
    Ok(format!("{}; {certified} bounded systems certified at max representative size", rows.join(", ")))
}

fn restricts_consistently(family: &RandomFamily, seeds: u64, mode: Mode) -> Result<(), String> {
    let target = family.target();
    let incl = Injection::inclusion(&IdSet::standard(3), &IdSet::standard(8)).unwrap();
    for seed in 0..seeds {
        let r = Randomizer::new(seed, mode);
        let big = sample_array(family, 8, &r).or_fail()?;
        let small = sample_array(family, 3, &r).or_fail()?;
        ensure(target.restrict(&incl, &big).or_fail()? == small, || format!("{family:?}: seed {seed}"))?;
        let full = sample_array(family, 3, &Randomizer::full(seed)).or_fail()?;
        ensure(full == small, || format!("{family:?}: seed {seed} differs from the full randomizer"))?;
    }
    Ok(())
}

fn sampler_consistency() -> Check {
    restricts_consistently(&erdos_renyi(0.5), 100, Mode::Full)?;
    restricts_consistently(&erdos_renyi(0.3), 100, Mode::Depth(2))?;
    restricts_consistently(&uniform_mixture_sequence(), 100, Mode::Full)?;
    restricts_consistently(&uniform_mixture_sequence(), 100, Mode::Depth(1))?;
    Ok("restrict(sample(8)) = sample(3) for 100 seeds, Erdős–Rényi and mixture kernels".into())
}

/// Chi-square statistic and degrees of freedom for uniformity of counts within orbits of `<π>`.
fn orbit_uniformity(d: &DS, counts: &BTreeMap<Element, u64>, xs: &[Element], pi: &Injection) -> (f64, f64) {
    let mut seen = BTreeSet::new();
    let (mut stat, mut df) = (0.0, 0.0);
    for x in xs {
        if seen.contains(x) {
            continue;
        }
        let mut orbit = vec![x.clone()];
        let mut y = d.restrict(pi, x).unwrap();
        while &y != x {
            orbit.push(y.clone());
            y = d.restrict(pi, &y).unwrap();
        }
        let total: u64 = orbit.iter().map(|z| counts.get(z).copied().unwrap_or(0)).sum();
        if orbit.len() > 1 && total > 0 {
            let e = total as f64 / orbit.len() as f64;
            for z in &orbit {
                let c = counts.get(z).copied().unwrap_or(0) as f64;
                stat += (c - e) * (c - e) / e;
            }
            df += (orbit.len() - 1) as f64;
        }
        seen.extend(orbit);
    }
    (stat, df)
}

fn sampler_exchangeability() -> Check {
    let start = Instant::now();
    let ground = IdSet::standard(3);
    let families = [
        ("Erdős–Rényi(0.3)", erdos_renyi(0.3)),
        (
            "graphon xy",
            RandomFamily { kernels: BTreeMap::from([(Index::label_set(&[1, 2]), graphon(|x, y| x * y))]), ..erdos_renyi(0.5) },
        ),
    ];
    let relabelings: Vec<Injection> = permutations(&ground).into_iter().filter(|p| p.images() != [1, 2, 3]).collect();
    let alpha = 0.01;
    let mut worst: f64 = 1.0;
    for (name, family) in &families {
        let d = family.target();
        let xs = d.elements(&ground).or_fail()?;
        for seed in 1..=3u64 {
            let mut counts: BTreeMap<Element, u64> = BTreeMap::new();
            for j in 0..10_000 {
                let x = sample_array(family, 3, &Randomizer::full(derive_seed(seed, j))).or_fail()?;
                *counts.entry(x).or_default() += 1;
            }
            for pi in &relabelings {
                let (stat, df) = orbit_uniformity(&d, &counts, &xs, pi);
                let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
                // Five relabelings per seed share the level.
                let adjusted = (p * relabelings.len() as f64).min(1.0);
                worst = worst.min(adjusted);
                ensure(adjusted > alpha, || format!("{name}, seed {seed}, relabeling {pi}: chi2 {stat:.2} on {df} df, p {p:.4}"))?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!("2 kernels x 3 seeds x 10^4 graphs on [3]; smallest adjusted p-value {worst:.3} > {alpha}"))
}

fn mixture_law(n_max: usize) -> ExactLaw {
    let a = ExactLaw::bernoulli_sequence(ratio(1, 5), n_max).unwrap();
    let b = ExactLaw::bernoulli_sequence(ratio(4, 5), n_max).unwrap();
    mix(&[a, b], &[ratio(1, 2), ratio(1, 2)]).unwrap()
}

fn exact_law_suite() -> Check {
    let iid = ExactLaw::bernoulli_sequence(ratio(1, 3), 4).or_fail()?;
    let er = ExactLaw::erdos_renyi(ratio(1, 3), 4).or_fail()?;
    let mixture = mixture_law(4);
    let total = ExactLaw::uniform_total(4).or_fail()?;
    for (name, mu) in [("iid", &iid), ("iid graph", &er), ("mixture", &mixture), ("uniform total order", &total)] {
        let r = check_exchangeable(mu, 0.0).or_fail()?;
        ensure(r.passed(), || format!("{name} is not exchangeable: {:?}", r.witness))?;
    }
    let w = check_independence(&mixture, 0.0).or_fail()?.witness.ok_or("the mixture passed independence")?;
    ensure(w.covariance() == ratio(9, 100), || format!("mixture covariance {}", w.covariance()))?;
    for (name, mu) in [("iid", &iid), ("iid graph", &er), ("uniform total order", &total)] {
        let r = check_independence(mu, 0.0).or_fail()?;
        ensure(r.passed(), || format!("{name} fails independence: {:?}", r.witness))?;
    }
    Ok(format!("four laws exchangeable at n_max=4; mixture covariance {} on {} and {}", w.covariance(), w.a, w.b))
}

fn seq() -> DS {
    DS::sequence(Alphabet::binary())
}

fn edge() -> Element {
    Element::array([(Index::label_set(&[1, 2]), 1)])
}

fn triangle() -> Element {
    Element::array([[1, 2], [1, 3], [2, 3]].iter().map(|e| (Index::label_set(e), 1)))
}

fn variance_identity() -> Check {
    let half = ExactLaw::bernoulli_sequence(ratio(1, 2), 2).or_fail()?;
    let (direct, formula) = variance_exact(&half, &KernelStatistic::coordinate_product(seq(), 1), 2).or_fail()?;
    ensure(direct == ratio(1, 8) && formula == ratio(1, 8), || format!("Bernoulli(1/2): {direct} vs {formula}"))?;
    let mixture = mixture_law(4);
    let third = ExactLaw::bernoulli_sequence(ratio(1, 3), 4).or_fail()?;
    let total = ExactLaw::uniform_total(4).or_fail()?;
    let er = ExactLaw::erdos_renyi(ratio(1, 2), 4).or_fail()?;
    let cases: Vec<(&str, &ExactLaw, KernelStatistic, usize)> = vec![
        ("mixture, x1, n=3", &mixture, KernelStatistic::coordinate_product(seq(), 1), 3),
        ("mixture, x1x2, n=4", &mixture, KernelStatistic::coordinate_product(seq(), 2), 4),
        ("Bernoulli(1/3), x1x2, n=3", &third, KernelStatistic::coordinate_product(seq(), 2), 3),
        ("uniform order, 1<2, n=4", &total, KernelStatistic::indicator(DS::Total, 2, Element::total_order(&[1, 2])), 4),
        ("Erdős–Rényi(1/2), edge, n=3", &er, KernelStatistic::indicator(DS::Graph2, 2, edge()), 3),
        ("Erdős–Rényi(1/2), edge, n=4", &er, KernelStatistic::indicator(DS::Graph2, 2, edge()), 4),
    ];
    let constant = KernelStatistic::new("one", seq(), 1, |_| Ok(Rational::from_integer(1.into())));
    let (cd, cf) = variance_exact(&mixture, &constant, 3).or_fail()?;
    ensure(cd == ratio(0, 1) && cf == ratio(0, 1), || format!("constant statistic: {cd} vs {cf}"))?;
    let mut rows = vec!["Bernoulli(1/2), x1, n=2: 1/8".to_string()];
    for (name, mu, g, n) in cases {
        let (direct, formula) = variance_exact(mu, &g, n).or_fail()?;
        ensure(direct == formula, || format!("{name}: direct {direct}, formula {formula}"))?;
        if g.is_symmetric().or_fail()? && mu.n_max >= 2 * g.k {
            let c = u_stat_covariances(mu, &g).or_fail()?;
            let third_route = variance_from_covariances(n, g.k, &c);
            ensure(third_route == direct, || format!("{name}: covariance route gives {third_route}"))?;
        }
        rows.push(format!("{name}: {direct}"));
    }
    Ok(rows.join("; "))
}

fn u_statistics() -> Check {
    let third = ExactLaw::bernoulli_sequence(ratio(1, 3), 4).or_fail()?;
    let total = ExactLaw::uniform_total(4).or_fail()?;
    let er = ExactLaw::erdos_renyi(ratio(1, 2), 4).or_fail()?;
    let ergodic: Vec<(&str, &ExactLaw, KernelStatistic)> = vec![
        ("Bernoulli(1/3), x1", &third, KernelStatistic::coordinate_product(seq(), 1)),
        ("Bernoulli(1/3), x1x2", &third, KernelStatistic::coordinate_product(seq(), 2)),
        ("uniform order, 1<2", &total, KernelStatistic::indicator(DS::Total, 2, Element::total_order(&[1, 2]))),
        ("Erdős–Rényi(1/2), edge", &er, KernelStatistic::indicator(DS::Graph2, 2, edge())),
    ];
    for (name, mu, g) in &ergodic {
        ensure(check_independence(mu, 0.0).or_fail()?.passed(), || format!("{name} fails independence"))?;
        let c = u_stat_covariances(mu, g).or_fail()?;
        ensure(c[0] == ratio(0, 1), || format!("{name}: c_0 = {}", c[0]))?;
    }
    let mixture = mixture_law(2);
    let c = u_stat_covariances(&mixture, &KernelStatistic::coordinate_product(seq(), 1)).or_fail()?;
    ensure(c[0] == ratio(9, 100), || format!("mixture c_0 = {}", c[0]))?;

    let p = 0.3;
    let exact = ExactLaw::bernoulli_sequence(ratio(3, 10), 2).or_fail()?;
    let g = KernelStatistic::coordinate_product(seq(), 1);
    let c = u_stat_covariances(&exact, &g).or_fail()?;
    let sigma2 = exchg::stats::asymptotic_variance(1, &c);
    ensure(sigma2 == ratio(21, 100), || format!("σ² = {sigma2}"))?;
    let family = binary_sequence(threshold(&[1], p));
    let n = 200;
    let ground = IdSet::standard(n);
    let mut values = Vec::with_capacity(100_000);
    for j in 0..100_000 {
        let x = sample_array(&family, n, &Randomizer::full(derive_seed(12, j))).or_fail()?;
        values.push(avg_f64(&g, &ground, &x).or_fail()?);
    }
    let (mean, _) = mean_stderr(&values);
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    let scaled = n as f64 * var;
    let gap = (scaled - sigma2.as_f64()).abs();
    ensure(gap < 0.02, || format!("n·Var = {scaled:.4}, k²c_1 = {}", sigma2.as_f64()))?;
    Ok(format!("c_0 = 0 for 4 ergodic cases, mixture c_0 = 9/100; n·Var(avg) = {scaled:.4} vs k²c_1 = 21/100 at n=200"))
}

fn limits() -> Check {
    let d = DS::Graph2;
    let family = erdos_renyi(0.5);
    let r = Randomizer::full(13);
    let host = sample_array(&family, 30, &r).or_fail()?;
    let mut sequence = Vec::new();
    for n in 10..=30 {
        let incl = Injection::inclusion(&IdSet::standard(n), &IdSet::standard(30)).or_fail()?;
        sequence.push((n, d.restrict(&incl, &host).or_fail()?));
    }
    let traces = limit_estimate(&d, &sequence, &[(2, edge()), (3, triangle())], 0.05).or_fail()?;
    let (e, t) = (traces[0].estimate().unwrap(), traces[1].estimate().unwrap());
    ensure((e - 0.5).abs() <= 0.05, || format!("edge density {e}"))?;
    ensure((t - 0.125).abs() <= 0.05, || format!("triangle density {t}"))?;
    let check = density(&d, &IdSet::standard(2), &edge(), &IdSet::standard(30), &host).or_fail()?;
    ensure((check.as_f64() - e).abs() < 1e-12, || "trace and direct density disagree".into())?;
    let mu = induced_law(&d, 30, &host, 3).or_fail()?;
    let r = check_exchangeable(&mu, 0.02).or_fail()?;
    ensure(r.passed(), || format!("induced rule is not exchangeable: {:?}", r.witness))?;
    Ok(format!("edge density {e:.4}, triangle density {t:.4} at n=30; induced rule exchangeable on levels <= 3"))
}

fn universal_embedding_injective() -> Check {
    let mut rows = Vec::new();
    for d in [DS::Total, DS::Graph2, DS::SetSystem] {
        let eta = universal_embedding(&d, 3).or_fail()?;
        if let Some((n, x, y)) = check_injective(&eta, 3).or_fail()? {
            return Err(format!("{d}: {x} and {y} collide at level {n}"));
        }
        let mut sizes = Vec::new();
        for n in 0..=3 {
            let a = IdSet::standard(n);
            let xs = d.elements(&a).or_fail()?;
            let images: BTreeSet<Element> = xs.iter().map(|x| eta.apply(&a, x).unwrap()).collect();
            ensure(images.len() == xs.len(), || format!("{d} at level {n}: {} images of {}", images.len(), xs.len()))?;
            sizes.push(xs.len().to_string());
        }
        rows.push(format!("{d} ({})", sizes.join("/")));
    }
    Ok(format!("pairwise distinct images for {}", rows.join(", ")))
}

fn indexing_strategy() -> impl Strategy<Value = IS> {
    let leaf = prop_oneof![
        Just(IS::Id),
        Just(IS::Powerset),
        Just(IS::DTuplesStar),
        (0..5usize).prop_map(IS::Subsets),
        (0..5usize).prop_map(IS::SubsetsLe),
        (0..5usize).prop_map(IS::Tuples),
        (0..5usize).prop_map(IS::DTuples),
        (1..5usize).prop_map(IS::Pair),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IS::product(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IS::coproduct(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| IS::compose(a, b)),
        ]
    })
}

fn structure_strategy() -> impl Strategy<Value = DS> {
    let alphabet = proptest::collection::btree_set(-3i64..9, 1..4)
        .prop_map(|s| Alphabet::new(s.into_iter().collect()).unwrap());
    let leaf = prop_oneof![
        (alphabet, indexing_strategy()).prop_map(|(x, i)| DS::array(x, i)),
        Just(DS::SetSystem),
        Just(DS::Graph1),
        Just(DS::Graph2),
        Just(DS::Graph3),
        Just(DS::BinRel),
        Just(DS::Total),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| DS::product(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| DS::coproduct(a, b)),
            (inner.clone(), indexing_strategy()).prop_map(|(d, i)| DS::ComposeI(Box::new(d), i)),
            (inner.clone(), prop_oneof![Just("partition"), Just("symmetric"), Just("transitive")])
                .prop_map(|(d, n)| DS::Sub(Box::new(d), n.to_string())),
            (inner.clone(), 0..4usize).prop_map(|(d, e)| DS::Env(Box::new(d), e)),
            (inner.clone(), 1..4usize).prop_map(|(d, k)| DS::SepC1(Box::new(d), k)),
            (inner, 1..4usize).prop_map(|(d, k)| DS::SepC2(Box::new(d), k)),
        ]
    })
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_exchg")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn cli() -> Check {
    let mut runner = TestRunner::new(Config { cases: 500, failure_persistence: None, ..Config::default() });
    runner
        .run(&structure_strategy(), |d| {
            let text = d.to_string();
            let back = parse_structure(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(&back, &d);
            prop_assert_eq!(back.to_string(), text);
            Ok(())
        })
        .map_err(|e| format!("structure round trip: {e}"))?;
    runner
        .run(&indexing_strategy(), |i| {
            let text = i.to_string();
            let back = parse_indexing(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(&back, &i);
            Ok(())
        })
        .map_err(|e| format!("indexing round trip: {e}"))?;

    let (code, out, _) = run_cli(&["depth", "--structure", "total"]);
    ensure(code == 0 && out.trim() == "2", || format!("depth: exit {code}, output {out:?}"))?;
    let (code, out, err) = run_cli(&["axioms", "--indexing", "compose(powerset,dtuples_star)", "--n", "3"]);
    let report: Value = serde_json::from_str(&out).map_err(|e| format!("axioms output: {e}; {err}"))?;
    ensure(code == 0 && report["passed"] == Value::Bool(true), || format!("axioms: exit {code}"))?;
    let mixture = concat!(env!("CARGO_MANIFEST_DIR"), "/data/mixture.json");
    let (code, out, err) = run_cli(&["law-check", "--law", mixture, "--independence"]);
    let report: Value = serde_json::from_str(&out).map_err(|e| format!("law-check output: {e}; {err}"))?;
    let w = &report["independence"]["witness"];
    let cov = w["covariance_value"].as_f64().unwrap_or(f64::NAN);
    ensure(code == 1 && w["covariance"] == "9/100" && (cov - 0.09).abs() < 1e-12, || {
        format!("law-check: exit {code}, witness {w}")
    })?;
    Ok("1000 generated expressions round-trip; depth exits 0 with 2, axioms exits 0, law-check exits 1 with covariance 0.09".into())
}
