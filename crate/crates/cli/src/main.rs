mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use exchg::dsl::{parse_indexing, parse_structure};
use exchg::indexing::{check_axioms, Skeleton};
use exchg::laws::{check_exchangeable, check_independence, law_from_json, AnyLaw, FiniteLaw, Mass, FLOAT_TOL};
use exchg::nat::{build_from_kernels, check_injective, check_naturality, universal_embedding, KernelFamily};
use exchg::sample::{
    derive_seed, random_family_from_json, sample_array, sample_measurement, sample_total_order, Randomizer,
};
use exchg::stats::{asymptotic_variance, avg, density, limit_estimate, u_stat_covariances, KernelStatistic};
use exchg::structures::depth;
use exchg::{DataStructure, Element, Error, IdSet, StructureRule};

#[derive(Parser)]
#[command(name = "exchg", version, about = "Checks, samplers and estimators for exchangeable structures")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Check the indexing-system axioms on all label sets in [n].
    Axioms(Opts),
    /// Representatives and stabilizers up to size n.
    Skeleton(Opts),
    /// Depth of a data structure.
    Depth(Opts),
    /// Every element over [n].
    Elements(Opts),
    /// Exchangeability (and optionally independence) of a finite law.
    LawCheck(Opts),
    /// Draw elements over [n].
    Sample(Opts),
    /// Densities of target elements in host elements.
    Density(Opts),
    /// Injection averages of a kernel statistic.
    Avg(Opts),
    /// U-statistic covariances under a finite law.
    Ustat(Opts),
    /// Density traces along a growing host sequence.
    Limit(Opts),
    /// Universal embedding and its injectivity.
    Embed(Opts),
    /// Build a natural transformation from kernel tables and check it.
    BuildNat(Opts),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Jsonl,
}

#[derive(Args, Clone, Debug)]
struct Opts {
    #[arg(long)]
    structure: Option<String>,
    #[arg(long)]
    indexing: Option<String>,
    #[arg(long = "n", visible_alias = "n-max")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    law: Option<PathBuf>,
    #[arg(long)]
    kernels: Option<PathBuf>,
    /// Records `{"n": .., "element": ..}`, one per line.
    #[arg(long)]
    hosts: Option<PathBuf>,
    #[arg(long)]
    targets: Option<PathBuf>,
    /// `indicator` (first target) or `product` (needs --k).
    #[arg(long)]
    statistic: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    independence: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Outcome {
    Pass(String),
    Fail(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(Outcome::Pass(text)) => emit(text, 0),
        Ok(Outcome::Fail(text)) => emit(text, 1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(text: String, code: u8) -> ExitCode {
    print!("{text}");
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}

fn run(verb: Verb) -> Result<Outcome> {
    let (opts, f): (Opts, fn(&Opts) -> Result<Outcome>) = match verb {
        Verb::Axioms(o) => (o, axioms),
        Verb::Skeleton(o) => (o, skeleton),
        Verb::Depth(o) => (o, depth_verb),
        Verb::Elements(o) => (o, elements),
        Verb::LawCheck(o) => (o, law_check),
        Verb::Sample(o) => (o, sample),
        Verb::Density(o) => (o, density_verb),
        Verb::Avg(o) => (o, avg_verb),
        Verb::Ustat(o) => (o, ustat),
        Verb::Limit(o) => (o, limit),
        Verb::Embed(o) => (o, embed),
        Verb::BuildNat(o) => (o, build_nat),
    };
    let outcome = f(&opts)?;
    match &opts.out {
        Some(path) => {
            let (text, failed) = match outcome {
                Outcome::Pass(t) => (t, false),
                Outcome::Fail(t) => (t, true),
            };
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            let done = String::new();
            Ok(if failed { Outcome::Fail(done) } else { Outcome::Pass(done) })
        }
        None => Ok(outcome),
    }
}

fn structure(o: &Opts) -> Result<DataStructure> {
    let text = o.structure.as_deref().ok_or_else(|| anyhow!("--structure is required"))?;
    let d = parse_structure(text).map_err(|e| anyhow!("{text}: {e}"))?;
    d.validate(exchg::structures::REGISTRATION_N_MAX)?;
    Ok(d)
}

fn indexing(o: &Opts) -> Result<(String, exchg::IndexingSystem)> {
    let text = o.indexing.as_deref().ok_or_else(|| anyhow!("--indexing is required"))?;
    let i = parse_indexing(text).map_err(|e| anyhow!("{text}: {e}"))?;
    Ok((i.to_string(), i))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// JSON lines or a single JSON list of `{"n": .., "element": ..}`.
fn read_records(path: &Path) -> Result<Vec<(usize, Element)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values: Vec<Value> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)?
    } else {
        text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?
    };
    values
        .iter()
        .map(|v| {
            let n = v["n"].as_u64().ok_or_else(|| anyhow!("record without n: {v}"))? as usize;
            Ok((n, Element::from_json(&v["element"])?))
        })
        .collect()
}

fn json_text(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("serializable"))
}

fn verdict(passed: bool, text: String) -> Outcome {
    if passed {
        Outcome::Pass(text)
    } else {
        Outcome::Fail(text)
    }
}

fn axioms(o: &Opts) -> Result<Outcome> {
    let (text, i) = indexing(o)?;
    let n = o.n.unwrap_or(3);
    let r = check_axioms(&i, n)?;
    if let Some(v) = r.violations.first() {
        eprintln!("{text} violates {:?}: {}", v.axiom, v.detail);
    }
    Ok(verdict(r.passed(), json_text(&report::axioms(&text, n, &r))))
}

fn skeleton(o: &Opts) -> Result<Outcome> {
    let (text, i) = indexing(o)?;
    let sk = Skeleton::build(&i, o.n.unwrap_or(3), exchg::indexing::AlignChoice::First)?;
    Ok(Outcome::Pass(json_text(&report::skeleton(&text, &sk))))
}

fn depth_verb(o: &Opts) -> Result<Outcome> {
    let d = structure(o)?;
    let r = depth(&d, o.n.unwrap_or(3))?;
    Ok(Outcome::Pass(match o.format {
        Some(Format::Json) => {
            json_text(&json!({ "structure": d.to_string(), "depth": r.k, "certified": r.certified }))
        }
        _ => format!("{}\n", r.k),
    }))
}

fn elements(o: &Opts) -> Result<Outcome> {
    let d = structure(o)?;
    let n = o.n.ok_or_else(|| anyhow!("--n is required"))?;
    let xs = d.elements(&IdSet::standard(n))?;
    Ok(Outcome::Pass(match o.format {
        Some(Format::Json) => json_text(&json!({
            "structure": d.to_string(),
            "n": n,
            "count": xs.len(),
            "elements": xs.iter().map(Element::to_json).collect::<Vec<_>>(),
        })),
        _ => xs.iter().map(|x| format!("{}\n", json!({ "n": n, "element": x.to_json() }))).collect(),
    }))
}

fn law_report<P: Mass>(mu: &FiniteLaw<P>, o: &Opts, tol: f64) -> Result<Outcome> {
    let ex = check_exchangeable(mu, tol)?;
    let mut passed = ex.passed();
    let mut out = json!({ "structure": mu.structure.to_string(), "n_max": mu.n_max, "exchangeable": report::exchangeable(&ex) });
    if let Some(w) = &ex.witness {
        eprintln!("not exchangeable: {} under {}: {} vs {}", w.element, w.tau, w.pushed.as_f64(), w.direct.as_f64());
    }
    if o.independence {
        let ind = check_independence(mu, tol)?;
        if let Some(w) = &ind.witness {
            eprintln!(
                "independence fails on {} and {}: covariance {}",
                w.a,
                w.b,
                w.covariance().as_f64()
            );
        }
        passed &= ind.passed();
        out["independence"] = report::independence(&ind);
    }
    Ok(verdict(passed, json_text(&out)))
}

fn load_law(o: &Opts) -> Result<AnyLaw> {
    let path = o.law.as_deref().ok_or_else(|| anyhow!("--law is required"))?;
    Ok(law_from_json(&read_json(path)?)?)
}

fn law_check(o: &Opts) -> Result<Outcome> {
    match load_law(o)? {
        AnyLaw::Exact(mu) => law_report(&mu, o, o.tolerance.unwrap_or(0.0)),
        AnyLaw::Float(mu) => law_report(&mu, o, o.tolerance.unwrap_or(FLOAT_TOL)),
    }
}

/// `f(seed_j)` for `j < count`, split over `jobs` threads and merged in order.
fn fan_out<T: Send>(count: u64, jobs: usize, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let jobs = jobs.clamp(1, count.max(1) as usize) as u64;
    let chunk = count.div_ceil(jobs);
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|t| {
                let f = &f;
                s.spawn(move || (t * chunk..((t + 1) * chunk).min(count)).map(f).collect::<Result<Vec<T>>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampling thread panicked")).collect()
    });
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn sample(o: &Opts) -> Result<Outcome> {
    let n = o.n.ok_or_else(|| anyhow!("--n is required"))?;
    let draw: Box<dyn Fn(u64) -> Result<Element> + Sync> = if o.law.is_some() {
        let seed = o.seed;
        match load_law(o)? {
            AnyLaw::Exact(mu) => Box::new(move |j| Ok(sample_measurement(&mu, n, derive_seed(seed, j))?)),
            AnyLaw::Float(mu) => Box::new(move |j| Ok(sample_measurement(&mu, n, derive_seed(seed, j))?)),
        }
    } else {
        let d = structure(o)?;
        let seed = o.seed;
        match &o.kernels {
            Some(path) => {
                let family = random_family_from_json(&read_json(path)?, &d)?;
                Box::new(move |j| Ok(sample_array(&family, n, &Randomizer::full(derive_seed(seed, j)))?))
            }
            None if d == DataStructure::Total => {
                Box::new(move |j| Ok(sample_total_order(n, &Randomizer::full(derive_seed(seed, j)))?))
            }
            None => bail!("sampling {d} needs --kernels or --law"),
        }
    };
    let xs = fan_out(o.count, o.jobs, draw)?;
    let records: Vec<Value> =
        xs.iter().enumerate().map(|(j, x)| json!({ "n": n, "draw": j, "element": x.to_json() })).collect();
    Ok(Outcome::Pass(match o.format {
        Some(Format::Json) => json_text(&Value::Array(records)),
        _ => records.iter().map(|r| format!("{r}\n")).collect(),
    }))
}

fn csv_rows(rows: &[(usize, String, f64, Option<f64>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "target", "value", "stderr"])?;
    for (n, target, value, stderr) in rows {
        w.write_record([n.to_string(), target.clone(), value.to_string(), stderr.map_or(String::new(), |s| s.to_string())])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn hosts_and_targets(o: &Opts) -> Result<(Vec<(usize, Element)>, Vec<(usize, Element)>)> {
    let hosts = read_records(o.hosts.as_deref().ok_or_else(|| anyhow!("--hosts is required"))?)?;
    let targets = read_records(o.targets.as_deref().ok_or_else(|| anyhow!("--targets is required"))?)?;
    Ok((hosts, targets))
}

fn density_verb(o: &Opts) -> Result<Outcome> {
    let d = structure(o)?;
    let (hosts, targets) = hosts_and_targets(o)?;
    let mut rows = Vec::new();
    for (n, y) in &hosts {
        for (m, x) in &targets {
            let v = density(&d, &IdSet::standard(*m), x, &IdSet::standard(*n), y)?;
            rows.push((*n, x.to_string(), v.as_f64(), None));
        }
    }
    Ok(Outcome::Pass(csv_rows(&rows)?))
}

fn statistic(o: &Opts, d: &DataStructure) -> Result<KernelStatistic> {
    match o.statistic.as_deref() {
        Some("indicator") => {
            let path = o.targets.as_deref().ok_or_else(|| anyhow!("the indicator statistic needs --targets"))?;
            let (k, x) = read_records(path)?.into_iter().next().ok_or_else(|| anyhow!("no target records"))?;
            Ok(KernelStatistic::indicator(d.clone(), k, x))
        }
        Some("product") => {
            let k = o.k.ok_or_else(|| anyhow!("the product statistic needs --k"))?;
            Ok(KernelStatistic::coordinate_product(d.clone(), k))
        }
        Some(other) => bail!("unknown statistic {other}; expected indicator or product"),
        None => bail!("--statistic is required"),
    }
}

fn avg_verb(o: &Opts) -> Result<Outcome> {
    let d = structure(o)?;
    let g = statistic(o, &d)?;
    let hosts = read_records(o.hosts.as_deref().ok_or_else(|| anyhow!("--hosts is required"))?)?;
    let mut rows = Vec::new();
    for (n, y) in &hosts {
        rows.push((*n, g.name.clone(), avg(&g, &IdSet::standard(*n), y)?.as_f64(), None));
    }
    Ok(Outcome::Pass(csv_rows(&rows)?))
}

fn ustat_report<P: Mass>(mu: &FiniteLaw<P>, o: &Opts) -> Result<Outcome> {
    let g = statistic(o, &mu.structure)?;
    let symmetric = g.is_symmetric()?;
    if !symmetric {
        eprintln!("warning: {} is not symmetric", g.name);
    }
    let c = u_stat_covariances(mu, &g)?;
    let sigma2 = asymptotic_variance(g.k, &c);
    let out = json!({
        "statistic": g.name,
        "k": g.k,
        "symmetric": symmetric,
        "c": c.iter().map(Mass::to_json).collect::<Vec<_>>(),
        "c_value": c.iter().map(Mass::as_f64).collect::<Vec<_>>(),
        "sigma2": sigma2.to_json(),
        "sigma2_value": sigma2.as_f64(),
    });
    Ok(Outcome::Pass(json_text(&out)))
}

fn ustat(o: &Opts) -> Result<Outcome> {
    match load_law(o)? {
        AnyLaw::Exact(mu) => ustat_report(&mu, o),
        AnyLaw::Float(mu) => ustat_report(&mu, o),
    }
}

fn limit(o: &Opts) -> Result<Outcome> {
    let d = structure(o)?;
    let (hosts, targets) = hosts_and_targets(o)?;
    let traces = limit_estimate(&d, &hosts, &targets, o.tolerance.unwrap_or(0.05))?;
    let mut rows = Vec::new();
    for t in &traces {
        for (n, v) in &t.values {
            rows.push((*n, t.target.to_string(), *v, None));
        }
        let state = if t.converged { "converged" } else { "did not converge" };
        eprintln!("{}: {state}, last value {:?}", t.target, t.estimate());
    }
    Ok(verdict(traces.iter().all(|t| t.converged), csv_rows(&rows)?))
}

fn embed(o: &Opts) -> Result<Outcome> {
    let d = structure(o)?;
    let n = o.n.unwrap_or(3);
    let eta = universal_embedding(&d, n)?;
    let collision = check_injective(&eta, n)?;
    let nat = check_naturality(&eta, n)?;
    let out = json!({
        "structure": d.to_string(),
        "target": eta.target.to_string(),
        "n_max": n,
        "injective": collision.is_none(),
        "collision": collision.as_ref().map(|(m, x, y)| json!({ "n": m, "first": x.to_json(), "second": y.to_json() })),
        "naturality": report::naturality(&nat),
    });
    Ok(verdict(collision.is_none() && nat.passed(), json_text(&out)))
}

fn build_nat(o: &Opts) -> Result<Outcome> {
    let path = o.kernels.as_deref().ok_or_else(|| anyhow!("--kernels is required"))?;
    let family = KernelFamily::from_json(&read_json(path)?)?;
    let n = o.n.unwrap_or(3);
    match build_from_kernels(&family) {
        Err(Error::Asymmetric { rep, perm, input }) => {
            eprintln!("kernel for {rep} is not invariant under {perm:?} at {input}");
            let out = json!({
                "source": family.source.to_string(),
                "target": family.target().to_string(),
                "valid": false,
                "asymmetry": { "rep": rep, "perm": perm, "input": input },
            });
            Ok(Outcome::Fail(json_text(&out)))
        }
        Err(e) => Err(e.into()),
        Ok(eta) => {
            let nat = check_naturality(&eta, n)?;
            let out = json!({
                "source": family.source.to_string(),
                "target": family.target().to_string(),
                "valid": true,
                "n_max": n,
                "naturality": report::naturality(&nat),
            });
            Ok(verdict(nat.passed(), json_text(&out)))
        }
    }
}
