use serde_json::{json, Value};

use exchg::indexing::{Axiom, AxiomReport, Skeleton};
use exchg::laws::{ExchangeabilityReport, IndependenceReport, Mass};
use exchg::nat::NaturalityReport;

fn axiom_name(a: Axiom) -> &'static str {
    match a {
        Axiom::Functoriality => "functoriality",
        Axiom::Intersection => "intersection",
        Axiom::Inclusion => "inclusion",
    }
}

pub fn axioms(indexing: &str, n_max: usize, r: &AxiomReport) -> Value {
    let violations: Vec<Value> = r
        .violations
        .iter()
        .map(|v| {
            json!({
                "axiom": axiom_name(v.axiom),
                "sets": v.sets.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
                "index": v.index.as_ref().map(|i| i.to_string()),
                "detail": v.detail,
            })
        })
        .collect();
    json!({
        "indexing": indexing,
        "n_max": n_max,
        "passed": r.passed(),
        "checks": r.checks,
        "violations": violations,
    })
}

pub fn skeleton(indexing: &str, sk: &Skeleton) -> Value {
    let reps: Vec<Value> = sk
        .representatives
        .iter()
        .zip(&sk.stabilizers)
        .map(|(rep, stab)| {
            json!({
                "rep": rep.to_string(),
                "size": rep.labels().len(),
                "stabilizer": stab.iter().map(|p| p.images().to_vec()).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "indexing": indexing, "max_size": sk.max_size, "representatives": reps })
}

pub fn exchangeable<P: Mass>(r: &ExchangeabilityReport<P>) -> Value {
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "tau": w.tau.to_json(),
            "element": w.element.to_json(),
            "pushed": w.pushed.to_json(),
            "direct": w.direct.to_json(),
        })
    });
    json!({ "passed": r.passed(), "checks": r.checks, "witness": witness })
}

pub fn independence<P: Mass>(r: &IndependenceReport<P>) -> Value {
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "a": w.a.to_json(),
            "b": w.b.to_json(),
            "x_a": w.x_a.to_json(),
            "x_b": w.x_b.to_json(),
            "joint": w.joint.to_json(),
            "product": w.product.to_json(),
            "covariance": w.covariance().to_json(),
            "covariance_value": w.covariance().as_f64(),
        })
    });
    json!({ "passed": r.passed(), "checks": r.checks, "witness": witness })
}

pub fn naturality(r: &NaturalityReport) -> Value {
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "tau": w.tau.to_json(),
            "element": w.element.to_json(),
            "restricted_image": w.restricted_image.to_json(),
            "image_of_restriction": w.image_of_restriction.to_json(),
        })
    });
    json!({ "passed": r.passed(), "checks": r.checks, "witness": witness })
}
