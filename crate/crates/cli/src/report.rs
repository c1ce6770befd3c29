//! Query dispatch and report rendering.

use std::fmt::Write as _;

use hilbert_spectra::approx::{
    approx_unitary_equivalence, diagonal_compact_split, find_perturbation, match_sequences, ApproxError,
    BasisTag, PerturbationWitness,
};
use hilbert_spectra::galois::{
    realize_type, type_distance_paper, type_distance_realization, type_of, types_equal, TypeInvariant,
};
use hilbert_spectra::independence::{
    canonical_base, dominates, find_splitting_witness, independence_defect, is_independent, is_orthogonal,
    SplittingOutcome,
};
use hilbert_spectra::measure::{BorelMeasure, IntervalSet};
use hilbert_spectra::model::{spectral_measure, Multiplicity, OperatorModel, StepVector};
use hilbert_spectra::oracle::{
    jacobi_eigensolve, oracle_realization_distance, oracle_spectral_measure, oracle_subspace_projection,
    AtomicCoordinates, HermitianMatrix,
};
use hilbert_spectra::spectra::{compute_spectrum, spectrally_equivalent, EquivalenceReport, EquivalenceViolation};
use hilbert_spectra::subspace::{acl, cyclic_subspace, project, ParameterSet, SubspaceHandle};
use hilbert_spectra::{Cx, Rational, Scalar};
use num_complex::Complex;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::query::{Command, Query};
use crate::workspace::{Model, Workspace};

pub const EXACT: &str = "exact";
pub const FLOAT: &str = "float(≤1e-10)";
pub const INCONCLUSIVE: &str = "inconclusive";

/// Truncation used when a query gives none.
pub const DEFAULT_TRUNCATION: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Inconclusive,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub query: String,
    pub status: Status,
    pub provenance: String,
    pub result: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let status = match self.status {
            Status::Ok => "ok",
            Status::Inconclusive => "inconclusive",
            Status::Error => "error",
        };
        let mut out = format!("{}  [{status}, {}]\n", self.query, self.provenance);
        render_text(&mut out, &self.result, 1);
        out
    }
}

fn render_text(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                if is_leaf(x) {
                    let _ = writeln!(out, "{pad}{k}: {}", leaf(x));
                } else {
                    let _ = writeln!(out, "{pad}{k}:");
                    render_text(out, x, depth + 1);
                }
            }
        }
        Value::Array(xs) => {
            for x in xs {
                if is_leaf(x) {
                    let _ = writeln!(out, "{pad}- {}", leaf(x));
                } else {
                    let _ = writeln!(out, "{pad}-");
                    render_text(out, x, depth + 1);
                }
            }
        }
        x => {
            let _ = writeln!(out, "{pad}{}", leaf(x));
        }
    }
}

fn is_leaf(v: &Value) -> bool {
    match v {
        Value::Object(m) => m.is_empty(),
        Value::Array(xs) => xs.iter().all(|x| !x.is_object() && (!x.is_array() || is_leaf(x))),
        _ => true,
    }
}

fn leaf(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(xs) => format!("[{}]", xs.iter().map(leaf).collect::<Vec<_>>().join(", ")),
        Value::Object(_) => "{}".into(),
        x => x.to_string(),
    }
}

pub fn rat(q: &Rational) -> Value {
    Value::String(q.to_string())
}

pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

pub fn complex(z: &Cx<Rational>) -> Value {
    json!([rat(&z.re), rat(&z.im)])
}

pub fn multiplicity(m: Multiplicity) -> Value {
    match m {
        Multiplicity::Finite(k) => json!(k),
        Multiplicity::Omega => json!("omega"),
    }
}

pub fn interval_set(s: &IntervalSet<Rational>) -> Value {
    json!({
        "intervals": s.intervals().iter().map(|iv| iv.to_string()).collect::<Vec<_>>(),
        "points": s.points().iter().map(rat).collect::<Vec<_>>(),
    })
}

pub fn measure(mu: &BorelMeasure<Rational>) -> Value {
    json!({
        "atoms": mu.atoms().iter().map(|(x, m)| json!([rat(x), rat(m)])).collect::<Vec<_>>(),
        "pieces": mu.pieces().iter().map(|(a, b, h)| json!([rat(a), rat(b), rat(h)])).collect::<Vec<_>>(),
    })
}

pub fn vector(v: &StepVector<Rational>) -> Value {
    let slots: Vec<Value> = v
        .slot_coords()
        .iter()
        .map(|((s, c), z)| {
            json!({
                "at": rat(&v.model().slots()[*s].eigenvalue),
                "copy": c,
                "value": complex(z),
            })
        })
        .collect();
    let mut density = Vec::new();
    let mut atoms = Vec::new();
    for (s, part) in v.parts().iter().enumerate() {
        for (iv, z) in part.density().pieces() {
            density.push(json!({"summand": s, "on": iv.to_string(), "value": complex(z)}));
        }
        for (x, z) in part.atoms() {
            atoms.push(json!({"summand": s, "at": rat(x), "value": complex(z)}));
        }
    }
    json!({"slots": slots, "density": density, "atoms": atoms})
}

pub fn model(m: &OperatorModel<Rational>) -> Value {
    json!({
        "slots": m
            .slots()
            .iter()
            .map(|s| json!({"at": rat(&s.eigenvalue), "mult": multiplicity(s.multiplicity)}))
            .collect::<Vec<_>>(),
        "summands": m.summands().iter().map(measure).collect::<Vec<_>>(),
    })
}

fn type_invariant(t: &TypeInvariant<Rational>) -> Value {
    json!({
        "base": vector(t.base()),
        "residual": measure(t.residual_measure()),
        "context_size": t.context().len(),
    })
}

fn violations(r: &EquivalenceReport<Rational>) -> Value {
    r.violations
        .iter()
        .map(|v| match v {
            EquivalenceViolation::Spectrum { witness } => json!({"kind": "spectrum", "witness": rat(witness)}),
            EquivalenceViolation::Essential { witness } => {
                json!({"kind": "essential", "witness": rat(witness)})
            }
            EquivalenceViolation::Multiplicity { eigenvalue, left, right } => json!({
                "kind": "multiplicity",
                "eigenvalue": rat(eigenvalue),
                "left": multiplicity(*left),
                "right": multiplicity(*right),
            }),
        })
        .collect()
}

fn witness(w: &PerturbationWitness<Rational>) -> Value {
    json!({
        "left": w.left.iter().map(rat).collect::<Vec<_>>(),
        "right": w.right.iter().map(rat).collect::<Vec<_>>(),
        "permutation": w.permutation,
        "matched_gap": float(w.matched_gap),
        "split_bounds": [rat(&w.split_bounds.0), rat(&w.split_bounds.1)],
        "operator_gap": float(w.operator_gap),
        "reverse_gap": float(w.reverse_gap),
        "tail_norms": w.tail_norms.iter().map(|&x| float(x)).collect::<Vec<_>>(),
    })
}

fn ranks(h: &SubspaceHandle<Rational>) -> Value {
    json!({
        "intervals": h
            .interval_ranks()
            .iter()
            .map(|(a, b, r)| json!([format!("[{a}, {b})"), r]))
            .collect::<Vec<_>>(),
        "points": h.point_ranks().iter().map(|(x, r)| json!([rat(x), r])).collect::<Vec<_>>(),
        "includes_discrete_part": h.includes_discrete_part(),
    })
}

struct Outcome {
    status: Status,
    provenance: String,
    result: Value,
}

fn ok(provenance: &str, result: Value) -> Result<Outcome, String> {
    Ok(Outcome {
        status: Status::Ok,
        provenance: provenance.into(),
        result,
    })
}

fn inconclusive(result: Value) -> Result<Outcome, String> {
    Ok(Outcome {
        status: Status::Inconclusive,
        provenance: INCONCLUSIVE.into(),
        result,
    })
}

fn provenance_of(command: Command) -> &'static str {
    match command {
        Command::TypeDistance | Command::Match | Command::Perturbation | Command::Oracle => FLOAT,
        _ => EXACT,
    }
}

pub fn run_query(ws: &Workspace, q: &Query) -> Report {
    let outcome = q.resolve(ws).and_then(|()| dispatch(ws, q));
    match outcome {
        Ok(o) => Report {
            query: q.text.clone(),
            status: o.status,
            provenance: o.provenance,
            result: o.result,
        },
        Err(message) => Report {
            query: q.text.clone(),
            status: Status::Error,
            provenance: provenance_of(q.command).into(),
            result: json!({"error": message}),
        },
    }
}

pub fn run_all(ws: &Workspace, queries: &[Query]) -> Vec<Report> {
    queries.iter().map(|q| run_query(ws, q)).collect()
}

struct Args<'a> {
    ws: &'a Workspace,
    names: &'a [String],
}

impl Args<'_> {
    fn model(&self, i: usize) -> &Model {
        &self.ws.models[&self.names[i]]
    }

    fn vector(&self, i: usize) -> &StepVector<Rational> {
        &self.ws.vectors[&self.names[i]].1
    }

    fn set(&self, i: usize) -> &ParameterSet<Rational> {
        &self.ws.sets[&self.names[i]].1
    }

    fn sequence(&self, i: usize) -> &[Rational] {
        &self.ws.sequences[&self.names[i]]
    }

    fn entity(&self, i: usize) -> String {
        format!("\"{}\"", self.names[i])
    }

    fn type_of(&self, v: usize, s: usize) -> Result<TypeInvariant<Rational>, String> {
        type_of(self.vector(v), self.set(s)).map_err(|e| format!("type of {} over {}: {e}", self.entity(v), self.entity(s)))
    }
}

fn dispatch(ws: &Workspace, q: &Query) -> Result<Outcome, String> {
    let a = Args { ws, names: &q.args };
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match q.command {
        Command::Spectrum => {
            let s = compute_spectrum(&**a.model(0));
            ok(
                EXACT,
                json!({
                    "point_spectrum": s.point_spectrum.iter().map(|(x, m)| json!([rat(x), multiplicity(*m)])).collect::<Vec<_>>(),
                    "essential_spectrum": interval_set(&s.essential_spectrum),
                    "discrete_spectrum": s.discrete_spectrum.iter().map(|(x, k)| json!([rat(x), k])).collect::<Vec<_>>(),
                    "full_spectrum": interval_set(&s.full_spectrum),
                }),
            )
        }
        Command::Equivalent => {
            let r = spectrally_equivalent(&**a.model(0), &**a.model(1));
            let mut out = Map::new();
            out.insert("equivalent".into(), json!(r.equivalent));
            out.insert("violations".into(), violations(&r));
            let Some(eps) = &q.eps else {
                return ok(EXACT, Value::Object(out));
            };
            if !r.equivalent {
                return ok(EXACT, Value::Object(out));
            }
            let n = q.truncation.unwrap_or(DEFAULT_TRUNCATION);
            let w = approx_unitary_equivalence(&**a.model(0), &**a.model(1), eps, n).map_err(|e| err(&e))?;
            out.insert("eps".into(), rat(eps));
            out.insert("truncation".into(), json!(n));
            out.insert("witness".into(), witness(&w));
            ok(FLOAT, Value::Object(out))
        }
        Command::Type => ok(EXACT, type_invariant(&a.type_of(0, 1)?)),
        Command::TypeEqual => {
            let (t1, t2) = (a.type_of(0, 2)?, a.type_of(1, 2)?);
            ok(EXACT, json!({"equal": types_equal(&t1, &t2).map_err(|e| err(&e))?}))
        }
        Command::TypeDistance => {
            let (t1, t2) = (a.type_of(0, 2)?, a.type_of(1, 2)?);
            let three_case = type_distance_paper(&t1, &t2).map_err(|e| err(&e))?;
            let realization = type_distance_realization(&t1, &t2).map_err(|e| err(&e))?;
            let oracle = oracle_distance(a.model_of_vector(0), a.set(2), a.vector(0), a.vector(1));
            ok(
                FLOAT,
                json!({
                    "three_case": float(three_case),
                    "realization": float(realization),
                    "oracle": oracle.map_or(Value::Null, float),
                    "discrepancy": (three_case - realization).abs() > 1e-10,
                }),
            )
        }
        Command::Realize => {
            let t = a.type_of(0, 1)?;
            let r = realize_type(&t).map_err(|e| err(&e))?;
            let context = a.set(1).embed(&r.embedding).map_err(|e| err(&e))?;
            let again = type_of(&r.vector, &context).map_err(|e| err(&e))?;
            let moved = t.transport(&r.embedding).map_err(|e| err(&e))?;
            ok(
                EXACT,
                json!({
                    "model": model(&r.model),
                    "vector": vector(&r.vector),
                    "round_trip": types_equal(&again, &moved).map_err(|e| err(&e))?,
                }),
            )
        }
        Command::Independent => {
            let v = is_independent(a.vector(0), a.set(1), a.set(2)).map_err(|e| err(&e))?;
            ok(EXACT, json!({"independent": v.independent, "defect": rat(&v.defect)}))
        }
        Command::EpsIndependent => {
            let eps = q.eps.as_ref().expect("checked by the parser");
            let defect = independence_defect(a.vector(0), a.set(1), a.set(2)).map_err(|e| err(&e))?;
            ok(
                EXACT,
                json!({
                    "independent": defect <= eps.clone() * eps.clone(),
                    "defect": rat(&defect),
                    "eps": rat(eps),
                }),
            )
        }
        Command::CanonicalBase => {
            let g = a.set(1);
            let cb = canonical_base(std::slice::from_ref(a.vector(0)), g).map_err(|e| err(&e))?;
            let over = ParameterSet::new(g.model(), cb.clone()).map_err(|e| err(&e))?;
            let check = is_independent(a.vector(0), &over, g).map_err(|e| err(&e))?;
            ok(
                EXACT,
                json!({
                    "base": cb.iter().map(vector).collect::<Vec<_>>(),
                    "independent_over_base": check.independent,
                }),
            )
        }
        Command::Splitting => match find_splitting_witness(a.vector(0), a.set(1), a.set(2)).map_err(|e| err(&e))? {
            SplittingOutcome::Found(w) => ok(
                EXACT,
                json!({
                    "outcome": "found",
                    "w1": vector(&w.w1),
                    "w2": vector(&w.w2),
                    "fresh_copy": w.fresh_copy,
                }),
            ),
            SplittingOutcome::NotSplitting => ok(EXACT, json!({"outcome": "not-splitting"})),
            SplittingOutcome::Inconclusive => inconclusive(json!({"outcome": "inconclusive"})),
        },
        Command::Orthogonal => {
            let r = is_orthogonal(&a.type_of(0, 2)?, &a.type_of(1, 2)?).map_err(|e| err(&e))?;
            ok(EXACT, json!({"orthogonal": r.orthogonal, "overlap": measure(&r.overlap)}))
        }
        Command::Dominates => {
            let d = dominates(&a.type_of(0, 2)?, &a.type_of(1, 2)?).map_err(|e| err(&e))?;
            ok(EXACT, json!({"dominates": d}))
        }
        Command::Match => {
            let eps = q.eps.as_ref().expect("checked by the parser");
            let xs: Vec<f64> = a.sequence(0).iter().map(Scalar::to_real).collect();
            let ys: Vec<f64> = a.sequence(1).iter().map(Scalar::to_real).collect();
            let w = match_sequences::<f64, Rational>(&xs, &ys, eps.to_real()).map_err(|e| err(&e))?;
            ok(
                FLOAT,
                json!({
                    "permutation": w.permutation,
                    "per_index_gap": w.per_index_gap.iter().map(|&g| float(g)).collect::<Vec<_>>(),
                    "schedule": w.schedule,
                    "satisfies_schedule": w.satisfies_schedule(),
                    "eps": rat(eps),
                }),
            )
        }
        Command::WvnbSplit => {
            let eps = q.eps.as_ref().expect("checked by the parser");
            let m = a.model(0);
            let cells = match q.cells {
                Some(c) => c,
                None => match diagonal_compact_split(&**m, eps, 0) {
                    Ok(_) => 0,
                    Err(ApproxError::CellBudgetTooSmall { required }) => required,
                    Err(e) => return Err(e.to_string()),
                },
            };
            let s = diagonal_compact_split(&**m, eps, cells).map_err(|e| err(&e))?;
            let diagonal: Vec<Value> = s
                .diagonal
                .iter()
                .map(|d| {
                    let tag = match &d.tag {
                        BasisTag::Cell { lo, hi } => format!("cell [{lo}, {hi})"),
                        BasisTag::Eigenvalue => "eigenvalue".into(),
                        BasisTag::IsolatedOmega => "isolated-omega".into(),
                    };
                    json!({"value": rat(&d.value), "multiplicity": multiplicity(d.multiplicity), "tag": tag})
                })
                .collect();
            ok(
                EXACT,
                json!({"cells": cells, "k_bound": rat(&s.k_bound), "eps": rat(eps), "diagonal": diagonal}),
            )
        }
        Command::Perturbation => {
            let eps = q.eps.as_ref().expect("checked by the parser");
            let n = q.truncation.unwrap_or(DEFAULT_TRUNCATION);
            match find_perturbation(&**a.model(0), &**a.model(1), eps, n) {
                Ok(w) => ok(FLOAT, json!({"eps": rat(eps), "truncation": n, "witness": witness(&w)})),
                Err(ApproxError::NoWitnessFound { operator_gap }) => inconclusive(json!({
                    "eps": rat(eps),
                    "truncation": n,
                    "outcome": "no witness found",
                    "operator_gap": float(operator_gap),
                })),
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Oracle => oracle(&a),
        Command::Closure => {
            let s = a.set(0);
            ok(EXACT, json!({"dcl": ranks(&cyclic_subspace(s)), "acl": ranks(&acl(s))}))
        }
    }
}

impl Args<'_> {
    fn model_of_vector(&self, i: usize) -> &Model {
        &self.ws.models[&self.ws.vectors[&self.names[i]].0]
    }
}

/// Rows of a fixed unitary: the eigenvectors of a Hilbert-like Hermitian
/// matrix, so that the oracle never sees a diagonal operator.
fn fixed_unitary(n: usize) -> Vec<Vec<Complex<f64>>> {
    let h = HermitianMatrix::from_upper(n, |i, j| {
        let re = 1.0 / (i + j + 1) as f64;
        let im = if i == j { 0.0 } else { 1.0 / (j - i + n) as f64 };
        Complex::new(re, im)
    })
    .expect("bounded dimension");
    jacobi_eigensolve(&h).expect("converges").vectors
}

fn oracle_distance(
    m: &Model,
    s: &ParameterSet<Rational>,
    v1: &StepVector<Rational>,
    v2: &StepVector<Rational>,
) -> Option<f64> {
    let c = AtomicCoordinates::new(&**m).ok()?;
    let u = fixed_unitary(c.dimension());
    let gens: Vec<_> = s.generators().iter().map(|g| c.rotated_coordinates(&u, g)).collect();
    oracle_realization_distance(
        &c.rotated_matrix(&u),
        &gens,
        &c.rotated_coordinates(&u, v1),
        &c.rotated_coordinates(&u, v2),
    )
    .ok()
}

fn oracle(a: &Args<'_>) -> Result<Outcome, String> {
    let m = a.model(0);
    let v = a.vector(1);
    let c = AtomicCoordinates::new(&**m).map_err(|e| format!("model {}: {e}", a.entity(0)))?;
    let u = fixed_unitary(c.dimension());
    let matrix = c.rotated_matrix(&u);
    let x = c.rotated_coordinates(&u, v);
    let found = oracle_spectral_measure(&matrix, &x).map_err(|e| e.to_string())?;
    let exact = spectral_measure(v);
    let mut discrepancy: f64 = 0.0;
    let mut matched = vec![false; exact.atoms().len()];
    for (loc, mass) in &found {
        let k = exact.atoms().iter().position(|(y, _)| (y.to_real() - loc).abs() <= 1e-9);
        let want = match k {
            Some(k) => {
                matched[k] = true;
                exact.atoms()[k].1.to_real()
            }
            None => 0.0,
        };
        discrepancy = discrepancy.max((mass - want).abs());
    }
    for (k, (_, mass)) in exact.atoms().iter().enumerate() {
        if !matched[k] {
            discrepancy = discrepancy.max(mass.to_real());
        }
    }
    let mut out = Map::new();
    out.insert("dimension".into(), json!(c.dimension()));
    out.insert("exact_measure".into(), measure(&exact));
    out.insert(
        "oracle_measure".into(),
        found.iter().map(|(x, m)| json!([float(*x), float(*m)])).collect(),
    );
    out.insert("measure_discrepancy".into(), float(discrepancy));
    let mut worst = discrepancy;
    if a.names.len() > 2 {
        let s = a.set(2);
        let gens: Vec<_> = s.generators().iter().map(|g| c.rotated_coordinates(&u, g)).collect();
        let p = oracle_subspace_projection(&matrix, &gens, &x).map_err(|e| e.to_string())?;
        let exact_p = project(&cyclic_subspace(s), v).map_err(|e| e.to_string())?;
        let want = c.rotated_coordinates(&u, &exact_p);
        let gap = p.iter().zip(&want).fold(0.0f64, |acc, (a, b)| acc.max((a - b).norm()));
        out.insert("projection_discrepancy".into(), float(gap));
        worst = worst.max(gap);
    }
    let provenance = if worst <= 1e-10 {
        FLOAT.to_string()
    } else {
        format!("float(≤{:.0e})", worst * 2.0)
    };
    ok(&provenance, Value::Object(out))
}
