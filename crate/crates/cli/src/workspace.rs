//! Workspace files: TOML documents naming models, vectors, parameter sets,
//! rational sequences and an ordered list of queries.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use hilbert_spectra::measure::{BorelMeasure, Interval};
use hilbert_spectra::model::{EigenSlot, Multiplicity, OperatorModel, StepVector};
use hilbert_spectra::subspace::ParameterSet;
use hilbert_spectra::{Cx, Rational};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::query::Query;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{entity}: {message}")]
    Validation { entity: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// A rational written as an integer or a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Text(String),
}

pub type Lit = Spanned<Literal>;

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceFile {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub models: BTreeMap<String, ModelSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vectors: BTreeMap<String, VectorSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sets: BTreeMap<String, SetSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sequences: BTreeMap<String, Vec<Lit>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<Spanned<String>>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<SlotSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summands: Vec<SummandSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    pub at: Lit,
    /// A positive integer or `"omega"`.
    pub mult: Lit,
}

/// A finite measure: atoms `[loc, mass]` and density pieces `[a, b, height]`
/// on `[a, b)`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummandSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<Tuple>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pieces: Vec<Tuple>,
}

pub type Tuple = Spanned<Vec<Literal>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSpec {
    pub model: Spanned<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<SlotEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub density: Vec<DensityEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomEntry>,
}

/// `[re, im]`.
pub type ComplexLit = Tuple;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotEntry {
    /// Eigenvalue of the slot.
    pub at: Lit,
    #[serde(default)]
    pub copy: u64,
    pub value: ComplexLit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityEntry {
    pub summand: usize,
    pub on: Spanned<String>,
    pub value: ComplexLit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub summand: usize,
    pub at: Lit,
    pub value: ComplexLit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub model: Spanned<String>,
    #[serde(default)]
    pub vectors: Vec<Spanned<String>>,
}

pub type Model = Arc<OperatorModel<Rational>>;

/// A parsed and validated workspace.
#[derive(Debug)]
pub struct Workspace {
    pub file: WorkspaceFile,
    pub models: BTreeMap<String, Model>,
    pub vectors: BTreeMap<String, (String, StepVector<Rational>)>,
    pub sets: BTreeMap<String, (String, ParameterSet<Rational>)>,
    pub sequences: BTreeMap<String, Vec<Rational>>,
    pub queries: Vec<Query>,
}

/// Line of a byte offset, 1-based.
pub(crate) fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    source: &'a str,
}

impl Ctx<'_> {
    fn err<T>(&self, span: std::ops::Range<usize>, message: impl Into<String>) -> Result<T, LoadError> {
        Err(LoadError::Parse {
            line: line_of(self.source, span.start),
            message: message.into(),
        })
    }

    fn rational(&self, lit: &Lit) -> Result<Rational, LoadError> {
        match parse_literal(lit.get_ref()) {
            Ok(q) => Ok(q),
            Err(m) => self.err(lit.span(), m),
        }
    }

    fn tuple(&self, lit: &Tuple, len: usize, shape: &str) -> Result<Vec<Rational>, LoadError> {
        let parts = lit.get_ref();
        if parts.len() != len {
            return self.err(lit.span(), format!("expected {shape}"));
        }
        parts
            .iter()
            .map(|p| parse_literal(p).or_else(|m| self.err(lit.span(), m)))
            .collect()
    }

    fn complex(&self, lit: &ComplexLit) -> Result<Cx<Rational>, LoadError> {
        let mut z = self.tuple(lit, 2, "a complex value [re, im]")?;
        let im = z.pop().expect("two parts");
        Ok(Cx::new(z.pop().expect("two parts"), im))
    }

    fn interval(&self, s: &Spanned<String>) -> Result<(Rational, Rational), LoadError> {
        match parse_interval(s.get_ref()) {
            Ok(iv) => Ok(iv),
            Err(m) => self.err(s.span(), m),
        }
    }

    fn multiplicity(&self, lit: &Lit) -> Result<Multiplicity, LoadError> {
        match lit.get_ref() {
            Literal::Int(k) if *k > 0 => Ok(Multiplicity::Finite(*k as u64)),
            Literal::Text(t) if t == "omega" => Ok(Multiplicity::Omega),
            _ => self.err(lit.span(), "multiplicity must be a positive integer or \"omega\""),
        }
    }
}

pub fn parse_literal(lit: &Literal) -> Result<Rational, String> {
    match lit {
        Literal::Int(n) => Ok(Rational::from_integer((*n).into())),
        Literal::Text(t) => parse_rational(t),
    }
}

pub fn parse_rational(t: &str) -> Result<Rational, String> {
    let t = t.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = parse_integer(num).ok_or_else(|| format!("malformed rational \"{t}\""))?;
    let d = parse_integer(den).ok_or_else(|| format!("malformed rational \"{t}\""))?;
    if d.is_zero() {
        return Err(format!("malformed rational \"{t}\": zero denominator"));
    }
    Ok(Rational::new(n, d))
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s).ok()
}

/// `"[a, b)"` with `a < b`.
pub fn parse_interval(s: &str) -> Result<(Rational, Rational), String> {
    let t = s.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| format!("interval \"{t}\" must be written [a, b)"))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| format!("interval \"{t}\" must be written [a, b)"))?;
    let a = parse_rational(a)?;
    let b = parse_rational(b)?;
    if a >= b {
        return Err(format!("interval \"{t}\" is empty"));
    }
    Ok((a, b))
}

fn invalid(entity: impl Into<String>, message: impl ToString) -> LoadError {
    LoadError::Validation {
        entity: entity.into(),
        message: message.to_string(),
    }
}

pub fn parse_workspace_str(source: &str) -> Result<Workspace, LoadError> {
    let file: WorkspaceFile = toml::from_str(source).map_err(|e| LoadError::Parse {
        line: e.span().map_or(1, |s| line_of(source, s.start)),
        message: e.message().to_string(),
    })?;
    validate(file, source)
}

pub fn parse_workspace(path: &std::path::Path) -> Result<Workspace, LoadError> {
    let source = std::fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_workspace_str(&source)
}

fn validate(file: WorkspaceFile, source: &str) -> Result<Workspace, LoadError> {
    let ctx = Ctx { source };
    let mut models = BTreeMap::new();
    for (name, spec) in &file.models {
        let entity = format!("model {name}");
        let mut slots = Vec::new();
        for s in &spec.slots {
            slots.push(EigenSlot::new(ctx.rational(&s.at)?, ctx.multiplicity(&s.mult)?));
        }
        let mut summands = Vec::new();
        for (k, s) in spec.summands.iter().enumerate() {
            let atoms = s
                .atoms
                .iter()
                .map(|a| {
                    let mut t = ctx.tuple(a, 2, "an atom [loc, mass]")?.into_iter();
                    Ok((t.next().unwrap(), t.next().unwrap()))
                })
                .collect::<Result<Vec<_>, LoadError>>()?;
            let pieces = s
                .pieces
                .iter()
                .map(|p| {
                    let mut t = ctx.tuple(p, 3, "a piece [a, b, height]")?.into_iter();
                    let (a, b) = (t.next().unwrap(), t.next().unwrap());
                    if a >= b {
                        return ctx.err(p.span(), format!("piece [{a}, {b}) is empty"));
                    }
                    Ok((a, b, t.next().unwrap()))
                })
                .collect::<Result<Vec<_>, LoadError>>()?;
            let mu = BorelMeasure::new(atoms, pieces).map_err(|e| invalid(format!("{entity}, summand {k}"), e))?;
            summands.push(mu);
        }
        let mut eigenvalues: Vec<&Rational> = slots.iter().map(|s| &s.eigenvalue).collect();
        eigenvalues.sort();
        if eigenvalues.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(entity, "two slots share an eigenvalue"));
        }
        let m = OperatorModel::new(slots, summands).map_err(|e| invalid(&entity, e))?;
        models.insert(name.clone(), m.into_shared());
    }

    let mut vectors = BTreeMap::new();
    for (name, spec) in &file.vectors {
        let entity = format!("vector {name}");
        let model = models
            .get(spec.model.get_ref())
            .ok_or_else(|| invalid(&entity, format!("unknown model \"{}\"", spec.model.get_ref())))?;
        let mut b = StepVector::builder(model);
        for e in &spec.slots {
            let at = ctx.rational(&e.at)?;
            let slot = model
                .slot_index(&at)
                .ok_or_else(|| invalid(&entity, format!("model has no slot at {at}")))?;
            b = b.slot(slot, e.copy, ctx.complex(&e.value)?);
        }
        for e in &spec.density {
            let (a, bb) = ctx.interval(&e.on)?;
            let mu = model
                .summands()
                .get(e.summand)
                .ok_or_else(|| invalid(&entity, format!("model has no summand {}", e.summand)))?;
            if !covered(mu, &a, &bb) {
                return Err(invalid(
                    &entity,
                    format!("[{a}, {bb}) is not inside the density support of summand {}", e.summand),
                ));
            }
            b = b.density(e.summand, a, bb, ctx.complex(&e.value)?);
        }
        for e in &spec.atoms {
            b = b.atom(e.summand, ctx.rational(&e.at)?, ctx.complex(&e.value)?);
        }
        let v = b.build().map_err(|e| invalid(&entity, e))?;
        vectors.insert(name.clone(), (spec.model.get_ref().clone(), v));
    }

    let mut sets = BTreeMap::new();
    for (name, spec) in &file.sets {
        let entity = format!("set {name}");
        let model = models
            .get(spec.model.get_ref())
            .ok_or_else(|| invalid(&entity, format!("unknown model \"{}\"", spec.model.get_ref())))?;
        let mut gens = Vec::new();
        for v in &spec.vectors {
            let (m, x) = vectors
                .get(v.get_ref())
                .ok_or_else(|| invalid(&entity, format!("unknown vector \"{}\"", v.get_ref())))?;
            if m != spec.model.get_ref() {
                return Err(invalid(&entity, format!("vector \"{}\" belongs to model \"{m}\"", v.get_ref())));
            }
            gens.push(x.clone());
        }
        let set = ParameterSet::new(model, gens).map_err(|e| invalid(&entity, e))?;
        sets.insert(name.clone(), (spec.model.get_ref().clone(), set));
    }

    let mut sequences = BTreeMap::new();
    for (name, lits) in &file.sequences {
        let values = lits.iter().map(|l| ctx.rational(l)).collect::<Result<Vec<_>, _>>()?;
        sequences.insert(name.clone(), values);
    }

    let mut ws = Workspace {
        file,
        models,
        vectors,
        sets,
        sequences,
        queries: Vec::new(),
    };
    let mut queries = Vec::new();
    for (k, q) in ws.file.queries.iter().enumerate() {
        let query = Query::parse(q.get_ref()).or_else(|m| ctx.err(q.span(), m))?;
        query
            .resolve(&ws)
            .map_err(|m| invalid(format!("query {} ({})", k + 1, q.get_ref()), m))?;
        queries.push(query);
    }
    ws.queries = queries;
    Ok(ws)
}

/// `[a, b)` lies inside the density support of `mu`.
fn covered(mu: &BorelMeasure<Rational>, a: &Rational, b: &Rational) -> bool {
    let iv = Interval::finite(a.clone(), b.clone()).expect("non-empty");
    let mut len = Rational::zero();
    for (piece, _) in mu.density().pieces() {
        if let Some(x) = piece.intersect(&iv) {
            len += x.length().expect("bounded");
        }
    }
    len == b.clone() - a.clone()
}

impl WorkspaceFile {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("workspace serializes")
    }
}
