//! Query grammar: `command name... [--eps p/q] [--cells n] [--truncation n]`.

use std::fmt;

use hilbert_spectra::Rational;

use crate::workspace::{parse_rational, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Equivalent,
    Type,
    TypeEqual,
    TypeDistance,
    Realize,
    Independent,
    EpsIndependent,
    CanonicalBase,
    Splitting,
    Orthogonal,
    Dominates,
    Match,
    WvnbSplit,
    Perturbation,
    Oracle,
    Closure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Model,
    Vector,
    Set,
    Sequence,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Model => "model",
            Kind::Vector => "vector",
            Kind::Set => "set",
            Kind::Sequence => "sequence",
        })
    }
}

const ALL: [Command; 17] = [
    Command::Spectrum,
    Command::Equivalent,
    Command::Type,
    Command::TypeEqual,
    Command::TypeDistance,
    Command::Realize,
    Command::Independent,
    Command::EpsIndependent,
    Command::CanonicalBase,
    Command::Splitting,
    Command::Orthogonal,
    Command::Dominates,
    Command::Match,
    Command::WvnbSplit,
    Command::Perturbation,
    Command::Oracle,
    Command::Closure,
];

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Equivalent => "equivalent",
            Command::Type => "type",
            Command::TypeEqual => "type-equal",
            Command::TypeDistance => "type-distance",
            Command::Realize => "realize",
            Command::Independent => "independent",
            Command::EpsIndependent => "eps-independent",
            Command::CanonicalBase => "canonical-base",
            Command::Splitting => "splitting",
            Command::Orthogonal => "orthogonal",
            Command::Dominates => "dominates",
            Command::Match => "match",
            Command::WvnbSplit => "wvnb-split",
            Command::Perturbation => "perturbation",
            Command::Oracle => "oracle",
            Command::Closure => "closure",
        }
    }

    pub fn all() -> &'static [Command] {
        &ALL
    }

    fn from_name(s: &str) -> Option<Command> {
        ALL.iter().copied().find(|c| c.name() == s)
    }

    /// Required argument kinds and an optional trailing one.
    pub fn signature(self) -> (&'static [Kind], Option<Kind>) {
        use Kind::*;
        match self {
            Command::Spectrum | Command::WvnbSplit => (&[Model], None),
            Command::Equivalent | Command::Perturbation => (&[Model, Model], None),
            Command::Type | Command::Realize | Command::CanonicalBase => (&[Vector, Set], None),
            Command::TypeEqual | Command::TypeDistance | Command::Orthogonal | Command::Dominates => {
                (&[Vector, Vector, Set], None)
            }
            Command::Independent | Command::EpsIndependent | Command::Splitting => (&[Vector, Set, Set], None),
            Command::Match => (&[Sequence, Sequence], None),
            Command::Oracle => (&[Model, Vector], Some(Set)),
            Command::Closure => (&[Set], None),
        }
    }

    fn needs_eps(self) -> bool {
        matches!(
            self,
            Command::EpsIndependent | Command::Match | Command::WvnbSplit | Command::Perturbation
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub text: String,
    pub command: Command,
    pub args: Vec<String>,
    pub eps: Option<Rational>,
    pub cells: Option<usize>,
    pub truncation: Option<usize>,
}

impl Query {
    pub fn parse(text: &str) -> Result<Query, String> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        Query::from_tokens(&tokens)
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Query, String> {
        let tokens: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
        let (&head, rest) = tokens.split_first().ok_or("empty query")?;
        let command = Command::from_name(head).ok_or_else(|| format!("unknown command \"{head}\""))?;
        let mut q = Query {
            text: tokens.join(" "),
            command,
            args: Vec::new(),
            eps: None,
            cells: None,
            truncation: None,
        };
        let mut it = rest.iter();
        while let Some(&tok) = it.next() {
            let Some(flag) = tok.strip_prefix("--") else {
                q.args.push(tok.to_string());
                continue;
            };
            let value = it.next().ok_or_else(|| format!("--{flag} needs a value"))?;
            match flag {
                "eps" => {
                    let e = parse_rational(value)?;
                    if e <= Rational::from_integer(0.into()) {
                        return Err("--eps must be positive".into());
                    }
                    q.eps = Some(e);
                }
                "cells" => q.cells = Some(count(flag, value)?),
                "truncation" => q.truncation = Some(count(flag, value)?),
                _ => return Err(format!("unknown option --{flag}")),
            }
        }
        let (required, optional) = command.signature();
        let max = required.len() + usize::from(optional.is_some());
        if q.args.len() < required.len() || q.args.len() > max {
            let expected = if max == required.len() {
                format!("{}", required.len())
            } else {
                format!("{} or {}", required.len(), max)
            };
            return Err(format!(
                "{} takes {expected} arguments, got {}",
                command.name(),
                q.args.len()
            ));
        }
        if command.needs_eps() && q.eps.is_none() {
            return Err(format!("{} needs --eps", command.name()));
        }
        Ok(q)
    }

    pub fn kinds(&self) -> Vec<Kind> {
        let (required, optional) = self.command.signature();
        required.iter().copied().chain(optional).take(self.args.len()).collect()
    }

    /// Checks that every argument names an entity of the right kind and that
    /// vectors and sets share one model.
    pub fn resolve(&self, ws: &Workspace) -> Result<(), String> {
        let mut model: Option<&str> = None;
        for (name, kind) in self.args.iter().zip(self.kinds()) {
            let owner = match kind {
                Kind::Model => {
                    if !ws.models.contains_key(name) {
                        return Err(format!("unknown model \"{name}\""));
                    }
                    if self.command == Command::Oracle {
                        Some(name.as_str())
                    } else {
                        None
                    }
                }
                Kind::Vector => Some(
                    ws.vectors
                        .get(name)
                        .map(|(m, _)| m.as_str())
                        .ok_or_else(|| format!("unknown vector \"{name}\""))?,
                ),
                Kind::Set => Some(
                    ws.sets
                        .get(name)
                        .map(|(m, _)| m.as_str())
                        .ok_or_else(|| format!("unknown set \"{name}\""))?,
                ),
                Kind::Sequence => {
                    if !ws.sequences.contains_key(name) {
                        return Err(format!("unknown sequence \"{name}\""));
                    }
                    None
                }
            };
            if let Some(m) = owner {
                match model {
                    Some(prev) if prev != m => {
                        return Err(format!("{kind} \"{name}\" belongs to model \"{m}\", not \"{prev}\""));
                    }
                    _ => model = Some(m),
                }
            }
        }
        Ok(())
    }
}

fn count(flag: &str, value: &str) -> Result<usize, String> {
    value
        .parse()
        .map_err(|_| format!("--{flag} expects a non-negative integer, got \"{value}\""))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_options_anywhere() {
        let q = Query::parse("perturbation --eps 1/10 a b --truncation 32").unwrap();
        assert_eq!(q.command, Command::Perturbation);
        assert_eq!(q.args, ["a", "b"]);
        assert_eq!(q.eps, Some(Rational::new(1.into(), 10.into())));
        assert_eq!(q.truncation, Some(32));
        assert_eq!(q.text, "perturbation --eps 1/10 a b --truncation 32");
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(Query::parse("").is_err());
        assert!(Query::parse("spectra m").unwrap_err().contains("unknown command"));
        assert!(Query::parse("spectrum").unwrap_err().contains("takes 1"));
        assert!(Query::parse("match x y").unwrap_err().contains("--eps"));
        assert!(Query::parse("match x y --eps 0").is_err());
        assert!(Query::parse("match x y --eps 1/0").is_err());
        assert!(Query::parse("spectrum m --colour red").is_err());
        assert!(Query::parse("oracle m v s t").unwrap_err().contains("2 or 3"));
    }

    #[test]
    fn every_command_has_a_distinct_name() {
        for c in Command::all() {
            assert_eq!(Command::from_name(c.name()), Some(*c));
        }
    }
}
