//! Plain-text serialization of assignment models.
//!
//! The format is line-oriented so instances can be inspected, diffed, and
//! hand-edited:
//!
//! ```text
//! placesim-model v1
//! resources 2
//! resource 0 device:cloud-0/gpu0 16
//! resource 1 link:user-3~carrier-1 10
//! apps 1
//! app 0 req-17 2
//! cand 0 0 carrier-1/gpu0 2 1 1:2
//! cand 0 1 cloud-0/gpu0 1.9545454545454546 0 0:1 1:2
//! ```
//!
//! A `cand` line carries app index, candidate index, label, cost, a 0/1
//! current marker, then `row:amount` usage pairs. Floats are written in
//! shortest round-trip form, so parse(write(m)) reproduces `m` bitwise.
//! Empty labels are written as `-`. Blank lines and `#` comments are
//! ignored.

use super::model::{AppEntry, AssignmentModel, CandidateEntry, ResourceRow};
use super::ModelError;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("label {0:?} contains whitespace")]
    BadLabel(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, InstanceError> {
    Err(InstanceError::Parse { line, message: message.into() })
}

fn write_label(out: &mut String, label: &str) -> Result<(), InstanceError> {
    if label.chars().any(char::is_whitespace) {
        return Err(InstanceError::BadLabel(label.to_owned()));
    }
    out.push_str(if label.is_empty() { "-" } else { label });
    Ok(())
}

fn read_label(token: &str) -> String {
    if token == "-" {
        String::new()
    } else {
        token.to_owned()
    }
}

pub fn write_model(model: &AssignmentModel) -> Result<String, InstanceError> {
    model.validate()?;
    let mut out = String::new();
    out.push_str("placesim-model v1\n");

    writeln!(out, "resources {}", model.resources.len()).unwrap();
    for (r, row) in model.resources.iter().enumerate() {
        write!(out, "resource {r} ").unwrap();
        write_label(&mut out, &row.name)?;
        writeln!(out, " {}", row.capacity).unwrap();
    }

    writeln!(out, "apps {}", model.apps.len()).unwrap();
    for (k, app) in model.apps.iter().enumerate() {
        write!(out, "app {k} ").unwrap();
        write_label(&mut out, &app.label)?;
        writeln!(out, " {}", app.candidates.len()).unwrap();
        for (s, candidate) in app.candidates.iter().enumerate() {
            write!(out, "cand {k} {s} ").unwrap();
            write_label(&mut out, &candidate.label)?;
            write!(out, " {} {}", candidate.cost, u8::from(candidate.is_current)).unwrap();
            for &(row, amount) in &candidate.uses {
                write!(out, " {row}:{amount}").unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate() }
    }

    /// Next meaningful line as `(1-based number, whitespace-split tokens)`.
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }
}

fn parse_count(line: usize, tokens: &[&str], keyword: &str) -> Result<usize, InstanceError> {
    if tokens.len() != 2 || tokens[0] != keyword {
        return fail(line, format!("expected `{keyword} <count>`"));
    }
    tokens[1]
        .parse()
        .map_err(|_| InstanceError::Parse { line, message: format!("bad {keyword} count") })
}

fn parse_f64(line: usize, token: &str, what: &str) -> Result<f64, InstanceError> {
    token
        .parse()
        .map_err(|_| InstanceError::Parse { line, message: format!("bad {what}: {token:?}") })
}

fn parse_index(line: usize, token: &str, expected: usize, what: &str) -> Result<(), InstanceError> {
    let got: usize = token
        .parse()
        .map_err(|_| InstanceError::Parse { line, message: format!("bad {what} index") })?;
    if got != expected {
        return fail(line, format!("{what} index {got} out of order, expected {expected}"));
    }
    Ok(())
}

pub fn parse_model(text: &str) -> Result<AssignmentModel, InstanceError> {
    let mut lines = Lines::new(text);

    let Some((line, tokens)) = lines.next_tokens() else {
        return fail(0, "empty input");
    };
    if tokens != ["placesim-model", "v1"] {
        return fail(line, "expected header `placesim-model v1`");
    }

    let Some((line, tokens)) = lines.next_tokens() else {
        return fail(0, "missing `resources` section");
    };
    let n_resources = parse_count(line, &tokens, "resources")?;
    let mut resources = Vec::with_capacity(n_resources);
    for r in 0..n_resources {
        let Some((line, tokens)) = lines.next_tokens() else {
            return fail(0, format!("missing resource {r}"));
        };
        if tokens.len() != 4 || tokens[0] != "resource" {
            return fail(line, "expected `resource <i> <name> <capacity>`");
        }
        parse_index(line, tokens[1], r, "resource")?;
        resources.push(ResourceRow {
            name: read_label(tokens[2]),
            capacity: parse_f64(line, tokens[3], "capacity")?,
        });
    }

    let Some((line, tokens)) = lines.next_tokens() else {
        return fail(0, "missing `apps` section");
    };
    let n_apps = parse_count(line, &tokens, "apps")?;
    let mut apps = Vec::with_capacity(n_apps);
    for k in 0..n_apps {
        let Some((line, tokens)) = lines.next_tokens() else {
            return fail(0, format!("missing app {k}"));
        };
        if tokens.len() != 4 || tokens[0] != "app" {
            return fail(line, "expected `app <k> <label> <count>`");
        }
        parse_index(line, tokens[1], k, "app")?;
        let label = read_label(tokens[2]);
        let n_candidates: usize = tokens[3]
            .parse()
            .map_err(|_| InstanceError::Parse { line, message: "bad candidate count".into() })?;

        let mut candidates = Vec::with_capacity(n_candidates);
        for s in 0..n_candidates {
            let Some((line, tokens)) = lines.next_tokens() else {
                return fail(0, format!("missing candidate {s} of app {k}"));
            };
            if tokens.len() < 6 || tokens[0] != "cand" {
                return fail(line, "expected `cand <k> <s> <label> <cost> <0|1> [row:amount...]`");
            }
            parse_index(line, tokens[1], k, "app")?;
            parse_index(line, tokens[2], s, "candidate")?;
            let is_current = match tokens[5] {
                "0" => false,
                "1" => true,
                other => return fail(line, format!("bad current marker {other:?}")),
            };
            let mut uses = Vec::with_capacity(tokens.len() - 6);
            for token in &tokens[6..] {
                let Some((row, amount)) = token.split_once(':') else {
                    return fail(line, format!("bad usage token {token:?}"));
                };
                let row: usize = row.parse().map_err(|_| InstanceError::Parse {
                    line,
                    message: format!("bad usage row in {token:?}"),
                })?;
                uses.push((row, parse_f64(line, amount, "usage amount")?));
            }
            candidates.push(CandidateEntry {
                label: read_label(tokens[3]),
                cost: parse_f64(line, tokens[4], "cost")?,
                is_current,
                uses,
            });
        }
        apps.push(AppEntry { label, candidates });
    }

    if let Some((line, _)) = lines.next_tokens() {
        return fail(line, "unexpected trailing content");
    }

    let model = AssignmentModel { apps, resources };
    model.validate()?;
    Ok(model)
}
