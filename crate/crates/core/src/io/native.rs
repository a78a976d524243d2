//! The line-oriented `MRFLOG 1` format.
//!
//! ```text
//! MRFLOG 1
//! <n>
//! <k_0> ... <k_{n-1}>
//! <theta_0 entries>            one line per variable
//! ...
//! <m>
//! <i> <j>                      then k_i lines of k_j entries
//! ...
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Values are written
//! with 17 significant digits so parsing returns the exact same bits.

use std::fmt::Write as _;

use crate::io::ParseError;
use crate::model::{PairwiseModel, Table};

pub const MAGIC: &str = "MRFLOG 1";

pub fn write_native(model: &PairwiseModel) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "{}", model.num_vars());
    let _ = writeln!(out, "{}", join(model.cardinalities().iter().map(|k| k.to_string())));
    for i in 0..model.num_vars() {
        let _ = writeln!(out, "{}", join(model.node_potential(i).iter().map(|v| fmt_value(*v))));
    }
    let _ = writeln!(out, "{}", model.num_edges());
    for (e, &(i, j)) in model.edges().iter().enumerate() {
        let _ = writeln!(out, "{i} {j}");
        let table = model.edge_potential(e);
        for row in table.data().chunks(table.cols().max(1)) {
            let _ = writeln!(out, "{}", join(row.iter().map(|v| fmt_value(*v))));
        }
    }
    out
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(" ")
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next significant line as `(line number, tokens)`.
    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        for (idx, line) in self.inner.by_ref() {
            self.last = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Ok((idx + 1, trimmed.split_whitespace().collect()));
        }
        Err(ParseError::new(self.last + 1, format!("unexpected end of input, expected {what}")))
    }
}

fn parse_count(line: usize, tokens: &[&str], what: &str) -> Result<usize, ParseError> {
    match tokens {
        [t] => t
            .parse()
            .map_err(|_| ParseError::new(line, format!("invalid {what} `{t}`"))),
        _ => Err(ParseError::new(line, format!("expected a single {what}"))),
    }
}

fn parse_values(line: usize, tokens: &[&str]) -> Result<Vec<f64>, ParseError> {
    tokens
        .iter()
        .map(|t| {
            let v: f64 = t
                .parse()
                .map_err(|_| ParseError::new(line, format!("invalid number `{t}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ParseError::new(line, format!("non-finite value `{t}`")))
            }
        })
        .collect()
}

pub fn parse_native(text: &str) -> Result<PairwiseModel, ParseError> {
    let mut lines = Lines::new(text);
    let (line, header) = lines.next_tokens("header")?;
    if header.join(" ") != MAGIC {
        return Err(ParseError::new(line, format!("expected header `{MAGIC}`")));
    }
    let (line, tokens) = lines.next_tokens("variable count")?;
    let n = parse_count(line, &tokens, "variable count")?;

    let mut cards = Vec::with_capacity(n);
    if n > 0 {
        let (line, tokens) = lines.next_tokens("cardinalities")?;
        if tokens.len() != n {
            return Err(ParseError::new(
                line,
                format!("expected {n} cardinalities, found {}", tokens.len()),
            ));
        }
        for t in tokens {
            let k: usize = t
                .parse()
                .map_err(|_| ParseError::new(line, format!("invalid cardinality `{t}`")))?;
            if k == 0 {
                return Err(ParseError::new(line, "cardinality must be at least 1"));
            }
            cards.push(k);
        }
    }

    let mut nodes = Vec::with_capacity(n);
    for (var, &k) in cards.iter().enumerate() {
        let (line, tokens) = lines.next_tokens("node potentials")?;
        let values = parse_values(line, &tokens)?;
        if values.len() != k {
            return Err(ParseError::new(
                line,
                format!("variable {var}: expected {k} node potentials, found {}", values.len()),
            ));
        }
        nodes.push(values);
    }

    let (line, tokens) = lines.next_tokens("edge count")?;
    let m = parse_count(line, &tokens, "edge count")?;
    let mut edges = Vec::with_capacity(m);
    for e in 0..m {
        let (line, tokens) = lines.next_tokens("edge endpoints")?;
        let (i, j) = match tokens.as_slice() {
            [a, b] => match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(i), Ok(j)) => (i, j),
                _ => return Err(ParseError::new(line, format!("edge {e}: invalid endpoints"))),
            },
            _ => return Err(ParseError::new(line, format!("edge {e}: expected `i j`"))),
        };
        if i >= n || j >= n {
            return Err(ParseError::new(line, format!("edge {e} ({i}, {j}): unknown variable")));
        }
        if i == j {
            return Err(ParseError::new(line, format!("edge {e} ({i}, {j}): self-loop")));
        }
        let (ki, kj) = (cards[i], cards[j]);
        let mut data = Vec::with_capacity(ki * kj);
        for row in 0..ki {
            let (line, tokens) = lines.next_tokens("edge table row")?;
            let values = parse_values(line, &tokens)?;
            if values.len() != kj {
                return Err(ParseError::new(
                    line,
                    format!(
                        "edge {e} ({i}, {j}): row {row} has {} entries, expected {kj}",
                        values.len()
                    ),
                ));
            }
            data.extend(values);
        }
        edges.push(((i, j), Table::new(ki, kj, data)));
    }
    if let Ok((line, _)) = lines.next_tokens("") {
        return Err(ParseError::new(line, "trailing content after last edge"));
    }
    PairwiseModel::new(cards, nodes, edges).map_err(|err| ParseError::new(lines.last, err.to_string()))
}
