//! UAI `MARKOV` import and export for pairwise models.
//!
//! Tables hold probabilities (potentials in linear space); import maps each
//! entry `p` to `ln p`, with exact zeros replaced by a finite floor.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::io::ParseError;
use crate::model::{PairwiseModel, Table};

/// Log-value used for zero-probability entries unless overridden.
pub const DEFAULT_ZERO_FLOOR: f64 = -1e6;

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(idx, line)| line.split_whitespace().map(move |t| (idx + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos.saturating_sub(1))
            .map_or(1, |(line, _)| *line)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        let item = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| ParseError::new(self.line(), format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    fn usize(&mut self, what: &str) -> Result<usize, ParseError> {
        let (line, t) = self.next(what)?;
        t.parse()
            .map_err(|_| ParseError::new(line, format!("invalid {what} `{t}`")))
    }

    fn f64(&mut self, what: &str) -> Result<(usize, f64), ParseError> {
        let (line, t) = self.next(what)?;
        let v: f64 = t
            .parse()
            .map_err(|_| ParseError::new(line, format!("invalid {what} `{t}`")))?;
        Ok((line, v))
    }
}

pub fn parse_uai(text: &str, zero_floor: f64) -> Result<PairwiseModel, ParseError> {
    let mut tokens = Tokens::new(text);
    let (line, kind) = tokens.next("network type")?;
    if !kind.eq_ignore_ascii_case("MARKOV") {
        return Err(ParseError::new(line, format!("unsupported network type `{kind}`")));
    }
    let n = tokens.usize("variable count")?;
    let mut cards = Vec::with_capacity(n);
    for _ in 0..n {
        let k = tokens.usize("cardinality")?;
        if k == 0 {
            return Err(ParseError::new(tokens.line(), "cardinality must be at least 1"));
        }
        cards.push(k);
    }
    let factors = tokens.usize("factor count")?;
    let mut scopes = Vec::with_capacity(factors);
    let mut seen = HashSet::new();
    for f in 0..factors {
        let size = tokens.usize("scope size")?;
        let line = tokens.line();
        if size == 0 || size > 2 {
            return Err(ParseError::new(
                line,
                format!("factor {f}: unsupported scope of size {size}"),
            ));
        }
        let mut scope = Vec::with_capacity(size);
        for _ in 0..size {
            let v = tokens.usize("scope variable")?;
            if v >= n {
                return Err(ParseError::new(tokens.line(), format!("factor {f}: unknown variable {v}")));
            }
            scope.push(v);
        }
        if size == 2 && scope[0] == scope[1] {
            return Err(ParseError::new(line, format!("factor {f}: repeated variable {}", scope[0])));
        }
        let mut key = scope.clone();
        key.sort_unstable();
        if !seen.insert(key) {
            return Err(ParseError::new(line, format!("factor {f}: duplicate factor over {scope:?}")));
        }
        scopes.push(scope);
    }

    let mut nodes: Vec<Vec<f64>> = cards.iter().map(|&k| vec![0.0; k]).collect();
    let mut edges = Vec::new();
    for (f, scope) in scopes.iter().enumerate() {
        let expected: usize = scope.iter().map(|&v| cards[v]).product();
        let count = tokens.usize("table size")?;
        if count != expected {
            return Err(ParseError::new(
                tokens.line(),
                format!("factor {f}: table has {count} entries, expected {expected}"),
            ));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, p) = tokens.f64("table entry")?;
            if !p.is_finite() {
                return Err(ParseError::new(line, format!("factor {f}: non-finite entry")));
            }
            if p < 0.0 {
                return Err(ParseError::new(line, format!("factor {f}: negative entry {p}")));
            }
            values.push(if p == 0.0 { zero_floor } else { p.ln() });
        }
        match scope.as_slice() {
            [v] => nodes[*v] = values,
            [a, b] => edges.push(((*a, *b), Table::new(cards[*a], cards[*b], values))),
            _ => unreachable!("scope sizes checked above"),
        }
    }
    if tokens.pos < tokens.items.len() {
        return Err(ParseError::new(tokens.items[tokens.pos].0, "trailing content after last table"));
    }
    PairwiseModel::new(cards, nodes, edges).map_err(|err| ParseError::new(tokens.line(), err.to_string()))
}

/// Writes `model` as a UAI `MARKOV` file with `exp(theta)` tables: one
/// unary factor per variable followed by one factor per edge.
pub fn write_uai(model: &PairwiseModel) -> String {
    let mut out = String::from("MARKOV\n");
    let _ = writeln!(out, "{}", model.num_vars());
    let cards: Vec<String> = model.cardinalities().iter().map(|k| k.to_string()).collect();
    let _ = writeln!(out, "{}", cards.join(" "));
    let _ = writeln!(out, "{}", model.num_vars() + model.num_edges());
    for i in 0..model.num_vars() {
        let _ = writeln!(out, "1 {i}");
    }
    for &(i, j) in model.edges() {
        let _ = writeln!(out, "2 {i} {j}");
    }
    let write_table = |out: &mut String, values: &[f64]| {
        let _ = writeln!(out, "\n{}", values.len());
        let probs: Vec<String> = values.iter().map(|v| format!("{:e}", v.exp())).collect();
        let _ = writeln!(out, " {}", probs.join(" "));
    };
    for i in 0..model.num_vars() {
        write_table(&mut out, model.node_potential(i));
    }
    for e in 0..model.num_edges() {
        write_table(&mut out, model.edge_potential(e).data());
    }
    out
}
