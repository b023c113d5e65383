//! The line-oriented model file format.
//!
//! ```text
//! cpm 1
//! var X1 2
//! var X2 2
//! dist P1 X1 X2
//! 0.1 0.2 0.3 0.4
//! end
//! ```
//!
//! `#` starts a comment. Variables must be declared before use; declaration
//! order is the canonical variable order. A `dist` block may list its scope
//! in any order (the last listed variable varies fastest in the value list);
//! the loader permutes the table into canonical layout. Declaration order of
//! the `dist` blocks is the sequence order. Values are whitespace-separated
//! decimals or scientific notation, and may span multiple lines.

use cpm_core::{Factor, GeneratingSequence, Scope, VarId, VariableRegistry};

/// Sum tolerance for hand-written files, looser than the internal 1e-9.
pub const INPUT_NORM_TOL: f64 = 1e-6;

#[derive(Debug)]
pub enum ModelError {
    Parse { line: usize, msg: String },
    Core(cpm_core::Error),
}

impl std::fmt::Display for ModelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelError::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            ModelError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<cpm_core::Error> for ModelError {
    fn from(e: cpm_core::Error) -> Self {
        ModelError::Core(e)
    }
}

/// A parsed model file: the registry, the sequence, and the dist names in
/// sequence order.
#[derive(Debug, Clone)]
pub struct Model {
    pub registry: VariableRegistry,
    pub names: Vec<String>,
    pub seq: GeneratingSequence,
}

fn err(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse { line, msg: msg.into() }
}

struct PendingDist {
    name: String,
    declared_vars: Vec<VarId>,
    values: Vec<f64>,
    expected: usize,
    start_line: usize,
}

/// Reorders a value table from a declared variable order into canonical
/// (sorted) order; both layouts keep the last variable fastest.
fn permute_to_canonical(
    declared_vars: &[VarId],
    cards: &[usize],
    values: &[f64],
) -> (Scope, Vec<f64>) {
    let scope = Scope::new(declared_vars.to_vec()).expect("duplicates are screened during parse");
    let canon_pos: Vec<usize> = declared_vars
        .iter()
        .map(|v| scope.position(*v).unwrap())
        .collect();
    let canon_cards: Vec<usize> = scope
        .iter()
        .map(|v| cards[declared_vars.iter().position(|w| *w == v).unwrap()])
        .collect();

    let mut declared_strides = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        declared_strides[i] = declared_strides[i + 1] * cards[i + 1];
    }
    let mut canon_strides = vec![1usize; canon_cards.len()];
    for i in (0..canon_cards.len().saturating_sub(1)).rev() {
        canon_strides[i] = canon_strides[i + 1] * canon_cards[i + 1];
    }

    let mut out = vec![0.0; values.len()];
    for (idx, v) in values.iter().enumerate() {
        let mut rem = idx;
        let mut canon_idx = 0;
        for axis in 0..cards.len() {
            let digit = rem / declared_strides[axis];
            rem %= declared_strides[axis];
            canon_idx += digit * canon_strides[canon_pos[axis]];
        }
        out[canon_idx] = *v;
    }
    (scope, out)
}

pub fn parse_model(text: &str, renormalize: bool) -> Result<Model, ModelError> {
    let mut registry = VariableRegistry::new();
    let mut names = Vec::new();
    let mut factors = Vec::new();
    let mut pending: Option<PendingDist> = None;
    let mut saw_header = false;
    let mut saw_end = false;

    let finish =
        |pending: &mut Option<PendingDist>, factors: &mut Vec<Factor>, names: &mut Vec<String>, registry: &VariableRegistry, line: usize|
         -> Result<(), ModelError> {
            if let Some(d) = pending.take() {
                if d.values.len() != d.expected {
                    return Err(err(
                        line,
                        format!(
                            "dist {:?} has {} values, expected {}",
                            d.name,
                            d.values.len(),
                            d.expected
                        ),
                    ));
                }
                let cards: Vec<usize> =
                    d.declared_vars.iter().map(|v| registry.card(*v)).collect();
                let (scope, mut values) = permute_to_canonical(&d.declared_vars, &cards, &d.values);
                if renormalize {
                    let sum: f64 = values.iter().sum();
                    if sum > 0.0 {
                        for v in &mut values {
                            *v /= sum;
                        }
                    }
                }
                let factor = Factor::with_tolerance(scope, values, registry, INPUT_NORM_TOL)
                    .map_err(|e| err(d.start_line, e.to_string()))?;
                factors.push(factor);
                names.push(d.name);
            }
            Ok(())
        };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace().peekable();
        if tokens.peek().is_none() {
            continue;
        }
        if saw_end {
            return Err(err(line, "content after end"));
        }
        if !saw_header {
            let tag = tokens.next().unwrap();
            let version = tokens.next();
            if tag != "cpm" || version != Some("1") || tokens.next().is_some() {
                return Err(err(line, "expected header `cpm 1`"));
            }
            saw_header = true;
            continue;
        }
        let first = *tokens.peek().unwrap();
        match first {
            "var" => {
                finish(&mut pending, &mut factors, &mut names, &registry, line)?;
                tokens.next();
                let name = tokens.next().ok_or_else(|| err(line, "var needs a name"))?;
                let card: usize = tokens
                    .next()
                    .ok_or_else(|| err(line, "var needs a cardinality"))?
                    .parse()
                    .map_err(|_| err(line, "cardinality must be a positive integer"))?;
                if tokens.next().is_some() {
                    return Err(err(line, "trailing tokens after var declaration"));
                }
                registry.add(name, card).map_err(|e| err(line, e.to_string()))?;
            }
            "dist" => {
                finish(&mut pending, &mut factors, &mut names, &registry, line)?;
                tokens.next();
                let name = tokens
                    .next()
                    .ok_or_else(|| err(line, "dist needs a name"))?
                    .to_string();
                let mut declared_vars = Vec::new();
                let mut expected = 1usize;
                for tok in tokens {
                    let v = registry
                        .lookup(tok)
                        .ok_or_else(|| err(line, format!("undeclared variable {tok:?}")))?;
                    if declared_vars.contains(&v) {
                        return Err(err(line, format!("duplicate variable {tok:?} in scope")));
                    }
                    expected *= registry.card(v);
                    declared_vars.push(v);
                }
                pending = Some(PendingDist {
                    name,
                    declared_vars,
                    values: Vec::new(),
                    expected,
                    start_line: line,
                });
            }
            "end" => {
                finish(&mut pending, &mut factors, &mut names, &registry, line)?;
                tokens.next();
                if tokens.next().is_some() {
                    return Err(err(line, "trailing tokens after end"));
                }
                saw_end = true;
            }
            _ => {
                let d = pending
                    .as_mut()
                    .ok_or_else(|| err(line, format!("unexpected token {first:?}")))?;
                for tok in tokens {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| err(line, format!("not a number: {tok:?}")))?;
                    d.values.push(v);
                    if d.values.len() > d.expected {
                        return Err(err(
                            line,
                            format!("dist {:?} has more than {} values", d.name, d.expected),
                        ));
                    }
                }
            }
        }
    }

    if !saw_header {
        return Err(err(1, "missing header `cpm 1`"));
    }
    if !saw_end {
        return Err(err(text.lines().count().max(1), "missing `end`"));
    }
    let seq = GeneratingSequence::new(factors, registry.clone())
        .map_err(|e| err(1, e.to_string()))?;
    Ok(Model { registry, names, seq })
}

/// Writes a model in canonical order with 17-significant-digit values, so
/// `parse(serialize(m))` reproduces `m` bit for bit.
pub fn serialize_model(model: &Model) -> String {
    let mut out = String::from("cpm 1\n");
    for v in model.registry.vars() {
        out.push_str(&format!(
            "var {} {}\n",
            model.registry.name(v),
            model.registry.card(v)
        ));
    }
    for (factor, name) in model.seq.factors().iter().zip(&model.names) {
        out.push_str("dist ");
        out.push_str(name);
        for v in factor.scope().iter() {
            out.push(' ');
            out.push_str(model.registry.name(v));
        }
        out.push('\n');
        for chunk in factor.values().chunks(8) {
            let row: Vec<String> = chunk.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let m = parse_model("cpm 1\nvar X1 2\ndist P1 X1\n0.3 0.7\nend\n", false).unwrap();
        assert_eq!(m.registry.len(), 1);
        assert_eq!(m.seq.len(), 1);
        assert_eq!(m.names, vec!["P1"]);
        assert_eq!(m.seq.factors()[0].values(), &[0.3, 0.7]);
    }

    #[test]
    fn scope_order_is_permuted_to_canonical() {
        let text = "cpm 1\nvar X1 2\nvar X2 2\ndist P X2 X1\n0.1 0.2 0.3 0.4\nend\n";
        let m = parse_model(text, false).unwrap();
        let f = &m.seq.factors()[0];
        // file entry (x2, x1): value at (x2=0, x1=1) is 0.2 → canonical (x1=1, x2=0)
        assert_eq!(f.values(), &[0.1, 0.3, 0.2, 0.4]);
    }

    #[test]
    fn unnormalized_row_is_rejected() {
        let text = "cpm 1\nvar X1 2\ndist P X1\n0.4 0.5\nend\n";
        let e = parse_model(text, false).unwrap_err();
        assert!(matches!(e, ModelError::Parse { line: 3, .. }), "{e}");
        // --renormalize accepts it
        let m = parse_model(text, true).unwrap();
        let sum: f64 = m.seq.factors()[0].values().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn undeclared_variable_is_a_parse_error() {
        let e = parse_model("cpm 1\ndist P X9\n1.0\nend\n", false).unwrap_err();
        match e {
            ModelError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("undeclared"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn empty_scope_dist() {
        let m = parse_model("cpm 1\ndist P\n1.0\nend\n", false).unwrap();
        assert!(m.seq.factors()[0].scope().is_empty());
        let text = serialize_model(&m);
        let back = parse_model(&text, false).unwrap();
        assert_eq!(back.seq.factors()[0].values(), &[1.0]);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let text = "cpm 1\nvar A 2\nvar B 3\ndist P B A\n0.1 0.05 0.15 0.2 0.25 0.25\nend\n";
        let m = parse_model(text, false).unwrap();
        let s = serialize_model(&m);
        let back = parse_model(&s, false).unwrap();
        assert_eq!(serialize_model(&back), s);
        for (a, b) in m.seq.factors().iter().zip(back.seq.factors()) {
            assert_eq!(a.values(), b.values());
            assert_eq!(a.scope(), b.scope());
        }
    }
}
