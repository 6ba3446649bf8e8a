//! JSON model files.
//!
//! ```json
//! {
//!   "kind": "qhmm",
//!   "states": ["s1", "s2"],
//!   "alphabet": ["a", "b"],
//!   "dim": 2,
//!   "pi": [ <matrix>, <matrix> ],
//!   "transitions": { "a": [[<cell>, <cell>], [<cell>, <cell>]], "b": ... }
//! }
//! ```
//!
//! A matrix is a row-major nested array of complex numbers, each written as
//! `[re, im]` (a bare number is accepted as a real entry). For `"qhmm"` a
//! cell is the list of Kraus matrices of that entry (`[]` is the zero
//! operation); for `"hmm"` a cell is the transition probability itself and
//! `pi` is a list of probabilities. Cell `(i, j)` is the move from state `j`
//! to state `i`. The optional `"substochastic": true` relaxes the requirement
//! that the transitions sum to a stochastic matrix / TOM.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::densemath::ComplexMatrix;
use crate::error::{Error, Result};
use crate::models::{ClassicalMealyHMM, MealyQHMM, Model};
use crate::monras::SingleRegisterHQMM;
use crate::quantum::{DensityOperator, KrausOperation, Measurement};

fn parse_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{field}: {msg}"))
}

fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        m.to_rows()
            .into_iter()
            .map(|row| Value::Array(row.into_iter().map(complex_to_json).collect()))
            .collect(),
    )
}

fn number(v: &Value, field: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| parse_err(field, format!("expected a number, got {v}")))
}

fn complex_from_json(v: &Value, field: &str) -> Result<Complex64> {
    match v {
        Value::Number(_) => Ok(Complex64::new(number(v, field)?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => Ok(Complex64::new(number(&pair[0], field)?, number(&pair[1], field)?)),
        _ => Err(parse_err(field, format!("expected [re, im] or a number, got {v}"))),
    }
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(field, "expected an array"))
}

pub fn matrix_from_json(v: &Value, field: &str) -> Result<ComplexMatrix> {
    let rows = array(v, field)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let f = format!("{field}[{i}]");
            array(row, &f)?
                .iter()
                .enumerate()
                .map(|(j, z)| complex_from_json(z, &format!("{f}[{j}]")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_rows(&rows).map_err(|e| parse_err(field, e))
}

fn labels(obj: &Map<String, Value>, key: &str) -> Result<Vec<String>> {
    let v = obj.get(key).ok_or_else(|| parse_err(key, "missing"))?;
    array(v, key)?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.as_str()
                .map(str::to_string)
                .ok_or_else(|| parse_err(&format!("{key}[{i}]"), "expected a string"))
        })
        .collect()
}

/// Per-symbol grids in alphabet order.
fn transition_grids<'a>(
    obj: &'a Map<String, Value>,
    alphabet: &[String],
    n: usize,
) -> Result<Vec<Vec<Vec<&'a Value>>>> {
    let t = obj
        .get("transitions")
        .and_then(Value::as_object)
        .ok_or_else(|| parse_err("transitions", "missing or not an object"))?;
    if let Some(extra) = t.keys().find(|k| !alphabet.contains(k)) {
        return Err(parse_err(
            "transitions",
            format!("symbol '{extra}' is not in the alphabet"),
        ));
    }
    alphabet
        .iter()
        .map(|sym| {
            let field = format!("transitions.{sym}");
            let rows = array(t.get(sym).ok_or_else(|| parse_err(&field, "missing"))?, &field)?;
            if rows.len() != n {
                return Err(parse_err(&field, format!("expected {n} rows, got {}", rows.len())));
            }
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    let cells = array(row, &format!("{field}[{i}]"))?;
                    if cells.len() != n {
                        return Err(parse_err(
                            &format!("{field}[{i}]"),
                            format!("expected {n} cells, got {}", cells.len()),
                        ));
                    }
                    Ok(cells.iter().collect())
                })
                .collect()
        })
        .collect()
}

/// Parses and validates a model from JSON text.
pub fn model_from_str(text: &str) -> Result<Model> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    model_from_json(&v)
}

pub fn model_from_json(v: &Value) -> Result<Model> {
    let obj = v
        .as_object()
        .ok_or_else(|| parse_err("model", "expected a JSON object"))?;
    const KNOWN: [&str; 7] = [
        "kind",
        "states",
        "alphabet",
        "dim",
        "substochastic",
        "pi",
        "transitions",
    ];
    if let Some(k) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(parse_err(k, "unknown field"));
    }
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_err("kind", "missing or not a string"))?;
    let states = labels(obj, "states")?;
    let alphabet = labels(obj, "alphabet")?;
    let substochastic = match obj.get("substochastic") {
        None => false,
        Some(b) => b
            .as_bool()
            .ok_or_else(|| parse_err("substochastic", "expected a boolean"))?,
    };
    let dim = match obj.get("dim") {
        None => 1,
        Some(d) => d
            .as_u64()
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_err("dim", "expected a positive integer"))? as usize,
    };
    let n = states.len();
    let pi = array(obj.get("pi").ok_or_else(|| parse_err("pi", "missing"))?, "pi")?;
    if pi.len() != n {
        return Err(parse_err("pi", format!("expected {n} entries, got {}", pi.len())));
    }
    let grids = transition_grids(obj, &alphabet, n)?;
    match kind {
        "hmm" => {
            if dim != 1 {
                return Err(parse_err("dim", "classical models have dim 1"));
            }
            let pi = pi
                .iter()
                .enumerate()
                .map(|(i, p)| number(p, &format!("pi[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let trans = grids
                .iter()
                .zip(&alphabet)
                .map(|(g, sym)| {
                    g.iter()
                        .enumerate()
                        .map(|(i, row)| {
                            row.iter()
                                .enumerate()
                                .map(|(j, p)| number(p, &format!("transitions.{sym}[{i}][{j}]")))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let m = if substochastic {
                ClassicalMealyHMM::new_substochastic(states, alphabet, pi, trans)?
            } else {
                ClassicalMealyHMM::new(states, alphabet, pi, trans)?
            };
            Ok(Model::Classical(m))
        }
        "qhmm" => {
            let pi = pi
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let field = format!("pi[{i}]");
                    let m = matrix_from_json(p, &field)?;
                    if m.rows() != dim || m.cols() != dim {
                        return Err(parse_err(&field, format!("expected a {dim}x{dim} matrix")));
                    }
                    DensityOperator::new(m).map_err(|e| match e {
                        Error::Validation(v) => Error::Validation(v.within(&field)),
                        other => parse_err(&field, other),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let ops = grids
                .iter()
                .zip(&alphabet)
                .map(|(g, sym)| {
                    g.iter()
                        .enumerate()
                        .map(|(i, row)| {
                            row.iter()
                                .enumerate()
                                .map(|(j, cell)| kraus_cell(cell, dim, &format!("transitions.{sym}[{i}][{j}]")))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Model::Quantum(MealyQHMM::from_grids(
                states,
                alphabet,
                pi,
                ops,
                substochastic,
            )?))
        }
        other => Err(parse_err(
            "kind",
            format!("expected \"hmm\" or \"qhmm\", got \"{other}\""),
        )),
    }
}

fn kraus_cell(cell: &Value, dim: usize, field: &str) -> Result<KrausOperation> {
    let list = array(cell, field)?;
    if list.is_empty() {
        return Ok(KrausOperation::zero(dim, dim));
    }
    let kraus = list
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let f = format!("{field}[{k}]");
            let m = matrix_from_json(m, &f)?;
            if m.rows() != dim || m.cols() != dim {
                return Err(parse_err(&f, format!("expected a {dim}x{dim} Kraus matrix")));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    KrausOperation::new(kraus).map_err(|e| match e {
        Error::Validation(v) => Error::Validation(v.within(field)),
        other => parse_err(field, other),
    })
}

pub fn model_to_json(model: &Model) -> Value {
    match model {
        Model::Classical(m) => {
            let mut transitions = Map::new();
            for (v, sym) in m.alphabet().iter().enumerate() {
                transitions.insert(sym.clone(), json!(m.transition(v)));
            }
            let mut obj = Map::new();
            obj.insert("kind".into(), json!("hmm"));
            obj.insert("states".into(), json!(m.states()));
            obj.insert("alphabet".into(), json!(m.alphabet()));
            obj.insert("dim".into(), json!(1));
            if m.is_substochastic() {
                obj.insert("substochastic".into(), json!(true));
            }
            obj.insert("pi".into(), json!(m.pi()));
            obj.insert("transitions".into(), Value::Object(transitions));
            Value::Object(obj)
        }
        Model::Quantum(m) => {
            let mut transitions = Map::new();
            for (v, sym) in m.alphabet().iter().enumerate() {
                let grid: Vec<Value> = m
                    .transition(v)
                    .rows()
                    .iter()
                    .map(|row| {
                        Value::Array(
                            row.iter()
                                .map(|op| {
                                    if op.is_zero(0.0) {
                                        Value::Array(Vec::new())
                                    } else {
                                        Value::Array(op.kraus().iter().map(matrix_to_json).collect())
                                    }
                                })
                                .collect(),
                        )
                    })
                    .collect();
                transitions.insert(sym.clone(), Value::Array(grid));
            }
            let mut obj = Map::new();
            obj.insert("kind".into(), json!("qhmm"));
            obj.insert("states".into(), json!(m.states()));
            obj.insert("alphabet".into(), json!(m.alphabet()));
            obj.insert("dim".into(), json!(m.dim()));
            if m.is_substochastic() {
                obj.insert("substochastic".into(), json!(true));
            }
            obj.insert(
                "pi".into(),
                Value::Array(m.pi().parts().iter().map(|p| matrix_to_json(p.matrix())).collect()),
            );
            obj.insert("transitions".into(), Value::Object(transitions));
            Value::Object(obj)
        }
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    let text = fs::read_to_string(path.as_ref())?;
    model_from_str(&text)
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_pretty_string(&model_to_json(model)))?;
    Ok(())
}

/// A measurement file: `{"effects": {"label": <matrix>, ...}}`.
pub fn measurement_from_str(text: &str) -> Result<Measurement> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let effects = v
        .get("effects")
        .and_then(Value::as_object)
        .ok_or_else(|| parse_err("effects", "missing or not an object"))?;
    let parsed = effects
        .iter()
        .map(|(label, m)| Ok((label.clone(), matrix_from_json(m, &format!("effects.{label}"))?)))
        .collect::<Result<Vec<_>>>()?;
    Measurement::new(parsed)
}

pub fn load_measurement(path: impl AsRef<Path>) -> Result<Measurement> {
    measurement_from_str(&fs::read_to_string(path.as_ref())?)
}

pub fn measurement_to_json(mu: &Measurement) -> Value {
    let effects: Map<String, Value> = mu
        .effects()
        .iter()
        .map(|(k, m)| (k.clone(), matrix_to_json(m)))
        .collect();
    json!({ "effects": effects })
}

pub fn hqmm_to_json(h: &SingleRegisterHQMM) -> Value {
    let kraus = |op: &KrausOperation| Value::Array(op.kraus().iter().map(matrix_to_json).collect());
    let ops: Map<String, Value> = h
        .alphabet()
        .iter()
        .zip(h.ops())
        .map(|(s, op)| (s.clone(), kraus(op)))
        .collect();
    let mut obj = Map::new();
    obj.insert("kind".into(), json!("hqmm"));
    obj.insert("dim".into(), json!(h.dim()));
    obj.insert("quantum_dim".into(), json!(h.quantum_dim()));
    obj.insert("classes".into(), json!(h.classes()));
    obj.insert("alphabet".into(), json!(h.alphabet()));
    obj.insert("initial".into(), matrix_to_json(h.initial().matrix()));
    obj.insert("ops".into(), Value::Object(ops));
    obj.insert("terminal".into(), kraus(h.terminal()));
    Value::Object(obj)
}

/// Indented JSON that keeps every matrix (and anything smaller) on one line.
pub fn to_pretty_string(v: &Value) -> String {
    let mut out = String::new();
    write_pretty(v, 0, &mut out);
    out.push('\n');
    out
}

fn depth(v: &Value) -> usize {
    match v {
        Value::Array(items) => 1 + items.iter().map(depth).max().unwrap_or(0),
        Value::Object(_) => usize::MAX,
        _ => 0,
    }
}

fn is_flat(v: &Value) -> bool {
    depth(v) <= 3
}

fn write_pretty(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, val)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_pretty(val, indent + 1, out);
                if k + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        Value::Array(items) if !items.is_empty() && !is_flat(v) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad);
                write_pretty(item, indent + 1, out);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        _ => out.push_str(&v.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{self, NAMES};

    #[test]
    fn builtins_round_trip() {
        for name in NAMES {
            let m = builtin::builtin(name).unwrap();
            let text = to_pretty_string(&model_to_json(&m));
            let back = model_from_str(&text).unwrap();
            assert_eq!(back, m, "{name}");
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = model_from_str("{\n  \"kind\": \"hmm\",\n  oops\n}").unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_errors_name_the_field() {
        let text = r#"{"kind":"hmm","states":["s1"],"alphabet":["a"],"pi":[1.0],"transitions":{"a":[["x"]]}}"#;
        match model_from_str(text).unwrap_err() {
            Error::Parse(msg) => assert!(msg.starts_with("transitions.a[0][0]"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let text =
            r#"{"kind":"hmm","states":["s1"],"alphabet":["a"],"pi":[1.0],"transitions":{"a":[[1.0]],"b":[[0]]}}"#;
        assert!(matches!(model_from_str(text), Err(Error::Parse(_))));
    }

    #[test]
    fn substochastic_column_is_reported() {
        let text = r#"{"kind":"hmm","states":["s1","s2"],"alphabet":["a","b"],"pi":[1.0,0.0],
            "transitions":{"a":[[0.0,0.5],[0.5,0.0]],"b":[[0.4,0.0],[0.0,0.5]]}}"#;
        match model_from_str(text).unwrap_err() {
            Error::Validation(v) => {
                assert_eq!(v.index, Some(0));
                assert!(v.field.contains("s1"), "{v}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quantum_column_violation_names_the_column() {
        let m = builtin::quantum("lambda1q").unwrap();
        let mut v = model_to_json(&Model::Quantum(m));
        // scale P^c down so column s1 sums to less than a channel
        v["transitions"]["c"][1][0] = json!([[[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]]);
        match model_from_json(&v).unwrap_err() {
            Error::Validation(viol) => {
                assert_eq!(viol.index, Some(0));
                assert!(viol.to_string().contains("sum over symbols"), "{viol}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_cell_is_zero_operation() {
        let text = r#"{"kind":"qhmm","states":["s"],"alphabet":["a","b"],"dim":1,"pi":[[[1]]],
            "transitions":{"a":[[[[[[1,0]]]]]],"b":[[[]]]}}"#;
        let m = model_from_str(text).unwrap();
        let Model::Quantum(q) = m else { panic!() };
        assert!(q.transition(1).entry(0, 0).is_zero(0.0));
    }

    #[test]
    fn measurement_files() {
        let mu = measurement_from_str(r#"{"effects":{"b":[[0,0],[0,1]],"c":[[[1,0],[0,0]],[[0,0],[0,0]]]}}"#).unwrap();
        assert_eq!(mu.effects().keys().collect::<Vec<_>>(), vec!["b", "c"]);
        let back = measurement_from_str(&measurement_to_json(&mu).to_string()).unwrap();
        assert_eq!(back, mu);
        assert!(measurement_from_str(r#"{"effects":{"b":[[0,0],[0,1]]}}"#).is_err());
    }

    #[test]
    fn pretty_printer_keeps_rows_inline() {
        let s = to_pretty_string(&json!({"m": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]}));
        assert!(s.contains("[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]"), "{s}");
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["m"][0][0][0][0], json!(1.0));
    }
}
