//! String-probability tables and Hankel-rank diagnostics.

use std::fmt::Write as _;

use crate::densemath::ComplexMatrix;
use crate::error::{Error, Result};
use crate::inference::{classical_forward, forward_indices};
use crate::models::{ClassicalMealyHMM, MealyQHMM, Model};

/// Label used for the empty string in exported tables.
pub const EMPTY_LABEL: &str = "ε";

/// Anything that assigns probabilities to finite strings over an alphabet.
pub trait StringProbability {
    fn alphabet(&self) -> &[String];

    /// `P(seq)` for a sequence of symbol indices.
    fn probability(&self, seq: &[usize]) -> Result<f64>;
}

impl StringProbability for MealyQHMM {
    fn alphabet(&self) -> &[String] {
        MealyQHMM::alphabet(self)
    }

    fn probability(&self, seq: &[usize]) -> Result<f64> {
        Ok(forward_indices(self, seq)?.prob)
    }
}

impl StringProbability for ClassicalMealyHMM {
    fn alphabet(&self) -> &[String] {
        ClassicalMealyHMM::alphabet(self)
    }

    fn probability(&self, seq: &[usize]) -> Result<f64> {
        let labels: Vec<&str> = seq
            .iter()
            .map(|&o| {
                self.alphabet()
                    .get(o)
                    .map(String::as_str)
                    .ok_or_else(|| Error::Input(format!("symbol index {o} out of range")))
            })
            .collect::<Result<_>>()?;
        classical_forward(self, &labels)
    }
}

impl StringProbability for Model {
    fn alphabet(&self) -> &[String] {
        Model::alphabet(self)
    }

    fn probability(&self, seq: &[usize]) -> Result<f64> {
        match self {
            Model::Classical(m) => m.probability(seq),
            Model::Quantum(m) => m.probability(seq),
        }
    }
}

/// All strings up to `max_len`, shortest first and lexicographic (by
/// alphabet order) within a length, starting with the empty string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringBasis {
    alphabet: Vec<String>,
    max_len: usize,
    strings: Vec<Vec<usize>>,
}

impl StringBasis {
    pub fn new(alphabet: &[String], max_len: usize) -> Self {
        let m = alphabet.len();
        let mut strings = vec![Vec::new()];
        let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..max_len {
            layer = layer
                .iter()
                .flat_map(|s| {
                    (0..m).map(move |o| {
                        let mut t = s.clone();
                        t.push(o);
                        t
                    })
                })
                .collect();
            strings.extend(layer.iter().cloned());
        }
        StringBasis {
            alphabet: alphabet.to_vec(),
            max_len,
            strings,
        }
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn strings(&self) -> &[Vec<usize>] {
        &self.strings
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// Printable label of string `i`; symbols are joined with `sep`.
    pub fn label(&self, i: usize, sep: &str) -> String {
        let s = &self.strings[i];
        if s.is_empty() {
            return EMPTY_LABEL.to_string();
        }
        s.iter()
            .map(|&o| self.alphabet[o].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }
}

/// `H(u, v) = P(u·v)` for prefixes `u` (rows) and suffixes `v` (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct HankelMatrix {
    pub rows: StringBasis,
    pub cols: StringBasis,
    pub values: Vec<Vec<f64>>,
}

impl HankelMatrix {
    pub fn rank(&self, rel_tol: f64) -> usize {
        let r = self.rows.len();
        let c = self.cols.len();
        let flat: Vec<f64> = self.values.iter().flatten().copied().collect();
        ComplexMatrix::from_real(r, c, &flat)
            .expect("finite probabilities")
            .numeric_rank(rel_tol)
    }

    /// Tab-separated table; header row and first column carry the string
    /// labels.
    pub fn to_tsv(&self, sep: &str) -> String {
        let mut out = String::new();
        out.push_str("prefix\\suffix");
        for j in 0..self.cols.len() {
            let _ = write!(out, "\t{}", self.cols.label(j, sep));
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&self.rows.label(i, sep));
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn hankel<P: StringProbability + ?Sized>(
    model: &P,
    rows: &StringBasis,
    cols: &StringBasis,
) -> Result<HankelMatrix> {
    for basis in [rows, cols] {
        if basis.alphabet() != model.alphabet() {
            return Err(Error::Input(format!(
                "basis alphabet {:?} does not match model alphabet {:?}",
                basis.alphabet(),
                model.alphabet()
            )));
        }
    }
    let mut values = Vec::with_capacity(rows.len());
    for u in rows.strings() {
        let mut row = Vec::with_capacity(cols.len());
        for v in cols.strings() {
            let mut w = u.clone();
            w.extend_from_slice(v);
            row.push(model.probability(&w)?);
        }
        values.push(row);
    }
    Ok(HankelMatrix {
        rows: rows.clone(),
        cols: cols.clone(),
        values,
    })
}

/// Numeric rank of the square Hankel block over all strings up to `max_len`.
pub fn hankel_rank<P: StringProbability + ?Sized>(model: &P, max_len: usize, rel_tol: f64) -> Result<usize> {
    let basis = StringBasis::new(model.alphabet(), max_len);
    Ok(hankel(model, &basis, &basis)?.rank(rel_tol))
}
