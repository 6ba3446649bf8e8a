//! Classical and quantum Mealy hidden Markov models.
//!
//! Transition matrices use the column convention: entry `(i, j)` of the
//! matrix (or grid) for symbol `V` describes the move from state `j` to state
//! `i` while emitting `V`. Forward products are then `Π^{o_T} ⋯ Π^{o_1} π`.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::densemath::{ComplexMatrix, EPS};
use crate::error::{Error, Result, Violation};
use crate::quantum::{DensityOperator, KrausOperation};
use crate::random;
use crate::tom::{validate_sub_tom, SubTOM, Tom, VectorState};

const PROB_FLOOR: f64 = -1e-12;

/// `λ = (S, V, Π, π)` with real transition matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalMealyHMM {
    states: Vec<String>,
    alphabet: Vec<String>,
    pi: Vec<f64>,
    trans: Vec<Vec<Vec<f64>>>,
    substochastic: bool,
}

impl ClassicalMealyHMM {
    /// `trans[v][i][j]` is the probability of moving `j → i` while emitting
    /// `alphabet[v]`.
    pub fn new(states: Vec<String>, alphabet: Vec<String>, pi: Vec<f64>, trans: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Self::build(states, alphabet, pi, trans, false)
    }

    /// Like [`new`](Self::new) but only requires `Σ_V Π^V` to be
    /// substochastic, so probability mass may leak out of the model.
    pub fn new_substochastic(
        states: Vec<String>,
        alphabet: Vec<String>,
        pi: Vec<f64>,
        trans: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        Self::build(states, alphabet, pi, trans, true)
    }

    fn build(
        states: Vec<String>,
        alphabet: Vec<String>,
        pi: Vec<f64>,
        trans: Vec<Vec<Vec<f64>>>,
        substochastic: bool,
    ) -> Result<Self> {
        let m = ClassicalMealyHMM {
            states,
            alphabet,
            pi,
            trans,
            substochastic,
        };
        validate_hmm(&m)?;
        Ok(m)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Transition matrix of symbol index `v`.
    pub fn transition(&self, v: usize) -> &[Vec<f64>] {
        &self.trans[v]
    }

    pub fn is_substochastic(&self) -> bool {
        self.substochastic
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn symbol_index(&self, label: &str) -> Result<usize> {
        symbol_index(&self.alphabet, label)
    }

    pub fn encode<S: AsRef<str>>(&self, seq: &[S]) -> Result<Vec<usize>> {
        seq.iter().map(|s| self.symbol_index(s.as_ref())).collect()
    }
}

/// Checks every invariant of a classical model; the report names the field
/// and index of the first violation.
pub fn validate_hmm(m: &ClassicalMealyHMM) -> std::result::Result<(), Violation> {
    check_labels(&m.states, &m.alphabet)?;
    let n = m.states.len();
    if m.pi.len() != n {
        return Err(Violation::new(
            "pi",
            format!("expected {n} entries, got {}", m.pi.len()),
        ));
    }
    for (i, &p) in m.pi.iter().enumerate() {
        if !p.is_finite() || p < PROB_FLOOR {
            return Err(Violation::new("pi", format!("invalid probability {p}")).at(i));
        }
    }
    let total: f64 = m.pi.iter().sum();
    if (total - 1.0).abs() > EPS {
        return Err(Violation::new("pi", format!("entries sum to {total}, expected 1")));
    }
    if m.trans.len() != m.alphabet.len() {
        return Err(Violation::new(
            "transitions",
            format!(
                "expected one matrix per symbol ({}), got {}",
                m.alphabet.len(),
                m.trans.len()
            ),
        ));
    }
    for (v, mat) in m.trans.iter().enumerate() {
        let field = format!("transitions.{}", m.alphabet[v]);
        if mat.len() != n || mat.iter().any(|row| row.len() != n) {
            return Err(Violation::new(field, format!("expected a {n}x{n} matrix")));
        }
        for (i, row) in mat.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < PROB_FLOOR {
                    return Err(Violation::new(field, format!("invalid probability {p} at ({i}, {j})")));
                }
            }
        }
    }
    for j in 0..n {
        let col: f64 = m.trans.iter().flat_map(|mat| mat.iter().map(move |row| row[j])).sum();
        let bad = if m.substochastic {
            col > 1.0 + EPS
        } else {
            (col - 1.0).abs() > EPS
        };
        if bad {
            return Err(Violation::new(
                format!("transitions (column {})", m.states[j]),
                format!("outgoing probabilities sum to {col}"),
            )
            .at(j));
        }
    }
    Ok(())
}

fn check_labels(states: &[String], alphabet: &[String]) -> std::result::Result<(), Violation> {
    for (field, labels) in [("states", states), ("alphabet", alphabet)] {
        if labels.is_empty() {
            return Err(Violation::new(field, "must not be empty"));
        }
        let mut seen = HashSet::new();
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Violation::new(field, "empty label").at(i));
            }
            if !seen.insert(l) {
                return Err(Violation::new(field, format!("duplicate label '{l}'")).at(i));
            }
        }
    }
    Ok(())
}

fn symbol_index(alphabet: &[String], label: &str) -> Result<usize> {
    alphabet
        .iter()
        .position(|a| a == label)
        .ok_or_else(|| Error::Input(format!("unknown symbol '{label}'")))
}

/// `λ = (S, V, P, π)` with one sub-TOM per symbol and a vector state.
#[derive(Clone, Debug, PartialEq)]
pub struct MealyQHMM {
    states: Vec<String>,
    alphabet: Vec<String>,
    dim: usize,
    pi: VectorState,
    trans: Vec<SubTOM>,
    substochastic: bool,
}

impl MealyQHMM {
    pub fn new(states: Vec<String>, alphabet: Vec<String>, pi: VectorState, trans: Vec<SubTOM>) -> Result<Self> {
        Self::build(states, alphabet, pi, trans, false)
    }

    /// Relaxes only the requirement that `Σ_V P^V` be a TOM to it being a
    /// sub-TOM.
    pub fn new_substochastic(
        states: Vec<String>,
        alphabet: Vec<String>,
        pi: VectorState,
        trans: Vec<SubTOM>,
    ) -> Result<Self> {
        Self::build(states, alphabet, pi, trans, true)
    }

    /// Builds the per-symbol sub-TOMs from nested grids; violations are
    /// reported against `transitions.<symbol>`.
    pub fn from_grids(
        states: Vec<String>,
        alphabet: Vec<String>,
        pi: Vec<DensityOperator>,
        grids: Vec<Vec<Vec<KrausOperation>>>,
        substochastic: bool,
    ) -> Result<Self> {
        if grids.len() != alphabet.len() {
            return Err(Violation::new(
                "transitions",
                format!("expected one grid per symbol ({}), got {}", alphabet.len(), grids.len()),
            )
            .into());
        }
        let trans = grids
            .into_iter()
            .zip(&alphabet)
            .map(|(g, sym)| {
                validate_sub_tom(g).map_err(|e| match e {
                    Error::Validation(v) => Error::Validation(v.within(&format!("transitions.{sym}"))),
                    Error::Shape(s) => Error::Shape(format!("transitions.{sym}: {s}")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let pi = VectorState::new(pi).map_err(|e| match e {
            Error::Validation(v) => Error::Validation(v.within("pi")),
            other => other,
        })?;
        Self::build(states, alphabet, pi, trans, substochastic)
    }

    fn build(
        states: Vec<String>,
        alphabet: Vec<String>,
        pi: VectorState,
        trans: Vec<SubTOM>,
        substochastic: bool,
    ) -> Result<Self> {
        let dim = pi.dim();
        let m = MealyQHMM {
            states,
            alphabet,
            dim,
            pi,
            trans,
            substochastic,
        };
        validate_qhmm(&m)?;
        Ok(m)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// Dimension of the internal Hilbert space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of classical states.
    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn pi(&self) -> &VectorState {
        &self.pi
    }

    pub fn transition(&self, v: usize) -> &SubTOM {
        &self.trans[v]
    }

    pub fn transitions(&self) -> &[SubTOM] {
        &self.trans
    }

    pub fn is_substochastic(&self) -> bool {
        self.substochastic
    }

    pub fn symbol_index(&self, label: &str) -> Result<usize> {
        symbol_index(&self.alphabet, label)
    }

    pub fn encode<S: AsRef<str>>(&self, seq: &[S]) -> Result<Vec<usize>> {
        seq.iter().map(|s| self.symbol_index(s.as_ref())).collect()
    }

    /// `P^S = Σ_V P^V`.
    pub fn total_transition(&self) -> SubTOM {
        SubTOM::sum_unchecked(&self.trans).expect("alphabet is non-empty")
    }
}

/// Checks every invariant of a quantum model, including that the per-symbol
/// grids sum to a TOM.
pub fn validate_qhmm(m: &MealyQHMM) -> std::result::Result<(), Violation> {
    check_labels(&m.states, &m.alphabet)?;
    let n = m.states.len();
    if m.pi.size() != n {
        return Err(Violation::new("pi", format!("expected {n} parts, got {}", m.pi.size())));
    }
    m.pi.check().map_err(|v| v.within("pi"))?;
    if m.trans.len() != m.alphabet.len() {
        return Err(Violation::new(
            "transitions",
            format!(
                "expected one grid per symbol ({}), got {}",
                m.alphabet.len(),
                m.trans.len()
            ),
        ));
    }
    for (t, sym) in m.trans.iter().zip(&m.alphabet) {
        if t.out_size() != n || t.in_size() != n || t.dim_in() != m.dim || t.dim_out() != m.dim {
            return Err(Violation::new(
                format!("transitions.{sym}"),
                format!(
                    "expected a {n}x{n} grid on dimension {}, got {}x{} on {}->{}",
                    m.dim,
                    t.out_size(),
                    t.in_size(),
                    t.dim_in(),
                    t.dim_out()
                ),
            ));
        }
        t.check().map_err(|v| v.within(&format!("transitions.{sym}")))?;
    }
    let total = m.total_transition();
    let res = if m.substochastic {
        total.check()
    } else {
        Tom::try_from(total).map(|_| ()).map_err(|e| match e {
            Error::Validation(v) => v,
            other => Violation::new("transitions", other.to_string()),
        })
    };
    res.map_err(|v| {
        let state = v.index.map(|j| m.states[j].clone()).unwrap_or_default();
        Violation {
            message: format!("{} (state {state})", v.message),
            ..v
        }
        .within("sum over symbols")
    })
}

/// The dimension-one quantum model equivalent to a classical one: every
/// probability `p` becomes the Kraus operation `{[√p]}`.
pub fn embed_classical(hmm: &ClassicalMealyHMM) -> MealyQHMM {
    let scalar = |p: f64| {
        KrausOperation::from_kraus_unchecked(vec![ComplexMatrix::scalar(Complex64::new(p.max(0.0).sqrt(), 0.0))])
    };
    let n = hmm.size();
    let trans = hmm
        .trans
        .iter()
        .map(|mat| {
            let rows = mat.iter().map(|row| row.iter().map(|&p| scalar(p)).collect()).collect();
            validate_sub_tom(rows).expect("substochastic matrix embeds as a sub-TOM")
        })
        .collect();
    let parts = hmm
        .pi
        .iter()
        .map(|&p| DensityOperator::from_trusted(ComplexMatrix::scalar(Complex64::new(p.max(0.0), 0.0))))
        .collect();
    let pi = VectorState::new(parts).expect("probability vector embeds as a vector state");
    debug_assert_eq!(pi.size(), n);
    MealyQHMM::build(hmm.states.clone(), hmm.alphabet.clone(), pi, trans, hmm.substochastic)
        .expect("embedding preserves validity")
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn symbol_labels(m: usize) -> Vec<String> {
    if m <= 26 {
        (0..m).map(|i| char::from(b'a' + i as u8).to_string()).collect()
    } else {
        default_labels("v", m)
    }
}

/// Random model with `n` states, `m` symbols and Hilbert dimension `dim`.
///
/// For each source state `j`, one Ginibre matrix is drawn per (target,
/// symbol) pair and the whole column family is right-multiplied by
/// `S^{-1/2}`, `S = Σ K†K`, so that `Σ_V P^V` is a TOM. Deterministic in
/// `seed`.
#[allow(clippy::needless_range_loop)]
pub fn random_qhmm(n: usize, m: usize, dim: usize, seed: u64) -> MealyQHMM {
    assert!(n >= 1 && m >= 1 && dim >= 1, "random_qhmm needs n, m, dim >= 1");
    let mut rng = random::rng(seed);
    let mut grids = vec![vec![vec![KrausOperation::zero(dim, dim); n]; n]; m];
    for j in 0..n {
        let mut family: Vec<ComplexMatrix> = (0..n * m).map(|_| random::ginibre(&mut rng, dim, dim)).collect();
        random::normalise_family(&mut family);
        for (idx, k) in family.into_iter().enumerate() {
            let (i, v) = (idx / m, idx % m);
            grids[v][i][j] = KrausOperation::from_kraus_unchecked(vec![k]);
        }
    }
    let pi = random::vector_state(&mut rng, n, dim);
    assemble_random(n, m, pi, grids)
}

/// Random model whose every entry is `c · Φ` for a channel `Φ`, the form the
/// Viterbi recursion needs. About a third of the entries are zero
/// operations.
#[allow(clippy::needless_range_loop)]
pub fn random_eligible_qhmm(n: usize, m: usize, dim: usize, seed: u64) -> MealyQHMM {
    assert!(
        n >= 1 && m >= 1 && dim >= 1,
        "random_eligible_qhmm needs n, m, dim >= 1"
    );
    let mut rng = random::rng(seed);
    let mut grids = vec![vec![vec![KrausOperation::zero(dim, dim); n]; n]; m];
    for j in 0..n {
        let mut weights = random::simplex(&mut rng, n * m);
        let keep = rng.random_range(0..n * m);
        for (idx, w) in weights.iter_mut().enumerate() {
            if idx != keep && rng.random::<f64>() < 1.0 / 3.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        for (idx, w) in weights.into_iter().enumerate() {
            let (i, v) = (idx / m, idx % m);
            if w > 0.0 {
                let rank = rng.random_range(1..=2);
                let ch = random::channel(&mut rng, dim, dim, rank);
                grids[v][i][j] = ch.scaled((w / total).min(1.0)).expect("weight in [0, 1]");
            }
        }
    }
    let pi = random::vector_state(&mut rng, n, dim);
    assemble_random(n, m, pi, grids)
}

fn assemble_random(n: usize, m: usize, pi: VectorState, grids: Vec<Vec<Vec<KrausOperation>>>) -> MealyQHMM {
    let trans = grids
        .into_iter()
        .map(|g| validate_sub_tom(g).expect("normalised columns"))
        .collect();
    MealyQHMM::new(default_labels("s", n), symbol_labels(m), pi, trans).expect("random model satisfies the TOM law")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub symbol: String,
    pub label: String,
}

/// The transition graph of a model: one node per state and one edge per
/// non-zero operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

const NONZERO_TOL: f64 = 1e-12;

/// Edges are ordered by source state, then target state, then symbol.
pub fn graph_view(model: &MealyQHMM) -> ModelGraph {
    let n = model.size();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            for (v, sym) in model.alphabet.iter().enumerate() {
                if !model.trans[v].entry(i, j).is_zero(NONZERO_TOL) {
                    edges.push(GraphEdge {
                        from: j,
                        to: i,
                        symbol: sym.clone(),
                        label: format!("P_{{{} {}}}^{{{sym}}} | {sym}", model.states[i], model.states[j]),
                    });
                }
            }
        }
    }
    ModelGraph {
        nodes: model.states.clone(),
        edges,
    }
}

impl ModelGraph {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph qhmm {\n");
        for node in &self.nodes {
            let _ = writeln!(out, "  \"{}\";", escape(node));
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(&self.nodes[e.from]),
                escape(&self.nodes[e.to]),
                escape(&e.label)
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Splits a sequence given on the command line or in a file: single
/// characters when `sep` is `None`, otherwise `sep`-separated tokens.
pub fn parse_sequence(text: &str, sep: Option<&str>) -> Vec<String> {
    match sep {
        None => text.chars().map(String::from).collect(),
        Some(_) if text.is_empty() => Vec::new(),
        Some(sep) => text.split(sep).map(str::to_string).collect(),
    }
}

/// Either kind of model, as loaded from a file or the builtin library.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Classical(ClassicalMealyHMM),
    Quantum(MealyQHMM),
}

impl Model {
    pub fn alphabet(&self) -> &[String] {
        match self {
            Model::Classical(m) => m.alphabet(),
            Model::Quantum(m) => m.alphabet(),
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Model::Classical(m) => m.states(),
            Model::Quantum(m) => m.states(),
        }
    }

    pub fn is_substochastic(&self) -> bool {
        match self {
            Model::Classical(m) => m.is_substochastic(),
            Model::Quantum(m) => m.is_substochastic(),
        }
    }

    /// The quantum form; classical models are embedded at dimension one.
    pub fn to_quantum(&self) -> MealyQHMM {
        match self {
            Model::Classical(m) => embed_classical(m),
            Model::Quantum(m) => m.clone(),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        match self {
            Model::Classical(m) => validate_hmm(m),
            Model::Quantum(m) => validate_qhmm(m),
        }
    }
}

impl From<ClassicalMealyHMM> for Model {
    fn from(m: ClassicalMealyHMM) -> Self {
        Model::Classical(m)
    }
}

impl From<MealyQHMM> for Model {
    fn from(m: MealyQHMM) -> Self {
        Model::Quantum(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn builtin_classical_models_validate() {
        for name in ["lambda1c", "lambda3c", "lambda_ex2_c"] {
            let m = builtin::classical(name).unwrap();
            assert!(validate_hmm(&m).is_ok(), "{name}");
        }
    }

    #[test]
    fn pi_must_sum_to_one() {
        let err = ClassicalMealyHMM::new(
            labels(&["s1", "s2"]),
            labels(&["a"]),
            vec![0.5, 0.6],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        )
        .unwrap_err();
        match err {
            Error::Validation(v) => assert_eq!(v.field, "pi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn column_must_be_stochastic() {
        let err = ClassicalMealyHMM::new(
            labels(&["s1", "s2"]),
            labels(&["a"]),
            vec![1.0, 0.0],
            vec![vec![vec![0.9, 0.0], vec![0.0, 1.0]]],
        )
        .unwrap_err();
        match err {
            Error::Validation(v) => assert_eq!(v.index, Some(0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quantum_builtins_validate() {
        for name in ["lambda1q", "lambda_ex2_q"] {
            let m = builtin::quantum(name).unwrap();
            assert!(validate_qhmm(&m).is_ok(), "{name}");
        }
    }

    #[test]
    fn dropping_a_symbol_breaks_the_column_law() {
        let m = builtin::quantum("lambda1q").unwrap();
        let err = MealyQHMM::new(
            m.states().to_vec(),
            labels(&["a", "b"]),
            m.pi().clone(),
            m.transitions()[..2].to_vec(),
        )
        .unwrap_err();
        match err {
            Error::Validation(v) => {
                assert_eq!(v.index, Some(0));
                // column s1 now sums to ½Φ_U only: Σ K†K = ½ I
                let spec = v.spectrum.unwrap();
                assert!(spec.iter().all(|x| (x - 0.5).abs() < 1e-12));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn embedding_is_dimension_one() {
        let c = builtin::classical("lambda1c").unwrap();
        let q = embed_classical(&c);
        assert_eq!(q.dim(), 1);
        assert_eq!(q.size(), 2);
        let p = q.transition(1).entry(1, 0).gram().trace_re();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(validate_qhmm(&q).is_ok());
    }

    #[test]
    fn random_models_validate_and_repeat() {
        let a = random_qhmm(2, 2, 2, 7);
        assert!(validate_qhmm(&a).is_ok());
        assert_eq!(a, random_qhmm(2, 2, 2, 7));
        let one = random_qhmm(1, 1, 1, 99);
        assert!(one.transition(0).entry(0, 0).is_trace_preserving());
        for seed in 0..20 {
            let e = random_eligible_qhmm(3, 2, 2, seed);
            for v in 0..2 {
                for i in 0..3 {
                    for j in 0..3 {
                        assert!(e.transition(v).entry(i, j).proportional_channel_factor().is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn graph_of_two_state_discriminator() {
        let g = graph_view(&builtin::quantum("lambda1q").unwrap());
        assert_eq!(g.nodes.len(), 2);
        let edges: Vec<(usize, usize, &str)> = g.edges.iter().map(|e| (e.from, e.to, e.symbol.as_str())).collect();
        assert_eq!(edges, vec![(0, 1, "b"), (0, 1, "c"), (1, 0, "a")]);
        let dot = g.to_dot();
        assert!(dot.contains("\"s2\" -> \"s1\" [label=\"P_{s1 s2}^{a} | a\"];"));
    }

    #[test]
    fn graph_of_three_state_example() {
        let g = graph_view(&builtin::quantum("lambda_ex2_q").unwrap());
        assert_eq!(g.nodes.len(), 3);
        let edges: Vec<(usize, usize, &str)> = g.edges.iter().map(|e| (e.from, e.to, e.symbol.as_str())).collect();
        assert_eq!(
            edges,
            vec![
                (0, 1, "a"),
                (0, 2, "b"),
                (1, 0, "a"),
                (1, 2, "b"),
                (2, 0, "a"),
                (2, 1, "b")
            ]
        );
    }

    #[test]
    fn sequences_parse() {
        assert_eq!(parse_sequence("aba", None), labels(&["a", "b", "a"]));
        assert_eq!(parse_sequence("up,down", Some(",")), labels(&["up", "down"]));
        assert!(parse_sequence("", Some(",")).is_empty());
        assert!(parse_sequence("", None).is_empty());
    }
}
