//! Forward evaluation, sampling and most-likely-path decoding.
//!
//! No rescaling happens inside the forward fold: the returned states are the
//! sub-normalised branch states themselves, and their traces are sequence
//! probabilities. Sequences longer than [`MAX_SEQUENCE_LEN`] are rejected
//! rather than allowed to underflow.

use std::cmp::Ordering;

use indexmap::IndexMap;
use rand::Rng;

use crate::densemath::ComplexMatrix;
use crate::error::{Error, Result};
use crate::models::{ClassicalMealyHMM, MealyQHMM};
use crate::quantum::{DensityOperator, Measurement};
use crate::random;
use crate::tom::SubVectorState;

/// Upper bound on the number of sequences or paths an exhaustive routine
/// may visit.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

pub const MAX_SEQUENCE_LEN: usize = 500;

/// Traces at or below this are treated as a vanished state when
/// conditioning.
const VANISHED: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ForwardResult {
    /// `α_T = P^{o_T} ⋯ P^{o_1}(π)`.
    pub alpha: SubVectorState,
    /// `ρ = Σ_i α_{T,i}`.
    pub rho: DensityOperator,
    /// `tr ρ`, the probability of the sequence.
    pub prob: f64,
}

fn check_length(t: usize) -> Result<()> {
    if t > MAX_SEQUENCE_LEN {
        return Err(Error::Resource(format!(
            "sequence length {t} exceeds the supported maximum of {MAX_SEQUENCE_LEN}"
        )));
    }
    Ok(())
}

fn check_cap(what: &str, base: usize, exp: usize, cap: usize) -> Result<usize> {
    let count = u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .filter(|&c| c <= cap);
    count.ok_or_else(|| Error::Resource(format!("{what}: {base}^{exp} exceeds the enumeration cap of {cap}")))
}

pub fn forward<S: AsRef<str>>(model: &MealyQHMM, seq: &[S]) -> Result<ForwardResult> {
    forward_indices(model, &model.encode(seq)?)
}

/// Forward fold over symbol indices.
pub fn forward_indices(model: &MealyQHMM, seq: &[usize]) -> Result<ForwardResult> {
    check_length(seq.len())?;
    let alpha = fold(model, model.pi().as_sub().clone(), seq)?;
    Ok(finish(alpha))
}

fn fold(model: &MealyQHMM, start: SubVectorState, seq: &[usize]) -> Result<SubVectorState> {
    seq.iter().try_fold(start, |alpha, &o| {
        if o >= model.alphabet().len() {
            return Err(Error::Input(format!("symbol index {o} out of range")));
        }
        model.transition(o).apply(&alpha)
    })
}

fn finish(alpha: SubVectorState) -> ForwardResult {
    let rho = alpha.collapse();
    let prob = rho.trace();
    ForwardResult { alpha, rho, prob }
}

/// Sum of the entries of `Π^{o_T} ⋯ Π^{o_1} π`.
pub fn classical_forward<S: AsRef<str>>(model: &ClassicalMealyHMM, seq: &[S]) -> Result<f64> {
    let idx = model.encode(seq)?;
    check_length(idx.len())?;
    let n = model.size();
    let mut alpha = model.pi().to_vec();
    for o in idx {
        let mat = model.transition(o);
        alpha = (0..n).map(|i| (0..n).map(|j| mat[i][j] * alpha[j]).sum()).collect();
    }
    Ok(alpha.iter().sum())
}

/// Outcome probabilities of `mu` on the forward state of `seq`.
pub fn measured_probabilities<S: AsRef<str>>(
    model: &MealyQHMM,
    seq: &[S],
    mu: &Measurement,
) -> Result<IndexMap<String, f64>> {
    if mu.dim() != model.dim() {
        return Err(Error::Shape(format!(
            "measurement acts on dimension {}, model has dimension {}",
            mu.dim(),
            model.dim()
        )));
    }
    mu.probabilities(&forward(model, seq)?.rho)
}

/// Forward states of every sequence of length `t`, in lexicographic order
/// of the alphabet.
pub fn enumerate_distribution(model: &MealyQHMM, t: usize, cap: usize) -> Result<Vec<(Vec<String>, DensityOperator)>> {
    check_length(t)?;
    let m = model.alphabet().len();
    let count = check_cap("enumerate_distribution", m, t, cap)?;
    let mut out = Vec::with_capacity(count);
    let mut prefix = Vec::with_capacity(t);
    enumerate_rec(model, model.pi().as_sub(), t, &mut prefix, &mut out)?;
    Ok(out)
}

fn enumerate_rec(
    model: &MealyQHMM,
    alpha: &SubVectorState,
    remaining: usize,
    prefix: &mut Vec<usize>,
    out: &mut Vec<(Vec<String>, DensityOperator)>,
) -> Result<()> {
    if remaining == 0 {
        let labels = prefix.iter().map(|&o| model.alphabet()[o].clone()).collect();
        out.push((labels, alpha.collapse()));
        return Ok(());
    }
    for o in 0..model.alphabet().len() {
        let next = model.transition(o).apply(alpha)?;
        prefix.push(o);
        enumerate_rec(model, &next, remaining - 1, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

/// `Σ` of the states returned by [`enumerate_distribution`].
pub fn distribution_total(dist: &[(Vec<String>, DensityOperator)]) -> Option<ComplexMatrix> {
    let dim = dist.first()?.1.dim();
    Some(
        dist.iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, (_, r)| &acc + r.matrix()),
    )
}

/// `‖Σ_o ρ_{O·o} − ρ_O‖_F`.
///
/// Only the traces are guaranteed to agree: `Σ_o ρ_{O·o} = Σ_j Φ_j(α_j)`
/// where `Φ_j` is the channel in column `j` of `Σ_V P^V`, so the operators
/// coincide when those channels fix the `α_j` (for example in classical
/// models or `lambda1q`) but not in general. See
/// [`marginalization_trace_residual`] for the quantity that always vanishes.
pub fn marginalization_check<S: AsRef<str>>(model: &MealyQHMM, seq: &[S]) -> Result<f64> {
    let idx = model.encode(seq)?;
    let base = forward_indices(model, &idx)?;
    let mut total = ComplexMatrix::zeros(model.dim(), model.dim());
    for o in 0..model.alphabet().len() {
        let next = model.transition(o).apply(&base.alpha)?;
        total = &total + next.collapse().matrix();
    }
    Ok((&total - base.rho.matrix()).frobenius_norm())
}

/// `|Σ_o P(O·o) − P(O)|`, zero up to rounding for every valid model.
pub fn marginalization_trace_residual<S: AsRef<str>>(model: &MealyQHMM, seq: &[S]) -> Result<f64> {
    let idx = model.encode(seq)?;
    let base = forward_indices(model, &idx)?;
    let mut total = 0.0;
    for o in 0..model.alphabet().len() {
        total += model.transition(o).apply(&base.alpha)?.total_trace();
    }
    Ok((total - base.prob).abs())
}

/// Conditional distribution of the next symbol given the unnormalised
/// forward state `alpha`.
pub fn next_symbol_distribution(model: &MealyQHMM, alpha: &SubVectorState) -> Result<IndexMap<String, f64>> {
    let (probs, _) = next_symbol_branches(model, alpha)?;
    Ok(model.alphabet().iter().cloned().zip(probs).collect())
}

fn next_symbol_branches(model: &MealyQHMM, alpha: &SubVectorState) -> Result<(Vec<f64>, Vec<SubVectorState>)> {
    let norm = alpha.total_trace();
    if norm <= VANISHED {
        return Err(Error::Domain(format!(
            "cannot condition on a vanished state (trace {norm:e})"
        )));
    }
    let branches = model
        .transitions()
        .iter()
        .map(|t| t.apply(alpha))
        .collect::<Result<Vec<_>>>()?;
    let probs = branches.iter().map(|b| b.total_trace() / norm).collect();
    Ok((probs, branches))
}

/// Draws one sequence of length `t`, symbol by symbol from the conditional
/// next-symbol distribution. Deterministic in `seed`.
pub fn sample(model: &MealyQHMM, t: usize, seed: u64) -> Result<Vec<String>> {
    let mut rng = random::rng(seed);
    sample_with(model, t, &mut rng)
}

/// `count` sequences drawn from one seeded stream.
pub fn sample_many(model: &MealyQHMM, t: usize, count: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    let mut rng = random::rng(seed);
    (0..count).map(|_| sample_with(model, t, &mut rng)).collect()
}

pub fn sample_with<R: Rng + ?Sized>(model: &MealyQHMM, t: usize, rng: &mut R) -> Result<Vec<String>> {
    check_length(t)?;
    let mut alpha = model.pi().as_sub().clone();
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        let (probs, mut branches) = next_symbol_branches(model, &alpha)?;
        let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
        let mut acc = 0.0;
        let mut pick = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (o, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                pick = o;
                break;
            }
        }
        out.push(model.alphabet()[pick].clone());
        alpha = branches.swap_remove(pick);
    }
    Ok(out)
}

/// Proportionality factor `c` of one grid entry, `None` when the entry is
/// not of the form `c · Φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryFactor {
    pub symbol: String,
    pub to: usize,
    pub from: usize,
    pub factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EligibilityReport {
    pub eligible: bool,
    pub factors: Vec<EntryFactor>,
}

impl EligibilityReport {
    pub fn first_offender(&self) -> Option<&EntryFactor> {
        self.factors.iter().find(|f| f.factor.is_none())
    }
}

/// A model is eligible for [`viterbi`] when every entry of every symbol's
/// grid is a scaled channel `c · Φ`. Zero operations count as `c = 0`.
pub fn viterbi_eligibility(model: &MealyQHMM) -> EligibilityReport {
    let n = model.size();
    let mut factors = Vec::with_capacity(model.alphabet().len() * n * n);
    for (v, sym) in model.alphabet().iter().enumerate() {
        let t = model.transition(v);
        for i in 0..n {
            for j in 0..n {
                factors.push(EntryFactor {
                    symbol: sym.clone(),
                    to: i,
                    from: j,
                    factor: t.entry(i, j).proportional_channel_factor(),
                });
            }
        }
    }
    EligibilityReport {
        eligible: factors.iter().all(|f| f.factor.is_some()),
        factors,
    }
}

/// Best partial path ending in one state at one step.
#[derive(Clone, Debug)]
pub struct Survivor {
    /// `A_{k,S_i}`.
    pub state: DensityOperator,
    /// `n*_{k−1}(S_i)`; `None` at step 0.
    pub backpointer: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ViterbiResult {
    /// State labels `n_0 … n_T`.
    pub path: Vec<String>,
    pub path_indices: Vec<usize>,
    /// `survivors[k][i]` for `k = 0..=T`.
    pub survivors: Vec<Vec<Survivor>>,
    /// `A_{T, n*_T}`.
    pub final_state: DensityOperator,
    pub prob: f64,
}

fn labelled(model: &MealyQHMM, path: Vec<usize>, survivors: Vec<Vec<Survivor>>) -> ViterbiResult {
    let last = *path.last().expect("path has at least n_0");
    let final_state = survivors[path.len() - 1][last].state.clone();
    ViterbiResult {
        path: path.iter().map(|&i| model.states()[i].clone()).collect(),
        path_indices: path,
        prob: final_state.trace(),
        final_state,
        survivors,
    }
}

/// Most likely state path for `seq` by dynamic programming over the
/// `N x T` trellis. Ties go to the smallest previous-state index, then the
/// smallest final-state index.
pub fn viterbi<S: AsRef<str>>(model: &MealyQHMM, seq: &[S]) -> Result<ViterbiResult> {
    let idx = model.encode(seq)?;
    check_length(idx.len())?;
    let report = viterbi_eligibility(model);
    if let Some(bad) = report.first_offender() {
        return Err(Error::Ineligible(format!(
            "operation for symbol '{}' from {} to {} is not a scaled channel",
            bad.symbol,
            model.states()[bad.from],
            model.states()[bad.to]
        )));
    }
    let n = model.size();
    let mut survivors: Vec<Vec<Survivor>> = Vec::with_capacity(idx.len() + 1);
    survivors.push(
        model
            .pi()
            .parts()
            .iter()
            .map(|p| Survivor {
                state: p.clone(),
                backpointer: None,
            })
            .collect(),
    );
    for &o in &idx {
        let t = model.transition(o);
        let prev = survivors.last().expect("initialised");
        let mut layer = Vec::with_capacity(n);
        for i in 0..n {
            let mut best: Option<(usize, DensityOperator)> = None;
            for (from, s) in prev.iter().enumerate() {
                let cand = t.entry(i, from).apply(&s.state)?;
                if best.as_ref().is_none_or(|(_, b)| cand.trace() > b.trace()) {
                    best = Some((from, cand));
                }
            }
            let (from, state) = best.expect("at least one state");
            layer.push(Survivor {
                state,
                backpointer: Some(from),
            });
        }
        survivors.push(layer);
    }
    let last_layer = survivors.last().expect("initialised");
    let mut end = 0;
    for (i, s) in last_layer.iter().enumerate() {
        if s.state.trace() > last_layer[end].state.trace() {
            end = i;
        }
    }
    let mut path = vec![end];
    for k in (1..survivors.len()).rev() {
        let cur = *path.last().expect("non-empty");
        path.push(survivors[k][cur].backpointer.expect("set for k >= 1"));
    }
    path.reverse();
    Ok(labelled(model, path, survivors))
}

/// A partial path together with the trace after each of its steps.
type Scored = (Vec<f64>, Vec<usize>, DensityOperator);

/// The order the Viterbi recursion realises: larger final trace first, then
/// the smaller final state, then walking backwards the smaller state and the
/// larger trace at each earlier step.
fn better(traces_a: &[f64], path_a: &[usize], traces_b: &[f64], path_b: &[usize]) -> bool {
    let k = path_a.len() - 1;
    let by_trace = |m: usize| traces_b[m].partial_cmp(&traces_a[m]).unwrap_or(Ordering::Equal);
    let mut ord = by_trace(k).then(path_a[k].cmp(&path_b[k]));
    for m in (0..k).rev() {
        ord = ord.then(path_a[m].cmp(&path_b[m])).then(by_trace(m));
    }
    ord == Ordering::Less
}

/// Exhaustive search over all `N^{T+1}` state paths, evaluating
/// `tr P^{o_T}_{n_T n_{T−1}} ⋯ P^{o_1}_{n_1 n_0}(π_{n_0})` for each. Works for
/// any model. The survivors hold, for every step and state, the best
/// partial path ending there.
pub fn brute_force_viterbi<S: AsRef<str>>(model: &MealyQHMM, seq: &[S], cap: usize) -> Result<ViterbiResult> {
    let idx = model.encode(seq)?;
    check_length(idx.len())?;
    let n = model.size();
    check_cap("brute_force_viterbi", n, idx.len() + 1, cap)?;
    let mut best: Vec<Vec<Option<Scored>>> = vec![vec![None; n]; idx.len() + 1];
    let mut path = Vec::with_capacity(idx.len() + 1);
    let mut traces = Vec::with_capacity(idx.len() + 1);
    for start in 0..n {
        path.push(start);
        search(
            model,
            &idx,
            model.pi().parts()[start].clone(),
            &mut path,
            &mut traces,
            &mut best,
        )?;
        path.pop();
    }
    let mut survivors = Vec::with_capacity(best.len());
    for layer in &best {
        survivors.push(
            layer
                .iter()
                .map(|b| {
                    let (_, p, state) = b.as_ref().expect("every (step, state) is reached");
                    Survivor {
                        state: state.clone(),
                        backpointer: p.len().checked_sub(2).map(|k| p[k]),
                    }
                })
                .collect(),
        );
    }
    let last = best.last().expect("at least one layer");
    let mut winner: Option<&Scored> = None;
    for cand in last.iter().flatten() {
        if winner.is_none_or(|w| better(&cand.0, &cand.1, &w.0, &w.1)) {
            winner = Some(cand);
        }
    }
    let winner_path = winner.expect("non-empty").1.clone();
    Ok(labelled(model, winner_path, survivors))
}

fn search(
    model: &MealyQHMM,
    seq: &[usize],
    state: DensityOperator,
    path: &mut Vec<usize>,
    traces: &mut Vec<f64>,
    best: &mut [Vec<Option<Scored>>],
) -> Result<()> {
    let k = path.len() - 1;
    let here = *path.last().expect("non-empty");
    traces.push(state.trace());
    let slot = &mut best[k][here];
    if slot.as_ref().is_none_or(|(bt, bp, _)| better(traces, path, bt, bp)) {
        *slot = Some((traces.clone(), path.clone(), state.clone()));
    }
    if k < seq.len() {
        let t = model.transition(seq[k]);
        for next in 0..model.size() {
            let s = t.entry(next, here).apply(&state)?;
            path.push(next);
            search(model, seq, s, path, traces, best)?;
            path.pop();
        }
    }
    traces.pop();
    Ok(())
}
