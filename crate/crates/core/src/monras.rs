//! Conversion to a single-register hidden quantum Markov model.
//!
//! The classical state index is moved into a second tensor factor: a grid
//! entry's Kraus matrix `E` at position `(k, l)` becomes `E ⊗ |k⟩⟨l|`, the
//! initial vector state becomes the block-diagonal `Σ_i π_i ⊗ |i⟩⟨i|`, and the
//! terminal operation traces the classical factor out again. Basis order is
//! quantum ⊗ classical.
//!
//! The TOM form stores `N` matrices of side `d` per forward step, the lifted
//! form one matrix of side `d·N`, i.e. `N·d²` versus `N²·d²` numbers.

use crate::densemath::ComplexMatrix;
use crate::error::{Error, Result};
use crate::inference::forward_indices;
use crate::models::MealyQHMM;
use crate::quantum::{DensityOperator, KrausOperation};

#[derive(Clone, Debug, PartialEq)]
pub struct SingleRegisterHQMM {
    quantum_dim: usize,
    classes: usize,
    alphabet: Vec<String>,
    initial: DensityOperator,
    ops: Vec<KrausOperation>,
    terminal: KrausOperation,
}

impl SingleRegisterHQMM {
    /// Dimension of the joint register, `quantum_dim · classes`.
    pub fn dim(&self) -> usize {
        self.quantum_dim * self.classes
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum_dim
    }

    /// Dimension of the classical factor (the number of states of the
    /// source model).
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn initial(&self) -> &DensityOperator {
        &self.initial
    }

    pub fn ops(&self) -> &[KrausOperation] {
        &self.ops
    }

    pub fn op(&self, symbol: &str) -> Result<&KrausOperation> {
        self.alphabet
            .iter()
            .position(|a| a == symbol)
            .map(|v| &self.ops[v])
            .ok_or_else(|| Error::Input(format!("unknown symbol '{symbol}'")))
    }

    /// The `$` operation: `{I_d ⊗ ⟨k|}_k`, a partial trace over the
    /// classical factor.
    pub fn terminal(&self) -> &KrausOperation {
        &self.terminal
    }

    /// `Σ_V K^V` as one operation.
    pub fn total_op(&self) -> KrausOperation {
        self.ops
            .iter()
            .skip(1)
            .fold(self.ops[0].clone(), |acc, op| acc.plus_unchecked(op))
    }

    /// The `d x d` diagonal block of `state` belonging to class `k`.
    pub fn block(&self, state: &DensityOperator, k: usize) -> ComplexMatrix {
        let (d, n) = (self.quantum_dim, self.classes);
        let data = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| state.matrix().get(i * n + k, j * n + k))
            .collect();
        ComplexMatrix::new(d, d, data).expect("block shape")
    }

    fn step(&self, state: &DensityOperator, v: usize) -> DensityOperator {
        DensityOperator::from_trusted(self.ops[v].apply_matrix(state.matrix()))
    }

    fn finish(&self, state: DensityOperator, terminate: bool) -> DensityOperator {
        if terminate {
            DensityOperator::from_trusted(self.terminal.apply_matrix(state.matrix()))
        } else {
            state
        }
    }
}

pub fn to_hqmm(model: &MealyQHMM) -> SingleRegisterHQMM {
    let (d, n) = (model.dim(), model.size());
    let ops = model
        .transitions()
        .iter()
        .map(|t| {
            let mut kraus = Vec::new();
            for k in 0..n {
                for l in 0..n {
                    let route = ComplexMatrix::ket_bra(k, l, n);
                    kraus.extend(
                        t.entry(k, l)
                            .kraus()
                            .iter()
                            .filter(|e| !e.is_zero(0.0))
                            .map(|e| e.kron(&route)),
                    );
                }
            }
            if kraus.is_empty() {
                KrausOperation::zero(d * n, d * n)
            } else {
                KrausOperation::from_kraus_unchecked(kraus)
            }
        })
        .collect();
    let initial = model
        .pi()
        .parts()
        .iter()
        .enumerate()
        .fold(ComplexMatrix::zeros(d * n, d * n), |acc, (i, p)| {
            &acc + &p.matrix().kron(&ComplexMatrix::ket_bra(i, i, n))
        });
    let id = ComplexMatrix::identity(d);
    let terminal = KrausOperation::from_kraus_unchecked(
        (0..n)
            .map(|k| id.kron(&ComplexMatrix::elementary(1, n, 0, k)))
            .collect(),
    );
    SingleRegisterHQMM {
        quantum_dim: d,
        classes: n,
        alphabet: model.alphabet().to_vec(),
        initial: DensityOperator::from_trusted(initial),
        ops,
        terminal,
    }
}

/// `ρ_t = K^{o_t}(ρ_{t−1})` from the initial state; with `terminate` the `$`
/// operation is applied last, leaving a state on the quantum factor.
pub fn hqmm_forward<S: AsRef<str>>(h: &SingleRegisterHQMM, seq: &[S], terminate: bool) -> Result<DensityOperator> {
    let mut state = h.initial.clone();
    for s in seq {
        let v = h
            .alphabet
            .iter()
            .position(|a| a == s.as_ref())
            .ok_or_else(|| Error::Input(format!("unknown symbol '{}'", s.as_ref())))?;
        state = h.step(&state, v);
    }
    Ok(h.finish(state, terminate))
}

/// Largest `‖hqmm_forward(O, $) − ρ_O‖_F` over all sequences with
/// `|O| ≤ tmax`.
pub fn equivalence_check(model: &MealyQHMM, tmax: usize, cap: usize) -> Result<f64> {
    let m = model.alphabet().len();
    let mut count: usize = 0;
    let mut layer: usize = 1;
    for _ in 0..=tmax {
        count = count.saturating_add(layer);
        layer = layer.saturating_mul(m);
    }
    if count > cap {
        return Err(Error::Resource(format!(
            "equivalence_check visits {count} sequences, above the enumeration cap of {cap}"
        )));
    }
    let h = to_hqmm(model);
    let mut worst: f64 = 0.0;
    let mut prefix = Vec::with_capacity(tmax);
    walk(model, &h, h.initial.clone(), tmax, &mut prefix, &mut worst)?;
    Ok(worst)
}

fn walk(
    model: &MealyQHMM,
    h: &SingleRegisterHQMM,
    state: DensityOperator,
    remaining: usize,
    prefix: &mut Vec<usize>,
    worst: &mut f64,
) -> Result<()> {
    let reference = forward_indices(model, prefix)?.rho;
    let lifted = h.finish(state.clone(), true);
    *worst = worst.max((lifted.matrix() - reference.matrix()).frobenius_norm());
    if remaining == 0 {
        return Ok(());
    }
    for v in 0..h.alphabet.len() {
        prefix.push(v);
        walk(model, h, h.step(&state, v), remaining - 1, prefix, worst)?;
        prefix.pop();
    }
    Ok(())
}
