//! Density operators, Kraus-form quantum operations and measurements.

use indexmap::IndexMap;
use num_complex::Complex64;

use crate::densemath::{ComplexMatrix, EPS};
use crate::error::{shape, Error, Result, Violation};

/// A positive semi-definite operator with trace in `[0, 1]`.
///
/// Both normalised states and sub-normalised branches of a computation are
/// represented by this type; the trace of a sub-normalised state is the
/// probability of the branch it describes.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and `0 ≤ tr ρ ≤ 1` (all within
    /// [`EPS`]) and stores the Hermitian part of `matrix`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = DensityOperator {
            matrix: checked_square(matrix)?,
        };
        rho.check().map_err(Error::Validation)?;
        Ok(DensityOperator {
            matrix: rho.matrix.hermitian_part(),
        })
    }

    /// Wraps a matrix that is PSD by construction (the image of a PSD
    /// operator under a CP map, or a sum of such).
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        DensityOperator { matrix }
    }

    pub fn zero(dim: usize) -> Self {
        DensityOperator {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    /// `|i⟩⟨i|` in a `dim`-dimensional space.
    pub fn basis(i: usize, dim: usize) -> Self {
        DensityOperator {
            matrix: ComplexMatrix::ket_bra(i, i, dim),
        }
    }

    /// `|ψ⟩⟨ψ|`; `psi` is normalised first.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("zero state vector".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&v, &v)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace_re()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Domain(format!("scale factor {c} outside [0, 1]")));
        }
        Ok(DensityOperator::from_trusted(self.matrix.scale_re(c)))
    }

    /// Re-checks the type invariants. Values produced internally skip
    /// validation, so tests use this to confirm the algebra keeps them valid.
    pub fn check(&self) -> std::result::Result<(), Violation> {
        let m = &self.matrix;
        if !m.is_hermitian(EPS) {
            return Err(Violation::new("density operator", "not Hermitian"));
        }
        let ev = m
            .hermitian_eigenvalues()
            .map_err(|e| Violation::new("density operator", e.to_string()))?;
        if ev[0] < -EPS {
            return Err(Violation::new(
                "density operator",
                format!("not positive semi-definite (smallest eigenvalue {:e})", ev[0]),
            )
            .with_spectrum(ev));
        }
        let tr = m.trace_re();
        if !(-EPS..=1.0 + EPS).contains(&tr) {
            return Err(Violation::new("density operator", format!("trace {tr} outside [0, 1]")));
        }
        Ok(())
    }

    pub(crate) fn sum<'a>(dim: usize, parts: impl IntoIterator<Item = &'a DensityOperator>) -> ComplexMatrix {
        parts
            .into_iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, p| &acc + &p.matrix)
    }
}

fn checked_square(m: ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(shape(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}

/// A completely positive, trace non-increasing map `ρ ↦ Σ_j K_j ρ K_j†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausOperation {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausOperation {
    /// Checks that all Kraus matrices share one shape and that
    /// `Σ K†K ≼ (1 + EPS)·I`.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| shape("a quantum operation needs at least one Kraus matrix"))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if let Some(bad) = kraus.iter().position(|k| k.rows() != dim_out || k.cols() != dim_in) {
            return Err(shape(format!(
                "Kraus matrix {bad} is {}x{}, expected {dim_out}x{dim_in}",
                kraus[bad].rows(),
                kraus[bad].cols()
            )));
        }
        let op = KrausOperation { dim_in, dim_out, kraus };
        op.check_trace_non_increasing()?;
        Ok(op)
    }

    pub(crate) fn from_kraus_unchecked(kraus: Vec<ComplexMatrix>) -> Self {
        let (dim_out, dim_in) = (kraus[0].rows(), kraus[0].cols());
        KrausOperation { dim_in, dim_out, kraus }
    }

    /// The zero map, stored as one all-zero Kraus matrix.
    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        KrausOperation {
            dim_in,
            dim_out,
            kraus: vec![ComplexMatrix::zeros(dim_out, dim_in)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        KrausOperation {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// `Φ_X(ρ) = X ρ X†`.
    pub fn conjugation(x: ComplexMatrix) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Σ_j K_j† K_j`.
    pub fn gram(&self) -> ComplexMatrix {
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_in, self.dim_in), |acc, k| {
                &acc + &(&k.adjoint() * k)
            })
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.dim_in {
            return Err(shape(format!(
                "operation acts on dimension {}, state has dimension {}",
                self.dim_in,
                rho.dim()
            )));
        }
        Ok(DensityOperator::from_trusted(self.apply_matrix(rho.matrix())))
    }

    pub(crate) fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            if k.is_zero(0.0) {
                continue;
            }
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        out
    }

    /// Sum of two operations: the Kraus lists are concatenated. Fails if the
    /// sum is no longer trace non-increasing.
    pub fn plus(&self, other: &KrausOperation) -> Result<KrausOperation> {
        self.check_same_dims(other)?;
        let op = self.plus_unchecked(other);
        op.check_trace_non_increasing()?;
        Ok(op)
    }

    pub(crate) fn plus_unchecked(&self, other: &KrausOperation) -> KrausOperation {
        let mut kraus = self.kraus.clone();
        kraus.extend(other.kraus.iter().cloned());
        KrausOperation {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus,
        }
    }

    /// `self ∘ inner`: Kraus matrices `{K_o · K_i}` over all pairs.
    pub fn compose(&self, inner: &KrausOperation) -> Result<KrausOperation> {
        if inner.dim_out != self.dim_in {
            return Err(shape(format!(
                "cannot compose: inner maps to dimension {}, outer acts on {}",
                inner.dim_out, self.dim_in
            )));
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|ko| inner.kraus.iter().map(move |ki| ko * ki))
            .collect();
        Ok(KrausOperation {
            dim_in: inner.dim_in,
            dim_out: self.dim_out,
            kraus,
        })
    }

    /// `c · Φ`, realised by scaling each Kraus matrix by `√c`.
    pub fn scaled(&self, c: f64) -> Result<KrausOperation> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Domain(format!("scale factor {c} outside [0, 1]")));
        }
        let s = c.sqrt();
        Ok(KrausOperation {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(|k| k.scale_re(s)).collect(),
        })
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.dim_in_identity_distance() <= EPS * self.dim_in as f64
    }

    fn dim_in_identity_distance(&self) -> f64 {
        (&self.gram() - &ComplexMatrix::identity(self.dim_in)).frobenius_norm()
    }

    /// Returns `c` when `Σ K†K = c·I`, i.e. the operation is a channel scaled
    /// by `c`. The zero operation yields `Some(0.0)`.
    pub fn proportional_channel_factor(&self) -> Option<f64> {
        let g = self.gram();
        let c = g.trace_re() / self.dim_in as f64;
        let residual = &g - &ComplexMatrix::identity(self.dim_in).scale_re(c);
        if residual.max_abs() <= EPS && c <= 1.0 + EPS {
            Some(c.clamp(0.0, 1.0))
        } else {
            None
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.kraus.iter().all(|k| k.is_zero(tol))
    }

    fn check_same_dims(&self, other: &KrausOperation) -> Result<()> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(shape(format!(
                "operation dimensions differ: {}->{} vs {}->{}",
                self.dim_in, self.dim_out, other.dim_in, other.dim_out
            )));
        }
        Ok(())
    }

    fn check_trace_non_increasing(&self) -> Result<()> {
        let spectrum = self.gram().hermitian_eigenvalues()?;
        if spectrum.last().copied().unwrap_or(0.0) > 1.0 + EPS {
            return Err(
                Violation::new("quantum operation", "sum of K^dag K exceeds the identity")
                    .with_spectrum(spectrum)
                    .into(),
            );
        }
        Ok(())
    }
}

/// A POVM: one positive effect per outcome label, effects summing to `I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    dim: usize,
    effects: IndexMap<String, ComplexMatrix>,
}

impl Measurement {
    pub fn new(effects: impl IntoIterator<Item = (String, ComplexMatrix)>) -> Result<Self> {
        let mut map = IndexMap::new();
        let mut dim = None;
        for (label, effect) in effects {
            let d = *dim.get_or_insert(effect.rows());
            if !effect.is_square() || effect.rows() != d {
                return Err(shape(format!("effect '{label}' is not a {d}x{d} matrix")));
            }
            let ev = effect
                .hermitian_eigenvalues()
                .map_err(|e| Error::Validation(Violation::new(format!("effect '{label}'"), e.to_string())))?;
            if ev[0] < -EPS {
                return Err(
                    Violation::new(format!("effect '{label}'"), "not positive semi-definite")
                        .with_spectrum(ev)
                        .into(),
                );
            }
            if map.insert(label.clone(), effect.hermitian_part()).is_some() {
                return Err(Error::Input(format!("duplicate outcome label '{label}'")));
            }
        }
        let dim = dim.ok_or_else(|| Error::Input("a measurement needs at least one outcome".into()))?;
        let total = map.values().fold(ComplexMatrix::zeros(dim, dim), |acc, e| &acc + e);
        let dev = (&total - &ComplexMatrix::identity(dim)).frobenius_norm();
        if dev > EPS * dim as f64 {
            return Err(Violation::new("measurement", format!("effects sum to I only within {dev:e}")).into());
        }
        Ok(Measurement { dim, effects: map })
    }

    /// The single-outcome measurement `{label ↦ I}`.
    pub fn trivial(label: &str, dim: usize) -> Self {
        let mut effects = IndexMap::new();
        effects.insert(label.to_string(), ComplexMatrix::identity(dim));
        Measurement { dim, effects }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &IndexMap<String, ComplexMatrix> {
        &self.effects
    }

    /// `p(a) = tr μ(a)ρ` for every outcome, clamped to `[0, tr ρ]`.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<IndexMap<String, f64>> {
        if rho.dim() != self.dim {
            return Err(shape(format!(
                "measurement acts on dimension {}, state has dimension {}",
                self.dim,
                rho.dim()
            )));
        }
        let total = rho.trace().max(0.0);
        Ok(self
            .effects
            .iter()
            .map(|(label, e)| {
                let p = (e * rho.matrix()).trace_re().clamp(0.0, total);
                // avoid printing -0
                (label.clone(), if p == 0.0 { 0.0 } else { p })
            })
            .collect())
    }
}
