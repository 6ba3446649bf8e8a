//! Transition operation matrices and vector states.
//!
//! A [`SubTOM`] is a rectangular grid of quantum operations whose columns are
//! trace non-increasing in total; a [`Tom`] additionally requires every column
//! to sum to a channel. They act on columns of sub-normalised density
//! operators the way (sub)stochastic matrices act on probability vectors:
//! `β_i = Σ_j E_ij(α_j)`.

use crate::densemath::{ComplexMatrix, EPS};
use crate::error::{shape, Error, Result, Violation};
use crate::quantum::{DensityOperator, KrausOperation};

#[derive(Clone, Debug, PartialEq)]
pub struct SubTOM {
    out_size: usize,
    in_size: usize,
    dim_in: usize,
    dim_out: usize,
    // row-major out_size x in_size
    grid: Vec<KrausOperation>,
}

/// A [`SubTOM`] whose columns each sum to a quantum channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Tom(SubTOM);

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColumnLaw {
    TraceNonIncreasing,
    Channel,
}

impl SubTOM {
    fn from_grid(grid: Vec<Vec<KrausOperation>>) -> Result<Self> {
        let out_size = grid.len();
        let in_size = grid.first().map_or(0, Vec::len);
        if out_size == 0 || in_size == 0 {
            return Err(shape("a transition operation matrix needs at least one entry"));
        }
        if let Some(r) = grid.iter().position(|row| row.len() != in_size) {
            return Err(shape(format!(
                "ragged grid: row {r} has {} entries, expected {in_size}",
                grid[r].len()
            )));
        }
        let (dim_in, dim_out) = (grid[0][0].dim_in(), grid[0][0].dim_out());
        for (i, row) in grid.iter().enumerate() {
            for (j, op) in row.iter().enumerate() {
                if op.dim_in() != dim_in || op.dim_out() != dim_out {
                    return Err(shape(format!(
                        "entry ({i}, {j}) maps {}->{}, expected {dim_in}->{dim_out}",
                        op.dim_in(),
                        op.dim_out()
                    )));
                }
            }
        }
        Ok(SubTOM {
            out_size,
            in_size,
            dim_in,
            dim_out,
            grid: grid.into_iter().flatten().collect(),
        })
    }

    /// The all-zero grid, a valid sub-TOM.
    pub fn zero(out_size: usize, in_size: usize, dim_in: usize, dim_out: usize) -> Self {
        SubTOM {
            out_size,
            in_size,
            dim_in,
            dim_out,
            grid: vec![KrausOperation::zero(dim_in, dim_out); out_size * in_size],
        }
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// The operation routing input slot `j` to output slot `i`.
    pub fn entry(&self, i: usize, j: usize) -> &KrausOperation {
        &self.grid[i * self.in_size + j]
    }

    /// Entries as nested rows.
    pub fn rows(&self) -> Vec<Vec<KrausOperation>> {
        self.grid.chunks(self.in_size).map(<[_]>::to_vec).collect()
    }

    /// `Σ_i Σ_k K†K` over column `j`.
    pub fn column_gram(&self, j: usize) -> ComplexMatrix {
        (0..self.out_size).fold(ComplexMatrix::zeros(self.dim_in, self.dim_in), |acc, i| {
            &acc + &self.entry(i, j).gram()
        })
    }

    fn check_columns(&self, law: ColumnLaw) -> std::result::Result<(), Violation> {
        let id = ComplexMatrix::identity(self.dim_in);
        for j in 0..self.in_size {
            let g = self.column_gram(j);
            let spectrum = g
                .hermitian_eigenvalues()
                .map_err(|e| Violation::new("column", e.to_string()).at(j))?;
            let top = spectrum.last().copied().unwrap_or(0.0);
            match law {
                ColumnLaw::TraceNonIncreasing if top > 1.0 + EPS => {
                    return Err(Violation::new("column", "operations sum to a trace-increasing map")
                        .at(j)
                        .with_spectrum(spectrum));
                }
                ColumnLaw::Channel if (&g - &id).frobenius_norm() > EPS * self.dim_in as f64 => {
                    return Err(Violation::new("column", "operations do not sum to a quantum channel")
                        .at(j)
                        .with_spectrum(spectrum));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Re-checks the sub-TOM column law.
    pub fn check(&self) -> std::result::Result<(), Violation> {
        self.check_columns(ColumnLaw::TraceNonIncreasing)
    }

    /// `β_i = Σ_j E_ij(α_j)`.
    pub fn apply(&self, alpha: &SubVectorState) -> Result<SubVectorState> {
        if alpha.size() != self.in_size || alpha.dim() != self.dim_in {
            return Err(shape(format!(
                "cannot apply a {}x{} grid on dimension {} to a vector of {} parts of dimension {}",
                self.out_size,
                self.in_size,
                self.dim_in,
                alpha.size(),
                alpha.dim()
            )));
        }
        let parts = (0..self.out_size)
            .map(|i| {
                let m = (0..self.in_size).fold(ComplexMatrix::zeros(self.dim_out, self.dim_out), |acc, j| {
                    &acc + &self.entry(i, j).apply_matrix(alpha.parts[j].matrix())
                });
                DensityOperator::from_trusted(m)
            })
            .collect();
        Ok(SubVectorState {
            dim: self.dim_out,
            parts,
        })
    }

    /// `(self · inner)(i, j) = Σ_k self(i, k) ∘ inner(k, j)`, so that applying
    /// the product equals applying `inner` first and then `self`.
    pub fn product(&self, inner: &SubTOM) -> Result<SubTOM> {
        if inner.out_size != self.in_size || inner.dim_out != self.dim_in {
            return Err(shape(format!(
                "cannot multiply a {}x{} grid (dim {}) by a {}x{} grid (dim out {})",
                self.out_size, self.in_size, self.dim_in, inner.out_size, inner.in_size, inner.dim_out
            )));
        }
        let mut grid = Vec::with_capacity(self.out_size * inner.in_size);
        for i in 0..self.out_size {
            for j in 0..inner.in_size {
                let mut acc: Option<KrausOperation> = None;
                for k in 0..self.in_size {
                    let term = self.entry(i, k).compose(inner.entry(k, j))?;
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.plus_unchecked(&term),
                    });
                }
                grid.push(acc.expect("in_size > 0"));
            }
        }
        Ok(SubTOM {
            out_size: self.out_size,
            in_size: inner.in_size,
            dim_in: inner.dim_in,
            dim_out: self.dim_out,
            grid,
        })
    }

    /// Entrywise sum of equally-shaped grids, without re-validation.
    pub(crate) fn sum_unchecked<'a>(items: impl IntoIterator<Item = &'a SubTOM>) -> Option<SubTOM> {
        let mut it = items.into_iter();
        let mut acc = it.next()?.clone();
        for t in it {
            debug_assert!(t.out_size == acc.out_size && t.in_size == acc.in_size);
            acc.grid = acc.grid.iter().zip(&t.grid).map(|(a, b)| a.plus_unchecked(b)).collect();
        }
        Some(acc)
    }
}

/// Builds a [`SubTOM`], checking that every column is trace non-increasing.
/// The violation names the first offending column and its spectrum.
pub fn validate_sub_tom(grid: Vec<Vec<KrausOperation>>) -> Result<SubTOM> {
    let t = SubTOM::from_grid(grid)?;
    t.check_columns(ColumnLaw::TraceNonIncreasing)?;
    Ok(t)
}

/// Builds a [`Tom`], checking that every column sums to a channel.
pub fn validate_tom(grid: Vec<Vec<KrausOperation>>) -> Result<Tom> {
    Tom::try_from(SubTOM::from_grid(grid)?)
}

impl TryFrom<SubTOM> for Tom {
    type Error = Error;

    fn try_from(t: SubTOM) -> Result<Tom> {
        t.check_columns(ColumnLaw::Channel)?;
        Ok(Tom(t))
    }
}

impl Tom {
    /// Identity channels on the diagonal.
    pub fn identity(size: usize, dim: usize) -> Self {
        let mut t = SubTOM::zero(size, size, dim, dim);
        for i in 0..size {
            t.grid[i * size + i] = KrausOperation::identity(dim);
        }
        Tom(t)
    }

    pub fn as_sub(&self) -> &SubTOM {
        &self.0
    }

    pub fn into_sub(self) -> SubTOM {
        self.0
    }

    /// Re-checks the TOM column law.
    pub fn check(&self) -> std::result::Result<(), Violation> {
        self.0.check_columns(ColumnLaw::Channel)
    }

    /// A TOM maps vector states to vector states.
    pub fn apply(&self, alpha: &VectorState) -> Result<VectorState> {
        Ok(VectorState(self.0.apply(alpha.as_sub())?))
    }

    pub fn product(&self, inner: &Tom) -> Result<Tom> {
        Ok(Tom(self.0.product(&inner.0)?))
    }
}

impl AsRef<SubTOM> for Tom {
    fn as_ref(&self) -> &SubTOM {
        &self.0
    }
}

/// `apply_tom`: see [`SubTOM::apply`].
pub fn apply_tom(t: &SubTOM, alpha: &SubVectorState) -> Result<SubVectorState> {
    t.apply(alpha)
}

/// `tom_product(b, a)` acts as `a` followed by `b`.
pub fn tom_product(b: &SubTOM, a: &SubTOM) -> Result<SubTOM> {
    b.product(a)
}

/// A column of sub-normalised density operators with total trace ≤ 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SubVectorState {
    dim: usize,
    parts: Vec<DensityOperator>,
}

/// A [`SubVectorState`] whose parts sum to a unit-trace state.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorState(SubVectorState);

impl SubVectorState {
    pub fn new(parts: Vec<DensityOperator>) -> Result<Self> {
        let dim = parts
            .first()
            .map(DensityOperator::dim)
            .ok_or_else(|| shape("vector state needs at least one part"))?;
        if let Some(i) = parts.iter().position(|p| p.dim() != dim) {
            return Err(shape(format!(
                "part {i} has dimension {}, expected {dim}",
                parts[i].dim()
            )));
        }
        let v = SubVectorState { dim, parts };
        v.check()?;
        Ok(v)
    }

    pub fn zero(size: usize, dim: usize) -> Self {
        SubVectorState {
            dim,
            parts: vec![DensityOperator::zero(dim); size],
        }
    }

    pub fn size(&self) -> usize {
        self.parts.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parts(&self) -> &[DensityOperator] {
        &self.parts
    }

    /// `Σ_i α_i`.
    pub fn collapse(&self) -> DensityOperator {
        DensityOperator::from_trusted(DensityOperator::sum(self.dim, &self.parts))
    }

    pub fn total_trace(&self) -> f64 {
        self.parts.iter().map(DensityOperator::trace).sum()
    }

    pub fn check(&self) -> std::result::Result<(), Violation> {
        for (i, p) in self.parts.iter().enumerate() {
            p.check()
                .map_err(|v| Violation { index: Some(i), ..v }.within("vector state part"))?;
        }
        let tr = self.total_trace();
        if tr > 1.0 + EPS {
            return Err(Violation::new("vector state", format!("total trace {tr} exceeds 1")));
        }
        Ok(())
    }
}

impl VectorState {
    pub fn new(parts: Vec<DensityOperator>) -> Result<Self> {
        Self::try_from(SubVectorState::new(parts)?)
    }

    pub fn as_sub(&self) -> &SubVectorState {
        &self.0
    }

    pub fn into_sub(self) -> SubVectorState {
        self.0
    }

    pub fn size(&self) -> usize {
        self.0.size()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn parts(&self) -> &[DensityOperator] {
        self.0.parts()
    }

    pub fn check(&self) -> std::result::Result<(), Violation> {
        self.0.check()?;
        let tr = self.0.total_trace();
        if (tr - 1.0).abs() > EPS {
            return Err(Violation::new(
                "vector state",
                format!("total trace {tr} differs from 1"),
            ));
        }
        self.0.collapse().check().map_err(|v| v.within("vector state sum"))
    }
}

impl TryFrom<SubVectorState> for VectorState {
    type Error = Error;

    fn try_from(v: SubVectorState) -> Result<VectorState> {
        let v = VectorState(v);
        v.check()?;
        Ok(v)
    }
}

impl AsRef<SubVectorState> for VectorState {
    fn as_ref(&self) -> &SubVectorState {
        &self.0
    }
}
