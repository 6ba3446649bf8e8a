//! The example models shipped with the library.
//!
//! | name           | kind      | states | alphabet |
//! |----------------|-----------|--------|----------|
//! | `lambda1c`     | classical | 2      | a b c    |
//! | `lambda2c`     | classical | 2      | a b      |
//! | `lambda3c`     | classical | 3      | a b c    |
//! | `lambda1q`     | quantum   | 2      | a b c    |
//! | `lambda_ex2_c` | classical | 4      | a b      |
//! | `lambda_ex2_q` | quantum   | 3      | a b      |
//!
//! `lambda1c`, `lambda3c` and `lambda1q` generate `aba` and `aca` with
//! probability ½ each; `lambda1q` additionally leaves the two outcomes in
//! orthogonal internal states. `lambda2c` only recognises `aba` and leaks
//! the remaining mass, so it is flagged substochastic. The `ex2` pair
//! generates alternating odd-length runs of `a` and `b`; the quantum version
//! needs one state fewer.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::densemath::ComplexMatrix;
use crate::error::{Error, Result};
use crate::models::{ClassicalMealyHMM, MealyQHMM, Model};
use crate::quantum::{DensityOperator, KrausOperation};

pub const NAMES: [&str; 6] = [
    "lambda1c",
    "lambda2c",
    "lambda3c",
    "lambda1q",
    "lambda_ex2_c",
    "lambda_ex2_q",
];

fn labels(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn builtin(name: &str) -> Result<Model> {
    match name {
        "lambda1q" | "lambda_ex2_q" => quantum(name).map(Model::Quantum),
        _ => classical(name).map(Model::Classical),
    }
}

fn unknown(name: &str) -> Error {
    Error::Input(format!(
        "unknown builtin model '{name}' (available: {})",
        NAMES.join(", ")
    ))
}

pub fn classical(name: &str) -> Result<ClassicalMealyHMM> {
    let half = 0.5;
    match name {
        "lambda1c" => ClassicalMealyHMM::new(
            labels(&["s1", "s2"]),
            labels(&["a", "b", "c"]),
            vec![0.0, 1.0],
            vec![
                vec![vec![0.0, 1.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![half, 0.0]],
                vec![vec![0.0, 0.0], vec![half, 0.0]],
            ],
        ),
        "lambda2c" => ClassicalMealyHMM::new_substochastic(
            labels(&["s1", "s2"]),
            labels(&["a", "b"]),
            vec![0.0, 1.0],
            vec![
                vec![vec![0.0, 1.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![half, 0.0]],
            ],
        ),
        "lambda3c" => ClassicalMealyHMM::new(
            labels(&["s1", "s2", "s3"]),
            labels(&["a", "b", "c"]),
            vec![0.0, 1.0, 0.0],
            vec![
                vec![vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
                vec![vec![0.0, 0.0, 0.0], vec![half, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
                vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![half, 0.0, 0.0]],
            ],
        ),
        "lambda_ex2_c" => ClassicalMealyHMM::new(
            labels(&["s1", "s2", "s3", "s4"]),
            labels(&["a", "b"]),
            vec![1.0, 0.0, 0.0, 0.0],
            vec![
                vec![
                    vec![0.0, 1.0, 0.0, 0.0],
                    vec![half, 0.0, 0.0, 0.0],
                    vec![0.0, 0.0, 0.0, 0.0],
                    vec![half, 0.0, 0.0, 0.0],
                ],
                vec![
                    vec![0.0, 0.0, 0.0, half],
                    vec![0.0, 0.0, 0.0, 0.0],
                    vec![0.0, 0.0, 0.0, half],
                    vec![0.0, 0.0, 1.0, 0.0],
                ],
            ],
        ),
        _ => Err(unknown(name)),
    }
}

fn real2(d: [f64; 4]) -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &d).expect("2x2")
}

/// `U = [[0, −1], [1, 0]]`, the rotation by π/2.
pub fn rotation() -> ComplexMatrix {
    real2([0.0, -1.0, 1.0, 0.0])
}

pub fn hadamard() -> ComplexMatrix {
    let h = FRAC_1_SQRT_2;
    real2([h, h, h, -h])
}

/// `|+⟩⟨+|`.
pub fn plus_projector() -> ComplexMatrix {
    real2([0.5, 0.5, 0.5, 0.5])
}

/// `|−⟩⟨−|`.
pub fn minus_projector() -> ComplexMatrix {
    real2([0.5, -0.5, -0.5, 0.5])
}

fn conj(x: ComplexMatrix) -> KrausOperation {
    KrausOperation::conjugation(x).expect("contraction")
}

pub fn quantum(name: &str) -> Result<MealyQHMM> {
    let z = || KrausOperation::zero(2, 2);
    match name {
        "lambda1q" => {
            let id = KrausOperation::identity(2);
            let half_u = conj(rotation()).scaled(0.5)?;
            let half_id = id.scaled(0.5)?;
            MealyQHMM::from_grids(
                labels(&["s1", "s2"]),
                labels(&["a", "b", "c"]),
                vec![DensityOperator::zero(2), DensityOperator::basis(0, 2)],
                vec![
                    vec![vec![z(), id], vec![z(), z()]],
                    vec![vec![z(), z()], vec![half_u, z()]],
                    vec![vec![z(), z()], vec![half_id, z()]],
                ],
                false,
            )
        }
        "lambda_ex2_q" => {
            let h = hadamard();
            let h0 = || conj(&h * &ComplexMatrix::ket_bra(0, 0, 2));
            let h1 = || conj(&h * &ComplexMatrix::ket_bra(1, 1, 2));
            let plus = conj(plus_projector());
            let minus = conj(minus_projector());
            MealyQHMM::from_grids(
                labels(&["s1", "s2", "s3"]),
                labels(&["a", "b"]),
                vec![
                    DensityOperator::zero(2),
                    DensityOperator::zero(2),
                    DensityOperator::basis(0, 2),
                ],
                vec![
                    vec![vec![z(), plus, h0()], vec![h0(), z(), z()], vec![z(), z(), z()]],
                    vec![vec![z(), z(), z()], vec![z(), z(), h1()], vec![h1(), minus, z()]],
                ],
                false,
            )
        }
        _ => Err(unknown(name)),
    }
}
