//! Tight-frame representative of the kernel of a rank-d unit-diagonal matrix.
//!
//! For an N×N matrix A of rank d < N, the kernel is (N−d)-dimensional. Taking
//! any basis K of it (N×(N−d)) and whitening, Yᵀ = K (KᵀK)^{−1/2} / √(N−d)
//! gives N vectors y_i ∈ R^{N−d} with Y Yᵀ = I/(N−d) and Σ‖y_i‖² = 1, such
//! that Ker A = {(⟨y, y_1⟩, …, ⟨y, y_N⟩) : y ∈ R^{N−d}}.

use serde::Serialize;

use crate::configs::GramMatrix;
use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_psd, kernel_basis, numerical_rank, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct GaleDual {
    /// (N−d)×N matrix with columns y_i.
    pub y: Matrix,
    /// t_i = ⟨y_i, y_i⟩.
    pub weights: Vec<f64>,
    /// Always 1/(N−d).
    pub frame_constant: f64,
}

impl GaleDual {
    pub fn n(&self) -> usize {
        self.y.cols()
    }

    /// Dimension N−d of the dual frame.
    pub fn dim(&self) -> usize {
        self.y.rows()
    }

    pub fn frame_vectors(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.y.column(i)).collect()
    }
}

/// Builds the Gale dual of `a`, which must have numerical rank exactly `d`
/// (relative threshold `rank_tol`).
pub fn gale_dual(a: &GramMatrix, d: usize, rank_tol: f64) -> Result<GaleDual> {
    let n = a.n();
    if d == n {
        return Err(Error::Degenerate);
    }
    let rank = numerical_rank(a.matrix(), rank_tol)?;
    if rank != d {
        return Err(Error::RankMismatch {
            expected: d,
            found: rank,
        });
    }
    let k = kernel_basis(a.matrix(), rank_tol)?;
    if k.cols() != n - d {
        return Err(Error::RankMismatch {
            expected: d,
            found: n - k.cols(),
        });
    }
    tight_frame_from_kernel(&k)
}

/// Whitens an arbitrary (not necessarily orthonormal) kernel basis, given as
/// the columns of an N×m matrix, into the tight frame with constant 1/m.
pub fn tight_frame_from_kernel(k: &Matrix) -> Result<GaleDual> {
    let m = k.cols();
    if m == 0 {
        return Err(Error::Degenerate);
    }
    let ktk = k.transpose().matmul(k)?;
    let scale = ktk.max_abs();
    let r = inv_sqrt_psd(&ktk, 1e-12 * scale)?;
    let yt = k.matmul(&r)?.scale(1.0 / (m as f64).sqrt());
    let y = yt.transpose();
    let weights = (0..y.cols())
        .map(|i| (0..m).map(|r| y[(r, i)] * y[(r, i)]).sum())
        .collect();
    Ok(GaleDual {
        y,
        weights,
        frame_constant: 1.0 / m as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaleReport {
    /// max_i ‖Σ_j A_ij y_j‖: row i of A annihilates the kernel map.
    pub kernel_residual: f64,
    /// max entry of |Y Yᵀ − I/(N−d)|.
    pub tightness_residual: f64,
    /// |Σ t_i − 1|.
    pub weight_sum_residual: f64,
    pub passed: bool,
}

/// Checks the three defining properties of a Gale dual against `a`.
pub fn verify_gale(a: &GramMatrix, g: &GaleDual, tol: f64) -> GaleReport {
    let n = a.n();
    if g.n() != n || g.dim() == 0 {
        return GaleReport {
            kernel_residual: f64::INFINITY,
            tightness_residual: f64::INFINITY,
            weight_sum_residual: f64::INFINITY,
            passed: false,
        };
    }
    let m = g.dim();
    let mut kernel_residual = 0.0f64;
    for i in 0..n {
        let mut acc = vec![0.0; m];
        for j in 0..n {
            let aij = a.get(i, j);
            for (r, slot) in acc.iter_mut().enumerate() {
                *slot += aij * g.y[(r, j)];
            }
        }
        kernel_residual = kernel_residual.max(acc.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let yyt = g.y.matmul(&g.y.transpose()).expect("conformable");
    let tightness_residual = yyt
        .sub(&Matrix::identity(m).scale(1.0 / m as f64))
        .expect("same shape")
        .max_abs();
    let total: f64 = (0..n)
        .map(|i| (0..m).map(|r| g.y[(r, i)] * g.y[(r, i)]).sum::<f64>())
        .sum();
    let weight_sum_residual = (total - 1.0).abs();
    GaleReport {
        kernel_residual,
        tightness_residual,
        weight_sum_residual,
        passed: kernel_residual <= tol && tightness_residual <= tol && weight_sum_residual <= tol,
    }
}
