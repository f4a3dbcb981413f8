//! Iterated kernels `K⁽ⁿ⁾`, truncations of the summed kernel, and the
//! geometric tail bound that certifies them.
//!
//! On the shared `τ` grid the `n`-fold integral over `B₂ⁿ` collapses to
//! products with `G = M`:
//!
//! ```text
//! K⁽ⁿ⁾(z, ζ₁ʲ) = (2π)^{2(n−1)} [(k_z ∘ ω) Gⁿ⁻¹]_j / ω_j,   k_z[l] = K(z, ζ₁ˡ)
//! ```

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::operator::{DiscreteOperator, SchwarzSetup};
use crate::{Error, Result};

/// Default cap on floating-point work for kernel products.
pub const DEFAULT_BUDGET: f64 = 1e10;

/// `(m̂/2π)^{t+1} · 2π/(2π − m̂) · ‖f‖∞`.
pub fn series_tail_bound(t: usize, m_hat: f64, f_sup: f64) -> Result<f64> {
    if !(m_hat < TAU) {
        return Err(Error::ContractionViolated { m_hat });
    }
    if m_hat <= 0.0 || f_sup == 0.0 {
        return Ok(0.0);
    }
    let q = m_hat / TAU;
    Ok(q.powi(t as i32 + 1) / (1.0 - q) * f_sup)
}

fn check_budget(work: f64, budget: f64) -> Result<()> {
    if work > budget {
        return Err(Error::BudgetExceeded { work, budget });
    }
    Ok(())
}

/// Cached powers `G⁰ … Gᵗ` of the operator matrix.
#[derive(Clone, Debug)]
pub struct KernelMatrixPower {
    powers: Vec<DMatrix<f64>>,
}

impl KernelMatrixPower {
    pub fn new(op: &DiscreteOperator, max_power: usize, budget: f64) -> Result<Self> {
        let n = op.n() as f64;
        check_budget(max_power as f64 * n * n * n, budget)?;
        let mut powers = Vec::with_capacity(max_power + 1);
        powers.push(DMatrix::identity(op.n(), op.n()));
        for p in 1..=max_power {
            let next = if p == 1 { op.matrix.clone() } else { &op.matrix * &powers[p - 1] };
            powers.push(next);
        }
        Ok(KernelMatrixPower { powers })
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.powers[1.min(self.powers.len() - 1)]
    }

    pub fn max_power(&self) -> usize {
        self.powers.len() - 1
    }

    pub fn power(&self, n: usize) -> Option<&DMatrix<f64>> {
        self.powers.get(n)
    }

    /// `Σ_{n<t} Gⁿ h_τ`.
    pub fn partial_sum(&self, h_tau: &[f64], t: usize) -> Result<Vec<f64>> {
        if t > self.powers.len() {
            return Err(Error::DimensionMismatch { expected: self.powers.len(), got: t });
        }
        let h = DVector::from_column_slice(h_tau);
        let mut acc = DVector::zeros(h.len());
        for p in &self.powers[..t] {
            acc += p * &h;
        }
        Ok(acc.iter().copied().collect())
    }
}

/// Discrete `K⁽ⁿ⁾(z, ζ₁ʲ)`; `n = 1` is `K` itself.
pub fn iterated_kernel(
    setup: &SchwarzSetup,
    op: &DiscreteOperator,
    n: usize,
    z: Complex64,
    j: usize,
    budget: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDiscretization("iterated kernels start at n = 1".into()));
    }
    let size = setup.n();
    if j >= size {
        return Err(Error::DimensionMismatch { expected: size, got: j });
    }
    check_budget(n as f64 * (size * size) as f64, budget)?;
    let k = setup.kernel_row(z)?;
    if n == 1 {
        return Ok(k[j]);
    }
    let mut row = DVector::from_iterator(size, k.iter().zip(&op.weights).map(|(a, w)| a * w)).transpose();
    for _ in 1..n {
        row = &row * &op.matrix;
    }
    Ok(TAU.powi(2 * (n as i32 - 1)) * row[j] / op.weights[j])
}

/// Truncated closed-form values at a point set with their shared tail bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedSeries {
    pub t: usize,
    pub partial_values: Vec<(Complex64, f64)>,
    pub tail_bound: f64,
}

/// `h(z) + Σ_{n=1}^{t} (2π)^{−2n} Σ_j ω_j K⁽ⁿ⁾(z, ζ₁ʲ) h(φ₂(ζ₁ʲ))` and its tail bound.
pub fn closed_form_eval(
    setup: &SchwarzSetup,
    op: &DiscreteOperator,
    powers: &KernelMatrixPower,
    z: Complex64,
    t: usize,
) -> Result<(f64, f64)> {
    let h = setup.eval_h(z)?;
    let tail = series_tail_bound(t, op.m_hat, op.f_sup)?;
    if t == 0 {
        return Ok((h, tail));
    }
    let sum = powers.partial_sum(&op.h_tau, t)?;
    let row = setup.scaled_kernel_row(z)?;
    Ok((h + row.iter().zip(&sum).map(|(a, b)| a * b).sum::<f64>(), tail))
}

/// [`closed_form_eval`] over many points.
pub fn truncated_series(
    setup: &SchwarzSetup,
    op: &DiscreteOperator,
    powers: &KernelMatrixPower,
    points: &[Complex64],
    t: usize,
) -> Result<TruncatedSeries> {
    let mut partial_values = Vec::with_capacity(points.len());
    for &z in points {
        partial_values.push((z, closed_form_eval(setup, op, powers, z, t)?.0));
    }
    Ok(TruncatedSeries { t, partial_values, tail_bound: series_tail_bound(t, op.m_hat, op.f_sup)? })
}
