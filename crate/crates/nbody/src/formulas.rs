//! Closed-form low-order time derivatives of solutions of `y'' = f(y)`,
//! evaluated with numerically differentiated force tensors.
//!
//! The third through sixth time derivatives of a solution are explicit
//! contractions of the partial-derivative tensors of `f` with the state's
//! velocity, acceleration, and lower derivatives. This module computes those
//! tensors by nested central finite differences and evaluates the
//! contractions verbatim, providing an oracle for the series recursion in
//! [`crate::taylor`] that is independent of any hand algebra.

// The contraction loops index tensors and state vectors by the same k_i
// variables that appear in each function's doc-comment formula.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::forces::Field;

/// Largest coordinate dimension accepted for tensor orders 3 and 4 (dense
/// `n^(l+1)` storage grows fast; the oracle only needs small instances).
pub const MAX_DIM_HIGH_ORDER: usize = 12;

/// Dense tensor of `l`-th partial derivatives: entry `(j, k_1, ..., k_l)`
/// approximates the `l`-fold partial of `f_j` with respect to
/// `y_{k_l} ... y_{k_1}`. Symmetric in the `k`-indices up to
/// finite-difference error.
#[derive(Debug, Clone)]
pub struct DerivativeTensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

impl DerivativeTensor {
    /// Differentiation order `l`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coordinate dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry for component `j` and index tuple `ks` (length `l`).
    pub fn entry(&self, j: usize, ks: &[usize]) -> f64 {
        debug_assert_eq!(ks.len(), self.order);
        let mut idx = j;
        for &k in ks {
            idx = idx * self.dim + k;
        }
        self.entries[idx]
    }

    /// All entries in row-major `(j, k_1, ..., k_l)` order.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    }
}

fn inf_norm(y: &[f64]) -> f64 {
    y.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Central-difference step for an `l`-fold nested stencil at `y`:
/// `(1e-16)^(1/(l+2)) * (1 + |y|_inf)`.
pub fn tensor_fd_step(y: &[f64], l: usize) -> f64 {
    1e-16_f64.powf(1.0 / (l as f64 + 2.0)) * (1.0 + inf_norm(y))
}

/// Signed sum of `f` over the `2^l` probe points of the nested central
/// stencil for the index tuple `ks`, before division by `(2h)^l`.
///
/// Signs are enumerated in opposite pairs and each pair is combined before
/// accumulation, so that for an exactly odd `f` the cancellations forced by
/// parity (for example even-order tensors at `y = 0`) come out as exact
/// floating-point zeros rather than roundoff residue.
fn signed_probe_sum<F: Field + ?Sized>(
    field: &F,
    y: &[f64],
    ks: &[usize],
    h: f64,
) -> Result<Vec<f64>> {
    let n = y.len();
    let l = ks.len();
    let last = ks[l - 1];
    // Bracket over the innermost index: f(p + h e_last) - f(p - h e_last).
    let bracket = |signs: &[f64]| -> Result<Vec<f64>> {
        let mut p = y.to_vec();
        for (i, &s) in signs.iter().enumerate() {
            p[ks[i]] += s * h;
        }
        p[last] += h;
        let plus = field.eval(&p)?;
        p[last] -= 2.0 * h;
        let minus = field.eval(&p)?;
        Ok(plus.iter().zip(&minus).map(|(a, b)| a - b).collect())
    };

    if l == 1 {
        return bracket(&[]);
    }

    // Outer signs come in opposite pairs (tau, -tau); fixing the first sign
    // to +1 enumerates one leader per pair.
    let mut acc = vec![0.0; n];
    let mut tau = vec![1.0_f64; l - 1];
    let leaders = 1_usize << (l - 2);
    for bits in 0..leaders {
        for (i, t) in tau.iter_mut().enumerate().skip(1) {
            *t = if bits >> (i - 1) & 1 == 0 { 1.0 } else { -1.0 };
        }
        let sign: f64 = tau.iter().product();
        let b_plus = bracket(&tau)?;
        let neg: Vec<f64> = tau.iter().map(|t| -t).collect();
        let b_minus = bracket(&neg)?;
        let pair_sign = if (l - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        for j in 0..n {
            acc[j] += sign * (b_plus[j] + pair_sign * b_minus[j]);
        }
    }
    Ok(acc)
}

/// Tensor of `l`-th partial derivatives of the field at `y` by `l`-fold
/// nested central finite differences, `l` in `1..=4`.
///
/// Orders 3 and 4 are limited to `dim <= 12`. A probe point that violates
/// the field's preconditions (a collision, for the unsoftened gravitational
/// kind) propagates the field's error.
pub fn derivative_tensor<F: Field + ?Sized>(
    field: &F,
    y: &[f64],
    l: usize,
) -> Result<DerivativeTensor> {
    if !(1..=4).contains(&l) {
        return Err(Error::InvalidParameter(format!(
            "tensor order {l} outside supported range 1..=4"
        )));
    }
    let n = field.dim();
    if y.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} coordinates, got {}",
            y.len()
        )));
    }
    if l >= 3 && n > MAX_DIM_HIGH_ORDER {
        return Err(Error::InvalidParameter(format!(
            "dense order-{l} tensors are limited to {MAX_DIM_HIGH_ORDER} coordinates, got {n}"
        )));
    }
    let h = tensor_fd_step(y, l);
    let scale = (2.0 * h).powi(l as i32);
    let tuples = n.pow(l as u32);
    let mut entries = vec![0.0; n * tuples];
    let mut ks = vec![0_usize; l];
    for tuple in 0..tuples {
        let mut rem = tuple;
        for i in (0..l).rev() {
            ks[i] = rem % n;
            rem /= n;
        }
        let sums = signed_probe_sum(field, y, &ks, h)?;
        for (j, s) in sums.iter().enumerate() {
            entries[j * tuples + tuple] = s / scale;
        }
    }
    Ok(DerivativeTensor {
        order: l,
        dim: n,
        entries,
    })
}

fn check_state_len(n: usize, name: &str, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{name} has {} coordinates, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

/// Third time derivative of a solution through `(y, v)`:
/// `y3_j = sum_{k1} df_j/dy_{k1} * v_{k1}`.
pub fn third_derivative<F: Field + ?Sized>(field: &F, y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = field.dim();
    check_state_len(n, "velocity", v)?;
    let t1 = derivative_tensor(field, y, 1)?;
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k1 in 0..n {
            acc += t1.entry(j, &[k1]) * v[k1];
        }
        *o = acc;
    }
    Ok(out)
}

/// Fourth time derivative:
/// `y4_j = sum df_j/dy_{k1} a_{k1}
///       + sum sum d2f_j/dy_{k2}dy_{k1} v_{k2} v_{k1}`,
/// with `a = f(y)`.
pub fn fourth_derivative<F: Field + ?Sized>(
    field: &F,
    y: &[f64],
    v: &[f64],
    a: &[f64],
) -> Result<Vec<f64>> {
    let n = field.dim();
    check_state_len(n, "velocity", v)?;
    check_state_len(n, "acceleration", a)?;
    let t1 = derivative_tensor(field, y, 1)?;
    let t2 = derivative_tensor(field, y, 2)?;
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k1 in 0..n {
            acc += t1.entry(j, &[k1]) * a[k1];
        }
        for k1 in 0..n {
            for k2 in 0..n {
                acc += t2.entry(j, &[k1, k2]) * v[k2] * v[k1];
            }
        }
        *o = acc;
    }
    Ok(out)
}

/// Fifth time derivative:
/// `y5_j = sum df_j/dy_{k1} y3_{k1}
///       + sum sum d2f_j/dy_{k2}dy_{k1} [2 v_{k2} a_{k1} + a_{k2} v_{k1}]
///       + sum sum sum d3f_j/dy_{k3}dy_{k2}dy_{k1} v_{k3} v_{k2} v_{k1}`.
pub fn fifth_derivative<F: Field + ?Sized>(
    field: &F,
    y: &[f64],
    v: &[f64],
    a: &[f64],
    y3: &[f64],
) -> Result<Vec<f64>> {
    let n = field.dim();
    check_state_len(n, "velocity", v)?;
    check_state_len(n, "acceleration", a)?;
    check_state_len(n, "third derivative", y3)?;
    let t1 = derivative_tensor(field, y, 1)?;
    let t2 = derivative_tensor(field, y, 2)?;
    let t3 = derivative_tensor(field, y, 3)?;
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k1 in 0..n {
            acc += t1.entry(j, &[k1]) * y3[k1];
        }
        for k1 in 0..n {
            for k2 in 0..n {
                acc += t2.entry(j, &[k1, k2]) * (2.0 * v[k2] * a[k1] + a[k2] * v[k1]);
            }
        }
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    acc += t3.entry(j, &[k1, k2, k3]) * v[k3] * v[k2] * v[k1];
                }
            }
        }
        *o = acc;
    }
    Ok(out)
}

/// Sixth time derivative:
/// `y6_j = sum df_j/dy_{k1} y4_{k1}
///       + sum sum d2f_j/dy_{k2}dy_{k1}
///           [3 y3_{k1} v_{k2} + v_{k1} y3_{k2} + 3 a_{k1} a_{k2}]
///       + sum sum sum d3f_j/dy_{k3}dy_{k2}dy_{k1}
///           [3 a_{k1} v_{k2} v_{k3} + 2 v_{k1} a_{k2} v_{k3} + v_{k1} v_{k2} a_{k3}]
///       + sum sum sum sum d4f_j/dy_{k4}...dy_{k1} v_{k4} v_{k3} v_{k2} v_{k1}`.
pub fn sixth_derivative<F: Field + ?Sized>(
    field: &F,
    y: &[f64],
    v: &[f64],
    a: &[f64],
    y3: &[f64],
    y4: &[f64],
) -> Result<Vec<f64>> {
    let n = field.dim();
    check_state_len(n, "velocity", v)?;
    check_state_len(n, "acceleration", a)?;
    check_state_len(n, "third derivative", y3)?;
    check_state_len(n, "fourth derivative", y4)?;
    let t1 = derivative_tensor(field, y, 1)?;
    let t2 = derivative_tensor(field, y, 2)?;
    let t3 = derivative_tensor(field, y, 3)?;
    let t4 = derivative_tensor(field, y, 4)?;
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k1 in 0..n {
            acc += t1.entry(j, &[k1]) * y4[k1];
        }
        for k1 in 0..n {
            for k2 in 0..n {
                acc += t2.entry(j, &[k1, k2])
                    * (3.0 * y3[k1] * v[k2] + v[k1] * y3[k2] + 3.0 * a[k1] * a[k2]);
            }
        }
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    acc += t3.entry(j, &[k1, k2, k3])
                        * (3.0 * a[k1] * v[k2] * v[k3]
                            + 2.0 * v[k1] * a[k2] * v[k3]
                            + v[k1] * v[k2] * a[k3]);
                }
            }
        }
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    for k4 in 0..n {
                        acc += t4.entry(j, &[k1, k2, k3, k4]) * v[k4] * v[k3] * v[k2] * v[k1];
                    }
                }
            }
        }
        *o = acc;
    }
    Ok(out)
}
