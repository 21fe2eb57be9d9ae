//! Sign matrices, Bell-type expression values and their classical and
//! quantum caps, plus the affine map between a Bell value and the average
//! success probability of an `n -> 1` code.
//!
//! Rows of a sign matrix are input classes: class `i` holds the two strings
//! whose bits relative to the first (reference) bit form the binary pattern
//! of `i`, most significant bit for position 2. Entry `s_ij` is `+1` when
//! bit `j` of the pattern agrees with the reference bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `n` for which a canonical sign matrix is materialized.
pub const MAX_SIGN_MATRIX_BITS: usize = 20;

/// Largest `n` accepted by the brute-force [`deterministic_max`].
pub const MAX_BRUTE_FORCE_BITS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignMatrix {
    n: usize,
    rows: Vec<Vec<i8>>,
}

impl SignMatrix {
    /// Arbitrary ±1 layout with `n` columns and pairwise distinct rows.
    pub fn from_rows(rows: Vec<Vec<i8>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::UnsupportedBitCount {
                n,
                reason: "sign matrix needs at least one column",
            });
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::BitCountMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|s| *s != 1 && *s != -1) {
                return Err(Error::UnsupportedBitCount {
                    n,
                    reason: "sign entries must be +1 or -1",
                });
            }
        }
        for (a, ra) in rows.iter().enumerate() {
            if rows[a + 1..].contains(ra) {
                return Err(Error::UnsupportedBitCount {
                    n,
                    reason: "sign matrix rows must be distinct",
                });
            }
        }
        Ok(SignMatrix { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.rows[i][j]
    }

    /// True when every row starts with `+1`.
    pub fn is_reference_aligned(&self) -> bool {
        self.rows.iter().all(|r| r[0] == 1)
    }
}

/// Canonical sign matrix for `n` bits: all `2^(n-1)` class patterns.
pub fn sign_matrix(n: usize) -> Result<SignMatrix> {
    if n == 0 || n > MAX_SIGN_MATRIX_BITS {
        return Err(Error::UnsupportedBitCount {
            n,
            reason: "sign matrix supports 1 <= n <= 20",
        });
    }
    let rows = (0..1usize << (n - 1))
        .map(|class| {
            (0..n)
                .map(|j| {
                    let differs = j > 0 && (class >> (n - 1 - j)) & 1 == 1;
                    if differs {
                        -1
                    } else {
                        1
                    }
                })
                .collect()
        })
        .collect();
    Ok(SignMatrix { n, rows })
}

/// Three-bit layout whose rows all have an even number of `-` signs:
/// rows `(+,+,+), (+,-,-), (-,+,-), (-,-,+)`.
///
/// It is a row-relabeled, row-sign-flipped variant of `sign_matrix(3)` with
/// the same classical bound and quantum maximum.
pub fn even_parity_three_bit_layout() -> SignMatrix {
    SignMatrix {
        n: 3,
        rows: vec![
            vec![1, 1, 1],
            vec![1, -1, -1],
            vec![-1, 1, -1],
            vec![-1, -1, 1],
        ],
    }
}

/// Correlators `⟨A_i B_j⟩`, zero-indexed, possibly partially filled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    rows: usize,
    cols: usize,
    values: Vec<Option<f64>>,
}

impl CorrelationTable {
    pub fn new(rows: usize, cols: usize) -> Self {
        CorrelationTable {
            rows,
            cols,
            values: vec![None; rows * cols],
        }
    }

    /// Builds a complete table from `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = CorrelationTable::new(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                t.set(i, j, f(i, j));
            }
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.rows && j < self.cols, "({i}, {j}) outside table");
        self.values[i * self.cols + j] = Some(value);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i < self.rows && j < self.cols {
            self.values[i * self.cols + j]
        } else {
            None
        }
    }

    /// Row-major values; `None` if any entry is missing.
    pub fn to_dense(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }
}

/// Value of a Bell-type expression for `n` settings on Bob's side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellValue {
    pub value: f64,
    pub n: usize,
}

impl BellValue {
    pub fn new(n: usize, value: f64) -> Result<Self> {
        let max = algebraic_max(n);
        if !value.is_finite() || value.abs() > max * (1.0 + 1e-12) {
            return Err(Error::BellOutOfRange { n, value, max });
        }
        Ok(BellValue { value, n })
    }

    pub fn success(&self) -> f64 {
        0.5 * (1.0 + self.value / algebraic_max(self.n))
    }
}

/// `n · 2^(n-1)`, the value with every correlator at ±1 in its favoured sign.
pub fn algebraic_max(n: usize) -> f64 {
    n as f64 * 2f64.powi(n as i32 - 1)
}

/// `Σ_ij s_ij t(i, j)`.
pub fn bell_value(t: &CorrelationTable, s: &SignMatrix) -> Result<BellValue> {
    let mut total = 0.0;
    for i in 0..s.num_rows() {
        for j in 0..s.n() {
            let v = t.get(i, j).ok_or(Error::MissingEntry { i, j })?;
            total += f64::from(s.get(i, j)) * v;
        }
    }
    BellValue::new(s.n(), total)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Classical noncontextual bound `Σ_{r=0}^{⌊(n-1)/2⌋} (n - 2r) C(n, r)`.
pub fn classical_bound(n: usize) -> u128 {
    let n = n as u64;
    if n == 0 {
        return 0;
    }
    (0..=(n - 1) / 2)
        .map(|r| u128::from(n - 2 * r) * binomial(n, r))
        .sum()
}

/// Closed form of [`classical_bound`]: `n · C(n-1, ⌊(n-1)/2⌋)`.
pub fn classical_bound_closed_form(n: usize) -> u128 {
    let n = n as u64;
    if n == 0 {
        return 0;
    }
    u128::from(n) * binomial(n - 1, (n - 1) / 2)
}

/// `max_{A ∈ {±1}^rows, B ∈ {±1}^n} Σ s_ij A_i B_j` by exhaustive search.
pub fn deterministic_max(s: &SignMatrix) -> Result<i64> {
    let n = s.n();
    let rows = s.num_rows();
    if n > MAX_BRUTE_FORCE_BITS || rows > 1 << (MAX_BRUTE_FORCE_BITS - 1) {
        return Err(Error::UnsupportedBitCount {
            n,
            reason: "brute-force search supports n <= 5",
        });
    }
    let signed = |mask: u64, k: usize| if (mask >> k) & 1 == 0 { 1i64 } else { -1 };
    let best = (0..1u64 << n)
        .into_par_iter()
        .map(|b_mask| {
            (0..1u64 << rows)
                .map(|a_mask| {
                    let mut total = 0i64;
                    for i in 0..rows {
                        let a = signed(a_mask, i);
                        for j in 0..n {
                            total += i64::from(s.get(i, j)) * a * signed(b_mask, j);
                        }
                    }
                    total
                })
                .max()
                .unwrap_or(i64::MIN)
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Quantum maximum `2^(n-1) √n`.
pub fn quantum_max(n: usize) -> f64 {
    2f64.powi(n as i32 - 1) * (n as f64).sqrt()
}

/// `½ (1 + C / (n 2^(n-1)))`.
pub fn success_from_bell(n: usize, c: f64) -> Result<f64> {
    Ok(BellValue::new(n, c)?.success())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationMargin {
    /// `C_qm - C_cl`.
    pub beta: f64,
    /// Success-probability gain `β / (n 2^n)`.
    pub delta_p: f64,
}

pub fn violation_margin(n: usize, c_qm: f64, c_cl: f64) -> ViolationMargin {
    let beta = c_qm - c_cl;
    ViolationMargin {
        beta,
        delta_p: beta / (n as f64 * 2f64.powi(n as i32)),
    }
}
