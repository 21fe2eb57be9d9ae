//! Quantum 2- and 3-bit codes driven by the path-spin entangled state.
//!
//! Alice's measurement along `Â_i` steers Bob's spin into `ρ_X`, the pure
//! state with Bloch vector `(-1)^{x_1} Â_{class(X)}`. Bob measures the spin
//! along `B̂_k` for query `k`. The anti-correlation of the singlet and
//! Alice's classical correction bit only relabel outcomes, so the protocol
//! statistics are those of the prepared states directly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{bell_value, sign_matrix, BellValue, CorrelationTable};
use crate::classical::{bit_of, class_of, optimal_classical_formula};
use crate::error::{Error, Result};
use crate::qubit::{prepared_state, projector, BlochVector};
use crate::rng::{random_unit_vector, stream_rng};

/// Alice's `2^(n-1)` class directions and Bob's `n` query directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBases {
    pub alice: Vec<BlochVector>,
    pub bob: Vec<BlochVector>,
}

impl MeasurementBases {
    pub fn new(alice: Vec<BlochVector>, bob: Vec<BlochVector>) -> Result<Self> {
        let b = MeasurementBases { alice, bob };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.bob.len();
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidBases(format!(
                "expected 2 or 3 Bob directions, got {n}"
            )));
        }
        if self.alice.len() != 1 << (n - 1) {
            return Err(Error::InvalidBases(format!(
                "expected {} Alice directions for n = {n}, got {}",
                1 << (n - 1),
                self.alice.len()
            )));
        }
        for v in self.alice.iter().chain(&self.bob) {
            v.ensure_unit()?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.bob.len()
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_n(n)?;
        let alice = (0..1 << (n - 1)).map(|_| random_unit_vector(rng)).collect();
        let bob = (0..n).map(|_| random_unit_vector(rng)).collect();
        Ok(MeasurementBases { alice, bob })
    }
}

fn check_n(n: usize) -> Result<()> {
    if (2..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedBitCount {
            n,
            reason: "single-stage quantum codes exist for n = 2, 3",
        })
    }
}

/// Square bases for `n = 2`; cube vertices against the Pauli axes for `n = 3`.
///
/// Both make `Â_i · B̂_j = s_ij / √n`.
pub fn default_bases(n: usize) -> Result<MeasurementBases> {
    check_n(n)?;
    let s = sign_matrix(n)?;
    let bases = if n == 2 {
        let alice = (0..2)
            .map(|i| {
                let (s1, s2) = (f64::from(s.get(i, 0)), f64::from(s.get(i, 1)));
                BlochVector::normalized(s2, 0.0, s1).expect("nonzero")
            })
            .collect();
        MeasurementBases {
            alice,
            bob: vec![BlochVector::Z, BlochVector::X],
        }
    } else {
        let alice = (0..4)
            .map(|i| {
                let r = s.rows()[i]
                    .iter()
                    .map(|v| f64::from(*v))
                    .collect::<Vec<_>>();
                BlochVector::normalized(r[0], r[1], r[2]).expect("nonzero")
            })
            .collect();
        MeasurementBases {
            alice,
            bob: vec![BlochVector::X, BlochVector::Y, BlochVector::Z],
        }
    };
    Ok(bases)
}

/// Average of `Tr(ρ_X B_k^{x_k})` over all strings and queries.
pub fn quantum_success(b: &MeasurementBases) -> Result<f64> {
    b.validate()?;
    let n = b.n();
    let mut total = 0.0;
    for x in 0..1u32 << n {
        let rho = prepared_state(&b.alice[class_of(x, n)], bit_of(x, 1, n))?;
        for k in 1..=n {
            total += rho.probability(&projector(&b.bob[k - 1], bit_of(x, k, n))?);
        }
    }
    Ok(total / (n as f64 * f64::from(1u32 << n)))
}

/// `Tr[ρ^{A_i^0} B_j^0 + ρ^{A_i^1} B_j^1] - 1` for zero-based `i`, `j`.
pub fn correlator_qm(b: &MeasurementBases, i: usize, j: usize) -> Result<f64> {
    let a = &b.alice[i];
    let bj = &b.bob[j];
    let mut tr = 0.0;
    for outcome in 0..2u8 {
        tr += prepared_state(a, outcome)?.probability(&projector(bj, outcome)?);
    }
    Ok(tr - 1.0)
}

pub fn correlation_table(b: &MeasurementBases) -> Result<CorrelationTable> {
    b.validate()?;
    let mut t = CorrelationTable::new(b.alice.len(), b.n());
    for i in 0..b.alice.len() {
        for j in 0..b.n() {
            t.set(i, j, correlator_qm(b, i, j)?);
        }
    }
    Ok(t)
}

pub fn bell_from_preps(b: &MeasurementBases) -> Result<BellValue> {
    bell_value(&correlation_table(b)?, &sign_matrix(b.n())?)
}

/// `|P - ½(1 + C/(n 2^(n-1)))|`.
pub fn identity_check(b: &MeasurementBases) -> Result<f64> {
    let p = quantum_success(b)?;
    let c = bell_from_preps(b)?;
    Ok((p - c.success()).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumProtocolResult {
    pub success: f64,
    pub bell: BellValue,
    /// Gain over the optimal classical success.
    pub margin: f64,
}

pub fn evaluate(b: &MeasurementBases) -> Result<QuantumProtocolResult> {
    let success = quantum_success(b)?;
    Ok(QuantumProtocolResult {
        success,
        bell: bell_from_preps(b)?,
        margin: success - optimal_classical_formula(b.n()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeesawResult {
    pub bell: BellValue,
    pub bases: MeasurementBases,
    /// Start index that produced the best value.
    pub start: usize,
    /// Starts that hit a zero-norm update and were re-drawn.
    pub reseeds: usize,
}

const DEGENERATE_NORM: f64 = 1e-12;
const MAX_RESEEDS: usize = 1000;

/// `Σ_ij s_ij Â_i · B̂_j` evaluated directly on the vectors.
fn bilinear_value(signs: &[Vec<i8>], alice: &[BlochVector], bob: &[BlochVector]) -> f64 {
    signs
        .iter()
        .zip(alice)
        .map(|(row, a)| {
            row.iter()
                .zip(bob)
                .map(|(s, b)| f64::from(*s) * a.dot(b))
                .sum::<f64>()
        })
        .sum()
}

fn weighted_sum<'a>(
    weights: impl Iterator<Item = i8>,
    vectors: impl Iterator<Item = &'a BlochVector>,
) -> Option<BlochVector> {
    let v = weights
        .zip(vectors)
        .fold(BlochVector::new(0.0, 0.0, 0.0), |acc, (w, v)| {
            acc + *v * f64::from(w)
        });
    if v.norm() < DEGENERATE_NORM {
        None
    } else {
        BlochVector::normalized(v.x, v.y, v.z)
    }
}

/// Runs the alternating optimization from `start`; `None` on a zero-norm update.
fn seesaw_run(
    signs: &[Vec<i8>],
    start: &MeasurementBases,
    iterations: usize,
) -> Option<(f64, MeasurementBases)> {
    let n = start.n();
    let mut alice = start.alice.clone();
    let mut bob = start.bob.clone();
    let mut value = f64::NEG_INFINITY;
    for _ in 0..iterations.max(1) {
        for j in 0..n {
            bob[j] = weighted_sum(signs.iter().map(|row| row[j]), alice.iter())?;
        }
        for (i, row) in signs.iter().enumerate() {
            alice[i] = weighted_sum(row.iter().copied(), bob.iter())?;
        }
        let next = bilinear_value(signs, &alice, &bob);
        let converged = next - value <= 1e-15;
        value = next;
        if converged {
            break;
        }
    }
    Some((value, MeasurementBases { alice, bob }))
}

/// Alternating maximization from one given start, re-drawing random
/// directions from `stream` whenever an update degenerates.
pub fn seesaw_from(
    start: &MeasurementBases,
    iterations: usize,
    seed: u64,
    stream: u64,
) -> Result<(BellValue, MeasurementBases, usize)> {
    start.validate()?;
    let n = start.n();
    let signs = sign_matrix(n)?.rows().to_vec();
    let mut rng = stream_rng(seed, stream);
    let mut current = start.clone();
    for reseeds in 0..=MAX_RESEEDS {
        if let Some((_, bases)) = seesaw_run(&signs, &current, iterations) {
            return Ok((bell_from_preps(&bases)?, bases, reseeds));
        }
        current = MeasurementBases::random(n, &mut rng)?;
    }
    Err(Error::InvalidBases("seesaw kept degenerating".into()))
}

/// Best value over `starts` random starts, each on its own seeded stream.
pub fn maximize_bell(
    n: usize,
    starts: usize,
    iterations: usize,
    seed: u64,
) -> Result<SeesawResult> {
    check_n(n)?;
    let runs: Vec<_> = (0..starts.max(1))
        .into_par_iter()
        .map(|start| {
            let mut rng = stream_rng(seed, start as u64);
            let init = MeasurementBases::random(n, &mut rng)?;
            // the start's own stream keeps going for re-draws
            let (bell, bases, reseeds) =
                seesaw_from(&init, iterations, seed, (1u64 << 32) | start as u64)?;
            Ok((start, bell, bases, reseeds))
        })
        .collect::<Result<_>>()?;
    let reseeds = runs.iter().map(|r| usize::from(r.3 > 0)).sum();
    let (start, bell, bases, _) = runs
        .into_iter()
        .reduce(|a, b| if b.1.value > a.1.value { b } else { a })
        .expect("at least one start");
    Ok(SeesawResult {
        bell,
        bases,
        start,
        reseeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::optimal_classical_formula;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    const TOL: f64 = 1e-12;

    #[test]
    fn default_dot_products() {
        let b2 = default_bases(2).unwrap();
        assert!((b2.alice[0].dot(&b2.bob[0]) - FRAC_1_SQRT_2).abs() < TOL);
        assert!(b2.alice[0].dot(&b2.alice[1]).abs() < TOL);
        let b3 = default_bases(3).unwrap();
        let s = sign_matrix(3).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let expect = f64::from(s.get(i, j)) / 3f64.sqrt();
                assert!((b3.alice[i].dot(&b3.bob[j]) - expect).abs() < TOL);
            }
        }
    }

    #[test]
    fn default_success_and_bell() {
        let b2 = default_bases(2).unwrap();
        assert!((quantum_success(&b2).unwrap() - 0.5 * (1.0 + FRAC_1_SQRT_2)).abs() < TOL);
        assert!((bell_from_preps(&b2).unwrap().value - 2.0 * SQRT_2).abs() < TOL);
        let b3 = default_bases(3).unwrap();
        assert!((quantum_success(&b3).unwrap() - 0.5 * (1.0 + 1.0 / 3f64.sqrt())).abs() < TOL);
        assert!((bell_from_preps(&b3).unwrap().value - 4.0 * 3f64.sqrt()).abs() < TOL);
    }

    #[test]
    fn correlators_of_default_square() {
        let b = default_bases(2).unwrap();
        assert!((correlator_qm(&b, 0, 0).unwrap() - FRAC_1_SQRT_2).abs() < TOL);
        assert!((correlator_qm(&b, 1, 1).unwrap() + FRAC_1_SQRT_2).abs() < TOL);
        let perp = MeasurementBases::new(
            vec![BlochVector::Z, BlochVector::X],
            vec![BlochVector::X, BlochVector::Z],
        )
        .unwrap();
        assert!(correlator_qm(&perp, 0, 0).unwrap().abs() < TOL);
    }

    #[test]
    fn bob_along_z_only() {
        // Alice and Bob all along z: first-bit behaviour, C = 2, P = 3/4
        let aligned =
            MeasurementBases::new(vec![BlochVector::Z; 2], vec![BlochVector::Z; 2]).unwrap();
        assert!((quantum_success(&aligned).unwrap() - 0.75).abs() < TOL);
        assert!((bell_from_preps(&aligned).unwrap().value - 2.0).abs() < TOL);
        // default square for Alice, Bob both z: table (1,1,1,1)/√2, C = √2
        let mut b = default_bases(2).unwrap();
        b.bob = vec![BlochVector::Z; 2];
        assert!((bell_from_preps(&b).unwrap().value - SQRT_2).abs() < TOL);
        assert!((quantum_success(&b).unwrap() - 0.5 * (1.0 + SQRT_2 / 4.0)).abs() < TOL);
    }

    #[test]
    fn identity_holds_for_defaults() {
        for n in [2, 3] {
            assert!(identity_check(&default_bases(n).unwrap()).unwrap() < TOL);
        }
    }

    #[test]
    fn margin_matches_violation() {
        let r = evaluate(&default_bases(2).unwrap()).unwrap();
        assert!((r.margin - (2.0 * SQRT_2 - 2.0) / 8.0).abs() < TOL);
        assert!((r.success - optimal_classical_formula(2) - r.margin).abs() < TOL);
    }

    #[test]
    fn invalid_bases_rejected() {
        assert!(MeasurementBases::new(vec![BlochVector::Z], vec![BlochVector::Z; 2]).is_err());
        assert!(MeasurementBases::new(
            vec![BlochVector::Z; 2],
            vec![BlochVector::new(0.0, 0.0, 2.0), BlochVector::Z]
        )
        .is_err());
        assert!(default_bases(4).is_err());
    }

    #[test]
    fn seesaw_reaches_tsirelson_cap() {
        let r2 = maximize_bell(2, 20, 200, 1).unwrap();
        assert!(r2.bell.value >= 2.0 * SQRT_2 - 1e-6);
        assert!(r2.bell.value <= 2.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn adversarial_start_is_reseeded() {
        let start =
            MeasurementBases::new(vec![BlochVector::Z; 2], vec![BlochVector::Z; 2]).unwrap();
        let (bell, _, reseeds) = seesaw_from(&start, 200, 3, 0).unwrap();
        assert!(reseeds >= 1);
        assert!(bell.value <= 2.0 * SQRT_2 + 1e-9);
    }
}
