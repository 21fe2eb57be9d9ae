//! Every deterministic strategy against a table-driven oracle, and the
//! success/correlation identity on each of them.

use racsim_core::bell::{bell_value, sign_matrix};
use racsim_core::classical::{
    mixed_success, reference_correlators, DeterministicStrategy, Enumeration, StrategyMixture,
};

/// Success count computed straight from the strategy id: the top `2^n` bits
/// are the encoding table, each 2-bit group below is a decoder with
/// 00 = constant 0, 01 = negate, 10 = identity, 11 = constant 1.
fn oracle_successes(n: usize, id: u64) -> u32 {
    let encode = id >> (2 * n);
    let mut hits = 0;
    for x in 0..1u64 << n {
        let m = (encode >> x) & 1;
        for k in 1..=n {
            let code = (id >> (2 * (k - 1))) & 0b11;
            let y = match code {
                0b00 => 0,
                0b01 => 1 - m,
                0b10 => m,
                _ => 1,
            };
            let xk = (x >> (n - k)) & 1;
            hits += u32::from(y == xk);
        }
    }
    hits
}

#[test]
fn success_counts_match_oracle() {
    for n in [2, 3] {
        let e = Enumeration::new(n, false).unwrap();
        for id in 0..e.count() {
            assert_eq!(
                e.strategy(id).success_count(),
                oracle_successes(n, id),
                "n = {n}, id = {id}"
            );
        }
    }
}

#[test]
fn success_equals_bell_form_for_every_strategy() {
    for n in [2, 3] {
        let signs = sign_matrix(n).unwrap();
        let cells = f64::from((n as u32) << n);
        let e = Enumeration::new(n, false).unwrap();
        for s in e.iter() {
            let p = f64::from(s.success_count()) / cells;
            let c = bell_value(&reference_correlators(&s), &signs).unwrap();
            assert!((p - c.success()).abs() < 1e-12, "n = {n}, id = {}", s.id());
        }
    }
}

#[test]
fn four_bit_extremes() {
    let e = Enumeration::new(4, true).unwrap();
    let s = e.summarize();
    assert_eq!(s.max, 11.0 / 16.0);
    assert_eq!(s.min, 5.0 / 16.0);
}

#[test]
fn mixtures_are_affine() {
    let e = Enumeration::new(3, false).unwrap();
    let picks: Vec<DeterministicStrategy> = [3u64, 999, 4242, 16383]
        .iter()
        .map(|id| e.strategy(*id))
        .collect();
    let weights = [0.1, 0.2, 0.3, 0.4];
    let m =
        StrategyMixture::new(weights.iter().copied().zip(picks.iter().cloned()).collect()).unwrap();
    let expect: f64 = weights
        .iter()
        .zip(&picks)
        .map(|(w, s)| w * f64::from(s.success_count()) / 24.0)
        .sum();
    assert!((mixed_success(&m) - expect).abs() < 1e-12);
    assert!(StrategyMixture::new(vec![(0.5, picks[0].clone())]).is_err());
}
