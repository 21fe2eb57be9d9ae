//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use racsim_core::bell::{
    classical_bound, deterministic_max, quantum_max, sign_matrix, success_from_bell,
    violation_margin,
};
use racsim_core::classical::{optimal_classical_formula, Enumeration};
use racsim_core::concat::{
    analytic_per_bit, build_tree, padded_lower_bound, pkj, quantum_bound, simulate, smooth_ceiling,
    Engine, PaddedCode,
};
use racsim_core::mzi::{
    correlator_from_counts, correlator_product_form, entangled_state, estimate_protocol,
    protocol_settings, AliceReadout, Sampler, Setting,
};
use racsim_core::qrac::{default_bases, evaluate, identity_check, maximize_bell};
use racsim_core::rng::stream_rng;
use racsim_core::{BlochVector, MeasurementBases, PureState, Result};

const SEED: u64 = 20_240_917;

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn singlet() -> PureState {
    entangled_state(FRAC_1_SQRT_2, FRAC_1_SQRT_2, PI).expect("normalized")
}

/// Pascal's triangle, independent of the library's binomial.
fn pascal(rows: usize) -> Vec<Vec<u128>> {
    let mut t: Vec<Vec<u128>> = vec![vec![1]];
    for r in 1..=rows {
        let prev = &t[r - 1];
        let mut row = vec![1u128; r + 1];
        for k in 1..r {
            row[k] = prev[k - 1] + prev[k];
        }
        t.push(row);
    }
    t
}

fn two_bit_enumeration() -> Result<Outcome> {
    let (s, t) = timed(|| Enumeration::new(2, false).map(|e| e.summarize()));
    let s = s?;
    Ok(check(
        s.count == 256 && s.max == 0.75 && s.min == 0.25 && t < Duration::from_secs(1),
        format!(
            "{} strategies, max {}, min {}, {:.3} s",
            s.count,
            s.max,
            s.min,
            t.as_secs_f64()
        ),
    ))
}

fn three_bit_enumeration() -> Result<Outcome> {
    let (s, t) = timed(|| Enumeration::new(3, false).map(|e| e.summarize()));
    let s = s?;
    Ok(check(
        s.count == 16384
            && s.max == 0.75
            && s.max_successes * 4 == 3 * 24
            && t < Duration::from_secs(5),
        format!(
            "{} strategies, max {}, {:.3} s",
            s.count,
            s.max,
            t.as_secs_f64()
        ),
    ))
}

fn formula_agreement() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let enumerated = Enumeration::new(n, false)?.summarize().max;
        let formula = optimal_classical_formula(n);
        pass &= formula == enumerated;
        parts.push(format!(
            "n={n}: formula {formula}, enumeration {enumerated}"
        ));
    }
    let f4 = optimal_classical_formula(4);
    pass &= f4 == 11.0 / 16.0;
    parts.push(format!("n=4: formula {f4}"));
    Ok(check(pass, parts.join("; ")))
}

fn bound_identity() -> Result<Outcome> {
    let c = pascal(30);
    let mut pass = (1..=30).all(|n| classical_bound(n) == n as u128 * c[n - 1][(n - 1) / 2]);
    let mut parts = vec![format!("sum = closed form for n = 1..30: {pass}")];
    for n in [2, 3, 4] {
        let brute = deterministic_max(&sign_matrix(n)?)?;
        let ok = brute as u128 == classical_bound(n);
        pass &= ok;
        parts.push(format!("n={n}: brute {brute} vs {}", classical_bound(n)));
    }
    Ok(check(pass, parts.join("; ")))
}

fn headline_numbers() -> Result<Outcome> {
    let r2 = evaluate(&default_bases(2)?)?;
    let r3 = evaluate(&default_bases(3)?)?;
    let pass = within(r2.success, 0.85355339059, 1e-9)
        && within(r2.bell.value, 2.82842712475, 1e-9)
        && within(r3.success, 0.78867513459, 1e-9)
        && within(r3.bell.value, 6.92820323028, 1e-9);
    Ok(check(
        pass,
        format!(
            "P2 {:.11}, C2 {:.11}, P3 {:.11}, C3 {:.11}",
            r2.success, r2.bell.value, r3.success, r3.bell.value
        ),
    ))
}

fn structural_identity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n in [2, 3] {
        for trial in 0..1000u64 {
            let mut rng = stream_rng(SEED, (n as u64) << 32 | trial);
            worst = worst.max(identity_check(&MeasurementBases::random(n, &mut rng)?)?);
        }
    }
    Ok(check(
        worst < 1e-12,
        format!("2000 random bases, worst residual {worst:.3e}"),
    ))
}

fn commensurability() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, rounded) in [(2, 0.1035534), (3, 0.0386751)] {
        let margin = evaluate(&default_bases(n)?)?.margin;
        let beta = violation_margin(n, quantum_max(n), classical_bound(n) as f64);
        // β / (n 2^n) from the closed forms of both bounds
        let exact = match n {
            2 => (2.0 * SQRT_2 - 2.0) / 8.0,
            _ => (4.0 * 3f64.sqrt() - 6.0) / 24.0,
        };
        pass &= within(margin, exact, 1e-9)
            && within(beta.delta_p, exact, 1e-9)
            && within(margin, rounded, 5e-8);
        parts.push(format!(
            "n={n}: P_qm - P_cl {margin:.10}, beta/(n 2^n) {:.10}",
            beta.delta_p
        ));
    }
    Ok(check(pass, parts.join("; ")))
}

fn seesaw_cap() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let best = maximize_bell(n, 100, 500, SEED)?;
        let cap = quantum_max(n);
        pass &= best.bell.value >= cap - 1e-6 && best.bell.value <= cap + 1e-9;
        parts.push(format!("n={n}: best {:.9} (cap {cap:.9})", best.bell.value));
    }
    Ok(check(pass, parts.join("; ")))
}

fn monte_carlo_estimator() -> Result<Outcome> {
    let (est, t) = timed(|| {
        estimate_protocol(
            &singlet(),
            &default_bases(2)?,
            AliceReadout::Steered,
            1_000_000,
            SEED,
        )
    });
    let est = est?;
    let pass = within(est.success, 0.8535534, 0.002)
        && within(est.bell, 2.0 * SQRT_2, 0.01)
        && t < Duration::from_secs(30);
    Ok(check(
        pass,
        format!(
            "P^ {:.6}, C^ {:.6}, {:.2} s",
            est.success,
            est.bell,
            t.as_secs_f64()
        ),
    ))
}

fn classical_regime_sampling() -> Result<Outcome> {
    let aligned = MeasurementBases::new(vec![BlochVector::Z; 2], vec![BlochVector::Z; 2])?;
    let est = estimate_protocol(&singlet(), &aligned, AliceReadout::Direct, 1_000_000, SEED)?;
    let pass = within(est.bell, -2.0, 0.01) && within(est.success, 0.25, 0.002);
    Ok(check(
        pass,
        format!("C^ {:.6}, P^ {:.6}", est.bell, est.success),
    ))
}

fn concatenation() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();

    let p4 = analytic_per_bit(&build_tree(4)?);
    let p6 = analytic_per_bit(&build_tree(6)?);
    let p11 = 0.5 * (1.0 + 1.0 / 6f64.sqrt());
    pass &= p4.iter().all(|p| *p == 0.75) && p6.iter().all(|p| within(*p, p11, 1e-15));
    pass &= within(pkj(1, 1), 0.7041241, 5e-8);
    parts.push(format!("analytic P_2,0 {}, P_1,1 {:.10}", p4[0], p6[0]));

    let shots = 200_000;
    let mut worst: f64 = 0.0;
    for (tree, input) in [
        (build_tree(4)?, vec![1u8, 0, 1, 1]),
        (build_tree(6)?, vec![0u8, 1, 1, 0, 1, 0]),
        (build_tree(2)?, vec![1u8, 0]),
    ] {
        let expected = analytic_per_bit(&tree);
        for engine in [Engine::Born, Engine::Mzi] {
            for q in 1..=tree.n() {
                let r = simulate(&tree, &input, q, shots, SEED, engine)?;
                worst = worst.max((r.rate - expected[q - 1]).abs());
            }
        }
    }
    pass &= worst <= 0.01;
    parts.push(format!("simulation worst deviation {worst:.4}"));

    let c = success_from_bell(4, 16.0)?;
    pass &= c == 0.75 && quantum_bound(4) == 0.75;
    parts.push(format!(
        "success_from_bell(4, 16) {c}, quantum_bound(4) {}",
        quantum_bound(4)
    ));
    Ok(check(pass, parts.join("; ")))
}

fn padding() -> Result<Outcome> {
    let b5 = padded_lower_bound(5);
    let b7 = padded_lower_bound(7);
    let pass = smooth_ceiling(5) == 6
        && smooth_ceiling(7) == 8
        && within(b5, 0.5 + 0.5 / 6f64.sqrt(), 1e-9)
        && within(b7, 0.5 + 0.5 / 8f64.sqrt(), 1e-9)
        && within(b5, 0.7041241, 5e-8)
        && within(b7, 0.6767767, 5e-8)
        && PaddedCode::new(5)?
            .per_bit_success()
            .iter()
            .all(|p| within(*p, b5, 1e-15));
    Ok(check(pass, format!("n=5 {b5:.10}, n=7 {b7:.10}")))
}

fn reproducibility() -> Result<Outcome> {
    let settings = protocol_settings(&default_bases(2)?, AliceReadout::Steered)?;
    let sampler = Sampler::new(&singlet(), &settings, SEED)?;
    let tree = build_tree(6)?;
    let input = [1u8, 1, 0, 1, 0, 0];
    let run = |workers: usize| -> Result<_> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| {
            let counts = sampler.counts(300_001);
            let concat = simulate(&tree, &input, 4, 100_003, SEED, Engine::Mzi)?;
            Ok((counts, concat))
        })
    };
    let reference = run(1)?;
    let mut pass = true;
    for workers in [2, 3, 8] {
        pass &= run(workers)? == reference;
    }
    Ok(check(
        pass,
        "mzi counts and concatenated runs identical for 1, 2, 3, 8 workers",
    ))
}

fn estimator_discrepancy() -> Result<Outcome> {
    let setting = Setting::from_directions(1, 1, &BlochVector::Z, &BlochVector::Z);
    let counts = Sampler::new(&singlet(), &[setting], SEED)?.counts(1_000_000);
    let product = correlator_product_form(&counts[0])?;
    let joint = correlator_from_counts(&counts[0])?;
    Ok(check(
        within(product, 0.0, 0.01) && joint == -1.0,
        format!("product form {product:.6}, joint-frequency {joint}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 14] = [
        ("classical 2-bit exhaustive bound", two_bit_enumeration),
        ("classical 3-bit exhaustive bound", three_bit_enumeration),
        ("optimal classical formula agreement", formula_agreement),
        ("classical bound identity", bound_identity),
        ("quantum headline numbers", headline_numbers),
        ("success/Bell structural identity", structural_identity),
        ("violation margin commensurability", commensurability),
        ("seesaw quantum cap", seesaw_cap),
        ("Monte Carlo estimator", monte_carlo_estimator),
        ("classical-regime sampling", classical_regime_sampling),
        ("concatenation", concatenation),
        ("padding bounds", padding),
        ("reproducibility across workers", reproducibility),
        ("estimator discrepancy surfaced", estimator_discrepancy),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run().unwrap_or_else(|e| check(false, format!("error: {e}")));
        if !outcome.pass {
            failed += 1;
        }
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {}", k + 1, outcome.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
