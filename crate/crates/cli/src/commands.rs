use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use racsim_core::bell::{
    classical_bound, classical_bound_closed_form, deterministic_max, quantum_max, sign_matrix,
    success_from_bell, violation_margin,
};
use racsim_core::classical::{optimal_classical_formula, Enumeration};
use racsim_core::concat::{
    analytic_per_bit, bias_product_per_bit, build_tree, padded_lower_bound, quantum_bound,
    simulate, smooth_ceiling, smooth_exponents, ConcatTree, Engine, PaddedCode,
};
use racsim_core::mzi::{
    correlator_from_counts, correlator_product_form, entangled_state, estimate_protocol,
    protocol_settings, AliceReadout, DetectionCounts, Sampler, Setting,
};
use racsim_core::qrac::{default_bases, evaluate, identity_check, maximize_bell};
use racsim_core::qubit::expectation_product;
use racsim_core::rng::stream_rng;
use racsim_core::{BlochVector, MeasurementBases, PureState};
use serde::Serialize;

use crate::output::Report;
use crate::{
    BoundsArgs, ClassicalArgs, ClassicalMode, ConcatArgs, EngineArg, MziArgs, QuantumArgs, Readout,
    ReportArgs,
};

const SRC_FORMULA: &str = "closed-form classical optimum";
const SRC_ENUM: &str = "exhaustive deterministic strategies";
const SRC_NEGATION: &str = "negating every decoder";
const SRC_BOUND_SUM: &str = "classical bound as binomial sum";
const SRC_BOUND_CLOSED: &str = "classical bound closed form";
const SRC_BRUTE: &str = "brute-force deterministic maximum";
const SRC_QMAX: &str = "quantum maximum 2^(n-1) sqrt(n)";
const SRC_BELL_FORM: &str = "success from Bell value";
const SRC_MARGIN: &str = "Bell violation margin";
const SRC_QUANTUM: &str = "prepared-state success";
const SRC_IDENTITY: &str = "success/Bell identity residual";
const SRC_SEESAW: &str = "multi-start seesaw";
const SRC_JOINT: &str = "joint-frequency correlator";
const SRC_PRODUCT: &str = "product-form estimator (marginal asymmetries)";
const SRC_TALLY: &str = "detector tally";
const SRC_DEPTH: &str = "per-bit success from depth profile";
const SRC_SIM: &str = "end-to-end concatenated simulation";
const SRC_QBOUND: &str = "quantum bound 1/2 + 1/(2 sqrt(n))";
const SRC_PAD: &str = "padded to next 2^k 3^j size";
const SRC_REPRO: &str = "tallies differing between worker counts";

pub fn classical(a: &ClassicalArgs) -> Result<Report> {
    let mut r = Report::new("classical");
    r.param("n", a.n);
    let formula = || -> Result<f64> {
        ensure!(
            (1..=30).contains(&a.n),
            "--n must be in 1..=30 for the closed form"
        );
        Ok(optimal_classical_formula(a.n))
    };
    match a.mode {
        ClassicalMode::Enumerate => {
            r.param("mode", "enumerate");
            let s = Enumeration::new(a.n, a.allow_large)?.summarize();
            let best = formula()?;
            r.info("strategies", s.count as f64, SRC_ENUM);
            r.check("max_success", s.max, best, 0.0, SRC_FORMULA);
            r.check("min_success", s.min, 1.0 - best, 0.0, SRC_NEGATION);
            r.info("argmax_id", s.argmax as f64, SRC_ENUM);
            r.info("argmin_id", s.argmin as f64, SRC_ENUM);
        }
        ClassicalMode::Formula => {
            r.param("mode", "formula");
            let best = formula()?;
            r.info("optimal_success", best, SRC_FORMULA);
            let via_bell = success_from_bell(a.n, classical_bound(a.n) as f64)?;
            r.check(
                "success_at_classical_bound",
                via_bell,
                best,
                1e-12,
                SRC_BELL_FORM,
            );
        }
    }
    Ok(r)
}

pub fn bounds(a: &BoundsArgs) -> Result<Report> {
    let mut r = Report::new("bounds");
    for n in 1..=a.n_max as usize {
        r.param("n", n);
        let cl = classical_bound(n);
        r.check(
            "classical_bound",
            cl as f64,
            classical_bound_closed_form(n) as f64,
            0.0,
            SRC_BOUND_CLOSED,
        );
        let qm = quantum_max(n);
        r.info("quantum_max", qm, SRC_QMAX);
        let p_cl = success_from_bell(n, cl as f64)?;
        r.check(
            "success_classical",
            p_cl,
            optimal_classical_formula(n),
            1e-12,
            SRC_FORMULA,
        );
        let p_qm = success_from_bell(n, qm)?;
        r.check("success_quantum", p_qm, quantum_bound(n), 1e-12, SRC_QBOUND);
        let m = violation_margin(n, qm, cl as f64);
        r.info("beta", m.beta, SRC_MARGIN);
        r.info("delta_success", m.delta_p, SRC_MARGIN);
    }
    Ok(r)
}

fn read_bases(path: &Path, n: usize) -> Result<MeasurementBases> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let b: MeasurementBases = serde_json::from_str(&text)
        .with_context(|| format!("parsing bases file {}", path.display()))?;
    b.validate()?;
    ensure!(
        b.n() == n,
        "bases file has {} query directions, expected {n}",
        b.n()
    );
    Ok(b)
}

pub fn quantum(a: &QuantumArgs) -> Result<Report> {
    let mut r = Report::new("quantum");
    r.param("n", a.n);
    let cap = quantum_max(a.n);
    let bases = match &a.bases {
        Some(p) => {
            r.param("bases", p.display().to_string());
            read_bases(p, a.n)?
        }
        None => {
            r.param("bases", "default");
            default_bases(a.n)?
        }
    };
    let res = evaluate(&bases)?;
    if a.bases.is_none() {
        r.check(
            "success",
            res.success,
            0.5 * (1.0 + 1.0 / (a.n as f64).sqrt()),
            1e-9,
            SRC_QUANTUM,
        );
        r.check("bell_value", res.bell.value, cap, 1e-9, SRC_QMAX);
    } else {
        r.info("success", res.success, SRC_QUANTUM);
        let v = res.bell.value;
        r.check_with("bell_value", v, cap, 1e-9, SRC_QMAX, v <= cap + 1e-9);
    }
    r.check(
        "identity_residual",
        identity_check(&bases)?,
        0.0,
        1e-12,
        SRC_IDENTITY,
    );
    r.info("margin_over_classical", res.margin, SRC_MARGIN);

    if a.maximize {
        let seed = a.seed.expect("clap enforces --seed");
        r.param("seed", seed)
            .param("starts", a.starts)
            .param("iterations", a.iterations);
        let best = maximize_bell(a.n, a.starts, a.iterations, seed)?;
        let v = best.bell.value;
        r.check_with(
            "seesaw_best",
            v,
            cap,
            1e-6,
            SRC_SEESAW,
            v >= cap - 1e-6 && v <= cap + 1e-9,
        );
        r.info("seesaw_best_start", best.start as f64, SRC_SEESAW);
        r.info("seesaw_reseeds", best.reseeds as f64, SRC_SEESAW);
    }
    Ok(r)
}

fn read_settings(path: &Path) -> Result<Vec<Setting>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let s: Setting = serde_json::from_str(line)
            .with_context(|| format!("settings file {} line {}", path.display(), k + 1))?;
        s.spin_axis
            .ensure_unit()
            .with_context(|| format!("settings file {} line {}", path.display(), k + 1))?;
        out.push(s);
    }
    ensure!(
        !out.is_empty(),
        "settings file {} has no settings",
        path.display()
    );
    Ok(out)
}

#[derive(Serialize)]
struct TallyLine {
    i: usize,
    j: usize,
    shots: u64,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "N'")]
    n_plus: u64,
    #[serde(rename = "N''")]
    n_minus: u64,
    #[serde(rename = "M")]
    m: u64,
    #[serde(rename = "M'")]
    m_plus: u64,
    #[serde(rename = "M''")]
    m_minus: u64,
}

impl TallyLine {
    fn new(s: &Setting, c: &DetectionCounts) -> Self {
        TallyLine {
            i: s.i,
            j: s.j,
            shots: c.shots,
            n: c.n(),
            n_plus: c.n_plus,
            n_minus: c.n_minus,
            m: c.m(),
            m_plus: c.m_plus,
            m_minus: c.m_minus,
        }
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn mzi(a: &MziArgs) -> Result<Report> {
    ensure!(a.shots > 0, "--shots must be at least 1");
    let mut r = Report::new("mzi");
    r.param("shots", a.shots).param("seed", a.seed);
    r.param("a", a.a).param("b", a.b).param("delta", a.delta);
    let state = entangled_state(a.a, a.b, a.delta)?;
    let readout = match a.readout {
        Readout::Steered => AliceReadout::Steered,
        Readout::Direct => AliceReadout::Direct,
    };
    let protocol = a.settings_file.is_none();
    let settings = match &a.settings_file {
        Some(p) => {
            r.param("settings_file", p.display().to_string());
            read_settings(p)?
        }
        None => {
            r.param("readout", format!("{readout:?}").to_lowercase());
            protocol_settings(&default_bases(2)?, readout)?
        }
    };
    let sampler = Sampler::new(&state, &settings, a.seed)?;
    let counts = sampler.counts(a.shots);
    let tol = 5.0 / (a.shots as f64).sqrt();

    let signs = sign_matrix(2)?;
    let (mut bell_hat, mut bell_exact) = (0.0, 0.0);
    for (s, c) in settings.iter().zip(&counts) {
        r.param("setting", vec![s.i, s.j]);
        let t = TallyLine::new(s, c);
        for (name, v) in [
            ("N", t.n),
            ("N'", t.n_plus),
            ("N''", t.n_minus),
            ("M", t.m),
            ("M'", t.m_plus),
            ("M''", t.m_minus),
        ] {
            r.info(name, v as f64, SRC_TALLY);
        }
        let joint = correlator_from_counts(c)?;
        let exact = expectation_product(&state, &s.path_direction(), &s.spin_axis)?;
        r.check("correlator", joint, exact, tol, SRC_JOINT);
        r.info(
            "correlator_product_form",
            correlator_product_form(c)?,
            SRC_PRODUCT,
        );
        if protocol {
            let sign = f64::from(signs.get(s.i - 1, s.j - 1));
            bell_hat += sign * joint;
            bell_exact += sign * exact;
        }
    }
    r.unset("setting");
    if protocol {
        r.check(
            "bell_estimate",
            bell_hat,
            bell_exact,
            10.0 / (a.shots as f64).sqrt(),
            SRC_JOINT,
        );
        r.check(
            "success_estimate",
            0.5 + bell_hat / 8.0,
            0.5 + bell_exact / 8.0,
            2.0 / (a.shots as f64).sqrt(),
            SRC_BELL_FORM,
        );
    }
    if let Some(p) = &a.counts {
        write_jsonl(
            p,
            settings
                .iter()
                .zip(&counts)
                .map(|(s, c)| TallyLine::new(s, c)),
        )?;
    }
    if let Some(p) = &a.events {
        write_jsonl(p, sampler.events(a.shots))?;
    }
    Ok(r)
}

enum Scheme {
    Tree(ConcatTree),
    Padded(PaddedCode),
}

impl Scheme {
    fn n(&self) -> usize {
        match self {
            Scheme::Tree(t) => t.n(),
            Scheme::Padded(p) => p.n(),
        }
    }

    fn tree(&self) -> &ConcatTree {
        match self {
            Scheme::Tree(t) => t,
            Scheme::Padded(p) => p.tree(),
        }
    }

    /// Analytic success and the bias-product cross-check per input bit.
    fn per_bit(&self) -> Result<Vec<(f64, f64)>> {
        let a = analytic_per_bit(self.tree());
        let b = bias_product_per_bit(self.tree())?;
        Ok(match self {
            Scheme::Tree(_) => a.into_iter().zip(b).collect(),
            Scheme::Padded(p) => (0..p.n())
                .map(|k| (a[p.leaf_of(k)], b[p.leaf_of(k)]))
                .collect(),
        })
    }

    fn simulate(
        &self,
        input: &[u8],
        q: usize,
        shots: u64,
        seed: u64,
        engine: Engine,
    ) -> Result<f64> {
        let out = match self {
            Scheme::Tree(t) => simulate(t, input, q, shots, seed, engine)?,
            Scheme::Padded(p) => p.simulate(input, q, shots, seed, engine)?,
        };
        Ok(out.rate)
    }
}

fn parse_bits(s: &str, n: usize) -> Result<Vec<u8>> {
    let bits = s
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("--input must contain only 0 and 1, found {c:?}"),
        })
        .collect::<Result<Vec<u8>>>()?;
    ensure!(
        bits.len() == n,
        "--input has {} bits, expected {n}",
        bits.len()
    );
    Ok(bits)
}

pub fn concat(a: &ConcatArgs) -> Result<Report> {
    let mut r = Report::new("concat");
    let scheme = match (&a.tree, a.n) {
        (Some(t), n) => {
            let tree: ConcatTree = t.parse()?;
            if let Some(n) = n {
                ensure!(
                    n == tree.n(),
                    "--n {n} disagrees with the tree's {} leaves",
                    tree.n()
                );
            }
            Scheme::Tree(tree)
        }
        (None, Some(n)) => {
            ensure!(n >= 2, "--n must be at least 2");
            if a.shared_permutation {
                Scheme::Padded(PaddedCode::with_shared_permutation(
                    n,
                    a.seed.expect("clap enforces --seed"),
                )?)
            } else if smooth_exponents(n).is_some() {
                Scheme::Tree(build_tree(n)?)
            } else {
                Scheme::Padded(PaddedCode::new(n)?)
            }
        }
        (None, None) => bail!("either --n or --tree is required"),
    };
    let n = scheme.n();
    r.param("n", n).param("tree", scheme.tree().to_string());
    if let Scheme::Padded(p) = &scheme {
        r.param("padded_to", p.tree().n());
        if p.is_permuted() {
            r.param(
                "leaf_assignment",
                "shared-randomness stand-in: seeded permutation",
            );
        }
    }

    let queries: Vec<usize> = if a.query == "all" {
        (1..=n).collect()
    } else {
        let q: usize = a
            .query
            .parse()
            .context("--query must be a 1-based index or `all`")?;
        ensure!((1..=n).contains(&q), "--query {q} out of range 1..={n}");
        vec![q]
    };
    let per_bit = scheme.per_bit()?;

    match a.engine {
        EngineArg::Analytic => {
            r.param("engine", "analytic");
            for q in &queries {
                let (analytic, product) = per_bit[q - 1];
                r.check(format!("success[{q}]"), analytic, product, 1e-12, SRC_DEPTH);
            }
            r.info("quantum_bound", quantum_bound(n), SRC_QBOUND);
            if smooth_ceiling(n) != n {
                r.info("padded_lower_bound", padded_lower_bound(n), SRC_PAD);
            }
        }
        EngineArg::Born | EngineArg::Mzi => {
            let Some(seed) = a.seed else {
                bail!("--seed is required for sampling engines");
            };
            ensure!(a.shots > 0, "--shots must be at least 1");
            let (engine, name) = match a.engine {
                EngineArg::Born => (Engine::Born, "born"),
                _ => (Engine::Mzi, "mzi"),
            };
            let input = match &a.input {
                Some(s) => parse_bits(s, n)?,
                None => (0..n).map(|k| u8::from(k % 2 == 0)).collect(),
            };
            let input_str: String = input.iter().map(|b| char::from(b'0' + b)).collect();
            r.param("engine", name)
                .param("shots", a.shots)
                .param("seed", seed)
                .param("input", input_str);
            let tol = 5.0 / (a.shots as f64).sqrt();
            for q in &queries {
                let rate = scheme.simulate(&input, *q, a.shots, seed, engine)?;
                r.check(
                    format!("success[{q}]"),
                    rate,
                    per_bit[q - 1].0,
                    tol,
                    SRC_SIM,
                );
            }
        }
    }
    Ok(r)
}

fn singlet() -> Result<PureState> {
    Ok(entangled_state(FRAC_1_SQRT_2, FRAC_1_SQRT_2, PI)?)
}

pub fn report(a: &ReportArgs) -> Result<Report> {
    ensure!(a.shots > 0, "--shots must be at least 1");
    let mut r = Report::new("report");
    r.param("seed", a.seed);

    for n in [2usize, 3] {
        r.param("n", n);
        let s = Enumeration::new(n, false)?.summarize();
        r.check("classical_max", s.max, 0.75, 0.0, SRC_ENUM);
        r.check("classical_min", s.min, 0.25, 0.0, SRC_ENUM);
        r.check(
            "classical_formula",
            optimal_classical_formula(n),
            s.max,
            0.0,
            SRC_FORMULA,
        );
    }
    r.param("n", 4);
    r.check(
        "classical_formula",
        optimal_classical_formula(4),
        11.0 / 16.0,
        0.0,
        SRC_FORMULA,
    );
    r.unset("n");

    let mismatches = (1..=30)
        .filter(|n| classical_bound(*n) != classical_bound_closed_form(*n))
        .count();
    r.param("n_max", 30);
    r.check(
        "bound_sum_mismatches",
        mismatches as f64,
        0.0,
        0.0,
        SRC_BOUND_SUM,
    );
    r.unset("n_max");
    for n in [2usize, 3, 4] {
        r.param("n", n);
        r.check(
            "deterministic_max",
            deterministic_max(&sign_matrix(n)?)? as f64,
            classical_bound(n) as f64,
            0.0,
            SRC_BRUTE,
        );
    }

    for (n, p, c) in [
        (2usize, 0.85355339059, 2.82842712475),
        (3, 0.78867513459, 6.92820323028),
    ] {
        r.param("n", n);
        let res = evaluate(&default_bases(n)?)?;
        r.check("quantum_success", res.success, p, 1e-9, SRC_QUANTUM);
        r.check("quantum_bell", res.bell.value, c, 1e-9, SRC_QMAX);
        let exact_margin =
            (quantum_max(n) - classical_bound(n) as f64) / (n as f64 * f64::from(1u32 << n));
        r.check("margin", res.margin, exact_margin, 1e-9, SRC_MARGIN);
        let mut worst: f64 = 0.0;
        for trial in 0..1000u64 {
            let b = MeasurementBases::random(n, &mut stream_rng(a.seed, (n as u64) << 32 | trial))?;
            worst = worst.max(identity_check(&b)?);
        }
        r.check("identity_worst_residual", worst, 0.0, 1e-12, SRC_IDENTITY);
        let cap = quantum_max(n);
        let best = maximize_bell(n, 100, 500, a.seed)?.bell.value;
        r.check_with(
            "seesaw_best",
            best,
            cap,
            1e-6,
            SRC_SEESAW,
            best >= cap - 1e-6 && best <= cap + 1e-9,
        );
    }
    r.unset("n");

    let state = singlet()?;
    r.param("shots", a.shots);
    let est = estimate_protocol(
        &state,
        &default_bases(2)?,
        AliceReadout::Steered,
        a.shots,
        a.seed,
    )?;
    r.param("readout", "steered");
    r.check("bell_estimate", est.bell, 2.0 * SQRT_2, 0.01, SRC_JOINT);
    r.check(
        "success_estimate",
        est.success,
        0.5 * (1.0 + FRAC_1_SQRT_2),
        0.002,
        SRC_BELL_FORM,
    );
    let aligned = MeasurementBases::new(vec![BlochVector::Z; 2], vec![BlochVector::Z; 2])?;
    let est = estimate_protocol(&state, &aligned, AliceReadout::Direct, a.shots, a.seed)?;
    r.param("readout", "direct").param("bases", "aligned z");
    r.check("bell_estimate", est.bell, -2.0, 0.01, SRC_JOINT);
    r.check("success_estimate", est.success, 0.25, 0.002, SRC_BELL_FORM);
    r.unset("readout").unset("bases");

    let setting = Setting::from_directions(1, 1, &BlochVector::Z, &BlochVector::Z);
    let c = Sampler::new(&state, &[setting], a.seed)?.counts(a.shots)[0];
    r.param("setting", vec![1, 1]);
    r.check(
        "correlator",
        correlator_from_counts(&c)?,
        -1.0,
        0.0,
        SRC_JOINT,
    );
    r.check(
        "correlator_product_form",
        correlator_product_form(&c)?,
        0.0,
        0.01,
        SRC_PRODUCT,
    );
    r.unset("setting");

    let settings = protocol_settings(&default_bases(2)?, AliceReadout::Steered)?;
    let sampler = Sampler::new(&state, &settings, a.seed)?;
    let here = sampler.counts(a.shots);
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .context("building worker pool")?
        .install(|| sampler.counts(a.shots));
    let differing: usize = here
        .iter()
        .zip(&single)
        .map(|(x, y)| {
            x.tallies()
                .iter()
                .zip(y.tallies())
                .filter(|(p, q)| **p != *q)
                .count()
        })
        .sum();
    r.param("workers", rayon::current_num_threads());
    r.check("reproducibility", differing as f64, 0.0, 0.0, SRC_REPRO);
    r.unset("workers").unset("shots");

    let p11 = 0.5 * (1.0 + 1.0 / 6f64.sqrt());
    for (n, expected) in [(2usize, 0.5 * (1.0 + FRAC_1_SQRT_2)), (4, 0.75), (6, p11)] {
        let tree = build_tree(n)?;
        r.param("n", n).param("tree", tree.to_string());
        r.check(
            "analytic_success",
            analytic_per_bit(&tree)[0],
            expected,
            1e-15,
            SRC_DEPTH,
        );
        let input: Vec<u8> = (0..n).map(|k| u8::from(k % 3 == 0)).collect();
        r.param("shots", 200_000);
        for engine in [Engine::Born, Engine::Mzi] {
            r.param("engine", format!("{engine:?}").to_lowercase());
            let rate = simulate(&tree, &input, 1, 200_000, a.seed, engine)?.rate;
            r.check("simulated_success[1]", rate, expected, 0.01, SRC_SIM);
        }
        r.unset("shots").unset("engine").unset("tree");
    }
    r.param("n", 4);
    r.check(
        "success_from_bell_16",
        success_from_bell(4, 16.0)?,
        quantum_bound(4),
        0.0,
        SRC_QBOUND,
    );
    for (n, expected) in [(5usize, p11), (7, 0.5 + 0.5 / 8f64.sqrt())] {
        r.param("n", n).param("padded_to", smooth_ceiling(n));
        r.check(
            "padded_lower_bound",
            padded_lower_bound(n),
            expected,
            1e-9,
            SRC_PAD,
        );
    }
    r.unset("padded_to").unset("n");
    Ok(r)
}
