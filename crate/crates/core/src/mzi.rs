//! Mach-Zehnder path-spin interferometer.
//!
//! A spin-up particle meets BS1 (amplitudes `a`, `b`), a spin flipper in
//! the transmitted arm and a phase shifter `δ` in the reflected arm, which
//! leaves path and spin entangled. BS2+PS2 with parameters `(θ, φ)` fix the
//! measured path observable; a Stern-Gerlach device behind each output port
//! measures spin along `spin_axis`.
//!
//! Detector naming: port `D3` is path outcome `+1` (bit 0) and `D4` is
//! `-1` (bit 1). Primed counts are spin `+1`, double-primed spin `-1`:
//! `N' N''` behind `D3`, `M' M''` behind `D4`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::sign_matrix;
use crate::error::{Error, Result};
use crate::qrac::MeasurementBases;
use crate::qubit::{joint_distribution, BlochVector, Mat2, PureState, TOL};
use crate::rng::{pick_outcome, KeyedStream};

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub theta: f64,
    pub phi: f64,
    pub spin_axis: BlochVector,
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        check_amplitudes(self.a, self.b)?;
        self.spin_axis.ensure_unit()
    }

    pub fn state(&self) -> Result<PureState> {
        entangled_state(self.a, self.b, self.delta)
    }

    pub fn setting(&self, i: usize, j: usize) -> Setting {
        Setting {
            i,
            j,
            theta: self.theta,
            phi: self.phi,
            spin_axis: self.spin_axis,
        }
    }
}

fn check_amplitudes(a: f64, b: f64) -> Result<()> {
    if (a * a + b * b - 1.0).abs() > TOL {
        Err(Error::AmplitudeNormalization { a, b })
    } else {
        Ok(())
    }
}

/// `a |ψ1⟩|down⟩ + b e^{iδ} |ψ2⟩|up⟩` with `ψ1 = up_p`, `ψ2 = down_p`.
pub fn entangled_state(a: f64, b: f64, delta: f64) -> Result<PureState> {
    check_amplitudes(a, b)?;
    let zero = Complex64::new(0.0, 0.0);
    // exact sign at δ = π so the canonical singlet has no 1e-16 imaginary part
    let phase = if delta == std::f64::consts::PI {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, delta)
    };
    PureState::new(vec![zero, Complex64::new(a, 0.0), phase * b, zero])
}

/// Bloch direction of the path observable selected by BS2+PS2.
pub fn path_direction(theta: f64, phi: f64) -> BlochVector {
    let s = (2.0 * theta).sin();
    BlochVector::new(s * phi.cos(), s * phi.sin(), -(2.0 * theta).cos())
}

/// `(θ, φ)` whose path observable points along `dir`.
pub fn path_angles(dir: &BlochVector) -> (f64, f64) {
    let theta = 0.5 * (-dir.z).clamp(-1.0, 1.0).acos();
    let phi = dir.y.atan2(dir.x);
    (theta, phi)
}

/// `P(ψ3) - P(ψ4) = sin2θ cosφ σx + sin2θ sinφ σy - cos2θ σz`.
pub fn path_observable(theta: f64, phi: f64) -> Mat2 {
    path_direction(theta, phi).dot_sigma()
}

/// Output ports `ψ3 = sinθ ψ1 + e^{iφ} cosθ ψ2` and
/// `ψ4 = cosθ ψ1 - e^{iφ} sinθ ψ2` in the `(ψ1, ψ2)` basis.
pub fn output_ports(theta: f64, phi: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let e = Complex64::from_polar(1.0, phi);
    let (s, c) = theta.sin_cos();
    (
        [Complex64::new(s, 0.0), e * c],
        [Complex64::new(c, 0.0), -e * s],
    )
}

/// One joint path/spin measurement configuration, labelled `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub phi: f64,
    pub spin_axis: BlochVector,
}

impl Setting {
    pub fn from_directions(i: usize, j: usize, path: &BlochVector, spin: &BlochVector) -> Self {
        let (theta, phi) = path_angles(path);
        Setting {
            i,
            j,
            theta,
            phi,
            spin_axis: *spin,
        }
    }

    pub fn path_direction(&self) -> BlochVector {
        path_direction(self.theta, self.phi)
    }

    /// Born probabilities of `(N', N'', M', M'')`.
    pub fn born_probabilities(&self, state: &PureState) -> Result<[f64; 4]> {
        self.spin_axis.ensure_unit()?;
        let mut p = joint_distribution(state, &self.path_direction(), &self.spin_axis)?;
        p.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(p)
    }
}

/// Tallies for one setting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCounts {
    /// `N'`: D3, spin +.
    pub n_plus: u64,
    /// `N''`: D3, spin -.
    pub n_minus: u64,
    /// `M'`: D4, spin +.
    pub m_plus: u64,
    /// `M''`: D4, spin -.
    pub m_minus: u64,
    pub shots: u64,
}

impl DetectionCounts {
    pub fn from_tallies(t: [u64; 4]) -> Self {
        DetectionCounts {
            n_plus: t[0],
            n_minus: t[1],
            m_plus: t[2],
            m_minus: t[3],
            shots: t.iter().sum(),
        }
    }

    pub fn tallies(&self) -> [u64; 4] {
        [self.n_plus, self.n_minus, self.m_plus, self.m_minus]
    }

    /// `N = N' + N''`, the D3 count.
    pub fn n(&self) -> u64 {
        self.n_plus + self.n_minus
    }

    /// `M = M' + M''`, the D4 count.
    pub fn m(&self) -> u64 {
        self.m_plus + self.m_minus
    }

    pub fn frequencies(&self) -> Result<[f64; 4]> {
        if self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        let s = self.shots as f64;
        Ok(self.tallies().map(|c| c as f64 / s))
    }

    fn add(self, o: DetectionCounts) -> DetectionCounts {
        DetectionCounts {
            n_plus: self.n_plus + o.n_plus,
            n_minus: self.n_minus + o.n_minus,
            m_plus: self.m_plus + o.m_plus,
            m_minus: self.m_minus + o.m_minus,
            shots: self.shots + o.shots,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub setting: (usize, usize),
    pub path: u8,
    pub spin: u8,
    pub shot_index: u64,
}

/// Born sampler with draws keyed by `(seed, setting index, shot index)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    settings: Vec<Setting>,
    probs: Vec<[f64; 4]>,
    seed: u64,
}

impl Sampler {
    pub fn new(state: &PureState, settings: &[Setting], seed: u64) -> Result<Self> {
        let probs = settings
            .iter()
            .map(|s| s.born_probabilities(state))
            .collect::<Result<_>>()?;
        Ok(Sampler {
            settings: settings.to_vec(),
            probs,
            seed,
        })
    }

    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn probabilities(&self) -> &[[f64; 4]] {
        &self.probs
    }

    fn tally_range(&self, index: usize, start: u64, end: u64) -> DetectionCounts {
        let mut stream = KeyedStream::at(self.seed, index as u64, start);
        let mut t = [0u64; 4];
        for _ in start..end {
            t[pick_outcome(&self.probs[index], stream.next_uniform())] += 1;
        }
        DetectionCounts::from_tallies(t)
    }

    /// Counts for every setting, merged across shot chunks in parallel.
    pub fn counts(&self, shots: u64) -> Vec<DetectionCounts> {
        (0..self.settings.len())
            .map(|index| {
                let chunks = shots.div_ceil(CHUNK);
                (0..chunks)
                    .into_par_iter()
                    .map(|c| self.tally_range(index, c * CHUNK, ((c + 1) * CHUNK).min(shots)))
                    .reduce(DetectionCounts::default, DetectionCounts::add)
            })
            .collect()
    }

    /// Shot-ordered events, setting by setting.
    pub fn events(&self, shots: u64) -> impl Iterator<Item = EventRecord> + '_ {
        self.settings
            .iter()
            .enumerate()
            .flat_map(move |(index, s)| {
                let mut stream = KeyedStream::at(self.seed, index as u64, 0);
                (0..shots).map(move |shot_index| {
                    let k = pick_outcome(&self.probs[index], stream.next_uniform());
                    EventRecord {
                        setting: (s.i, s.j),
                        path: (k >> 1) as u8,
                        spin: (k & 1) as u8,
                        shot_index,
                    }
                })
            })
    }
}

/// Counts per setting together with the full event log.
pub fn sample_events(
    state: &PureState,
    settings: &[Setting],
    shots: u64,
    seed: u64,
) -> Result<(Vec<DetectionCounts>, Vec<EventRecord>)> {
    let sampler = Sampler::new(state, settings, seed)?;
    Ok((sampler.counts(shots), sampler.events(shots).collect()))
}

/// `[count(+,+) - count(+,-) - count(-,+) + count(-,-)] / shots`.
pub fn correlator_from_counts(c: &DetectionCounts) -> Result<f64> {
    let [np, nm, mp, mm] = c.frequencies()?;
    Ok(np - nm - mp + mm)
}

/// `(N - M)[(N' - N'') + (M' - M'')]` on counts normalized by total shots.
///
/// This is a product of the two marginal asymmetries; it is not the joint
/// correlator in general and vanishes on the maximally entangled state.
pub fn correlator_product_form(c: &DetectionCounts) -> Result<f64> {
    let [np, nm, mp, mm] = c.frequencies()?;
    Ok(((np + nm) - (mp + mm)) * ((np - nm) + (mp - mm)))
}

/// How Alice's path outcome maps to her encoding outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AliceReadout {
    /// BS2+PS2 are tuned to `-Â_i`, undoing the path-spin anti-correlation
    /// (the same statistics as relabeling Alice's outcome).
    #[default]
    Steered,
    /// BS2+PS2 are tuned to `Â_i`; counts are the raw detector correlations.
    Direct,
}

/// Settings `(i, j)` in row-major order for the given bases.
pub fn protocol_settings(bases: &MeasurementBases, readout: AliceReadout) -> Result<Vec<Setting>> {
    bases.validate()?;
    let mut out = Vec::with_capacity(bases.alice.len() * bases.n());
    for (i, a) in bases.alice.iter().enumerate() {
        let path = match readout {
            AliceReadout::Steered => -*a,
            AliceReadout::Direct => *a,
        };
        for (j, b) in bases.bob.iter().enumerate() {
            out.push(Setting::from_directions(i + 1, j + 1, &path, b));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolEstimate {
    pub bell: f64,
    pub success: f64,
    /// Joint-frequency correlators, row-major in `(i, j)`.
    pub correlators: Vec<f64>,
    /// The product-form estimator on the same counts.
    pub correlators_product_form: Vec<f64>,
    pub settings: Vec<Setting>,
    pub counts: Vec<DetectionCounts>,
}

/// Samples every `(i, j)` setting and forms `Ĉ = Σ s_ij ĉ_ij` and
/// `P̂ = ½ (1 + Ĉ / (n 2^(n-1)))`.
pub fn estimate_protocol(
    state: &PureState,
    bases: &MeasurementBases,
    readout: AliceReadout,
    shots: u64,
    seed: u64,
) -> Result<ProtocolEstimate> {
    let settings = protocol_settings(bases, readout)?;
    let counts = Sampler::new(state, &settings, seed)?.counts(shots);
    let signs = sign_matrix(bases.n())?;
    let correlators = counts
        .iter()
        .map(correlator_from_counts)
        .collect::<Result<Vec<_>>>()?;
    let correlators_product_form = counts
        .iter()
        .map(correlator_product_form)
        .collect::<Result<Vec<_>>>()?;
    let bell: f64 = settings
        .iter()
        .zip(&correlators)
        .map(|(s, c)| f64::from(signs.get(s.i - 1, s.j - 1)) * c)
        .sum();
    let success = 0.5 * (1.0 + bell / crate::bell::algebraic_max(bases.n()));
    Ok(ProtocolEstimate {
        bell,
        success,
        correlators,
        correlators_product_form,
        settings,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{pauli_x, pauli_y, pauli_z};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn canonical_point_is_singlet() {
        let s = entangled_state(FRAC_1_SQRT_2, FRAC_1_SQRT_2, PI).unwrap();
        assert_eq!(s.amplitudes(), PureState::path_spin_singlet().amplitudes());
        assert_eq!(s.amplitudes()[1], c(FRAC_1_SQRT_2));
        assert_eq!(s.amplitudes()[2], c(-FRAC_1_SQRT_2));
    }

    #[test]
    fn single_branch_is_product() {
        let s = entangled_state(1.0, 0.0, 1.3).unwrap();
        assert_eq!(s.amplitudes()[1], c(1.0));
        assert_eq!(s.concurrence().unwrap(), 0.0);
        assert!(entangled_state(0.9, 0.9, 0.0).is_err());
    }

    #[test]
    fn path_observable_special_cases() {
        let theta: f64 = 0.3;
        let expect =
            pauli_x().scale(c((2.0 * theta).sin())) - pauli_z().scale(c((2.0 * theta).cos()));
        assert!(path_observable(theta, 0.0).max_abs_diff(&expect) < TOL);
        assert!(path_observable(0.0, 1.7).max_abs_diff(&pauli_z().scale(c(-1.0))) < TOL);
        assert!(path_observable(FRAC_PI_4, FRAC_PI_2).max_abs_diff(&pauli_y()) < TOL);
    }

    #[test]
    fn angles_round_trip() {
        for dir in [
            BlochVector::Z,
            -BlochVector::Z,
            BlochVector::X,
            BlochVector::normalized(-1.0, 0.3, 0.5).unwrap(),
        ] {
            let (t, p) = path_angles(&dir);
            let back = path_direction(t, p);
            assert!((back.dot(&dir) - 1.0).abs() < 1e-12, "{dir:?}");
        }
    }

    #[test]
    fn aligned_z_never_fires_forbidden_ports() {
        let s = PureState::path_spin_singlet();
        let setting = Setting::from_directions(1, 1, &BlochVector::Z, &BlochVector::Z);
        let counts = Sampler::new(&s, &[setting], 9).unwrap().counts(50_000);
        assert_eq!(counts[0].n_plus, 0);
        assert_eq!(counts[0].m_minus, 0);
        assert_eq!(correlator_from_counts(&counts[0]).unwrap(), -1.0);
    }

    #[test]
    fn zero_shots() {
        let s = PureState::path_spin_singlet();
        let setting = Setting::from_directions(1, 1, &BlochVector::Z, &BlochVector::Z);
        let (counts, events) = sample_events(&s, &[setting], 0, 1).unwrap();
        assert_eq!(counts[0], DetectionCounts::default());
        assert!(events.is_empty());
        assert_eq!(correlator_from_counts(&counts[0]), Err(Error::ZeroShots));
        assert_eq!(correlator_product_form(&counts[0]), Err(Error::ZeroShots));
    }

    #[test]
    fn estimator_examples() {
        let all_pm = DetectionCounts::from_tallies([0, 10, 0, 0]);
        assert_eq!(correlator_from_counts(&all_pm).unwrap(), -1.0);
        assert_eq!(correlator_product_form(&all_pm).unwrap(), -1.0);
        let uniform = DetectionCounts::from_tallies([250; 4]);
        assert_eq!(correlator_from_counts(&uniform).unwrap(), 0.0);
        assert_eq!(correlator_product_form(&uniform).unwrap(), 0.0);
    }

    #[test]
    fn events_agree_with_counts() {
        let s = PureState::path_spin_singlet();
        let settings = protocol_settings(
            &crate::qrac::default_bases(2).unwrap(),
            AliceReadout::Steered,
        )
        .unwrap();
        let (counts, events) = sample_events(&s, &settings, 70_000, 5).unwrap();
        for (index, st) in settings.iter().enumerate() {
            let mut t = [0u64; 4];
            for e in events.iter().filter(|e| e.setting == (st.i, st.j)) {
                t[usize::from(2 * e.path + e.spin)] += 1;
            }
            assert_eq!(DetectionCounts::from_tallies(t), counts[index]);
        }
    }
}
