//! Two-path neutron interferometer with a spin analyzer in front of D1.
//!
//! The internal labels `±` are the σ_x eigenstates. D1 sees the path
//! combination `(|I⟩ + e^{iχ}|II⟩)/√2` and only spin `−`; the `+` component
//! of that port is removed by the analyzer and tracked as "rejected". D2 sees
//! `(|I⟩ − e^{iχ}|II⟩)/√2` with no spin selection. Absorbers damp amplitudes
//! and are never renormalized, so the four channels always close to one.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::qstate::{inner, BasisLabel, DiscreteKet, Family, Internal, Path};

const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Small spin rotation confined to one path.
///
/// In path I it maps `|+⟩ → a|+⟩ + b|−⟩`; in path II it maps
/// `|−⟩ → a|−⟩ + b|+⟩` (the `c, d` pair). The orthogonal input is sent to the
/// SU(2) completion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinRotation {
    path: Path,
    a: C64,
    b: C64,
}

impl SpinRotation {
    pub fn new(path: Path, a: C64, b: C64) -> Result<Self> {
        let n = a.norm_sqr() + b.norm_sqr();
        if !((n - 1.0).abs() <= UNITARITY_TOLERANCE) {
            return Err(Error::NonUnitaryRotation(n));
        }
        Ok(Self { path, a, b })
    }

    /// Rotation by `alpha` from a weak magnetic field: `a = cos(α/2)`,
    /// `b = i·sin(α/2)`.
    pub fn field(path: Path, alpha: f64) -> Self {
        let half = 0.5 * alpha;
        Self {
            path,
            a: C64::from(half.cos()),
            b: C64::new(0.0, half.sin()),
        }
    }

    pub fn path(&self) -> Path {
        self.path
    }

    /// `(a, b)` for path I, `(c, d)` for path II.
    pub fn coefficients(&self) -> (C64, C64) {
        (self.a, self.b)
    }

    /// 2x2 map in the `(+, −)` coordinates.
    fn matrix(&self) -> [[C64; 2]; 2] {
        let (a, b) = (self.a, self.b);
        match self.path {
            // columns: image of |+⟩ = (a, b), image of |−⟩ = (−b̄, ā)
            Path::I => [[a, -b.conj()], [b, a.conj()]],
            // columns: image of |+⟩ = (ā, −b̄), image of |−⟩ = (b, a)
            Path::II => [[a.conj(), b], [-b.conj(), a]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    path: Path,
    transmissivity: f64,
}

impl Absorber {
    pub fn new(path: Path, transmissivity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::InvalidTransmissivity(transmissivity));
        }
        Ok(Self {
            path,
            transmissivity,
        })
    }

    pub fn path(&self) -> Path {
        self.path
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }
}

/// One run configuration. The rotation, if any, acts before the absorber.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeutronScenario {
    pub chi: f64,
    pub rotation: Option<SpinRotation>,
    pub absorber: Option<Absorber>,
}

impl NeutronScenario {
    pub fn baseline() -> Self {
        Self::default()
    }

    pub fn with_rotation(rotation: SpinRotation) -> Self {
        Self {
            rotation: Some(rotation),
            ..Self::default()
        }
    }

    pub fn with_absorber(absorber: Absorber) -> Self {
        Self {
            absorber: Some(absorber),
            ..Self::default()
        }
    }

    pub fn at_chi(self, chi: f64) -> Self {
        Self { chi, ..self }
    }
}

fn label(path: Path, internal: Internal) -> BasisLabel {
    BasisLabel::new(path, internal)
}

/// `(|I⟩|+⟩ + |II⟩|−⟩)/√2`
pub fn preselect_neutron() -> DiscreteKet {
    DiscreteKet::from_terms(&[
        (label(Path::I, Internal::Plus), C64::from(FRAC_1_SQRT_2)),
        (label(Path::II, Internal::Minus), C64::from(FRAC_1_SQRT_2)),
    ])
    .expect("fixed circular-family ket")
}

/// Multiplies the amplitudes on the absorber's path by `√T`. The result is
/// not renormalized.
pub fn apply_absorber(state: &DiscreteKet, absorber: &Absorber) -> Result<DiscreteKet> {
    // re-validate: fields are private but keep the contract explicit
    let absorber = Absorber::new(absorber.path, absorber.transmissivity)?;
    Ok(state.scale_path(absorber.path, C64::from(absorber.transmissivity.sqrt())))
}

pub fn apply_rotation(state: &DiscreteKet, rotation: &SpinRotation) -> Result<DiscreteKet> {
    let rotation = SpinRotation::new(rotation.path, rotation.a, rotation.b)?;
    let k = state.in_family(Family::Circular);
    let m = rotation.matrix();
    let p = rotation.path;
    let plus = k.amplitude(label(p, Internal::Plus));
    let minus = k.amplitude(label(p, Internal::Minus));
    let other = p.other();
    DiscreteKet::from_terms(&[
        (label(p, Internal::Plus), m[0][0] * plus + m[0][1] * minus),
        (label(p, Internal::Minus), m[1][0] * plus + m[1][1] * minus),
        (
            label(other, Internal::Plus),
            k.amplitude(label(other, Internal::Plus)),
        ),
        (
            label(other, Internal::Minus),
            k.amplitude(label(other, Internal::Minus)),
        ),
    ])
}

/// Normalized path combination `(|I⟩ + sign·e^{iχ}|II⟩)/√2` with spin `s`.
fn port(chi: f64, sign: f64, spin: Internal) -> DiscreteKet {
    DiscreteKet::from_terms(&[
        (label(Path::I, spin), C64::from(FRAC_1_SQRT_2)),
        (
            label(Path::II, spin),
            C64::from_polar(sign * FRAC_1_SQRT_2, chi),
        ),
    ])
    .expect("single-family port")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorProbabilities {
    pub d1: f64,
    pub d2: f64,
    pub absorbed: f64,
    pub rejected: f64,
}

impl DetectorProbabilities {
    pub fn total(&self) -> f64 {
        self.d1 + self.d2 + self.absorbed + self.rejected
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.d1, self.d2, self.absorbed, self.rejected]
    }
}

/// State reaching the second beam splitter for `scenario`.
pub fn prepared_state(scenario: &NeutronScenario) -> Result<DiscreteKet> {
    let mut state = preselect_neutron();
    if let Some(r) = &scenario.rotation {
        state = apply_rotation(&state, r)?;
    }
    if let Some(a) = &scenario.absorber {
        state = apply_absorber(&state, a)?;
    }
    Ok(state)
}

pub fn detector_probabilities(scenario: &NeutronScenario) -> Result<DetectorProbabilities> {
    let state = prepared_state(scenario)?;
    let chi = scenario.chi;
    let p = |post: DiscreteKet| inner(&post, &state).norm_sqr();
    let d1 = p(port(chi, 1.0, Internal::Minus));
    let rejected = p(port(chi, 1.0, Internal::Plus));
    let d2 = p(port(chi, -1.0, Internal::Plus)) + p(port(chi, -1.0, Internal::Minus));
    Ok(DetectorProbabilities {
        d1,
        d2,
        absorbed: 1.0 - state.norm2(),
        rejected,
    })
}

/// `n` phases evenly spaced over `[0, 2π)`.
pub fn uniform_chi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub chi: f64,
    pub probabilities: DetectorProbabilities,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    /// From a least-squares fit of `A + B cos χ + C sin χ`: `√(B²+C²)/A`.
    pub fitted: f64,
    /// `(max − min)/(max + min)` over the sampled points.
    pub sampled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSweep {
    pub rows: Vec<SweepRow>,
    pub d1: Visibility,
    pub d2: Visibility,
}

/// Evaluates `template` at every phase in `chis`.
pub fn chi_sweep(template: &NeutronScenario, chis: &[f64]) -> Result<ChiSweep> {
    if chis.is_empty() {
        return Err(Error::InvalidParameter("empty chi grid".into()));
    }
    let rows = chis
        .iter()
        .map(|&chi| {
            Ok(SweepRow {
                chi,
                probabilities: detector_probabilities(&template.at_chi(chi))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let d1: Vec<f64> = rows.iter().map(|r| r.probabilities.d1).collect();
    let d2: Vec<f64> = rows.iter().map(|r| r.probabilities.d2).collect();
    Ok(ChiSweep {
        d1: visibility(chis, &d1),
        d2: visibility(chis, &d2),
        rows,
    })
}

pub fn visibility(chis: &[f64], values: &[f64]) -> Visibility {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let sampled = if hi + lo > 0.0 {
        (hi - lo) / (hi + lo)
    } else {
        0.0
    };
    let fitted = fit_first_harmonic(chis, values)
        .map(|(a, b, c)| if a > 0.0 { b.hypot(c) / a } else { 0.0 })
        .unwrap_or(sampled);
    Visibility { fitted, sampled }
}

/// Least-squares `(A, B, C)` for `A + B cos χ + C sin χ`; `None` when the
/// phases do not determine a first harmonic.
fn fit_first_harmonic(chis: &[f64], values: &[f64]) -> Option<(f64, f64, f64)> {
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&chi, &v) in chis.iter().zip(values) {
        let basis = [1.0, chi.cos(), chi.sin()];
        for i in 0..3 {
            r[i] += basis[i] * v;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-9 * (chis.len() as f64).powi(3) {
        return None;
    }
    // Cramer's rule
    let mut solution = [0.0; 3];
    for (k, s) in solution.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *s = det(&mk) / d;
    }
    Some((solution[0], solution[1], solution[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectorCounts {
    pub d1: u64,
    pub d2: u64,
    pub absorbed: u64,
    pub rejected: u64,
}

impl DetectorCounts {
    pub fn total(&self) -> u64 {
        self.d1 + self.d2 + self.absorbed + self.rejected
    }
}

/// Multinomial draw of `n` neutrons over the four channels with a generator
/// seeded from `seed`.
pub fn sample_counts(probs: &DetectorProbabilities, n: u64, seed: u64) -> Result<DetectorCounts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts_with(probs, n, &mut rng)
}

/// Multinomial draw using the caller's generator (sequential binomials).
pub fn sample_counts_with<R: Rng + ?Sized>(
    probs: &DetectorProbabilities,
    n: u64,
    rng: &mut R,
) -> Result<DetectorCounts> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be positive".into(),
        ));
    }
    let p = probs.as_array();
    if p.iter().any(|&x| !(x >= -1e-12)) || (probs.total() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "channel probabilities {p:?} do not form a distribution"
        )));
    }
    let mut counts = [0u64; 4];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == 3 {
            counts[i] = remaining;
            break;
        }
        let q = (pi.max(0.0) / mass).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(rng)
        };
        counts[i] = k;
        remaining -= k;
        mass -= pi.max(0.0);
    }
    Ok(DetectorCounts {
        d1: counts[0],
        d2: counts[1],
        absorbed: counts[2],
        rejected: counts[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(k: &DiscreteKet, path: Path, internal: Internal) -> C64 {
        k.amplitude(label(path, internal))
    }

    #[test]
    fn preselected_state() {
        let k = preselect_neutron();
        assert!((k.norm2() - 1.0).abs() < 1e-15);
        assert_eq!(amp(&k, Path::I, Internal::Minus), C64::new(0.0, 0.0));
        let orth = DiscreteKet::from_terms(&[
            (label(Path::I, Internal::Plus), C64::from(FRAC_1_SQRT_2)),
            (label(Path::II, Internal::Minus), C64::from(-FRAC_1_SQRT_2)),
        ])
        .unwrap();
        assert!(inner(&orth, &k).norm() < 1e-15);
    }

    #[test]
    fn absorber_examples() {
        let k = preselect_neutron();
        let full = apply_absorber(&k, &Absorber::new(Path::I, 1.0).unwrap()).unwrap();
        assert_eq!(full, k);
        let blocked = apply_absorber(&k, &Absorber::new(Path::II, 0.0).unwrap()).unwrap();
        assert!((blocked.norm2() - 0.5).abs() < 1e-15);
        let partial = apply_absorber(&k, &Absorber::new(Path::I, 0.79).unwrap()).unwrap();
        assert!(
            (amp(&partial, Path::I, Internal::Plus) - C64::from(0.79f64.sqrt() * FRAC_1_SQRT_2))
                .norm()
                < 1e-15
        );
        assert_eq!(
            amp(&partial, Path::II, Internal::Minus),
            amp(&k, Path::II, Internal::Minus)
        );
        assert!((partial.norm2() - 1.79 / 2.0).abs() < 1e-15);
        assert_eq!(
            Absorber::new(Path::I, 1.5),
            Err(Error::InvalidTransmissivity(1.5))
        );
        assert!(Absorber::new(Path::I, -0.1).is_err());
    }

    #[test]
    fn rotation_examples() {
        let k = preselect_neutron();
        let id = SpinRotation::new(Path::I, C64::from(1.0), C64::from(0.0)).unwrap();
        assert!(apply_rotation(&k, &id).unwrap().distance(&k) < 1e-15);

        let r = apply_rotation(&k, &SpinRotation::field(Path::I, 0.2)).unwrap();
        let want = C64::new(0.0, 0.1f64.sin() * FRAC_1_SQRT_2);
        assert!((amp(&r, Path::I, Internal::Minus) - want).norm() < 1e-15);
        assert!((r.norm2() - 1.0).abs() < 1e-15);

        let alpha = 0.37;
        let r = apply_rotation(&k, &SpinRotation::field(Path::II, alpha)).unwrap();
        let want = C64::new(0.0, (alpha / 2.0).sin() * FRAC_1_SQRT_2);
        assert!((amp(&r, Path::II, Internal::Plus) - want).norm() < 1e-15);
        assert!(
            (amp(&r, Path::II, Internal::Minus) - C64::from((alpha / 2.0).cos() * FRAC_1_SQRT_2))
                .norm()
                < 1e-15
        );

        assert!(matches!(
            SpinRotation::new(Path::I, C64::from(1.0), C64::from(0.1)),
            Err(Error::NonUnitaryRotation(_))
        ));
    }

    #[test]
    fn rotation_matrices_are_unitary() {
        let r = SpinRotation::new(Path::II, C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        for rot in [r, SpinRotation { path: Path::I, ..r }] {
            let m = rot.matrix();
            for i in 0..2 {
                for j in 0..2 {
                    let g: C64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - C64::from(want)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn baseline_probabilities() {
        for chi in uniform_chi_grid(13) {
            let p = detector_probabilities(&NeutronScenario::baseline().at_chi(chi)).unwrap();
            assert!((p.d1 - 0.25).abs() < 1e-15);
            assert!((p.d2 - 0.5).abs() < 1e-15);
            assert!((p.rejected - 0.25).abs() < 1e-15);
            assert!(p.absorbed.abs() < 1e-15);
        }
    }

    #[test]
    fn path_one_rotation_closed_form() {
        let b = C64::new(0.0, 0.1f64.sin());
        let rot = SpinRotation::field(Path::I, 0.2);
        for chi in uniform_chi_grid(17) {
            let p =
                detector_probabilities(&NeutronScenario::with_rotation(rot).at_chi(chi)).unwrap();
            let want = (1.0 + b.norm_sqr() + 2.0 * (b * C64::from_polar(1.0, chi)).re) / 4.0;
            assert!((p.d1 - want).abs() < 1e-15);
            assert!((p.total() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn absorber_probabilities() {
        for t in [0.0, 0.3, 0.79, 1.0] {
            let i = NeutronScenario::with_absorber(Absorber::new(Path::I, t).unwrap());
            let ii = NeutronScenario::with_absorber(Absorber::new(Path::II, t).unwrap());
            for chi in [0.0, 1.0, 4.0] {
                let pi = detector_probabilities(&i.at_chi(chi)).unwrap();
                let pii = detector_probabilities(&ii.at_chi(chi)).unwrap();
                assert!((pi.d1 - 0.25).abs() < 1e-15);
                assert!((pii.d1 - t / 4.0).abs() < 1e-15);
                assert!((pi.absorbed - (1.0 - t) / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sweep_visibilities() {
        let chis = uniform_chi_grid(100);
        let base = chi_sweep(&NeutronScenario::baseline(), &chis).unwrap();
        assert!(base.d1.fitted < 1e-12 && base.d2.fitted < 1e-12);
        assert_eq!(base.rows.len(), 100);

        let ii = chi_sweep(
            &NeutronScenario::with_rotation(SpinRotation::field(Path::II, 0.2)),
            &chis,
        )
        .unwrap();
        assert!(ii.d1.fitted < 1e-12);
        assert!(ii.d2.fitted > 1e-3);

        let i = chi_sweep(
            &NeutronScenario::with_rotation(SpinRotation::field(Path::I, 0.2)),
            &chis,
        )
        .unwrap();
        let s = 0.1f64.sin();
        assert!((i.d1.fitted - 2.0 * s / (1.0 + s * s)).abs() < 1e-10);
        assert!(i.d1.sampled <= i.d1.fitted + 1e-12);

        assert!(chi_sweep(&NeutronScenario::baseline(), &[]).is_err());
    }

    #[test]
    fn single_point_sweep_falls_back_to_sampled() {
        let s = chi_sweep(&NeutronScenario::baseline(), &[0.3]).unwrap();
        assert_eq!(s.d1.fitted, 0.0);
    }

    #[test]
    fn counts_examples() {
        let p = detector_probabilities(&NeutronScenario::baseline()).unwrap();
        let n = 1_000_000u64;
        let c = sample_counts(&p, n, 7).unwrap();
        assert_eq!(c.total(), n);
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        assert!((c.d1 as f64 - n as f64 / 4.0).abs() < 5.0 * sigma);
        assert_eq!(c, sample_counts(&p, n, 7).unwrap());

        let certain = DetectorProbabilities {
            d1: 1.0,
            d2: 0.0,
            absorbed: 0.0,
            rejected: 0.0,
        };
        let c = sample_counts(&certain, 1234, 1).unwrap();
        assert_eq!(c.d1, 1234);
        assert!(sample_counts(&certain, 0, 1).is_err());
    }
}
