//! Weak values, their first-order pointer-shift prediction, and ensembles of
//! randomly disturbed pre/post-selections.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hybrid::{
    centroid2d, interact, photon_postselection, photon_preselection, postselect, preselect,
    rest_pointer, Density2D, InteractionSpec, PointerJointState,
};
use crate::pointer::{moment, PointerWavefunction, UniformGrid1D};
use crate::qstate::{apply, inner, BasisLabel, DiscreteKet, DiscreteOperator, Internal, Path};

/// `⟨post|A|pre⟩ / ⟨post|pre⟩`
pub fn weak_value(pre: &DiscreteKet, post: &DiscreteKet, op: &DiscreteOperator) -> Result<C64> {
    let den = inner(post, pre);
    let scale = (pre.norm2() * post.norm2()).sqrt();
    if !(den.norm() > 1e-14 * scale) {
        return Err(Error::UndefinedWeakValue);
    }
    Ok(inner(post, &apply(op, pre)) / den)
}

/// First-order centroid shift `δ·Re(A_w)` for a pointer displaced by `δ`
/// times the measured operator.
pub fn predict_pointer_shift(weak_value: C64, shift: f64) -> f64 {
    shift * weak_value.re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Operator paired with the pointer axis it drives in the photon setup, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedOperator {
    pub name: &'static str,
    pub op: DiscreteOperator,
    pub axis: Option<Axis>,
}

/// Path projectors, polarization in each arm, and the identity. The
/// horizontal pointer is driven by `σΠ_I`, the vertical one by `Π_II`.
pub fn photon_operators() -> Vec<NamedOperator> {
    let pi = DiscreteOperator::path_projector(Path::I);
    let pii = DiscreteOperator::path_projector(Path::II);
    let sigma = DiscreteOperator::sigma();
    vec![
        NamedOperator {
            name: "Pi_I",
            op: pi,
            axis: None,
        },
        NamedOperator {
            name: "Pi_II",
            op: pii,
            axis: Some(Axis::Y),
        },
        NamedOperator {
            name: "sigma_Pi_I",
            op: sigma.compose(&pi),
            axis: Some(Axis::X),
        },
        NamedOperator {
            name: "sigma_Pi_II",
            op: sigma.compose(&pii),
            axis: None,
        },
        NamedOperator {
            name: "identity",
            op: DiscreteOperator::identity(),
            axis: None,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueReport {
    pub operator: String,
    pub weak_value: C64,
    pub predicted_shift: f64,
    /// Centroid from the full pointer simulation, for operators that drive a pointer.
    pub simulated_shift: Option<f64>,
    pub discrepancy: Option<f64>,
}

/// Weak values of [`photon_operators`] for the photon pre/post-selection,
/// each compared with the simulated centroid when a pointer measures it.
pub fn photon_weak_value_reports(spec: &InteractionSpec) -> Result<Vec<WeakValueReport>> {
    let pre = photon_preselection();
    let post = photon_postselection();
    let j = crate::hybrid::photon_joint_state(spec)?;
    let (cx, cy) = centroid2d(&j)?;
    photon_operators()
        .into_iter()
        .map(|named| {
            let aw = weak_value(&pre, &post, &named.op)?;
            let (shift, simulated) = match named.axis {
                Some(Axis::X) => (spec.dx, Some(cx)),
                Some(Axis::Y) => (spec.dy, Some(cy)),
                None => (0.0, None),
            };
            let predicted = predict_pointer_shift(aw, shift);
            Ok(WeakValueReport {
                operator: named.name.to_string(),
                weak_value: aw,
                predicted_shift: predicted,
                simulated_shift: simulated,
                discrepancy: simulated.map(|s| (predicted - s).abs()),
            })
        })
        .collect()
}

/// Relative centroid residuals `|⟨x⟩/δx − 1|`, `|⟨y⟩/δy − 1|` of the photon
/// simulation against the weak-value prediction, for `δ = ratio·W`.
pub fn weak_shift_residuals(ratios: &[f64], width: f64) -> Result<Vec<(f64, f64, f64)>> {
    ratios
        .iter()
        .map(|&r| {
            let spec = InteractionSpec::symmetric(r, width)?;
            let (cx, cy) = centroid2d(&crate::hybrid::photon_joint_state(&spec)?)?;
            Ok((r, (cx / spec.dx - 1.0).abs(), (cy / spec.dy - 1.0).abs()))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(
            "log-log fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Random phase on the arm-II component of the pre-selection.
    PhaseNoisePre,
    /// Random phase on the `|I⟩|V⟩` component of the post-selection.
    PhaseNoisePost,
    /// Random real factor on the `|I⟩|V⟩` component of the post-selection.
    AmplitudeNoise,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::PhaseNoisePre => "phase-noise-pre",
            NoiseKind::PhaseNoisePost => "phase-noise-post",
            NoiseKind::AmplitudeNoise => "amplitude-noise",
        }
    }
}

/// Phase kinds draw `θ` uniformly from `[−s/2, s/2)`, so `s = 2π` covers the
/// whole circle. Amplitude noise multiplies by `1 + s·ξ`, `ξ` uniform on
/// `[−1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceModel {
    pub kind: NoiseKind,
    pub strength: f64,
    pub samples: usize,
    pub seed: u64,
}

impl DisturbanceModel {
    pub fn new(kind: NoiseKind, strength: f64, samples: usize, seed: u64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise strength {strength}"
            )));
        }
        if samples == 0 {
            return Err(Error::InvalidParameter(
                "at least one sample required".into(),
            ));
        }
        Ok(Self {
            kind,
            strength,
            samples,
            seed,
        })
    }

    /// Generator for sample `index`: one ChaCha stream per sample.
    fn rng_for(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Perturbed `(pre, post)` pair for sample `index`.
    pub fn perturb(
        &self,
        index: usize,
        pre: &DiscreteKet,
        post: &DiscreteKet,
    ) -> (DiscreteKet, DiscreteKet) {
        let u: f64 = self.rng_for(index).random();
        let s = self.strength;
        let iv = BasisLabel::new(Path::I, Internal::V);
        let iih = BasisLabel::new(Path::II, Internal::H);
        match self.kind {
            NoiseKind::PhaseNoisePre => {
                let f = C64::from_polar(1.0, s * (u - 0.5));
                (rescale_component(pre, iih, f), *post)
            }
            NoiseKind::PhaseNoisePost => {
                let f = C64::from_polar(1.0, s * (u - 0.5));
                (*pre, rescale_component(post, iv, f))
            }
            NoiseKind::AmplitudeNoise => {
                let f = C64::from(1.0 + s * (2.0 * u - 1.0));
                (*pre, rescale_component(post, iv, f))
            }
        }
    }
}

/// Multiplies the component of `ket` along `label` by `factor`.
fn rescale_component(ket: &DiscreteKet, label: BasisLabel, factor: C64) -> DiscreteKet {
    let delta = ket.amplitude(label) * (factor - C64::from(1.0));
    ket.add(&DiscreteKet::basis(label).scale(delta))
}

/// Mixed two-pointer state `ρ = Σ M_ab |t_a⟩⟨t_b|` over fixed product terms
/// `t = p1⊗p2`, with `Tr ρ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPointerState {
    pub terms: Vec<(PointerWavefunction, PointerWavefunction)>,
    pub coherence: Vec<Vec<C64>>,
}

impl MixedPointerState {
    fn gram(&self) -> Result<Vec<Vec<C64>>> {
        self.terms
            .iter()
            .map(|(a1, a2)| {
                self.terms
                    .iter()
                    .map(|(b1, b2)| Ok(moment(a1, b1, 0)? * moment(a2, b2, 0)?))
                    .collect()
            })
            .collect()
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> Result<f64> {
        let g = self.gram()?;
        let k = self.terms.len();
        let mg: Vec<Vec<C64>> = (0..k)
            .map(|a| {
                (0..k)
                    .map(|c| (0..k).map(|b| self.coherence[a][b] * g[b][c]).sum())
                    .collect()
            })
            .collect();
        let tr: C64 = (0..k)
            .map(|a| (0..k).map(|c| mg[a][c] * mg[c][a]).sum::<C64>())
            .sum();
        Ok(tr.re)
    }

    pub fn centroid(&self) -> Result<(f64, f64)> {
        let (mut x, mut y) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (a, (a1, a2)) in self.terms.iter().enumerate() {
            for (b, (b1, b2)) in self.terms.iter().enumerate() {
                // Tr(x |t_a⟩⟨t_b|) = ⟨t_b|x|t_a⟩
                let m = self.coherence[a][b];
                x += m * moment(b1, a1, 1)? * moment(b2, a2, 0)?;
                y += m * moment(b1, a1, 0)? * moment(b2, a2, 1)?;
            }
        }
        Ok((x.re, y.re))
    }

    /// Diagonal `⟨x,y|ρ|x,y⟩` normalized to unit integral on the grid.
    pub fn density(&self, gx: &UniformGrid1D, gy: &UniformGrid1D) -> Result<Density2D> {
        let vals: Vec<(Vec<C64>, Vec<C64>)> = self
            .terms
            .iter()
            .map(|(p1, p2)| Ok((p1.values_on(gx)?, p2.values_on(gy)?)))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; gx.len() * gy.len()];
        for (a, (ax, ay)) in vals.iter().enumerate() {
            for (b, (bx, by)) in vals.iter().enumerate() {
                let m = self.coherence[a][b];
                if m == C64::new(0.0, 0.0) {
                    continue;
                }
                for iy in 0..gy.len() {
                    let cy = m * ay[iy] * by[iy].conj();
                    let row = &mut out[iy * gx.len()..(iy + 1) * gx.len()];
                    for (ix, o) in row.iter_mut().enumerate() {
                        *o += (cy * ax[ix] * bx[ix].conj()).re;
                    }
                }
            }
        }
        let mut d = Density2D::new(*gx, *gy, out)?;
        let total = d.integral();
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        d.values.iter_mut().for_each(|v| *v /= total);
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Post-selected pointer state of the whole ensemble; each sample enters
    /// with its post-selection probability.
    pub mixed: MixedPointerState,
    /// Unweighted mean of the per-sample centroids.
    pub mean_centroid: (f64, f64),
    /// Standard error of that mean.
    pub centroid_stderr: (f64, f64),
    pub purity: f64,
    pub samples: usize,
    pub null_samples: usize,
}

/// Monte Carlo over disturbed photon pre/post-selections. Samples run in
/// parallel on independent streams and are reduced in index order, so a
/// fixed seed reproduces the result bit for bit.
pub fn disturbance_ensemble(
    model: &DisturbanceModel,
    spec: &InteractionSpec,
) -> Result<EnsembleResult> {
    let rest = rest_pointer(spec.width)?;
    let pre = photon_preselection();
    let post = photon_postselection();

    let outcomes: Vec<PointerJointState> = (0..model.samples)
        .into_par_iter()
        .map(|i| {
            let (pre_i, post_i) = model.perturb(i, &pre, &post);
            let hybrid = interact(&preselect(&pre_i, &rest, &rest), spec)?;
            // keep the raw success amplitude: the post state is used as drawn
            let scale = post_i.norm2().sqrt();
            let mut j = postselect(&hybrid, &post_i)?;
            j.terms.iter_mut().for_each(|t| t.coeff *= scale);
            Ok(j)
        })
        .collect::<Result<_>>()?;

    let mut terms: Vec<(PointerWavefunction, PointerWavefunction)> = Vec::new();
    let mut coeff_rows: Vec<Vec<(usize, C64)>> = Vec::with_capacity(outcomes.len());
    let mut centroids = Vec::with_capacity(outcomes.len());
    let mut null_samples = 0;
    for j in &outcomes {
        if j.is_null() {
            null_samples += 1;
            continue;
        }
        let mut row = Vec::with_capacity(j.terms.len());
        for t in &j.terms {
            let idx = match terms.iter().position(|(a, b)| *a == t.p1 && *b == t.p2) {
                Some(i) => i,
                None => {
                    terms.push((t.p1.clone(), t.p2.clone()));
                    terms.len() - 1
                }
            };
            row.push((idx, t.coeff));
        }
        coeff_rows.push(row);
        centroids.push(centroid2d(j)?);
    }
    if coeff_rows.is_empty() {
        return Err(Error::NullPostSelection);
    }

    let k = terms.len();
    let mut coherence = vec![vec![C64::new(0.0, 0.0); k]; k];
    for row in &coeff_rows {
        for &(a, ca) in row {
            for &(b, cb) in row {
                coherence[a][b] += ca * cb.conj();
            }
        }
    }
    let mut mixed = MixedPointerState { terms, coherence };
    let g = mixed.gram()?;
    let trace: f64 = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| mixed.coherence[a][b] * g[b][a])
                .sum::<C64>()
                .re
        })
        .sum();
    mixed
        .coherence
        .iter_mut()
        .flatten()
        .for_each(|m| *m /= trace);

    let n = centroids.len() as f64;
    let mean = |f: fn(&(f64, f64)) -> f64| centroids.iter().map(f).sum::<f64>() / n;
    let mx = mean(|c| c.0);
    let my = mean(|c| c.1);
    let stderr = |f: fn(&(f64, f64)) -> f64, m: f64| {
        if centroids.len() < 2 {
            return 0.0;
        }
        let var = centroids.iter().map(|c| (f(c) - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    let sx = stderr(|c| c.0, mx);
    let sy = stderr(|c| c.1, my);
    let purity = mixed.purity()?;

    Ok(EnsembleResult {
        mixed,
        mean_centroid: (mx, my),
        centroid_stderr: (sx, sy),
        purity,
        samples: model.samples,
        null_samples,
    })
}

/// Mean x-centroid and its standard error at each noise strength.
pub fn attenuation_curve(
    kind: NoiseKind,
    strengths: &[f64],
    samples: usize,
    seed: u64,
    spec: &InteractionSpec,
) -> Result<Vec<(f64, EnsembleResult)>> {
    strengths
        .iter()
        .map(|&s| {
            let model = DisturbanceModel::new(kind, s, samples, seed)?;
            Ok((s, disturbance_ensemble(&model, spec)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::Family;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn op(name: &str) -> DiscreteOperator {
        photon_operators()
            .into_iter()
            .find(|o| o.name == name)
            .unwrap()
            .op
    }

    #[test]
    fn photon_weak_values() {
        let (pre, post) = (photon_preselection(), photon_postselection());
        let wv = |n| weak_value(&pre, &post, &op(n)).unwrap();
        assert!(wv("Pi_I").norm() < 1e-15);
        assert!((wv("Pi_II") - C64::from(1.0)).norm() < 1e-15);
        assert!((wv("sigma_Pi_I") - C64::from(1.0)).norm() < 1e-15);
        assert!(wv("sigma_Pi_II").norm() < 1e-15);
        assert!((wv("identity") - C64::from(1.0)).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_pair_has_no_weak_value() {
        let pre = photon_preselection();
        let post = DiscreteKet::from_terms(&[
            (
                BasisLabel::new(Path::I, Internal::H),
                C64::from(FRAC_1_SQRT_2),
            ),
            (
                BasisLabel::new(Path::II, Internal::H),
                C64::new(0.0, -FRAC_1_SQRT_2),
            ),
        ])
        .unwrap();
        assert_eq!(
            weak_value(&pre, &post, &DiscreteOperator::identity()),
            Err(Error::UndefinedWeakValue)
        );
        assert!(weak_value(&pre, &DiscreteKet::zero(Family::Linear), &op("Pi_I")).is_err());
    }

    #[test]
    fn shift_prediction() {
        assert_eq!(predict_pointer_shift(C64::new(1.0, 3.0), 1e-3), 1e-3);
        assert_eq!(predict_pointer_shift(C64::new(0.0, 0.0), 0.5), 0.0);
    }

    #[test]
    fn reports_match_simulation() {
        let spec = InteractionSpec::symmetric(1e-3, 1.0).unwrap();
        let reports = photon_weak_value_reports(&spec).unwrap();
        for r in &reports {
            if let (Some(sim), Some(d)) = (r.simulated_shift, r.discrepancy) {
                assert!(d <= 1e-4 * spec.dx, "{}: {sim}", r.operator);
            }
        }
        let y = reports.iter().find(|r| r.operator == "Pi_II").unwrap();
        assert!((y.predicted_shift - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [0.1, 0.01, 0.001];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(log_log_slope(&xs, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_strength_matches_noiseless() {
        let spec = InteractionSpec::symmetric(1e-3, 1.0).unwrap();
        let model = DisturbanceModel::new(NoiseKind::PhaseNoisePost, 0.0, 16, 3).unwrap();
        let e = disturbance_ensemble(&model, &spec).unwrap();
        let exact = centroid2d(&crate::hybrid::photon_joint_state(&spec).unwrap()).unwrap();
        assert!((e.mean_centroid.0 - exact.0).abs() < 1e-18);
        assert!((e.mean_centroid.1 - exact.1).abs() < 1e-18);
        assert!((e.purity - 1.0).abs() < 1e-12);
        let mc = e.mixed.centroid().unwrap();
        assert!((mc.0 - exact.0).abs() < 1e-15);
    }

    #[test]
    fn full_phase_noise_washes_out_x_shift() {
        let spec = InteractionSpec::symmetric(1e-3, 1.0).unwrap();
        let model = DisturbanceModel::new(NoiseKind::PhaseNoisePost, 2.0 * PI, 10_000, 11).unwrap();
        let e = disturbance_ensemble(&model, &spec).unwrap();
        assert!(e.mean_centroid.0.abs() < 3.0 * e.centroid_stderr.0);
        // y readout is insensitive to this phase
        assert!((e.mean_centroid.1 - spec.dy).abs() < 1e-4 * spec.dy);
        assert!(e.purity < 1.0 - 1e-9);
    }

    #[test]
    fn ensemble_is_reproducible() {
        let spec = InteractionSpec::symmetric(0.1, 1.0).unwrap();
        for kind in [
            NoiseKind::PhaseNoisePre,
            NoiseKind::PhaseNoisePost,
            NoiseKind::AmplitudeNoise,
        ] {
            let model = DisturbanceModel::new(kind, 1.0, 200, 5).unwrap();
            let a = disturbance_ensemble(&model, &spec).unwrap();
            let b = disturbance_ensemble(&model, &spec).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mixed_density_is_normalized() {
        let spec = InteractionSpec::symmetric(0.1, 1.0).unwrap();
        let model = DisturbanceModel::new(NoiseKind::PhaseNoisePre, 1.0, 50, 1).unwrap();
        let e = disturbance_ensemble(&model, &spec).unwrap();
        let g = UniformGrid1D::centered(0.0, 8.1, 256).unwrap();
        let d = e.mixed.density(&g, &g).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_validation() {
        assert!(DisturbanceModel::new(NoiseKind::AmplitudeNoise, -1.0, 10, 0).is_err());
        assert!(DisturbanceModel::new(NoiseKind::AmplitudeNoise, 1.0, 0, 0).is_err());
    }
}
