//! Acceptance checks, shared by the `verify` subcommand and the acceptance
//! test target. Each check compares the simulator against closed forms or a
//! brute-force evaluation that does not go through the code under test.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    disturbance_ensemble, log_log_slope, photon_operators, weak_shift_residuals, weak_value,
    DisturbanceModel, NoiseKind,
};
use crate::error::Result;
use crate::hybrid::{
    arm_components, centroid2d, joint_density, max_term_overlap, photon_grids, photon_joint_state,
    photon_postselection, photon_preselection, strong_lobe_weights, InteractionSpec,
    DEFAULT_LOBE_RADIUS,
};
use crate::neutron::{
    chi_sweep, detector_probabilities, uniform_chi_grid, Absorber, NeutronScenario, SpinRotation,
};
use crate::pointer::{DEFAULT_HALF_SPAN, DEFAULT_POINTS};
use crate::qstate::{BasisLabel, DiscreteKet, DiscreteOperator, Internal, Path};

pub const DEFAULT_SEED: u64 = 2014;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Negative control: perturbs one post-selected coefficient so the
    /// coefficient-ratio check must fail.
    pub tamper: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            tamper: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    fn from_result(id: u32, name: &'static str, r: Result<(bool, String)>) -> Self {
        let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        Self {
            id,
            name,
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn label(path: Path, internal: Internal) -> BasisLabel {
    BasisLabel::new(path, internal)
}

/// Post-selected term ratios `(2, 1, −1)` up to one global factor.
pub fn coefficient_ratios(opts: &VerifyOptions) -> CriterionOutcome {
    let (r, elapsed) = timed(|| -> Result<(bool, String)> {
        let mut worst = 0.0f64;
        for ratio in [0.0, 1e-3, 0.1, 1.0, 5.0] {
            let spec = InteractionSpec::symmetric(ratio, 1.0)?;
            let mut j = photon_joint_state(&spec)?;
            if opts.tamper {
                if let Some(t) = j
                    .terms
                    .iter_mut()
                    .find(|t| t.origin.internal == Internal::Minus)
                {
                    t.coeff *= 1.0 + 1e-6;
                }
            }
            if ratio == 0.0 {
                // identical pointers merge into one term
                worst = worst.max(if j.terms.len() == 1 { 0.0 } else { 1.0 });
                continue;
            }
            let c = |l| j.term_from(l).map(|t| t.coeff).unwrap_or_default();
            let plus = c(label(Path::I, Internal::Plus));
            let minus = c(label(Path::I, Internal::Minus));
            let arm_ii = c(label(Path::II, Internal::H));
            worst = worst
                .max((arm_ii / plus - C64::from(2.0)).norm())
                .max((minus / plus + C64::from(1.0)).norm());
        }
        Ok((
            worst <= 1e-12,
            format!("max ratio error {worst:.3e} (tol 1e-12)"),
        ))
    });
    let mut out = CriterionOutcome::from_result(1, "post-selected coefficients 2:1:-1", r);
    if elapsed > Duration::from_secs(1) {
        out.passed = false;
        out.detail.push_str("; runtime exceeded 1 s");
    }
    out
}

/// First-order weak shift at `δ = 10⁻³W` and quadratic convergence of the
/// relative residual.
pub fn weak_shift(_: &VerifyOptions) -> CriterionOutcome {
    let (r, elapsed) = timed(|| -> Result<(bool, String)> {
        let spec = InteractionSpec::symmetric(1e-3, 1.0)?;
        let (cx, cy) = centroid2d(&photon_joint_state(&spec)?)?;
        let rel_x = (cx - spec.dx).abs() / spec.dx;
        let rel_y = (cy - spec.dy).abs() / spec.dy;
        let ratios = [1e-1, 1e-2, 1e-3];
        let res = weak_shift_residuals(&ratios, 1.0)?;
        let rx: Vec<f64> = res.iter().map(|r| r.1).collect();
        let ry: Vec<f64> = res.iter().map(|r| r.2).collect();
        let sx = log_log_slope(&ratios, &rx)?;
        let sy = log_log_slope(&ratios, &ry)?;
        let ok =
            rel_x <= 1e-4 && rel_y <= 1e-4 && (sx - 2.0).abs() <= 0.2 && (sy - 2.0).abs() <= 0.2;
        Ok((
            ok,
            format!(
                "relative error ({rel_x:.3e}, {rel_y:.3e}) (tol 1e-4); slopes ({sx:.4}, {sy:.4}) (2 +/- 0.2)"
            ),
        ))
    });
    let mut out = CriterionOutcome::from_result(2, "weak-regime centroid shift", r);
    if elapsed > Duration::from_secs(10) {
        out.passed = false;
        out.detail.push_str("; runtime exceeded 10 s");
    }
    out
}

/// Three disjoint lobes with weights `(2/3, 1/6, 1/6)` at `δ = 5W`.
pub fn strong_regime(_: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let spec = InteractionSpec::symmetric(5.0, 1.0)?;
        let j = photon_joint_state(&spec)?;
        let overlap = max_term_overlap(&j)?;
        let lobes = strong_lobe_weights(&j, DEFAULT_LOBE_RADIUS)?;
        let w = |l| {
            lobes
                .iter()
                .find(|x| x.origin == l)
                .map(|x| x.weight)
                .unwrap_or(f64::NAN)
        };
        let got = [
            w(label(Path::II, Internal::H)),
            w(label(Path::I, Internal::Plus)),
            w(label(Path::I, Internal::Minus)),
        ];
        let want = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        let err = got
            .iter()
            .zip(want)
            .map(|(g, w)| (g - w).abs())
            .fold(0.0f64, f64::max);
        Ok((
            overlap < 1e-6 && err <= 1e-3,
            format!(
                "weights ({:.6}, {:.6}, {:.6}), max error {err:.3e} (tol 1e-3); max overlap {overlap:.3e} (< 1e-6)",
                got[0], got[1], got[2]
            ),
        ))
    })();
    CriterionOutcome::from_result(3, "strong-regime lobe weights", r)
}

/// Brute-force maxima of `2F(x, y−δ)` and `|F(x−δ, y) − F(x+δ, y)|` for
/// `F = exp(−x²−y²)`, on a line search along the relevant axis.
fn brute_force_component_maxima(delta: f64) -> (f64, f64) {
    let n = 200_001;
    let mut arm_ii: f64 = 0.0;
    let mut arm_i: f64 = 0.0;
    for k in 0..n {
        let t = -4.0 + 8.0 * k as f64 / (n - 1) as f64;
        // arm II peaks on x = 0, arm I on y = 0
        arm_ii = arm_ii.max(2.0 * (-(t - delta) * (t - delta)).exp());
        arm_i = arm_i
            .max(((-(t - delta) * (t - delta)).exp() - (-(t + delta) * (t + delta)).exp()).abs());
    }
    (arm_ii, arm_i)
}

/// Combined density at `δ = 0.1W`: one maximum in the first quadrant and more
/// mass at `x > 0` than at `x < 0`; component maxima against brute force.
pub fn interference_picture(_: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let spec = InteractionSpec::symmetric(0.1, 1.0)?;
        let j = photon_joint_state(&spec)?;
        let (gx, gy) = photon_grids(&spec, DEFAULT_HALF_SPAN, DEFAULT_POINTS)?;
        let d = joint_density(&j, &gx, &gy)?;
        let peaks = d.count_local_maxima(1e-6);
        let (px, py, _) = d.argmax();
        let left = d.integrate_where(|x, _| x < 0.0);
        let right = d.integrate_where(|x, _| x > 0.0);

        let (a, b) = arm_components(&spec, &gx, &gy)?;
        let max_a = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_b = b.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (oracle_a, oracle_b) = brute_force_component_maxima(0.1);
        let rel_a = (max_a - oracle_a).abs() / oracle_a;
        let rel_b = (max_b - oracle_b).abs() / oracle_b;

        let ok = peaks == 1 && px > 0.0 && py > 0.0 && left < right && rel_a < 2e-3 && rel_b < 2e-3;
        Ok((
            ok,
            format!(
                "{peaks} maximum at ({px:.4}, {py:.4}); mass x<0 {left:.6} vs x>0 {right:.6}; \
                 component maxima {max_a:.4} / {max_b:.4} vs brute force {oracle_a:.4} / {oracle_b:.4} \
                 (caption quotes ~1.5 / ~0.012)"
            ),
        ))
    })();
    CriterionOutcome::from_result(4, "weak-regime interference picture", r)
}

fn random_ket(rng: &mut ChaCha8Rng) -> DiscreteKet {
    let labels = [
        label(Path::I, Internal::H),
        label(Path::I, Internal::V),
        label(Path::II, Internal::H),
        label(Path::II, Internal::V),
    ];
    let terms: Vec<(BasisLabel, C64)> = labels
        .iter()
        .map(|&l| {
            (
                l,
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            )
        })
        .collect();
    DiscreteKet::from_terms(&terms).expect("linear labels")
}

/// Photon weak values and the path sum rule.
pub fn weak_values(opts: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let (pre, post) = (photon_preselection(), photon_postselection());
        let ops = photon_operators();
        let find = |n: &str| {
            ops.iter()
                .find(|o| o.name == n)
                .map(|o| o.op)
                .unwrap_or_else(DiscreteOperator::identity)
        };
        let expected = [
            ("Pi_I", 0.0),
            ("Pi_II", 1.0),
            ("sigma_Pi_I", 1.0),
            ("sigma_Pi_II", 0.0),
        ];
        let mut worst = 0.0f64;
        let mut shown = Vec::new();
        for (name, want) in expected {
            let aw = weak_value(&pre, &post, &find(name))?;
            worst = worst.max((aw - C64::from(want)).norm());
            shown.push(format!("{name}={:.3}", aw.re));
        }
        let pi = DiscreteOperator::path_projector(Path::I);
        let pii = DiscreteOperator::path_projector(Path::II);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut sum_rule = 0.0f64;
        let mut pairs = 0;
        while pairs < 200 {
            let (a, b) = (random_ket(&mut rng), random_ket(&mut rng));
            if crate::qstate::inner(&b, &a).norm() < 1e-3 {
                continue;
            }
            let s = weak_value(&a, &b, &pi)? + weak_value(&a, &b, &pii)?;
            sum_rule = sum_rule.max((s - C64::from(1.0)).norm());
            pairs += 1;
        }
        let s0 = weak_value(&pre, &post, &pi)? + weak_value(&pre, &post, &pii)?;
        let exact = s0 == C64::from(1.0);
        Ok((
            worst <= 1e-12 && sum_rule <= 1e-12 && exact,
            format!(
                "{} (max error {worst:.3e}, tol 1e-12); sum rule max deviation {sum_rule:.3e} over {pairs} random pairs",
                shown.join(" ")
            ),
        ))
    })();
    CriterionOutcome::from_result(5, "photon weak values", r)
}

/// No probe: `P_D1 = 1/4`, `P_D2 = 1/2` at every phase.
pub fn neutron_baseline(_: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let sweep = chi_sweep(&NeutronScenario::baseline(), &uniform_chi_grid(100))?;
        let (mut e1, mut e2) = (0.0f64, 0.0f64);
        for row in &sweep.rows {
            e1 = e1.max((row.probabilities.d1 - 0.25).abs());
            e2 = e2.max((row.probabilities.d2 - 0.5).abs());
        }
        Ok((
            e1 <= 1e-12 && e2 <= 1e-12,
            format!("max |P_D1-1/4| {e1:.3e}, max |P_D2-1/2| {e2:.3e} over 100 phases (tol 1e-12)"),
        ))
    })();
    CriterionOutcome::from_result(6, "neutron baseline", r)
}

/// Absorber in path I leaves D1 untouched; in path II it scales D1 by T.
pub fn neutron_absorber(_: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let (mut e_i, mut e_ii) = (0.0f64, 0.0f64);
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            for chi in uniform_chi_grid(16) {
                let base = detector_probabilities(&NeutronScenario::baseline().at_chi(chi))?;
                let i = detector_probabilities(
                    &NeutronScenario::with_absorber(Absorber::new(Path::I, t)?).at_chi(chi),
                )?;
                let ii = detector_probabilities(
                    &NeutronScenario::with_absorber(Absorber::new(Path::II, t)?).at_chi(chi),
                )?;
                e_i = e_i.max((i.d1 - base.d1).abs());
                e_ii = e_ii.max((ii.d1 - t / 4.0).abs());
            }
        }
        Ok((
            e_i <= 1e-14 && e_ii <= 1e-15,
            format!("path I max shift {e_i:.3e} (tol 1e-14); path II max |P_D1-T/4| {e_ii:.3e} (tol 1e-15)"),
        ))
    })();
    CriterionOutcome::from_result(7, "neutron absorbers", r)
}

/// Weak fields: D1 visibility from a path-I rotation, none from path II.
pub fn neutron_field(_: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let chis = uniform_chi_grid(100);
        let alpha = 0.2;
        let i = chi_sweep(
            &NeutronScenario::with_rotation(SpinRotation::field(Path::I, alpha)),
            &chis,
        )?;
        let ii = chi_sweep(
            &NeutronScenario::with_rotation(SpinRotation::field(Path::II, alpha)),
            &chis,
        )?;
        let s = (alpha / 2.0).sin();
        let want = 2.0 * s / (1.0 + s * s);
        let err = (i.d1.fitted - want).abs();
        let ok = err <= 1e-10 && i.d2.fitted > 0.0 && ii.d1.fitted <= 1e-12 && ii.d2.fitted > 0.0;
        Ok((
            ok,
            format!(
                "path I: V(D1) {:.12} vs {want:.12} (err {err:.1e}), V(D2) {:.6}; path II: V(D1) {:.1e}, V(D2) {:.6}",
                i.d1.fitted, i.d2.fitted, ii.d1.fitted, ii.d2.fitted
            ),
        ))
    })();
    CriterionOutcome::from_result(8, "neutron weak fields", r)
}

/// Random scenario fuzz: the four channels always sum to one.
pub fn probability_conservation(opts: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
        let n = 2000;
        let mut worst = 0.0f64;
        for _ in 0..n {
            let path = |rng: &mut ChaCha8Rng| {
                if rng.random::<bool>() {
                    Path::I
                } else {
                    Path::II
                }
            };
            let mut sc = NeutronScenario::baseline().at_chi(2.0 * PI * rng.random::<f64>());
            if rng.random::<bool>() {
                let theta = PI * rng.random::<f64>();
                let (pa, pb) = (
                    2.0 * PI * rng.random::<f64>(),
                    2.0 * PI * rng.random::<f64>(),
                );
                let p = path(&mut rng);
                sc.rotation = Some(SpinRotation::new(
                    p,
                    C64::from_polar(theta.cos(), pa),
                    C64::from_polar(theta.sin(), pb),
                )?);
            }
            if rng.random::<bool>() {
                let p = path(&mut rng);
                sc.absorber = Some(Absorber::new(p, rng.random::<f64>())?);
            }
            let total = detector_probabilities(&sc)?.total();
            worst = worst.max((total - 1.0).abs());
        }
        Ok((
            worst <= 1e-12,
            format!("max |sum-1| {worst:.3e} over {n} scenarios (tol 1e-12)"),
        ))
    })();
    CriterionOutcome::from_result(9, "probability conservation", r)
}

/// Uniform phase noise on the post-selection washes out the x shift; the
/// standard error falls as `1/√N`.
pub fn decoherence(opts: &VerifyOptions) -> CriterionOutcome {
    let r = (|| -> Result<(bool, String)> {
        let spec = InteractionSpec::symmetric(1e-3, 1.0)?;
        let big = disturbance_ensemble(
            &DisturbanceModel::new(NoiseKind::PhaseNoisePost, 2.0 * PI, 10_000, opts.seed)?,
            &spec,
        )?;
        let small = disturbance_ensemble(
            &DisturbanceModel::new(NoiseKind::PhaseNoisePost, 2.0 * PI, 100, opts.seed)?,
            &spec,
        )?;
        let (mx, se) = (big.mean_centroid.0, big.centroid_stderr.0);
        let ratio = small.centroid_stderr.0 / se;
        let ok = mx.abs() <= 3.0 * se && (ratio - 10.0).abs() <= 2.0;
        Ok((
            ok,
            format!(
                "mean x {:.3} stderr (mean {mx:.3e}, stderr {se:.3e}); stderr ratio N=1e2/1e4 {ratio:.3} (10 +/- 20%); ensemble purity {:.6}",
                mx / se,
                big.purity
            ),
        ))
    })();
    CriterionOutcome::from_result(10, "decoherence ensemble", r)
}

/// Criteria 1–10 in order.
pub fn run_checks(opts: &VerifyOptions) -> Vec<CriterionOutcome> {
    vec![
        coefficient_ratios(opts),
        weak_shift(opts),
        strong_regime(opts),
        interference_picture(opts),
        weak_values(opts),
        neutron_baseline(opts),
        neutron_absorber(opts),
        neutron_field(opts),
        probability_conservation(opts),
        decoherence(opts),
    ]
}

pub fn render(outcomes: &[CriterionOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        let _ = writeln!(s, "{}", o.line());
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(s, "{passed}/{} criteria passed", outcomes.len());
    s
}

/// Determinism: two complete runs render identically.
pub fn determinism(opts: &VerifyOptions, first: &[CriterionOutcome]) -> CriterionOutcome {
    let again = run_checks(opts);
    let same = render(first) == render(&again);
    CriterionOutcome {
        id: 11,
        name: "determinism",
        passed: same,
        detail: if same {
            "repeat run rendered byte-identical".into()
        } else {
            "repeat run differs".into()
        },
    }
}

/// Every criterion, including the repeat-run determinism check.
pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionOutcome> {
    let mut out = run_checks(opts);
    let det = determinism(opts, &out);
    out.push(det);
    out
}
