use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};

use cheshire_core::analysis::{
    attenuation_curve, photon_weak_value_reports, NoiseKind, WeakValueReport,
};
use cheshire_core::hybrid::{
    arm_components, centroid2d, joint_density, max_term_overlap, photon_grids, photon_joint_state,
    pointer_entanglement, strong_lobe_weights, Density2D, InteractionSpec, DEFAULT_LOBE_RADIUS,
    LOBE_OVERLAP_LIMIT,
};
use cheshire_core::io::{write_density_csv, write_pgm, write_rows, write_sweep_csv, Params};
use cheshire_core::neutron::{
    chi_sweep, sample_counts_with, uniform_chi_grid, Absorber, ChiSweep, DetectorCounts,
    NeutronScenario, SpinRotation,
};
use cheshire_core::qstate::{Internal, Path};
use cheshire_core::verify::{self, VerifyOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::Failure;

fn create(cfg: &RunConfig, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = cfg.path(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn io(e: std::io::Error) -> Failure {
    Failure::Usage(format!("write failed: {e}"))
}

fn photon_params(cfg: &RunConfig, scenario: &str) -> Params {
    Params::new()
        .with("scenario", scenario)
        .with("w", cfg.width)
        .with("dx", cfg.dx)
        .with("dy", cfg.dy)
        .with("grid_n", cfg.grid_n)
        .with("grid_span", cfg.grid_span)
        .with("seed", cfg.seed)
        .with(
            "samples",
            cfg.samples.map_or("none".to_string(), |s| s.to_string()),
        )
}

fn emit_density(
    cfg: &RunConfig,
    stem: &str,
    d: &Density2D,
    params: &Params,
) -> Result<Vec<String>, Failure> {
    let mut files = Vec::new();
    if cfg.formats.csv {
        let name = format!("{stem}.csv");
        write_density_csv(create(cfg, &name)?, d, params).map_err(io)?;
        files.push(name);
    }
    if cfg.formats.pgm {
        let name = format!("{stem}.pgm");
        let mut w = create(cfg, &name)?;
        write_pgm(&mut w, d).map_err(io)?;
        w.flush().map_err(io)?;
        files.push(name);
    }
    Ok(files)
}

fn weak_value_rows(reports: &[WeakValueReport]) -> Vec<Vec<String>> {
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| x.to_string());
    reports
        .iter()
        .map(|r| {
            vec![
                r.operator.clone(),
                r.weak_value.re.to_string(),
                r.weak_value.im.to_string(),
                r.predicted_shift.to_string(),
                opt(r.simulated_shift),
                opt(r.discrepancy),
            ]
        })
        .collect()
}

const WEAK_VALUE_HEADER: &[&str] = &[
    "operator",
    "re",
    "im",
    "predicted_shift",
    "simulated_shift",
    "discrepancy",
];

pub fn photon_cat(cfg: &RunConfig) -> Result<String, Failure> {
    cfg.ensure_out_dir()?;
    let spec = InteractionSpec::new(cfg.dx, cfg.dy, cfg.width)?;
    let params = photon_params(cfg, "photon-cat");
    let j = photon_joint_state(&spec)?;
    let (gx, gy) = photon_grids(&spec, cfg.grid_span, cfg.grid_n)?;

    let mut files = Vec::new();
    let (arm_ii, arm_i) = arm_components(&spec, &gx, &gy)?;
    files.extend(emit_density(cfg, "photon_arm_ii", &arm_ii, &params)?);
    files.extend(emit_density(cfg, "photon_arm_i", &arm_i, &params)?);
    let density = joint_density(&j, &gx, &gy)?;
    files.extend(emit_density(cfg, "photon_density", &density, &params)?);

    let (cx, cy) = centroid2d(&j)?;
    let (px, py, _) = density.argmax();
    let success = j.norm2()?;
    let baseline = photon_joint_state(&InteractionSpec::new(0.0, 0.0, cfg.width)?)?.norm2()?;
    let purity = pointer_entanglement(&j)?;
    let overlap = max_term_overlap(&j)?;
    let mut summary: Vec<(String, String)> = vec![
        ("centroid_x".into(), cx.to_string()),
        ("centroid_y".into(), cy.to_string()),
        ("peak_x".into(), px.to_string()),
        ("peak_y".into(), py.to_string()),
        (
            "mass_x_negative".into(),
            density.integrate_where(|x, _| x < 0.0).to_string(),
        ),
        (
            "mass_x_positive".into(),
            density.integrate_where(|x, _| x > 0.0).to_string(),
        ),
        ("postselection_probability".into(), success.to_string()),
        (
            "postselection_probability_at_rest".into(),
            baseline.to_string(),
        ),
        ("pointer1_purity".into(), purity.to_string()),
        ("max_term_overlap".into(), overlap.to_string()),
    ];
    if overlap <= LOBE_OVERLAP_LIMIT {
        let lobes = strong_lobe_weights(&j, DEFAULT_LOBE_RADIUS * cfg.width)?;
        for l in lobes {
            let name = match (l.origin.path, l.origin.internal) {
                (Path::II, _) => "lobe_weight_arm_ii",
                (Path::I, Internal::Plus) => "lobe_weight_arm_i_plus",
                _ => "lobe_weight_arm_i_minus",
            };
            summary.push((name.into(), l.weight.to_string()));
        }
    }

    let reports = photon_weak_value_reports(&spec)?;
    if cfg.formats.csv {
        let rows: Vec<Vec<String>> = summary
            .iter()
            .map(|(k, v)| vec![k.clone(), v.clone()])
            .collect();
        write_rows(
            create(cfg, "photon_summary.csv")?,
            &params,
            &["quantity", "value"],
            &rows,
        )
        .map_err(io)?;
        files.push("photon_summary.csv".into());
        write_rows(
            create(cfg, "weak_values.csv")?,
            &params,
            WEAK_VALUE_HEADER,
            &weak_value_rows(&reports),
        )
        .map_err(io)?;
        files.push("weak_values.csv".into());
    }

    if let (Some(samples), true) = (cfg.samples, cfg.formats.csv) {
        let strengths = [0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
        let mut rows = Vec::new();
        for kind in [
            NoiseKind::PhaseNoisePre,
            NoiseKind::PhaseNoisePost,
            NoiseKind::AmplitudeNoise,
        ] {
            let curve = attenuation_curve(kind, &strengths, samples as usize, cfg.seed, &spec)?;
            for (s, e) in curve {
                rows.push(vec![
                    kind.name().to_string(),
                    s.to_string(),
                    e.mean_centroid.0.to_string(),
                    e.centroid_stderr.0.to_string(),
                    e.mean_centroid.1.to_string(),
                    e.centroid_stderr.1.to_string(),
                    e.purity.to_string(),
                ]);
            }
        }
        let header = [
            "kind", "strength", "mean_x", "stderr_x", "mean_y", "stderr_y", "purity",
        ];
        write_rows(create(cfg, "photon_ensemble.csv")?, &params, &header, &rows).map_err(io)?;
        files.push("photon_ensemble.csv".into());
    }

    let mut out = String::new();
    for (k, v) in &summary {
        out.push_str(&format!("{k} = {v}\n"));
    }
    for r in &reports {
        out.push_str(&format!(
            "weak value {} = {:.6}{:+.6}i\n",
            r.operator, r.weak_value.re, r.weak_value.im
        ));
    }
    out.push_str(&format!(
        "wrote {} files to {}\n",
        files.len(),
        cfg.out.display()
    ));
    Ok(out)
}

pub fn neutron_cat(cfg: &RunConfig) -> Result<String, Failure> {
    cfg.ensure_out_dir()?;
    let chis = uniform_chi_grid(cfg.chi_steps);
    let probes: Vec<(&str, NeutronScenario)> = vec![
        ("baseline", NeutronScenario::baseline()),
        (
            "absorber_i",
            NeutronScenario::with_absorber(Absorber::new(Path::I, cfg.transmissivity)?),
        ),
        (
            "absorber_ii",
            NeutronScenario::with_absorber(Absorber::new(Path::II, cfg.transmissivity)?),
        ),
        (
            "field_i",
            NeutronScenario::with_rotation(SpinRotation::field(Path::I, cfg.alpha)),
        ),
        (
            "field_ii",
            NeutronScenario::with_rotation(SpinRotation::field(Path::II, cfg.alpha)),
        ),
    ];
    let mut sweeps: Vec<(&str, ChiSweep)> = Vec::new();
    for (name, sc) in &probes {
        sweeps.push((name, chi_sweep(sc, &chis)?));
    }

    let mut out = String::new();
    let mut rows = Vec::new();
    for (index, (name, sweep)) in sweeps.iter().enumerate() {
        let params = Params::new()
            .with("scenario", "neutron-cat")
            .with("probe", name)
            .with("t", cfg.transmissivity)
            .with("alpha", cfg.alpha)
            .with("chi_steps", cfg.chi_steps)
            .with("seed", cfg.seed)
            .with(
                "samples",
                cfg.samples.map_or("none".to_string(), |s| s.to_string()),
            );
        let counts: Option<Vec<DetectorCounts>> = match cfg.samples {
            Some(n) => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(index as u64);
                Some(
                    sweep
                        .rows
                        .iter()
                        .map(|r| sample_counts_with(&r.probabilities, n, &mut rng))
                        .collect::<Result<_, _>>()?,
                )
            }
            None => None,
        };
        if cfg.formats.csv {
            let file = format!("neutron_{name}.csv");
            write_sweep_csv(create(cfg, &file)?, sweep, counts.as_deref(), &params).map_err(io)?;
        }
        let (p0, pn) = sweep
            .rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.probabilities.d1), hi.max(r.probabilities.d1))
            });
        out.push_str(&format!(
            "{name:<12} P_D1 in [{p0:.6}, {pn:.6}]  V(D1) = {:.10}  V(D2) = {:.10}\n",
            sweep.d1.fitted, sweep.d2.fitted
        ));
        rows.push(vec![
            name.to_string(),
            sweep.d1.fitted.to_string(),
            sweep.d2.fitted.to_string(),
            sweep.d1.sampled.to_string(),
            sweep.d2.sampled.to_string(),
        ]);
    }
    if cfg.formats.csv {
        let params = Params::new()
            .with("scenario", "neutron-cat")
            .with("t", cfg.transmissivity)
            .with("alpha", cfg.alpha)
            .with("chi_steps", cfg.chi_steps);
        let header = [
            "probe",
            "visibility_d1",
            "visibility_d2",
            "sampled_visibility_d1",
            "sampled_visibility_d2",
        ];
        write_rows(
            create(cfg, "neutron_visibility.csv")?,
            &params,
            &header,
            &rows,
        )
        .map_err(io)?;
    }
    Ok(out)
}

pub fn weak_values(cfg: &RunConfig) -> Result<String, Failure> {
    let spec = InteractionSpec::new(cfg.dx, cfg.dy, cfg.width)?;
    let reports = photon_weak_value_reports(&spec)?;
    let rows = weak_value_rows(&reports);
    if cfg.formats.csv {
        cfg.ensure_out_dir()?;
        write_rows(
            create(cfg, "weak_values.csv")?,
            &photon_params(cfg, "weak-values"),
            WEAK_VALUE_HEADER,
            &rows,
        )
        .map_err(io)?;
    }
    let mut buf = Vec::new();
    write_rows(
        &mut buf,
        &photon_params(cfg, "weak-values"),
        WEAK_VALUE_HEADER,
        &rows,
    )
    .map_err(io)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

/// Returns the rendered report and whether every criterion passed.
pub fn verify(seed: u64, tamper: bool) -> (String, bool) {
    let outcomes = verify::run_all(&VerifyOptions { seed, tamper });
    let ok = outcomes.iter().all(|o| o.passed);
    (verify::render(&outcomes), ok)
}
