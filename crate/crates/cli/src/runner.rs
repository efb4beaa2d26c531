//! Experiment execution: builds core objects from the parsed config, runs
//! the requested computation and collects tables, sidecars and notes.

use crate::config::{
    CommProfileKind, Experiment, ExperimentConfig, GammaSpec, KernelCutoff, KernelProfile,
    ModelConfig, WtConfig,
};
use crate::output::{fmt_float, RunOutput, Table};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgscale_core::correlation::{CorrelationHierarchy, LabeledPoint, TwoPointFn};
use rgscale_core::dynamics::slowdown_flatness;
use rgscale_core::kernels::{transform_table, AveragingKernel, KernelOverlap, SmoothProfile};
use rgscale_core::scaling::{
    auto_gamma, block_l_point_normal, block_two_point_spectral, commutator_bound_fourier,
    commutator_bound_real, critical_block_two_point_position, critical_limit_two_point,
    fit_exponent, geometric_grid, normal_two_point_limit, real_space_two_point, scale_sweep,
    BlockObservableSpec, CommProfile, CriticalWt, ExponentFit, NormalWt, ScaleSweep,
};
use rgscale_core::spectral::{DispersionLaw, QuasifreeModel, SpectralWeight};
use serde_json::json;
use std::sync::Arc;

/// Outcome of a run: exit code 0 (clean) or 2 (numerical flags present).
pub struct RunResult {
    pub output: RunOutput,
    pub resolved_gamma: f64,
    pub numerical_flags: usize,
}

/// Configuration-level failures discovered at run time (exit code 1).
pub type RunError = String;

fn build_model(m: &ModelConfig) -> Result<QuasifreeModel, RunError> {
    QuasifreeModel::new(
        m.n,
        m.beta,
        m.mu,
        DispersionLaw::pure_power(m.alpha, m.prefactor).map_err(|e| e.to_string())?,
        SpectralWeight::Constant(C64::new(m.j_re, m.j_im)),
    )
    .map_err(|e| e.to_string())
}

fn build_kernel(cfg: &ExperimentConfig, n: usize) -> Result<AveragingKernel, RunError> {
    let kernel = match (cfg.kernel.cutoff, cfg.kernel.profile) {
        (KernelCutoff::Sharp, _) => AveragingKernel::sharp(n),
        (KernelCutoff::Smooth, KernelProfile::Mollifier) => AveragingKernel::smooth(n),
        (KernelCutoff::Smooth, KernelProfile::Cosine) => {
            AveragingKernel::smooth_with_profile(n, SmoothProfile::CosineStep)
        }
    };
    kernel.map_err(|e| e.to_string())
}

fn resolve_gamma(cfg: &ExperimentConfig, model: Option<&QuasifreeModel>) -> Result<f64, RunError> {
    match cfg.gamma {
        GammaSpec::Fixed(g) => Ok(g),
        GammaSpec::Auto => match model {
            Some(m) => auto_gamma(m).map_err(|e| e.to_string()),
            // correlation-function experiments live in the normal regime
            None => Ok(0.5),
        },
    }
}

fn fit_sidecar(fit: &ExponentFit) -> serde_json::Value {
    json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "max_residual": fit.max_residual,
        "window_lo": fit.window.0,
        "window_hi": fit.window.1,
        "excluded": fit.excluded,
    })
}

fn sweep_table(name: &str, sweep: &ScaleSweep) -> Table {
    let mut t = Table::new(name, &["R", "re_value", "im_value", "abs_value", "status"]);
    for p in &sweep.points {
        match p.value {
            Some(v) => t.push_row(vec![
                fmt_float(p.r),
                fmt_float(v.re),
                fmt_float(v.im),
                fmt_float(v.norm()),
                "ok".into(),
            ]),
            None => t.push_row(vec![
                fmt_float(p.r),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                p.note.clone().unwrap_or_default().replace(',', ";"),
            ]),
        }
    }
    t
}

/// Fit window: the default top-half policy needs ≥ 4 usable points; short
/// grids fall back to the full window (reported in the sidecar).
fn fit_window(len: usize) -> Option<(usize, usize)> {
    if len - len / 2 >= 4 {
        None
    } else {
        Some((0, len))
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult, RunError> {
    let mut out = RunOutput::new();
    let mut flags = 0usize;
    let mut resolved_gamma;

    match cfg.experiment {
        Experiment::ScaleSweep | Experiment::ExponentFit => {
            let model = build_model(cfg.model.as_ref().expect("validated"))?;
            let kernel = build_kernel(cfg, model.dimension())?;
            resolved_gamma = resolve_gamma(cfg, Some(&model))?;
            let spec =
                BlockObservableSpec::new(resolved_gamma, kernel).map_err(|e| e.to_string())?;
            let grid = geometric_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.points)
                .map_err(|e| e.to_string())?;
            let y = cfg.geometry.y;
            let t = cfg.geometry.t0;
            let sweep = scale_sweep("scale-sweep", &grid, |r| {
                block_two_point_spectral(&model, &spec, r, y, t)
            })
            .map_err(|e| e.to_string())?;
            flags += sweep.failures();
            for p in &sweep.points {
                if let Some(note) = &p.note {
                    out.note(format!("R = {}: {note}", p.r));
                }
            }
            out.tables.push(sweep_table("scale_sweep", &sweep));
            if cfg.experiment == Experiment::ExponentFit {
                match fit_exponent(&sweep, fit_window(sweep.points.len())) {
                    Ok(fit) => out
                        .sidecars
                        .push(("exponent_fit".into(), fit_sidecar(&fit))),
                    Err(e) => {
                        flags += 1;
                        out.note(format!("exponent fit failed: {e}"));
                    }
                }
            }
        }

        Experiment::Limit2pt => {
            let (alpha, constant, f_amplitude) = match cfg.wt.as_ref().expect("validated") {
                WtConfig::Critical {
                    alpha,
                    constant,
                    f_amplitude,
                } => (*alpha, *constant, *f_amplitude),
                _ => unreachable!("validated"),
            };
            let _ = (constant, f_amplitude);
            let kernel = build_kernel(cfg, 1)?;
            let table = transform_table(&kernel).map_err(|e| e.to_string())?;
            let overlap = KernelOverlap::from_table(&table);
            resolved_gamma = (1.0 + alpha) / 2.0;
            let ys: Vec<f64> = match cfg.geometry.y_max {
                Some(ym) => {
                    let n = cfg.geometry.y_points;
                    (0..n)
                        .map(|i| cfg.geometry.y + (ym - cfg.geometry.y) * i as f64 / (n - 1) as f64)
                        .collect()
                }
                None => vec![cfg.geometry.y],
            };
            let mut t = Table::new("limit_2pt", &["Y", "value", "status"]);
            for &y in &ys {
                match critical_limit_two_point(&overlap, alpha, y) {
                    Ok(v) => t.push_row(vec![fmt_float(y), fmt_float(v), "ok".into()]),
                    Err(e) => {
                        flags += 1;
                        t.push_row(vec![
                            fmt_float(y),
                            "nan".into(),
                            e.to_string().replace(',', ";"),
                        ]);
                    }
                }
            }
            out.tables.push(t);
        }

        Experiment::ClusterCheck => {
            let (order, sigma, amplitude) = match cfg.wt.as_ref().expect("validated") {
                WtConfig::Gaussian {
                    order,
                    sigma,
                    amplitude,
                } => (*order, *sigma, *amplitude),
                _ => unreachable!("validated"),
            };
            let kernel = build_kernel(cfg, 1)?;
            if kernel.cutoff() == rgscale_core::kernels::CutoffType::Sharp {
                return Err(
                    "cluster-check uses the Fourier pipeline and needs a smooth kernel".into(),
                );
            }
            let table = transform_table(&kernel).map_err(|e| e.to_string())?;
            resolved_gamma = 0.5; // normal regime, n = 1
            let grid = geometric_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.points)
                .map_err(|e| e.to_string())?;
            let max_l = order.max(3);
            let mut sweeps = Vec::new();
            for l in 2..=max_l {
                let wt = NormalWt::gaussian_1d(l, sigma, amplitude).map_err(|e| e.to_string())?;
                let zeros = vec![0.0; l];
                let sweep = scale_sweep(format!("cluster-l{l}"), &grid, |r| {
                    block_l_point_normal(&wt, &table, r, &zeros)
                })
                .map_err(|e| e.to_string())?;
                flags += sweep.failures();
                sweeps.push((l, wt, sweep));
            }
            let mut t = Table::new(
                "cluster_check",
                &["R", "l", "re_value", "im_value", "abs_value"],
            );
            for (l, _, sweep) in &sweeps {
                for p in &sweep.points {
                    if let Some(v) = p.value {
                        t.push_row(vec![
                            fmt_float(p.r),
                            l.to_string(),
                            fmt_float(v.re),
                            fmt_float(v.im),
                            fmt_float(v.norm()),
                        ]);
                    }
                }
            }
            out.tables.push(t);
            let mut side = serde_json::Map::new();
            for (l, wt, sweep) in &sweeps {
                if *l == 2 {
                    let limit =
                        normal_two_point_limit(wt, &table, 0.0).map_err(|e| e.to_string())?;
                    let last = sweep.points.last().and_then(|p| p.value);
                    if let Some(v) = last {
                        let rel = (v - limit).norm() / limit.norm();
                        side.insert("l2_limit".into(), json!(limit.re));
                        side.insert("l2_rel_dev_at_r_max".into(), json!(rel));
                    }
                } else {
                    match fit_exponent(sweep, fit_window(sweep.points.len())) {
                        Ok(fit) => {
                            side.insert(format!("l{l}_fit"), fit_sidecar(&fit));
                        }
                        Err(e) => {
                            flags += 1;
                            out.note(format!("l = {l} fit failed: {e}"));
                        }
                    }
                }
            }
            out.sidecars
                .push(("cluster_check".into(), serde_json::Value::Object(side)));
        }

        Experiment::SharpVsSmooth => {
            let (sigma, amplitude) = match cfg.wt.as_ref().expect("validated") {
                WtConfig::Gaussian {
                    sigma, amplitude, ..
                } => (*sigma, *amplitude),
                _ => unreachable!("validated"),
            };
            resolved_gamma = 0.5;
            let norm = amplitude / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
            let wt_int = amplitude; // ∫ A·N(0,σ²) dy = A
            let wt = move |u: f64| norm * (-u * u / (2.0 * sigma * sigma)).exp();
            let ys: Vec<f64> = if let Some(ym) = cfg.geometry.y_max {
                let n = cfg.geometry.y_points;
                (0..n)
                    .map(|i| cfg.geometry.y + (ym - cfg.geometry.y) * i as f64 / (n - 1) as f64)
                    .collect()
            } else {
                vec![0.0, 0.5, 1.0]
            };
            let r_limit = 1e5;
            let mut t = Table::new(
                "sharp_vs_smooth",
                &["kernel", "Y", "value", "prediction", "rel_dev"],
            );
            let mut max_dev: f64 = 0.0;
            for name in ["smooth", "sharp"] {
                let kernel = match name {
                    "smooth" => AveragingKernel::smooth(1),
                    _ => AveragingKernel::sharp(1),
                }
                .map_err(|e| e.to_string())?;
                let table = transform_table(&kernel).map_err(|e| e.to_string())?;
                let overlap = KernelOverlap::from_table(&table);
                for &y in &ys {
                    let v = real_space_two_point(&overlap, &wt, 20.0 * sigma, r_limit, y)
                        .map_err(|e| e.to_string())?;
                    let pred = wt_int * (overlap.self_conv)(y);
                    let dev = if pred.abs() > 1e-12 {
                        (v / pred - 1.0).abs()
                    } else {
                        v.abs()
                    };
                    max_dev = max_dev.max(dev);
                    t.push_row(vec![
                        name.into(),
                        fmt_float(y),
                        fmt_float(v),
                        fmt_float(pred),
                        fmt_float(dev),
                    ]);
                }
            }
            out.tables.push(t);
            out.sidecars.push((
                "sharp_vs_smooth".into(),
                json!({ "max_rel_dev": max_dev, "r_limit": r_limit }),
            ));
            if max_dev > 1e-4 {
                flags += 1;
                out.note(format!(
                    "kernel-overlap limit deviation {max_dev:.3e} exceeds 1e-4"
                ));
            }
        }

        Experiment::CommutatorBound => {
            let kernel = build_kernel(cfg, 1)?;
            let table = transform_table(&kernel).map_err(|e| e.to_string())?;
            let overlap = KernelOverlap::from_table(&table);
            let cc = &cfg.commutator;
            resolved_gamma = cc.gamma_a + cc.gamma_b;
            let profile = match cc.profile {
                CommProfileKind::Gaussian => CommProfile::Gaussian {
                    sigma: cc.sigma,
                    amplitude: cc.amplitude,
                },
                CommProfileKind::Indicator => CommProfile::Indicator {
                    radius: cc.radius,
                    amplitude: cc.amplitude,
                },
            };
            let grid = geometric_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.points)
                .map_err(|e| e.to_string())?;
            let sweep = scale_sweep("commutator", &grid, |r| {
                commutator_bound_real(&overlap, cc.gamma_a, cc.gamma_b, r, &profile)
                    .map(|v| C64::new(v, 0.0))
            })
            .map_err(|e| e.to_string())?;
            flags += sweep.failures();
            let mut t = Table::new(
                "commutator_bound",
                &["R", "bound_real", "bound_fourier", "rel_dev"],
            );
            let mut max_dual: f64 = 0.0;
            for p in &sweep.points {
                let real = p.value.map(|v| v.re);
                let fourier =
                    commutator_bound_fourier(&table, cc.gamma_a, cc.gamma_b, p.r, &profile);
                match (real, fourier) {
                    (Some(a), Ok(b)) => {
                        let dev = (a - b).abs() / (1.0 + b.abs());
                        max_dual = max_dual.max(dev);
                        t.push_row(vec![
                            fmt_float(p.r),
                            fmt_float(a),
                            fmt_float(b),
                            fmt_float(dev),
                        ]);
                    }
                    _ => {
                        flags += 1;
                        t.push_row(vec![
                            fmt_float(p.r),
                            "nan".into(),
                            "nan".into(),
                            "nan".into(),
                        ]);
                    }
                }
            }
            out.tables.push(t);
            match fit_exponent(&sweep, fit_window(sweep.points.len())) {
                Ok(fit) => {
                    let mut side = fit_sidecar(&fit);
                    side["expected_slope"] = json!(1.0 - cc.gamma_a - cc.gamma_b);
                    side["max_dual_route_dev"] = json!(max_dual);
                    out.sidecars.push(("commutator_fit".into(), side));
                }
                Err(e) => {
                    flags += 1;
                    out.note(format!("commutator fit failed: {e}"));
                }
            }
        }

        Experiment::KmsCheck => {
            let model = build_model(cfg.model.as_ref().expect("validated"))?;
            resolved_gamma = resolve_gamma(cfg, Some(&model))?;
            let mut t = Table::new("kms_check", &["omega", "k", "residual"]);
            let mut max_res: f64 = 0.0;
            for i in 0..20 {
                for j in 0..20 {
                    let omega = -3.0 + 6.0 * (i as f64 + 0.5) / 20.0;
                    let k = 0.05 + 2.5 * j as f64 / 20.0;
                    match model.detailed_balance_residual(omega, k) {
                        Ok(res) => {
                            max_res = max_res.max(res);
                            t.push_row(vec![fmt_float(omega), fmt_float(k), fmt_float(res)]);
                        }
                        Err(e) => {
                            flags += 1;
                            out.note(format!("(ω={omega}, k={k}): {e}"));
                        }
                    }
                }
            }
            out.tables.push(t);
            out.sidecars
                .push(("kms_check".into(), json!({ "max_residual": max_res })));
        }

        Experiment::Slowdown | Experiment::DynamicExponent => {
            let model = build_model(cfg.model.as_ref().expect("validated"))?;
            let kernel = build_kernel(cfg, model.dimension())?;
            resolved_gamma = resolve_gamma(cfg, Some(&model))?;
            let spec =
                BlockObservableSpec::new(resolved_gamma, kernel).map_err(|e| e.to_string())?;
            let grid = geometric_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.points)
                .map_err(|e| e.to_string())?;
            let window = (cfg.geometry.t0, cfg.geometry.t1);
            let sweep = scale_sweep("flatness", &grid, |r| {
                slowdown_flatness(&model, &spec, r, window, None).map(|v| C64::new(v, 0.0))
            })
            .map_err(|e| e.to_string())?;
            flags += sweep.failures();
            let mut t = Table::new("flatness", &["R", "flatness", "status"]);
            for p in &sweep.points {
                match p.value {
                    Some(v) => t.push_row(vec![fmt_float(p.r), fmt_float(v.re), "ok".into()]),
                    None => t.push_row(vec![
                        fmt_float(p.r),
                        "nan".into(),
                        p.note.clone().unwrap_or_default().replace(',', ";"),
                    ]),
                }
            }
            out.tables.push(t);
            let fit = fit_exponent(&sweep, fit_window(sweep.points.len()));
            match (cfg.experiment, fit) {
                (Experiment::DynamicExponent, Ok(fit)) => {
                    let mut side = fit_sidecar(&fit);
                    side["delta_hat"] = json!(-fit.slope);
                    side["alpha"] = json!(model.dispersion().alpha());
                    out.sidecars.push(("dynamic_exponent".into(), side));
                }
                (Experiment::DynamicExponent, Err(e)) => {
                    flags += 1;
                    out.note(format!("dynamic-exponent fit failed: {e}"));
                }
                (_, Ok(fit)) => {
                    if fit.slope > -0.05 {
                        out.note("non-critical: flatness non-decaying");
                    }
                    out.sidecars
                        .push(("flatness_fit".into(), fit_sidecar(&fit)));
                }
                (_, Err(e)) => {
                    flags += 1;
                    out.note(format!("flatness fit failed: {e}"));
                }
            }
        }

        Experiment::QuasifreeCheck => {
            resolved_gamma = 0.0;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let points: Vec<LabeledPoint> = (0..6)
                .map(|_| LabeledPoint::spatial(vec![rng.gen_range(-2.0..2.0)]))
                .collect();
            let c1 = rng.gen_range(0.3..1.5);
            let c2 = rng.gen_range(-0.8..0.8);
            let tp: TwoPointFn = Arc::new(move |a: &LabeledPoint, b: &LabeledPoint| {
                let d = a.position[0] - b.position[0];
                C64::new((-d * d / 2.0).exp() * (c1 * d).cos(), c2 * d)
            });
            let base: Vec<usize> = (0..6).collect();
            let h =
                CorrelationHierarchy::quasifree(points.clone(), tp, 6, std::slice::from_ref(&base))
                    .map_err(|e| e.to_string())?;
            let mut t = Table::new("quasifree_check", &["l", "max_truncated_abs"]);
            let mut defect: f64 = 0.0;
            for l in 3..=6usize {
                let mut worst: f64 = 0.0;
                for tuple in h.populated_full_tuples(l, l) {
                    worst = worst.max(h.truncate(&tuple).map_err(|e| e.to_string())?.norm());
                }
                defect = defect.max(worst);
                t.push_row(vec![l.to_string(), fmt_float(worst)]);
            }
            out.tables.push(t);

            // seeded round trip through the partition lattice
            let mut truncated =
                CorrelationHierarchy::new(points.clone(), 6).map_err(|e| e.to_string())?;
            let mut full = CorrelationHierarchy::new(points, 6).map_err(|e| e.to_string())?;
            let subs: Vec<Vec<usize>> = (1u32..(1 << 6))
                .map(|mask| {
                    (0..6)
                        .filter(|&i| mask & (1 << i) != 0)
                        .collect::<Vec<usize>>()
                })
                .filter(|s| s.len() >= 2)
                .collect();
            for sub in &subs {
                truncated
                    .set_truncated(
                        sub.clone(),
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                    .map_err(|e| e.to_string())?;
            }
            for sub in &subs {
                let w = truncated
                    .compose_from_truncated(sub)
                    .map_err(|e| e.to_string())?;
                full.set_full(sub.clone(), w).map_err(|e| e.to_string())?;
            }
            let mut round_trip: f64 = 0.0;
            for sub in &subs {
                let wt = full.truncate(sub).map_err(|e| e.to_string())?;
                let orig = truncated.truncated_value(sub).unwrap();
                round_trip = round_trip.max((wt - orig).norm());
            }
            if defect > 1e-10 || round_trip > 1e-12 {
                flags += 1;
                out.note(format!(
                    "identity drift: quasifree defect {defect:.2e}, round trip {round_trip:.2e}"
                ));
            }
            out.sidecars.push((
                "quasifree_check".into(),
                json!({ "quasifree_defect": defect, "round_trip_residual": round_trip, "seed": cfg.seed }),
            ));
        }
    }

    // critical position-space dial exposed through the limit-2pt experiment
    // when a finite gamma is requested alongside the critical form
    if cfg.experiment == Experiment::Limit2pt {
        if let (
            GammaSpec::Fixed(g),
            Some(WtConfig::Critical {
                alpha,
                constant,
                f_amplitude,
            }),
        ) = (cfg.gamma, cfg.wt.as_ref())
        {
            resolved_gamma = g;
            let kernel = build_kernel(cfg, 1)?;
            let table = transform_table(&kernel).map_err(|e| e.to_string())?;
            let overlap = KernelOverlap::from_table(&table);
            let wt = if *f_amplitude == 0.0 {
                CriticalWt {
                    constant: *constant,
                    f_term: None,
                    alpha: *alpha,
                }
            } else {
                CriticalWt::with_gaussian_remainder(*alpha, *constant, *f_amplitude)
            };
            let grid = geometric_grid(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.points)
                .map_err(|e| e.to_string())?;
            let y = cfg.geometry.y;
            let sweep = scale_sweep("critical-position", &grid, |r| {
                critical_block_two_point_position(&wt, &overlap, g, r, y).map(|v| C64::new(v, 0.0))
            })
            .map_err(|e| e.to_string())?;
            flags += sweep.failures();
            out.tables
                .push(sweep_table("critical_position_sweep", &sweep));
            if let Ok(fit) = fit_exponent(&sweep, None) {
                out.sidecars
                    .push(("critical_position_fit".into(), fit_sidecar(&fit)));
            }
        }
    }

    Ok(RunResult {
        output: out,
        resolved_gamma,
        numerical_flags: flags,
    })
}
