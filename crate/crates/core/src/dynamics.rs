//! Time-dependent block correlations: critical slowing down and the dynamic
//! exponent.
//!
//! At the critical point the time dependence of the renormalized two-point
//! function flattens as R grows: the maximal time derivative over a fixed
//! microscopic window decays like R^{−α} for a pure-power dispersion. A
//! non-trivial limit evolution survives only after rescaling time as
//! t = R^δ·τ with δ = α, for which the branch phase
//! e^{i e(k/R)·t} = e^{i c kᵅ τ} is exactly R-free. `dynamic_exponent_recover`
//! measures δ from the flatness decay; `rescaled_limit_correlation` evaluates
//! the R → ∞ limit directly as an internal oracle.

use crate::quad::{self, QuadOpts};
use crate::scaling::{
    block_two_point_spectral, block_two_point_spectral_swapped, fit_exponent, scale_sweep,
    BlockObservableSpec, ExponentFit,
};
use crate::spectral::{angular_kernel, QuasifreeModel, C64};
use crate::{sphere_area, Error, Result};
use std::f64::consts::PI;

/// Time-dependence mode of a sweep result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeMode {
    MicroscopicTime,
    RescaledTime { delta: f64 },
}

/// Block two-point values over a time grid at fixed scale.
#[derive(Debug, Clone)]
pub struct TimeSweepResult {
    pub r: f64,
    pub time_grid: Vec<f64>,
    pub values: Vec<C64>,
    pub mode: TimeMode,
}

/// ⟨A_R A_R(t)⟩ at scale R: the equal-position block autocorrelation with a
/// relative time argument.
pub fn time_correlation_at_scale(
    model: &QuasifreeModel,
    spec: &BlockObservableSpec,
    r: f64,
    t: f64,
) -> Result<C64> {
    block_two_point_spectral(model, spec, r, 0.0, t)
}

/// Block correlation over a uniform time grid at fixed scale.
pub fn time_sweep(
    model: &QuasifreeModel,
    spec: &BlockObservableSpec,
    r: f64,
    t_window: (f64, f64),
    samples: usize,
) -> Result<TimeSweepResult> {
    if samples < 2 || t_window.1 <= t_window.0 {
        return Err(Error::OutOfRange("need ≥ 2 samples and t0 < t1".into()));
    }
    let dt = (t_window.1 - t_window.0) / (samples - 1) as f64;
    let time_grid: Vec<f64> = (0..samples).map(|i| t_window.0 + i as f64 * dt).collect();
    let mut values = Vec::with_capacity(samples);
    for &t in &time_grid {
        values.push(time_correlation_at_scale(model, spec, r, t)?);
    }
    Ok(TimeSweepResult {
        r,
        time_grid,
        values,
        mode: TimeMode::MicroscopicTime,
    })
}

/// Max |d/dt ⟨A_R A_R(t)⟩| over the window, by Richardson-extrapolated
/// central differences with step `dt` (default 1e−3 of the window span).
/// For critical pure-power models this decays like R^{−α}; off criticality
/// it converges to the limit dynamics' derivative instead.
pub fn slowdown_flatness(
    model: &QuasifreeModel,
    spec: &BlockObservableSpec,
    r: f64,
    t_window: (f64, f64),
    dt: Option<f64>,
) -> Result<f64> {
    let span = t_window.1 - t_window.0;
    if span <= 0.0 {
        return Err(Error::OutOfRange("empty time window".into()));
    }
    let h = dt.unwrap_or(1e-3 * span);
    if h <= 0.0 || h > span / 4.0 {
        return Err(Error::OutOfRange(format!(
            "finite-difference step {h} incompatible with window span {span}"
        )));
    }
    let samples = 9usize;
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let t = t_window.0 + span * (i as f64 + 0.5) / samples as f64;
        let d = |step: f64| -> Result<C64> {
            let plus = time_correlation_at_scale(model, spec, r, t + step)?;
            let minus = time_correlation_at_scale(model, spec, r, t - step)?;
            Ok((plus - minus) / (2.0 * step))
        };
        let d_h = d(h)?;
        let d_h2 = d(h / 2.0)?;
        let richardson = (d_h2 * 4.0 - d_h) / 3.0;
        worst = worst.max(richardson.norm());
    }
    Ok(worst)
}

/// Block correlation at rescaled time: value(R, R^δ·τ).
pub fn rescaled_time_correlation(
    model: &QuasifreeModel,
    spec: &BlockObservableSpec,
    r: f64,
    tau: f64,
    delta: f64,
) -> Result<C64> {
    if delta < 0.0 {
        return Err(Error::OutOfRange(format!(
            "time-rescaling exponent must be ≥ 0, got {delta}"
        )));
    }
    time_correlation_at_scale(model, spec, r, r.powf(delta) * tau)
}

/// Direct R → ∞ limit of the rescaled correlation at δ = α for critical
/// pure-power models (the branch phase is exactly R-free after t = R^α τ):
///
/// ```text
///   V_∞(τ) = (2π)⁻ⁿ S_{n−1} ∫ kⁿ⁻¹ |f̂(k)|² (βc kᵅ)⁻¹
///            [ j e^{−ic kᵅ τ} + conj j e^{+ic kᵅ τ} ] dk
/// ```
pub fn rescaled_limit_correlation(
    model: &QuasifreeModel,
    spec: &BlockObservableSpec,
    tau: f64,
) -> Result<C64> {
    if !model.is_critical() || !model.dispersion().is_pure_power() {
        return Err(Error::InvalidInput(
            "the rescaled limit requires a critical pure-power model".into(),
        ));
    }
    let n = model.dimension();
    if spec.kernel.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spec.kernel.dimension(),
        });
    }
    let gamma_star = (n as f64 + model.dispersion().alpha()) / 2.0;
    if (spec.gamma - gamma_star).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "the rescaled limit is finite only at gamma = (n+α)/2 = {gamma_star}, got {}",
            spec.gamma
        )));
    }
    let sub = model.ir_substitution()?; // also rejects n ≤ α
    let table = crate::kernels::transform_table(&spec.kernel)?;
    let k_max = table.fourier_cutoff().ok_or_else(|| {
        Error::InvalidInput("rescaled limit needs a tabulated (smooth) kernel".into())
    })?;
    let alpha = model.dispersion().alpha();
    let c = model.dispersion().prefactor();
    let beta = model.beta();
    let norm_const = sphere_area(n) / (2.0 * PI).powi(n as i32);

    let integrand = |k: f64| -> C64 {
        if k <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let f2 = table.fourier(k).powi(2);
        let theta = c * k.powf(alpha) * tau;
        let j = model.j_weight(0.0);
        let phase = C64::new(theta.cos(), -theta.sin());
        let branch = j * phase + j.conj() * phase.conj();
        branch * (f2 * k.powi(n as i32 - 1) / (beta * c * k.powf(alpha)))
    };
    let opts = QuadOpts {
        max_panels: 40_000,
        ..QuadOpts::default()
    };
    let k_break = 1.0f64.min(k_max);
    let head = match sub {
        Some(q) => {
            let g = |v: f64| -> C64 {
                if v <= 0.0 {
                    return C64::new(0.0, 0.0);
                }
                integrand(v.powf(q)) * (q * v.powf(q - 1.0))
            };
            quad::integrate(g, 0.0, k_break.powf(1.0 / q), &opts)
        }
        None => quad::integrate(integrand, 0.0, k_break, &opts),
    };
    let rest = quad::integrate(integrand, k_break, k_max, &opts);
    Ok((head.value + rest.value) * norm_const)
}

/// Measured dynamic exponent: fit of the flatness decay over a scale grid.
#[derive(Debug, Clone, Copy)]
pub struct DynamicExponent {
    pub delta_hat: f64,
    pub fit: ExponentFit,
}

/// Fits the decay of [`slowdown_flatness`] across the grid and returns the
/// measured dynamic exponent δ̂ = −slope; contract: δ̂ = α for critical
/// pure-power models.
pub fn dynamic_exponent_recover(
    model: &QuasifreeModel,
    spec: &BlockObservableSpec,
    r_grid: &[f64],
    t_window: (f64, f64),
) -> Result<DynamicExponent> {
    if !model.is_critical() || !model.dispersion().is_pure_power() {
        return Err(Error::InvalidInput(
            "dynamic exponent recovery requires a critical pure-power model".into(),
        ));
    }
    let sweep = scale_sweep("slowdown-flatness", r_grid, |r| {
        slowdown_flatness(model, spec, r, t_window, None).map(|v| C64::new(v, 0.0))
    })?;
    let fit = fit_exponent(&sweep, None)?;
    Ok(DynamicExponent {
        delta_hat: -fit.slope,
        fit,
    })
}

/// Smeared thermal-boundary residual at scale R: compares
/// `∫ F_R(t) g(t) dt` against `∫ F_R^swapped(t) g(t+iβ) dt` for a Gaussian
/// window g(t) = exp(−t²/(2σ²)). The identity holds exactly for the model
/// class; the residual guards the whole time/spectral quadrature pipeline.
pub fn kms_smeared_residual(
    model: &QuasifreeModel,
    spec: &BlockObservableSpec,
    r: f64,
    sigma: f64,
) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::OutOfRange("window width must be positive".into()));
    }
    let beta = model.beta();
    let t_max = 12.0 * sigma;
    let opts = QuadOpts::with_tols(1e-10, 1e-8);

    let lhs = quad::integrate(
        |t: f64| {
            let f = block_two_point_spectral(model, spec, r, 0.0, t)
                .unwrap_or(C64::new(f64::NAN, f64::NAN));
            f * (-t * t / (2.0 * sigma * sigma)).exp()
        },
        -t_max,
        t_max,
        &opts,
    );
    let rhs = quad::integrate(
        |t: f64| {
            let f = block_two_point_spectral_swapped(model, spec, r, 0.0, t)
                .unwrap_or(C64::new(f64::NAN, f64::NAN));
            // g(t+iβ) = exp(−(t² − β² + 2iβt)/(2σ²))
            let s2 = 2.0 * sigma * sigma;
            let mag = ((beta * beta - t * t) / s2).exp();
            let arg = -2.0 * beta * t / s2;
            f * C64::new(mag * arg.cos(), mag * arg.sin())
        },
        -t_max,
        t_max,
        &opts,
    );
    let l = lhs.value;
    let r_v = rhs.value;
    if !l.re.is_finite() || !r_v.re.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            achieved: f64::NAN,
            requested: opts.tol_abs,
        });
    }
    Ok((l - r_v).norm() / (1.0 + l.norm()))
}

/// The angular kernel re-exported for time-domain diagnostics.
pub fn radial_phase_kernel(n: usize, kr: f64) -> f64 {
    angular_kernel(n, kr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::AveragingKernel;
    use crate::scaling::geometric_grid;
    use crate::spectral::{DispersionLaw, SpectralWeight};

    fn critical_model_im(n: usize, alpha: f64) -> QuasifreeModel {
        // weight j = i: the flatness carries a first-order time derivative
        QuasifreeModel::critical_pure_power(
            n,
            1.0,
            alpha,
            1.0,
            SpectralWeight::Constant(C64::new(0.0, 1.0)),
        )
        .unwrap()
    }

    fn spec_for(n: usize, alpha: f64) -> BlockObservableSpec {
        BlockObservableSpec::new(
            (n as f64 + alpha) / 2.0,
            AveragingKernel::smooth(n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn equal_time_reduction() {
        let m = critical_model_im(1, 0.5);
        let spec = spec_for(1, 0.5);
        let a = time_correlation_at_scale(&m, &spec, 50.0, 0.0).unwrap();
        let b = block_two_point_spectral(&m, &spec, 50.0, 0.0, 0.0).unwrap();
        assert!((a - b).norm() == 0.0);
        // delta = 0 reduces the rescaled correlation to microscopic time
        let c = rescaled_time_correlation(&m, &spec, 50.0, 0.7, 0.0).unwrap();
        let d = time_correlation_at_scale(&m, &spec, 50.0, 0.7).unwrap();
        assert!((c - d).norm() == 0.0);
    }

    #[test]
    fn flatness_zero_for_zero_weight() {
        let m = QuasifreeModel::critical_pure_power(
            1,
            1.0,
            0.5,
            1.0,
            SpectralWeight::constant_real(0.0),
        )
        .unwrap();
        let spec = spec_for(1, 0.5);
        let f = slowdown_flatness(&m, &spec, 100.0, (0.0, 2.0), None).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn flatness_decays_at_critical_point() {
        let m = critical_model_im(1, 0.5);
        let spec = spec_for(1, 0.5);
        let f10 = slowdown_flatness(&m, &spec, 10.0, (0.0, 2.0), None).unwrap();
        let f1000 = slowdown_flatness(&m, &spec, 1000.0, (0.0, 2.0), None).unwrap();
        // R^{−1/2} decay: factor 10 across two decades
        let ratio = f10 / f1000;
        assert!(
            (ratio / 10.0 - 1.0).abs() < 0.15,
            "flatness ratio {ratio} (expect ≈ 10)"
        );
    }

    #[test]
    fn flatness_survives_off_criticality() {
        let m = QuasifreeModel::new(
            1,
            1.0,
            -1.0,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::constant_real(1.0),
        )
        .unwrap();
        let spec = BlockObservableSpec::new(0.5, AveragingKernel::smooth(1).unwrap()).unwrap();
        let f100 = slowdown_flatness(&m, &spec, 100.0, (0.0, 2.0), None).unwrap();
        let f3000 = slowdown_flatness(&m, &spec, 3000.0, (0.0, 2.0), None).unwrap();
        assert!(
            f3000 > 0.5 * f100,
            "normal-regime flatness must not decay: {f100} -> {f3000}"
        );
        assert!(f3000 > 1e-3);
    }

    #[test]
    fn dynamic_exponent_n1_alpha_half() {
        let m = critical_model_im(1, 0.5);
        let spec = spec_for(1, 0.5);
        let grid = geometric_grid(10.0, 1e4, 10).unwrap();
        let d = dynamic_exponent_recover(&m, &spec, &grid, (0.0, 2.0)).unwrap();
        assert!(
            (d.delta_hat - 0.5).abs() <= 0.05,
            "delta_hat {}",
            d.delta_hat
        );
    }

    #[test]
    fn rescaled_correlation_converges_to_limit_oracle() {
        let m = critical_model_im(1, 0.5);
        let spec = spec_for(1, 0.5);
        let tau = 1.0;
        let limit = rescaled_limit_correlation(&m, &spec, tau).unwrap();
        let v1 = rescaled_time_correlation(&m, &spec, 1e2, tau, 0.5).unwrap();
        let v2 = rescaled_time_correlation(&m, &spec, 1e4, tau, 0.5).unwrap();
        assert!(
            (v2 - limit).norm() < (v1 - limit).norm() * 0.2,
            "convergence towards the oracle: {} -> {}",
            (v1 - limit).norm(),
            (v2 - limit).norm()
        );
    }

    #[test]
    fn over_rescaling_flattens_again() {
        // δ = α + 0.5: at fixed τ the τ-derivative dies out with R
        let m = critical_model_im(1, 0.5);
        let spec = spec_for(1, 0.5);
        let delta = 1.0;
        let probe = |r: f64| -> f64 {
            let a = rescaled_time_correlation(&m, &spec, r, 0.5, delta).unwrap();
            let b = rescaled_time_correlation(&m, &spec, r, 1.0, delta).unwrap();
            (a - b).norm()
        };
        // The τ-variation at fixed τ decays as R grows (over-rescaled
        // phase averages out over the kernel support).
        assert!(probe(3000.0) < probe(30.0) * 0.5);
    }

    #[test]
    fn kms_smeared_identity_holds_at_finite_scale() {
        let m = critical_model_im(1, 0.5);
        let spec = spec_for(1, 0.5);
        for &r in &[10.0, 100.0] {
            let res = kms_smeared_residual(&m, &spec, r, 1.0).unwrap();
            assert!(res <= 1e-6, "smeared KMS residual {res} at R = {r}");
        }
    }

    #[test]
    fn normal_regime_time_oscillation_at_branch_frequency() {
        // μ = −1: for large R the branch frequency tends to |μ|, so the real
        // part flips sign between t = 0 and t = π.
        let m = QuasifreeModel::new(
            1,
            1.0,
            -1.0,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::constant_real(1.0),
        )
        .unwrap();
        let spec = BlockObservableSpec::new(0.5, AveragingKernel::smooth(1).unwrap()).unwrap();
        let v0 = time_correlation_at_scale(&m, &spec, 1e4, 0.0).unwrap();
        let v_half = time_correlation_at_scale(&m, &spec, 1e4, std::f64::consts::PI).unwrap();
        assert!(v0.re > 0.0);
        assert!(v_half.re < 0.0, "expected a sign flip, got {v_half}");
    }

    #[test]
    fn negative_delta_rejected() {
        let m = critical_model_im(1, 0.5);
        let spec = spec_for(1, 0.5);
        assert!(rescaled_time_correlation(&m, &spec, 10.0, 1.0, -0.1).is_err());
    }
}
