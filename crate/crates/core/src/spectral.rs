//! Quasifree thermal models in energy-momentum space.
//!
//! A model is fixed by dimension, inverse temperature β, chemical potential
//! μ, a radial dispersion law e(k), a complex singular weight j(k) carried by
//! the sharp excitation branch, and an optional absolutely continuous
//! commutator background. The two-point spectrum has the singular part
//!
//! ```text
//!   F̂_sing(ω,k) = J₊(k) δ(ω − (e(k)−μ)) + J₋(k) δ(ω + (e(k)−μ)),
//!   J₊(k) = (1 − e^{−β(e(k)−μ)})⁻¹ j(k),   J₋(k) = e^{−β(e(k)−μ)} conj(J₊(k)),
//! ```
//!
//! so detailed balance holds identically and the commutator spectrum carries
//! the β-independent weights (j(k), −conj j(k)). δ-branches stay symbolic:
//! spectra return (frequency, weight) records and every ω-integral over them
//! is done analytically downstream.
//!
//! The position/time correlation uses the convention
//! `F(y,t) = (2π)⁻ⁿ ∫ e^{ik·y} [J₊ e^{−iεt} + J₋ e^{+iεt}] dⁿk` plus the a.c.
//! contribution; the μ=0 Bose pole at k=0 is removed by the substitution
//! k = v^{1/(n−α)}, which bounds the radial integrand whenever n > α.

use crate::quad::{self, QuadOpts};
use crate::special::bessel_j0;
use crate::{sphere_area, Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

pub type C64 = Complex64;

/// Radial dispersion law of the sharp excitation branch.
#[derive(Clone)]
pub struct DispersionLaw {
    alpha: f64,
    prefactor: f64,
    form: DispersionForm,
}

#[derive(Clone)]
pub enum DispersionForm {
    /// e(k) = prefactor · |k|^α globally.
    PurePower,
    /// Arbitrary radial, continuous, non-negative law; `alpha` and
    /// `prefactor` still describe the leading small-k behavior.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl DispersionLaw {
    pub fn pure_power(alpha: f64, prefactor: f64) -> Result<Self> {
        if alpha <= 0.0 || prefactor <= 0.0 {
            return Err(Error::OutOfRange(format!(
                "dispersion requires alpha > 0 and prefactor > 0, got {alpha}, {prefactor}"
            )));
        }
        Ok(DispersionLaw {
            alpha,
            prefactor,
            form: DispersionForm::PurePower,
        })
    }

    pub fn custom(
        alpha: f64,
        prefactor: f64,
        law: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    ) -> Result<Self> {
        if alpha <= 0.0 || prefactor <= 0.0 {
            return Err(Error::OutOfRange(
                "dispersion requires alpha > 0 and prefactor > 0".into(),
            ));
        }
        Ok(DispersionLaw {
            alpha,
            prefactor,
            form: DispersionForm::Custom(law),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn is_pure_power(&self) -> bool {
        matches!(self.form, DispersionForm::PurePower)
    }

    pub fn energy(&self, k: f64) -> f64 {
        let k = k.abs();
        match &self.form {
            DispersionForm::PurePower => self.prefactor * k.powf(self.alpha),
            DispersionForm::Custom(f) => f(k),
        }
    }
}

/// Complex spectral weight of the singular branch.
#[derive(Clone)]
pub enum SpectralWeight {
    Constant(C64),
    Radial(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl SpectralWeight {
    pub fn constant_real(v: f64) -> Self {
        SpectralWeight::Constant(C64::new(v, 0.0))
    }

    pub fn eval(&self, k: f64) -> C64 {
        match self {
            SpectralWeight::Constant(c) => *c,
            SpectralWeight::Radial(f) => f(k.abs()),
        }
    }
}

/// Absolutely continuous part of the commutator spectrum, stored for ω ≥ 0
/// and extended oddly to ω < 0 (which is what keeps detailed balance exact).
#[derive(Clone)]
pub struct AcBackground {
    density: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub omega_extent: f64,
    pub k_extent: f64,
}

impl AcBackground {
    /// `density(ω ≥ 0, |k|) ≥ 0`, required to vanish at ω = 0 for continuity.
    pub fn new(
        density: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        omega_extent: f64,
        k_extent: f64,
    ) -> Self {
        AcBackground {
            density,
            omega_extent,
            k_extent,
        }
    }

    /// Gaussian bump centered at (ω₀, k₀) with width σ, multiplied by ω so
    /// the commutator density is odd-continuous through ω = 0.
    pub fn gaussian_bump(amplitude: f64, omega0: f64, k0: f64, sigma: f64) -> Self {
        let density = Arc::new(move |omega: f64, k: f64| {
            let d2 = (omega - omega0).powi(2) + (k - k0).powi(2);
            amplitude * omega * (-d2 / (2.0 * sigma * sigma)).exp()
        });
        AcBackground {
            density,
            omega_extent: omega0 + 8.0 * sigma,
            k_extent: k0 + 8.0 * sigma,
        }
    }

    /// Odd-in-ω commutator density at any ω.
    pub fn commutator_density(&self, omega: f64, k: f64) -> f64 {
        if omega >= 0.0 {
            (self.density)(omega, k.abs())
        } else {
            -(self.density)(-omega, k.abs())
        }
    }
}

/// One symbolic δ-branch of a spectrum: weight · δ(ω − frequency).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBranch {
    pub frequency: f64,
    pub weight: C64,
}

/// Spectrum at a point: a.c. density plus the two symbolic branches.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumAt {
    pub ac_density: f64,
    pub branches: [SpectralBranch; 2],
}

/// A quasifree thermal model.
#[derive(Clone)]
pub struct QuasifreeModel {
    dimension: usize,
    beta: f64,
    mu: f64,
    dispersion: DispersionLaw,
    weight: SpectralWeight,
    ac: Option<AcBackground>,
}

/// 1/(1 − e^{−x}) with the cancellation-free small-x path.
fn bose(x: f64) -> f64 {
    1.0 / (-(-x).exp_m1())
}

impl QuasifreeModel {
    pub fn new(
        dimension: usize,
        beta: f64,
        mu: f64,
        dispersion: DispersionLaw,
        weight: SpectralWeight,
    ) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        if beta <= 0.0 || !beta.is_finite() {
            return Err(Error::OutOfRange(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if dispersion.is_pure_power() && mu > 0.0 {
            // e(0) = 0 with μ > 0 puts the branch through ω = 0 at finite k;
            // that regime is excluded from the model class.
            return Err(Error::SingularPoint(format!(
                "pure-power dispersion with mu = {mu} > 0 crosses e(k) = mu"
            )));
        }
        Ok(QuasifreeModel {
            dimension,
            beta,
            mu,
            dispersion,
            weight,
            ac: None,
        })
    }

    /// Critical (μ = 0) pure-power model: the workhorse of the exponent runs.
    pub fn critical_pure_power(
        dimension: usize,
        beta: f64,
        alpha: f64,
        prefactor: f64,
        weight: SpectralWeight,
    ) -> Result<Self> {
        Self::new(
            dimension,
            beta,
            0.0,
            DispersionLaw::pure_power(alpha, prefactor)?,
            weight,
        )
    }

    pub fn with_ac_background(mut self, ac: AcBackground) -> Self {
        self.ac = Some(ac);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dispersion(&self) -> &DispersionLaw {
        &self.dispersion
    }

    pub fn ac_background(&self) -> Option<&AcBackground> {
        self.ac.as_ref()
    }

    pub fn is_critical(&self) -> bool {
        self.mu == 0.0
    }

    /// True only for the exactly-zero constant weight with no a.c. part.
    pub fn is_identically_zero(&self) -> bool {
        matches!(&self.weight, SpectralWeight::Constant(c) if c.norm() == 0.0) && self.ac.is_none()
    }

    pub fn energy(&self, k: f64) -> f64 {
        self.dispersion.energy(k)
    }

    /// Branch frequency ε(k) = e(k) − μ.
    pub fn branch_frequency(&self, k: f64) -> f64 {
        self.energy(k) - self.mu
    }

    /// Bare spectral weight j(k).
    pub fn j_weight(&self, k: f64) -> C64 {
        self.weight.eval(k)
    }

    /// J₊(k) = (1 − e^{−β(e(k)−μ)})⁻¹ j(k). Errors on the Bose pole e(k) = μ.
    pub fn j_plus(&self, k_radius: f64) -> Result<C64> {
        let eps = self.branch_frequency(k_radius);
        if eps == 0.0 {
            return Err(Error::SingularPoint(format!(
                "Bose factor pole: e(k) = mu at |k| = {k_radius}"
            )));
        }
        Ok(self.j_weight(k_radius) * bose(self.beta * eps))
    }

    /// J₋(k) = e^{−β(e(k)−μ)} · conj(J₊(k)).
    pub fn j_minus(&self, k_radius: f64) -> Result<C64> {
        let eps = self.branch_frequency(k_radius);
        let jp = self.j_plus(k_radius)?;
        Ok(jp.conj() * (-self.beta * eps).exp())
    }

    /// Branch combination J₊ e^{−iεt} + J₋ e^{+iεt} at a point.
    pub fn branch_sum(&self, k_radius: f64, t: f64) -> Result<C64> {
        let eps = self.branch_frequency(k_radius);
        let jp = self.j_plus(k_radius)?;
        let jm = jp.conj() * (-self.beta * eps).exp();
        let phase = C64::new((eps * t).cos(), -(eps * t).sin());
        Ok(jp * phase + jm * phase.conj())
    }

    /// Two-point spectrum at (ω, k): a.c. density (1−e^{−βω})⁻¹ ĉ_ac plus the
    /// two symbolic branches. ω = 0 is a pole of the a.c. prefactor and is
    /// rejected.
    pub fn two_point_spectrum(&self, omega: f64, k_radius: f64) -> Result<SpectrumAt> {
        if omega == 0.0 {
            return Err(Error::SingularPoint(
                "two_point_spectrum: a.c. density undefined at omega = 0".into(),
            ));
        }
        let ac_density = match &self.ac {
            Some(ac) => bose(self.beta * omega) * ac.commutator_density(omega, k_radius),
            None => 0.0,
        };
        let eps = self.branch_frequency(k_radius);
        let jp = self.j_plus(k_radius)?;
        let jm = jp.conj() * (-self.beta * eps).exp();
        Ok(SpectrumAt {
            ac_density,
            branches: [
                SpectralBranch {
                    frequency: eps,
                    weight: jp,
                },
                SpectralBranch {
                    frequency: -eps,
                    weight: jm,
                },
            ],
        })
    }

    /// Commutator spectrum: a.c. part (1−e^{−βω})·F̂_ac and branch weights
    /// (1−e^{−βε})·J₊ = j(k) at +ε and −(1−e^{−βε})·conj(J₊) = −conj j(k) at
    /// −ε. Computed through the β-carrying route so the β-independence of
    /// the result is a real float-level check, not a tautology.
    pub fn commutator_spectrum(&self, omega: f64, k_radius: f64) -> Result<SpectrumAt> {
        let ac_density = match &self.ac {
            Some(ac) if omega != 0.0 => {
                let f_ac = bose(self.beta * omega) * ac.commutator_density(omega, k_radius);
                -(-self.beta * omega).exp_m1() * f_ac
            }
            _ => 0.0,
        };
        let eps = self.branch_frequency(k_radius);
        let jp = self.j_plus(k_radius)?;
        let depletion = -(-self.beta * eps).exp_m1(); // 1 − e^{−βε}
        Ok(SpectrumAt {
            ac_density,
            branches: [
                SpectralBranch {
                    frequency: eps,
                    weight: jp * depletion,
                },
                SpectralBranch {
                    frequency: -eps,
                    weight: -(jp.conj() * depletion),
                },
            ],
        })
    }

    /// Detailed-balance residual at (ω, k): max deviation over the a.c.
    /// density relations Re F̂(−ω,−k) = e^{−βω} Re F̂(ω,k),
    /// Im F̂(−ω,−k) = −e^{−βω} Im F̂(ω,k), and the branch-weight analogues.
    pub fn detailed_balance_residual(&self, omega: f64, k_radius: f64) -> Result<f64> {
        if omega == 0.0 {
            return Err(Error::SingularPoint(
                "detailed balance residual undefined at omega = 0".into(),
            ));
        }
        let mut worst: f64 = 0.0;
        if let Some(ac) = &self.ac {
            let fwd = bose(self.beta * omega) * ac.commutator_density(omega, k_radius);
            let bwd = bose(-self.beta * omega) * ac.commutator_density(-omega, -k_radius);
            worst = worst.max((bwd - (-self.beta * omega).exp() * fwd).abs());
        }
        let jp = self.j_plus(k_radius)?;
        let jm = self.j_minus(k_radius)?;
        let boltz = (-self.beta * self.branch_frequency(k_radius)).exp();
        worst = worst.max(branch_detailed_balance_residual(jp, jm, boltz));
        Ok(worst)
    }

    /// Model for the time-derivative observable ∂_t A: the branch weight
    /// picks up the factor ω² = (e(k) − μ)².
    pub fn derivative_observable(&self) -> QuasifreeModel {
        let disp = self.dispersion.clone();
        let mu = self.mu;
        let base = self.weight.clone();
        let weight = SpectralWeight::Radial(Arc::new(move |k: f64| {
            let eps = disp.energy(k) - mu;
            base.eval(k) * (eps * eps)
        }));
        QuasifreeModel {
            weight,
            ..self.clone()
        }
    }

    /// IR classification of the radial branch integral near k = 0 for
    /// critical pure-power models: divergent when n ≤ α with j(0) ≠ 0 (the
    /// equal-time integral then diverges). Otherwise returns the substitution
    /// exponent q = 1/(n−α) with which k = v^q bounds the integrand, or None
    /// when no substitution is needed.
    pub fn ir_substitution(&self) -> Result<Option<f64>> {
        if !self.is_critical() || !self.dispersion.is_pure_power() {
            return Ok(None);
        }
        let j0 = self.j_weight(1e-9);
        if j0.norm() < 1e-300 {
            return Ok(None);
        }
        let n = self.dimension as f64;
        let alpha = self.dispersion.alpha;
        if n - alpha <= 0.0 {
            return Err(Error::DivergentIntegral(format!(
                "equal-time branch integral diverges at k = 0: n = {n}, alpha = {alpha}, j(0) != 0"
            )));
        }
        Ok(Some(1.0 / (n - alpha)))
    }

    /// Position/time correlation
    /// `F(y,t) = (2π)⁻ⁿ ∫ e^{ik·y} [J₊ e^{−iεt} + J₋ e^{+iεt}] dⁿk` + a.c.
    pub fn position_time_correlation(&self, y: &[f64], t: f64) -> Result<C64> {
        if y.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: y.len(),
            });
        }
        let y_radius = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n = self.dimension;
        let norm_const = sphere_area(n) / (2.0 * std::f64::consts::PI).powi(n as i32);

        // Identically-zero model short-circuit.
        if self.is_identically_zero() {
            return Ok(C64::new(0.0, 0.0));
        }

        let k_uv = self.branch_uv_cutoff()?;
        let sub = self.ir_substitution()?;
        let integrand = |k: f64| -> C64 {
            if k == 0.0 {
                return C64::new(0.0, 0.0);
            }
            match self.branch_sum(k, t) {
                Ok(b) => b * (angular_kernel(n, k * y_radius) * k.powi(n as i32 - 1)),
                // isolated pole has measure zero under the substitution grids
                Err(_) => C64::new(0.0, 0.0),
            }
        };

        let opts = QuadOpts {
            max_panels: 60_000,
            ..QuadOpts::default()
        };
        let k_break = 1.0f64.min(k_uv);
        let head = match sub {
            Some(q) => {
                // k = v^q; dk = q v^{q−1} dv.
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
        // Log-spaced seed panels out to the UV cutoff.
        let mut cuts = Vec::new();
        let mut c = k_break * 2.0;
        while c < k_uv {
            cuts.push(c);
            c *= 2.0;
        }
        let tail = quad::integrate_with_breakpoints(integrand, k_break, k_uv, &cuts, &opts);
        if !head.converged || !tail.converged {
            return Err(Error::QuadratureNonConvergence {
                achieved: head.abs_error + tail.abs_error,
                requested: opts.tol_abs,
            });
        }

        let mut total = (head.value + tail.value) * norm_const;
        if let Some(ac) = &self.ac {
            total += self.ac_position_time(ac, y_radius, t);
        }
        Ok(total)
    }

    /// UV cutoff for the bare branch integral: doubling shells of
    /// ∫ kⁿ⁻¹ (|J₊|+|J₋|) dk must decay; constant-weight models never decay
    /// and are reported as divergent.
    fn branch_uv_cutoff(&self) -> Result<f64> {
        let n = self.dimension as i32;
        let opts = QuadOpts::with_tols(1e-12, 1e-8);
        let mass = |k: f64| -> f64 {
            let eps = self.branch_frequency(k);
            if eps == 0.0 {
                return 0.0;
            }
            let jp_norm = self.j_weight(k).norm() * bose(self.beta * eps).abs();
            let jm_norm = jp_norm * (-self.beta * eps).exp();
            (jp_norm + jm_norm) * k.powi(n - 1)
        };
        let head = quad::integrate(mass, 0.5, 1.0, &opts).value.abs();
        let mut scale = head.max(1e-12);
        let mut lo = 1.0f64;
        let mut quiet = 0;
        for _ in 0..40 {
            let hi = lo * 2.0;
            let shell = quad::integrate(mass, lo, hi, &opts).value.abs();
            scale = scale.max(shell);
            if shell <= 1e-12 * scale.max(1.0) {
                quiet += 1;
                if quiet == 2 {
                    return Ok(hi);
                }
            } else {
                quiet = 0;
            }
            lo = hi;
        }
        Err(Error::DivergentIntegral(
            "branch weights are not integrable at large k (equal-time integral diverges)".into(),
        ))
    }

    fn ac_position_time(&self, ac: &AcBackground, y_radius: f64, t: f64) -> C64 {
        let n = self.dimension;
        let norm_const = sphere_area(n) / (2.0 * std::f64::consts::PI).powi(n as i32);
        let beta = self.beta;
        let opts = QuadOpts::with_tols(1e-11, 1e-9);
        let omega_integral = |k: f64| -> C64 {
            let f = |w: f64| -> C64 {
                if w == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let density = bose(beta * w) * ac.commutator_density(w, k);
                C64::new((w * t).cos(), -(w * t).sin()) * density
            };
            let w_max = ac.omega_extent;
            quad::integrate_with_breakpoints(f, -w_max, w_max, &[0.0], &opts).value
        };
        let outer = quad::integrate(
            |k: f64| omega_integral(k) * (angular_kernel(n, k * y_radius) * k.powi(n as i32 - 1)),
            0.0,
            ac.k_extent,
            &opts,
        );
        outer.value * norm_const
    }
}

/// Branch-weight detailed-balance residual given J₊, J₋ and the Boltzmann
/// factor e^{−βε}: max of |Re J₋ − b·Re J₊| and |Im J₋ + b·Im J₊|.
pub fn branch_detailed_balance_residual(j_plus: C64, j_minus: C64, boltzmann: f64) -> f64 {
    let re = (j_minus.re - boltzmann * j_plus.re).abs();
    let im = (j_minus.im + boltzmann * j_plus.im).abs();
    re.max(im)
}

/// Radial phase kernel of the n-dimensional Fourier transform of a radial
/// function: cos(kr) for n=1, J₀(kr) for n=2, sin(kr)/(kr) for n=3.
pub fn angular_kernel(n: usize, kr: f64) -> f64 {
    match n {
        1 => kr.cos(),
        2 => bessel_j0(kr),
        3 => {
            if kr.abs() < 1e-8 {
                1.0 - kr * kr / 6.0
            } else {
                kr.sin() / kr
            }
        }
        _ => panic!("angular_kernel: unsupported dimension {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normal_model_n1() -> QuasifreeModel {
        QuasifreeModel::new(
            1,
            1.0,
            -1.0,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::constant_real(1.0),
        )
        .unwrap()
    }

    #[test]
    fn j_plus_at_origin_matches_arithmetic() {
        let m = normal_model_n1();
        // β=1, μ=−1, e(0)=0: J₊(0) = (1 − e^{−1})⁻¹
        let expect = 1.0 / (1.0 - (-1.0f64).exp());
        assert_relative_eq!(m.j_plus(0.0).unwrap().re, expect, epsilon = 1e-12);
        assert_relative_eq!(expect, 1.5819767068693265, epsilon = 1e-12);
    }

    #[test]
    fn large_beta_limit_is_bare_weight() {
        let m = QuasifreeModel::new(
            1,
            1e6,
            -1.0,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::constant_real(0.7),
        )
        .unwrap();
        assert_relative_eq!(m.j_plus(1.0).unwrap().re, 0.7, max_relative = 1e-12);
    }

    #[test]
    fn critical_small_k_divergence_law() {
        // μ=0: J₊(k)·k^α → j(0)/(β·prefactor), within 1% at k = 1e−4
        let beta = 0.7;
        let pref = 1.3;
        let m = QuasifreeModel::critical_pure_power(
            1,
            beta,
            0.5,
            pref,
            SpectralWeight::constant_real(2.0),
        )
        .unwrap();
        let k: f64 = 1e-4;
        let v = m.j_plus(k).unwrap().re * k.powf(0.5);
        assert_relative_eq!(v, 2.0 / (beta * pref), max_relative = 1e-2);
    }

    #[test]
    fn j_minus_relations() {
        let m = normal_model_n1();
        let k = 0.8;
        let eps = m.branch_frequency(k);
        let jp = m.j_plus(k).unwrap();
        let jm = m.j_minus(k).unwrap();
        // real j: J₋/J₊ = e^{−βε}
        assert_relative_eq!(jm.re / jp.re, (-eps).exp(), epsilon = 1e-13);

        // β(e−μ) = ln 2 → J₋ = J₊ / 2
        let m2 = QuasifreeModel::new(
            1,
            1.0,
            -(2.0f64.ln()),
            DispersionLaw::custom(1.0, 1.0, Arc::new(|_| 0.0)).unwrap(),
            SpectralWeight::constant_real(1.0),
        )
        .unwrap();
        let jp2 = m2.j_plus(1.0).unwrap();
        let jm2 = m2.j_minus(1.0).unwrap();
        assert_relative_eq!(jm2.re, jp2.re / 2.0, epsilon = 1e-13);

        // complex j = i: verify against the direct formula
        let m3 = QuasifreeModel::new(
            1,
            2.0,
            -0.5,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::Constant(C64::new(0.0, 1.0)),
        )
        .unwrap();
        let k = 1.3;
        let x = 2.0 * m3.branch_frequency(k);
        let jp3 = m3.j_plus(k).unwrap();
        let jm3 = m3.j_minus(k).unwrap();
        let expect_p = C64::new(0.0, 1.0) / (1.0 - (-x).exp());
        assert!((jp3 - expect_p).norm() < 1e-13);
        assert!((jm3 - expect_p.conj() * (-x).exp()).norm() < 1e-13);
    }

    #[test]
    fn bose_pole_is_reported() {
        let m = QuasifreeModel::new(
            1,
            1.0,
            0.0,
            DispersionLaw::pure_power(1.0, 1.0).unwrap(),
            SpectralWeight::constant_real(1.0),
        )
        .unwrap();
        assert!(matches!(m.j_plus(0.0), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn positive_mu_with_gapless_dispersion_rejected() {
        assert!(matches!(
            QuasifreeModel::new(
                1,
                1.0,
                0.5,
                DispersionLaw::pure_power(2.0, 1.0).unwrap(),
                SpectralWeight::constant_real(1.0),
            ),
            Err(Error::SingularPoint(_))
        ));
    }

    #[test]
    fn spectrum_branches_sit_at_dispersion_frequencies() {
        let m = normal_model_n1();
        let k = 0.6;
        let s = m.two_point_spectrum(0.7, k).unwrap();
        let eps = m.branch_frequency(k);
        assert_relative_eq!(s.branches[0].frequency, eps);
        assert_relative_eq!(s.branches[1].frequency, -eps);
        assert_eq!(s.ac_density, 0.0);

        // β=2, e−μ=1: weight ratio J₋/J₊ = e^{−2} for real j
        let m2 = QuasifreeModel::new(
            1,
            2.0,
            -1.0,
            DispersionLaw::custom(1.0, 1.0, Arc::new(|_| 0.0)).unwrap(),
            SpectralWeight::constant_real(1.0),
        )
        .unwrap();
        let s2 = m2.two_point_spectrum(0.3, 1.0).unwrap();
        assert_relative_eq!(
            s2.branches[1].weight.re / s2.branches[0].weight.re,
            (-2.0f64).exp(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn ac_density_rejects_omega_zero() {
        let m = normal_model_n1();
        assert!(matches!(
            m.two_point_spectrum(0.0, 0.5),
            Err(Error::SingularPoint(_))
        ));
    }

    #[test]
    fn commutator_weights_are_bare_j_and_beta_free() {
        let mk = |beta: f64| {
            QuasifreeModel::new(
                2,
                beta,
                -0.3,
                DispersionLaw::pure_power(1.0, 1.0).unwrap(),
                SpectralWeight::Constant(C64::new(0.8, 0.2)),
            )
            .unwrap()
            .with_ac_background(AcBackground::gaussian_bump(0.4, 1.0, 1.0, 0.5))
        };
        let m1 = mk(0.5);
        let m2 = mk(2.0);
        for &(w, k) in &[(0.7, 0.4), (1.5, 1.1), (-0.9, 2.0)] {
            let c1 = m1.commutator_spectrum(w, k).unwrap();
            let c2 = m2.commutator_spectrum(w, k).unwrap();
            assert!((c1.branches[0].weight - c2.branches[0].weight).norm() <= 1e-12);
            assert!((c1.branches[1].weight - c2.branches[1].weight).norm() <= 1e-12);
            assert!((c1.ac_density - c2.ac_density).abs() <= 1e-12);
            // weight at +ε equals j(k); at −ε equals −conj j(k)
            assert!((c1.branches[0].weight - C64::new(0.8, 0.2)).norm() <= 1e-12);
            assert!((c1.branches[1].weight - C64::new(-0.8, 0.2)).norm() <= 1e-12);
        }
    }

    #[test]
    fn detailed_balance_holds_for_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..5 {
            let n = rng.gen_range(1..=3usize);
            let beta = rng.gen_range(0.3..3.0);
            let mu = -rng.gen_range(0.1..2.0);
            let alpha = rng.gen_range(0.5..2.5);
            let pref = rng.gen_range(0.5..2.0);
            let j = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let mut m = QuasifreeModel::new(
                n,
                beta,
                mu,
                DispersionLaw::pure_power(alpha, pref).unwrap(),
                SpectralWeight::Constant(j),
            )
            .unwrap();
            if trial % 2 == 0 {
                m = m.with_ac_background(AcBackground::gaussian_bump(0.7, 1.2, 0.8, 0.6));
            }
            for i in 0..20 {
                for jdx in 0..20 {
                    let w = -3.0 + 6.0 * (i as f64 + 0.5) / 20.0;
                    let k = 0.05 + 2.5 * jdx as f64 / 20.0;
                    let r = m.detailed_balance_residual(w, k).unwrap();
                    assert!(r <= 1e-12, "residual {r:.2e} at (ω={w}, k={k})");
                }
            }
        }
    }

    #[test]
    fn corrupted_j_minus_breaks_detailed_balance() {
        let m = normal_model_n1();
        let k = 0.9;
        let jp = m.j_plus(k).unwrap();
        let jm = m.j_minus(k).unwrap();
        let boltz = (-m.beta() * m.branch_frequency(k)).exp();
        let clean = branch_detailed_balance_residual(jp, jm, boltz);
        assert!(clean <= 1e-14);
        let corrupted = branch_detailed_balance_residual(jp, jm * 1.1, boltz);
        assert_relative_eq!(corrupted, 0.1 * jm.norm(), max_relative = 1e-10);
    }

    #[test]
    fn ac_detailed_balance_continuous_at_zero() {
        // ĉ(0,k) = 0 keeps the a.c. density continuous through ω = 0
        let m =
            normal_model_n1().with_ac_background(AcBackground::gaussian_bump(1.0, 0.0, 0.5, 0.7));
        let k = 0.5;
        let eps = 1e-6;
        let s_plus = m.two_point_spectrum(eps, k).unwrap().ac_density;
        let s_minus = m.two_point_spectrum(-eps, k).unwrap().ac_density;
        assert_relative_eq!(s_plus, s_minus, max_relative = 1e-4);
        assert!(s_plus.is_finite() && s_plus.abs() > 0.0);
    }

    #[test]
    fn position_time_zero_weight_is_zero() {
        let m = QuasifreeModel::new(
            1,
            1.0,
            -1.0,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::constant_real(0.0),
        )
        .unwrap();
        assert_eq!(
            m.position_time_correlation(&[0.3], 0.7).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn position_time_against_dense_grid_oracle() {
        // decaying weight keeps the equal-time integral convergent
        let m = QuasifreeModel::new(
            1,
            1.0,
            -1.0,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::Radial(Arc::new(|k| C64::new((-k * k / 2.0).exp(), 0.0))),
        )
        .unwrap();
        let f00 = m.position_time_correlation(&[0.0], 0.0).unwrap();
        // oracle: fine trapezoid over the coth-weighted branch sum / π
        let oracle = quad::trapezoid(
            |k| {
                let x = k * k + 1.0; // β(e−μ) with β=1, μ=−1
                ((-k * k / 2.0).exp()) * ((1.0 + (-x).exp()) / (1.0 - (-x).exp()))
            },
            0.0,
            40.0,
            4_000_000,
        ) / std::f64::consts::PI;
        assert_relative_eq!(f00.re, oracle, max_relative = 1e-6);
        assert_abs_diff_eq!(f00.im, 0.0, epsilon = 1e-10);
        assert!(f00.re > 0.0);
    }

    #[test]
    fn position_time_conjugation_symmetry() {
        // real weight: F(−y, −t) = conj F(y, t)
        let m = QuasifreeModel::new(
            1,
            0.8,
            -0.6,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::Radial(Arc::new(|k| C64::new((-(k - 0.4) * (k - 0.4)).exp(), 0.0))),
        )
        .unwrap();
        let (y, t) = (0.9, 1.3);
        let fwd = m.position_time_correlation(&[y], t).unwrap();
        let bwd = m.position_time_correlation(&[-y], -t).unwrap();
        assert!((bwd - fwd.conj()).norm() <= 1e-8, "{bwd:?} vs {fwd:?}");
    }

    #[test]
    fn constant_weight_equal_time_flagged_divergent() {
        let m = normal_model_n1();
        assert!(matches!(
            m.position_time_correlation(&[0.0], 0.0),
            Err(Error::DivergentIntegral(_))
        ));
    }

    #[test]
    fn critical_ir_divergence_flagged_when_n_le_alpha() {
        for &(n, alpha) in &[(1usize, 1.0f64), (1, 1.5), (2, 2.5)] {
            let m = QuasifreeModel::critical_pure_power(
                n,
                1.0,
                alpha,
                1.0,
                SpectralWeight::constant_real(1.0),
            )
            .unwrap();
            assert!(
                matches!(m.ir_substitution(), Err(Error::DivergentIntegral(_))),
                "(n, alpha) = ({n}, {alpha}) must be flagged divergent"
            );
        }
        for &(n, alpha) in &[(1usize, 0.5f64), (2, 1.0), (3, 2.0)] {
            let m = QuasifreeModel::critical_pure_power(
                n,
                1.0,
                alpha,
                1.0,
                SpectralWeight::constant_real(1.0),
            )
            .unwrap();
            assert!(m.ir_substitution().unwrap().is_some());
        }
    }

    #[test]
    fn positivity_of_equal_time_autocorrelation() {
        // real j ≥ 0, μ ≤ 0: F(0,0) real and ≥ 0
        let m = QuasifreeModel::new(
            2,
            1.5,
            -0.4,
            DispersionLaw::pure_power(2.0, 1.0).unwrap(),
            SpectralWeight::Radial(Arc::new(|k| C64::new((-k).exp(), 0.0))),
        )
        .unwrap();
        let f = m.position_time_correlation(&[0.0, 0.0], 0.0).unwrap();
        assert!(f.re >= 0.0);
        assert_abs_diff_eq!(f.im, 0.0, epsilon = 1e-9);
    }
}
