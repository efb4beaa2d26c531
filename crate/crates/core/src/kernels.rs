//! Averaging kernels for block observables.
//!
//! Two cutoff families: a smooth radial bump (1 on |x| ≤ 1, 0 on |x| ≥ 2,
//! C^∞ in between) and the sharp indicator of the unit ball. The module
//! provides their Fourier transforms, the scaling identity
//! `FT[f(·/R)](k) = Rⁿ f̂(Rk)`, radial self-convolutions, and the sharp
//! indicator's convolution identity `χ̂ = (2π)⁻ⁿ (χ̂ ∗ χ̂)`.
//!
//! Fourier convention throughout the crate: `f̂(k) = ∫ f(x) e^{−ik·x} dⁿx`.
//! All radial transforms reduce to 1-D integrals with the angular kernels
//! cos(kr) (n=1), J₀(kr) (n=2) and sin(kr)/(kr) (n=3).

use crate::quad::{self, QuadOpts};
use crate::special::{bessel_j0, bessel_j1};
use crate::table::RadialTable;
use crate::{Error, Result};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

/// Cutoff family of an averaging kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutoffType {
    /// C^∞ bump: 1 on |x| ≤ 1, 0 on |x| ≥ 2.
    Smooth,
    /// Indicator of the closed unit ball.
    Sharp,
}

/// Parameterization of the smooth transition on 1 < |x| < 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SmoothProfile {
    /// g(2−s) / (g(2−s) + g(s−1)) with g(t) = exp(−1/t): the standard C^∞
    /// partition-of-unity step.
    #[default]
    MollifierStep,
    /// (1 + cos π(s−1)) / 2: a C¹ step, kept as an alternative profile for
    /// profile-insensitivity checks.
    CosineStep,
}

/// A radial averaging kernel in dimension n ∈ {1, 2, 3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AveragingKernel {
    cutoff: CutoffType,
    dimension: usize,
    profile: SmoothProfile,
}

fn check_dimension(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

impl AveragingKernel {
    pub fn smooth(dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        Ok(AveragingKernel {
            cutoff: CutoffType::Smooth,
            dimension,
            profile: SmoothProfile::MollifierStep,
        })
    }

    pub fn sharp(dimension: usize) -> Result<Self> {
        check_dimension(dimension)?;
        Ok(AveragingKernel {
            cutoff: CutoffType::Sharp,
            dimension,
            profile: SmoothProfile::MollifierStep,
        })
    }

    pub fn smooth_with_profile(dimension: usize, profile: SmoothProfile) -> Result<Self> {
        check_dimension(dimension)?;
        Ok(AveragingKernel {
            cutoff: CutoffType::Smooth,
            dimension,
            profile,
        })
    }

    pub fn cutoff(&self) -> CutoffType {
        self.cutoff
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Radius of the closed support ball: 2 for smooth, 1 for sharp.
    pub fn support_radius(&self) -> f64 {
        match self.cutoff {
            CutoffType::Smooth => 2.0,
            CutoffType::Sharp => 1.0,
        }
    }

    /// Radial profile value at s = |x| ≥ 0. Exactly 1 on the plateau and
    /// exactly 0 beyond the support radius.
    pub fn profile_value(&self, s: f64) -> f64 {
        match self.cutoff {
            CutoffType::Sharp => {
                if s <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffType::Smooth => {
                if s <= 1.0 {
                    1.0
                } else if s >= 2.0 {
                    0.0
                } else {
                    match self.profile {
                        SmoothProfile::MollifierStep => {
                            let a = mollifier_g(2.0 - s);
                            let b = mollifier_g(s - 1.0);
                            a / (a + b)
                        }
                        SmoothProfile::CosineStep => 0.5 * (1.0 + (PI * (s - 1.0)).cos()),
                    }
                }
            }
        }
    }

    /// Kernel value at a point of the kernel's dimension.
    pub fn eval_kernel(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(self.profile_value(norm(x)))
    }

    /// n-dimensional Fourier transform at radial wavenumber `k_radius ≥ 0`.
    ///
    /// Sharp n=1 and n=3 use the closed forms; smooth kernels and sharp n=2
    /// are computed by converged radial quadrature.
    pub fn kernel_fourier(&self, k_radius: f64) -> Result<f64> {
        if !k_radius.is_finite() {
            return Err(Error::OutOfRange(format!(
                "kernel_fourier: non-finite k = {k_radius}"
            )));
        }
        let k = k_radius.abs();
        match self.cutoff {
            CutoffType::Sharp if self.dimension != 2 => sharp_ball_fourier(self.dimension, k),
            _ => Ok(fourier_radial(
                |r| self.profile_value(r),
                self.support_radius(),
                self.dimension,
                k,
            )),
        }
    }

    /// Normalized residual of the scaling identity
    /// `|FT[f(·/R)](k) − Rⁿ f̂(Rk)| / (1 + Rⁿ |f̂(Rk)|)`.
    pub fn verify_scaling_identity(&self, scale: f64, k_radius: f64) -> Result<f64> {
        if scale <= 0.0 {
            return Err(Error::OutOfRange(format!(
                "verify_scaling_identity: R must be positive, got {scale}"
            )));
        }
        let lhs = fourier_radial(
            |r| self.profile_value(r / scale),
            self.support_radius() * scale,
            self.dimension,
            k_radius.abs(),
        );
        let rhs = scale.powi(self.dimension as i32) * self.kernel_fourier(scale * k_radius)?;
        Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
    }

    /// Self-convolution `(f∗f)(y) = ∫ f(y+x) f(x) dⁿx` at a point `y`.
    pub fn kernel_self_convolution(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: y.len(),
            });
        }
        Ok(self.self_convolution_radial(norm(y)))
    }

    /// Radial self-convolution; valid because `(f∗f)` of a radial kernel is
    /// radial. Exactly 0 beyond twice the support radius.
    pub fn self_convolution_radial(&self, y: f64) -> f64 {
        let s = self.support_radius();
        let y = y.abs();
        if y > 2.0 * s {
            return 0.0;
        }
        if self.cutoff == CutoffType::Sharp && self.dimension == 1 {
            return (2.0 - y).max(0.0);
        }
        let opts = QuadOpts::default();
        let p = |r: f64| self.profile_value(r);
        match self.dimension {
            1 => {
                // ∫_{-s}^{s-y} f(y+x) f(x) dx
                quad::integrate(|x: f64| p((y + x).abs()) * p(x.abs()), -s, s - y, &opts).value
            }
            2 => {
                // polar: ∫ r f(r) ∫_0^{2π} f(√(r²+y²+2ry cosθ)) dθ dr
                let inner = |r: f64| -> f64 {
                    if (r - y).abs() > s {
                        return 0.0;
                    }
                    quad::integrate(
                        |th: f64| {
                            let arg = (r * r + y * y + 2.0 * r * y * th.cos()).max(0.0).sqrt();
                            p(arg)
                        },
                        0.0,
                        PI,
                        &QuadOpts::with_tols(1e-12, 1e-10),
                    )
                    .value
                        * 2.0
                };
                quad::integrate(|r: f64| r * p(r) * inner(r), 0.0, s, &opts).value
            }
            3 => {
                if y < 1e-12 {
                    // (f∗f)(0) = ∫ f² = 4π ∫ r² f(r)² dr
                    return 4.0
                        * PI
                        * quad::integrate(|r: f64| r * r * p(r) * p(r), 0.0, s, &opts).value;
                }
                // (2π/y) ∫ r f(r) [∫_{|r−y|}^{r+y} u f(u) du] dr
                let inner = |r: f64| -> f64 {
                    let lo = (r - y).abs().min(s);
                    let hi = (r + y).min(s);
                    if hi <= lo {
                        return 0.0;
                    }
                    quad::integrate(
                        |u: f64| u * p(u),
                        lo,
                        hi,
                        &QuadOpts::with_tols(1e-12, 1e-10),
                    )
                    .value
                };
                2.0 * PI / y * quad::integrate(|r: f64| r * p(r) * inner(r), 0.0, s, &opts).value
            }
            _ => unreachable!("dimension validated at construction"),
        }
    }
}

/// exp(−1/t) for t > 0, else 0.
fn mollifier_g(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Closed-form Fourier transform of the unit-ball indicator.
///
/// n=1: 2 sin k / k, n=2: 2π J₁(k)/k, n=3: 4π (sin k − k cos k)/k³.
pub fn sharp_ball_fourier(n: usize, k: f64) -> Result<f64> {
    check_dimension(n)?;
    let k = k.abs();
    Ok(match n {
        1 => {
            if k < 1e-8 {
                2.0 - k * k / 3.0
            } else {
                2.0 * k.sin() / k
            }
        }
        2 => {
            if k < 1e-8 {
                PI * (1.0 - k * k / 8.0)
            } else {
                2.0 * PI * bessel_j1(k) / k
            }
        }
        3 => {
            if k < 1e-4 {
                // series of 4π(sin k − k cos k)/k³
                4.0 * PI * (1.0 / 3.0 - k * k / 30.0 + k.powi(4) / 840.0)
            } else {
                4.0 * PI * (k.sin() - k * k.cos()) / (k * k * k)
            }
        }
        _ => unreachable!(),
    })
}

/// Radial Fourier transform of a radial profile supported on [0, support].
fn fourier_radial(profile: impl Fn(f64) -> f64, support: f64, n: usize, k: f64) -> f64 {
    let opts = QuadOpts::default();
    // Seed panel boundaries on the oscillation scale when k·support is large.
    let cuts = |period: f64| -> Vec<f64> {
        if period <= 0.0 || support / period < 4.0 {
            return Vec::new();
        }
        let mut v = Vec::new();
        let mut x = period;
        while x < support {
            v.push(x);
            x += period;
        }
        v
    };
    match n {
        1 => {
            let f = |r: f64| profile(r) * (k * r).cos();
            2.0 * quad::integrate_with_breakpoints(
                f,
                0.0,
                support,
                &cuts(PI / k.max(1e-300)),
                &opts,
            )
            .value
        }
        2 => {
            let f = |r: f64| profile(r) * bessel_j0(k * r) * r;
            2.0 * PI
                * quad::integrate_with_breakpoints(
                    f,
                    0.0,
                    support,
                    &cuts(PI / k.max(1e-300)),
                    &opts,
                )
                .value
        }
        3 => {
            if k < 1e-10 {
                4.0 * PI * quad::integrate(|r: f64| profile(r) * r * r, 0.0, support, &opts).value
            } else {
                let f = |r: f64| profile(r) * r * (k * r).sin();
                4.0 * PI / k
                    * quad::integrate_with_breakpoints(f, 0.0, support, &cuts(PI / k), &opts).value
            }
        }
        _ => unreachable!("dimension validated at construction"),
    }
}

/// Normalized residual of the sharp-ball convolution identity
/// `χ̂(k) = (2π)⁻ⁿ (χ̂ ∗ χ̂)(k)`, with the convolution computed by quadrature
/// over frequency space. Supported for n ∈ {1, 3} where χ̂ has closed form.
///
/// The integrand decays like 1/q² with a non-oscillating mean, so the range
/// is summed in half-period panels out to a cut Q and the exact tail of the
/// mean part is added analytically; the remaining oscillatory tail is O(Q⁻²).
pub fn sharp_convolution_identity_residual(n: usize, k_radius: f64) -> Result<f64> {
    let k = k_radius.abs();
    let conv = match n {
        1 => {
            let chi = |q: f64| sharp_ball_fourier(1, q).unwrap();
            let half_len = 6.0e3;
            let center = k / 2.0;
            let (a, b) = (center - half_len, center + half_len);
            let panels = ((b - a) / (PI / 2.0)).ceil() as usize;
            let bulk = quad::composite(|q: f64| chi(q) * chi(k - q), a, b, panels).value;
            // Exact tail of the non-oscillating mean of 4 sin q sin(k−q)/(q(k−q)):
            // density 2cos k/(q(q−k)) on each side, both tails equal by q ↦ k−q.
            let edge = b; // = k − a
            let dc_tail = if k.abs() < 1e-6 {
                2.0 * (2.0 / edge + k / (edge * edge))
            } else {
                -(4.0 * k.cos() / k) * (1.0 - k / edge).ln()
            };
            bulk + dc_tail
        }
        3 => {
            let chi3 = |q: f64| sharp_ball_fourier(3, q).unwrap();
            let cut = 3.0e3;
            if k < 1e-6 {
                // (χ̂∗χ̂)(0) = ∫ χ̂² d³q = 4π ∫ q² χ̂(q)² dq
                let bulk = quad::composite(
                    |q: f64| 4.0 * PI * q * q * chi3(q) * chi3(q),
                    0.0,
                    cut,
                    (cut / (PI / 2.0)).ceil() as usize,
                )
                .value;
                // mean of 4π·16π²[q²cos²q + sin²q − q sin 2q]/q⁴ → 32π³(1/q² + 1/q⁴)
                let dc_tail = 32.0 * PI.powi(3) * (1.0 / cut + 1.0 / (3.0 * cut.powi(3)));
                bulk + dc_tail
            } else {
                // radial reduction of the 3-D convolution of radial functions:
                // (F∗F)(k) = (2π/k) ∫ q F(q) [∫_{|q−k|}^{q+k} u F(u) du] dq,
                // and ∫ u χ̂₃(u) du = 4π (1 − sin u / u) in closed form.
                let sinc = |x: f64| {
                    if x.abs() < 1e-8 {
                        1.0 - x * x / 6.0
                    } else {
                        x.sin() / x
                    }
                };
                let h = |q: f64| -> f64 {
                    (2.0 * PI / k) * q * chi3(q) * 4.0 * PI * (sinc(q - k) - sinc(q + k))
                };
                let bulk = quad::composite(h, 0.0, cut, (cut / (PI / 2.0)).ceil() as usize).value;
                // non-oscillating mean of h for large q: 32π³ sin k / (k q²)
                let dc_tail = 32.0 * PI.powi(3) * k.sin() / (k * cut);
                bulk + dc_tail
            }
        }
        other => return Err(Error::UnsupportedDimension(other)),
    };
    let chi_k = sharp_ball_fourier(n, k)?;
    let lhs = chi_k;
    let rhs = conv / (2.0 * PI).powi(n as i32);
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
}

/// Cached Fourier-transform and self-convolution samples of a kernel.
///
/// The Fourier table extends to the wavenumber where |f̂| stays below
/// 1e−13·f̂(0); beyond it the transform is treated as zero. Sharp cutoffs
/// decay too slowly to tabulate and use their closed forms instead.
#[derive(Debug, Clone)]
pub struct KernelTransformTable {
    kernel: AveragingKernel,
    fourier: Option<RadialTable>,
    self_conv: RadialTable,
    fourier_zero: f64,
}

impl KernelTransformTable {
    pub fn build(kernel: &AveragingKernel) -> Result<Self> {
        let fourier_zero = kernel.kernel_fourier(0.0)?;
        let fourier = match kernel.cutoff {
            CutoffType::Sharp => None,
            CutoffType::Smooth => {
                let threshold = 1e-13 * fourier_zero.abs();
                // locate k_max: 40 consecutive coarse samples under threshold
                let coarse = 0.5;
                let mut k = 0.0;
                let mut run = 0;
                let mut k_max = 4000.0;
                while k < 4000.0 {
                    k += coarse;
                    if kernel.kernel_fourier(k)?.abs() < threshold {
                        run += 1;
                        if run == 40 {
                            k_max = k - 39.0 * coarse;
                            break;
                        }
                    } else {
                        run = 0;
                    }
                }
                let dk = 0.01;
                let len = (k_max / dk).ceil() as usize + 1;
                let mut values = Vec::with_capacity(len);
                for i in 0..len {
                    values.push(kernel.kernel_fourier(i as f64 * dk)?);
                }
                Some(RadialTable::from_values(0.0, dk, values))
            }
        };
        let s2 = 2.0 * kernel.support_radius();
        let self_conv = RadialTable::build(|y| kernel.self_convolution_radial(y), 0.0, s2, 1601);
        Ok(KernelTransformTable {
            kernel: *kernel,
            fourier,
            self_conv,
            fourier_zero,
        })
    }

    pub fn kernel(&self) -> &AveragingKernel {
        &self.kernel
    }

    /// f̂(|k|): interpolated for smooth kernels, closed form for sharp.
    pub fn fourier(&self, k: f64) -> f64 {
        let k = k.abs();
        match &self.fourier {
            Some(t) => {
                if k == 0.0 {
                    self.fourier_zero
                } else {
                    t.eval(k)
                }
            }
            None => sharp_ball_fourier(self.kernel.dimension, k).unwrap(),
        }
    }

    /// f̂(0) = ∫ f.
    pub fn fourier_zero(&self) -> f64 {
        self.fourier_zero
    }

    /// Wavenumber beyond which the tabulated transform is treated as zero;
    /// `None` for sharp kernels (closed-form, no truncation).
    pub fn fourier_cutoff(&self) -> Option<f64> {
        self.fourier.as_ref().map(|t| t.x_max())
    }

    /// Smallest wavenumber beyond which |f̂| stays under
    /// `rel_threshold`·|f̂(0)|. Used by deeply nested integrals where the
    /// full-precision cutoff would be wasteful.
    pub fn effective_cutoff(&self, rel_threshold: f64) -> Option<f64> {
        let t = self.fourier.as_ref()?;
        let bound = rel_threshold * self.fourier_zero.abs();
        let mut cut = t.x_max();
        for (k, v) in t.grid().collect::<Vec<_>>().into_iter().rev() {
            if v.abs() > bound {
                break;
            }
            cut = k;
        }
        Some(cut)
    }

    /// (f∗f)(|y|) from the sample table; exactly 0 beyond twice the support.
    pub fn self_convolution(&self, y: f64) -> f64 {
        let y = y.abs();
        if y >= 2.0 * self.kernel.support_radius() {
            return 0.0;
        }
        self.self_conv.eval(y)
    }
}

static TABLE_CACHE: Lazy<Mutex<HashMap<AveragingKernel, Arc<KernelTransformTable>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared, lazily-built transform table for a kernel.
pub fn transform_table(kernel: &AveragingKernel) -> Result<Arc<KernelTransformTable>> {
    let mut cache = TABLE_CACHE.lock().unwrap();
    if let Some(t) = cache.get(kernel) {
        return Ok(Arc::clone(t));
    }
    let t = Arc::new(KernelTransformTable::build(kernel)?);
    cache.insert(*kernel, Arc::clone(&t));
    Ok(t)
}

/// Real-space overlap data of a kernel-like profile: what the position-space
/// scaling pipelines actually consume. Any bounded, compactly supported
/// profile with nonzero integral qualifies; the self-convolution of a real
/// profile is automatically even, so a radial argument suffices.
#[derive(Clone)]
pub struct KernelOverlap {
    pub dimension: usize,
    /// (f∗f) vanishes beyond this radius.
    pub overlap_support: f64,
    pub self_conv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// ∫ f = f̂(0).
    pub kernel_integral: f64,
}

impl KernelOverlap {
    pub fn from_table(table: &Arc<KernelTransformTable>) -> Self {
        let t = Arc::clone(table);
        KernelOverlap {
            dimension: table.kernel().dimension(),
            overlap_support: 2.0 * table.kernel().support_radius(),
            kernel_integral: table.fourier_zero(),
            self_conv: Arc::new(move |y| t.self_convolution(y)),
        }
    }

    /// Overlap data for an arbitrary 1-D profile supported on [lo, hi],
    /// computed by direct quadrature of the autocorrelation integral. The
    /// overlap support of an asymmetric profile is the profile's total width.
    pub fn from_profile_1d(
        profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lo: f64,
        hi: f64,
    ) -> Self {
        let opts = QuadOpts::default();
        let integral = quad::integrate(|x: f64| profile(x), lo, hi, &opts).value;
        let width = hi - lo;
        KernelOverlap {
            dimension: 1,
            overlap_support: width,
            kernel_integral: integral,
            self_conv: Arc::new(move |y: f64| {
                let y = y.abs();
                if y >= width {
                    return 0.0;
                }
                quad::integrate(|x: f64| profile(y + x) * profile(x), lo, hi - y, &opts).value
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plateau_and_support() {
        let sm = AveragingKernel::smooth(1).unwrap();
        let sh = AveragingKernel::sharp(1).unwrap();
        assert_eq!(sm.eval_kernel(&[0.5]).unwrap(), 1.0);
        assert_eq!(sh.eval_kernel(&[1.5]).unwrap(), 0.0);
        assert_eq!(sh.eval_kernel(&[1.0]).unwrap(), 1.0);
        assert_eq!(sm.eval_kernel(&[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn smooth_transition_value_and_monotonicity() {
        let sm = AveragingKernel::smooth(1).unwrap();
        // mollifier step is symmetric about s = 1.5
        assert_relative_eq!(sm.profile_value(1.5), 0.5, epsilon = 1e-15);
        let mid = sm.profile_value(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        let mut prev = sm.profile_value(1.0);
        for i in 1..=100 {
            let s = 1.0 + i as f64 * 0.01;
            let v = sm.profile_value(s);
            assert!(v <= prev + 1e-15, "profile must decrease on (1,2)");
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn support_is_exact_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3usize {
            let sm = AveragingKernel::smooth(n).unwrap();
            let sh = AveragingKernel::sharp(n).unwrap();
            for _ in 0..1000 {
                // random point outside the support radius
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let len = norm(&dir).max(1e-9);
                let r_smooth = rng.gen_range(2.0..50.0_f64);
                let x: Vec<f64> = dir.iter().map(|d| d / len * r_smooth).collect();
                assert_eq!(sm.eval_kernel(&x).unwrap(), 0.0);
                let r_sharp = rng.gen_range(1.0 + 1e-12..50.0_f64);
                let x: Vec<f64> = dir.iter().map(|d| d / len * r_sharp).collect();
                assert_eq!(sh.eval_kernel(&x).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sm = AveragingKernel::smooth(2).unwrap();
        assert!(matches!(
            sm.eval_kernel(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            AveragingKernel::smooth(4),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn fourier_at_zero_is_volume_integral() {
        // Sharp: unit ball volume
        for n in 1..=3usize {
            let sh = AveragingKernel::sharp(n).unwrap();
            assert_relative_eq!(
                sh.kernel_fourier(0.0).unwrap(),
                crate::ball_volume(n),
                max_relative = 1e-10
            );
        }
        // Smooth n=1: 2·(1 + ∫_1^2 profile) = 3 by the step's symmetry
        let sm = AveragingKernel::smooth(1).unwrap();
        assert_relative_eq!(sm.kernel_fourier(0.0).unwrap(), 3.0, max_relative = 1e-10);
    }

    #[test]
    fn sharp_n3_closed_form_and_decay() {
        let sh = AveragingKernel::sharp(3).unwrap();
        for &k in &[0.3, 1.0, 4.0, 20.0] {
            let expect = 4.0 * PI * (f64::sin(k) - k * f64::cos(k)) / (k * k * k);
            assert_relative_eq!(sh.kernel_fourier(k).unwrap(), expect, max_relative = 1e-12);
        }
        // |χ̂(mπ)|·(mπ)² = 4π exactly: bounded and non-vanishing along k = mπ
        for m in 1..=50 {
            let k = m as f64 * PI;
            let v = sh.kernel_fourier(k).unwrap().abs() * k * k;
            assert_relative_eq!(v, 4.0 * PI, max_relative = 1e-9);
        }
    }

    #[test]
    fn sharp_n2_quadrature_matches_bessel_closed_form() {
        let sh = AveragingKernel::sharp(2).unwrap();
        for &k in &[0.5, 2.0, 7.3] {
            let quadrature = sh.kernel_fourier(k).unwrap();
            let closed = sharp_ball_fourier(2, k).unwrap();
            assert_relative_eq!(quadrature, closed, max_relative = 1e-8);
        }
    }

    #[test]
    fn smooth_fourier_against_trapezoid_oracle() {
        let sm = AveragingKernel::smooth(1).unwrap();
        let k = 1.0;
        let adaptive = sm.kernel_fourier(k).unwrap();
        let oracle =
            2.0 * quad::trapezoid(|r| sm.profile_value(r) * (k * r).cos(), 0.0, 2.0, 1 << 21);
        assert_relative_eq!(adaptive, oracle, max_relative = 1e-10);
    }

    #[test]
    fn scaling_identity_grid() {
        // R ∈ {2, 5, 10, 50} × log-spaced k: residual ≤ 1e−6
        let kernels = [
            AveragingKernel::smooth(1).unwrap(),
            AveragingKernel::sharp(1).unwrap(),
            AveragingKernel::smooth(3).unwrap(),
            AveragingKernel::sharp(3).unwrap(),
            AveragingKernel::smooth(2).unwrap(),
        ];
        for kern in &kernels {
            for &r in &[2.0, 5.0, 10.0, 50.0] {
                for i in 0..6 {
                    let k = 0.01 * 10f64.powf(i as f64 * 0.5);
                    let res = kern.verify_scaling_identity(r, k).unwrap();
                    assert!(
                        res <= 1e-6,
                        "scaling residual {res:.2e} for {kern:?} R={r} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn scaling_identity_trivial_at_r_one() {
        let sm = AveragingKernel::smooth(1).unwrap();
        assert!(sm.verify_scaling_identity(1.0, 0.7).unwrap() <= 1e-9);
    }

    #[test]
    fn sharp_n3_scaling_example() {
        let sh = AveragingKernel::sharp(3).unwrap();
        assert!(sh.verify_scaling_identity(5.0, 0.3).unwrap() <= 1e-8);
    }

    #[test]
    fn smooth_n1_scaling_example() {
        let sm = AveragingKernel::smooth(1).unwrap();
        assert!(sm.verify_scaling_identity(10.0, 0.2).unwrap() <= 1e-6);
    }

    #[test]
    fn sharp_1d_self_convolution_geometry() {
        let sh = AveragingKernel::sharp(1).unwrap();
        assert_relative_eq!(sh.kernel_self_convolution(&[0.0]).unwrap(), 2.0);
        assert_relative_eq!(sh.kernel_self_convolution(&[1.0]).unwrap(), 1.0);
        assert_eq!(sh.kernel_self_convolution(&[2.5]).unwrap(), 0.0);
    }

    #[test]
    fn self_convolution_even_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sm = AveragingKernel::smooth(1).unwrap();
        for _ in 0..20 {
            let y = rng.gen_range(0.0..4.5);
            let a = sm.kernel_self_convolution(&[y]).unwrap();
            let b = sm.kernel_self_convolution(&[-y]).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            assert!(a >= 0.0);
        }
    }

    #[test]
    fn smooth_3d_self_convolution_monte_carlo_oracle() {
        let sm = AveragingKernel::smooth(3).unwrap();
        let y = [0.7, 0.0, 0.0];
        let exact = sm.kernel_self_convolution(&y).unwrap();

        // Monte Carlo over the support ball |x| ≤ 2 of f(x), 10⁷ samples.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n_samples = 10_000_000usize;
        let side = 4.0; // cube [-2,2]³ covers the support
        let volume = side * side * side;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_samples {
            let x = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let shifted = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
            let v = sm.profile_value(norm(&shifted)) * sm.profile_value(norm(&x));
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n_samples as f64;
        let var = (sum_sq / n_samples as f64 - mean * mean).max(0.0);
        let mc = volume * mean;
        let std_err = volume * (var / n_samples as f64).sqrt();
        assert!(
            (exact - mc).abs() <= 3.0 * std_err,
            "quadrature {exact} vs MC {mc} ± {std_err}"
        );
    }

    #[test]
    fn sharp_convolution_identity() {
        assert!(sharp_convolution_identity_residual(1, 0.0).unwrap() <= 1e-6);
        assert!(sharp_convolution_identity_residual(1, 3.7).unwrap() <= 1e-6);
        assert!(sharp_convolution_identity_residual(3, 1.0).unwrap() <= 1e-5);
        assert!(matches!(
            sharp_convolution_identity_residual(2, 1.0),
            Err(Error::UnsupportedDimension(2))
        ));
    }

    #[test]
    fn plancherel_sharp() {
        // ∫ |χ̂|² dⁿk = (2π)ⁿ ∫ χ² dⁿx = (2π)ⁿ · V_n, for n = 1 and 3.
        let cut = 4.0e4;
        let panels = (cut / (PI / 2.0)).ceil() as usize;
        // n = 1: density 4 sin²k/k², tail mean 2/k²
        let bulk1 = quad::composite(
            |k: f64| {
                let c = sharp_ball_fourier(1, k).unwrap();
                c * c
            },
            0.0,
            cut,
            panels,
        )
        .value;
        let total1 = 2.0 * (bulk1 + 2.0 / cut);
        assert_relative_eq!(total1, 2.0 * PI * 2.0, max_relative = 1e-4);

        // n = 3: density 4π k² χ̂₃², tail mean 64π³(1/(2k²) + 1/(2k⁴))
        let bulk3 = quad::composite(
            |k: f64| {
                let c = sharp_ball_fourier(3, k).unwrap();
                4.0 * PI * k * k * c * c
            },
            0.0,
            cut,
            panels,
        )
        .value;
        let total3 = bulk3 + 64.0 * PI.powi(3) * (0.5 / cut + 1.0 / (6.0 * cut.powi(3)));
        assert_relative_eq!(
            total3,
            (2.0 * PI).powi(3) * crate::ball_volume(3),
            max_relative = 1e-4
        );
    }

    #[test]
    fn transform_table_matches_direct_evaluation() {
        let sm = AveragingKernel::smooth(1).unwrap();
        let table = transform_table(&sm).unwrap();
        for &k in &[0.0, 0.31, 1.7, 6.2, 14.9] {
            assert_relative_eq!(
                table.fourier(k),
                sm.kernel_fourier(k).unwrap(),
                epsilon = 1e-8
            );
        }
        for &y in &[0.0, 0.4, 1.9, 3.3] {
            assert_relative_eq!(
                table.self_convolution(y),
                sm.kernel_self_convolution(&[y]).unwrap(),
                epsilon = 1e-8,
            );
        }
        assert!(table.fourier_cutoff().unwrap() > 10.0);
    }

    #[test]
    fn profile_insensitivity_of_transforms() {
        // Both smooth profiles are admissible averaging functions; their
        // transforms differ only through the bounded transition region.
        let a = AveragingKernel::smooth(1).unwrap();
        let b = AveragingKernel::smooth_with_profile(1, SmoothProfile::CosineStep).unwrap();
        assert!(b.kernel_fourier(0.0).unwrap() > 0.0);
        assert!(a.verify_scaling_identity(10.0, 0.4).unwrap() <= 1e-6);
        assert!(b.verify_scaling_identity(10.0, 0.4).unwrap() <= 1e-6);
    }
}
