//! Adaptive Gauss–Kronrod quadrature.
//!
//! All radial integrals in this crate go through the 1-D drivers here: a
//! (7,15)-point Gauss–Kronrod panel rule with bisection refinement driven by
//! a worst-panel-first heap. Semi-infinite integrals are mapped to \[0,1);
//! oscillatory tails are summed between consecutive zeros of the oscillating
//! factor and accelerated with an Euler transformation. Final panel sums use
//! a pairwise tree reduction over a deterministic panel order, so results do
//! not depend on refinement scheduling.

use num_complex::Complex64;
use std::collections::BinaryHeap;

/// 15-point Kronrod abscissae (positive half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];

/// 15-point Kronrod weights, matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

/// 7-point Gauss weights for the embedded rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Scalar type a quadrature can accumulate: `f64` or `Complex64`.
pub trait QuadScalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(self) -> f64;
}

impl QuadScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        self.norm()
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub evals: usize,
    pub converged: bool,
}

impl<T: QuadScalar> QuadResult<T> {
    fn zero() -> Self {
        QuadResult {
            value: T::zero(),
            abs_error: 0.0,
            evals: 0,
            converged: true,
        }
    }
}

/// Tolerances and budget for the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_panels: usize,
}

static DEFAULT_TOL_ABS: std::sync::atomic::AtomicU64 =
    std::sync::atomic::AtomicU64::new(0x3DDB7CDFD9D7BDBB); // 1e-10
static DEFAULT_TOL_REL: std::sync::atomic::AtomicU64 =
    std::sync::atomic::AtomicU64::new(0x3E45798EE2308C3A); // 1e-8

/// Overrides the process-wide default tolerances. Intended for startup
/// configuration (command-line flags); call before any computation.
pub fn set_default_tols(tol_abs: f64, tol_rel: f64) {
    use std::sync::atomic::Ordering;
    DEFAULT_TOL_ABS.store(tol_abs.to_bits(), Ordering::Relaxed);
    DEFAULT_TOL_REL.store(tol_rel.to_bits(), Ordering::Relaxed);
}

/// Current process-wide default tolerances (absolute, relative).
pub fn default_tols() -> (f64, f64) {
    use std::sync::atomic::Ordering;
    (
        f64::from_bits(DEFAULT_TOL_ABS.load(Ordering::Relaxed)),
        f64::from_bits(DEFAULT_TOL_REL.load(Ordering::Relaxed)),
    )
}

impl Default for QuadOpts {
    fn default() -> Self {
        let (tol_abs, tol_rel) = default_tols();
        QuadOpts {
            tol_abs,
            tol_rel,
            max_panels: 20_000,
        }
    }
}

impl QuadOpts {
    pub fn with_tols(tol_abs: f64, tol_rel: f64) -> Self {
        QuadOpts {
            tol_abs,
            tol_rel,
            ..Self::default()
        }
    }
}

/// Single (7,15) Gauss–Kronrod panel: returns (kronrod value, error estimate).
fn gk15<T: QuadScalar>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let fc = f(mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let fsum = f(mid - dx) + f(mid + dx);
        kron = kron + fsum * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + fsum * WG[i / 2];
        }
    }
    kron = kron * half;
    gauss = gauss * half;

    let diff = (kron - gauss).norm();
    // QUADPACK-style sharpened estimate: (200*diff)^1.5 capped by diff.
    let err = if diff > 0.0 {
        let e = (200.0 * diff).powf(1.5);
        e.min(diff).max(diff * 1e-6)
    } else {
        0.0
    };
    (kron, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

struct HeapEntry {
    error: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error && self.idx == other.idx
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then(self.idx.cmp(&other.idx))
    }
}

/// Pairwise tree sum over a slice of values (deterministic, scheduling-free).
fn tree_sum<T: QuadScalar>(vals: &[T]) -> T {
    match vals.len() {
        0 => T::zero(),
        1 => vals[0],
        n => {
            let (lo, hi) = vals.split_at(n / 2);
            tree_sum(lo) + tree_sum(hi)
        }
    }
}

fn adaptive_core<T: QuadScalar>(
    f: &impl Fn(f64) -> T,
    seeds: &[(f64, f64)],
    opts: &QuadOpts,
) -> QuadResult<T> {
    let mut panels: Vec<Panel<T>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;

    for &(a, b) in seeds {
        if a == b {
            continue;
        }
        let (v, e) = gk15(f, a, b);
        evals += 15;
        heap.push(HeapEntry {
            error: e,
            idx: panels.len(),
        });
        panels.push(Panel {
            a,
            b,
            value: v,
            error: e,
        });
    }
    if panels.is_empty() {
        return QuadResult::zero();
    }

    let mut converged = true;
    loop {
        let total: f64 = panels.iter().map(|p| p.value.norm()).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let target = opts.tol_abs.max(opts.tol_rel * total);
        if err <= target {
            break;
        }
        if panels.len() >= opts.max_panels {
            converged = false;
            break;
        }
        let worst = match heap.pop() {
            Some(w) => w,
            None => {
                converged = false;
                break;
            }
        };
        // Stale heap entries are skipped; live entries carry the panel's error.
        if panels[worst.idx].error != worst.error {
            continue;
        }
        let Panel { a, b, .. } = panels[worst.idx];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // Panel is at floating-point resolution; accept its estimate.
            panels[worst.idx].error = 0.0;
            continue;
        }
        let (v1, e1) = gk15(f, a, mid);
        let (v2, e2) = gk15(f, mid, b);
        evals += 30;
        panels[worst.idx] = Panel {
            a,
            b: mid,
            value: v1,
            error: e1,
        };
        heap.push(HeapEntry {
            error: e1,
            idx: worst.idx,
        });
        heap.push(HeapEntry {
            error: e2,
            idx: panels.len(),
        });
        panels.push(Panel {
            a: mid,
            b,
            value: v2,
            error: e2,
        });
    }

    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let values: Vec<T> = panels.iter().map(|p| p.value).collect();
    let abs_error = panels.iter().map(|p| p.error).sum();
    QuadResult {
        value: tree_sum(&values),
        abs_error,
        evals,
        converged,
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<T: QuadScalar>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    opts: &QuadOpts,
) -> QuadResult<T> {
    if a == b {
        return QuadResult::zero();
    }
    if a > b {
        let mut r = adaptive_core(&f, &[(b, a)], opts);
        r.value = T::zero() - r.value;
        return r;
    }
    adaptive_core(&f, &[(a, b)], opts)
}

/// Adaptive integral with prescribed interior breakpoints (sorted, within `[a, b]`).
///
/// Breakpoints seed the initial panel set so the refinement cannot step over
/// localized features such as a peak of width 1/R inside a wide domain.
pub fn integrate_with_breakpoints<T: QuadScalar>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOpts,
) -> QuadResult<T> {
    let mut cuts = vec![a];
    for &p in breakpoints {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.push(b);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let seeds: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    adaptive_core(&f, &seeds, opts)
}

/// Adaptive integral of `f` over `[a, ∞)` via the map `t = a + u/(1-u)²`.
///
/// The quadratic map keeps the transformed integrand bounded for algebraic
/// decay down to 1/t^{3/2}; oscillatory tails belong in
/// [`integrate_oscillatory_tail`] instead.
pub fn integrate_to_inf<T: QuadScalar>(
    f: impl Fn(f64) -> T,
    a: f64,
    opts: &QuadOpts,
) -> QuadResult<T> {
    let g = |u: f64| -> T {
        let om = 1.0 - u;
        if om <= 1e-12 {
            return T::zero();
        }
        let t = a + u / (om * om);
        f(t) * ((1.0 + u) / (om * om * om))
    };
    adaptive_core(&g, &[(0.0, 0.5), (0.5, 1.0)], opts)
}

/// Tail of an oscillatory integral: `∫_a^∞ f` where `f` alternates sign on
/// consecutive intervals of length `half_period`.
///
/// Panel integrals are taken between consecutive sign-change abscissae and the
/// alternating panel series is summed with an Euler transformation.
pub fn integrate_oscillatory_tail<T: QuadScalar>(
    f: impl Fn(f64) -> T,
    a: f64,
    half_period: f64,
    opts: &QuadOpts,
    max_half_periods: usize,
) -> QuadResult<T> {
    assert!(half_period > 0.0, "half_period must be positive");
    let panel_opts = QuadOpts {
        tol_abs: opts.tol_abs * 1e-2,
        tol_rel: opts.tol_rel * 1e-2,
        max_panels: 200,
    };
    let mut terms: Vec<T> = Vec::new();
    let mut evals = 0usize;
    let mut err_panels = 0.0;

    // Euler transform of the partial-sum sequence, refreshed as terms accrue.
    let euler = |terms: &[T]| -> T {
        let mut row: Vec<T> = Vec::with_capacity(terms.len());
        let mut acc = T::zero();
        for &t in terms {
            acc = acc + t;
            row.push(acc);
        }
        while row.len() > 1 {
            for i in 0..row.len() - 1 {
                row[i] = (row[i] + row[i + 1]) * 0.5;
            }
            row.pop();
        }
        row[0]
    };

    let mut best: Option<T> = None;
    let mut best_err = f64::INFINITY;
    for m in 0..max_half_periods {
        let lo = a + m as f64 * half_period;
        let hi = lo + half_period;
        let r = adaptive_core(&f, &[(lo, hi)], &panel_opts);
        evals += r.evals;
        err_panels += r.abs_error;
        terms.push(r.value);
        if terms.len() >= 6 && terms.len().is_multiple_of(2) {
            let est = euler(&terms);
            if let Some(prev) = best {
                let delta = (est - prev).norm();
                if delta < best_err {
                    best_err = delta;
                }
                if delta <= opts.tol_abs.max(opts.tol_rel * est.norm()) {
                    return QuadResult {
                        value: est,
                        abs_error: delta + err_panels,
                        evals,
                        converged: true,
                    };
                }
            }
            best = Some(est);
        }
    }
    let est = euler(&terms);
    QuadResult {
        value: est,
        abs_error: best_err + err_panels,
        evals,
        converged: false,
    }
}

/// Fixed composite Gauss–Kronrod sum over `panels` uniform panels on `[a, b]`.
///
/// No refinement: meant for long smooth-per-panel oscillatory ranges where
/// the panel width is chosen from the oscillation period up front.
pub fn composite<T: QuadScalar>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    panels: usize,
) -> QuadResult<T> {
    assert!(panels >= 1);
    let h = (b - a) / panels as f64;
    let mut values = Vec::with_capacity(panels);
    let mut err = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == panels { b } else { lo + h };
        let (v, e) = gk15(&f, lo, hi);
        values.push(v);
        err += e;
    }
    QuadResult {
        value: tree_sum(&values),
        abs_error: err,
        evals: panels * 15,
        converged: true,
    }
}

/// Numerical L¹ check over ℝⁿ for a radial profile: integrates `|f|·rⁿ⁻¹`
/// over doubling shells until the increments Cauchy-converge within `tol`.
/// Returns the L¹ norm (including the angular factor) or `None` if the shell
/// sums fail to settle.
pub fn l1_norm_radial(f: impl Fn(f64) -> f64, n: usize, tol: f64) -> Option<f64> {
    let angular = crate::sphere_area(n);
    let opts = QuadOpts::with_tols(tol * 1e-3, 1e-9);
    let g = |r: f64| f(r).abs() * r.powi(n as i32 - 1);
    let mut total = integrate(g, 0.0, 1.0, &opts).value;
    let mut lo = 1.0;
    for _ in 0..60 {
        let hi = lo * 2.0;
        let shell = integrate(g, lo, hi, &opts).value;
        total += shell;
        if shell.abs() < tol {
            return Some(angular * total);
        }
        lo = hi;
    }
    None
}

/// Composite trapezoid rule on a uniform grid; test-oracle helper.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2);
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}
