//! Uniform-grid radial sample tables with cubic interpolation.
//!
//! Kernel transforms are smooth radial functions that get evaluated millions
//! of times inside nested quadratures; tabulating them once and interpolating
//! keeps the sweeps fast without giving up accuracy (4-point Lagrange on a
//! fine grid is far below the quadrature tolerances in play).

/// Samples of a radial function on the uniform grid `x0 + i*dx`.
#[derive(Debug, Clone)]
pub struct RadialTable {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl RadialTable {
    /// Tabulates `f` on `[x0, x1]` with `len` samples (len >= 4).
    pub fn build(f: impl Fn(f64) -> f64, x0: f64, x1: f64, len: usize) -> Self {
        assert!(len >= 4 && x1 > x0);
        let dx = (x1 - x0) / (len - 1) as f64;
        let values = (0..len).map(|i| f(x0 + i as f64 * dx)).collect();
        RadialTable { x0, dx, values }
    }

    pub fn from_values(x0: f64, dx: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 4 && dx > 0.0);
        RadialTable { x0, dx, values }
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.dx * (self.values.len() - 1) as f64
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.x0 + i as f64 * self.dx, v))
    }

    /// Cubic (4-point Lagrange) interpolation; 0 beyond the right edge,
    /// clamped at the left edge.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        if x > self.x_max() {
            return 0.0;
        }
        let t = ((x - self.x0) / self.dx).max(0.0);
        let i = (t.floor() as usize).min(n - 2);
        // Stencil [i-1, i, i+1, i+2] clamped into range.
        let i0 = i.saturating_sub(1).min(n - 4);
        let s = (t - i0 as f64) - 1.0; // local coordinate: s = 0 at node i0+1
        let f = &self.values[i0..i0 + 4];
        // Lagrange basis on nodes (-1, 0, 1, 2) in local units.
        let sm1 = s + 1.0;
        let s0 = s;
        let s1 = s - 1.0;
        let s2 = s - 2.0;
        let l0 = -s0 * s1 * s2 / 6.0;
        let l1 = sm1 * s1 * s2 / 2.0;
        let l2 = -sm1 * s0 * s2 / 2.0;
        let l3 = sm1 * s0 * s1 / 6.0;
        f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3
    }
}
