//! Bessel functions J₀ and J₁ for the two-dimensional radial transforms.
//!
//! Power series below the switchover argument, Hankel asymptotic expansion
//! above it. The switchover at 12 keeps the series cancellation below ~4
//! digits while the asymptotic truncation error is already ≲ 1e-8.

use std::f64::consts::{FRAC_PI_4, PI};

const SWITCHOVER: f64 = 12.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SWITCHOVER {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SWITCHOVER {
        j1_series(ax)
    } else {
        j1_asymptotic(ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn j1_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for m in 1..200 {
        term *= q / ((m * (m + 1)) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    let z = 8.0 * x;
    let z2 = z * z;
    let p = 1.0 - 9.0 / (2.0 * z2) + 11_025.0 / (24.0 * z2 * z2)
        - 108_056_025.0 / (720.0 * z2 * z2 * z2);
    let q = -1.0 / z + 225.0 / (6.0 * z * z2) - 893_025.0 / (120.0 * z * z2 * z2);
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn j1_asymptotic(x: f64) -> f64 {
    let z = 8.0 * x;
    let z2 = z * z;
    let p = 1.0 + 15.0 / (2.0 * z2) - 14_175.0 / (24.0 * z2 * z2)
        + 127_702_575.0 / (720.0 * z2 * z2 * z2);
    let q = 3.0 / z - 315.0 / (6.0 * z * z2) + 1_091_475.0 / (120.0 * z * z2 * z2);
    let chi = x - 3.0 * FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn j0_reference_values() {
        assert_relative_eq!(bessel_j0(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(bessel_j0(1.0), 0.7651976865579666, epsilon = 1e-12);
        assert_relative_eq!(bessel_j0(5.0), -0.177_596_771_314_338_3, epsilon = 1e-12);
        assert_relative_eq!(bessel_j0(11.9), 0.025049441699589645, epsilon = 1e-10);
        assert_relative_eq!(bessel_j0(15.0), -0.014224472826780773, epsilon = 1e-8);
        assert_relative_eq!(bessel_j0(50.0), 0.055812327669251746, epsilon = 1e-9);
    }

    #[test]
    fn j1_reference_values() {
        assert_relative_eq!(bessel_j1(0.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(bessel_j1(1.0), 0.4400505857449335, epsilon = 1e-12);
        assert_relative_eq!(bessel_j1(5.0), -0.3275791375914652, epsilon = 1e-12);
        assert_relative_eq!(bessel_j1(15.0), 0.20510403861352276, epsilon = 1e-8);
        assert_relative_eq!(bessel_j1(-1.0), -0.4400505857449335, epsilon = 1e-12);
    }

    #[test]
    fn continuity_at_switchover() {
        let below = bessel_j0(SWITCHOVER - 1e-9);
        let above = bessel_j0(SWITCHOVER + 1e-9);
        assert!((below - above).abs() < 1e-7);
    }
}
