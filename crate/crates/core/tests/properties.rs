//! Property tests for the structural invariants: partition-lattice round
//! trips, kernel symmetries, detailed balance and power-law fitting.

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rgscale_core::correlation::{CorrelationHierarchy, LabeledPoint};
use rgscale_core::kernels::AveragingKernel;
use rgscale_core::scaling::{fit_exponent, geometric_grid, scale_sweep};
use rgscale_core::spectral::{DispersionLaw, QuasifreeModel, SpectralWeight};

fn c64_strategy() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_round_trip_is_identity(values in proptest::collection::vec(c64_strategy(), 26)) {
        // all subsequences of {0..4} with length ≥ 2: 2^5 − 1 − 5 = 26
        let points: Vec<LabeledPoint> =
            (0..5).map(|i| LabeledPoint::spatial(vec![i as f64])).collect();
        let subs: Vec<Vec<usize>> = (1u32..(1 << 5))
            .map(|m| (0..5).filter(|&i| m & (1 << i) != 0).collect::<Vec<usize>>())
            .filter(|s| s.len() >= 2)
            .collect();
        let mut truncated = CorrelationHierarchy::new(points.clone(), 5).unwrap();
        for (sub, v) in subs.iter().zip(&values) {
            truncated.set_truncated(sub.clone(), *v).unwrap();
        }
        let mut full = CorrelationHierarchy::new(points, 5).unwrap();
        for sub in &subs {
            let w = truncated.compose_from_truncated(sub).unwrap();
            full.set_full(sub.clone(), w).unwrap();
        }
        for (sub, v) in subs.iter().zip(&values) {
            let back = full.truncate(sub).unwrap();
            prop_assert!((back - v).norm() <= 1e-12, "drift {} at {:?}", (back - v).norm(), sub);
        }
    }

    #[test]
    fn self_convolution_even_nonnegative(y in 0.0..5.0f64, sharp in proptest::bool::ANY) {
        let kernel = if sharp {
            AveragingKernel::sharp(1).unwrap()
        } else {
            AveragingKernel::smooth(1).unwrap()
        };
        let plus = kernel.kernel_self_convolution(&[y]).unwrap();
        let minus = kernel.kernel_self_convolution(&[-y]).unwrap();
        prop_assert!((plus - minus).abs() <= 1e-12);
        prop_assert!(plus >= -1e-12);
        if y > 2.0 * kernel.support_radius() {
            prop_assert_eq!(plus, 0.0);
        }
    }

    #[test]
    fn fit_recovers_exact_power_laws(slope in -3.0..3.0f64, amp in 0.1..10.0f64) {
        let grid = geometric_grid(1.0, 1e3, 8).unwrap();
        let sweep = scale_sweep("p", &grid, |r| Ok(C64::new(amp * r.powf(slope), 0.0))).unwrap();
        let fit = fit_exponent(&sweep, Some((0, 8))).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-10);
        prop_assert!((fit.intercept - amp.ln()).abs() <= 1e-10);
    }

    #[test]
    fn detailed_balance_universal(
        beta in 0.2..4.0f64,
        mu in -3.0..-0.05f64,
        alpha in 0.3..2.8f64,
        jre in -1.0..1.0f64,
        jim in -1.0..1.0f64,
        omega in prop_oneof![-4.0..-0.01f64, 0.01..4.0f64],
        k in 0.01..3.0f64,
    ) {
        let model = QuasifreeModel::new(
            1,
            beta,
            mu,
            DispersionLaw::pure_power(alpha, 1.0).unwrap(),
            SpectralWeight::Constant(C64::new(jre, jim)),
        )
        .unwrap();
        prop_assert!(model.detailed_balance_residual(omega, k).unwrap() <= 1e-12);
    }

    #[test]
    fn scaling_identity_random_scales(r in 1.0..40.0f64, k in 0.0..3.0f64) {
        let kernel = AveragingKernel::smooth(1).unwrap();
        prop_assert!(kernel.verify_scaling_identity(r, k).unwrap() <= 1e-6);
    }
}

/// Decay-rate check for the four-point cluster value: the triple-nested
/// quadrature is too heavy for a full sweep, so the slope comes from two
/// scales a decade apart. Expected rate (2−l)n/2 = −1 within 5%.
#[test]
fn l4_cluster_decay_rate() {
    use rgscale_core::kernels::transform_table;
    use rgscale_core::scaling::{block_l_point_normal, NormalWt};
    let table = transform_table(&AveragingKernel::smooth(1).unwrap()).unwrap();
    let wt = NormalWt::gaussian_1d(4, 1.0, 1.0).unwrap();
    let v1 = block_l_point_normal(&wt, &table, 10.0, &[0.0; 4]).unwrap();
    let v2 = block_l_point_normal(&wt, &table, 100.0, &[0.0; 4]).unwrap();
    let slope = (v2.norm().ln() - v1.norm().ln()) / (100.0f64.ln() - 10.0f64.ln());
    assert!(
        (slope + 1.0).abs() <= 0.05,
        "l=4 decay rate {slope} (expect −1 ± 5%)"
    );
}
