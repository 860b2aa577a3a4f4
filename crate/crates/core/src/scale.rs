//! Inlier noise scale estimation with the iterative K-th ordered scale estimator (IKOSE).
//!
//! Given the absolute residuals of one hypothesis, the estimator takes the
//! K-th smallest residual and divides it by the normal quantile that the
//! K-th order statistic of `ñ` half-normal inliers would occupy. The inlier
//! count `ñ` starts at `n` and is re-counted as the residuals within
//! [`INLIER_BAND`] estimated scales until the estimate settles.

use serde::{Deserialize, Serialize};

use crate::error::ScaleError;

/// Inlier band multiplier: a residual is an inlier when `r ≤ 2.5 ŝ`.
pub const INLIER_BAND: f64 = 2.5;

/// Lower bound returned in place of a zero scale.
pub const SCALE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleConfig {
    /// K as a fraction of the number of residuals.
    pub k_fraction: f64,
    /// Absolute K; overrides `k_fraction` when set.
    pub k_absolute: Option<usize>,
    pub max_iterations: usize,
    /// Relative change below which iteration stops.
    pub convergence_tol: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self { k_fraction: 0.10, k_absolute: None, max_iterations: 50, convergence_tol: 1e-6 }
    }
}

impl ScaleConfig {
    /// K for `n` residuals, clamped to `1..=n`.
    pub fn k_for(&self, n: usize) -> usize {
        let k = match self.k_absolute {
            Some(k) => k,
            None => (self.k_fraction * n as f64).round() as usize,
        };
        k.clamp(1, n.max(1))
    }

    pub fn validate(&self) -> Result<(), ScaleError> {
        if !(self.k_fraction > 0.0 && self.k_fraction <= 1.0) {
            return Err(ScaleError::InvalidConfig("k_fraction must lie in (0, 1]"));
        }
        if self.k_absolute == Some(0) {
            return Err(ScaleError::InvalidConfig("k_absolute must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(ScaleError::InvalidConfig("max_iterations must be positive"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(ScaleError::InvalidConfig("convergence_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub scale: f64,
    pub iterations: usize,
    /// Inlier count `ñ` after the final iterate.
    pub inliers: usize,
    /// Set when the K-th residual was zero and the scale was floored.
    pub floored: bool,
}

/// Estimates the inlier noise scale of one hypothesis from its absolute residuals.
pub fn ikose_scale(abs_residuals: &[f64], cfg: &ScaleConfig) -> Result<ScaleEstimate, ScaleError> {
    cfg.validate()?;
    if abs_residuals.is_empty() {
        return Err(ScaleError::Empty);
    }
    if let Some(i) = abs_residuals.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(ScaleError::InvalidResidual(i));
    }
    let mut sorted = abs_residuals.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    ikose_sorted(&sorted, cfg)
}

/// IKOSE on residuals already sorted ascending.
pub(crate) fn ikose_sorted(sorted: &[f64], cfg: &ScaleConfig) -> Result<ScaleEstimate, ScaleError> {
    let n = sorted.len();
    let k = cfg.k_for(n);
    let kth = sorted[k - 1];
    if kth == 0.0 {
        let inliers = sorted.partition_point(|r| *r <= INLIER_BAND * SCALE_FLOOR);
        return Ok(ScaleEstimate { scale: SCALE_FLOOR, iterations: 0, inliers, floored: true });
    }

    let mut inliers = n;
    let mut scale = f64::NAN;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        if inliers <= k {
            return Err(ScaleError::DivergedScale { inliers, k });
        }
        let q = normal_quantile(0.5 * (1.0 + k as f64 / inliers as f64));
        let next = kth / q;
        iterations += 1;
        let converged = scale.is_finite() && ((next - scale).abs() <= cfg.convergence_tol * scale);
        scale = next;
        inliers = sorted.partition_point(|r| *r <= INLIER_BAND * scale);
        if converged {
            break;
        }
    }
    Ok(ScaleEstimate { scale: scale.max(SCALE_FLOOR), iterations, inliers, floored: false })
}

/// Standard normal quantile Φ⁻¹(p) for `p` in (0, 1).
///
/// Wichura's AS 241 (PPND16) rational approximation, relative accuracy about 1e-16.
/// Returns ±∞ at the endpoints and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_5,
        133.141_667_891_784_38,
        1971.590_950_306_551_3,
        13731.693_765_509_461,
        45921.953_931_549_871,
        67265.770_927_008_700,
        33430.575_583_588_128,
        2509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911,
        687.187_007_492_057_91,
        5394.196_021_424_751_1,
        21213.794_301_586_595,
        39307.895_800_092_710,
        28729.085_735_721_942,
        5226.495_278_852_545_4,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_545_3,
        5.769_497_221_460_691_4,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_61,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414_1e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_8,
        1.676_384_830_183_803_8,
        0.689_767_334_985_100_05,
        0.148_103_976_427_480_07,
        0.015_198_666_563_616_457,
        5.475_938_084_995_344_9e-4,
        1.050_750_071_644_416_9e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_3,
        5.463_784_911_164_114_4,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_89,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_94,
        0.136_929_880_922_735_81,
        0.014_875_361_290_850_615,
        7.868_691_311_456_132_6e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_445_9e-7,
        2.044_263_103_389_939_7e-15,
    ];
    fn horner(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        let r = r - 5.0;
        horner(&E, r) / horner(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_reference_points() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.55) - 0.125_661_346_855_074_1).abs() < 1e-12);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn constant_residuals() {
        let c = 2.0;
        let r = vec![c; 200];
        let cfg = ScaleConfig { k_absolute: Some(20), ..Default::default() };
        let est = ikose_scale(&r, &cfg).unwrap();
        let expect = c / normal_quantile(0.5 * (1.0 + 20.0 / 200.0));
        assert!((est.scale - expect).abs() < 1e-12 * expect);
        assert_eq!(est.inliers, 200);
    }

    #[test]
    fn zero_kth_residual_floors() {
        let mut r = vec![0.0; 10];
        r.extend([5.0; 90]);
        let est = ikose_scale(&r, &ScaleConfig::default()).unwrap();
        assert!(est.floored);
        assert_eq!(est.scale, SCALE_FLOOR);
        assert_eq!(est.inliers, 10);
    }

    #[test]
    fn k_equal_to_n_diverges() {
        let r: Vec<f64> = (1..=10).map(f64::from).collect();
        let cfg = ScaleConfig { k_fraction: 1.0, ..Default::default() };
        assert!(matches!(ikose_scale(&r, &cfg), Err(ScaleError::DivergedScale { .. })));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(ikose_scale(&[], &ScaleConfig::default()), Err(ScaleError::Empty));
        assert_eq!(
            ikose_scale(&[1.0, -1.0], &ScaleConfig::default()),
            Err(ScaleError::InvalidResidual(1))
        );
        let bad = ScaleConfig { k_fraction: 0.0, ..Default::default() };
        assert!(matches!(ikose_scale(&[1.0], &bad), Err(ScaleError::InvalidConfig(_))));
    }

    proptest! {
        #[test]
        fn scale_equivariance(
            r in proptest::collection::vec(0.001f64..100.0, 20..200),
            c in 0.01f64..100.0,
        ) {
            let cfg = ScaleConfig::default();
            let scaled: Vec<f64> = r.iter().map(|v| v * c).collect();
            match (ikose_scale(&r, &cfg), ikose_scale(&scaled, &cfg)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((b.scale - c * a.scale).abs() <= 1e-9 * b.scale);
                    prop_assert!(a.scale.is_finite() && a.scale > 0.0);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "mismatch {a:?} {b:?}"),
            }
        }

        #[test]
        fn first_iterate_kth_residual_monotone_in_k(
            r in proptest::collection::vec(0.001f64..10.0, 30..100),
            k1 in 1usize..15,
            dk in 0usize..10,
        ) {
            let n = r.len() as f64;
            // With a single iterate ñ = n, so r̃_K = ŝ · Φ⁻¹((1 + K/n)/2).
            let kth = |k: usize| {
                let cfg = ScaleConfig { k_absolute: Some(k), max_iterations: 1, ..Default::default() };
                let est = ikose_scale(&r, &cfg).unwrap();
                est.scale * normal_quantile(0.5 * (1.0 + k as f64 / n))
            };
            prop_assert!(kth(k1 + dk) >= kth(k1) * (1.0 - 1e-12));
        }
    }
}
