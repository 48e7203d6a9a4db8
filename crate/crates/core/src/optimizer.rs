//! Window-factor optimization and secure-distance searches.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::physics::{ArmProfile, FiberLink, SourceParams};
use crate::security::{DetectorParams, KeyRateModel, KeyRateResult};

/// Search settings for the window factor ξ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub xi_min: f64,
    pub xi_max: f64,
    /// Log-spaced points in the coarse pass.
    pub coarse_points: usize,
    /// Absolute tolerance on ξ for the golden-section refinement.
    pub refine_tol: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            xi_min: 1e-2,
            xi_max: 1e2,
            coarse_points: 200,
            refine_tol: 1e-4,
        }
    }
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.xi_min > 0.0, "xi_min", self.xi_min, "xi_min > 0")?;
        ensure(
            self.xi_max > self.xi_min && self.xi_max.is_finite(),
            "xi_max",
            self.xi_max,
            "xi_max > xi_min",
        )?;
        ensure(
            self.coarse_points >= 3,
            "coarse_points",
            self.coarse_points as f64,
            "coarse_points >= 3",
        )?;
        ensure(self.refine_tol > 0.0, "refine_tol", self.refine_tol, "refine_tol > 0")
    }

    /// Log-spaced coarse grid, endpoints included exactly.
    pub fn coarse_grid(&self) -> Vec<f64> {
        let n = self.coarse_points;
        let ratio = (self.xi_max / self.xi_min).ln();
        (0..n)
            .map(|i| match i {
                0 => self.xi_min,
                _ if i + 1 == n => self.xi_max,
                _ => self.xi_min * (ratio * i as f64 / (n - 1) as f64).exp(),
            })
            .collect()
    }
}

/// Settings for the upward-stepping / bisection search on Bob's length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSearch {
    /// Ceiling returned when the key stays positive all the way, km.
    pub ceiling: f64,
    pub step: f64,
    pub tol: f64,
}

impl Default for DistanceSearch {
    fn default() -> Self {
        Self {
            ceiling: 400.0,
            step: 5.0,
            tol: 0.1,
        }
    }
}

impl DistanceSearch {
    pub fn validate(&self) -> Result<()> {
        ensure(self.ceiling > 0.0 && self.ceiling.is_finite(), "L_B_hi", self.ceiling, "L_B_hi > 0")?;
        ensure(self.step > 0.0, "step", self.step, "step > 0")?;
        ensure(self.tol > 0.0, "tol", self.tol, "tol > 0")
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
/// Returns the best abscissa seen and its value. Flat stretches resolve
/// toward `hi`.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

/// Best window factor for a prepared model.
///
/// The objective is the unclamped bound, so configurations without any
/// positive key still report the least-bad window. Equal values prefer the
/// wider window.
pub fn optimize_model(model: &KeyRateModel, spec: &ScanSpec) -> Result<KeyRateResult> {
    spec.validate()?;
    let grid = spec.coarse_grid();
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &xi) in grid.iter().enumerate() {
        let bound = model.evaluate(xi)?.bound;
        if bound >= best {
            best = bound;
            best_i = i;
        }
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let (xi, refined) = golden_section_max(|xi| Ok(model.evaluate(xi)?.bound), lo, hi, spec.refine_tol)?;
    let xi = if refined >= best { xi } else { grid[best_i] };
    model.evaluate(xi)
}

/// Key rate maximized over the window factor.
pub fn optimize_window(
    source: &SourceParams,
    link_a: &FiberLink,
    link_b: &FiberLink,
    det: &DetectorParams,
    spec: &ScanSpec,
) -> Result<KeyRateResult> {
    optimize_model(&KeyRateModel::new(source, link_a, link_b, det)?, spec)
}

/// [`optimize_window`] with arms given as aggregate profiles.
pub fn optimize_window_for(
    source: &SourceParams,
    arm_a: &ArmProfile,
    arm_b: &ArmProfile,
    det: &DetectorParams,
    spec: &ScanSpec,
) -> Result<KeyRateResult> {
    optimize_model(&KeyRateModel::for_profiles(source, arm_a, arm_b, det)?, spec)
}

/// Largest length in `[0, ceiling]` for which `secure` holds, assuming the
/// secure set is an interval starting at zero. Steps upward until the
/// predicate fails, then bisects down to `tol`. Returns 0 when it fails at
/// zero length.
pub fn max_feasible_length<F>(search: &DistanceSearch, mut secure: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    search.validate()?;
    if !secure(0.0)? {
        return Ok(0.0);
    }
    let mut good = 0.0;
    let mut k = 1u32;
    let bad = loop {
        let length = (k as f64 * search.step).min(search.ceiling);
        if !secure(length)? {
            break length;
        }
        if length >= search.ceiling {
            return Ok(search.ceiling);
        }
        good = length;
        k += 1;
    };
    let mut bad = bad;
    while bad - good > search.tol {
        let mid = 0.5 * (good + bad);
        if secure(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Maximal length of Bob's link with a positive optimized key rate.
/// `bob_fiber` supplies attenuation and dispersion; its length is ignored.
pub fn max_secure_distance(
    source: &SourceParams,
    link_a: &FiberLink,
    bob_fiber: &FiberLink,
    det: &DetectorParams,
    spec: &ScanSpec,
    search: &DistanceSearch,
) -> Result<f64> {
    max_feasible_length(search, |l_b| {
        let r = optimize_window(source, link_a, &bob_fiber.with_length(l_b), det, spec)?;
        Ok(r.key_rate > 0.0)
    })
}

/// Best Alice length on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliceOptimum {
    /// km
    pub length: f64,
    pub result: KeyRateResult,
}

/// Grid argmax over Alice's link length of the optimized key rate. Ties go
/// to the shorter fiber.
#[allow(clippy::too_many_arguments)]
pub fn optimal_alice_length(
    source: &SourceParams,
    alpha_a: f64,
    beta_a: f64,
    link_b: &FiberLink,
    det: &DetectorParams,
    spec: &ScanSpec,
    lengths: &[f64],
) -> Result<AliceOptimum> {
    if lengths.is_empty() {
        return Err(crate::error::ModelError::InvalidGrid("Alice length grid is empty".into()));
    }
    let mut best: Option<AliceOptimum> = None;
    for &length in lengths {
        let link_a = FiberLink {
            length,
            attenuation: alpha_a,
            beta: beta_a,
        };
        let result = optimize_window(source, &link_a, link_b, det, spec)?;
        let better = match &best {
            None => true,
            Some(b) => {
                result.key_rate > b.result.key_rate || (result.key_rate == b.result.key_rate && length < b.length)
            }
        };
        if better {
            best = Some(AliceOptimum { length, result });
        }
    }
    Ok(best.expect("non-empty grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::DEFAULT_BETA;
    use crate::security::key_rate;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| Ok(-(x - 1.3) * (x - 1.3)), 0.0, 5.0, 1e-9).unwrap();
        assert!((x - 1.3).abs() < 1e-8);
        assert!(fx <= 0.0 && fx > -1e-16);
    }

    #[test]
    fn coarse_grid_is_log_spaced() {
        let g = ScanSpec::default().coarse_grid();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[199], 1e2);
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!(((w[1] / w[0]) / r0 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_scan_rejected() {
        let bad = ScanSpec {
            coarse_points: 2,
            ..ScanSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScanSpec {
            xi_min: 5.0,
            xi_max: 1.0,
            ..ScanSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn noiseless_window_runs_to_upper_bound() {
        let s = SourceParams::with_rho(0.9);
        let det = DetectorParams {
            dark_rate: 0.0,
            misalignment: 0.0,
        };
        let spec = ScanSpec::default();
        let r = optimize_window(&s, &FiberLink::smf(1.0), &FiberLink::smf(100.0), &det, &spec).unwrap();
        assert!(r.xi >= spec.xi_max - spec.refine_tol, "xi = {}", r.xi);
    }

    #[test]
    fn optimized_beats_fixed_windows() {
        let s = SourceParams::with_rho(0.9);
        let det = DetectorParams::default();
        let (a, b) = (FiberLink::smf(1.0), FiberLink::smf(100.0));
        let opt = optimize_window(&s, &a, &b, &det, &ScanSpec::default()).unwrap();
        assert!(opt.key_rate > 0.0);
        for xi in [1.0, 3.0, 6.0, 12.0] {
            let k = key_rate(&s, &a, &b, &det, xi).unwrap().key_rate;
            assert!(opt.key_rate >= k * (1.0 - 1e-6), "xi = {xi}");
        }
    }

    #[test]
    fn short_windows_near_max_distance() {
        let s = SourceParams::with_rho(0.9);
        let r = optimize_window(
            &s,
            &FiberLink::smf(1.0),
            &FiberLink::smf(195.0),
            &DetectorParams::default(),
            &ScanSpec::default(),
        )
        .unwrap();
        assert!(r.key_rate > 0.0);
        assert!(r.xi < 6.0, "xi = {}", r.xi);
    }

    #[test]
    fn feasible_length_search() {
        let search = DistanceSearch::default();
        let l = max_feasible_length(&search, |x| Ok(x <= 123.456)).unwrap();
        assert!(l <= 123.456 && l > 123.456 - search.tol);
        assert_eq!(max_feasible_length(&search, |_| Ok(true)).unwrap(), 400.0);
        assert_eq!(max_feasible_length(&search, |x| Ok(x < 0.0)).unwrap(), 0.0);
        let search = DistanceSearch {
            ceiling: 12.0,
            step: 5.0,
            tol: 0.01,
        };
        let l = max_feasible_length(&search, |x| Ok(x <= 11.0)).unwrap();
        assert!(l <= 11.0 && l > 10.99);
    }

    #[test]
    fn noiseless_distance_saturates() {
        let det = DetectorParams {
            dark_rate: 0.0,
            misalignment: 0.0,
        };
        let search = DistanceSearch::default();
        let d = max_secure_distance(
            &SourceParams::with_rho(0.9),
            &FiberLink::smf(1.0),
            &FiberLink::smf(0.0),
            &det,
            &ScanSpec::default(),
            &search,
        )
        .unwrap();
        assert_eq!(d, search.ceiling);
    }

    #[test]
    fn short_bob_prefers_short_alice() {
        let grid: Vec<f64> = (0..=20).map(|i| 1.0 + 5.0 * i as f64).collect();
        let opt = optimal_alice_length(
            &SourceParams::with_rho(0.9),
            0.2,
            DEFAULT_BETA,
            &FiberLink::smf(50.0),
            &DetectorParams::default(),
            &ScanSpec::default(),
            &grid,
        )
        .unwrap();
        assert_eq!(opt.length, 1.0);
    }

    #[test]
    fn empty_alice_grid_rejected() {
        assert!(optimal_alice_length(
            &SourceParams::default(),
            0.2,
            DEFAULT_BETA,
            &FiberLink::smf(50.0),
            &DetectorParams::default(),
            &ScanSpec::default(),
            &[],
        )
        .is_err());
    }
}
