//! Grid sweeps over the model parameters.
//!
//! Points are independent and may be evaluated on any number of worker
//! threads. Rows always come back in lexicographic grid order (first axis
//! slowest), so the table is identical whatever the schedule.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::optimizer::{optimize_model, ScanSpec};
use crate::physics::{ArmProfile, FiberLink, SourceParams};
use crate::security::{DetectorParams, KeyRateModel, KeyRateResult};

/// Parameters a sweep axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    /// Alice's link length, km.
    #[serde(rename = "L_A")]
    AliceLength,
    /// Bob's link length, km.
    #[serde(rename = "L_B")]
    BobLength,
    #[serde(rename = "rho")]
    Rho,
    /// Alice's half-GVD, s²/km.
    #[serde(rename = "beta_A")]
    AliceBeta,
    /// Total loss of Alice's arm `α_A·L_A`, dB.
    #[serde(rename = "loss_A")]
    AliceLoss,
    /// Accumulated dispersion of Alice's arm `β_A·L_A`, s², counted positive
    /// when it has the same sign as Bob's fiber.
    #[serde(rename = "disp_A")]
    AliceDispersion,
    /// Misalignment probability.
    #[serde(rename = "e")]
    Misalignment,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::AliceLength,
        SweepParam::BobLength,
        SweepParam::Rho,
        SweepParam::AliceBeta,
        SweepParam::AliceLoss,
        SweepParam::AliceDispersion,
        SweepParam::Misalignment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::AliceLength => "L_A",
            SweepParam::BobLength => "L_B",
            SweepParam::Rho => "rho",
            SweepParam::AliceBeta => "beta_A",
            SweepParam::AliceLoss => "loss_A",
            SweepParam::AliceDispersion => "disp_A",
            SweepParam::Misalignment => "e",
        }
    }

    /// Column header used in result tables.
    pub fn column(self) -> &'static str {
        match self {
            SweepParam::AliceLength => "L_A_km",
            SweepParam::BobLength => "L_B_km",
            SweepParam::Rho => "rho",
            SweepParam::AliceBeta => "beta_A_s2_per_km",
            SweepParam::AliceLoss => "loss_A_dB",
            SweepParam::AliceDispersion => "disp_A_s2",
            SweepParam::Misalignment => "e",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
                ModelError::InvalidGrid(format!("unknown axis `{s}`, expected one of {}", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// How the window factor is chosen at each point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowMode {
    Fixed(f64),
    Optimized(ScanSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
    pub mode: WindowMode,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(ModelError::InvalidGrid("no axes".into()));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(ModelError::InvalidGrid(format!("axis `{}` is empty", axis.param)));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::InvalidGrid(format!("axis `{}` has a non-finite value", axis.param)));
            }
            let increasing = axis.values.windows(2).all(|w| w[0] < w[1]);
            let decreasing = axis.values.windows(2).all(|w| w[0] > w[1]);
            if !(increasing || decreasing) {
                return Err(ModelError::InvalidGrid(format!(
                    "axis `{}` is not strictly monotone",
                    axis.param
                )));
            }
            if self.axes[..i].iter().any(|a| a.param == axis.param) {
                return Err(ModelError::InvalidGrid(format!("axis `{}` repeated", axis.param)));
            }
        }
        match self.mode {
            WindowMode::Fixed(xi) if !(xi > 0.0 && xi.is_finite()) => {
                Err(ModelError::InvalidGrid(format!("fixed window factor must be > 0, got {xi}")))
            }
            WindowMode::Optimized(spec) => spec.validate(),
            _ => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the `index`-th point in lexicographic order.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.axes.len()];
        for (slot, axis) in coords.iter_mut().zip(&self.axes).rev() {
            let n = axis.values.len();
            *slot = axis.values[index % n];
            index /= n;
        }
        coords
    }
}

/// Fixed parameters a sweep starts from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub source: SourceParams,
    pub link_a: FiberLink,
    pub link_b: FiberLink,
    pub detector: DetectorParams,
}

impl Scenario {
    /// Applies one grid point. Returns the adjusted scenario together with
    /// Alice's arm profile, which differs from `link_a` when the point sets
    /// the arm's loss or dispersion directly.
    pub fn at(&self, params: &[SweepParam], coords: &[f64]) -> (Scenario, ArmProfile) {
        let mut s = *self;
        let mut loss = None;
        let mut dispersion = None;
        for (&p, &v) in params.iter().zip(coords) {
            match p {
                SweepParam::AliceLength => s.link_a.length = v,
                SweepParam::BobLength => s.link_b.length = v,
                SweepParam::Rho => s.source.rho = v,
                SweepParam::AliceBeta => s.link_a.beta = v,
                SweepParam::AliceLoss => loss = Some(v),
                SweepParam::AliceDispersion => dispersion = Some(v),
                SweepParam::Misalignment => s.detector.misalignment = v,
            }
        }
        let mut arm = ArmProfile::from(&s.link_a);
        if let Some(loss) = loss {
            arm.loss_db = loss;
        }
        if let Some(d) = dispersion {
            arm.dispersion = aligned_dispersion(d, &s.link_b);
        }
        (s, arm)
    }

    pub fn evaluate(&self, arm_a: &ArmProfile, mode: &WindowMode) -> Result<KeyRateResult> {
        self.link_b.validate()?;
        let model = KeyRateModel::for_profiles(&self.source, arm_a, &self.link_b.into(), &self.detector)?;
        match mode {
            WindowMode::Fixed(xi) => model.evaluate(*xi),
            WindowMode::Optimized(spec) => optimize_model(&model, spec),
        }
    }
}

/// Signed accumulated dispersion for a magnitude expressed in the
/// convention "positive = same sign as Bob's fiber".
pub fn aligned_dispersion(magnitude: f64, bob: &FiberLink) -> f64 {
    if bob.beta < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    /// Model failures at this point are kept here instead of aborting the sweep.
    pub outcome: std::result::Result<KeyRateResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub params: Vec<SweepParam>,
    pub rows: Vec<SweepRow>,
}

/// Maps `f` over `items` on `workers` threads (0 = the global pool),
/// preserving input order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let run = || items.par_iter().map(&f).collect::<Vec<_>>();
    if workers == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => items.iter().map(&f).collect(),
    }
}

/// Evaluates the key rate at every grid point.
pub fn sweep(grid: &SweepGrid, base: &Scenario, workers: usize) -> Result<SweepTable> {
    grid.validate()?;
    let params: Vec<SweepParam> = grid.axes.iter().map(|a| a.param).collect();
    let indices: Vec<usize> = (0..grid.len()).collect();
    let rows = parallel_map(&indices, workers, |&i| {
        let coords = grid.point(i);
        let (scenario, arm) = base.at(&params, &coords);
        let outcome = scenario.evaluate(&arm, &grid.mode).map_err(|e| e.to_string());
        SweepRow { coords, outcome }
    });
    Ok(SweepTable { params, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security::key_rate;

    fn axis(param: SweepParam, values: &[f64]) -> SweepAxis {
        SweepAxis {
            param,
            values: values.to_vec(),
        }
    }

    #[test]
    fn lexicographic_order() {
        let grid = SweepGrid {
            axes: vec![
                axis(SweepParam::Rho, &[0.1, 0.2]),
                axis(SweepParam::BobLength, &[10.0, 20.0, 30.0]),
            ],
            mode: WindowMode::Fixed(6.0),
        };
        let pts: Vec<_> = (0..grid.len()).map(|i| grid.point(i)).collect();
        assert_eq!(pts[0], vec![0.1, 10.0]);
        assert_eq!(pts[2], vec![0.1, 30.0]);
        assert_eq!(pts[3], vec![0.2, 10.0]);
        assert_eq!(pts[5], vec![0.2, 30.0]);
    }

    #[test]
    fn single_point_matches_direct_call() {
        let base = Scenario {
            source: SourceParams::with_rho(0.9),
            link_a: FiberLink::smf(1.0),
            link_b: FiberLink::smf(0.0),
            detector: DetectorParams::default(),
        };
        let grid = SweepGrid {
            axes: vec![axis(SweepParam::BobLength, &[100.0])],
            mode: WindowMode::Fixed(6.0),
        };
        let table = sweep(&grid, &base, 1).unwrap();
        assert_eq!(table.rows.len(), 1);
        let direct = key_rate(&base.source, &base.link_a, &FiberLink::smf(100.0), &base.detector, 6.0).unwrap();
        assert_eq!(table.rows[0].outcome, Ok(direct));
    }

    #[test]
    fn point_errors_are_recorded() {
        let grid = SweepGrid {
            axes: vec![axis(SweepParam::Rho, &[0.5, 1.0, 1.5])],
            mode: WindowMode::Fixed(6.0),
        };
        let table = sweep(&grid, &Scenario::default(), 2).unwrap();
        assert!(table.rows[0].outcome.is_ok());
        assert!(table.rows[1].outcome.as_ref().unwrap_err().contains("rho"));
        assert!(table.rows[2].outcome.is_err());
    }

    #[test]
    fn grid_validation() {
        let bad = |axes| SweepGrid {
            axes,
            mode: WindowMode::Fixed(6.0),
        };
        assert!(bad(vec![]).validate().is_err());
        assert!(bad(vec![axis(SweepParam::Rho, &[])]).validate().is_err());
        assert!(bad(vec![axis(SweepParam::Rho, &[0.1, 0.1])]).validate().is_err());
        assert!(bad(vec![axis(SweepParam::Rho, &[0.1, 0.3, 0.2])]).validate().is_err());
        assert!(bad(vec![axis(SweepParam::Rho, &[0.1]), axis(SweepParam::Rho, &[0.2])])
            .validate()
            .is_err());
        assert!(bad(vec![axis(SweepParam::Rho, &[0.3, 0.2, 0.1])]).validate().is_ok());
        let fixed0 = SweepGrid {
            axes: vec![axis(SweepParam::Rho, &[0.1])],
            mode: WindowMode::Fixed(0.0),
        };
        assert!(fixed0.validate().is_err());
    }

    #[test]
    fn axis_names_round_trip() {
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
        assert!("sigma".parse::<SweepParam>().is_err());
    }

    #[test]
    fn aligned_dispersion_follows_bob() {
        assert_eq!(aligned_dispersion(2.0, &FiberLink::smf(1.0)), -2.0);
        let positive = FiberLink {
            beta: 1e-23,
            ..FiberLink::smf(1.0)
        };
        assert_eq!(aligned_dispersion(2.0, &positive), 2.0);
    }
}
