//! Named runs that regenerate the data behind each published figure, plus
//! the generic `point`, `sweep` and `maxdist` runs.

use thiserror::Error;

use crate::config::RunConfig;
use crate::devices::{dispersion_to_delay, Catalog, DeviceKind};
use crate::error::ModelError;
use crate::optimizer::{max_secure_distance, ScanSpec};
use crate::output::{result_cells, Cell, CsvTable, RESULT_COLUMNS};
use crate::physics::{ArmProfile, SourceParams};
use crate::security::KeyRateModel;
use crate::sweep::{aligned_dispersion, parallel_map, sweep, SweepAxis, SweepGrid, SweepParam, SweepTable, WindowMode};

/// Centre wavelength for delay conversions, m.
pub const TELECOM_WAVELENGTH: f64 = 1550e-9;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Figure-defining parameters, applied underneath the user's configuration.
pub fn preset_defaults(name: &str) -> &'static str {
    match name {
        "fig2" => "rho = 0.9\nL_A = 1.0\n",
        "fig3" | "fig5" => "rho = 0.9\n",
        "figA1" => "rho = 0.9\ne = 0.05\n",
        _ => "",
    }
}

/// Inclusive arithmetic range `start, start + step, …, stop`.
pub fn range_inclusive(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

/// Inclusive `count`-point linear range.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| if i + 1 == count { stop } else { start + (stop - start) * i as f64 / (count - 1) as f64 })
            .collect(),
    }
}

/// Bob lengths of the window-factor comparison, km.
pub fn fig2_bob_lengths() -> Vec<f64> {
    range_inclusive(0.0, 220.0, 2.0)
}

/// Fixed window factors compared against the optimized one.
pub const FIG2_FIXED_XI: [f64; 4] = [12.0, 6.0, 3.0, 1.0];

/// Alice lengths for the Alice-length scans, km.
pub fn fig3_alice_lengths() -> Vec<f64> {
    range_inclusive(0.0, 200.0, 2.0)
}

pub const FIG4_RHO: [f64; 7] = [-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9];

pub fn fig4_alice_lengths() -> Vec<f64> {
    range_inclusive(0.0, 200.0, 10.0)
}

pub const FIG5_BOB_LENGTHS: [f64; 3] = [202.0, 210.0, 217.0];
/// Extent of Alice's (dispersion, loss) plane: s², dB.
pub const FIG5_MAX_DISPERSION: f64 = 3e-21;
pub const FIG5_MAX_LOSS: f64 = 30.0;
pub const FIG5_POINTS: usize = 61;

fn table_from_sweep(table: &SweepTable) -> CsvTable {
    let mut header: Vec<String> = table.params.iter().map(|p| p.column().to_string()).collect();
    header.extend(RESULT_COLUMNS.iter().map(|s| s.to_string()));
    let mut out = CsvTable::new(header);
    for row in &table.rows {
        let mut cells: Vec<Cell> = row.coords.iter().map(|&x| x.into()).collect();
        cells.extend(result_cells(&row.outcome));
        out.push(cells);
    }
    out
}

fn point(config: &RunConfig) -> Result<CsvTable, PresetError> {
    let scenario = config.scenario();
    let result = scenario.evaluate(&ArmProfile::from(&scenario.link_a), &config.window_mode())?;
    let mut header = vec!["L_A_km", "L_B_km", "rho", "e", "window_s", "p_exp"];
    header.extend(RESULT_COLUMNS);
    let mut t = CsvTable::new(header);
    let mut row: Vec<Cell> = vec![
        config.link_a.length.into(),
        config.link_b.length.into(),
        config.source.rho.into(),
        config.detector.misalignment.into(),
        result.window.into(),
        result.stats.p_exp.into(),
    ];
    row.extend(result_cells(&Ok(result)));
    t.push(row);
    Ok(t)
}

fn grid_sweep(config: &RunConfig) -> Result<CsvTable, PresetError> {
    let grid = config
        .grid()
        .ok_or_else(|| PresetError::Validation("sweep needs at least one [[axis]] in the configuration".into()))?;
    Ok(table_from_sweep(&sweep(&grid, &config.scenario(), config.workers)?))
}

/// Maximal Bob length, either for the configured point or over an axis grid
/// of Alice- and source-side parameters.
fn maxdist(config: &RunConfig) -> Result<CsvTable, PresetError> {
    let allowed = [
        SweepParam::AliceLength,
        SweepParam::Rho,
        SweepParam::AliceBeta,
        SweepParam::Misalignment,
    ];
    if let Some(bad) = config.axes.iter().find(|a| !allowed.contains(&a.param)) {
        return Err(PresetError::Validation(format!(
            "maxdist cannot sweep `{}`; allowed axes: L_A, rho, beta_A, e",
            bad.param
        )));
    }
    let grid = SweepGrid {
        axes: if config.axes.is_empty() {
            vec![
                SweepAxis {
                    param: SweepParam::Rho,
                    values: vec![config.source.rho],
                },
                SweepAxis {
                    param: SweepParam::AliceLength,
                    values: vec![config.link_a.length],
                },
            ]
        } else {
            config.axes.clone()
        },
        mode: WindowMode::Optimized(config.scan),
    };
    grid.validate()?;
    let params: Vec<SweepParam> = grid.axes.iter().map(|a| a.param).collect();
    let mut header: Vec<String> = params.iter().map(|p| p.column().to_string()).collect();
    header.extend(["L_B_max_km".to_string(), "flags".to_string()]);
    let mut t = CsvTable::new(header);

    let indices: Vec<usize> = (0..grid.len()).collect();
    let base = config.scenario();
    let rows = parallel_map(&indices, config.workers, |&i| {
        let coords = grid.point(i);
        let (s, _) = base.at(&params, &coords);
        let d = max_secure_distance(&s.source, &s.link_a, &s.link_b, &s.detector, &config.scan, &config.search);
        (coords, d)
    });
    for (coords, d) in rows {
        let mut cells: Vec<Cell> = coords.into_iter().map(Cell::from).collect();
        match d {
            Ok(d) => cells.extend([d.into(), "".into()]),
            Err(e) => cells.extend([f64::NAN.into(), format!("error: {e}").into()]),
        }
        t.push(cells);
    }
    Ok(t)
}

fn fig2(config: &RunConfig) -> Result<CsvTable, PresetError> {
    let mut header = vec!["L_B_km", "xi_mode"];
    header.extend(RESULT_COLUMNS);
    let mut t = CsvTable::new(header);
    let axis = vec![SweepAxis {
        param: SweepParam::BobLength,
        values: fig2_bob_lengths(),
    }];
    let modes = FIG2_FIXED_XI
        .iter()
        .map(|&xi| (format!("{xi}"), WindowMode::Fixed(xi)))
        .chain(std::iter::once(("opt".to_string(), WindowMode::Optimized(config.scan))));
    for (label, mode) in modes {
        let grid = SweepGrid {
            axes: axis.clone(),
            mode,
        };
        let table = sweep(&grid, &config.scenario(), config.workers)?;
        for row in &table.rows {
            let mut cells: Vec<Cell> = vec![row.coords[0].into(), label.as_str().into()];
            cells.extend(result_cells(&row.outcome));
            t.push(cells);
        }
    }
    Ok(t)
}

/// Key rate against Alice's length for several Bob lengths.
fn fig3(config: &RunConfig) -> Result<CsvTable, PresetError> {
    let grid = SweepGrid {
        axes: vec![
            SweepAxis {
                param: SweepParam::BobLength,
                values: config.fig3_bob_lengths.clone(),
            },
            SweepAxis {
                param: SweepParam::AliceLength,
                values: fig3_alice_lengths(),
            },
        ],
        mode: config.window_mode(),
    };
    Ok(table_from_sweep(&sweep(&grid, &config.scenario(), config.workers)?))
}

fn fig4(config: &RunConfig) -> Result<CsvTable, PresetError> {
    let c = RunConfig {
        axes: vec![
            SweepAxis {
                param: SweepParam::Rho,
                values: FIG4_RHO.to_vec(),
            },
            SweepAxis {
                param: SweepParam::AliceLength,
                values: fig4_alice_lengths(),
            },
        ],
        ..config.clone()
    };
    maxdist(&c)
}

fn fig5_plane(config: &RunConfig) -> Result<CsvTable, PresetError> {
    let grid = SweepGrid {
        axes: vec![
            SweepAxis {
                param: SweepParam::BobLength,
                values: FIG5_BOB_LENGTHS.to_vec(),
            },
            SweepAxis {
                param: SweepParam::AliceDispersion,
                values: linspace(0.0, FIG5_MAX_DISPERSION, FIG5_POINTS),
            },
            SweepAxis {
                param: SweepParam::AliceLoss,
                values: linspace(0.0, FIG5_MAX_LOSS, FIG5_POINTS),
            },
        ],
        mode: config.window_mode(),
    };
    Ok(table_from_sweep(&sweep(&grid, &config.scenario(), config.workers)?))
}

/// Amounts of a device that stay inside the plotted plane.
pub fn device_amounts(kind: DeviceKind, alpha: f64, beta: f64) -> Vec<f64> {
    let limit = |max: f64, per: f64| if per.abs() > 0.0 { max / per.abs() } else { f64::INFINITY };
    let max_amount = limit(FIG5_MAX_DISPERSION, beta).min(limit(FIG5_MAX_LOSS, alpha));
    match kind {
        DeviceKind::Module => {
            let n = if max_amount.is_finite() { max_amount.floor() as usize } else { 10 };
            (0..=n).map(|k| k as f64).collect()
        }
        DeviceKind::Fiber => {
            let top = if max_amount.is_finite() { max_amount } else { 200.0 };
            linspace(0.0, top, 101)
        }
    }
}

/// Device loci across the plane, with the key rate at each locus point.
fn fig5_devices(config: &RunConfig, catalog: &Catalog) -> Result<CsvTable, PresetError> {
    let mut header = vec![
        "L_B_km",
        "device",
        "kind",
        "assumed",
        "amount",
        "disp_A_s2",
        "loss_A_dB",
        "delay_s_per_m",
    ];
    header.extend(RESULT_COLUMNS);
    let mut t = CsvTable::new(header);
    catalog.validate()?;
    let mut jobs = Vec::new();
    for &l_b in &FIG5_BOB_LENGTHS {
        for dev in &catalog.devices {
            for amount in device_amounts(dev.kind, dev.alpha, dev.beta) {
                jobs.push((l_b, dev, amount));
            }
        }
    }
    let mode = config.window_mode();
    let rows = parallel_map(&jobs, config.workers, |&(l_b, dev, amount)| {
        let p = dev.locus_point(amount)?;
        let link_b = config.link_b.with_length(l_b);
        let arm = ArmProfile {
            loss_db: p.loss,
            dispersion: aligned_dispersion(p.dispersion, &link_b),
        };
        let scenario = crate::sweep::Scenario { link_b, ..config.scenario() };
        let r = scenario.evaluate(&arm, &mode).map_err(|e| e.to_string());
        Ok::<_, ModelError>((p, dispersion_to_delay(p.dispersion, TELECOM_WAVELENGTH)?, r))
    });
    for ((l_b, dev, amount), row) in jobs.iter().zip(rows) {
        let (p, delay, r) = row?;
        let kind = match dev.kind {
            DeviceKind::Fiber => "fiber",
            DeviceKind::Module => "module",
        };
        let mut cells: Vec<Cell> = vec![
            (*l_b).into(),
            dev.name.as_str().into(),
            kind.into(),
            if dev.assumed { "assumed" } else { "reference" }.into(),
            (*amount).into(),
            p.dispersion.into(),
            p.loss.into(),
            delay.into(),
        ];
        cells.extend(result_cells(&r));
        t.push(cells);
    }
    Ok(t)
}

/// Runs a preset. Returns `(file suffix, table)` pairs; the main table has an
/// empty suffix.
pub fn run_preset(name: &str, config: &RunConfig, catalog: &Catalog) -> Result<Vec<(String, CsvTable)>, PresetError> {
    let main = |t: CsvTable| vec![(String::new(), t)];
    Ok(match name {
        "point" => main(point(config)?),
        "sweep" => main(grid_sweep(config)?),
        "maxdist" => main(maxdist(config)?),
        "fig2" => main(fig2(config)?),
        "fig3" | "figA1" => main(fig3(config)?),
        "fig4" => main(fig4(config)?),
        "fig5" => vec![
            (String::new(), fig5_plane(config)?),
            ("_devices".to_string(), fig5_devices(config, catalog)?),
        ],
        other => {
            return Err(PresetError::Validation(format!(
                "unknown preset `{other}`, expected one of {}",
                crate::config::PRESETS.join(", ")
            )))
        }
    })
}

/// Key rate for Alice's arm given directly as (loss, dispersion magnitude in
/// Bob's sign convention).
pub fn plane_key_rate(
    config: &RunConfig,
    l_b: f64,
    dispersion: f64,
    loss: f64,
    scan: &ScanSpec,
) -> Result<f64, ModelError> {
    let link_b = config.link_b.with_length(l_b);
    let arm = ArmProfile {
        loss_db: loss,
        dispersion: aligned_dispersion(dispersion, &link_b),
    };
    let source: SourceParams = config.source;
    let model = KeyRateModel::for_profiles(&source, &arm, &link_b.into(), &config.detector)?;
    Ok(crate::optimizer::optimize_model(&model, scan)?.key_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r = fig2_bob_lengths();
        assert_eq!(r.len(), 111);
        assert_eq!(r[110], 220.0);
        let l = linspace(0.0, 3e-21, 61);
        assert_eq!(l.len(), 61);
        assert_eq!(l[60], 3e-21);
        assert_eq!(fig4_alice_lengths().len(), 21);
    }

    #[test]
    fn device_amounts_stay_in_plane() {
        for dev in Catalog::default().devices {
            for a in device_amounts(dev.kind, dev.alpha, dev.beta) {
                let p = dev.locus_point(a).unwrap();
                assert!(p.dispersion <= FIG5_MAX_DISPERSION * (1.0 + 1e-12));
                assert!(p.loss <= FIG5_MAX_LOSS * (1.0 + 1e-12));
            }
        }
        assert_eq!(device_amounts(DeviceKind::Module, 4.0, 1.27e-21), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn unknown_preset() {
        let err = run_preset("fig9", &RunConfig::default(), &Catalog::default()).unwrap_err();
        assert!(matches!(err, PresetError::Validation(_)));
    }

    #[test]
    fn sweep_without_axes_is_a_validation_error() {
        let err = run_preset("sweep", &RunConfig::default(), &Catalog::default()).unwrap_err();
        assert!(matches!(err, PresetError::Validation(_)));
    }

    #[test]
    fn maxdist_rejects_bob_axis() {
        let c = RunConfig {
            axes: vec![SweepAxis {
                param: SweepParam::BobLength,
                values: vec![1.0],
            }],
            ..RunConfig::default()
        };
        assert!(matches!(run_preset("maxdist", &c, &Catalog::default()), Err(PresetError::Validation(_))));
    }
}
