//! Dispatches a [`RunConfig`] to the physics modules over a bounded worker
//! pool, with checkpointing and per-point failure isolation.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Frequency, RunConfig, TaskKind};
use crate::dipole::DressedTriplet;
use crate::error::{Error, Result};
use crate::nonclassicality::{bell_quantifier, csi_ratio};
use crate::observables::{
    elastic_fraction, find_peaks, sensor_g2, sensor_g2_tau, sensor_spectrum_point,
    spectrum_fourier, SpectrumMethod,
};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CHECKPOINT_FORMAT: &str = "photocorr-checkpoint/1";

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub values: Vec<f64>,
    /// Reason code when the point could not be computed; its value cells are NaN.
    pub flag: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub task: TaskKind,
    pub engine_version: String,
    /// TOML echo of the effective configuration, defaults included.
    pub config_echo: String,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub elapsed_seconds: f64,
    /// Unix time of completion; `None` when `output.timestamp = false`.
    pub timestamp: Option<u64>,
    /// False when the sweep stopped early (see [`SweepOptions::stop_after`]).
    pub complete: bool,
}

impl ResultTable {
    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flag.is_some()).count()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Overrides `output.checkpoint`.
    pub checkpoint: Option<PathBuf>,
    /// Checkpoint to continue from.
    pub resume: Option<PathBuf>,
    /// Stop once at least this many points are done, after checkpointing.
    pub stop_after: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    task: TaskKind,
    /// Physics-relevant part of the configuration; must match to resume.
    fingerprint: String,
    total: usize,
    rows: Vec<StoredRow>,
}

#[derive(Serialize, Deserialize)]
struct StoredRow {
    values: Vec<Option<f64>>,
    flag: Option<String>,
}

impl From<&Row> for StoredRow {
    fn from(r: &Row) -> Self {
        Self {
            values: r.values.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            flag: r.flag.clone(),
        }
    }
}

impl From<StoredRow> for Row {
    fn from(r: StoredRow) -> Self {
        Self {
            values: r.values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            flag: r.flag,
        }
    }
}

pub fn run_sweep(config: &RunConfig) -> Result<ResultTable> {
    run_sweep_with(config, &SweepOptions::default())
}

pub fn run_sweep_with(config: &RunConfig, options: &SweepOptions) -> Result<ResultTable> {
    let start = Instant::now();
    let triplet = config.triplet()?;
    let mut notes = notes_for(config, &triplet);
    let (columns, rows, complete) = match config.task.kind {
        TaskKind::Dressed => (dressed_columns(), vec![dressed_row(config, &triplet)], true),
        TaskKind::G2tau => {
            let (columns, rows) = g2tau_rows(config, &triplet)?;
            (columns, rows, true)
        }
        TaskKind::Spectrum if config.task.method == Some(SpectrumMethod::G1Fourier) => {
            let (columns, rows) = fourier_rows(config, &mut notes)?;
            (columns, rows, true)
        }
        _ => point_sweep(config, &triplet, options, &mut notes)?,
    };
    let timestamp = config
        .output
        .timestamp
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    Ok(ResultTable {
        task: config.task.kind,
        engine_version: ENGINE_VERSION.to_string(),
        config_echo: config.to_toml(),
        notes,
        columns,
        rows,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        timestamp,
        complete,
    })
}

fn notes_for(config: &RunConfig, t: &DressedTriplet) -> Vec<String> {
    let mut notes = vec![format!(
        "dressed splittings D12 = {}, D23 = {}, D13 = {}",
        t.delta_12, t.delta_23, t.delta_13
    )];
    if !t.strong_drive {
        notes.push("weak drive: the dressed-state picture is only qualitative".into());
    }
    let pair_task = matches!(config.task.kind, TaskKind::G2map | TaskKind::Csi | TaskKind::Bell);
    if pair_task && (t.delta_12 - t.delta_23).abs() < config.sensors.linewidth {
        notes.push(
            "unresolved: |D12 - D23| < sensor linewidth, equal- and cross-sideband pairs cannot be told apart".into(),
        );
    }
    notes
}

fn dressed_columns() -> Vec<String> {
    ["delta12", "gamma12", "E1", "E2", "E3", "D12", "D23", "D13"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn dressed_row(config: &RunConfig, t: &DressedTriplet) -> Row {
    let c = config
        .emitter
        .effective_coefficients()
        .expect("validated at load time");
    Row {
        values: vec![
            c.delta12,
            c.gamma12,
            t.energies[0],
            t.energies[1],
            t.energies[2],
            t.delta_12,
            t.delta_23,
            t.delta_13,
        ],
        flag: None,
    }
}

fn resolve(f: &Option<Frequency>, t: &DressedTriplet, field: &str) -> Result<f64> {
    f.as_ref()
        .ok_or_else(|| Error::invalid(field, "missing"))?
        .resolve(t, field)
}

fn g2tau_rows(config: &RunConfig, t: &DressedTriplet) -> Result<(Vec<String>, Vec<Row>)> {
    let w1 = resolve(&config.task.omega1, t, "task.omega1")?;
    let w2 = resolve(&config.task.omega2, t, "task.omega2")?;
    let tau = config.tau.as_ref().expect("defaulted at load time");
    let grid = tau.values();
    let columns = vec!["tau".to_string(), "g2".to_string()];
    let rows = match sensor_g2_tau(&config.emitter, w1, w2, config.sensors.filter(), &grid) {
        Ok(points) => points
            .iter()
            .map(|p| Row {
                values: vec![p.tau, p.g2],
                flag: None,
            })
            .collect(),
        Err(e) => grid
            .iter()
            .map(|&tau| Row {
                values: vec![tau, f64::NAN],
                flag: Some(e.reason_code().to_string()),
            })
            .collect(),
    };
    Ok((columns, rows))
}

fn fourier_rows(config: &RunConfig, notes: &mut Vec<String>) -> Result<(Vec<String>, Vec<Row>)> {
    let grid = config.grid.omega1.as_ref().expect("defaulted at load time").values();
    let tau = config.tau.as_ref().expect("defaulted at load time");
    let s = spectrum_fourier(&config.emitter, &grid, tau.max, tau.points)?;
    notes.push(format!("elastic weight {}", s.elastic_weight));
    notes.push(format!("delays integrated up to tau = {}", s.tau_max.unwrap_or(tau.max)));
    notes.push(format!("{} local maxima", find_peaks(&s.values, 0.0, 0.0).len()));
    let columns = vec!["omega".to_string(), "spectrum".to_string(), "raw".to_string()];
    let rows = grid
        .iter()
        .zip(&s.values)
        .map(|(&w, &v)| Row {
            values: vec![w, v, v * s.peak_value],
            flag: None,
        })
        .collect();
    Ok((columns, rows))
}

/// Independent points of a pointwise task, in output order.
fn task_points(config: &RunConfig, t: &DressedTriplet) -> Result<Vec<(f64, f64)>> {
    let axis1 = config.grid.omega1.as_ref().expect("defaulted at load time").values();
    if config.task.kind == TaskKind::Spectrum {
        return Ok(axis1.into_iter().map(|w| (w, 0.0)).collect());
    }
    if let Some(sum) = &config.grid.antidiagonal {
        let s = sum.resolve(t, "grid.antidiagonal")?;
        return Ok(axis1.into_iter().map(|w| (w, s - w)).collect());
    }
    let axis2 = match &config.grid.omega2 {
        Some(a) => a.values(),
        None => axis1.clone(),
    };
    Ok(axis1
        .iter()
        .flat_map(|&w1| axis2.iter().map(move |&w2| (w1, w2)))
        .collect())
}

fn point_columns(kind: TaskKind) -> Vec<String> {
    let names: &[&str] = match kind {
        TaskKind::Spectrum => &["omega", "spectrum", "raw"],
        TaskKind::G2map => &["omega1", "omega2", "g2"],
        TaskKind::Csi => &["omega1", "omega2", "ratio", "g11", "g22", "g12"],
        TaskKind::Bell => &[
            "omega1", "omega2", "bs", "b1111", "b2222", "b1221", "b1122_re", "b1122_im", "b2211_re", "b2211_im",
        ],
        TaskKind::G2tau | TaskKind::Dressed => unreachable!("not a pointwise task"),
    };
    names.iter().map(|s| s.to_string()).collect()
}

fn evaluate(config: &RunConfig, (w1, w2): (f64, f64)) -> Row {
    let filter = config.sensors.filter();
    let emitter = &config.emitter;
    let result: Result<Vec<f64>> = match config.task.kind {
        // The normalised column is filled in once the whole grid is known.
        TaskKind::Spectrum => sensor_spectrum_point(emitter, w1, filter).map(|v| vec![w1, f64::NAN, v]),
        TaskKind::G2map => sensor_g2(emitter, w1, w2, filter).map(|p| vec![w1, w2, p.g2]),
        TaskKind::Csi => csi_ratio(emitter, w1, w2, filter).map(|p| vec![w1, w2, p.ratio, p.g11, p.g22, p.g12]),
        TaskKind::Bell => bell_quantifier(emitter, w1, w2, filter).map(|p| {
            let b = p.b_terms;
            vec![
                w1,
                w2,
                p.quantifier,
                b.b1111.re,
                b.b2222.re,
                b.b1221.re,
                b.b1122.re,
                b.b1122.im,
                b.b2211.re,
                b.b2211.im,
            ]
        }),
        TaskKind::G2tau | TaskKind::Dressed => unreachable!("not a pointwise task"),
    };
    let width = point_columns(config.task.kind).len();
    match result {
        Ok(values) => Row { values, flag: None },
        Err(e) => {
            let mut values = vec![f64::NAN; width];
            if config.task.kind == TaskKind::Spectrum {
                values[0] = w1;
            } else {
                values[0] = w1;
                values[1] = w2;
            }
            Row {
                values,
                flag: Some(e.reason_code().to_string()),
            }
        }
    }
}

fn fingerprint(config: &RunConfig) -> String {
    let physics = (
        &config.emitter,
        &config.sensors,
        &config.task,
        &config.grid,
        &config.tau,
    );
    serde_json::to_string(&physics).expect("configuration serialises")
}

fn point_sweep(
    config: &RunConfig,
    triplet: &DressedTriplet,
    options: &SweepOptions,
    notes: &mut Vec<String>,
) -> Result<(Vec<String>, Vec<Row>, bool)> {
    let points = task_points(config, triplet)?;
    let columns = point_columns(config.task.kind);
    let fp = fingerprint(config);
    let checkpoint_path = options.checkpoint.clone().or_else(|| config.output.checkpoint.clone());

    let mut rows: Vec<Row> = match &options.resume {
        Some(path) => {
            let rows = load_checkpoint(path, config.task.kind, &fp, points.len())?;
            notes.push(format!("resumed with {} of {} points done", rows.len(), points.len()));
            rows
        }
        None => Vec::new(),
    };

    let workers = match config.task.kind {
        TaskKind::Bell => config.parallelism.workers.min(config.parallelism.bell_workers),
        _ => config.parallelism.workers,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;

    let chunk = config.output.checkpoint_every;
    let mut complete = true;
    while rows.len() < points.len() {
        if let Some(limit) = options.stop_after {
            if rows.len() >= limit {
                complete = false;
                break;
            }
        }
        let end = (rows.len() + chunk).min(points.len());
        let batch: Vec<Row> = pool.install(|| {
            points[rows.len()..end]
                .par_iter()
                .map(|&p| evaluate(config, p))
                .collect()
        });
        rows.extend(batch);
        if let Some(path) = &checkpoint_path {
            save_checkpoint(path, config.task.kind, &fp, points.len(), &rows)?;
        }
    }

    if config.task.kind == TaskKind::Spectrum && complete {
        normalise_spectrum(&mut rows);
        let values: Vec<f64> = rows.iter().map(|r| r.values[1]).collect();
        notes.push(format!("{} local maxima", find_peaks(&values, 0.0, 0.0).len()));
        match elastic_fraction(&config.emitter) {
            Ok(w) => notes.push(format!("elastic weight {w}")),
            Err(e) => notes.push(format!("elastic weight unavailable: {}", e.reason_code())),
        }
    }
    Ok((columns, rows, complete))
}

fn normalise_spectrum(rows: &mut [Row]) {
    let peak = rows
        .iter()
        .filter(|r| r.flag.is_none())
        .map(|r| r.values[2])
        .fold(f64::MIN, f64::max);
    for r in rows.iter_mut().filter(|r| r.flag.is_none()) {
        r.values[1] = r.values[2] / peak;
    }
}

fn save_checkpoint(path: &Path, task: TaskKind, fingerprint: &str, total: usize, rows: &[Row]) -> Result<()> {
    let cp = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        task,
        fingerprint: fingerprint.to_string(),
        total,
        rows: rows.iter().map(StoredRow::from).collect(),
    };
    // Write then rename, so an interrupted write never clobbers the last good checkpoint.
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec(&cp).map_err(|e| Error::Numerical(e.to_string()))?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load_checkpoint(path: &Path, task: TaskKind, fingerprint: &str, total: usize) -> Result<Vec<Row>> {
    let bad = |message: String| Error::Config {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path)?;
    let cp: Checkpoint = serde_json::from_str(&text).map_err(|e| bad(format!("unreadable checkpoint: {e}")))?;
    if cp.format != CHECKPOINT_FORMAT {
        return Err(bad(format!("unsupported checkpoint format `{}`", cp.format)));
    }
    if cp.task != task || cp.fingerprint != fingerprint || cp.total != total {
        return Err(bad("checkpoint was written for a different configuration".into()));
    }
    if cp.rows.len() > total {
        return Err(bad("checkpoint holds more rows than the sweep has points".into()));
    }
    Ok(cp.rows.into_iter().map(Row::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> RunConfig {
        let mut c = RunConfig::from_toml_str(text, &[], "mem").unwrap();
        c.output.timestamp = false;
        c
    }

    #[test]
    fn dressed_single_row() {
        let t = run_sweep(&config("[task]\nkind = \"dressed\"\n")).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.columns.len(), 8);
        let d13 = t.column("D13").unwrap()[0];
        let d12 = t.column("D12").unwrap()[0];
        let d23 = t.column("D23").unwrap()[0];
        assert!((d13 - d12 - d23).abs() < 1e-12);
    }

    #[test]
    fn map_order_is_row_major() {
        let c = config(
            "[task]\nkind = \"g2map\"\n[grid]\nomega1 = { min = -10.0, max = 10.0, points = 3 }\nomega2 = { min = 0.0, max = 5.0, points = 2 }\n",
        );
        let t = run_sweep(&c).unwrap();
        let w: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.values[0], r.values[1])).collect();
        assert_eq!(w, vec![(-10.0, 0.0), (-10.0, 5.0), (0.0, 0.0), (0.0, 5.0), (10.0, 0.0), (10.0, 5.0)]);
    }

    #[test]
    fn failures_become_flagged_rows() {
        let c = config(
            "[task]\nkind = \"g2map\"\n[sensors]\nepsilon = 1e-9\n[emitter]\natoms = 1\nrabi = 1.0\n[grid]\nomega1 = { min = 0.0, max = 1000.0, points = 2 }\n",
        );
        let t = run_sweep(&c).unwrap();
        assert!(t.flagged() > 0);
        let r = t.rows.iter().find(|r| r.flag.is_some()).unwrap();
        assert_eq!(r.flag.as_deref(), Some("undefined-correlation"));
        assert!(r.values[2].is_nan());
    }

    #[test]
    fn antidiagonal_line() {
        let c = config(
            "[task]\nkind = \"csi\"\n[grid]\nantidiagonal = \"D12\"\nomega1 = { min = -5.0, max = 5.0, points = 3 }\n",
        );
        let t = run_sweep(&c).unwrap();
        let d12 = c.triplet().unwrap().delta_12;
        for r in &t.rows {
            assert!((r.values[0] + r.values[1] - d12).abs() < 1e-12);
        }
    }
}
