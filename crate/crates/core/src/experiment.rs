//! Dislocation sweeps across steering schemes and their CSV artifacts.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::scene::{HsfPanel, Scene};
use crate::steering::{build_schedule, materialize_normals, Schedule, SteeringMode};
use crate::tracer::{efficiency, received_power, TraceOutcome};

/// Label of the plain-mirror reference ceiling in sweep output.
pub const BASELINE_LABEL: &str = "mirror";

pub const SWEEP_HEADER: &str = "scheme,bias_p,d_x_m,efficiency,captured_w,escaped_w,terminated_w";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: String,
    pub bias_p: Option<f64>,
    pub d_x: f64,
    pub efficiency: f64,
    pub captured_w: f64,
    pub escaped_w: f64,
    pub terminated_w: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows of one scheme in increasing `d_x`.
    pub fn curve(&self, scheme: &str, bias_p: Option<f64>) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.bias_p == bias_p)
            .collect()
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.scheme
                .cmp(&b.scheme)
                .then(
                    a.bias_p
                        .unwrap_or(-1.0)
                        .total_cmp(&b.bias_p.unwrap_or(-1.0)),
                )
                .then(a.d_x.total_cmp(&b.d_x))
        });
    }
}

/// A configured ceiling ready for tracing.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub label: &'static str,
    pub bias_p: Option<f64>,
    pub panel: HsfPanel,
}

/// Build and materialize the schedule of `mode` for the sensing snapshot
/// at `d_x = 0`.
pub fn configure(config: &ExperimentConfig, scene: &Scene, mode: SteeringMode) -> Result<Schedule> {
    build_schedule(mode, scene.ceiling.last_index(), config.position_grid())
}

/// Every ceiling the sweep traces: one per steering mode, then the mirror
/// baseline if requested.
pub fn schemes(config: &ExperimentConfig, scene: &Scene) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for mode in config.modes() {
        let schedule = configure(config, scene, mode)?;
        out.push(Scheme {
            label: mode.label(),
            bias_p: mode.bias_p(),
            panel: materialize_normals(&schedule, scene)?,
        });
    }
    if config.baseline {
        out.push(Scheme {
            label: BASELINE_LABEL,
            bias_p: None,
            panel: scene.ceiling.clone(),
        });
    }
    Ok(out)
}

/// Trace every scheme at every sweep dislocation. The HSF stays configured
/// for `d_x = 0` throughout.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let scene = config
        .build_scene()
        .map_err(|e| Error::invalid("config", e.to_string()))?;
    let tx_power = config.tx_power_w();
    let mut result = SweepResult::default();
    for scheme in schemes(config, &scene)? {
        for d_x in config.sweep.points() {
            let out = received_power(&scene, &scheme.panel, d_x, tx_power, &config.tracer)?;
            result.rows.push(row(&scheme, d_x, &out, tx_power)?);
        }
    }
    result.sort();
    Ok(result)
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(config: &ExperimentConfig, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    pool.install(|| run_sweep(config))
}

fn row(scheme: &Scheme, d_x: f64, out: &TraceOutcome, tx_power: f64) -> Result<SweepRow> {
    Ok(SweepRow {
        scheme: scheme.label.to_string(),
        bias_p: scheme.bias_p,
        d_x,
        efficiency: efficiency(out, tx_power)?,
        captured_w: out.captured_power,
        escaped_w: out.escaped_power,
        terminated_w: out.terminated_power,
    })
}

/// Decimal rendering with 9 significant digits, e.g. `0.0123456789` ->
/// `0.0123456789`, `2.5` -> `2.50000000`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.8e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if v < 0.0 { "-" } else { "" };
    let body = if exp >= 8 {
        format!("{digits}{}", "0".repeat((exp - 8) as usize))
    } else if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        format!("{int}.{frac}")
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

/// [`format_sig9`] without trailing fractional zeros.
pub fn format_sig9_trimmed(v: f64) -> String {
    let s = format_sig9(v);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.scheme,
            r.bias_p.map(format_sig9).unwrap_or_default(),
            format_sig9(r.d_x),
            format_sig9(r.efficiency),
            format_sig9(r.captured_w),
            format_sig9(r.escaped_w),
            format_sig9(r.terminated_w),
        )?;
    }
    w.flush()
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> io::Result<()> {
    write_sweep_csv(result, BufWriter::new(File::create(path)?))
}

/// Per-subunit dump: `i,j,normal_x,normal_y`.
pub fn write_schedule_csv<W: Write>(
    schedule: &Schedule,
    panel: &HsfPanel,
    mut w: W,
) -> io::Result<()> {
    writeln!(w, "i,j,normal_x,normal_y")?;
    for (i, (j, n)) in schedule.assignment.iter().zip(&panel.normals).enumerate() {
        writeln!(w, "{i},{j},{},{}", format_sig9(n.x), format_sig9(n.y))?;
    }
    w.flush()
}

/// Ray polyline dump: `ray_id,vertex_seq,x,y,fate`. Requires an outcome
/// traced with path recording on.
pub fn write_paths_csv<W: Write>(outcome: &TraceOutcome, mut w: W) -> io::Result<()> {
    writeln!(w, "ray_id,vertex_seq,x,y,fate")?;
    for (id, rec) in outcome.per_ray_records.iter().flatten().enumerate() {
        for (seq, p) in rec.path.iter().enumerate() {
            writeln!(
                w,
                "{id},{seq},{},{},{}",
                format_sig9(p.x),
                format_sig9(p.y),
                rec.fate.as_str()
            )?;
        }
    }
    w.flush()
}
