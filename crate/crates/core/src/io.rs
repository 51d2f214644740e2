//! CSV and JSON writers for every result type, plus state loading.
//!
//! Numbers are written in Rust's shortest round-trip form, so equal values
//! always produce equal bytes. Enum labels in CSV files use the same names as
//! the JSON serialization (`MarginallyStable`, `PairPlusIsolated`, ...).

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::agents::QRun;
use crate::analysis::{RestPoint, StabilityReport};
use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::experiments::{BasinTable, ConsistencyReport, SweepResult};
use crate::state::CoevolState;

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Reads a state in the `{"n": .., "p": [..], "c": [[..]]}` form.
pub fn read_state_json(path: &Path) -> Result<CoevolState> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// `t,p_0,..,c_0_1,..`, one row per sample.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    let n = traj.final_state().n();
    let mut header = vec!["t".to_string()];
    header.extend(CoevolState::column_names(n));
    w.write_record(&header)?;
    for s in &traj.samples {
        let mut row = vec![num(s.t)];
        row.extend(s.state.flat_values().into_iter().map(num));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `step,t,p_0,..,c_0_1,..` for the projected policies of a Q-learning run.
pub fn write_policy_trace_csv(path: &Path, run: &QRun) -> Result<()> {
    let mut w = writer(path)?;
    let n = run.final_projection.n();
    let mut header = vec!["step".to_string(), "t".to_string()];
    header.extend(CoevolState::column_names(n));
    w.write_record(&header)?;
    for s in &run.trace {
        let mut row = vec![s.step.to_string(), num(s.t)];
        row.extend(s.state.flat_values().into_iter().map(num));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per rest point: id, topology, verdict, leading real part,
/// residual and the state columns.
pub fn write_rest_points_csv(path: &Path, points: &[(RestPoint, StabilityReport)]) -> Result<()> {
    let mut w = writer(path)?;
    let n = points.first().map_or(0, |(rp, _)| rp.state.n());
    let mut header: Vec<String> =
        ["id", "configuration", "classification", "max_real", "residual"].iter().map(|s| s.to_string()).collect();
    header.extend(CoevolState::column_names(n));
    w.write_record(&header)?;
    for (id, (rp, report)) in points.iter().enumerate() {
        let mut row = vec![
            id.to_string(),
            format!("{:?}", report.matched_configuration),
            format!("{:?}", report.classification),
            num(report.max_real),
            num(rp.residual),
        ];
        row.extend(rp.state.flat_values().into_iter().map(num));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per rest point and per symmetric root at every grid
/// point. `kind` is `rest-point` or `symmetric-root`; `p` is the common
/// strategy of a symmetric root and empty for general rest points.
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "temperature",
        "c_iso",
        "kind",
        "id",
        "p",
        "classification",
        "configuration",
        "max_real",
        "residual",
    ])?;
    for point in &result.points {
        let t = num(point.temperature);
        let ci = num(point.c_iso);
        for (id, root) in point.symmetric_roots.iter().enumerate() {
            w.write_record([
                t.clone(),
                ci.clone(),
                "symmetric-root".into(),
                id.to_string(),
                num(root.p),
                format!("{:?}", root.classification),
                "SymmetricUniform".into(),
                num(root.max_real),
                String::new(),
            ])?;
        }
        for entry in &point.rest_points {
            w.write_record([
                t.clone(),
                ci.clone(),
                "rest-point".into(),
                entry.id.to_string(),
                String::new(),
                format!("{:?}", entry.classification),
                format!("{:?}", entry.configuration),
                num(entry.max_real),
                num(entry.residual),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Summary companion of [`write_sweep_csv`].
#[derive(Serialize)]
struct SweepSummary<'a> {
    axes: Vec<AxisSummary<'a>>,
    critical_temperature: Option<f64>,
    symmetric_verdicts: Vec<VerdictRow>,
    region: Option<RegionSummary<'a>>,
}

#[derive(Serialize)]
struct AxisSummary<'a> {
    name: &'a str,
    min: f64,
    max: f64,
    steps: usize,
}

#[derive(Serialize)]
struct VerdictRow {
    temperature: f64,
    c_iso: f64,
    verdict: crate::analysis::Classification,
    stable_branches: Vec<f64>,
}

#[derive(Serialize)]
struct RegionSummary<'a> {
    components: usize,
    stable_cells: usize,
    boundary: &'a [crate::experiments::BoundaryRow],
}

pub fn write_sweep_summary(path: &Path, result: &SweepResult) -> Result<()> {
    let axes = result
        .axes
        .iter()
        .map(|a| AxisSummary {
            name: &a.name,
            min: a.values.first().copied().unwrap_or(f64::NAN),
            max: a.values.last().copied().unwrap_or(f64::NAN),
            steps: a.values.len(),
        })
        .collect();
    // a plane sweep has one verdict per cell; the mask already carries it
    let symmetric_verdicts = if result.region.is_none() {
        result
            .points
            .iter()
            .map(|p| VerdictRow {
                temperature: p.temperature,
                c_iso: p.c_iso,
                verdict: p.symmetric_verdict,
                stable_branches: p.stable_branches.clone(),
            })
            .collect()
    } else {
        Vec::new()
    };
    let region = result.region.as_ref().map(|r| RegionSummary {
        components: r.components,
        stable_cells: r.mask.iter().flatten().filter(|&&m| m).count(),
        boundary: &r.boundary,
    });
    write_json(path, &SweepSummary { axes, critical_temperature: result.critical_temperature, symmetric_verdicts, region })
}

/// One row per trial with its census signature.
pub fn write_basin_csv(path: &Path, table: &BasinTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["trial", "converged", "residual", "signature", "error"])?;
    for t in &table.trial_outcomes {
        w.write_record([
            t.trial.to_string(),
            t.converged.to_string(),
            num(t.residual),
            t.census.as_ref().map(|c| c.signature()).unwrap_or_default(),
            t.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `alpha,steps,sup_gap,gap_per_alpha`.
pub fn write_consistency_csv(path: &Path, report: &ConsistencyReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["alpha", "steps", "sup_gap", "gap_per_alpha"])?;
    for r in &report.rows {
        w.write_record([num(r.alpha), r.steps.to_string(), num(r.sup_gap), num(r.gap_per_alpha)])?;
    }
    w.flush()?;
    Ok(())
}

/// `c_iso,critical_temperature`, one row; the temperature is empty when
/// the game has no critical point.
pub fn write_critical_csv(path: &Path, c_iso: f64, critical: Option<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["c_iso", "critical_temperature"])?;
    w.write_record([num(c_iso), opt_num(critical)])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, FlowParams, IntegrationControls};
    use crate::game::ReducedGame;

    #[test]
    fn state_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = CoevolState::random_interior(4, 3, 0.01).unwrap();
        write_json(&path, &s).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"n\": 4"));
        assert_eq!(read_state_json(&path).unwrap(), s);
    }

    #[test]
    fn trajectory_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let fp = FlowParams::new(ReducedGame::new(5.0, -2.0, 1.0), 0.0, 0.3).unwrap();
        let s = CoevolState::random_interior(3, 1, 0.05).unwrap();
        let controls = IntegrationControls { sample_stride: Some(0.5), ..Default::default() };
        let traj = integrate(&s, &fp, 2.0, &controls).unwrap();
        write_trajectory_csv(&path, &traj).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,p_0,p_1,p_2,c_0_1,c_0_2,c_1_0,c_1_2,c_2_0,c_2_1");
        assert_eq!(lines.count(), traj.samples.len());
    }

    #[test]
    fn malformed_state_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"n": 3, "p": [0.5, 0.5], "c": [[0,1],[1,0]]}"#).unwrap();
        assert!(read_state_json(&path).is_err());
    }
}
