//! On-disk formats.
//!
//! Configurations are JSON objects `{"dim", "masses", "positions"}`, with
//! optional `alpha` and `velocities`. Trajectories are CSV files with header
//! `t,x_1_1,…,x_N_d,v_1_1,…,v_N_d` and a `<stem>.meta.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use expansive_core::{Configuration, MassSystem, PotentialModel, Provenance, Trajectory};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CliResult, Failure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub dim: usize,
    pub masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<Vec<f64>>>,
}

impl SystemFile {
    pub fn system(&self) -> CliResult<MassSystem> {
        Ok(MassSystem::new(self.masses.clone(), self.dim)?)
    }

    pub fn model(&self, alpha: Option<f64>) -> CliResult<PotentialModel> {
        let alpha = alpha.or(self.alpha).ok_or_else(|| Failure::validation("α is missing"))?;
        Ok(PotentialModel::new(alpha, self.system()?)?)
    }

    pub fn positions(&self, system: &MassSystem) -> CliResult<Configuration> {
        let rows = self.positions.as_ref().ok_or_else(|| Failure::validation("`positions` is missing"))?;
        configuration(system, rows)
    }

    pub fn velocities(&self, system: &MassSystem) -> CliResult<Vec<f64>> {
        let rows = self.velocities.as_ref().ok_or_else(|| Failure::validation("`velocities` is missing"))?;
        Ok(configuration(system, rows)?.into_coords())
    }

    /// Checks that `other` describes the same bodies.
    pub fn same_bodies(&self, other: &SystemFile, what: &str) -> CliResult<()> {
        if self.dim != other.dim || self.masses != other.masses {
            return Err(Failure::validation(format!("{what} has different masses or dimension")));
        }
        Ok(())
    }
}

pub fn configuration(system: &MassSystem, rows: &[Vec<f64>]) -> CliResult<Configuration> {
    if rows.len() != system.n_bodies() {
        return Err(Failure::validation(format!("expected {} bodies, found {}", system.n_bodies(), rows.len())));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != system.dim()) {
        return Err(Failure::validation(format!("expected {} coordinates per body, found {}", system.dim(), r.len())));
    }
    Ok(Configuration::new(system, rows.concat())?)
}

pub fn rows(flat: &[f64], dim: usize) -> Vec<Vec<f64>> {
    flat.chunks(dim).map(<[f64]>::to_vec).collect()
}

/// Parses a JSON file, returning the value as read for hashing.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<(T, Value)> {
    let text = fs::read_to_string(path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    let parsed =
        serde_json::from_value(value.clone()).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    Ok((parsed, value))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::validation(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Asymptotic data a trajectory was built for, when known.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeRecord {
    /// `hyperbolic`, `parabolic` or `hp`.
    pub regime: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bm: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_cluster: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub alpha: f64,
    pub dim: usize,
    pub masses: Vec<f64>,
    /// `minimized`, `integrated` or `reference`.
    pub provenance: String,
    /// Energy reported for the last sample.
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeRecord>,
}

impl TrajectoryMeta {
    pub fn new(model: &PotentialModel, traj: &Trajectory, regime: Option<RegimeRecord>) -> Self {
        Self {
            alpha: model.alpha(),
            dim: model.system().dim(),
            masses: model.system().masses().to_vec(),
            provenance: provenance_label(traj.provenance()).to_string(),
            energy: traj.energy(),
            regime,
        }
    }

    pub fn model(&self) -> CliResult<PotentialModel> {
        Ok(PotentialModel::new(self.alpha, MassSystem::new(self.masses.clone(), self.dim)?)?)
    }
}

pub fn provenance_label(p: Provenance) -> &'static str {
    match p {
        Provenance::Minimized => "minimized",
        Provenance::Integrated => "integrated",
        Provenance::Reference => "reference",
    }
}

fn parse_provenance(s: &str) -> CliResult<Provenance> {
    match s {
        "minimized" => Ok(Provenance::Minimized),
        "integrated" => Ok(Provenance::Integrated),
        "reference" => Ok(Provenance::Reference),
        _ => Err(Failure::validation(format!("unknown provenance {s:?}"))),
    }
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.meta.json"))
}

pub fn header(n: usize, d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["x", "v"] {
        for i in 1..=n {
            for a in 1..=d {
                h.push(format!("{prefix}_{i}_{a}"));
            }
        }
    }
    h
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::validation(format!("{}: {e}", path.display()))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, meta: &TrajectoryMeta) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header(traj.n_bodies(), traj.dim())).map_err(|e| csv_error(path, e))?;
    for k in 0..traj.len() {
        let row = std::iter::once(traj.times()[k])
            .chain(traj.positions()[k].iter().copied())
            .chain(traj.velocities()[k].iter().copied())
            .map(|v| format!("{v:e}"));
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    write_json(&meta_path(path), meta)
}

pub fn read_trajectory(path: &Path) -> CliResult<(Trajectory, TrajectoryMeta)> {
    let (meta, _): (TrajectoryMeta, _) = read_json(&meta_path(path))?;
    let n = meta.masses.len();
    let width = n * meta.dim;
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let expected = header(n, meta.dim);
    let found: Vec<String> =
        r.headers().map_err(|e| csv_error(path, e))?.iter().map(|s| s.trim().to_string()).collect();
    if found != expected {
        return Err(Failure::validation(format!("{}: header does not match the sidecar", path.display())));
    }
    let (mut times, mut positions, mut velocities) = (Vec::new(), Vec::new(), Vec::new());
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| csv_error(path, format!("row {}: {e}", line + 1)))?;
        times.push(values[0]);
        positions.push(values[1..1 + width].to_vec());
        velocities.push(values[1 + width..].to_vec());
    }
    let traj = Trajectory::new(
        times,
        positions,
        velocities,
        meta.dim,
        meta.alpha,
        parse_provenance(&meta.provenance)?,
        meta.energy,
    )?;
    Ok((traj, meta))
}
