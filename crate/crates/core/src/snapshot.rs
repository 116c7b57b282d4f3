//! Binary field snapshots and trajectory indices.
//!
//! Layout of an `ANF1` file, all integers and floats little-endian:
//!
//! | bytes   | content                                   |
//! |---------|-------------------------------------------|
//! | 0..4    | magic `ANF1`                              |
//! | 4..28   | `nx`, `ny`, `nz` as `u64`                 |
//! | 28..36  | component count (`3`) as `u64`            |
//! | 36..    | components 1, 2, 3 as `f64` in storage order (x fastest) |
//!
//! Components 1 and 2 hold `nx ny nz` values, component 3 holds `nx ny (nz+1)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::EulerTrajectory;
use crate::field::VectorField;
use crate::grid::{Grid, Loc};

pub const MAGIC: &[u8; 4] = b"ANF1";
const HEADER: usize = 36;

pub fn to_bytes(f: &VectorField) -> Vec<u8> {
    let g = f.grid;
    let n: usize = f.comps.iter().map(|c| c.len()).sum();
    let mut out = Vec::with_capacity(HEADER + 8 * n);
    out.extend_from_slice(MAGIC);
    for v in [g.nx, g.ny, g.nz, 3] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for c in &f.comps {
        for x in c {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("eight bytes"))
}

pub fn from_bytes(b: &[u8]) -> Result<VectorField> {
    if b.len() < HEADER || &b[..4] != MAGIC {
        return Err(Error::Format("missing ANF1 header".into()));
    }
    let dims: Vec<usize> = (0..4).map(|i| read_u64(b, 4 + 8 * i) as usize).collect();
    if dims[3] != 3 {
        return Err(Error::Format(format!("expected 3 components, found {}", dims[3])));
    }
    let g = Grid::new(dims[0], dims[1], dims[2])?;
    let lens = Loc::VELOCITY.map(|l| g.len(l));
    let total: usize = lens.iter().sum();
    if b.len() != HEADER + 8 * total {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", 8 * total, b.len() - HEADER)));
    }
    let mut at = HEADER;
    let comps = lens.map(|n| {
        let v = (0..n)
            .map(|i| f64::from_le_bytes(b[at + 8 * i..at + 8 * i + 8].try_into().expect("eight bytes")))
            .collect();
        at += 8 * n;
        v
    });
    Ok(VectorField { grid: g, comps })
}

pub fn write_snapshot(path: &Path, f: &VectorField) -> Result<()> {
    fs::write(path, to_bytes(f))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<VectorField> {
    from_bytes(&fs::read(path)?)
}

/// Sidecar record stored next to a snapshot as `<name>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub time: f64,
    pub step: usize,
    pub seed: Option<u64>,
    pub params: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_with_meta(path: &Path, f: &VectorField, meta: &SnapshotMeta) -> Result<()> {
    write_snapshot(path, f)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    pub horizon: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub entries: Vec<IndexEntry>,
}

pub const INDEX_FILE: &str = "index.json";

/// Write every stored state as `w_NNNNN.anf` plus `index.json` into `dir`.
pub fn save_trajectory(dir: &Path, traj: &EulerTrajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(traj.states.len());
    for (i, (s, &t)) in traj.states.iter().zip(&traj.times).enumerate() {
        let file = format!("w_{i:05}.anf");
        let step = (t / traj.dt).round() as usize;
        let meta = SnapshotMeta { time: t, step, seed: None, params: serde_json::json!({ "dt": traj.dt }) };
        write_with_meta(&dir.join(&file), s, &meta)?;
        entries.push(IndexEntry { file, time: t });
    }
    let index = TrajectoryIndex { horizon: traj.horizon, dt: traj.dt, sample_every: traj.sample_every, entries };
    fs::write(dir.join(INDEX_FILE), serde_json::to_string_pretty(&index)?)?;
    Ok(())
}

pub fn load_trajectory(dir: &Path) -> Result<EulerTrajectory> {
    let index: TrajectoryIndex = serde_json::from_str(&fs::read_to_string(dir.join(INDEX_FILE))?)?;
    if index.entries.is_empty() {
        return Err(Error::Format("trajectory index has no entries".into()));
    }
    let states = index.entries.iter().map(|e| read_snapshot(&dir.join(&e.file))).collect::<Result<Vec<_>>>()?;
    if states.iter().any(|s| s.grid != states[0].grid) {
        return Err(Error::GridMismatch);
    }
    Ok(EulerTrajectory {
        times: index.entries.iter().map(|e| e.time).collect(),
        states,
        horizon: index.horizon,
        dt: index.dt,
        sample_every: index.sample_every,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{default_initial_spec, initial_state, run_euler, EulerConfig};

    #[test]
    fn header_layout() {
        let g = Grid::new(4, 6, 5).unwrap();
        let f = VectorField::from_fn(g, |c, p| c as f64 + p[0] - p[2]);
        let b = to_bytes(&f);
        assert_eq!(&b[..4], b"ANF1");
        assert_eq!(read_u64(&b, 4), 4);
        assert_eq!(read_u64(&b, 12), 6);
        assert_eq!(read_u64(&b, 20), 5);
        assert_eq!(read_u64(&b, 28), 3);
        assert_eq!(b.len(), 36 + 8 * (2 * 120 + 144));
        assert_eq!(from_bytes(&b).unwrap(), f);
    }

    #[test]
    fn corrupt_input_rejected() {
        let g = Grid::new(4, 4, 4).unwrap();
        let mut b = to_bytes(&VectorField::zeros(g));
        assert!(matches!(from_bytes(&b[..b.len() - 1]), Err(Error::Format(_))));
        b[0] = b'X';
        assert!(matches!(from_bytes(&b), Err(Error::Format(_))));
        assert!(from_bytes(&[]).is_err());
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(8, 8, 8).unwrap();
        let w0 = initial_state(&default_initial_spec(), g).unwrap();
        let traj = run_euler(&w0, &EulerConfig { dt: 1e-2, horizon: 0.03, sample_every: 2 }).unwrap();
        save_trajectory(dir.path(), &traj).unwrap();
        let back = load_trajectory(dir.path()).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
        assert_eq!(back.steps(), traj.steps());
        let meta: SnapshotMeta =
            serde_json::from_str(&fs::read_to_string(dir.path().join("w_00001.json")).unwrap()).unwrap();
        assert_eq!(meta.step, 2);
    }
}
