use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::fmt17;

use super::{SweepResult, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// CSV with columns `k,x,f,g,m,v`, reals at 17 significant digits.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "x", "f", "g", "m", "v"])?;
    for r in traj.records() {
        w.write_record([
            r.k.to_string(),
            fmt17(r.x),
            fmt17(r.f),
            fmt17(r.g),
            fmt17(r.m),
            fmt17(r.v),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn export_trajectory(traj: &Trajectory, path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => write_trajectory_csv(traj, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, traj)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn import_trajectory_json(path: &Path) -> Result<Trajectory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// CSV with columns `beta1,beta2,alpha,final_x,min_abs_g,verdict`.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beta1", "beta2", "alpha", "final_x", "min_abs_g", "verdict"])?;
    for c in &result.cells {
        w.write_record([
            fmt17(c.beta1),
            fmt17(c.beta2),
            fmt17(c.alpha),
            fmt17(c.final_x),
            fmt17(c.min_abs_g),
            c.verdict.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
