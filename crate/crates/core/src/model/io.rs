//! CSV encodings: grid functions (`zeta,value`), modal vectors (`j,c_j`) and
//! trajectories (`t,norm_X[,c_1..c_N]`).
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back reproduces the in-memory values bit for bit.

use std::io::{Read, Write};

use super::grid::GridFunction;
use super::modal::ModalVector;
use super::trajectory::{ModelKind, States, Trajectory};
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn parse_f64(s: &str, what: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} `{s}`")))
}

fn expect_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_err)?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got.len() < expected.len() || got[..expected.len()] != *expected {
        return Err(Error::Parse(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

pub fn write_grid(f: &GridFunction, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["zeta", "value"]).map_err(csv_err)?;
    for (z, v) in f.nodes().zip(f.values()) {
        w.write_record([z.to_string(), v.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read `zeta,value` rows; the abscissae must form the uniform grid of `[0, 1]`.
pub fn read_grid(input: impl Read) -> Result<GridFunction> {
    let mut rdr = csv::Reader::from_reader(input);
    expect_header(&mut rdr, &["zeta", "value"])?;
    let mut zetas = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        zetas.push(parse_f64(rec.get(0).unwrap_or(""), "zeta", line)?);
        values.push(parse_f64(rec.get(1).unwrap_or(""), "value", line)?);
    }
    let n = values.len();
    let f = GridFunction::new(values)?;
    for (i, z) in zetas.iter().enumerate() {
        let expect = i as f64 / (n - 1) as f64;
        if (z - expect).abs() > 1e-9 {
            return Err(Error::Parse(format!(
                "row {}: zeta = {z} is not on the uniform grid (expected {expect})",
                i + 1
            )));
        }
    }
    Ok(f)
}

pub fn write_modal(v: &ModalVector, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "c_j"]).map_err(csv_err)?;
    for (i, c) in v.coefficients().iter().enumerate() {
        w.write_record([(i + 1).to_string(), c.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read `j,c_j` rows; missing modes up to the largest `j` are zero.
pub fn read_modal(input: impl Read) -> Result<ModalVector> {
    let mut rdr = csv::Reader::from_reader(input);
    expect_header(&mut rdr, &["j", "c_j"])?;
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let j: usize = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: bad mode index")))?;
        if j == 0 {
            return Err(Error::Parse(format!("line {line}: modes are 1-based")));
        }
        pairs.push((j, parse_f64(rec.get(1).unwrap_or(""), "c_j", line)?));
    }
    let order = pairs.iter().map(|p| p.0).max().unwrap_or(0);
    let mut c = vec![0.0; order];
    for (j, v) in pairs {
        c[j - 1] = v;
    }
    Ok(ModalVector::new(c))
}

pub fn write_trajectory(traj: &Trajectory, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let order = traj.modal_states().map_or(0, |s| s[0].order());
    let mut header = vec!["t".to_string(), "norm_X".to_string()];
    header.extend((1..=order).map(|j| format!("c_{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, (t, n)) in traj.times().iter().zip(traj.norms()).enumerate() {
        let mut row = vec![t.to_string(), n.to_string()];
        if let Some(states) = traj.modal_states() {
            row.extend(states[i].coefficients().iter().map(f64::to_string));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a trajectory CSV. Files with `c_j` columns become heat trajectories whose
/// norms are recomputed from the coefficients; otherwise only the norm column is kept.
pub fn read_trajectory(input: impl Read, model: ModelKind, rho: f64) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(input);
    expect_header(&mut rdr, &["t", "norm_X"])?;
    let width = rdr.headers().map_err(csv_err)?.len();
    let mut times = Vec::new();
    let mut norms = Vec::new();
    let mut states = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        if rec.len() != width {
            return Err(Error::Parse(format!(
                "line {line}: expected {width} columns"
            )));
        }
        times.push(parse_f64(&rec[0], "t", line)?);
        norms.push(parse_f64(&rec[1], "norm_X", line)?);
        if width > 2 {
            let c = (2..width)
                .map(|k| parse_f64(&rec[k], "c_j", line))
                .collect::<Result<Vec<_>>>()?;
            states.push(ModalVector::new(c));
        }
    }
    if times.is_empty() {
        return Err(Error::Parse("trajectory file has no rows".into()));
    }
    if width > 2 {
        Trajectory::modal(times, states, rho)
    } else {
        Trajectory::norms_only(times, norms, model, rho)
    }
}

/// Long-format full-state snapshots `t,zeta,value` of a grid trajectory.
pub fn write_snapshots(traj: &Trajectory, out: impl Write) -> Result<()> {
    let States::Grid(states) = traj.states() else {
        return Err(Error::Parse("snapshots need grid states".into()));
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "zeta", "value"]).map_err(csv_err)?;
    for (t, s) in traj.times().iter().zip(states) {
        for (z, v) in s.nodes().zip(s.values()) {
            w.write_record([t.to_string(), z.to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
