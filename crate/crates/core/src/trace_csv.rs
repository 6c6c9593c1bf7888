//! CSV serialization of simulation traces.
//!
//! Columns are `t, x_l, y_l, th_l` followed by 19 columns per follower,
//! prefixed with the follower name. Numbers use the shortest decimal form
//! that parses back to the identical `f64`, never exponent notation.

use std::io::{self, BufRead, Write};

use crate::sim::{FollowerRow, Trace};

/// Per-follower column names, in order.
pub const FOLLOWER_COLUMNS: [&str; 19] = [
    "x", "y", "th", "ex_hat", "ey_hat", "eth_hat", "v", "w", "wL", "wR", "k1", "k2", "k3", "w_d", "th_d", "V1", "V2",
    "l_actual", "l_d",
];

pub const LEADER_COLUMNS: [&str; 4] = ["t", "x_l", "y_l", "th_l"];

pub fn header(follower_names: &[String]) -> Vec<String> {
    let mut cols: Vec<String> = LEADER_COLUMNS.iter().map(|s| s.to_string()).collect();
    for name in follower_names {
        cols.extend(FOLLOWER_COLUMNS.iter().map(|c| format!("{name}.{c}")));
    }
    cols
}

fn follower_values(f: &FollowerRow) -> [f64; 19] {
    [
        f.pose.x,
        f.pose.y,
        f.pose.theta,
        f.e_hat.ex_hat,
        f.e_hat.ey_hat,
        f.e_hat.etheta_hat,
        f.cmd.v,
        f.cmd.omega,
        f.wheels.left,
        f.wheels.right,
        f.gains.k1(),
        f.gains.k2(),
        f.gains.k3(),
        f.omega_d,
        f.theta_d,
        f.lyapunov.v1,
        f.lyapunov.v2,
        f.l_actual,
        f.l_d,
    ]
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{}", header(&trace.follower_names).join(","))?;
    for row in &trace.rows {
        write!(out, "{},{},{},{}", row.t, row.leader.x, row.leader.y, row.leader.theta)?;
        for f in &row.followers {
            for v in follower_values(f) {
                write!(out, ",{v}")?;
            }
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Header and numeric rows of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table<R: BufRead>(input: R) -> io::Result<CsvTable> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut lines = input.lines();
    let header: Vec<String> = match lines.next() {
        Some(l) => l?.split(',').map(str::to_string).collect(),
        None => return Err(bad("empty file".into())),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let row = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1))))
            .collect::<io::Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(bad(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// The values `write_trace` emits for one row, in column order.
pub fn row_values(trace: &Trace, i: usize) -> Vec<f64> {
    let row = &trace.rows[i];
    let mut v = vec![row.t, row.leader.x, row.leader.y, row.leader.theta];
    for f in &row.followers {
        v.extend_from_slice(&follower_values(f));
    }
    v
}
