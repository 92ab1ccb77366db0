//! CSV and JSON writers. Numbers are written in their shortest round-trip
//! decimal form, so identical runs give identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use coevolve::Trajectory;
use serde::Serialize;

use crate::CliError;

/// Writes `t, rho_1..rho_n` and, when `eta_stride > 0`, the row-major
/// weights `eta_i_j` on every `eta_stride`-th row and the last row. Other
/// rows leave the weight cells empty. A `truncation` note is appended as a
/// final comment line.
pub fn write_trajectory_csv(
    path: &Path,
    traj: &Trajectory,
    eta_stride: usize,
    truncation: Option<&str>,
) -> Result<(), CliError> {
    let n = traj.vertex_count();
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("rho_{i}")));
        if eta_stride > 0 {
            for i in 1..=n {
                header.extend((1..=n).map(|j| format!("eta_{i}_{j}")));
            }
        }
        w.write_record(&header)
            .map_err(|e| CliError::csv(path, e))?;
        let last = traj.len().saturating_sub(1);
        for k in 0..traj.len() {
            let mut row = vec![traj.times[k].to_string()];
            row.extend(traj.rho[k].as_slice().iter().map(f64::to_string));
            if eta_stride > 0 {
                if k % eta_stride == 0 || k == last {
                    row.extend(traj.eta[k].as_slice().iter().map(f64::to_string));
                } else {
                    row.extend(std::iter::repeat_n(String::new(), n * n));
                }
            }
            w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    if let Some(note) = truncation {
        writeln!(out, "# truncated: {note}").map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use coevolve::{EdgeMatrix, MassVector};

    #[test]
    fn eta_cells_follow_stride() {
        let mut t = Trajectory::default();
        for k in 0..4 {
            t.push(
                k as f64 * 0.1,
                MassVector(vec![1.0, 0.5]),
                EdgeMatrix::filled(2, 0.25),
            );
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trajectory_csv(&p, &t, 2, Some("diverged")).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,rho_1,rho_2,eta_1_1,eta_1_2,eta_2_1,eta_2_2");
        assert_eq!(lines[1], "0,1,0.5,0.25,0.25,0.25,0.25");
        assert_eq!(lines[2], "0.1,1,0.5,,,,");
        assert!(lines[4].starts_with("0.30000000000000004,1,0.5,0.25"));
        assert_eq!(lines[5], "# truncated: diverged");
    }
}
