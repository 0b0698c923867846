//! Trajectory CSV: `t,re_rho_0_0,im_rho_0_0,…,trace_re`, 17 significant digits.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagation::Trajectory;
use crate::system::CMatrix;

pub fn trajectory_header(m: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for i in 0..m {
        for j in 0..m {
            cols.push(format!("re_rho_{i}_{j}"));
            cols.push(format!("im_rho_{i}_{j}"));
        }
    }
    cols.push("trace_re".into());
    cols.join(",")
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    let m = traj.rhos.first().map_or(0, |r| r.nrows());
    writeln!(out, "{}", trajectory_header(m))?;
    for (t, rho) in traj.times.iter().zip(&traj.rhos) {
        write!(out, "{t:.16e}")?;
        for i in 0..m {
            for j in 0..m {
                let z = rho[(i, j)];
                write!(out, ",{:.16e},{:.16e}", z.re, z.im)?;
            }
        }
        writeln!(out, ",{:.16e}", rho.trace().re)?;
    }
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Trajectory> {
    let bad = |line: usize, msg: String| Error::Parse {
        line,
        column: 0,
        message: msg,
    };
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad(1, "empty trajectory file".into()))??;
    let cols = header.split(',').count();
    // t + 2M² + trace
    let m = ((cols.saturating_sub(2)) / 2) as f64;
    let m = m.sqrt().round() as usize;
    if header != trajectory_header(m) {
        return Err(bad(1, format!("unexpected header {header:?}")));
    }
    let mut traj = Trajectory {
        times: Vec::new(),
        rhos: Vec::new(),
    };
    for (n, line) in lines.enumerate() {
        let line = line?;
        let vals = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(n + 2, e.to_string()))?;
        if vals.len() != cols {
            return Err(bad(
                n + 2,
                format!("expected {cols} fields, found {}", vals.len()),
            ));
        }
        traj.times.push(vals[0]);
        traj.rhos.push(CMatrix::from_fn(m, m, |i, j| {
            let k = 1 + 2 * (i * m + j);
            Complex64::new(vals[k], vals[k + 1])
        }));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            trajectory_header(2),
            "t,re_rho_0_0,im_rho_0_0,re_rho_0_1,im_rho_0_1,re_rho_1_0,im_rho_1_0,re_rho_1_1,im_rho_1_1,trace_re"
        );
    }

    proptest! {
        #[test]
        fn doubles_survive_the_round_trip(vals in prop::collection::vec(-1e3f64..1e3, 9), t in 0.0f64..100.0) {
            let rho = CMatrix::from_fn(3, 3, |i, j| Complex64::new(vals[i * 3 + j], vals[(i + j) % 9] / 7.0));
            let traj = Trajectory { times: vec![0.0, t], rhos: vec![rho.clone(), rho * Complex64::new(0.3, 0.1)] };
            let mut buf = Vec::new();
            write_trajectory_csv(&traj, &mut buf).unwrap();
            let back = read_trajectory_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, traj);
        }
    }
}
