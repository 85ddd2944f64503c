//! CSV emission: per-iteration solve traces and scaling reports.
//!
//! Floats are written with `{}` (shortest decimal that round-trips), so
//! identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ipmqp_core::analysis::ScalingReport;
use ipmqp_core::ipm::SolveResult;

use crate::CliError;

pub const TRACE_HEADER: &str =
    "iter,mu,sigma,alpha,r_ratio,prox2,min_ratio,max_ratio,primal_res,dual_res,dxds,lemma_slack";

/// One row per outer iteration, header always present.
pub fn save_trace(result: &SolveResult, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &result.trace {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.iter,
                r.mu,
                r.sigma,
                r.alpha,
                r.r_ratio,
                r.prox2,
                r.min_ratio,
                r.max_ratio,
                r.primal_res,
                r.dual_res,
                r.dxds,
                r.lemma_slack
            )?;
        }
        w.flush()
    };
    emit().map_err(|e| CliError::io(path, e))
}

/// `n,iterations` rows for a scaling report.
pub fn save_scaling_csv(report: &ScalingReport, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "n,iterations")?;
        for (n, l) in report.sizes.iter().zip(&report.iterations) {
            writeln!(w, "{n},{l}")?;
        }
        w.flush()
    };
    emit().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ipmqp_core::generator::{generate, GenSpec};
    use ipmqp_core::ipm::{run, SolverConfig};

    #[test]
    fn trace_csv_shape_and_determinism() {
        let (problem, start) =
            generate(&GenSpec { n: 6, m: 3, density: 1.0, q_rank: 2, mu0: 1.0, seed: 8 })
                .unwrap();
        let mut cfg = SolverConfig::short_step();
        cfg.epsilon = 1e-3;
        let result = run(&problem, &start, &cfg).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("t1.csv");
        let p2 = dir.path().join("t2.csv");
        save_trace(&result, &p1).unwrap();
        let again = run(&problem, &start, &cfg).unwrap();
        save_trace(&again, &p2).unwrap();

        let t1 = std::fs::read(&p1).unwrap();
        let t2 = std::fs::read(&p2).unwrap();
        assert_eq!(t1, t2, "identical runs must serialize identically");

        let text = String::from_utf8(t1).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), result.iterations);
        let mut prev = f64::INFINITY;
        for row in rows {
            let mu: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
            assert!(mu < prev);
            prev = mu;
        }
    }

    #[test]
    fn zero_iteration_trace_is_header_only() {
        let (problem, start) =
            generate(&GenSpec { n: 4, m: 2, density: 1.0, q_rank: 0, mu0: 1.0, seed: 8 })
                .unwrap();
        let mut cfg = SolverConfig::short_step();
        cfg.epsilon = 5.0;
        let result = run(&problem, &start, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        save_trace(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim_end(), TRACE_HEADER);
    }
}
