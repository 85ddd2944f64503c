//! JSON instance manifests tying the matrix files and inline vectors together.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use ipmqp_core::problem::{Iterate, QpError, QpProblem};

use crate::matrix_market::{read_matrix, write_matrix};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartTriple {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

/// On-disk description of one instance: matrix file paths (relative to the
/// manifest), inline right-hand-side vectors, and an optional interior start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub n: usize,
    pub m: usize,
    pub a_path: String,
    pub q_path: String,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
}

/// Loads and validates an instance. The problem is checked (rank,
/// symmetry, semidefiniteness) before returning; an included start must be
/// strictly interior and dimensionally consistent.
pub fn load_instance(manifest_path: &Path) -> Result<(QpProblem, Option<Iterate>), CliError> {
    let text = fs::read_to_string(manifest_path).map_err(|e| CliError::io(manifest_path, e))?;
    let manifest: InstanceManifest = serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: manifest_path.to_path_buf(),
        source: e,
    })?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let a = read_matrix(&dir.join(&manifest.a_path))?;
    if a.nrows != manifest.m || a.ncols != manifest.n {
        return Err(QpError::DimensionMismatch(format!(
            "A is {}x{} but the manifest declares m = {}, n = {}",
            a.nrows, a.ncols, manifest.m, manifest.n
        ))
        .into());
    }
    let q = read_matrix(&dir.join(&manifest.q_path))?;
    if q.nrows != manifest.n || q.ncols != manifest.n {
        return Err(QpError::DimensionMismatch(format!(
            "Q is {}x{} but the manifest declares n = {}",
            q.nrows, q.ncols, manifest.n
        ))
        .into());
    }
    if manifest.b.len() != manifest.m || manifest.c.len() != manifest.n {
        return Err(QpError::DimensionMismatch(format!(
            "b has length {} (expected {}), c has length {} (expected {})",
            manifest.b.len(),
            manifest.m,
            manifest.c.len(),
            manifest.n
        ))
        .into());
    }

    let problem = QpProblem::new(
        a.into_store(),
        q.into_store(),
        DVector::from_vec(manifest.b.clone()),
        DVector::from_vec(manifest.c.clone()),
    )?;
    problem.validate()?;

    let start = match manifest.start {
        None => None,
        Some(triple) => {
            if triple.x.len() != manifest.n
                || triple.s.len() != manifest.n
                || triple.y.len() != manifest.m
            {
                return Err(QpError::DimensionMismatch(
                    "start triple does not match the declared dimensions".into(),
                )
                .into());
            }
            Some(Iterate::new(
                DVector::from_vec(triple.x),
                DVector::from_vec(triple.y),
                DVector::from_vec(triple.s),
            )?)
        }
    };
    Ok((problem, start))
}

/// Writes `A.mtx`, `Q.mtx` (symmetric storage) and `manifest.json` under
/// `dir`; returns the manifest path.
pub fn save_instance(
    dir: &Path,
    problem: &QpProblem,
    start: Option<&Iterate>,
    mu0: Option<f64>,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_matrix(&dir.join("A.mtx"), problem.a(), false)?;
    write_matrix(&dir.join("Q.mtx"), problem.q(), true)?;
    let manifest = InstanceManifest {
        n: problem.num_vars(),
        m: problem.num_constraints(),
        a_path: "A.mtx".into(),
        q_path: "Q.mtx".into(),
        b: problem.b().iter().cloned().collect(),
        c: problem.c().iter().cloned().collect(),
        start: start.map(|it| StartTriple {
            x: it.x().iter().cloned().collect(),
            y: it.y().iter().cloned().collect(),
            s: it.s().iter().cloned().collect(),
        }),
        mu0,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ipmqp_core::generator::{generate, GenSpec};

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let (problem, start) =
            generate(&GenSpec { n: 7, m: 3, density: 1.0, q_rank: 2, mu0: 1.0, seed: 31 })
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_instance(dir.path(), &problem, Some(&start), Some(1.0)).unwrap();
        let (loaded, loaded_start) = load_instance(&manifest).unwrap();
        assert_eq!(loaded.a().to_dense(), problem.a().to_dense());
        assert_eq!(loaded.q().to_dense(), problem.q().to_dense());
        assert_eq!(loaded.b(), problem.b());
        assert_eq!(loaded.c(), problem.c());
        assert_eq!(loaded_start.unwrap(), start);
    }

    #[test]
    fn dimension_mismatch_is_validation_failure() {
        let (problem, start) =
            generate(&GenSpec { n: 5, m: 2, density: 1.0, q_rank: 0, mu0: 1.0, seed: 4 })
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = save_instance(dir.path(), &problem, Some(&start), None).unwrap();
        // Corrupt the declared n.
        let text = fs::read_to_string(&manifest_path).unwrap();
        let mut manifest: InstanceManifest = serde_json::from_str(&text).unwrap();
        manifest.n = 4;
        fs::write(&manifest_path, serde_json::to_string(&manifest).unwrap()).unwrap();
        match load_instance(&manifest_path) {
            Err(CliError::Validation(QpError::DimensionMismatch(_))) => {}
            other => panic!("expected dimension mismatch, got {other:?}"),
        }
    }

    #[test]
    fn unsymmetric_q_surfaces_offending_indices() {
        let (problem, _) =
            generate(&GenSpec { n: 4, m: 2, density: 1.0, q_rank: 1, mu0: 1.0, seed: 9 })
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = save_instance(dir.path(), &problem, None, None).unwrap();
        // Rewrite Q as a general file with one asymmetric entry.
        fs::write(
            dir.path().join("Q.mtx"),
            "%%MatrixMarket matrix coordinate real general\n4 4 2\n1 2 3.0\n2 1 1.0\n",
        )
        .unwrap();
        match load_instance(&manifest_path) {
            Err(CliError::Validation(QpError::NotSymmetric { i, j, deviation })) => {
                assert_eq!((i.min(j), i.max(j)), (0, 1));
                assert!((deviation - 2.0).abs() < 1e-15);
            }
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
    }

    #[test]
    fn missing_matrix_file_is_reported() {
        let (problem, _) =
            generate(&GenSpec { n: 4, m: 2, density: 1.0, q_rank: 0, mu0: 1.0, seed: 9 })
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = save_instance(dir.path(), &problem, None, None).unwrap();
        fs::remove_file(dir.path().join("A.mtx")).unwrap();
        assert!(matches!(load_instance(&manifest_path), Err(CliError::MissingFile(_))));
    }

    #[test]
    fn non_interior_start_is_rejected() {
        let (problem, start) =
            generate(&GenSpec { n: 4, m: 2, density: 1.0, q_rank: 0, mu0: 1.0, seed: 2 })
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = save_instance(dir.path(), &problem, Some(&start), None).unwrap();
        let text = fs::read_to_string(&manifest_path).unwrap();
        let mut manifest: InstanceManifest = serde_json::from_str(&text).unwrap();
        manifest.start.as_mut().unwrap().x[0] = 0.0;
        fs::write(&manifest_path, serde_json::to_string(&manifest).unwrap()).unwrap();
        assert!(matches!(
            load_instance(&manifest_path),
            Err(CliError::Validation(QpError::NonInterior { .. }))
        ));
    }
}
