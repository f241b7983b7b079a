//! CSV artifact writers.

use std::fs;
use std::path::{Path, PathBuf};

use cwc_core::avalanche::{AvalancheRun, FieldSample};
use cwc_core::pointer::PointerTrajectory;
use cwc_core::unraveling::Trajectory;

use crate::CliError;

fn writer(dir: &Path, name: &str) -> Result<(csv::Writer<fs::File>, PathBuf), CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok((csv::Writer::from_path(&path)?, path))
}

/// `x, born_weight, expected, observed`
pub fn write_histogram(dir: &Path, rows: &[(f64, f64, f64, u64)]) -> Result<PathBuf, CliError> {
    let (mut w, path) = writer(dir, "histogram.csv")?;
    w.write_record(["x", "born_weight", "expected", "observed"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// `trajectory, t, p_0 .. p_K, centroid, width`
pub fn write_trajectories(dir: &Path, trajectories: &[Trajectory]) -> Result<PathBuf, CliError> {
    let (mut w, path) = writer(dir, "trajectories.csv")?;
    let blocks = trajectories.first().map_or(0, |t| t.state.block_count());
    let mut header = vec!["trajectory".to_string(), "t".to_string()];
    header.extend((0..=blocks).map(|b| format!("p_{b}")));
    header.extend(["centroid".to_string(), "width".to_string()]);
    w.write_record(&header)?;
    for tr in trajectories {
        for s in &tr.samples {
            let mut rec = vec![tr.stream_index.to_string(), s.t.to_string()];
            rec.extend(s.populations.iter().map(|p| p.to_string()));
            rec.extend([s.centroid.to_string(), s.width.to_string()]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// `t, z, n_e, n_b`
pub fn write_field(dir: &Path, field: &[FieldSample]) -> Result<PathBuf, CliError> {
    let (mut w, path) = writer(dir, "avalanche_field.csv")?;
    for s in field {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(path)
}

/// `t, current`
pub fn write_current(dir: &Path, run: &AvalancheRun) -> Result<PathBuf, CliError> {
    let (mut w, path) = writer(dir, "avalanche_current.csv")?;
    w.write_record(["t", "current"])?;
    for r in &run.output_current {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// `t, theta, theta_dot`
pub fn write_pointer(dir: &Path, tr: &PointerTrajectory) -> Result<PathBuf, CliError> {
    let (mut w, path) = writer(dir, "pointer.csv")?;
    w.write_record(["t", "theta", "theta_dot"])?;
    for r in &tr.samples {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// `field, current, drift_velocity, conductivity, drude_conductivity`
pub fn write_transport(dir: &Path, rows: &[(f64, f64, f64, f64, f64)]) -> Result<PathBuf, CliError> {
    let (mut w, path) = writer(dir, "transport.csv")?;
    w.write_record(["field", "current", "drift_velocity", "conductivity", "drude_conductivity"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_histogram(dir.path(), &[(0.5, 0.25, 10.0, 9), (1.5, 0.75, 30.0, 31)]).unwrap();
        let mut r = csv::Reader::from_path(p).unwrap();
        assert_eq!(r.headers().unwrap(), vec!["x", "born_weight", "expected", "observed"]);
        let rows: Vec<(f64, f64, f64, u64)> = r.deserialize().map(|x| x.unwrap()).collect();
        assert_eq!(rows[1], (1.5, 0.75, 30.0, 31));
    }

    #[test]
    fn field_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_field(dir.path(), &[FieldSample { t: 1.0, z: 0.5, n_e: 0.1, n_b: 2.0 }]).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("t,z,n_e,n_b\n"));
    }
}
