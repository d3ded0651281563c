//! CSV serialisation with `#`-prefixed metadata headers.
//!
//! Every artifact starts with `# key = value` lines (metadata values that
//! are structured are written as JSON) followed by an ordinary CSV table.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::engine::{DiscreteFlowTrace, PropertyReport, Relation};
use crate::error::{Result, SpaceError};
use crate::geodesic::GeodesicPath;
use crate::kahler::{Potential, SurfaceBackground};

/// Ordered `key = value` pairs written above a table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn io_err(e: impl std::fmt::Display) -> SpaceError {
    SpaceError::InvalidArgument(format!("io: {e}"))
}

/// Floats are written in round-trip exponent form so outputs are
/// byte-identical across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Writes a metadata header and a CSV table.
pub fn write_table(path: &Path, meta: &Metadata, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for (k, v) in &meta.entries {
        writeln!(out, "# {k} = {v}").map_err(io_err)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(io_err)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(SpaceError::InvalidArgument(format!(
                "row has {} fields, table has {} columns",
                row.len(),
                columns.len()
            )));
        }
        w.write_record(row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub meta: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(io_err)?;
    let mut meta = Metadata::new();
    let mut body = String::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err)?;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| io_err(format!("malformed metadata line `{line}`")))?;
            meta.push(k.trim(), v.trim());
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns = r.headers().map_err(io_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(io_err)?.iter().map(String::from).collect());
    }
    Ok(Table { meta, columns, rows })
}

/// One row of `N` values; metadata carries `n` and the background id.
pub fn write_potential(path: &Path, bg: &SurfaceBackground, phi: &Potential, extra: &Metadata) -> Result<()> {
    let mut meta = extra.clone();
    meta.push("n", bg.n());
    meta.push("background", bg.id());
    let columns: Vec<String> = (0..phi.len()).map(|k| format!("x{k}")).collect();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    write_table(path, &meta, &cols, &[phi.values().iter().map(|v| fmt_f64(*v)).collect()])
}

/// Reads a potential written by [`write_potential`] and checks it against
/// `bg` (size and positivity).
pub fn read_potential(path: &Path, bg: &SurfaceBackground) -> Result<Potential> {
    let t = read_table(path)?;
    if let Some(n) = t.meta.get("n") {
        if n.parse::<usize>().ok() != Some(bg.n()) {
            return Err(SpaceError::InvalidArgument(format!(
                "potential file has n = {n}, background has {}",
                bg.n()
            )));
        }
    }
    let row = t
        .rows
        .first()
        .ok_or_else(|| io_err(format!("{} has no data row", path.display())))?;
    let values = row
        .iter()
        .map(|s| s.trim().parse::<f64>().map_err(io_err))
        .collect::<Result<Vec<_>>>()?;
    bg.potential(values)
}

/// One row per slice: `t, energy, x0..x{N-1}`; metadata holds ε, the
/// per-slice energies and residuals as JSON.
pub fn write_geodesic(path: &Path, bg: &SurfaceBackground, g: &GeodesicPath, extra: &Metadata) -> Result<()> {
    let mut meta = extra.clone();
    let info = serde_json::json!({
        "epsilon": g.epsilon,
        "energy": g.energy,
        "solver_residual": g.solver_residual,
        "energy_drift": g.energy_drift(),
        "hcma_residual": g.hcma_residual(bg),
        "velocity_kind": format!("{:?}", g.velocity_kind),
    });
    meta.push("geodesic", info);
    meta.push("background", bg.id());
    let mut columns = vec!["t".to_string(), "energy".to_string()];
    columns.extend((0..bg.n()).map(|k| format!("x{k}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = g
        .times
        .iter()
        .zip(&g.energy)
        .zip(&g.slices)
        .map(|((t, e), s)| {
            let mut row = vec![fmt_f64(*t), fmt_f64(*e)];
            row.extend(s.iter().map(|v| fmt_f64(*v)));
            row
        })
        .collect();
    write_table(path, &meta, &cols, &rows)
}

pub fn write_trace<P>(path: &Path, trace: &DiscreteFlowTrace<P>, extra_columns: &[(&str, Vec<f64>)], meta: &Metadata) -> Result<()> {
    let mut columns = vec![
        "j",
        "t",
        "energy",
        "step_distance",
        "objective",
        "euler_lagrange",
        "inner_iterations",
        "certified",
        "boundary_limited",
    ];
    columns.extend(extra_columns.iter().map(|(n, _)| *n));
    let rows: Vec<Vec<String>> = (0..trace.iterates.len())
        .map(|j| {
            let mut row = vec![j.to_string(), fmt_f64(trace.times[j]), fmt_f64(trace.energies[j])];
            match j.checked_sub(1).map(|i| &trace.steps[i]) {
                Some(s) => row.extend([
                    fmt_f64(s.step_distance),
                    fmt_f64(s.objective),
                    fmt_f64(s.euler_lagrange),
                    s.inner_iterations.to_string(),
                    s.certified.to_string(),
                    s.boundary_limited.to_string(),
                ]),
                None => row.extend(["", "", "", "", "", ""].map(String::from)),
            }
            row.extend(extra_columns.iter().map(|(_, v)| fmt_f64(v[j])));
            row
        })
        .collect();
    let mut meta = meta.clone();
    meta.push("tau", fmt_f64(trace.tau));
    write_table(path, &meta, &columns, &rows)
}

pub fn relation_str(r: Relation) -> &'static str {
    match r {
        Relation::AtMost => "<=",
        Relation::AtLeast => ">=",
    }
}

/// `property, value, threshold, relation, status`.
pub fn write_properties(path: &Path, report: &PropertyReport, meta: &Metadata) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            vec![
                e.name.clone(),
                fmt_f64(e.value),
                fmt_f64(e.threshold),
                relation_str(e.relation).to_string(),
                if e.passed { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    write_table(path, meta, &["property", "value", "threshold", "relation", "status"], &rows)
}

/// Parses a file written by [`write_properties`]. Rows whose status or
/// value cannot be read are returned as errors in place.
pub fn read_properties(path: &Path) -> Result<Vec<std::result::Result<(String, f64, String, bool), String>>> {
    let t = read_table(path)?;
    let idx = |name: &str| t.column(name).ok_or_else(|| io_err(format!("missing column `{name}`")));
    let (p, v, th, rel, st) = (idx("property")?, idx("value")?, idx("threshold")?, idx("relation")?, idx("status")?);
    Ok(t.rows
        .iter()
        .map(|row| {
            let name = row.get(p).cloned().unwrap_or_default();
            let value = row
                .get(v)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| format!("{name}: unreadable value"))?;
            let status = match row.get(st).map(String::as_str) {
                Some("pass") => true,
                Some("fail") => false,
                _ => return Err(format!("{name}: unreadable status")),
            };
            let bound = format!(
                "{} {}",
                row.get(rel).map(String::as_str).unwrap_or("?"),
                row.get(th).map(String::as_str).unwrap_or("?")
            );
            Ok((name, value, bound, status))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PropertyEntry;
    use crate::kahler::FourierMode;

    #[test]
    fn potential_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bg = SurfaceBackground::flat(16).unwrap();
        let phi = bg.potential_from_modes(0.1, &[FourierMode::cosine(2, 1e-3)]).unwrap();
        let path = dir.path().join("phi.csv");
        write_potential(&path, &bg, &phi, &Metadata::new().with("config_hash", "abc")).unwrap();
        let back = read_potential(&path, &bg).unwrap();
        assert_eq!(back, phi);
        let t = read_table(&path).unwrap();
        assert_eq!(t.meta.get("config_hash"), Some("abc"));
        assert_eq!(t.meta.get("n"), Some("16"));
        assert!(read_potential(&path, &SurfaceBackground::flat(32).unwrap()).is_err());
    }

    #[test]
    fn properties_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rep = PropertyReport::default();
        rep.push(PropertyEntry::new("npc", -1e-9, 1e-6, Relation::AtMost));
        rep.push(PropertyEntry::new("order", 0.5, 0.9, Relation::AtLeast));
        let path = dir.path().join("assertions.csv");
        write_properties(&path, &rep, &Metadata::new()).unwrap();
        let rows = read_properties(&path).unwrap();
        assert_eq!(rows.len(), 2);
        let (name, value, _, ok) = rows[0].clone().unwrap();
        assert_eq!((name.as_str(), value, ok), ("npc", -1e-9, true));
        assert!(!rows[1].clone().unwrap().3);
    }

    #[test]
    fn short_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_table(&dir.path().join("t.csv"), &Metadata::new(), &["a", "b"], &[vec!["1".into()]]);
        assert!(err.is_err());
    }
}
