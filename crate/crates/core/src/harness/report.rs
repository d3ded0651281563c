use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::io::{read_properties, read_table};

#[derive(Clone, Debug, PartialEq)]
pub enum EntryStatus {
    Pass,
    Fail,
    /// Unreadable file or row.
    Corrupt(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportEntry {
    pub file: String,
    pub property: String,
    pub value: Option<f64>,
    pub bound: String,
    pub status: EntryStatus,
}

#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub entries: Vec<ReportEntry>,
    /// Data files without assertions, with their row counts.
    pub data_files: Vec<(String, usize)>,
    pub config_hashes: Vec<String>,
}

impl Summary {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.data_files.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.status != EntryStatus::Pass).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 && self.config_hashes.len() <= 1 {
            0
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        if self.is_empty() {
            return "no artifacts\n".to_string();
        }
        let mut s = String::new();
        let width = self.entries.iter().map(|e| e.property.len()).max().unwrap_or(8);
        for e in &self.entries {
            let value = e.value.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
            match &e.status {
                EntryStatus::Corrupt(msg) => {
                    let _ = writeln!(s, "CORRUPT {:width$}  {}: {msg}", e.property, e.file);
                }
                st => {
                    let tag = if *st == EntryStatus::Pass { "PASS   " } else { "FAIL   " };
                    let _ = writeln!(s, "{tag} {:width$}  {value:>13} {:<26} {}", e.property, e.bound, e.file);
                }
            }
        }
        for (file, rows) in &self.data_files {
            let _ = writeln!(s, "data    {file} ({rows} rows)");
        }
        if self.config_hashes.len() > 1 {
            let _ = writeln!(s, "mixed config hashes: {}", self.config_hashes.join(", "));
        }
        let passed = self.entries.len() - self.failures();
        let _ = writeln!(s, "{passed}/{} properties pass", self.entries.len());
        s
    }
}

fn corrupt(file: &str, msg: String) -> ReportEntry {
    ReportEntry {
        file: file.to_string(),
        property: "-".into(),
        value: None,
        bound: String::new(),
        status: EntryStatus::Corrupt(msg),
    }
}

/// Summarises every CSV artifact in `dir`. Files with a `property` column
/// contribute their rows; other files are checked for readability.
pub fn summarize(dir: &Path) -> std::io::Result<Summary> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();
    let mut summary = Summary::default();
    for name in names {
        let path = dir.join(&name);
        let table = match read_table(&path) {
            Ok(t) => t,
            Err(e) => {
                summary.entries.push(corrupt(&name, e.to_string()));
                continue;
            }
        };
        match table.meta.get("config_hash") {
            Some(h) => {
                if !summary.config_hashes.iter().any(|x| x == h) {
                    summary.config_hashes.push(h.to_string());
                }
            }
            None => summary.entries.push(corrupt(&name, "missing config_hash header".into())),
        }
        if table.column("property").is_none() {
            summary.data_files.push((name, table.rows.len()));
            continue;
        }
        match read_properties(&path) {
            Ok(rows) => {
                for row in rows {
                    summary.entries.push(match row {
                        Ok((property, value, bound, passed)) => ReportEntry {
                            file: name.clone(),
                            property,
                            value: Some(value),
                            bound,
                            status: if passed { EntryStatus::Pass } else { EntryStatus::Fail },
                        },
                        Err(msg) => corrupt(&name, msg),
                    });
                }
            }
            Err(e) => summary.entries.push(corrupt(&name, e.to_string())),
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let s = summarize(dir.path()).unwrap();
        assert_eq!(s.render(), "no artifacts\n");
        assert_eq!(s.exit_code(), 0);
    }

    #[test]
    fn failed_and_corrupt_rows() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("assertions.csv"),
            "# config_hash = ab\nproperty,value,threshold,relation,status\na,1e-9,1e-6,<=,pass\nb,2.0,1.0,<=,fail\nc,x,1,<=,pass\n",
        )
        .unwrap();
        let s = summarize(dir.path()).unwrap();
        assert_eq!(s.entries.len(), 3);
        assert_eq!(s.entries[0].status, EntryStatus::Pass);
        assert_eq!(s.entries[1].status, EntryStatus::Fail);
        assert!(matches!(s.entries[2].status, EntryStatus::Corrupt(_)));
        assert_eq!(s.exit_code(), 1);
        let text = s.render();
        assert!(text.contains("FAIL"));
        assert!(text.contains("1/3 properties pass"));
    }
}
