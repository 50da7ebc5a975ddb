//! CSV grids and JSON sidecars.

use crate::grid::GridField;
use crate::residual::ResidualReport;
use serde_json::Value;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// One output file plus its metadata.
#[derive(Debug, Clone)]
pub struct Emission {
    pub name: String,
    pub csv: String,
    pub meta: Value,
}

fn num(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

/// `r,z,psi[,extra...],valid`, one row per node, `r` outermost. Extra
/// columns are evaluated only at valid nodes.
pub fn grid_csv(grid: &GridField, extra: &[&str], f: impl Fn(f64, f64, f64) -> Option<Vec<f64>>) -> String {
    let s = &grid.spec;
    let mut out = String::from("r,z,psi");
    for e in extra {
        out.push(',');
        out.push_str(e);
    }
    out.push_str(",valid\n");
    for i in 0..s.n_r {
        for j in 0..s.n_z {
            let (r, z) = (s.r(i), s.z(j));
            let vals = grid
                .get(i, j)
                .and_then(|psi| f(r, z, psi).filter(|v| v.len() == extra.len()).map(|v| (psi, v)));
            num(&mut out, r);
            out.push(',');
            num(&mut out, z);
            match vals {
                Some((psi, v)) => {
                    out.push(',');
                    num(&mut out, psi);
                    for x in v {
                        out.push(',');
                        num(&mut out, x);
                    }
                    out.push_str(",1\n");
                }
                None => {
                    for _ in 0..=extra.len() {
                        out.push_str(",nan");
                    }
                    out.push_str(",0\n");
                }
            }
        }
    }
    out
}

/// Plain table with a header row.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (k, x) in row.into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            num(&mut out, x);
        }
        out.push('\n');
    }
    out
}

/// Residual report with the failure list capped for the sidecar.
pub fn report_json(rep: &ResidualReport) -> Value {
    let mut r = rep.clone();
    let total = r.failures.len();
    r.failures.truncate(10);
    let mut v = serde_json::to_value(&r).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("failures_total".into(), total.into());
    }
    v
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `csv` and its `.json` sidecar.
pub fn write_pair(path: &Path, e: &Emission) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, &e.csv)?;
    let mut meta = serde_json::to_string_pretty(&e.meta).map_err(io::Error::other)?;
    meta.push('\n');
    fs::write(sidecar_path(path), meta)
}
