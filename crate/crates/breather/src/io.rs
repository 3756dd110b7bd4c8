//! Coefficient tables on disk: one CSV per nonzero `(n,ν)` plus a JSON
//! manifest. Numbers are written in shortest round-trip form, so a reload
//! reproduces the table bit for bit.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use breather_core::breather::{CoefficientTable, Entry, SolverKind};
use breather_core::resolvent::StaggeredGrid;
use breather_core::C64;

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub n: i32,
    pub nu: u32,
    pub zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub grid: StaggeredGrid,
    pub eps: f64,
    pub nu_max: u32,
    pub solver: SolverKind,
    pub omega0: [f64; 2],
    pub k: f64,
    /// Level norms with period `2π/|k|`.
    pub norms: Vec<f64>,
    pub warnings: Vec<(u32, f64)>,
    pub entries: Vec<EntryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    f: usize,
    kind: String,
    x: f64,
    u1_re: f64,
    u1_im: f64,
    u2_re: f64,
    u2_im: f64,
    u3_re: Option<f64>,
    u3_im: Option<f64>,
    h1_re: Option<f64>,
    h1_im: Option<f64>,
    h2_re: Option<f64>,
    h2_im: Option<f64>,
}

fn node(grid: &StaggeredGrid, f: usize) -> (&'static str, f64, Option<usize>) {
    let n = grid.n;
    if f <= n {
        ("int", grid.x_int(f), Some(f))
    } else if f < 2 * n + 1 {
        ("half", grid.x_half(f - n - 1), None)
    } else {
        ("right", 0.0, Some(n + 1))
    }
}

fn entry_file(n: i32, nu: u32) -> String {
    format!("u_{n}_{nu}.csv")
}

pub fn write_entry(path: &Path, grid: &StaggeredGrid, e: &Entry) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for (f, u) in e.u.iter().enumerate() {
        let (kind, x, j3) = node(grid, f);
        let u3 = j3.map(|j| e.u3[j]);
        let h = e.h.get(f);
        w.serialize(Row {
            f,
            kind: kind.into(),
            x,
            u1_re: u[0].re,
            u1_im: u[0].im,
            u2_re: u[1].re,
            u2_im: u[1].im,
            u3_re: u3.map(|z| z.re),
            u3_im: u3.map(|z| z.im),
            h1_re: h.map(|a| a[0].re),
            h1_im: h.map(|a| a[0].im),
            h2_re: h.map(|a| a[1].re),
            h2_im: h.map(|a| a[1].im),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_entry(path: &Path, grid: &StaggeredGrid, residual: Option<f64>) -> Result<Entry> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let len = 2 * grid.n + 2;
    let mut u = Vec::with_capacity(len);
    let mut u3 = vec![C64::new(0.0, 0.0); grid.n + 2];
    let mut h = Vec::with_capacity(len);
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), i + 2))?;
        if row.f != i {
            bail!("{}: node {} out of order", path.display(), row.f);
        }
        u.push([C64::new(row.u1_re, row.u1_im), C64::new(row.u2_re, row.u2_im)]);
        if let (Some(j), Some(re), Some(im)) = (node(grid, i).2, row.u3_re, row.u3_im) {
            u3[j] = C64::new(re, im);
        }
        if let (Some(a), Some(b), Some(c), Some(d)) = (row.h1_re, row.h1_im, row.h2_re, row.h2_im) {
            h.push([C64::new(a, b), C64::new(c, d)]);
        }
    }
    if u.len() != len {
        bail!("{}: expected {len} rows, found {}", path.display(), u.len());
    }
    if !h.is_empty() && h.len() != len {
        bail!("{}: incomplete source columns", path.display());
    }
    Ok(Entry { u, u3, h, residual, zero: false })
}

/// Writes the table under `dir` and returns the manifest.
pub fn write_table(dir: &Path, table: &CoefficientTable, config: Option<&RunConfig>) -> Result<Manifest> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut entries = Vec::new();
    for (n, nu) in table.members() {
        let e = table.entry(n, nu).unwrap();
        let file = if e.zero {
            None
        } else {
            let name = entry_file(n, nu);
            write_entry(&dir.join(&name), &table.grid, e)?;
            Some(name)
        };
        entries.push(EntryRecord { n, nu, zero: e.zero, file, residual: e.residual });
    }
    let m = Manifest {
        format: 1,
        config: config.cloned(),
        grid: table.grid,
        eps: table.eps,
        nu_max: table.nu_max,
        solver: table.solver,
        omega0: [table.omega0.re, table.omega0.im],
        k: table.k,
        norms: table.norms.clone(),
        warnings: table.warnings.iter().map(|w| (w.nu, w.norm)).collect(),
        entries,
    };
    write_json(&dir.join(MANIFEST), &m)?;
    Ok(m)
}

pub fn read_table(dir: &Path) -> Result<CoefficientTable> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    StaggeredGrid::new(m.grid.d, m.grid.n).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let mut entries = Vec::new();
    for rec in &m.entries {
        let e = match (&rec.file, rec.zero) {
            (_, true) => Entry::zero(),
            (Some(f), false) => read_entry(&dir.join(f), &m.grid, rec.residual)?,
            (None, false) => bail!("manifest entry ({},{}) has no file", rec.n, rec.nu),
        };
        entries.push(((rec.n, rec.nu), e));
    }
    let omega0 = C64::new(m.omega0[0], m.omega0[1]);
    Ok(CoefficientTable::from_entries(m.grid, m.eps, m.nu_max, omega0, m.k, m.solver, entries)?)
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// Writes a header and rows of numbers.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| s.parse::<f64>().map_err(|e| anyhow!("{s}: {e}"))).collect::<Result<_>>()?);
    }
    Ok((header, rows))
}
