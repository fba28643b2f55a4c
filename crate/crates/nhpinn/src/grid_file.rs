//! Cached reference solutions as text, plus CSV export.
//!
//! ```text
//! NHPINN-GRID v1
//! scheme <name>
//! resolution <n> [<n>]
//! domain <x0> <x1> [<y0> <y1>]
//! hash <hex>
//! time_step <dt>|none
//! time <t>|none
//! x <coords>
//! [y <coords>]
//! values
//! <one nodal value per line, x outermost>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nhpinn_core::reference::{Grid, GridSolution, SolverMeta};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const GRID_MAGIC: &str = "NHPINN-GRID v1";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:.16e}");
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| format!("{v:.16e}"))
}

fn axes(grid: &Grid) -> Vec<&[f64]> {
    match grid {
        Grid::Line(xs) => vec![xs],
        Grid::Plane { xs, ys } => vec![xs, ys],
    }
}

pub fn encode_grid(sol: &GridSolution, hash: &str) -> String {
    let mut out = String::new();
    let ax = axes(&sol.grid);
    let res: Vec<String> = sol.meta.resolution.iter().map(|n| n.to_string()).collect();
    let domain: Vec<f64> = ax
        .iter()
        .flat_map(|a| [a.first().copied().unwrap_or(0.0), a.last().copied().unwrap_or(0.0)])
        .collect();
    let _ = writeln!(out, "{GRID_MAGIC}");
    let _ = writeln!(out, "scheme {}", sol.meta.scheme);
    let _ = writeln!(out, "resolution {}", res.join(" "));
    let _ = writeln!(out, "domain {}", join(&domain));
    let _ = writeln!(out, "hash {hash}");
    let _ = writeln!(out, "time_step {}", opt(sol.meta.time_step));
    let _ = writeln!(out, "time {}", opt(sol.meta.time));
    for (name, a) in ["x", "y"].iter().zip(&ax) {
        let _ = writeln!(out, "{name} {}", join(a));
    }
    out.push_str("values\n");
    for v in &sol.values {
        let _ = writeln!(out, "{v:.16e}");
    }
    out
}

fn parse_f64(t: &str) -> Result<f64> {
    t.parse::<f64>().map_err(|e| Error::format(format!("number {t:?}: {e}")))
}

fn field<'a>(line: Option<&'a str>, tag: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::format(format!("missing `{tag}` line")))?;
    match line.split_once(' ') {
        Some((t, rest)) if t == tag => Ok(rest.trim()),
        _ if line == tag => Ok(""),
        _ => Err(Error::format(format!("expected `{tag}`, found {line:?}"))),
    }
}

fn parse_opt(t: &str) -> Result<Option<f64>> {
    if t == "none" {
        Ok(None)
    } else {
        parse_f64(t).map(Some)
    }
}

/// Parses a grid file, returning the solution and its stored hash.
pub fn decode_grid(text: &str) -> Result<(GridSolution, String)> {
    let mut lines = text.lines();
    if lines.next() != Some(GRID_MAGIC) {
        return Err(Error::format("bad grid file header"));
    }
    let scheme = field(lines.next(), "scheme")?.to_string();
    let resolution = field(lines.next(), "resolution")?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::format(format!("resolution {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    field(lines.next(), "domain")?;
    let hash = field(lines.next(), "hash")?.to_string();
    let time_step = parse_opt(field(lines.next(), "time_step")?)?;
    let time = parse_opt(field(lines.next(), "time")?)?;
    let coords = |s: &str| s.split_whitespace().map(parse_f64).collect::<Result<Vec<_>>>();
    let xs = coords(field(lines.next(), "x")?)?;
    let next = lines.next();
    let grid = match next {
        Some(l) if l.starts_with("y ") || l == "y" => {
            let ys = coords(field(Some(l), "y")?)?;
            field(lines.next(), "values")?;
            Grid::Plane { xs, ys }
        }
        other => {
            field(other, "values")?;
            Grid::Line(xs)
        }
    };
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_f64(l.trim()))
        .collect::<Result<Vec<_>>>()?;
    let meta = SolverMeta {
        scheme,
        resolution,
        time_step,
        time,
    };
    Ok((GridSolution::new(grid, values, meta)?, hash))
}

/// CSV with columns `x[,y][,t],u`; `t` appears for time snapshots.
pub fn grid_csv(sol: &GridSolution) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = match sol.grid {
        Grid::Line(_) => vec!["x"],
        Grid::Plane { .. } => vec!["x", "y"],
    };
    if sol.meta.time.is_some() {
        header.push("t");
    }
    header.push("u");
    let write_err = |e: csv::Error| Error::format(e.to_string());
    w.write_record(&header).map_err(write_err)?;
    let pts = sol.grid.points();
    let dim = sol.grid.dim();
    for (k, u) in sol.values.iter().enumerate() {
        let mut row: Vec<String> = pts[k * dim..(k + 1) * dim].iter().map(|v| v.to_string()).collect();
        if let Some(t) = sol.meta.time {
            row.push(t.to_string());
        }
        row.push(u.to_string());
        w.write_record(&row).map_err(write_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::format(e.to_string()))
}

pub fn save_grid_csv(sol: &GridSolution, path: &Path) -> Result<()> {
    write_atomic(path, grid_csv(sol)?.as_bytes())
}
