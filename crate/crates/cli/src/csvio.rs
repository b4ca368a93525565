use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Observed triples read from a `y,x,z` CSV.
pub struct Data {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<String>,
}

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn parse_num(s: &str, row: usize, col: &str, path: &Path) -> CliResult<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::input(format!("{}: row {row}, column `{col}`: `{s}` is not a finite number", path.display()))),
    }
}

/// Reads the `y`, `x` and `z` columns (any order, extra columns ignored).
pub fn read_data(path: &Path) -> CliResult<Data> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::input(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::input(format!("{}: missing column `{name}`", path.display())))
    };
    let (iy, ix, iz) = (col("y")?, col("x")?, col("z")?);
    let mut d = Data { y: Vec::new(), x: Vec::new(), z: Vec::new() };
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| CliError::input(format!("{}: row {row}: {e}", path.display())))?;
        let field = |i: usize, name: &str| {
            rec.get(i).ok_or_else(|| CliError::input(format!("{}: row {row}, column `{name}`: missing", path.display())))
        };
        d.y.push(parse_num(field(iy, "y")?, row, "y", path)?);
        d.x.push(parse_num(field(ix, "x")?, row, "x", path)?);
        let z = field(iz, "z")?;
        if z.is_empty() {
            return Err(CliError::input(format!("{}: row {row}, column `z`: empty label", path.display())));
        }
        d.z.push(z.to_string());
    }
    Ok(d)
}

/// Reads a two-column `(varkappa, cdf)` table; a non-numeric first row is a header.
pub fn read_marginal(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let (mut k, mut c) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CliError::input(format!("{}: row {row}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(CliError::input(format!("{}: row {row}: expected 2 columns, found {}", path.display(), rec.len())));
        }
        if i == 0 && rec[0].parse::<f64>().is_err() {
            continue;
        }
        k.push(parse_num(&rec[0], row, "varkappa", path)?);
        c.push(parse_num(&rec[1], row, "cdf", path)?);
    }
    Ok((k, c))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}
