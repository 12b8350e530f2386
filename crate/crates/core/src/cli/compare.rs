use std::fmt;
use std::path::{Path, PathBuf};

use super::{io_error, CliError, CliResult};

/// How two runs are compared.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub column: String,
    pub tolerance: f64,
    /// Compare `|a - b| / max(|a|, |b|)` instead of `|a - b|`.
    pub relative: bool,
    /// Scale the tolerance row by row with this standard-error column,
    /// read from whichever table has it (summed when both do).
    pub se_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    pub column: String,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} vs {} [{}]", self.file_a.display(), self.file_b.display(), self.column)?;
        writeln!(f, "t,a,b,abs_diff,rel_diff,allowed,pass")?;
        for r in &self.rows {
            writeln!(f, "{:?},{:?},{:?},{:e},{:e},{:e},{}", r.t, r.a, r.b, r.abs_diff, r.rel_diff, r.allowed, r.pass)?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().unwrap_or("").split(',').map(|s| s.trim().to_string()).collect();
        if header.first().map(String::as_str) != Some("t") {
            return Err(CliError::Parse { path: path.to_path_buf(), message: "first column must be `t`".into() });
        }
        let rows = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.split(',')
                    .map(|c| {
                        let c = c.trim();
                        if c.is_empty() {
                            Ok(None)
                        } else {
                            c.parse().map(Some).map_err(|_| CliError::Parse {
                                path: path.to_path_buf(),
                                message: format!("line {}: `{c}` is not a number", i + 2),
                            })
                        }
                    })
                    .collect()
            })
            .collect::<CliResult<_>>()?;
        Ok(Self { path: path.to_path_buf(), header, rows })
    }

    fn index(&self, column: &str) -> Option<usize> {
        self.header.iter().position(|h| h == column)
    }

    fn column(&self, column: &str) -> CliResult<Vec<Option<f64>>> {
        let i = self
            .index(column)
            .ok_or_else(|| CliError::ColumnMissing { column: column.to_string(), path: self.path.clone() })?;
        Ok(self.rows.iter().map(|r| r.get(i).copied().flatten()).collect())
    }
}

/// Compare `column` between two CSV tables, or between every equally named
/// CSV present in two run directories.
pub fn compare(a: &Path, b: &Path, options: &CompareOptions) -> CliResult<Vec<CompareReport>> {
    if a.is_dir() && b.is_dir() {
        let names = csv_names(a)?;
        let shared: Vec<_> = names.into_iter().filter(|n| b.join(n).is_file()).collect();
        if shared.is_empty() {
            return Err(CliError::Invalid(format!("no CSV file shared by {} and {}", a.display(), b.display())));
        }
        shared.iter().map(|n| compare_files(&a.join(n), &b.join(n), options)).collect()
    } else {
        Ok(vec![compare_files(a, b, options)?])
    }
}

fn csv_names(dir: &Path) -> CliResult<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    Ok(names)
}

pub fn compare_files(a: &Path, b: &Path, options: &CompareOptions) -> CliResult<CompareReport> {
    let (ta, tb) = (Table::read(a)?, Table::read(b)?);
    let (times_a, times_b) = (ta.column("t")?, tb.column("t")?);
    if times_a.len() != times_b.len() {
        return Err(CliError::TimeAxisMismatch(format!(
            "{} has {} rows, {} has {}",
            a.display(),
            times_a.len(),
            b.display(),
            times_b.len()
        )));
    }
    for (x, y) in times_a.iter().zip(&times_b) {
        let same = match (x, y) {
            (Some(x), Some(y)) => (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0),
            _ => false,
        };
        if !same {
            return Err(CliError::TimeAxisMismatch(format!("t = {x:?} against t = {y:?}")));
        }
    }
    let (va, vb) = (ta.column(&options.column)?, tb.column(&options.column)?);
    let se = match &options.se_column {
        None => None,
        Some(c) => {
            let (sa, sb) = (ta.index(c).map(|_| ta.column(c)).transpose()?, tb.index(c).map(|_| tb.column(c)).transpose()?);
            if sa.is_none() && sb.is_none() {
                return Err(CliError::ColumnMissing { column: c.clone(), path: a.to_path_buf() });
            }
            Some((sa, sb))
        }
    };
    let mut rows = Vec::with_capacity(va.len());
    for i in 0..va.len() {
        let t = times_a[i].unwrap();
        let (x, y) = (va[i].unwrap_or(f64::NAN), vb[i].unwrap_or(f64::NAN));
        let abs_diff = (x - y).abs();
        let scale = x.abs().max(y.abs());
        let rel_diff = if scale > 0.0 { abs_diff / scale } else { 0.0 };
        let allowed = match &se {
            None => options.tolerance,
            Some((sa, sb)) => {
                let pick = |s: &Option<Vec<Option<f64>>>| s.as_ref().and_then(|s| s[i]).unwrap_or(0.0);
                options.tolerance * (pick(sa) + pick(sb))
            }
        };
        let measured = if options.relative { rel_diff } else { abs_diff };
        rows.push(CompareRow { t, a: x, b: y, abs_diff, rel_diff, allowed, pass: measured <= allowed });
    }
    Ok(CompareReport { file_a: a.to_path_buf(), file_b: b.to_path_buf(), column: options.column.clone(), rows })
}
