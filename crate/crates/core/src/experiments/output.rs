//! CSV tables and metadata sidecars.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    /// Integers verbatim; floats with 9 significant digits in exponent form.
    pub fn render(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(0.0) => "0".to_string(),
            Cell::Float(x) => format!("{x:.8e}"),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(i) => i as f64,
            Cell::Float(x) => x,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    pub fn to_csv_string(&self) -> Result<String, RunError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| RunError::Check(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `<out>.meta.json`
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| RunError::Check(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_render_with_nine_digits() {
        assert_eq!(Cell::Float(0.338512).render(), "3.38512000e-1");
        assert_eq!(Cell::Float(-1234.56789012).render(), "-1.23456789e3");
        assert_eq!(Cell::Float(0.0).render(), "0");
        assert_eq!(Cell::Float(-0.0).render(), "0");
        assert_eq!(Cell::Int(7).render(), "7");
        assert_eq!("3.38512000e-1".parse::<f64>().unwrap(), 0.338512);
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let mut t = Table::new(["t_us", "n"]);
        t.push(vec![0.0.into(), 1usize.into()]);
        t.push(vec![0.5.into(), 2usize.into()]);
        assert_eq!(t.to_csv_string().unwrap(), "t_us,n\n0,1\n5.00000000e-1,2\n");
        assert_eq!(t.column("n").unwrap(), vec![1.0, 2.0]);
        assert!(t.column("x").is_none());
    }

    #[test]
    fn sidecar_name_appends_suffix() {
        assert_eq!(meta_path(Path::new("a/out.csv")), PathBuf::from("a/out.csv.meta.json"));
    }
}
