//! Artifact writing: CSV tables with 17 significant digits and the JSON run
//! manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fourier_kinetic::charfun::RadialCharFn;
use serde::Serialize;

/// One CSV cell; floats always print as `{:.16e}`.
#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::F(v.unwrap_or(f64::NAN))
    }
}

/// Floats as `{:.16e}`; non-finite values as `inf`, `-inf`, `nan`.
pub fn float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn render(c: &Cell) -> String {
    match c {
        Cell::F(v) => float(*v),
        Cell::I(v) => v.to_string(),
        Cell::B(v) => v.to_string(),
        // fields never contain quotes, but may contain commas
        Cell::S(s) if s.contains(',') || s.contains('"') => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::S(s) => s.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(render).collect();
            writeln!(s, "{}", line.join(",")).expect("writing to a String cannot fail");
        }
        s
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

/// Output directory plus the list of files written so far.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn table(&mut self, name: &str, t: &Table) -> std::io::Result<()> {
        self.text(name, &t.to_csv())
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<S: Serialize>(&mut self, name: &str, v: &S) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(v).map_err(std::io::Error::other)?;
        self.text(name, &(body + "\n"))
    }

    /// `stem.csv` plus `stem.json` in the charfun schema.
    pub fn charfn(&mut self, stem: &str, f: &RadialCharFn<f64>) -> Result<(), fourier_kinetic::Error> {
        f.write_files(&self.dir, stem)?;
        self.files.push(format!("{stem}.csv"));
        self.files.push(format!("{stem}.json"));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let x = 2.0 * std::f64::consts::PI / 3.0;
        let s = float(x);
        assert_eq!(s, "2.0943951023931953e0");
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(float(f64::INFINITY), "inf");
    }

    #[test]
    fn tables_quote_commas() {
        let mut t = Table::new(&["a", "b"]);
        t.push(row![1.0, "x,y"]);
        assert_eq!(t.to_csv(), "a,b\n1.0000000000000000e0,\"x,y\"\n");
    }
}
