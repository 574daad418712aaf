//! CSV (`r,re,im`) plus JSON header serialization of [`RadialCharFn`].

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::RadialCharFn;
use crate::error::{Error, Result};
use crate::interp::Interpolation;
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvHeader {
    pub nodes: usize,
    pub r_max: f64,
    pub interpolation: Interpolation,
    pub provenance: String,
    pub columns: Vec<String>,
}

impl<T: Real> RadialCharFn<T> {
    pub fn header(&self) -> CsvHeader {
        CsvHeader {
            nodes: self.len(),
            r_max: self.r_max().as_f64(),
            interpolation: self.interpolation(),
            provenance: self.provenance().to_string(),
            columns: vec!["r".into(), "re".into(), "im".into()],
        }
    }

    /// CSV with 17 significant digits per value.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("r,re,im\n");
        for i in 0..self.len() {
            let v = self.value(i);
            writeln!(s, "{:.16e},{:.16e},{:.16e}", self.radii()[i].as_f64(), v.re.as_f64(), v.im.as_f64())
                .expect("writing to a String cannot fail");
        }
        s
    }

    pub fn from_csv_str(csv: &str, interpolation: Interpolation, provenance: impl Into<String>) -> Result<Self> {
        let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let cols: Vec<&str> = head.split(',').map(str::trim).collect();
        if cols != ["r", "re", "im"] {
            return Err(Error::Parse(format!("expected header r,re,im, found {head}")));
        }
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (k, line) in lines.enumerate() {
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
            if f.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 columns", k + 2)));
            }
            radii.push(T::lit(f[0]));
            values.push(Complex::new(T::lit(f[1]), T::lit(f[2])));
        }
        Self::from_values(radii, &values, interpolation, provenance)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        let io = |e: std::io::Error| Error::Parse(format!("writing {stem}: {e}"));
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv_string()).map_err(io)?;
        let header = serde_json::to_string_pretty(&self.header()).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), header).map_err(io)?;
        Ok(())
    }

    /// Reads a CSV, taking interpolation and provenance from the sibling
    /// JSON header when present.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let csv = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let header_path = path.with_extension("json");
        let (interp, prov) = match std::fs::read_to_string(&header_path) {
            Ok(h) => {
                let h: CsvHeader = serde_json::from_str(&h).map_err(|e| Error::Parse(format!("{}: {e}", header_path.display())))?;
                (h.interpolation, h.provenance)
            }
            Err(_) => (Interpolation::default(), format!("csv:{}", path.display())),
        };
        Self::from_csv_str(&csv, interp, prov)
    }
}
