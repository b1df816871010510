//! Solution curves and their CSV form.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    /// second coordinate for mixed problems
    pub t2: Option<f64>,
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub truncated_fraction: f64,
    /// fraction of exits decided by a same-step tie (mixed MC only)
    pub tie_fraction: Option<f64>,
}

impl CurvePoint {
    pub fn exact(t: f64, t2: Option<f64>, value: f64) -> Self {
        CurvePoint {
            t,
            t2,
            value,
            std_error: 0.0,
            n_paths: 0,
            truncated_fraction: 0.0,
            tie_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCurve {
    pub method: String,
    pub points: Vec<CurvePoint>,
}

impl SolutionCurve {
    pub fn new(method: impl Into<String>, points: Vec<CurvePoint>) -> Self {
        SolutionCurve {
            method: method.into(),
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    fn two_d(&self) -> bool {
        self.points.iter().any(|p| p.t2.is_some())
    }

    /// Header row plus one row per point; shortest round-trip float format.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let two_d = self.two_d();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t"];
        if two_d {
            header.push("t2");
        }
        header.extend(["value", "std_error", "n_paths", "truncated_fraction"]);
        if two_d {
            header.push("tie_fraction");
        }
        header.push("method");
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.t.to_string()];
            if two_d {
                row.push(p.t2.unwrap_or(f64::NAN).to_string());
            }
            row.extend([
                p.value.to_string(),
                p.std_error.to_string(),
                p.n_paths.to_string(),
                p.truncated_fraction.to_string(),
            ]);
            if two_d {
                row.push(p.tie_fraction.unwrap_or(0.0).to_string());
            }
            row.push(self.method.clone());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
