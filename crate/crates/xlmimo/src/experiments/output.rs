use std::io::Write;

use serde::Serialize;

/// One finished experiment run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub experiment: String,
    pub scenario: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    /// `#`-prefixed metadata lines, then a CSV header and one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# experiment: {}", self.experiment)?;
        writeln!(out, "# scenario: {}", self.scenario)?;
        writeln!(out, "# config_sha256: {}", self.config_hash)?;
        writeln!(out, "# version: {}", self.version)?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "{}", self.headers.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    /// Column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}
