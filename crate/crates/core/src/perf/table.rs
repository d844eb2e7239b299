//! Rendering of per-scheme result columns as text and CSV.

use std::fmt::Write as _;

use super::{percent_peak, roofline_time, CostLedger, KernelCost, MachineModel, PerfError, GB};

#[derive(Debug, Clone, PartialEq)]
pub struct TableColumn {
    pub label: String,
    pub gflops: f64,
    pub read_gb: f64,
    pub write_gb: f64,
}

impl TableColumn {
    pub fn from_gb(label: &str, gflops: f64, read_gb: f64, write_gb: f64) -> Self {
        Self { label: label.to_string(), gflops, read_gb, write_gb }
    }

    pub fn from_cost(label: &str, c: &KernelCost) -> Self {
        Self::from_gb(label, c.flops / GB, c.read / GB, c.write / GB)
    }

    pub fn from_ledger(label: &str, l: &CostLedger) -> Self {
        Self::from_cost(label, &l.total())
    }

    pub fn cost(&self) -> KernelCost {
        KernelCost::new(self.gflops * GB, self.read_gb * GB, self.write_gb * GB)
    }

    pub fn intensity(&self) -> f64 {
        self.gflops / (self.read_gb + self.write_gb)
    }

    pub fn runtime(&self, m: &MachineModel) -> f64 {
        roofline_time(&self.cost(), m)
    }

    pub fn percent_peak(&self, m: &MachineModel) -> f64 {
        percent_peak(self.gflops * GB, self.runtime(m), m)
    }
}

const ROWS: [&str; 6] = [
    "GFlops per node",
    "read traffic in GB",
    "write traffic in GB",
    "arithmetic intensity",
    "optimal runtime in seconds",
    "% of theoretical peak",
];

/// Text table plus CSV. CSV rows are `row,<col>,...` with full precision.
pub fn emit_table(cols: &[TableColumn], m: &MachineModel) -> (String, String) {
    let values = |c: &TableColumn| {
        [c.gflops, c.read_gb, c.write_gb, c.intensity(), c.runtime(m), c.percent_peak(m)]
    };
    let mut text = format!("{:<28}", "");
    let mut csv = String::from("row");
    for c in cols {
        let _ = write!(text, "{:>12}", c.label);
        let _ = write!(csv, ",{}", c.label);
    }
    text.push('\n');
    csv.push('\n');
    if cols.is_empty() {
        return (text, csv);
    }
    let all: Vec<_> = cols.iter().map(values).collect();
    for (i, row) in ROWS.iter().enumerate() {
        let _ = write!(text, "{row:<28}");
        let _ = write!(csv, "{row}");
        for v in &all {
            let _ = write!(text, "{:>12.2}", v[i]);
            let _ = write!(csv, ",{:?}", v[i]);
        }
        text.push('\n');
        csv.push('\n');
    }
    (text, csv)
}

/// Recover the input columns from `emit_table` CSV.
pub fn parse_table_csv(csv: &str) -> Result<Vec<TableColumn>, PerfError> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or_else(|| PerfError::Csv("empty".into()))?;
    let labels: Vec<&str> = header.split(',').skip(1).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines.take(3) {
        let vals = line
            .split(',')
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| PerfError::Csv(format!("{s}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != labels.len() {
            return Err(PerfError::Csv(format!("row has {} values, expected {}", vals.len(), labels.len())));
        }
        rows.push(vals);
    }
    if labels.is_empty() {
        return Ok(Vec::new());
    }
    if rows.len() != 3 {
        return Err(PerfError::Csv("missing rows".into()));
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(j, l)| TableColumn::from_gb(l, rows[0][j], rows[1][j], rows[2][j]))
        .collect())
}
