use std::fs;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub const HEADER: &str = "epoch,energy,train_acc,test_acc,seconds,madds";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    /// Mean training energy after inference.
    pub energy: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub seconds: f64,
    /// Multiply-adds spent in training-mode inference this epoch.
    pub madds: u64,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.epoch, self.energy, self.train_acc, self.test_acc, self.seconds, self.madds
        )
    }
}

pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    fs::write(path, to_csv(rows)).map_err(|e| HarnessError::io(path, e))
}
