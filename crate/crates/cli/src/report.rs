//! Report tables: CSV for machines, aligned text for people, both built
//! from the same rows.

use std::path::Path;

use jpp_core::metrics::{FactorTable, ParsingScores, PckhScores, PCKH_GROUPS};
use jpp_core::PartLabel;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].len())
                    .chain([self.header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.header) + "\n";
        out += &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ");
        out += "\n";
        for r in &self.rows {
            out += &line(r);
            out += "\n";
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        write(path, &self.to_csv())
    }
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Percentage with two decimals; `-` for missing values.
pub fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{:.2}", 100.0 * v))
}

pub const PARSING_COLUMNS: [&str; 4] = ["Method", "Overall accuracy", "Mean accuracy", "Mean IoU"];

pub fn pose_columns() -> Vec<&'static str> {
    let mut c = vec!["Method"];
    c.extend(PCKH_GROUPS.iter().map(|(n, _)| *n));
    c.push("Total");
    c
}

pub fn parsing_row(name: &str, p: &ParsingScores) -> Vec<String> {
    vec![
        name.into(),
        pct(Some(p.overall_accuracy)),
        pct(Some(p.mean_accuracy)),
        pct(Some(p.mean_iou)),
    ]
}

pub fn pose_row(name: &str, p: Option<&PckhScores>) -> Vec<String> {
    let mut r = vec![name.to_string()];
    match p {
        Some(p) => {
            r.extend(p.groups.iter().map(|g| pct(*g)));
            r.push(pct(Some(p.total)));
        }
        None => r.extend(std::iter::repeat_n("-".to_string(), PCKH_GROUPS.len() + 1)),
    }
    r
}

pub fn parsing_table(name: &str, p: &ParsingScores) -> Table {
    let mut t = Table::new(&PARSING_COLUMNS);
    t.push(parsing_row(name, p));
    t
}

pub fn pose_table(name: &str, p: Option<&PckhScores>) -> Table {
    let mut t = Table::new(&pose_columns());
    t.push(pose_row(name, p));
    t
}

/// Per-class IoU followed by the mean.
pub fn class_table(name: &str, p: &ParsingScores) -> Table {
    let mut header = vec!["Method"];
    header.extend(PartLabel::all().map(|l| l.name()));
    header.push("Mean IoU");
    let mut t = Table::new(&header);
    let mut row = vec![name.to_string()];
    row.extend(p.per_class_iou.iter().map(|v| pct(*v)));
    row.push(pct(Some(p.mean_iou)));
    t.push(row);
    t
}

pub const FACTOR_COLUMNS: [&str; 6] = ["Factor", "Samples", "Overall accuracy", "Mean accuracy", "Mean IoU", "PCKh total"];

pub fn factor_table(f: &FactorTable) -> Table {
    let mut t = Table::new(&FACTOR_COLUMNS);
    for row in std::iter::once(&f.overall).chain(&f.rows) {
        t.push(vec![
            row.label().to_string(),
            row.samples.to_string(),
            pct(row.parsing.as_ref().map(|p| p.overall_accuracy)),
            pct(row.parsing.as_ref().map(|p| p.mean_accuracy)),
            pct(row.parsing.as_ref().map(|p| p.mean_iou)),
            pct(row.pose.as_ref().map(|p| p.total)),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_csv_agree_on_cells() {
        let mut t = Table::new(&["Method", "A"]);
        t.push(vec!["x,y".into(), "1.00".into()]);
        assert_eq!(t.to_csv(), "Method,A\n\"x,y\",1.00\n");
        let text = t.to_text();
        assert!(text.starts_with("Method     A\n"), "{text}");
        assert!(text.contains("x,y     1.00"));
    }

    #[test]
    fn percentages() {
        assert_eq!(pct(Some(1.0)), "100.00");
        assert_eq!(pct(Some(0.51374)), "51.37");
        assert_eq!(pct(None), "-");
    }
}
