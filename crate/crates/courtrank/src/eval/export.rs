//! Report writers: a tab-separated matrix per slice plus a JSON file
//! mirroring the report fields.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{Cell, EvalReport};
use crate::fmt::percent;

fn cell_line(out: &mut String, label: &str, cell: &Cell) {
    out.push_str(&format!(
        "{label}\t{}\t{}\t{}\n",
        cell.hits,
        cell.misses,
        percent(cell.rate())
    ));
}

/// Render the report as stacked TSV sections, one per slice.
pub fn report_to_tsv(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# predictor\t{}\n", report.predictor));
    out.push_str("# section: overall\nkey\thits\tmisses\trate\n");
    cell_line(&mut out, "pooled", &report.total);
    out.push_str(&format!(
        "mean_of_years\t\t\t{}\n",
        percent(report.overall_mean_of_years)
    ));
    out.push_str(&format!(
        "skipped_no_rank\t{}\t\t\n",
        report.skipped_no_rank
    ));

    if !report.per_year.is_empty() {
        out.push_str("# section: year\nyear\thits\tmisses\trate\n");
        for (year, cell) in &report.per_year {
            cell_line(&mut out, &year.to_string(), cell);
        }
    }
    if !report.by_surface.is_empty() {
        out.push_str("# section: surface\nsurface\thits\tmisses\trate\n");
        for (surface, cell) in &report.by_surface {
            cell_line(&mut out, &surface.to_string(), cell);
        }
    }
    if !report.by_category.is_empty() {
        out.push_str("# section: category\ncategory\thits\tmisses\trate\n");
        for (category, cell) in &report.by_category {
            cell_line(&mut out, &category.to_string(), cell);
        }
    }
    if !report.by_rank_band.is_empty() {
        out.push_str("# section: rank_band\nband\thits\tmisses\trate\n");
        for (band, cell) in &report.by_rank_band {
            cell_line(&mut out, &band.to_string(), cell);
        }
    }
    out
}

pub fn write_report_tsv(report: &EvalReport, path: &Path) -> Result<()> {
    fs::write(path, report_to_tsv(report)).map_err(|e| Error::io(path, e))
}

pub fn write_report_json(report: &EvalReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::integrity(format!("report serialization failed: {e}")))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn tsv_sections_cover_filled_slices() {
        let mut per_year = BTreeMap::new();
        per_year.insert(2005, Cell { hits: 9, misses: 1 });
        let report = EvalReport {
            predictor: "uniform".to_string(),
            years: vec![2005],
            total: Cell { hits: 9, misses: 1 },
            overall_pooled: Some(0.9),
            overall_mean_of_years: Some(0.9),
            per_year,
            by_surface: BTreeMap::new(),
            by_category: BTreeMap::new(),
            by_rank_band: BTreeMap::new(),
            skipped_no_rank: 0,
            evaluated_matches: 10,
        };
        let tsv = report_to_tsv(&report);
        assert!(tsv.contains("pooled\t9\t1\t90.000%"));
        assert!(tsv.contains("2005\t9\t1\t90.000%"));
        assert!(!tsv.contains("section: surface"));
    }
}
