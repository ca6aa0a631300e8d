//! Report rendering: JSON (full detail), CSV tables and markdown.

use std::fs;
use std::path::{Path, PathBuf};

use ing_core::{ClassMode, MetricId};

use crate::error::{ProtocolError, Result};
use crate::eval::MetricReport;

pub const REPORT_JSON: &str = "report.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const THRESHOLDS_CSV: &str = "thresholds.csv";
pub const CURVES_CSV: &str = "curves.csv";
pub const REPORT_MD: &str = "report.md";

/// Two decimals, rounding half up on the shortest decimal representation
/// of `v` (so 71.235 gives "71.24" even though the nearest double is
/// slightly below it).
pub fn format_2dp(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{}", v.abs());
    let (int, frac) = s.split_once('.').unwrap_or((s.as_str(), ""));
    let mut digits: Vec<u8> = int
        .bytes()
        .chain(frac.bytes().chain(std::iter::repeat(b'0')).take(2))
        .collect();
    if frac.len() > 2 && frac.as_bytes()[2] >= b'5' {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - 2;
    let body = format!(
        "{}.{}",
        std::str::from_utf8(&digits[..split]).unwrap(),
        std::str::from_utf8(&digits[split..]).unwrap()
    );
    if v < 0.0 && digits.iter().any(|&d| d != b'0') {
        format!("-{body}")
    } else {
        body
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_2dp).unwrap_or_default()
}

fn csv_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    rows(&mut w).expect("writing CSV to memory");
    String::from_utf8(w.into_inner().expect("flushing CSV to memory")).expect("CSV is UTF-8")
}

/// One row per metric: `model_id,metric,class_mode,method_id,value,n_evaluated,n_skipped`.
pub fn metrics_csv(report: &MetricReport) -> String {
    csv_string(|w| {
        w.write_record(["model_id", "metric", "class_mode", "method_id", "value", "n_evaluated", "n_skipped"])?;
        for r in &report.results {
            w.write_record([
                report.model_id.as_str(),
                r.metric.as_str(),
                r.class_mode.as_str(),
                r.method_id.as_str(),
                &format_opt(r.value),
                &r.n_evaluated.to_string(),
                &r.n_skipped.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Per-threshold PC and DC values.
pub fn thresholds_csv(report: &MetricReport) -> String {
    csv_string(|w| {
        w.write_record(["model_id", "metric", "class_mode", "method_id", "t", "value"])?;
        for r in &report.results {
            for &(t, v) in &r.per_threshold {
                w.write_record([
                    report.model_id.as_str(),
                    r.metric.as_str(),
                    r.class_mode.as_str(),
                    r.method_id.as_str(),
                    &t.to_string(),
                    &format_2dp(v),
                ])?;
            }
        }
        Ok(())
    })
}

/// Perturbation accuracy per level bin.
pub fn curves_csv(report: &MetricReport) -> String {
    csv_string(|w| {
        w.write_record(["model_id", "metric", "class_mode", "method_id", "level", "accuracy"])?;
        for r in &report.results {
            for &(level, acc) in &r.per_level {
                w.write_record([
                    report.model_id.as_str(),
                    r.metric.as_str(),
                    r.class_mode.as_str(),
                    r.method_id.as_str(),
                    &level.to_string(),
                    &format_2dp(acc),
                ])?;
            }
        }
        Ok(())
    })
}

const TABLE_METRICS: [(MetricId, &str); 5] = [
    (MetricId::Sd, "SD"),
    (MetricId::Pc, "PC"),
    (MetricId::Dc, "DC"),
    (MetricId::PerturbPositive, "Positive"),
    (MetricId::PerturbNegative, "Negative"),
];

/// One table per class mode, one row per method.
pub fn markdown(report: &MetricReport) -> String {
    let mut out = format!(
        "# {} on {}\n\n{} images, thresholds {:?}, {} aggregation, {} coverage.\n",
        report.model_id,
        report.dataset_name,
        report.image_count,
        report.config.thresholds,
        match report.config.aggregation {
            ing_core::Aggregation::SumPerPart => "sum-per-part",
            ing_core::Aggregation::MeanPerPart => "mean-per-part",
        },
        match report.config.coverage {
            ing_core::CoveragePolicy::SkipMissing => "skip-missing",
            ing_core::CoveragePolicy::FailMissing => "fail-missing",
        },
    );
    for mode in ClassMode::ALL {
        let mut methods: Vec<&str> = report
            .results
            .iter()
            .filter(|r| r.class_mode == mode)
            .map(|r| r.method_id.as_str())
            .collect();
        methods.dedup();
        if methods.is_empty() {
            continue;
        }
        out.push_str(&format!("\n## {} class\n\n| Method |", mode.as_str()));
        for (_, name) in TABLE_METRICS {
            out.push_str(&format!(" {name} |"));
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(TABLE_METRICS.len()));
        out.push('\n');
        for m in methods {
            out.push_str(&format!("| {m} |"));
            for (metric, _) in TABLE_METRICS {
                let cell = report
                    .result(metric, m, mode)
                    .and_then(|r| r.value)
                    .map_or_else(|| "-".to_owned(), format_2dp);
                out.push_str(&format!(" {cell} |"));
            }
            out.push('\n');
        }
    }
    for note in &report.clamped {
        out.push_str(&format!(
            "\nNegative importances clamped for {} ({}): {}\n",
            note.method_id,
            note.class_mode.as_str(),
            note.image_ids.join(", ")
        ));
    }
    out
}

pub fn report_json(report: &MetricReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn read_report(path: &Path) -> Result<MetricReport> {
    let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ProtocolError::invalid(path, format!("invalid report JSON: {e}")))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| ProtocolError::io(&p, e))?;
    Ok(p)
}

/// Writes the JSON report and its renderings into `dir`.
pub fn write_report(dir: &Path, report: &MetricReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| ProtocolError::io(dir, e))?;
    Ok(vec![
        write(dir, REPORT_JSON, &report_json(report))?,
        write(dir, METRICS_CSV, &metrics_csv(report))?,
        write(dir, THRESHOLDS_CSV, &thresholds_csv(report))?,
        write(dir, CURVES_CSV, &curves_csv(report))?,
        write(dir, REPORT_MD, &markdown(report))?,
    ])
}

/// Re-renders the CSV and markdown files from a JSON report.
pub fn render_report(dir: &Path, report: &MetricReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| ProtocolError::io(dir, e))?;
    Ok(vec![
        write(dir, METRICS_CSV, &metrics_csv(report))?,
        write(dir, THRESHOLDS_CSV, &thresholds_csv(report))?,
        write(dir, CURVES_CSV, &curves_csv(report))?,
        write(dir, REPORT_MD, &markdown(report))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_decimals_round_half_up() {
        assert_eq!(format_2dp(71.235), "71.24");
        assert_eq!(format_2dp(71.234), "71.23");
        assert_eq!(format_2dp(66.666_666_666_666_67), "66.67");
        assert_eq!(format_2dp(100.0), "100.00");
        assert_eq!(format_2dp(0.0), "0.00");
        assert_eq!(format_2dp(99.995), "100.00");
        assert_eq!(format_2dp(9.995), "10.00");
        assert_eq!(format_2dp(0.005), "0.01");
        assert_eq!(format_2dp(0.004999), "0.00");
        assert_eq!(format_2dp(50.5), "50.50");
        assert_eq!(format_2dp(-1.005), "-1.01");
        assert_eq!(format_2dp(-0.001), "0.00");
        assert_eq!(format_2dp(1e-7), "0.00");
        assert_eq!(format_2dp(85459.0), "85459.00");
    }
}
