//! Dataset-distance tables: one reference cloud against several others.

use std::fs;
use std::path::{Path, PathBuf};

use ing_core::linalg::Matrix;
use ing_core::otdd::{otdd_distance_with, CostModel, LabeledPointCloud, OtddResult, OtddSettings};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{FeatureSource, LoadedCloud};
use crate::error::{ProtocolError, Result};
use crate::report::format_2dp;

pub const OTDD_JSON: &str = "otdd.json";
pub const OTDD_CSV: &str = "otdd.csv";
pub const OTDD_MD: &str = "otdd.md";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceRow {
    pub reference: String,
    pub dataset: String,
    pub otdd: f64,
    pub features: FeatureSource,
    pub points: usize,
    pub solver: OtddResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceTable {
    pub settings: OtddSettings,
    pub rows: Vec<DistanceRow>,
}

/// [`ing_core::otdd::pairwise_cost`] with rows filled concurrently.
pub fn parallel_cost(src: &LabeledPointCloud, dst: &LabeledPointCloud) -> ing_core::Result<Matrix> {
    let model = CostModel::new(src, dst)?;
    let cols = model.cols();
    let mut data = vec![0.0; model.rows() * cols];
    if cols > 0 {
        data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| model.fill_row(i, row));
    }
    Matrix::from_row_major(model.rows(), cols, data)
}

/// Distances from `reference` to each of `compared`, in input order.
pub fn distance_table(reference: &LoadedCloud, compared: &[LoadedCloud], settings: &OtddSettings) -> Result<DistanceTable> {
    for c in compared {
        if c.cloud.dim() != reference.cloud.dim() {
            return Err(ProtocolError::invalid(
                &c.path,
                format!(
                    "feature dimension {} does not match {} ({})",
                    c.cloud.dim(),
                    reference.path.display(),
                    reference.cloud.dim()
                ),
            ));
        }
    }
    let rows = compared
        .par_iter()
        .map(|c| {
            let r = otdd_distance_with(&reference.cloud, &c.cloud, settings, parallel_cost)
                .map_err(|e| ProtocolError::core(&c.path, e))?;
            Ok(DistanceRow {
                reference: reference.cloud.name().to_owned(),
                dataset: c.cloud.name().to_owned(),
                otdd: r.distance,
                features: c.source.clone(),
                points: c.cloud.len(),
                solver: r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceTable {
        settings: *settings,
        rows,
    })
}

pub fn table_csv(table: &DistanceTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = || -> csv::Result<()> {
        w.write_record([
            "reference",
            "dataset",
            "OTDD",
            "epsilon",
            "max_iter",
            "tol",
            "iterations",
            "converged",
            "features",
        ])?;
        for r in &table.rows {
            w.write_record([
                r.reference.as_str(),
                r.dataset.as_str(),
                &format_2dp(r.otdd),
                &r.solver.epsilon.to_string(),
                &table.settings.max_iter.to_string(),
                &table.settings.tol.to_string(),
                &r.solver.iterations.to_string(),
                &r.solver.converged.to_string(),
                &r.features.to_string(),
            ])?;
        }
        Ok(())
    };
    rows().expect("writing CSV to memory");
    String::from_utf8(w.into_inner().expect("flushing CSV to memory")).expect("CSV is UTF-8")
}

pub fn table_markdown(table: &DistanceTable) -> String {
    let mut out = String::from("| Reference dataset | Dataset | OTDD |\n|---|---|---:|\n");
    for r in &table.rows {
        out.push_str(&format!("| {} | {} | {} |\n", r.reference, r.dataset, format_2dp(r.otdd)));
    }
    let eps = match table.settings.epsilon {
        Some(e) => e.to_string(),
        None => "0.05 x mean cost".to_owned(),
    };
    out.push_str(&format!(
        "\nSinkhorn: epsilon {eps}, max_iter {}, tol {}.\n",
        table.settings.max_iter, table.settings.tol
    ));
    for r in table.rows.iter().filter(|r| !r.solver.converged) {
        out.push_str(&format!(
            "{} did not converge (marginal violation {:e}).\n",
            r.dataset, r.solver.violation
        ));
    }
    out
}

pub fn write_table(dir: &Path, table: &DistanceTable) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| ProtocolError::io(dir, e))?;
    let mut json = serde_json::to_string_pretty(table).expect("table serializes");
    json.push('\n');
    let mut out = Vec::new();
    for (name, text) in [
        (OTDD_JSON, json),
        (OTDD_CSV, table_csv(table)),
        (OTDD_MD, table_markdown(table)),
    ] {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| ProtocolError::io(&p, e))?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ing_core::otdd::pairwise_cost;

    fn cloud(name: &str, pts: &[[f64; 2]], labels: &[usize]) -> LoadedCloud {
        let v: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        LoadedCloud {
            path: PathBuf::from(format!("{name}.json")),
            cloud: LabeledPointCloud::new(name, &v, labels.to_vec()).unwrap(),
            source: FeatureSource::Embeddings,
        }
    }

    #[test]
    fn parallel_cost_matches_serial() {
        let a = cloud("a", &[[0.0, 1.0], [2.0, 0.5], [1.0, 1.0]], &[0, 1, 1]).cloud;
        let b = cloud("b", &[[0.5, 0.0], [3.0, 1.0]], &[1, 0]).cloud;
        assert_eq!(parallel_cost(&a, &b).unwrap(), pairwise_cost(&a, &b).unwrap());
    }

    #[test]
    fn table_layout() {
        let r = cloud("orig", &[[0.0, 0.0], [1.0, 0.0]], &[0, 1]);
        let same = cloud("same", &[[0.0, 0.0], [1.0, 0.0]], &[0, 1]);
        let far = cloud("far", &[[3.0, 0.0], [4.0, 0.0]], &[0, 1]);
        let t = distance_table(&r, &[same, far], &OtddSettings::default()).unwrap();
        assert!(t.rows[0].otdd <= 1e-6);
        assert!(t.rows[1].otdd > 1.0);
        let csv = table_csv(&t);
        assert!(csv.starts_with("reference,dataset,OTDD,"));
        assert!(csv.contains("orig,same,0.00,"));
        assert!(table_markdown(&t).starts_with("| Reference dataset | Dataset | OTDD |"));

        let bad = LoadedCloud {
            path: PathBuf::from("bad.json"),
            cloud: LabeledPointCloud::new("bad", &[vec![1.0]], vec![0]).unwrap(),
            source: FeatureSource::Embeddings,
        };
        assert!(distance_table(&r, &[bad], &OtddSettings::default()).unwrap_err().to_string().contains("bad.json"));
    }
}
