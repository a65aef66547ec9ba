//! Figure-data bundle: one CSV per figure family with a fixed column
//! schema, plus `bundle.json` describing every file.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{
    epoc_by_neighbor_stability, epoc_curves, group_pair_epoc, magnitude_curves, movement_probability_curves,
    pos_neg_ratio, radicalization_curves, AnalysisOptions, ShiftRecord, RADICALIZATION_TRANSITIONS,
};
use crate::error::{Error, Result};
use crate::table::{format_value, MetricTable};

/// Friends'-deviation strata used for the stratified radicalization family
/// when the analysis options leave them unset.
pub const DEFAULT_SIGMA_STRATA: [f64; 2] = [0.1, 0.2];

/// Prefix of the bin columns: every binned family is binned on the
/// friends' average opinion.
const BIN_PREFIX: &str = "x_neg";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySchema {
    pub family: String,
    pub file: String,
    pub description: String,
    pub key_columns: Vec<String>,
    pub bin_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub count_columns: Vec<String>,
    /// Count column to compare with the support floor.
    pub support_column: String,
}

impl FamilySchema {
    pub fn columns(&self) -> Vec<String> {
        [&self.key_columns, &self.bin_columns, &self.value_columns, &self.count_columns]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleManifest {
    pub support_floor: u64,
    /// How non-finite values are written.
    pub encoding: Encoding,
    pub families: Vec<FamilySchema>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encoding {
    pub undefined: &'static str,
    pub positive_infinity: &'static str,
}

fn schema(family: &str, description: &str, table: &MetricTable, support: &str) -> FamilySchema {
    FamilySchema {
        family: family.into(),
        file: format!("{family}.csv"),
        description: description.into(),
        key_columns: table.key_columns.clone(),
        bin_columns: if table.binned {
            vec![format!("{BIN_PREFIX}_bin_low"), format!("{BIN_PREFIX}_bin_high")]
        } else {
            Vec::new()
        },
        value_columns: table.value_columns.clone(),
        count_columns: table.count_columns.clone(),
        support_column: support.into(),
    }
}

fn write_family(dir: &Path, s: &FamilySchema, table: &MetricTable) -> Result<()> {
    let path = dir.join(&s.file);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(s.columns())?;
    for row in &table.rows {
        let mut rec = row.keys.clone();
        if let Some(b) = row.bin {
            rec.push(format_value(b.low));
            rec.push(format_value(b.high));
        }
        rec.extend(row.values.iter().map(|&v| format_value(v)));
        rec.extend(row.counts.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Computes every figure family from one pair's records and writes the
/// bundle into `dir`. `homophily`, when given, is written as its own
/// family.
pub fn export_figure_data(
    dir: &Path,
    records: &[ShiftRecord],
    opts: &AnalysisOptions,
    homophily: Option<&MetricTable>,
) -> Result<BundleManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let flat = AnalysisOptions {
        sigma_strata: Vec::new(),
        ..opts.clone()
    };
    let stratified = AnalysisOptions {
        sigma_strata: if opts.sigma_strata.is_empty() {
            DEFAULT_SIGMA_STRATA.to_vec()
        } else {
            opts.sigma_strata.clone()
        },
        ..opts.clone()
    };
    let mut families: Vec<(FamilySchema, MetricTable)> = Vec::new();
    let mut add = |family: &str, description: &str, table: MetricTable, support: &str| {
        families.push((schema(family, description, &table, support), table));
    };
    add(
        "figure4",
        "positive and negative EPOC by agent group and friends' average",
        epoc_curves(records, opts)?,
        "n_total",
    );
    add(
        "figure5",
        "probability of the two radicalizing transitions by friends' average",
        radicalization_curves(records, &RADICALIZATION_TRANSITIONS, &flat)?,
        "n_total",
    );
    add(
        "figure6",
        "mean shift magnitude by agent group, direction and friends' average",
        magnitude_curves(records, opts)?,
        "n",
    );
    add(
        "figure7",
        "positive/negative count ratio by agent group and friends' average",
        pos_neg_ratio(records, opts)?,
        "n_pos",
    );
    add(
        "figureB1",
        "EPOC for stable and unstable friends' averages",
        epoc_by_neighbor_stability(records, opts)?,
        "n_stable",
    );
    add(
        "figureB2",
        "positive EPOC by agent group and friends' group",
        group_pair_epoc(records, opts),
        "n_total",
    );
    add(
        "figureB3",
        "probability of every group-to-group move by friends' average, with zone",
        movement_probability_curves(records, opts)?,
        "n_total",
    );
    add(
        "figureB4",
        "radicalizing transitions split by spread of friends' opinions",
        radicalization_curves(records, &RADICALIZATION_TRANSITIONS, &stratified)?,
        "n_total",
    );
    if let Some(h) = homophily {
        add("homophily", "mean neighborhood composition by group, with null row", h.clone(), "n_agents");
    }
    for (s, t) in &families {
        write_family(dir, s, t)?;
    }
    let manifest = BundleManifest {
        support_floor: opts.support_floor,
        encoding: Encoding {
            undefined: "",
            positive_infinity: "inf",
        },
        families: families.into_iter().map(|(s, _)| s).collect(),
    };
    let path = dir.join("bundle.json");
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NeighborhoodStats;

    fn rec(xb: f64, xa: f64, m: f64) -> ShiftRecord {
        ShiftRecord::new(0, xb, xa, NeighborhoodStats { mean: m, std: 0.05, degree: 2 }, m)
    }

    fn read(dir: &Path, file: &str) -> Vec<String> {
        fs::read_to_string(dir.join(file)).unwrap().lines().map(str::to_string).collect()
    }

    #[test]
    fn figure4_schema() {
        let d = tempfile::tempdir().unwrap();
        let m = export_figure_data(d.path(), &[rec(0.3, 0.4, 0.5)], &AnalysisOptions::default(), None).unwrap();
        let lines = read(d.path(), "figure4.csv");
        assert_eq!(lines[0], "xi_group,x_neg_bin_low,x_neg_bin_high,epoc_pos,epoc_neg,n_pos,n_neg,n_total");
        assert_eq!(lines.len(), 1 + 5 * 20);
        assert!(lines.contains(&"L,0.5,0.55,1,0,1,0,1".to_string()));
        assert_eq!(m.families.len(), 8);
        assert!(d.path().join("bundle.json").exists());
    }

    #[test]
    fn empty_records_give_header_and_empty_cells() {
        let d = tempfile::tempdir().unwrap();
        export_figure_data(d.path(), &[], &AnalysisOptions::default(), None).unwrap();
        let lines = read(d.path(), "figure7.csv");
        assert_eq!(lines[0], "xi_group,x_neg_bin_low,x_neg_bin_high,ratio,n_pos,n_neg");
        assert!(lines[1..].iter().all(|l| l.ends_with(",,0,0")));
    }

    #[test]
    fn infinite_ratio_sentinel() {
        let d = tempfile::tempdir().unwrap();
        export_figure_data(d.path(), &[rec(0.3, 0.4, 0.5)], &AnalysisOptions::default(), None).unwrap();
        let lines = read(d.path(), "figure7.csv");
        assert!(lines.contains(&"L,0.5,0.55,inf,1,0".to_string()));
    }

    #[test]
    fn stratified_family_uses_default_strata() {
        let d = tempfile::tempdir().unwrap();
        export_figure_data(d.path(), &[], &AnalysisOptions::default(), None).unwrap();
        let body = fs::read_to_string(d.path().join("figureB4.csv")).unwrap();
        assert!(body.contains("L->SL,\"[0.2,inf)\""));
        let body = fs::read_to_string(d.path().join("figure5.csv")).unwrap();
        assert!(body.contains("L->SL,all,"));
    }
}
