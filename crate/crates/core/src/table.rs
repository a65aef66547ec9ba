//! Binned curves and cross-tabulations with per-cell support counts.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Equal-width bins covering `[0, 1]`; the last bin is closed on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Binning {
    pub width: f64,
    pub count: usize,
}

impl Binning {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::InvalidParameter(format!("bin width {width} not in (0, 1]")));
        }
        let count = (1.0 / width).round();
        if (count * width - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("bin width {width} does not divide 1 evenly")));
        }
        Ok(Binning {
            width,
            count: count as usize,
        })
    }

    #[inline]
    pub fn index(&self, x: f64) -> usize {
        ((x * self.count as f64).floor().max(0.0) as usize).min(self.count - 1)
    }

    pub fn bin(&self, i: usize) -> Bin {
        let n = self.count as f64;
        Bin {
            index: i,
            low: i as f64 / n,
            high: (i + 1) as f64 / n,
        }
    }

    pub fn bins(&self) -> impl Iterator<Item = Bin> + '_ {
        (0..self.count).map(|i| self.bin(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub index: usize,
    pub low: f64,
    pub high: f64,
}

impl Bin {
    pub fn center(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub keys: Vec<String>,
    pub bin: Option<Bin>,
    pub values: Vec<f64>,
    pub counts: Vec<u64>,
    /// Sample size the row's values rest on.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTable {
    pub name: String,
    pub key_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub count_columns: Vec<String>,
    pub binned: bool,
    pub support_floor: u64,
    pub rows: Vec<Row>,
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// CSV text for a metric value: empty for undefined, `inf` for the
/// division guard, shortest round-trip decimal otherwise.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

impl MetricTable {
    pub fn new(name: &str, keys: &[&str], values: &[&str], counts: &[&str], binned: bool, support_floor: u64) -> Self {
        MetricTable {
            name: name.to_string(),
            key_columns: owned(keys),
            value_columns: owned(values),
            count_columns: owned(counts),
            binned,
            support_floor,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, keys: Vec<String>, bin: Option<Bin>, values: Vec<f64>, counts: Vec<u64>, support: u64) {
        debug_assert_eq!(keys.len(), self.key_columns.len());
        debug_assert_eq!(values.len(), self.value_columns.len());
        debug_assert_eq!(counts.len(), self.count_columns.len());
        self.rows.push(Row {
            keys,
            bin,
            values,
            counts,
            support,
        });
    }

    pub fn is_low_support(&self, row: &Row) -> bool {
        row.support < self.support_floor
    }

    fn value_index(&self, name: &str) -> usize {
        self.value_columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("table {} has no value column {name}", self.name))
    }

    fn count_index(&self, name: &str) -> usize {
        self.count_columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("table {} has no count column {name}", self.name))
    }

    pub fn value(&self, row: &Row, column: &str) -> f64 {
        row.values[self.value_index(column)]
    }

    pub fn count(&self, row: &Row, column: &str) -> u64 {
        row.counts[self.count_index(column)]
    }

    /// Rows whose leading key columns equal `keys`.
    pub fn rows_matching<'a>(&'a self, keys: &'a [&'a str]) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.keys.iter().zip(keys).all(|(a, b)| a == b))
    }

    pub fn find(&self, keys: &[&str], bin_index: Option<usize>) -> Option<&Row> {
        self.rows.iter().find(|r| {
            r.keys.iter().zip(keys).all(|(a, b)| a == b) && r.bin.map(|b| b.index) == bin_index
        })
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = self.key_columns.clone();
        if self.binned {
            h.push("bin_low".into());
            h.push("bin_high".into());
        }
        h.extend(self.value_columns.iter().cloned());
        h.extend(self.count_columns.iter().cloned());
        h.push("low_support".into());
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = row.keys.clone();
            if self.binned {
                let b = row.bin.expect("binned table rows carry a bin");
                rec.push(format_value(b.low));
                rec.push(format_value(b.high));
            }
            rec.extend(row.values.iter().map(|&v| format_value(v)));
            rec.extend(row.counts.iter().map(|c| c.to_string()));
            rec.push(self.is_low_support(row).to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(format!("<{}>", self.name), e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_divides_unit_interval() {
        let b = Binning::new(0.05).unwrap();
        assert_eq!(b.count, 20);
        assert_eq!(b.index(0.0), 0);
        assert_eq!(b.index(0.049), 0);
        assert_eq!(b.index(0.05), 1);
        assert_eq!(b.index(1.0), 19);
        assert!(Binning::new(0.3).is_err());
        assert!(Binning::new(0.0).is_err());
        assert_eq!(Binning::new(0.25).unwrap().bin(3).high, 1.0);
    }

    #[test]
    fn csv_encoding() {
        let mut t = MetricTable::new("t", &["g"], &["v"], &["n"], true, 20);
        let b = Binning::new(0.5).unwrap();
        t.push(vec!["SL".into()], Some(b.bin(0)), vec![f64::INFINITY], vec![3], 3);
        t.push(vec!["L".into()], Some(b.bin(1)), vec![f64::NAN], vec![0], 0);
        t.push(vec!["M".into()], Some(b.bin(1)), vec![0.25], vec![40], 40);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "g,bin_low,bin_high,v,n,low_support\nSL,0,0.5,inf,3,true\nL,0.5,1,,0,true\nM,0.5,1,0.25,40,false\n"
        );
        assert_eq!(t.find(&["M"], Some(1)).unwrap().counts, vec![40]);
    }
}
