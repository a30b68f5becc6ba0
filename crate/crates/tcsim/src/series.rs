//! Tabular results: provenance-tagged observable columns over a common
//! index, with metadata and pairwise error summaries, rendered to CSV or
//! JSON and parsed back losslessly.
//!
//! Floats are printed with 17 significant digits so a written file
//! round-trips to the exact same bits; determinism across thread counts is
//! checked at the byte level downstream.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// How a column's numbers were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Full numerical evolution on the truncated product space.
    Exact,
    /// Leading-order closed form of the bosonized model.
    Leading,
    /// Closed form with the first 1/sqrt(N) correction.
    Corrected,
    /// Numerical reconstruction from first-order perturbation amplitudes.
    Reconstructed,
    /// Closed-form cat-state statistics.
    Cat,
    /// Closed-form single-coherent-state statistics.
    Single,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Leading => "leading",
            Provenance::Corrected => "corrected",
            Provenance::Reconstructed => "reconstructed",
            Provenance::Cat => "cat",
            Provenance::Single => "single",
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        Some(match s {
            "exact" => Provenance::Exact,
            "leading" => Provenance::Leading,
            "corrected" => Provenance::Corrected,
            "reconstructed" => Provenance::Reconstructed,
            "cat" => Provenance::Cat,
            "single" => Provenance::Single,
            _ => return None,
        })
    }
}

/// One observable track; the column header is `observable.provenance`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesColumn {
    pub observable: String,
    pub provenance: Provenance,
    pub values: Vec<f64>,
}

impl SeriesColumn {
    pub fn name(&self) -> String {
        format!("{}.{}", self.observable, self.provenance.as_str())
    }
}

/// Columns over a strictly increasing index (time, or a sweep parameter).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DataTable {
    pub index_name: String,
    pub index: Vec<f64>,
    pub columns: Vec<SeriesColumn>,
}

impl DataTable {
    pub fn new(index_name: &str, index: Vec<f64>, columns: Vec<SeriesColumn>) -> Self {
        assert!(
            index.windows(2).all(|w| w[0] < w[1]),
            "table index must be strictly increasing"
        );
        for col in &columns {
            assert_eq!(
                col.values.len(),
                index.len(),
                "column {} length does not match the index",
                col.name()
            );
        }
        DataTable {
            index_name: index_name.to_string(),
            index,
            columns,
        }
    }

    pub fn column(&self, observable: &str, provenance: Provenance) -> Option<&SeriesColumn> {
        self.columns
            .iter()
            .find(|c| c.observable == observable && c.provenance == provenance)
    }
}

/// Max-abs and RMS deviation between two provenances of one observable.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub observable: String,
    pub left: Provenance,
    pub right: Provenance,
    pub max_abs: f64,
    pub rms: f64,
}

/// Deviation statistics between two equal-length tracks.
pub fn error_summary(
    observable: &str,
    left: Provenance,
    right: Provenance,
    a: &[f64],
    b: &[f64],
) -> ErrorSummary {
    assert_eq!(a.len(), b.len(), "summary inputs must have equal length");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let max_abs = diffs.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let sq: Vec<f64> = diffs.iter().map(|d| d * d).collect();
    let rms = (pairwise_sum(&sq) / sq.len().max(1) as f64).sqrt();
    ErrorSummary {
        observable: observable.to_string(),
        left,
        right,
        max_abs,
        rms,
    }
}

/// Every unordered provenance pair within each observable, in column order.
pub fn all_pair_summaries(table: &DataTable) -> Vec<ErrorSummary> {
    let mut out = Vec::new();
    for (i, a) in table.columns.iter().enumerate() {
        for b in table.columns.iter().skip(i + 1) {
            if a.observable == b.observable {
                out.push(error_summary(
                    &a.observable,
                    a.provenance,
                    b.provenance,
                    &a.values,
                    &b.values,
                ));
            }
        }
    }
    out
}

/// A complete run result: resolved configuration and diagnostics as
/// metadata, the data table, and comparison summaries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunArtifact {
    pub metadata: BTreeMap<String, String>,
    pub table: DataTable,
    pub summaries: Vec<ErrorSummary>,
}

/// 17 significant digits: enough to reproduce any f64 bit pattern.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl RunArtifact {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k} = {v}");
        }
        for e in &self.summaries {
            let _ = writeln!(
                s,
                "# summary: {} {} vs {} max_abs={} rms={}",
                e.observable,
                e.left.as_str(),
                e.right.as_str(),
                format_float(e.max_abs),
                format_float(e.rms)
            );
        }
        let header: Vec<String> = std::iter::once(self.table.index_name.clone())
            .chain(self.table.columns.iter().map(|c| c.name()))
            .collect();
        let _ = writeln!(s, "{}", header.join(","));
        for row in 0..self.table.index.len() {
            let mut fields = vec![format_float(self.table.index[row])];
            fields.extend(self.table.columns.iter().map(|c| format_float(c.values[row])));
            let _ = writeln!(s, "{}", fields.join(","));
        }
        s
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// Parses a table written by `to_csv_string`. Summary comment lines are
    /// not read back; `report` recomputes them from the data.
    pub fn parse_csv(text: &str) -> Result<RunArtifact> {
        let bad = |message: String| Error::Io {
            path: "<csv input>".to_string(),
            message,
        };
        let mut metadata = BTreeMap::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek() {
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if !rest.starts_with("summary:") {
                    if let Some((k, v)) = rest.split_once(" = ") {
                        metadata.insert(k.trim().to_string(), v.trim().to_string());
                    }
                }
                lines.next();
            } else {
                break;
            }
        }
        let header = lines
            .next()
            .ok_or_else(|| bad("missing header row".to_string()))?;
        let names: Vec<&str> = header.split(',').collect();
        if names.is_empty() {
            return Err(bad("empty header row".to_string()));
        }
        let mut index = Vec::new();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len() - 1];
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != names.len() {
                return Err(bad(format!(
                    "row {} has {} fields, header has {}",
                    lineno + 2,
                    fields.len(),
                    names.len()
                )));
            }
            for (k, f) in fields.iter().enumerate() {
                let x: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("unparseable number {f:?} in row {}", lineno + 2)))?;
                if k == 0 {
                    index.push(x);
                } else {
                    values[k - 1].push(x);
                }
            }
        }
        let mut columns = Vec::new();
        for (name, vals) in names[1..].iter().zip(values) {
            let (obs, prov) = name
                .rsplit_once('.')
                .ok_or_else(|| bad(format!("column {name:?} is not observable.provenance")))?;
            let provenance = Provenance::parse(prov)
                .ok_or_else(|| bad(format!("unknown provenance {prov:?} in column {name:?}")))?;
            columns.push(SeriesColumn {
                observable: obs.to_string(),
                provenance,
                values: vals,
            });
        }
        Ok(RunArtifact {
            metadata,
            table: DataTable::new(names[0], index, columns),
            summaries: Vec::new(),
        })
    }

    pub fn parse_json(text: &str) -> Result<RunArtifact> {
        serde_json::from_str(text).map_err(|e| Error::Io {
            path: "<json input>".to_string(),
            message: format!("invalid run artifact: {e}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunArtifact {
        let mut metadata = BTreeMap::new();
        metadata.insert("experiment".to_string(), "coherent".to_string());
        metadata.insert("n_atoms".to_string(), "25".to_string());
        let table = DataTable::new(
            "t",
            vec![0.0, 0.1, 0.2],
            vec![
                SeriesColumn {
                    observable: "n".to_string(),
                    provenance: Provenance::Exact,
                    values: vec![0.25, std::f64::consts::PI, 3.0e-17],
                },
                SeriesColumn {
                    observable: "n".to_string(),
                    provenance: Provenance::Leading,
                    values: vec![0.25, 3.1415926, 0.0],
                },
            ],
        );
        let summaries = all_pair_summaries(&table);
        RunArtifact {
            metadata,
            table,
            summaries,
        }
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let art = sample();
        let text = art.to_csv_string();
        let back = RunArtifact::parse_csv(&text).unwrap();
        assert_eq!(back.metadata, art.metadata);
        assert_eq!(back.table.index_name, "t");
        assert_eq!(back.table.index, art.table.index);
        for (a, b) in art.table.columns.iter().zip(&back.table.columns) {
            assert_eq!(a.name(), b.name());
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(x.to_bits(), y.to_bits(), "column {} lost bits", a.name());
            }
        }
    }

    #[test]
    fn json_roundtrip_preserves_summaries() {
        let art = sample();
        let back = RunArtifact::parse_json(&art.to_json_string()).unwrap();
        assert_eq!(back.summaries.len(), 1);
        assert_eq!(back.summaries[0].observable, "n");
        assert_eq!(back.summaries[0].max_abs, art.summaries[0].max_abs);
    }

    #[test]
    fn summaries_pair_only_matching_observables() {
        let table = DataTable::new(
            "t",
            vec![0.0, 1.0],
            vec![
                SeriesColumn {
                    observable: "n".to_string(),
                    provenance: Provenance::Cat,
                    values: vec![1.0, 2.0],
                },
                SeriesColumn {
                    observable: "n".to_string(),
                    provenance: Provenance::Single,
                    values: vec![1.0, 1.0],
                },
                SeriesColumn {
                    observable: "n2".to_string(),
                    provenance: Provenance::Cat,
                    values: vec![0.0, 0.0],
                },
            ],
        );
        let sums = all_pair_summaries(&table);
        assert_eq!(sums.len(), 1);
        assert_eq!(sums[0].max_abs, 1.0);
        assert_eq!(sums[0].rms, (0.5f64).sqrt());
    }

    #[test]
    fn unknown_provenance_is_rejected() {
        let text = "t,n.guessed\n0e0,1e0\n";
        assert!(RunArtifact::parse_csv(text).is_err());
    }

    #[test]
    #[should_panic(expected = "strictly increasing")]
    fn non_monotone_index_is_rejected() {
        DataTable::new("t", vec![0.0, 0.0], Vec::new());
    }
}
