//! File formats shared by the library and the CLI.
//!
//! * Posets: JSON `{"elements": [...], "edges": [[from, to], ...]}`.
//! * Kernels: JSON map `label → {target label: probability}`; the same
//!   schema serves both directions (only the `e`-row of a downward kernel
//!   may target arbitrary labels).
//! * Densities: a flat JSON map `label → weight` plus the reserved key
//!   `"tail"` for the unenumerated mass.
//! * Tables: CSV `(label, f, F, r)` with proper quoting, since grid labels
//!   contain commas.

use std::collections::BTreeMap;
use std::path::Path as FsPath;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{Pdf, RateFunction, Upf};
use crate::downward::DownwardKernel;
use crate::invariant::KernelError;
use crate::poset::{Poset, PosetError};
use crate::upward::UpwardKernel;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("density file: {0}")]
    BadDensity(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// On-disk poset schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosetFile {
    pub elements: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl PosetFile {
    pub fn from_poset(poset: &Poset) -> PosetFile {
        let (elements, edges) = poset.export();
        PosetFile { elements, edges }
    }

    pub fn validate(self) -> Result<Poset, PosetError> {
        Poset::validate(self.elements, &self.edges)
    }
}

/// On-disk schema for explicit tree generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub root: String,
    pub children: std::collections::HashMap<String, Vec<String>>,
}

pub type KernelRows = BTreeMap<String, BTreeMap<String, f64>>;

fn read_to_string(path: &FsPath) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &FsPath, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|source| IoError::Parse {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_poset(path: &FsPath) -> Result<Poset, IoError> {
    let text = read_to_string(path)?;
    let file: PosetFile = parse_json(path, &text)?;
    Ok(file.validate()?)
}

pub fn load_kernel_rows(path: &FsPath) -> Result<KernelRows, IoError> {
    let text = read_to_string(path)?;
    parse_json(path, &text)
}

pub fn load_upward_kernel(
    path: &FsPath,
    poset: &Arc<Poset>,
    strict: bool,
) -> Result<UpwardKernel, IoError> {
    let rows = load_kernel_rows(path)?;
    Ok(UpwardKernel::from_rows(Arc::clone(poset), &rows, strict)?)
}

pub fn load_downward_kernel(
    path: &FsPath,
    poset: &Arc<Poset>,
    root_tail: f64,
    strict: bool,
) -> Result<DownwardKernel, IoError> {
    let rows = load_kernel_rows(path)?;
    Ok(DownwardKernel::from_rows(
        Arc::clone(poset),
        &rows,
        root_tail,
        strict,
    )?)
}

/// Reserved key of the density schema holding the unenumerated mass.
pub const TAIL_KEY: &str = "tail";

/// Parse the flat density map, separating the reserved `"tail"` entry.
/// Element labels named `"tail"` are therefore not representable in this
/// format; none of the built-in generators produce one.
pub fn pdf_from_map(map: &BTreeMap<String, f64>, poset: &Poset) -> Result<Pdf, IoError> {
    let mut weights = vec![0.0; poset.len()];
    let mut tail = 0.0;
    for (label, &w) in map {
        if label == TAIL_KEY {
            tail = w;
            continue;
        }
        let id = poset
            .id(label)
            .map_err(|_| IoError::BadDensity(format!("unknown element `{label}`")))?;
        weights[id.index()] = w;
    }
    Pdf::new(weights, tail).map_err(|e| IoError::BadDensity(e.to_string()))
}

pub fn pdf_to_map(pdf: &Pdf, poset: &Poset) -> BTreeMap<String, f64> {
    let mut map: BTreeMap<String, f64> = poset
        .elements()
        .map(|x| (poset.label(x).to_owned(), pdf.weights[x.index()]))
        .collect();
    map.insert(TAIL_KEY.to_owned(), pdf.tail);
    map
}

pub fn load_pdf(path: &FsPath, poset: &Poset) -> Result<Pdf, IoError> {
    let text = read_to_string(path)?;
    let map: BTreeMap<String, f64> = parse_json(path, &text)?;
    pdf_from_map(&map, poset)
}

/// CSV table of `(label, f, F, r)`.
pub fn density_table_csv(
    poset: &Poset,
    pdf: &Pdf,
    upf: &Upf,
    rate: &RateFunction,
) -> Result<String, IoError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["label", "f", "F", "r"])?;
    for x in poset.elements() {
        writer.write_record([
            poset.label(x).to_owned(),
            format_float(pdf.weights[x.index()]),
            format_float(upf.values[x.index()]),
            format_float(rate.values[x.index()]),
        ])?;
    }
    let bytes = writer.into_inner().expect("writing to a Vec cannot fail");
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV table of per-element simulation estimates.
pub fn simulation_table_csv(
    poset: &Poset,
    stats: &crate::simulate::ExcursionStats,
) -> Result<String, IoError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["label", "hit_estimate", "half_width"])?;
    let n = stats.excursions as f64;
    for x in poset.elements() {
        let p = stats.hit_fraction(x);
        writer.write_record([
            poset.label(x).to_owned(),
            format_float(p),
            format_float(4.0 * (p * (1.0 - p) / n).sqrt()),
        ])?;
    }
    let bytes = writer.into_inner().expect("writing to a Vec cannot fail");
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn values_by_label(poset: &Poset, values: &[f64]) -> BTreeMap<String, f64> {
    poset
        .elements()
        .map(|x| (poset.label(x).to_owned(), values[x.index()]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{rate_function, upf_from_pdf};

    fn diamond_file() -> PosetFile {
        PosetFile {
            elements: vec!["e".into(), "a".into(), "b".into(), "t".into()],
            edges: vec![
                ("e".into(), "a".into()),
                ("e".into(), "b".into()),
                ("a".into(), "t".into()),
                ("b".into(), "t".into()),
            ],
        }
    }

    #[test]
    fn poset_round_trip() {
        let poset = diamond_file().validate().unwrap();
        let back = PosetFile::from_poset(&poset).validate().unwrap();
        assert_eq!(poset.len(), back.len());
        for x in poset.elements() {
            assert_eq!(poset.label(x), back.label(x));
        }
    }

    #[test]
    fn kernel_rows_round_trip() {
        let poset = Arc::new(diamond_file().validate().unwrap());
        let json = r#"{
            "e": {"a": 0.4, "b": 0.4, "e": 0.2},
            "a": {"t": 0.5, "e": 0.5},
            "b": {"t": 0.3, "e": 0.7},
            "t": {"e": 1.0}
        }"#;
        let rows: KernelRows = serde_json::from_str(json).unwrap();
        let kernel = UpwardKernel::from_rows(Arc::clone(&poset), &rows, true).unwrap();
        let exported = kernel.rows_map();
        let reloaded = UpwardKernel::from_rows(Arc::clone(&poset), &exported, true).unwrap();
        assert!(kernel.max_difference(&reloaded) == 0.0);
    }

    #[test]
    fn density_map_reserves_tail() {
        let poset = diamond_file().validate().unwrap();
        let mut map = BTreeMap::new();
        map.insert("e".to_string(), 0.25);
        map.insert("a".to_string(), 0.25);
        map.insert("b".to_string(), 0.25);
        map.insert("t".to_string(), 0.2);
        map.insert("tail".to_string(), 0.05);
        let pdf = pdf_from_map(&map, &poset).unwrap();
        assert_eq!(pdf.tail, 0.05);
        let back = pdf_to_map(&pdf, &poset);
        assert_eq!(back.get("tail"), Some(&0.05));
        assert_eq!(back.get("t"), Some(&0.2));
    }

    #[test]
    fn csv_quotes_grid_labels() {
        use crate::gen::GridGenerator;
        use crate::poset::Budget;
        let poset = Poset::from_generator(&GridGenerator { k: 2 }, Budget::depth(1)).unwrap();
        let pdf = Pdf::new(vec![0.5, 0.25, 0.25], 0.0).unwrap();
        let upf = upf_from_pdf(&pdf, &poset, 0.0).unwrap();
        let rate = rate_function(&pdf, &poset).unwrap();
        let csv = density_table_csv(&poset, &pdf, &upf, &rate).unwrap();
        // "1,0" must be quoted or the row would gain a column.
        assert!(csv.contains("\"1,0\""), "{csv}");
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        for record in reader.records() {
            assert_eq!(record.unwrap().len(), 4);
        }
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 2.12, 1.0 / 3.0, 0.5f64.powi(60), 4.0 / 7.0] {
            let text = format_float(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(v, back, "{text}");
        }
    }
}
