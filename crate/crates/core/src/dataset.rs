//! Monthly rainfall records: loading, imputation, splitting and scaling.
//!
//! A record holds one calendar year of twelve monthly rainfall depths in
//! millimetres plus a binary flood label. Missing or unparseable rainfall
//! cells are carried as `NaN` until [`impute_missing`] fills them; every
//! downstream consumer goes through [`Dataset::features`], which refuses
//! incomplete data.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MONTHS: usize = 12;

pub const MONTH_NAMES: [&str; MONTHS] = [
    "JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC",
];

/// Maximum allowed gap between the stated annual total and the monthly sum.
pub const ANNUAL_TOLERANCE_MM: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainfallRecord {
    pub year: i32,
    /// JAN..DEC in millimetres. `NaN` marks a missing cell.
    pub monthly_mm: [f64; MONTHS],
    pub annual_mm: Option<f64>,
    /// 1 = flood, 0 = no flood.
    pub flood: u8,
}

impl RainfallRecord {
    pub fn missing_months(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MONTHS).filter(|&m| self.monthly_mm[m].is_nan())
    }

    /// `Some(false)` when the stated annual total disagrees with the monthly
    /// sum by more than [`ANNUAL_TOLERANCE_MM`]. `None` when there is nothing
    /// to check (no annual column, or months still missing).
    pub fn annual_consistent(&self) -> Option<bool> {
        let annual = self.annual_mm?;
        if self.monthly_mm.iter().any(|v| v.is_nan()) {
            return None;
        }
        let sum: f64 = self.monthly_mm.iter().sum();
        Some((sum - annual).abs() <= ANNUAL_TOLERANCE_MM)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputeStrategy {
    ColumnMean,
    Zero,
}

impl fmt::Display for ImputeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImputeStrategy::ColumnMean => f.write_str("column-mean"),
            ImputeStrategy::Zero => f.write_str("zero"),
        }
    }
}

/// One filled cell, as written to the provenance log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub year: i32,
    pub month: String,
    pub value: f64,
    pub strategy: ImputeStrategy,
}

impl fmt::Display for ImputedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.year, self.month, self.value, self.strategy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<RainfallRecord>,
    feature_names: Vec<String>,
    #[serde(default)]
    imputed: Vec<ImputedCell>,
}

impl Dataset {
    pub fn new(records: Vec<RainfallRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for record in &records {
            if !seen.insert(record.year) {
                return Err(Error::DuplicateYear(record.year));
            }
            if record.flood > 1 {
                return Err(Error::InvalidLabel(record.flood));
            }
        }
        Ok(Self {
            records,
            feature_names: MONTH_NAMES.iter().map(|s| s.to_string()).collect(),
            imputed: Vec::new(),
        })
    }

    pub fn records(&self) -> &[RainfallRecord] {
        &self.records
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn imputed(&self) -> &[ImputedCell] {
        &self.imputed
    }

    pub fn years(&self) -> Vec<i32> {
        self.records.iter().map(|r| r.year).collect()
    }

    pub fn record_for_year(&self, year: i32) -> Option<&RainfallRecord> {
        self.records.iter().find(|r| r.year == year)
    }

    pub fn missing_count(&self) -> usize {
        self.records.iter().map(|r| r.missing_months().count()).sum()
    }

    /// Years whose stated annual total disagrees with the monthly sum.
    pub fn annual_mismatches(&self) -> Vec<i32> {
        self.records
            .iter()
            .filter(|r| r.annual_consistent() == Some(false))
            .map(|r| r.year)
            .collect()
    }

    /// Feature matrix, one row per record. Fails on missing cells.
    pub fn features(&self) -> Result<Vec<Vec<f64>>> {
        let missing = self.missing_count();
        if missing > 0 {
            return Err(Error::MissingValues(missing));
        }
        Ok(self.records.iter().map(|r| r.monthly_mm.to_vec()).collect())
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.flood).collect()
    }

    /// Content hash over years, values and labels (SHA-256, hex).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for name in &self.feature_names {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        for r in &self.records {
            hasher.update(r.year.to_le_bytes());
            for v in &r.monthly_mm {
                hasher.update(v.to_bits().to_le_bytes());
            }
            hasher.update([r.flood]);
        }
        hex::encode(hasher.finalize())
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            imputed: Vec::new(),
        }
    }
}

/// Column mapping for [`load_csv`]. Header matching ignores case and
/// surrounding whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub year: String,
    pub months: [String; MONTHS],
    pub label: String,
    /// Accepted names for the optional annual-total column.
    pub annual: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            year: "YEAR".into(),
            months: MONTH_NAMES.map(String::from),
            label: "FLOODS".into(),
            annual: vec!["ANNUAL".into(), "ANNUAL RAINFALL".into()],
        }
    }
}

impl CsvSchema {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Encode a descriptive flood label. Numeric labels are binarized by a
/// nonzero test.
pub fn encode_label(raw: &str) -> Option<u8> {
    let s = raw.trim().to_ascii_uppercase();
    match s.as_str() {
        "YES" | "Y" | "TRUE" | "FLOOD" => Some(1),
        "NO" | "N" | "FALSE" | "NO FLOOD" => Some(0),
        _ => {
            let v: f64 = s.parse().ok()?;
            if v.is_nan() {
                None
            } else {
                Some(u8::from(v != 0.0))
            }
        }
    }
}

pub fn decode_label(flood: u8) -> &'static str {
    if flood == 0 {
        "NO"
    } else {
        "YES"
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_uppercase())
        .collect();
    let find = |name: &str| -> Option<usize> {
        let wanted = name.trim().to_ascii_uppercase();
        headers.iter().position(|h| *h == wanted)
    };
    let require = |name: &str| -> Result<usize> {
        find(name).ok_or_else(|| Error::Schema(format!("missing required column {name:?}")))
    };

    let year_col = require(&schema.year)?;
    let label_col = require(&schema.label)?;
    let mut month_cols = [0usize; MONTHS];
    for (m, name) in schema.months.iter().enumerate() {
        month_cols[m] = require(name)?;
    }
    let annual_col = schema.annual.iter().find_map(|a| find(a));

    let mut records = Vec::new();
    let mut numeric_labels = false;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let cell = |col: usize| row.get(col).unwrap_or("").trim();

        let year_raw = cell(year_col);
        let year = parse_year(year_raw).ok_or_else(|| Error::Parse {
            row: line,
            field: schema.year.clone(),
            value: year_raw.to_string(),
        })?;

        let label_raw = cell(label_col);
        let flood = encode_label(label_raw).ok_or_else(|| Error::Parse {
            row: line,
            field: schema.label.clone(),
            value: label_raw.to_string(),
        })?;
        numeric_labels |= label_raw.parse::<f64>().is_ok();

        let mut monthly_mm = [f64::NAN; MONTHS];
        for (m, &col) in month_cols.iter().enumerate() {
            monthly_mm[m] = parse_rainfall(cell(col));
        }
        let annual_mm = annual_col.and_then(|c| cell(c).parse::<f64>().ok());

        records.push(RainfallRecord {
            year,
            monthly_mm,
            annual_mm,
            flood,
        });
    }

    if records.is_empty() {
        log::warn!("no data rows found; returning an empty dataset");
    }
    if numeric_labels {
        log::info!("numeric flood labels binarized: nonzero -> 1, zero -> 0");
    }
    let dataset = Dataset::new(records)?;
    for year in dataset.annual_mismatches() {
        log::warn!("year {year}: annual total disagrees with the monthly sum");
    }
    Ok(dataset)
}

fn parse_year(raw: &str) -> Option<i32> {
    raw.parse::<i32>().ok().or_else(|| {
        let v: f64 = raw.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < i32::MAX as f64).then_some(v as i32)
    })
}

fn parse_rainfall(raw: &str) -> f64 {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => v,
        _ => f64::NAN,
    }
}

/// Fill every missing rainfall cell. Column means are taken over the
/// present values of the whole dataset.
pub fn impute_missing(dataset: &Dataset, strategy: ImputeStrategy) -> Result<Dataset> {
    let mut out = dataset.clone();
    if dataset.missing_count() == 0 {
        return Ok(out);
    }
    let mut fill = [0.0; MONTHS];
    if strategy == ImputeStrategy::ColumnMean {
        for (m, slot) in fill.iter_mut().enumerate() {
            let present: Vec<f64> = dataset
                .records
                .iter()
                .map(|r| r.monthly_mm[m])
                .filter(|v| !v.is_nan())
                .collect();
            let has_missing = dataset.records.iter().any(|r| r.monthly_mm[m].is_nan());
            if present.is_empty() {
                if has_missing {
                    return Err(Error::EmptyColumn(dataset.feature_names[m].clone()));
                }
                continue;
            }
            *slot = present.iter().sum::<f64>() / present.len() as f64;
        }
    }
    for record in &mut out.records {
        for m in 0..MONTHS {
            if record.monthly_mm[m].is_nan() {
                record.monthly_mm[m] = fill[m];
                out.imputed.push(ImputedCell {
                    year: record.year,
                    month: out.feature_names[m].clone(),
                    value: fill[m],
                    strategy,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Number of training rows for a split: `floor(fraction * n)`, guarded
/// against representation error such as `0.7 * 10 = 6.999..`.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    (train_fraction * n as f64 + 1e-9).floor() as usize
}

/// Seeded shuffle-then-cut split. Rows keep their file order within each
/// partition.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!(
            "train fraction {train_fraction} is not in (0, 1)"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset".into()));
    }
    let n = dataset.len();
    let n_train = train_size(n, train_fraction);
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidSplit(format!(
            "fraction {train_fraction} of {n} rows leaves an empty partition"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let (train_idx, test_idx) = order.split_at(n_train);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SplitDataset {
        train: dataset.subset(&train_idx),
        test: dataset.subset(&test_idx),
        seed,
        train_fraction,
    })
}

/// Per-feature standardisation statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Empty("cannot fit a scaler on zero rows".into()))?;
        let width = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for row in rows {
            check_width(row, width)?;
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

pub(crate) fn check_width(row: &[f64], width: usize) -> Result<()> {
    if row.len() != width {
        return Err(Error::LengthMismatch {
            expected: width,
            actual: row.len(),
        });
    }
    Ok(())
}

pub fn fit_scaler(train: &Dataset) -> Result<Scaler> {
    Scaler::fit(&train.features()?)
}

/// Standardise every record of `dataset`. Annual totals are dropped since
/// they no longer describe the transformed values.
pub fn apply_scaler(scaler: &Scaler, dataset: &Dataset) -> Result<Dataset> {
    check_width(&[0.0; MONTHS], scaler.width())?;
    let mut out = dataset.clone();
    for record in &mut out.records {
        let scaled = scaler.transform(&record.monthly_mm);
        record.monthly_mm.copy_from_slice(&scaled);
        record.annual_mm = None;
    }
    Ok(out)
}

pub fn monthly_means(dataset: &Dataset) -> Result<[f64; MONTHS]> {
    if dataset.is_empty() {
        return Err(Error::Empty("monthly means of an empty dataset".into()));
    }
    let missing = dataset.missing_count();
    if missing > 0 {
        return Err(Error::MissingValues(missing));
    }
    let mut means = [0.0; MONTHS];
    for r in dataset.records() {
        for (m, v) in means.iter_mut().zip(&r.monthly_mm) {
            *m += v;
        }
    }
    let n = dataset.len() as f64;
    means.iter_mut().for_each(|m| *m /= n);
    Ok(means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "SUBDIVISION,YEAR,JAN,FEB,MAR,APR,MAY,JUN,JUL,AUG,SEP,OCT,NOV,DEC, ANNUAL RAINFALL,FLOODS\n";

    fn record(year: i32, months: [f64; MONTHS], flood: u8) -> RainfallRecord {
        RainfallRecord {
            year,
            monthly_mm: months,
            annual_mm: None,
            flood,
        }
    }

    fn toy(n: usize) -> Dataset {
        Dataset::new(
            (0..n)
                .map(|i| record(1900 + i as i32, [i as f64; MONTHS], (i % 2) as u8))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn reads_kerala_style_header_and_labels() {
        let csv = format!(
            "{HEADER}KERALA,1901,28.7,44.7,51.6,160,174.7,824.6,743,357.5,197.7,266.9,350.8,48.4,3248.6,YES\n\
             KERALA,1902,6.7,2.6,57.3,83.9,134.5,390.9,1205,315.8,491.6,358.4,158.3,121.5,3326.6,no\n"
        );
        let ds = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels(), vec![1, 0]);
        assert_eq!(ds.records()[0].monthly_mm[6], 743.0);
        assert_eq!(ds.records()[0].annual_mm, Some(3248.6));
        assert!(ds.annual_mismatches().is_empty());
    }

    #[test]
    fn header_only_file_is_empty() {
        let ds = read_csv(HEADER.as_bytes(), &CsvSchema::default()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let csv = "YEAR,JAN,FEB,FLOODS\n1901,1,2,YES\n";
        let err = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("MAR")), "{err}");
    }

    #[test]
    fn bad_label_names_row_and_value() {
        let csv = format!("{HEADER}KERALA,1901,1,1,1,1,1,1,1,1,1,1,1,1,12,MAYBE\n");
        match read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap_err() {
            Error::Parse { row, value, .. } => {
                assert_eq!(row, 2);
                assert_eq!(value, "MAYBE");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_rainfall_becomes_missing() {
        let csv = format!("{HEADER}KERALA,1901,1,1,1,1,1,n/a,1,1,1,1,1,1,,NO\n");
        let ds = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.missing_count(), 1);
        assert!(ds.records()[0].monthly_mm[5].is_nan());
        assert!(matches!(ds.features(), Err(Error::MissingValues(1))));
    }

    #[test]
    fn label_override_and_numeric_binarization() {
        let csv = "YEAR,JAN,FEB,MAR,APR,MAY,JUN,JUL,AUG,SEP,OCT,NOV,DEC,PCT\n\
                   1901,1,1,1,1,1,1,1,1,1,1,1,1,37.5\n1902,1,1,1,1,1,1,1,1,1,1,1,1,0\n";
        let ds = read_csv(csv.as_bytes(), &CsvSchema::default().with_label("pct")).unwrap();
        assert_eq!(ds.labels(), vec![1, 0]);
    }

    #[test]
    fn duplicate_years_rejected() {
        let r = record(1901, [1.0; MONTHS], 0);
        assert!(matches!(
            Dataset::new(vec![r.clone(), r]),
            Err(Error::DuplicateYear(1901))
        ));
    }

    #[test]
    fn annual_mismatch_is_flagged_not_rejected() {
        let mut r = record(1901, [10.0; MONTHS], 1);
        r.annual_mm = Some(125.0);
        let ds = Dataset::new(vec![r]).unwrap();
        assert_eq!(ds.annual_mismatches(), vec![1901]);
    }

    #[test]
    fn impute_column_mean_and_zero() {
        let mut a = record(1901, [1.0; MONTHS], 0);
        let mut b = record(1902, [2.0; MONTHS], 1);
        let c = record(1903, [6.0; MONTHS], 0);
        a.monthly_mm[5] = 100.0;
        b.monthly_mm[5] = f64::NAN;
        let mut c = c;
        c.monthly_mm[5] = 300.0;
        let ds = Dataset::new(vec![a, b, c]).unwrap();

        let mean = impute_missing(&ds, ImputeStrategy::ColumnMean).unwrap();
        assert_eq!(mean.records()[1].monthly_mm[5], 200.0);
        assert_eq!(mean.imputed().len(), 1);
        assert_eq!(mean.imputed()[0].to_string(), "1902,JUN,200,column-mean");

        let zero = impute_missing(&ds, ImputeStrategy::Zero).unwrap();
        assert_eq!(zero.records()[1].monthly_mm[5], 0.0);
    }

    #[test]
    fn impute_identity_when_complete() {
        let ds = toy(4);
        assert_eq!(impute_missing(&ds, ImputeStrategy::ColumnMean).unwrap(), ds);
    }

    #[test]
    fn impute_fails_on_all_missing_column() {
        let mut a = record(1901, [1.0; MONTHS], 0);
        a.monthly_mm[0] = f64::NAN;
        let ds = Dataset::new(vec![a]).unwrap();
        assert!(matches!(
            impute_missing(&ds, ImputeStrategy::ColumnMean),
            Err(Error::EmptyColumn(ref c)) if c == "JAN"
        ));
        assert!(impute_missing(&ds, ImputeStrategy::Zero).is_ok());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy(121);
        let s = split(&ds, 0.7, 42).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (84, 37));
        assert_eq!(split(&ds, 0.7, 42).unwrap(), s);
    }

    #[test]
    fn split_seeds_differ() {
        let ds = toy(10);
        let a = split(&ds, 0.5, 1).unwrap();
        let b = split(&ds, 0.5, 2).unwrap();
        assert_eq!(a.train.len(), 5);
        assert_eq!(b.train.len(), 5);
        // Frozen from the seeded ChaCha8 shuffle; the two partitions differ.
        assert_ne!(a.train.years(), b.train.years());
    }

    #[test]
    fn split_rejects_empty_partitions() {
        assert!(split(&toy(1), 0.5, 0).is_err());
        assert!(split(&toy(10), 1.0, 0).is_err());
        assert!(split(&toy(10), 0.05, 0).is_err());
        assert!(split(&toy(0), 0.5, 0).is_err());
    }

    #[test]
    fn scaler_two_rows_and_constant_rows() {
        let s = Scaler::fit(&[vec![0.0, 3.0], vec![10.0, 3.0]]).unwrap();
        assert_eq!(s.transform(&[0.0, 3.0]), vec![-1.0, 0.0]);
        assert_eq!(s.transform(&[10.0, 3.0]), vec![1.0, 0.0]);
        assert_eq!(s.std[1], 1.0);
    }

    #[test]
    fn monthly_means_basic() {
        let one = toy(1);
        assert_eq!(monthly_means(&one).unwrap(), [0.0; MONTHS]);
        let mut a = record(1901, [0.0; MONTHS], 0);
        let mut b = record(1902, [0.0; MONTHS], 0);
        a.monthly_mm[0] = 100.0;
        b.monthly_mm[0] = 300.0;
        let ds = Dataset::new(vec![a, b]).unwrap();
        assert_eq!(monthly_means(&ds).unwrap()[0], 200.0);
        assert!(monthly_means(&toy(0)).is_err());
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        prop::collection::vec(
            (prop::array::uniform12(prop::option::weighted(0.9, 0.0..900.0f64)), 0u8..2),
            2..40,
        )
        .prop_map(|rows| {
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(i, (cells, flood))| {
                    let monthly_mm = cells.map(|c| c.unwrap_or(f64::NAN));
                    record(1901 + i as i32, monthly_mm, flood)
                })
                .collect();
            Dataset::new(records).unwrap()
        })
    }

    proptest! {
        #[test]
        fn label_round_trip(flood in 0u8..2) {
            prop_assert_eq!(encode_label(decode_label(flood)), Some(flood));
        }

        #[test]
        fn split_partitions_by_year(ds in arb_dataset(), seed in any::<u64>(), frac in 0.1..0.9f64) {
            if let Ok(s) = split(&ds, frac, seed) {
                let train: HashSet<i32> = s.train.years().into_iter().collect();
                let test: HashSet<i32> = s.test.years().into_iter().collect();
                prop_assert!(train.is_disjoint(&test));
                let all: HashSet<i32> = ds.years().into_iter().collect();
                prop_assert_eq!(train.union(&test).copied().collect::<HashSet<_>>(), all);
                prop_assert_eq!(s.train.len(), train_size(ds.len(), frac));
            }
        }

        #[test]
        fn impute_is_idempotent(ds in arb_dataset()) {
            let once = impute_missing(&ds, ImputeStrategy::Zero).unwrap();
            let twice = impute_missing(&once, ImputeStrategy::Zero).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.missing_count(), 0);
            prop_assert!(once.records().iter().all(|r| r.monthly_mm.iter().all(|v| *v >= 0.0)));
        }

        #[test]
        fn scaler_centres_and_normalises(ds in arb_dataset()) {
            let ds = impute_missing(&ds, ImputeStrategy::Zero).unwrap();
            let scaler = fit_scaler(&ds).unwrap();
            let scaled = apply_scaler(&scaler, &ds).unwrap().features().unwrap();
            let n = scaled.len() as f64;
            let raw_means = monthly_means(&ds).unwrap();
            let raw = ds.features().unwrap();
            for j in 0..MONTHS {
                let mean: f64 = scaled.iter().map(|r| r[j]).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                let var: f64 = scaled.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                // Columns with tiny spread lose precision in the subtraction.
                let constant = raw.iter().all(|r| r[j] == raw[0][j]);
                if constant {
                    prop_assert!(var == 0.0);
                } else if scaler.std[j] > 1e-6 * (raw_means[j].abs() + 1.0) {
                    prop_assert!((var.sqrt() - 1.0).abs() < 1e-6);
                }
            }
        }
    }
}
