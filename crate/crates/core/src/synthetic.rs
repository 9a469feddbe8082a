//! Seeded stand-in for a historical monthly rainfall table.
//!
//! Months are gamma-distributed around a south-west-monsoon climatology
//! (wet June and July, dry January to March). The flood label comes from a
//! noisy index of monsoon-season anomalies. The values are synthetic: use
//! them for tests and demos, never as observations.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::dataset::{decode_label, Dataset, RainfallRecord, MONTHS, MONTH_NAMES};
use crate::error::Result;

/// Climatological monthly means (mm) and coefficients of variation.
const CLIMATE: [(f64, f64); MONTHS] = [
    (12.0, 1.0),
    (15.0, 1.0),
    (37.0, 0.8),
    (110.0, 0.5),
    (230.0, 0.55),
    (650.0, 0.3),
    (700.0, 0.3),
    (420.0, 0.35),
    (250.0, 0.45),
    (290.0, 0.35),
    (160.0, 0.45),
    (40.0, 0.9),
];

/// Weight of each month's standardised anomaly in the flood index.
const FLOOD_LOADINGS: [f64; MONTHS] = [0.0, 0.0, 0.0, 0.1, 0.5, 0.7, 0.9, 0.6, 0.4, 0.15, 0.1, 0.0];

pub fn kerala_like(first_year: i32, n_years: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.6).expect("valid normal");
    let gammas: Vec<Gamma<f64>> = CLIMATE
        .iter()
        .map(|&(mean, cv)| {
            let shape = 1.0 / (cv * cv);
            Gamma::new(shape, mean / shape).expect("valid gamma")
        })
        .collect();
    let records = (0..n_years)
        .map(|i| {
            let mut monthly_mm = [0.0; MONTHS];
            let mut index = noise.sample(&mut rng);
            for m in 0..MONTHS {
                let v = (gammas[m].sample(&mut rng) * 10.0).round() / 10.0;
                monthly_mm[m] = v;
                let (mean, cv) = CLIMATE[m];
                index += FLOOD_LOADINGS[m] * (v - mean) / (mean * cv);
            }
            let annual = (monthly_mm.iter().sum::<f64>() * 10.0).round() / 10.0;
            RainfallRecord {
                year: first_year + i as i32,
                monthly_mm,
                annual_mm: Some(annual),
                flood: u8::from(index > 0.0),
            }
        })
        .collect();
    Dataset::new(records).expect("years are unique by construction")
}

/// Write a dataset in the `YEAR,JAN..DEC,ANNUAL,FLOODS` layout.
pub fn write_csv<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    write!(out, "YEAR")?;
    for name in MONTH_NAMES {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",ANNUAL,FLOODS")?;
    for r in dataset.records() {
        write!(out, "{}", r.year)?;
        for v in &r.monthly_mm {
            if v.is_nan() {
                write!(out, ",")?;
            } else {
                write!(out, ",{v}")?;
            }
        }
        match r.annual_mm {
            Some(a) => write!(out, ",{a}")?,
            None => write!(out, ",")?,
        }
        writeln!(out, ",{}", decode_label(r.flood))?;
    }
    Ok(())
}
