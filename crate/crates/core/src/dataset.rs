//! Country observations: population and observed Gini.
//!
//! Input files are CSV with a `name,population,gini` header. Extra columns
//! are ignored, so the bundled table (which also carries the published
//! estimated-Gini and percent-gap columns) loads through the same path.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gini::max_gini;

const TABLE2_CSV: &str = include_str!("data/table2.csv");
const TABLE2_RECONSTRUCTED_CSV: &str = include_str!("data/table2_reconstructed.csv");

/// Name given to the one-person observation added by [`with_anchor`].
pub const ANCHOR_NAME: &str = "Hypothetical Country";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRecord {
    pub name: String,
    /// Persons.
    pub population: u64,
    pub gini: f64,
}

impl CountryRecord {
    pub fn new(name: impl Into<String>, population: u64, gini: f64) -> Result<Self> {
        let record = CountryRecord {
            name: name.into(),
            population,
            gini,
        };
        record
            .validate()
            .map_err(|(_, msg)| Error::InvalidRecord(msg))?;
        Ok(record)
    }

    /// The one-person country: population 1, Gini 0.
    pub fn anchor() -> Self {
        CountryRecord {
            name: ANCHOR_NAME.to_string(),
            population: 1,
            gini: 0.0,
        }
    }

    pub fn is_anchor(&self) -> bool {
        self.population == 1 && self.gini == 0.0
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.name.trim().is_empty() {
            return Err(("name", "name is empty".to_string()));
        }
        if self.population < 1 {
            return Err(("population", "population must be at least 1".to_string()));
        }
        if !self.gini.is_finite() || self.gini < 0.0 || self.gini >= 1.0 {
            return Err(("gini", format!("gini {} is outside [0, 1)", self.gini)));
        }
        let bound = max_gini(self.population).expect("population >= 1");
        if self.gini > bound {
            return Err((
                "gini",
                format!(
                    "gini {} exceeds (P-1)/P = {} for population {}",
                    self.gini, bound, self.population
                ),
            ));
        }
        Ok(())
    }
}

/// An ordered, validated collection of country records.
///
/// Names are unique ignoring case, and at most one record is the
/// population-1/Gini-0 anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<CountryRecord>,
    includes_anchor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub delimiter: u8,
    /// Trim whitespace around every field before parsing.
    pub trim: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: b',',
            trim: true,
        }
    }
}

impl Dataset {
    pub fn new(records: Vec<CountryRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        let mut anchors = 0;
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|(field, message)| Error::InvalidRow {
                row: i + 1,
                field,
                message,
            })?;
            if !seen.insert(r.name.trim().to_lowercase()) {
                return Err(Error::InvalidRow {
                    row: i + 1,
                    field: "name",
                    message: format!("duplicate country name `{}`", r.name),
                });
            }
            if r.is_anchor() {
                anchors += 1;
                if anchors > 1 {
                    return Err(Error::InvalidRow {
                        row: i + 1,
                        field: "population",
                        message: "more than one population-1 anchor observation".to_string(),
                    });
                }
            }
        }
        Ok(Dataset {
            includes_anchor: anchors == 1,
            records,
        })
    }

    pub fn empty() -> Self {
        Dataset {
            records: Vec::new(),
            includes_anchor: false,
        }
    }

    pub fn records(&self) -> &[CountryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn includes_anchor(&self) -> bool {
        self.includes_anchor
    }

    /// Records other than the anchor observation.
    pub fn countries(&self) -> impl Iterator<Item = &CountryRecord> {
        self.records.iter().filter(|r| !r.is_anchor())
    }

    pub fn get(&self, name: &str) -> Option<&CountryRecord> {
        let key = name.trim().to_lowercase();
        self.records
            .iter()
            .find(|r| r.name.trim().to_lowercase() == key)
    }

    pub fn max_population(&self) -> Option<u64> {
        self.records.iter().map(|r| r.population).max()
    }

    /// Serializes to `name,population,gini` CSV. Gini values are written in
    /// shortest round-trip form, so reloading yields identical records.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["name", "population", "gini"])
            .expect("write to Vec");
        for r in &self.records {
            w.write_record([r.name.clone(), r.population.to_string(), r.gini.to_string()])
                .expect("write to Vec");
        }
        String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
    }

    /// SHA-256 over the canonical CSV form, hex-encoded.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.to_csv().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Reads a `name,population,gini` CSV. Row numbers in errors are 1-based
/// over data rows.
pub fn load_csv<R: Read>(source: R, options: &ParseOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .trim(if options.trim {
            csv::Trim::All
        } else {
            csv::Trim::None
        })
        .flexible(true)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidRecord(format!("header is missing column `{name}`")))
    };
    let (name_col, pop_col, gini_col) = (column("name")?, column("population")?, column("gini")?);

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::InvalidRow {
            row: row_no,
            field: "row",
            message: e.to_string(),
        })?;
        let field = |col: usize, label: &'static str| {
            row.get(col).ok_or_else(|| Error::InvalidRow {
                row: row_no,
                field: label,
                message: "missing field".to_string(),
            })
        };
        let name = field(name_col, "name")?.to_string();
        let pop_text = field(pop_col, "population")?;
        let population: u64 = pop_text.parse().map_err(|_| Error::InvalidRow {
            row: row_no,
            field: "population",
            message: format!("`{pop_text}` is not a positive integer"),
        })?;
        let gini_text = field(gini_col, "gini")?;
        let gini: f64 = gini_text.parse().map_err(|_| Error::InvalidRow {
            row: row_no,
            field: "gini",
            message: format!("`{gini_text}` is not a number"),
        })?;
        records.push(CountryRecord {
            name,
            population,
            gini,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Dataset::new(records)
}

/// The 2012 table: 69 countries plus the one-person anchor, in published order.
pub fn bundled_reference() -> Dataset {
    load_csv(TABLE2_CSV.as_bytes(), &ParseOptions::default()).expect("bundled table is valid")
}

/// The bundled table with Gini values at four decimals.
///
/// The published table prints Gini to three decimals, but its percent-gap
/// column was computed from four-decimal source values. Each value here is
/// `estimate / (1 + gap/100)` using the published coefficients and gap,
/// rounded to four decimals; every value rounds back to the printed
/// three-decimal Gini.
pub fn reconstructed_reference() -> Dataset {
    load_csv(
        TABLE2_RECONSTRUCTED_CSV.as_bytes(),
        &ParseOptions::default(),
    )
    .expect("reconstructed table is valid")
}

/// Published columns of the bundled table that the model should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedRow {
    pub name: String,
    pub population: u64,
    pub actual_gini: f64,
    pub estimated_gini: f64,
    pub percent_gap: f64,
}

pub fn published_table() -> Vec<PublishedRow> {
    let mut reader = csv::Reader::from_reader(TABLE2_CSV.as_bytes());
    reader
        .records()
        .map(|r| {
            let r = r.expect("bundled table is valid");
            PublishedRow {
                name: r[0].to_string(),
                population: r[1].parse().expect("integer"),
                actual_gini: r[2].parse().expect("number"),
                estimated_gini: r[3].parse().expect("number"),
                percent_gap: r[4].parse().expect("number"),
            }
        })
        .collect()
}

/// Appends the one-person anchor unless the dataset already has it.
pub fn with_anchor(d: &Dataset) -> Dataset {
    if d.includes_anchor {
        return d.clone();
    }
    let mut records = d.records.clone();
    let mut anchor = CountryRecord::anchor();
    // keep names unique if a real row already uses the anchor's name
    while records
        .iter()
        .any(|r| r.name.trim().eq_ignore_ascii_case(&anchor.name))
    {
        anchor.name.push('*');
    }
    records.push(anchor);
    Dataset {
        records,
        includes_anchor: true,
    }
}
