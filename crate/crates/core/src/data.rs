//! Attribute schemas, ordered record storage and CSV ingestion.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token reserved for a missing value in CSV input.
pub const MISSING_TOKEN: &str = "?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Discrete,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    /// Observed symbols in first-appearance order. Empty for numeric attributes.
    pub domain: Vec<String>,
}

impl Attribute {
    pub fn discrete<S: Into<String>>(name: S, domain: Vec<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Discrete,
            domain,
        }
    }

    pub fn numeric<S: Into<String>>(name: S) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
            domain: Vec::new(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.kind == AttributeKind::Discrete
    }

    pub fn symbol_index(&self, symbol: &str) -> Option<u32> {
        self.domain
            .iter()
            .position(|s| s == symbol)
            .map(|i| i as u32)
    }

    pub fn symbol(&self, index: u32) -> Option<&str> {
        self.domain.get(index as usize).map(String::as_str)
    }

    /// Renders a value of this attribute the way it appears in CSV.
    pub fn format_value(&self, value: Value) -> String {
        match value {
            Value::Num(v) => format!("{v}"),
            Value::Sym(i) => self
                .symbol(i)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("#{i}")),
            Value::Missing => MISSING_TOKEN.to_owned(),
        }
    }
}

/// The attribute set of a sequence. Names are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::DuplicateAttribute(attr.name.clone()));
            }
            if attr.is_discrete() && attr.domain.is_empty() {
                return Err(Error::EmptyColumn(attr.name.clone()));
            }
        }
        Ok(Schema { attributes })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }
}

/// A single attribute value. Symbols index into the attribute's domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Sym(u32),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// The first row holds attribute names.
    #[default]
    FirstRowNames,
    /// Every row is data; attributes are named `a1..am`.
    Positional,
}

/// A temporally ordered table of records. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    schema: Arc<Schema>,
    records: Vec<Vec<Value>>,
}

impl EventSequence {
    pub fn new(schema: Schema, records: Vec<Vec<Value>>) -> Result<Self> {
        Self::with_shared_schema(Arc::new(schema), records)
    }

    pub(crate) fn with_shared_schema(
        schema: Arc<Schema>,
        records: Vec<Vec<Value>>,
    ) -> Result<Self> {
        for (i, record) in records.iter().enumerate() {
            if record.len() != schema.len() {
                return Err(Error::InvalidRecord {
                    record: i,
                    reason: format!("expected {} values, found {}", schema.len(), record.len()),
                });
            }
            for (attr, value) in schema.attributes().iter().zip(record) {
                let ok = match (attr.kind, value) {
                    (_, Value::Missing) => true,
                    (AttributeKind::Numeric, Value::Num(v)) => v.is_finite(),
                    (AttributeKind::Discrete, Value::Sym(s)) => (*s as usize) < attr.domain.len(),
                    _ => false,
                };
                if !ok {
                    return Err(Error::InvalidRecord {
                        record: i,
                        reason: format!("value {value:?} does not fit attribute `{}`", attr.name),
                    });
                }
            }
        }
        Ok(EventSequence { schema, records })
    }

    /// Builds a sequence of discrete attributes from string rows, collecting
    /// domains in first-appearance order.
    pub fn from_symbols<S: AsRef<str>>(names: &[&str], rows: &[Vec<S>]) -> Result<Self> {
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| r.iter().map(|c| c.as_ref().to_owned()).collect())
            .collect();
        let names = names.iter().map(|s| s.to_string()).collect();
        build_typed(names, cells, false)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub(crate) fn shared_schema(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn records(&self) -> &[Vec<Value>] {
        &self.records
    }

    pub fn record(&self, index: usize) -> &[Value] {
        &self.records[index]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of attributes.
    pub fn width(&self) -> usize {
        self.schema.len()
    }

    /// Fails on the first record holding a missing value.
    pub fn ensure_complete(&self) -> Result<()> {
        for (i, record) in self.records.iter().enumerate() {
            if let Some(j) = record.iter().position(Value::is_missing) {
                return Err(Error::MissingValue {
                    record: i,
                    attribute: self.schema.attribute(j).name.clone(),
                });
            }
        }
        Ok(())
    }

    /// Splits off the last `test_count` records as a held-out tail.
    pub fn split_chronological(&self, test_count: usize) -> Result<(EventSequence, EventSequence)> {
        if test_count >= self.len() && !(test_count == 0 && self.is_empty()) {
            return Err(Error::InvalidParameter(format!(
                "test count {test_count} must be smaller than the sequence length {}",
                self.len()
            )));
        }
        let cut = self.len() - test_count;
        let train = EventSequence {
            schema: self.shared_schema(),
            records: self.records[..cut].to_vec(),
        };
        let test = EventSequence {
            schema: self.shared_schema(),
            records: self.records[cut..].to_vec(),
        };
        Ok((train, test))
    }

    pub fn write_csv<W: Write>(&self, writer: W, header: bool) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        if header {
            out.write_record(self.schema.names())?;
        }
        for record in &self.records {
            out.write_record(
                self.schema
                    .attributes()
                    .iter()
                    .zip(record)
                    .map(|(a, v)| a.format_value(*v)),
            )?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_string(&self, header: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, header)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

pub fn load_csv<P: AsRef<Path>>(path: P, header_mode: HeaderMode) -> Result<EventSequence> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_csv(file, header_mode)
}

/// Parses CSV from any reader. A column is numeric iff every non-missing
/// cell parses as a finite number.
pub fn read_csv<R: Read>(reader: R, header_mode: HeaderMode) -> Result<EventSequence> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row: Vec<String> = row.iter().map(str::to_owned).collect();
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }

    let names = match header_mode {
        HeaderMode::FirstRowNames => rows.remove(0),
        HeaderMode::Positional => (1..=rows[0].len()).map(|i| format!("a{i}")).collect(),
    };
    if rows.is_empty() {
        return Err(Error::EmptyColumn(
            names.first().cloned().unwrap_or_default(),
        ));
    }
    build_typed(names, rows, true)
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn build_typed(
    names: Vec<String>,
    rows: Vec<Vec<String>>,
    infer_numeric: bool,
) -> Result<EventSequence> {
    let width = names.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: width,
                found: row.len(),
            });
        }
    }

    let mut attributes = Vec::with_capacity(width);
    for (j, name) in names.iter().enumerate() {
        let present = rows
            .iter()
            .map(|r| r[j].as_str())
            .filter(|c| *c != MISSING_TOKEN);
        let mut any = false;
        let mut numeric = infer_numeric;
        let mut domain: Vec<String> = Vec::new();
        for cell in present {
            any = true;
            if numeric && parse_number(cell).is_none() {
                numeric = false;
            }
            if !domain.iter().any(|s| s == cell) {
                domain.push(cell.to_owned());
            }
        }
        if !any {
            return Err(Error::EmptyColumn(name.clone()));
        }
        attributes.push(if numeric {
            Attribute::numeric(name.clone())
        } else {
            Attribute::discrete(name.clone(), domain)
        });
    }

    let records = rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(&attributes)
                .map(|(cell, attr)| {
                    if cell == MISSING_TOKEN {
                        Value::Missing
                    } else if attr.is_discrete() {
                        Value::Sym(attr.symbol_index(cell).expect("symbol collected above"))
                    } else {
                        Value::Num(parse_number(cell).expect("column typed numeric"))
                    }
                })
                .collect()
        })
        .collect();

    EventSequence::new(Schema::new(attributes)?, records)
}
