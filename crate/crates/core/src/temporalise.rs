//! Sliding-position temporalisation.
//!
//! A window of `w` consecutive records is merged into one flat record. The
//! decision value is taken from the record at `position`; every other record
//! in the window contributes all of its attributes as conditions, each
//! labelled `<attr>@t<k>` with `k` the window-relative time index. Nothing
//! from the decision's own record is used as a condition, except for the
//! instantaneous case (`w = 1`) where the remaining attributes of the same
//! record are the only conditions available.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{EventSequence, Schema, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalisationSpec {
    window: usize,
    position: usize,
    decision: String,
}

impl TemporalisationSpec {
    pub fn new<S: Into<String>>(window: usize, position: usize, decision: S) -> Result<Self> {
        if window == 0 || position == 0 || position > window {
            return Err(Error::InvalidWindow { window, position });
        }
        Ok(TemporalisationSpec {
            window,
            position,
            decision: decision.into(),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// 1-based position of the decision record within the window.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn decision(&self) -> &str {
        &self.decision
    }

    /// Records preceding the decision record.
    pub fn preceding(&self) -> usize {
        self.position - 1
    }

    /// Records following the decision record.
    pub fn following(&self) -> usize {
        self.window - self.position
    }
}

/// An attribute observed at a window-relative time index (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Column {
    pub attribute: usize,
    pub time: usize,
}

/// Formats a time-indexed attribute name.
pub fn column_label(attribute: &str, time: usize) -> String {
    format!("{attribute}@t{time}")
}

#[derive(Debug, Clone)]
pub struct TemporalisedDataset {
    schema: Arc<Schema>,
    spec: TemporalisationSpec,
    condition_columns: Vec<Column>,
    decision: Column,
    /// Condition values in `condition_columns` order, then the decision value.
    records: Vec<Vec<Value>>,
}

impl TemporalisedDataset {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn spec(&self) -> &TemporalisationSpec {
        &self.spec
    }

    pub fn condition_columns(&self) -> &[Column] {
        &self.condition_columns
    }

    pub fn decision_column(&self) -> Column {
        self.decision
    }

    pub fn records(&self) -> &[Vec<Value>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fields per flat record, decision included.
    pub fn field_count(&self) -> usize {
        self.condition_columns.len() + 1
    }

    pub fn decision_value(&self, row: usize) -> Value {
        *self.records[row]
            .last()
            .expect("flat records are never empty")
    }

    pub fn column_name(&self, column: Column) -> String {
        column_label(&self.schema.attribute(column.attribute).name, column.time)
    }

    /// Index of the condition column for `(attribute, time)`.
    pub fn condition_index(&self, attribute: &str, time: usize) -> Option<usize> {
        let attr = self.schema.index_of(attribute)?;
        self.condition_columns
            .iter()
            .position(|c| c.attribute == attr && c.time == time)
    }

    /// Formats a condition or decision value for display.
    pub fn format_value(&self, column: Column, value: Value) -> String {
        self.schema.attribute(column.attribute).format_value(value)
    }

    pub fn header(&self) -> Vec<String> {
        self.condition_columns
            .iter()
            .chain(std::iter::once(&self.decision))
            .map(|c| self.column_name(*c))
            .collect()
    }

    /// Debug dump as CSV with `@t<k>`-suffixed headers.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        out.write_record(self.header())?;
        let columns: Vec<Column> = self
            .condition_columns
            .iter()
            .copied()
            .chain(std::iter::once(self.decision))
            .collect();
        for record in &self.records {
            out.write_record(
                columns
                    .iter()
                    .zip(record)
                    .map(|(c, v)| self.format_value(*c, *v)),
            )?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

impl fmt::Display for TemporalisedDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

pub fn temporalised_record_count(n: usize, window: usize) -> Result<usize> {
    if window == 0 {
        return Err(Error::InvalidWindow {
            window,
            position: 1,
        });
    }
    if n < window {
        return Err(Error::SequenceShorterThanWindow { len: n, window });
    }
    Ok(n - window + 1)
}

pub fn temporalise(spec: &TemporalisationSpec, seq: &EventSequence) -> Result<TemporalisedDataset> {
    let schema = seq.shared_schema();
    let d = schema.require(spec.decision())?;
    let (w, pos) = (spec.window(), spec.position());
    let count = temporalised_record_count(seq.len(), w)?;
    seq.ensure_complete()?;

    let m = schema.len();
    let condition_columns: Vec<Column> = if w == 1 {
        (0..m)
            .filter(|&a| a != d)
            .map(|attribute| Column { attribute, time: 1 })
            .collect()
    } else {
        (1..=w)
            .filter(|&t| t != pos)
            .flat_map(|time| (0..m).map(move |attribute| Column { attribute, time }))
            .collect()
    };

    let records = (0..count)
        .map(|i| {
            let mut flat = Vec::with_capacity(condition_columns.len() + 1);
            if w == 1 {
                let rec = seq.record(i);
                flat.extend((0..m).filter(|&a| a != d).map(|a| rec[a]));
            } else {
                for j in (1..pos).chain(pos + 1..=w) {
                    flat.extend_from_slice(seq.record(i + j - 1));
                }
            }
            flat.push(seq.record(i + pos - 1)[d]);
            flat
        })
        .collect();

    Ok(TemporalisedDataset {
        schema,
        spec: spec.clone(),
        condition_columns,
        decision: Column {
            attribute: d,
            time: pos,
        },
        records,
    })
}
