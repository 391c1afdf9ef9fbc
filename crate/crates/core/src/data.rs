//! Row-aligned named columns and their CSV/schema front end.
//!
//! Column kinds are declared, never inferred. A schema is a list of lines
//! `<col>:cat:<arity>` or `<col>:cont`.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Categorical { arity: u32 },
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Categorical(Vec<u32>),
    Continuous(Vec<f64>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Continuous(v) => v.len(),
        }
    }

    fn gather(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Categorical(v) => ColumnData::Categorical(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Continuous(v) => ColumnData::Continuous(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub data: ColumnData,
}

impl Column {
    pub fn categorical(name: impl Into<String>, arity: u32, values: Vec<u32>) -> Self {
        Self { name: name.into(), kind: ColumnKind::Categorical { arity }, data: ColumnData::Categorical(values) }
    }

    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), kind: ColumnKind::Continuous, data: ColumnData::Continuous(values) }
    }
}

/// Declared column kinds, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<(String, ColumnKind)>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(':').map(str::trim).collect();
            let kind = match parts[..] {
                [_, "cont"] => ColumnKind::Continuous,
                [_, "cat", arity] => {
                    let arity: u32 = arity
                        .parse()
                        .map_err(|_| Error::Input(format!("schema line {}: bad arity `{arity}`", i + 1)))?;
                    if arity == 0 {
                        return Err(Error::Input(format!("schema line {}: arity must be positive", i + 1)));
                    }
                    ColumnKind::Categorical { arity }
                }
                _ => {
                    return Err(Error::Input(format!(
                        "schema line {}: expected `<col>:cat:<arity>` or `<col>:cont`, got `{line}`",
                        i + 1
                    )))
                }
            };
            let name = parts[0].to_string();
            if !seen.insert(name.clone()) {
                return Err(Error::Input(format!("schema declares `{name}` twice")));
            }
            columns.push((name, kind));
        }
        Ok(Self { columns })
    }

    pub fn kind_of(&self, name: &str) -> Option<ColumnKind> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, k)| *k)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, kind) in &self.columns {
            match kind {
                ColumnKind::Categorical { arity } => out.push_str(&format!("{name}:cat:{arity}\n")),
                ColumnKind::Continuous => out.push_str(&format!("{name}:cont\n")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: usize,
}

impl Dataset {
    /// Checks equal lengths, unique names, and categorical ranges.
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.data.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Input(format!("duplicate column `{}`", c.name)));
            }
            if c.data.len() != rows {
                return Err(Error::Input(format!(
                    "column `{}` has {} rows, expected {rows}",
                    c.name,
                    c.data.len()
                )));
            }
            match (&c.kind, &c.data) {
                (ColumnKind::Categorical { arity }, ColumnData::Categorical(v)) => {
                    if *arity == 0 {
                        return Err(Error::Input(format!("column `{}` has arity 0", c.name)));
                    }
                    if let Some(bad) = v.iter().find(|&&x| x >= *arity) {
                        return Err(Error::Input(format!(
                            "column `{}` value {bad} outside [0, {arity})",
                            c.name
                        )));
                    }
                }
                (ColumnKind::Continuous, ColumnData::Continuous(v)) => {
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Input(format!("column `{}` has non-finite values", c.name)));
                    }
                }
                _ => return Err(Error::Type(format!("column `{}` kind does not match its data", c.name))),
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::Input(format!("no column named `{name}`")))
    }

    pub fn categorical(&self, i: usize) -> Result<(&[u32], u32)> {
        match (&self.columns[i].kind, &self.columns[i].data) {
            (ColumnKind::Categorical { arity }, ColumnData::Categorical(v)) => Ok((v, *arity)),
            _ => Err(Error::Type(format!("column `{}` is not categorical", self.columns[i].name))),
        }
    }

    pub fn continuous(&self, i: usize) -> Result<&[f64]> {
        match &self.columns[i].data {
            ColumnData::Continuous(v) => Ok(v),
            _ => Err(Error::Type(format!("column `{}` is not continuous", self.columns[i].name))),
        }
    }

    pub fn schema(&self) -> Schema {
        Schema { columns: self.columns.iter().map(|c| (c.name.clone(), c.kind)).collect() }
    }

    /// New dataset made of the given rows (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column { name: c.name.clone(), kind: c.kind, data: c.data.gather(rows) })
            .collect();
        Dataset { columns, rows: rows.len() }
    }

    pub fn drop_column(&self, name: &str) -> Result<Dataset> {
        let i = self.index_of(name)?;
        let mut columns = self.columns.clone();
        columns.remove(i);
        Dataset::new(columns)
    }

    pub fn rename_column(&mut self, from: &str, to: &str) -> Result<()> {
        let i = self.index_of(from)?;
        if from != to && self.index_of(to).is_ok() {
            return Err(Error::Input(format!("column `{to}` already exists")));
        }
        self.columns[i].name = to.to_string();
        Ok(())
    }

    pub fn replace_column(&mut self, name: &str, column: Column) -> Result<()> {
        let i = self.index_of(name)?;
        let mut columns = self.columns.clone();
        columns[i] = column;
        *self = Dataset::new(columns)?;
        Ok(())
    }

    /// Reads a headered CSV; every column must be declared in `schema`.
    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Input("CSV has no header".into()));
        }
        let kinds: Vec<ColumnKind> = headers
            .iter()
            .map(|h| schema.kind_of(h).ok_or_else(|| Error::Input(format!("column `{h}` missing from schema"))))
            .collect::<Result<_>>()?;
        for (name, _) in &schema.columns {
            if !headers.contains(name) {
                return Err(Error::Input(format!("schema column `{name}` not in CSV header")));
            }
        }
        let mut data: Vec<ColumnData> = kinds
            .iter()
            .map(|k| match k {
                ColumnKind::Categorical { .. } => ColumnData::Categorical(Vec::new()),
                ColumnKind::Continuous => ColumnData::Continuous(Vec::new()),
            })
            .collect();
        for (row_no, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::Input(format!("CSV row {} has {} fields", row_no + 2, record.len())));
            }
            for (j, field) in record.iter().enumerate() {
                if field.is_empty() {
                    return Err(Error::Input(format!(
                        "missing value in row {}, column `{}`",
                        row_no + 2,
                        headers[j]
                    )));
                }
                let bad = || Error::Input(format!("bad value `{field}` in row {}, column `{}`", row_no + 2, headers[j]));
                match &mut data[j] {
                    ColumnData::Categorical(v) => v.push(field.parse().map_err(|_| bad())?),
                    ColumnData::Continuous(v) => v.push(field.parse().map_err(|_| bad())?),
                }
            }
        }
        let columns = headers
            .into_iter()
            .zip(kinds)
            .zip(data)
            .map(|((name, kind), data)| Column { name, kind, data })
            .collect();
        let d = Dataset::new(columns)?;
        if d.n_rows() == 0 {
            return Err(Error::Input("CSV has no data rows".into()));
        }
        Ok(d)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record: Vec<String> = Vec::with_capacity(self.columns.len());
        for r in 0..self.rows {
            record.clear();
            for c in &self.columns {
                record.push(match &c.data {
                    ColumnData::Categorical(v) => v[r].to_string(),
                    ColumnData::Continuous(v) => format!("{}", v[r]),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let schema = Schema::parse("a:cat:3\nb:cont\n").unwrap();
        let d = Dataset::read_csv("a,b\n0,1.5\n2,-3\n".as_bytes(), &schema).unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.categorical(0).unwrap(), (&[0u32, 2][..], 3));
        assert_eq!(d.continuous(1).unwrap(), &[1.5, -3.0]);
        assert!(d.categorical(1).is_err());
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,b\n0,1.5\n2,-3\n");
        assert_eq!(Schema::parse(&schema.to_text()).unwrap(), schema);
    }

    #[test]
    fn csv_errors() {
        let schema = Schema::parse("a:cat:2\nb:cat:2").unwrap();
        for bad in ["a,b\n0,\n", "a,b\n0,2\n", "a,b\n0,x\n", "a,b\n", "a\n0\n", "a,b,c\n0,1,1\n", "a,b\n0,1,1\n"] {
            assert!(Dataset::read_csv(bad.as_bytes(), &schema).is_err(), "{bad:?}");
        }
        assert!(Schema::parse("a:cat:0").is_err());
        assert!(Schema::parse("a:int").is_err());
        assert!(Schema::parse("a:cont\na:cont").is_err());
    }

    #[test]
    fn row_selection_and_columns() {
        let d = Dataset::new(vec![
            Column::categorical("x", 2, vec![0, 1, 1]),
            Column::continuous("y", vec![0.5, 1.5, 2.5]),
        ])
        .unwrap();
        let s = d.select_rows(&[2, 2, 0]);
        assert_eq!(s.categorical(0).unwrap().0, &[1, 1, 0]);
        assert_eq!(d.drop_column("x").unwrap().names(), vec!["y"]);
        let mut r = d.clone();
        r.rename_column("x", "z").unwrap();
        assert!(r.rename_column("z", "y").is_err());
        assert!(Dataset::new(vec![Column::categorical("x", 2, vec![0]), Column::categorical("x", 2, vec![1])]).is_err());
        assert!(Dataset::new(vec![Column::categorical("x", 2, vec![0, 1]), Column::categorical("y", 2, vec![1])]).is_err());
    }
}
