//! Reader for the section/key/value + record-table text format shared by
//! `system.conf` and the `*.db` files.
//!
//! ```text
//! # comment
//! [system]
//! p_max_w = 350000
//!
//! [table fans]
//! part_id        width_m  max_flow_m3_per_min
//! 9GA0412P7G001  0.040    0.36
//! ```
//!
//! A `[name]` header opens a key/value section. A `[table name]` header opens
//! a record table: the first non-blank line lists column names, every
//! following line is one record with whitespace-separated fields.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Document {
    origin: String,
    sections: BTreeMap<String, Section>,
    tables: BTreeMap<String, Table>,
}

#[derive(Debug, Clone, Default)]
pub struct Section {
    name: String,
    origin: String,
    entries: BTreeMap<String, (usize, String)>,
}

#[derive(Debug, Clone)]
pub struct Table {
    name: String,
    origin: String,
    columns: Vec<String>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub line: usize,
    fields: Vec<String>,
}

enum Block {
    None,
    Section(String),
    Table(String),
}

impl Document {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut doc = Document {
            origin: origin.to_string(),
            ..Default::default()
        };
        let mut block = Block::None;
        let err = |line: usize, message: String| Error::Parse {
            origin: origin.to_string(),
            line,
            message,
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, format!("unterminated section header `{line}`")))?
                    .trim();
                let mut words = header.split_whitespace();
                match (words.next(), words.next(), words.next()) {
                    (Some("table"), Some(name), None) => {
                        if doc.tables.contains_key(name) {
                            return Err(err(line_no, format!("duplicate table `{name}`")));
                        }
                        doc.tables.insert(
                            name.to_string(),
                            Table {
                                name: name.to_string(),
                                origin: origin.to_string(),
                                columns: Vec::new(),
                                rows: Vec::new(),
                            },
                        );
                        block = Block::Table(name.to_string());
                    }
                    (Some(name), None, None) => {
                        doc.sections
                            .entry(name.to_string())
                            .or_insert_with(|| Section {
                                name: name.to_string(),
                                origin: origin.to_string(),
                                entries: BTreeMap::new(),
                            });
                        block = Block::Section(name.to_string());
                    }
                    _ => return Err(err(line_no, format!("malformed section header `{line}`"))),
                }
                continue;
            }

            match &block {
                Block::None => {
                    return Err(err(
                        line_no,
                        "content before the first section header".into(),
                    ))
                }
                Block::Section(name) => {
                    let (key, value) = line.split_once('=').ok_or_else(|| {
                        err(line_no, format!("expected `key = value`, got `{line}`"))
                    })?;
                    let key = key.trim();
                    if key.is_empty() {
                        return Err(err(line_no, "empty key".into()));
                    }
                    let section = doc.sections.get_mut(name).expect("section exists");
                    if section
                        .entries
                        .insert(
                            key.to_string(),
                            (line_no, unquote(value.trim()).to_string()),
                        )
                        .is_some()
                    {
                        return Err(err(line_no, format!("duplicate key `{key}`")));
                    }
                }
                Block::Table(name) => {
                    let table = doc.tables.get_mut(name).expect("table exists");
                    let fields: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                    if table.columns.is_empty() {
                        table.columns = fields;
                    } else if fields.len() != table.columns.len() {
                        return Err(err(
                            line_no,
                            format!(
                                "table `{name}` expects {} fields, found {}",
                                table.columns.len(),
                                fields.len()
                            ),
                        ));
                    } else {
                        table.rows.push(Row {
                            line: line_no,
                            fields,
                        });
                    }
                }
            }
        }
        Ok(doc)
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    pub fn require_section(&self, name: &str) -> Result<&Section> {
        self.section(name)
            .ok_or_else(|| Error::Database(format!("{}: missing section [{name}]", self.origin)))
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    pub fn require_table(&self, name: &str) -> Result<&Table> {
        self.table(name).ok_or_else(|| {
            Error::Database(format!("{}: missing table [table {name}]", self.origin))
        })
    }
}

impl Section {
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, value)) => value.parse::<T>().map(Some).map_err(|_| Error::Parse {
                origin: self.origin.clone(),
                line: *line,
                message: format!("[{}] {key}: cannot parse `{value}`", self.name),
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Parse {
            origin: self.origin.clone(),
            line: 0,
            message: format!("[{}] missing required key `{key}`", self.name),
        })
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Table {
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| {
            Error::Database(format!(
                "{}: table `{}` lacks required column `{name}`",
                self.origin, self.name
            ))
        })
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    pub fn str<'a>(&self, row: &'a Row, column: &str) -> Result<&'a str> {
        Ok(row.fields[self.column(column)?].as_str())
    }

    pub fn num<T: FromStr>(&self, row: &Row, column: &str) -> Result<T> {
        let raw = self.str(row, column)?;
        raw.parse::<T>().map_err(|_| Error::Parse {
            origin: self.origin.clone(),
            line: row.line,
            message: format!(
                "table `{}` column `{column}`: cannot parse `{raw}`",
                self.name
            ),
        })
    }

    /// Like [`Table::num`] but falls back to `default` when the column is absent.
    pub fn num_or<T: FromStr>(&self, row: &Row, column: &str, default: T) -> Result<T> {
        if self.has_column(column) {
            self.num(row, column)
        } else {
            Ok(default)
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn unquote(value: &str) -> &str {
    value
        .strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .unwrap_or(value)
}

/// Parses `a,b,c` or `min:step:max` (inclusive, tolerant to rounding).
pub fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    let value = value.trim();
    if value.is_empty() {
        return Err("empty list".into());
    }
    let mut out = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        let pieces: Vec<&str> = part.split(':').collect();
        match pieces.as_slice() {
            [single] => out.push(parse_f64(single)?),
            [lo, step, hi] => {
                let (lo, step, hi) = (parse_f64(lo)?, parse_f64(step)?, parse_f64(hi)?);
                if step <= 0.0 || hi < lo {
                    return Err(format!("bad range `{part}`"));
                }
                let count = ((hi - lo) / step + 1e-9).floor() as usize;
                for i in 0..=count {
                    // Round away binary noise so 0.2:0.1:1.7 yields 0.3, not 0.30000000000000004.
                    let v = lo + step * i as f64;
                    out.push((v * 1e9).round() / 1e9);
                }
            }
            _ => return Err(format!("cannot parse list element `{part}`")),
        }
    }
    Ok(out)
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("not a number: `{s}`"))
}
