//! Reading grouped observations from csv_long, csv_wide or whitespace files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// Two columns `group,value`, one observation per row.
    #[value(name = "csv_long", alias = "csv-long")]
    CsvLong,
    /// One column per group under a header of labels; ragged columns allowed.
    #[value(name = "csv_wide", alias = "csv-wide")]
    CsvWide,
    /// One group per line: a label followed by its values.
    Whitespace,
}

/// Observations keyed by group label, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupedData {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl GroupedData {
    pub fn push(&mut self, label: &str, value: f64) {
        match self.labels.iter().position(|l| l == label) {
            Some(i) => self.values[i].push(value),
            None => {
                self.labels.push(label.to_string());
                self.values.push(vec![value]);
            }
        }
    }

    /// Moves the group named `control` to the front.
    pub fn with_control_first(mut self, control: &str) -> Result<Self, CliError> {
        let i =
            self.labels.iter().position(|l| l == control).ok_or_else(|| CliError::UnknownGroup(control.to_string()))?;
        let label = self.labels.remove(i);
        let values = self.values.remove(i);
        self.labels.insert(0, label);
        self.values.insert(0, values);
        Ok(self)
    }

    /// Rounds every value to `digits` decimal places.
    pub fn rounded(mut self, digits: i32) -> Self {
        let scale = 10f64.powi(digits);
        for v in self.values.iter_mut().flatten() {
            *v = (*v * scale).round() / scale;
        }
        self
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }
}

fn parse_value(field: &str, line: usize) -> Result<f64, CliError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::Parse { line, message: format!("'{}' is not a number", field.trim()) })?;
    if v.is_nan() {
        return Err(CliError::Parse { line, message: "NaN is not an orderable value".into() });
    }
    Ok(v)
}

pub fn parse(text: &str, format: Format, data: &mut GroupedData) -> Result<(), CliError> {
    match format {
        Format::CsvLong => parse_long(text, data),
        Format::CsvWide => parse_wide(text, data),
        Format::Whitespace => parse_whitespace(text, data),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn parse_long(text: &str, data: &mut GroupedData) -> Result<(), CliError> {
    for (i, record) in csv_reader(text).records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record_line(&record);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(CliError::Parse {
                line,
                message: format!("expected 2 columns (group,value), found {}", record.len()),
            });
        }
        // A first row whose value column is not numeric is a header.
        if i == 0 && record[1].parse::<f64>().is_err() {
            continue;
        }
        let value = parse_value(&record[1], line)?;
        data.push(&record[0], value);
    }
    Ok(())
}

fn parse_wide(text: &str, data: &mut GroupedData) -> Result<(), CliError> {
    let mut records = csv_reader(text).into_records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| CliError::Parse { line: 1, message: e.to_string() })?,
        None => return Ok(()),
    };
    let labels: Vec<String> = header.iter().map(str::to_string).collect();
    for record in records {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record_line(&record);
        if record.len() > labels.len() {
            return Err(CliError::Parse {
                line,
                message: format!("{} fields but only {} group labels", record.len(), labels.len()),
            });
        }
        for (label, field) in labels.iter().zip(record.iter()) {
            if !field.is_empty() {
                data.push(label, parse_value(field, line)?);
            }
        }
    }
    Ok(())
}

fn parse_whitespace(text: &str, data: &mut GroupedData) -> Result<(), CliError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let label = fields.next().expect("nonempty line");
        for f in fields {
            data.push(label, parse_value(f, i + 1)?);
        }
    }
    Ok(())
}

pub fn read_inputs(paths: &[impl AsRef<Path>], format: Format) -> Result<GroupedData, CliError> {
    let mut data = GroupedData::default();
    for path in paths {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        parse(&text, format, &mut data)?;
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, format: Format) -> Result<GroupedData, CliError> {
        let mut d = GroupedData::default();
        parse(text, format, &mut d)?;
        Ok(d)
    }

    #[test]
    fn long_with_header() {
        let d = load("group,value\nctl,1.5\ntrt,2\nctl,3\n", Format::CsvLong).unwrap();
        assert_eq!(d.labels, vec!["ctl", "trt"]);
        assert_eq!(d.values, vec![vec![1.5, 3.0], vec![2.0]]);
    }

    #[test]
    fn long_reports_line_numbers() {
        let err = load("group,value\nctl,1\ntrt,abc\n", Format::CsvLong).unwrap_err();
        assert_eq!(err, CliError::Parse { line: 3, message: "'abc' is not a number".into() });
        let err = load("a,1\nb,2,3\n", Format::CsvLong).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }));
    }

    #[test]
    fn wide_ragged() {
        let d = load("a,b,c\n1,2,3\n4,,6\n7\n", Format::CsvWide).unwrap();
        assert_eq!(d.sizes(), vec![3, 1, 2]);
        assert_eq!(d.values[2], vec![3.0, 6.0]);
    }

    #[test]
    fn whitespace_groups() {
        let d = load("# comment\nctl 1 2 3\n\ntrt 4 5   # trailing\ntrt 6\n", Format::Whitespace).unwrap();
        assert_eq!(d.labels, vec!["ctl", "trt"]);
        assert_eq!(d.values[1], vec![4.0, 5.0, 6.0]);
        assert!(matches!(load("x 1 nan\n", Format::Whitespace), Err(CliError::Parse { line: 1, .. })));
    }

    #[test]
    fn control_reordering_and_rounding() {
        let d = load("a 1.26\nb 2.34\n", Format::Whitespace).unwrap();
        let d = d.with_control_first("b").unwrap();
        assert_eq!(d.labels, vec!["b", "a"]);
        assert_eq!(d.rounded(1).values, vec![vec![2.3], vec![1.3]]);
        let d = load("a 1\n", Format::Whitespace).unwrap();
        assert_eq!(d.with_control_first("z").unwrap_err(), CliError::UnknownGroup("z".into()));
    }
}
