//! CSV and JSON serialisation of result tables. Both formats are described
//! in `docs/formats.md`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, TaskKind};
use crate::error::{Error, Result};
use crate::sweep::{ResultTable, Row};

pub const TABLE_FORMAT: &str = "photocorr-table/1";

/// Prefix of the single header line that changes between identical runs.
pub const RUN_LINE_PREFIX: &str = "# run: ";

pub fn write_result(table: &ResultTable, path: &Path, format: OutputFormat) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(table, &mut out)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &JsonTable::from(table)).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(table: &ResultTable, out: &mut W) -> Result<()> {
    writeln!(out, "# photocorr {}", table.engine_version)?;
    writeln!(out, "# format: {TABLE_FORMAT}")?;
    writeln!(out, "# task: {}", table.task)?;
    writeln!(out, "# complete: {}", table.complete)?;
    writeln!(out, "# flagged: {}", table.flagged())?;
    for n in &table.notes {
        writeln!(out, "# note: {n}")?;
    }
    for line in table.config_echo.lines() {
        if line.is_empty() {
            writeln!(out, "# config:")?;
        } else {
            writeln!(out, "# config: {line}")?;
        }
    }
    if let Some(ts) = table.timestamp {
        writeln!(out, "{RUN_LINE_PREFIX}timestamp={ts} elapsed_seconds={}", table.elapsed_seconds)?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = table.columns.clone();
    header.push("flag".into());
    w.write_record(&header).map_err(csv_error)?;
    for r in &table.rows {
        let mut rec: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        rec.push(r.flag.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

/// Columns, rows and `#` header lines of a CSV written by [`write_result`].
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header_lines: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let file = std::fs::File::open(path)?;
    let mut header_lines = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.starts_with('#') {
            header_lines.push(line);
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut columns: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if columns.last().map(String::as_str) != Some("flag") {
        return Err(Error::Numerical("csv table lacks the trailing flag column".into()));
    }
    columns.pop();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let values = rec
            .iter()
            .take(columns.len())
            .map(|s| s.parse::<f64>().map_err(|e| Error::Numerical(format!("bad number `{s}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let flag = rec.get(columns.len()).filter(|s| !s.is_empty()).map(str::to_string);
        rows.push(Row { values, flag });
    }
    Ok(CsvTable {
        header_lines,
        columns,
        rows,
    })
}

#[derive(Serialize, Deserialize)]
pub struct JsonTable {
    pub format: String,
    pub engine_version: String,
    pub task: TaskKind,
    pub complete: bool,
    pub config: String,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<JsonRun>,
    pub columns: Vec<String>,
    /// Non-finite cells are written as `null`.
    pub rows: Vec<Vec<Option<f64>>>,
    /// `[row index, reason code]` for every flagged row.
    pub flags: Vec<(usize, String)>,
}

#[derive(Serialize, Deserialize)]
pub struct JsonRun {
    pub timestamp: u64,
    pub elapsed_seconds: f64,
}

impl From<&ResultTable> for JsonTable {
    fn from(t: &ResultTable) -> Self {
        Self {
            format: TABLE_FORMAT.to_string(),
            engine_version: t.engine_version.clone(),
            task: t.task,
            complete: t.complete,
            config: t.config_echo.clone(),
            notes: t.notes.clone(),
            run: t.timestamp.map(|timestamp| JsonRun {
                timestamp,
                elapsed_seconds: t.elapsed_seconds,
            }),
            columns: t.columns.clone(),
            rows: t
                .rows
                .iter()
                .map(|r| r.values.iter().map(|v| v.is_finite().then_some(*v)).collect())
                .collect(),
            flags: t
                .rows
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.flag.clone().map(|f| (i, f)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        ResultTable {
            task: TaskKind::G2map,
            engine_version: "0.0.0".into(),
            config_echo: "[task]\nkind = \"g2map\"\n".into(),
            notes: vec!["hello".into()],
            columns: vec!["omega1".into(), "omega2".into(), "g2".into()],
            rows: vec![
                Row {
                    values: vec![-1.5, 0.1 + 0.2, 1.0 / 3.0],
                    flag: None,
                },
                Row {
                    values: vec![2.0, 1e-300, f64::NAN],
                    flag: Some("undefined-correlation".into()),
                },
            ],
            elapsed_seconds: 0.25,
            timestamp: Some(7),
            complete: true,
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = table();
        write_result(&t, &p, OutputFormat::Csv).unwrap();
        let back = read_csv(&p).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.rows[0], t.rows[0]);
        assert_eq!(back.rows[1].flag, t.rows[1].flag);
        assert!(back.rows[1].values[2].is_nan());
        assert_eq!(back.rows[1].values[1], 1e-300);
        assert!(back.header_lines.iter().any(|l| l == "# config: kind = \"g2map\""));
        assert_eq!(back.header_lines.iter().filter(|l| l.starts_with(RUN_LINE_PREFIX)).count(), 1);
    }

    #[test]
    fn json_nulls_and_flags() {
        let j = serde_json::to_value(JsonTable::from(&table())).unwrap();
        assert_eq!(j["rows"][1][2], serde_json::Value::Null);
        assert_eq!(j["flags"][0][0], 1);
        assert_eq!(j["format"], TABLE_FORMAT);
    }
}
