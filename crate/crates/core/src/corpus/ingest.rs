//! Reading and writing bill files.
//!
//! JSONL: one object per line with keys `bill_id`, `congress`, `chamber`,
//! `bill_type`, `outcome`, `title`, `sponsor_id`, `subjects_top_term`,
//! `snapshots` (array of `{date, text, cosponsor_count, session}`) and
//! `metadata` (object).
//!
//! CSV: one row per snapshot with header
//! `bill_id,congress,chamber,bill_type,outcome,title,sponsor_id,subjects_top_term,date,text,cosponsor_count,session,metadata`
//! where `metadata` holds a JSON object. Rows of one bill must be contiguous;
//! bill-level columns are taken from its first row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{session_for_date, BillRecord, Chamber, Outcome, Session, TextSnapshot, FIRST_CONGRESS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BillFormat {
    Jsonl,
    Csv,
}

impl BillFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Some(BillFormat::Jsonl),
            "csv" => Some(BillFormat::Csv),
            _ => None,
        }
    }

    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => BillFormat::Csv,
            _ => BillFormat::Jsonl,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub bill_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub bills: Vec<BillRecord>,
    pub rejections: Vec<Rejection>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireSnapshot {
    date: String,
    text: String,
    cosponsor_count: i64,
    session: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireBill {
    bill_id: String,
    congress: i64,
    chamber: String,
    bill_type: String,
    outcome: String,
    title: String,
    sponsor_id: String,
    subjects_top_term: String,
    snapshots: Vec<WireSnapshot>,
    #[serde(default)]
    metadata: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    bill_id: String,
    congress: i64,
    chamber: String,
    bill_type: String,
    outcome: String,
    title: String,
    sponsor_id: String,
    subjects_top_term: String,
    date: String,
    text: String,
    cosponsor_count: i64,
    session: i64,
    #[serde(default)]
    metadata: String,
}

/// Reads and validates a bill file. Per-record problems become rejections;
/// only an unreadable file is fatal.
pub fn ingest_bills(path: &Path, format: BillFormat) -> Result<IngestReport> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let wires = match format {
        BillFormat::Jsonl => read_jsonl(path, BufReader::new(file))?,
        BillFormat::Csv => read_csv(path, file)?,
    };
    let mut report = IngestReport::default();
    for wire in wires {
        match wire {
            Ok(w) => {
                let id = w.bill_id.clone();
                match validate(w) {
                    Ok(bill) => report.bills.push(bill),
                    Err(reason) => report.rejections.push(Rejection { bill_id: id, reason }),
                }
            }
            Err(rej) => report.rejections.push(rej),
        }
    }
    if !report.rejections.is_empty() {
        log::warn!(
            "{}: rejected {} of {} records",
            path.display(),
            report.rejections.len(),
            report.rejections.len() + report.bills.len()
        );
    }
    Ok(report)
}

/// Reads a bill file, failing if any record is rejected.
pub fn read_bills(path: &Path) -> Result<Vec<BillRecord>> {
    let report = ingest_bills(path, BillFormat::from_path(path))?;
    if let Some(first) = report.rejections.first() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!(
                "{} invalid records; first: {}: {}",
                report.rejections.len(),
                first.bill_id,
                first.reason
            ),
        });
    }
    Ok(report.bills)
}

type WireResult = std::result::Result<WireBill, Rejection>;

fn read_jsonl(path: &Path, reader: impl BufRead) -> Result<Vec<WireResult>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str::<WireBill>(&line).map_err(|e| {
            let id = serde_json::from_str::<Value>(&line)
                .ok()
                .and_then(|v| v.get("bill_id").and_then(Value::as_str).map(str::to_string))
                .unwrap_or_else(|| format!("line {}", lineno + 1));
            Rejection {
                bill_id: id,
                reason: format!("malformed record: {e}"),
            }
        }));
    }
    Ok(out)
}

fn read_csv(path: &Path, file: File) -> Result<Vec<WireResult>> {
    let mut reader = csv::Reader::from_reader(file);
    let mut out: Vec<WireResult> = Vec::new();
    for (rowno, row) in reader.deserialize::<CsvRow>().enumerate() {
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })
            }
            Err(e) => {
                out.push(Err(Rejection {
                    bill_id: format!("row {}", rowno + 2),
                    reason: format!("malformed row: {e}"),
                }));
                continue;
            }
        };
        let snapshot = WireSnapshot {
            date: row.date,
            text: row.text,
            cosponsor_count: row.cosponsor_count,
            session: row.session,
        };
        if let Some(Ok(prev)) = out.last_mut() {
            if prev.bill_id == row.bill_id {
                prev.snapshots.push(snapshot);
                continue;
            }
        }
        let metadata = if row.metadata.trim().is_empty() {
            Ok(Map::new())
        } else {
            serde_json::from_str::<Map<String, Value>>(&row.metadata)
        };
        match metadata {
            Ok(metadata) => out.push(Ok(WireBill {
                bill_id: row.bill_id,
                congress: row.congress,
                chamber: row.chamber,
                bill_type: row.bill_type,
                outcome: row.outcome,
                title: row.title,
                sponsor_id: row.sponsor_id,
                subjects_top_term: row.subjects_top_term,
                snapshots: vec![snapshot],
                metadata,
            })),
            Err(e) => out.push(Err(Rejection {
                bill_id: row.bill_id,
                reason: format!("metadata is not a JSON object: {e}"),
            })),
        }
    }
    Ok(out)
}

const RESOLUTION_TYPES: &[&str] = &["hres", "hjres", "hconres", "sres", "sjres", "sconres"];

fn validate(w: WireBill) -> std::result::Result<BillRecord, String> {
    if w.bill_id.trim().is_empty() {
        return Err("empty bill_id".into());
    }
    if w.congress < FIRST_CONGRESS as i64 {
        return Err(format!("congress {} is before {FIRST_CONGRESS}", w.congress));
    }
    let congress = u32::try_from(w.congress).map_err(|_| "congress out of range".to_string())?;
    let chamber = Chamber::parse(&w.chamber).ok_or_else(|| format!("unknown chamber '{}'", w.chamber))?;
    let bill_type = w.bill_type.trim().to_ascii_lowercase().replace('.', "");
    if RESOLUTION_TYPES.contains(&bill_type.as_str()) {
        return Err(format!("resolution type '{bill_type}' excluded"));
    }
    let type_chamber = match bill_type.as_str() {
        "hr" => Chamber::House,
        "s" => Chamber::Senate,
        other => return Err(format!("unknown bill_type '{other}'")),
    };
    if type_chamber != chamber {
        return Err(format!(
            "bill_type '{bill_type}' does not match chamber '{}'",
            chamber.as_str()
        ));
    }
    let outcome = Outcome::parse(&w.outcome).ok_or_else(|| format!("unknown outcome '{}'", w.outcome))?;
    if w.snapshots.is_empty() {
        return Err("no text snapshots".into());
    }
    let mut snapshots = Vec::with_capacity(w.snapshots.len());
    for (i, s) in w.snapshots.into_iter().enumerate() {
        let date = NaiveDate::parse_from_str(s.date.trim(), "%Y-%m-%d")
            .map_err(|_| format!("snapshot {i}: bad date '{}'", s.date))?;
        let session = Session::from_number(s.session).ok_or_else(|| format!("snapshot {i}: session must be 1 or 2"))?;
        match session_for_date(congress, date) {
            Some(expected) if expected == session => {}
            Some(_) => {
                return Err(format!(
                    "snapshot {i}: session {} inconsistent with date {date}",
                    s.session
                ))
            }
            None => return Err(format!("snapshot {i}: date {date} outside congress {congress}")),
        }
        let cosponsor_count =
            u32::try_from(s.cosponsor_count).map_err(|_| format!("snapshot {i}: negative cosponsor_count"))?;
        let snap = TextSnapshot::new(date, s.text, session, cosponsor_count);
        if snap.text_length_chars == 0 {
            return Err(format!("snapshot {i}: empty text after normalization"));
        }
        snapshots.push(snap);
    }
    // stable: equal dates keep ingestion order
    snapshots.sort_by_key(|s| s.date);

    let introduced_month = w
        .metadata
        .get("introduced_date")
        .and_then(Value::as_str)
        .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
        .map_or(snapshots[0].date.month(), |d| d.month());

    Ok(BillRecord {
        bill_id: w.bill_id,
        congress,
        chamber,
        bill_type,
        outcome,
        title: w.title,
        snapshots,
        sponsor_id: w.sponsor_id,
        subjects_top_term: w.subjects_top_term,
        introduced_month,
        metadata: w.metadata,
    })
}

fn to_wire(bill: &BillRecord) -> WireBill {
    WireBill {
        bill_id: bill.bill_id.clone(),
        congress: bill.congress as i64,
        chamber: bill.chamber.as_str().to_string(),
        bill_type: bill.bill_type.clone(),
        outcome: bill.outcome.as_str().to_string(),
        title: bill.title.clone(),
        sponsor_id: bill.sponsor_id.clone(),
        subjects_top_term: bill.subjects_top_term.clone(),
        snapshots: bill
            .snapshots
            .iter()
            .map(|s| WireSnapshot {
                date: s.date.format("%Y-%m-%d").to_string(),
                text: s.raw_text.clone(),
                cosponsor_count: s.cosponsor_count as i64,
                session: s.session.number() as i64,
            })
            .collect(),
        metadata: bill.metadata.clone(),
    }
}

pub fn write_bills_jsonl(path: &Path, bills: &[BillRecord]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for bill in bills {
        serde_json::to_writer(&mut w, &to_wire(bill))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejections(path: &Path, rejections: &[Rejection]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bill_id", "reason"])?;
    for r in rejections {
        w.write_record([&r.bill_id, &r.reason])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(congress: i64, bill_type: &str, chamber: &str) -> String {
        serde_json::json!({
            "bill_id": format!("{bill_type}1-{congress}"),
            "congress": congress,
            "chamber": chamber,
            "bill_type": bill_type,
            "outcome": "enacted",
            "title": "A bill to do things",
            "sponsor_id": "M001",
            "subjects_top_term": "Taxation",
            "snapshots": [
                {"date": "2010-03-23", "text": "<p>Newer text.</p>", "cosponsor_count": 6, "session": 2},
                {"date": "2009-09-17", "text": "<p>Sec. 1. Short title.</p>", "cosponsor_count": 2, "session": 1}
            ],
            "metadata": {"sponsor_party": "D"}
        })
        .to_string()
    }

    fn ingest_lines(lines: &[String]) -> IngestReport {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        ingest_bills(f.path(), BillFormat::Jsonl).unwrap()
    }

    #[test]
    fn valid_house_bill_is_ingested() {
        let report = ingest_lines(&[record(111, "hr", "house")]);
        assert_eq!(report.bills.len(), 1);
        assert!(report.rejections.is_empty());
        let bill = &report.bills[0];
        assert_eq!(bill.snapshots[0].date.year(), 2009, "snapshots sorted by date");
        assert_eq!(bill.introduced_month, 9);
        assert_eq!(bill.snapshots[0].text_length_chars, "sec. 1. short title.".len());
    }

    #[test]
    fn invalid_records_are_rejected_with_reasons() {
        let report = ingest_lines(&[
            record(99, "hr", "house"),
            record(111, "hjres", "house"),
            record(111, "s", "house"),
            "{not json".to_string(),
        ]);
        assert!(report.bills.is_empty());
        assert_eq!(report.rejections.len(), 4);
        assert!(report.rejections[0].reason.contains("before 103"));
        assert!(report.rejections[1].reason.contains("resolution"));
        assert!(report.rejections[2].reason.contains("does not match"));
        assert_eq!(report.rejections[3].bill_id, "line 4");
    }

    #[test]
    fn inconsistent_session_is_rejected() {
        let bad = record(111, "hr", "house").replace("\"session\":2", "\"session\":1");
        let report = ingest_lines(&[bad]);
        assert_eq!(report.rejections.len(), 1);
        assert!(report.rejections[0].reason.contains("session"));
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = ingest_bills(Path::new("/nonexistent/bills.jsonl"), BillFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Read { .. }));
    }

    #[test]
    fn csv_rows_group_into_bills() {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(f, "bill_id,congress,chamber,bill_type,outcome,title,sponsor_id,subjects_top_term,date,text,cosponsor_count,session,metadata").unwrap();
        writeln!(f, "s5-110,110,senate,s,failed,A bill,S1,Health,2007-02-01,Sec. 1. Text.,0,1,\"{{\"\"sponsor_party\"\":\"\"R\"\"}}\"").unwrap();
        writeln!(
            f,
            "s5-110,110,senate,s,failed,A bill,S1,Health,2008-02-01,Sec. 1. Longer text.,3,2,"
        )
        .unwrap();
        writeln!(
            f,
            "s6-110,110,senate,sjres,failed,A res,S1,Health,2007-02-01,Text.,0,1,"
        )
        .unwrap();
        let report = ingest_bills(f.path(), BillFormat::Csv).unwrap();
        assert_eq!(report.bills.len(), 1);
        assert_eq!(report.bills[0].snapshots.len(), 2);
        assert_eq!(report.bills[0].metadata_str("sponsor_party"), Some("R"));
        assert_eq!(report.rejections.len(), 1);
    }

    #[test]
    fn jsonl_round_trip() {
        let report = ingest_lines(&[record(111, "hr", "house")]);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_bills_jsonl(f.path(), &report.bills).unwrap();
        let again = read_bills(f.path()).unwrap();
        assert_eq!(again, report.bills);
    }
}
