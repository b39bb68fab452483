//! Bill records, text preprocessing, ingestion and the synthetic corpus generator.

mod ingest;
mod synth;
mod text;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use ingest::{ingest_bills, read_bills, write_bills_jsonl, write_rejections, BillFormat, IngestReport, Rejection};
pub use synth::{generate_synthetic_corpus, SyntheticCorpus, SyntheticSpec, DEFAULT_SUBJECTS};
pub use text::{normalize_text, split_sentences, tokenize};

/// The first congress for which full bill text is available.
pub const FIRST_CONGRESS: u32 = 103;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chamber {
    House,
    Senate,
}

impl Chamber {
    pub const ALL: [Chamber; 2] = [Chamber::House, Chamber::Senate];

    pub fn as_str(self) -> &'static str {
        match self {
            Chamber::House => "house",
            Chamber::Senate => "senate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "house" | "h" => Some(Chamber::House),
            "senate" | "s" => Some(Chamber::Senate),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Enacted,
    Failed,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Enacted, Outcome::Failed];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Enacted => "enacted",
            Outcome::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "enacted" => Some(Outcome::Enacted),
            "failed" => Some(Outcome::Failed),
            _ => None,
        }
    }

    pub fn is_enacted(self) -> bool {
        self == Outcome::Enacted
    }

    /// 1.0 for enacted, 0.0 for failed.
    pub fn as_label(self) -> f64 {
        if self.is_enacted() {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Session {
    First,
    Second,
}

impl Session {
    pub fn number(self) -> u8 {
        match self {
            Session::First => 1,
            Session::Second => 2,
        }
    }

    pub fn from_number(n: i64) -> Option<Self> {
        match n {
            1 => Some(Session::First),
            2 => Some(Session::Second),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotPolicy {
    Oldest,
    Newest,
}

impl SnapshotPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            SnapshotPolicy::Oldest => "oldest",
            SnapshotPolicy::Newest => "newest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oldest" => Some(SnapshotPolicy::Oldest),
            "newest" => Some(SnapshotPolicy::Newest),
            _ => None,
        }
    }
}

/// First calendar year of a congress (the 103rd began in 1993).
pub fn congress_start_year(congress: u32) -> i32 {
    1787 + 2 * congress as i32
}

/// The session a date falls in, or `None` when the date lies outside the congress.
/// The second session runs through the January 3rd that ends the congress.
pub fn session_for_date(congress: u32, date: NaiveDate) -> Option<Session> {
    let start = congress_start_year(congress);
    match date.year() - start {
        0 => Some(Session::First),
        1 => Some(Session::Second),
        2 if date.month() == 1 && date.day() <= 3 => Some(Session::Second),
        _ => None,
    }
}

/// One dated full-text version of a bill.
#[derive(Clone, Debug, PartialEq)]
pub struct TextSnapshot {
    pub date: NaiveDate,
    pub raw_text: String,
    pub session: Session,
    pub cosponsor_count: u32,
    /// Character count of the normalized text.
    pub text_length_chars: usize,
}

impl TextSnapshot {
    pub fn new(date: NaiveDate, raw_text: String, session: Session, cosponsor_count: u32) -> Self {
        let text_length_chars = normalize_text(&raw_text).chars().count();
        TextSnapshot {
            date,
            raw_text,
            session,
            cosponsor_count,
            text_length_chars,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BillRecord {
    pub bill_id: String,
    pub congress: u32,
    pub chamber: Chamber,
    pub bill_type: String,
    pub outcome: Outcome,
    pub title: String,
    /// Ordered by date; ties keep ingestion order.
    pub snapshots: Vec<TextSnapshot>,
    pub sponsor_id: String,
    pub subjects_top_term: String,
    pub introduced_month: u32,
    pub metadata: Map<String, Value>,
}

impl BillRecord {
    pub fn select_snapshot(&self, policy: SnapshotPolicy) -> &TextSnapshot {
        select_snapshot(self, policy)
    }

    pub fn metadata_str(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).and_then(Value::as_str)
    }
}

/// Picks the oldest or newest snapshot; among equal dates the first ingested wins.
pub fn select_snapshot(bill: &BillRecord, policy: SnapshotPolicy) -> &TextSnapshot {
    let mut best = &bill.snapshots[0];
    for snap in &bill.snapshots[1..] {
        let better = match policy {
            SnapshotPolicy::Oldest => snap.date < best.date,
            SnapshotPolicy::Newest => snap.date > best.date,
        };
        if better {
            best = snap;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn bill_with(dates: &[&str]) -> BillRecord {
        BillRecord {
            bill_id: "hr1-111".into(),
            congress: 111,
            chamber: Chamber::House,
            bill_type: "hr".into(),
            outcome: Outcome::Failed,
            title: "a bill".into(),
            snapshots: dates
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let dt = date(d);
                    TextSnapshot::new(dt, format!("text {i}"), session_for_date(111, dt).unwrap(), i as u32)
                })
                .collect(),
            sponsor_id: "M1".into(),
            subjects_top_term: "Taxation".into(),
            introduced_month: 9,
            metadata: Map::new(),
        }
    }

    #[test]
    fn snapshot_selection_by_policy() {
        let bill = bill_with(&["2009-09-17", "2010-03-23"]);
        assert_eq!(bill.select_snapshot(SnapshotPolicy::Oldest).date, date("2009-09-17"));
        assert_eq!(bill.select_snapshot(SnapshotPolicy::Newest).date, date("2010-03-23"));

        let single = bill_with(&["2009-09-17"]);
        assert_eq!(single.select_snapshot(SnapshotPolicy::Oldest), &single.snapshots[0]);
        assert_eq!(single.select_snapshot(SnapshotPolicy::Newest), &single.snapshots[0]);
    }

    #[test]
    fn snapshot_ties_keep_first_ingested() {
        let bill = bill_with(&["2009-09-17", "2009-09-17"]);
        assert_eq!(bill.select_snapshot(SnapshotPolicy::Oldest).cosponsor_count, 0);
        assert_eq!(bill.select_snapshot(SnapshotPolicy::Newest).cosponsor_count, 0);
    }

    #[test]
    fn congress_calendar() {
        assert_eq!(congress_start_year(103), 1993);
        assert_eq!(congress_start_year(113), 2013);
        assert_eq!(session_for_date(111, date("2009-09-17")), Some(Session::First));
        assert_eq!(session_for_date(111, date("2010-03-23")), Some(Session::Second));
        assert_eq!(session_for_date(111, date("2011-01-02")), Some(Session::Second));
        assert_eq!(session_for_date(111, date("2011-02-01")), None);
        assert_eq!(session_for_date(111, date("2008-12-01")), None);
    }
}
