//! Committee membership, chamber composition and member service history.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{BillRecord, Chamber};
use crate::{Error, Result};

/// One row of the committee membership file
/// (`congress,committee_id,member_id,leadership_code,start_congress`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipRow {
    pub congress: u32,
    pub committee_id: String,
    pub member_id: String,
    pub leadership_code: Option<u32>,
    pub start_congress: u32,
}

/// Seats held by a party in one chamber of one congress
/// (`congress,chamber,party,seats`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub congress: u32,
    pub chamber: Chamber,
    pub party: String,
    pub seats: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Assignment {
    pub committee_id: String,
    pub leadership_code: Option<u32>,
    pub start_congress: u32,
}

/// Indexed committee tables.
#[derive(Clone, Debug, Default)]
pub struct CommitteeMembership {
    by_member: HashMap<(u32, String), Vec<Assignment>>,
    composition: BTreeMap<(u32, Chamber), Vec<(String, u32)>>,
    rows: Vec<MembershipRow>,
    composition_rows: Vec<CompositionRow>,
}

impl CommitteeMembership {
    pub fn new(rows: Vec<MembershipRow>, composition: Vec<CompositionRow>) -> Self {
        let mut by_member: HashMap<(u32, String), Vec<Assignment>> = HashMap::new();
        for r in &rows {
            by_member
                .entry((r.congress, r.member_id.clone()))
                .or_default()
                .push(Assignment {
                    committee_id: r.committee_id.clone(),
                    leadership_code: r.leadership_code,
                    start_congress: r.start_congress,
                });
        }
        let mut comp: BTreeMap<(u32, Chamber), Vec<(String, u32)>> = BTreeMap::new();
        for c in &composition {
            comp.entry((c.congress, c.chamber))
                .or_default()
                .push((c.party.clone(), c.seats));
        }
        CommitteeMembership {
            by_member,
            composition: comp,
            rows,
            composition_rows: composition,
        }
    }

    pub fn rows(&self) -> &[MembershipRow] {
        &self.rows
    }

    pub fn composition_rows(&self) -> &[CompositionRow] {
        &self.composition_rows
    }

    pub(crate) fn assignments(&self, congress: u32, member: &str) -> Option<&[Assignment]> {
        self.by_member.get(&(congress, member.to_string())).map(Vec::as_slice)
    }

    /// Party holding the most seats; `None` without composition data or on a tie.
    pub fn majority_party(&self, congress: u32, chamber: Chamber) -> Option<&str> {
        let parties = self.composition.get(&(congress, chamber))?;
        let max = parties.iter().map(|(_, s)| *s).max()?;
        let mut top = parties.iter().filter(|(_, s)| *s == max);
        let first = top.next()?;
        if top.next().is_some() {
            return None;
        }
        Some(first.0.as_str())
    }

    /// Seats of `party` over chamber size.
    pub fn party_proportion(&self, congress: u32, chamber: Chamber, party: &str) -> Option<f64> {
        let parties = self.composition.get(&(congress, chamber))?;
        let total: u32 = parties.iter().map(|(_, s)| *s).sum();
        if total == 0 {
            return None;
        }
        let seats = parties.iter().find(|(p, _)| p == party).map_or(0, |(_, s)| *s);
        Some(seats as f64 / total as f64)
    }

    pub fn read(membership: &Path, composition: Option<&Path>) -> Result<Self> {
        let rows = read_csv_rows::<MembershipCsv>(membership)?
            .into_iter()
            .map(MembershipRow::from)
            .collect();
        let comp = match composition {
            Some(p) => read_csv_rows::<CompositionRow>(p)?,
            None => Vec::new(),
        };
        Ok(Self::new(rows, comp))
    }

    pub fn write(&self, membership: &Path, composition: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(membership)?;
        w.write_record([
            "congress",
            "committee_id",
            "member_id",
            "leadership_code",
            "start_congress",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.congress.to_string(),
                r.committee_id.clone(),
                r.member_id.clone(),
                r.leadership_code.map(|c| c.to_string()).unwrap_or_default(),
                r.start_congress.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(composition)?;
        for r in &self.composition_rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct MembershipCsv {
    congress: u32,
    committee_id: String,
    member_id: String,
    #[serde(deserialize_with = "csv::invalid_option")]
    leadership_code: Option<u32>,
    start_congress: u32,
}

impl From<MembershipCsv> for MembershipRow {
    fn from(m: MembershipCsv) -> Self {
        MembershipRow {
            congress: m.congress,
            committee_id: m.committee_id,
            member_id: m.member_id,
            leadership_code: m.leadership_code,
            start_congress: m.start_congress,
        }
    }
}

fn read_csv_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Read {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        },
    })?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Congresses in which each member is known to have served, from committee
/// rows and bill sponsorships.
#[derive(Clone, Debug, Default)]
pub struct History {
    served: HashMap<String, BTreeSet<u32>>,
}

impl History {
    pub fn new(membership: &CommitteeMembership, bills: &[BillRecord]) -> Self {
        let mut h = History::default();
        for r in membership.rows() {
            h.record(&r.member_id, r.congress);
        }
        for b in bills {
            h.record(&b.sponsor_id, b.congress);
        }
        h
    }

    pub fn record(&mut self, member: &str, congress: u32) {
        self.served.entry(member.to_string()).or_default().insert(congress);
    }

    /// Terms served up to and including `congress`, counting only earlier
    /// congresses from the record so the predicted congress cannot leak in.
    pub fn terms_served(&self, member: &str, congress: u32) -> u32 {
        let earlier = self.served.get(member).map_or(0, |s| s.range(..congress).count());
        1 + earlier as u32
    }
}
