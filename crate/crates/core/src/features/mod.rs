//! Contextual predictors for each bill and their expansion into a numeric
//! design matrix.

mod design;
mod tables;

use serde::{Deserialize, Serialize};

use crate::corpus::{BillRecord, Chamber, Session, SnapshotPolicy};

pub(crate) use design::schema_mismatch;
pub use design::{
    expand_design, impute_missing, DesignMatrix, DesignSchema, ImputeStrategy, Imputer, TextScores,
    INTERACTION_PARENTS, SUBJECT_REFERENCE,
};
pub use tables::{CommitteeMembership, CompositionRow, History, MembershipRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Northeast,
    NorthCentral,
    South,
    West,
    Other,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Northeast,
        Region::NorthCentral,
        Region::South,
        Region::West,
        Region::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Region::Northeast => "Northeast",
            Region::NorthCentral => "North Central",
            Region::South => "South",
            Region::West => "West",
            Region::Other => "Other",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.label().eq_ignore_ascii_case(label.trim()))
    }

    /// Census region of a two-letter state code; territories map to `Other`.
    pub fn from_state(code: &str) -> Option<Self> {
        let code = code.trim().to_ascii_uppercase();
        let region = match code.as_str() {
            "CT" | "ME" | "MA" | "NH" | "RI" | "VT" | "NJ" | "NY" | "PA" => Region::Northeast,
            "IL" | "IN" | "MI" | "OH" | "WI" | "IA" | "KS" | "MN" | "MO" | "NE" | "ND" | "SD" => Region::NorthCentral,
            "DE" | "FL" | "GA" | "MD" | "NC" | "SC" | "VA" | "DC" | "WV" | "AL" | "KY" | "MS" | "TN" | "AR" | "LA"
            | "OK" | "TX" => Region::South,
            "AZ" | "CO" | "ID" | "MT" | "NV" | "NM" | "UT" | "WY" | "AK" | "CA" | "HI" | "OR" | "WA" => Region::West,
            "PR" | "GU" | "VI" | "AS" | "MP" => Region::Other,
            _ => return None,
        };
        Some(region)
    }
}

/// Highest committee leadership rank held on the bill's committees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CommitteePosition {
    None,
    Code(u32),
}

impl CommitteePosition {
    pub fn label(self) -> String {
        match self {
            CommitteePosition::None => "none".to_string(),
            CommitteePosition::Code(c) => c.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Leadership codes recognised for `committee_position`, best rank first.
    pub leadership_codes: Vec<u32>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            leadership_codes: (1..=11).collect(),
        }
    }
}

/// Contextual predictors of one bill. `None` marks a missing value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextFeatures {
    pub bill_id: String,
    pub region: Option<Region>,
    pub sponsor_party_prop: Option<f64>,
    pub sponsor_terms: u32,
    /// Mean years on the bill's committees; 0 when on none of them.
    pub committee_seniority: Option<f64>,
    pub committee_position: Option<CommitteePosition>,
    pub not_maj_on_com: Option<bool>,
    pub maj_on_com: Option<bool>,
    pub num_cosponsors: u32,
    pub session: Session,
    pub house: bool,
    pub month: u32,
    pub subjects_top_term: String,
    pub text_length: usize,
}

/// Builds the contextual predictors from the policy-selected snapshot and the
/// committee tables of the bill's congress.
pub fn build_features(
    bill: &BillRecord,
    membership: &CommitteeMembership,
    history: &History,
    policy: SnapshotPolicy,
    config: &FeatureConfig,
) -> ContextFeatures {
    let snapshot = bill.select_snapshot(policy);
    let region = bill
        .metadata_str("sponsor_region")
        .and_then(Region::parse)
        .or_else(|| bill.metadata_str("sponsor_state").and_then(Region::from_state));
    let party = bill.metadata_str("sponsor_party");
    let sponsor_party_prop = party.and_then(|p| membership.party_proportion(bill.congress, bill.chamber, p));
    let in_majority = match (party, membership.majority_party(bill.congress, bill.chamber)) {
        (Some(p), Some(m)) => Some(p == m),
        _ => None,
    };

    let committees: Vec<&str> = bill
        .metadata
        .get("committees")
        .and_then(|v| v.as_array())
        .map(|a| a.iter().filter_map(|c| c.as_str()).collect())
        .unwrap_or_default();

    let (committee_seniority, committee_position, on_first) =
        match membership.assignments(bill.congress, &bill.sponsor_id) {
            None => (None, None, None),
            Some(assignments) => {
                let on_bill: Vec<_> = assignments
                    .iter()
                    .filter(|a| committees.contains(&a.committee_id.as_str()))
                    .collect();
                let seniority = if on_bill.is_empty() {
                    0.0
                } else {
                    on_bill
                        .iter()
                        .map(|a| 2.0 * bill.congress.saturating_sub(a.start_congress) as f64)
                        .sum::<f64>()
                        / on_bill.len() as f64
                };
                let position = config
                    .leadership_codes
                    .iter()
                    .copied()
                    .filter(|code| on_bill.iter().any(|a| a.leadership_code == Some(*code)))
                    .min()
                    .map_or(CommitteePosition::None, CommitteePosition::Code);
                let on_first = committees
                    .first()
                    .is_some_and(|first| assignments.iter().any(|a| a.committee_id == *first));
                (Some(seniority), Some(position), Some(on_first))
            }
        };
    let (maj_on_com, not_maj_on_com) = match (in_majority, on_first) {
        (Some(maj), Some(on)) => (Some(maj && on), Some(!maj && on)),
        _ => (None, None),
    };

    ContextFeatures {
        bill_id: bill.bill_id.clone(),
        region,
        sponsor_party_prop,
        sponsor_terms: history.terms_served(&bill.sponsor_id, bill.congress),
        committee_seniority,
        committee_position,
        not_maj_on_com,
        maj_on_com,
        num_cosponsors: snapshot.cosponsor_count,
        session: snapshot.session,
        house: bill.chamber == Chamber::House,
        month: bill.introduced_month,
        subjects_top_term: bill.subjects_top_term.clone(),
        text_length: snapshot.text_length_chars,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Outcome, TextSnapshot};
    use chrono::NaiveDate;
    use serde_json::{json, Map};

    fn tables() -> CommitteeMembership {
        let row = |member: &str, committee: &str, code: Option<u32>, start: u32| MembershipRow {
            congress: 111,
            committee_id: committee.into(),
            member_id: member.into(),
            leadership_code: code,
            start_congress: start,
        };
        CommitteeMembership::new(
            vec![
                row("M1", "HSWM", Some(3), 105),
                row("M1", "HSAG", Some(1), 109),
                row("M2", "HSJU", None, 110),
            ],
            vec![
                CompositionRow {
                    congress: 111,
                    chamber: Chamber::House,
                    party: "D".into(),
                    seats: 256,
                },
                CompositionRow {
                    congress: 111,
                    chamber: Chamber::House,
                    party: "R".into(),
                    seats: 179,
                },
            ],
        )
    }

    fn bill(sponsor: &str, party: &str, committees: &[&str], cosponsors: &[u32]) -> BillRecord {
        let mut metadata = Map::new();
        metadata.insert("sponsor_party".into(), json!(party));
        metadata.insert("sponsor_state".into(), json!("OH"));
        metadata.insert("committees".into(), json!(committees));
        let dates = ["2009-09-17", "2010-03-23"];
        BillRecord {
            bill_id: "hr1-111".into(),
            congress: 111,
            chamber: Chamber::House,
            bill_type: "hr".into(),
            outcome: Outcome::Failed,
            title: "t".into(),
            snapshots: cosponsors
                .iter()
                .zip(dates)
                .enumerate()
                .map(|(i, (&c, d))| {
                    let date = NaiveDate::parse_from_str(d, "%Y-%m-%d").unwrap();
                    let session = crate::corpus::session_for_date(111, date).unwrap();
                    TextSnapshot::new(date, "x".repeat(10 * (i + 1)), session, c)
                })
                .collect(),
            sponsor_id: sponsor.into(),
            subjects_top_term: "Taxation".into(),
            introduced_month: 9,
            metadata,
        }
    }

    #[test]
    fn majority_sponsor_on_first_committee() {
        let t = tables();
        let b = bill("M1", "D", &["HSWM", "HSAG"], &[2]);
        let f = build_features(
            &b,
            &t,
            &History::default(),
            SnapshotPolicy::Oldest,
            &FeatureConfig::default(),
        );
        assert_eq!(f.maj_on_com, Some(true));
        assert_eq!(f.not_maj_on_com, Some(false));
        assert_eq!(f.committee_position, Some(CommitteePosition::Code(1)));
        // (2*(111-105) + 2*(111-109)) / 2 years
        assert_eq!(f.committee_seniority, Some(8.0));
        assert_eq!(f.region, Some(Region::NorthCentral));
        let prop = f.sponsor_party_prop.unwrap();
        assert!((prop - 256.0 / 435.0).abs() < 1e-12);
    }

    #[test]
    fn sponsor_not_on_assigned_committee_gets_zero_seniority() {
        let t = tables();
        let b = bill("M2", "R", &["HSWM"], &[2]);
        let f = build_features(
            &b,
            &t,
            &History::default(),
            SnapshotPolicy::Oldest,
            &FeatureConfig::default(),
        );
        assert_eq!(f.committee_seniority, Some(0.0));
        assert_eq!(f.committee_position, Some(CommitteePosition::None));
        assert_eq!(f.maj_on_com, Some(false));
        assert_eq!(f.not_maj_on_com, Some(false));
    }

    #[test]
    fn sponsor_absent_from_tables_marks_committee_fields_missing() {
        let t = tables();
        let b = bill("M9", "R", &["HSWM"], &[2]);
        let f = build_features(
            &b,
            &t,
            &History::default(),
            SnapshotPolicy::Oldest,
            &FeatureConfig::default(),
        );
        assert_eq!(f.committee_seniority, None);
        assert_eq!(f.committee_position, None);
        assert_eq!(f.maj_on_com, None);
        assert_eq!(f.not_maj_on_com, None);
        assert!(f.sponsor_party_prop.is_some());
    }

    #[test]
    fn policy_changes_only_snapshot_fields() {
        let t = tables();
        let b = bill("M1", "D", &["HSWM"], &[2, 6]);
        let cfg = FeatureConfig::default();
        let old = build_features(&b, &t, &History::default(), SnapshotPolicy::Oldest, &cfg);
        let new = build_features(&b, &t, &History::default(), SnapshotPolicy::Newest, &cfg);
        assert_eq!(old.num_cosponsors, 2);
        assert_eq!(new.num_cosponsors, 6);
        assert_eq!(old.session, Session::First);
        assert_eq!(new.session, Session::Second);
        assert_ne!(old.text_length, new.text_length);
        let strip = |f: &ContextFeatures| ContextFeatures {
            num_cosponsors: 0,
            session: Session::First,
            text_length: 0,
            ..f.clone()
        };
        assert_eq!(strip(&old), strip(&new));
    }

    #[test]
    fn sponsor_terms_ignore_the_predicted_congress() {
        let t = tables();
        let mut history = History::default();
        for c in [107, 109, 110] {
            history.record("M1", c);
        }
        let b = bill("M1", "D", &["HSWM"], &[2]);
        let cfg = FeatureConfig::default();
        let before = build_features(&b, &t, &history, SnapshotPolicy::Oldest, &cfg);
        assert_eq!(before.sponsor_terms, 4);
        history.record("M1", 111);
        let after = build_features(&b, &t, &history, SnapshotPolicy::Oldest, &cfg);
        assert_eq!(before, after);
    }
}
