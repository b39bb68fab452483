//! Synthetic legislative corpora with planted text and context signal.
//!
//! Outcomes are allocated exactly (`round(rate * n)` enactments per chamber and
//! congress), then every observable is drawn conditional on a signal label:
//! the true outcome, or for bills in the optional hard subject an independent
//! decoy label, which makes those bills unpredictable. Enacted-signal bills
//! draw topic words from the enacted core vocabulary, are more often sponsored
//! by the majority party and from the first listed committee, and collect
//! more cosponsors.

use chrono::{Duration, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson};
use serde_json::{json, Map, Value};

use super::{congress_start_year, session_for_date, BillRecord, Chamber, Outcome, TextSnapshot};
use crate::features::{CommitteeMembership, CompositionRow, MembershipRow};
use crate::util::{derive_seed, rng_from_seed, Rng};
use crate::{Error, Result};

pub const DEFAULT_SUBJECTS: &[&str] = &[
    "Social Sciences and History",
    "Taxation",
    "Health",
    "Armed Forces and National Security",
    "Foreign Trade and International Finance",
    "Government Operations and Politics",
    "Crime and Law Enforcement",
    "Environmental Protection",
    "Education",
    "Transportation and Public Works",
    "Commemorations",
    "Arts, Culture, Religion",
];

const FILLER: &[&str] = &[
    "the",
    "of",
    "and",
    "to",
    "in",
    "a",
    "for",
    "shall",
    "be",
    "by",
    "such",
    "section",
    "act",
    "secretary",
    "or",
    "under",
    "as",
    "any",
    "this",
    "with",
    "that",
    "is",
    "on",
    "subsection",
    "amended",
    "paragraph",
    "state",
    "united",
    "states",
    "federal",
    "program",
    "year",
    "fiscal",
    "provide",
    "may",
    "not",
    "which",
    "other",
    "including",
    "funds",
    "authorized",
    "appropriated",
    "there",
    "are",
    "each",
    "date",
    "enactment",
    "agency",
    "public",
    "law",
    "described",
    "striking",
    "inserting",
    "following",
    "purposes",
    "term",
    "means",
    "general",
    "administrator",
    "report",
    "congress",
    "committee",
    "effective",
    "title",
    "period",
    "amount",
    "applicable",
    "provision",
    "respect",
    "service",
    "national",
    "grant",
    "individual",
    "person",
    "eligible",
    "assistance",
    "carry",
    "out",
    "established",
    "requirements",
    "department",
    "office",
    "activities",
    "through",
    "made",
    "after",
    "before",
    "subparagraph",
    "clause",
    "new",
    "end",
    "adding",
];

const STATES: &[&str] = &[
    "CT", "MA", "NY", "PA", "NJ", "ME", "IL", "OH", "MI", "WI", "MN", "IA", "MO", "TX", "FL", "GA", "VA", "NC", "TN",
    "AL", "CA", "WA", "OR", "AZ", "CO", "NV", "UT", "PR", "DC",
];

const HOUSE_COMMITTEES: &[&str] = &[
    "HSAG", "HSAP", "HSAS", "HSBA", "HSED", "HSIF", "HSJU", "HSWM", "HSHM", "HSPW",
];
const SENATE_COMMITTEES: &[&str] = &["SSAF", "SSAP", "SSAS", "SSBK", "SSCM", "SSEG", "SSFI", "SSJU"];

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ne", "ru", "sa", "te", "vo", "zi", "pa", "do", "fe", "gu", "ha", "jo", "bi",
];

/// Generator parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub congress_start: u32,
    pub congress_end: u32,
    pub bills_per_congress: usize,
    /// Fraction of bills introduced in the House.
    pub house_share: f64,
    pub house_rate: f64,
    pub senate_rate: f64,
    /// Words per topic core.
    pub topic_size: usize,
    /// Fraction of each topic core shared between the enacted and failed cores.
    pub overlap: f64,
    /// Probability a body token is a topic word.
    pub topic_rate: f64,
    /// Probability a topic token comes from the other class's core.
    pub cross_rate: f64,
    pub title_topic_rate: f64,
    pub sentences_mean: f64,
    pub min_words: usize,
    pub max_words: usize,
    pub majority_enacted: f64,
    pub majority_failed: f64,
    pub on_committee_enacted: f64,
    pub on_committee_failed: f64,
    pub cosponsors_enacted: f64,
    pub cosponsors_failed: f64,
    pub amend_enacted: f64,
    pub amend_failed: f64,
    /// Fraction of bills whose sponsor is absent from the committee tables.
    pub missing_sponsor_fraction: f64,
    /// Subject whose observables carry no information about the outcome.
    pub hard_subject: Option<String>,
    pub house_members: usize,
    pub senate_members: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            congress_start: 103,
            congress_end: 109,
            bills_per_congress: 2000,
            house_share: 0.6,
            house_rate: 0.05,
            senate_rate: 0.05,
            topic_size: 40,
            overlap: 0.3,
            topic_rate: 0.3,
            cross_rate: 0.15,
            title_topic_rate: 0.2,
            sentences_mean: 10.0,
            min_words: 8,
            max_words: 16,
            majority_enacted: 0.8,
            majority_failed: 0.45,
            on_committee_enacted: 0.7,
            on_committee_failed: 0.35,
            cosponsors_enacted: 10.0,
            cosponsors_failed: 4.0,
            amend_enacted: 0.6,
            amend_failed: 0.1,
            missing_sponsor_fraction: 0.0,
            hard_subject: None,
            house_members: 220,
            senate_members: 100,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [("house_rate", self.house_rate), ("senate_rate", self.senate_rate)] {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0,1), got {rate}")));
            }
        }
        let unit = [
            ("house_share", self.house_share),
            ("overlap", self.overlap),
            ("topic_rate", self.topic_rate),
            ("cross_rate", self.cross_rate),
            ("title_topic_rate", self.title_topic_rate),
            ("majority_enacted", self.majority_enacted),
            ("majority_failed", self.majority_failed),
            ("on_committee_enacted", self.on_committee_enacted),
            ("on_committee_failed", self.on_committee_failed),
            ("amend_enacted", self.amend_enacted),
            ("amend_failed", self.amend_failed),
            ("missing_sponsor_fraction", self.missing_sponsor_fraction),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if self.congress_start < super::FIRST_CONGRESS || self.congress_end < self.congress_start {
            return Err(Error::Config("invalid congress range".into()));
        }
        if self.topic_size == 0 || self.min_words == 0 || self.max_words < self.min_words {
            return Err(Error::Config("invalid vocabulary or sentence sizes".into()));
        }
        if self.house_members < 4 || self.senate_members < 4 {
            return Err(Error::Config("chambers need at least 4 members".into()));
        }
        if self.sentences_mean < 2.0 || self.cosponsors_enacted < 0.0 || self.cosponsors_failed < 0.0 {
            return Err(Error::Config("invalid sentence or cosponsor means".into()));
        }
        Ok(())
    }

    /// The enacted and failed topic cores; they share `round(overlap * topic_size)` words.
    pub fn topic_cores(&self) -> (Vec<String>, Vec<String>) {
        let t = self.topic_size;
        let shared = (self.overlap * t as f64).round() as usize;
        let enacted = (0..t).map(pseudo_word).collect();
        let failed = (t - shared..2 * t - shared).map(pseudo_word).collect();
        (enacted, failed)
    }
}

fn pseudo_word(i: usize) -> String {
    let n = SYLLABLES.len();
    format!(
        "{}{}{}",
        SYLLABLES[(i / (n * n)) % n],
        SYLLABLES[(i / n) % n],
        SYLLABLES[i % n]
    )
}

#[derive(Clone, Debug, Default)]
pub struct SyntheticCorpus {
    pub bills: Vec<BillRecord>,
    pub membership: Vec<MembershipRow>,
    pub composition: Vec<CompositionRow>,
}

impl SyntheticCorpus {
    pub fn committees(&self) -> CommitteeMembership {
        CommitteeMembership::new(self.membership.clone(), self.composition.clone())
    }
}

#[derive(Clone, Debug)]
struct Seat {
    member_id: String,
    party: &'static str,
    state: &'static str,
    committees: Vec<(&'static str, u32)>,
}

struct ChamberRoster {
    seats: Vec<Seat>,
    majority: &'static str,
}

/// Generates a corpus; identical seeds and specs give identical corpora.
pub fn generate_synthetic_corpus(seed: u64, spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut roster_rng = rng_from_seed(derive_seed(seed, "synth/roster"));
    let mut corpus = SyntheticCorpus::default();
    let (enacted_core, failed_core) = spec.topic_cores();
    let mut next_member = 0usize;
    let mut prev: Vec<Option<ChamberRoster>> = vec![None, None];

    for congress in spec.congress_start..=spec.congress_end {
        for (ci, chamber) in Chamber::ALL.into_iter().enumerate() {
            let roster = next_roster(
                &mut roster_rng,
                chamber,
                congress,
                prev[ci].take(),
                spec,
                &mut next_member,
            );
            emit_tables(&mut roster_rng, chamber, congress, &roster, &mut corpus);

            let mut bill_rng = rng_from_seed(derive_seed(
                seed,
                &format!("synth/bills/{congress}/{}", chamber.as_str()),
            ));
            let share = match chamber {
                Chamber::House => spec.house_share,
                Chamber::Senate => 1.0 - spec.house_share,
            };
            let n = (spec.bills_per_congress as f64 * share).round() as usize;
            let rate = match chamber {
                Chamber::House => spec.house_rate,
                Chamber::Senate => spec.senate_rate,
            };
            let k = (rate * n as f64).round() as usize;
            let mut outcomes: Vec<Outcome> = (0..n)
                .map(|i| if i < k { Outcome::Enacted } else { Outcome::Failed })
                .collect();
            outcomes.shuffle(&mut bill_rng);
            let generator = BillGenerator {
                spec,
                chamber,
                congress,
                roster: &roster,
                enacted_core: &enacted_core,
                failed_core: &failed_core,
            };
            for (i, outcome) in outcomes.into_iter().enumerate() {
                corpus.bills.push(generator.bill(&mut bill_rng, i + 1, outcome, rate));
            }
            prev[ci] = Some(roster);
        }
    }
    Ok(corpus)
}

fn next_roster(
    rng: &mut Rng,
    chamber: Chamber,
    congress: u32,
    prev: Option<ChamberRoster>,
    spec: &SyntheticSpec,
    next_member: &mut usize,
) -> ChamberRoster {
    let size = match chamber {
        Chamber::House => spec.house_members,
        Chamber::Senate => spec.senate_members,
    };
    let committees = match chamber {
        Chamber::House => HOUSE_COMMITTEES,
        Chamber::Senate => SENATE_COMMITTEES,
    };
    let majority = match &prev {
        Some(p) if rng.random::<f64>() >= 0.25 => p.majority,
        Some(p) => other_party(p.majority),
        None => {
            if rng.random::<bool>() {
                "R"
            } else {
                "D"
            }
        }
    };
    let share = rng.random_range(0.51..0.59);
    let maj_count = ((share * size as f64).round() as usize).clamp(1, size - 1);
    let prefix = match chamber {
        Chamber::House => "H",
        Chamber::Senate => "S",
    };
    let mut seats = Vec::with_capacity(size);
    for s in 0..size {
        let party = if s < maj_count { majority } else { other_party(majority) };
        let kept = prev
            .as_ref()
            .and_then(|p| p.seats.get(s))
            .filter(|old| old.party == party && rng.random::<f64>() < 0.88)
            .cloned();
        let seat = match kept {
            Some(old) => old,
            None => {
                *next_member += 1;
                let first = if prev.is_none() {
                    congress - rng.random_range(0..6u32)
                } else {
                    congress
                };
                let mut picked: Vec<&'static str> = committees.choose_multiple(rng, 2).copied().collect();
                picked.sort_unstable();
                Seat {
                    member_id: format!("{prefix}{:05}", *next_member),
                    party,
                    state: STATES.choose(rng).copied().unwrap(),
                    committees: picked.into_iter().map(|c| (c, first)).collect(),
                }
            }
        };
        seats.push(seat);
    }
    ChamberRoster { seats, majority }
}

fn other_party(p: &str) -> &'static str {
    if p == "R" {
        "D"
    } else {
        "R"
    }
}

fn emit_tables(rng: &mut Rng, chamber: Chamber, congress: u32, roster: &ChamberRoster, out: &mut SyntheticCorpus) {
    let mut seats_by_party: Vec<(&str, u32)> = vec![("D", 0), ("R", 0)];
    for seat in &roster.seats {
        if let Some(e) = seats_by_party.iter_mut().find(|(p, _)| *p == seat.party) {
            e.1 += 1;
        }
    }
    for (party, seats) in seats_by_party {
        out.composition.push(CompositionRow {
            congress,
            chamber,
            party: party.to_string(),
            seats,
        });
    }

    let committees = match chamber {
        Chamber::House => HOUSE_COMMITTEES,
        Chamber::Senate => SENATE_COMMITTEES,
    };
    for &committee in committees {
        let mut members: Vec<(&Seat, u32)> = roster
            .seats
            .iter()
            .filter_map(|s| {
                s.committees
                    .iter()
                    .find(|(c, _)| *c == committee)
                    .map(|&(_, start)| (s, start))
            })
            .collect();
        members.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.member_id.cmp(&b.0.member_id)));
        let mut codes: Vec<Option<u32>> = vec![None; members.len()];
        if let Some(i) = members.iter().position(|(s, _)| s.party == roster.majority) {
            codes[i] = Some(1);
        }
        if let Some(i) = members.iter().position(|(s, _)| s.party != roster.majority) {
            codes[i] = Some(2);
        }
        let mut free: Vec<usize> = (0..members.len()).filter(|&i| codes[i].is_none()).collect();
        free.shuffle(rng);
        for (code, &i) in (3..=11u32).zip(free.iter()) {
            codes[i] = Some(code);
        }
        for ((seat, start), code) in members.iter().zip(codes) {
            out.membership.push(MembershipRow {
                congress,
                committee_id: committee.to_string(),
                member_id: seat.member_id.clone(),
                leadership_code: code,
                start_congress: *start,
            });
        }
    }
}

struct BillGenerator<'a> {
    spec: &'a SyntheticSpec,
    chamber: Chamber,
    congress: u32,
    roster: &'a ChamberRoster,
    enacted_core: &'a [String],
    failed_core: &'a [String],
}

impl BillGenerator<'_> {
    fn bill(&self, rng: &mut Rng, number: usize, outcome: Outcome, rate: f64) -> BillRecord {
        let spec = self.spec;
        let subject = DEFAULT_SUBJECTS.choose(rng).copied().unwrap();
        let signal = if spec.hard_subject.as_deref() == Some(subject) {
            if rng.random::<f64>() < rate {
                Outcome::Enacted
            } else {
                Outcome::Failed
            }
        } else {
            outcome
        };
        let enacted = signal.is_enacted();
        let pick = |a: f64, b: f64| if enacted { a } else { b };

        let want_majority = rng.random::<f64>() < pick(spec.majority_enacted, spec.majority_failed);
        let party = if want_majority {
            self.roster.majority
        } else {
            other_party(self.roster.majority)
        };
        let candidates: Vec<&Seat> = self.roster.seats.iter().filter(|s| s.party == party).collect();
        let sponsor = *candidates.choose(rng).unwrap();
        let sponsor_id = if rng.random::<f64>() < spec.missing_sponsor_fraction {
            format!("X{}{:05}", self.congress, number)
        } else {
            sponsor.member_id.clone()
        };

        let all_committees = match self.chamber {
            Chamber::House => HOUSE_COMMITTEES,
            Chamber::Senate => SENATE_COMMITTEES,
        };
        let first = if rng.random::<f64>() < pick(spec.on_committee_enacted, spec.on_committee_failed) {
            sponsor.committees.choose(rng).unwrap().0
        } else {
            all_committees.choose(rng).copied().unwrap()
        };
        let mut committees = vec![first];
        if rng.random::<f64>() < 0.3 {
            let second = all_committees.choose(rng).copied().unwrap();
            if second != first {
                committees.push(second);
            }
        }

        let noise: Normal<f64> = Normal::new(0.0, 0.5).unwrap();
        let mean = pick(spec.cosponsors_enacted, spec.cosponsors_failed) * noise.sample(rng).exp();
        let cosponsors = poisson(rng, mean);

        let start_year = congress_start_year(self.congress);
        let second_session = rng.random::<f64>() >= 0.64;
        let year = start_year + i32::from(second_session);
        let month = rng.random_range(1..=12u32);
        let day = rng.random_range(1..=28u32);
        let introduced = NaiveDate::from_ymd_opt(year, month, day).unwrap();

        let n_sentences = 3 + poisson(rng, spec.sentences_mean - 3.0) as usize;
        let mut sentences = vec!["Sec. 1. Short title.".to_string()];
        for _ in 1..n_sentences.max(2) {
            sentences.push(self.sentence(rng, enacted, spec.topic_rate));
        }
        let title = self.title(rng, enacted);
        let mut snapshots = vec![TextSnapshot::new(
            introduced,
            render_html(&sentences),
            session_for_date(self.congress, introduced).unwrap(),
            cosponsors,
        )];

        if rng.random::<f64>() < pick(spec.amend_enacted, spec.amend_failed) {
            let last_day = NaiveDate::from_ymd_opt(start_year + 1, 12, 31).unwrap();
            let later = (introduced + Duration::days(rng.random_range(30..300))).min(last_day);
            let extra = rng.random_range(2..=6);
            for _ in 0..extra {
                sentences.push(self.sentence(rng, enacted, spec.topic_rate));
            }
            let added = poisson(rng, pick(3.0, 1.0));
            snapshots.push(TextSnapshot::new(
                later,
                render_html(&sentences),
                session_for_date(self.congress, later).unwrap(),
                cosponsors + added,
            ));
        }

        let (bill_type, id_prefix) = match self.chamber {
            Chamber::House => ("hr", "hr"),
            Chamber::Senate => ("s", "s"),
        };
        let mut metadata = Map::new();
        metadata.insert("sponsor_party".into(), Value::from(sponsor.party));
        metadata.insert("sponsor_state".into(), Value::from(sponsor.state));
        metadata.insert("committees".into(), json!(committees));
        metadata.insert(
            "introduced_date".into(),
            Value::from(introduced.format("%Y-%m-%d").to_string()),
        );

        BillRecord {
            bill_id: format!("{id_prefix}{number}-{}", self.congress),
            congress: self.congress,
            chamber: self.chamber,
            bill_type: bill_type.to_string(),
            outcome,
            title,
            snapshots,
            sponsor_id,
            subjects_top_term: subject.to_string(),
            introduced_month: month,
            metadata,
        }
    }

    fn word(&self, rng: &mut Rng, enacted: bool, topic_rate: f64) -> String {
        if rng.random::<f64>() < topic_rate {
            let own_core = rng.random::<f64>() >= self.spec.cross_rate;
            let core = if own_core == enacted {
                self.enacted_core
            } else {
                self.failed_core
            };
            core.choose(rng).unwrap().clone()
        } else {
            zipf_filler(rng).to_string()
        }
    }

    fn sentence(&self, rng: &mut Rng, enacted: bool, topic_rate: f64) -> String {
        let n = rng.random_range(self.spec.min_words..=self.spec.max_words);
        let words: Vec<String> = (0..n).map(|_| self.word(rng, enacted, topic_rate)).collect();
        let mut s = capitalize(&words.join(" "));
        s.push('.');
        s
    }

    fn title(&self, rng: &mut Rng, enacted: bool) -> String {
        let n = rng.random_range(5..=9);
        let words: Vec<String> = (0..n)
            .map(|_| self.word(rng, enacted, self.spec.title_topic_rate))
            .collect();
        format!("To {}.", words.join(" "))
    }
}

fn zipf_filler(rng: &mut Rng) -> &'static str {
    // inverse-CDF sampling of weights 1/(rank+1)
    let total: f64 = (1..=FILLER.len()).map(|r| 1.0 / r as f64).sum();
    let mut u = rng.random::<f64>() * total;
    for (r, w) in FILLER.iter().enumerate() {
        u -= 1.0 / (r + 1) as f64;
        if u <= 0.0 {
            return w;
        }
    }
    FILLER[FILLER.len() - 1]
}

fn poisson(rng: &mut Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).unwrap().sample(rng) as u32
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn render_html(sentences: &[String]) -> String {
    let mut out = String::from("<html><body>\r\n");
    for s in sentences {
        out.push_str("<p>");
        out.push_str(s);
        out.push_str("</p>\r\n");
    }
    out.push_str("</body></html>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            congress_start: 103,
            congress_end: 104,
            bills_per_congress: 200,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate_synthetic_corpus(11, &small()).unwrap();
        let b = generate_synthetic_corpus(11, &small()).unwrap();
        assert_eq!(a.bills, b.bills);
        assert_eq!(a.membership, b.membership);
        let c = generate_synthetic_corpus(12, &small()).unwrap();
        assert_ne!(a.bills, c.bills);
    }

    #[test]
    fn realized_senate_rate_is_concentrated() {
        let spec = SyntheticSpec {
            congress_start: 103,
            congress_end: 103,
            bills_per_congress: 10_000,
            house_share: 0.0,
            senate_rate: 0.04,
            sentences_mean: 3.0,
            ..SyntheticSpec::default()
        };
        let corpus = generate_synthetic_corpus(3, &spec).unwrap();
        let senate: Vec<_> = corpus.bills.iter().filter(|b| b.chamber == Chamber::Senate).collect();
        assert_eq!(senate.len(), 10_000);
        let rate = senate.iter().filter(|b| b.outcome.is_enacted()).count() as f64 / senate.len() as f64;
        assert!((0.03..=0.05).contains(&rate), "rate {rate}");
    }

    #[test]
    fn rates_outside_unit_interval_are_rejected() {
        for bad in [0.0, 1.0, -0.1, 1.5] {
            let spec = SyntheticSpec {
                house_rate: bad,
                ..small()
            };
            assert!(generate_synthetic_corpus(1, &spec).is_err());
        }
    }

    #[test]
    fn enacted_bills_oversample_enacted_topic_words() {
        let corpus = generate_synthetic_corpus(5, &small()).unwrap();
        let (enacted_core, failed_core) = small().topic_cores();
        let only_enacted: Vec<&String> = enacted_core.iter().filter(|w| !failed_core.contains(w)).collect();
        let share = |outcome: Outcome| {
            let mut hits = 0usize;
            let mut total = 0usize;
            for b in corpus.bills.iter().filter(|b| b.outcome == outcome) {
                for tok in crate::corpus::tokenize(&crate::corpus::normalize_text(&b.snapshots[0].raw_text)) {
                    total += 1;
                    if only_enacted.iter().any(|w| **w == tok) {
                        hits += 1;
                    }
                }
            }
            hits as f64 / total as f64
        };
        assert!(share(Outcome::Enacted) > 3.0 * share(Outcome::Failed));
    }

    #[test]
    fn overlap_controls_shared_core() {
        let spec = SyntheticSpec {
            overlap: 1.0,
            ..small()
        };
        let (e, f) = spec.topic_cores();
        assert_eq!(e, f);
        let spec = SyntheticSpec {
            overlap: 0.3,
            topic_size: 40,
            ..small()
        };
        let (e, f) = spec.topic_cores();
        assert_eq!(e.iter().filter(|w| f.contains(w)).count(), 12);
    }

    #[test]
    fn generated_bills_satisfy_record_invariants() {
        let corpus = generate_synthetic_corpus(9, &small()).unwrap();
        for b in &corpus.bills {
            assert!(b.congress >= 103);
            assert!(!b.snapshots.is_empty());
            assert!(b.snapshots.windows(2).all(|w| w[0].date <= w[1].date));
            for s in &b.snapshots {
                assert_eq!(session_for_date(b.congress, s.date), Some(s.session));
                assert!(s.text_length_chars > 0);
            }
        }
    }
}
