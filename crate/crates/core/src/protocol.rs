//! Protocol rounds, public discussion, sifting and session statistics.
//!
//! A round draws Alice's and Bob's polarizations (and Eve's analyzer setting
//! when her strategy needs one), samples a leaf of the collapse tree, and then
//! applies the announcement rules:
//!
//! 1. which detectors clicked is always public;
//! 2. a D2 or D3 click also discloses the detected and both initial
//!    polarizations;
//! 3. a lone D1 click with the expected polarization is kept and nothing else
//!    is said;
//! 4. a lone D1 click with the wrong polarization is fully disclosed and
//!    discarded.
//!
//! Sessions are split into shards of consecutive rounds. Each round draws
//! from its own counter-derived stream, so any sharding gives the same report.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::adversary::{self, EveRoundView, EveStrategy};
use crate::error::{Error, Result};
use crate::qcore::{enumerate_round, sample_branch, Branch, Detector, InterferometerConfig, Outcome, Polarization};
use crate::rng;

const SHARD_ROUNDS: u64 = 8192;

/// Optional restriction on the polarization pair of each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    #[default]
    Any,
    /// Bob's choice is forced equal to Alice's (path b blocked).
    Equal,
    /// Bob's choice is forced orthogonal to Alice's (interference intact).
    Unequal,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Any => "any",
            Condition::Equal => "equal",
            Condition::Unequal => "unequal",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "any" => Ok(Condition::Any),
            "equal" => Ok(Condition::Equal),
            "unequal" => Ok(Condition::Unequal),
            other => Err(Error::config(format!(
                "unknown condition '{other}' (expected any, equal or unequal)"
            ))),
        }
    }
}

/// Random choices of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundChoices {
    pub alice_pol: Polarization,
    pub bob_pol: Polarization,
    pub eve_pol: Option<Polarization>,
}

impl RoundChoices {
    pub fn draw<R: Rng + ?Sized>(strategy: EveStrategy, condition: Condition, rng: &mut R) -> Self {
        let alice_pol = Polarization::from_bit(rng.gen::<bool>() as u8);
        let bob_draw = Polarization::from_bit(rng.gen::<bool>() as u8);
        let bob_pol = match condition {
            Condition::Any => bob_draw,
            Condition::Equal => alice_pol,
            Condition::Unequal => alice_pol.flip(),
        };
        let eve_pol = strategy
            .requires_eve_pol()
            .then(|| Polarization::from_bit(rng.gen::<bool>() as u8));
        Self {
            alice_pol,
            bob_pol,
            eve_pol,
        }
    }
}

/// Set of detectors that clicked in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(from = "Vec<Detector>")]
pub struct ClickSet(u8);

impl ClickSet {
    fn mask(d: Detector) -> u8 {
        match d {
            Detector::D1 => 1,
            Detector::D2 => 2,
            Detector::D3 => 4,
        }
    }

    pub fn insert(&mut self, d: Detector) {
        self.0 |= Self::mask(d);
    }

    pub fn contains(&self, d: Detector) -> bool {
        self.0 & Self::mask(d) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = Detector> + '_ {
        [Detector::D1, Detector::D2, Detector::D3]
            .into_iter()
            .filter(|d| self.contains(*d))
    }
}

impl From<Vec<Detector>> for ClickSet {
    fn from(v: Vec<Detector>) -> Self {
        let mut set = ClickSet::default();
        for d in v {
            set.insert(d);
        }
        set
    }
}

impl Serialize for ClickSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for d in self.iter() {
            seq.serialize_element(&d)?;
        }
        seq.end()
    }
}

/// What Alice and Bob say over the public channel after a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub detectors_clicked: ClickSet,
    pub disclosed_detected_pol: Option<Polarization>,
    /// `(alice_pol, bob_pol)`.
    pub disclosed_initial_pols: Option<(Polarization, Polarization)>,
    pub keep_flag: bool,
}

impl Announcement {
    /// True when the announcement reveals any polarization value.
    pub fn leaks_polarization(&self) -> bool {
        self.disclosed_detected_pol.is_some() || self.disclosed_initial_pols.is_some()
    }
}

pub fn make_announcement(alice_pol: Polarization, bob_pol: Polarization, outcome: Outcome) -> Announcement {
    let mut clicked = ClickSet::default();
    if let Some(d) = outcome.detector() {
        clicked.insert(d);
    }
    let disclose = |pol| Announcement {
        detectors_clicked: clicked,
        disclosed_detected_pol: Some(pol),
        disclosed_initial_pols: Some((alice_pol, bob_pol)),
        keep_flag: false,
    };
    match outcome {
        Outcome::D2(p) | Outcome::D3(p) => disclose(p),
        Outcome::D1(p) if p == alice_pol => Announcement {
            detectors_clicked: clicked,
            disclosed_detected_pol: None,
            disclosed_initial_pols: None,
            keep_flag: true,
        },
        Outcome::D1(p) => disclose(p),
        Outcome::Loss => Announcement {
            detectors_clicked: clicked,
            disclosed_detected_pol: None,
            disclosed_initial_pols: None,
            keep_flag: false,
        },
    }
}

/// Full record of one protocol round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    pub strategy: EveStrategy,
    pub alice_bit: u8,
    pub alice_pol: Polarization,
    pub bob_bit: u8,
    pub bob_pol: Polarization,
    pub eve_pol: Option<Polarization>,
    pub branch: Branch,
    pub announcement: Announcement,
    pub sifted: bool,
    /// Defined only for sifted rounds.
    pub error_bit: Option<bool>,
    /// Sifted and the photon never entered path b.
    pub counterfactual: bool,
}

impl RoundRecord {
    pub fn pols_equal(&self) -> bool {
        self.alice_pol == self.bob_pol
    }

    pub fn eve_view(&self) -> EveRoundView {
        EveRoundView::from_branch(self.strategy, self.eve_pol, &self.branch)
    }

    /// D3 fired although it should not have, or with the wrong polarization.
    pub fn is_d3_anomaly(&self) -> bool {
        matches!(self.branch.outcome, Outcome::D3(p) if !self.pols_equal() || p != self.alice_pol)
    }

    pub fn is_d2_pol_anomaly(&self) -> bool {
        matches!(self.branch.outcome, Outcome::D2(p) if p != self.alice_pol)
    }

    pub fn is_d1_pol_anomaly(&self) -> bool {
        matches!(self.branch.outcome, Outcome::D1(p) if p != self.alice_pol)
    }
}

/// Runs one round with freely drawn choices.
pub fn run_round<R: Rng + ?Sized>(
    cfg: &InterferometerConfig,
    strategy: EveStrategy,
    rng: &mut R,
) -> Result<RoundRecord> {
    let choices = RoundChoices::draw(strategy, Condition::Any, rng);
    run_round_with(cfg, strategy, choices, rng)
}

/// Runs one round with the given choices; only the branch is sampled.
pub fn run_round_with<R: Rng + ?Sized>(
    cfg: &InterferometerConfig,
    strategy: EveStrategy,
    choices: RoundChoices,
    rng: &mut R,
) -> Result<RoundRecord> {
    let tree = enumerate_round(cfg, choices.alice_pol, choices.bob_pol, strategy, choices.eve_pol)?;
    let branch = sample_branch(&tree, rng)?;
    Ok(record_from_branch(strategy, choices, branch))
}

/// Applies announcement and sifting rules to a resolved branch.
pub fn record_from_branch(strategy: EveStrategy, choices: RoundChoices, branch: Branch) -> RoundRecord {
    let announcement = make_announcement(choices.alice_pol, choices.bob_pol, branch.outcome);
    let sifted = announcement.keep_flag;
    let alice_bit = choices.alice_pol.bit();
    let bob_bit = choices.bob_pol.bit();
    RoundRecord {
        index: 0,
        strategy,
        alice_bit,
        alice_pol: choices.alice_pol,
        bob_bit,
        bob_pol: choices.bob_pol,
        eve_pol: choices.eve_pol,
        branch,
        announcement,
        sifted,
        error_bit: sifted.then_some(alice_bit != bob_bit),
        counterfactual: sifted && !branch.photon_entered_b,
    }
}

/// Aligned sifted keys.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKey {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
    /// Positions in the record list that were kept.
    pub kept: Vec<usize>,
}

pub fn sift(records: &[RoundRecord]) -> SiftedKey {
    let mut key = SiftedKey::default();
    for (i, r) in records.iter().enumerate().filter(|(_, r)| r.sifted) {
        key.alice.push(r.alice_bit);
        key.bob.push(r.bob_bit);
        key.kept.push(i);
    }
    key
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    /// Mismatch fraction over the sample; `None` for empty keys.
    pub qber: Option<f64>,
    pub sampled: usize,
    pub alice_remaining: Vec<u8>,
    pub bob_remaining: Vec<u8>,
}

/// Sacrifices a uniformly chosen fraction of positions to estimate the QBER.
///
/// `ceil(fraction · n)` positions are sampled without replacement, compared,
/// and removed from both keys.
pub fn estimate_error_rate<R: Rng + ?Sized>(
    alice: &[u8],
    bob: &[u8],
    fraction: f64,
    rng: &mut R,
) -> Result<ErrorEstimate> {
    if alice.len() != bob.len() {
        return Err(Error::config(format!(
            "key length mismatch: {} vs {}",
            alice.len(),
            bob.len()
        )));
    }
    validate_fraction(fraction)?;
    let n = alice.len();
    if n == 0 {
        return Ok(ErrorEstimate {
            qber: None,
            sampled: 0,
            alice_remaining: Vec::new(),
            bob_remaining: Vec::new(),
        });
    }
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut picked = vec![false; n];
    for i in index::sample(rng, n, k) {
        picked[i] = true;
    }
    let mut mismatches = 0usize;
    let mut alice_remaining = Vec::with_capacity(n - k);
    let mut bob_remaining = Vec::with_capacity(n - k);
    for i in 0..n {
        if picked[i] {
            mismatches += (alice[i] != bob[i]) as usize;
        } else {
            alice_remaining.push(alice[i]);
            bob_remaining.push(bob[i]);
        }
    }
    Ok(ErrorEstimate {
        qber: Some(mismatches as f64 / k as f64),
        sampled: k,
        alice_remaining,
        bob_remaining,
    })
}

fn validate_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::config(format!(
            "error-estimation fraction must lie in (0, 1], got {fraction}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub interferometer: InterferometerConfig,
    pub strategy: EveStrategy,
    pub rounds: u64,
    pub seed: u64,
    pub condition: Condition,
    pub estimation_fraction: f64,
}

impl SessionConfig {
    /// Unconditioned session with a 10% error-estimation sample.
    pub fn new(interferometer: InterferometerConfig, strategy: EveStrategy, rounds: u64, seed: u64) -> Self {
        Self {
            interferometer,
            strategy,
            rounds,
            seed,
            condition: Condition::Any,
            estimation_fraction: 0.1,
        }
    }

    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }

    pub fn with_estimation_fraction(mut self, fraction: f64) -> Self {
        self.estimation_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("a session needs at least one round"));
        }
        validate_fraction(self.estimation_fraction)
    }
}

/// Runs round `index` of a session on its own substream.
pub fn session_round(cfg: &SessionConfig, index: u64) -> Result<RoundRecord> {
    let mut stream = rng::round_stream(cfg.seed, index);
    let choices = RoundChoices::draw(cfg.strategy, cfg.condition, &mut stream);
    let mut record = run_round_with(&cfg.interferometer, cfg.strategy, choices, &mut stream)?;
    record.index = index;
    Ok(record)
}

/// All rounds of a session, in index order.
pub fn simulate(cfg: &SessionConfig) -> Result<Vec<RoundRecord>> {
    cfg.validate()?;
    (0..cfg.rounds).into_par_iter().map(|i| session_round(cfg, i)).collect()
}

/// Additive counters over a set of rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SessionTally {
    pub rounds: u64,
    /// Indexed D1, D2, D3.
    pub clicks: [u64; 3],
    pub losses: u64,
    pub equal_rounds: u64,
    pub equal_clicks: [u64; 3],
    pub unequal_rounds: u64,
    pub unequal_clicks: [u64; 3],
    pub sifted: u64,
    pub errors: u64,
    pub d3_anomalies: u64,
    pub d2_pol_anomalies: u64,
    pub d1_pol_anomalies: u64,
    pub counterfactual_sifted: u64,
    pub eve_known_bits: u64,
    /// (success, clean), (success, error), (fail, clean), (fail, error).
    pub qci: [u64; 4],
    pub counterfactual_detections: u64,
}

fn detector_slot(d: Detector) -> usize {
    match d {
        Detector::D1 => 0,
        Detector::D2 => 1,
        Detector::D3 => 2,
    }
}

impl SessionTally {
    pub fn add(&mut self, r: &RoundRecord) {
        self.rounds += 1;
        let (cond_rounds, cond_clicks) = if r.pols_equal() {
            (&mut self.equal_rounds, &mut self.equal_clicks)
        } else {
            (&mut self.unequal_rounds, &mut self.unequal_clicks)
        };
        *cond_rounds += 1;
        match r.branch.outcome.detector() {
            Some(d) => {
                self.clicks[detector_slot(d)] += 1;
                cond_clicks[detector_slot(d)] += 1;
            }
            None => self.losses += 1,
        }
        let error = r.error_bit == Some(true);
        self.sifted += r.sifted as u64;
        self.errors += error as u64;
        self.d3_anomalies += r.is_d3_anomaly() as u64;
        self.d2_pol_anomalies += r.is_d2_pol_anomaly() as u64;
        self.d1_pol_anomalies += r.is_d1_pol_anomaly() as u64;
        self.counterfactual_sifted += r.counterfactual as u64;
        self.eve_known_bits += adversary::eve_knows_agreed_bit(r) as u64;
        let success = r.eve_view().qci_success;
        self.qci[(!success as usize) * 2 + error as usize] += 1;
        self.counterfactual_detections += adversary::is_counterfactual_detection(r) as u64;
    }

    pub fn from_records(records: &[RoundRecord]) -> Self {
        let mut t = Self::default();
        records.iter().for_each(|r| t.add(r));
        t
    }

    pub fn merge(mut self, other: &Self) -> Self {
        fn add3(a: &mut [u64; 3], b: &[u64; 3]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.rounds += other.rounds;
        add3(&mut self.clicks, &other.clicks);
        self.losses += other.losses;
        self.equal_rounds += other.equal_rounds;
        add3(&mut self.equal_clicks, &other.equal_clicks);
        self.unequal_rounds += other.unequal_rounds;
        add3(&mut self.unequal_clicks, &other.unequal_clicks);
        self.sifted += other.sifted;
        self.errors += other.errors;
        self.d3_anomalies += other.d3_anomalies;
        self.d2_pol_anomalies += other.d2_pol_anomalies;
        self.d1_pol_anomalies += other.d1_pol_anomalies;
        self.counterfactual_sifted += other.counterfactual_sifted;
        self.eve_known_bits += other.eve_known_bits;
        self.qci.iter_mut().zip(&other.qci).for_each(|(x, y)| *x += y);
        self.counterfactual_detections += other.counterfactual_detections;
        self
    }
}

/// Tally plus sifted keys for a contiguous block of rounds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Shard {
    pub tally: SessionTally,
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
}

impl Shard {
    /// Appends `next`, which must cover the rounds right after `self`.
    pub fn append(mut self, next: Shard) -> Shard {
        self.tally = self.tally.merge(&next.tally);
        self.alice_key.extend(next.alice_key);
        self.bob_key.extend(next.bob_key);
        self
    }
}

pub fn simulate_shard(cfg: &SessionConfig, range: Range<u64>) -> Result<Shard> {
    let mut shard = Shard::default();
    for i in range {
        let r = session_round(cfg, i)?;
        shard.tally.add(&r);
        if r.sifted {
            shard.alice_key.push(r.alice_bit);
            shard.bob_key.push(r.bob_bit);
        }
    }
    Ok(shard)
}

/// Session summary: configuration echo, raw counters and derived rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub strategy: EveStrategy,
    pub condition: Condition,
    pub reflectivity: f64,
    pub phase: f64,
    pub rounds: u64,
    pub seed: u64,
    pub clicks_d1: u64,
    pub clicks_d2: u64,
    pub clicks_d3: u64,
    pub losses: u64,
    pub equal_rounds: u64,
    pub equal_d1: u64,
    pub equal_d2: u64,
    pub equal_d3: u64,
    pub unequal_rounds: u64,
    pub unequal_d1: u64,
    pub unequal_d2: u64,
    pub unequal_d3: u64,
    pub sifted: u64,
    pub errors: u64,
    pub sift_rate: f64,
    pub qber: Option<f64>,
    pub d3_anomalies: u64,
    pub d2_pol_anomalies: u64,
    pub d1_pol_anomalies: u64,
    pub counterfactual_sifted: u64,
    pub counterfactual_fraction: f64,
    pub eve_known_bits: u64,
    pub eve_info_fraction: Option<f64>,
    pub qci_success_clean: u64,
    pub qci_success_error: u64,
    pub qci_fail_clean: u64,
    pub qci_fail_error: u64,
    pub counterfactual_detections: u64,
    pub estimation_fraction: f64,
    pub estimation_sample: u64,
    pub qber_estimate: Option<f64>,
    pub final_key_length: u64,
}

impl SessionReport {
    /// Names of all summary fields, in output order.
    pub const FIELDS: [&'static str; 38] = [
        "strategy",
        "condition",
        "reflectivity",
        "phase",
        "rounds",
        "seed",
        "clicks_d1",
        "clicks_d2",
        "clicks_d3",
        "losses",
        "equal_rounds",
        "equal_d1",
        "equal_d2",
        "equal_d3",
        "unequal_rounds",
        "unequal_d1",
        "unequal_d2",
        "unequal_d3",
        "sifted",
        "errors",
        "sift_rate",
        "qber",
        "d3_anomalies",
        "d2_pol_anomalies",
        "d1_pol_anomalies",
        "counterfactual_sifted",
        "counterfactual_fraction",
        "eve_known_bits",
        "eve_info_fraction",
        "qci_success_clean",
        "qci_success_error",
        "qci_fail_clean",
        "qci_fail_error",
        "counterfactual_detections",
        "estimation_fraction",
        "estimation_sample",
        "qber_estimate",
        "final_key_length",
    ];

    pub fn from_shard(cfg: &SessionConfig, shard: Shard) -> Result<Self> {
        let t = shard.tally;
        let detected: u64 = t.clicks.iter().sum();
        if detected + t.losses != t.rounds {
            return Err(Error::internal(format!(
                "detector counts {detected} + losses {} != rounds {}",
                t.losses, t.rounds
            )));
        }
        let mut stream = rng::estimation_stream(cfg.seed);
        let est = estimate_error_rate(&shard.alice_key, &shard.bob_key, cfg.estimation_fraction, &mut stream)?;
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        Ok(Self {
            strategy: cfg.strategy,
            condition: cfg.condition,
            reflectivity: cfg.interferometer.reflectivity(),
            phase: cfg.interferometer.phase,
            rounds: t.rounds,
            seed: cfg.seed,
            clicks_d1: t.clicks[0],
            clicks_d2: t.clicks[1],
            clicks_d3: t.clicks[2],
            losses: t.losses,
            equal_rounds: t.equal_rounds,
            equal_d1: t.equal_clicks[0],
            equal_d2: t.equal_clicks[1],
            equal_d3: t.equal_clicks[2],
            unequal_rounds: t.unequal_rounds,
            unequal_d1: t.unequal_clicks[0],
            unequal_d2: t.unequal_clicks[1],
            unequal_d3: t.unequal_clicks[2],
            sifted: t.sifted,
            errors: t.errors,
            sift_rate: ratio(t.sifted, t.rounds).unwrap_or(0.0),
            qber: ratio(t.errors, t.sifted),
            d3_anomalies: t.d3_anomalies,
            d2_pol_anomalies: t.d2_pol_anomalies,
            d1_pol_anomalies: t.d1_pol_anomalies,
            counterfactual_sifted: t.counterfactual_sifted,
            counterfactual_fraction: ratio(t.counterfactual_sifted, t.sifted).unwrap_or(0.0),
            eve_known_bits: t.eve_known_bits,
            eve_info_fraction: ratio(t.eve_known_bits, t.sifted),
            qci_success_clean: t.qci[0],
            qci_success_error: t.qci[1],
            qci_fail_clean: t.qci[2],
            qci_fail_error: t.qci[3],
            counterfactual_detections: t.counterfactual_detections,
            estimation_fraction: cfg.estimation_fraction,
            estimation_sample: est.sampled as u64,
            qber_estimate: est.qber,
            final_key_length: est.alice_remaining.len() as u64,
        })
    }

    pub fn from_records(cfg: &SessionConfig, records: &[RoundRecord]) -> Result<Self> {
        let key = sift(records);
        let shard = Shard {
            tally: SessionTally::from_records(records),
            alice_key: key.alice,
            bob_key: key.bob,
        };
        Self::from_shard(cfg, shard)
    }

    pub fn d3_anomaly_rate(&self) -> f64 {
        self.d3_anomalies as f64 / self.rounds as f64
    }
}

/// Runs a full session, sharding rounds across the rayon pool.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionReport> {
    cfg.validate()?;
    let n_shards = cfg.rounds.div_ceil(SHARD_ROUNDS);
    let shards: Vec<Shard> = (0..n_shards)
        .into_par_iter()
        .map(|s| simulate_shard(cfg, s * SHARD_ROUNDS..((s + 1) * SHARD_ROUNDS).min(cfg.rounds)))
        .collect::<Result<_>>()?;
    let merged = shards.into_iter().fold(Shard::default(), Shard::append);
    SessionReport::from_shard(cfg, merged)
}
