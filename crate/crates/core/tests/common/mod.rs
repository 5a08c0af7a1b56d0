//! Exact round statistics obtained by enumerating every choice and branch.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cfqkd_core::adversary::counterfactual_detection_events;
use cfqkd_core::protocol::{record_from_branch, RoundChoices};
use cfqkd_core::qcore::enumerate_round;
use cfqkd_core::{EveStrategy, InterferometerConfig, Outcome, Polarization, RoundRecord};

/// Probability-weighted aggregates over uniform Alice/Bob/Eve choices.
#[derive(Debug, Clone, Default)]
pub struct Exact {
    pub sift_rate: f64,
    pub d1_rate: f64,
    pub error_rate: f64,
    pub eve_known_rate: f64,
    pub d3_anomaly_rate: f64,
    pub counterfactual_detection_rate: f64,
    pub counterfactual_sifted_rate: f64,
    pub equal: [f64; 3],
    pub unequal: [f64; 3],
    pub qci: [f64; 4],
}

impl Exact {
    pub fn qber(&self) -> f64 {
        self.error_rate / self.sift_rate
    }

    pub fn eve_info(&self) -> f64 {
        self.eve_known_rate / self.sift_rate
    }
}

/// Every `(choices, weight, record)` reachable in one round.
pub fn weighted_records(r: f64, strategy: EveStrategy) -> Vec<(f64, RoundRecord)> {
    let cfg = InterferometerConfig::new(r).unwrap();
    let eve_choices: Vec<Option<Polarization>> = if strategy.requires_eve_pol() {
        Polarization::ALL.iter().map(|&p| Some(p)).collect()
    } else {
        vec![None]
    };
    let choice_weight = 0.25 / eve_choices.len() as f64;
    let mut out = Vec::new();
    for alice in Polarization::ALL {
        for bob in Polarization::ALL {
            for &eve in &eve_choices {
                let tree = enumerate_round(&cfg, alice, bob, strategy, eve).unwrap();
                let choices = RoundChoices {
                    alice_pol: alice,
                    bob_pol: bob,
                    eve_pol: eve,
                };
                for b in tree.branches() {
                    out.push((choice_weight * b.weight, record_from_branch(strategy, choices, *b)));
                }
            }
        }
    }
    out
}

fn slot(o: Outcome) -> Option<usize> {
    match o {
        Outcome::D1(_) => Some(0),
        Outcome::D2(_) => Some(1),
        Outcome::D3(_) => Some(2),
        Outcome::Loss => None,
    }
}

pub fn exact(r: f64, strategy: EveStrategy) -> Exact {
    let mut e = Exact::default();
    for (w, rec) in weighted_records(r, strategy) {
        let error = rec.error_bit == Some(true);
        if rec.sifted {
            e.sift_rate += w;
        }
        if error {
            e.error_rate += w;
        }
        if rec.sifted && !error && rec.eve_view().determines(rec.alice_bit) {
            e.eve_known_rate += w;
        }
        if rec.is_d3_anomaly() {
            e.d3_anomaly_rate += w;
        }
        if counterfactual_detection_events(&[rec]) == 1 {
            e.counterfactual_detection_rate += w;
        }
        if rec.counterfactual {
            e.counterfactual_sifted_rate += w;
        }
        if let Some(s) = slot(rec.branch.outcome) {
            if s == 0 {
                e.d1_rate += w;
            }
            // Each polarization condition has total weight 1/2.
            if rec.pols_equal() {
                e.equal[s] += 2.0 * w;
            } else {
                e.unequal[s] += 2.0 * w;
            }
        }
        let cell = (!rec.eve_view().qci_success as usize) * 2 + error as usize;
        e.qci[cell] += w;
    }
    e
}

/// Category of a sampled round used for distribution comparisons.
pub type Category = (Polarization, Polarization, Option<Polarization>, Outcome);

fn category(rec: &RoundRecord) -> Category {
    (rec.alice_pol, rec.bob_pol, rec.eve_pol, rec.branch.outcome)
}

fn outcome_key(o: Outcome) -> (u8, u8) {
    match o {
        Outcome::D1(p) => (0, p.bit()),
        Outcome::D2(p) => (1, p.bit()),
        Outcome::D3(p) => (2, p.bit()),
        Outcome::Loss => (3, 0),
    }
}

type Key = (u8, u8, u8, (u8, u8));

fn key(c: &Category) -> Key {
    (c.0.bit(), c.1.bit(), c.2.map_or(2, |p| p.bit()), outcome_key(c.3))
}

/// Exact joint distribution of choices and outcome.
pub fn exact_distribution(r: f64, strategy: EveStrategy) -> BTreeMap<Key, f64> {
    let mut m = BTreeMap::new();
    for (w, rec) in weighted_records(r, strategy) {
        *m.entry(key(&category(&rec))).or_insert(0.0) += w;
    }
    m
}

/// Total-variation distance between sampled records and the exact distribution.
pub fn total_variation(records: &[RoundRecord], exact: &BTreeMap<Key, f64>) -> f64 {
    let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
    for rec in records {
        *counts.entry(key(&category(rec))).or_insert(0) += 1;
    }
    let n = records.len() as f64;
    let mut keys: Vec<Key> = exact.keys().copied().collect();
    keys.extend(counts.keys().copied());
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (counts.get(k).copied().unwrap_or(0) as f64 / n - exact.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
