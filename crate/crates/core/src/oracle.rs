//! Closed-form probabilities for the ideal protocol and its attacks.
//!
//! Nothing here calls into the branch engine: every number is written out
//! from the case analysis of each scenario, so the Monte Carlo engine and
//! the enumeration can be checked against an independent derivation.
//! All tables assume the balanced phase `φ = π`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adversary::EveStrategy;
use crate::error::{Error, Result};
use crate::protocol::{Condition, SessionReport};

/// Largest |z| accepted by [`cross_validate`].
pub const Z_THRESHOLD: f64 = 4.0;

/// Minimum session size accepted by [`cross_validate`].
pub const MIN_VALIDATION_ROUNDS: u64 = 10_000;

fn check_reflectivity(r: f64) -> Result<f64> {
    if !(r.is_finite() && (0.0..=1.0).contains(&r)) {
        return Err(Error::config(format!("reflectivity must lie in [0, 1], got {r}")));
    }
    Ok(1.0 - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Alice's and Bob's polarizations agree; path b ends at D3.
    Blocked,
    /// Polarizations differ; both arms interfere.
    Unblocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionTable {
    pub scenario: Scenario,
    pub p_d1: f64,
    pub p_d2: f64,
    pub p_d3: f64,
}

impl DetectionTable {
    pub fn total(&self) -> f64 {
        self.p_d1 + self.p_d2 + self.p_d3
    }
}

/// Blocked: `(RT, R², T)`. Unblocked: `(0, 1, 0)`.
pub fn detection_table(r: f64, scenario: Scenario) -> Result<DetectionTable> {
    let t = check_reflectivity(r)?;
    let (p_d1, p_d2, p_d3) = match scenario {
        Scenario::Blocked => (r * t, r * r, t),
        Scenario::Unblocked => (0.0, 1.0, 0.0),
    };
    Ok(DetectionTable {
        scenario,
        p_d1,
        p_d2,
        p_d3,
    })
}

/// Sifted bits per round.
///
/// Intercept-resend doubles the no-attack rate `RT/2`. The channel probe keeps
/// the blocked-round contribution `RT/2` and adds the error events
/// `P2 + P4 = RT` from the unblocked rounds.
pub fn sift_rate(r: f64, strategy: EveStrategy) -> Result<f64> {
    let t = check_reflectivity(r)?;
    Ok(match strategy {
        EveStrategy::None => r * t / 2.0,
        EveStrategy::SimpleIr | EveStrategy::ModifiedIr => r * t,
        EveStrategy::QciProbe => 1.5 * r * t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub strategy: EveStrategy,
    pub sift_rate: f64,
    pub qber: f64,
    pub eve_info: f64,
    pub d3_anomaly_rate: f64,
    pub d1_rate: f64,
}

/// Figures of merit of the two intercept-resend attacks.
pub fn attack_report(r: f64, strategy: EveStrategy) -> Result<AttackReport> {
    let t = check_reflectivity(r)?;
    let (qber, eve_info, d3_anomaly_rate) = match strategy {
        EveStrategy::SimpleIr => (0.5, 0.0, 0.0),
        EveStrategy::ModifiedIr => (0.25, 0.25, t / 4.0),
        other => {
            return Err(Error::config(format!(
                "attack report is defined for simple-ir and modified-ir, not {other}"
            )))
        }
    };
    Ok(AttackReport {
        strategy,
        sift_rate: r * t,
        qber,
        eve_info,
        d3_anomaly_rate,
        d1_rate: r * t,
    })
}

/// Outcome probabilities of a single channel-identification attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QciTable {
    /// Success, not detected.
    pub p1: f64,
    /// Success, bit error.
    pub p2: f64,
    /// Failure, not detected.
    pub p3: f64,
    /// Failure, bit error (counterfactual detection).
    pub p4: f64,
}

impl QciTable {
    pub fn total(&self) -> f64 {
        self.p1 + self.p2 + self.p3 + self.p4
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }
}

pub fn qci_table(r: f64) -> Result<QciTable> {
    let t = check_reflectivity(r)?;
    Ok(QciTable {
        p1: t / 2.0 + t * t / 2.0,
        p2: t * r / 2.0,
        p3: r / 2.0 + r * r / 2.0,
        p4: r * t / 2.0,
    })
}

/// Published BB84 intercept-resend figures, for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bb84Reference {
    pub qber: f64,
    pub eve_info: f64,
}

pub const BB84_REFERENCE: Bb84Reference = Bb84Reference {
    qber: 0.25,
    eve_info: 0.5,
};

pub fn bb84_reference() -> Bb84Reference {
    BB84_REFERENCE
}

/// Every statistic a session report can be compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub strategy: EveStrategy,
    pub reflectivity: f64,
    pub sift_rate: f64,
    pub d1_rate: f64,
    pub qber: f64,
    pub eve_info: f64,
    pub d3_anomaly_rate: f64,
    pub counterfactual_detection_rate: f64,
    /// `(D1, D2, D3)` given equal polarizations.
    pub equal: [f64; 3],
    /// `(D1, D2, D3)` given orthogonal polarizations.
    pub unequal: [f64; 3],
    pub qci: Option<QciTable>,
}

/// Closed forms per strategy, averaged over Eve's uniform analyzer choice.
///
/// Intercept-resend with Eve's analyzer equal to Alice's polarization (half of
/// the rounds) collapses the photon: with probability `T` Eve holds it in
/// path b, otherwise it is confined to path a.
pub fn expectations(r: f64, strategy: EveStrategy) -> Result<Expectation> {
    let t = check_reflectivity(r)?;
    let rt = r * t;
    let blocked = [rt, r * r, t];
    let unblocked = [0.0, 1.0, 0.0];
    let mut e = Expectation {
        strategy,
        reflectivity: r,
        sift_rate: sift_rate(r, strategy)?,
        d1_rate: 0.0,
        qber: 0.0,
        eve_info: 0.0,
        d3_anomaly_rate: 0.0,
        counterfactual_detection_rate: 0.0,
        equal: blocked,
        unequal: unblocked,
        qci: None,
    };
    match strategy {
        EveStrategy::None => {
            e.d1_rate = rt / 2.0;
        }
        EveStrategy::SimpleIr => {
            // Unequal, analyzer = Alice: D1 from both arms (RT + TR), D2 R² + T².
            e.unequal = [rt, (1.0 + r * r + t * t) / 2.0, 0.0];
            e.d1_rate = rt;
            e.qber = 0.5;
            e.counterfactual_detection_rate = rt / 4.0;
        }
        EveStrategy::ModifiedIr => {
            // Equal, analyzer = Alice: the flipped photon survives Bob and comes
            // back flipped again, so D3 never fires and D1 gets TR extra.
            e.equal = [1.5 * rt, (2.0 * r * r + t * t) / 2.0, t / 2.0];
            // Unequal, analyzer = Alice: the flipped photon matches Bob -> D3.
            e.unequal = [rt / 2.0, (1.0 + r * r) / 2.0, t / 2.0];
            e.d1_rate = rt;
            e.qber = 0.25;
            e.eve_info = 0.25;
            e.d3_anomaly_rate = t / 4.0;
            e.counterfactual_detection_rate = rt / 4.0;
        }
        EveStrategy::QciProbe => {
            let q = qci_table(r)?;
            e.unequal = [2.0 * rt, r * r + t * t, 0.0];
            e.d1_rate = 1.5 * rt;
            e.qber = 2.0 / 3.0;
            e.counterfactual_detection_rate = q.p4;
            e.qci = Some(q);
        }
    }
    Ok(e)
}

/// `R` values from 0 to 1 inclusive with the given step.
pub fn reflectivity_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::config(format!("grid step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("grid step {step} does not divide [0, 1]")));
    }
    Ok((0..=n)
        .map(|i| if i == n { 1.0 } else { i as f64 / n as f64 })
        .collect())
}

/// One empirical-vs-closed-form comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub samples: u64,
    pub std_err: f64,
    pub z: f64,
    pub pass: bool,
}

impl Check {
    /// Binomial comparison of `count / samples` against `expected`.
    pub fn binomial(name: impl Into<String>, count: u64, samples: u64, expected: f64) -> Self {
        let observed = count as f64 / samples as f64;
        let std_err = (expected * (1.0 - expected) / samples as f64).max(0.0).sqrt();
        let diff = observed - expected;
        let z = if std_err > 0.0 {
            diff / std_err
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        Self {
            name: name.into(),
            observed,
            expected,
            samples,
            std_err,
            z,
            pass: z.abs() <= Z_THRESHOLD,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<6} {:<32} observed={:.6} expected={:.6} n={} z={:+.3}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.expected,
            self.samples,
            self.z
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Verdict {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(f, "verdict: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// Compares every statistic of `report` with its closed form.
///
/// Rates over all rounds are only compared for unconditioned sessions;
/// conditional detector rates are compared whenever rounds of that kind exist.
/// The verdict fails if any |z| exceeds [`Z_THRESHOLD`].
pub fn cross_validate(report: &SessionReport, expected: &Expectation) -> Result<Verdict> {
    if report.rounds < MIN_VALIDATION_ROUNDS {
        return Err(Error::config(format!(
            "cross-validation needs at least {MIN_VALIDATION_ROUNDS} rounds, got {}",
            report.rounds
        )));
    }
    if report.strategy != expected.strategy || (report.reflectivity - expected.reflectivity).abs() > 1e-12 {
        return Err(Error::config(format!(
            "report ({}, R={}) does not match expectation ({}, R={})",
            report.strategy, report.reflectivity, expected.strategy, expected.reflectivity
        )));
    }
    let n = report.rounds;
    let mut checks = Vec::new();
    if report.condition == Condition::Any {
        checks.push(Check::binomial("sift_rate", report.sifted, n, expected.sift_rate));
        checks.push(Check::binomial("d1_rate", report.clicks_d1, n, expected.d1_rate));
        checks.push(Check::binomial(
            "d3_anomaly_rate",
            report.d3_anomalies,
            n,
            expected.d3_anomaly_rate,
        ));
        checks.push(Check::binomial(
            "counterfactual_detection_rate",
            report.counterfactual_detections,
            n,
            expected.counterfactual_detection_rate,
        ));
        if report.sifted > 0 {
            checks.push(Check::binomial("qber", report.errors, report.sifted, expected.qber));
            checks.push(Check::binomial(
                "eve_info",
                report.eve_known_bits,
                report.sifted,
                expected.eve_info,
            ));
        }
        if let Some(q) = expected.qci {
            let cells = [
                report.qci_success_clean,
                report.qci_success_error,
                report.qci_fail_clean,
                report.qci_fail_error,
            ];
            for (i, (count, p)) in cells.into_iter().zip(q.as_array()).enumerate() {
                checks.push(Check::binomial(format!("qci_p{}", i + 1), count, n, p));
            }
        }
    }
    let conditional = [
        (
            "equal",
            report.equal_rounds,
            [report.equal_d1, report.equal_d2, report.equal_d3],
            expected.equal,
        ),
        (
            "unequal",
            report.unequal_rounds,
            [report.unequal_d1, report.unequal_d2, report.unequal_d3],
            expected.unequal,
        ),
    ];
    for (label, rounds, counts, probs) in conditional {
        if rounds == 0 {
            continue;
        }
        for (d, (count, p)) in counts.into_iter().zip(probs).enumerate() {
            checks.push(Check::binomial(format!("{label}_d{}", d + 1), count, rounds, p));
        }
    }
    let passed = checks.iter().all(|c| c.pass);
    Ok(Verdict { checks, passed })
}
