//! Eavesdropping strategies acting on path `b`, and what Eve learns from them.
//!
//! Eve only ever touches the channel segment between Alice's beamsplitter and
//! Bob's station. Every operation here is a pure branch transformer: it takes
//! a normalized [`PulseState`] and returns weighted forks whose weights sum
//! to one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::protocol::RoundRecord;
use crate::qcore::{Branch, Path, Polarization, PulseState, PRUNE_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveStrategy {
    /// No eavesdropper.
    None,
    /// Measure one polarization component, resend what was seen.
    SimpleIr,
    /// As `SimpleIr`, but every resent photon is flipped to the orthogonal
    /// polarization.
    ModifiedIr,
    /// Non-demolition photon-presence probe used to identify the channel.
    QciProbe,
}

impl EveStrategy {
    pub const ALL: [EveStrategy; 4] = [
        EveStrategy::None,
        EveStrategy::SimpleIr,
        EveStrategy::ModifiedIr,
        EveStrategy::QciProbe,
    ];

    /// Intercept-resend strategies need a per-round analyzer polarization.
    pub fn requires_eve_pol(self) -> bool {
        matches!(self, EveStrategy::SimpleIr | EveStrategy::ModifiedIr)
    }

    pub fn name(self) -> &'static str {
        match self {
            EveStrategy::None => "none",
            EveStrategy::SimpleIr => "simple-ir",
            EveStrategy::ModifiedIr => "modified-ir",
            EveStrategy::QciProbe => "qci-probe",
        }
    }

    fn resend(self, seen: Polarization) -> Polarization {
        match self {
            EveStrategy::ModifiedIr => seen.flip(),
            _ => seen,
        }
    }
}

impl fmt::Display for EveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EveStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        EveStrategy::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown strategy '{s}' (expected none, simple-ir, modified-ir or qci-probe)"
                ))
            })
    }
}

/// One outcome of an Eve measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveFork {
    /// Conditional probability of this fork.
    pub weight: f64,
    /// State that continues along the interferometer; `None` means Eve kept
    /// the photon.
    pub state: Option<PulseState>,
    /// Eve's detector fired.
    pub hit: bool,
    /// Polarization Eve read off, if her measurement resolves one.
    pub seen: Option<Polarization>,
}

impl EveFork {
    fn pass(state: PulseState) -> Self {
        Self {
            weight: 1.0,
            state: Some(state),
            hit: false,
            seen: None,
        }
    }
}

/// Polarization-selective intercept: the `(b, eve_pol)` component is measured
/// out and replaced by a freshly emitted photon of polarization `resend_pol`.
/// Everything else passes coherently.
fn selective_intercept(state: &PulseState, eve_pol: Polarization, resend_pol: Polarization) -> Vec<EveFork> {
    let hit_weight = state.mode_weight(Path::B, eve_pol);
    if hit_weight <= PRUNE_EPS {
        return vec![EveFork::pass(*state)];
    }
    let mut forks = vec![EveFork {
        weight: hit_weight,
        state: Some(PulseState::single(Path::B, resend_pol)),
        hit: true,
        seen: Some(eve_pol),
    }];
    let (rest, survivor) = state.project(|path, pol| !(path == Path::B && pol == eve_pol));
    if let Some(survivor) = survivor {
        forks.push(EveFork {
            weight: rest,
            state: Some(survivor),
            hit: false,
            seen: None,
        });
    }
    forks
}

/// Full intercept of all light on path `b`, resolving its polarization.
fn full_intercept(state: &PulseState, strategy: EveStrategy, resend: bool) -> Vec<EveFork> {
    let mut forks = Vec::with_capacity(3);
    for pol in Polarization::ALL {
        let w = state.mode_weight(Path::B, pol);
        if w > PRUNE_EPS {
            forks.push(EveFork {
                weight: w,
                state: resend.then(|| PulseState::single(Path::B, strategy.resend(pol))),
                hit: true,
                seen: Some(pol),
            });
        }
    }
    let (rest, survivor) = state.project(|path, _| path == Path::A);
    if let Some(survivor) = survivor {
        forks.push(EveFork {
            weight: rest,
            state: Some(survivor),
            hit: false,
            seen: None,
        });
    }
    forks
}

/// Forward tap of the simple intercept-resend attack.
pub fn simple_ir_forward(state: &PulseState, eve_pol: Polarization) -> Vec<EveFork> {
    selective_intercept(state, eve_pol, eve_pol)
}

/// Return tap of the simple intercept-resend attack.
///
/// After a forward detection Eve knows a photon is in flight and intercepts
/// all returning light; with `resend = false` the photon is lost.
pub fn simple_ir_return(
    state: &PulseState,
    eve_pol: Polarization,
    forward_detected: bool,
    resend: bool,
) -> Vec<EveFork> {
    intercept_return(EveStrategy::SimpleIr, state, eve_pol, forward_detected, resend)
}

/// Forward tap of the modified attack: the resent photon is flipped.
pub fn modified_ir(state: &PulseState, eve_pol: Polarization) -> Vec<EveFork> {
    selective_intercept(state, eve_pol, eve_pol.flip())
}

/// Return tap of the modified attack.
pub fn modified_ir_return(
    state: &PulseState,
    eve_pol: Polarization,
    forward_detected: bool,
    resend: bool,
) -> Vec<EveFork> {
    intercept_return(EveStrategy::ModifiedIr, state, eve_pol, forward_detected, resend)
}

fn intercept_return(
    strategy: EveStrategy,
    state: &PulseState,
    eve_pol: Polarization,
    forward_detected: bool,
    resend: bool,
) -> Vec<EveFork> {
    if forward_detected {
        full_intercept(state, strategy, resend)
    } else {
        selective_intercept(state, eve_pol, strategy.resend(eve_pol))
    }
}

/// Photon-presence measurement on path `b` that leaves polarization intact.
pub fn qci_probe(state: &PulseState) -> Vec<EveFork> {
    let mut forks = Vec::with_capacity(2);
    let (in_b, b_state) = state.project(|path, _| path == Path::B);
    if let Some(s) = b_state {
        forks.push(EveFork {
            weight: in_b,
            state: Some(s),
            hit: true,
            seen: None,
        });
    }
    let (in_a, a_state) = state.project(|path, _| path == Path::A);
    if let Some(s) = a_state {
        forks.push(EveFork {
            weight: in_a,
            state: Some(s),
            hit: false,
            seen: None,
        });
    }
    if forks.len() == 1 {
        forks[0].weight = 1.0;
    }
    forks
}

/// Eve's action on the pulse heading to Bob.
pub(crate) fn forward(strategy: EveStrategy, eve_pol: Option<Polarization>, state: &PulseState) -> Vec<EveFork> {
    match (strategy, eve_pol) {
        (EveStrategy::SimpleIr, Some(e)) => simple_ir_forward(state, e),
        (EveStrategy::ModifiedIr, Some(e)) => modified_ir(state, e),
        (EveStrategy::QciProbe, _) => qci_probe(state),
        _ => vec![EveFork::pass(*state)],
    }
}

/// Eve's action on light coming back from Bob.
pub(crate) fn backward(
    strategy: EveStrategy,
    eve_pol: Option<Polarization>,
    forward_detected: bool,
    state: &PulseState,
) -> Vec<EveFork> {
    match (strategy, eve_pol) {
        (EveStrategy::SimpleIr | EveStrategy::ModifiedIr, Some(e)) => {
            intercept_return(strategy, state, e, forward_detected, true)
        }
        _ => vec![EveFork::pass(*state)],
    }
}

/// What Eve observed in one round and what she can infer from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRoundView {
    pub eve_pol: Option<Polarization>,
    pub forward_detection: bool,
    pub return_detection: bool,
    pub qci_success: bool,
    pub inferred_alice_bit: Option<u8>,
    pub inferred_bob_bit: Option<u8>,
}

impl EveRoundView {
    pub fn from_branch(strategy: EveStrategy, eve_pol: Option<Polarization>, branch: &Branch) -> Self {
        let inferred_bob_bit = match (strategy, eve_pol) {
            // The photon came back, so Bob did not block what Eve sent him.
            (EveStrategy::SimpleIr | EveStrategy::ModifiedIr, Some(e))
                if branch.eve_forward_detected && branch.eve_return_detected =>
            {
                Some(strategy.resend(e).flip().bit())
            }
            _ => None,
        };
        Self {
            eve_pol,
            forward_detection: branch.eve_forward_detected,
            return_detection: branch.eve_return_detected,
            qci_success: strategy == EveStrategy::QciProbe && branch.eve_forward_detected,
            inferred_alice_bit: if branch.eve_forward_detected {
                branch.eve_bit_knowledge
            } else {
                None
            },
            inferred_bob_bit,
        }
    }

    /// True when Eve's inferences pin down `bit`.
    pub fn determines(&self, bit: u8) -> bool {
        self.inferred_alice_bit == Some(bit) || self.inferred_bob_bit == Some(bit)
    }
}

/// True when a sifted, error-free bit of this round is known to Eve.
pub(crate) fn eve_knows_agreed_bit(record: &RoundRecord) -> bool {
    record.sifted && record.error_bit == Some(false) && record.eve_view().determines(record.alice_bit)
}

/// Share of the sifted key made of agreed bits that Eve determined.
///
/// Bits at error positions never count towards Eve's knowledge, even when she
/// knows them, since they carry no shared secret. Returns `None` when nothing
/// was sifted.
pub fn eve_info_fraction(records: &[RoundRecord]) -> Option<f64> {
    let sifted = records.iter().filter(|r| r.sifted).count();
    if sifted == 0 {
        return None;
    }
    let known = records.iter().filter(|r| eve_knows_agreed_bit(r)).count();
    Some(known as f64 / sifted as f64)
}

pub(crate) fn is_counterfactual_detection(record: &RoundRecord) -> bool {
    record.strategy != EveStrategy::None && !record.branch.eve_forward_detected && record.error_bit == Some(true)
}

/// Rounds where Eve saw only vacuum but the legitimate users still got a bit
/// error, i.e. she was exposed without touching the photon.
pub fn counterfactual_detection_events(records: &[RoundRecord]) -> usize {
    records.iter().filter(|r| is_counterfactual_detection(r)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{enumerate_round, initial_split, BeamSplitter, InterferometerConfig, Outcome};
    use Polarization::*;

    const EPS: f64 = 1e-12;

    fn split(pol: Polarization, r: f64) -> PulseState {
        initial_split(pol, &BeamSplitter::new(r).unwrap())
    }

    fn total(forks: &[EveFork]) -> f64 {
        forks.iter().map(|f| f.weight).sum()
    }

    #[test]
    fn strategy_names_roundtrip() {
        for s in EveStrategy::ALL {
            assert_eq!(s.name().parse::<EveStrategy>().unwrap(), s);
        }
        assert_eq!("Simple_IR".parse::<EveStrategy>().unwrap(), EveStrategy::SimpleIr);
        assert!("bb84".parse::<EveStrategy>().is_err());
        assert!(EveStrategy::SimpleIr.requires_eve_pol());
        assert!(!EveStrategy::QciProbe.requires_eve_pol());
    }

    #[test]
    fn simple_forward_detection_fork() {
        let forks = simple_ir_forward(&split(H, 0.5), H);
        assert_eq!(forks.len(), 2);
        assert!((forks[0].weight - 0.5).abs() < EPS);
        assert!(forks[0].hit);
        assert_eq!(forks[0].state, Some(PulseState::single(Path::B, H)));
        assert!((forks[1].state.unwrap().mode_weight(Path::A, H) - 1.0).abs() < EPS);
        assert!((total(&forks) - 1.0).abs() < EPS);
    }

    #[test]
    fn simple_forward_orthogonal_and_empty_b() {
        let s = split(H, 0.5);
        assert_eq!(simple_ir_forward(&s, V), vec![EveFork::pass(s)]);
        let a_only = PulseState::single(Path::A, H);
        assert_eq!(simple_ir_forward(&a_only, H), vec![EveFork::pass(a_only)]);
    }

    #[test]
    fn simple_return_cases() {
        let returning = PulseState::single(Path::B, H);
        let forks = simple_ir_return(&returning, H, true, true);
        assert_eq!(forks.len(), 1);
        assert!(forks[0].hit);
        assert_eq!(forks[0].state, Some(returning));

        // Without a forward detection only the analyzer polarization is tapped.
        let forks = simple_ir_return(&PulseState::single(Path::B, V), H, false, true);
        assert_eq!(forks, vec![EveFork::pass(PulseState::single(Path::B, V))]);

        let forks = simple_ir_return(&returning, H, true, false);
        assert_eq!(forks[0].state, None);
    }

    #[test]
    fn swallowed_photon_ends_in_loss() {
        // Bob passes H (he blocks V); Eve keeps the returning photon.
        let forward = simple_ir_forward(&split(H, 0.5), H);
        let hit = forward[0].state.unwrap();
        let back = simple_ir_return(&hit, H, true, false);
        assert_eq!(back.len(), 1);
        assert!(back[0].state.is_none());
        assert!((back[0].weight - 1.0).abs() < EPS);
    }

    #[test]
    fn modified_flips_resent_photon() {
        let forks = modified_ir(&split(H, 0.5), H);
        assert_eq!(forks[0].state, Some(PulseState::single(Path::B, V)));
        let back = modified_ir_return(&PulseState::single(Path::B, V), H, true, true);
        assert_eq!(back[0].state, Some(PulseState::single(Path::B, H)));
        assert_eq!(back[0].seen, Some(V));

        let s = split(H, 0.5);
        assert_eq!(modified_ir(&s, V), simple_ir_forward(&s, V));
    }

    #[test]
    fn modified_equal_pols_gives_known_correct_bit() {
        let cfg = InterferometerConfig::new(0.5).unwrap();
        let tree = enumerate_round(&cfg, H, H, EveStrategy::ModifiedIr, Some(H)).unwrap();
        let known_d1 = tree.weight_where(|b| b.outcome == Outcome::D1(H) && b.eve_bit_knowledge == Some(0));
        // T·R from the intercepted branch.
        assert!((known_d1 - 0.25).abs() < EPS);
        let d3 = tree.weight_where(|b| matches!(b.outcome, Outcome::D3(_)));
        assert!(d3.abs() < EPS);
    }

    #[test]
    fn modified_unequal_pols_fires_d3() {
        let cfg = InterferometerConfig::new(0.5).unwrap();
        let tree = enumerate_round(&cfg, H, V, EveStrategy::ModifiedIr, Some(H)).unwrap();
        assert!((tree.outcome_weight(Outcome::D3(V)) - 0.5).abs() < EPS);
    }

    #[test]
    fn qci_probe_forks() {
        let forks = qci_probe(&split(H, 0.5));
        assert_eq!(forks.len(), 2);
        assert!(forks[0].hit && !forks[1].hit);
        assert!((forks[0].weight - 0.5).abs() < EPS);
        assert!(forks.iter().all(|f| f.seen.is_none()));

        let forks = qci_probe(&PulseState::single(Path::A, V));
        assert_eq!(forks.len(), 1);
        assert!(!forks[0].hit);
        assert_eq!(forks[0].weight, 1.0);
    }

    #[test]
    fn view_inference_from_return() {
        let branch = Branch {
            weight: 1.0,
            outcome: Outcome::D1(H),
            photon_entered_b: true,
            eve_forward_detected: true,
            eve_return_detected: true,
            eve_bit_knowledge: Some(0),
        };
        let v = EveRoundView::from_branch(EveStrategy::SimpleIr, Some(H), &branch);
        assert_eq!(v.inferred_alice_bit, Some(0));
        assert_eq!(v.inferred_bob_bit, Some(1));
        let v = EveRoundView::from_branch(EveStrategy::ModifiedIr, Some(H), &branch);
        assert_eq!(v.inferred_bob_bit, Some(0));
        assert!(v.determines(0));
        let quiet = Branch {
            eve_forward_detected: false,
            eve_return_detected: false,
            eve_bit_knowledge: None,
            ..branch
        };
        let v = EveRoundView::from_branch(EveStrategy::SimpleIr, Some(H), &quiet);
        assert_eq!(v.inferred_alice_bit, None);
        assert_eq!(v.inferred_bob_bit, None);
    }
}
