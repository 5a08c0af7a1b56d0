//! Amplitude-level model of the Michelson-type interferometer.
//!
//! A photon lives in the four-mode single-photon sector spanned by
//! `(path, polarization)` with path `a` (Alice's mirror) and path `b` (the
//! channel to Bob). Measurements never leave a sub-normalized state behind:
//! each one forks the current branch into weighted, renormalized children.
//! The resulting [`BranchTree`] is the single source of truth used both for
//! exact aggregation and for Monte Carlo sampling.
//!
//! Both Faraday mirrors are folded into a logical polarization frame, so a
//! photon returning from either arm carries the label it was prepared with.
//!
//! The second-pass beamsplitter uses reflected amplitude `i·√R`, transmitted
//! amplitude `√T` and a round-trip phase `φ` on arm `b`:
//!
//! ```text
//! D1(p) = √T·a(p) + i√R·e^{iφ}·b(p)
//! D2(p) = i√R·a(p) + √T·e^{iφ}·b(p)
//! ```
//!
//! With `φ = π` an unblocked photon exits at D2 with certainty for every `R`,
//! while a photon collapsed into arm `a` reaches D1 with probability `T`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{self, EveFork, EveStrategy};
use crate::error::{Error, Result};

/// Forks lighter than this are dropped from the tree. Interference at `φ = π`
/// leaves residues around 1e-33 that are physically zero.
pub const PRUNE_EPS: f64 = 1e-15;

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::H, Polarization::V];

    /// H encodes bit 0, V encodes bit 1.
    pub fn bit(self) -> u8 {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    fn index(self) -> usize {
        self.bit() as usize
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    /// Arm confined to Alice's station.
    A,
    /// Arm through the quantum channel to Bob.
    B,
}

/// Beamsplitter with reflectivity `R` and transmissivity `T = 1 - R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter {
    reflectivity: f64,
    transmissivity: f64,
}

impl BeamSplitter {
    pub fn new(reflectivity: f64) -> Result<Self> {
        Self::from_parts(reflectivity, 1.0 - reflectivity)
    }

    /// Builds a beamsplitter from explicit `R` and `T`, rejecting `R + T != 1`.
    pub fn from_parts(reflectivity: f64, transmissivity: f64) -> Result<Self> {
        let in_unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if !in_unit(reflectivity) || !in_unit(transmissivity) {
            return Err(Error::config(format!(
                "beamsplitter coefficients must lie in [0, 1], got R={reflectivity}, T={transmissivity}"
            )));
        }
        if (reflectivity + transmissivity - 1.0).abs() > NORM_TOL {
            return Err(Error::config(format!(
                "beamsplitter must satisfy R + T = 1, got R={reflectivity}, T={transmissivity}"
            )));
        }
        Ok(Self {
            reflectivity,
            transmissivity,
        })
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    fn reflect_amp(&self) -> Complex64 {
        Complex64::new(0.0, self.reflectivity.sqrt())
    }

    fn transmit_amp(&self) -> Complex64 {
        Complex64::new(self.transmissivity.sqrt(), 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerConfig {
    pub bs: BeamSplitter,
    /// Round-trip phase of arm `b` relative to arm `a`, in radians.
    pub phase: f64,
}

impl InterferometerConfig {
    /// Balanced-phase interferometer (`φ = π`) with the given reflectivity.
    pub fn new(reflectivity: f64) -> Result<Self> {
        Self::with_phase(reflectivity, PI)
    }

    pub fn with_phase(reflectivity: f64, phase: f64) -> Result<Self> {
        if !phase.is_finite() {
            return Err(Error::config(format!("round-trip phase must be finite, got {phase}")));
        }
        Ok(Self {
            bs: BeamSplitter::new(reflectivity)?,
            phase,
        })
    }

    pub fn reflectivity(&self) -> f64 {
        self.bs.reflectivity()
    }

    pub fn transmissivity(&self) -> f64 {
        self.bs.transmissivity()
    }
}

/// Single-photon amplitudes over the modes `(a,H) (a,V) (b,H) (b,V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseState {
    amps: [Complex64; 4],
}

impl PulseState {
    fn mode_index(path: Path, pol: Polarization) -> usize {
        match path {
            Path::A => pol.index(),
            Path::B => 2 + pol.index(),
        }
    }

    /// Builds a state from raw amplitudes, checking normalization.
    pub fn from_amplitudes(amps: [Complex64; 4]) -> Result<Self> {
        let state = Self { amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!("pulse state has squared norm {norm}")));
        }
        Ok(state)
    }

    /// Photon entirely in one mode.
    pub fn single(path: Path, pol: Polarization) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        amps[Self::mode_index(path, pol)] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn amplitude(&self, path: Path, pol: Polarization) -> Complex64 {
        self.amps[Self::mode_index(path, pol)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of finding the photon in path `b`.
    pub fn path_weight(&self, path: Path) -> f64 {
        Polarization::ALL
            .iter()
            .map(|&p| self.amplitude(path, p).norm_sqr())
            .sum()
    }

    pub fn mode_weight(&self, path: Path, pol: Polarization) -> f64 {
        self.amplitude(path, pol).norm_sqr()
    }

    pub fn has_path_b(&self) -> bool {
        self.path_weight(Path::B) > PRUNE_EPS
    }

    /// Projects onto the modes selected by `keep`, returning the weight of the
    /// projection and the renormalized result (or `None` for zero weight).
    pub(crate) fn project(&self, keep: impl Fn(Path, Polarization) -> bool) -> (f64, Option<Self>) {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        for path in [Path::A, Path::B] {
            for pol in Polarization::ALL {
                if keep(path, pol) {
                    let i = Self::mode_index(path, pol);
                    amps[i] = self.amps[i];
                }
            }
        }
        let weight: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if weight <= PRUNE_EPS {
            return (weight.max(0.0), None);
        }
        let scale = 1.0 / weight.sqrt();
        for a in &mut amps {
            *a *= scale;
        }
        (weight, Some(Self { amps }))
    }

    #[cfg(test)]
    pub(crate) fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }
}

/// State right after the first beamsplitter pass:
/// `i√R` on `(a, pol)` and `√T` on `(b, pol)`.
pub fn initial_split(pol: Polarization, bs: &BeamSplitter) -> PulseState {
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    amps[PulseState::mode_index(Path::A, pol)] = bs.reflect_amp();
    amps[PulseState::mode_index(Path::B, pol)] = bs.transmit_amp();
    PulseState { amps }
}

/// Result of Bob's polarization-selective block on path `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOutcome {
    /// Probability that D3 fires.
    pub d3_weight: f64,
    pub d3_pol: Polarization,
    /// Renormalized state when D3 stays silent.
    pub survivor: Option<PulseState>,
}

/// Measures out the `(b, bob_pol)` amplitude into detector D3.
pub fn apply_bob_block(state: &PulseState, bob_pol: Polarization) -> BlockOutcome {
    let (d3_weight, _) = state.project(|path, pol| path == Path::B && pol == bob_pol);
    let (_, survivor) = state.project(|path, pol| !(path == Path::B && pol == bob_pol));
    BlockOutcome {
        d3_weight,
        d3_pol: bob_pol,
        survivor,
    }
}

/// Per-polarization exit probabilities of the second beamsplitter pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recombination {
    /// Indexed by polarization bit.
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

impl Recombination {
    pub fn p_d1(&self) -> f64 {
        self.d1[0] + self.d1[1]
    }

    pub fn p_d2(&self) -> f64 {
        self.d2[0] + self.d2[1]
    }

    pub fn d1_at(&self, pol: Polarization) -> f64 {
        self.d1[pol.index()]
    }

    pub fn d2_at(&self, pol: Polarization) -> f64 {
        self.d2[pol.index()]
    }
}

pub fn recombine(state: &PulseState, cfg: &InterferometerConfig) -> Recombination {
    let t = cfg.bs.transmit_amp();
    let r = cfg.bs.reflect_amp();
    let phase = Complex64::from_polar(1.0, cfg.phase);
    let mut out = Recombination {
        d1: [0.0; 2],
        d2: [0.0; 2],
    };
    for pol in Polarization::ALL {
        let a = state.amplitude(Path::A, pol);
        let b = state.amplitude(Path::B, pol) * phase;
        out.d1[pol.index()] = (t * a + r * b).norm_sqr();
        out.d2[pol.index()] = (r * a + t * b).norm_sqr();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
    D3,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Terminal event of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    D1(Polarization),
    D2(Polarization),
    D3(Polarization),
    /// Photon absorbed by an adversary and never returned.
    Loss,
}

impl Outcome {
    pub fn detector(&self) -> Option<Detector> {
        match self {
            Outcome::D1(_) => Some(Detector::D1),
            Outcome::D2(_) => Some(Detector::D2),
            Outcome::D3(_) => Some(Detector::D3),
            Outcome::Loss => None,
        }
    }

    pub fn polarization(&self) -> Option<Polarization> {
        match *self {
            Outcome::D1(p) | Outcome::D2(p) | Outcome::D3(p) => Some(p),
            Outcome::Loss => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::D1(p) => write!(f, "D1({p})"),
            Outcome::D2(p) => write!(f, "D2({p})"),
            Outcome::D3(p) => write!(f, "D3({p})"),
            Outcome::Loss => f.write_str("Loss"),
        }
    }
}

/// Leaf of the collapse tree with the audit flags needed downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub weight: f64,
    pub outcome: Outcome,
    pub photon_entered_b: bool,
    pub eve_forward_detected: bool,
    pub eve_return_detected: bool,
    /// Alice's bit as learned by Eve from a forward detection.
    pub eve_bit_knowledge: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchTree {
    branches: Vec<Branch>,
}

impl BranchTree {
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// Summed weight of branches whose outcome satisfies `pred`.
    pub fn weight_where(&self, pred: impl Fn(&Branch) -> bool) -> f64 {
        self.branches.iter().filter(|b| pred(b)).map(|b| b.weight).sum()
    }

    pub fn outcome_weight(&self, outcome: Outcome) -> f64 {
        self.weight_where(|b| b.outcome == outcome)
    }

    fn from_leaves(mut branches: Vec<Branch>) -> Result<Self> {
        branches.retain(|b| b.weight > PRUNE_EPS);
        let total: f64 = branches.iter().map(|b| b.weight).sum();
        if branches.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(Error::internal(format!(
                "collapse tree lost probability: total weight {total}"
            )));
        }
        for b in &mut branches {
            b.weight /= total;
        }
        Ok(Self { branches })
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Flags {
    forward: bool,
    ret: bool,
    knowledge: Option<u8>,
}

struct Live {
    weight: f64,
    state: PulseState,
    flags: Flags,
}

/// Builds the full collapse tree for one round with fixed choices.
///
/// Measurement order follows the pulse itinerary: Eve's forward tap, Bob's
/// block, Eve's return tap, then recombination at the beamsplitter.
pub fn enumerate_round(
    cfg: &InterferometerConfig,
    alice_pol: Polarization,
    bob_pol: Polarization,
    strategy: EveStrategy,
    eve_pol: Option<Polarization>,
) -> Result<BranchTree> {
    match (strategy.requires_eve_pol(), eve_pol) {
        (true, None) => {
            return Err(Error::config(format!(
                "strategy {strategy} requires an Eve polarization"
            )))
        }
        (false, Some(_)) => return Err(Error::config(format!("strategy {strategy} takes no Eve polarization"))),
        _ => {}
    }

    let mut leaves = Vec::with_capacity(6);
    let start = initial_split(alice_pol, &cfg.bs);

    // Forward segment of path b.
    let mut live = Vec::with_capacity(2);
    for fork in adversary::forward(strategy, eve_pol, &start) {
        let flags = Flags {
            forward: fork.hit,
            knowledge: fork.seen.map(Polarization::bit),
            ..Flags::default()
        };
        push_fork(&mut live, &mut leaves, 1.0, flags, fork);
    }

    // Bob's station.
    let mut after_bob = Vec::with_capacity(live.len());
    for item in live {
        let block = apply_bob_block(&item.state, bob_pol);
        if block.d3_weight > PRUNE_EPS {
            leaves.push(leaf(
                item.weight * block.d3_weight,
                Outcome::D3(block.d3_pol),
                true,
                item.flags,
            ));
        }
        if let Some(state) = block.survivor {
            after_bob.push(Live {
                weight: item.weight * (1.0 - block.d3_weight),
                state,
                flags: item.flags,
            });
        }
    }

    // Return segment of path b.
    let mut returning = Vec::with_capacity(after_bob.len());
    for item in after_bob {
        for fork in adversary::backward(strategy, eve_pol, item.flags.forward, &item.state) {
            let flags = Flags {
                ret: item.flags.ret || fork.hit,
                ..item.flags
            };
            push_fork(&mut returning, &mut leaves, item.weight, flags, fork);
        }
    }

    // Second beamsplitter pass.
    for item in returning {
        let entered_b = item.state.has_path_b();
        let rec = recombine(&item.state, cfg);
        for pol in Polarization::ALL {
            let d1 = rec.d1_at(pol);
            if d1 > PRUNE_EPS {
                leaves.push(leaf(item.weight * d1, Outcome::D1(pol), entered_b, item.flags));
            }
            let d2 = rec.d2_at(pol);
            if d2 > PRUNE_EPS {
                leaves.push(leaf(item.weight * d2, Outcome::D2(pol), entered_b, item.flags));
            }
        }
    }

    BranchTree::from_leaves(leaves)
}

fn push_fork(live: &mut Vec<Live>, leaves: &mut Vec<Branch>, parent: f64, flags: Flags, fork: EveFork) {
    let weight = parent * fork.weight;
    if weight <= PRUNE_EPS {
        return;
    }
    match fork.state {
        Some(state) => live.push(Live { weight, state, flags }),
        None => leaves.push(leaf(weight, Outcome::Loss, true, flags)),
    }
}

fn leaf(weight: f64, outcome: Outcome, photon_entered_b: bool, flags: Flags) -> Branch {
    Branch {
        weight,
        outcome,
        photon_entered_b,
        eve_forward_detected: flags.forward,
        eve_return_detected: flags.ret,
        eve_bit_knowledge: flags.knowledge,
    }
}

/// Draws one leaf with probability proportional to its weight.
pub fn sample_branch<R: Rng + ?Sized>(tree: &BranchTree, rng: &mut R) -> Result<Branch> {
    let last = tree
        .branches
        .last()
        .ok_or_else(|| Error::internal("cannot sample from an empty branch tree"))?;
    let mut u = rng.gen::<f64>() * tree.total_weight();
    for b in &tree.branches {
        if u < b.weight {
            return Ok(*b);
        }
        u -= b.weight;
    }
    Ok(*last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= EPS
    }

    fn cfg(r: f64) -> InterferometerConfig {
        InterferometerConfig::new(r).unwrap()
    }

    #[test]
    fn polarization_bits_and_flip() {
        assert_eq!(Polarization::H.bit(), 0);
        assert_eq!(Polarization::V.bit(), 1);
        assert_eq!(Polarization::from_bit(1), Polarization::V);
        for p in Polarization::ALL {
            assert_eq!(p.flip().flip(), p);
            assert_ne!(p.flip(), p);
        }
    }

    #[test]
    fn beamsplitter_validation() {
        assert!(BeamSplitter::from_parts(0.3, 0.7).is_ok());
        assert!(matches!(BeamSplitter::from_parts(0.3, 0.6), Err(Error::Config(_))));
        assert!(BeamSplitter::new(-0.1).is_err());
        assert!(BeamSplitter::new(1.5).is_err());
        assert!(BeamSplitter::new(f64::NAN).is_err());
        assert!(InterferometerConfig::with_phase(0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn initial_split_amplitudes() {
        let s = initial_split(Polarization::H, &BeamSplitter::new(0.5).unwrap());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(Path::A, Polarization::H) - Complex64::new(0.0, h)).norm() < EPS);
        assert!((s.amplitude(Path::B, Polarization::H) - Complex64::new(h, 0.0)).norm() < EPS);
        assert_eq!(s.amplitude(Path::A, Polarization::V), Complex64::new(0.0, 0.0));

        let s = initial_split(Polarization::V, &BeamSplitter::new(0.0).unwrap());
        assert_eq!(s, PulseState::single(Path::B, Polarization::V));

        let s = initial_split(Polarization::H, &BeamSplitter::new(0.3).unwrap());
        assert!((s.amplitude(Path::A, Polarization::H).im - 0.547_722_557_505_166).abs() < 1e-12);
        assert!((s.amplitude(Path::B, Polarization::H).re - 0.836_660_026_534_075_6).abs() < 1e-12);
        assert!(s.is_normalized());
    }

    #[test]
    fn bob_block_examples() {
        let bs = BeamSplitter::new(0.5).unwrap();
        let s = initial_split(Polarization::H, &bs);
        let out = apply_bob_block(&s, Polarization::H);
        assert!(close(out.d3_weight, 0.5));
        assert_eq!(out.d3_pol, Polarization::H);
        let surv = out.survivor.unwrap();
        assert!(close(surv.mode_weight(Path::A, Polarization::H), 1.0));

        let out = apply_bob_block(&s, Polarization::V);
        assert_eq!(out.d3_weight, 0.0);
        assert_eq!(out.survivor.unwrap(), s);

        let s = initial_split(Polarization::V, &BeamSplitter::new(0.3).unwrap());
        let out = apply_bob_block(&s, Polarization::V);
        assert!(close(out.d3_weight, 0.7));
        assert!(close(out.survivor.unwrap().mode_weight(Path::A, Polarization::V), 1.0));

        let all_b = PulseState::single(Path::B, Polarization::H);
        let out = apply_bob_block(&all_b, Polarization::H);
        assert_eq!(out.d3_weight, 1.0);
        assert!(out.survivor.is_none());
    }

    #[test]
    fn recombine_examples() {
        let c = cfg(0.5);
        let rec = recombine(&initial_split(Polarization::H, &c.bs), &c);
        assert!(close(rec.p_d1(), 0.0));
        assert!(close(rec.d2_at(Polarization::H), 1.0));

        let rec = recombine(&PulseState::single(Path::A, Polarization::H), &c);
        assert!(close(rec.p_d1(), 0.5));
        assert!(close(rec.p_d2(), 0.5));

        let c = cfg(0.3);
        let rec = recombine(&initial_split(Polarization::H, &c.bs), &c);
        assert!(close(rec.p_d1(), 0.0));
        assert!(close(rec.p_d2(), 1.0));
    }

    #[test]
    fn zero_phase_breaks_d2_certainty() {
        // At φ = 0 the D1 amplitude is i√(RT)·2 and the D2 amplitude T − R.
        for r in [0.1, 0.3, 0.5, 0.8] {
            let c = InterferometerConfig::with_phase(r, 0.0).unwrap();
            let rec = recombine(&initial_split(Polarization::V, &c.bs), &c);
            let t = 1.0 - r;
            assert!(close(rec.p_d1(), 4.0 * r * t));
            assert!(close(rec.p_d2(), (t - r).powi(2)));
        }
    }

    #[test]
    fn enumerate_no_attack_examples() {
        use Polarization::*;
        let c = cfg(0.5);
        let tree = enumerate_round(&c, H, H, EveStrategy::None, None).unwrap();
        assert_eq!(tree.len(), 3);
        assert!(close(tree.outcome_weight(Outcome::D1(H)), 0.25));
        assert!(close(tree.outcome_weight(Outcome::D2(H)), 0.25));
        assert!(close(tree.outcome_weight(Outcome::D3(H)), 0.5));
        for b in tree.branches() {
            let expect_b = matches!(b.outcome, Outcome::D3(_));
            assert_eq!(b.photon_entered_b, expect_b);
        }

        let tree = enumerate_round(&c, H, V, EveStrategy::None, None).unwrap();
        assert_eq!(tree.len(), 1);
        assert_eq!(tree.branches()[0].outcome, Outcome::D2(H));
        assert!(close(tree.branches()[0].weight, 1.0));
    }

    #[test]
    fn enumerate_qci_unequal_example() {
        use Polarization::*;
        let tree = enumerate_round(&cfg(0.5), H, V, EveStrategy::QciProbe, None).unwrap();
        assert_eq!(tree.len(), 4);
        for outcome in [Outcome::D1(H), Outcome::D2(H)] {
            for entered in [false, true] {
                let w = tree.weight_where(|b| b.outcome == outcome && b.photon_entered_b == entered);
                assert!(close(w, 0.25), "{outcome} entered_b={entered}: {w}");
            }
        }
    }

    #[test]
    fn enumerate_rejects_mismatched_eve_pol() {
        use Polarization::*;
        let c = cfg(0.5);
        assert!(matches!(
            enumerate_round(&c, H, H, EveStrategy::SimpleIr, None),
            Err(Error::Config(_))
        ));
        assert!(enumerate_round(&c, H, H, EveStrategy::None, Some(H)).is_err());
        assert!(enumerate_round(&c, H, H, EveStrategy::ModifiedIr, Some(V)).is_ok());
    }

    #[test]
    fn degenerate_reflectivities() {
        use Polarization::*;
        for r in [0.0, 1.0] {
            let c = cfg(r);
            for strategy in EveStrategy::ALL {
                let eve = strategy.requires_eve_pol().then_some(H);
                for (a, b) in [(H, H), (H, V)] {
                    let tree = enumerate_round(&c, a, b, strategy, eve).unwrap();
                    assert!(close(tree.total_weight(), 1.0));
                    assert!(close(tree.weight_where(|b| matches!(b.outcome, Outcome::D1(_))), 0.0));
                }
            }
        }
    }

    #[test]
    fn sampling_degenerate_and_deterministic() {
        use Polarization::*;
        let c = cfg(0.5);
        let single = enumerate_round(&c, H, V, EveStrategy::None, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_branch(&single, &mut rng).unwrap().outcome, Outcome::D2(H));
        }

        let tree = enumerate_round(&c, H, H, EveStrategy::None, None).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64)
                .map(|_| sample_branch(&tree, &mut rng).unwrap().outcome)
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));

        assert!(matches!(
            sample_branch(&BranchTree::default(), &mut rng),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn sampling_frequencies_match_weights() {
        use Polarization::*;
        let tree = enumerate_round(&cfg(0.5), H, H, EveStrategy::None, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts
                .entry(sample_branch(&tree, &mut rng).unwrap().outcome)
                .or_insert(0usize) += 1;
        }
        for b in tree.branches() {
            let p = b.weight;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts[&b.outcome] as f64 / n as f64;
            assert!((freq - p).abs() <= 4.0 * sigma, "{}: {freq} vs {p}", b.outcome);
        }
    }
}
