//! The full attack: trim, IS-pattern, candidate sweep with stop columns and
//! anti-patterns, threshold tracking, shortest-path recovery, consistency
//! checks and pattern relaxation.
//!
//! Candidates of a pattern generation are evaluated in batches. With more
//! than one worker a batch is computed speculatively under a snapshot of the
//! threshold and anti-patterns, then committed in order: the first stop
//! column under the current threshold is re-read from the stored columns and
//! the current anti-patterns are re-checked. Since the threshold only falls
//! and exclusions only grow, the committed outcome is exactly the sequential
//! one, so reports do not depend on the worker count.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corebits::{solve_initial_state, Bits, FeedbackPolynomial, LfsrState};
use crate::editmatrix::EditMatrix;
use crate::error::{Error, Result};
use crate::patterns::{
    anti_pattern_for, build_is_pattern, relaxations, trim_for_h, AntiPatternSet, BitPattern, GeneratorKind,
    HypothesisParams, ModelKind, RelaxationOrder,
};
use crate::searchgraph::{AlignmentSolution, InducedGraph};

/// Solutions enumerated per candidate state before giving up on the rest.
pub const MAX_SOLUTIONS_PER_STATE: usize = 4096;

/// Largest number of free pattern bits a generation may sweep.
pub const MAX_FREE_BITS: usize = 32;

/// Speculative batch length per worker.
const BATCH_PER_WORKER: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackModel {
    GenericDecimation,
    GenericInsertion,
    Shrinking,
    AlternatingStep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AsgTarget {
    #[default]
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub model: AttackModel,
    /// `P_A`.
    pub target_poly: FeedbackPolynomial,
    /// `P_S`.
    #[serde(default)]
    pub selector_poly: Option<FeedbackPolynomial>,
    /// `P_B`, alternating step generator only.
    #[serde(default)]
    pub branch_poly: Option<FeedbackPolynomial>,
    #[serde(default)]
    pub asg_target: AsgTarget,
    pub h: usize,
    /// `N` in the decimation models, `M` in the insertion models.
    #[serde(default)]
    pub candidate_len: Option<usize>,
    #[serde(default)]
    pub kmax: Option<usize>,
    #[serde(default)]
    pub exhaustive_fallback: bool,
    #[serde(default)]
    pub relaxation_order: RelaxationOrder,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub trace: bool,
    /// Echoed only; the attack itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl AttackConfig {
    fn base(model: AttackModel, target_poly: FeedbackPolynomial) -> Self {
        AttackConfig {
            model,
            target_poly,
            selector_poly: None,
            branch_poly: None,
            asg_target: AsgTarget::A,
            h: 0,
            candidate_len: None,
            kmax: None,
            exhaustive_fallback: false,
            relaxation_order: RelaxationOrder::LastFixedFirst,
            workers: 1,
            trace: false,
            seed: 0,
        }
    }

    pub fn shrinking(selector: FeedbackPolynomial, target: FeedbackPolynomial) -> Self {
        AttackConfig {
            selector_poly: Some(selector),
            ..Self::base(AttackModel::Shrinking, target)
        }
    }

    pub fn alternating_step(control: FeedbackPolynomial, a: FeedbackPolynomial, b: FeedbackPolynomial) -> Self {
        AttackConfig {
            selector_poly: Some(control),
            branch_poly: Some(b),
            ..Self::base(AttackModel::AlternatingStep, a)
        }
    }

    pub fn generic(model: ModelKind, target: FeedbackPolynomial, kmax: usize) -> Self {
        let m = match model {
            ModelKind::Decimation => AttackModel::GenericDecimation,
            ModelKind::Insertion => AttackModel::GenericInsertion,
        };
        AttackConfig {
            kmax: Some(kmax),
            ..Self::base(m, target)
        }
    }
}

/// Config with every default filled in.
#[doc(hidden)]
#[derive(Clone, Debug)]
pub struct Resolved {
    pub model: ModelKind,
    pub generator: GeneratorKind,
    /// Polynomial of the register under attack.
    pub attacked_poly: FeedbackPolynomial,
    /// The other ASG branch.
    pub other_poly: Option<FeedbackPolynomial>,
    pub selector_poly: Option<FeedbackPolynomial>,
    pub l: usize,
    pub ls: usize,
    pub kmax: usize,
    pub params: HypothesisParams,
    /// ASG attacking B: control bit 1 marks the other branch.
    pub complement_control: bool,
}

impl Resolved {
    pub fn new(config: &AttackConfig) -> Result<Self> {
        let need = |p: &Option<FeedbackPolynomial>, what: &str| {
            p.clone()
                .ok_or_else(|| Error::Config(format!("{what} polynomial required for {:?}", config.model)))
        };
        let (model, generator) = match config.model {
            AttackModel::GenericDecimation => (ModelKind::Decimation, GeneratorKind::Generic),
            AttackModel::GenericInsertion => (ModelKind::Insertion, GeneratorKind::Generic),
            AttackModel::Shrinking => (ModelKind::Decimation, GeneratorKind::Sg),
            AttackModel::AlternatingStep => (ModelKind::Insertion, GeneratorKind::Asg),
        };
        let selector_poly = match generator {
            GeneratorKind::Generic => config.selector_poly.clone(),
            _ => Some(need(&config.selector_poly, "selector")?),
        };
        let ls = selector_poly.as_ref().map_or(0, |p| p.degree());
        let complement_control = generator == GeneratorKind::Asg && config.asg_target == AsgTarget::B;
        let (attacked_poly, other_poly) = if generator == GeneratorKind::Asg {
            let b = need(&config.branch_poly, "branch B")?;
            if complement_control {
                (b, Some(config.target_poly.clone()))
            } else {
                (config.target_poly.clone(), Some(b))
            }
        } else {
            (config.target_poly.clone(), config.branch_poly.clone())
        };
        let natural = match (generator, selector_poly.is_some()) {
            (GeneratorKind::Asg, _) if complement_control => Some(ls),
            (_, true) => Some(ls.saturating_sub(1)),
            (_, false) => None,
        };
        let kmax = config
            .kmax
            .or(natural)
            .ok_or_else(|| Error::Config("kmax required without a selector polynomial".into()))?;
        if kmax == 0 {
            return Err(Error::Config("kmax must be at least 1".into()));
        }
        if generator != GeneratorKind::Generic && ls < 2 {
            return Err(Error::Config("selector degree must be at least 2".into()));
        }
        let l = attacked_poly.degree();
        if config.h > l {
            return Err(Error::HOutOfRange { h: config.h, l });
        }
        Ok(Resolved {
            model,
            generator,
            params: HypothesisParams::new(model, generator, ls),
            attacked_poly,
            other_poly,
            selector_poly,
            l,
            ls,
            kmax,
            complement_control,
        })
    }

    /// `(N, M)` for a trimmed intercepted sequence of length `len`.
    pub fn dimensions(&self, config: &AttackConfig, len: usize) -> Result<(usize, usize)> {
        let (n, m) = match self.model {
            ModelKind::Decimation => (config.candidate_len.unwrap_or_else(|| self.default_n(len)), len),
            ModelKind::Insertion => (len, config.candidate_len.unwrap_or_else(|| self.default_m(len))),
        };
        if m == 0 || n < m {
            return Err(Error::Dimensions { n, m, kmax: self.kmax });
        }
        if n - m > (m + 1) * self.kmax {
            return Err(Error::Infeasible {
                gap: n - m,
                m,
                kmax: self.kmax,
            });
        }
        Ok((n, m))
    }

    fn default_n(&self, m: usize) -> usize {
        match self.generator {
            // selector density is 2^(L_S-1) / (2^L_S - 1)
            GeneratorKind::Sg => {
                let (ones, period) = (1usize << (self.ls - 1), (1usize << self.ls) - 1);
                (m * period + ones / 2) / ones
            }
            _ => m + (m * self.kmax).div_ceil(2),
        }
    }

    fn default_m(&self, n: usize) -> usize {
        let m = match self.generator {
            GeneratorKind::Asg => {
                let period = (1usize << self.ls) - 1;
                let ones = 1usize << (self.ls - 1);
                let kept = if self.complement_control { period - ones } else { ones };
                (n * kept + period / 2) / period
            }
            _ => n - (n * self.kmax).div_ceil(self.kmax + 2),
        };
        m.max(1)
    }

    fn candidate(&self, reg: u64, n: usize, m: usize) -> Bits {
        let len = match self.model {
            ModelKind::Decimation => n,
            ModelKind::Insertion => m,
        };
        self.attacked_poly.sequence_from_u64(reg, len)
    }

    /// `(X, Y)` of the matrix for a candidate.
    fn sides<'a>(&self, candidate: &'a Bits, intercepted: &'a Bits) -> (&'a Bits, &'a Bits) {
        match self.model {
            ModelKind::Decimation => (candidate, intercepted),
            ModelKind::Insertion => (intercepted, candidate),
        }
    }

    fn control_of(&self, mask: &[u8]) -> Bits {
        if self.complement_control {
            mask.iter().map(|b| b ^ 1).collect()
        } else {
            Bits::from_slice(mask)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSolution {
    pub initial_state: Bits,
    pub distance: u32,
    /// Keep-mask over `X`, 1 = kept.
    pub selector: Bits,
    pub noise_positions: Vec<usize>,
    pub recovered_selector_state: Option<Bits>,
    /// The other ASG branch.
    pub recovered_branch_state: Option<Bits>,
    pub consistent: bool,
    pub confirmed_by_discarded: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Solved,
    NoSolutionUnderPattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationKind {
    Original,
    Relaxed { position: usize },
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateOutcome {
    Distance(u32),
    StopColumn { column: usize, threshold: u32 },
    AntiPattern { threshold: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTrace {
    pub state: Bits,
    pub outcome: StateOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExaminedState {
    pub state: Bits,
    pub distance: u32,
    /// Number of shortest source-to-sink paths, saturating.
    pub shortest_paths: u64,
    /// Some solutions were not enumerated.
    pub truncated: bool,
    /// Consistent solutions, confirmed or not.
    pub candidates: Vec<CandidateSolution>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub kind: GenerationKind,
    pub pattern: BitPattern,
    /// Nonzero registers matching the pattern.
    pub states_matching: u64,
    /// Registers of this generation not seen in an earlier one.
    pub states_new: u64,
    pub min_distance: Option<u32>,
    pub threshold: u32,
    pub examined: Vec<ExaminedState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<StateTrace>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub states_enumerated: u64,
    pub matrices_computed: u64,
    pub stopped_early: u64,
    pub states_excluded_by_anti_pattern: u64,
    pub anti_patterns_derived: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub outcome: Outcome,
    pub trimmed: Bits,
    pub discarded: Bits,
    pub hypothesis_counts: Vec<usize>,
    pub n: usize,
    pub m: usize,
    pub kmax: usize,
    pub is_pattern: BitPattern,
    pub generations: Vec<GenerationReport>,
    pub accepted: Vec<CandidateSolution>,
    pub counters: Counters,
    /// `(index of the evaluated state, new threshold)` at every drop.
    pub threshold_trace: Vec<(u64, u32)>,
    pub relaxations_used: usize,
    pub first_generation_threshold: u32,
    pub threshold: u32,
}

impl AttackReport {
    /// Lowest distance of any fully evaluated state.
    pub fn min_distance(&self) -> Option<u32> {
        self.generations.iter().filter_map(|g| g.min_distance).min()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub consistent: bool,
    pub confirmed: bool,
    pub selector_state: Option<Bits>,
    pub branch_state: Option<Bits>,
}

impl Verification {
    fn rejected() -> Self {
        Verification {
            consistent: false,
            confirmed: false,
            selector_state: None,
            branch_state: None,
        }
    }
}

/// Bits of `x` at the zero positions of `mask`.
fn deleted_bits(x: &Bits, mask: &[u8]) -> Bits {
    mask.iter()
        .zip(x.iter())
        .filter(|(k, _)| **k == 0)
        .map(|(_, b)| b)
        .collect()
}

/// Checks one decoded alignment of the candidate from `state` against the
/// generator, and whether the recovered registers, clocked backwards,
/// regenerate `discarded` as the keystream bits right before `intercepted`.
pub fn verify_consistency(
    config: &AttackConfig,
    intercepted: &Bits,
    state: &Bits,
    alignment: &AlignmentSolution,
    discarded: &Bits,
) -> Result<Verification> {
    let r = Resolved::new(config)?;
    Ok(verify(&r, intercepted, state, alignment, discarded))
}

fn verify(r: &Resolved, intercepted: &Bits, state: &Bits, alignment: &AlignmentSolution, discarded: &Bits) -> Verification {
    let mask = alignment.keep_mask.as_slice();
    if !alignment.noise_positions.is_empty() {
        return Verification::rejected();
    }
    let control = r.control_of(mask);
    if let Some(ps) = &r.selector_poly {
        if control.longest_run(0) > r.ls - 1 || !ps.is_consistent(&control) {
            return Verification::rejected();
        }
    } else if Bits::from_slice(mask).longest_run(0) > r.kmax {
        return Verification::rejected();
    }
    let target = LfsrState::new(r.attacked_poly.clone(), state.clone()).expect("register length matches");

    match r.generator {
        GeneratorKind::Sg => {
            let Some(sel) = selector_state(r, &control) else {
                return Verification::rejected();
            };
            let confirmed = reverse_keystream(&sel, &target, None, false, discarded.len()).as_ref() == Some(discarded);
            Verification {
                consistent: true,
                confirmed,
                selector_state: Some(sel.register().clone()),
                branch_state: None,
            }
        }
        GeneratorKind::Asg => {
            let Some(sel) = selector_state(r, &control) else {
                return Verification::rejected();
            };
            let other = r.other_poly.as_ref().expect("resolved ASG has both branches");
            let deleted = deleted_bits(intercepted, mask);
            if !other.is_consistent(&deleted) {
                return Verification::rejected();
            }
            let constraints: Vec<(usize, u8)> = deleted.iter().enumerate().map(|(k, b)| (k + 1, b)).collect();
            let space = match solve_initial_state(other, &constraints) {
                Ok(Some(space)) => space,
                _ => return Verification::rejected(),
            };
            let branches: Vec<LfsrState> = if space.dimension() <= 12 {
                space.states().into_iter().filter(|s| !s.register().is_zero()).collect()
            } else {
                Vec::new()
            };
            if branches.is_empty() && space.dimension() <= 12 {
                return Verification::rejected();
            }
            let hit = branches.iter().find(|b| {
                reverse_keystream(&sel, &target, Some(b), r.complement_control, discarded.len()).as_ref()
                    == Some(discarded)
            });
            let branch_state = match hit {
                Some(b) => Some(b.register().clone()),
                None => space.unique().map(|s| s.register().clone()),
            };
            Verification {
                consistent: true,
                confirmed: hit.is_some(),
                selector_state: Some(sel.register().clone()),
                branch_state,
            }
        }
        GeneratorKind::Generic => {
            if let Some(other) = &r.other_poly {
                if r.model == ModelKind::Insertion && !other.is_consistent(&deleted_bits(intercepted, mask)) {
                    return Verification::rejected();
                }
            }
            let confirmed = match r.model {
                ModelKind::Decimation => extends_decimation(&target, mask, r.kmax, discarded),
                ModelKind::Insertion => extends_insertion(&target, mask, r.kmax, discarded),
            };
            Verification {
                consistent: true,
                confirmed,
                selector_state: None,
                branch_state: None,
            }
        }
    }
}

fn selector_state(r: &Resolved, control: &Bits) -> Option<LfsrState> {
    let ps = r.selector_poly.as_ref()?;
    if control.len() < r.ls {
        return None;
    }
    let reg = control.slice(0, r.ls);
    if reg.is_zero() {
        return None;
    }
    LfsrState::new(ps.clone(), reg).ok()
}

/// The `k` keystream bits preceding the registers' current position, in
/// chronological order. With `branch` set this is the alternating step
/// generator (control 1 clocks the attacked register unless `complement`),
/// otherwise the shrinking generator.
fn reverse_keystream(
    control: &LfsrState,
    target: &LfsrState,
    branch: Option<&LfsrState>,
    complement: bool,
    k: usize,
) -> Option<Bits> {
    let mut out = Vec::with_capacity(k);
    let (mut c, mut t) = (control.clone(), target.clone());
    let mut o = branch.cloned();
    // a nonzero selector emits within 2^L_S clocks
    let limit = k.saturating_mul(1 << control.polynomial().degree().min(20)) + 64;
    for _ in 0..limit {
        if out.len() == k {
            break;
        }
        c = c.reverse_step(1);
        let bit = c.register()[0];
        match o.as_mut() {
            None => {
                t = t.reverse_step(1);
                if bit == 1 {
                    out.push(t.register()[0]);
                }
            }
            Some(other) => {
                let attacked_turn = (bit == 1) != complement;
                if attacked_turn {
                    t = t.reverse_step(1);
                    out.push(t.register()[0]);
                } else {
                    *other = other.reverse_step(1);
                    out.push(other.register()[0]);
                }
            }
        }
    }
    (out.len() == k).then(|| {
        out.reverse();
        Bits::from(out)
    })
}

/// Whether earlier target output can produce `discarded` under the same
/// deletion-run bound, continuing the leading run of `mask`.
fn extends_decimation(target: &LfsrState, mask: &[u8], kmax: usize, discarded: &Bits) -> bool {
    let d = discarded.len();
    if d == 0 {
        return true;
    }
    let Some(first) = mask.iter().position(|&b| b == 1) else {
        return false;
    };
    // back[q] = x_{-q}
    let depth = d * (kmax + 1);
    let mut back = target.preceding(depth).into_vec();
    back.reverse();
    // positions as distance behind x_1: 0 means x_1
    let mut reach: HashSet<isize> = HashSet::from([first as isize]);
    for bit in discarded.iter().collect::<Vec<_>>().into_iter().rev() {
        let mut next = HashSet::new();
        for &p in &reach {
            for q in (p - kmax as isize - 1)..p {
                if q < 0 && (-q - 1) < depth as isize && back[(-q - 1) as usize] == bit {
                    next.insert(q);
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        reach = next;
    }
    true
}

/// Insertion counterpart: each discarded bit is either inserted (runs up to
/// `kmax`, joined with the leading run of `mask`) or the next earlier
/// target bit.
fn extends_insertion(target: &LfsrState, mask: &[u8], kmax: usize, discarded: &Bits) -> bool {
    let d = discarded.len();
    if d == 0 {
        return true;
    }
    let lead = mask.iter().take_while(|&&b| b == 0).count();
    if lead > kmax {
        return false;
    }
    let mut back = target.preceding(d).into_vec();
    back.reverse();
    let mut states: HashSet<(usize, usize)> = HashSet::from([(0, lead)]);
    for bit in discarded.iter().collect::<Vec<_>>().into_iter().rev() {
        let mut next = HashSet::new();
        for &(t, run) in &states {
            if run < kmax {
                next.insert((t, run + 1));
            }
            if back[t] == bit {
                next.insert((t + 1, 0));
            }
        }
        if next.is_empty() {
            return false;
        }
        states = next;
    }
    true
}

struct Engine<'a> {
    config: &'a AttackConfig,
    r: Resolved,
    intercepted: Bits,
    discarded: Bits,
    n: usize,
    m: usize,
    threshold: u32,
    anti: AntiPatternSet,
    evaluated: HashSet<u64>,
    counters: Counters,
    threshold_trace: Vec<(u64, u32)>,
    pool: Option<rayon::ThreadPool>,
}

impl Engine<'_> {
    fn matrix(&self, reg: u64, threshold: u32) -> EditMatrix {
        let cand = self.r.candidate(reg, self.n, self.m);
        let (x, y) = self.r.sides(&cand, &self.intercepted);
        EditMatrix::compute(x, y, self.r.kmax, Some(threshold)).expect("dimensions validated up front")
    }

    fn speculate(&self, batch: &[u64]) -> Vec<Option<EditMatrix>> {
        let t = self.threshold;
        let eval = |&reg: &u64| (self.anti.excludes(reg).is_none()).then(|| self.matrix(reg, t));
        match &self.pool {
            Some(pool) => pool.install(|| batch.par_iter().map(eval).collect()),
            None => batch.iter().map(eval).collect(),
        }
    }

    /// Sweeps one generation; returns `(register, distance)` for states that
    /// were fully evaluated.
    fn sweep(&mut self, states: &[u64], trace: &mut Vec<StateTrace>) -> Vec<(u64, u32)> {
        let workers = self.config.workers.max(1);
        let batch_len = if workers == 1 { 1 } else { BATCH_PER_WORKER * workers };
        let mut done = Vec::new();
        for batch in states.chunks(batch_len) {
            let results = self.speculate(batch);
            for (&reg, scored) in batch.iter().zip(results) {
                let index = self.counters.states_enumerated;
                self.counters.states_enumerated += 1;
                self.evaluated.insert(reg);
                let outcome = if let Some(th) = self.anti.excludes(reg) {
                    self.counters.states_excluded_by_anti_pattern += 1;
                    StateOutcome::AntiPattern { threshold: th }
                } else {
                    let mat = scored.expect("snapshot exclusions are a subset of current ones");
                    self.counters.matrices_computed += 1;
                    match mat.first_stop_column(self.threshold) {
                        Some(column) => {
                            self.counters.stopped_early += 1;
                            let cand = self.r.candidate(reg, self.n, self.m);
                            if let Some(p) = anti_pattern_for(self.r.model, &cand, column, self.n, self.m, self.r.l) {
                                if self.anti.insert(p, self.threshold) {
                                    self.counters.anti_patterns_derived += 1;
                                }
                            }
                            StateOutcome::StopColumn {
                                column,
                                threshold: self.threshold,
                            }
                        }
                        None => {
                            let d = mat.edit_distance().expect("no stop column under the current threshold");
                            if d < self.threshold {
                                self.threshold = d;
                                self.threshold_trace.push((index, d));
                            }
                            done.push((reg, d));
                            StateOutcome::Distance(d)
                        }
                    }
                };
                if self.config.trace {
                    trace.push(StateTrace {
                        state: Bits::from_u64(reg, self.r.l),
                        outcome,
                    });
                }
            }
        }
        done
    }

    fn examine(&self, reg: u64, distance: u32) -> ExaminedState {
        let state = Bits::from_u64(reg, self.r.l);
        let cand = self.r.candidate(reg, self.n, self.m);
        let (x, y) = self.r.sides(&cand, &self.intercepted);
        let graph = InducedGraph::build(x, y, self.r.kmax).expect("dimensions validated up front");
        let shortest_paths = u64::try_from(graph.count_shortest_paths()).unwrap_or(u64::MAX);
        let mut out = ExaminedState {
            state: state.clone(),
            distance,
            shortest_paths,
            truncated: false,
            candidates: Vec::new(),
        };
        // only noise-free alignments can be consistent
        if distance as usize != self.n - self.m {
            return out;
        }
        let r = &self.r;
        let keep = |prefix: &[u8]| {
            let control = r.control_of(prefix);
            if let Some(ps) = &r.selector_poly {
                if !ps.is_consistent(&control) {
                    return false;
                }
            }
            match (&r.other_poly, r.model) {
                (Some(other), ModelKind::Insertion) => other.is_consistent(&deleted_bits(x, prefix)),
                _ => true,
            }
        };
        let found = graph.enumerate_filtered(keep, true, Some(MAX_SOLUTIONS_PER_STATE));
        out.truncated = found.truncated;
        for sol in found.solutions {
            let v = verify(r, &self.intercepted, &state, &sol, &self.discarded);
            if v.consistent {
                out.candidates.push(CandidateSolution {
                    initial_state: state.clone(),
                    distance,
                    selector: sol.keep_mask,
                    noise_positions: sol.noise_positions,
                    recovered_selector_state: v.selector_state,
                    recovered_branch_state: v.branch_state,
                    consistent: true,
                    confirmed_by_discarded: v.confirmed,
                });
            }
        }
        out
    }
}

/// Runs the attack on an intercepted keystream.
pub fn run_attack(config: &AttackConfig, intercepted: &Bits) -> Result<AttackReport> {
    if intercepted.is_empty() {
        return Err(Error::Config("intercepted sequence is empty".into()));
    }
    let r = Resolved::new(config)?;
    let trim = trim_for_h(intercepted, config.h, r.l, &r.params)?;
    let (n, m) = r.dimensions(config, trim.trimmed.len())?;
    let other_len = match r.model {
        ModelKind::Decimation => n,
        ModelKind::Insertion => m,
    };
    let is_pattern = build_is_pattern(&trim.trimmed, r.l, other_len, &r.params);

    let mut plan = vec![(GenerationKind::Original, is_pattern.clone())];
    let positions = {
        let mut p = is_pattern.fixed_positions();
        if config.relaxation_order == RelaxationOrder::LastFixedFirst {
            p.reverse();
        }
        p
    };
    for (position, pattern) in positions.into_iter().zip(relaxations(&is_pattern, config.relaxation_order)) {
        plan.push((GenerationKind::Relaxed { position }, pattern));
    }
    if config.exhaustive_fallback {
        plan.push((GenerationKind::Fallback, BitPattern::free(r.l)));
    }

    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?,
        )
    } else {
        None
    };
    let mut engine = Engine {
        config,
        r,
        intercepted: trim.trimmed.clone(),
        discarded: trim.discarded.clone(),
        n,
        m,
        threshold: n as u32,
        anti: AntiPatternSet::new(),
        evaluated: HashSet::new(),
        counters: Counters::default(),
        threshold_trace: Vec::new(),
        pool,
    };

    let mut generations = Vec::new();
    let mut accepted = Vec::new();
    let mut relaxations_used = 0;
    let mut first_generation_threshold = engine.threshold;
    for (g, (kind, pattern)) in plan.into_iter().enumerate() {
        if pattern.free_count() > MAX_FREE_BITS {
            return Err(Error::TooLarge(format!("pattern {pattern} leaves {} free bits", pattern.free_count())));
        }
        if matches!(kind, GenerationKind::Relaxed { .. }) {
            relaxations_used += 1;
        }
        let states: Vec<u64> = pattern.states().filter(|s| !engine.evaluated.contains(s)).collect();
        let mut trace = Vec::new();
        let done = engine.sweep(&states, &mut trace);
        let t = engine.threshold;
        let examined: Vec<ExaminedState> = done
            .iter()
            .filter(|(_, d)| *d == t)
            .map(|&(reg, d)| engine.examine(reg, d))
            .collect();
        if g == 0 {
            first_generation_threshold = t;
        }
        let gen_accepted: Vec<CandidateSolution> = examined
            .iter()
            .flat_map(|e| e.candidates.iter().filter(|c| c.confirmed_by_discarded).cloned())
            .collect();
        generations.push(GenerationReport {
            kind,
            states_matching: u64::try_from(pattern.count_matching()).unwrap_or(u64::MAX),
            states_new: states.len() as u64,
            pattern,
            min_distance: done.iter().map(|(_, d)| *d).min(),
            threshold: t,
            examined,
            trace,
        });
        if !gen_accepted.is_empty() {
            accepted = gen_accepted;
            break;
        }
    }

    Ok(AttackReport {
        outcome: if accepted.is_empty() {
            Outcome::NoSolutionUnderPattern
        } else {
            Outcome::Solved
        },
        trimmed: trim.trimmed,
        discarded: trim.discarded,
        hypothesis_counts: trim.counts,
        n,
        m,
        kmax: engine.r.kmax,
        is_pattern,
        generations,
        accepted,
        counters: engine.counters,
        threshold_trace: engine.threshold_trace,
        relaxations_used,
        first_generation_threshold,
        threshold: engine.threshold,
    })
}
