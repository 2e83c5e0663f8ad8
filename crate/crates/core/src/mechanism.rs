//! Repeated-game mechanism: master rounds, the pure trigger strategy and the mixed
//! strategy with a sliding-window Chernoff deviation test.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::payoff::{self, GameError, MechanismFlavor, PayoffParams, RoundOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("a round needs at least one worker")]
    NoWorkers,
    #[error("distinct answer count must be at least 1, got {0}")]
    NoAnswers(usize),
    #[error("histogram counts sum to {sum}, expected {n}")]
    HistogramMismatch { sum: usize, n: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("punishment must last at least one round")]
    ZeroPunishment,
    #[error(transparent)]
    Payoff(#[from] GameError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

fn check_probability(name: &'static str, value: f64) -> Result<(), MechanismError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(MechanismError::InvalidProbability { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Honest,
    Cheat,
}

impl Action {
    pub fn is_cheat(self) -> bool {
        matches!(self, Action::Cheat)
    }

    /// Cheat with probability `pc`, consuming exactly one uniform draw.
    pub fn draw<R: Rng + ?Sized>(pc: f64, rng: &mut R) -> Action {
        if rng.gen::<f64>() < pc {
            Action::Cheat
        } else {
            Action::Honest
        }
    }
}

/// Opaque answer identifier. All cheaters return the same wrong value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AnswerId(pub u8);

impl AnswerId {
    pub const CORRECT: AnswerId = AnswerId(0);
    pub const WRONG: AnswerId = AnswerId(1);

    fn of(action: Action) -> Self {
        match action {
            Action::Honest => Self::CORRECT,
            Action::Cheat => Self::WRONG,
        }
    }
}

/// What the master tells the workers after a round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Broadcast {
    /// Number of different answers received.
    DistinctCount(usize),
    /// Each answer received with its multiplicity, in answer order, zero counts omitted.
    Histogram(Vec<(AnswerId, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BroadcastMode {
    DistinctCount,
    Histogram,
}

pub fn histogram(actions: &[Action]) -> Vec<(AnswerId, usize)> {
    let wrong = actions.iter().filter(|a| a.is_cheat()).count();
    let right = actions.len() - wrong;
    [
        (AnswerId::of(Action::Honest), right),
        (AnswerId::of(Action::Cheat), wrong),
    ]
    .into_iter()
    .filter(|&(_, c)| c > 0)
    .collect()
}

/// Plays one round given the workers' actions: draws the check with probability
/// `pv`, settles the majority (a fair coin on an exact tie) and
/// resolves every payoff.
pub fn play_round<R: Rng + ?Sized>(
    pv: f64,
    actions: &[Action],
    flavor: MechanismFlavor,
    params: &PayoffParams,
    rng: &mut R,
) -> Result<RoundOutcome, MechanismError> {
    let n = actions.len();
    if n == 0 {
        return Err(MechanismError::NoWorkers);
    }
    check_probability("check probability", pv)?;
    let verified = rng.gen::<f64>() < pv;
    let f_count = actions.iter().filter(|a| a.is_cheat()).count();
    let majority_cheats = match (2 * f_count).cmp(&n) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => rng.gen::<bool>(),
    };
    let worker_payoffs = actions
        .iter()
        .map(|a| {
            payoff::worker_payoff(
                flavor,
                a.is_cheat(),
                verified,
                f_count,
                n,
                majority_cheats,
                params,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let master_payoff =
        payoff::master_payoff(flavor, verified, f_count, n, majority_cheats, params)?;
    Ok(RoundOutcome {
        verified,
        f_count,
        majority_cheats,
        master_correct: payoff::master_correct(flavor, verified, f_count, n, majority_cheats),
        worker_payoffs,
        master_payoff,
    })
}

// ---------------------------------------------------------------------------
// Master

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterState {
    pv: f64,
    broadcast_mode: BroadcastMode,
}

impl MasterState {
    pub fn new(pv: f64, broadcast_mode: BroadcastMode) -> Result<Self, MechanismError> {
        check_probability("pv", pv)?;
        Ok(Self { pv, broadcast_mode })
    }

    pub fn pv(&self) -> f64 {
        self.pv
    }

    pub fn broadcast_mode(&self) -> BroadcastMode {
        self.broadcast_mode
    }

    pub fn round<R: Rng + ?Sized>(
        &self,
        actions: &[Action],
        flavor: MechanismFlavor,
        params: &PayoffParams,
        rng: &mut R,
    ) -> Result<(RoundOutcome, Broadcast), MechanismError> {
        let outcome = play_round(self.pv, actions, flavor, params, rng)?;
        let hist = histogram(actions);
        let broadcast = match self.broadcast_mode {
            BroadcastMode::DistinctCount => Broadcast::DistinctCount(hist.len()),
            BroadcastMode::Histogram => Broadcast::Histogram(hist),
        };
        Ok((outcome, broadcast))
    }
}

// ---------------------------------------------------------------------------
// Pure strategies

/// Trigger strategy: honest until the master reports more than one distinct answer,
/// then cheat for `punishment_rounds` rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureWorkerState {
    strategy: Action,
    punishment_rounds: u32,
    punish_rounds_left: u32,
}

impl PureWorkerState {
    pub fn new(punishment_rounds: u32) -> Result<Self, MechanismError> {
        if punishment_rounds == 0 {
            return Err(MechanismError::ZeroPunishment);
        }
        Ok(Self {
            strategy: Action::Honest,
            punishment_rounds,
            punish_rounds_left: 0,
        })
    }

    pub fn strategy(&self) -> Action {
        self.strategy
    }

    pub fn is_punishing(&self) -> bool {
        self.punish_rounds_left > 0
    }

    pub fn decide(&self) -> Action {
        self.strategy
    }

    /// Consumes the master's distinct-answer count for the round just played.
    /// Returns `true` when the trigger fired.
    pub fn observe(&mut self, distinct_answers: usize) -> Result<bool, MechanismError> {
        if distinct_answers < 1 {
            return Err(MechanismError::NoAnswers(distinct_answers));
        }
        self.punish_rounds_left = self.punish_rounds_left.saturating_sub(1);
        if distinct_answers > 1 {
            self.strategy = Action::Cheat;
            self.punish_rounds_left = self.punishment_rounds;
            return Ok(true);
        }
        if self.punish_rounds_left == 0 {
            self.strategy = Action::Honest;
        }
        Ok(false)
    }
}

// ---------------------------------------------------------------------------
// Mixed strategies

#[derive(Debug, Clone, Copy, PartialEq)]
struct WindowTest {
    decidable: bool,
    high: usize,
    low: Option<usize>,
}

/// Bounded history of per-round incorrect-answer counts and the Chernoff test over it.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationDetector {
    cap: usize,
    window: VecDeque<usize>,
    // tests[r - 1] holds the thresholds for the r most recent rounds
    tests: Vec<WindowTest>,
}

impl DeviationDetector {
    pub fn new(n: usize, pc: f64, eps: f64) -> Result<Self, MechanismError> {
        let cap = analysis::chernoff_window(n, pc, eps)?;
        let tests = (1..=cap)
            .map(|r| {
                let delta = analysis::chernoff_delta(r, n, pc, eps)?;
                Ok(WindowTest {
                    decidable: delta < 1.0,
                    high: analysis::high_threshold(delta, n, pc),
                    low: analysis::low_threshold(delta, n, pc),
                })
            })
            .collect::<Result<_, AnalysisError>>()?;
        Ok(Self {
            cap,
            window: VecDeque::with_capacity(cap + 1),
            tests,
        })
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    /// Oldest first.
    pub fn window(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.window.iter().copied()
    }

    pub fn record(&mut self, incorrect: usize) {
        self.window.push_back(incorrect);
        if self.window.len() > self.cap {
            self.window.pop_front();
        }
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }

    fn fires(test: &WindowTest, min: usize, max: usize) -> bool {
        test.decidable && (min >= test.high || test.low.is_some_and(|low| max <= low))
    }

    /// Scans `r = 1, 2, ...` over the most recent entries and returns the first `r`
    /// whose test fires.
    pub fn scan(&self) -> Option<usize> {
        let mut min = usize::MAX;
        let mut max = 0;
        for (i, &count) in self.window.iter().rev().enumerate() {
            min = min.min(count);
            max = max.max(count);
            if Self::fires(&self.tests[i], min, max) {
                return Some(i + 1);
            }
        }
        None
    }

    /// The single test over exactly the `r` most recent entries.
    pub fn test_at(&self, r: usize) -> bool {
        if r == 0 || r > self.window.len() {
            return false;
        }
        let recent = self.window.iter().rev().take(r);
        let (min, max) = recent.fold((usize::MAX, 0), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        Self::fires(&self.tests[r - 1], min, max)
    }
}

/// Worker of the mixed-strategy mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedWorkerState {
    n: usize,
    pc_agreed: f64,
    eps: f64,
    punishment_rounds: u32,
    punish_rounds_left: u32,
    detector: DeviationDetector,
}

impl MixedWorkerState {
    pub fn new(
        n: usize,
        pc_agreed: f64,
        eps: f64,
        punishment_rounds: u32,
    ) -> Result<Self, MechanismError> {
        check_probability("pc_agreed", pc_agreed)?;
        if punishment_rounds == 0 {
            return Err(MechanismError::ZeroPunishment);
        }
        Ok(Self {
            n,
            pc_agreed,
            eps,
            punishment_rounds,
            punish_rounds_left: 0,
            detector: DeviationDetector::new(n, pc_agreed, eps)?,
        })
    }

    pub fn pc_agreed(&self) -> f64 {
        self.pc_agreed
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn pc_current(&self) -> f64 {
        if self.punish_rounds_left > 0 {
            1.0
        } else {
            self.pc_agreed
        }
    }

    pub fn punish_rounds_left(&self) -> u32 {
        self.punish_rounds_left
    }

    pub fn is_punishing(&self) -> bool {
        self.punish_rounds_left > 0
    }

    pub fn window_cap(&self) -> usize {
        self.detector.capacity()
    }

    pub fn detector(&self) -> &DeviationDetector {
        &self.detector
    }

    pub fn decide<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        Action::draw(self.pc_current(), rng)
    }

    /// Consumes the master's histogram for the round just played. Returns the
    /// number of rounds `r` whose test started a punishment, if any.
    pub fn observe(
        &mut self,
        histogram: &[(AnswerId, usize)],
        correct: AnswerId,
    ) -> Result<Option<usize>, MechanismError> {
        let sum: usize = histogram.iter().map(|&(_, c)| c).sum();
        if sum != self.n {
            return Err(MechanismError::HistogramMismatch { sum, n: self.n });
        }
        self.punish_rounds_left = self.punish_rounds_left.saturating_sub(1);

        let incorrect = histogram
            .iter()
            .filter(|&&(id, _)| id != correct)
            .map(|&(_, c)| c)
            .sum();
        self.detector.record(incorrect);
        let fired = self.detector.scan();
        if fired.is_some() {
            self.punish_rounds_left = self.punishment_rounds;
            self.detector.clear();
        }
        Ok(fired)
    }
}
