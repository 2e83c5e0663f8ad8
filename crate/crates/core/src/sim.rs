//! Round-by-round simulation of a mechanism under an injected deviation, plus
//! parameter sweeps over many independent scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::baselines::{self, EdMasterState, EdWorkerState};
use crate::mechanism::{
    Action, AnswerId, Broadcast, BroadcastMode, MasterState, MechanismError, MixedWorkerState,
    PureWorkerState,
};
use crate::payoff::{MechanismFlavor, MechanismKind, PayoffParams, RoundOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidScenario(msg.into())
}

mod defaults {
    pub fn rg_pv() -> f64 {
        0.17
    }
    pub fn rg_pc() -> f64 {
        0.1
    }
    pub fn eps() -> f64 {
        0.01
    }
    pub fn punishment_rounds() -> u32 {
        1
    }
    pub fn pa_initial() -> f64 {
        0.5
    }
    pub fn pa_min() -> f64 {
        0.01
    }
    pub fn tau() -> f64 {
        0.5
    }
    pub fn aspiration() -> f64 {
        0.1
    }
    pub fn alpha() -> f64 {
        0.01
    }
    pub fn wct() -> f64 {
        0.1
    }
    pub fn rounds() -> u32 {
        200
    }
    pub fn deviation_round() -> u32 {
        1
    }
}

/// Which mechanism to run and its tunables. Defaults are the simulation values of
/// the reference experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSpec {
    RgPure {
        /// Verification probability; `None` picks the midpoint of the feasible window.
        #[serde(default)]
        pv: Option<f64>,
        #[serde(default = "defaults::punishment_rounds")]
        punishment_rounds: u32,
        /// Cheat probability used only to scale the penalty `wpc = wba / (n pc)`.
        #[serde(default = "defaults::rg_pc")]
        pc_reference: f64,
    },
    RgMixed {
        #[serde(default = "defaults::rg_pv")]
        pv: f64,
        /// Agreed equilibrium cheat probability.
        #[serde(default = "defaults::rg_pc")]
        pc: f64,
        /// Probability of an erroneous punishment.
        #[serde(default = "defaults::eps")]
        eps: f64,
        #[serde(default = "defaults::punishment_rounds")]
        punishment_rounds: u32,
        /// When both are set, the correctness floor on `pv` is checked as well.
        #[serde(default)]
        xi: Option<f64>,
        #[serde(default)]
        phi: Option<f64>,
    },
    Ed {
        #[serde(default = "defaults::pa_initial")]
        pa_initial: f64,
        #[serde(default = "defaults::pa_min")]
        pa_min: f64,
        #[serde(default = "defaults::tau")]
        tau: f64,
        #[serde(default = "defaults::aspiration")]
        aspiration: f64,
        #[serde(default = "defaults::alpha")]
        alpha_m: f64,
        #[serde(default = "defaults::alpha")]
        alpha_w: f64,
    },
    Ros {
        /// `None` uses `(wba + 0.1) / (3 wba) + 0.01`.
        #[serde(default)]
        pv: Option<f64>,
    },
}

impl MechanismSpec {
    pub fn rg_pure() -> Self {
        MechanismSpec::RgPure {
            pv: None,
            punishment_rounds: defaults::punishment_rounds(),
            pc_reference: defaults::rg_pc(),
        }
    }

    pub fn rg_mixed() -> Self {
        MechanismSpec::RgMixed {
            pv: defaults::rg_pv(),
            pc: defaults::rg_pc(),
            eps: defaults::eps(),
            punishment_rounds: defaults::punishment_rounds(),
            xi: None,
            phi: None,
        }
    }

    pub fn ed() -> Self {
        MechanismSpec::Ed {
            pa_initial: defaults::pa_initial(),
            pa_min: defaults::pa_min(),
            tau: defaults::tau(),
            aspiration: defaults::aspiration(),
            alpha_m: defaults::alpha(),
            alpha_w: defaults::alpha(),
        }
    }

    pub fn ros() -> Self {
        MechanismSpec::Ros { pv: None }
    }

    pub fn kind(&self) -> MechanismKind {
        match self {
            MechanismSpec::RgPure { .. } => MechanismKind::RgPure,
            MechanismSpec::RgMixed { .. } => MechanismKind::RgMixed,
            MechanismSpec::Ed { .. } => MechanismKind::Ed,
            MechanismSpec::Ros { .. } => MechanismKind::Ros,
        }
    }

    /// Cheat probability a compliant worker uses.
    pub fn follower_pc(&self) -> f64 {
        match self {
            MechanismSpec::RgMixed { pc, .. } => *pc,
            _ => 0.0,
        }
    }
}

/// Penalty unit: `wba / (n pc)` under proportional punishment, `wba` otherwise.
pub fn derive_wpc(flavor: MechanismFlavor, wba: f64, n: usize, pc: f64) -> Result<f64, SimError> {
    if flavor.kind().is_repeated_game() {
        if pc.is_nan() || pc <= 0.0 || n == 0 {
            return Err(invalid(format!(
                "proportional penalty needs pc > 0 and n > 0, got pc={pc}, n={n}"
            )));
        }
        Ok(wba / (n as f64 * pc))
    } else {
        Ok(wba)
    }
}

/// The payoff set of the reference experiments for a given `n` and `wba`.
pub fn reference_params(
    mechanism: &MechanismSpec,
    n: usize,
    wba: f64,
    wct: f64,
) -> Result<PayoffParams, SimError> {
    let pc = match mechanism {
        MechanismSpec::RgPure { pc_reference, .. } => *pc_reference,
        MechanismSpec::RgMixed { pc, .. } => *pc,
        _ => 0.0,
    };
    let wpc = derive_wpc(mechanism.kind().into(), wba, n, pc)?;
    let scale = n as f64 * wba;
    Ok(PayoffParams {
        wpc,
        wct,
        wba,
        mpw: scale,
        mca: wba,
        mcv: scale,
        mbr: scale,
    })
}

/// A single simulated run: `deviator_count` workers switch to `deviator_pc` at
/// `deviation_round`; the rest follow the mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub mechanism: MechanismSpec,
    pub wba: f64,
    #[serde(default = "defaults::wct")]
    pub wct: f64,
    /// Replaces the payoff set derived from `n`, `wba` and `wct`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PayoffParams>,
    /// Starting cheat probability of the followers; only adjustable for ED and ROS.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follower_pc: Option<f64>,
    /// Defaults to `ceil(n / 2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviator_count: Option<usize>,
    pub deviator_pc: f64,
    #[serde(default = "defaults::rounds")]
    pub rounds: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::deviation_round")]
    pub deviation_round: u32,
    /// Per-round probability of a fresh deviation episode after the first one.
    #[serde(default)]
    pub recurrence_rate: f64,
}

impl Scenario {
    pub fn new(mechanism: MechanismSpec, n: usize, wba: f64, deviator_pc: f64, seed: u64) -> Self {
        Self {
            n,
            mechanism,
            wba,
            wct: defaults::wct(),
            params: None,
            follower_pc: None,
            deviator_count: None,
            deviator_pc,
            rounds: defaults::rounds(),
            seed,
            deviation_round: defaults::deviation_round(),
            recurrence_rate: 0.0,
        }
    }

    pub fn deviators(&self) -> usize {
        self.deviator_count.unwrap_or(self.n.div_ceil(2))
    }

    pub fn follower_pc(&self) -> f64 {
        self.follower_pc
            .unwrap_or_else(|| self.mechanism.follower_pc())
    }

    pub fn payoff_params(&self) -> Result<PayoffParams, SimError> {
        let p = match self.params {
            Some(p) => p,
            None => reference_params(&self.mechanism, self.n, self.wba, self.wct)?,
        };
        p.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.deviators() > self.n {
            return Err(invalid(format!(
                "deviator_count {} exceeds n = {}",
                self.deviators(),
                self.n
            )));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds must be at least 1"));
        }
        prob("deviator_pc", self.deviator_pc)?;
        prob("recurrence_rate", self.recurrence_rate)?;
        if let Some(pc) = self.follower_pc {
            prob("follower_pc", pc)?;
            if self.mechanism.kind().is_repeated_game() && pc != self.mechanism.follower_pc() {
                return Err(invalid(
                    "follower_pc is fixed by the agreed equilibrium for repeated-game mechanisms",
                ));
            }
        }
        match &self.mechanism {
            MechanismSpec::RgPure {
                pv,
                punishment_rounds,
                ..
            } => {
                if let Some(pv) = pv {
                    prob("pv", *pv)?;
                }
                if *punishment_rounds == 0 {
                    return Err(invalid("punishment_rounds must be at least 1"));
                }
            }
            MechanismSpec::RgMixed {
                pv,
                pc,
                eps,
                punishment_rounds,
                ..
            } => {
                prob("pv", *pv)?;
                if !(*pc > 0.0 && *pc <= 1.0) {
                    return Err(invalid(format!("pc must lie in (0, 1], got {pc}")));
                }
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
                }
                if *punishment_rounds == 0 {
                    return Err(invalid("punishment_rounds must be at least 1"));
                }
            }
            MechanismSpec::Ed {
                pa_initial, pa_min, ..
            } => {
                prob("pa_initial", *pa_initial)?;
                prob("pa_min", *pa_min)?;
            }
            MechanismSpec::Ros { pv } => {
                if let Some(pv) = pv {
                    prob("pv", *pv)?;
                }
            }
        }
        self.payoff_params()?;
        Ok(())
    }
}

/// A feasibility problem found before a run. Runs proceed regardless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimWarning {
    pub check: String,
    pub detail: String,
}

impl SimWarning {
    fn new(check: &str, detail: impl Into<String>) -> Self {
        Self {
            check: check.to_string(),
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for SimWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.check, self.detail)
    }
}

/// One row of a per-round trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: u32,
    pub outcome: RoundOutcome,
    /// `None` when every worker is a deviator.
    pub mean_follower_payoff: Option<f64>,
    pub punishment_active: bool,
    /// Cheat probability each worker used this round.
    pub worker_pc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rounds: u32,
    pub correct_rounds: u32,
    pub cumulative_master_utility: f64,
    /// Mean over followers of each follower's cumulative utility.
    pub cumulative_follower_utility: f64,
    pub detection_round: Option<u32>,
    pub convergence_round: Option<u32>,
    pub warnings: Vec<SimWarning>,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRow>>,
}

/// Resolved verification probability of a scenario, where the mechanism has one.
pub fn resolved_pv(
    spec: &MechanismSpec,
    params: &PayoffParams,
    n: usize,
) -> Result<Option<f64>, SimError> {
    Ok(match spec {
        MechanismSpec::RgPure { pv: Some(pv), .. } => Some(*pv),
        MechanismSpec::RgPure { pv: None, .. } => {
            let (lo, hi) = analysis::pure_pv_bounds(params, n)?;
            Some(0.5 * (lo + hi))
        }
        MechanismSpec::RgMixed { pv, .. } => Some(*pv),
        MechanismSpec::Ros { pv: Some(pv) } => Some(*pv),
        MechanismSpec::Ros { pv: None } => Some(baselines::ros_pv(params).pv),
        MechanismSpec::Ed { .. } => None,
    })
}

/// Feasibility checks for a scenario against the closed-form conditions.
pub fn feasibility_warnings(s: &Scenario) -> Result<Vec<SimWarning>, SimError> {
    let params = s.payoff_params()?;
    let n = s.n;
    let mut out = Vec::new();
    match &s.mechanism {
        MechanismSpec::RgPure { pv, .. } => match analysis::pure_pv_bounds(&params, n) {
            Err(AnalysisError::Infeasible(inf)) => {
                out.push(SimWarning::new("pure_premise", inf.to_string()))
            }
            Err(e) => return Err(e.into()),
            Ok((lo, hi)) => {
                if let Some(pv) = pv {
                    if !(*pv > lo && *pv < hi) {
                        out.push(SimWarning::new(
                            "pure_pv_window",
                            format!("pv = {pv} outside ({lo}, {hi})"),
                        ));
                    }
                }
            }
        },
        MechanismSpec::RgMixed {
            pv,
            pc,
            eps,
            xi,
            phi,
            ..
        } => {
            if let Err(AnalysisError::Infeasible(inf)) = analysis::mixed_minmax(&params, n, *pv) {
                out.push(SimWarning::new("mixed_minmax", inf.to_string()));
            }
            if let (Some(xi), Some(phi)) = (xi, phi) {
                match analysis::mixed_pv_floors(&params, n, *pc, *xi, *phi) {
                    Ok(bounds) => {
                        for v in bounds.violations(*pv) {
                            out.push(SimWarning::new("mixed_pv_floor", v.to_string()));
                        }
                    }
                    Err(AnalysisError::Infeasible(inf)) => {
                        out.push(SimWarning::new("mixed_pc_cap", inf.to_string()))
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let table = analysis::delta_table(n, *pc, *eps)?;
            if table.guaranteed_range_empty {
                out.push(SimWarning::new(
                    "deviation_test_range_empty",
                    format!("1/(n pc) = {} >= 1", 1.0 / (n as f64 * pc)),
                ));
            }
            if !table.any_decidable {
                out.push(SimWarning::new(
                    "deviation_test_undecidable",
                    format!("delta >= 1 for every r <= {}", table.window),
                ));
            }
        }
        MechanismSpec::Ros { pv } => {
            let reference = baselines::ros_pv(&params);
            let pv = pv.unwrap_or(reference.pv);
            if pv <= reference.one_shot_floor {
                out.push(SimWarning::new(
                    "ros_pv_floor",
                    format!("pv = {pv} <= {}", reference.one_shot_floor),
                ));
            }
        }
        MechanismSpec::Ed { .. } => {}
    }
    Ok(out)
}

enum Agents {
    Pure {
        master: MasterState,
        workers: Vec<PureWorkerState>,
    },
    Mixed {
        master: MasterState,
        workers: Vec<MixedWorkerState>,
    },
    Ed {
        master: EdMasterState,
        workers: Vec<EdWorkerState>,
    },
    Ros {
        pv: f64,
        pcs: Vec<f64>,
    },
}

/// Independent random streams: one for the master, one for the deviation schedule and
/// one per worker, all derived from the scenario seed.
struct Streams {
    master: ChaCha8Rng,
    schedule: ChaCha8Rng,
    workers: Vec<ChaCha8Rng>,
}

impl Streams {
    fn new(seed: u64, n: usize) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            master: stream(0),
            schedule: stream(1),
            workers: (0..n as u64).map(|i| stream(i + 2)).collect(),
        }
    }
}

pub fn run_scenario(s: &Scenario) -> Result<RunMetrics, SimError> {
    run(s, false)
}

pub fn run_scenario_with_trace(s: &Scenario) -> Result<RunMetrics, SimError> {
    run(s, true)
}

fn run(s: &Scenario, trace: bool) -> Result<RunMetrics, SimError> {
    s.validate()?;
    let warnings = feasibility_warnings(s)?;
    let params = s.payoff_params()?;
    let n = s.n;
    let deviators = s.deviators();
    let followers = n - deviators;
    let flavor: MechanismFlavor = s.mechanism.kind().into();
    let pv = resolved_pv(&s.mechanism, &params, n)?;

    let mut agents = match &s.mechanism {
        MechanismSpec::RgPure {
            punishment_rounds, ..
        } => Agents::Pure {
            master: MasterState::new(pv.unwrap_or(0.0), BroadcastMode::DistinctCount)?,
            workers: (0..n)
                .map(|_| PureWorkerState::new(*punishment_rounds))
                .collect::<Result<_, _>>()?,
        },
        MechanismSpec::RgMixed {
            pc,
            eps,
            punishment_rounds,
            ..
        } => Agents::Mixed {
            master: MasterState::new(pv.unwrap_or(0.0), BroadcastMode::Histogram)?,
            workers: (0..n)
                .map(|_| MixedWorkerState::new(n, *pc, *eps, *punishment_rounds))
                .collect::<Result<_, _>>()?,
        },
        MechanismSpec::Ed {
            pa_initial,
            pa_min,
            tau,
            aspiration,
            alpha_m,
            alpha_w,
        } => Agents::Ed {
            master: EdMasterState::new(*pa_initial, *pa_min, *alpha_m, *tau),
            workers: (0..n)
                .map(|_| EdWorkerState::new(s.follower_pc(), *aspiration, *alpha_w))
                .collect(),
        },
        MechanismSpec::Ros { .. } => Agents::Ros {
            pv: pv.unwrap_or(0.0),
            pcs: vec![s.follower_pc(); n],
        },
    };

    let mut streams = Streams::new(s.seed, n);
    // RG deviators keep deviating until punished
    let mut deviating = vec![false; deviators];
    let mut actions = vec![Action::Honest; n];
    let mut worker_pc = vec![0.0; n];
    let mut follower_totals = vec![0.0; followers];

    let mut correct_rounds = 0u32;
    let mut master_total = 0.0;
    let mut detection_round = None;
    let mut last_nonzero_pc_round = 0u32;
    let mut rows = trace.then(|| Vec::with_capacity(s.rounds as usize));

    for round in 1..=s.rounds {
        let episode = round == s.deviation_round
            || (s.recurrence_rate > 0.0
                && round > s.deviation_round
                && streams.schedule.gen::<f64>() < s.recurrence_rate);
        if episode {
            match &mut agents {
                Agents::Pure { .. } | Agents::Mixed { .. } => deviating.fill(true),
                Agents::Ed { workers, .. } => {
                    for w in &mut workers[..deviators] {
                        w.pc = s.deviator_pc;
                    }
                }
                Agents::Ros { pcs, .. } => pcs[..deviators].fill(s.deviator_pc),
            }
        }

        let mut punishment_active = false;
        for i in 0..n {
            let rng = &mut streams.workers[i];
            let deviant = i < deviators && deviating[i];
            let (pc, action) = match &agents {
                Agents::Pure { workers, .. } => {
                    let w = &workers[i];
                    punishment_active |= w.is_punishing();
                    if w.is_punishing() {
                        (1.0, w.decide())
                    } else if deviant {
                        (s.deviator_pc, Action::draw(s.deviator_pc, rng))
                    } else {
                        let a = w.decide();
                        (if a.is_cheat() { 1.0 } else { 0.0 }, a)
                    }
                }
                Agents::Mixed { workers, .. } => {
                    let w = &workers[i];
                    punishment_active |= w.is_punishing();
                    let pc = if !w.is_punishing() && deviant {
                        s.deviator_pc
                    } else {
                        w.pc_current()
                    };
                    (pc, Action::draw(pc, rng))
                }
                Agents::Ed { workers, .. } => (workers[i].pc, workers[i].decide(rng)),
                Agents::Ros { pcs, .. } => (pcs[i], Action::draw(pcs[i], rng)),
            };
            worker_pc[i] = pc;
            actions[i] = action;
        }

        let outcome = match &mut agents {
            Agents::Pure { master, workers } => {
                let (outcome, broadcast) =
                    master.round(&actions, flavor, &params, &mut streams.master)?;
                let Broadcast::DistinctCount(distinct) = broadcast else {
                    unreachable!("pure master broadcasts distinct counts")
                };
                let mut fired = false;
                for w in workers.iter_mut() {
                    fired |= w.observe(distinct)?;
                }
                if fired {
                    detection_round.get_or_insert(round);
                    deviating.fill(false);
                }
                outcome
            }
            Agents::Mixed { master, workers } => {
                let (outcome, broadcast) =
                    master.round(&actions, flavor, &params, &mut streams.master)?;
                let Broadcast::Histogram(hist) = broadcast else {
                    unreachable!("mixed master broadcasts histograms")
                };
                let mut fired = false;
                for w in workers.iter_mut() {
                    fired |= w.observe(&hist, AnswerId::CORRECT)?.is_some();
                }
                if fired {
                    detection_round.get_or_insert(round);
                    deviating.fill(false);
                }
                outcome
            }
            Agents::Ed { master, workers } => {
                baselines::ed_round(workers, &actions, master, &params, &mut streams.master)?
            }
            Agents::Ros { pv, .. } => {
                baselines::ros_round(*pv, &actions, &params, &mut streams.master)?
            }
        };

        if worker_pc.iter().any(|&pc| pc > 0.0) {
            last_nonzero_pc_round = round;
        }
        if outcome.master_correct {
            correct_rounds += 1;
        }
        master_total += outcome.master_payoff;
        for (total, &u) in follower_totals
            .iter_mut()
            .zip(&outcome.worker_payoffs[deviators..])
        {
            *total += u;
        }
        if let Some(rows) = rows.as_mut() {
            let follower_payoffs = &outcome.worker_payoffs[deviators..];
            let mean_follower_payoff = (!follower_payoffs.is_empty())
                .then(|| follower_payoffs.iter().sum::<f64>() / follower_payoffs.len() as f64);
            rows.push(TraceRow {
                round,
                outcome,
                mean_follower_payoff,
                punishment_active,
                worker_pc: worker_pc.clone(),
            });
        }
    }

    let convergence_round = match s.mechanism {
        MechanismSpec::Ed { .. } if last_nonzero_pc_round < s.rounds => {
            Some(last_nonzero_pc_round + 1)
        }
        _ => None,
    };
    let cumulative_follower_utility = if followers == 0 {
        0.0
    } else {
        follower_totals.iter().sum::<f64>() / followers as f64
    };

    Ok(RunMetrics {
        rounds: s.rounds,
        correct_rounds,
        cumulative_master_utility: master_total,
        cumulative_follower_utility,
        detection_round,
        convergence_round,
        warnings,
        trace: rows,
    })
}

/// Each cell of a sweep with its own outcome.
pub type SweepResults = Vec<(Scenario, Result<RunMetrics, SimError>)>;

/// Runs every scenario, in parallel when `threads` allows, and returns the results in
/// input order. A failing cell never aborts the others.
pub fn run_sweep(grid: &[Scenario], threads: Option<usize>) -> Result<SweepResults, SimError> {
    if grid.is_empty() {
        return Err(invalid("sweep grid is empty"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| {
        grid.par_iter()
            .map(|s| (s.clone(), run_scenario(s)))
            .collect()
    }))
}

/// A Cartesian product of scenario parameters, expanded mechanism-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "SweepSpec::default_mechanisms")]
    pub mechanisms: Vec<MechanismSpec>,
    #[serde(default = "SweepSpec::default_n")]
    pub n_values: Vec<usize>,
    #[serde(default = "SweepSpec::default_wba")]
    pub wba_values: Vec<f64>,
    #[serde(default = "SweepSpec::default_deviator_pcs")]
    pub deviator_pcs: Vec<f64>,
    #[serde(default = "SweepSpec::default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "defaults::rounds")]
    pub rounds: u32,
    #[serde(default = "defaults::wct")]
    pub wct: f64,
    #[serde(default = "defaults::deviation_round")]
    pub deviation_round: u32,
    #[serde(default)]
    pub recurrence_rate: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            mechanisms: Self::default_mechanisms(),
            n_values: Self::default_n(),
            wba_values: Self::default_wba(),
            deviator_pcs: Self::default_deviator_pcs(),
            seeds: Self::default_seeds(),
            rounds: defaults::rounds(),
            wct: defaults::wct(),
            deviation_round: defaults::deviation_round(),
            recurrence_rate: 0.0,
        }
    }
}

impl SweepSpec {
    fn default_mechanisms() -> Vec<MechanismSpec> {
        vec![
            MechanismSpec::rg_mixed(),
            MechanismSpec::ed(),
            MechanismSpec::ros(),
        ]
    }

    fn default_n() -> Vec<usize> {
        vec![9, 27, 81]
    }

    /// 1.0, 1.1, ..., 2.0
    fn default_wba() -> Vec<f64> {
        (10..=20).map(|k| k as f64 / 10.0).collect()
    }

    /// 0.5, 0.6, ..., 1.0
    fn default_deviator_pcs() -> Vec<f64> {
        (5..=10).map(|k| k as f64 / 10.0).collect()
    }

    fn default_seeds() -> Vec<u64> {
        vec![1]
    }

    pub fn expand(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for mechanism in &self.mechanisms {
            for &n in &self.n_values {
                for &wba in &self.wba_values {
                    for &deviator_pc in &self.deviator_pcs {
                        for &seed in &self.seeds {
                            let mut s = Scenario::new(mechanism.clone(), n, wba, deviator_pc, seed);
                            s.rounds = self.rounds;
                            s.wct = self.wct;
                            s.deviation_round = self.deviation_round;
                            s.recurrence_rate = self.recurrence_rate;
                            out.push(s);
                        }
                    }
                }
            }
        }
        out
    }
}
