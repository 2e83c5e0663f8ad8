//! Comparison mechanisms: evolutionary dynamics with auditing (ED) and the repeated
//! one-shot mechanism (ROS).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mechanism::{play_round, Action, MechanismError};
use crate::payoff::{MechanismKind, PayoffParams, RoundOutcome};

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Verification probability of ROS together with the one-shot requirement it must exceed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RosPv {
    pub pv: f64,
    /// `(wba + wct) / (wpc + 2 wba)` evaluated with `wpc = wba`.
    pub one_shot_floor: f64,
}

impl RosPv {
    pub fn satisfies_floor(&self) -> bool {
        self.pv > self.one_shot_floor
    }
}

/// `pv = (wba + 0.1) / (3 wba) + 0.01`.
pub fn ros_pv(params: &PayoffParams) -> RosPv {
    let wba = params.wba;
    RosPv {
        pv: (wba + 0.1) / (3.0 * wba) + 0.01,
        one_shot_floor: (wba + params.wct) / (wba + 2.0 * wba),
    }
}

/// A worker that reinforces whichever action beat its aspiration level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdWorkerState {
    pub pc: f64,
    pub aspiration: f64,
    pub learning_rate: f64,
}

impl EdWorkerState {
    pub fn new(pc: f64, aspiration: f64, learning_rate: f64) -> Self {
        Self {
            pc: clamp01(pc),
            aspiration,
            learning_rate,
        }
    }

    pub fn decide<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        Action::draw(self.pc, rng)
    }

    /// `pc += rate * (payoff - aspiration)` after cheating, `-=` after an honest round.
    pub fn update(&mut self, cheated: bool, payoff: f64) {
        let surplus = self.learning_rate * (payoff - self.aspiration);
        self.pc = if cheated {
            clamp01(self.pc + surplus)
        } else {
            clamp01(self.pc - surplus)
        };
    }
}

/// Master that adapts its audit probability to the fraction of caught cheaters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdMasterState {
    pub pa: f64,
    pub pa_min: f64,
    pub step: f64,
    pub tolerance: f64,
}

impl EdMasterState {
    pub fn new(pa: f64, pa_min: f64, step: f64, tolerance: f64) -> Self {
        Self {
            pa: pa.clamp(pa_min, 1.0),
            pa_min,
            step,
            tolerance,
        }
    }

    /// Only audited rounds move `pa`: up one step when the cheater fraction exceeds the
    /// tolerance, down one step otherwise.
    pub fn update(&mut self, audited: bool, f_count: usize, n: usize) {
        if !audited || n == 0 {
            return;
        }
        let fraction = f_count as f64 / n as f64;
        self.pa = if fraction > self.tolerance {
            (self.pa + self.step).min(1.0)
        } else {
            (self.pa - self.step).max(self.pa_min)
        };
    }
}

/// One ED round. Actions are drawn by the caller; worker and master states are updated
/// in place from the outcome.
pub fn ed_round<R: Rng + ?Sized>(
    workers: &mut [EdWorkerState],
    actions: &[Action],
    master: &mut EdMasterState,
    params: &PayoffParams,
    rng: &mut R,
) -> Result<RoundOutcome, MechanismError> {
    debug_assert_eq!(workers.len(), actions.len());
    let outcome = play_round(master.pa, actions, MechanismKind::Ed.into(), params, rng)?;
    for ((w, a), &u) in workers.iter_mut().zip(actions).zip(&outcome.worker_payoffs) {
        w.update(a.is_cheat(), u);
    }
    master.update(outcome.verified, outcome.f_count, actions.len());
    Ok(outcome)
}

/// One ROS round with a fixed verification probability. Worker behavior is static.
pub fn ros_round<R: Rng + ?Sized>(
    pv: f64,
    actions: &[Action],
    params: &PayoffParams,
    rng: &mut R,
) -> Result<RoundOutcome, MechanismError> {
    play_round(pv, actions, MechanismKind::Ros.into(), params, rng)
}
