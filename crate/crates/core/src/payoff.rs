//! Payoff parameters and per-round utility resolution for the master and workers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("payoff parameter `{name}` must be a finite non-negative number, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("cheater count {f_count} outside [0, {n}]")]
    CheaterCountOutOfRange { f_count: usize, n: usize },
    #[error("a cheating worker implies at least one cheater, got f_count = 0")]
    CheaterWithoutCheaters,
    #[error("majority flag {majority_cheats} contradicts {f_count} cheaters out of {n}")]
    InconsistentMajority {
        majority_cheats: bool,
        f_count: usize,
        n: usize,
    },
    #[error("premise {condition} does not hold ({lhs} <= {rhs})")]
    PremiseViolated {
        condition: &'static str,
        lhs: f64,
        rhs: f64,
    },
}

/// The seven payoff constants shared by every worker and the master.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffParams {
    /// Worker penalty unit for being caught cheating.
    pub wpc: f64,
    /// Worker cost of computing the task.
    pub wct: f64,
    /// Worker benefit when its answer is accepted.
    pub wba: f64,
    /// Master penalty for accepting a wrong answer.
    pub mpw: f64,
    /// Master cost per accepted answer.
    pub mca: f64,
    /// Master cost of verifying (or auditing).
    pub mcv: f64,
    /// Master benefit for accepting the right answer.
    pub mbr: f64,
}

impl PayoffParams {
    pub fn validate(&self) -> Result<(), GameError> {
        let fields = [
            ("wpc", self.wpc),
            ("wct", self.wct),
            ("wba", self.wba),
            ("mpw", self.mpw),
            ("mca", self.mca),
            ("mcv", self.mcv),
            ("mbr", self.mbr),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value >= 0.0) {
                return Err(GameError::NegativeParameter { name, value });
            }
        }
        Ok(())
    }

    /// Checks `wba > wct` and `wpc > wct`, the premises of the pure-strategy mechanism.
    pub fn check_pure_premise(&self) -> Result<(), GameError> {
        if self.wba <= self.wct {
            return Err(GameError::PremiseViolated {
                condition: "wba > wct",
                lhs: self.wba,
                rhs: self.wct,
            });
        }
        if self.wpc <= self.wct {
            return Err(GameError::PremiseViolated {
                condition: "wpc > wct",
                lhs: self.wpc,
                rhs: self.wct,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    RgPure,
    RgMixed,
    Ed,
    Ros,
}

impl MechanismKind {
    pub fn is_repeated_game(self) -> bool {
        matches!(self, MechanismKind::RgPure | MechanismKind::RgMixed)
    }

    pub fn label(self) -> &'static str {
        match self {
            MechanismKind::RgPure => "rg_pure",
            MechanismKind::RgMixed => "rg_mixed",
            MechanismKind::Ed => "ed",
            MechanismKind::Ros => "ros",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PunishmentMode {
    /// Each caught cheater pays `wpc * |F|`.
    Proportional,
    /// Each caught cheater pays `wpc`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Checks the received answers; yields nothing when every answer is wrong.
    Verify,
    /// Recomputes the task; always yields the correct answer.
    Audit,
}

/// Payoff semantics of a mechanism. Only constructible from a [`MechanismKind`],
/// so the punishment and check modes always agree with the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MechanismFlavor {
    kind: MechanismKind,
    punishment_mode: PunishmentMode,
    check_mode: CheckMode,
}

impl MechanismFlavor {
    pub fn of(kind: MechanismKind) -> Self {
        let (punishment_mode, check_mode) = match kind {
            MechanismKind::RgPure | MechanismKind::RgMixed => {
                (PunishmentMode::Proportional, CheckMode::Verify)
            }
            MechanismKind::Ed => (PunishmentMode::Constant, CheckMode::Audit),
            MechanismKind::Ros => (PunishmentMode::Constant, CheckMode::Verify),
        };
        Self {
            kind,
            punishment_mode,
            check_mode,
        }
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn punishment_mode(&self) -> PunishmentMode {
        self.punishment_mode
    }

    pub fn check_mode(&self) -> CheckMode {
        self.check_mode
    }
}

impl From<MechanismKind> for MechanismFlavor {
    fn from(kind: MechanismKind) -> Self {
        Self::of(kind)
    }
}

/// Everything that happened in one round of computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub verified: bool,
    pub f_count: usize,
    pub majority_cheats: bool,
    pub master_correct: bool,
    pub worker_payoffs: Vec<f64>,
    pub master_payoff: f64,
}

fn check_counts(f_count: usize, n: usize) -> Result<(), GameError> {
    if f_count > n {
        return Err(GameError::CheaterCountOutOfRange { f_count, n });
    }
    Ok(())
}

fn check_majority(majority_cheats: bool, f_count: usize, n: usize) -> Result<(), GameError> {
    // 2f > n: strict cheater majority; 2f < n: strict honest majority; equality is a tie.
    let consistent = match (2 * f_count).cmp(&n) {
        std::cmp::Ordering::Greater => majority_cheats,
        std::cmp::Ordering::Less => !majority_cheats,
        std::cmp::Ordering::Equal => true,
    };
    if consistent {
        Ok(())
    } else {
        Err(GameError::InconsistentMajority {
            majority_cheats,
            f_count,
            n,
        })
    }
}

/// Utility of one worker for the round.
///
/// `majority_cheats` must agree with `f_count` unless the round was an exact tie,
/// in which case it carries the result of the tie-breaking coin.
pub fn worker_payoff(
    flavor: MechanismFlavor,
    cheated: bool,
    verified: bool,
    f_count: usize,
    n: usize,
    majority_cheats: bool,
    params: &PayoffParams,
) -> Result<f64, GameError> {
    check_counts(f_count, n)?;
    if cheated && f_count == 0 {
        return Err(GameError::CheaterWithoutCheaters);
    }
    check_majority(majority_cheats, f_count, n)?;

    let payoff = match (verified, cheated, majority_cheats) {
        (true, false, _) => params.wba - params.wct,
        (true, true, _) => match flavor.punishment_mode() {
            PunishmentMode::Proportional => -params.wpc * f_count as f64,
            PunishmentMode::Constant => -params.wpc,
        },
        (false, true, true) => params.wba,
        (false, false, true) => -params.wct,
        (false, true, false) => 0.0,
        (false, false, false) => params.wba - params.wct,
    };
    Ok(payoff)
}

/// Utility of the master for the round.
///
/// Penalties collected from caught cheaters are credited to the master.
pub fn master_payoff(
    flavor: MechanismFlavor,
    verified: bool,
    f_count: usize,
    n: usize,
    majority_cheats: bool,
    params: &PayoffParams,
) -> Result<f64, GameError> {
    check_counts(f_count, n)?;
    check_majority(majority_cheats, f_count, n)?;

    let f = f_count as f64;
    let nf = n as f64;
    let honest = nf - f;
    let payoff = if verified {
        if f_count < n {
            let income = match flavor.punishment_mode() {
                PunishmentMode::Proportional => f * f * params.wpc,
                PunishmentMode::Constant => f * params.wpc,
            };
            params.mbr - params.mcv - honest * params.mca + income
        } else {
            match flavor.check_mode() {
                CheckMode::Verify => -params.mcv + nf * nf * params.wpc,
                CheckMode::Audit => params.mbr - params.mcv + nf * params.wpc,
            }
        }
    } else if majority_cheats {
        -params.mpw - f * params.mca
    } else {
        params.mbr - honest * params.mca
    };
    Ok(payoff)
}

/// Whether the master ends the round holding the correct answer.
pub fn master_correct(
    flavor: MechanismFlavor,
    verified: bool,
    f_count: usize,
    n: usize,
    majority_cheats: bool,
) -> bool {
    if verified {
        match flavor.check_mode() {
            CheckMode::Audit => true,
            CheckMode::Verify => f_count < n,
        }
    } else {
        !majority_cheats
    }
}
