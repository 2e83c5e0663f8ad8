//! Closed-form quantities of the repeated-game mechanisms: verification-probability
//! windows, minmax payoffs, expected utilities and the Chernoff trigger parameters.
//!
//! Everything here is a pure function of its arguments. These values serve both as
//! feasibility checks before a run and as oracles for Monte-Carlo output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binomial::pmf_row;
use crate::payoff::PayoffParams;

/// One inequality that a parameter set fails to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility {
    /// The inequality, written with the names used in [`PayoffParams`].
    pub condition: String,
    /// Left-hand side as evaluated.
    pub value: f64,
    /// Right-hand side as evaluated.
    pub bound: f64,
}

impl Infeasibility {
    fn new(condition: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            condition: condition.into(),
            value,
            bound,
        }
    }

    /// How far the left-hand side is from satisfying the inequality.
    pub fn shortfall(&self) -> f64 {
        (self.bound - self.value).abs()
    }
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} fails: {} vs {} (off by {})",
            self.condition,
            self.value,
            self.bound,
            self.shortfall()
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("infeasible parameters: {0}")]
    Infeasible(Infeasibility),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

type Result<T> = std::result::Result<T, AnalysisError>;

fn invalid(msg: impl Into<String>) -> AnalysisError {
    AnalysisError::InvalidArgument(msg.into())
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(invalid(msg()))
    }
}

fn require_probability(name: &str, p: f64) -> Result<()> {
    require((0.0..=1.0).contains(&p), || {
        format!("{name} must lie in [0, 1], got {p}")
    })
}

fn require_odd(n: usize) -> Result<()> {
    require(n % 2 == 1, || {
        format!("worker count must be odd for the majority sums, got {n}")
    })
}

// ---------------------------------------------------------------------------
// Pure strategies

/// Feasible verification probabilities and the resulting payoffs of the
/// pure-strategy mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureEquilibrium {
    /// Exclusive lower bound on the verification probability.
    pub pv_low: f64,
    /// Exclusive upper bound on the verification probability.
    pub pv_high: f64,
    pub minmax: f64,
    pub worker_utility: f64,
    pub master_expected_utility: f64,
}

impl PureEquilibrium {
    pub fn evaluate(params: &PayoffParams, n: usize, pv: f64) -> Result<Self> {
        let (pv_low, pv_high) = pure_pv_bounds(params, n)?;
        let minmax = pure_minmax(params, n, pv)?;
        let (worker_utility, master_expected_utility) = pure_theorem_utilities(params, n, pv)?;
        Ok(Self {
            pv_low,
            pv_high,
            minmax,
            worker_utility,
            master_expected_utility,
        })
    }
}

/// Open interval of verification probabilities for which honest play is
/// enforceable with pure trigger strategies.
pub fn pure_pv_bounds(params: &PayoffParams, n: usize) -> Result<(f64, f64)> {
    require(n >= 2, || format!("need at least 2 workers, got {n}"))?;
    if params.wba <= params.wct {
        return Err(AnalysisError::Infeasible(Infeasibility::new(
            "wba > wct",
            params.wba,
            params.wct,
        )));
    }
    if params.wpc <= params.wct {
        return Err(AnalysisError::Infeasible(Infeasibility::new(
            "wpc > wct",
            params.wpc,
            params.wct,
        )));
    }
    let half_up = n.div_ceil(2) as f64;
    let low = params.wct / (params.wba + params.wpc * half_up);
    let high = (params.wba + params.wct) / (2.0 * params.wba + n as f64 * params.wpc);
    Ok((low, high))
}

fn check_in_pure_window(params: &PayoffParams, n: usize, pv: f64) -> Result<()> {
    let (low, high) = pure_pv_bounds(params, n)?;
    if pv <= low {
        return Err(AnalysisError::Infeasible(Infeasibility::new(
            "pv > wct / (wba + wpc * ceil(n/2))",
            pv,
            low,
        )));
    }
    if pv >= high {
        return Err(AnalysisError::Infeasible(Infeasibility::new(
            "pv < (wba + wct) / (2 * wba + n * wpc)",
            pv,
            high,
        )));
    }
    Ok(())
}

/// Lowest expected payoff the other workers can force on a worker under pure strategies.
pub fn pure_minmax(params: &PayoffParams, n: usize, pv: f64) -> Result<f64> {
    check_in_pure_window(params, n, pv)?;
    Ok((1.0 - pv) * params.wba - pv * n as f64 * params.wpc)
}

/// Per-round `(worker, master)` utilities at the all-honest pure equilibrium.
pub fn pure_theorem_utilities(params: &PayoffParams, n: usize, pv: f64) -> Result<(f64, f64)> {
    check_in_pure_window(params, n, pv)?;
    let worker = params.wba - params.wct;
    let master = params.mbr - n as f64 * params.mca - pv * params.mcv;
    Ok((worker, master))
}

// ---------------------------------------------------------------------------
// Mixed strategies

/// Lower bounds the verification probability must clear for the mixed mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedBounds {
    /// Strict lower bound: `2 wba / (2 wba + wpc n)`.
    pub pv_floor_deterrence: f64,
    /// Inclusive lower bound: `wct / wba`.
    pub pv_floor_participation: f64,
    /// Inclusive lower bound guaranteeing a wrong answer with probability at most `phi`.
    pub pv_floor_correctness: f64,
    pub xi: f64,
    pub phi: f64,
}

impl MixedBounds {
    /// Every floor that `pv` fails to clear.
    pub fn violations(&self, pv: f64) -> Vec<Infeasibility> {
        let mut out = Vec::new();
        if pv <= self.pv_floor_deterrence {
            out.push(Infeasibility::new(
                "pv > 2 * wba / (2 * wba + wpc * n)",
                pv,
                self.pv_floor_deterrence,
            ));
        }
        if pv < self.pv_floor_participation {
            out.push(Infeasibility::new(
                "pv >= wct / wba",
                pv,
                self.pv_floor_participation,
            ));
        }
        if pv < self.pv_floor_correctness {
            out.push(Infeasibility::new(
                "pv >= correctness floor",
                pv,
                self.pv_floor_correctness,
            ));
        }
        out
    }

    /// The minmax payoff `pv * wba - wct` at `pv`.
    pub fn minmax(&self, params: &PayoffParams, pv: f64) -> f64 {
        pv * params.wba - params.wct
    }
}

fn deterrence_floor(params: &PayoffParams, n: usize) -> f64 {
    2.0 * params.wba / (2.0 * params.wba + params.wpc * n as f64)
}

fn participation_floor(params: &PayoffParams) -> f64 {
    params.wct / params.wba
}

/// `exp(-n xi^2 / (6 (1 + xi)))`, the Chernoff bound on a cheating majority.
pub fn majority_tail_bound(n: usize, xi: f64) -> f64 {
    (-(n as f64) * xi * xi / (6.0 * (1.0 + xi))).exp()
}

/// Verification probability that keeps the wrong-answer probability at or below
/// `phi` when every worker cheats with probability `pc`. Clamped at 0 when the
/// tail bound is already below `phi`.
pub fn correctness_floor(n: usize, pc: f64, xi: f64, phi: f64) -> Result<f64> {
    require(n > 2, || format!("need more than 2 workers, got {n}"))?;
    require(xi > 0.0 && xi <= 1.0, || {
        format!("xi must lie in (0, 1], got {xi}")
    })?;
    require(phi > 0.0, || format!("phi must be positive, got {phi}"))?;
    let cap = 1.0 / (2.0 * (1.0 + xi));
    if !(pc > 0.0 && pc < cap) {
        return Err(AnalysisError::Infeasible(Infeasibility::new(
            "0 < pc < 1 / (2 (1 + xi))",
            pc,
            cap,
        )));
    }
    let tail = majority_tail_bound(n, xi);
    if phi >= tail {
        return Ok(0.0);
    }
    let floor = (tail - phi) / (tail - pc.powi(n as i32));
    Ok(floor.max(0.0))
}

pub fn mixed_pv_floors(
    params: &PayoffParams,
    n: usize,
    pc: f64,
    xi: f64,
    phi: f64,
) -> Result<MixedBounds> {
    require(params.wba > 0.0, || "wba must be positive".to_string())?;
    let pv_floor_correctness = correctness_floor(n, pc, xi, phi)?;
    Ok(MixedBounds {
        pv_floor_deterrence: deterrence_floor(params, n),
        pv_floor_participation: participation_floor(params),
        pv_floor_correctness,
        xi,
        phi,
    })
}

/// Minmax payoff `pv * wba - wct`, attained when every other worker always cheats.
/// Fails if `pv` does not clear the deterrence and participation floors.
pub fn mixed_minmax(params: &PayoffParams, n: usize, pv: f64) -> Result<f64> {
    require(params.wba > 0.0, || "wba must be positive".to_string())?;
    let deterrence = deterrence_floor(params, n);
    if pv <= deterrence {
        return Err(AnalysisError::Infeasible(Infeasibility::new(
            "pv > 2 * wba / (2 * wba + wpc * n)",
            pv,
            deterrence,
        )));
    }
    let participation = participation_floor(params);
    if pv < participation {
        return Err(AnalysisError::Infeasible(Infeasibility::new(
            "pv >= wct / wba",
            pv,
            participation,
        )));
    }
    Ok(pv * params.wba - params.wct)
}

/// Majority tails of the number of cheaters among the `n - 1` peers of a worker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomTails {
    /// `P(peers cheating >= (n-1)/2)`: a cheating worker is in the majority.
    pub p_geq_h: f64,
    /// `P(peers cheating >= (n+1)/2)`: an honest worker is outvoted.
    pub p_gt_h: f64,
    /// `P(peers cheating <= (n-1)/2)`: an honest worker is in the majority.
    pub p_leq_h: f64,
}

pub fn binom_tails(n: usize, pc: f64) -> Result<BinomTails> {
    require_odd(n)?;
    require(n >= 3, || format!("need at least 3 workers, got {n}"))?;
    require_probability("pc", pc)?;
    let peers = n - 1;
    let half = peers / 2;
    let row = pmf_row(peers, pc);
    Ok(BinomTails {
        p_geq_h: row[half..].iter().sum(),
        p_gt_h: row[half + 1..].iter().sum(),
        p_leq_h: row[..=half].iter().sum(),
    })
}

/// Expected round utility of a worker that always cheats (`cheat = true`) or never
/// cheats, when each of its `n - 1` peers cheats independently with `pc_others`.
pub fn deviant_utility(
    params: &PayoffParams,
    n: usize,
    cheat: bool,
    pc_others: f64,
    pv: f64,
) -> Result<f64> {
    require_odd(n)?;
    require_probability("pc_others", pc_others)?;
    require_probability("pv", pv)?;
    let peers = n - 1;
    let half = peers / 2;
    let row = pmf_row(peers, pc_others);
    let value = if cheat {
        let in_majority: f64 = row[half..].iter().sum();
        -pv * params.wpc * (1.0 + peers as f64 * pc_others) + (1.0 - pv) * params.wba * in_majority
    } else {
        let in_majority: f64 = row[..=half].iter().sum();
        pv * params.wba - params.wct + (1.0 - pv) * params.wba * in_majority
    };
    Ok(value)
}

/// Expected utility of a worker cheating with probability `pc_own` against peers at
/// `pc_others`. Linear in `pc_own`.
pub fn deviant_utility_mixed(
    params: &PayoffParams,
    n: usize,
    pc_own: f64,
    pc_others: f64,
    pv: f64,
) -> Result<f64> {
    require_probability("pc_own", pc_own)?;
    let cheat = deviant_utility(params, n, true, pc_others, pv)?;
    let honest = deviant_utility(params, n, false, pc_others, pv)?;
    Ok(pc_own * cheat + (1.0 - pc_own) * honest)
}

/// Expected per-round `(master, worker)` utilities when every worker cheats with `pc`
/// and the master verifies with `pv`, under proportional punishment.
pub fn expected_utilities_mixed(
    params: &PayoffParams,
    n: usize,
    pc: f64,
    pv: f64,
) -> Result<(f64, f64)> {
    require_odd(n)?;
    require(n > 2, || format!("need more than 2 workers, got {n}"))?;
    require_probability("pc", pc)?;
    require_probability("pv", pv)?;

    let tails = binom_tails(n, pc)?;
    let worker = (pc * (1.0 - pv) * tails.p_geq_h
        + (1.0 - pc) * pv * tails.p_gt_h
        + (1.0 - pc) * tails.p_leq_h)
        * params.wba
        - pc * pv * (1.0 + (n - 1) as f64 * pc) * params.wpc
        - (1.0 - pc) * params.wct;

    let nf = n as f64;
    let mut verified = 0.0;
    let mut unverified = 0.0;
    for (f, &mass) in pmf_row(n, pc).iter().enumerate() {
        let ff = f as f64;
        let on_verify = if f < n {
            params.mbr - params.mcv - (nf - ff) * params.mca + ff * ff * params.wpc
        } else {
            -params.mcv + nf * nf * params.wpc
        };
        let on_majority = if 2 * f > n {
            -params.mpw - ff * params.mca
        } else {
            params.mbr - (nf - ff) * params.mca
        };
        verified += mass * on_verify;
        unverified += mass * on_majority;
    }
    let master = pv * verified + (1.0 - pv) * unverified;
    Ok((master, worker))
}

// ---------------------------------------------------------------------------
// Chernoff trigger

fn check_chernoff_args(n: usize, pc: f64, eps: f64) -> Result<()> {
    require(n >= 1, || "need at least one worker".to_string())?;
    require(pc > 0.0 && pc <= 1.0, || {
        format!("pc must lie in (0, 1], got {pc}")
    })?;
    require(eps > 0.0 && eps < 1.0, || {
        format!("eps must lie in (0, 1), got {eps}")
    })
}

/// Number of past rounds a worker keeps for the deviation test: `floor(3 n pc ln(1/eps))`.
pub fn chernoff_window(n: usize, pc: f64, eps: f64) -> Result<usize> {
    check_chernoff_args(n, pc, eps)?;
    Ok((3.0 * n as f64 * pc * (1.0 / eps).ln()).floor() as usize)
}

/// Relative deviation `sqrt(3 ln(1/eps) / (r n pc))` that `r` consecutive rounds must
/// exhibit. Only meaningful when below 1.
pub fn chernoff_delta(r: usize, n: usize, pc: f64, eps: f64) -> Result<f64> {
    check_chernoff_args(n, pc, eps)?;
    require(r >= 1, || "r must be at least 1".to_string())?;
    Ok((3.0 * (1.0 / eps).ln() / (r as f64 * n as f64 * pc)).sqrt())
}

/// Incorrect-answer counts at or above which `r` consecutive rounds indicate a deviation.
pub fn high_threshold(delta: f64, n: usize, pc: f64) -> usize {
    ((1.0 + delta) * n as f64 * pc).ceil() as usize
}

/// Incorrect-answer counts at or below which `r` consecutive rounds indicate a
/// deviation. `None` when the bound is negative.
pub fn low_threshold(delta: f64, n: usize, pc: f64) -> Option<usize> {
    let v = ((1.0 - delta) * n as f64 * pc).floor();
    (v >= 0.0).then_some(v as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub r: usize,
    pub delta: f64,
    /// `delta < 1`: the trigger may fire on this many rounds.
    pub decidable: bool,
    /// `1/(n pc) <= delta < 1`: the tail bound carries its stated guarantee.
    pub in_guaranteed_range: bool,
    pub high_threshold: usize,
    pub low_threshold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub window: usize,
    pub rows: Vec<DeltaRow>,
    /// `1/(n pc) >= 1`, so no delta can carry the guarantee.
    pub guaranteed_range_empty: bool,
    /// Some `r` within the window has `delta < 1`.
    pub any_decidable: bool,
}

pub fn delta_table(n: usize, pc: f64, eps: f64) -> Result<DeltaTable> {
    let window = chernoff_window(n, pc, eps)?;
    let min_delta = 1.0 / (n as f64 * pc);
    let rows: Vec<DeltaRow> = (1..=window)
        .map(|r| {
            let delta = chernoff_delta(r, n, pc, eps)?;
            Ok(DeltaRow {
                r,
                delta,
                decidable: delta < 1.0,
                in_guaranteed_range: delta < 1.0 && delta >= min_delta,
                high_threshold: high_threshold(delta, n, pc),
                low_threshold: low_threshold(delta, n, pc),
            })
        })
        .collect::<Result<_>>()?;
    let any_decidable = rows.iter().any(|row| row.decidable);
    Ok(DeltaTable {
        window,
        rows,
        guaranteed_range_empty: min_delta >= 1.0,
        any_decidable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn params(wba: f64, wct: f64, wpc: f64) -> PayoffParams {
        PayoffParams {
            wpc,
            wct,
            wba,
            mpw: 9.0,
            mca: 1.0,
            mcv: 9.0,
            mbr: 9.0,
        }
    }

    #[test]
    fn pure_bounds_examples() {
        let (lo, hi) = pure_pv_bounds(&params(1.0, 0.1, 1.0), 9).unwrap();
        assert!((lo - 0.1 / 6.0).abs() < TOL);
        assert!((hi - 0.1).abs() < TOL);

        let (lo, hi) = pure_pv_bounds(&params(2.0, 0.1, 2.0), 9).unwrap();
        assert!((lo - 0.1 / 12.0).abs() < TOL);
        assert!((hi - 2.1 / 22.0).abs() < TOL);

        let (lo, hi) = pure_pv_bounds(&params(1.0, 0.0, 1.0), 3).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2).abs() < TOL);
    }

    #[test]
    fn pure_bounds_name_failed_premise() {
        match pure_pv_bounds(&params(0.1, 0.1, 1.0), 9) {
            Err(AnalysisError::Infeasible(inf)) => assert_eq!(inf.condition, "wba > wct"),
            other => panic!("unexpected {other:?}"),
        }
        match pure_pv_bounds(&params(1.0, 0.1, 0.05), 9) {
            Err(AnalysisError::Infeasible(inf)) => {
                assert_eq!(inf.condition, "wpc > wct");
                assert!((inf.shortfall() - 0.05).abs() < TOL);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pure_minmax_examples() {
        let p = params(1.0, 0.1, 1.0);
        assert!((pure_minmax(&p, 9, 0.05).unwrap() - 0.5).abs() < TOL);
        assert!((pure_minmax(&p, 9, 0.0999).unwrap() - 0.001).abs() < TOL);
        let p0 = params(1.0, 0.0, 1.0);
        assert!((pure_minmax(&p0, 3, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(pure_minmax(&p, 9, 0.2).is_err());
        assert!(pure_minmax(&p, 9, 0.01).is_err());
    }

    #[test]
    fn pure_theorem_examples() {
        let p = params(1.0, 0.1, 1.0);
        let (w, m) = pure_theorem_utilities(&p, 9, 0.05).unwrap();
        assert!((w - 0.9).abs() < TOL);
        assert!((m + 0.45).abs() < TOL);

        let zero_cost = params(1.0, 0.0, 1.0);
        let (_, m) = pure_theorem_utilities(&zero_cost, 9, 1e-6).unwrap();
        // mbr = n * mca; only the verification term remains
        assert!((m + 9.0 * 1e-6).abs() < TOL);
    }

    #[test]
    fn pure_equilibrium_is_enforceable() {
        let p = params(1.0, 0.1, 1.0);
        let eq = PureEquilibrium::evaluate(&p, 9, 0.05).unwrap();
        assert!(eq.pv_low < eq.pv_high);
        assert!(eq.worker_utility > eq.minmax);
    }

    #[test]
    fn mixed_floor_examples() {
        for &wba in &[1.0, 1.3, 2.0] {
            let n = 9;
            let pc = 0.1;
            let p = params(wba, 0.1, wba / (n as f64 * pc));
            let b = mixed_pv_floors(&p, n, pc, 0.5, 0.05).unwrap();
            assert!((b.pv_floor_deterrence - 1.0 / 6.0).abs() < TOL);
        }
        let b = mixed_pv_floors(&params(1.0, 0.1, 1.0), 9, 0.1, 1.0, 0.3).unwrap();
        let tail = (-0.75f64).exp();
        let expect = (tail - 0.3) / (tail - 1e-9);
        assert!((b.pv_floor_correctness - expect).abs() < TOL);
        assert!((b.pv_floor_correctness - 0.3649).abs() < 1e-4);

        let b = mixed_pv_floors(&params(1.0, 0.1, 1.0), 9, 0.1, 1.0, 0.9).unwrap();
        assert_eq!(b.pv_floor_correctness, 0.0);
    }

    #[test]
    fn mixed_floors_reject_large_pc() {
        assert!(matches!(
            mixed_pv_floors(&params(1.0, 0.1, 1.0), 9, 0.25, 1.0, 0.1),
            Err(AnalysisError::Infeasible(_))
        ));
        assert!(mixed_pv_floors(&params(1.0, 0.1, 1.0), 2, 0.1, 1.0, 0.1).is_err());
    }

    #[test]
    fn violations_lists_each_failed_floor() {
        let b = MixedBounds {
            pv_floor_deterrence: 1.0 / 6.0,
            pv_floor_participation: 0.1,
            pv_floor_correctness: 0.3,
            xi: 0.5,
            phi: 0.05,
        };
        assert_eq!(b.violations(0.5).len(), 0);
        assert_eq!(b.violations(0.2).len(), 1);
        assert_eq!(b.violations(0.05).len(), 3);
        assert_eq!(b.violations(1.0 / 6.0).len(), 2);
    }

    #[test]
    fn mixed_minmax_examples() {
        let n = 9;
        let p1 = params(1.0, 0.1, 1.0 / 0.9);
        assert!((mixed_minmax(&p1, n, 0.17).unwrap() - 0.07).abs() < TOL);
        let p2 = params(2.0, 0.1, 2.0 / 0.9);
        assert!((mixed_minmax(&p2, n, 0.2).unwrap() - 0.3).abs() < TOL);
        // participation boundary with a deterrence floor below it
        let p3 = params(1.0, 0.5, 100.0);
        assert!(mixed_minmax(&p3, n, 0.5).unwrap().abs() < TOL);
        match mixed_minmax(&p1, n, 0.16) {
            Err(AnalysisError::Infeasible(inf)) => assert!(inf.condition.contains("2 * wba")),
            other => panic!("unexpected {other:?}"),
        }
        match mixed_minmax(&p3, n, 0.4) {
            Err(AnalysisError::Infeasible(inf)) => assert_eq!(inf.condition, "pv >= wct / wba"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deviant_utility_examples() {
        let p = params(1.0, 0.1, 1.0 / 0.9);
        let u = deviant_utility(&p, 9, false, 1.0, 0.17).unwrap();
        assert!((u - 0.07).abs() < TOL);
        assert!((u - mixed_minmax(&p, 9, 0.17).unwrap()).abs() < TOL);

        for &pv in &[0.0, 0.3, 0.9] {
            let u = deviant_utility(&p, 9, false, 0.0, pv).unwrap();
            assert!((u - 0.9).abs() < TOL);
        }

        let q = params(1.0, 0.1, 1.0);
        let u = deviant_utility(&q, 3, true, 0.5, 0.2).unwrap();
        assert!((u - 0.2).abs() < TOL);
        assert!(deviant_utility(&q, 4, true, 0.5, 0.2).is_err());
    }

    #[test]
    fn binom_tail_examples() {
        let t = binom_tails(3, 0.5).unwrap();
        assert!((t.p_geq_h - 0.75).abs() < TOL);
        assert!((t.p_gt_h - 0.25).abs() < TOL);
        assert!((t.p_leq_h - 0.75).abs() < TOL);
        let t = binom_tails(9, 0.0).unwrap();
        assert_eq!((t.p_geq_h, t.p_gt_h, t.p_leq_h), (0.0, 0.0, 1.0));
        let t = binom_tails(9, 1.0).unwrap();
        assert_eq!((t.p_geq_h, t.p_gt_h, t.p_leq_h), (1.0, 1.0, 0.0));
        assert!(binom_tails(8, 0.5).is_err());
    }

    #[test]
    fn tail_partition_holds_for_odd_n() {
        for n in (3..=101).step_by(2) {
            for &pc in &[0.01, 0.1, 0.33, 0.5, 0.77, 0.99] {
                let t = binom_tails(n, pc).unwrap();
                assert!((t.p_gt_h + t.p_leq_h - 1.0).abs() < 1e-12, "n={n} pc={pc}");
                let mid = pmf_row(n - 1, pc)[(n - 1) / 2];
                assert!((t.p_geq_h - t.p_gt_h - mid).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expected_utilities_limits() {
        let p = PayoffParams {
            wpc: 1.0 / 0.9,
            wct: 0.1,
            wba: 1.0,
            mpw: 9.0,
            mca: 1.0,
            mcv: 9.0,
            mbr: 9.0,
        };
        let (m, w) = expected_utilities_mixed(&p, 9, 1e-12, 0.17).unwrap();
        assert!((w - 0.9).abs() < 1e-9);
        assert!((m - (9.0 - 9.0 - 0.17 * 9.0)).abs() < 1e-9);
        assert!(expected_utilities_mixed(&p, 10, 0.1, 0.17).is_err());
    }

    #[test]
    fn chernoff_window_examples() {
        assert_eq!(chernoff_window(27, 0.1, 0.01).unwrap(), 37);
        assert_eq!(chernoff_window(9, 0.1, 0.01).unwrap(), 12);
        assert_eq!(chernoff_window(81, 0.1, 0.01).unwrap(), 111);
        assert!(chernoff_window(9, 0.0, 0.01).is_err());
        assert!(chernoff_window(9, 0.1, 1.0).is_err());
    }

    #[test]
    fn chernoff_delta_examples() {
        let d = chernoff_delta(6, 27, 0.1, 0.01).unwrap();
        assert!((d - 0.9234).abs() < 1e-4);
        let d2 = chernoff_delta(2, 81, 0.1, 0.01).unwrap();
        assert!((d - d2).abs() < 1e-12);
        let d = chernoff_delta(1, 9, 0.1, 0.01).unwrap();
        assert!((d - 3.918).abs() < 1e-3);
        assert!(chernoff_delta(0, 9, 0.1, 0.01).is_err());
    }

    #[test]
    fn delta_table_for_small_system() {
        let t = delta_table(9, 0.1, 0.01).unwrap();
        assert_eq!(t.window, 12);
        assert_eq!(t.rows.len(), 12);
        assert!(t.guaranteed_range_empty);
        assert!(!t.any_decidable);
        assert!((t.rows[11].delta - 1.131).abs() < 1e-3);

        let t = delta_table(27, 0.1, 0.01).unwrap();
        assert!(!t.guaranteed_range_empty);
        let first = t.rows.iter().find(|r| r.decidable).unwrap();
        assert_eq!(first.r, 6);
        assert_eq!(first.high_threshold, 6);
        assert_eq!(first.low_threshold, Some(0));
    }
}
