//! Binomial probability masses through log-factorials, stable for the worker
//! counts used here (hundreds) without overflowing the coefficients.

/// `ln(k!)` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0_f64;
    table.push(acc);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// Probability masses `B(trials, j, p)` for `j = 0..=trials`.
pub fn pmf_row(trials: usize, p: f64) -> Vec<f64> {
    debug_assert!((0.0..=1.0).contains(&p));
    if p <= 0.0 {
        let mut row = vec![0.0; trials + 1];
        row[0] = 1.0;
        return row;
    }
    if p >= 1.0 {
        let mut row = vec![0.0; trials + 1];
        row[trials] = 1.0;
        return row;
    }
    let lnf = ln_factorials(trials);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    (0..=trials)
        .map(|j| {
            let ln_choose = lnf[trials] - lnf[j] - lnf[trials - j];
            (ln_choose + j as f64 * lp + (trials - j) as f64 * lq).exp()
        })
        .collect()
}
