//! Built-in checks of the auxiliary inequalities: the stretched-exponential
//! sum bound, the incomplete-gamma bound and the composition counts.

use std::fmt::Write as _;

use towerprod_core::tails::{compositions_count, gamma_tail_inequality, stretched_lemma_sweep};

use crate::error::{CliError, Context};

pub const SWEEP_TAUS: [f64; 3] = [0.5, 1.0, 2.0];
pub const SWEEP_THETAS: [f64; 3] = [0.3, 0.5, 0.8];
pub const SWEEP_COUNT: usize = 100;

#[derive(Debug, Clone)]
pub struct LemmaTables {
    /// Human-readable summary.
    pub table: String,
    /// `tau,theta,n,lhs,lhs_error,rhs,holds`, one row per point.
    pub sweep_csv: String,
    /// `n,i,n0,count,bound,holds`.
    pub compositions_csv: String,
    pub pass: bool,
}

pub fn check_lemmas() -> Result<LemmaTables, CliError> {
    let mut table = String::new();
    let mut sweep_csv = String::from("tau,theta,n,lhs,lhs_error,rhs,holds\n");
    let mut pass = true;
    let _ = writeln!(table, "stretched sum bound, {SWEEP_COUNT} n from the threshold");
    let _ = writeln!(table, "{:>5} {:>5} {:>6} {:>6} {:>12} {:>6}", "tau", "theta", "n_min", "n_max", "max lhs/rhs", "holds");
    for tau in SWEEP_TAUS {
        for theta in SWEEP_THETAS {
            let rows = stretched_lemma_sweep(tau, theta, SWEEP_COUNT).context("stretched sweep")?;
            let mut worst: f64 = 0.0;
            let mut ok = true;
            for r in &rows {
                let c = r.check;
                worst = worst.max((c.lhs + c.lhs_error) / c.rhs);
                ok &= c.holds;
                let _ = writeln!(sweep_csv, "{tau},{theta},{},{:e},{:e},{:e},{}", r.n, c.lhs, c.lhs_error, c.rhs, c.holds);
            }
            pass &= ok;
            let (first, last) = (rows.first().map_or(0, |r| r.n), rows.last().map_or(0, |r| r.n));
            let _ = writeln!(table, "{tau:>5} {theta:>5} {first:>6} {last:>6} {worst:>12.6} {ok:>6}");
        }
    }

    let _ = writeln!(table, "\nincomplete gamma bound");
    for (a, b, x) in [(2.0, 2.0, 3.0), (3.5, 1.5, 20.0), (0.5, 3.0, 0.1), (5.0, 4.0, 10.0)] {
        let c = gamma_tail_inequality(a, b, x).context("gamma inequality")?;
        pass &= c.holds;
        let _ = writeln!(table, "a = {a}, B = {b}, x = {x}: {:e} < {:e} {}", c.lhs, c.rhs, c.holds);
    }

    let _ = writeln!(table, "\ncompositions with parts >= n0 summing to <= n, against C(n+i-n0, i-1)");
    let mut compositions_csv = String::from("n,i,n0,count,bound,holds\n");
    let mut comp_ok = true;
    let mut checked = 0;
    for n in [10usize, 20, 40, 80] {
        for i in 1..=5 {
            for n0 in 1..=3 {
                let c = compositions_count(n, i, n0).context("composition count")?;
                let ok = c.count <= c.bound;
                comp_ok &= ok;
                checked += 1;
                let _ = writeln!(compositions_csv, "{n},{i},{n0},{},{},{ok}", c.count, c.bound);
            }
        }
    }
    pass &= comp_ok;
    let _ = writeln!(table, "{checked} cases, count <= bound in all: {comp_ok}");
    Ok(LemmaTables { table, sweep_csv, compositions_csv, pass })
}
