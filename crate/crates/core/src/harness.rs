//! Monte Carlo comparison against the published table of rigorous drift
//! intervals for 23 triangle groups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimension::{Table1Entry, TABLE1};
use crate::groups::{build_triangle_group, GroupError};
use crate::walk::{estimate_drift_mc, exact_mean_displacement, WalkConfig, WalkError, DEFAULT_ENUMERATION_BUDGET};

/// Environment variable overriding the default number of trials per row.
pub const BUDGET_ENV: &str = "FUCHSIAN_BUDGET";
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_STEPS: usize = 40_000;
/// Word lengths whose exact mean displacements calibrate the `C/n` bias.
pub const ALLOWANCE_GRID: (usize, usize) = (6, 12);

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RowStatus {
    Consistent,
    Tension,
}

impl std::fmt::Display for RowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RowStatus::Consistent => "CONSISTENT",
            RowStatus::Tension => "TENSION",
        })
    }
}

/// `CONSISTENT` iff `mean − 3σ <= upper` and `mean + allowance >= lower`.
pub fn row_status(mean: f64, stderr: f64, lower: f64, upper: f64, allowance: f64) -> RowStatus {
    if mean - 3.0 * stderr <= upper && mean + allowance >= lower {
        RowStatus::Consistent
    } else {
        RowStatus::Tension
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
}

impl HarnessConfig {
    /// Defaults, with the trial count taken from `FUCHSIAN_BUDGET` when set.
    pub fn from_env() -> HarnessConfig {
        let trials = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&t: &usize| t > 0)
            .unwrap_or(DEFAULT_TRIALS);
        HarnessConfig {
            steps: DEFAULT_STEPS,
            trials,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub k: u32,
    pub l: u32,
    pub m: u32,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub steps: usize,
    pub trials: usize,
    pub reference_lower: f64,
    pub reference_upper: f64,
    /// Estimated `C` in `E[d_n]/n ≈ ℓ + C/n`.
    pub bias_constant: f64,
    pub allowance: f64,
    pub status: RowStatus,
}

/// Fits `C` in `E[d_n]/n ≈ ℓ + C/n` from exact means at two word lengths.
/// Returns `(C, allowance at n)`, clamping a negative fit to zero.
pub fn bias_allowance(
    gens: &crate::groups::GeneratorSet,
    n: usize,
    grid: (usize, usize),
) -> Result<(f64, f64), WalkError> {
    let (n1, n2) = grid;
    let m1 = exact_mean_displacement(gens, n1, DEFAULT_ENUMERATION_BUDGET)?.mean;
    let m2 = exact_mean_displacement(gens, n2, DEFAULT_ENUMERATION_BUDGET)?.mean;
    let c = ((m1 - m2) / (1.0 / n1 as f64 - 1.0 / n2 as f64)).max(0.0);
    Ok((c, c / n as f64))
}

/// Runs one table row. The seed is offset by the row index so rows are
/// independent.
pub fn run_row(index: usize, entry: &Table1Entry, config: &HarnessConfig) -> Result<Table1Row, HarnessError> {
    let gens = build_triangle_group(entry.k, entry.l, entry.m)?.gens;
    let walk = WalkConfig::new(config.steps, config.trials, config.seed.wrapping_add(index as u64));
    let est = estimate_drift_mc(&gens, &walk)?;
    let (c, allowance) = bias_allowance(&gens, config.steps, ALLOWANCE_GRID)?;
    Ok(Table1Row {
        k: entry.k,
        l: entry.l,
        m: entry.m,
        mc_mean: est.mean,
        mc_stderr: est.stderr,
        steps: config.steps,
        trials: config.trials,
        reference_lower: entry.lower,
        reference_upper: entry.upper,
        bias_constant: c,
        allowance,
        status: row_status(est.mean, est.stderr, entry.lower, entry.upper, allowance),
    })
}

/// All 23 rows, computed concurrently and returned in table order.
/// `on_row` sees each row as soon as it finishes, so callers can flush
/// partial results.
pub fn table1_harness(
    config: &HarnessConfig,
    on_row: impl Fn(&Table1Row) + Sync,
) -> Result<Vec<Table1Row>, HarnessError> {
    TABLE1
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let row = run_row(i, entry, config)?;
            on_row(&row);
            Ok(row)
        })
        .collect()
}

/// Whether the Monte Carlo means of the `(k,k,k)` rows increase with `k`.
pub fn kkk_monotone(rows: &[Table1Row]) -> bool {
    let mut kkk: Vec<&Table1Row> = rows.iter().filter(|r| r.k == r.l && r.l == r.m).collect();
    kkk.sort_by_key(|r| r.k);
    kkk.windows(2).all(|w| w[0].mc_mean < w[1].mc_mean)
}

pub fn render_table(rows: &[Table1Row]) -> String {
    let mut s = format!(
        "{:>3} {:>3} {:>3}  {:>12} {:>10}  {:>17} {:>17}  {:>10}  {}\n",
        "k", "l", "m", "mc_mean", "mc_stderr", "lower", "upper", "allowance", "status"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>3} {:>3} {:>3}  {:>12.9} {:>10.3e}  {:>17.15} {:>17.15}  {:>10.3e}  {}\n",
            r.k, r.l, r.m, r.mc_mean, r.mc_stderr, r.reference_lower, r.reference_upper, r.allowance, r.status
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use RowStatus::*;

    #[test]
    fn status_logic_is_exhaustive() {
        let (lo, hi) = (1.0, 2.0);
        // (mean, stderr, allowance, expected)
        let cases = [
            (1.5, 0.0, 0.0, Consistent),
            (2.0, 0.0, 0.0, Consistent),
            (2.3, 0.1, 0.0, Consistent),
            (2.31, 0.1, 0.0, Tension),
            (0.9, 0.0, 0.1, Consistent),
            (0.9, 0.0, 0.05, Tension),
            (0.9, 1.0, 0.0, Tension),
            (1.0, 0.0, 0.0, Consistent),
            (5.0, 0.0, 10.0, Tension),
        ];
        for (mean, se, allow, want) in cases {
            assert_eq!(row_status(mean, se, lo, hi, allow), want, "{mean} {se} {allow}");
        }
        for i in 0..=40 {
            for j in 0..=10 {
                for a in 0..=5 {
                    let mean = 0.5 + i as f64 * 0.05;
                    let se = j as f64 * 0.02;
                    let allow = a as f64 * 0.05;
                    let want = if mean - 3.0 * se <= hi && mean + allow >= lo { Consistent } else { Tension };
                    assert_eq!(row_status(mean, se, lo, hi, allow), want);
                }
            }
        }
    }

    #[test]
    fn budget_env_parsing() {
        std::env::set_var(BUDGET_ENV, "123");
        assert_eq!(HarnessConfig::from_env().trials, 123);
        std::env::set_var(BUDGET_ENV, "zero");
        assert_eq!(HarnessConfig::from_env().trials, DEFAULT_TRIALS);
        std::env::remove_var(BUDGET_ENV);
        assert_eq!(HarnessConfig::from_env().trials, DEFAULT_TRIALS);
    }

    #[test]
    fn monotonicity_helper() {
        let row = |k: u32, mean: f64| Table1Row {
            k,
            l: k,
            m: k,
            mc_mean: mean,
            mc_stderr: 0.0,
            steps: 1,
            trials: 1,
            reference_lower: 0.0,
            reference_upper: 1.0,
            bias_constant: 0.0,
            allowance: 0.0,
            status: Consistent,
        };
        assert!(kkk_monotone(&[row(5, 0.2), row(4, 0.1)]));
        assert!(!kkk_monotone(&[row(4, 0.2), row(5, 0.1)]));
    }
}
