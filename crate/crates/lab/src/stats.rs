//! Two-group comparisons: chi-square and Fisher exact on 2×2 tables, Welch
//! t on means.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Hypergeometric, StudentsT};

/// Rows are groups, columns are (yes, no).
pub type Table2x2 = [[u64; 2]; 2];

/// Relative slack when comparing table probabilities in the two-sided
/// Fisher sum.
const FISHER_REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p: f64,
    pub yates: bool,
}

fn margins(t: &Table2x2) -> ([u64; 2], [u64; 2], u64) {
    let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
    let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
    (rows, cols, rows[0] + rows[1])
}

/// Why a table cannot be tested, if it cannot.
pub fn degenerate(t: &Table2x2) -> Option<String> {
    let (rows, cols, _) = margins(t);
    if rows.contains(&0) {
        Some("a group has no observations".into())
    } else if cols.contains(&0) {
        Some("every observation falls in the same outcome".into())
    } else {
        None
    }
}

/// Smallest expected cell count under independence.
pub fn min_expected(t: &Table2x2) -> f64 {
    let (rows, cols, n) = margins(t);
    let mut m = f64::INFINITY;
    for r in rows {
        for c in cols {
            m = m.min(r as f64 * c as f64 / n as f64);
        }
    }
    m
}

/// Pearson chi-square with one degree of freedom, optionally with Yates'
/// continuity correction. `None` for a table with a zero margin.
pub fn chi_square(t: &Table2x2, yates: bool) -> Option<ChiSquare> {
    if degenerate(t).is_some() {
        return None;
    }
    let (rows, cols, n) = margins(t);
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] as f64 * cols[j] as f64 / n as f64;
            let mut d = (t[i][j] as f64 - e).abs();
            if yates {
                d = (d - 0.5).max(0.0);
            }
            stat += d * d / e;
        }
    }
    let p = ChiSquared::new(1.0).expect("one degree of freedom").sf(stat);
    Some(ChiSquare {
        statistic: stat,
        p: p.clamp(0.0, 1.0),
        yates,
    })
}

/// Chi-square with Yates' correction exactly when some expected cell is
/// below 5.
pub fn chi_square_auto(t: &Table2x2) -> Option<ChiSquare> {
    if degenerate(t).is_some() {
        return None;
    }
    chi_square(t, min_expected(t) < 5.0)
}

/// Two-sided Fisher exact p: the total probability of tables with the same
/// margins that are no more likely than the observed one.
pub fn fisher_exact(t: &Table2x2) -> Option<f64> {
    if degenerate(t).is_some() {
        return None;
    }
    let (rows, cols, n) = margins(t);
    let h = Hypergeometric::new(n, cols[0], rows[0]).ok()?;
    let lo = rows[0].saturating_sub(cols[1]);
    let hi = rows[0].min(cols[0]);
    let observed = h.pmf(t[0][0]);
    let p: f64 = (lo..=hi)
        .map(|x| h.pmf(x))
        .filter(|q| *q <= observed * (1.0 + FISHER_REL_TOL))
        .sum();
    Some(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchT {
    pub statistic: f64,
    pub df: f64,
    pub p: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Welch's unequal-variance two-sample t, two-sided. `None` with fewer
/// than two observations per group or zero variance in both.
pub fn welch_t(x: &[f64], y: &[f64]) -> Option<WelchT> {
    if x.len() < 2 || y.len() < 2 {
        return None;
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (sx, sy) = (vx / x.len() as f64, vy / y.len() as f64);
    let se2 = sx + sy;
    if se2 <= 0.0 {
        return None;
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / (sx * sx / (x.len() as f64 - 1.0) + sy * sy / (y.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = 2.0 * dist.sf(t.abs());
    Some(WelchT {
        statistic: t,
        df,
        p: p.clamp(0.0, 1.0),
    })
}

/// One row of the significance table. Skipped comparisons carry a `note`
/// and no statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub comparison: String,
    pub metric: String,
    pub test: String,
    pub statistic: Option<f64>,
    pub p: Option<f64>,
    #[serde(default)]
    pub note: Option<String>,
}

impl Significance {
    fn skipped(comparison: &str, metric: &str, test: &str, why: String) -> Self {
        Significance {
            comparison: comparison.into(),
            metric: metric.into(),
            test: test.into(),
            statistic: None,
            p: None,
            note: Some(why),
        }
    }
}

/// Compares two proportions given as (successes, n). Always a chi-square
/// (Yates-corrected when an expected cell is small) and additionally Fisher
/// when either group has fewer than 20 observations.
pub fn compare_proportions(comparison: &str, metric: &str, a: (u64, u64), b: (u64, u64)) -> Vec<Significance> {
    let t: Table2x2 = [[a.0, a.1.saturating_sub(a.0)], [b.0, b.1.saturating_sub(b.0)]];
    if let Some(why) = degenerate(&t) {
        return vec![Significance::skipped(comparison, metric, "chi-square", why)];
    }
    let chi = chi_square_auto(&t).expect("non-degenerate");
    let mut out = vec![Significance {
        comparison: comparison.into(),
        metric: metric.into(),
        test: if chi.yates { "chi-square (Yates)".into() } else { "chi-square".into() },
        statistic: Some(chi.statistic),
        p: Some(chi.p),
        note: None,
    }];
    if a.1 < 20 || b.1 < 20 {
        out.push(Significance {
            comparison: comparison.into(),
            metric: metric.into(),
            test: "fisher".into(),
            statistic: None,
            p: fisher_exact(&t),
            note: None,
        });
    }
    out
}

/// Compares two samples of per-subject values with Welch's t.
pub fn compare_means(comparison: &str, metric: &str, x: &[f64], y: &[f64]) -> Significance {
    match welch_t(x, y) {
        Some(w) => Significance {
            comparison: comparison.into(),
            metric: metric.into(),
            test: "welch t".into(),
            statistic: Some(w.statistic),
            p: Some(w.p),
            note: None,
        },
        None => {
            let why = if x.len() < 2 || y.len() < 2 {
                "fewer than two observations in a group"
            } else if x.iter().chain(y).all(|v| *v == x[0]) {
                "all values identical"
            } else {
                "zero variance in both groups"
            };
            Significance::skipped(comparison, metric, "welch t", why.into())
        }
    }
}
