//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the solver or the scoring code.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Compares `actual` against a golden file; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{name} differs from golden copy (rerun with UPDATE_GOLDEN=1 to refresh)"))
    }
}

/// Weights of the perfectly consistent chain, `w_k = phi_k * w_{k+1}`.
pub fn chain_weights(phi: &[f64]) -> Vec<f64> {
    let n = phi.len() + 1;
    let mut w = vec![1.0; n];
    for k in (0..n - 1).rev() {
        w[k] = phi[k] * w[k + 1];
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Largest FUCOM deviation of integer grid weights, in grid units.
fn deviation_units(phi: &[f64], w: &[i64]) -> f64 {
    let n = w.len();
    let mut worst: f64 = 0.0;
    for k in 0..n - 1 {
        worst = worst.max((w[k] as f64 - phi[k] * w[k + 1] as f64).abs());
        if k + 2 < n {
            worst = worst.max((w[k] as f64 - phi[k] * phi[k + 1] * w[k + 2] as f64).abs());
        }
    }
    worst
}

/// Grid minimum of the FUCOM objective over the simplex at step `1/steps`.
///
/// Exhaustive over the grid, with branch-and-bound pruning: weights are
/// fixed from the last criterion backwards, so every deviation involving
/// `w_k` is known once `w_k` is, and `w_1` is set by the sum. Returns the
/// minimum deviation and one minimizing weight vector.
pub fn grid_min_chi(phi: &[f64], steps: i64) -> (f64, Vec<f64>) {
    let n = phi.len() + 1;
    let h = 1.0 / steps as f64;

    // Rounded consistent chain as the starting bound.
    let mut start: Vec<i64> = chain_weights(phi).iter().map(|w| (w * steps as f64).round() as i64).collect();
    let rest: i64 = start[1..].iter().sum();
    start[0] = (steps - rest).max(0);
    let mut best = if start.iter().sum::<i64>() == steps {
        (deviation_units(phi, &start), start)
    } else {
        (f64::INFINITY, vec![0; n])
    };

    struct Search<'a> {
        phi: &'a [f64],
        steps: i64,
        best: (f64, Vec<i64>),
    }

    // Deviations of the two rows that start at `w_k`.
    fn local(phi: &[f64], w: &[i64], k: usize) -> f64 {
        let n = w.len();
        let mut d: f64 = 0.0;
        if k + 1 < n {
            d = d.max((w[k] as f64 - phi[k] * w[k + 1] as f64).abs());
        }
        if k + 2 < n {
            d = d.max((w[k] as f64 - phi[k] * phi[k + 1] * w[k + 2] as f64).abs());
        }
        d
    }

    fn descend(s: &mut Search, w: &mut Vec<i64>, k: usize, used: i64, partial: f64) {
        let n = w.len();
        if k == 0 {
            w[0] = s.steps - used;
            let total = partial.max(local(s.phi, w, 0));
            if total < s.best.0 {
                s.best = (total, w.clone());
            }
            return;
        }
        let remaining = s.steps - used;
        let (lo, hi) = if k + 1 < n {
            let centre = s.phi[k] * w[k + 1] as f64;
            (
                ((centre - s.best.0).floor() as i64 - 1).max(0),
                ((centre + s.best.0).ceil() as i64 + 1).min(remaining),
            )
        } else {
            (0, remaining)
        };
        for v in lo..=hi {
            w[k] = v;
            let p = partial.max(local(s.phi, w, k));
            if p < s.best.0 {
                descend(s, w, k - 1, used + v, p);
            }
        }
    }

    if n == 1 {
        return (0.0, vec![1.0]);
    }
    let mut search = Search { phi, steps, best: best.clone() };
    let mut w = vec![0; n];
    descend(&mut search, &mut w, n - 1, 0, 0.0);
    if search.best.0 < best.0 {
        best = search.best;
    }
    (best.0 * h, best.1.iter().map(|&x| x as f64 * h).collect())
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `A_i = sum_j x_ij w_j`, accumulated with compensation.
pub fn oracle_scores(rows: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|row| compensated_sum(row.iter().zip(w).map(|(x, w)| x * w)))
        .collect()
}

/// Competition rank by counting strictly better scores.
pub fn oracle_ranks(scores: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .map(|s| 1 + scores.iter().filter(|o| *o > s).count())
        .collect()
}

pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random_range(f64::MIN_POSITIVE..1.0f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn random_unit_rows(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| if rng.random_bool(0.3) { rng.random_range(0..2) as f64 } else { rng.random_range(0.0..=1.0) })
                .collect()
        })
        .collect()
}

/// Override set applied the slow way: fixed weights as given, the rest
/// scaled to fill `1 - sum(overrides)`.
pub fn oracle_override(codes: &[String], baseline: &[f64], overrides: &BTreeMap<String, f64>) -> Vec<f64> {
    let fixed: f64 = overrides.values().sum();
    let free: f64 = codes
        .iter()
        .zip(baseline)
        .filter(|(c, _)| !overrides.contains_key(*c))
        .map(|(_, w)| w)
        .sum();
    codes
        .iter()
        .zip(baseline)
        .map(|(c, w)| match overrides.get(c) {
            Some(v) => *v,
            None => w * (1.0 - fixed) / free,
        })
        .collect()
}

/// Every unordered pair whose strict order flips, as `[ahead before, ahead after]`.
pub fn oracle_reversals(ids: &[String], before: &[f64], after: &[f64], eps: f64) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for i in 0..ids.len() {
        for j in 0..ids.len() {
            if before[i] - before[j] > eps && after[j] - after[i] > eps {
                out.push((ids[i].clone(), ids[j].clone()));
            }
        }
    }
    out.sort();
    out
}
