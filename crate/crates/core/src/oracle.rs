//! Brute-force references for tests. Nothing here calls into `editmatrix`
//! or `searchgraph`: alignments are found by walking keep-masks directly.

use std::collections::BTreeSet;

use crate::attack::{AttackConfig, Resolved};
use crate::corebits::Bits;
use crate::error::{Error, Result};
use crate::patterns::{trim_for_h, ModelKind};
use crate::searchgraph::AlignmentSolution;

/// Largest `N` accepted by [`brute_force_distance`].
pub const MAX_ORACLE_N: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub distance: u32,
    pub optimal_alignments: BTreeSet<AlignmentSolution>,
}

fn check_dims(x: &Bits, y: &Bits, kmax: usize) -> Result<()> {
    let (n, m) = (x.len(), y.len());
    if m == 0 || m > n || kmax == 0 {
        return Err(Error::Dimensions { n, m, kmax });
    }
    Ok(())
}

/// Visits every kept-position list `p_1 < .. < p_M` (0-based) whose gaps,
/// leading run and trailing run are all at most `kmax`.
fn for_each_mask(n: usize, m: usize, kmax: usize, mut visit: impl FnMut(&[usize])) {
    fn go(n: usize, m: usize, kmax: usize, from: usize, kept: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if kept.len() == m {
            if n - from <= kmax {
                visit(kept);
            }
            return;
        }
        for p in from..n.min(from + kmax + 1) {
            // enough room left for the remaining kept bits
            if n - p < m - kept.len() {
                break;
            }
            kept.push(p);
            go(n, m, kmax, p + 1, kept, visit);
            kept.pop();
        }
    }
    go(n, m, kmax, 0, &mut Vec::with_capacity(m), &mut visit);
}

/// Exact distance and every optimal alignment by mask enumeration.
pub fn brute_force_distance(x: &Bits, y: &Bits, kmax: usize) -> Result<OracleResult> {
    check_dims(x, y, kmax)?;
    let (n, m) = (x.len(), y.len());
    if n > MAX_ORACLE_N {
        return Err(Error::TooLarge(format!("N={n} exceeds {MAX_ORACLE_N}")));
    }
    let mut best = u32::MAX;
    let mut found = BTreeSet::new();
    for_each_mask(n, m, kmax, |kept| {
        let noise: Vec<usize> = kept
            .iter()
            .zip(y.iter())
            .filter(|(&p, b)| x[p] != *b)
            .map(|(&p, _)| p + 1)
            .collect();
        let cost = (n - m + noise.len()) as u32;
        if cost > best {
            return;
        }
        if cost < best {
            best = cost;
            found.clear();
        }
        let mut mask = vec![0u8; n];
        for &p in kept {
            mask[p] = 1;
        }
        found.insert(AlignmentSolution {
            keep_mask: Bits::from(mask),
            noise_positions: noise,
            cost,
        });
    });
    if found.is_empty() {
        return Err(Error::Infeasible {
            gap: n - m,
            m,
            kmax,
        });
    }
    Ok(OracleResult {
        distance: best,
        optimal_alignments: found,
    })
}

/// Whether every constrained alignment costs more than `t`. Depth-first
/// over kept positions with the substitution budget as the bound, so it
/// stays fast near `t = N - M` for any `N`.
pub fn exceeds_threshold(x: &Bits, y: &Bits, kmax: usize, t: u32) -> Result<bool> {
    check_dims(x, y, kmax)?;
    let (n, m) = (x.len(), y.len());
    let gap = (n - m) as u32;
    if t < gap {
        return Ok(true);
    }
    let budget = t - gap;
    let (xs, ys) = (x.as_slice(), y.as_slice());

    fn go(xs: &[u8], ys: &[u8], kmax: usize, from: usize, k: usize, left: u32) -> bool {
        let (n, m) = (xs.len(), ys.len());
        if k == m {
            return n - from <= kmax;
        }
        for p in from..n.min(from + kmax + 1) {
            if n - p < m - k {
                break;
            }
            let miss = (xs[p] != ys[k]) as u32;
            if miss <= left && go(xs, ys, kmax, p + 1, k + 1, left - miss) {
                return true;
            }
        }
        false
    }
    Ok(!go(xs, ys, kmax, 0, 0, budget))
}

/// Exact distance for instances too long for [`brute_force_distance`]:
/// memoized recursion on (next unused position, bits of `y` placed).
pub fn min_distance(x: &Bits, y: &Bits, kmax: usize) -> Result<Option<u32>> {
    check_dims(x, y, kmax)?;
    let (n, m) = (x.len(), y.len());
    const INF: u32 = u32::MAX / 2;
    let mut memo = vec![vec![u32::MAX; m + 1]; n + 1];
    fn go(x: &Bits, y: &Bits, kmax: usize, p: usize, k: usize, memo: &mut [Vec<u32>]) -> u32 {
        let (n, m) = (x.len(), y.len());
        if memo[p][k] != u32::MAX {
            return memo[p][k];
        }
        let v = if k == m {
            if n - p <= kmax {
                (n - p) as u32
            } else {
                INF
            }
        } else {
            (0..=kmax)
                .take_while(|d| p + d < n)
                .map(|d| {
                    let rest = go(x, y, kmax, p + d + 1, k + 1, memo);
                    rest.saturating_add(d as u32 + (x[p + d] != y[k]) as u32)
                })
                .min()
                .unwrap_or(INF)
                .min(INF)
        };
        memo[p][k] = v;
        v
    }
    let d = go(x, y, kmax, 0, 0, &mut memo);
    Ok((d < INF).then_some(d))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForceAttack {
    pub trimmed: Bits,
    pub discarded: Bits,
    /// `(register, distance)` for every nonzero register; `None` when no
    /// constrained alignment exists.
    pub distances: Vec<(u64, Option<u32>)>,
    pub min_distance: Option<u32>,
    pub minimum_set: Vec<u64>,
}

/// Exact distance of every nonzero target state against the trimmed
/// intercepted sequence.
pub fn brute_force_attack(config: &AttackConfig, intercepted: &Bits) -> Result<BruteForceAttack> {
    let r = Resolved::new(config)?;
    if r.l > 16 {
        return Err(Error::TooLarge(format!("2^{} states", r.l)));
    }
    let trim = trim_for_h(intercepted, config.h, r.l, &r.params)?;
    let (n, m) = r.dimensions(config, trim.trimmed.len())?;
    let mut distances = Vec::new();
    for reg in 1u64..1 << r.l {
        let d = match r.model {
            ModelKind::Decimation => {
                let x = r.attacked_poly.sequence_from_u64(reg, n);
                min_distance(&x, &trim.trimmed, r.kmax)?
            }
            ModelKind::Insertion => {
                let y = r.attacked_poly.sequence_from_u64(reg, m);
                min_distance(&trim.trimmed, &y, r.kmax)?
            }
        };
        distances.push((reg, d));
    }
    let min_distance = distances.iter().filter_map(|(_, d)| *d).min();
    let minimum_set = distances
        .iter()
        .filter(|(_, d)| d.is_some() && *d == min_distance)
        .map(|(r, _)| *r)
        .collect();
    Ok(BruteForceAttack {
        trimmed: trim.trimmed,
        discarded: trim.discarded,
        distances,
        min_distance,
        minimum_set,
    })
}
