//! Parameter selection: the transition threshold from the split of the
//! dominant Morse set, and the grid size from occupancy coverage.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::field::{enclosing, shift_lattice};
use crate::graph::scc;
use crate::grid::{build_grid, GridSpec};
use crate::transitions::{count_transitions, Digraph, TransitionCounts};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuStarSelection {
    pub mu_star: u64,
    /// `(mu_star, #MS_first / #MS_second)`, infinite with fewer than two sets.
    pub curve: Vec<(u64, f64)>,
}

fn size_ratio(g: &Digraph) -> f64 {
    let mut sizes: Vec<usize> = scc(g)
        .into_iter()
        .filter(|c| {
            c.len() > 1 || g.index_of(c[0]).is_some_and(|v| g.has_self_loop(v))
        })
        .map(|c| c.len())
        .collect();
    if sizes.len() < 2 {
        return f64::INFINITY;
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes[0] as f64 / sizes[1] as f64
}

/// Ratio of the two largest Morse set sizes for every threshold in
/// `1..=mu_max`. The filtered map only changes where the threshold passes an
/// observed count, so decompositions are recomputed only there.
pub fn ratio_curve(tc: &TransitionCounts, rho: f64, mu_max: u64) -> Result<Vec<(u64, f64)>> {
    if mu_max < 1 {
        return Err(Error::param("mu_max must be at least 1"));
    }
    let flows = tc.admissible_flows(rho)?;
    let nodes: Vec<_> = tc.occupied().map(|(c, _)| c).collect();
    let mut curve = Vec::with_capacity(mu_max as usize);
    let mut cached: Option<f64> = None;
    let mut counts: Vec<u64> = flows.iter().map(|&(_, _, c)| c).collect();
    counts.sort_unstable();
    counts.dedup();
    for mu in 1..=mu_max {
        // edge set for `mu` equals that for `mu - 1` unless some count equals `mu - 1`
        if mu == 1 || counts.binary_search(&(mu - 1)).is_ok() {
            cached = None;
        }
        let ratio = match cached {
            Some(r) => r,
            None => {
                let g = Digraph::new(
                    nodes.iter().copied(),
                    flows.iter().filter(|&&(_, _, c)| c >= mu).map(|&(i, j, _)| (i, j)),
                )?;
                size_ratio(&g)
            }
        };
        cached = Some(ratio);
        curve.push((mu, ratio));
    }
    Ok(curve)
}

fn first_below(curve: &[(u64, f64)], bound: f64) -> Option<u64> {
    curve.iter().find(|&&(_, r)| r < bound).map(|&(mu, _)| mu)
}

fn check_bound(ratio_bound: f64) -> Result<()> {
    if !(ratio_bound > 1.0) {
        return Err(Error::param(format!("ratio bound must exceed 1, got {ratio_bound}")));
    }
    Ok(())
}

pub fn select_mu_star_from_counts(
    tc: &TransitionCounts,
    rho: f64,
    ratio_bound: f64,
    mu_max: u64,
) -> Result<MuStarSelection> {
    check_bound(ratio_bound)?;
    let curve = ratio_curve(tc, rho, mu_max)?;
    match first_below(&curve, ratio_bound) {
        Some(mu_star) => Ok(MuStarSelection { mu_star, curve }),
        None => Err(Error::ThresholdNotFound {
            mu_max,
            ratio_bound,
            curve,
        }),
    }
}

/// Smallest threshold at which the largest Morse set is less than
/// `ratio_bound` times the second largest.
pub fn select_mu_star(
    d: &Dataset,
    grid: &GridSpec,
    rho: f64,
    ratio_bound: f64,
    mu_max: u64,
) -> Result<MuStarSelection> {
    let tc = count_transitions(d, grid)?;
    select_mu_star_from_counts(&tc, rho, ratio_bound, mu_max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedMuStar {
    pub mean: f64,
    /// `mean` rounded half-up.
    pub chosen: u64,
    pub per_shift: Vec<(Vec<f64>, Option<u64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSettings {
    pub shift_increment: f64,
    pub enclosing_half_width: Option<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            shift_increment: 0.01,
            enclosing_half_width: None,
        }
    }
}

/// Threshold selection repeated on every grid shift and averaged.
pub fn select_mu_star_averaged(
    d: &Dataset,
    h: f64,
    rho: f64,
    ratio_bound: f64,
    mu_max: u64,
    sweep: &SweepSettings,
) -> Result<AveragedMuStar> {
    check_bound(ratio_bound)?;
    if d.is_empty() {
        return Err(Error::Empty("dataset has no series"));
    }
    let (bound, cap) = enclosing(d, sweep.enclosing_half_width)?;
    let lattice = shift_lattice(d.dim(), h, sweep.shift_increment)?;
    let per_shift = lattice
        .into_par_iter()
        .map(|delta| {
            let grid = build_grid(d.dim(), h, cap, &delta, bound)?;
            match select_mu_star(d, &grid, rho, ratio_bound, mu_max) {
                Ok(sel) => Ok((delta, Some(sel.mu_star))),
                Err(Error::ThresholdNotFound { .. }) => {
                    log::warn!("no threshold found at shift {delta:?}");
                    Ok((delta, None))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let found: Vec<u64> = per_shift.iter().filter_map(|(_, m)| *m).collect();
    if found.is_empty() {
        return Err(Error::ThresholdNotFound {
            mu_max,
            ratio_bound,
            curve: Vec::new(),
        });
    }
    let mean = found.iter().sum::<u64>() as f64 / found.len() as f64;
    Ok(AveragedMuStar {
        mean,
        chosen: (mean + 0.5).floor() as u64,
        per_shift,
    })
}

/// `n -> h^m * #{cells with at least n points}` for `n = 1..=n_max` on the
/// unshifted grid.
pub fn grid_coverage(d: &Dataset, h: f64, n_max: u64) -> Result<Vec<(u64, f64)>> {
    if d.point_count() == 0 {
        return Err(Error::Empty("dataset has no points"));
    }
    let grid = build_grid(d.dim(), h, f64::INFINITY, &vec![0.0; d.dim()], d.max_abs())?;
    let tc = count_transitions(d, &grid)?;
    let area = h.powi(d.dim() as i32);
    let mut occupancy: Vec<u64> = tc.occupied().map(|(_, n)| n).collect();
    occupancy.sort_unstable();
    Ok((1..=n_max)
        .map(|n| {
            let at_least = occupancy.len() - occupancy.partition_point(|&k| k < n);
            (n, area * at_least as f64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub h: f64,
    pub band_mean: f64,
    pub curve: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRecommendation {
    pub h: f64,
    pub table: Vec<CoverageRow>,
}

/// Coverage curve length used for the tables.
pub const COVERAGE_N_MAX: u64 = 100;

/// Candidate with the largest mean coverage over `band` (inclusive).
pub fn recommend_h(d: &Dataset, candidates: &[f64], band: (u64, u64)) -> Result<GridRecommendation> {
    if candidates.is_empty() {
        return Err(Error::Empty("no candidate grid sizes"));
    }
    let (lo, hi) = band;
    if !(1 <= lo && lo <= hi) {
        return Err(Error::param(format!("invalid occupancy band [{lo}, {hi}]")));
    }
    let n_max = hi.max(COVERAGE_N_MAX);
    let table = candidates
        .iter()
        .map(|&h| {
            let curve = grid_coverage(d, h, n_max)?;
            let band_mean = curve[(lo - 1) as usize..hi as usize]
                .iter()
                .map(|&(_, v)| v)
                .sum::<f64>()
                / (hi - lo + 1) as f64;
            Ok(CoverageRow { h, band_mean, curve })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = table
        .iter()
        .fold(&table[0], |best, row| if row.band_mean > best.band_mean { row } else { best });
    Ok(GridRecommendation {
        h: best.h,
        table,
    })
}
