//! The relaying schemes: hybrid, compress-and-forward, multi-layer and
//! single-layer decode-and-forward, plus the cutset bound as a reference.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homotopy::{
    cumulative_violation, initial_point_for, lift_allocation, run_homotopy, HomotopyOptions, HomotopyTrace,
    InitStrategy, Mode,
};
use crate::model::{
    caps_from_cumulative, costs_from, cum_betas_from, cutset_bound, decoding_caps_from, sum_rate, Allocation,
    CumulativePoint, NetworkConfig, Permutation,
};
use crate::oracle::{grid_search, inner_rate_assignment, BetaGrid, GridSpec, PowerGrid};
use crate::scalar::Scalar;

/// Largest relay count for the exhaustive permutation search.
pub const MAX_EXHAUSTIVE_RELAYS: usize = 8;

/// Largest relay count for which multi-layer DF is cross-checked on a
/// power grid.
pub const DF_GRID_MAX_RELAYS: usize = 3;

const DF_GRID_POINTS: usize = 50;
const SNAP_THRESHOLD: f64 = 1e-7;
const SNAP_MAX_LOSS: f64 = 1e-9;
const RECOVERY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Hybrid,
    Cf,
    DfMultiLayer,
    DfSingleLayer,
    Cutset,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Hybrid => "hybrid",
            Scheme::Cf => "cf",
            Scheme::DfMultiLayer => "df-ml",
            Scheme::DfSingleLayer => "df-sl",
            Scheme::Cutset => "cutset",
        }
    }
}

/// How a solution was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics<T> {
    ClosedForm,
    Homotopy(HomotopyTrace<T>),
    Grid { evaluations: u64 },
}

impl<T> Diagnostics<T> {
    /// Condensation subproblems solved (zero for non-iterative results).
    pub fn iterations(&self) -> usize {
        match self {
            Diagnostics::Homotopy(t) => t.iterations,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub scheme: Scheme,
    pub sum_rate: T,
    /// Absent for the cutset bound.
    pub allocation: Option<Allocation<T>>,
    pub permutation: Permutation,
    pub diagnostics: Diagnostics<T>,
}

/// Permutation search strategy of the hybrid solver.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PermutationSearch {
    /// Every decompression order (up to [`MAX_EXHAUSTIVE_RELAYS`] relays).
    Exhaustive,
    /// Only the increasing-gain order. A heuristic, not an optimality claim.
    SortedByGain,
    /// A single given order.
    Fixed(Permutation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOptions {
    pub homotopy: HomotopyOptions,
    pub search: PermutationSearch,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self {
            homotopy: HomotopyOptions::default(),
            search: PermutationSearch::Exhaustive,
        }
    }
}

/// Largest compression coefficient relay `g` can afford with backhaul `c`
/// when `prev` is the weighted compression already decompressed:
/// `(2^c − 1)(1 + P·prev) / (2^c (1 + P·prev) + P·g)`.
pub fn cf_beta_at<T: Scalar>(c: T, g: T, power: T, prev: T) -> T {
    let two_c = T::lit(2.0).powf(c);
    let base = T::one() + power * prev;
    (two_c - T::one()) * base / (two_c * base + power * g)
}

/// Closed-form compression coefficients of pure CF, computed in
/// decompression order; indexed by relay.
pub fn cf_closed_form_betas<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, power: T) -> Vec<T> {
    let mut beta = vec![T::zero(); cfg.num_relays()];
    let mut acc = T::zero();
    for &r in perm.order() {
        beta[r] = cf_beta_at(cfg.backhaul()[r], cfg.gain(r), power, acc);
        acc = acc + cfg.gain(r) * beta[r];
    }
    beta
}

/// Completes layer powers and compression coefficients into the best
/// allocation they support: coefficients are capped so every compression
/// fits its backhaul, the remaining backhaul goes to DF, and layer rates
/// are the greedy maximum under the decodability and joint-decoding caps.
pub(crate) fn finish_allocation<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    layer_powers: Vec<T>,
    beta: Vec<T>,
) -> Allocation<T> {
    let m = cfg.num_relays();
    let total: T = layer_powers.iter().copied().sum();
    let mut beta = beta;
    let mut acc = T::zero();
    for &r in perm.order() {
        let cap = cf_beta_at(cfg.backhaul()[r], cfg.gain(r), total, acc);
        beta[r] = beta[r].max(T::zero()).min(cap);
        acc = acc + cfg.gain(r) * beta[r];
    }
    let cum_betas = cum_betas_from(cfg.gains(), perm, &beta);
    let costs = costs_from(perm, total, &cum_betas, &beta);
    let tiny = T::lit(1e-12);
    let df_split: Vec<T> = (0..m)
        .map(|r| {
            let c = cfg.backhaul()[r];
            let d = (c - costs[r]).max(T::zero()).min(c);
            if d <= tiny * c.max(T::one()) {
                T::zero()
            } else {
                d
            }
        })
        .collect();
    let mut cum_powers = crate::model::suffix_sums(&layer_powers);
    let caps = caps_from_cumulative(cfg.gains(), &cum_powers);
    cum_powers.truncate(m + 1);
    let total_beta = acc;
    let d = decoding_caps_from(&df_split, &cum_powers, total_beta);
    let (mut layer_rates, _) = inner_rate_assignment(&caps, &d);
    layer_rates.push((T::one() + layer_powers[m] * total_beta).bits());
    Allocation {
        layer_powers,
        beta,
        df_split,
        layer_rates,
    }
}

/// Allocation of the original problem from a cumulative point: powers and
/// coefficients by differencing, DF backhaul by equality in the backhaul
/// constraints, rates by the greedy suffix recursion. Near-zero powers and
/// coefficients are snapped to exactly zero when that costs at most `1e-9`
/// bits.
pub fn recover_allocation<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    pt: &CumulativePoint<T>,
) -> Result<Allocation<T>> {
    let m = cfg.num_relays();
    let violation = cumulative_violation(cfg, perm, pt);
    if !(violation <= T::lit(RECOVERY_TOL)) {
        return Err(Error::InfeasibleCumulativePoint(format!(
            "constraint violated by {violation}"
        )));
    }
    let mut layer_powers: Vec<T> = (0..=m)
        .map(|k| (pt.cum_power(k) - pt.cum_power(k + 1)).max(T::zero()))
        .collect();
    let total: T = layer_powers.iter().copied().sum();
    if total > cfg.power() {
        let s = cfg.power() / total;
        layer_powers.iter_mut().for_each(|p| *p = *p * s);
    }
    let mut beta = vec![T::zero(); m];
    for pos in 0..m {
        let r = perm.relay_at(pos);
        beta[r] = ((pt.cum_beta(pos + 1) - pt.cum_beta(pos)) / cfg.gain(r)).max(T::zero());
    }
    let base = finish_allocation(cfg, perm, layer_powers.clone(), beta.clone());
    let base_rate = sum_rate(cfg, &base);

    let threshold = T::lit(SNAP_THRESHOLD);
    let snapped_beta: Vec<T> = beta
        .iter()
        .map(|&b| if b <= threshold { T::zero() } else { b })
        .collect();
    let mut snapped_powers = layer_powers.clone();
    let scale = cfg.power();
    for k in 0..=m {
        let p = snapped_powers[k];
        if p > T::zero() && p <= threshold * scale {
            snapped_powers[k] = T::zero();
            let to = if k < m { k + 1 } else { m.saturating_sub(1) };
            if to != k {
                snapped_powers[to] = snapped_powers[to] + p;
            }
        }
    }
    let a = finish_allocation(cfg, perm, snapped_powers.clone(), snapped_beta.clone());
    let b = if snapped_powers[m] == T::zero() {
        finish_allocation(cfg, perm, snapped_powers, vec![T::zero(); m])
    } else {
        a.clone()
    };
    let (ra, rb) = (sum_rate(cfg, &a), sum_rate(cfg, &b));
    let loss = T::lit(SNAP_MAX_LOSS);
    Ok(if rb >= base_rate.max(ra) - loss {
        b
    } else if ra >= base_rate - loss {
        a
    } else {
        base
    })
}

fn solution<T: Scalar>(
    cfg: &NetworkConfig<T>,
    scheme: Scheme,
    alloc: Allocation<T>,
    permutation: Permutation,
    diagnostics: Diagnostics<T>,
) -> Solution<T> {
    Solution {
        scheme,
        sum_rate: sum_rate(cfg, &alloc),
        allocation: Some(alloc),
        permutation,
        diagnostics,
    }
}

/// Pure compress-and-forward for a fixed decompression order.
pub fn solve_cf<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation) -> Result<Solution<T>> {
    let m = cfg.num_relays();
    if perm.len() != m {
        return Err(Error::InvalidPermutation(format!(
            "permutation of {} for {m} relays",
            perm.len()
        )));
    }
    let beta = cf_closed_form_betas(cfg, perm, cfg.power());
    let mut layer_powers = vec![T::zero(); m + 1];
    layer_powers[m] = cfg.power();
    let alloc = finish_allocation(cfg, perm, layer_powers, beta);
    Ok(solution(cfg, Scheme::Cf, alloc, perm.clone(), Diagnostics::ClosedForm))
}

/// Pure compress-and-forward, best over every decompression order (ties to
/// the first in lexicographic order).
pub fn solve_cf_best<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<Solution<T>> {
    let m = cfg.num_relays();
    if m > MAX_EXHAUSTIVE_RELAYS {
        return Err(Error::TooManyRelays {
            relays: m,
            limit: MAX_EXHAUSTIVE_RELAYS,
            what: "permutation search",
        });
    }
    let mut best: Option<Solution<T>> = None;
    for perm in Permutation::all(m) {
        let s = solve_cf(cfg, &perm)?;
        if best.as_ref().is_none_or(|b| s.sum_rate > b.sum_rate) {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// Single-layer DF: all power on the one layer that maximizes
/// `min(log2(1 + g_i P), Σ_{j≥i} C_j)`, ties to the weaker relay.
pub fn solve_df_sl<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<Solution<T>> {
    let m = cfg.num_relays();
    let mut best = (0, T::neg_infinity());
    for i in 0..m {
        let c_sum: T = cfg.backhaul()[i..].iter().copied().sum();
        let v = (T::one() + cfg.gain(i) * cfg.power()).bits().min(c_sum);
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut layer_powers = vec![T::zero(); m + 1];
    layer_powers[best.0] = cfg.power();
    let perm = Permutation::identity(m);
    let alloc = finish_allocation(cfg, &perm, layer_powers, vec![T::zero(); m]);
    Ok(solution(
        cfg,
        Scheme::DfSingleLayer,
        alloc,
        perm,
        Diagnostics::ClosedForm,
    ))
}

/// Cutset bound as a pseudo-solution without allocation.
pub fn solve_cutset<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<Solution<T>> {
    Ok(Solution {
        scheme: Scheme::Cutset,
        sum_rate: cutset_bound(cfg)?,
        allocation: None,
        permutation: Permutation::identity(cfg.num_relays()),
        diagnostics: Diagnostics::ClosedForm,
    })
}

struct Candidate<T> {
    alloc: Allocation<T>,
    rate: T,
    perm: Permutation,
    diagnostics: Diagnostics<T>,
}

/// Highest rate wins; ties go to the earliest candidate.
fn best_of<T: Scalar>(cands: Vec<Candidate<T>>) -> Option<Candidate<T>> {
    let mut best: Option<Candidate<T>> = None;
    for c in cands {
        if best.as_ref().is_none_or(|b| c.rate > b.rate) {
            best = Some(c);
        }
    }
    best
}

fn homotopy_candidate<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    start: &CumulativePoint<T>,
    opts: &HomotopyOptions,
) -> Option<Candidate<T>> {
    let (end, trace) = run_homotopy(cfg, perm, start, opts).ok()?;
    let alloc = recover_allocation(cfg, perm, &end).ok()?;
    Some(Candidate {
        rate: sum_rate(cfg, &alloc),
        alloc,
        perm: perm.clone(),
        diagnostics: Diagnostics::Homotopy(trace),
    })
}

fn strategies(multi_start: usize, seed: u64) -> Vec<InitStrategy> {
    let mut out = vec![InitStrategy::PureCf, InitStrategy::DfLeaning, InitStrategy::Blend];
    out.truncate(multi_start);
    let mut j = 0;
    while out.len() < multi_start {
        out.push(InitStrategy::Random(seed.wrapping_add(j)));
        j += 1;
    }
    out
}

fn candidate_from<T: Scalar>(cfg: &NetworkConfig<T>, s: &Solution<T>) -> Candidate<T> {
    Candidate {
        alloc: s.allocation.clone().expect("scheme solutions carry allocations"),
        rate: s.sum_rate,
        perm: s.permutation.clone(),
        diagnostics: s.diagnostics.clone(),
    }
    .checked(cfg)
}

impl<T: Scalar> Candidate<T> {
    fn checked(self, cfg: &NetworkConfig<T>) -> Self {
        debug_assert!((sum_rate(cfg, &self.alloc) - self.rate).abs() <= T::lit(1e-9));
        self
    }
}

/// Multi-layer DF: the homotopy restricted to no compression and an empty
/// top layer, from several starts including the single-layer optimum; for
/// up to [`DF_GRID_MAX_RELAYS`] relays also a power-ladder grid whose best
/// point seeds one more run.
pub fn solve_df_ml<T: Scalar>(cfg: &NetworkConfig<T>, opts: &HomotopyOptions) -> Result<Solution<T>> {
    let m = cfg.num_relays();
    let opts = HomotopyOptions {
        mode: Mode::DecodeForward,
        ..opts.clone()
    };
    let floor = T::lit(opts.floor);
    let perm = Permutation::identity(m);
    let sl = solve_df_sl(cfg)?;

    let mut fixed = vec![candidate_from(cfg, &sl)];
    let mut starts: Vec<CumulativePoint<T>> = strategies(opts.multi_start, opts.seed)
        .into_iter()
        .filter(|s| *s != InitStrategy::PureCf)
        .map(|s| initial_point_for(cfg, &perm, s, Mode::DecodeForward, floor))
        .collect();
    starts.push(lift_allocation(
        cfg,
        &perm,
        sl.allocation.as_ref().expect("allocation"),
        Mode::DecodeForward,
        floor,
    )?);
    if m <= DF_GRID_MAX_RELAYS {
        let spec = GridSpec {
            points_per_dimension: DF_GRID_POINTS,
            powers: PowerGrid::NoTopLayer,
            betas: BetaGrid::Zero,
            ..GridSpec::default()
        };
        let grid = grid_search(cfg, &perm, &spec)?;
        let alloc = grid.allocation.as_ref().expect("allocation");
        starts.push(lift_allocation(cfg, &perm, alloc, Mode::DecodeForward, floor)?);
        fixed.push(Candidate {
            diagnostics: grid.diagnostics.clone(),
            ..candidate_from(cfg, &grid)
        });
    }
    let runs: Vec<Option<Candidate<T>>> = starts
        .par_iter()
        .map(|s| homotopy_candidate(cfg, &perm, s, &opts))
        .collect();
    let best = best_of(runs.into_iter().flatten().chain(fixed).collect()).expect("single-layer DF is a candidate");
    Ok(solution(cfg, Scheme::DfMultiLayer, best.alloc, perm, best.diagnostics))
}

/// The hybrid scheme: for every decompression order, the homotopy from the
/// initial strategies and from the lifted baseline allocations. The
/// baselines themselves are candidates too, so the result never falls
/// below them.
pub fn solve_hybrid<T: Scalar>(cfg: &NetworkConfig<T>, opts: &HybridOptions) -> Result<Solution<T>> {
    let m = cfg.num_relays();
    let perms = match &opts.search {
        PermutationSearch::Exhaustive => {
            if m > MAX_EXHAUSTIVE_RELAYS {
                return Err(Error::TooManyRelays {
                    relays: m,
                    limit: MAX_EXHAUSTIVE_RELAYS,
                    what: "exhaustive permutation search",
                });
            }
            Permutation::all(m)
        }
        PermutationSearch::SortedByGain => vec![Permutation::identity(m)],
        PermutationSearch::Fixed(p) => {
            if p.len() != m {
                return Err(Error::InvalidPermutation(format!("{} entries for {m} relays", p.len())));
            }
            vec![p.clone()]
        }
    };
    let hopts = HomotopyOptions {
        mode: Mode::Hybrid,
        ..opts.homotopy.clone()
    };
    let floor = T::lit(hopts.floor);
    let df_ml = solve_df_ml(cfg, &hopts)?;
    let df_sl = solve_df_sl(cfg)?;
    let cfs: Vec<Solution<T>> = perms.iter().map(|p| solve_cf(cfg, p)).collect::<Result<_>>()?;

    let mut fixed = vec![candidate_from(cfg, &df_ml), candidate_from(cfg, &df_sl)];
    fixed.extend(cfs.iter().map(|s| candidate_from(cfg, s)));

    let mut tasks: Vec<(usize, CumulativePoint<T>)> = Vec::new();
    for (pi, perm) in perms.iter().enumerate() {
        for s in strategies(hopts.multi_start, hopts.seed) {
            tasks.push((pi, initial_point_for(cfg, perm, s, Mode::Hybrid, floor)));
        }
        for base in [&cfs[pi], &df_ml, &df_sl] {
            let alloc = base.allocation.as_ref().expect("allocation");
            tasks.push((pi, lift_allocation(cfg, perm, alloc, Mode::Hybrid, floor)?));
        }
    }
    let runs: Vec<Option<Candidate<T>>> = tasks
        .par_iter()
        .map(|(pi, start)| homotopy_candidate(cfg, &perms[*pi], start, &hopts))
        .collect();
    let best = best_of(runs.into_iter().flatten().chain(fixed).collect()).expect("baselines are candidates");
    Ok(solution(cfg, Scheme::Hybrid, best.alloc, best.perm, best.diagnostics))
}
