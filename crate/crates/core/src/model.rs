//! Network instance and the exact rate/feasibility arithmetic of the
//! multi-layer hybrid relaying problem.
//!
//! Indexing is zero-based throughout: relays `0..M` are sorted by channel
//! gain, layers `0..=M` where layer `M` is the top layer decoded only at the
//! destination. All rates are in bits per channel use.

use crate::error::{Error, Result};
use crate::scalar::{db_to_linear, Scalar};

/// Largest compression coefficient accepted before `log(1 - beta)` is
/// treated as singular.
pub const BETA_MAX: f64 = 1.0 - 1e-12;

/// Default absolute tolerance on constraint slacks.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-7;

/// Largest relay count accepted by [`cutset_bound`].
pub const CUTSET_MAX_RELAYS: usize = 20;

/// A relay network: gains sorted non-decreasing, with the matching backhaul
/// capacities and the source power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig<T> {
    gains: Vec<T>,
    backhaul: Vec<T>,
    power: T,
    original_index: Vec<usize>,
}

impl<T: Scalar> NetworkConfig<T> {
    /// Builds a network from linear-scale gains, backhaul capacities in bits
    /// per channel use and a linear power budget. Relays are re-ordered by
    /// increasing gain (stable for ties); [`original_index`](Self::original_index)
    /// maps each sorted relay back to its input position.
    pub fn new(gains: Vec<T>, backhaul: Vec<T>, power: T) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidConfig("at least one relay is required".into()));
        }
        if gains.len() != backhaul.len() {
            return Err(Error::InvalidConfig(format!(
                "{} gains but {} backhaul capacities",
                gains.len(),
                backhaul.len()
            )));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > T::zero())) {
            return Err(Error::InvalidConfig(format!("gain {g} must be positive and finite")));
        }
        if let Some(c) = backhaul.iter().find(|c| !(c.is_finite() && **c >= T::zero())) {
            return Err(Error::InvalidConfig(format!(
                "backhaul {c} must be non-negative and finite"
            )));
        }
        if !(power.is_finite() && power > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "power {power} must be positive and finite"
            )));
        }

        let mut order: Vec<usize> = (0..gains.len()).collect();
        order.sort_by(|&a, &b| gains[a].partial_cmp(&gains[b]).expect("finite gains"));
        Ok(Self {
            gains: order.iter().map(|&i| gains[i]).collect(),
            backhaul: order.iter().map(|&i| backhaul[i]).collect(),
            power,
            original_index: order,
        })
    }

    /// Builds a network from gains and power given in dB.
    pub fn from_db(gains_db: &[T], power_db: T, backhaul: Vec<T>) -> Result<Self> {
        Self::new(
            gains_db.iter().map(|&g| db_to_linear(g)).collect(),
            backhaul,
            db_to_linear(power_db),
        )
    }

    pub fn num_relays(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[T] {
        &self.gains
    }

    pub fn gain(&self, relay: usize) -> T {
        self.gains[relay]
    }

    pub fn backhaul(&self) -> &[T] {
        &self.backhaul
    }

    pub fn power(&self) -> T {
        self.power
    }

    /// Input position of each sorted relay.
    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    /// Copy of this network with every backhaul capacity replaced.
    /// `backhaul` is given in sorted relay order.
    pub fn with_backhaul(&self, backhaul: Vec<T>) -> Result<Self> {
        let mut out = Self::new(self.gains.clone(), backhaul, self.power)?;
        out.original_index = out.original_index.iter().map(|&i| self.original_index[i]).collect();
        Ok(out)
    }
}

/// Wyner-Ziv decompression order: `order[pos]` is the relay decompressed at
/// position `pos`, `inverse[relay]` its position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    order: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        let mut inverse = vec![usize::MAX; m];
        for (pos, &relay) in order.iter().enumerate() {
            if relay >= m || inverse[relay] != usize::MAX {
                return Err(Error::InvalidPermutation(format!("{order:?} is not a bijection")));
            }
            inverse[relay] = pos;
        }
        Ok(Self { order, inverse })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            order: (0..m).collect(),
            inverse: (0..m).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    /// Relay decompressed at position `pos`.
    pub fn relay_at(&self, pos: usize) -> usize {
        self.order[pos]
    }

    /// Decompression position of `relay`.
    pub fn position_of(&self, relay: usize) -> usize {
        self.inverse[relay]
    }

    /// Every permutation of `m` relays in lexicographic order, identity first.
    pub fn all(m: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..m).collect();
        loop {
            out.push(Permutation::new(current.clone()).expect("valid permutation"));
            // next lexicographic permutation
            let Some(i) = (1..m).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..m).rev().find(|&j| current[j] > current[i - 1]).expect("pivot");
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }
}

/// A complete operating point: layer powers, compression coefficients,
/// DF backhaul splits and layer rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    /// `P_1..P_{M+1}`.
    pub layer_powers: Vec<T>,
    /// `beta_i = 1/(1 + sigma_i^2)` per relay; 0 means no compressed description.
    pub beta: Vec<T>,
    /// Backhaul devoted to decoded messages, per relay.
    pub df_split: Vec<T>,
    /// `R_1..R_{M+1}`.
    pub layer_rates: Vec<T>,
}

impl<T: Scalar> Allocation<T> {
    pub fn zeros(m: usize) -> Self {
        Self {
            layer_powers: vec![T::zero(); m + 1],
            beta: vec![T::zero(); m],
            df_split: vec![T::zero(); m],
            layer_rates: vec![T::zero(); m + 1],
        }
    }

    pub fn num_relays(&self) -> usize {
        self.beta.len()
    }

    pub fn check_shape(&self, m: usize) -> Result<()> {
        if self.layer_powers.len() != m + 1
            || self.beta.len() != m
            || self.df_split.len() != m
            || self.layer_rates.len() != m + 1
        {
            return Err(Error::InvalidAllocation(format!(
                "allocation shape does not match {m} relays"
            )));
        }
        Ok(())
    }

    /// Suffix sums `P̄_k = Σ_{j≥k} P_j`, with a trailing zero sentinel
    /// (length `M + 2`).
    pub fn cumulative_powers(&self) -> Vec<T> {
        suffix_sums(&self.layer_powers)
    }

    pub fn total_power(&self) -> T {
        self.layer_powers.iter().copied().sum()
    }

    /// `β̄_M = Σ_i g_i β_i`, independent of the decompression order.
    pub fn total_weighted_beta(&self, cfg: &NetworkConfig<T>) -> T {
        self.beta.iter().zip(cfg.gains()).map(|(&b, &g)| g * b).sum()
    }

    /// Compression noise variances `σ_i² = 1/β_i − 1` (infinite for β = 0).
    pub fn compression_noise(&self) -> Vec<T> {
        self.beta
            .iter()
            .map(|&b| {
                if b > T::zero() {
                    T::one() / b - T::one()
                } else {
                    T::infinity()
                }
            })
            .collect()
    }

    /// Backhaul left for compressed descriptions, `C_i − C_i^DF`.
    pub fn cf_split(&self, cfg: &NetworkConfig<T>) -> Vec<T> {
        cfg.backhaul()
            .iter()
            .zip(&self.df_split)
            .map(|(&c, &d)| c - d)
            .collect()
    }
}

/// Variables of the cumulative reformulation.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativePoint<T> {
    /// `P̄_1..P̄_{M+1}`, non-increasing.
    pub cum_powers: Vec<T>,
    /// `β̄_1..β̄_M` in decompression order, non-decreasing.
    pub cum_betas: Vec<T>,
    /// `γ_i` per relay, nominally `1 − β_i`.
    pub gamma: Vec<T>,
}

impl<T: Scalar> CumulativePoint<T> {
    pub fn num_relays(&self) -> usize {
        self.gamma.len()
    }

    /// `β̄_pos` with the `β̄_0 = 0` sentinel; `pos` is one-based here.
    pub fn cum_beta(&self, pos: usize) -> T {
        if pos == 0 {
            T::zero()
        } else {
            self.cum_betas[pos - 1]
        }
    }

    /// `P̄_k` with the `P̄_{M+2} = 0` sentinel (zero-based `k`).
    pub fn cum_power(&self, k: usize) -> T {
        self.cum_powers.get(k).copied().unwrap_or_else(T::zero)
    }

    /// `β̄_M`.
    pub fn total_beta(&self) -> T {
        self.cum_betas.last().copied().unwrap_or_else(T::zero)
    }

    /// `P_{M+1} = P̄_{M+1}`.
    pub fn top_power(&self) -> T {
        *self.cum_powers.last().expect("at least one layer")
    }
}

/// Constraint slacks (right-hand side minus left-hand side) of an
/// allocation against every constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<T> {
    /// Per-layer relay decodability, `cap_i − R_i`.
    pub rate_caps: Vec<T>,
    /// Per-relay backhaul, `C_i − C_i^DF − cost_i`.
    pub backhaul: Vec<T>,
    /// Per-suffix joint decoding, `D_k − Σ_{j≥k} R_j`.
    pub decoding: Vec<T>,
    /// Power budget, `P − Σ_k P_k`.
    pub budget: T,
    /// Top layer, `log2(1 + P_{M+1} β̄_M) − R_{M+1}`.
    pub top_layer: T,
    /// Smallest slack over the variable boxes (non-negativity, `β < 1`,
    /// `C^DF ≤ C`).
    pub bounds: T,
    pub feasible: bool,
    pub tolerance: T,
}

impl<T: Scalar> FeasibilityReport<T> {
    pub fn min_slack(&self) -> T {
        self.rate_caps
            .iter()
            .chain(&self.backhaul)
            .chain(&self.decoding)
            .chain([&self.budget, &self.top_layer, &self.bounds])
            .fold(T::infinity(), |acc, &s| acc.min(s))
    }
}

pub(crate) fn suffix_sums<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); values.len() + 1];
    for k in (0..values.len()).rev() {
        out[k] = out[k + 1] + values[k];
    }
    out
}

/// `log2((1 + g P̄_i)/(1 + g P̄_{i+1}))` for every relay layer, from
/// cumulative powers (at least `M + 1` entries; a missing `M + 2`-th entry
/// counts as zero).
pub(crate) fn caps_from_cumulative<T: Scalar>(gains: &[T], cum_powers: &[T]) -> Vec<T> {
    gains
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let hi = cum_powers[i];
            let lo = cum_powers[i + 1];
            ((T::one() + g * hi) / (T::one() + g * lo)).bits()
        })
        .collect()
}

/// `Σ_{j≥k} C_j^DF + log2((1 + P̄_k β̄_M)/(1 + P_{M+1} β̄_M))` for `k = 0..M`.
pub(crate) fn decoding_caps_from<T: Scalar>(df_split: &[T], cum_powers: &[T], total_beta: T) -> Vec<T> {
    let m = df_split.len();
    let top = cum_powers[m];
    let df_suffix = suffix_sums(df_split);
    (0..m)
        .map(|k| {
            let ratio = (T::one() + cum_powers[k] * total_beta) / (T::one() + top * total_beta);
            df_suffix[k] + ratio.bits()
        })
        .collect()
}

/// Wyner-Ziv backhaul cost of relay decompression positions, given the full
/// power `P̄_1`, cumulative betas in order and per-relay `log2(1/(1−β))`
/// terms. Returns per relay.
pub(crate) fn costs_from<T: Scalar>(perm: &Permutation, total_power: T, cum_betas: &[T], beta: &[T]) -> Vec<T> {
    let m = perm.len();
    (0..m)
        .map(|relay| {
            if beta[relay] <= T::zero() {
                return T::zero();
            }
            let pos = perm.position_of(relay);
            let prev = if pos == 0 { T::zero() } else { cum_betas[pos - 1] };
            let cur = cum_betas[pos];
            let ratio = (T::one() + total_power * cur) / (T::one() + total_power * prev);
            if beta[relay] >= T::one() {
                T::infinity()
            } else {
                ratio.bits() - (T::one() - beta[relay]).bits()
            }
        })
        .collect()
}

/// Weighted prefix sums `β̄_i = Σ_{j≤i} g_{π(j)} β_{π(j)}` in decompression
/// order.
pub(crate) fn cum_betas_from<T: Scalar>(gains: &[T], perm: &Permutation, beta: &[T]) -> Vec<T> {
    let mut acc = T::zero();
    perm.order()
        .iter()
        .map(|&relay| {
            acc = acc + gains[relay] * beta[relay];
            acc
        })
        .collect()
}

/// Maps an allocation to the cumulative variables.
pub fn cumulative_from_allocation<T: Scalar>(
    alloc: &Allocation<T>,
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
) -> CumulativePoint<T> {
    let m = cfg.num_relays();
    let mut cum_powers = alloc.cumulative_powers();
    cum_powers.truncate(m + 1);
    let cum_betas = cum_betas_from(cfg.gains(), perm, &alloc.beta);
    let gamma = (0..m)
        .map(|relay| {
            let pos = perm.position_of(relay);
            let prev = if pos == 0 { T::zero() } else { cum_betas[pos - 1] };
            T::one() - (cum_betas[pos] - prev) / cfg.gain(relay)
        })
        .collect();
    CumulativePoint {
        cum_powers,
        cum_betas,
        gamma,
    }
}

/// Per-layer decodability caps `log2((1+g_i P̄_i)/(1+g_i P̄_{i+1}))`.
pub fn layer_rate_caps<T: Scalar>(cfg: &NetworkConfig<T>, alloc: &Allocation<T>) -> Vec<T> {
    caps_from_cumulative(cfg.gains(), &alloc.cumulative_powers())
}

/// Backhaul consumed by each relay's compressed description.
pub fn compression_costs<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    alloc: &Allocation<T>,
) -> Result<Vec<T>> {
    let limit = T::lit(BETA_MAX);
    if let Some((relay, &b)) = alloc.beta.iter().enumerate().find(|(_, &b)| !(b < limit)) {
        return Err(Error::BetaOutOfRange {
            relay,
            value: b.to_f64().unwrap_or(f64::NAN),
        });
    }
    let cum_betas = cum_betas_from(cfg.gains(), perm, &alloc.beta);
    Ok(costs_from(perm, alloc.total_power(), &cum_betas, &alloc.beta))
}

/// Joint-decoding caps `D_k` on the suffix sums `Σ_{j≥k} R_j`.
pub fn decoding_caps<T: Scalar>(cfg: &NetworkConfig<T>, alloc: &Allocation<T>, _perm: &Permutation) -> Vec<T> {
    decoding_caps_from(
        &alloc.df_split,
        &alloc.cumulative_powers(),
        alloc.total_weighted_beta(cfg),
    )
}

/// Achieved sum-rate `Σ_{k≤M} R_k + log2(1 + P_{M+1} β̄_M)`.
pub fn sum_rate<T: Scalar>(cfg: &NetworkConfig<T>, alloc: &Allocation<T>) -> T {
    let m = cfg.num_relays();
    let df: T = alloc.layer_rates[..m].iter().copied().sum();
    df + (T::one() + alloc.layer_powers[m] * alloc.total_weighted_beta(cfg)).bits()
}

/// Evaluates every constraint family and reports slacks.
pub fn check_feasibility<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    alloc: &Allocation<T>,
    tol: T,
) -> FeasibilityReport<T> {
    let m = cfg.num_relays();
    if alloc.check_shape(m).is_err() || perm.len() != m {
        return FeasibilityReport {
            rate_caps: vec![],
            backhaul: vec![],
            decoding: vec![],
            budget: T::neg_infinity(),
            top_layer: T::neg_infinity(),
            bounds: T::neg_infinity(),
            feasible: false,
            tolerance: tol,
        };
    }

    let caps = layer_rate_caps(cfg, alloc);
    let rate_caps = caps.iter().zip(&alloc.layer_rates).map(|(&cap, &r)| cap - r).collect();

    let cum_betas = cum_betas_from(cfg.gains(), perm, &alloc.beta);
    let costs = costs_from(perm, alloc.total_power(), &cum_betas, &alloc.beta);
    let backhaul = (0..m)
        .map(|i| cfg.backhaul()[i] - alloc.df_split[i] - costs[i])
        .collect();

    let d = decoding_caps(cfg, alloc, perm);
    let rate_suffix = suffix_sums(&alloc.layer_rates[..m]);
    let decoding = (0..m).map(|k| d[k] - rate_suffix[k]).collect();

    let budget = cfg.power() - alloc.total_power();
    let top_layer = (T::one() + alloc.layer_powers[m] * alloc.total_weighted_beta(cfg)).bits() - alloc.layer_rates[m];

    let mut bounds = T::infinity();
    for &v in alloc
        .layer_powers
        .iter()
        .chain(&alloc.beta)
        .chain(&alloc.df_split)
        .chain(&alloc.layer_rates)
    {
        bounds = bounds.min(v);
    }
    for &b in &alloc.beta {
        bounds = bounds.min(T::one() - b);
    }
    for (&d, &c) in alloc.df_split.iter().zip(cfg.backhaul()) {
        bounds = bounds.min(c - d);
    }

    let mut report = FeasibilityReport {
        rate_caps,
        backhaul,
        decoding,
        budget,
        top_layer,
        bounds,
        feasible: false,
        tolerance: tol,
    };
    let min = report.min_slack();
    report.feasible = !min.is_nan() && min >= -tol;
    report
}

/// Cutset upper bound, exact minimum over all `2^M` relay subsets.
pub fn cutset_bound<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<T> {
    let m = cfg.num_relays();
    if m > CUTSET_MAX_RELAYS {
        return Err(Error::TooManyRelays {
            relays: m,
            limit: CUTSET_MAX_RELAYS,
            what: "cutset enumeration",
        });
    }
    let mut best = T::infinity();
    for mask in 0u32..(1u32 << m) {
        let mut backhaul = T::zero();
        let mut gain = T::zero();
        for j in 0..m {
            if mask & (1 << j) != 0 {
                backhaul = backhaul + cfg.backhaul()[j];
            } else {
                gain = gain + cfg.gain(j);
            }
        }
        best = best.min(backhaul + (T::one() + cfg.power() * gain).bits());
    }
    Ok(best)
}
