//! Brute-force reference solver: a grid over layer powers and compression
//! coefficients with the exact greedy rate assignment inside.
//!
//! Powers use the cumulative-fraction parameterization `P̄_1 = P`,
//! `P̄_{k+1} = u_k P̄_k` with `u_k ∈ {0, 1/n, …, 1}`, so the budget is tight on
//! every point. Compression coefficients are gridded in decompression order
//! as fractions `j/n` of the largest coefficient the relay's backhaul allows
//! given the compressions before it. Grids for `n` and `2n` are nested, so
//! refining never lowers the best value found.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{caps_from_cumulative, costs_from, cum_betas_from, decoding_caps_from, NetworkConfig, Permutation};
use crate::scalar::Scalar;
use crate::schemes::{cf_beta_at, finish_allocation, Diagnostics, Scheme, Solution};

pub const DEFAULT_GRID_POINTS: usize = 50;
pub const DEFAULT_MAX_EVALUATIONS: f64 = 1e8;

/// Power dimensions of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerGrid {
    /// Every split of the budget over the `M + 1` layers.
    Full,
    /// All power on the top layer.
    PureCf,
    /// Every split over the relay layers, top layer empty.
    NoTopLayer,
}

/// Compression dimensions of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BetaGrid {
    Full,
    /// No compression.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// `n`: each gridded dimension has the `n + 1` nodes `0, 1/n, …, 1`.
    pub points_per_dimension: usize,
    pub powers: PowerGrid,
    pub betas: BetaGrid,
    pub max_evaluations: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_dimension: DEFAULT_GRID_POINTS,
            powers: PowerGrid::Full,
            betas: BetaGrid::Full,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

/// Maximizes `Σ R_k` subject to `0 ≤ R_k ≤ caps_k` and
/// `Σ_{j≥k} R_j ≤ d_k` by the backward recursion
/// `S_k = min(D̃_k, S_{k+1} + caps_k)` with `D̃_k = min_{j≤k} d_j`.
/// Returns the rates and their total.
pub fn inner_rate_assignment<T: Scalar>(caps: &[T], d: &[T]) -> (Vec<T>, T) {
    let m = caps.len().min(d.len());
    let mut bound = Vec::with_capacity(m);
    let mut run = T::infinity();
    for &dk in &d[..m] {
        run = run.min(dk.max(T::zero()));
        bound.push(run);
    }
    let mut suffix = vec![T::zero(); m + 1];
    for k in (0..m).rev() {
        suffix[k] = bound[k].min(suffix[k + 1] + caps[k].max(T::zero()));
    }
    let rates = (0..m).map(|k| (suffix[k] - suffix[k + 1]).max(T::zero())).collect();
    (rates, suffix[0])
}

/// Decodes a mixed-radix grid index into per-dimension node indices.
fn digits(mut index: usize, dims: usize, radix: usize) -> Vec<usize> {
    let mut out = vec![0; dims];
    for d in out.iter_mut().rev() {
        *d = index % radix;
        index /= radix;
    }
    out
}

struct BetaNode<T> {
    beta: Vec<T>,
    df_split: Vec<T>,
    total_beta: T,
}

/// Exhaustive grid search for a fixed decompression order.
pub fn grid_search<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, spec: &GridSpec) -> Result<Solution<T>> {
    let m = cfg.num_relays();
    if perm.len() != m {
        return Err(Error::InvalidPermutation(format!(
            "permutation of {} for {m} relays",
            perm.len()
        )));
    }
    let n = spec.points_per_dimension;
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid needs at least 2 points per dimension, got {n}"
        )));
    }
    let radix = n + 1;
    let power_dims = match spec.powers {
        PowerGrid::Full => m,
        PowerGrid::PureCf => 0,
        PowerGrid::NoTopLayer => m - 1,
    };
    let beta_dims = match spec.betas {
        BetaGrid::Full => m,
        BetaGrid::Zero => 0,
    };
    let size = (radix as f64).powi((power_dims + beta_dims) as i32);
    if size > spec.max_evaluations {
        return Err(Error::GridTooLarge {
            points: size,
            limit: spec.max_evaluations,
        });
    }
    let power_count = radix.pow(power_dims as u32);
    let beta_count = radix.pow(beta_dims as u32);
    let p = cfg.power();
    let nodes: Vec<T> = (0..=n).map(|j| T::from_count(j) / T::from_count(n)).collect();

    let betas: Vec<BetaNode<T>> = (0..beta_count)
        .map(|idx| {
            let d = digits(idx, beta_dims, radix);
            let mut beta = vec![T::zero(); m];
            if beta_dims > 0 {
                let mut acc = T::zero();
                for (pos, &r) in perm.order().iter().enumerate() {
                    let cap = cf_beta_at(cfg.backhaul()[r], cfg.gain(r), p, acc);
                    beta[r] = cap * nodes[d[pos]];
                    acc = acc + cfg.gain(r) * beta[r];
                }
            }
            let cum = cum_betas_from(cfg.gains(), perm, &beta);
            let costs = costs_from(perm, p, &cum, &beta);
            let df_split = (0..m).map(|r| (cfg.backhaul()[r] - costs[r]).max(T::zero())).collect();
            BetaNode {
                beta,
                df_split,
                total_beta: cum.last().copied().unwrap_or_else(T::zero),
            }
        })
        .collect();

    let cum_powers_at = |idx: usize| -> Vec<T> {
        let d = digits(idx, power_dims, radix);
        let mut cum = vec![p; m + 2];
        cum[m + 1] = T::zero();
        for k in 0..m {
            let u = match spec.powers {
                PowerGrid::Full => nodes[d[k]],
                PowerGrid::PureCf => T::one(),
                PowerGrid::NoTopLayer => {
                    if k + 1 < m {
                        nodes[d[k]]
                    } else {
                        T::zero()
                    }
                }
            };
            cum[k + 1] = cum[k] * u;
        }
        cum
    };

    let best_per_power: Vec<(T, usize)> = (0..power_count)
        .into_par_iter()
        .map(|pi| {
            let cum = cum_powers_at(pi);
            let caps = caps_from_cumulative(cfg.gains(), &cum);
            let top = cum[m];
            let mut best = (T::neg_infinity(), 0);
            for (bi, node) in betas.iter().enumerate() {
                let d = decoding_caps_from(&node.df_split, &cum[..=m], node.total_beta);
                let (_, total) = inner_rate_assignment(&caps, &d);
                let rate = total + (T::one() + top * node.total_beta).bits();
                if rate > best.0 {
                    best = (rate, bi);
                }
            }
            best
        })
        .collect();
    let mut best = (T::neg_infinity(), 0, 0);
    for (pi, &(rate, bi)) in best_per_power.iter().enumerate() {
        if rate > best.0 {
            best = (rate, pi, bi);
        }
    }

    let cum = cum_powers_at(best.1);
    let layer_powers = (0..=m).map(|k| cum[k] - cum[k + 1]).collect();
    let alloc = finish_allocation(cfg, perm, layer_powers, betas[best.2].beta.clone());
    Ok(Solution {
        scheme: Scheme::Hybrid,
        sum_rate: crate::model::sum_rate(cfg, &alloc),
        allocation: Some(alloc),
        permutation: perm.clone(),
        diagnostics: Diagnostics::Grid {
            evaluations: (power_count * beta_count) as u64,
        },
    })
}

/// [`grid_search`] over every decompression order, best first found.
pub fn grid_search_all<T: Scalar>(cfg: &NetworkConfig<T>, spec: &GridSpec) -> Result<Solution<T>> {
    let mut best: Option<Solution<T>> = None;
    for perm in Permutation::all(cfg.num_relays()) {
        let s = grid_search(cfg, &perm, spec)?;
        if best.as_ref().is_none_or(|b| s.sum_rate > b.sum_rate) {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one permutation"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_feasibility;

    fn cfg(g: &[f64], c: &[f64], p: f64) -> NetworkConfig<f64> {
        NetworkConfig::new(g.to_vec(), c.to_vec(), p).unwrap()
    }

    #[test]
    fn inner_assignment_examples() {
        let (r, t) = inner_rate_assignment(&[1.0, 2.0], &[2.5, 1.5]);
        assert_eq!(r, vec![1.0, 1.5]);
        assert_eq!(t, 2.5);
        let (r, t) = inner_rate_assignment(&[1.0, 2.0, 0.5], &[1e9, 1e9, 1e9]);
        assert_eq!(r, vec![1.0, 2.0, 0.5]);
        assert_eq!(t, 3.5);
        let (r, t) = inner_rate_assignment(&[1.0, 2.0], &[0.0, 5.0]);
        assert_eq!(t, 0.0);
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cf_only_grid_finds_closed_form() {
        let c = cfg(&[10.0], &[2.0], 1.0);
        let spec = GridSpec {
            powers: PowerGrid::PureCf,
            ..GridSpec::default()
        };
        let s = grid_search(&c, &Permutation::identity(1), &spec).unwrap();
        assert!((s.sum_rate - 1.65208).abs() < 0.01);
    }

    #[test]
    fn symmetric_grid_near_closed_forms() {
        let c = cfg(&[10.0, 10.0], &[2.0, 2.0], 1.0);
        let perm = Permutation::identity(2);
        let s = grid_search(&c, &perm, &GridSpec::default()).unwrap();
        assert!(s.sum_rate >= 7.32007f64.log2() - 0.02, "{}", s.sum_rate);
        let a = s.allocation.unwrap();
        assert!(check_feasibility(&c, &perm, &a, 1e-9).feasible);
    }

    #[test]
    fn zero_backhaul_grid() {
        let c = cfg(&[10.0, 10.0], &[0.0, 0.0], 1.0);
        let s = grid_search(&c, &Permutation::identity(2), &GridSpec::default()).unwrap();
        assert_eq!(s.sum_rate, 0.0);
    }

    #[test]
    fn guard_rejects_huge_grids() {
        let c = cfg(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], 1.0);
        assert!(matches!(
            grid_search(&c, &Permutation::identity(3), &GridSpec::default()),
            Err(Error::GridTooLarge { .. })
        ));
    }
}
