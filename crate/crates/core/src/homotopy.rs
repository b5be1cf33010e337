//! Successive condensation of the cumulative problem into geometric
//! programs.
//!
//! The cumulative problem minimizes `2^{-rate}` over cumulative powers `P̄`,
//! cumulative weighted compression coefficients `β̄` (in decompression
//! order) and auxiliaries `γ`. Its constraints are ratios whose numerators
//! are posynomials and whose denominators are of the form `1 + s`, `s` a
//! monomial. Each outer iteration replaces every such denominator by the
//! tangent monomial lower bound `f(s, ŝ) ≤ 1 + s` at the current point and
//! solves the resulting GP. Because the bound is tangent, the current point
//! stays feasible; because it is a lower bound on a denominator, the GP is a
//! conservative restriction, so its solution is feasible for the exact
//! problem and the true objective cannot get worse.
//!
//! Numerators are kept as products of posynomials rather than expanded,
//! which the solver handles natively (each factor is one log-sum-exp).
//!
//! Relays whose backhaul is (numerically) zero can neither forward bits nor
//! compressions. Their compression increment is pinned to zero and their
//! layer is merged into the next one up, which loses nothing because the
//! next relay decodes everything the empty one could. Without this the
//! subproblems would have an empty interior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::{solve_gp_from, GpProblem, GpStatus, Monomial, Posynomial, PosynomialProduct, VarId};
use crate::model::{CumulativePoint, NetworkConfig, Permutation};
use crate::scalar::Scalar;
use crate::schemes::{cf_closed_form_betas, recover_allocation};

pub const DEFAULT_MAX_OUTER_ITERATIONS: usize = 100;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_FLOOR: f64 = 1e-9;
pub const DEFAULT_MULTI_START: usize = 4;

/// Backhaul at or below this is treated as absent.
pub const ZERO_BACKHAUL: f64 = 1e-9;

/// Largest violation (in bits) of a cumulative-problem constraint still
/// counted as feasible.
pub const CUMULATIVE_FEASIBILITY_TOL: f64 = 1e-9;

const SUBPROBLEM_TOL: f64 = 1e-9;
const SUBPROBLEM_MAX_ITER: usize = 200;
const REPAIR_STEPS: usize = 50;
const EXTRAPOLATION_STEPS: usize = 12;

/// Tangent monomial lower bound `f(s, ŝ) = c·s^a` of `1 + s` at `ŝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialApprox<T> {
    pub expansion_point: T,
    pub exponent: T,
    pub coefficient: T,
}

impl<T: Scalar> MonomialApprox<T> {
    pub fn eval(&self, s: T) -> T {
        self.coefficient * s.powf(self.exponent)
    }

    /// The bound applied to a monomial argument.
    pub fn apply(&self, s: &Monomial<T>) -> Monomial<T> {
        s.powf(self.exponent).scale(self.coefficient)
    }
}

/// `a = ŝ/(1+ŝ)`, `c = ŝ^{-a}(1+ŝ)`.
pub fn monomial_lower_bound<T: Scalar>(s_hat: T) -> Result<MonomialApprox<T>> {
    if !(s_hat > T::zero() && s_hat.is_finite()) {
        return Err(Error::NonpositiveExpansionPoint(s_hat.to_f64().unwrap_or(f64::NAN)));
    }
    let a = s_hat / (T::one() + s_hat);
    let c = (-a * s_hat.ln() + s_hat.ln_1p()).exp();
    Ok(MonomialApprox {
        expansion_point: s_hat,
        exponent: a,
        coefficient: c,
    })
}

/// Which problem the homotopy works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// The full hybrid problem.
    Hybrid,
    /// Decode-and-forward only: no compression and an empty top layer.
    DecodeForward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyOptions {
    pub max_outer_iterations: usize,
    /// Stop once an iteration gains less than `rel_tol · max(rate, 1)`.
    pub rel_tol: f64,
    /// Lower bound on every GP variable.
    pub floor: f64,
    /// Number of initial strategies tried per permutation.
    pub multi_start: usize,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        Self {
            max_outer_iterations: DEFAULT_MAX_OUTER_ITERATIONS,
            rel_tol: DEFAULT_REL_TOL,
            floor: DEFAULT_FLOOR,
            multi_start: DEFAULT_MULTI_START,
            seed: 0,
            mode: Mode::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HomotopyStatus {
    /// An iteration gained less than the tolerance (or nothing at all).
    Converged,
    MaxIterations,
    /// A subproblem could not be solved; the last good iterate is returned.
    SubproblemFailed,
    /// Nothing to optimize (every variable is pinned).
    Trivial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyTrace<T> {
    /// Sum-rate of the starting point followed by every accepted iterate.
    pub rates: Vec<T>,
    /// The points behind `rates`.
    pub iterates: Vec<CumulativePoint<T>>,
    pub status: HomotopyStatus,
    /// Subproblems solved.
    pub iterations: usize,
}

impl<T: Scalar> HomotopyTrace<T> {
    pub fn final_rate(&self) -> T {
        *self.rates.last().expect("trace starts with the initial rate")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot<T> {
    Var(usize),
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Power(usize),
    Beta(usize),
    Gamma(usize),
}

/// Which cumulative quantities are free GP variables and which are pinned
/// or tied to a neighbour.
#[derive(Debug, Clone)]
pub(crate) struct Layout<T> {
    powers: Vec<Slot<T>>,
    betas: Vec<Slot<T>>,
    gammas: Vec<Slot<T>>,
    owners: Vec<Owner>,
    floor: T,
}

fn backhaul_active<T: Scalar>(c: T) -> bool {
    c > T::lit(ZERO_BACKHAUL)
}

impl<T: Scalar> Layout<T> {
    pub(crate) fn new(cfg: &NetworkConfig<T>, perm: &Permutation, mode: Mode, floor: T) -> Self {
        let m = cfg.num_relays();
        let mut owners = Vec::new();
        let mut fresh = |owner: Owner| {
            owners.push(owner);
            Slot::Var(owners.len() - 1)
        };
        let compresses = |relay: usize| mode == Mode::Hybrid && backhaul_active(cfg.backhaul()[relay]);

        let mut betas = Vec::with_capacity(m);
        for pos in 0..m {
            let slot = if compresses(perm.relay_at(pos)) {
                fresh(Owner::Beta(pos))
            } else if pos == 0 {
                Slot::Fixed(T::zero())
            } else {
                betas[pos - 1]
            };
            betas.push(slot);
        }
        let gammas = (0..m)
            .map(|r| {
                if compresses(r) {
                    fresh(Owner::Gamma(r))
                } else {
                    Slot::Fixed(T::one())
                }
            })
            .collect();
        let mut powers = vec![Slot::Fixed(T::zero()); m + 1];
        if (0..m).any(compresses) {
            powers[m] = fresh(Owner::Power(m));
        }
        for k in (0..m).rev() {
            powers[k] = if backhaul_active(cfg.backhaul()[k]) {
                fresh(Owner::Power(k))
            } else {
                powers[k + 1]
            };
        }
        Self {
            powers,
            betas,
            gammas,
            owners,
            floor,
        }
    }

    pub(crate) fn num_vars(&self) -> usize {
        self.owners.len()
    }

    fn resolve(slot: Slot<T>, x: &[T]) -> T {
        match slot {
            Slot::Var(i) => x[i],
            Slot::Fixed(v) => v,
        }
    }

    /// Full cumulative point from variable values.
    pub(crate) fn point(&self, x: &[T]) -> CumulativePoint<T> {
        CumulativePoint {
            cum_powers: self.powers.iter().map(|&s| Self::resolve(s, x)).collect(),
            cum_betas: self.betas.iter().map(|&s| Self::resolve(s, x)).collect(),
            gamma: self.gammas.iter().map(|&s| Self::resolve(s, x)).collect(),
        }
    }

    /// Variable values read off a full point (owners win over tied copies).
    pub(crate) fn values(&self, pt: &CumulativePoint<T>) -> Vec<T> {
        self.owners
            .iter()
            .map(|o| match *o {
                Owner::Power(k) => pt.cum_powers[k],
                Owner::Beta(p) => pt.cum_betas[p],
                Owner::Gamma(r) => pt.gamma[r],
            })
            .collect()
    }

    /// Raises every free `γ` to its bound `1 − Δβ̄/g`, which only loosens the
    /// compression constraints.
    fn widen_gammas(
        &self,
        cfg: &NetworkConfig<T>,
        perm: &Permutation,
        mut pt: CumulativePoint<T>,
    ) -> CumulativePoint<T> {
        for (pos, &r) in perm.order().iter().enumerate() {
            if let Slot::Var(_) = self.gammas[r] {
                let inc = pt.cum_betas[pos] - pt.cum_beta(pos);
                pt.gamma[r] = (T::one() - inc / cfg.gain(r)).min(T::one());
            }
        }
        self.point(&self.values(&pt))
    }

    /// Moves an arbitrary point into the layout and the variable boxes:
    /// floors, monotone ladders, `β ≤ 1` increments and `γ ≤ 1 − β`.
    pub(crate) fn sanitize(
        &self,
        cfg: &NetworkConfig<T>,
        perm: &Permutation,
        pt: &CumulativePoint<T>,
    ) -> CumulativePoint<T> {
        let m = cfg.num_relays();
        let finite = |v: T| if v.is_finite() { v } else { T::zero() };
        let x: Vec<T> = self.values(pt).into_iter().map(|v| finite(v).max(self.floor)).collect();
        let mut p = self.point(&x);
        p.cum_powers[0] = p.cum_powers[0].min(cfg.power());
        for k in 1..=m {
            p.cum_powers[k] = p.cum_powers[k].min(p.cum_powers[k - 1]);
        }
        let one_minus = T::one() - self.floor;
        for pos in 0..m {
            let g = cfg.gain(perm.relay_at(pos));
            let prev = p.cum_beta(pos);
            p.cum_betas[pos] = p.cum_betas[pos].max(prev).min(prev + g * one_minus);
        }
        for pos in 0..m {
            let r = perm.relay_at(pos);
            let inc = p.cum_betas[pos] - p.cum_beta(pos);
            let hi = T::one() - inc / cfg.gain(r);
            p.gamma[r] = p.gamma[r].min(hi).max(self.floor.min(hi));
        }
        self.point(&self.values(&p))
    }
}

/// A product `monomial × Π posynomials` assembled factor by factor.
struct Builder<T> {
    monomial: Monomial<T>,
    factors: Vec<Posynomial<T>>,
}

impl<T: Scalar> Builder<T> {
    fn new(c: T) -> Self {
        Self {
            monomial: Monomial::constant(c).expect("positive constant"),
            factors: Vec::new(),
        }
    }

    fn times(&mut self, m: &Monomial<T>) {
        self.monomial = self.monomial.mul(m);
    }

    fn times_posynomial(&mut self, p: Posynomial<T>) {
        match p.as_monomial() {
            Some(m) => self.times(&m.clone()),
            None => self.factors.push(p),
        }
    }

    fn finish(self) -> PosynomialProduct<T> {
        PosynomialProduct::new(self.monomial, self.factors)
    }

    fn is_constant(&self) -> bool {
        self.factors.is_empty() && self.monomial.is_constant()
    }
}

/// Condenses the cumulative problem at `x_hat` into a GP over the layout's
/// variables.
struct Condenser<'a, T> {
    cfg: &'a NetworkConfig<T>,
    perm: &'a Permutation,
    layout: &'a Layout<T>,
    x_hat: &'a [T],
}

impl<T: Scalar> Condenser<'_, T> {
    fn slot_term(&self, slot: Slot<T>) -> Option<Monomial<T>> {
        match slot {
            Slot::Var(i) => Some(Monomial::var(VarId(i))),
            Slot::Fixed(v) if v > T::zero() => Some(Monomial::constant(v).expect("positive")),
            Slot::Fixed(_) => None,
        }
    }

    fn power(&self, k: usize) -> Option<Monomial<T>> {
        self.layout.powers.get(k).and_then(|&s| self.slot_term(s))
    }

    /// `β̄_pos`, one-based with the zero sentinel.
    fn beta(&self, pos: usize) -> Option<Monomial<T>> {
        if pos == 0 {
            None
        } else {
            self.slot_term(self.layout.betas[pos - 1])
        }
    }

    fn gamma(&self, r: usize) -> Monomial<T> {
        self.slot_term(self.layout.gammas[r]).expect("gamma is positive")
    }

    fn product(a: Option<Monomial<T>>, b: Option<Monomial<T>>) -> Option<Monomial<T>> {
        Some(a?.mul(&b?))
    }

    fn scaled(c: T, a: Option<Monomial<T>>) -> Option<Monomial<T>> {
        a.map(|m| m.scale(c))
    }

    /// `f(s, ŝ)` with `ŝ = s(x̂)`; the tangent monomial of `1 + s`.
    fn condensed(&self, s: &Monomial<T>) -> Result<Monomial<T>> {
        if s.is_constant() {
            return Monomial::constant(T::one() + s.coefficient());
        }
        let s_hat = s.eval(self.x_hat)?;
        Ok(monomial_lower_bound(s_hat)?.apply(s))
    }

    /// Multiplies `b` by `(1 + num)/(1 + den)`, condensing the denominator.
    /// Identical terms cancel exactly and are skipped.
    fn ratio(&self, b: &mut Builder<T>, num: Option<Monomial<T>>, den: Option<Monomial<T>>) -> Result<()> {
        if num == den {
            return Ok(());
        }
        if let Some(n) = num {
            b.times_posynomial(Posynomial::one_plus(n));
        }
        if let Some(d) = den {
            b.times(&self.condensed(&d)?.inv());
        }
        Ok(())
    }

    fn build(&self) -> Result<GpProblem<T>> {
        let cfg = self.cfg;
        let perm = self.perm;
        let m = cfg.num_relays();
        let mut gp = GpProblem::new();
        for (i, o) in self.layout.owners.iter().enumerate() {
            let name = match *o {
                Owner::Power(k) => format!("Pbar{}", k + 1),
                Owner::Beta(p) => format!("betabar{}", p + 1),
                Owner::Gamma(r) => format!("gamma{}", r + 1),
            };
            let id = gp.add_variable(name, Some(self.layout.floor), None)?;
            debug_assert_eq!(id.0, i);
        }

        let top = self.power(m);
        let total_beta = self.beta(m);
        let full_power = self.power(0);

        // objective: 1/(1 + P̄_{M+1}β̄_M) · Π (1 + g_i P̄_{i+1})/(1 + g_i P̄_i)
        let mut obj = Builder::new(T::one());
        self.ratio(&mut obj, None, Self::product(top.clone(), total_beta.clone()))?;
        for i in 0..m {
            let g = cfg.gain(i);
            self.ratio(
                &mut obj,
                Self::scaled(g, self.power(i + 1)),
                Self::scaled(g, self.power(i)),
            )?;
        }
        gp.set_objective(obj.finish())?;

        let push = |gp: &mut GpProblem<T>, label: String, b: Builder<T>| -> Result<()> {
            if b.is_constant() {
                let v = b.monomial.coefficient();
                if v > T::one() + T::lit(1e-12) {
                    return Err(Error::InfeasibleExpansionPoint(format!("{label} is the constant {v}")));
                }
                return Ok(());
            }
            gp.add_constraint(label, b.finish())
        };

        // joint decoding of every suffix of layers
        let two = T::lit(2.0);
        for k in 0..m {
            let c_sum: T = cfg.backhaul()[k..].iter().copied().sum();
            let mut b = Builder::new(two.powf(-c_sum));
            self.ratio(
                &mut b,
                Self::product(top.clone(), total_beta.clone()),
                Self::product(self.power(k), total_beta.clone()),
            )?;
            for i in k..m {
                let g = cfg.gain(i);
                let pos = perm.position_of(i) + 1;
                self.ratio(
                    &mut b,
                    Self::scaled(g, self.power(i)),
                    Self::scaled(g, self.power(i + 1)),
                )?;
                self.ratio(
                    &mut b,
                    Self::product(full_power.clone(), self.beta(pos)),
                    Self::product(full_power.clone(), self.beta(pos - 1)),
                )?;
                b.times(&self.gamma(i).inv());
            }
            push(&mut gp, format!("decoding suffix {}", k + 1), b)?;
        }

        // backhaul of each relay
        for r in 0..m {
            let pos = perm.position_of(r) + 1;
            let mut b = Builder::new(two.powf(-cfg.backhaul()[r]));
            self.ratio(
                &mut b,
                Self::product(full_power.clone(), self.beta(pos)),
                Self::product(full_power.clone(), self.beta(pos - 1)),
            )?;
            b.times(&self.gamma(r).inv());
            push(&mut gp, format!("backhaul relay {}", r + 1), b)?;
        }

        // power budget
        if let Some(p1) = full_power.clone() {
            let mut b = Builder::new(T::one() / cfg.power());
            b.times(&p1);
            push(&mut gp, "power budget".into(), b)?;
        }

        // monotone ladders
        for k in 0..m {
            let (hi, lo) = (self.power(k), self.power(k + 1));
            if let (Some(hi), Some(lo)) = (hi, lo) {
                if hi != lo {
                    let mut b = Builder::new(T::one());
                    b.times(&lo);
                    b.times(&hi.inv());
                    push(&mut gp, format!("power ladder {}", k + 1), b)?;
                }
            }
        }
        for pos in 1..=m {
            let Some(cur) = self.beta(pos) else { continue };
            let prev = self.beta(pos - 1);
            if prev.as_ref() == Some(&cur) {
                continue;
            }
            let mut b = Builder::new(T::one());
            match prev {
                Some(p) => b.times(&p),
                None => b.times(&Monomial::constant(self.layout.floor)?),
            }
            b.times(&cur.inv());
            push(&mut gp, format!("beta ladder {pos}"), b)?;
        }

        // β ≤ 1 and γ ≤ 1 − β for every compressing relay
        for pos in 1..=m {
            let r = perm.relay_at(pos - 1);
            if !matches!(self.layout.betas[pos - 1], Slot::Var(_)) || self.beta(pos) == self.beta(pos - 1) {
                continue;
            }
            let g = cfg.gain(r);
            let cur = self.beta(pos).expect("variable");
            let inv_g = T::one() / g;
            let den = self.condensed_opt(Self::scaled(inv_g, self.beta(pos - 1)))?;

            let mut b = Builder::new(inv_g);
            b.times(&cur);
            b.times(&den.inv());
            push(&mut gp, format!("beta bound {pos}"), b)?;

            let mut b = Builder::new(inv_g);
            b.times_posynomial(Posynomial::new(vec![self.gamma(r).scale(g), cur])?);
            b.times(&den.inv());
            push(&mut gp, format!("gamma bound relay {}", r + 1), b)?;
        }
        Ok(gp)
    }

    fn condensed_opt(&self, s: Option<Monomial<T>>) -> Result<Monomial<T>> {
        match s {
            Some(s) => self.condensed(&s),
            None => Monomial::constant(T::one()),
        }
    }
}

/// Builds the condensed GP at `current` for the hybrid problem.
pub fn build_gp_subproblem<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    current: &CumulativePoint<T>,
) -> Result<GpProblem<T>> {
    build_gp_subproblem_for(cfg, perm, current, Mode::Hybrid, T::lit(DEFAULT_FLOOR))
}

/// [`build_gp_subproblem`] for either mode and floor. The point is read
/// through the mode's layout, so pinned quantities are ignored.
pub fn build_gp_subproblem_for<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    current: &CumulativePoint<T>,
    mode: Mode,
    floor: T,
) -> Result<GpProblem<T>> {
    check_shape(cfg, perm, current)?;
    let layout = Layout::new(cfg, perm, mode, floor);
    let x_hat = layout.values(current);
    if let Some(v) = x_hat.iter().find(|v| !(**v > T::zero() && v.is_finite())) {
        return Err(Error::InfeasibleExpansionPoint(format!(
            "non-positive variable value {v}"
        )));
    }
    let violation = cumulative_violation(cfg, perm, current);
    if !(violation <= T::lit(CUMULATIVE_FEASIBILITY_TOL)) {
        return Err(Error::InfeasibleExpansionPoint(format!(
            "constraint violated by {violation} bits"
        )));
    }
    Condenser {
        cfg,
        perm,
        layout: &layout,
        x_hat: &x_hat,
    }
    .build()
}

fn check_shape<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, pt: &CumulativePoint<T>) -> Result<()> {
    let m = cfg.num_relays();
    if perm.len() != m || pt.cum_powers.len() != m + 1 || pt.cum_betas.len() != m || pt.gamma.len() != m {
        return Err(Error::InvalidAllocation(format!(
            "cumulative point does not match a {m}-relay network"
        )));
    }
    Ok(())
}

/// Largest violation, in bits (or plain units for the box constraints), of
/// the exact cumulative problem at `pt`. Non-positive means feasible.
pub fn cumulative_violation<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, pt: &CumulativePoint<T>) -> T {
    if check_shape(cfg, perm, pt).is_err() {
        return T::infinity();
    }
    let m = cfg.num_relays();
    let all = pt.cum_powers.iter().chain(&pt.cum_betas).chain(&pt.gamma);
    if all.clone().any(|v| !v.is_finite()) {
        return T::infinity();
    }
    let mut worst = all.fold(T::neg_infinity(), |acc, &v| acc.max(-v));
    worst = worst.max(-pt.gamma.iter().copied().fold(T::infinity(), T::min));

    let p1 = pt.cum_powers[0];
    let top = pt.cum_powers[m];
    let bm = pt.total_beta();
    let lg = |num: T, den: T| (num / den).bits();
    let cost = |r: usize| {
        let pos = perm.position_of(r) + 1;
        lg(T::one() + p1 * pt.cum_beta(pos), T::one() + p1 * pt.cum_beta(pos - 1)) - pt.gamma[r].bits()
    };
    for k in 0..m {
        let mut lhs = lg(T::one() + top * bm, T::one() + pt.cum_powers[k] * bm);
        for i in k..m {
            let g = cfg.gain(i);
            lhs = lhs + lg(T::one() + g * pt.cum_powers[i], T::one() + g * pt.cum_power(i + 1)) + cost(i)
                - cfg.backhaul()[i];
        }
        worst = worst.max(lhs);
    }
    for r in 0..m {
        worst = worst.max(cost(r) - cfg.backhaul()[r]);
    }
    worst = worst.max(p1 - cfg.power());
    for k in 0..m {
        worst = worst.max(pt.cum_powers[k + 1] - pt.cum_powers[k]);
    }
    for pos in 1..=m {
        let r = perm.relay_at(pos - 1);
        let g = cfg.gain(r);
        let (prev, cur) = (pt.cum_beta(pos - 1), pt.cum_beta(pos));
        worst = worst.max(prev - cur);
        worst = worst.max(cur - g - prev);
        worst = worst.max(g * pt.gamma[r] + cur - g - prev);
    }
    worst
}

/// Sum-rate achieved by the allocation recovered from `pt`.
fn point_rate<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, pt: &CumulativePoint<T>) -> Result<T> {
    let alloc = recover_allocation(cfg, perm, pt)?;
    Ok(crate::model::sum_rate(cfg, &alloc))
}

/// Continues the step `from → to` in log space, `x_to · (x_to / x_from)^α`
/// for doubling `α`, while that stays feasible and raises the rate; once
/// for all variables and once for the decreasing ones only. Condensation
/// moves a variable headed for zero by a roughly constant factor per
/// iteration; this covers many such iterations at once.
fn extrapolate<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    layout: &Layout<T>,
    from: &CumulativePoint<T>,
    to: CumulativePoint<T>,
    rate: T,
) -> (CumulativePoint<T>, T) {
    let x0 = layout.values(from);
    let x1 = layout.values(&to);
    let mut best = (to, rate);
    for decreasing_only in [false, true] {
        let mut alpha = T::one();
        for _ in 0..EXTRAPOLATION_STEPS {
            let x: Vec<T> = x0
                .iter()
                .zip(&x1)
                .map(|(&a, &b)| {
                    if decreasing_only && b >= a {
                        b
                    } else {
                        b * (b / a).powf(alpha)
                    }
                })
                .collect();
            let trial = layout.widen_gammas(cfg, perm, layout.point(&x));
            let trial = make_feasible(cfg, perm, layout, &trial);
            if !(cumulative_violation(cfg, perm, &trial) <= T::lit(CUMULATIVE_FEASIBILITY_TOL)) {
                break;
            }
            match point_rate(cfg, perm, &trial) {
                Ok(r) if r > best.1 => best = (trial, r),
                _ => break,
            }
            alpha = alpha + alpha;
        }
    }
    best
}

/// Runs the condensation loop from `init`, which must be feasible for the
/// cumulative problem (within [`CUMULATIVE_FEASIBILITY_TOL`]). An iterate is
/// accepted only if its recovered sum-rate does not decrease, so the trace
/// is monotone by construction.
pub fn run_homotopy<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    init: &CumulativePoint<T>,
    opts: &HomotopyOptions,
) -> Result<(CumulativePoint<T>, HomotopyTrace<T>)> {
    check_shape(cfg, perm, init)?;
    let floor = T::lit(opts.floor);
    let layout = Layout::new(cfg, perm, opts.mode, floor);
    let mut current = layout.sanitize(cfg, perm, init);
    let violation = cumulative_violation(cfg, perm, &current);
    if !(violation <= T::lit(CUMULATIVE_FEASIBILITY_TOL)) {
        return Err(Error::InfeasibleCumulativePoint(format!(
            "initial point violates a constraint by {violation}"
        )));
    }
    let mut rate = point_rate(cfg, perm, &current)?;
    let mut trace = HomotopyTrace {
        rates: vec![rate],
        iterates: vec![current.clone()],
        status: HomotopyStatus::MaxIterations,
        iterations: 0,
    };
    if layout.num_vars() == 0 {
        trace.status = HomotopyStatus::Trivial;
        return Ok((current, trace));
    }

    let rel_tol = T::lit(opts.rel_tol);
    for _ in 0..opts.max_outer_iterations {
        let x_hat = layout.values(&current);
        let gp = Condenser {
            cfg,
            perm,
            layout: &layout,
            x_hat: &x_hat,
        }
        .build()?;
        trace.iterations += 1;
        let sol = match solve_gp_from(&gp, Some(&x_hat), T::lit(SUBPROBLEM_TOL), SUBPROBLEM_MAX_ITER) {
            Ok(sol) if matches!(sol.status, GpStatus::Optimal | GpStatus::MaxIterations) => sol,
            _ => {
                trace.status = HomotopyStatus::SubproblemFailed;
                break;
            }
        };
        let candidate = layout.sanitize(cfg, perm, &layout.point(&sol.point));
        if !(cumulative_violation(cfg, perm, &candidate) <= T::lit(CUMULATIVE_FEASIBILITY_TOL)) {
            trace.status = HomotopyStatus::SubproblemFailed;
            break;
        }
        let new_rate = match point_rate(cfg, perm, &candidate) {
            Ok(r) => r,
            Err(_) => {
                trace.status = HomotopyStatus::SubproblemFailed;
                break;
            }
        };
        if !(new_rate >= rate) {
            trace.status = HomotopyStatus::Converged;
            break;
        }
        let (candidate, new_rate) = extrapolate(cfg, perm, &layout, &current, candidate, new_rate);
        let gain = new_rate - rate;
        current = candidate;
        rate = new_rate;
        trace.rates.push(rate);
        trace.iterates.push(current.clone());
        if gain <= rel_tol * rate.max(T::one()) {
            trace.status = HomotopyStatus::Converged;
            break;
        }
    }
    Ok((current, trace))
}

/// Starting points for the condensation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    /// Closed-form compress-and-forward point, all power on the top layer.
    PureCf,
    /// Compression at the floor and a uniform power ladder.
    DfLeaning,
    /// Midpoint of the two above.
    Blend,
    /// Random feasible point from the given seed.
    Random(u64),
}

/// Feasible starting point for the hybrid problem.
pub fn initial_point<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    strategy: InitStrategy,
) -> CumulativePoint<T> {
    initial_point_for(cfg, perm, strategy, Mode::Hybrid, T::lit(DEFAULT_FLOOR))
}

/// Feasible starting point for either mode.
pub fn initial_point_for<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    strategy: InitStrategy,
    mode: Mode,
    floor: T,
) -> CumulativePoint<T> {
    let layout = Layout::new(cfg, perm, mode, floor);
    let raw = match strategy {
        InitStrategy::PureCf => pure_cf_point(cfg, perm, floor),
        InitStrategy::DfLeaning => df_leaning_point(cfg, floor),
        InitStrategy::Blend => {
            let a = layout.sanitize(cfg, perm, &pure_cf_point(cfg, perm, floor));
            let b = layout.sanitize(cfg, perm, &df_leaning_point(cfg, floor));
            let half = T::lit(0.5);
            let mix = |u: &[T], v: &[T]| u.iter().zip(v).map(|(&p, &q)| half * (p + q)).collect();
            CumulativePoint {
                cum_powers: mix(&a.cum_powers, &b.cum_powers),
                cum_betas: mix(&a.cum_betas, &b.cum_betas),
                gamma: mix(&a.gamma, &b.gamma),
            }
        }
        InitStrategy::Random(seed) => random_point(cfg, perm, seed),
    };
    make_feasible(cfg, perm, &layout, &raw)
}

/// Lifts an allocation (for instance a baseline scheme's) into a feasible
/// starting point for the given mode.
pub fn lift_allocation<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    alloc: &crate::model::Allocation<T>,
    mode: Mode,
    floor: T,
) -> Result<CumulativePoint<T>> {
    alloc.check_shape(cfg.num_relays())?;
    let mut pt = crate::model::cumulative_from_allocation(alloc, cfg, perm);
    for (r, g) in pt.gamma.iter_mut().enumerate() {
        *g = T::one() - alloc.beta[r];
    }
    let layout = Layout::new(cfg, perm, mode, floor);
    Ok(make_feasible(cfg, perm, &layout, &pt))
}

fn pure_cf_point<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, floor: T) -> CumulativePoint<T> {
    let m = cfg.num_relays();
    let p = cfg.power();
    let beta = cf_closed_form_betas(cfg, perm, p);
    let mut cum_powers = vec![p; m + 1];
    cum_powers[m] = p * (T::one() - floor);
    let mut acc = T::zero();
    let cum_betas = perm
        .order()
        .iter()
        .map(|&r| {
            acc = acc + cfg.gain(r) * beta[r];
            acc
        })
        .collect();
    CumulativePoint {
        cum_powers,
        cum_betas,
        gamma: beta.iter().map(|&b| T::one() - b).collect(),
    }
}

fn df_leaning_point<T: Scalar>(cfg: &NetworkConfig<T>, floor: T) -> CumulativePoint<T> {
    let m = cfg.num_relays();
    let layers = T::from_count(m + 1);
    let cum_powers = (0..=m)
        .map(|k| cfg.power() * T::from_count(m + 1 - k) / layers)
        .collect();
    let cum_betas = (1..=m).map(|pos| floor * T::from_count(pos)).collect();
    let gamma = (0..m).map(|r| T::one() - floor / cfg.gain(r)).collect();
    CumulativePoint {
        cum_powers,
        cum_betas,
        gamma,
    }
}

fn random_point<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, seed: u64) -> CumulativePoint<T> {
    let m = cfg.num_relays();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = cfg.power();
    let mut cum_powers = Vec::with_capacity(m + 1);
    let mut level = p * T::lit(rng.gen_range(0.5..=1.0));
    for _ in 0..=m {
        cum_powers.push(level);
        level = level * T::lit(rng.gen::<f64>());
    }
    let mut beta = vec![T::zero(); m];
    let mut acc = T::zero();
    let mut cum_betas = Vec::with_capacity(m);
    for &r in perm.order() {
        let cap = crate::schemes::cf_beta_at(cfg.backhaul()[r], cfg.gain(r), p, acc);
        beta[r] = cap * T::lit(rng.gen::<f64>());
        acc = acc + cfg.gain(r) * beta[r];
        cum_betas.push(acc);
    }
    CumulativePoint {
        cum_powers,
        cum_betas,
        gamma: beta.iter().map(|&b| T::one() - b).collect(),
    }
}

/// A point of the layout that is feasible by construction: no relay layer
/// carries rate and compression uses half of the closed-form coefficients
/// when there is a top layer, or a power small enough for every active
/// relay's backhaul otherwise.
fn safe_point<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    layout: &Layout<T>,
    shrink: T,
) -> CumulativePoint<T> {
    let m = cfg.num_relays();
    let p = cfg.power();
    let has_top = matches!(layout.powers[m], Slot::Var(_));
    if has_top {
        let beta: Vec<T> = cf_closed_form_betas(cfg, perm, p)
            .into_iter()
            .map(|b| b * shrink)
            .collect();
        let mut acc = T::zero();
        let cum_betas = perm
            .order()
            .iter()
            .map(|&r| {
                acc = acc + cfg.gain(r) * beta[r];
                acc
            })
            .collect();
        let pt = CumulativePoint {
            cum_powers: vec![p; m + 1],
            cum_betas,
            gamma: beta.iter().map(|&b| T::one() - b).collect(),
        };
        layout.sanitize(cfg, perm, &pt)
    } else {
        let active = (0..m).filter(|&r| backhaul_active(cfg.backhaul()[r]));
        let c_min = active.clone().map(|r| cfg.backhaul()[r]).fold(T::infinity(), T::min);
        let g_max = active.map(|r| cfg.gain(r)).fold(T::zero(), T::max);
        let delta = if g_max > T::zero() {
            p.min((T::lit(2.0).powf(c_min) - T::one()) / g_max) * shrink
        } else {
            p
        };
        let pt = CumulativePoint {
            cum_powers: vec![delta; m + 1],
            cum_betas: vec![T::zero(); m],
            gamma: vec![T::one(); m],
        };
        layout.sanitize(cfg, perm, &pt)
    }
}

fn feasible<T: Scalar>(cfg: &NetworkConfig<T>, perm: &Permutation, pt: &CumulativePoint<T>) -> bool {
    cumulative_violation(cfg, perm, pt) <= T::lit(CUMULATIVE_FEASIBILITY_TOL)
}

/// Sanitizes `raw` and, if it is still infeasible, bisects towards a safe
/// point: first moving only the powers, then everything.
fn make_feasible<T: Scalar>(
    cfg: &NetworkConfig<T>,
    perm: &Permutation,
    layout: &Layout<T>,
    raw: &CumulativePoint<T>,
) -> CumulativePoint<T> {
    let target = layout.sanitize(cfg, perm, raw);
    if feasible(cfg, perm, &target) {
        return target;
    }
    let mut shrink = T::lit(0.5);
    let mut safe = safe_point(cfg, perm, layout, shrink);
    for _ in 0..60 {
        if feasible(cfg, perm, &safe) {
            break;
        }
        shrink = shrink * T::lit(0.5);
        safe = safe_point(cfg, perm, layout, shrink);
    }
    let x_target = layout.values(&target);
    let x_safe = layout.values(&safe);
    let is_power: Vec<bool> = layout.owners.iter().map(|o| matches!(o, Owner::Power(_))).collect();

    let blend = |t: T, powers_only: bool| {
        let x: Vec<T> = (0..x_target.len())
            .map(|i| {
                if powers_only && !is_power[i] {
                    x_target[i]
                } else {
                    x_safe[i] + t * (x_target[i] - x_safe[i])
                }
            })
            .collect();
        layout.sanitize(cfg, perm, &layout.point(&x))
    };
    for powers_only in [true, false] {
        if !feasible(cfg, perm, &blend(T::zero(), powers_only)) {
            continue;
        }
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..REPAIR_STEPS {
            let mid = T::lit(0.5) * (lo + hi);
            if feasible(cfg, perm, &blend(mid, powers_only)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return blend(lo, powers_only);
    }
    safe
}
