//! Log-barrier interior-point method on the convex form of a GP.
//!
//! Phase I minimizes the largest constraint value `s` over `(y, s)` (with
//! `s ≥ −1` so the auxiliary problem stays bounded) and stops once the
//! iterate is comfortably strictly feasible, or reports infeasibility when
//! the barrier's duality gap certifies `min max_i f_i > 0` or the interior is
//! numerically empty. Phase II then follows the central path from that
//! point. A start that is already strictly feasible by a margin skips
//! phase I.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::convex::Eval;
use super::linalg::solve_spd;
use super::{to_convex_form, ConvexProblem, GpProblem};

pub const DEFAULT_GP_TOL: f64 = 1e-8;
pub const DEFAULT_GP_MAX_ITER: usize = 200;

const BARRIER_GROWTH: f64 = 20.0;
const NEWTON_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.01;
const PHASE1_SKIP_MARGIN: f64 = 1e-3;
const Y_LIMIT: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
    Unbounded,
}

/// Solver result. `point` is in the original (positive) variables and is
/// the best iterate reached whatever the status.
#[derive(Debug, Clone, PartialEq)]
pub struct GpSolution<T> {
    pub point: Vec<T>,
    pub objective_value: T,
    pub kkt_residual: T,
    pub iterations: usize,
    pub status: GpStatus,
}

trait Program<T: Scalar> {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn objective(&self, y: &[T]) -> Eval<T>;
    fn constraint_value(&self, i: usize, y: &[T]) -> T;
    fn constraint(&self, i: usize, y: &[T]) -> Eval<T>;

    fn objective_value(&self, y: &[T]) -> T {
        self.objective(y).value
    }
}

struct PhaseTwo<'a, T>(&'a ConvexProblem<T>);

impl<T: Scalar> Program<T> for PhaseTwo<'_, T> {
    fn dim(&self) -> usize {
        self.0.num_vars
    }
    fn num_constraints(&self) -> usize {
        self.0.constraints.len()
    }
    fn objective(&self, y: &[T]) -> Eval<T> {
        self.0.objective.eval(y)
    }
    fn objective_value(&self, y: &[T]) -> T {
        self.0.objective.value(y)
    }
    fn constraint_value(&self, i: usize, y: &[T]) -> T {
        self.0.constraints[i].value(y)
    }
    fn constraint(&self, i: usize, y: &[T]) -> Eval<T> {
        self.0.constraints[i].eval(y)
    }
}

/// Variables `(y, s)`: minimize `s` s.t. `f_i(y) ≤ s`, `s ≥ −1`, with `y`
/// kept in a box around the start so the barrier stays bounded below.
struct PhaseOne<'a, T> {
    cp: &'a ConvexProblem<T>,
    anchor: Vec<T>,
}

const PHASE1_BOX: f64 = 40.0;

impl<T: Scalar> PhaseOne<'_, T> {
    fn lift(&self, inner: Eval<T>, ds: T) -> Eval<T> {
        let n = self.cp.num_vars;
        let mut grad = inner.grad;
        grad.push(ds);
        let mut hess = vec![T::zero(); (n + 1) * (n + 1)];
        for j in 0..n {
            for k in 0..n {
                hess[j * (n + 1) + k] = inner.hess[j * n + k];
            }
        }
        Eval {
            value: inner.value,
            grad,
            hess,
        }
    }

    /// Box constraint `k` (after the problem's own and `s ≥ −1`) as
    /// `(variable, sign)`: `sign·(y_j − anchor_j) − R ≤ 0`.
    fn box_side(&self, k: usize) -> (usize, T) {
        (k / 2, if k % 2 == 0 { T::one() } else { -T::one() })
    }
}

impl<T: Scalar> Program<T> for PhaseOne<'_, T> {
    fn dim(&self) -> usize {
        self.cp.num_vars + 1
    }
    fn num_constraints(&self) -> usize {
        self.cp.constraints.len() + 1 + 2 * self.cp.num_vars
    }
    fn objective(&self, y: &[T]) -> Eval<T> {
        let n = self.cp.num_vars;
        let mut grad = vec![T::zero(); n + 1];
        grad[n] = T::one();
        Eval {
            value: y[n],
            grad,
            hess: vec![T::zero(); (n + 1) * (n + 1)],
        }
    }
    fn constraint_value(&self, i: usize, y: &[T]) -> T {
        let n = self.cp.num_vars;
        let c = self.cp.constraints.len();
        if i < c {
            self.cp.constraints[i].value(&y[..n]) - y[n]
        } else if i == c {
            -T::one() - y[n]
        } else {
            let (j, sign) = self.box_side(i - c - 1);
            sign * (y[j] - self.anchor[j]) - T::lit(PHASE1_BOX)
        }
    }
    fn constraint(&self, i: usize, y: &[T]) -> Eval<T> {
        let n = self.cp.num_vars;
        let c = self.cp.constraints.len();
        if i < c {
            let mut e = self.lift(self.cp.constraints[i].eval(&y[..n]), -T::one());
            e.value = e.value - y[n];
            e
        } else {
            let mut grad = vec![T::zero(); n + 1];
            if i == c {
                grad[n] = -T::one();
            } else {
                let (j, sign) = self.box_side(i - c - 1);
                grad[j] = sign;
            }
            Eval {
                value: self.constraint_value(i, y),
                grad,
                hess: vec![T::zero(); (n + 1) * (n + 1)],
            }
        }
    }
}

enum Centering {
    Converged,
    Budget,
    Stalled,
    Unbounded,
    /// The watched coordinate went negative.
    Reached,
}

struct BarrierRun<'p, T, P> {
    prog: &'p P,
    y: Vec<T>,
    iterations: usize,
    budget: usize,
}

impl<'p, T: Scalar, P: Program<T>> BarrierRun<'p, T, P> {
    fn barrier_value(&self, y: &[T], t: T) -> Option<T> {
        let mut v = t * self.prog.objective_value(y);
        for i in 0..self.prog.num_constraints() {
            let f = self.prog.constraint_value(i, y);
            if !(f < T::zero()) {
                return None;
            }
            v = v - (-f).ln();
        }
        v.is_finite().then_some(v)
    }

    /// Gradient and Hessian of the barrier, plus the dual stationarity
    /// residual `‖∇f_0 + Σ λ_i ∇f_i‖_∞` with `λ_i = 1/(t·(−f_i))`.
    fn derivatives(&self, t: T) -> (Vec<T>, Vec<T>, T) {
        let n = self.prog.dim();
        let obj = self.prog.objective(&self.y);
        let mut grad: Vec<T> = obj.grad.iter().map(|&g| g * t).collect();
        let mut hess: Vec<T> = obj.hess.iter().map(|&h| h * t).collect();
        for i in 0..self.prog.num_constraints() {
            let c = self.prog.constraint(i, &self.y);
            let inv = T::one() / (-c.value);
            for j in 0..n {
                grad[j] = grad[j] + c.grad[j] * inv;
            }
            for j in 0..n {
                let gj = c.grad[j] * inv;
                for k in 0..n {
                    hess[j * n + k] = hess[j * n + k] + c.hess[j * n + k] * inv + gj * c.grad[k] * inv;
                }
            }
        }
        let stationarity = grad.iter().fold(T::zero(), |acc, &g| acc.max(g.abs())) / t;
        (grad, hess, stationarity)
    }

    /// Newton's method on the barrier at `t`. With `watch = Some(k)` it
    /// returns as soon as `y[k] < 0`.
    fn center(&mut self, t: T, watch: Option<usize>) -> Centering {
        let n = self.prog.dim();
        let mut phi = match self.barrier_value(&self.y, t) {
            Some(v) => v,
            None => return Centering::Stalled,
        };
        loop {
            let (grad, hess, _) = self.derivatives(t);
            let neg: Vec<T> = grad.iter().map(|&g| -g).collect();
            let Some(dir) = solve_spd(&hess, &neg) else {
                return Centering::Stalled;
            };
            let decrement: T = -(0..n).map(|j| grad[j] * dir[j]).sum::<T>();
            let centered = decrement / T::lit(2.0) <= T::lit(NEWTON_TOL);
            if centered {
                return Centering::Converged;
            }
            if self.iterations >= self.budget {
                return Centering::Budget;
            }

            let mut step = T::one();
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<T> = (0..n).map(|j| self.y[j] + step * dir[j]).collect();
                if let Some(v) = self.barrier_value(&trial, t) {
                    // near the center the decrease drowns in rounding; take
                    // any strictly feasible non-increasing step
                    let armijo = phi - T::lit(ARMIJO) * step * decrement;
                    let fuzz = phi.abs() * T::epsilon() * T::lit(16.0);
                    if v <= armijo || (decrement < T::lit(1e-4) && v <= phi + fuzz) {
                        accepted = Some((trial, v));
                        break;
                    }
                }
                step = step / T::lit(2.0);
            }
            self.iterations += 1;
            let Some((trial, v)) = accepted else {
                return if centered {
                    Centering::Converged
                } else {
                    Centering::Stalled
                };
            };
            self.y = trial;
            phi = v;
            if self.y.iter().any(|v| v.abs() > T::lit(Y_LIMIT)) {
                return Centering::Unbounded;
            }
            if watch.is_some_and(|k| self.y[k] < T::zero()) {
                return Centering::Reached;
            }
        }
    }
}

/// Solves a GP from the all-ones starting point.
pub fn solve_gp<T: Scalar>(gp: &GpProblem<T>, tol: T, max_iter: usize) -> Result<GpSolution<T>> {
    solve_gp_from(gp, None, tol, max_iter)
}

/// Solves a GP starting from `start` (positive, original variables).
/// `max_iter` bounds the Newton steps of each phase separately.
pub fn solve_gp_from<T: Scalar>(
    gp: &GpProblem<T>,
    start: Option<&[T]>,
    tol: T,
    max_iter: usize,
) -> Result<GpSolution<T>> {
    let cp = to_convex_form(gp);
    let n = cp.num_vars;
    let y0 = match start {
        Some(x) => {
            if x.len() != n {
                return Err(Error::Solver(format!(
                    "start has {} entries, problem has {n} variables",
                    x.len()
                )));
            }
            if let Some(i) = x.iter().position(|v| !(*v > T::zero() && v.is_finite())) {
                return Err(Error::NonpositiveVariable {
                    var: super::VarId(i),
                    value: x[i].to_f64().unwrap_or(f64::NAN),
                });
            }
            x.iter().map(|v| v.ln()).collect()
        }
        None => vec![T::zero(); n],
    };
    let finish = |y: &[T], kkt: T, iterations: usize, status: GpStatus| GpSolution {
        point: y.iter().map(|v| v.exp()).collect(),
        objective_value: cp.objective.value(y).exp(),
        kkt_residual: kkt,
        iterations,
        status,
    };

    // Constant constraints carry no barrier information; check them once.
    let mut active = Vec::new();
    for (i, c) in cp.constraints.iter().enumerate() {
        if c.linear.is_empty() && c.blocks.iter().all(|b| b.rows.iter().all(Vec::is_empty)) {
            if c.value(&y0) > T::zero() {
                return Ok(finish(&y0, T::infinity(), 0, GpStatus::Infeasible));
            }
        } else {
            active.push(i);
        }
    }
    let cp = ConvexProblem {
        num_vars: n,
        objective: cp.objective.clone(),
        constraints: active.iter().map(|&i| cp.constraints[i].clone()).collect(),
        labels: active.iter().map(|&i| cp.labels[i].clone()).collect(),
    };

    let worst = cp
        .constraints
        .iter()
        .map(|c| c.value(&y0))
        .fold(T::neg_infinity(), T::max);
    let mut iterations = 0;
    let y_start = if worst < -T::lit(PHASE1_SKIP_MARGIN) || cp.constraints.is_empty() {
        y0
    } else {
        match phase_one(&cp, y0, max_iter) {
            PhaseOneOutcome::Feasible(y, it) => {
                iterations += it;
                y
            }
            PhaseOneOutcome::Infeasible(y, it) => {
                return Ok(finish(&y, T::infinity(), iterations + it, GpStatus::Infeasible));
            }
        }
    };

    let prog = PhaseTwo(&cp);
    let m = T::from_count(cp.constraints.len());
    let mut run = BarrierRun {
        prog: &prog,
        y: y_start,
        iterations: 0,
        budget: max_iter,
    };
    let mut t = initial_t(&cp, &run.y, T::lit(2.0) * m / tol);
    loop {
        let gap = m / t;
        let last = gap <= tol;
        let outcome = run.center(t, None);
        let (_, _, stationarity) = run.derivatives(t);
        let kkt = if last {
            kkt_residual(&cp, &run.y, t)
        } else {
            gap.max(stationarity)
        };
        match outcome {
            Centering::Unbounded => {
                return Ok(finish(&run.y, kkt, iterations + run.iterations, GpStatus::Unbounded));
            }
            Centering::Budget => {
                return Ok(finish(
                    &run.y,
                    kkt,
                    iterations + run.iterations,
                    GpStatus::MaxIterations,
                ));
            }
            Centering::Stalled if last => {
                let status = if kkt <= tol {
                    GpStatus::Optimal
                } else {
                    GpStatus::MaxIterations
                };
                return Ok(finish(&run.y, kkt, iterations + run.iterations, status));
            }
            Centering::Converged if last => {
                let status = if kkt <= tol {
                    GpStatus::Optimal
                } else {
                    GpStatus::MaxIterations
                };
                return Ok(finish(&run.y, kkt, iterations + run.iterations, status));
            }
            Centering::Stalled | Centering::Converged | Centering::Reached => {}
        }
        if cp.constraints.is_empty() {
            let status = if stationarity <= tol {
                GpStatus::Optimal
            } else {
                GpStatus::MaxIterations
            };
            return Ok(finish(&run.y, stationarity, iterations + run.iterations, status));
        }
        t = (t * T::lit(BARRIER_GROWTH)).min(T::lit(2.0) * m / tol);
    }
}

/// Barrier weight that best balances the objective gradient against the
/// barrier gradient at `y`, clamped to `[1, t_max]`.
fn initial_t<T: Scalar>(cp: &ConvexProblem<T>, y: &[T], t_max: T) -> T {
    let g0 = cp.objective.eval(y).grad;
    let mut gb = vec![T::zero(); y.len()];
    for c in &cp.constraints {
        let e = c.eval(y);
        let inv = T::one() / (-e.value);
        for (b, g) in gb.iter_mut().zip(&e.grad) {
            *b = *b + *g * inv;
        }
    }
    let norm: T = g0.iter().map(|&g| g * g).sum();
    let dot: T = g0.iter().zip(&gb).map(|(&a, &b)| a * b).sum();
    let t = -dot / norm;
    if t.is_finite() {
        t.max(T::one()).min(t_max)
    } else {
        T::one()
    }
}

/// First-order residual at `y`: the better of the barrier multipliers
/// `1/(t·(−f_i))` and multipliers fitted by least squares on the constraints
/// with slack below `√(m/t)`. Near the end the barrier estimates lose the
/// digits of tiny slacks, whereas the constraint gradients themselves are
/// accurate. Returns the larger of the stationarity norm and the
/// complementarity `Σ λ_i (−f_i)`.
fn kkt_residual<T: Scalar>(cp: &ConvexProblem<T>, y: &[T], t: T) -> T {
    let n = cp.num_vars;
    let m = cp.constraints.len();
    let g0 = cp.objective.eval(y).grad;
    let evals: Vec<Eval<T>> = cp.constraints.iter().map(|c| c.eval(y)).collect();
    let slack: Vec<T> = evals.iter().map(|e| (-e.value).max(T::zero())).collect();
    let barrier: Vec<T> = slack.iter().map(|&s| T::one() / (t * s)).collect();
    let residual = |lam: &[T]| -> Vec<T> {
        (0..n)
            .map(|j| g0[j] + (0..m).map(|i| lam[i] * evals[i].grad[j]).sum::<T>())
            .collect()
    };
    let measure = |lam: &[T]| -> T {
        let stat = residual(lam).iter().fold(T::zero(), |a, &r| a.max(r.abs()));
        let comp = (0..m).map(|i| lam[i] * slack[i]).sum::<T>();
        stat.max(comp)
    };
    let plain = measure(&barrier);
    if m == 0 {
        return plain;
    }
    // Least squares over the near-active constraints only, the others at
    // zero: (G_AᵀG_A + δI) λ_A = −G_Aᵀ ∇f_0.
    let cutoff = (T::from_count(m) / t).sqrt();
    let act: Vec<usize> = (0..m).filter(|&i| slack[i] <= cutoff).collect();
    let k = act.len();
    let mut fitted = vec![T::zero(); m];
    if k > 0 {
        let mut normal = vec![T::zero(); k * k];
        let mut rhs = vec![T::zero(); k];
        for (a, &ia) in act.iter().enumerate() {
            for (b, &ib) in act.iter().enumerate() {
                normal[a * k + b] = (0..n).map(|j| evals[ia].grad[j] * evals[ib].grad[j]).sum();
            }
            rhs[a] = -(0..n).map(|j| evals[ia].grad[j] * g0[j]).sum::<T>();
        }
        let scale = (0..k).map(|a| normal[a * k + a]).fold(T::zero(), T::max);
        let delta = scale.max(T::one()) * T::lit(1e-14);
        for a in 0..k {
            normal[a * k + a] = normal[a * k + a] + delta;
        }
        let Some(lam) = solve_spd(&normal, &rhs) else {
            return plain;
        };
        for (a, &i) in act.iter().enumerate() {
            fitted[i] = lam[a].max(T::zero());
        }
    }
    plain.min(measure(&fitted))
}

enum PhaseOneOutcome<T> {
    Feasible(Vec<T>, usize),
    Infeasible(Vec<T>, usize),
}

fn phase_one<T: Scalar>(cp: &ConvexProblem<T>, y0: Vec<T>, max_iter: usize) -> PhaseOneOutcome<T> {
    let n = cp.num_vars;
    let prog = PhaseOne { cp, anchor: y0.clone() };
    let worst = cp
        .constraints
        .iter()
        .map(|c| c.value(&y0))
        .fold(T::neg_infinity(), T::max);
    let mut y = y0;
    y.push(worst.max(-T::one()) + T::one());
    let m = T::from_count(prog.num_constraints());
    let mut run = BarrierRun {
        prog: &prog,
        y,
        iterations: 0,
        budget: max_iter,
    };
    let mut t = m;
    loop {
        let outcome = run.center(t, Some(n));
        let s = run.y[n];
        let gap = m / t;
        let strict = cp.constraints.iter().all(|c| c.value(&run.y[..n]) < T::zero());
        if strict && s < T::zero() {
            return PhaseOneOutcome::Feasible(run.y[..n].to_vec(), run.iterations);
        }
        if s - gap > T::zero() || gap < T::lit(1e-13) {
            return PhaseOneOutcome::Infeasible(run.y[..n].to_vec(), run.iterations);
        }
        match outcome {
            Centering::Budget | Centering::Unbounded => {
                return if strict && s < T::zero() {
                    PhaseOneOutcome::Feasible(run.y[..n].to_vec(), run.iterations)
                } else {
                    PhaseOneOutcome::Infeasible(run.y[..n].to_vec(), run.iterations)
                };
            }
            Centering::Converged | Centering::Stalled | Centering::Reached => {}
        }
        t = t * T::lit(BARRIER_GROWTH);
    }
}
