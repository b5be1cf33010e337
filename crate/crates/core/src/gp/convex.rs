use crate::scalar::Scalar;

use super::{GpProblem, Monomial, Posynomial, PosynomialProduct};

/// One log-sum-exp block `ln Σ_j exp(b_j + a_j·y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LseBlock<T> {
    pub offsets: Vec<T>,
    pub rows: Vec<Vec<(usize, T)>>,
}

/// `c + a·y + Σ_blocks lse(...)`: the image of a posynomial product under
/// `y = ln x`, taken through `ln`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexFunction<T> {
    pub constant: T,
    pub linear: Vec<(usize, T)>,
    pub blocks: Vec<LseBlock<T>>,
}

/// Value, gradient and (dense, row-major) Hessian at a point.
#[derive(Debug, Clone)]
pub(crate) struct Eval<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Vec<T>,
}

impl<T: Scalar> ConvexFunction<T> {
    fn from_product(p: &PosynomialProduct<T>) -> Self {
        let (constant, linear) = affine_of(&p.monomial);
        let mut out = Self {
            constant,
            linear,
            blocks: Vec::new(),
        };
        for f in &p.factors {
            out.push_posynomial(f);
        }
        out
    }

    fn push_posynomial(&mut self, p: &Posynomial<T>) {
        if let Some(m) = p.as_monomial() {
            let (c, lin) = affine_of(m);
            self.constant = self.constant + c;
            self.linear.extend(lin);
            return;
        }
        let (offsets, rows) = p.terms().iter().map(affine_of).unzip();
        self.blocks.push(LseBlock { offsets, rows });
    }

    pub(crate) fn affine(constant: T, linear: Vec<(usize, T)>) -> Self {
        Self {
            constant,
            linear,
            blocks: Vec::new(),
        }
    }

    /// Value only.
    pub fn value(&self, y: &[T]) -> T {
        let mut v = self.constant + dot(&self.linear, y);
        for b in &self.blocks {
            let z: Vec<T> = b.offsets.iter().zip(&b.rows).map(|(&o, row)| o + dot(row, y)).collect();
            v = v + log_sum_exp(&z);
        }
        v
    }

    pub(crate) fn eval(&self, y: &[T]) -> Eval<T> {
        let n = y.len();
        let mut grad = vec![T::zero(); n];
        let mut hess = vec![T::zero(); n * n];
        let mut value = self.constant + dot(&self.linear, y);
        for &(j, a) in &self.linear {
            grad[j] = grad[j] + a;
        }
        for b in &self.blocks {
            let z: Vec<T> = b.offsets.iter().zip(&b.rows).map(|(&o, row)| o + dot(row, y)).collect();
            let lse = log_sum_exp(&z);
            value = value + lse;
            // softmax weights
            let w: Vec<T> = z.iter().map(|&zi| (zi - lse).exp()).collect();
            let mut g = vec![T::zero(); n];
            for (wi, row) in w.iter().zip(&b.rows) {
                for &(j, a) in row {
                    g[j] = g[j] + *wi * a;
                }
            }
            for (wi, row) in w.iter().zip(&b.rows) {
                for &(j, aj) in row {
                    for &(k, ak) in row {
                        hess[j * n + k] = hess[j * n + k] + *wi * aj * ak;
                    }
                }
            }
            for j in 0..n {
                if g[j] == T::zero() {
                    continue;
                }
                for k in 0..n {
                    hess[j * n + k] = hess[j * n + k] - g[j] * g[k];
                }
                grad[j] = grad[j] + g[j];
            }
        }
        Eval { value, grad, hess }
    }
}

/// A GP in log variables: minimize `objective(y)` subject to every
/// `constraints[i](y) ≤ 0`. Variable bounds appear as affine constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProblem<T> {
    pub num_vars: usize,
    pub objective: ConvexFunction<T>,
    pub constraints: Vec<ConvexFunction<T>>,
    pub labels: Vec<String>,
}

/// Exact convex form of a GP under `y_v = ln x_v`: every monomial becomes an
/// affine function, every posynomial a log-sum-exp of affine functions, and
/// products become sums. Constant constraints are kept so that indices line
/// up with the GP's constraint list, followed by the bound constraints.
pub fn to_convex_form<T: Scalar>(gp: &GpProblem<T>) -> ConvexProblem<T> {
    let mut constraints = Vec::new();
    let mut labels = Vec::new();
    for c in gp.constraints() {
        constraints.push(ConvexFunction::from_product(&c.lhs));
        labels.push(c.label.clone());
    }
    for (i, v) in gp.variables().iter().enumerate() {
        if let Some(lo) = v.lower {
            constraints.push(ConvexFunction::affine(lo.ln(), vec![(i, -T::one())]));
            labels.push(format!("{} lower bound", v.name));
        }
        if let Some(hi) = v.upper {
            constraints.push(ConvexFunction::affine(-hi.ln(), vec![(i, T::one())]));
            labels.push(format!("{} upper bound", v.name));
        }
    }
    ConvexProblem {
        num_vars: gp.num_variables(),
        objective: ConvexFunction::from_product(gp.objective()),
        constraints,
        labels,
    }
}

fn affine_of<T: Scalar>(m: &Monomial<T>) -> (T, Vec<(usize, T)>) {
    (
        m.coefficient().ln(),
        m.exponents().iter().map(|&(v, a)| (v.0, a)).collect(),
    )
}

fn dot<T: Scalar>(row: &[(usize, T)], y: &[T]) -> T {
    row.iter().fold(T::zero(), |acc, &(j, a)| acc + a * y[j])
}

pub(crate) fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + z.iter().map(|&zi| (zi - max).exp()).sum::<T>().ln()
}
