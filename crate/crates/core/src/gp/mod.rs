//! Geometric programs: monomial and posynomial algebra, the exact
//! log-variable convex transform, and a barrier interior-point solver.
//!
//! A problem minimizes a product of posynomials subject to products of
//! posynomials being at most one. The plain posynomial GP is the
//! single-factor case; products arise naturally when denominators of ratio
//! constraints are condensed to monomials, and they stay convex after the
//! `y = ln x` change of variables (a sum of log-sum-exp terms).

mod barrier;
mod convex;
mod linalg;

pub use barrier::{solve_gp, solve_gp_from, GpSolution, GpStatus, DEFAULT_GP_MAX_ITER, DEFAULT_GP_TOL};
pub use convex::{to_convex_form, ConvexFunction, ConvexProblem, LseBlock};

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of a registered GP variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// `c · Π_v x_v^{a_v}` with `c > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<T> {
    coefficient: T,
    // sorted by variable, no zero exponents
    exponents: Vec<(VarId, T)>,
}

impl<T: Scalar> Monomial<T> {
    pub fn new(coefficient: T, exponents: impl IntoIterator<Item = (VarId, T)>) -> Result<Self> {
        if !(coefficient > T::zero() && coefficient.is_finite()) {
            return Err(Error::Solver(format!(
                "monomial coefficient {coefficient} must be positive and finite"
            )));
        }
        let mut m = Self {
            coefficient,
            exponents: Vec::new(),
        };
        for (v, a) in exponents {
            m.add_exponent(v, a);
        }
        Ok(m)
    }

    pub fn constant(coefficient: T) -> Result<Self> {
        Self::new(coefficient, [])
    }

    /// The bare variable `x_v`.
    pub fn var(v: VarId) -> Self {
        Self {
            coefficient: T::one(),
            exponents: vec![(v, T::one())],
        }
    }

    pub fn coefficient(&self) -> T {
        self.coefficient
    }

    pub fn exponents(&self) -> &[(VarId, T)] {
        &self.exponents
    }

    pub fn is_constant(&self) -> bool {
        self.exponents.is_empty()
    }

    fn add_exponent(&mut self, v: VarId, a: T) {
        match self.exponents.binary_search_by_key(&v, |&(id, _)| id) {
            Ok(i) => {
                self.exponents[i].1 = self.exponents[i].1 + a;
                if self.exponents[i].1 == T::zero() {
                    self.exponents.remove(i);
                }
            }
            Err(i) if a != T::zero() => self.exponents.insert(i, (v, a)),
            Err(_) => {}
        }
    }

    /// Multiplies the coefficient by a positive constant.
    pub fn scale(mut self, c: T) -> Self {
        debug_assert!(c > T::zero());
        self.coefficient = self.coefficient * c;
        self
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.coefficient = out.coefficient * other.coefficient;
        for &(v, a) in &other.exponents {
            out.add_exponent(v, a);
        }
        out
    }

    /// Raises the monomial to a real power.
    pub fn powf(&self, p: T) -> Self {
        Self {
            coefficient: self.coefficient.powf(p),
            exponents: self
                .exponents
                .iter()
                .filter(|_| p != T::zero())
                .map(|&(v, a)| (v, a * p))
                .collect(),
        }
    }

    pub fn inv(&self) -> Self {
        self.powf(-T::one())
    }

    pub fn eval(&self, point: &[T]) -> Result<T> {
        let mut value = self.coefficient;
        for &(v, a) in &self.exponents {
            let x = *point.get(v.0).ok_or(Error::MissingVariable(v))?;
            if !(x > T::zero()) {
                return Err(Error::NonpositiveVariable {
                    var: v,
                    value: x.to_f64().unwrap_or(f64::NAN),
                });
            }
            value = value * x.powf(a);
        }
        Ok(value)
    }

    fn max_var(&self) -> Option<VarId> {
        self.exponents.last().map(|&(v, _)| v)
    }
}

/// A non-empty sum of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial<T> {
    terms: Vec<Monomial<T>>,
}

impl<T: Scalar> Posynomial<T> {
    pub fn new(terms: Vec<Monomial<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Solver("posynomial needs at least one term".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Monomial<T>] {
        &self.terms
    }

    /// `1 + m`, the binomial shape of every denominator in the relay problem.
    pub fn one_plus(m: Monomial<T>) -> Self {
        Self {
            terms: vec![Monomial::constant(T::one()).expect("unit"), m],
        }
    }

    pub fn add(mut self, m: Monomial<T>) -> Self {
        self.terms.push(m);
        self
    }

    /// Product of two posynomials, expanded term by term.
    pub fn mul(&self, other: &Self) -> Self {
        let terms = self
            .terms
            .iter()
            .flat_map(|a| other.terms.iter().map(move |b| a.mul(b)))
            .collect();
        Self { terms }
    }

    pub fn mul_monomial(&self, m: &Monomial<T>) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.mul(m)).collect(),
        }
    }

    pub fn eval(&self, point: &[T]) -> Result<T> {
        self.terms.iter().try_fold(T::zero(), |acc, t| Ok(acc + t.eval(point)?))
    }

    pub fn as_monomial(&self) -> Option<&Monomial<T>> {
        match self.terms.as_slice() {
            [m] => Some(m),
            _ => None,
        }
    }

    fn max_var(&self) -> Option<VarId> {
        self.terms.iter().filter_map(Monomial::max_var).max()
    }
}

impl<T: Scalar> From<Monomial<T>> for Posynomial<T> {
    fn from(m: Monomial<T>) -> Self {
        Self { terms: vec![m] }
    }
}

/// `m · Π_j p_j`: a monomial times a product of posynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PosynomialProduct<T> {
    pub monomial: Monomial<T>,
    pub factors: Vec<Posynomial<T>>,
}

impl<T: Scalar> PosynomialProduct<T> {
    pub fn new(monomial: Monomial<T>, factors: Vec<Posynomial<T>>) -> Self {
        Self { monomial, factors }
    }

    pub fn eval(&self, point: &[T]) -> Result<T> {
        self.factors
            .iter()
            .try_fold(self.monomial.eval(point)?, |acc, p| Ok(acc * p.eval(point)?))
    }

    /// Expands the product into a single posynomial. The term count grows
    /// multiplicatively, so this is for small products and tests.
    pub fn expand(&self) -> Posynomial<T> {
        let mut out = Posynomial::from(self.monomial.clone());
        for f in &self.factors {
            out = out.mul(f);
        }
        out
    }

    /// True when the expression involves no variables at all.
    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }

    fn max_var(&self) -> Option<VarId> {
        self.factors
            .iter()
            .filter_map(Posynomial::max_var)
            .chain(self.monomial.max_var())
            .max()
    }
}

impl<T: Scalar> From<Posynomial<T>> for PosynomialProduct<T> {
    fn from(p: Posynomial<T>) -> Self {
        Self {
            monomial: Monomial::constant(T::one()).expect("unit"),
            factors: vec![p],
        }
    }
}

impl<T: Scalar> From<Monomial<T>> for PosynomialProduct<T> {
    fn from(m: Monomial<T>) -> Self {
        Self {
            monomial: m,
            factors: Vec::new(),
        }
    }
}

/// A registered variable with optional positive bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

/// A `lhs ≤ 1` constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct GpConstraint<T> {
    pub label: String,
    pub lhs: PosynomialProduct<T>,
}

/// Minimize `objective` subject to every constraint `≤ 1` and the variable
/// bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GpProblem<T> {
    variables: Vec<Variable<T>>,
    objective: PosynomialProduct<T>,
    constraints: Vec<GpConstraint<T>>,
}

impl<T: Scalar> Default for GpProblem<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> GpProblem<T> {
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            objective: Monomial::constant(T::one()).expect("unit").into(),
            constraints: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: Option<T>, upper: Option<T>) -> Result<VarId> {
        let id = VarId(self.variables.len());
        let ok = |b: Option<T>| b.is_none_or(|v| v > T::zero() && v.is_finite());
        if !ok(lower) || !ok(upper) {
            return Err(Error::InvalidBounds(id));
        }
        if let (Some(lo), Some(hi)) = (lower, upper) {
            if lo > hi {
                return Err(Error::InvalidBounds(id));
            }
        }
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        Ok(id)
    }

    fn check_vars(&self, p: &PosynomialProduct<T>) -> Result<()> {
        match p.max_var() {
            Some(v) if v.0 >= self.variables.len() => Err(Error::UnknownVariable(v)),
            _ => Ok(()),
        }
    }

    pub fn set_objective(&mut self, objective: impl Into<PosynomialProduct<T>>) -> Result<()> {
        let objective = objective.into();
        self.check_vars(&objective)?;
        self.objective = objective;
        Ok(())
    }

    pub fn add_constraint(&mut self, label: impl Into<String>, lhs: impl Into<PosynomialProduct<T>>) -> Result<()> {
        let lhs = lhs.into();
        self.check_vars(&lhs)?;
        self.constraints.push(GpConstraint {
            label: label.into(),
            lhs,
        });
        Ok(())
    }

    pub fn variables(&self) -> &[Variable<T>] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn objective(&self) -> &PosynomialProduct<T> {
        &self.objective
    }

    pub fn constraints(&self) -> &[GpConstraint<T>] {
        &self.constraints
    }

    /// Largest constraint value (including bounds) at `point`.
    pub fn max_constraint_value(&self, point: &[T]) -> Result<T> {
        let mut worst = T::neg_infinity();
        for c in &self.constraints {
            worst = worst.max(c.lhs.eval(point)?);
        }
        for (i, v) in self.variables.iter().enumerate() {
            let x = *point.get(i).ok_or(Error::MissingVariable(VarId(i)))?;
            if let Some(lo) = v.lower {
                worst = worst.max(lo / x);
            }
            if let Some(hi) = v.upper {
                worst = worst.max(x / hi);
            }
        }
        Ok(worst)
    }
}

impl<T: Scalar> fmt::Display for Monomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        for (v, a) in &self.exponents {
            write!(f, "·x{}^{}", v.0, a)?;
        }
        Ok(())
    }
}

/// Evaluates a monomial at a point indexed by [`VarId`].
pub fn eval_monomial<T: Scalar>(m: &Monomial<T>, point: &[T]) -> Result<T> {
    m.eval(point)
}

/// Evaluates a posynomial at a point indexed by [`VarId`].
pub fn eval_posynomial<T: Scalar>(p: &Posynomial<T>, point: &[T]) -> Result<T> {
    p.eval(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_eval_examples() {
        let x = VarId(0);
        let m = Monomial::new(2.0, [(x, 0.5)]).unwrap();
        assert_eq!(eval_monomial(&m, &[1.0]).unwrap(), 2.0);

        let f = Monomial::new(1.75476_f64, [(x, 0.75)]).unwrap();
        assert!((eval_monomial(&f, &[3.0]).unwrap() - 4.0).abs() < 1e-4);

        let c = Monomial::constant(5.0).unwrap();
        assert_eq!(eval_monomial(&c, &[]).unwrap(), 5.0);
        assert_eq!(eval_monomial(&c, &[0.3, 7.0]).unwrap(), 5.0);
    }

    #[test]
    fn monomial_errors() {
        let m = Monomial::var(VarId(1));
        assert_eq!(m.eval(&[1.0]), Err(Error::MissingVariable(VarId(1))));
        assert!(matches!(m.eval(&[1.0, 0.0]), Err(Error::NonpositiveVariable { .. })));
        assert!(Monomial::new(0.0, []).is_err());
        assert!(Monomial::new(-1.0, []).is_err());
    }

    #[test]
    fn monomial_algebra_cancels() {
        let x = VarId(0);
        let m = Monomial::new(3.0_f64, [(x, 2.0)]).unwrap();
        let p = m.mul(&m.inv());
        assert!(p.is_constant());
        assert!((p.coefficient() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn posynomial_eval_examples() {
        let x = VarId(0);
        let one = Monomial::constant(1.0).unwrap();
        let p = Posynomial::new(vec![one.clone(), Monomial::var(x)]).unwrap();
        assert_eq!(eval_posynomial(&p, &[3.0]).unwrap(), 4.0);

        let q = Posynomial::one_plus(Monomial::var(x).scale(10.0));
        assert_eq!(eval_posynomial(&q, &[1.0]).unwrap(), 11.0);

        let k = Posynomial::new(vec![Monomial::constant(2.0).unwrap(), Monomial::constant(3.0).unwrap()]).unwrap();
        assert_eq!(eval_posynomial(&k, &[]).unwrap(), 5.0);
        assert!(Posynomial::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn product_expands_consistently() {
        let (x, y) = (VarId(0), VarId(1));
        let a = Posynomial::<f64>::one_plus(Monomial::var(x));
        let b = Posynomial::one_plus(Monomial::var(y).scale(2.0));
        let prod = PosynomialProduct::new(Monomial::new(0.5, [(x, -1.0)]).unwrap(), vec![a, b]);
        let pt = [1.3, 0.7];
        let direct = prod.eval(&pt).unwrap();
        let expanded = prod.expand().eval(&pt).unwrap();
        assert!((direct - expanded).abs() < 1e-14);
        assert_eq!(prod.expand().terms().len(), 4);
    }

    #[test]
    fn problem_rejects_unknown_variables() {
        let mut gp = GpProblem::<f64>::new();
        let x = gp.add_variable("x", None, None).unwrap();
        assert!(gp.set_objective(Monomial::var(x)).is_ok());
        assert_eq!(
            gp.add_constraint("bad", Monomial::var(VarId(3))),
            Err(Error::UnknownVariable(VarId(3)))
        );
        assert!(gp.add_variable("y", Some(2.0), Some(1.0)).is_err());
        assert!(gp.add_variable("z", Some(0.0), None).is_err());
    }
}
