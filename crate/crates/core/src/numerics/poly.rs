//! Sparse multivariate polynomials over f64 with a graded-lexicographic
//! term order, the workhorse representation for surface functions.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{CzError, Result};

/// Exponent vector of a single monomial.
pub type Exponents = Vec<u32>;

/// Compare exponent vectors by total degree first, then lexicographically.
pub fn cmp_graded_lex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u64 = a.iter().map(|&e| e as u64).sum();
    let db: u64 = b.iter().map(|&e| e as u64).sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

/// Sparse polynomial in `dim` variables. Terms are kept sorted in graded-lex
/// order and never carry a zero coefficient, so equal polynomials compare
/// equal structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    dim: usize,
    terms: Vec<(Exponents, f64)>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    dim: usize,
    terms: Vec<TermJson>,
}

impl Serialize for MultiPoly {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mirror = PolyJson {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson { exp: e.clone(), coef: *c })
                .collect(),
        };
        mirror.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let mirror = PolyJson::deserialize(de)?;
        MultiPoly::new(
            mirror.dim,
            mirror.terms.into_iter().map(|t| (t.exp, t.coef)).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl MultiPoly {
    /// Build from raw terms: validates exponent lengths, merges duplicates,
    /// sorts graded-lex, and drops exact zeros.
    pub fn new(dim: usize, raw: Vec<(Exponents, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(CzError::Input("polynomial dimension must be positive".into()));
        }
        let mut terms = raw;
        for (exp, coef) in &terms {
            if exp.len() != dim {
                return Err(CzError::Input(format!(
                    "exponent vector {exp:?} has length {} but dim = {dim}",
                    exp.len()
                )));
            }
            if !coef.is_finite() {
                return Err(CzError::Input(format!("non-finite coefficient {coef}")));
            }
        }
        terms.sort_by(|a, b| cmp_graded_lex(&a.0, &b.0));
        let mut merged: Vec<(Exponents, f64)> = Vec::with_capacity(terms.len());
        for (exp, coef) in terms {
            match merged.last_mut() {
                Some((last, acc)) if *last == exp => *acc += coef,
                _ => merged.push((exp, coef)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        Ok(MultiPoly { dim, terms: merged })
    }

    pub fn zero(dim: usize) -> Self {
        MultiPoly { dim: dim.max(1), terms: Vec::new() }
    }

    /// Single monomial c * x^exp.
    pub fn monomial(dim: usize, exp: Exponents, coef: f64) -> Result<Self> {
        Self::new(dim, vec![(exp, coef)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Exponents, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Evaluate at `x`; rejects length mismatches.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(CzError::Input(format!(
                "evaluation point has length {} but dim = {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluate without the length check (hot paths validate once up front).
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (exp, coef) in &self.terms {
            let mut term = *coef;
            for (xi, &e) in x.iter().zip(exp.iter()) {
                if e > 0 {
                    term *= xi.powi(e as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Partial derivative with respect to variable `j`.
    pub fn partial(&self, j: usize) -> Result<Self> {
        if j >= self.dim {
            return Err(CzError::Input(format!(
                "derivative index {j} out of range for dim {}",
                self.dim
            )));
        }
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[j] > 0)
            .map(|(e, c)| {
                let mut d = e.clone();
                d[j] -= 1;
                (d, c * e[j] as f64)
            })
            .collect();
        Self::new(self.dim, terms)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(CzError::Input("dimension mismatch in polynomial add".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.dim, terms)
    }

    pub fn scale(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero(self.dim);
        }
        MultiPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(CzError::Input("dimension mismatch in polynomial mul".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exp: Exponents = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                terms.push((exp, ca * cb));
            }
        }
        Self::new(self.dim, terms)
    }

    /// The homogeneous part of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        MultiPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == d)
                .cloned()
                .collect(),
        }
    }

    /// Substitute x_i = sum_j q[i][j] t_j, i.e. compose with the linear map
    /// given by the rows of `q`. Used to pre-rotate surfaces into axis-aligned
    /// position.
    pub fn compose_linear(&self, q: &[Vec<f64>]) -> Result<Self> {
        if q.len() != self.dim || q.iter().any(|row| row.len() != self.dim) {
            return Err(CzError::Input(format!(
                "linear substitution must be {dim} x {dim}",
                dim = self.dim
            )));
        }
        let lines: Vec<MultiPoly> = (0..self.dim)
            .map(|i| {
                let terms = (0..self.dim)
                    .map(|j| {
                        let mut e = vec![0u32; self.dim];
                        e[j] = 1;
                        (e, q[i][j])
                    })
                    .collect();
                Self::new(self.dim, terms)
            })
            .collect::<Result<_>>()?;
        let mut acc = Self::zero(self.dim);
        for (exp, coef) in &self.terms {
            let mut term = Self::new(self.dim, vec![(vec![0; self.dim], *coef)])?;
            for (i, &e) in exp.iter().enumerate() {
                for _ in 0..e {
                    term = term.mul(&lines[i])?;
                }
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Gradient as a vector of polynomials.
    pub fn gradient(&self) -> Result<Vec<Self>> {
        (0..self.dim).map(|j| self.partial(j)).collect()
    }

    /// Hessian as a dim x dim matrix of polynomials (symmetric by construction).
    pub fn hessian(&self) -> Result<Vec<Vec<Self>>> {
        let grad = self.gradient()?;
        grad.iter()
            .map(|g| (0..self.dim).map(|j| g.partial(j)).collect())
            .collect()
    }
}
