//! Graded normal-form decomposition of a convex polynomial surface into its
//! pure powers, the grading-one mixed part, and a higher-graded remainder.

use num_rational::Ratio;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CzError, Result};
use crate::geometry::ladder::FlatnessLadder;
use crate::numerics::MultiPoly;

/// Decomposition `psi = sum a_j t_j^{m_j} + P1 + R` with anisotropic grading
/// weights `1/ell0` on the fast axes and `1/m_j` on the flat ones.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SchulzForm {
    pub ell0: u32,
    /// Number of axes whose pure power has the minimal degree.
    pub r: usize,
    /// Original axis indices, fast axes first, flat axes after.
    pub axes: Vec<usize>,
    /// Pure-power exponent per axis (original indexing).
    pub m: Vec<u32>,
    /// Pure-power coefficient per axis (original indexing).
    pub coeff_pure: Vec<f64>,
    /// Mixed monomials of grading exactly one.
    pub p1: MultiPoly,
    /// Everything of grading above one.
    pub remainder: MultiPoly,
    /// Leading part restricted to the fast axes: pure powers plus the
    /// grading-one monomials supported there; homogeneous of degree `ell0`.
    pub h: MultiPoly,
}

impl SchulzForm {
    /// Grading of a monomial under this form's weights.
    pub fn grading(&self, exp: &[u32]) -> Ratio<i64> {
        let mut g = Ratio::new(0, 1);
        for (j, &e) in exp.iter().enumerate() {
            if e > 0 {
                g += Ratio::new(e as i64, self.m[j] as i64);
            }
        }
        g
    }

    /// Reassemble the surface polynomial from the three parts.
    pub fn reconstruct(&self) -> MultiPoly {
        let dim = self.m.len();
        let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
        for j in 0..dim {
            if self.coeff_pure[j] != 0.0 {
                let mut e = vec![0u32; dim];
                e[j] = self.m[j];
                terms.push((e, self.coeff_pure[j]));
            }
        }
        for (e, c) in self.p1.terms() {
            terms.push((e.clone(), *c));
        }
        for (e, c) in self.remainder.terms() {
            terms.push((e.clone(), *c));
        }
        MultiPoly::new(dim, terms).expect("parts share the dimension")
    }

    /// The leading polynomial `P` (pure powers plus `P1`).
    pub fn leading(&self) -> MultiPoly {
        let dim = self.m.len();
        let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
        for j in 0..dim {
            if self.coeff_pure[j] != 0.0 {
                let mut e = vec![0u32; dim];
                e[j] = self.m[j];
                terms.push((e, self.coeff_pure[j]));
            }
        }
        for (e, c) in self.p1.terms() {
            terms.push((e.clone(), *c));
        }
        MultiPoly::new(dim, terms).expect("parts share the dimension")
    }

    /// Fast-axis indices (pure power of degree `ell0`).
    pub fn fast_axes(&self) -> &[usize] {
        &self.axes[..self.r]
    }
}

fn ratio_json(g: Ratio<i64>) -> serde_json::Value {
    serde_json::json!({ "num": *g.numer(), "den": *g.denom() })
}

impl Serialize for SchulzForm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let gradings = |p: &MultiPoly| -> Vec<serde_json::Value> {
            p.terms()
                .iter()
                .map(|(e, _)| ratio_json(self.grading(e)))
                .collect()
        };
        let mut st = s.serialize_struct("SchulzForm", 10)?;
        st.serialize_field("ell0", &self.ell0)?;
        st.serialize_field("r", &self.r)?;
        st.serialize_field("axes", &self.axes)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("coeff_pure", &self.coeff_pure)?;
        st.serialize_field("p1", &self.p1)?;
        st.serialize_field("p1_gradings", &gradings(&self.p1))?;
        st.serialize_field("remainder", &self.remainder)?;
        st.serialize_field("remainder_gradings", &gradings(&self.remainder))?;
        st.serialize_field("h", &self.h)?;
        st.end()
    }
}

/// Split a ladder-compatible polynomial into pure powers, the grading-one
/// part, and the higher-graded remainder.
///
/// Pure powers must come with positive coefficients; a mixed monomial of
/// grading below one means the surface is not in normal position.
pub fn schulz_decompose(psi: &MultiPoly, ladder: &FlatnessLadder) -> Result<SchulzForm> {
    let dim = psi.dim();
    let ell0 = ladder.ell0;
    let m: Vec<u32> = (0..dim).map(|j| ladder.axis_order(j)).collect();
    let mut axes: Vec<usize> = (0..dim).filter(|&j| m[j] == ell0).collect();
    let r = axes.len();
    axes.extend((0..dim).filter(|&j| m[j] > ell0));

    let mut coeff_pure = vec![0.0; dim];
    let mut p1_terms: Vec<(Vec<u32>, f64)> = Vec::new();
    let mut rem_terms: Vec<(Vec<u32>, f64)> = Vec::new();
    let one = Ratio::new(1i64, 1);

    for (exp, coef) in psi.terms() {
        let support: Vec<usize> = (0..dim).filter(|&j| exp[j] > 0).collect();
        if support.len() == 1 && exp[support[0]] == m[support[0]] {
            let j = support[0];
            if *coef <= 0.0 {
                return Err(CzError::Convexity(format!(
                    "pure power t_{j}^{} has nonpositive coefficient {coef}",
                    m[j]
                )));
            }
            coeff_pure[j] = *coef;
            continue;
        }
        let mut g = Ratio::new(0i64, 1);
        for (j, &e) in exp.iter().enumerate() {
            if e > 0 {
                g += Ratio::new(e as i64, m[j] as i64);
            }
        }
        if g < one {
            return Err(CzError::NormalForm(format!(
                "monomial {exp:?} has grading {}/{} below one",
                g.numer(),
                g.denom()
            )));
        }
        if g == one {
            p1_terms.push((exp.clone(), *coef));
        } else {
            rem_terms.push((exp.clone(), *coef));
        }
    }

    let p1 = MultiPoly::new(dim, p1_terms)?;
    let remainder = MultiPoly::new(dim, rem_terms)?;

    // Leading part on the fast axes: set every flat variable to zero.
    let fast = &axes[..r];
    let mut h_terms: Vec<(Vec<u32>, f64)> = Vec::new();
    for j in fast {
        let mut e = vec![0u32; dim];
        e[*j] = ell0;
        h_terms.push((e, coeff_pure[*j]));
    }
    for (e, c) in p1.terms() {
        if (0..dim).all(|j| e[j] == 0 || fast.contains(&j)) {
            h_terms.push((e.clone(), *c));
        }
    }
    let h = MultiPoly::new(dim, h_terms)?;

    Ok(SchulzForm { ell0, r, axes, m, coeff_pure, p1, remainder, h })
}
