//! The ordered value space `E = R^d` with the nonnegative orthant as cone,
//! random vectors over a finite space, and dual densities.

use crate::error::{Error, Result};
use crate::space::FiniteMeasureSpace;

/// Coordinate tolerance of the cone order.
pub const ORDER_TOLERANCE: f64 = 1e-12;
/// Tolerance on the normalization `<h, z> = 1` of dual densities.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-10;

/// `R^d` ordered by the nonnegative orthant, with an interior numeraire `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSpace {
    numeraire: Vec<f64>,
}

impl OrderedSpace {
    pub fn new(numeraire: Vec<f64>) -> Result<Self> {
        if numeraire.is_empty() || numeraire.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidNumeraire);
        }
        Ok(Self { numeraire })
    }

    /// One-dimensional space with `z = 1`.
    pub fn scalar() -> Self {
        Self { numeraire: vec![1.0] }
    }

    pub fn dimension(&self) -> usize {
        self.numeraire.len()
    }

    pub fn numeraire(&self) -> &[f64] {
        &self.numeraire
    }
}

/// One `d`-vector per outcome, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVector {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl RandomVector {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(n, d, values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { outcome: k / d, coord: k % d });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        if d == 0 {
            return Err(Error::ShapeMismatch { expected: "at least one non-empty row".into(), actual: "none".into() });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::ShapeMismatch { expected: format!("rows of length {d}"), actual: format!("{}", r.len()) });
        }
        Self::new(rows.len(), d, rows.concat())
    }

    /// Scalar payoffs on a one-dimensional space.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, values: vec![0.0; n * d] }
    }

    /// `c_i z` at every outcome.
    pub fn numeraire_multiple(order: &OrderedSpace, c: &[f64]) -> Self {
        let z = order.numeraire();
        let values = c.iter().flat_map(|&ci| z.iter().map(move |&zj| ci * zj)).collect();
        Self { n: c.len(), d: z.len(), values }
    }

    pub fn constant(order: &OrderedSpace, n: usize, c: f64) -> Self {
        Self::numeraire_multiple(order, &vec![c; n])
    }

    pub fn outcomes(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.d)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// `f + m_i z` outcome by outcome.
    pub fn add_numeraire(&self, order: &OrderedSpace, m: &[f64]) -> Self {
        let z = order.numeraire();
        let mut out = self.clone();
        for (i, row) in out.values.chunks_mut(self.d).enumerate() {
            for (x, zj) in row.iter_mut().zip(z) {
                *x += m[i] * zj;
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|x| a * x)
    }

    /// Outcome-dependent scaling `a_i f_i`.
    pub fn scale_by(&self, a: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, row) in out.values.chunks_mut(self.d).enumerate() {
            row.iter_mut().for_each(|x| *x *= a[i]);
        }
        out
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        Self { n: self.n, d: self.d, values: self.values.iter().map(|&x| op(x)).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Outcome-dependent mixture `l_i f_i + (1 - l_i) g_i`.
    pub fn mix(&self, other: &Self, lambda: &[f64]) -> Result<Self> {
        same_shape(self, other)?;
        let d = self.d;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(k, (a, b))| lambda[k / d] * a + (1.0 - lambda[k / d]) * b)
            .collect();
        Ok(Self { n: self.n, d, values })
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_shape(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        Ok(Self { n: self.n, d: self.d, values })
    }

    /// `<w, f_i>` for every outcome.
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        self.rows().map(|r| dot(r, w)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }
}

/// Candidate density `h(ω) ∈ E*` per outcome, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DualDensity {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl DualDensity {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(n, d, values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { outcome: k / d, coord: k % d });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rv = RandomVector::from_rows(rows)?;
        Ok(Self { n: rv.n, d: rv.d, values: rv.values })
    }

    /// `h_i = q_i w`: a scalar density times a fixed dual-cone direction.
    pub fn from_density(q: &[f64], w: &[f64]) -> Self {
        let values = q.iter().flat_map(|&qi| w.iter().map(move |&wj| qi * wj)).collect();
        Self { n: q.len(), d: w.len(), values }
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, values: vec![0.0; n * d] }
    }

    pub fn outcomes(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.d)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// `<h(ω), z>` per outcome.
    pub fn numeraire_mass(&self, order: &OrderedSpace) -> Vec<f64> {
        self.rows().map(|r| dot(r, order.numeraire())).collect()
    }

    /// Whether every coordinate lies in the dual cone (the orthant).
    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&x| x >= -ORDER_TOLERANCE)
    }

    /// Returns `q` when `h_i = q_i w` at every outcome (within `tol`).
    pub fn as_multiple_of(&self, w: &[f64], tol: f64) -> Option<Vec<f64>> {
        let ww = dot(w, w);
        let mut q = Vec::with_capacity(self.n);
        for row in self.rows() {
            let qi = dot(row, w) / ww;
            if row.iter().zip(w).any(|(h, wj)| (h - qi * wj).abs() > tol) {
                return None;
            }
            q.push(qi);
        }
        Some(q)
    }
}

/// `f1 <=_K f2`: every coordinate of `f2 - f1` is at least `-1e-12`.
pub fn leq_k(f1: &RandomVector, f2: &RandomVector) -> Result<bool> {
    same_shape(f1, f2)?;
    Ok(f1.values.iter().zip(&f2.values).all(|(a, b)| b - a >= -ORDER_TOLERANCE))
}

/// `<h(ω), f(ω)>` for every outcome.
pub fn pointwise_pairing(g: &DualDensity, f: &RandomVector) -> Result<Vec<f64>> {
    if g.n != f.n || g.d != f.d {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", f.n, f.d),
            actual: format!("{}x{}", g.n, g.d),
        });
    }
    Ok(g.rows().zip(f.rows()).map(|(h, x)| dot(h, x)).collect())
}

/// `<g, f> = Σ_i μ_i <h_i, f_i>`.
pub fn pairing(space: &FiniteMeasureSpace, g: &DualDensity, f: &RandomVector) -> Result<f64> {
    if f.n != space.len() {
        return Err(Error::ShapeMismatch { expected: format!("{} outcomes", space.len()), actual: format!("{}", f.n) });
    }
    Ok(space.expectation(&pointwise_pairing(g, f)?))
}

/// Membership in the dual feasible set: `h >= 0` coordinatewise and
/// `Σ_i μ_i <h_i, z> = 1`.
pub fn in_dual_feasible(space: &FiniteMeasureSpace, order: &OrderedSpace, g: &DualDensity) -> bool {
    g.n == space.len()
        && g.d == order.dimension()
        && g.is_nonnegative()
        && (space.expectation(&g.numeraire_mass(order)) - 1.0).abs() <= FEASIBILITY_TOLERANCE
}

/// Conditional normalization: `E[<h, z> | F_t] = 1` on every atom of `P_t`
/// (at the terminal level this is `<h(ω), z> = 1` at every outcome).
pub fn in_conditional_feasible(
    space: &FiniteMeasureSpace,
    order: &OrderedSpace,
    g: &DualDensity,
    t: usize,
) -> Result<bool> {
    if g.n != space.len() || g.d != order.dimension() {
        return Ok(false);
    }
    let mass = space.conditional_expectation(&g.numeraire_mass(order), t)?;
    Ok(g.is_nonnegative() && mass.iter().all(|m| (m - 1.0).abs() <= FEASIBILITY_TOLERANCE))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_shape(n: usize, d: usize, len: usize) -> Result<()> {
    if n == 0 || d == 0 || len != n * d {
        return Err(Error::ShapeMismatch { expected: format!("{n}x{d} with n, d >= 1"), actual: format!("{len} values") });
    }
    Ok(())
}

fn same_shape(a: &RandomVector, b: &RandomVector) -> Result<()> {
    if a.n != b.n || a.d != b.d {
        return Err(Error::ShapeMismatch { expected: format!("{}x{}", a.n, a.d), actual: format!("{}x{}", b.n, b.d) });
    }
    Ok(())
}
