//! Adjacency spectra, the Γ/Φ Chebyshev bases, and linear eigenvalue functionals.
//!
//! Spectra are of `(d-1)^{-1/2} A`, so the bulk sits in `[-2, 2]` and the
//! top eigenvalue of a connected graph is `d / sqrt(d-1)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, RealField, SymmetricEigen};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graph::RegularGraph;
use crate::nbwalks::{cnbw_counts, mu_k};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::stats::{lambda, poisson_draw};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `Γ_k`, whose eigenvalue sums are exact walk counts for fixed d.
    Gamma,
    /// `Φ_k = 2 T_k(x/2)`, independent of d.
    Phi,
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(Basis::Gamma),
            "phi" => Ok(Basis::Phi),
            other => arg(format!("unknown basis {other:?} (expected gamma or phi)")),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Gamma => "gamma",
            Basis::Phi => "phi",
        })
    }
}

/// Eigenvalues of `(d-1)^{-1/2} A` in descending order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledSpectrum<T> {
    pub d: usize,
    pub values: Vec<T>,
}

impl<T: Real> ScaledSpectrum<T> {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `(Σ λ_i, Σ λ_i^2)`; for a d-regular graph these are `0` and `nd/(d-1)`.
    pub fn trace_sums(&self) -> (T, T) {
        let s = self.values.iter().copied().sum();
        let s2 = self.values.iter().map(|&x| x * x).sum();
        (s, s2)
    }

    /// Largest eigenvalue below the top one, if any.
    pub fn second(&self) -> Option<T> {
        self.values.get(1).copied()
    }
}

fn scaled_matrix<T: Real + RealField>(g: &RegularGraph) -> DMatrix<T> {
    let n = g.n();
    let s = <T as Real>::of(1.0 / ((g.d() as f64 - 1.0).sqrt()));
    let mut m = DMatrix::<T>::zeros(n, n);
    for (a, b) in g.edges() {
        m[(a, b)] = s;
        m[(b, a)] = s;
    }
    m
}

fn sorted_desc<T: Real + RealField>(eig: SymmetricEigen<T, nalgebra::Dyn>) -> (Vec<T>, DMatrix<T>) {
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Full dense eigendecomposition. Requires `d >= 2`.
pub fn scaled_spectrum<T: Real + RealField>(g: &RegularGraph) -> Result<ScaledSpectrum<T>> {
    if g.d() < 2 {
        return arg("scaled spectrum needs d >= 2");
    }
    let eig = SymmetricEigen::try_new(scaled_matrix::<T>(g), <T as Real>::of(1e-15), 0)
        .ok_or_else(|| Error::Evaluation("eigensolver did not converge".into()))?;
    let (values, _) = sorted_desc(eig);
    Ok(ScaledSpectrum { d: g.d(), values })
}

/// Spectrum plus eigenvectors (column i belongs to `values[i]`).
pub fn scaled_eigensystem<T: Real + RealField>(g: &RegularGraph) -> Result<(ScaledSpectrum<T>, DMatrix<T>)> {
    if g.d() < 2 {
        return arg("scaled spectrum needs d >= 2");
    }
    let eig = SymmetricEigen::try_new(scaled_matrix::<T>(g), <T as Real>::of(1e-15), 0)
        .ok_or_else(|| Error::Evaluation("eigensolver did not converge".into()))?;
    let (values, vectors) = sorted_desc(eig);
    Ok((ScaledSpectrum { d: g.d(), values }, vectors))
}

/// `max_i ||A v_i - sqrt(d-1) λ_i v_i||` over the unscaled adjacency matrix.
pub fn eigen_residual(g: &RegularGraph, spec: &ScaledSpectrum<f64>, vectors: &DMatrix<f64>) -> f64 {
    let s = (g.d() as f64 - 1.0).sqrt();
    let mut worst = 0.0f64;
    for (i, &l) in spec.values.iter().enumerate() {
        let v = vectors.column(i);
        let mut r2 = 0.0;
        for a in 0..g.n() {
            let av: f64 = g.neighbors(a).iter().map(|&b| v[b]).sum();
            r2 += (av - s * l * v[a]).powi(2);
        }
        worst = worst.max(r2.sqrt());
    }
    worst
}

/// `Φ_0 = 1`, `Φ_k(x) = 2 T_k(x/2)`.
pub fn phi_poly<T: Real>(k: usize, x: T) -> T {
    if k == 0 {
        return T::one();
    }
    let y = x / <T as Real>::of(2.0);
    let (mut t0, mut t1) = (T::one(), y);
    for _ in 1..k {
        let t2 = <T as Real>::of(2.0) * y * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    <T as Real>::of(2.0) * t1
}

/// `Γ_k - Φ_k`: `(d-2)/(d-1)^{k/2}` for even `k >= 2`, zero otherwise.
pub fn gamma_shift<T: Real>(k: usize, d: usize) -> T {
    if k == 0 || k % 2 == 1 {
        T::zero()
    } else {
        <T as Real>::of((d as f64 - 2.0) / (d as f64 - 1.0).powi((k / 2) as i32))
    }
}

pub fn gamma_poly<T: Real>(k: usize, d: usize, x: T) -> T {
    phi_poly(k, x) + gamma_shift(k, d)
}

/// `max_{1<=k<=kmax} |Σ_i Γ_k(λ_i) - (d-1)^{-k/2} CNBW_k|`.
pub fn gamma_trace_identity_check(g: &RegularGraph, kmax: usize) -> Result<f64> {
    let spec = scaled_spectrum::<f64>(g)?;
    let walks = cnbw_counts(g, kmax)?;
    Ok(gamma_deviation(&spec, &walks, kmax))
}

/// Same check from precomputed spectrum and walk counts.
pub fn gamma_deviation(spec: &ScaledSpectrum<f64>, walks: &[u128], kmax: usize) -> f64 {
    let d = spec.d;
    let scale = (d as f64 - 1.0).sqrt();
    (1..=kmax.min(walks.len().saturating_sub(1)))
        .map(|k| {
            let lhs: f64 = spec.values.iter().map(|&x| gamma_poly(k, d, x)).sum();
            (lhs - walks[k] as f64 / scale.powi(k as i32)).abs()
        })
        .fold(0.0, f64::max)
}

/// `f_m = Σ_{k<=m} a_k P_k` in the Γ or Φ basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebExpansion<T> {
    pub basis: Basis,
    /// Only read by the Γ basis.
    pub d: usize,
    pub coefficients: Vec<T>,
    /// Quadrature nodes used for the final coefficients.
    pub nodes: usize,
    /// Whether doubling the node count stopped changing the coefficients.
    pub converged: bool,
}

impl<T: Real> ChebExpansion<T> {
    pub fn from_coefficients(basis: Basis, d: usize, coefficients: Vec<T>) -> Self {
        ChebExpansion { basis, d, coefficients, nodes: 0, converged: true }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn basis_value(&self, k: usize, x: T) -> T {
        match self.basis {
            Basis::Gamma => gamma_poly(k, self.d, x),
            Basis::Phi => phi_poly(k, x),
        }
    }

    pub fn eval(&self, x: T) -> T {
        // Φ_k by recurrence, plus the Γ constant shifts
        let y = x / <T as Real>::of(2.0);
        let (mut t0, mut t1) = (T::one(), y);
        let mut acc = self.coefficients.first().copied().unwrap_or_else(T::zero);
        for (k, &a) in self.coefficients.iter().enumerate().skip(1) {
            if k > 1 {
                let t2 = <T as Real>::of(2.0) * y * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            let mut p = <T as Real>::of(2.0) * t1;
            if self.basis == Basis::Gamma {
                p = p + gamma_shift(k, self.d);
            }
            acc = acc + a * p;
        }
        acc
    }

    /// Re-express the same polynomial in the other basis; only `a_0` changes.
    pub fn to_basis(&self, basis: Basis) -> Self {
        let mut out = self.clone();
        if basis == self.basis {
            return out;
        }
        out.basis = basis;
        let shift: T = self.coefficients.iter().enumerate().skip(1).map(|(k, &a)| a * gamma_shift(k, self.d)).sum();
        if let Some(a0) = out.coefficients.first_mut() {
            *a0 = match basis {
                Basis::Gamma => *a0 - shift,
                Basis::Phi => *a0 + shift,
            };
        }
        out
    }

    /// `Σ_{k>m} |a_k| Φ_k(x)`: bounds `|f - f_m|` on `[-x, x]` for `x >= 2`,
    /// to the extent the stored coefficients capture the tail.
    pub fn tail_sum(&self, m: usize, x: T) -> T {
        self.coefficients.iter().enumerate().skip(m + 1).map(|(k, &a)| a.abs() * phi_poly(k, x).abs()).sum()
    }

    /// Fitted geometric decay rate `ρ` with `|a_k| ≈ C ρ^k`, from coefficients above 1e-13.
    pub fn decay_rate(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| (k as f64, a.to_f64_lossy().abs()))
            .filter(|&(_, a)| a > 1e-13)
            .map(|(k, a)| (k, a.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    }

    /// `Σ_{k>kmax} |a_k| (d-1)^{-k/2} μ_k(d)`: the mean mass of walk terms dropped by truncation at `kmax`.
    pub fn walk_tail(&self, kmax: usize) -> f64 {
        let b = (self.d as f64 - 1.0).sqrt();
        self.coefficients
            .iter()
            .enumerate()
            .skip(kmax + 1)
            .map(|(k, a)| a.to_f64_lossy().abs() * mu_k(self.d as u64, k as u64) as f64 / b.powi(k as i32))
            .sum()
    }
}

fn quadrature<T: Real, F: Fn(T) -> T>(f: &F, nodes: usize, m: usize) -> Result<Vec<T>> {
    let pi = T::PI();
    let nn = <T as Real>::of_usize(nodes);
    let mut vals = Vec::with_capacity(nodes);
    let mut thetas = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let th = pi * (<T as Real>::of_usize(j) + <T as Real>::of(0.5)) / nn;
        let x = <T as Real>::of(2.0) * th.cos();
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("f({x}) = {v}")));
        }
        vals.push(v);
        thetas.push(th);
    }
    // a_k = c_k / 2 with c_k the usual Chebyshev coefficient of f(2t); a_0 = c_0 / 2 as well
    Ok((0..=m)
        .map(|k| {
            let kk = <T as Real>::of_usize(k);
            let s: T = vals.iter().zip(&thetas).map(|(&v, &th)| v * (kk * th).cos()).sum();
            s / nn
        })
        .collect())
}

const MAX_NODES: usize = 1 << 20;

/// Coefficients of f on `[-2, 2]` in the requested basis up to order m, by
/// Chebyshev–Gauss quadrature. Starts at `4(m+1)` nodes and doubles until
/// successive coefficient vectors agree to 1e-12 (or the type's precision).
pub fn cheb_expand<T: Real, F: Fn(T) -> T>(f: F, basis: Basis, d: usize, m: usize) -> Result<ChebExpansion<T>> {
    if basis == Basis::Gamma && d < 2 {
        return arg("the gamma basis needs d >= 2");
    }
    let tol = <T as Real>::of(1e-12).max(<T as Real>::of(64.0) * T::epsilon());
    let mut nodes = 4 * (m + 1);
    let mut prev = quadrature(&f, nodes, m)?;
    let mut converged = false;
    while nodes < MAX_NODES {
        nodes *= 2;
        let next = quadrature(&f, nodes, m)?;
        let scale = next.iter().fold(T::one(), |s, &a| s.max(a.abs()));
        let diff = prev.iter().zip(&next).fold(T::zero(), |s, (&a, &b)| s.max((a - b).abs()));
        prev = next;
        if diff <= tol * scale {
            converged = true;
            break;
        }
    }
    let phi = ChebExpansion { basis: Basis::Phi, d, coefficients: prev, nodes, converged };
    Ok(phi.to_basis(basis))
}

/// `Σ_i f_m(λ_i) - n a_0`.
pub fn eigen_functional<T: Real>(spec: &ScaledSpectrum<T>, exp: &ChebExpansion<T>) -> Result<T> {
    if exp.basis == Basis::Gamma && exp.d != spec.d {
        return arg(format!("expansion built for d={} but spectrum has d={}", exp.d, spec.d));
    }
    let a0 = exp.coefficients.first().copied().unwrap_or_else(T::zero);
    Ok(spec.values.iter().map(|&x| exp.eval(x) - a0).sum())
}

/// The same functional from walk counts: `Σ_{k>=1} a_k (d-1)^{-k/2} CNBW_k`
/// for a Γ-basis expansion. Exact up to rounding, with no eigensolve.
pub fn walk_functional(walks: &[u128], exp: &ChebExpansion<f64>) -> Result<f64> {
    if exp.basis != Basis::Gamma {
        return arg("walk functional needs a gamma-basis expansion");
    }
    let m = exp.order();
    if walks.len() <= m {
        return arg(format!("need walk counts up to length {m}, got {}", walks.len().saturating_sub(1)));
    }
    let b = (exp.d as f64 - 1.0).sqrt();
    Ok((1..=m).map(|k| exp.coefficients[k] * walks[k] as f64 / b.powi(k as i32)).sum())
}

/// `r_n = floor(β log n / log(d-1))`.
pub fn r_n(n: usize, d: usize, beta: f64) -> usize {
    if d < 3 || n < 2 {
        return 0;
    }
    (beta * (n as f64).ln() / (d as f64 - 1.0).ln()).floor() as usize
}

/// `m_f(n) = n a_0 + Σ_{k=1}^{r_n} a_k (d-1)^{-k/2} (μ_k(d) - (d-2) n 1{k even})`.
pub fn centering_m_f<T: Real>(n: usize, d: usize, exp: &ChebExpansion<T>, r_n: usize) -> Result<T> {
    if exp.basis != Basis::Phi {
        return arg("centering constants are defined for the phi basis");
    }
    let b = (d as f64 - 1.0).sqrt();
    let mut acc = exp.coefficients.first().copied().unwrap_or_else(T::zero) * <T as Real>::of_usize(n);
    for (k, &a) in exp.coefficients.iter().enumerate().skip(1).take(r_n) {
        let even = if k % 2 == 0 { (d as f64 - 2.0) * n as f64 } else { 0.0 };
        let w = (mu_k(d as u64, k as u64) as f64 - even) / b.powi(k as i32);
        acc = acc + a * <T as Real>::of(w);
    }
    Ok(acc)
}

/// `σ_f = Σ_{k>=3} 2k a_k^2`, the limiting variance when d grows.
pub fn limit_variance_growing_d<T: Real>(exp: &ChebExpansion<T>) -> Result<T> {
    if exp.basis != Basis::Phi {
        return arg("the growing-degree variance is defined for the phi basis");
    }
    Ok(exp.coefficients.iter().enumerate().skip(3).map(|(k, &a)| <T as Real>::of_usize(2 * k) * a * a).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSamples {
    pub draws: Vec<f64>,
    /// Mean of the truncated limit variable.
    pub mean: f64,
    /// Mean mass of the dropped terms beyond `kmax`.
    pub tail_bound: f64,
    pub kmax: usize,
}

/// I.i.d. draws of `Σ_{k<=kmax} a_k (d-1)^{-k/2} CNBW_k` with
/// `CNBW_k = Σ_{j|k, j>=3} 2j C_j` and independent `C_j ~ Poisson(λ_j)`.
pub fn sample_limit_fixed_d(exp: &ChebExpansion<f64>, d: usize, kmax: usize, count: usize, seed: u64) -> Result<LimitSamples> {
    if exp.basis != Basis::Gamma {
        return arg("the fixed-degree limit needs a gamma-basis expansion");
    }
    if d < 3 || exp.d != d {
        return arg(format!("need d >= 3 matching the expansion (d={d}, expansion d={})", exp.d));
    }
    let top = kmax.min(exp.order());
    let b = (d as f64 - 1.0).sqrt();
    let weight: Vec<f64> = (0..=top).map(|k| if k == 0 { 0.0 } else { exp.coefficients[k] / b.powi(k as i32) }).collect();
    let lambdas: Vec<f64> = (0..=top).map(|j| lambda(d, j)).collect();
    let mean = (1..=top).map(|k| weight[k] * mu_k(d as u64, k as u64) as f64).sum();
    let draws = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let c: Vec<f64> = (0..=top).map(|j| if j < 3 { 0.0 } else { poisson_draw(lambdas[j], &mut rng) as f64 }).collect();
            (1..=top)
                .map(|k| {
                    let walks: f64 = (3..=k).filter(|j| k % j == 0).map(|j| 2.0 * j as f64 * c[j]).sum();
                    weight[k] * walks
                })
                .sum()
        })
        .collect();
    Ok(LimitSamples { draws, mean, tail_bound: exp.walk_tail(kmax), kmax })
}

/// I.i.d. draws of the centred normal limit with variance `σ_f`.
pub fn sample_limit_growing_d(exp: &ChebExpansion<f64>, count: usize, seed: u64) -> Result<LimitSamples> {
    let var = limit_variance_growing_d(exp)?;
    let normal = Normal::new(0.0, var.sqrt()).map_err(|e| Error::Argument(e.to_string()))?;
    let draws = (0..count as u64).into_par_iter().map(|i| normal.sample(&mut stream_rng(seed, i))).collect();
    Ok(LimitSamples { draws, mean: 0.0, tail_bound: 0.0, kmax: exp.order() })
}

/// A test function on `[-2, 2]` named on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedFunction {
    Exp,
    Cos,
    Cosh,
    Square,
    Gamma(usize),
    Phi(usize),
    /// Power-series coefficients `c_0 + c_1 x + ...`.
    Poly(Vec<f64>),
}

impl FromStr for NamedFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let index = |rest: &str| rest.parse::<usize>().map_err(|_| Error::Argument(format!("bad index in {s:?}")));
        match s.as_str() {
            "exp" => Ok(NamedFunction::Exp),
            "cos" => Ok(NamedFunction::Cos),
            "cosh" => Ok(NamedFunction::Cosh),
            "x^2" | "square" => Ok(NamedFunction::Square),
            _ if s.starts_with("gamma") => Ok(NamedFunction::Gamma(index(&s[5..])?)),
            _ if s.starts_with("phi") => Ok(NamedFunction::Phi(index(&s[3..])?)),
            _ if s.starts_with("poly:") => s[5..]
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| Error::Argument(format!("bad coefficient {c:?}"))))
                .collect::<Result<_>>()
                .map(NamedFunction::Poly),
            _ => arg(format!("unknown function {s:?} (try exp, cos, cosh, x^2, gammaK, phiK, poly:c0,c1,..)")),
        }
    }
}

impl NamedFunction {
    pub fn eval(&self, d: usize, x: f64) -> f64 {
        match self {
            NamedFunction::Exp => x.exp(),
            NamedFunction::Cos => x.cos(),
            NamedFunction::Cosh => x.cosh(),
            NamedFunction::Square => x * x,
            NamedFunction::Gamma(k) => gamma_poly(*k, d, x),
            NamedFunction::Phi(k) => phi_poly(*k, x),
            NamedFunction::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
        }
    }

    /// Smallest order that represents the function exactly, if it is a polynomial.
    pub fn degree(&self) -> Option<usize> {
        match self {
            NamedFunction::Square => Some(2),
            NamedFunction::Gamma(k) | NamedFunction::Phi(k) => Some(*k),
            NamedFunction::Poly(c) => Some(c.len().saturating_sub(1)),
            _ => None,
        }
    }

    pub fn expand(&self, basis: Basis, d: usize, m: usize) -> Result<ChebExpansion<f64>> {
        cheb_expand(|x| self.eval(d, x), basis, d, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn k4_and_petersen_spectra() {
        let s = scaled_spectrum::<f64>(&complete(4)).unwrap();
        let r2 = 2f64.sqrt();
        for (x, e) in s.values.iter().zip([3.0 / r2, -1.0 / r2, -1.0 / r2, -1.0 / r2]) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-12);
        }
        let p = scaled_spectrum::<f64>(&petersen()).unwrap();
        let want: Vec<f64> = [3.0, 1.0, 1.0, 1.0, 1.0, 1.0, -2.0, -2.0, -2.0, -2.0].iter().map(|x| x / r2).collect();
        for (x, e) in p.values.iter().zip(want) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn disconnected_top_multiplicity() {
        let g = disjoint_union(&complete(4), &complete(4)).unwrap();
        let s = scaled_spectrum::<f64>(&g).unwrap();
        let top = 3.0 / 2f64.sqrt();
        assert_eq!(s.values.iter().filter(|&&x| (x - top).abs() < 1e-10).count(), 2);
    }

    #[test]
    fn polynomial_values() {
        for x in [-1.7, 0.0, 0.3, 2.0] {
            assert_eq!(gamma_poly::<f64>(0, 3, x), 1.0);
            assert_abs_diff_eq!(gamma_poly::<f64>(1, 3, x), x, epsilon = 1e-14);
            assert_abs_diff_eq!(gamma_poly::<f64>(3, 3, x), x * x * x - 3.0 * x, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(gamma_poly::<f64>(2, 3, 0.0), -1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phi_poly::<f32>(2, 1.0f32), -1.0f32, epsilon = 1e-6);
    }

    #[test]
    fn identity_on_small_graphs() {
        assert!(gamma_trace_identity_check(&complete(4), 10).unwrap() < 1e-10);
        assert!(gamma_trace_identity_check(&petersen(), 8).unwrap() < 1e-8);
        let s = scaled_spectrum::<f64>(&complete(4)).unwrap();
        let y: f64 = s.values.iter().map(|&x| gamma_poly(3, 3, x)).sum();
        assert_abs_diff_eq!(y, 6.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn expansion_examples() {
        let e = cheb_expand(|x: f64| gamma_poly(5, 3, x), Basis::Gamma, 3, 8).unwrap();
        for (k, a) in e.coefficients.iter().enumerate() {
            assert_abs_diff_eq!(*a, if k == 5 { 1.0 } else { 0.0 }, epsilon = 1e-10);
        }
        let sq = cheb_expand(|x: f64| x * x, Basis::Phi, 3, 4).unwrap();
        assert_abs_diff_eq!(sq.coefficients[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sq.coefficients[2], 1.0, epsilon = 1e-12);
        let sg = sq.to_basis(Basis::Gamma);
        assert_abs_diff_eq!(sg.coefficients[0], 1.5, epsilon = 1e-12);
        assert!(matches!(cheb_expand(|x: f64| (x - 10.0).ln(), Basis::Phi, 3, 4), Err(Error::Evaluation(_))));
    }

    #[test]
    fn centering_and_variance() {
        let phi4 = ChebExpansion::from_coefficients(Basis::Phi, 3, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(centering_m_f(100, 3, &phi4, 4).unwrap(), -21.0, epsilon = 1e-12);
        let phi3 = ChebExpansion::from_coefficients(Basis::Phi, 3, vec![0.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(centering_m_f(77, 3, &phi3, 5).unwrap(), 8.0 / 8f64.sqrt(), epsilon = 1e-12);
        assert_eq!(limit_variance_growing_d(&phi3).unwrap(), 6.0);
        let both = ChebExpansion::from_coefficients(Basis::Phi, 3, vec![0.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(limit_variance_growing_d(&both).unwrap(), 14.0);
    }

    #[test]
    fn named_functions_parse() {
        assert_eq!("gamma3".parse::<NamedFunction>().unwrap(), NamedFunction::Gamma(3));
        assert_eq!("poly:1,0,2".parse::<NamedFunction>().unwrap().eval(3, 2.0), 9.0);
        assert!("tan".parse::<NamedFunction>().is_err());
    }
}
