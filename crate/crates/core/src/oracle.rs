//! Brute-force verification: Toeplitz matrices on truncated polynomial spaces,
//! reproducing-kernel residuals and commutator norms.
//!
//! Everything here integrates definitions directly against the weighted measures; nothing
//! calls into [`crate::spectral`]. Siegel-domain operators are handled on the bounded
//! domain through the Cayley transform: the truncated space is the image of the bounded
//! monomials under the intertwining unitary, so symbols are pulled back with the inverse
//! Cayley map and the measure stays `v_λ`.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{
    bergman_kernel, cayley_jacobian, cayley_pullback, check_weight, ln_multigamma, weight_density, BergmanSampler,
    DomainPoint, DomainTag,
};
use crate::error::{Error, Result};
use crate::linalg::{identity_c, inverse_c, packed_len, packed_pairs, ComplexSymMatrix, C64};
use crate::montecarlo::{BatchSums, McConfig};
use crate::quadrature::Rule;
use crate::symbols::SymbolSpec;

/// Relative rounding floor added to deterministic error estimates.
const ROUNDING: f64 = 1e-12;

/// Condition number above which a Gram matrix carries a warning.
pub const GRAM_CONDITION_LIMIT: f64 = 1e8;

/// `∏ z_i^{e_i}` over the packed coordinates `z_00, z_01, …, z_{n−1,n−1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        let len = exponents.len();
        if (1..=16).all(|n| packed_len(n) != len) {
            return Err(Error::invalid(format!("{len} exponents do not match any packed length")));
        }
        Ok(Self(exponents))
    }

    /// The constant `1` on `n x n` matrices.
    pub fn one(n: usize) -> Self {
        Self(vec![0; packed_len(n)])
    }

    /// The coordinate function `z_jk`.
    pub fn coordinate(n: usize, j: usize, k: usize) -> Self {
        let (j, k) = (j.min(k), j.max(k));
        let mut e = vec![0; packed_len(n)];
        e[crate::linalg::packed_index(n, j, k)] = 1;
        Self(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn eval(&self, z: &ComplexSymMatrix) -> C64 {
        z.packed().iter().zip(&self.0).filter(|(_, &e)| e > 0).map(|(v, &e)| v.powu(e)).product()
    }

    fn n(&self) -> usize {
        (1..).find(|&n| packed_len(n) == self.0.len()).expect("validated packed length")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n();
        let parts: Vec<String> = packed_pairs(n)
            .zip(&self.0)
            .filter(|(_, &e)| e > 0)
            .map(|((j, k), &e)| if e == 1 { format!("z{j}{k}") } else { format!("z{j}{k}^{e}") })
            .collect();
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join(" "))
        }
    }
}

/// All monomials of total degree `<= max_degree`, ordered by degree (so lower-degree
/// bases are prefixes of higher-degree ones).
pub fn monomial_basis(n: usize, max_degree: u32) -> Vec<Monomial> {
    fn rec(slots: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == slots {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(slots, left - e, cur, out);
            cur.pop();
        }
    }
    let slots = packed_len(n);
    let mut out = Vec::new();
    for d in 0..=max_degree {
        let mut level = Vec::new();
        rec(slots, d, &mut Vec::new(), &mut level);
        out.extend(level.into_iter().map(Monomial));
    }
    out
}

/// How the integrals over the bounded domain are computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Polar tensor quadrature (`n = 1` only); errors come from a coarser rerun.
    Quadrature { order: usize },
    /// Samples from `v_λ`; errors come from the per-stream jackknife.
    MonteCarlo(McConfig),
}

enum Integrals {
    Quadrature { fine: Vec<C64>, coarse: Vec<C64> },
    MonteCarlo(BatchSums),
}

impl Integrals {
    /// `h(means)` with a per-component error.
    fn propagate<H>(&self, h: H) -> Result<(Vec<C64>, Vec<f64>)>
    where
        H: Fn(&[C64]) -> Result<Vec<C64>>,
    {
        match self {
            Integrals::Quadrature { fine, coarse } => {
                let f = h(fine)?;
                let c = h(coarse)?;
                let scale = f.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
                let err = f.iter().zip(&c).map(|(a, b)| (a - b).norm() + ROUNDING * scale.max(1.0)).collect();
                Ok((f, err))
            }
            Integrals::MonteCarlo(b) => b.jackknife(h),
        }
    }

    fn samples(&self) -> Option<u64> {
        match self {
            Integrals::Quadrature { .. } => None,
            Integrals::MonteCarlo(b) => Some(b.total_count()),
        }
    }
}

fn polar_rule(order: usize, lambda: f64) -> Result<Vec<(ComplexSymMatrix, f64)>> {
    let radial = Rule::graded_legendre(order, 0.0, 1.0, 4)?;
    let angular = Rule::periodic_average(2 * order + 2)?;
    let mut out = Vec::with_capacity(radial.len() * angular.len());
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        if !(r < 1.0) {
            continue;
        }
        for (&t, &wt) in angular.nodes.iter().zip(&angular.weights) {
            let z = ComplexSymMatrix::diagonal(&[C64::from_polar(r, t)]);
            let w = wr * r * std::f64::consts::TAU * wt * weight_density(DomainTag::BoundedDIII, lambda, &z)?;
            out.push((z, w));
        }
    }
    Ok(out)
}

/// `∫ g dv_λ` over the bounded domain for a vector-valued `g`.
fn integrate_bounded<G>(n: usize, lambda: f64, dim: usize, g: G, integ: &Integrator) -> Result<Integrals>
where
    G: Fn(&ComplexSymMatrix, &mut [C64]) + Sync,
{
    check_weight(n, lambda)?;
    match *integ {
        Integrator::Quadrature { order } => {
            if n != 1 {
                return Err(Error::invalid("deterministic quadrature is only available for n = 1"));
            }
            if order < 3 {
                return Err(Error::invalid("quadrature order must be at least 3"));
            }
            let run = |order: usize| -> Result<Vec<C64>> {
                let mut acc = vec![C64::new(0.0, 0.0); dim];
                let mut buf = vec![C64::new(0.0, 0.0); dim];
                for (z, w) in polar_rule(order, lambda)? {
                    buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                    g(&z, &mut buf);
                    for (a, v) in acc.iter_mut().zip(&buf) {
                        *a += v * w;
                    }
                }
                if acc.iter().any(|v| !v.is_finite()) {
                    return Err(Error::numerical("quadrature produced a non-finite value"));
                }
                Ok(acc)
            };
            Ok(Integrals::Quadrature { fine: run(order)?, coarse: run((order * 2 / 3).max(3))? })
        }
        Integrator::MonteCarlo(cfg) => {
            let sampler = BergmanSampler::new(n, lambda)?;
            let sums = BatchSums::collect(&cfg, &sampler, dim, |z, w, out| {
                g(z, out);
                out.iter_mut().for_each(|v| *v *= w);
            })?;
            Ok(Integrals::MonteCarlo(sums))
        }
    }
}

/// `−i(U − I)(U + I)⁻¹` without membership validation; `None` where `U + I` is singular.
fn siegel_image(u: &ComplexSymMatrix) -> Option<ComplexSymMatrix> {
    let n = u.n();
    let ud = u.to_dense();
    let id = identity_c(n);
    let inv = inverse_c(&(&ud + &id)).ok()?;
    Some(ComplexSymMatrix::from_dense_upper(&((&ud - &id) * inv * C64::new(0.0, -1.0))))
}

/// The symbol transported to the bounded domain; NaN where it cannot be evaluated.
fn symbol_on_bounded(a: &SymbolSpec, u: &ComplexSymMatrix) -> C64 {
    let nan = C64::new(f64::NAN, f64::NAN);
    let value = match a.tag() {
        DomainTag::BoundedDIII => a.eval_matrix(u),
        DomainTag::SiegelS => match siegel_image(u) {
            Some(z) => a.eval_matrix(&z),
            None => return nan,
        },
    };
    value.unwrap_or(nan)
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `G^{−1/2}` for a Hermitian positive definite `G`, and the condition number of `G`.
fn inverse_sqrt(g: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64)> {
    let eig = hermitize(g).symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), &v| (l.min(v), h.max(v)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(lo > 0.0) || !cond.is_finite() {
        return Err(Error::numerical(format!("Gram matrix is not positive definite (condition number {cond:e})")));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| C64::new(1.0 / v.sqrt(), 0.0)));
    Ok((&eig.eigenvectors * d * eig.eigenvectors.adjoint(), cond))
}

fn unpack(v: &[C64], m: usize, slot: usize) -> DMatrix<C64> {
    DMatrix::from_fn(m, m, |j, k| v[slot * m * m + j * m + k])
}

fn pack_into(out: &mut Vec<C64>, m: &DMatrix<C64>) {
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            out.push(m[(j, k)]);
        }
    }
}

/// Fills `out[slot·m² + j·m + k] = f_slot(u) · p_k(u) · conj(p_j(u))` for each symbol value.
fn outer_products(basis: &[Monomial], u: &ComplexSymMatrix, symbols: &[C64], out: &mut [C64]) {
    let m = basis.len();
    let vals: Vec<C64> = basis.iter().map(|p| p.eval(u)).collect();
    for j in 0..m {
        let cj = vals[j].conj();
        for k in 0..m {
            let base = cj * vals[k];
            out[j * m + k] = base;
            for (s, a) in symbols.iter().enumerate() {
                out[(s + 1) * m * m + j * m + k] = a * base;
            }
        }
    }
}

/// A truncated polynomial space with its Gram matrix `G_jk = ⟨p_k, p_j⟩`.
#[derive(Clone, Debug, Serialize)]
pub struct TruncatedBasis {
    pub tag: DomainTag,
    pub n: usize,
    pub lambda: f64,
    pub elements: Vec<Monomial>,
    pub gram: DMatrix<C64>,
    pub gram_error: DMatrix<f64>,
    pub condition: f64,
    pub warning: Option<String>,
}

impl TruncatedBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Smallest eigenvalue of the Gram matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitize(&self.gram).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_elements(n: usize, elements: &[Monomial]) -> Result<()> {
    if elements.is_empty() {
        return Err(Error::invalid("basis is empty"));
    }
    if let Some(p) = elements.iter().find(|p| p.0.len() != packed_len(n)) {
        return Err(Error::invalid(format!("monomial {p} does not live on {n}x{n} matrices")));
    }
    Ok(())
}

/// Inner products of the basis under the probability measure of the domain.
///
/// For the Siegel domain the elements stand for their images under the Cayley unitary,
/// whose Gram matrix equals that of the bounded monomials.
pub fn gram_matrix(
    tag: DomainTag,
    n: usize,
    lambda: f64,
    elements: Vec<Monomial>,
    integ: &Integrator,
) -> Result<TruncatedBasis> {
    check_elements(n, &elements)?;
    let m = elements.len();
    let ints = integrate_bounded(n, lambda, m * m, |u, out| outer_products(&elements, u, &[], out), integ)?;
    let (g, err) = ints.propagate(|v| {
        let mut out = Vec::with_capacity(m * m);
        pack_into(&mut out, &hermitize(&unpack(v, m, 0)));
        Ok(out)
    })?;
    let gram = DMatrix::from_row_slice(m, m, &g);
    let gram_error = DMatrix::from_row_slice(m, m, &err);
    let condition = match inverse_sqrt(&gram) {
        Ok((_, c)) => c,
        Err(_) => f64::INFINITY,
    };
    let warning = (condition > GRAM_CONDITION_LIMIT)
        .then(|| format!("Gram matrix is ill-conditioned (condition number {condition:e})"));
    Ok(TruncatedBasis { tag, n, lambda, elements, gram, gram_error, condition, warning })
}

/// The matrix of a Toeplitz operator in an orthonormalized basis, with per-entry errors.
#[derive(Clone, Debug, Serialize)]
pub struct ToeplitzMatrix {
    pub entries: DMatrix<C64>,
    pub error: DMatrix<f64>,
}

impl ToeplitzMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Frobenius norm of the off-diagonal part and the matching noise level.
    pub fn off_diagonal_mass(&self) -> (f64, f64) {
        let (mut mass, mut noise) = (0.0, 0.0);
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                if j != k {
                    mass += self.entries[(j, k)].norm_sqr();
                    noise += self.error[(j, k)].powi(2);
                }
            }
        }
        (mass.sqrt(), noise.sqrt())
    }

    /// Largest `|M_jk − conj(M_kj)|` in units of the combined entry error.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                let d = (self.entries[(j, k)] - self.entries[(k, j)].conj()).norm();
                let e = self.error[(j, k)].hypot(self.error[(k, j)]);
                worst = worst.max(if e > 0.0 {
                    d / e
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                });
            }
        }
        worst
    }
}

/// `M = G^{−1/2} A G^{−1/2}` with `A_jk = ∫ a p_k conj(p_j) dv_λ`; since the test vectors are
/// holomorphic the Bergman projection drops out of `⟨T_a p_k, p_j⟩`.
pub fn toeplitz_matrix(a: &SymbolSpec, basis: &TruncatedBasis, integ: &Integrator) -> Result<ToeplitzMatrix> {
    if a.tag() != basis.tag {
        return Err(Error::invalid("symbol and basis live on different domains"));
    }
    let m = basis.len();
    let elements = &basis.elements;
    let ints = integrate_bounded(
        basis.n,
        basis.lambda,
        2 * m * m,
        |u, out| outer_products(elements, u, &[symbol_on_bounded(a, u)], out),
        integ,
    )?;
    let (v, err) = ints.propagate(|v| {
        let (s, _) = inverse_sqrt(&unpack(v, m, 0))?;
        let mut out = Vec::with_capacity(m * m);
        pack_into(&mut out, &(&s * unpack(v, m, 1) * &s));
        Ok(out)
    })?;
    Ok(ToeplitzMatrix { entries: DMatrix::from_row_slice(m, m, &v), error: DMatrix::from_row_slice(m, m, &err) })
}

/// Frobenius norm of `AB − BA` and a first-order noise bound from the entry errors
/// (treated as independent).
pub fn commutator_norm(a: &ToeplitzMatrix, b: &ToeplitzMatrix) -> Result<(f64, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::invalid("commutator of matrices with different dimensions"));
    }
    let c = &a.entries * &b.entries - &b.entries * &a.entries;
    let d = a.dim();
    let mut var = 0.0;
    for j in 0..d {
        for k in 0..d {
            for l in 0..d {
                var += (a.error[(j, l)] * b.entries[(l, k)].norm()).powi(2)
                    + (a.entries[(j, l)].norm() * b.error[(l, k)]).powi(2)
                    + (b.error[(j, l)] * a.entries[(l, k)].norm()).powi(2)
                    + (b.entries[(j, l)].norm() * a.error[(l, k)]).powi(2);
            }
        }
    }
    Ok((c.norm(), var.sqrt()))
}

/// Outcome of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Failed, but with too few samples for the noise bound to be trusted.
    Inconclusive,
}

/// A verification result as serialized in reports.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Sample count below which a failed noise-bounded check is reported as inconclusive.
pub const RELIABLE_SAMPLES: u64 = 100_000;

impl CheckReport {
    /// A check with a deterministic bound: `value <= bound` passes.
    pub fn exact(check: impl Into<String>, params: serde_json::Value, value: f64, bound: f64) -> Self {
        let pass = value <= bound;
        let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        Self { check: check.into(), params, value, bound, pass, verdict, note: None }
    }

    /// A check whose bound is a noise floor estimated from `samples` draws.
    pub fn noisy(
        check: impl Into<String>,
        params: serde_json::Value,
        value: f64,
        bound: f64,
        samples: Option<u64>,
    ) -> Self {
        let mut r = Self::exact(check, params, value, bound);
        if !r.pass && samples.is_some_and(|s| s < RELIABLE_SAMPLES) {
            r.verdict = Verdict::Inconclusive;
            r.note = Some("inconclusive: noise floor".into());
        }
        r
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Commutator of two Toeplitz matrices on the degree-`<= degree` space, with the two error
/// sources reported separately.
#[derive(Clone, Debug, Serialize)]
pub struct CommutatorReport {
    pub value: f64,
    /// Noise level of `value` (jackknife or resolution change).
    pub noise: f64,
    /// Estimate of `‖P A (1−P) B P‖ + ‖P B (1−P) A P‖` from the next polynomial degree.
    pub truncation: f64,
    pub samples: Option<u64>,
}

impl CommutatorReport {
    /// `3 · (noise + truncation)`.
    pub fn bound(&self) -> f64 {
        3.0 * (self.noise + self.truncation)
    }

    pub fn commutes(&self) -> bool {
        self.value <= self.bound()
    }
}

fn truncation_sq(x: &DMatrix<C64>, g_inv: &DMatrix<C64>, gp_inv: &DMatrix<C64>, mp: &DMatrix<C64>, p: usize) -> f64 {
    let cols = x.columns(0, p).into_owned();
    let t = (gp_inv * cols.adjoint() * g_inv * &cols).trace().re - mp.norm_squared();
    t.max(0.0)
}

/// Commutator check for two symbols on the same domain.
///
/// The truncation term bounds how far `[PAP, PBP]` can sit from `P[A, B]P`; it is
/// estimated by projecting `T_a e_j` onto the polynomials of one degree higher.
pub fn commutator_check(
    a: &SymbolSpec,
    b: &SymbolSpec,
    n: usize,
    lambda: f64,
    degree: u32,
    integ: &Integrator,
) -> Result<CommutatorReport> {
    if a.tag() != b.tag() {
        return Err(Error::invalid("symbols live on different domains"));
    }
    let small = monomial_basis(n, degree).len();
    let big = monomial_basis(n, degree + 1);
    let m = big.len();
    let ints = integrate_bounded(
        n,
        lambda,
        3 * m * m,
        |u, out| outer_products(&big, u, &[symbol_on_bounded(a, u), symbol_on_bounded(b, u)], out),
        integ,
    )?;
    let p = small;
    let (v, err) = ints.propagate(|v| {
        let g = hermitize(&unpack(v, m, 0));
        let (xa, xb) = (unpack(v, m, 1), unpack(v, m, 2));
        let gp = g.view((0, 0), (p, p)).into_owned();
        let (s, _) = inverse_sqrt(&gp)?;
        let gp_inv = &s * &s;
        let (sq, _) = inverse_sqrt(&g)?;
        let g_inv = &sq * &sq;
        let ma = &s * xa.view((0, 0), (p, p)) * &s;
        let mb = &s * xb.view((0, 0), (p, p)) * &s;
        let c = &ma * &mb - &mb * &ma;
        let mut out = Vec::with_capacity(p * p + 5);
        pack_into(&mut out, &c);
        out.push(C64::new(c.norm(), 0.0));
        for (x, mx) in [(&xa, &ma), (&xa.adjoint(), &ma.adjoint()), (&xb, &mb), (&xb.adjoint(), &mb.adjoint())] {
            out.push(C64::new(truncation_sq(x, &g_inv, &gp_inv, mx, p).sqrt(), 0.0));
        }
        Ok(out)
    })?;
    let noise = err[..p * p].iter().map(|e| e * e).sum::<f64>().sqrt();
    let t = &v[p * p + 1..];
    let truncation = t[1].re * t[2].re + t[3].re * t[0].re;
    Ok(CommutatorReport { value: v[p * p].re, noise, truncation, samples: ints.samples() })
}

/// `|∫ p K_λ(Z, ·) dv_λ − p(Z)|` with its error level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReproduceCheck {
    pub residual: f64,
    /// Three standard errors (Monte Carlo) or the resolution change (quadrature).
    pub bound: f64,
}

/// Reproducing-property residual of the weighted Bergman kernel at `Z`.
///
/// On the Siegel domain the test function is the Cayley image `J^{λ/(n+1)} · p∘φ` of the
/// bounded polynomial, integrated with the transported measure.
pub fn reproduce_check(
    tag: DomainTag,
    lambda: f64,
    p: &Monomial,
    z: &DomainPoint,
    integ: &Integrator,
) -> Result<ReproduceCheck> {
    z.expect_tag(tag)?;
    let n = z.n();
    check_elements(n, std::slice::from_ref(p))?;
    let nan = C64::new(f64::NAN, f64::NAN);
    let exponent = -2.0 * lambda / (n as f64 + 1.0);
    let integrand = |u: &ComplexSymMatrix| -> Result<C64> {
        match tag {
            DomainTag::BoundedDIII => {
                let w = DomainPoint::new(tag, u.clone())?;
                Ok(p.eval(u) * bergman_kernel(tag, lambda, z, &w)?)
            }
            DomainTag::SiegelS => {
                let w =
                    DomainPoint::new(tag, siegel_image(u).ok_or_else(|| Error::numerical("singular Cayley image"))?)?;
                let f = cayley_pullback(lambda, |_| p.eval(u), &w)?;
                let jac = cayley_jacobian(&w)?.norm().powf(exponent);
                Ok(f * jac * bergman_kernel(tag, lambda, z, &w)?)
            }
        }
    };
    let ints = integrate_bounded(n, lambda, 1, |u, out| out[0] = integrand(u).unwrap_or(nan), integ)?;
    let target = match tag {
        DomainTag::BoundedDIII => p.eval(z.z()),
        DomainTag::SiegelS => cayley_pullback(lambda, |w| p.eval(w.z()), z)?,
    };
    let (v, err) = ints.propagate(|v| Ok(vec![v[0]]))?;
    let k = if ints.samples().is_some() { 3.0 } else { 1.0 };
    Ok(ReproduceCheck { residual: (v[0] - target).norm(), bound: k * err[0] })
}

/// Tensor rule on the upper half-plane for `n = 1` pairings.
///
/// `x` runs over `[−x_max, x_max]` in Gauss–Legendre panels; `y = y_scale · t/(1 − t)` with
/// `t` graded toward 0. Contributions from `|x| > x_max` are dropped; the pairing error
/// estimate accounts for them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneQuad {
    pub x_max: f64,
    pub x_panels: usize,
    pub panel_order: usize,
    pub y_order: usize,
    pub y_scale: f64,
}

impl Default for HalfPlaneQuad {
    fn default() -> Self {
        Self { x_max: 60.0, x_panels: 60, panel_order: 16, y_order: 48, y_scale: 1.0 }
    }
}

type Nodes = Vec<(f64, f64)>;

impl HalfPlaneQuad {
    fn coarse(&self) -> Self {
        Self { panel_order: (self.panel_order * 2 / 3).max(2), y_order: (self.y_order * 2 / 3).max(2), ..*self }
    }

    /// `(x, weight)` and `(y, weight)` node lists.
    fn nodes(&self) -> Result<(Nodes, Nodes)> {
        if !(self.x_max > 0.0 && self.y_scale > 0.0) || self.x_panels == 0 {
            return Err(Error::invalid("half-plane rule needs positive extents and panel count"));
        }
        let base = Rule::legendre(self.panel_order, 0.0, 1.0)?;
        let h = 2.0 * self.x_max / self.x_panels as f64;
        let mut xs = Vec::with_capacity(self.x_panels * base.len());
        for p in 0..self.x_panels {
            let a = -self.x_max + p as f64 * h;
            for (&s, &w) in base.nodes.iter().zip(&base.weights) {
                xs.push((a + h * s, h * w));
            }
        }
        let graded = Rule::graded_legendre(self.y_order, 0.0, 1.0, 4)?;
        let ys = graded
            .nodes
            .iter()
            .zip(&graded.weights)
            .map(|(&s, &w)| {
                let t = 1.0 - s;
                (self.y_scale * t / (1.0 - t), w * self.y_scale / (1.0 - t).powi(2))
            })
            .filter(|(y, w)| *y > 0.0 && y.is_finite() && w.is_finite())
            .collect();
        Ok((xs, ys))
    }
}

/// `P_jk = ∫ a(Im z) F_k(z) conj(F_j(z)) dv̂_λ(z)` on the upper half-plane.
///
/// `values(z, out)` writes `F_1(z), …, F_count(z)`. The entry errors add to the resolution
/// change a truncation term `(x_max/h)·|contribution of the two outermost x panels|`
/// (`h` the panel width), which bounds the dropped tail of any integrand decaying at least
/// like `|x|^{−2}`.
pub fn half_plane_pairing<F, A>(
    count: usize,
    values: F,
    symbol: A,
    lambda: f64,
    quad: &HalfPlaneQuad,
) -> Result<ToeplitzMatrix>
where
    F: Fn(C64, &mut [C64]) -> Result<()> + Sync,
    A: Fn(f64) -> C64 + Sync,
{
    check_weight(1, lambda)?;
    let edge = quad.x_max - 2.0 * quad.x_max / quad.x_panels as f64;
    let run = |q: &HalfPlaneQuad, only_edges: bool| -> Result<DMatrix<C64>> {
        let (xs, ys) = q.nodes()?;
        let parts: Vec<Result<DMatrix<C64>>> = xs
            .par_iter()
            .filter(|&&(x, _)| !only_edges || x.abs() > edge)
            .map(|&(x, wx)| {
                let mut acc = DMatrix::zeros(count, count);
                let mut buf = vec![C64::new(0.0, 0.0); count];
                for &(y, wy) in &ys {
                    let z = C64::new(x, y);
                    values(z, &mut buf)?;
                    let dens = weight_density(DomainTag::SiegelS, lambda, &ComplexSymMatrix::diagonal(&[z]))?;
                    let w = symbol(y) * (wx * wy * dens);
                    for j in 0..count {
                        for k in 0..count {
                            acc[(j, k)] += w * buf[k] * buf[j].conj();
                        }
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut total = DMatrix::zeros(count, count);
        for p in parts {
            total += p?;
        }
        Ok(total)
    };
    let fine = run(quad, false)?;
    let coarse = run(&quad.coarse(), false)?;
    let edges = run(quad, true)?;
    let tail_factor = quad.x_panels as f64 / 2.0;
    let scale = fine.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let error = DMatrix::from_fn(count, count, |j, k| {
        (fine[(j, k)] - coarse[(j, k)]).norm() + tail_factor * edges[(j, k)].norm() + ROUNDING * scale
    });
    Ok(ToeplitzMatrix { entries: fine, error })
}

/// `((ξ − lo)(hi − ξ))^4 / ((hi − lo)/2)^8` on `[lo, hi]`, zero elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyBump {
    pub lo: f64,
    pub hi: f64,
}

impl PolyBump {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || !hi.is_finite() {
            return Err(Error::invalid("bump support must satisfy 0 < lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= self.lo || xi >= self.hi {
            return 0.0;
        }
        let half = 0.5 * (self.hi - self.lo);
        ((xi - self.lo) * (self.hi - xi) / (half * half)).powi(4)
    }

    /// `Γ(λ)^{−1/2} ∫ e(ξ) ξ^{λ/2 − 1/2} e^{iξz} dξ`, by Gauss–Legendre panels sized to the
    /// oscillation of `e^{iξ Re z}`.
    pub fn transform(&self, lambda: f64, z: C64) -> Result<C64> {
        let panels = 1 + (z.re.abs() * (self.hi - self.lo) / std::f64::consts::PI).ceil() as usize;
        let h = (self.hi - self.lo) / panels as f64;
        let base = Rule::legendre(16, 0.0, 1.0)?;
        let s = lambda / 2.0 - 0.5;
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..panels {
            let a = self.lo + p as f64 * h;
            for (&t, &w) in base.nodes.iter().zip(&base.weights) {
                let xi = a + h * t;
                acc += (C64::new(0.0, xi) * z).exp() * (self.eval(xi) * xi.powf(s) * w * h);
            }
        }
        Ok(acc * (-0.5 * ln_multigamma(1, lambda)?).exp())
    }
}

/// `⟨T_a R*e_j, R*e_k⟩` on the upper half-plane for a parabolic profile `a(y)` and bumps `e_j`.
pub fn parabolic_frame_matrix<A>(
    bumps: &[PolyBump],
    lambda: f64,
    profile: A,
    quad: &HalfPlaneQuad,
) -> Result<ToeplitzMatrix>
where
    A: Fn(f64) -> C64 + Sync,
{
    half_plane_pairing(
        bumps.len(),
        |z, out| {
            for (o, b) in out.iter_mut().zip(bumps) {
                *o = b.transform(lambda, z)?;
            }
            Ok(())
        },
        profile,
        lambda,
        quad,
    )
}
