//! Eigenvalues of Toeplitz operators with invariant symbols.
//!
//! For `U(n)`-invariant symbols on the bounded domain the Toeplitz operator acts on
//! each isotypic block `P^α` by a scalar `c_{a,λ}(α)`, computed here from the reduced
//! integral over ordered eigenvalues `0 < x_1 < … < x_n < 1` ([`c_coeff`]) or from the
//! full matrix integral over `0 < X < I` ([`c_coeff_full`]). For translation-invariant
//! symbols on the Siegel domain the operator is conjugate, through the Fourier–Laplace
//! transform ([`fourier_laplace_adjoint`]), to multiplication by [`gamma_parabolic`].

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{check_weight, ln_multigamma, DomainPoint, DomainTag, MAX_PROPOSALS};
use crate::error::{Error, Result};
use crate::haar::haar_orthogonal;
use crate::linalg::{
    principal_minor_det, principal_minor_det_real, ComplexSymMatrix, PosDefMatrix, RealSymMatrix, C64,
};
use crate::montecarlo::{integrate_mc, ratio_estimate, run_streams, MCEstimate, McConfig, Moments, Sampler};
use crate::quadrature::{for_each_tensor_node, ConeRule, Radial, Rule};
use crate::symbols::{invariance_residual, observed_sup, Group, Profile, SymbolSpec};

/// A non-increasing tuple `α_1 ≥ … ≥ α_n ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Signature(Vec<u32>);

impl Signature {
    pub fn new(alpha: Vec<u32>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("signature must have at least one entry"));
        }
        if alpha.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid(format!("signature {alpha:?} is not non-increasing")));
        }
        Ok(Self(alpha))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α_j − α_{j+1}` (0-based `j`), with `α_{n+1} = 0`.
    pub fn gap(&self, j: usize) -> u32 {
        self.0[j] - self.0.get(j + 1).copied().unwrap_or(0)
    }

    /// All signatures of length `n` with `|α| <= max_degree`, by degree then in descending order.
    pub fn up_to_degree(n: usize, max_degree: u32) -> Vec<Signature> {
        fn rec(n: usize, left: u32, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for v in (0..=cap.min(left)).rev() {
                cur.push(v);
                rec(n, left - v, v, cur, out);
                cur.pop();
            }
        }
        let mut raw = Vec::new();
        rec(n, max_degree, max_degree, &mut Vec::new(), &mut raw);
        let mut sigs: Vec<Signature> = raw.into_iter().map(Signature).collect();
        sigs.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| b.0.cmp(&a.0)));
        sigs
    }
}

impl TryFrom<Vec<u32>> for Signature {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Signature::new(v)
    }
}

impl From<Signature> for Vec<u32> {
    fn from(s: Signature) -> Self {
        s.0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for Signature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: std::result::Result<Vec<u32>, _> = s.split([';', ',']).map(|p| p.trim().parse::<u32>()).collect();
        Signature::new(parts.map_err(|_| Error::invalid(format!("malformed signature '{s}'")))?)
    }
}

/// `Δ_α(Z) = ∏_j Δ_j(Z)^{α_j − α_{j+1}}`.
pub fn conical_poly(alpha: &Signature, z: &ComplexSymMatrix) -> Result<C64> {
    if alpha.n() != z.n() {
        return Err(Error::invalid(format!("signature of length {} for a {}x{} matrix", alpha.n(), z.n(), z.n())));
    }
    let mut acc = C64::new(1.0, 0.0);
    for j in 0..alpha.n() {
        let g = alpha.gap(j);
        if g > 0 {
            acc *= principal_minor_det(j + 1, z)?.powu(g);
        }
    }
    Ok(acc)
}

fn conical_poly_real(alpha: &Signature, x: &RealSymMatrix, upto: usize) -> Result<f64> {
    let mut acc = 1.0;
    for j in 0..upto {
        let g = alpha.gap(j);
        if g > 0 {
            acc *= principal_minor_det_real(j + 1, x)?.powi(g as i32);
        }
    }
    Ok(acc)
}

fn vandermonde_abs(x: &[f64]) -> f64 {
    let mut v = 1.0;
    for j in 0..x.len() {
        for k in (j + 1)..x.len() {
            v *= (x[j] - x[k]).abs();
        }
    }
    v
}

fn h_factor_unchecked(alpha_n: u32, lambda: f64, x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let p: f64 = x.iter().product();
    let q: f64 = x.iter().map(|v| 1.0 - v).product();
    p.powi(alpha_n as i32) * q.powf(lambda - n - 1.0) * vandermonde_abs(x)
}

/// `H(x) = (∏ x_j)^{α_n} (∏ (1 − x_j))^{λ−n−1} |∏_{j<k} (x_j − x_k)|`.
///
/// The Vandermonde factor is taken in absolute value so `H >= 0` on either ordering.
pub fn h_factor(alpha_n: u32, lambda: f64, x: &[f64]) -> Result<f64> {
    let n = x.len();
    check_weight(n, lambda)?;
    if x.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(Error::domain("H is defined on the open cube (0, 1)^n"));
    }
    for j in 0..n {
        for k in (j + 1)..n {
            if x[j] == x[k] {
                return Err(Error::invalid(format!("coordinates {j} and {k} coincide")));
            }
        }
    }
    Ok(h_factor_unchecked(alpha_n, lambda, x))
}

/// Haar-distributed orthogonal matrices as Monte-Carlo points.
#[derive(Clone, Copy, Debug)]
pub struct HaarSampler {
    pub n: usize,
}

impl Sampler for HaarSampler {
    type Point = nalgebra::DMatrix<f64>;
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(nalgebra::DMatrix<f64>, f64)> {
        Ok((haar_orthogonal(self.n, rng).into_inner(), 1.0))
    }
}

fn haar_integrand(alpha: &Signature, a: &nalgebra::DMatrix<f64>, x: &[f64]) -> Result<f64> {
    let n = x.len();
    let d = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(x));
    let m = RealSymMatrix::from_dense_upper(&(a * d * a.transpose()));
    conical_poly_real(alpha, &m, n - 1)
}

fn is_flat(alpha: &Signature) -> bool {
    alpha.as_slice().windows(2).all(|w| w[0] == w[1])
}

/// `(1/2π) ∫ (x_1 cos²θ + x_2 sin²θ)^k dθ`, exact via an equal-weight periodic rule.
fn h_alpha_two(k: u32, x: &[f64]) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let rule = Rule::periodic_average(2 * k as usize + 2).expect("positive point count");
    rule.integrate(|t| {
        let (s, c) = t.sin_cos();
        (x[0] * c * c + x[1] * s * s).powi(k as i32)
    })
}

/// `h_α(x) = ∫_{O(n)} ∏_{j<n} Δ_j(A D(x) Aᵀ)^{α_j − α_{j+1}} dA` for normalized Haar measure.
///
/// Exact for `n <= 2` (`std_error = 0`); Monte Carlo over Haar draws otherwise.
pub fn h_alpha(alpha: &Signature, x: &[f64], mc: &McConfig) -> Result<MCEstimate> {
    let n = alpha.n();
    if x.len() != n {
        return Err(Error::invalid("signature and point differ in length"));
    }
    if is_flat(alpha) {
        return Ok(MCEstimate::exact(C64::new(1.0, 0.0)));
    }
    if n == 2 {
        return Ok(MCEstimate::exact(C64::new(h_alpha_two(alpha.gap(0), x), 0.0)));
    }
    let alpha = alpha.clone();
    let x = x.to_vec();
    integrate_mc(move |a| C64::new(haar_integrand(&alpha, a, &x).unwrap_or(f64::NAN), 0.0), &HaarSampler { n }, mc)
}

/// Quadrature and Monte-Carlo settings for the eigenvalue integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffConfig {
    pub quad_order: usize,
    pub mc: McConfig,
}

impl CoeffConfig {
    pub fn new(quad_order: usize, mc: McConfig) -> Self {
        Self { quad_order, mc }
    }
}

/// Grading exponent at `t = 1`; turns half-integer powers of `1 − t` into polynomials.
const GRADING: u32 = 4;

/// Nodes `x` of the ordered region `0 < x_1 < … < x_n < 1` with weights, from the map
/// `x_k = ∏_{i>=k} t_i` (Jacobian `∏ t_k^{k−1}`) and graded Gauss–Legendre in each `t_k`.
fn ordered_region_nodes(n: usize, order: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let rule = Rule::graded_legendre(order, 0.0, 1.0, GRADING)?;
    let rules = vec![rule; n];
    let mut out = Vec::with_capacity(order.pow(n as u32));
    for_each_tensor_node(&rules, |t, w| {
        let mut x = vec![0.0; n];
        let mut acc = 1.0;
        let mut jac = 1.0;
        for k in (0..n).rev() {
            acc *= t[k];
            x[k] = acc;
            jac *= t[k].powi(k as i32);
        }
        out.push((x, w * jac));
    });
    Ok(out)
}

fn symbol_on_diagonal(a: &SymbolSpec, x: &[f64]) -> Result<C64> {
    let d: Vec<C64> = x.iter().map(|v| C64::new(v.sqrt(), 0.0)).collect();
    a.eval_matrix(&ComplexSymMatrix::diagonal(&d))
}

fn check_coeff_inputs(a: &SymbolSpec, lambda: f64, alpha: &Signature) -> Result<usize> {
    let n = alpha.n();
    check_weight(n, lambda)?;
    if a.tag() != DomainTag::BoundedDIII {
        return Err(Error::invalid("eigenvalue coefficients need a symbol on the bounded domain"));
    }
    if !a.is_elliptic() {
        // Raw symbols carry no invariance guarantee; the formulas only see diagonal points.
        let mut rng = ChaCha8Rng::seed_from_u64(INVARIANCE_PROBE_SEED);
        let r = invariance_residual(a, Group::Un, n, INVARIANCE_PROBES, &mut rng)?;
        let scale = observed_sup(a, n, INVARIANCE_PROBES, &mut rng)?.max(1.0);
        if !(r <= 1e-8 * scale) {
            return Err(Error::invalid(format!(
                "eigenvalue coefficients need a U(n)-invariant symbol (probe residual {r:.3e})"
            )));
        }
    }
    Ok(n)
}

const INVARIANCE_PROBES: usize = 16;
const INVARIANCE_PROBE_SEED: u64 = 0x5eed_0a11;

/// `c_{a,λ}(α)` from the reduced integral over ordered eigenvalues.
///
/// Deterministic for `n <= 2`; for `n >= 3` the `h_α` factor is averaged over shared Haar
/// draws and the ratio error is propagated to first order.
pub fn c_coeff(a: &SymbolSpec, lambda: f64, alpha: &Signature, cfg: &CoeffConfig) -> Result<MCEstimate> {
    let n = check_coeff_inputs(a, lambda, alpha)?;
    if cfg.quad_order < 2 {
        return Err(Error::invalid("quadrature order must be at least 2"));
    }
    let an = alpha.as_slice()[n - 1];
    let nodes = ordered_region_nodes(n, cfg.quad_order)?;
    let mut prepared = Vec::with_capacity(nodes.len());
    for (x, w) in nodes {
        if x.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            continue;
        }
        let wh = w * h_factor_unchecked(an, lambda, &x);
        if wh == 0.0 {
            continue;
        }
        prepared.push((symbol_on_diagonal(a, &x)?, wh, x));
    }

    if n <= 2 || is_flat(alpha) {
        let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
        for (av, wh, x) in &prepared {
            let term = if n == 2 { wh * h_alpha_two(alpha.gap(0), x) } else { *wh };
            num += av * term;
            den += term;
        }
        if !(den > 0.0) || !den.is_finite() {
            return Err(Error::numerical("denominator integral is not positive"));
        }
        return Ok(MCEstimate::exact(num / den));
    }

    let m = run_streams(
        &cfg.mc,
        &HaarSampler { n },
        || Moments::new(4),
        |acc, i, o, _| {
            let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
            for (av, wh, x) in &prepared {
                let term = wh * haar_integrand(alpha, o, x)?;
                num += av * term;
                den += term;
            }
            if !num.is_finite() || !den.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            acc.push(&[num.re, num.im, den, 0.0]);
            Ok(())
        },
        Moments::merge,
    )?;
    ratio_estimate(&m, 0, 2)
}

/// Uniform points of `{X : 0 < X < I}` in packed coordinates, by rejection from
/// `[0,1]` (diagonal) × `[−1,1]` (off-diagonal).
#[derive(Clone, Copy, Debug)]
pub struct UnitIntervalSampler {
    pub n: usize,
}

/// Minimum acceptance rate of [`UnitIntervalSampler`].
pub const MIN_ACCEPTANCE: f64 = 1e-4;

impl Sampler for UnitIntervalSampler {
    type Point = RealSymMatrix;
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(RealSymMatrix, f64)> {
        use rand::Rng;
        let limit = (1.0 / MIN_ACCEPTANCE).ceil() as u64 * 10;
        for _ in 0..limit.min(MAX_PROPOSALS) {
            let x = RealSymMatrix::from_fn(self.n, |j, k| {
                let u: f64 = rng.random();
                if j == k {
                    u
                } else {
                    2.0 * u - 1.0
                }
            });
            let ev = x.eigenvalues();
            if ev[0] > 0.0 && ev[self.n - 1] < 1.0 {
                return Ok((x, 1.0));
            }
        }
        let tried = limit.min(MAX_PROPOSALS) as f64;
        Err(Error::Sampler { rate: 1.0 / tried, min: MIN_ACCEPTANCE })
    }
}

/// `c_{a,λ}(α)` from the matrix integral
/// `∫ a(√X) Δ_α(X) det(I − X)^{λ−n−1} dX / ∫ Δ_α(X) det(I − X)^{λ−n−1} dX` over `0 < X < I`.
pub fn c_coeff_full(a: &SymbolSpec, lambda: f64, alpha: &Signature, mc: &McConfig) -> Result<MCEstimate> {
    let n = check_coeff_inputs(a, lambda, alpha)?;
    let exponent = lambda - n as f64 - 1.0;
    let m = run_streams(
        mc,
        &UnitIntervalSampler { n },
        || Moments::new(4),
        |acc, i, x, _| {
            let id = RealSymMatrix::identity(n);
            let weight = conical_poly_real(alpha, x, n)? * (&id - x).determinant().powf(exponent);
            let root = x.sqrt().to_complex();
            let av = a.eval_matrix(&root)?;
            let num = av * weight;
            if !num.is_finite() || !weight.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            acc.push(&[num.re, num.im, weight, 0.0]);
            Ok(())
        },
        Moments::merge,
    )?;
    ratio_estimate(&m, 0, 2)
}

/// `c_coeff` for the elliptic moment symbol `f(tr((I − Z Z̄)⁻¹))`; on diagonal points the
/// argument is `Σ_j 1/(1 − x_j)`.
pub fn c_elliptic(f: &Profile, lambda: f64, alpha: &Signature, cfg: &CoeffConfig) -> Result<MCEstimate> {
    c_coeff(&SymbolSpec::elliptic(f.clone()), lambda, alpha, cfg)
}

/// How a table of coefficients is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffMethod {
    /// [`c_coeff`].
    Reduced,
    /// [`c_coeff_full`].
    Full,
    /// Reduced quadrature for `n = 1`, full Monte Carlo for `n >= 2`.
    Auto,
}

impl FromStr for CoeffMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reduced" => Ok(CoeffMethod::Reduced),
            "full" => Ok(CoeffMethod::Full),
            "auto" => Ok(CoeffMethod::Auto),
            other => Err(Error::invalid(format!("unknown method '{other}' (reduced, full, auto)"))),
        }
    }
}

/// One row of a [`SpectralTable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub alpha: Signature,
    pub value_re: f64,
    pub value_im: f64,
    pub std_error: f64,
}

/// The family `α ↦ c_{a,λ}(α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralTable {
    pub n: usize,
    pub lambda: f64,
    pub entries: Vec<SpectralEntry>,
}

impl SpectralTable {
    /// Evaluates `c_{a,λ}(α)` for each signature.
    pub fn compute(
        a: &SymbolSpec,
        lambda: f64,
        alphas: &[Signature],
        method: CoeffMethod,
        cfg: &CoeffConfig,
    ) -> Result<Self> {
        let n = alphas.first().map(Signature::n).ok_or_else(|| Error::invalid("no signatures requested"))?;
        if alphas.iter().any(|s| s.n() != n) {
            return Err(Error::invalid("signatures differ in length"));
        }
        check_weight(n, lambda)?;
        let method = match method {
            CoeffMethod::Auto if n == 1 => CoeffMethod::Reduced,
            CoeffMethod::Auto => CoeffMethod::Full,
            m => m,
        };
        let mut entries = Vec::with_capacity(alphas.len());
        for (i, alpha) in alphas.iter().enumerate() {
            let est = match method {
                CoeffMethod::Reduced => {
                    c_coeff(a, lambda, alpha, &CoeffConfig { mc: cfg.mc.reseeded(i as u64), ..*cfg })?
                }
                _ => c_coeff_full(a, lambda, alpha, &cfg.mc.reseeded(i as u64))?,
            };
            entries.push(SpectralEntry {
                alpha: alpha.clone(),
                value_re: est.value.re,
                value_im: est.value.im,
                std_error: est.std_error,
            });
        }
        Ok(Self { n, lambda, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, alpha: &Signature) -> Option<&SpectralEntry> {
        self.entries.iter().find(|e| &e.alpha == alpha)
    }

    pub const CSV_HEADER: &'static str = "alpha,value_re,value_im,std_error";

    /// CSV rows with the header line; signatures are joined with ';'.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.entries {
            s.push_str(&format!("{},{:?},{:?},{:?}\n", e.alpha, e.value_re, e.value_im, e.std_error));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::numerical(format!("serialization failed: {e}")))
    }
}

/// A deterministic quadrature value with an accuracy diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadEstimate {
    pub value: C64,
    /// `|value − value at a coarser resolution|`.
    pub error_estimate: f64,
    /// Set when `error_estimate` exceeds the requested tolerance.
    pub warning: Option<String>,
}

/// Settings for the cone integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeQuadConfig {
    /// Gauss–Legendre nodes per panel (composite radial rule) or Laguerre order.
    pub order: usize,
    /// Gauss–Hermite order for the off-diagonal Cholesky entries.
    pub hermite_order: usize,
    /// Relative tolerance above which a warning is attached.
    pub tolerance: f64,
    /// Node budget for the tensor rule.
    pub budget: u64,
}

impl Default for ConeQuadConfig {
    fn default() -> Self {
        Self { order: 20, hermite_order: 16, tolerance: 1e-8, budget: 1 << 24 }
    }
}

impl ConeQuadConfig {
    fn coarse(&self) -> Self {
        Self { order: (self.order * 2 / 3).max(2), hermite_order: (self.hermite_order * 2 / 3).max(2), ..*self }
    }
}

/// Composite panels on the half-line; coarser grading for `n >= 2` keeps the tensor
/// product affordable.
fn radial_rule(n: usize, order: usize, freq: f64) -> Radial {
    if n == 1 {
        Radial::Composite { panel_order: order, freq }
    } else {
        Radial::Graded { panel_order: order / 2, freq, levels: 12, max_width: 2.0 }
    }
}

fn with_warning(fine: C64, coarse: C64, tol: f64, what: &str) -> QuadEstimate {
    let err = (fine - coarse).norm();
    let warning = (err > tol * fine.norm().max(1e-300))
        .then(|| format!("{what}: resolution change moved the value by {err:.3e}; the integral may be under-resolved"));
    QuadEstimate { value: fine, error_estimate: err, warning }
}

/// `R*f(Z) = Γ_Ω(λ)^{−1/2} ∫_Ω f(ξ) det(ξ)^{λ/2 − (n+1)/4} e^{i tr(ξ Z)} dξ`.
///
/// `decay` declares that `f(ξ) e^{decay·tr ξ}` grows at most polynomially. The integral is
/// computed after the substitution `ξ = P^{−1/2} W P^{−1/2}`, `P = Im Z + decay·I`, which
/// moves all exponential decay into the weight `e^{−tr W}`.
pub fn fourier_laplace_adjoint<F>(
    f: F,
    lambda: f64,
    z: &DomainPoint,
    decay: f64,
    cfg: &ConeQuadConfig,
) -> Result<QuadEstimate>
where
    F: Fn(&RealSymMatrix) -> C64,
{
    z.expect_tag(DomainTag::SiegelS)?;
    let n = z.n();
    check_weight(n, lambda)?;
    if !(decay >= 0.0) || !decay.is_finite() {
        return Err(Error::invalid("declared decay rate must be finite and non-negative"));
    }
    let nf = n as f64;
    let s = lambda / 2.0 - (nf + 1.0) / 4.0;
    let p = PosDefMatrix::new(&z.z().im() + &RealSymMatrix::scaled_identity(n, decay))?;
    let m = p.inv_sqrt();
    let md = m.to_dense();
    let x = z.z().re();
    let freq = x.congruence(&md).eigenvalues().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let prefactor = (-0.5 * ln_multigamma(n, lambda)? - (s + (nf + 1.0) / 2.0) * p.determinant().ln()).exp();

    if n == 1 {
        // Scalar form of the loop below: ξ = t/p, phase ξ·x.
        let (pv, xv) = (p.as_sym().get(0, 0), x.get(0, 0));
        let run = |c: &ConeQuadConfig| -> Result<C64> {
            let rule = Rule::composite_laguerre(c.order, s, freq)?;
            let mut acc = C64::new(0.0, 0.0);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let xi = t / pv;
                acc += f(&RealSymMatrix::diagonal(&[xi])) * C64::from_polar((decay * xi).exp(), xi * xv) * w;
            }
            Ok(acc * prefactor)
        };
        let fine = run(cfg)?;
        let coarse = run(&cfg.coarse())?;
        return Ok(with_warning(fine, coarse, cfg.tolerance, "Fourier-Laplace integral"));
    }
    let run = |c: &ConeQuadConfig| -> Result<C64> {
        let rule = ConeRule::new(
            n,
            s,
            radial_rule(n, c.order, freq),
            c.hermite_order + (2.0 * freq).ceil() as usize,
            c.budget,
        )?;
        let mut acc = C64::new(0.0, 0.0);
        for (w_mat, w) in rule.points.iter().zip(&rule.weights) {
            let xi = w_mat.congruence(&md);
            let tr = xi.trace();
            let phase = (xi.to_dense() * x.to_dense()).trace();
            acc += f(&xi) * C64::from_polar((decay * tr).exp(), phase) * *w;
        }
        Ok(acc * prefactor)
    };
    let fine = run(cfg)?;
    let coarse = run(&cfg.coarse())?;
    Ok(with_warning(fine, coarse, cfg.tolerance, "Fourier-Laplace integral"))
}

/// `γ_{f,λ}(X) = 2^{n(n+1)/2} det(X)^{λ−(n+1)/2} / Γ_Ω(λ−(n+1)/2) · ∫_Ω f(Y) e^{−2 tr(XY)} det(2Y)^{λ−n−1} dY`.
///
/// Computed as the average `Γ_Ω(λ−(n+1)/2)^{−1} ∫_Ω f(½ X^{−1/2} W X^{−1/2}) e^{−tr W} det(W)^{λ−n−1} dW`,
/// which is exact for constant `f`.
pub fn gamma_parabolic<F>(f: F, lambda: f64, x: &PosDefMatrix, cfg: &ConeQuadConfig) -> Result<QuadEstimate>
where
    F: Fn(&RealSymMatrix) -> C64,
{
    let n = x.n();
    check_weight(n, lambda)?;
    let nf = n as f64;
    let p = lambda - nf - 1.0;
    let norm = (-ln_multigamma(n, lambda - (nf + 1.0) / 2.0)?).exp();
    let half_root = x.inv_sqrt().scale(std::f64::consts::FRAC_1_SQRT_2).to_dense();
    let run = |c: &ConeQuadConfig| -> Result<C64> {
        let radial = if n == 1 { radial_rule(n, c.order, 0.0) } else { Radial::Laguerre { order: c.order } };
        let rule = ConeRule::new(n, p, radial, c.hermite_order, c.budget)?;
        let mut acc = C64::new(0.0, 0.0);
        for (w_mat, w) in rule.points.iter().zip(&rule.weights) {
            acc += f(&w_mat.congruence(&half_root)) * *w;
        }
        Ok(acc * norm)
    };
    let fine = run(cfg)?;
    let coarse = run(&cfg.coarse())?;
    Ok(with_warning(fine, coarse, cfg.tolerance, "parabolic spectral integral"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{RawBuiltin, ScalarProfile};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sig(v: &[u32]) -> Signature {
        Signature::new(v.to_vec()).unwrap()
    }

    fn cfg() -> CoeffConfig {
        CoeffConfig::new(32, McConfig::new(2000, 1))
    }

    #[test]
    fn signatures() {
        assert!(Signature::new(vec![1, 2]).is_err());
        assert_eq!("2;1".parse::<Signature>().unwrap(), sig(&[2, 1]));
        assert_eq!(sig(&[3, 1, 0]).to_string(), "3;1;0");
        let all = Signature::up_to_degree(2, 2);
        let names: Vec<String> = all.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["0;0", "1;0", "2;0", "1;1"]);
        assert_eq!(Signature::up_to_degree(1, 5).len(), 6);
    }

    #[test]
    fn conical_poly_examples() {
        let z = ComplexSymMatrix::from_fn(2, |j, k| if j == k { c(1.0, 0.0) } else { c(2.0, 0.0) });
        assert_eq!(conical_poly(&sig(&[0, 0]), &z).unwrap(), c(1.0, 0.0));
        assert_eq!(conical_poly(&sig(&[1, 1]), &z).unwrap(), c(-3.0, 0.0));
        assert_eq!(conical_poly(&sig(&[2, 1]), &z).unwrap(), c(-3.0, 0.0));
        assert!(conical_poly(&sig(&[1]), &z).is_err());
    }

    #[test]
    fn h_factor_examples() {
        assert!((h_factor(3, 2.5, &[0.4]).unwrap() - 0.4f64.powi(3) * 0.6f64.powf(0.5)).abs() < 1e-15);
        assert!((h_factor(0, 3.0, &[0.2, 0.7]).unwrap() - 0.5).abs() < 1e-15);
        assert!(h_factor(0, 3.0, &[0.2, 0.2]).is_err());
        assert!(h_factor(0, 3.0, &[0.7, 0.2]).unwrap() > 0.0);
    }

    #[test]
    fn h_alpha_examples() {
        let mc = McConfig::new(1000, 3);
        let x = [0.3, 0.8];
        assert_eq!(h_alpha(&sig(&[2, 2]), &x, &mc).unwrap().value, c(1.0, 0.0));
        assert_eq!(h_alpha(&sig(&[1, 1, 1]), &[0.1, 0.2, 0.3], &mc).unwrap().std_error, 0.0);
        let h10 = h_alpha(&sig(&[1, 0]), &x, &mc).unwrap();
        assert!((h10.value.re - 0.55).abs() < 1e-15 && h10.std_error == 0.0);
        let h20 = h_alpha(&sig(&[2, 0]), &x, &mc).unwrap();
        let want = (3.0 * 0.09 + 2.0 * 0.24 + 3.0 * 0.64) / 8.0;
        assert!((h20.value.re - want).abs() < 1e-15);
    }

    #[test]
    fn h_alpha_monte_carlo_matches_symmetry_value() {
        // For α = (1,0,0): Δ_1(A D Aᵀ) = Σ A_1j² x_j, whose Haar mean is (Σ x_j)/n.
        let x = [0.1, 0.5, 0.9];
        let e = h_alpha(&sig(&[1, 0, 0]), &x, &McConfig::new(50_000, 9)).unwrap();
        assert!(e.within(c(0.5, 0.0), 3.0), "{e:?}");
    }

    #[test]
    fn reduced_coefficients_n1() {
        let radial = SymbolSpec::raw(RawBuiltin::Radial, DomainTag::BoundedDIII);
        for k in 0..=8u32 {
            let v = c_coeff(&radial, 2.0, &sig(&[k]), &cfg()).unwrap();
            let want = (k as f64 + 1.0) / (k as f64 + 2.0);
            assert!((v.value.re - want).abs() < 1e-12, "k = {k}: {}", v.value);
            assert_eq!(v.std_error, 0.0);
        }
        let one = SymbolSpec::elliptic(ScalarProfile::Constant { value: 1.0 });
        assert_eq!(c_coeff(&one, 3.7, &sig(&[2, 1]), &cfg()).unwrap().value, c(1.0, 0.0));
    }

    #[test]
    fn elliptic_reciprocal_is_one_over_k_plus_two() {
        let f: Profile = ScalarProfile::Power { p: -1.0 }.into();
        for k in 0..6u32 {
            let v = c_elliptic(&f, 2.0, &sig(&[k]), &cfg()).unwrap();
            assert!((v.value.re - 1.0 / (k as f64 + 2.0)).abs() < 1e-12, "k = {k}: {}", v.value);
        }
    }

    #[test]
    fn n2_reduced_matches_symmetrized_cube() {
        // Independent evaluation: integrate over the full square with |Vandermonde|.
        let lambda = 3.5;
        let alpha = sig(&[2, 1]);
        let a = SymbolSpec::elliptic(ScalarProfile::ExpNeg);
        let got = c_coeff(&a, lambda, &alpha, &cfg()).unwrap().value.re;
        let rule = Rule::graded_legendre(200, 0.0, 1.0, 4).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (&x1, &w1) in rule.nodes.iter().zip(&rule.weights) {
            for (&x2, &w2) in rule.nodes.iter().zip(&rule.weights) {
                let h = h_factor_unchecked(1, lambda, &[x1, x2]) * h_alpha_two(1, &[x1, x2]) * w1 * w2;
                num += h * (-(1.0 / (1.0 - x1) + 1.0 / (1.0 - x2))).exp();
                den += h;
            }
        }
        assert!((got - num / den).abs() < 1e-6, "{got} vs {}", num / den);
    }

    #[test]
    fn full_formula_n1_matches_reduced() {
        let radial = SymbolSpec::raw(RawBuiltin::Radial, DomainTag::BoundedDIII);
        let mc = McConfig::new(200_000, 12);
        for k in [0u32, 3] {
            let full = c_coeff_full(&radial, 2.5, &sig(&[k]), &mc).unwrap();
            let red = c_coeff(&radial, 2.5, &sig(&[k]), &cfg()).unwrap();
            assert!(full.within(red.value, 3.0), "k = {k}: {full:?} vs {red:?}");
        }
        let one = SymbolSpec::elliptic(ScalarProfile::Constant { value: 1.0 });
        let e = c_coeff_full(&one, 3.0, &sig(&[1, 0]), &McConfig::new(1000, 1)).unwrap();
        assert_eq!(e.value, c(1.0, 0.0));
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn table_csv_layout() {
        let one = SymbolSpec::elliptic(ScalarProfile::Constant { value: 1.0 });
        let t = SpectralTable::compute(&one, 2.0, &Signature::up_to_degree(1, 2), CoeffMethod::Auto, &cfg()).unwrap();
        assert_eq!(t.to_csv(), "alpha,value_re,value_im,std_error\n0,1.0,0.0,0.0\n1,1.0,0.0,0.0\n2,1.0,0.0,0.0\n");
        assert!(t.to_json().unwrap().contains("\"alpha\": [\n"));
    }

    #[test]
    fn gamma_examples() {
        let q = ConeQuadConfig::default();
        for x in [0.5, 1.0, 2.0] {
            let xm = PosDefMatrix::diagonal(&[x]).unwrap();
            let one = gamma_parabolic(|_| c(1.0, 0.0), 2.0, &xm, &q).unwrap();
            assert!((one.value - c(1.0, 0.0)).norm() < 1e-12);
            let g = gamma_parabolic(|y| c((-y.trace()).exp(), 0.0), 2.0, &xm, &q).unwrap();
            assert!((g.value.re - 2.0 * x / (2.0 * x + 1.0)).abs() < 1e-10, "{x}: {:?}", g);
        }
        let x2 = PosDefMatrix::new(RealSymMatrix::from_packed(2, vec![1.2, 0.3, 0.7]).unwrap()).unwrap();
        let one = gamma_parabolic(|_| c(1.0, 0.0), 3.3, &x2, &q).unwrap();
        assert!((one.value - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn fourier_laplace_example() {
        let q = ConeQuadConfig::default();
        let f = |x: &RealSymMatrix| c((-x.trace()).exp() * x.trace().sqrt(), 0.0);
        for z in [c(0.0, 1.0), c(0.7, 0.3), c(-3.0, 0.05)] {
            let p = DomainPoint::new(DomainTag::SiegelS, ComplexSymMatrix::diagonal(&[z])).unwrap();
            let r = fourier_laplace_adjoint(f, 2.0, &p, 1.0, &q).unwrap();
            let want = (c(1.0, 0.0) - c(0.0, 1.0) * z).powi(-2);
            assert!((r.value - want).norm() < 1e-10, "{z}: {:?} vs {want}", r);
            assert!(r.warning.is_none());
        }
        // Γ_Ω(λ)^{1/2} det(I − iZ)^{−λ} for f = e^{−tr ξ} det ξ^{λ/2 − 3/4}, n = 2.
        let lambda = 3.4;
        let f2 = |x: &RealSymMatrix| c((-x.trace()).exp() * x.determinant().max(0.0).powf(lambda / 2.0 - 0.75), 0.0);
        let zm = ComplexSymMatrix::from_packed(2, vec![c(0.3, 1.1), c(-0.2, 0.1), c(0.5, 0.8)]).unwrap();
        let p = DomainPoint::new(DomainTag::SiegelS, zm.clone()).unwrap();
        let r = fourier_laplace_adjoint(f2, lambda, &p, 1.0, &q).unwrap();
        let w = &ComplexSymMatrix::identity(2) - &(&zm * c(0.0, 1.0));
        let det = w.get(0, 0) * w.get(1, 1) - w.get(0, 1) * w.get(0, 1);
        let want = (0.5 * ln_multigamma(2, lambda).unwrap()).exp() * det.powf(-lambda);
        assert!((r.value - want).norm() < 1e-8 * want.norm(), "{:?} vs {want}", r);
        let p = DomainPoint::siegel_base(2);
        assert_eq!(fourier_laplace_adjoint(|_| c(0.0, 0.0), 3.0, &p, 1.0, &q).unwrap().value, c(0.0, 0.0));
    }
}
