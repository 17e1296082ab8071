//! The bounded realization `D = {Z = Zᵀ : I − Z Z̄ > 0}` and the Siegel
//! half-space `S = {Z = Zᵀ : Im Z > 0}`: membership, the Cayley map,
//! multigamma, weighted measures and their reproducing kernels.
//!
//! Volume on `Symm(n, ℂ)` is Lebesgue measure for the real inner product
//! `Re tr(U V̄)`. In packed coordinates `(Re z_jk, Im z_jk)`, `j <= k`, each
//! off-diagonal entry then carries a factor 2; see [`packed_measure_factor`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues_unchecked, identity_c, inverse_c, log_det_right_half_plane, packed_len, packed_pairs,
    ComplexSymMatrix, RealSymMatrix, C64,
};
use crate::montecarlo::Sampler;

/// Which realization a point lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainTag {
    /// `I − Z Z̄ > 0`.
    #[serde(alias = "bounded")]
    BoundedDIII,
    /// `Im Z > 0`.
    #[serde(alias = "siegel")]
    SiegelS,
}

impl DomainTag {
    pub fn name(self) -> &'static str {
        match self {
            DomainTag::BoundedDIII => "bounded",
            DomainTag::SiegelS => "siegel",
        }
    }
}

impl std::str::FromStr for DomainTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bounded" | "d" | "diii" | "boundeddiii" => Ok(DomainTag::BoundedDIII),
            "siegel" | "s" | "siegels" => Ok(DomainTag::SiegelS),
            other => Err(Error::invalid(format!("unknown domain '{other}' (expected 'bounded' or 'siegel')"))),
        }
    }
}

/// Eigenvalues (ascending) of the matrix whose positivity defines membership:
/// `I − Z Z̄` for the bounded domain, `Im Z` for the Siegel domain.
pub fn membership_spectrum(tag: DomainTag, z: &ComplexSymMatrix) -> Vec<f64> {
    match tag {
        DomainTag::BoundedDIII => {
            let d = z.to_dense();
            let m = identity_c(z.n()) - &d * d.map(|v| v.conj());
            hermitian_eigenvalues_unchecked(&m)
        }
        DomainTag::SiegelS => z.im().eigenvalues(),
    }
}

/// Membership predicate with strict positivity.
pub fn contains(tag: DomainTag, z: &ComplexSymMatrix) -> bool {
    membership_spectrum(tag, z).first().is_some_and(|&e| e > 0.0)
}

/// A symmetric matrix validated as a member of one of the two domains.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainPoint {
    tag: DomainTag,
    z: ComplexSymMatrix,
}

impl DomainPoint {
    pub fn new(tag: DomainTag, z: ComplexSymMatrix) -> Result<Self> {
        if z.n() == 0 {
            return Err(Error::invalid("matrix dimension must be positive"));
        }
        if z.packed().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let spec = membership_spectrum(tag, &z);
        if let Some((idx, &ev)) = spec.iter().enumerate().find(|(_, &e)| !(e > 0.0)) {
            let what = match tag {
                DomainTag::BoundedDIII => "I - Z conj(Z)",
                DomainTag::SiegelS => "Im Z",
            };
            return Err(Error::domain(format!(
                "point is not in the {} domain: eigenvalue {idx} of {what} is {ev:e} (must be > 0)",
                tag.name()
            )));
        }
        Ok(Self { tag, z })
    }

    pub fn origin(n: usize) -> Self {
        Self { tag: DomainTag::BoundedDIII, z: ComplexSymMatrix::zeros(n) }
    }

    /// The base point `i·I` of the Siegel domain.
    pub fn siegel_base(n: usize) -> Self {
        Self { tag: DomainTag::SiegelS, z: ComplexSymMatrix::scaled_identity(n, C64::new(0.0, 1.0)) }
    }

    pub fn tag(&self) -> DomainTag {
        self.tag
    }

    pub fn z(&self) -> &ComplexSymMatrix {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.n()
    }

    pub fn into_matrix(self) -> ComplexSymMatrix {
        self.z
    }

    pub(crate) fn expect_tag(&self, tag: DomainTag) -> Result<()> {
        if self.tag == tag {
            Ok(())
        } else {
            Err(Error::invalid(format!("expected a point of the {} domain, got {}", tag.name(), self.tag.name())))
        }
    }
}

/// Checks `lambda > n`, the range where the weighted spaces are defined.
pub fn check_weight(n: usize, lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > n as f64 {
        Ok(())
    } else {
        Err(Error::domain(format!("weight lambda = {lambda} must exceed n = {n}")))
    }
}

/// Cayley map `(I + iZ)(I − iZ)⁻¹` from the Siegel domain onto the bounded domain.
pub fn cayley(z: &DomainPoint) -> Result<DomainPoint> {
    z.expect_tag(DomainTag::SiegelS)?;
    let n = z.n();
    let iz = z.z.to_dense() * C64::new(0.0, 1.0);
    let id = identity_c(n);
    let w = (&id + &iz) * inverse_c(&(&id - &iz))?;
    DomainPoint::new(DomainTag::BoundedDIII, ComplexSymMatrix::from_dense_upper(&w))
        .map_err(|e| Error::numerical(format!("Cayley image failed validation: {e}")))
}

/// Inverse Cayley map `−i(W − I)(W + I)⁻¹`.
pub fn cayley_inv(w: &DomainPoint) -> Result<DomainPoint> {
    w.expect_tag(DomainTag::BoundedDIII)?;
    let n = w.n();
    let wd = w.z.to_dense();
    let id = identity_c(n);
    let z = (&wd - &id) * inverse_c(&(&wd + &id))? * C64::new(0.0, -1.0);
    DomainPoint::new(DomainTag::SiegelS, ComplexSymMatrix::from_dense_upper(&z))
        .map_err(|e| Error::numerical(format!("inverse Cayley image failed validation: {e}")))
}

/// `ln Γ_Ω(λ)` for the cone of positive definite `n x n` matrices.
pub fn ln_multigamma(n: usize, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let bound = (n as f64 - 1.0) / 2.0;
    if !(lambda > bound) || !lambda.is_finite() {
        return Err(Error::domain(format!("multigamma needs lambda > {bound}, got {lambda}")));
    }
    let nf = n as f64;
    let prefactor = nf * (nf - 1.0) / 4.0 * (2.0 * PI).ln();
    Ok(prefactor + (0..n).map(|j| ln_gamma(lambda - j as f64 / 2.0)).sum::<f64>())
}

/// `Γ_Ω(λ) = (2π)^{n(n−1)/4} ∏_{j=1}^n Γ(λ − (j−1)/2)`.
pub fn multigamma(n: usize, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let bound = (n as f64 - 1.0) / 2.0;
    if !(lambda > bound) || !lambda.is_finite() {
        return Err(Error::domain(format!("multigamma needs lambda > {bound}, got {lambda}")));
    }
    let nf = n as f64;
    let prefactor = (2.0 * PI).powf(nf * (nf - 1.0) / 4.0);
    Ok(prefactor * (0..n).map(|j| statrs::function::gamma::gamma(lambda - j as f64 / 2.0)).product::<f64>())
}

/// Normalizing constant `Γ_Ω(λ) / (π^{n(n+1)/2} Γ_Ω(λ − (n+1)/2))` of the weighted measures.
pub fn weight_constant(n: usize, lambda: f64) -> Result<f64> {
    check_weight(n, lambda)?;
    let nf = n as f64;
    let ln_c =
        ln_multigamma(n, lambda)? - nf * (nf + 1.0) / 2.0 * PI.ln() - ln_multigamma(n, lambda - (nf + 1.0) / 2.0)?;
    Ok(ln_c.exp())
}

/// Ratio of the trace-form volume on `Symm(n, ℂ)` to Lebesgue measure in packed coordinates.
pub fn packed_measure_factor(n: usize) -> f64 {
    2f64.powi((n * (n.saturating_sub(1)) / 2) as i32)
}

/// Ratio of the trace-form volume on `Symm(n, ℝ)` to Lebesgue measure in packed coordinates.
pub fn real_packed_measure_factor(n: usize) -> f64 {
    2f64.powf((n * n.saturating_sub(1)) as f64 / 4.0)
}

/// `det(I − Z Z̄)` (bounded) or `det(2 Im Z)` (Siegel); positive on the domain.
pub fn weight_determinant(tag: DomainTag, z: &ComplexSymMatrix) -> f64 {
    match tag {
        DomainTag::BoundedDIII => membership_spectrum(tag, z).iter().product(),
        DomainTag::SiegelS => z.im().scale(2.0).determinant(),
    }
}

/// Density of the probability measure `v_λ` (bounded) or of `v̂_λ` (Siegel) with respect
/// to the trace-form Lebesgue measure.
pub fn weight_density(tag: DomainTag, lambda: f64, z: &ComplexSymMatrix) -> Result<f64> {
    let n = z.n();
    let c = weight_constant(n, lambda)?;
    if !contains(tag, z) {
        return Err(Error::domain(format!("point is outside the {} domain", tag.name())));
    }
    Ok(c * weight_determinant(tag, z).powf(lambda - n as f64 - 1.0))
}

fn kernel_argument(tag: DomainTag, z: &ComplexSymMatrix, w: &ComplexSymMatrix) -> DMatrix<C64> {
    let n = z.n();
    match tag {
        DomainTag::BoundedDIII => identity_c(n) - z.to_dense() * w.to_dense().map(|v| v.conj()),
        DomainTag::SiegelS => (z.to_dense() - w.to_dense().map(|v| v.conj())) * C64::new(0.0, -1.0),
    }
}

/// `log det(I − Z W̄)` or `log det(−i(Z − W̄))` on the branch that is real on the diagonal.
///
/// The eigenvalues of both arguments lie in the open right half-plane for `Z, W` in the
/// domain, so summing their principal logarithms is continuous in `(Z, W)`.
pub fn log_kernel_determinant(tag: DomainTag, z: &DomainPoint, w: &DomainPoint) -> Result<C64> {
    z.expect_tag(tag)?;
    w.expect_tag(tag)?;
    if z.n() != w.n() {
        return Err(Error::invalid("kernel arguments differ in dimension"));
    }
    log_det_right_half_plane(&kernel_argument(tag, &z.z, &w.z))
}

/// Weighted Bergman kernel `det(I − Z W̄)^{−λ}` or `det(−i(Z − W̄))^{−λ}`.
pub fn bergman_kernel(tag: DomainTag, lambda: f64, z: &DomainPoint, w: &DomainPoint) -> Result<C64> {
    check_weight(z.n(), lambda)?;
    Ok((log_kernel_determinant(tag, z, w)? * (-lambda)).exp())
}

/// Complex Jacobian determinant of the Cayley map at `Z`, assembled from the linear map
/// `V ↦ 2i A V A`, `A = (I − iZ)⁻¹`, in the packed basis `E_jk` of `Symm(n, ℂ)`.
pub fn cayley_jacobian(z: &DomainPoint) -> Result<C64> {
    z.expect_tag(DomainTag::SiegelS)?;
    let n = z.n();
    let a = inverse_c(&(identity_c(n) - z.z.to_dense() * C64::new(0.0, 1.0)))?;
    let len = packed_len(n);
    let mut m = DMatrix::<C64>::zeros(len, len);
    for (col, (j, k)) in packed_pairs(n).enumerate() {
        let mut e = DMatrix::<C64>::zeros(n, n);
        e[(j, k)] = C64::new(1.0, 0.0);
        e[(k, j)] = C64::new(1.0, 0.0);
        let img = &a * e * &a * C64::new(0.0, 2.0);
        for (row, (p, q)) in packed_pairs(n).enumerate() {
            m[(row, col)] = img[(p, q)];
        }
    }
    Ok(if len == 1 { m[(0, 0)] } else { m.determinant() })
}

/// `log J(Z)` continued from the closed form `J = (2i)^{n(n+1)/2} det(I − iZ)^{−(n+1)}`.
pub fn log_cayley_jacobian(z: &DomainPoint) -> Result<C64> {
    z.expect_tag(DomainTag::SiegelS)?;
    let n = z.n();
    let m = identity_c(n) - z.z.to_dense() * C64::new(0.0, 1.0);
    let log_det = log_det_right_half_plane(&m)?;
    let len = packed_len(n) as f64;
    Ok(C64::new(len * 2f64.ln(), len * PI / 2.0) - log_det * (n as f64 + 1.0))
}

/// `J(Z)^{λ/(n+1)} · f(φ(Z))`, the intertwining unitary from the bounded to the Siegel domain.
///
/// The power uses [`log_cayley_jacobian`]; the numerically assembled Jacobian must agree with
/// its exponential to relative `1e-8`.
pub fn cayley_pullback<F>(lambda: f64, f: F, z: &DomainPoint) -> Result<C64>
where
    F: FnOnce(&DomainPoint) -> C64,
{
    let n = z.n();
    check_weight(n, lambda)?;
    let w = cayley(z)?;
    let log_j = log_cayley_jacobian(z)?;
    let j = cayley_jacobian(z)?;
    let mismatch = (log_j.exp() - j).norm() / j.norm();
    if !(mismatch <= 1e-8) {
        return Err(Error::numerical(format!("Cayley Jacobian branch check failed (relative mismatch {mismatch:e})")));
    }
    let value = f(&w);
    if value == C64::new(0.0, 0.0) {
        return Ok(value);
    }
    Ok((log_j * (lambda / (n as f64 + 1.0))).exp() * value)
}

fn uniform_disc(rng: &mut ChaCha8Rng) -> C64 {
    let r = rng.random::<f64>().sqrt();
    C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
}

fn polydisc_point(n: usize, rng: &mut ChaCha8Rng) -> ComplexSymMatrix {
    ComplexSymMatrix::from_fn(n, |_, _| uniform_disc(rng))
}

/// Maximum proposals per accepted draw before a sampler reports failure.
pub const MAX_PROPOSALS: u64 = 100_000;

/// Uniform points of the polydisc `{|z_jk| <= 1}` (packed entries), which contains the bounded
/// domain. The weight is the polydisc's trace-form volume, so the estimator targets `∫ f dZ`.
#[derive(Clone, Debug)]
pub struct PolydiscSampler {
    n: usize,
    volume: f64,
}

impl PolydiscSampler {
    pub fn new(n: usize) -> Self {
        let volume = PI.powi(packed_len(n) as i32) * packed_measure_factor(n);
        Self { n, volume }
    }
}

impl Sampler for PolydiscSampler {
    type Point = ComplexSymMatrix;
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(ComplexSymMatrix, f64)> {
        Ok((polydisc_point(self.n, rng), self.volume))
    }
}

/// Draws from the probability measure `v_λ` on the bounded domain.
///
/// Polydisc proposals are accepted with probability `det(I − Z Z̄)^{λ−n−1}` when that exponent
/// is non-negative (unit weights). For `n < λ < n + 1` the density is unbounded; points are then
/// drawn uniformly from the domain and carry the importance weight `v_λ / v_{n+1}`.
#[derive(Clone, Debug)]
pub struct BergmanSampler {
    n: usize,
    lambda: f64,
    importance_scale: Option<f64>,
}

impl BergmanSampler {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        check_weight(n, lambda)?;
        let exponent = lambda - n as f64 - 1.0;
        let importance_scale =
            if exponent < 0.0 { Some(weight_constant(n, lambda)? / weight_constant(n, n as f64 + 1.0)?) } else { None };
        Ok(Self { n, lambda, importance_scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Sampler for BergmanSampler {
    type Point = ComplexSymMatrix;
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(ComplexSymMatrix, f64)> {
        let exponent = self.lambda - self.n as f64 - 1.0;
        for _ in 0..MAX_PROPOSALS {
            let z = polydisc_point(self.n, rng);
            let spec = membership_spectrum(DomainTag::BoundedDIII, &z);
            if !(spec[0] > 0.0) {
                continue;
            }
            let det: f64 = spec.iter().product();
            match self.importance_scale {
                Some(scale) => return Ok((z, scale * det.powf(exponent))),
                None => {
                    if rng.random::<f64>() < det.powf(exponent) {
                        return Ok((z, 1.0));
                    }
                }
            }
        }
        Err(Error::Sampler { rate: 1.0 / MAX_PROPOSALS as f64, min: 1.0 / MAX_PROPOSALS as f64 })
    }
}

/// A random point of the bounded domain (uniform in the domain, rescaled by `shrink` in (0, 1]).
pub fn random_bounded_point(n: usize, shrink: f64, rng: &mut ChaCha8Rng) -> DomainPoint {
    loop {
        let z = polydisc_point(n, rng).scale(C64::new(shrink, 0.0));
        if let Ok(p) = DomainPoint::new(DomainTag::BoundedDIII, z) {
            return p;
        }
    }
}

/// A random point of the Siegel domain: Gaussian real part, `Im Z = L Lᵀ + floor·I`.
pub fn random_siegel_point(n: usize, floor: f64, rng: &mut ChaCha8Rng) -> DomainPoint {
    loop {
        let x = RealSymMatrix::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let l =
            DMatrix::<f64>::from_fn(n, n, |i, j| if i >= j { rng.sample::<f64, _>(StandardNormal) * 0.7 } else { 0.0 });
        let y = &RealSymMatrix::from_dense_upper(&(&l * l.transpose())) + &RealSymMatrix::scaled_identity(n, floor);
        if let Ok(z) = ComplexSymMatrix::from_parts(&x, &y) {
            if let Ok(p) = DomainPoint::new(DomainTag::SiegelS, z) {
                return p;
            }
        }
    }
}

/// A random point whose membership spectrum is bounded below by `margin` in (0, 1).
///
/// Bounded: `Z = U diag(s) Uᵀ` with Haar-unitary `U` and `s_j` uniform in `[0, sqrt(1 − margin)]`.
/// Siegel: Gaussian real part and `Im Z = O diag(y) Oᵀ` with `y_j` uniform in `[margin, margin + 2]`.
pub fn random_interior_point(tag: DomainTag, n: usize, margin: f64, rng: &mut ChaCha8Rng) -> Result<DomainPoint> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::invalid(format!("margin {margin} must lie in (0, 1)")));
    }
    match tag {
        DomainTag::BoundedDIII => {
            let top = (1.0 - margin).sqrt();
            let u = crate::haar::random_unitary(n, rng);
            let d =
                DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| C64::new(top * rng.random::<f64>(), 0.0)));
            DomainPoint::new(tag, ComplexSymMatrix::from_dense_upper(&(&u * d * u.transpose())))
        }
        DomainTag::SiegelS => {
            let x = RealSymMatrix::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let o = crate::haar::haar_orthogonal(n, rng).into_inner();
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| margin + 2.0 * rng.random::<f64>()));
            let y = RealSymMatrix::from_dense_upper(&(&o * d * o.transpose()));
            DomainPoint::new(tag, ComplexSymMatrix::from_parts(&x, &y)?)
        }
    }
}

/// A random point of the requested domain (see [`random_bounded_point`], [`random_siegel_point`]).
pub fn random_point(tag: DomainTag, n: usize, rng: &mut ChaCha8Rng) -> DomainPoint {
    match tag {
        DomainTag::BoundedDIII => random_bounded_point(n, 0.95, rng),
        DomainTag::SiegelS => random_siegel_point(n, 0.2, rng),
    }
}
