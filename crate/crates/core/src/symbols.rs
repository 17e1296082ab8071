//! Symbols built from moment maps and the invariance diagnostics for them.
//!
//! Elliptic and hyperbolic symbols compose a scalar profile with the positive trace
//! functionals `tr((I − Z Z̄)⁻¹)` and `tr((Im Z)⁻¹ Re Z)`; the constant factors of the
//! moment maps are absorbed in the profile. Parabolic symbols are functions of `Im Z`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::domains::{random_point, DomainPoint, DomainTag};
use crate::error::{Error, Result};
use crate::haar::{random_gl, random_unitary};
use crate::linalg::{inverse_c, real_to_complex, ComplexSymMatrix, RealSymMatrix, C64};

/// Built-in scalar profiles `f: ℝ → ℂ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarProfile {
    Constant {
        value: f64,
    },
    Identity,
    /// `e^{−s}`.
    ExpNeg,
    /// `s^p`.
    Power {
        p: f64,
    },
    /// `1` on `[lo, hi]`, `0` elsewhere.
    Indicator {
        lo: f64,
        hi: f64,
    },
    /// `e^{−(s/scale)²}`.
    Gaussian {
        scale: f64,
    },
}

impl ScalarProfile {
    pub fn eval(&self, s: f64) -> C64 {
        let v = match *self {
            ScalarProfile::Constant { value } => value,
            ScalarProfile::Identity => s,
            ScalarProfile::ExpNeg => (-s).exp(),
            ScalarProfile::Power { p } => s.powf(p),
            ScalarProfile::Indicator { lo, hi } => f64::from(u8::from((lo..=hi).contains(&s))),
            ScalarProfile::Gaussian { scale } => (-(s / scale).powi(2)).exp(),
        };
        C64::new(v, 0.0)
    }

    /// Supremum of `|f|` over `[lo, ∞)`, if finite.
    pub fn sup_from(&self, lo: f64) -> Option<f64> {
        match *self {
            ScalarProfile::Constant { value } => Some(value.abs()),
            ScalarProfile::Identity => None,
            ScalarProfile::ExpNeg => lo.is_finite().then(|| (-lo).exp()),
            ScalarProfile::Power { p } => {
                if p == 0.0 {
                    Some(1.0)
                } else if p < 0.0 && lo > 0.0 {
                    Some(lo.powf(p))
                } else {
                    None
                }
            }
            ScalarProfile::Indicator { .. } | ScalarProfile::Gaussian { .. } => Some(1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarProfile::Constant { value } => value.is_finite(),
            ScalarProfile::Power { p } => p.is_finite(),
            ScalarProfile::Indicator { lo, hi } => lo <= hi && !lo.is_nan() && !hi.is_nan(),
            ScalarProfile::Gaussian { scale } => scale.is_finite() && scale > 0.0,
            ScalarProfile::Identity | ScalarProfile::ExpNeg => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid profile parameters: {self:?}")))
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
type ConeFn = Arc<dyn Fn(&RealSymMatrix) -> C64 + Send + Sync>;
type RawFn = Arc<dyn Fn(&ComplexSymMatrix) -> C64 + Send + Sync>;

/// A scalar profile: built-in, or a user callable with a declared sup-norm bound.
#[derive(Clone)]
pub enum Profile {
    Builtin(ScalarProfile),
    Custom { f: ScalarFn, bound: Option<f64> },
}

impl Profile {
    pub fn custom(f: impl Fn(f64) -> C64 + Send + Sync + 'static, bound: Option<f64>) -> Self {
        Profile::Custom { f: Arc::new(f), bound }
    }

    pub fn eval(&self, s: f64) -> C64 {
        match self {
            Profile::Builtin(p) => p.eval(s),
            Profile::Custom { f, .. } => f(s),
        }
    }

    fn bound_from(&self, lo: f64) -> Option<f64> {
        match self {
            Profile::Builtin(p) => p.sup_from(lo),
            Profile::Custom { bound, .. } => *bound,
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Builtin(p) => write!(f, "{p:?}"),
            Profile::Custom { bound, .. } => write!(f, "Custom {{ bound: {bound:?} }}"),
        }
    }
}

impl From<ScalarProfile> for Profile {
    fn from(p: ScalarProfile) -> Self {
        Profile::Builtin(p)
    }
}

/// A profile on the cone of positive definite matrices.
#[derive(Clone)]
pub enum ConeProfile {
    /// `φ(tr Y)`.
    Trace(Profile),
    /// `φ(det Y)`.
    Det(Profile),
    Custom {
        f: ConeFn,
        bound: Option<f64>,
    },
}

impl ConeProfile {
    pub fn custom(f: impl Fn(&RealSymMatrix) -> C64 + Send + Sync + 'static, bound: Option<f64>) -> Self {
        ConeProfile::Custom { f: Arc::new(f), bound }
    }

    pub fn eval(&self, y: &RealSymMatrix) -> C64 {
        match self {
            ConeProfile::Trace(p) => p.eval(y.trace()),
            ConeProfile::Det(p) => p.eval(y.determinant()),
            ConeProfile::Custom { f, .. } => f(y),
        }
    }

    pub fn declared_bound(&self) -> Option<f64> {
        match self {
            ConeProfile::Trace(p) | ConeProfile::Det(p) => p.bound_from(0.0),
            ConeProfile::Custom { bound, .. } => *bound,
        }
    }
}

impl fmt::Debug for ConeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeProfile::Trace(p) => write!(f, "Trace({p:?})"),
            ConeProfile::Det(p) => write!(f, "Det({p:?})"),
            ConeProfile::Custom { bound, .. } => write!(f, "Custom {{ bound: {bound:?} }}"),
        }
    }
}

/// Built-in raw symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "function", rename_all = "snake_case")]
pub enum RawBuiltin {
    /// `tr(Z Z̄)`; equals `|z|²` for `n = 1`.
    Radial,
    /// The entry `z_jk` (0-based).
    Entry { j: usize, k: usize },
    /// `Re z_jk` (0-based).
    ReEntry { j: usize, k: usize },
    /// `f(tr((I − Z Z̄)⁻¹))` evaluated directly, without the moment-map tag.
    EllipticProfile { profile: ProfileJson },
}

/// A raw symbol `g(Z)`.
#[derive(Clone)]
pub enum RawSymbol {
    Builtin(RawBuiltin),
    Custom { g: RawFn, bound: Option<f64> },
}

impl fmt::Debug for RawSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawSymbol::Builtin(b) => write!(f, "{b:?}"),
            RawSymbol::Custom { bound, .. } => write!(f, "Custom {{ bound: {bound:?} }}"),
        }
    }
}

/// The symbol classes.
#[derive(Clone, Debug)]
pub enum SymbolKind {
    EllipticMoment(Profile),
    HyperbolicMoment(Profile),
    ParabolicMoment(ConeProfile),
    Raw(RawSymbol),
}

/// A bounded symbol with the domain it lives on.
#[derive(Clone, Debug)]
pub struct SymbolSpec {
    kind: SymbolKind,
    tag: DomainTag,
}

impl SymbolSpec {
    pub fn new(kind: SymbolKind, tag: DomainTag) -> Result<Self> {
        let required = match &kind {
            SymbolKind::EllipticMoment(_) => Some(DomainTag::BoundedDIII),
            SymbolKind::HyperbolicMoment(_) | SymbolKind::ParabolicMoment(_) => Some(DomainTag::SiegelS),
            SymbolKind::Raw(_) => None,
        };
        if let Some(req) = required {
            if req != tag {
                return Err(Error::invalid(format!("this symbol class lives on the {} domain", req.name())));
            }
        }
        Ok(Self { kind, tag })
    }

    pub fn elliptic(profile: impl Into<Profile>) -> Self {
        Self { kind: SymbolKind::EllipticMoment(profile.into()), tag: DomainTag::BoundedDIII }
    }

    pub fn hyperbolic(profile: impl Into<Profile>) -> Self {
        Self { kind: SymbolKind::HyperbolicMoment(profile.into()), tag: DomainTag::SiegelS }
    }

    pub fn parabolic(profile: ConeProfile) -> Self {
        Self { kind: SymbolKind::ParabolicMoment(profile), tag: DomainTag::SiegelS }
    }

    pub fn raw(builtin: RawBuiltin, tag: DomainTag) -> Self {
        Self { kind: SymbolKind::Raw(RawSymbol::Builtin(builtin)), tag }
    }

    pub fn raw_fn(
        g: impl Fn(&ComplexSymMatrix) -> C64 + Send + Sync + 'static,
        bound: Option<f64>,
        tag: DomainTag,
    ) -> Self {
        Self { kind: SymbolKind::Raw(RawSymbol::Custom { g: Arc::new(g), bound }), tag }
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn tag(&self) -> DomainTag {
        self.tag
    }

    /// Declared sup-norm bound on the domain of dimension `n`, if any.
    pub fn declared_bound(&self, n: usize) -> Option<f64> {
        match &self.kind {
            SymbolKind::EllipticMoment(p) => p.bound_from(n as f64),
            SymbolKind::HyperbolicMoment(p) => p.bound_from(f64::NEG_INFINITY),
            SymbolKind::ParabolicMoment(p) => p.declared_bound(),
            SymbolKind::Raw(RawSymbol::Builtin(b)) => match b {
                RawBuiltin::Radial => (self.tag == DomainTag::BoundedDIII).then_some(n as f64),
                RawBuiltin::Entry { .. } | RawBuiltin::ReEntry { .. } => {
                    (self.tag == DomainTag::BoundedDIII).then_some(1.0)
                }
                RawBuiltin::EllipticProfile { profile } => profile.to_scalar().ok().and_then(|p| p.sup_from(n as f64)),
            },
            SymbolKind::Raw(RawSymbol::Custom { bound, .. }) => *bound,
        }
    }

    /// True for the elliptic moment symbols; those are `U(n)`-invariant and can be
    /// evaluated on diagonal matrices.
    pub fn is_elliptic(&self) -> bool {
        matches!(self.kind, SymbolKind::EllipticMoment(_))
    }

    /// Evaluates at a raw matrix without re-validating membership.
    pub(crate) fn eval_matrix(&self, z: &ComplexSymMatrix) -> Result<C64> {
        Ok(match &self.kind {
            SymbolKind::EllipticMoment(p) => p.eval(elliptic_trace(z)?),
            SymbolKind::HyperbolicMoment(p) => p.eval(hyperbolic_trace(z)?),
            SymbolKind::ParabolicMoment(p) => p.eval(&z.im()),
            SymbolKind::Raw(RawSymbol::Custom { g, .. }) => g(z),
            SymbolKind::Raw(RawSymbol::Builtin(b)) => match b {
                RawBuiltin::Radial => C64::new(
                    z.packed().iter().enumerate().map(|(i, v)| v.norm_sqr() * offdiag_mult(z.n(), i)).sum(),
                    0.0,
                ),
                RawBuiltin::Entry { j, k } => entry(z, *j, *k)?,
                RawBuiltin::ReEntry { j, k } => C64::new(entry(z, *j, *k)?.re, 0.0),
                RawBuiltin::EllipticProfile { profile } => profile.to_scalar()?.eval(elliptic_trace(z)?),
            },
        })
    }
}

fn offdiag_mult(n: usize, packed: usize) -> f64 {
    let (j, k) = crate::linalg::packed_pairs(n).nth(packed).expect("packed index in range");
    if j == k {
        1.0
    } else {
        2.0
    }
}

fn entry(z: &ComplexSymMatrix, j: usize, k: usize) -> Result<C64> {
    if j >= z.n() || k >= z.n() {
        return Err(Error::invalid(format!("entry ({j}, {k}) outside a {0}x{0} matrix", z.n())));
    }
    Ok(z.get(j, k))
}

/// `tr((I − Z Z̄)⁻¹)`.
pub fn elliptic_trace(z: &ComplexSymMatrix) -> Result<f64> {
    let d = z.to_dense();
    let m = crate::linalg::identity_c(z.n()) - &d * d.map(|v| v.conj());
    Ok(inverse_c(&m)?.trace().re)
}

/// `tr((Im Z)⁻¹ Re Z)`.
pub fn hyperbolic_trace(z: &ComplexSymMatrix) -> Result<f64> {
    Ok((z.im().inverse()?.to_dense() * z.re().to_dense()).trace())
}

/// Evaluates a symbol at a point of its domain.
pub fn eval_symbol(spec: &SymbolSpec, z: &DomainPoint) -> Result<C64> {
    z.expect_tag(spec.tag)?;
    spec.eval_matrix(z.z())
}

/// Groups acting on the domains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    /// `Z ↦ U Z Uᵀ` on the bounded domain.
    Un,
    /// `Z ↦ A Z Aᵀ` on the Siegel domain.
    GLnR,
    /// `Z ↦ Z + S` on the Siegel domain.
    SymmnR,
    /// `Z ↦ e^{iθ} Z` on the bounded domain.
    T,
    /// `Z ↦ r Z`, `r > 0`, on the Siegel domain.
    Rplus,
}

impl Group {
    pub fn domain(self) -> DomainTag {
        match self {
            Group::Un | Group::T => DomainTag::BoundedDIII,
            Group::GLnR | Group::SymmnR | Group::Rplus => DomainTag::SiegelS,
        }
    }

    /// Applies a random element of the group to `z`.
    pub fn act_random(self, z: &ComplexSymMatrix, rng: &mut ChaCha8Rng) -> ComplexSymMatrix {
        let n = z.n();
        match self {
            Group::Un => z.congruence(&random_unitary(n, rng)),
            Group::GLnR => z.congruence(&real_to_complex(&random_gl(n, rng))),
            Group::SymmnR => {
                let s = RealSymMatrix::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                z + &s.to_complex()
            }
            Group::T => {
                let theta = rng.sample(Uniform::new(0.0, std::f64::consts::TAU).expect("valid range"));
                z.scale(C64::from_polar(1.0, theta))
            }
            Group::Rplus => {
                let r = rng.sample::<f64, _>(StandardNormal).exp();
                z.scale(C64::new(r, 0.0))
            }
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "un" | "u(n)" => Ok(Group::Un),
            "glnr" | "gl(n,r)" => Ok(Group::GLnR),
            "symmnr" | "symm(n,r)" => Ok(Group::SymmnR),
            "t" | "circle" => Ok(Group::T),
            "rplus" | "r+" => Ok(Group::Rplus),
            other => Err(Error::invalid(format!("unknown group '{other}'"))),
        }
    }
}

/// `max |a(h·Z) − a(Z)|` over `trials` random points `Z` of dimension `n` and random `h`.
pub fn invariance_residual(
    spec: &SymbolSpec,
    group: Group,
    n: usize,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if group.domain() != spec.tag {
        return Err(Error::invalid(format!(
            "group {group:?} acts on the {} domain, the symbol lives on the {} domain",
            group.domain().name(),
            spec.tag.name()
        )));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let z = random_point(spec.tag, n, rng);
        let moved = group.act_random(z.z(), rng);
        let moved = DomainPoint::new(spec.tag, moved)
            .map_err(|e| Error::numerical(format!("group action left the domain: {e}")))?;
        let d = (eval_symbol(spec, &moved)? - eval_symbol(spec, &z)?).norm();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Largest `|a(Z)|` over `samples` random points: a diagnostic against the declared bound.
pub fn observed_sup(spec: &SymbolSpec, n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for _ in 0..samples {
        let z = random_point(spec.tag, n, rng);
        sup = sup.max(eval_symbol(spec, &z)?.norm());
    }
    Ok(sup)
}

/// A profile in the JSON format: a bare name (`"exp_neg"`) or an object (`{"name": "power", "p": 2}`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileJson {
    Name(String),
    Spec(ScalarProfile),
}

impl ProfileJson {
    pub fn to_scalar(&self) -> Result<ScalarProfile> {
        let p = match self {
            ProfileJson::Spec(p) => p.clone(),
            ProfileJson::Name(name) => match name.as_str() {
                "constant" | "one" => ScalarProfile::Constant { value: 1.0 },
                "identity" | "id" => ScalarProfile::Identity,
                "exp_neg" => ScalarProfile::ExpNeg,
                "reciprocal" => ScalarProfile::Power { p: -1.0 },
                other => {
                    return Err(Error::invalid(format!(
                        "unknown profile '{other}' (built-ins: constant, identity, exp_neg, reciprocal, \
                         or objects for power, indicator, gaussian)"
                    )))
                }
            },
        };
        p.validate()?;
        Ok(p)
    }
}

/// Argument of a parabolic profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConeArgument {
    #[default]
    Trace,
    Det,
}

/// The declarative symbol format used by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolJson {
    Elliptic {
        profile: ProfileJson,
    },
    Hyperbolic {
        profile: ProfileJson,
    },
    Parabolic {
        profile: ProfileJson,
        #[serde(default)]
        of: ConeArgument,
    },
    Raw {
        #[serde(flatten)]
        function: RawBuiltin,
        #[serde(default)]
        domain: Option<DomainTag>,
    },
}

impl SymbolJson {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed symbol spec: {e}")))
    }

    pub fn to_spec(&self) -> Result<SymbolSpec> {
        Ok(match self {
            SymbolJson::Elliptic { profile } => SymbolSpec::elliptic(profile.to_scalar()?),
            SymbolJson::Hyperbolic { profile } => SymbolSpec::hyperbolic(profile.to_scalar()?),
            SymbolJson::Parabolic { profile, of } => {
                let p = Profile::Builtin(profile.to_scalar()?);
                SymbolSpec::parabolic(match of {
                    ConeArgument::Trace => ConeProfile::Trace(p),
                    ConeArgument::Det => ConeProfile::Det(p),
                })
            }
            SymbolJson::Raw { function, domain } => {
                if let RawBuiltin::EllipticProfile { profile } = function {
                    profile.to_scalar()?;
                }
                SymbolSpec::raw(function.clone(), domain.unwrap_or(DomainTag::BoundedDIII))
            }
        })
    }
}

/// Parses a symbol from its JSON text.
pub fn symbol_from_json(text: &str) -> Result<SymbolSpec> {
    SymbolJson::parse(text)?.to_spec()
}
