//! Bergman metrics, Kähler forms, and moment maps of the three Abelian actions:
//! the circle acting by `Z ↦ e^{iθ} Z` on the bounded domain, and the dilations
//! `Z ↦ r Z` and translations `Z ↦ Z + S` on the Siegel domain.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domains::{DomainPoint, DomainTag};
use crate::error::{Error, Result};
use crate::linalg::{identity_c, inverse_c, real_to_complex, ComplexSymMatrix, RealSymMatrix, C64};

/// Tangent vectors at any point are arbitrary complex symmetric matrices.
pub type TangentVector = ComplexSymMatrix;

/// The three actions for which moment maps are available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    AbelianElliptic,
    AbelianHyperbolic,
    Parabolic,
}

impl Action {
    /// The domain the action is realized on.
    pub fn domain(self) -> DomainTag {
        match self {
            Action::AbelianElliptic => DomainTag::BoundedDIII,
            Action::AbelianHyperbolic | Action::Parabolic => DomainTag::SiegelS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::AbelianElliptic => "elliptic",
            Action::AbelianHyperbolic => "hyperbolic",
            Action::Parabolic => "parabolic",
        }
    }
}

impl std::str::FromStr for Action {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "elliptic" => Ok(Action::AbelianElliptic),
            "hyperbolic" => Ok(Action::AbelianHyperbolic),
            "parabolic" => Ok(Action::Parabolic),
            other => {
                Err(Error::invalid(format!("unknown action '{other}' (expected elliptic, hyperbolic or parabolic)")))
            }
        }
    }
}

/// A Lie-algebra element of one of the actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GroupGenerator {
    AbelianElliptic(f64),
    AbelianHyperbolic(f64),
    Parabolic(RealSymMatrix),
}

impl GroupGenerator {
    pub fn action(&self) -> Action {
        match self {
            GroupGenerator::AbelianElliptic(_) => Action::AbelianElliptic,
            GroupGenerator::AbelianHyperbolic(_) => Action::AbelianHyperbolic,
            GroupGenerator::Parabolic(_) => Action::Parabolic,
        }
    }
}

/// Value of a moment map: a scalar for the one-parameter actions, a symmetric matrix for translations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MomentValue {
    Scalar(f64),
    Matrix(RealSymMatrix),
}

impl MomentValue {
    /// Pairs the value with a generator: `t·μ` for scalars, `tr(μ S)` for matrices.
    pub fn pair(&self, gen: &GroupGenerator) -> Result<f64> {
        match (self, gen) {
            (MomentValue::Scalar(m), GroupGenerator::AbelianElliptic(t) | GroupGenerator::AbelianHyperbolic(t)) => {
                Ok(m * t)
            }
            (MomentValue::Matrix(m), GroupGenerator::Parabolic(s)) => {
                if m.n() != s.n() {
                    return Err(Error::invalid("generator and moment value differ in dimension"));
                }
                Ok((m.to_dense() * s.to_dense()).trace())
            }
            _ => Err(Error::invalid("generator does not match the moment value")),
        }
    }
}

fn check_dims(z: &DomainPoint, u: &TangentVector) -> Result<()> {
    if z.n() == u.n() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tangent vector has dimension {}, point has {}", u.n(), z.n())))
    }
}

/// `(I − Z Z̄)⁻¹` and `(I − Z̄ Z)⁻¹`.
fn bounded_resolvents(z: &ComplexSymMatrix) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let d = z.to_dense();
    let dc = d.map(|v| v.conj());
    let id = identity_c(z.n());
    Ok((inverse_c(&(&id - &d * &dc))?, inverse_c(&(&id - &dc * &d))?))
}

fn inv_im(z: &ComplexSymMatrix) -> Result<DMatrix<f64>> {
    Ok(z.im().inverse()?.to_dense())
}

/// Bergman metric `g_Z(U, V)`.
pub fn bergman_metric(tag: DomainTag, z: &DomainPoint, u: &TangentVector, v: &TangentVector) -> Result<C64> {
    z.expect_tag(tag)?;
    check_dims(z, u)?;
    check_dims(z, v)?;
    let vc = v.to_dense().map(|x| x.conj());
    Ok(match tag {
        DomainTag::BoundedDIII => {
            let (r, rt) = bounded_resolvents(z.z())?;
            (r * u.to_dense() * rt * vc).trace()
        }
        DomainTag::SiegelS => {
            let yi = real_to_complex(&inv_im(z.z())?);
            (&yi * u.to_dense() * &yi * vc).trace()
        }
    })
}

/// Kähler form `ω_Z(U, V)` from its explicit trace formula, cross-checked against `−2 Im g_Z(U, V)`.
pub fn kahler_form(tag: DomainTag, z: &DomainPoint, u: &TangentVector, v: &TangentVector) -> Result<f64> {
    z.expect_tag(tag)?;
    check_dims(z, u)?;
    check_dims(z, v)?;
    let explicit = match tag {
        DomainTag::BoundedDIII => {
            let (r, rt) = bounded_resolvents(z.z())?;
            let (ud, vd) = (u.to_dense(), v.to_dense());
            let i = C64::new(0.0, 1.0);
            let w = (&r * &ud * &rt * vd.map(|x| x.conj())).trace() * i
                - (&rt * ud.map(|x| x.conj()) * &r * &vd).trace() * i;
            w.re
        }
        DomainTag::SiegelS => {
            let yi = inv_im(z.z())?;
            let (ur, ui) = (u.re().to_dense(), u.im().to_dense());
            let (vr, vi) = (v.re().to_dense(), v.im().to_dense());
            2.0 * (&yi * ur * &yi * vi).trace() - 2.0 * (&yi * ui * &yi * vr).trace()
        }
    };
    let g = bergman_metric(tag, z, u, v)?;
    let via_metric = -2.0 * g.im;
    if (explicit - via_metric).abs() > 1e-12 * (1.0 + g.norm()) {
        return Err(Error::numerical(format!("Kähler form {explicit:e} disagrees with -2 Im g = {via_metric:e}")));
    }
    Ok(explicit)
}

/// The induced vector field `X#` of a generator: `2itZ`, `2tZ`, or the constant `S`.
pub fn induced_field(gen: &GroupGenerator, z: &DomainPoint) -> Result<TangentVector> {
    z.expect_tag(gen.action().domain())?;
    match gen {
        GroupGenerator::AbelianElliptic(t) => Ok(z.z().scale(C64::new(0.0, 2.0 * t))),
        GroupGenerator::AbelianHyperbolic(t) => Ok(z.z().scale(C64::new(2.0 * t, 0.0))),
        GroupGenerator::Parabolic(s) => {
            if s.n() != z.n() {
                return Err(Error::invalid("generator and point differ in dimension"));
            }
            Ok(s.to_complex())
        }
    }
}

fn moment_raw(action: Action, z: &ComplexSymMatrix) -> Result<MomentValue> {
    Ok(match action {
        Action::AbelianElliptic => {
            let (r, _) = bounded_resolvents(z)?;
            MomentValue::Scalar(-2.0 * r.trace().re)
        }
        Action::AbelianHyperbolic => {
            let yi = inv_im(z)?;
            MomentValue::Scalar(-4.0 * (yi * z.re().to_dense()).trace())
        }
        Action::Parabolic => MomentValue::Matrix(z.im().inverse()?.scale(-2.0)),
    })
}

/// Moment map of an action: `−2 tr((I − Z Z̄)⁻¹)`, `−4 tr((Im Z)⁻¹ Re Z)` or `−2 (Im Z)⁻¹`.
pub fn moment(action: Action, z: &DomainPoint) -> Result<MomentValue> {
    z.expect_tag(action.domain())?;
    moment_raw(action, z.z())
}

/// `|dμ_X(V) − ω_Z(X#, V)|` with `dμ_X(V)` from central differences.
///
/// Each real coordinate `Re z_jk`, `Im z_jk` (`j <= k`) is differenced separately with step
/// `h·(1 + |coordinate|)`, and the partials are contracted with the coordinates of `V`.
pub fn hamiltonian_residual(gen: &GroupGenerator, z: &DomainPoint, v: &TangentVector, h: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::invalid(format!("step {h:e} outside [1e-6, 1e-3]")));
    }
    let action = gen.action();
    let tag = action.domain();
    z.expect_tag(tag)?;
    check_dims(z, v)?;
    let coords = z.z().real_coords();
    let dirs = v.real_coords();
    let n = z.n();
    let eval = |c: &[f64]| -> Result<f64> {
        let m = ComplexSymMatrix::from_real_coords(n, c)?;
        let p = DomainPoint::new(tag, m).map_err(|_| {
            Error::domain(format!("finite-difference step {h:e} leaves the domain; use a smaller step"))
        })?;
        moment_raw(action, p.z())?.pair(gen)
    };
    let mut derivative = 0.0;
    let mut work = coords.clone();
    for (c, (&x, &d)) in coords.iter().zip(&dirs).enumerate() {
        let step = h * (1.0 + x.abs());
        work[c] = x + step;
        let plus = eval(&work)?;
        work[c] = x - step;
        let minus = eval(&work)?;
        work[c] = x;
        if d != 0.0 {
            derivative += d * (plus - minus) / (2.0 * step);
        }
    }
    let field = induced_field(gen, z)?;
    let exact = kahler_form(tag, z, &field, v)?;
    Ok((derivative - exact).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::random_point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, j: usize, k: usize) -> ComplexSymMatrix {
        let mut m = ComplexSymMatrix::zeros(n);
        m.set(j, k, C64::new(1.0, 0.0));
        m
    }

    #[test]
    fn metric_examples() {
        let o = DomainPoint::origin(2);
        let g = bergman_metric(DomainTag::BoundedDIII, &o, &e(2, 0, 0), &e(2, 0, 0)).unwrap();
        assert_eq!(g, C64::new(1.0, 0.0));
        let b = DomainPoint::siegel_base(3);
        let id = ComplexSymMatrix::identity(3);
        let g = bergman_metric(DomainTag::SiegelS, &b, &id, &id).unwrap();
        assert!((g - C64::new(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kahler_examples() {
        let b = DomainPoint::siegel_base(2);
        let u = ComplexSymMatrix::identity(2);
        let v = ComplexSymMatrix::scaled_identity(2, C64::new(0.0, 1.0));
        assert!((kahler_form(DomainTag::SiegelS, &b, &u, &v).unwrap() - 4.0).abs() < 1e-14);
        assert!(kahler_form(DomainTag::SiegelS, &b, &u, &u).unwrap().abs() < 1e-14);
    }

    #[test]
    fn induced_fields_and_moments() {
        let o = DomainPoint::origin(2);
        assert_eq!(induced_field(&GroupGenerator::AbelianElliptic(1.0), &o).unwrap(), ComplexSymMatrix::zeros(2));
        let b = DomainPoint::siegel_base(2);
        assert_eq!(induced_field(&GroupGenerator::AbelianHyperbolic(0.5), &b).unwrap(), b.z().clone());
        let s = RealSymMatrix::from_packed(2, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(induced_field(&GroupGenerator::Parabolic(s.clone()), &b).unwrap(), s.to_complex());
        assert!(induced_field(&GroupGenerator::AbelianElliptic(1.0), &b).is_err());

        assert_eq!(moment(Action::AbelianElliptic, &o).unwrap(), MomentValue::Scalar(-4.0));
        assert_eq!(moment(Action::AbelianHyperbolic, &b).unwrap(), MomentValue::Scalar(0.0));
        assert_eq!(
            moment(Action::Parabolic, &b).unwrap(),
            MomentValue::Matrix(RealSymMatrix::scaled_identity(2, -2.0))
        );
        assert!(moment(Action::Parabolic, &o).is_err());
    }

    #[test]
    fn hamiltonian_identity_examples() {
        let o = DomainPoint::origin(2);
        let v = ComplexSymMatrix::from_packed(2, vec![C64::new(0.3, -0.1), C64::new(0.2, 0.5), C64::new(-0.4, 0.1)])
            .unwrap();
        let r = hamiltonian_residual(&GroupGenerator::AbelianElliptic(1.0), &o, &v, 1e-4).unwrap();
        assert!(r <= 1e-6, "{r}");
        let b = DomainPoint::siegel_base(2);
        let s = GroupGenerator::Parabolic(RealSymMatrix::from_packed(2, vec![0.5, -1.0, 2.0]).unwrap());
        assert!(hamiltonian_residual(&s, &b, &e(2, 0, 1), 1e-4).unwrap() <= 1e-6);
        assert_eq!(hamiltonian_residual(&s, &b, &ComplexSymMatrix::zeros(2), 1e-4).unwrap(), 0.0);
        assert!(hamiltonian_residual(&s, &b, &v, 1e-2).is_err());
    }

    #[test]
    fn step_leaving_domain_is_reported() {
        let z =
            DomainPoint::new(DomainTag::BoundedDIII, ComplexSymMatrix::diagonal(&[C64::new(0.99995, 0.0)])).unwrap();
        let v = ComplexSymMatrix::identity(1);
        let err = hamiltonian_residual(&GroupGenerator::AbelianElliptic(1.0), &z, &v, 1e-4).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn metric_is_hermitian_positive_and_j_compatible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for tag in [DomainTag::BoundedDIII, DomainTag::SiegelS] {
            for _ in 0..200 {
                let z = random_point(tag, 2, &mut rng);
                let u = random_point(DomainTag::BoundedDIII, 2, &mut rng).into_matrix();
                let v = random_point(DomainTag::BoundedDIII, 2, &mut rng).into_matrix();
                let guv = bergman_metric(tag, &z, &u, &v).unwrap();
                let gvu = bergman_metric(tag, &z, &v, &u).unwrap();
                assert!((guv - gvu.conj()).norm() <= 1e-12 * (1.0 + guv.norm()));
                let guu = bergman_metric(tag, &z, &u, &u).unwrap();
                assert!(guu.re > 0.0 && guu.im.abs() <= 1e-12 * guu.re);
                let i = C64::new(0.0, 1.0);
                let gj = bergman_metric(tag, &z, &u.scale(i), &v.scale(i)).unwrap();
                assert!((gj - guv).norm() <= 1e-12 * (1.0 + guv.norm()));
                let w1 = kahler_form(tag, &z, &u, &v).unwrap();
                let w2 = kahler_form(tag, &z, &v, &u).unwrap();
                assert!((w1 + w2).abs() <= 1e-12 * (1.0 + w1.abs()));
            }
        }
    }
}
