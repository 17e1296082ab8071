//! Deterministic quadrature: 1-D Gauss rules, graded and composite variants,
//! tensor rules on boxes and on the cone of positive definite matrices.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussHermite, GaussLaguerre, GaussLegendre};

use crate::error::{Error, Result};
use crate::linalg::{packed_len, RealSymMatrix, C64};

/// Default cap on the number of tensor nodes evaluated by [`integrate_box`].
pub const DEFAULT_BOX_BUDGET: u64 = 1 << 26;

/// A 1-D rule: `∫ g(x) w(x) dx ≈ Σ weights[i] · g(nodes[i])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn nonzero(order: usize) -> Result<NonZeroUsize> {
    NonZeroUsize::new(order).ok_or_else(|| Error::invalid("quadrature order must be positive"))
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gauss–Legendre on `[a, b]`.
    pub fn legendre(order: usize, a: f64, b: f64) -> Result<Rule> {
        let rule = GaussLegendre::new(nonzero(order)?);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let (nodes, weights) = rule.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).unzip();
        Ok(Rule { nodes, weights })
    }

    /// Generalized Gauss–Laguerre for the weight `t^alpha e^{-t}` on `(0, ∞)`.
    pub fn laguerre(order: usize, alpha: f64) -> Result<Rule> {
        let a = FiniteAboveNegOneF64::new(alpha)
            .ok_or_else(|| Error::invalid(format!("Laguerre exponent {alpha} must be finite and > -1")))?;
        let rule = GaussLaguerre::new(nonzero(order)?, a);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Ok(Rule { nodes, weights })
    }

    /// Gauss–Hermite for the weight `e^{-x²}` on ℝ.
    pub fn hermite(order: usize) -> Result<Rule> {
        let rule = GaussHermite::new(nonzero(order)?);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Ok(Rule { nodes, weights })
    }

    /// Gauss–Legendre on `[a, b]` after the substitution `x = a + (b-a)(1 - (1-s)^m)`,
    /// which clusters nodes at `b` and absorbs algebraic endpoint singularities there.
    pub fn graded_legendre(order: usize, a: f64, b: f64, m: u32) -> Result<Rule> {
        let base = Rule::legendre(order, 0.0, 1.0)?;
        let len = b - a;
        let mf = f64::from(m);
        let (nodes, weights) = base
            .nodes
            .iter()
            .zip(&base.weights)
            .map(|(&s, &w)| {
                let u = 1.0 - s;
                (a + len * (1.0 - u.powi(m as i32)), w * len * mf * u.powi(m as i32 - 1))
            })
            .unzip();
        Ok(Rule { nodes, weights })
    }

    /// Equal-weight rule on `[0, 2π)` normalized to total mass 1.
    ///
    /// Exact for trigonometric polynomials of degree below `points`.
    pub fn periodic_average(points: usize) -> Result<Rule> {
        if points == 0 {
            return Err(Error::invalid("periodic rule needs at least one point"));
        }
        let h = std::f64::consts::TAU / points as f64;
        Ok(Rule { nodes: (0..points).map(|k| k as f64 * h).collect(), weights: vec![1.0 / points as f64; points] })
    }

    /// Composite Gauss–Legendre rule for the weight `t^alpha e^{-t}` on `(0, ∞)`.
    ///
    /// Panels have width `min(1, 2π/freq)`: one period of an `e^{i·freq·t}` factor, which
    /// panels of order 12 or more resolve to rounding level. The first panel is refined geometrically towards 0 for the `t^alpha` factor.
    /// The tail beyond `2·alpha + 45` is dropped.
    pub fn composite_laguerre(panel_order: usize, alpha: f64, freq: f64) -> Result<Rule> {
        let width = if freq > 0.0 { (2.0 * std::f64::consts::PI / freq).min(1.0) } else { 1.0 };
        Self::panels_laguerre(panel_order, alpha, width, 18)
    }

    /// [`Rule::composite_laguerre`] with `levels` geometric panels toward 0 and uniform
    /// panels no wider than `max_width` or half an oscillation period.
    pub fn graded_laguerre(panel_order: usize, alpha: f64, freq: f64, levels: u32, max_width: f64) -> Result<Rule> {
        if !(max_width > 0.0) {
            return Err(Error::invalid("panel width must be positive"));
        }
        let width = if freq > 0.0 { (std::f64::consts::PI / freq).min(max_width) } else { max_width };
        Self::panels_laguerre(panel_order, alpha, width, levels)
    }

    fn panels_laguerre(panel_order: usize, alpha: f64, width: f64, levels: u32) -> Result<Rule> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("exponent {alpha} must be finite and > -1")));
        }
        if levels == 0 {
            return Err(Error::invalid("level count must be positive"));
        }
        let cutoff = 2.0 * alpha.max(0.0) + 45.0;
        let mut edges = vec![0.0];
        let ratio = 0.15_f64;
        for k in (1..=levels as i32).rev() {
            edges.push(width * ratio.powi(k));
        }
        let mut x = width;
        while x < cutoff {
            edges.push(x);
            x += width;
        }
        edges.push(x);

        let base = Rule::legendre(panel_order, 0.0, 1.0)?;
        let mut nodes = Vec::with_capacity(base.len() * edges.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for (&s, &w) in base.nodes.iter().zip(&base.weights) {
                let t = a + (b - a) * s;
                nodes.push(t);
                weights.push(w * (b - a) * (alpha * t.ln() - t).exp());
            }
        }
        Ok(Rule { nodes, weights })
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_complex(&self, mut f: impl FnMut(f64) -> C64) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

/// Visits every node of the tensor product of `rules`, passing the point and its weight.
pub fn for_each_tensor_node(rules: &[Rule], mut visit: impl FnMut(&[f64], f64)) {
    let dim = rules.len();
    if rules.iter().any(Rule::is_empty) {
        return;
    }
    let mut idx = vec![0usize; dim];
    let mut point: Vec<f64> = rules.iter().map(|r| r.nodes[0]).collect();
    loop {
        let w: f64 = rules.iter().zip(&idx).map(|(r, &i)| r.weights[i]).product();
        visit(&point, w);
        let mut axis = 0;
        loop {
            if axis == dim {
                return;
            }
            idx[axis] += 1;
            if idx[axis] < rules[axis].len() {
                point[axis] = rules[axis].nodes[idx[axis]];
                break;
            }
            idx[axis] = 0;
            point[axis] = rules[axis].nodes[0];
            axis += 1;
        }
    }
}

fn tensor_size(rules: &[Rule]) -> u64 {
    rules.iter().map(|r| r.len() as u64).fold(1u64, u64::saturating_mul)
}

/// Tensor Gauss–Legendre integral over `∏ [lower_i, upper_i]` with `order` nodes per axis.
pub fn integrate_box<F>(f: F, dim: usize, lower: &[f64], upper: &[f64], order: usize) -> Result<C64>
where
    F: FnMut(&[f64]) -> C64,
{
    integrate_box_with_budget(f, dim, lower, upper, order, DEFAULT_BOX_BUDGET)
}

/// As [`integrate_box`], failing when `order^dim` exceeds `budget`.
pub fn integrate_box_with_budget<F>(
    mut f: F,
    dim: usize,
    lower: &[f64],
    upper: &[f64],
    order: usize,
    budget: u64,
) -> Result<C64>
where
    F: FnMut(&[f64]) -> C64,
{
    if order < 2 {
        return Err(Error::invalid(format!("box quadrature order {order} is below 2")));
    }
    if dim == 0 || lower.len() != dim || upper.len() != dim {
        return Err(Error::invalid("box bounds must have one entry per dimension"));
    }
    if lower.iter().chain(upper).any(|x| !x.is_finite()) {
        return Err(Error::invalid("box bounds must be finite"));
    }
    let nodes = (order as u64).checked_pow(dim as u32).unwrap_or(u64::MAX);
    if nodes > budget {
        return Err(Error::Budget(format!("{order}^{dim} = {nodes} tensor nodes exceed the budget of {budget}")));
    }
    let rules: Vec<Rule> =
        lower.iter().zip(upper).map(|(&a, &b)| Rule::legendre(order, a, b)).collect::<Result<_>>()?;
    let mut acc = C64::new(0.0, 0.0);
    for_each_tensor_node(&rules, |x, w| acc += f(x) * w);
    Ok(acc)
}

/// How the diagonal (radial) directions of a [`ConeRule`] are discretized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radial {
    /// Generalized Gauss–Laguerre with the given order.
    Laguerre { order: usize },
    /// [`Rule::composite_laguerre`] with the given panel order, resolving oscillation `freq`.
    Composite { panel_order: usize, freq: f64 },
    /// [`Rule::graded_laguerre`].
    Graded { panel_order: usize, freq: f64, levels: u32, max_width: f64 },
}

/// Nodes and weights for `∫_Ω g(W) e^{-tr W} det(W)^p dW` over positive definite `W`.
///
/// `dW` is Lebesgue measure for the trace inner product on symmetric matrices
/// (off-diagonal entries carry a factor √2 relative to packed coordinates), so
/// the rule integrates `g ≡ 1` to the multigamma value `Γ_Ω(p + (n+1)/2)`.
/// The chart is `W = L Lᵀ` with `t_j = L_jj²` on the radial rules and
/// Gauss–Hermite in the strictly lower entries of `L`.
#[derive(Clone, Debug)]
pub struct ConeRule {
    pub points: Vec<RealSymMatrix>,
    pub weights: Vec<f64>,
}

impl ConeRule {
    pub fn new(n: usize, p: f64, radial: Radial, hermite_order: usize, budget: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let mut rules = Vec::with_capacity(packed_len(n));
        for j in 0..n {
            let alpha = p + (n - 1 - j) as f64 / 2.0;
            rules.push(match radial {
                Radial::Laguerre { order } => Rule::laguerre(order, alpha)?,
                Radial::Composite { panel_order, freq } => Rule::composite_laguerre(panel_order, alpha, freq)?,
                Radial::Graded { panel_order, freq, levels, max_width } => {
                    Rule::graded_laguerre(panel_order, alpha, freq, levels, max_width)?
                }
            });
        }
        let off = n * (n - 1) / 2;
        if off > 0 {
            let h = Rule::hermite(hermite_order)?;
            rules.extend(std::iter::repeat_n(h, off));
        }
        let size = tensor_size(&rules);
        if size > budget {
            return Err(Error::Budget(format!("cone rule needs {size} nodes, budget is {budget}")));
        }
        let scale = 2f64.powf(off as f64 / 2.0);
        let mut points = Vec::with_capacity(size as usize);
        let mut weights = Vec::with_capacity(size as usize);
        let mut l = nalgebra::DMatrix::<f64>::zeros(n, n);
        for_each_tensor_node(&rules, |x, w| {
            for j in 0..n {
                l[(j, j)] = x[j].sqrt();
            }
            let mut c = n;
            for i in 1..n {
                for j in 0..i {
                    l[(i, j)] = x[c];
                    c += 1;
                }
            }
            points.push(RealSymMatrix::from_dense_upper(&(&l * l.transpose())));
            weights.push(w * scale);
        });
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
