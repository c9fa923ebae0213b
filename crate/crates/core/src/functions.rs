//! Finitely supported real functions on an enumerated ball.
//!
//! Everything is counted against the counting measure. Values outside the
//! ball are zero by construction, so the only lossy step is evaluating a
//! function at a point that the ball does not contain; that is governed by
//! [`BoundaryPolicy`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{check_exponent, Error, Result};
use crate::groups::{Ball, GroupElement};
use crate::numeric::{abs_pow, compensated_sum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Fail when a result would need points outside the ball.
    #[default]
    Strict,
    /// Drop such points and raise the `truncated` flag.
    Truncate,
}

#[derive(Clone, Debug)]
pub struct GroupFunction {
    ball: Arc<Ball>,
    values: BTreeMap<usize, f64>,
}

/// A function together with a flag telling whether part of it was dropped
/// at the ball boundary.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub function: GroupFunction,
    pub truncated: bool,
}

impl PartialEq for GroupFunction {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ball, &other.ball) && self.values == other.values
    }
}

impl GroupFunction {
    pub fn zero(ball: Arc<Ball>) -> Self {
        GroupFunction { ball, values: BTreeMap::new() }
    }

    pub fn from_values<I: IntoIterator<Item = (usize, f64)>>(ball: Arc<Ball>, values: I) -> Result<Self> {
        let mut f = Self::zero(ball);
        for (i, v) in values {
            if i >= f.ball.len() {
                return Err(Error::usage(format!("index {i} outside a ball of {} elements", f.ball.len())));
            }
            if !v.is_finite() {
                return Err(Error::usage(format!("non-finite value at index {i}")));
            }
            f.add_at(i, v);
        }
        Ok(f)
    }

    pub fn indicator<I: IntoIterator<Item = usize>>(ball: Arc<Ball>, set: I) -> Result<Self> {
        Self::from_values(ball, set.into_iter().map(|i| (i, 1.0)))
    }

    /// Dirac mass at the identity.
    pub fn delta_identity(ball: Arc<Ball>) -> Self {
        let mut f = Self::zero(ball);
        f.set(0, 1.0);
        f
    }

    pub fn ball(&self) -> &Arc<Ball> {
        &self.ball
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values.get(&i).copied().unwrap_or(0.0)
    }

    /// Value at an arbitrary group element; zero off the ball.
    pub fn value_at(&self, g: &GroupElement) -> f64 {
        self.ball.index_of(g).map_or(0.0, |i| self.get(i))
    }

    pub fn set(&mut self, i: usize, v: f64) {
        assert!(i < self.ball.len(), "index outside the ball");
        if v == 0.0 {
            self.values.remove(&i);
        } else {
            self.values.insert(i, v);
        }
    }

    pub fn add_at(&mut self, i: usize, v: f64) {
        let nv = self.get(i) + v;
        self.set(i, nv);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&i, &v)| (i, v))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest word length in the support (0 for the zero function).
    pub fn support_radius(&self) -> u32 {
        self.support().map(|i| self.ball.length(i)).max().unwrap_or(0)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let mut out = Self::zero(self.ball.clone());
        for (i, v) in self.iter() {
            out.set(i, f(v));
        }
        out
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        compensated_sum(self.values.values().copied())
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(self.lp_norm_pow(p).powf(1.0 / p))
    }

    /// `Σ|φ|^p`.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        compensated_sum(self.values.values().map(|&v| abs_pow(v, p)))
    }

    /// `|∇̃φ|(g) = max_s |φ(sg) − φ(g)|` on the support enlarged by one step.
    pub fn gradient_sup(&self, policy: BoundaryPolicy) -> Result<Evaluated> {
        let ball = &self.ball;
        let ngen = ball.group().num_generators();
        let mut candidates: BTreeMap<usize, ()> = BTreeMap::new();
        let mut truncated = false;
        for h in self.support() {
            for s in 0..ngen {
                match ball.left_mul(h, s) {
                    Some(g) => {
                        candidates.insert(g, ());
                    }
                    None => truncated = true,
                }
            }
        }
        if truncated && policy == BoundaryPolicy::Strict {
            return Err(Error::precision(
                "gradient support touches the ball boundary; enlarge the ball or allow truncation",
            ));
        }
        let mut out = Self::zero(ball.clone());
        for &g in candidates.keys() {
            let fg = self.get(g);
            let mut best = 0.0f64;
            for s in 0..ngen {
                let fsg = ball.left_mul(g, s).map_or(0.0, |j| self.get(j));
                best = best.max((fsg - fg).abs());
            }
            out.set(g, best);
        }
        Ok(Evaluated { function: out, truncated })
    }

    /// `λ(g)φ = φ(g⁻¹ ·)`, whose support is `g·supp(φ)`.
    pub fn translate_left(&self, g: &GroupElement, policy: BoundaryPolicy) -> Result<Evaluated> {
        let group = self.ball.group();
        let mut out = Self::zero(self.ball.clone());
        let mut truncated = false;
        for (h, v) in self.iter() {
            let gh = group.multiply(g, self.ball.element(h))?;
            match self.ball.index_of(&gh) {
                Some(j) => out.set(j, v),
                None => truncated = true,
            }
        }
        finish(out, truncated, policy, "left translate")
    }

    /// `φ∘R_h = φ(· h)`, whose support is `supp(φ)·h⁻¹`.
    pub fn translate_right(&self, h: &GroupElement, policy: BoundaryPolicy) -> Result<Evaluated> {
        let group = self.ball.group();
        let h_inv = group.inverse(h)?;
        let mut out = Self::zero(self.ball.clone());
        let mut truncated = false;
        for (y, v) in self.iter() {
            let x = group.multiply(self.ball.element(y), &h_inv)?;
            match self.ball.index_of(&x) {
                Some(j) => out.set(j, v),
                None => truncated = true,
            }
        }
        finish(out, truncated, policy, "right translate")
    }

    /// `‖φ − λ(g)φ‖_p^p` for any `g` of the group; never truncates since
    /// translated mass leaving the ball is disjoint from `supp φ`.
    pub fn translation_defect_pow(&self, g: &GroupElement, p: f64) -> Result<f64> {
        check_exponent(p)?;
        let group = self.ball.group();
        let mut moved: HashMap<usize, f64> = HashMap::new();
        let mut terms = Vec::with_capacity(2 * self.support_len());
        for (h, v) in self.iter() {
            let gh = group.multiply(g, self.ball.element(h))?;
            match self.ball.index_of(&gh) {
                Some(j) if self.values.contains_key(&j) => {
                    moved.insert(j, v);
                }
                _ => terms.push(abs_pow(v, p)),
            }
        }
        for (x, v) in self.iter() {
            let w = moved.get(&x).copied().unwrap_or(0.0);
            terms.push(abs_pow(v - w, p));
        }
        Ok(compensated_sum(terms))
    }

    pub fn translation_defect(&self, g: &GroupElement, p: f64) -> Result<f64> {
        Ok(self.translation_defect_pow(g, p)?.powf(1.0 / p))
    }

    /// `Var_p(φ, t) = inf_{|g| ≥ t} ‖φ − λ(g)φ‖_p`.
    ///
    /// Elements longer than twice the support radius move the support off
    /// itself and all give `2^{1/p}‖φ‖_p`; shorter ones are enumerated from
    /// the ball, which must therefore reach that radius.
    pub fn variation(&self, t: f64, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if !(t >= 0.0) {
            return Err(Error::usage(format!("variation scale must be >= 0, got {t}")));
        }
        let far = 2f64.powf(1.0 / p) * self.lp_norm(p)?;
        let t_min = t.ceil() as u64;
        let reach = 2 * self.support_radius() as u64;
        if t_min > reach {
            return Ok(far);
        }
        if (self.ball.radius() as u64) < reach {
            return Err(Error::resource(format!(
                "variation needs a ball of radius {reach}, have {}",
                self.ball.radius()
            )));
        }
        let mut best = far;
        for k in t_min..=reach {
            for g in self.ball.sphere(k as u32) {
                let d = self.translation_defect(self.ball.element(g), p)?;
                best = best.min(d);
            }
        }
        Ok(best)
    }

    /// Sum of `|φ(sg) − φ(g)|²` weighted by `kernel(s)` over all `g` and
    /// all `s` in the kernel's support.
    pub fn weighted_dirichlet_energy(&self, kernel: &GroupFunction) -> Result<f64> {
        let group = self.ball.group();
        let mut terms = Vec::new();
        for (si, w) in kernel.iter() {
            let s = kernel.ball.element(si);
            let s_inv = group.inverse(s)?;
            for (g, v) in self.iter() {
                let sg = group.multiply(s, self.ball.element(g))?;
                terms.push(w * (self.value_at(&sg) - v).powi(2));
                let pre = group.multiply(&s_inv, self.ball.element(g))?;
                if self.value_at(&pre) == 0.0 {
                    // g' = s⁻¹g lies off the support, and φ(s g') = φ(g).
                    terms.push(w * v * v);
                }
            }
        }
        Ok(compensated_sum(terms))
    }

    /// `|∇̃φ|₂(g) = (Σ_s kernel(s)|φ(sg) − φ(g)|²)^{1/2}`.
    pub fn gradient_l2(&self, kernel: &GroupFunction, policy: BoundaryPolicy) -> Result<Evaluated> {
        let group = self.ball.group();
        let mut acc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut truncated = false;
        for (si, w) in kernel.iter() {
            let s = kernel.ball.element(si);
            let s_inv = group.inverse(s)?;
            let mut points: Vec<usize> = self.support().collect();
            for g in self.support() {
                let pre = group.multiply(&s_inv, self.ball.element(g))?;
                match self.ball.index_of(&pre) {
                    Some(j) if !self.values.contains_key(&j) => points.push(j),
                    Some(_) => {}
                    None => truncated = true,
                }
            }
            for g in points {
                let sg = group.multiply(s, self.ball.element(g))?;
                let d = self.value_at(&sg) - self.get(g);
                acc.entry(g).or_default().push(w * d * d);
            }
        }
        let mut out = Self::zero(self.ball.clone());
        for (g, terms) in acc {
            out.set(g, compensated_sum(terms).sqrt());
        }
        finish(out, truncated, policy, "l2 gradient")
    }
}

fn finish(out: GroupFunction, truncated: bool, policy: BoundaryPolicy, what: &str) -> Result<Evaluated> {
    if truncated && policy == BoundaryPolicy::Strict {
        return Err(Error::precision(format!("{what} leaves the enumerated ball")));
    }
    Ok(Evaluated { function: out, truncated })
}

/// `(ν∗φ)(x) = Σ_g ν(g) φ(g⁻¹x)`.
///
/// Generators of the marked group go through the left-multiplication table;
/// other elements of `supp ν` use the group law.
pub fn convolve(nu: &GroupFunction, phi: &GroupFunction, policy: BoundaryPolicy) -> Result<Evaluated> {
    if !Arc::ptr_eq(nu.ball(), phi.ball()) && nu.ball().group() != phi.ball().group() {
        return Err(Error::usage("convolution of functions on different groups"));
    }
    let ball = phi.ball();
    let group = ball.group();
    let gen_of: HashMap<&GroupElement, usize> =
        group.generators().iter().enumerate().map(|(s, g)| (g, s)).collect();
    let mut acc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut truncated = false;
    for (gi, w) in nu.iter() {
        let g = nu.ball().element(gi);
        let generator = gen_of.get(g).copied();
        for (h, v) in phi.iter() {
            let target = match generator {
                Some(s) => ball.left_mul(h, s),
                None => ball.index_of(&group.multiply_unchecked(g, ball.element(h))),
            };
            match target {
                Some(x) => acc.entry(x).or_default().push(w * v),
                None => truncated = true,
            }
        }
    }
    let mut out = GroupFunction::zero(ball.clone());
    for (x, terms) in acc {
        out.set(x, compensated_sum(terms));
    }
    finish(out, truncated, policy, "convolution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::MarkedGroup;

    fn z_ball(r: u32) -> Arc<Ball> {
        Arc::new(Ball::enumerate(&MarkedGroup::int_lattice(1).unwrap(), r).unwrap())
    }

    fn at(ball: &Ball, x: i64) -> usize {
        ball.index_of(&GroupElement::Int(vec![x])).unwrap()
    }

    #[test]
    fn norms() {
        let b = z_ball(3);
        let d = GroupFunction::delta_identity(b.clone());
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert!((d.lp_norm(p).unwrap() - 1.0).abs() < 1e-15);
        }
        let f = GroupFunction::from_values(b.clone(), [(at(&b, 1), 3.0), (at(&b, -1), 4.0)]).unwrap();
        assert!((f.lp_norm(2.0).unwrap() - 5.0).abs() < 1e-14);
        let g = GroupFunction::indicator(b.clone(), [0, 1, 2]).unwrap();
        assert_eq!(g.lp_norm(1.0).unwrap(), 3.0);
        assert!(matches!(g.lp_norm(0.5), Err(Error::Usage(_))));
    }

    #[test]
    fn gradient_of_delta() {
        let b = z_ball(3);
        let d = GroupFunction::delta_identity(b.clone());
        let grad = d.gradient_sup(BoundaryPolicy::Strict).unwrap();
        assert!(!grad.truncated);
        for x in -1..=1 {
            assert_eq!(grad.function.get(at(&b, x)), 1.0);
        }
        assert_eq!(grad.function.support_len(), 3);
        for p in [1.0, 2.0, 3.0] {
            let n = grad.function.lp_norm(p).unwrap();
            assert!((n - 3f64.powf(1.0 / p)).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_function_has_no_interior_gradient() {
        let b = z_ball(6);
        let f = GroupFunction::from_values(b.clone(), (0..b.len()).map(|i| (i, 2.0))).unwrap();
        assert!(matches!(f.gradient_sup(BoundaryPolicy::Strict), Err(Error::Precision(_))));
        let grad = f.gradient_sup(BoundaryPolicy::Truncate).unwrap();
        assert!(grad.truncated);
        for i in 0..b.volume(5) {
            assert_eq!(grad.function.get(i), 0.0);
        }
    }

    #[test]
    fn variation_on_an_interval() {
        let b = z_ball(18);
        let f = GroupFunction::indicator(b.clone(), (0..=9).map(|x| at(&b, x))).unwrap();
        assert_eq!(f.variation(0.0, 1.0).unwrap(), 0.0);
        assert!((f.variation(3.0, 1.0).unwrap() - 6.0).abs() < 1e-12);
        let far = 2f64.sqrt() * f.lp_norm(2.0).unwrap();
        assert!((f.variation(19.0, 2.0).unwrap() - far).abs() < 1e-12);
        assert!(f.variation(-1.0, 1.0).is_err());
    }

    #[test]
    fn lazy_walk_step() {
        let b = z_ball(3);
        let nu = GroupFunction::from_values(
            b.clone(),
            [(0, 0.5), (at(&b, 1), 0.25), (at(&b, -1), 0.25)],
        )
        .unwrap();
        let d = GroupFunction::delta_identity(b.clone());
        let out = convolve(&nu, &d, BoundaryPolicy::Strict).unwrap().function;
        assert_eq!(out.get(at(&b, -1)), 0.25);
        assert_eq!(out.get(0), 0.5);
        assert_eq!(out.get(at(&b, 1)), 0.25);
        let id = convolve(&d, &nu, BoundaryPolicy::Strict).unwrap().function;
        assert_eq!(id, nu);
    }
}
