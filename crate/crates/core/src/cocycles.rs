//! 1-cocycles into sparse ℓ^p vectors, their compression, dyadic direct
//! sums, the Z≀Z lamp cocycle and the Gaussian kernel test.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embeddings::{CompressionCurve, CompressionModulus};
use crate::error::{check_exponent, Error, Result};
use crate::functions::GroupFunction;
use crate::groups::{
    for_each_wreath_with_shift, theta_wreath, tour_length, Ball, Family, GroupElement, MarkedGroup,
    WreathElement,
};
use crate::isoperimetry::{lamplighter_folner_pair, pair_test_function, BoxFunction, Witness};
use crate::numeric::{abs_pow, compensated_sum, log_log_slope, romberg};

/// Largest support a box potential may have when its image is materialised.
const BOX_IMAGE_CAP: f64 = 2e6;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    /// Site of `ℓ^p(Z)`.
    Site(i64),
    /// Group element, for left-regular coordinates.
    Elem(GroupElement),
}

/// Coordinate of a direct sum: block path, then the key inside the block.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub path: Vec<u16>,
    pub key: Key,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub entries: BTreeMap<Coord, f64>,
}

impl SparseVector {
    fn add(&mut self, c: Coord, v: f64) {
        if v == 0.0 {
            return;
        }
        match self.entries.entry(c) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += v;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(o) => {
                o.insert(v);
            }
        }
    }

    fn add_key(&mut self, k: Key, v: f64) {
        self.add(Coord { path: Vec::new(), key: k }, v);
    }

    pub fn norm_pow(&self, p: f64) -> f64 {
        compensated_sum(self.entries.values().map(|&v| abs_pow(v, p)))
    }

    pub fn norm(&self, p: f64) -> f64 {
        self.norm_pow(p).powf(1.0 / p)
    }

    pub fn sup(&self) -> f64 {
        self.entries.values().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &SparseVector) -> SparseVector {
        let mut out = self.clone();
        for (k, &v) in &other.entries {
            out.add(k.clone(), c * v);
        }
        out
    }

    fn tagged(self, block: u16, w: f64) -> SparseVector {
        let mut out = SparseVector::default();
        for (mut c, v) in self.entries {
            c.path.insert(0, block);
            out.add(c, w * v);
        }
        out
    }

    /// Entries under block `block`, with that block stripped.
    fn block(&self, block: u16) -> SparseVector {
        let mut out = SparseVector::default();
        for (c, &v) in &self.entries {
            if c.path.first() == Some(&block) {
                out.add(Coord { path: c.path[1..].to_vec(), key: c.key.clone() }, v);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum Potential {
    Explicit(GroupFunction),
    /// Box function on `C_m≀Z`, evaluated in closed form.
    LampBox(BoxFunction),
}

#[derive(Clone, Debug)]
pub enum Cocycle {
    Zero(MarkedGroup),
    /// `b(g) = φ − λ(g)φ`.
    Variational(Potential),
    /// `Z≀Z → ℓ^p(Z)`, `b(k, u)` the lamp configuration in absolute
    /// positions; the action shifts by the cursor.
    LampConfig,
    /// `b(g) = c(θ(g))` for `θ: Z≀Z → C_2≀Z`.
    Pullback(Box<Cocycle>),
    /// Block-disjoint `⊕ w_i b_i`.
    ScaledSum(Vec<(f64, Cocycle)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub vector: SparseVector,
    pub norm: f64,
}

impl Cocycle {
    pub fn pullback(inner: Cocycle) -> Result<Self> {
        if inner.group()? != MarkedGroup::lamplighter(2)? {
            return Err(Error::usage("pullback needs a cocycle on C2wrZ"));
        }
        Ok(Cocycle::Pullback(Box::new(inner)))
    }

    pub fn scaled_sum(blocks: Vec<(f64, Cocycle)>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::usage("empty direct sum"));
        };
        let g = first.1.group()?;
        for (i, (w, b)) in blocks.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::usage(format!("block {i}: weight {w} must be finite and >= 0")));
            }
            if b.group()? != g {
                return Err(Error::usage(format!("block {i} lives on {}, not {}", b.group()?.name(), g.name())));
            }
        }
        if blocks.len() > u16::MAX as usize {
            return Err(Error::resource("too many blocks"));
        }
        Ok(Cocycle::ScaledSum(blocks))
    }

    /// Domain of the cocycle.
    pub fn group(&self) -> Result<MarkedGroup> {
        match self {
            Cocycle::Zero(g) => Ok(g.clone()),
            Cocycle::Variational(Potential::Explicit(phi)) => Ok(phi.ball().group().clone()),
            Cocycle::Variational(Potential::LampBox(f)) => MarkedGroup::lamplighter(f.m),
            Cocycle::LampConfig | Cocycle::Pullback(_) => Ok(MarkedGroup::wreath_z()),
            Cocycle::ScaledSum(blocks) => blocks[0].1.group(),
        }
    }

    fn check(&self, g: &GroupElement) -> Result<MarkedGroup> {
        let group = self.group()?;
        if !group.contains(g) {
            return Err(Error::usage(format!("{g} is not an element of {}", group.name())));
        }
        Ok(group)
    }

    /// `‖b(g)‖_p^p`.
    pub fn norm_pow(&self, g: &GroupElement, p: f64) -> Result<f64> {
        check_exponent(p)?;
        self.check(g)?;
        Ok(match g {
            GroupElement::Wreath(w) if !matches!(self, Cocycle::Variational(Potential::Explicit(_))) => {
                self.norm_pow_wreath(w, p)
            }
            _ => self.norm_pow_any(g, p)?,
        })
    }

    pub fn norm(&self, g: &GroupElement, p: f64) -> Result<f64> {
        Ok(self.norm_pow(g, p)?.powf(1.0 / p))
    }

    fn norm_pow_any(&self, g: &GroupElement, p: f64) -> Result<f64> {
        match self {
            Cocycle::Zero(_) => Ok(0.0),
            Cocycle::Variational(Potential::Explicit(phi)) => phi.translation_defect_pow(g, p),
            Cocycle::ScaledSum(blocks) => {
                let mut terms = Vec::with_capacity(blocks.len());
                for (w, b) in blocks {
                    terms.push(abs_pow(*w, p) * b.norm_pow_any(g, p)?);
                }
                Ok(compensated_sum(terms))
            }
            _ => match g {
                GroupElement::Wreath(w) => Ok(self.norm_pow_wreath(w, p)),
                _ => Err(Error::usage(format!("{g} is not a wreath element"))),
            },
        }
    }

    /// Allocation-light path used when streaming large wreath balls.
    fn norm_pow_wreath(&self, w: &WreathElement, p: f64) -> f64 {
        match self {
            Cocycle::Zero(_) => 0.0,
            Cocycle::LampConfig => compensated_sum(w.lamps.iter().map(|&(_, v)| abs_pow(v as f64, p))),
            Cocycle::Pullback(inner) => inner.norm_pow_wreath(&theta_wreath(w), p),
            Cocycle::Variational(Potential::LampBox(f)) => box_defect_pow(f, w, p),
            Cocycle::Variational(Potential::Explicit(phi)) => phi
                .translation_defect_pow(&GroupElement::Wreath(w.clone()), p)
                .unwrap_or(f64::NAN),
            Cocycle::ScaledSum(blocks) => {
                compensated_sum(blocks.iter().map(|(c, b)| abs_pow(*c, p) * b.norm_pow_wreath(w, p)))
            }
        }
    }

    /// Exact sparse image `b(g)` and its norm.
    pub fn evaluate(&self, g: &GroupElement, p: f64) -> Result<Evaluation> {
        check_exponent(p)?;
        self.check(g)?;
        let vector = self.image(g)?;
        let norm = vector.norm(p);
        Ok(Evaluation { vector, norm })
    }

    fn image(&self, g: &GroupElement) -> Result<SparseVector> {
        let mut out = SparseVector::default();
        match self {
            Cocycle::Zero(_) => {}
            Cocycle::Variational(pot) => {
                let group = self.group()?;
                for (y, v) in potential_support(pot)? {
                    let gy = group.multiply(g, &y)?;
                    out.add_key(Key::Elem(y), v);
                    out.add_key(Key::Elem(gy), -v);
                }
            }
            Cocycle::LampConfig => {
                let w = wreath(g)?;
                for (x, v) in w.absolute_lamps() {
                    out.add_key(Key::Site(x), v as f64);
                }
            }
            Cocycle::Pullback(inner) => {
                out = inner.image(&GroupElement::Wreath(theta_wreath(wreath(g)?)))?;
            }
            Cocycle::ScaledSum(blocks) => {
                for (i, (w, b)) in blocks.iter().enumerate() {
                    for (c, v) in b.image(g)?.tagged(i as u16, *w).entries {
                        out.add(c, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The linear part `π(g)` applied to `v`.
    pub fn act(&self, g: &GroupElement, v: &SparseVector) -> Result<SparseVector> {
        let mut out = SparseVector::default();
        match self {
            Cocycle::Zero(_) => out = v.clone(),
            Cocycle::Variational(_) => {
                let group = self.group()?;
                for (c, &x) in &v.entries {
                    let key = match &c.key {
                        Key::Elem(y) => Key::Elem(group.multiply(g, y)?),
                        k => k.clone(),
                    };
                    out.add(Coord { path: c.path.clone(), key }, x);
                }
            }
            Cocycle::LampConfig => {
                let k = wreath(g)?.shift;
                for (c, &x) in &v.entries {
                    let key = match c.key {
                        Key::Site(y) => Key::Site(y + k),
                        ref other => other.clone(),
                    };
                    out.add(Coord { path: c.path.clone(), key }, x);
                }
            }
            Cocycle::Pullback(inner) => {
                out = inner.act(&GroupElement::Wreath(theta_wreath(wreath(g)?)), v)?;
            }
            Cocycle::ScaledSum(blocks) => {
                for (i, (_, b)) in blocks.iter().enumerate() {
                    for (c, x) in b.act(g, &v.block(i as u16))?.tagged(i as u16, 1.0).entries {
                        out.add(c, x);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sup-norm of `b(gh) − b(g) − π(g)b(h)`, relative to `max(1, ‖b(gh)‖_∞)`.
    pub fn identity_defect(&self, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        let group = self.check(g)?;
        self.check(h)?;
        let gh = group.multiply(g, h)?;
        let lhs = self.image(&gh)?;
        let rhs = self.image(g)?.axpy(1.0, &self.act(g, &self.image(h)?)?);
        let diff = lhs.axpy(-1.0, &rhs);
        Ok(diff.sup() / lhs.sup().max(1.0))
    }

    /// `max_s ‖b(s)‖_p` over the generators.
    pub fn generator_norm_max(&self, p: f64) -> Result<f64> {
        let group = self.group()?;
        let mut best: f64 = 0.0;
        for s in group.generators() {
            best = best.max(self.norm(s, p)?);
        }
        Ok(best)
    }

    /// `b / max_s ‖b(s)‖_p`.
    pub fn normalized(self, p: f64) -> Result<Cocycle> {
        let c = self.generator_norm_max(p)?;
        if c == 0.0 {
            return Err(Error::usage("cannot normalise a cocycle vanishing on the generators"));
        }
        Cocycle::scaled_sum(vec![(1.0 / c, self)])
    }
}

fn wreath(g: &GroupElement) -> Result<&WreathElement> {
    g.as_wreath().ok_or_else(|| Error::usage(format!("{g} is not a wreath element")))
}

fn potential_support(pot: &Potential) -> Result<Vec<(GroupElement, f64)>> {
    match pot {
        Potential::Explicit(phi) => Ok(phi.iter().map(|(i, v)| (phi.ball().element(i).clone(), v)).collect()),
        Potential::LampBox(f) => {
            let len = (f.w_hi - f.w_lo + 1) as u32;
            let configs = (f.m as f64).powi(len as i32);
            if configs * f.psi.len() as f64 > BOX_IMAGE_CAP {
                return Err(Error::resource(format!(
                    "box potential has {} support points, above the cap {BOX_IMAGE_CAP}",
                    configs * f.psi.len() as f64
                )));
            }
            let mut out = Vec::new();
            let mut digits = vec![0i64; len as usize];
            loop {
                let lamps: Vec<(i64, i64)> = digits
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d != 0)
                    .map(|(i, &d)| (f.w_lo + i as i64, d))
                    .collect();
                for (i, &v) in f.psi.iter().enumerate() {
                    if v != 0.0 {
                        let w = WreathElement { shift: f.k0 + i as i64, lamps: lamps.clone() };
                        out.push((GroupElement::Wreath(w), v));
                    }
                }
                // Odometer over the window configurations.
                let mut i = 0;
                loop {
                    if i == digits.len() {
                        return Ok(out);
                    }
                    digits[i] += 1;
                    if digits[i] < f.m as i64 {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
            }
        }
    }
}

/// `‖φ − λ(h)φ‖_p^p` for a box function `φ(k, u) = ψ(k)·[u ⊆ W]`.
///
/// With `h = (m, v)`, `λ(h)φ(k, u) = ψ(k − m)·[u − τ_{k−m}v ⊆ W]`. When the
/// shifted support of `v` lies in `W` the two indicators agree, otherwise
/// their supports are disjoint.
fn box_defect_pow(f: &BoxFunction, h: &WreathElement, p: f64) -> f64 {
    let m = h.shift;
    let span = h.lamps.first().map(|a| (a.0, h.lamps.last().unwrap().0));
    let inside = |k: i64| match span {
        None => true,
        Some((lo, hi)) => lo - (k - m) >= f.w_lo && hi - (k - m) <= f.w_hi,
    };
    let term = |k: i64| {
        let (a, b) = (f.psi_at(k), f.psi_at(k - m));
        if inside(k) {
            abs_pow(a - b, p)
        } else {
            abs_pow(a, p) + abs_pow(b, p)
        }
    };
    let n = f.psi.len() as i64;
    let first = f.k0..f.k0 + n;
    let second = f.k0 + m..f.k0 + m + n;
    let mut terms: Vec<f64> = first.clone().map(term).collect();
    terms.extend(second.filter(|k| !first.contains(k)).map(term));
    let configs = (f.m as f64).powi((f.w_hi - f.w_lo + 1) as i32);
    configs * compensated_sum(terms)
}

/// `ρ(t) = min_{t ≤ |g| ≤ R} ‖b(g)‖_p` over an enumerated ball.
pub fn cocycle_compression(b: &Cocycle, ball: &Ball, p: f64) -> Result<CompressionCurve> {
    check_exponent(p)?;
    if b.group()? != *ball.group() {
        return Err(Error::usage(format!("ball of {} does not match the cocycle", ball.group().name())));
    }
    let minima: Vec<(u32, f64)> = (1..=ball.radius())
        .into_par_iter()
        .map(|t| {
            let mut best = f64::INFINITY;
            for i in ball.sphere(t) {
                best = best.min(b.norm_pow(ball.element(i), p)?);
            }
            Ok((t, best.powf(1.0 / p)))
        })
        .collect::<Result<_>>()?;
    Ok(CompressionCurve::from_distance_minima(&minima))
}

/// Per-sphere minima of `value` over a wreath ball, streamed by cursor.
pub fn sphere_minima_streamed<F>(group: &MarkedGroup, radius: u32, value: F) -> Result<Vec<f64>>
where
    F: Fn(&WreathElement, u32) -> f64 + Sync,
{
    if !group.family().is_wreath() {
        return Err(Error::usage(format!("{} is not a wreath product", group.name())));
    }
    let r = radius as i64;
    let init = || vec![f64::INFINITY; radius as usize + 1];
    let out = (-r..=r)
        .into_par_iter()
        .map(|k| {
            let mut best = init();
            for_each_wreath_with_shift(group, radius, k, |w, len| {
                let v = value(w, len);
                let slot = &mut best[len as usize];
                *slot = slot.min(v);
            });
            best
        })
        .reduce(init, |a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect());
    Ok(out)
}

/// [`cocycle_compression`] without materialising the ball.
pub fn cocycle_compression_streamed(b: &Cocycle, radius: u32, p: f64) -> Result<CompressionCurve> {
    check_exponent(p)?;
    let group = b.group()?;
    if let Cocycle::Variational(Potential::Explicit(_)) = b {
        return Err(Error::usage("explicit potentials need an enumerated ball"));
    }
    let minima = sphere_minima_streamed(&group, radius, |w, _| b.norm_pow_wreath(w, p))?;
    let pairs: Vec<(u32, f64)> = (1..=radius).map(|t| (t, minima[t as usize].powf(1.0 / p))).collect();
    Ok(CompressionCurve::from_distance_minima(&pairs))
}

#[derive(Clone, Debug)]
pub struct Assembly {
    pub cocycle: Cocycle,
    /// `f(2^k)/M(2^{k+1})`.
    pub weights: Vec<f64>,
    /// `max_s Σ_k ‖b̃_k(s)‖_p^p`.
    pub generator_norm_pow: f64,
    /// `∫_1^{2^K} (f/M)^p dt/t` with `M(t) = M(⌈t⌉)`.
    pub integral: f64,
}

impl Assembly {
    pub fn generator_bound_holds(&self, slack: f64) -> bool {
        self.generator_norm_pow <= 2.0 * self.integral + slack
    }
}

/// `⊕_{k<K} (f(2^k)/M(2^{k+1}))·b_k` for blocks with measured curves.
pub fn assemble_dyadic(
    blocks: &[(Cocycle, CompressionCurve)],
    f: &CompressionModulus,
    m_curve: &CompressionCurve,
    p: f64,
    k_max: usize,
) -> Result<Assembly> {
    check_exponent(p)?;
    f.check_monotone()?;
    if k_max == 0 || blocks.len() < k_max {
        return Err(Error::usage(format!("need {k_max} blocks, got {}", blocks.len())));
    }
    let mut weights = Vec::with_capacity(k_max);
    for (k, (_, rho)) in blocks.iter().take(k_max).enumerate() {
        let t = 1u32 << (k + 1);
        let (Some(r), Some(m)) = (rho.at(t), m_curve.at(t)) else {
            return Err(Error::usage(format!("k = {k}: curves do not reach t = {t}")));
        };
        if !(m > 0.0) {
            return Err(Error::usage(format!("k = {k}: reference M({t}) = {m} is not positive")));
        }
        if r < m / 2.0 {
            return Err(Error::usage(format!("k = {k}: rho_k({t}) = {r} is below M({t})/2 = {}", m / 2.0)));
        }
        weights.push(f.eval((1u64 << k) as f64) / m);
    }
    let cocycle = Cocycle::scaled_sum(
        blocks.iter().take(k_max).zip(&weights).map(|((b, _), &w)| (w, b.clone())).collect(),
    )?;
    let group = cocycle.group()?;
    let mut generator_norm_pow: f64 = 0.0;
    for s in group.generators() {
        generator_norm_pow = generator_norm_pow.max(cocycle.norm_pow(s, p)?);
    }
    let top = 1u32 << k_max;
    let mut pieces = Vec::new();
    for j in 2..=top {
        let m = m_curve.at(j).expect("checked above");
        let (a, b) = ((j - 1) as f64, j as f64);
        let part = romberg(|s: f64| abs_pow(f.eval(s.exp()), p), a.ln(), b.ln(), 1e-12, 20);
        pieces.push(part / abs_pow(m, p));
    }
    Ok(Assembly { cocycle, weights, generator_norm_pow, integral: compensated_sum(pieces) })
}

/// `2^{-1/p}(LampConfig ⊕ θ^*(box variational))`, each summand normalised, with the box pair at
/// scale `n` of `C_2≀Z`.
pub fn zwrz_block(n: u32, p: f64) -> Result<Cocycle> {
    let pair = lamplighter_folner_pair(2, n)?;
    let Witness::LampBox(f) = pair_test_function(&pair, p)?.witness else {
        return Err(Error::assertion("box witness", "pair did not produce a box function"));
    };
    let inner = Cocycle::pullback(Cocycle::Variational(Potential::LampBox(f)))?.normalized(p)?;
    let lamps = Cocycle::LampConfig.normalized(p)?;
    let half = 0.5f64.powf(1.0 / p);
    Cocycle::scaled_sum(vec![(half, lamps), (half, inner)])
}

#[derive(Clone, Debug)]
pub struct AssemblyRow {
    pub k: u32,
    pub guaranteed: f64,
    pub measured: f64,
}

#[derive(Clone, Debug)]
pub struct ZwrzAssembly {
    pub assembly: Assembly,
    pub block_curves: Vec<CompressionCurve>,
    pub reference: CompressionCurve,
    pub curve: CompressionCurve,
    pub rows: Vec<AssemblyRow>,
}

impl ZwrzAssembly {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.measured + 1e-12 * r.guaranteed >= r.guaranteed)
    }
}

/// Dyadic assembly on `Z≀Z` with block `k` built at scale `2^k` and `M` the
/// pointwise minimum of the measured block curves.
pub fn zwrz_assembly(f: &CompressionModulus, p: f64, k_max: usize, radius: u32) -> Result<ZwrzAssembly> {
    if k_max == 0 || (1u64 << k_max) > radius as u64 {
        return Err(Error::usage(format!("2^K = 2^{k_max} must lie in [2, radius = {radius}]")));
    }
    let blocks: Vec<Cocycle> = (0..k_max).map(|k| zwrz_block(1 << k, p)).collect::<Result<_>>()?;
    let block_curves: Vec<CompressionCurve> =
        blocks.iter().map(|b| cocycle_compression_streamed(b, radius, p)).collect::<Result<_>>()?;
    let reference = CompressionCurve {
        samples: (1..=radius)
            .map(|t| (t, block_curves.iter().map(|c| c.at(t).unwrap()).fold(f64::INFINITY, f64::min)))
            .collect(),
    };
    let pairs: Vec<(Cocycle, CompressionCurve)> = blocks.into_iter().zip(block_curves.iter().cloned()).collect();
    let assembly = assemble_dyadic(&pairs, f, &reference, p, k_max)?;
    let curve = cocycle_compression_streamed(&assembly.cocycle, radius, p)?;
    let rows = (0..k_max as u32)
        .map(|k| AssemblyRow {
            k,
            guaranteed: f.eval((1u64 << k) as f64),
            measured: curve.at(1 << (k + 1)).unwrap(),
        })
        .collect();
    Ok(ZwrzAssembly { assembly, block_curves, reference, curve, rows })
}

#[derive(Clone, Debug)]
pub struct ZwrzReport {
    pub p: f64,
    /// `(t, inf_{|g| = t} m(g))` for `m(g) = max{|θ(g)|, ‖u‖_p}`.
    pub per_sphere_inf: Vec<(u32, f64)>,
    pub fitted_exponent: f64,
    /// `min_g m(g)/|g|^{p/(2p−1)}`.
    pub c: f64,
    pub elements: u64,
    /// `L(γ) > |g|/2` yet `|θ(g)| < |g|/2`.
    pub tour_case_failures: u64,
    /// `‖u‖_1 ≥ |g|/2` yet `m(g) < (|g|/2)^{p/(2p−1)}`.
    pub lamp_case_failures: u64,
    /// Hölder `‖u‖_1 ≤ ‖u‖_p |supp u|^{1−1/p}` violated (never expected).
    pub holder_failures: u64,
}

impl ZwrzReport {
    pub fn exponent(&self) -> f64 {
        self.p / (2.0 * self.p - 1.0)
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct ZwrzAcc {
    elements: u64,
    c: f64,
    tour: u64,
    lamp: u64,
    holder: u64,
}

fn zwrz_visit(c2: &MarkedGroup, w: &WreathElement, len: u32, p: f64, acc: &mut ZwrzAcc) -> f64 {
    let theta = c2.word_length(&GroupElement::Wreath(theta_wreath(w))).expect("projection is in C2wrZ") as f64;
    let l1: f64 = w.lamps.iter().map(|&(_, v)| v.unsigned_abs() as f64).sum();
    let lp = compensated_sum(w.lamps.iter().map(|&(_, v)| abs_pow(v as f64, p))).powf(1.0 / p);
    let m = theta.max(lp);
    if len == 0 {
        return m;
    }
    let g = len as f64;
    let e = p / (2.0 * p - 1.0);
    acc.elements += 1;
    acc.c = acc.c.min(m / g.powf(e));
    let tour = tour_length(w.absolute_support(), w.shift) as f64;
    let supp = w.lamps.len() as f64;
    if l1 > lp * supp.powf(1.0 - 1.0 / p) * (1.0 + 1e-12) + 1e-12 {
        acc.holder += 1;
    }
    if tour > g / 2.0 {
        if theta < g / 2.0 {
            acc.tour += 1;
        }
    } else if m < (g / 2.0).powf(e) * (1.0 - 1e-12) {
        acc.lamp += 1;
    }
    m
}

fn zwrz_finish(p: f64, inf: Vec<f64>, acc: ZwrzAcc) -> ZwrzReport {
    let per_sphere_inf: Vec<(u32, f64)> =
        inf.iter().enumerate().skip(1).filter(|(_, v)| v.is_finite()).map(|(t, &v)| (t as u32, v)).collect();
    let pts: Vec<(f64, f64)> = per_sphere_inf.iter().map(|&(t, v)| (t as f64, v)).collect();
    ZwrzReport {
        p,
        fitted_exponent: log_log_slope(&pts).unwrap_or(f64::NAN),
        per_sphere_inf,
        c: acc.c,
        elements: acc.elements,
        tour_case_failures: acc.tour,
        lamp_case_failures: acc.lamp,
        holder_failures: acc.holder,
    }
}

fn merge(a: ZwrzAcc, b: ZwrzAcc) -> ZwrzAcc {
    ZwrzAcc {
        elements: a.elements + b.elements,
        c: a.c.min(b.c),
        tour: a.tour + b.tour,
        lamp: a.lamp + b.lamp,
        holder: a.holder + b.holder,
    }
}

/// Pointwise lower bound `max{|θ(g)|, ‖b(g)‖_p}` on an enumerated `Z≀Z` ball.
pub fn zwrz_lower_bound(ball: &Ball, p: f64) -> Result<ZwrzReport> {
    check_exponent(p)?;
    if ball.group().family() != Family::WreathZ {
        return Err(Error::usage(format!("{} is not ZwrZ", ball.group().name())));
    }
    let c2 = MarkedGroup::lamplighter(2)?;
    let fresh = || ZwrzAcc { c: f64::INFINITY, ..Default::default() };
    let (inf, acc) = (1..=ball.radius())
        .into_par_iter()
        .map(|t| {
            let mut acc = fresh();
            let mut best = f64::INFINITY;
            for i in ball.sphere(t) {
                let w = ball.element(i).as_wreath().expect("wreath ball");
                best = best.min(zwrz_visit(&c2, w, t, p, &mut acc));
            }
            (t, best, acc)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((vec![f64::INFINITY; ball.radius() as usize + 1], fresh()), |(mut inf, acc), (t, best, a)| {
            inf[t as usize] = best;
            (inf, merge(acc, a))
        });
    Ok(zwrz_finish(p, inf, acc))
}

/// [`zwrz_lower_bound`] streamed by cursor, for radii beyond the ball budget.
pub fn zwrz_lower_bound_streamed(radius: u32, p: f64) -> Result<ZwrzReport> {
    check_exponent(p)?;
    let group = MarkedGroup::wreath_z();
    let c2 = MarkedGroup::lamplighter(2)?;
    let r = radius as i64;
    let fresh = || (vec![f64::INFINITY; radius as usize + 1], ZwrzAcc { c: f64::INFINITY, ..Default::default() });
    let (inf, acc) = (-r..=r)
        .into_par_iter()
        .map(|k| {
            let (mut inf, mut acc) = fresh();
            for_each_wreath_with_shift(&group, radius, k, |w, len| {
                let m = zwrz_visit(&c2, w, len, p, &mut acc);
                inf[len as usize] = inf[len as usize].min(m);
            });
            (inf, acc)
        })
        .reduce(fresh, |(a, x), (b, y)| (a.iter().zip(&b).map(|(u, v)| u.min(*v)).collect(), merge(x, y)));
    Ok(zwrz_finish(p, inf, acc))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelReport {
    pub min_eigenvalue: f64,
    /// Spectral norm of the kernel matrix.
    pub norm: f64,
}

impl KernelReport {
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        self.min_eigenvalue >= -rel_tol * self.norm
    }
}

/// Smallest eigenvalue of `K_{xy} = exp(−‖b(x⁻¹y)‖_2²/t²)` on a sample.
pub fn schoenberg_psd_check(b: &Cocycle, sample: &[GroupElement], t: f64, p: f64) -> Result<KernelReport> {
    if p != 2.0 {
        return Err(Error::usage(format!("the Gaussian kernel needs p = 2, got {p}")));
    }
    if sample.is_empty() || !(t > 0.0) {
        return Err(Error::usage("need a nonempty sample and t > 0"));
    }
    let group = b.group()?;
    let inv: Vec<GroupElement> = sample.iter().map(|x| group.inverse(x)).collect::<Result<_>>()?;
    let n = sample.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in i + 1..n {
            let d = group.multiply(&inv[i], &sample[j])?;
            let v = (-b.norm_pow(&d, 2.0)? / (t * t)).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(k).eigenvalues;
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(KernelReport { min_eigenvalue, norm })
}

/// Distinct random elements given by words of length at most `max_len`.
pub fn random_elements(group: &MarkedGroup, count: usize, max_len: usize, seed: u64) -> Vec<GroupElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ngen = group.num_generators();
    let mut out: Vec<GroupElement> = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 100 * count.max(1) {
        tries += 1;
        let len = rng.gen_range(0..=max_len);
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(1..ngen)).collect();
        let g = group.word(&word);
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Convenience constructor used by the tests and the command line.
pub fn indicator_cocycle(ball: Arc<Ball>, radius: u32) -> Result<Cocycle> {
    let set: Vec<usize> = (0..ball.volume(radius)).collect();
    Ok(Cocycle::Variational(Potential::Explicit(GroupFunction::indicator(ball, set)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wr(shift: i64, lamps: &[(i64, i64)]) -> GroupElement {
        GroupElement::Wreath(WreathElement { shift, lamps: lamps.to_vec() })
    }

    #[test]
    fn lamp_config_norm() {
        // (3, 2δ₀ − δ₅) in absolute positions: relative keys −3 and 2.
        let g = wr(3, &[(-3, 2), (2, -1)]);
        let e = Cocycle::LampConfig.evaluate(&g, 2.0).unwrap();
        assert!((e.norm - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.vector.entries.len(), 2);
        assert!(e.vector.entries.contains_key(&Coord { path: vec![], key: Key::Site(0) }));
    }

    #[test]
    fn identity_maps_to_zero() {
        let z = MarkedGroup::wreath_z();
        let e = z.identity();
        let block = zwrz_block(1, 2.0).unwrap();
        for b in [Cocycle::LampConfig, Cocycle::Zero(z.clone()), block] {
            assert_eq!(b.evaluate(&e, 2.0).unwrap().norm, 0.0);
        }
    }

    #[test]
    fn box_norm_matches_explicit() {
        let c2 = MarkedGroup::lamplighter(2).unwrap();
        let ball = Arc::new(Ball::enumerate(&c2, 14).unwrap());
        let pair = lamplighter_folner_pair(2, 1).unwrap();
        let Witness::LampBox(f) = pair_test_function(&pair, 2.0).unwrap().witness else { panic!() };
        let explicit = Cocycle::Variational(Potential::Explicit(f.to_explicit(ball.clone()).unwrap()));
        let boxed = Cocycle::Variational(Potential::LampBox(f));
        for i in (0..ball.volume(5)).step_by(7) {
            let g = ball.element(i);
            for p in [1.0, 2.0, 3.5] {
                let a = boxed.norm_pow(g, p).unwrap();
                let b = explicit.norm_pow(g, p).unwrap();
                assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{g}: {a} vs {b}");
                let img = boxed.evaluate(g, p).unwrap().norm;
                assert!((img.powf(p) - a).abs() <= 1e-9 * a.max(1.0));
            }
        }
    }

    #[test]
    fn cocycle_identity_all_variants() {
        let z = MarkedGroup::wreath_z();
        let xs = random_elements(&z, 12, 8, 3);
        let b = zwrz_block(1, 2.0).unwrap();
        for c in [Cocycle::LampConfig, b] {
            for g in &xs {
                for h in &xs {
                    assert!(c.identity_defect(g, h).unwrap() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn indicator_compression_on_z() {
        let z = MarkedGroup::int_lattice(1).unwrap();
        let ball = Arc::new(Ball::enumerate(&z, 12).unwrap());
        let b = indicator_cocycle(ball.clone(), 2).unwrap();
        let curve = cocycle_compression(&b, &ball, 2.0).unwrap();
        // |B(1,2)| = 5, disjoint translates from |g| = 5 on.
        assert!((curve.at(6).unwrap() - 10f64.sqrt()).abs() < 1e-12);
        assert!(curve.is_nondecreasing());
    }

    #[test]
    fn zero_cocycle_compression() {
        let z = MarkedGroup::int_lattice(2).unwrap();
        let ball = Ball::enumerate(&z, 4).unwrap();
        let curve = cocycle_compression(&Cocycle::Zero(z), &ball, 2.0).unwrap();
        assert!(curve.samples.iter().all(|s| s.1 == 0.0));
    }

    #[test]
    fn schoenberg_small() {
        let z = MarkedGroup::wreath_z();
        let r = schoenberg_psd_check(&Cocycle::LampConfig, &[z.identity()], 1.0, 2.0).unwrap();
        assert_eq!(r.min_eigenvalue, 1.0);
        assert!(schoenberg_psd_check(&Cocycle::LampConfig, &[z.identity()], 1.0, 1.0).is_err());
        let xs = random_elements(&z, 20, 10, 1);
        let r = schoenberg_psd_check(&Cocycle::LampConfig, &xs, 4.0, 2.0).unwrap();
        assert!(r.is_psd(1e-8));
    }

    #[test]
    fn streamed_matches_ball() {
        let z = MarkedGroup::wreath_z();
        let ball = Ball::enumerate(&z, 7).unwrap();
        let b = zwrz_block(2, 2.0).unwrap();
        let a = cocycle_compression(&b, &ball, 2.0).unwrap();
        let s = cocycle_compression_streamed(&b, 7, 2.0).unwrap();
        for (x, y) in a.samples.iter().zip(&s.samples) {
            assert!((x.1 - y.1).abs() < 1e-12);
        }
        let r1 = zwrz_lower_bound(&ball, 2.0).unwrap();
        let r2 = zwrz_lower_bound_streamed(7, 2.0).unwrap();
        assert_eq!(r1.per_sphere_inf, r2.per_sphere_inf);
        assert_eq!(r1.elements, r2.elements);
        assert_eq!(r1.tour_case_failures, r2.tour_case_failures);
        assert_eq!(r1.holder_failures, 0);
    }

    #[test]
    fn translations_in_zwrz_bound() {
        let z = MarkedGroup::wreath_z();
        let ball = Ball::enumerate(&z, 5).unwrap();
        let r = zwrz_lower_bound(&ball, 2.0).unwrap();
        assert!(r.c > 0.0);
        assert!(zwrz_lower_bound(&Ball::enumerate(&MarkedGroup::lamplighter(2).unwrap(), 3).unwrap(), 2.0).is_err());
    }

    #[test]
    fn assembly_precondition_names_k() {
        let z = MarkedGroup::wreath_z();
        let b = Cocycle::LampConfig;
        let low = CompressionCurve { samples: (1..=8).map(|t| (t, 0.1)).collect() };
        let high = CompressionCurve { samples: (1..=8).map(|t| (t, 1.0)).collect() };
        let f = CompressionModulus::Power { a: 0.6 };
        let blocks = vec![(b.clone(), high.clone()), (b, low)];
        let err = assemble_dyadic(&blocks, &f, &high, 2.0, 2).unwrap_err();
        assert!(err.to_string().contains("k = 1"), "{err}");
        let one = assemble_dyadic(&blocks[..1], &f, &high, 2.0, 1).unwrap();
        assert_eq!(one.weights, vec![1.0]);
        assert_eq!(one.cocycle.group().unwrap(), z);
    }
}
