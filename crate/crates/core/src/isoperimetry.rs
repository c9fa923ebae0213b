//! Lower bounds for the ℓ^p isoperimetric profile inside balls.
//!
//! A certificate is a witness function `φ` supported in `B(1, t)` together
//! with the ratio `‖φ‖_p / ‖∇̃φ‖_p`, so `J^b(t) ≥ ratio`. Witnesses come from
//! Følner pairs, from the growth of balls, or from a heuristic ascent.
//!
//! Lamplighter sets of the form `{(k, u) : k ∈ K, supp u ⊆ W}` are far too
//! large to list for moderate `n`, so they are handled as [`LampBox`]es with
//! exact counting; functions of the form `ψ(k)·[supp u ⊆ W]` on them are
//! [`BoxFunction`]s.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_exponent, Error, Result};
use crate::functions::{BoundaryPolicy, GroupFunction};
use crate::groups::{tour_length, Ball, Family, GroupElement, MarkedGroup, WreathElement};
use crate::numeric::{abs_pow, compensated_sum, relative_error};

/// `{(k, u) : k ∈ [k_lo, k_hi], supp u ⊆ [w_lo, w_hi]}` in `C_m ≀ Z`, with
/// `u` in stored (cursor-relative) coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LampBox {
    pub m: u32,
    pub k_lo: i64,
    pub k_hi: i64,
    pub w_lo: i64,
    pub w_hi: i64,
}

impl LampBox {
    pub fn new(m: u32, k: (i64, i64), w: (i64, i64)) -> Result<Self> {
        if m < 2 || k.0 > k.1 || w.0 > w.1 {
            return Err(Error::usage(format!("empty or invalid lamp box m={m} K={k:?} W={w:?}")));
        }
        Ok(LampBox { m, k_lo: k.0, k_hi: k.1, w_lo: w.0, w_hi: w.1 })
    }

    pub fn window_len(&self) -> u32 {
        (self.w_hi - self.w_lo + 1) as u32
    }

    pub fn cursor_len(&self) -> u64 {
        (self.k_hi - self.k_lo + 1) as u64
    }

    /// `m^{|W|}`, the number of lamp configurations per cursor position.
    pub fn configs(&self) -> f64 {
        (self.m as f64).powi(self.window_len() as i32)
    }

    pub fn count(&self) -> u128 {
        self.cursor_len() as u128 * (self.m as u128).pow(self.window_len())
    }

    pub fn count_f64(&self) -> f64 {
        self.cursor_len() as f64 * self.configs()
    }

    pub fn in_window(&self, x: i64) -> bool {
        self.w_lo <= x && x <= self.w_hi
    }

    pub fn contains(&self, g: &WreathElement) -> bool {
        (self.k_lo..=self.k_hi).contains(&g.shift) && g.lamps.iter().all(|&(x, _)| self.in_window(x))
    }

    pub fn is_subset_of(&self, other: &LampBox) -> bool {
        self.m == other.m
            && other.k_lo <= self.k_lo
            && self.k_hi <= other.k_hi
            && other.w_lo <= self.w_lo
            && self.w_hi <= other.w_hi
    }

    /// Largest word length over the box: every window lamp lit, worst cursor.
    pub fn max_word_length(&self) -> u64 {
        (self.k_lo..=self.k_hi)
            .map(|k| tour_length(Some((self.w_lo + k, self.w_hi + k)), k) + self.window_len() as u64)
            .max()
            .expect("nonempty")
    }

    /// `S·B` when it is again a box: each toggle `a^c·(k, u)` flips the stored
    /// lamp `−k`, which stays inside `W` iff `−k ∈ W`.
    pub fn left_neighborhood(&self) -> Option<LampBox> {
        let toggles_inside = (self.k_lo..=self.k_hi).all(|k| self.in_window(-k));
        toggles_inside.then_some(LampBox { k_lo: self.k_lo - 1, k_hi: self.k_hi + 1, ..*self })
    }
}

/// `φ(k, u) = ψ(k)·[supp u ⊆ W]` on a lamplighter group; `ψ` vanishes off
/// `[k0, k0 + len)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxFunction {
    pub m: u32,
    pub w_lo: i64,
    pub w_hi: i64,
    pub k0: i64,
    pub psi: Vec<f64>,
}

impl BoxFunction {
    pub fn psi_at(&self, k: i64) -> f64 {
        let i = k - self.k0;
        if i < 0 || i as usize >= self.psi.len() {
            0.0
        } else {
            self.psi[i as usize]
        }
    }

    fn in_window(&self, x: i64) -> bool {
        self.w_lo <= x && x <= self.w_hi
    }

    fn configs(&self) -> f64 {
        (self.m as f64).powi((self.w_hi - self.w_lo + 1) as i32)
    }

    pub fn eval(&self, g: &WreathElement) -> f64 {
        if g.lamps.iter().all(|&(x, _)| self.in_window(x)) {
            self.psi_at(g.shift)
        } else {
            0.0
        }
    }

    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        self.configs() * compensated_sum(self.psi.iter().map(|&v| abs_pow(v, p)))
    }

    /// `‖∇̃φ‖_p^p` from the orbit structure: on `(k, u ⊆ W)` the gradient is
    /// `max(|ψ(k±1) − ψ(k)|, [−k ∉ W]|ψ(k)|)`, and on `(k, u₀ + cδ_{−k})` with
    /// `−k ∉ W` it is `|ψ(k)|`.
    pub fn gradient_pow(&self, p: f64) -> f64 {
        let mut terms = Vec::new();
        let (lo, hi) = (self.k0 - 1, self.k0 + self.psi.len() as i64);
        for k in lo..=hi {
            let v = self.psi_at(k);
            let mut g = (self.psi_at(k + 1) - v).abs().max((self.psi_at(k - 1) - v).abs());
            if !self.in_window(-k) {
                g = g.max(v.abs());
                terms.push((self.m - 1) as f64 * abs_pow(v, p));
            }
            terms.push(abs_pow(g, p));
        }
        self.configs() * compensated_sum(terms)
    }

    pub fn ratio(&self, p: f64) -> f64 {
        (self.lp_norm_pow(p) / self.gradient_pow(p)).powf(1.0 / p)
    }

    /// Recomputes `‖φ‖_p / ‖∇̃φ‖_p` by evaluating orbit representatives
    /// through the group law instead of the closed-form gradient.
    pub fn recompute_ratio(&self, group: &MarkedGroup, p: f64) -> Result<f64> {
        if group.family() != Family::WreathFinite(self.m) {
            return Err(Error::usage("box function evaluated on the wrong group"));
        }
        let grad = |g: &WreathElement| -> f64 {
            let x = GroupElement::Wreath(g.clone());
            let fx = self.eval(g);
            group
                .generators()
                .iter()
                .map(|s| {
                    let y = group.multiply_unchecked(s, &x);
                    (self.eval(y.as_wreath().expect("wreath")) - fx).abs()
                })
                .fold(0.0, f64::max)
        };
        let configs = self.configs();
        let mut num = Vec::new();
        let mut den = Vec::new();
        let full: Vec<(i64, i64)> = (self.w_lo..=self.w_hi).map(|x| (x, 1)).collect();
        for k in self.k0 - 1..=self.k0 + self.psi.len() as i64 {
            let empty = WreathElement::translation(k);
            let lit = WreathElement { shift: k, lamps: full.clone() };
            let (ge, gl) = (grad(&empty), grad(&lit));
            if ge != gl || self.eval(&empty) != self.eval(&lit) {
                return Err(Error::assertion(
                    "box orbit",
                    format!("representatives at cursor {k} disagree"),
                ));
            }
            num.push(configs * abs_pow(self.eval(&empty), p));
            den.push(configs * abs_pow(ge, p));
            if !self.in_window(-k) {
                for c in 1..self.m as i64 {
                    let off = WreathElement { shift: k, lamps: vec![(-k, c)] };
                    den.push(configs * abs_pow(grad(&off), p));
                }
            }
        }
        let den = compensated_sum(den);
        if den == 0.0 {
            return Err(Error::precision("witness has zero gradient"));
        }
        Ok((compensated_sum(num) / den).powf(1.0 / p))
    }

    /// Materializes `φ` on an explicit ball; fails if the support does not fit.
    pub fn to_explicit(&self, ball: Arc<Ball>) -> Result<GroupFunction> {
        let mut values = Vec::new();
        for (i, g) in ball.elements().enumerate() {
            let v = self.eval(g.as_wreath().ok_or_else(|| Error::usage("not a wreath ball"))?);
            if v != 0.0 {
                values.push((i, v));
            }
        }
        let f = GroupFunction::from_values(ball, values)?;
        let expected = self.lp_norm_pow(1.0);
        if relative_error(f.lp_norm_pow(1.0), expected) > 1e-12 {
            return Err(Error::resource("box function support exceeds the ball"));
        }
        Ok(f)
    }
}

#[derive(Clone, Debug)]
pub enum PairSets {
    Explicit { ball: Arc<Ball>, h: Vec<usize>, hp: Vec<usize> },
    LampBox { h: LampBox, hp: LampBox },
}

/// `(H, H′)` with control `α`: `S^α H ⊆ H′`, `|H′| ≤ C|H|`, `H′ ⊆ B(1, Cn)`.
#[derive(Clone, Debug)]
pub struct FolnerPair {
    pub n: u32,
    pub alpha: u32,
    pub group: MarkedGroup,
    pub sets: PairSets,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    /// `S^α H ⊆ H′`.
    pub cond1: bool,
    /// `|H′| / |H|`.
    pub c2: f64,
    /// `max_{g ∈ H′} |g| / n`.
    pub c3: f64,
    pub max_length: u64,
    /// `H·S^α ⊆ H′`, informational only.
    pub right_form: bool,
}

/// The standard pair `H_n = [−n, n] × U_n`, `H′_n = [−2n, 2n] × U_n` with
/// `U_n` the configurations supported in `[−2n, 2n]`, and `α_n = n`.
pub fn lamplighter_folner_pair(m: u32, n: u32) -> Result<FolnerPair> {
    if n == 0 {
        return Err(Error::usage("Følner pair scale must be >= 1"));
    }
    let n_i = n as i64;
    let w = (-2 * n_i, 2 * n_i);
    Ok(FolnerPair {
        n,
        alpha: n,
        group: MarkedGroup::lamplighter(m)?,
        sets: PairSets::LampBox {
            h: LampBox::new(m, (-n_i, n_i), w)?,
            hp: LampBox::new(m, (-2 * n_i, 2 * n_i), w)?,
        },
    })
}

/// The same pair with its elements listed inside an enumerated ball.
pub fn lamplighter_folner_pair_explicit(ball: Arc<Ball>, n: u32) -> Result<FolnerPair> {
    let m = match ball.group().family() {
        Family::WreathFinite(m) => m,
        _ => return Err(Error::usage("lamplighter pairs need a C_m wreath Z ball")),
    };
    let boxed = lamplighter_folner_pair(m, n)?;
    let PairSets::LampBox { h, hp } = boxed.sets else { unreachable!() };
    let need = hp.max_word_length();
    if (ball.radius() as u64) < need {
        return Err(Error::resource(format!(
            "pair at n={n} needs a ball of radius {need}, have {}",
            ball.radius()
        )));
    }
    let collect = |b: &LampBox| -> Vec<usize> {
        ball.elements()
            .enumerate()
            .filter(|(_, g)| b.contains(g.as_wreath().expect("wreath")))
            .map(|(i, _)| i)
            .collect()
    };
    let (h_idx, hp_idx) = (collect(&h), collect(&hp));
    if h_idx.len() as u128 != h.count() || hp_idx.len() as u128 != hp.count() {
        return Err(Error::assertion("pair enumeration", "listed sets disagree with box counts"));
    }
    Ok(FolnerPair {
        n,
        alpha: n,
        group: ball.group().clone(),
        sets: PairSets::Explicit { ball, h: h_idx, hp: hp_idx },
    })
}

impl FolnerPair {
    pub fn explicit(ball: Arc<Ball>, n: u32, alpha: u32, h: Vec<usize>, hp: Vec<usize>) -> Result<Self> {
        let mut h = h;
        let mut hp = hp;
        h.sort_unstable();
        h.dedup();
        hp.sort_unstable();
        hp.dedup();
        if h.is_empty() || hp.is_empty() || hp.last().is_some_and(|&i| i >= ball.len()) {
            return Err(Error::usage("pair sets must be nonempty subsets of the ball"));
        }
        if h.iter().any(|i| hp.binary_search(i).is_err()) {
            return Err(Error::usage("H must be contained in H'"));
        }
        Ok(FolnerPair { n, alpha, group: ball.group().clone(), sets: PairSets::Explicit { ball, h, hp } })
    }

    pub fn sizes(&self) -> (f64, f64) {
        match &self.sets {
            PairSets::Explicit { h, hp, .. } => (h.len() as f64, hp.len() as f64),
            PairSets::LampBox { h, hp } => (h.count_f64(), hp.count_f64()),
        }
    }

    /// Exact check of the pair conditions; `control_ball` must contain
    /// `B(1, α)` for box pairs.
    pub fn verify(&self, control_ball: Option<&Ball>) -> Result<PairReport> {
        match &self.sets {
            PairSets::Explicit { ball, h, hp } => self.verify_explicit(ball, h, hp),
            PairSets::LampBox { h, hp } => {
                let ball = control_ball.ok_or_else(|| Error::usage("box pairs need B(1, alpha)"))?;
                if ball.group() != &self.group || ball.radius() < self.alpha {
                    return Err(Error::resource(format!(
                        "control ball must be B(1, {}) of {}",
                        self.alpha,
                        self.group.name()
                    )));
                }
                let (cond1, right_form) = box_inclusions(h, hp, ball, self.alpha);
                let max_length = hp.max_word_length();
                Ok(PairReport {
                    cond1: cond1 && h.is_subset_of(hp),
                    c2: hp.count_f64() / h.count_f64(),
                    c3: max_length as f64 / self.n as f64,
                    max_length,
                    right_form,
                })
            }
        }
    }

    fn verify_explicit(&self, ball: &Arc<Ball>, h: &[usize], hp: &[usize]) -> Result<PairReport> {
        let in_hp: BTreeSet<usize> = hp.iter().copied().collect();
        let mut cond1 = true;
        let mut layer: BTreeSet<usize> = h.iter().copied().collect();
        for _ in 0..self.alpha {
            let mut next = layer.clone();
            for &x in &layer {
                for s in 0..self.group.num_generators() {
                    match ball.left_mul(x, s) {
                        Some(y) => {
                            next.insert(y);
                        }
                        None => cond1 = false,
                    }
                }
            }
            layer = next;
        }
        cond1 &= layer.iter().all(|x| in_hp.contains(x));
        let mut right_form = true;
        let control: Vec<usize> = (0..ball.volume(self.alpha)).collect();
        'outer: for &x in h {
            for &g in &control {
                match ball.product_index(x, g) {
                    Some(y) if in_hp.contains(&y) => {}
                    _ => {
                        right_form = false;
                        break 'outer;
                    }
                }
            }
        }
        let max_length = hp.iter().map(|&i| ball.length(i) as u64).max().unwrap_or(0);
        Ok(PairReport {
            cond1,
            c2: hp.len() as f64 / h.len() as f64,
            c3: max_length as f64 / self.n.max(1) as f64,
            max_length,
            right_form,
        })
    }
}

/// Left and right inclusions `S^α H ⊆ H′`, `H S^α ⊆ H′` for boxes, by
/// running over every `g = (m_s, v)` of `B(1, α)`.
fn box_inclusions(h: &LampBox, hp: &LampBox, ball: &Ball, alpha: u32) -> (bool, bool) {
    let mut left = h.w_lo >= hp.w_lo && h.w_hi <= hp.w_hi;
    let mut right = true;
    for g in ball.elements().take(ball.volume(alpha)) {
        let g = g.as_wreath().expect("wreath");
        let ms = g.shift;
        // (m_s, v)(k, u) = (m_s + k, τ_k v + u): v's keys move by −k.
        let cursor_ok = h.k_lo + ms >= hp.k_lo && h.k_hi + ms <= hp.k_hi;
        let lamps_ok = g.lamps.iter().all(|&(x, _)| hp.in_window(x - h.k_hi) && hp.in_window(x - h.k_lo));
        left &= cursor_ok && lamps_ok;
        // (k, u)(m_s, v) = (k + m_s, τ_{m_s} u + v).
        let shifted_ok = hp.in_window(h.w_lo - ms) && hp.in_window(h.w_hi - ms);
        let v_ok = g.lamps.iter().all(|&(x, _)| hp.in_window(x));
        right &= cursor_ok && shifted_ok && v_ok;
    }
    (left, right)
}

#[derive(Clone, Debug)]
pub enum Witness {
    Explicit(GroupFunction),
    LampBox(BoxFunction),
}

#[derive(Clone, Debug)]
pub struct ProfileCertificate {
    /// Support radius: the witness lives in `B(1, t)`.
    pub t: u32,
    pub p: f64,
    pub ratio: f64,
    pub method: &'static str,
    /// True when the witness is zero and the certificate says nothing.
    pub degenerate: bool,
    pub witness: Witness,
}

/// `(‖φ‖_p, ‖∇̃φ‖_p)` with strict boundary handling.
pub fn explicit_norms(phi: &GroupFunction, p: f64) -> Result<(f64, f64)> {
    check_exponent(p)?;
    let grad = phi.gradient_sup(BoundaryPolicy::Strict)?.function;
    Ok((phi.lp_norm(p)?, grad.lp_norm(p)?))
}

fn explicit_ratio(phi: &GroupFunction, p: f64) -> Result<f64> {
    let (num, den) = explicit_norms(phi, p)?;
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

impl ProfileCertificate {
    pub fn from_explicit(phi: GroupFunction, p: f64, method: &'static str) -> Result<Self> {
        let ratio = explicit_ratio(&phi, p)?;
        Ok(ProfileCertificate {
            t: phi.support_radius(),
            p,
            ratio,
            method,
            degenerate: phi.is_zero(),
            witness: Witness::Explicit(phi),
        })
    }

    /// Recomputes the ratio from the witness alone.
    pub fn recompute(&self, group: &MarkedGroup) -> Result<f64> {
        match &self.witness {
            Witness::Explicit(phi) => explicit_ratio(phi, self.p),
            Witness::LampBox(f) => {
                if f.psi.iter().all(|&v| v == 0.0) {
                    return Ok(0.0);
                }
                f.recompute_ratio(group, self.p)
            }
        }
    }

    /// Ratio check against the recomputation at relative tolerance `tol`.
    pub fn is_sound(&self, group: &MarkedGroup, tol: f64) -> Result<bool> {
        let r = self.recompute(group)?;
        Ok(relative_error(r, self.ratio) <= tol)
    }
}

/// Witness `φ(g) = d(g, (H′)^c)` in the left Cayley graph, which is at least
/// `α + 1` on `H` and has `|∇̃φ| ≤ 1`.
pub fn pair_test_function(pair: &FolnerPair, p: f64) -> Result<ProfileCertificate> {
    check_exponent(p)?;
    let (h_size, hp_size) = pair.sizes();
    let cert = match &pair.sets {
        PairSets::LampBox { hp, .. } => {
            let psi: Vec<f64> = (hp.k_lo..=hp.k_hi)
                .map(|k| {
                    let mut d = (k - hp.k_lo + 1).min(hp.k_hi - k + 1);
                    for k2 in hp.k_lo..=hp.k_hi {
                        if !hp.in_window(-k2) {
                            d = d.min((k - k2).abs() + 1);
                        }
                    }
                    d as f64
                })
                .collect();
            let f = BoxFunction { m: hp.m, w_lo: hp.w_lo, w_hi: hp.w_hi, k0: hp.k_lo, psi };
            ProfileCertificate {
                t: hp.max_word_length() as u32,
                p,
                ratio: f.ratio(p),
                method: "pair",
                degenerate: false,
                witness: Witness::LampBox(f),
            }
        }
        PairSets::Explicit { ball, hp, .. } => {
            let phi = distance_to_complement(ball, hp)?;
            ProfileCertificate::from_explicit(phi, p, "pair")?
        }
    };
    let floor = pair.alpha as f64 * (h_size / hp_size).powf(1.0 / p);
    if cert.ratio + 1e-12 * floor < floor {
        return Err(Error::assertion(
            "pair certificate",
            format!("ratio {} below alpha (|H|/|H'|)^(1/p) = {floor}", cert.ratio),
        ));
    }
    Ok(cert)
}

fn distance_to_complement(ball: &Arc<Ball>, hp: &[usize]) -> Result<GroupFunction> {
    let ngen = ball.group().num_generators();
    let inside: BTreeSet<usize> = hp.iter().copied().collect();
    if let Some(&x) = hp.iter().find(|&&x| ball.length(x) >= ball.radius()) {
        return Err(Error::resource(format!(
            "H' reaches the ball boundary at element {}",
            ball.element(x)
        )));
    }
    let mut dist = vec![0u32; ball.len()];
    let mut queue = VecDeque::new();
    for &x in hp {
        let exits = (0..ngen).any(|s| ball.left_mul(x, s).is_none_or(|y| !inside.contains(&y)));
        if exits {
            dist[x] = 1;
            queue.push_back(x);
        }
    }
    while let Some(x) = queue.pop_front() {
        for s in 0..ngen {
            if let Some(y) = ball.left_mul(x, s) {
                if inside.contains(&y) && dist[y] == 0 {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
    }
    GroupFunction::from_values(ball.clone(), hp.iter().map(|&x| (x, dist[x] as f64)))
}

#[derive(Clone, Debug)]
pub enum FolnerSetKind {
    Explicit(Vec<usize>),
    LampBox(LampBox),
}

#[derive(Clone, Debug)]
pub struct FolnerSet {
    pub j: u32,
    pub set: FolnerSetKind,
    pub size: f64,
    /// `|S^{j+1}H ∖ S^jH| / |S^jH|`.
    pub boundary_ratio: f64,
}

/// Among `S^j H`, `0 ≤ j < α`, the set with the smallest boundary ratio.
pub fn folner_from_pair(pair: &FolnerPair) -> Result<FolnerSet> {
    let alpha = pair.alpha.max(1);
    match &pair.sets {
        PairSets::LampBox { h, .. } => {
            let mut layers = vec![*h];
            for _ in 0..alpha {
                let last = layers.last().expect("nonempty");
                let next = last.left_neighborhood().ok_or_else(|| {
                    Error::usage("S^j H stops being a box before j = alpha")
                })?;
                layers.push(next);
            }
            let (j, ratio) = (0..alpha as usize)
                .map(|j| (j, (layers[j + 1].count_f64() - layers[j].count_f64()) / layers[j].count_f64()))
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            Ok(FolnerSet {
                j: j as u32,
                set: FolnerSetKind::LampBox(layers[j]),
                size: layers[j].count_f64(),
                boundary_ratio: ratio,
            })
        }
        PairSets::Explicit { ball, h, .. } => {
            let mut layers: Vec<BTreeSet<usize>> = vec![h.iter().copied().collect()];
            for _ in 0..alpha {
                let last = layers.last().expect("nonempty");
                let mut next = last.clone();
                for &x in last {
                    for s in 0..pair.group.num_generators() {
                        let y = ball.left_mul(x, s).ok_or_else(|| {
                            Error::resource("S^j H leaves the enumerated ball")
                        })?;
                        next.insert(y);
                    }
                }
                layers.push(next);
            }
            let (j, ratio) = (0..alpha as usize)
                .map(|j| (j, (layers[j + 1].len() - layers[j].len()) as f64 / layers[j].len() as f64))
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            let set: Vec<usize> = layers.swap_remove(j).into_iter().collect();
            Ok(FolnerSet { j: j as u32, size: set.len() as f64, set: FolnerSetKind::Explicit(set), boundary_ratio: ratio })
        }
    }
}

/// `k(m) = max{k ≤ m : V(m − k) ≥ V(m)/2}`.
pub fn half_volume_lag(ball: &Ball, m: u32) -> u32 {
    let half = ball.volume(m) as f64 / 2.0;
    (0..=m).rev().find(|&k| ball.volume(m - k) as f64 >= half).unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct GrowthCertificate {
    pub certificate: ProfileCertificate,
    pub j: u32,
    pub q: u32,
    /// `V(q)^{1/p}`, bounding `‖∇̃φ‖_p`.
    pub gradient_bound: f64,
    /// `j·V(q − j)^{1/p}`, bounding `‖φ‖_p` from below.
    pub norm_floor: f64,
}

/// `(j, q)` with `j = max_{m ≤ n} k(m)` and `q` the largest `m` attaining it.
pub fn growth_scale(ball: &Ball, n: u32) -> (u32, u32) {
    let mut j = 0;
    let mut q = n;
    for m in 0..=n {
        let k = half_volume_lag(ball, m);
        if k >= j {
            j = k;
            q = m;
        }
    }
    (j, q)
}

/// Nonzero values of `Σ_{k=1}^{q−1} 1_{B(1,k)}`, i.e. `q − max(|g|, 1)`.
fn growth_values(ball: &Ball, q: u32) -> Vec<(usize, f64)> {
    if q < 2 {
        return Vec::new();
    }
    (0..ball.volume(q - 1)).map(|i| (i, (q - ball.length(i).max(1)) as f64)).collect()
}

/// `φ = Σ_{k=1}^{q−1} 1_{B(1,k)}` at the largest `q ≤ n` maximizing `k(q)`.
pub fn profile_growth_certificate(ball: Arc<Ball>, n: u32, p: f64) -> Result<GrowthCertificate> {
    check_exponent(p)?;
    if n > ball.radius() {
        return Err(Error::resource(format!(
            "growth certificate at n={n} needs a ball of radius {n}, have {}",
            ball.radius()
        )));
    }
    let (j, q) = growth_scale(&ball, n);
    let phi = GroupFunction::from_values(ball.clone(), growth_values(&ball, q))?;
    let (num, den) = explicit_norms(&phi, p)?;
    let gradient_bound = (ball.volume(q) as f64).powf(1.0 / p);
    let norm_floor = j as f64 * (ball.volume(q - j) as f64).powf(1.0 / p);
    if den > gradient_bound * (1.0 + 1e-12) {
        return Err(Error::assertion("annuli bound", format!("‖∇̃φ‖ = {den} > V(q)^(1/p) = {gradient_bound}")));
    }
    if num < norm_floor * (1.0 - 1e-12) {
        return Err(Error::assertion("growth floor", format!("‖φ‖ = {num} < j V(q-j)^(1/p) = {norm_floor}")));
    }
    let certificate = ProfileCertificate {
        t: phi.support_radius(),
        p,
        ratio: if den == 0.0 { 0.0 } else { num / den },
        method: "growth",
        degenerate: phi.is_zero(),
        witness: Witness::Explicit(phi),
    };
    Ok(GrowthCertificate { certificate, j, q, gradient_bound, norm_floor })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeuristicOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        HeuristicOptions { restarts: 8, iterations: 200, seed: 0 }
    }
}

struct Dense<'a> {
    ball: &'a Ball,
    /// Points of `B(1, t+1)`, where the gradient can be nonzero.
    outer: usize,
    /// Points of `B(1, t)`, where the witness lives.
    inner: usize,
    p: f64,
}

impl Dense<'_> {
    fn neighbor(&self, g: usize, s: usize) -> Option<usize> {
        self.ball.left_mul(g, s).filter(|&y| y < self.inner)
    }

    fn value(&self, phi: &[f64], g: Option<usize>) -> f64 {
        g.map_or(0.0, |i| phi[i])
    }

    /// `(log ratio, ascent direction)`.
    fn step_data(&self, phi: &[f64]) -> Option<(f64, Vec<f64>)> {
        let p = self.p;
        let ngen = self.ball.group().num_generators();
        let num: f64 = compensated_sum(phi.iter().map(|&v| abs_pow(v, p)));
        let mut dir = vec![0.0; self.inner];
        let mut den_terms = Vec::with_capacity(self.outer);
        let mut argmax = Vec::with_capacity(self.outer);
        for g in 0..self.outer {
            let fg = if g < self.inner { phi[g] } else { 0.0 };
            let mut best = (0.0f64, None);
            for s in 0..ngen {
                let y = self.neighbor(g, s);
                let d = self.value(phi, y) - fg;
                if d.abs() > best.0 {
                    best = (d.abs(), Some((y, d.signum())));
                }
            }
            den_terms.push(abs_pow(best.0, p));
            argmax.push(best);
        }
        let den = compensated_sum(den_terms);
        if num == 0.0 || den == 0.0 {
            return None;
        }
        for (i, &v) in phi.iter().enumerate() {
            dir[i] += abs_pow(v, p - 1.0) / num;
        }
        for (g, &(mag, arg)) in argmax.iter().enumerate() {
            if let Some((y, sign)) = arg {
                let w = abs_pow(mag, p - 1.0) * sign / den;
                if let Some(y) = y {
                    dir[y] -= w;
                }
                if g < self.inner {
                    dir[g] += w;
                }
            }
        }
        Some(((num.ln() - den.ln()) / p, dir))
    }
}

/// Projected normalized subgradient ascent on `log(‖φ‖_p/‖∇̃φ‖_p)` over
/// nonnegative `φ` supported in `B(1, t)`. Restart 0 starts from the growth
/// witness at scale `t`, the others from seeded random points.
pub fn profile_heuristic_max(ball: Arc<Ball>, t: u32, p: f64, opts: HeuristicOptions) -> Result<ProfileCertificate> {
    check_exponent(p)?;
    if t + 1 > ball.radius() {
        return Err(Error::resource(format!(
            "heuristic at t={t} needs a ball of radius {}, have {}",
            t + 1,
            ball.radius()
        )));
    }
    let dense = Dense { ball: &ball, outer: ball.volume(t + 1), inner: ball.volume(t), p };
    let restarts = opts.restarts.max(1);
    let runs: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut phi: Vec<f64> = if r == 0 {
                let (_, q) = growth_scale(&ball, t);
                let mut v = vec![0.0; dense.inner];
                for (i, x) in growth_values(&ball, q) {
                    v[i] = x;
                }
                if q < 2 {
                    v[0] = 1.0;
                }
                v
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
                (0..dense.inner).map(|_| rng.gen_range(0.0..1.0)).collect()
            };
            let mut best: Option<(f64, Vec<f64>)> = None;
            for it in 1..=opts.iterations {
                let Some((value, dir)) = dense.step_data(&phi) else { break };
                if best.as_ref().is_none_or(|b| value > b.0) {
                    best = Some((value, phi.clone()));
                }
                let scale = phi.iter().fold(0.0f64, |m, &v| m.max(v));
                let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                if norm == 0.0 || scale == 0.0 {
                    break;
                }
                let eta = 0.5 * scale / (it as f64).sqrt() / norm;
                let next: Vec<f64> = phi.iter().zip(&dir).map(|(v, d)| (v + eta * d).max(0.0)).collect();
                if next.iter().all(|&v| v == 0.0) {
                    break;
                }
                phi = next;
            }
            if let Some((value, _)) = dense.step_data(&phi) {
                if best.as_ref().is_none_or(|b| value > b.0) {
                    best = Some((value, phi.clone()));
                }
            }
            best.unwrap_or((f64::NEG_INFINITY, phi))
        })
        .collect();
    let (_, phi) = runs
        .into_iter()
        .enumerate()
        .fold(None::<(usize, (f64, Vec<f64>))>, |acc, (i, run)| match acc {
            Some((j, b)) if b.0 >= run.0 => Some((j, b)),
            _ => Some((i, run)),
        })
        .expect("at least one restart")
        .1;
    let phi = GroupFunction::from_values(ball.clone(), phi.into_iter().enumerate())?;
    ProfileCertificate::from_explicit(phi, p, "heuristic")
}
