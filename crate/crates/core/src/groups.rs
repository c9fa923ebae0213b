//! Concrete marked groups: normal forms, multiplication, word lengths and
//! Cayley-ball enumeration.
//!
//! Wreath elements `(k, u)` multiply as `(n,f)(m,g) = (n+m, τ_m f + g)` with
//! `τ_m f(x) = f(x+m)`. Lamp keys are stored relative to the cursor; the lamp
//! at key `x` of `(k, u)` sits at absolute position `x + k`.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexSet;

use crate::error::{Error, Result};

/// Sentinel in left-multiplication tables for products leaving the ball.
pub const OUTSIDE: u32 = u32::MAX;

/// Default element budget for ball enumeration.
pub const DEFAULT_BALL_BUDGET: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `Z^d` with the standard basis.
    IntLattice(usize),
    /// Free group of rank `r`.
    FreeGroup(usize),
    /// `C_m ≀ Z` (lamplighter over a cyclic group of order `m`).
    WreathFinite(u32),
    /// `Z ≀ Z`.
    WreathZ,
}

impl Family {
    pub fn is_wreath(&self) -> bool {
        matches!(self, Family::WreathFinite(_) | Family::WreathZ)
    }
}

/// Wreath element with sparse lamps `(relative key, value)`; keys strictly
/// increasing, values nonzero (and in `1..m` for `C_m`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WreathElement {
    pub shift: i64,
    pub lamps: Vec<(i64, i64)>,
}

impl WreathElement {
    pub fn translation(k: i64) -> Self {
        WreathElement { shift: k, lamps: Vec::new() }
    }

    /// Lamp configuration in absolute coordinates, sorted by position.
    pub fn absolute_lamps(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.lamps.iter().map(move |&(x, v)| (x + self.shift, v))
    }

    /// Smallest and largest absolute lamp position.
    pub fn absolute_support(&self) -> Option<(i64, i64)> {
        let lo = self.lamps.first()?.0 + self.shift;
        let hi = self.lamps.last()?.0 + self.shift;
        Some((lo, hi))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Int(Vec<i64>),
    /// Reduced word; letter `i > 0` is generator `i`, `-i` its inverse.
    Free(Vec<i32>),
    Wreath(WreathElement),
}

impl GroupElement {
    pub fn as_wreath(&self) -> Option<&WreathElement> {
        match self {
            GroupElement::Wreath(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Int(v) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            GroupElement::Free(w) => {
                if w.is_empty() {
                    return write!(f, "e");
                }
                for &l in w {
                    let base = (b'a' + (l.unsigned_abs() - 1) as u8) as char;
                    if l > 0 {
                        write!(f, "{base}")?;
                    } else {
                        write!(f, "{}", base.to_ascii_uppercase())?;
                    }
                }
                Ok(())
            }
            GroupElement::Wreath(w) => {
                write!(f, "({};", w.shift)?;
                for (x, v) in &w.lamps {
                    write!(f, " {x}:{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A group together with a finite symmetric generating set containing the
/// identity (generator 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedGroup {
    name: String,
    family: Family,
    generators: Vec<GroupElement>,
    inverse_of: Vec<usize>,
}

impl MarkedGroup {
    pub fn int_lattice(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::usage("Z^d needs d >= 1"));
        }
        let mut gens = vec![GroupElement::Int(vec![0; d])];
        for i in 0..d {
            for sign in [1, -1] {
                let mut v = vec![0; d];
                v[i] = sign;
                gens.push(GroupElement::Int(v));
            }
        }
        let name = if d == 1 { "Z".to_string() } else { format!("Z^{d}") };
        Ok(Self::build(name, Family::IntLattice(d), gens))
    }

    pub fn free_group(r: usize) -> Result<Self> {
        if r == 0 || r > 26 {
            return Err(Error::usage("free group rank must be in 1..=26"));
        }
        let mut gens = vec![GroupElement::Free(Vec::new())];
        for i in 1..=r as i32 {
            gens.push(GroupElement::Free(vec![i]));
            gens.push(GroupElement::Free(vec![-i]));
        }
        Ok(Self::build(format!("F{r}"), Family::FreeGroup(r), gens))
    }

    /// `C_m ≀ Z` with generators `e, t, t⁻¹` and `(0, c·δ_0)` for `c = 1..m`.
    pub fn lamplighter(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::usage("lamp group order must be >= 2"));
        }
        let mut gens = vec![
            GroupElement::Wreath(WreathElement::default()),
            GroupElement::Wreath(WreathElement::translation(1)),
            GroupElement::Wreath(WreathElement::translation(-1)),
        ];
        for c in 1..m as i64 {
            gens.push(GroupElement::Wreath(WreathElement { shift: 0, lamps: vec![(0, c)] }));
        }
        Ok(Self::build(format!("C{m}wrZ"), Family::WreathFinite(m), gens))
    }

    /// `Z ≀ Z` with generators `e, t, t⁻¹, a, a⁻¹`.
    pub fn wreath_z() -> Self {
        let gens = vec![
            GroupElement::Wreath(WreathElement::default()),
            GroupElement::Wreath(WreathElement::translation(1)),
            GroupElement::Wreath(WreathElement::translation(-1)),
            GroupElement::Wreath(WreathElement { shift: 0, lamps: vec![(0, 1)] }),
            GroupElement::Wreath(WreathElement { shift: 0, lamps: vec![(0, -1)] }),
        ];
        Self::build("ZwrZ".to_string(), Family::WreathZ, gens)
    }

    /// Parses `Z`, `Z^d`, `Fr`, `CmwrZ` and `ZwrZ`.
    pub fn parse(text: &str) -> Result<Self> {
        let s = text.trim();
        if s == "Z" {
            return Self::int_lattice(1);
        }
        if s == "ZwrZ" {
            return Ok(Self::wreath_z());
        }
        if let Some(d) = s.strip_prefix("Z^") {
            let d: usize = d.parse().map_err(|_| Error::usage(format!("bad lattice rank in {s:?}")))?;
            return Self::int_lattice(d);
        }
        if let Some(r) = s.strip_prefix('F') {
            let r: usize = r.parse().map_err(|_| Error::usage(format!("bad free rank in {s:?}")))?;
            return Self::free_group(r);
        }
        if let Some(m) = s.strip_prefix('C').and_then(|rest| rest.strip_suffix("wrZ")) {
            let m: u32 = m.parse().map_err(|_| Error::usage(format!("bad lamp order in {s:?}")))?;
            return Self::lamplighter(m);
        }
        Err(Error::usage(format!(
            "unknown group {s:?}; expected Z, Z^d, Fr, CmwrZ or ZwrZ"
        )))
    }

    fn build(name: String, family: Family, generators: Vec<GroupElement>) -> Self {
        let mut g = MarkedGroup { name, family, generators, inverse_of: Vec::new() };
        g.inverse_of = (0..g.generators.len())
            .map(|i| {
                let inv = g.inverse(&g.generators[i]).expect("own generator");
                g.generators.iter().position(|s| *s == inv).expect("symmetric generating set")
            })
            .collect();
        g
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// Index of `s⁻¹` in the generator list.
    pub fn inverse_generator(&self, s: usize) -> usize {
        self.inverse_of[s]
    }

    pub fn identity(&self) -> GroupElement {
        self.generators[0].clone()
    }

    fn check_member(&self, g: &GroupElement) -> Result<()> {
        let ok = match (self.family, g) {
            (Family::IntLattice(d), GroupElement::Int(v)) => v.len() == d,
            (Family::FreeGroup(r), GroupElement::Free(w)) => {
                w.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= r)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (Family::WreathFinite(m), GroupElement::Wreath(w)) => {
                lamps_canonical(&w.lamps) && w.lamps.iter().all(|&(_, v)| v > 0 && v < m as i64)
            }
            (Family::WreathZ, GroupElement::Wreath(w)) => lamps_canonical(&w.lamps),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!("element {g} is not a normal form of {}", self.name)))
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.check_member(g).is_ok()
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check_member(g)?;
        self.check_member(h)?;
        Ok(self.multiply_unchecked(g, h))
    }

    /// Product of two elements already known to belong to this group.
    pub fn multiply_unchecked(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (g, h) {
            (GroupElement::Int(a), GroupElement::Int(b)) => {
                GroupElement::Int(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupElement::Free(a), GroupElement::Free(b)) => {
                let mut w = a.clone();
                for &l in b {
                    if w.last() == Some(&-l) {
                        w.pop();
                    } else {
                        w.push(l);
                    }
                }
                GroupElement::Free(w)
            }
            (GroupElement::Wreath(a), GroupElement::Wreath(b)) => {
                GroupElement::Wreath(self.wreath_product(a, b))
            }
            _ => unreachable!("mixed families"),
        }
    }

    fn lamp_modulus(&self) -> Option<i64> {
        match self.family {
            Family::WreathFinite(m) => Some(m as i64),
            _ => None,
        }
    }

    fn wreath_product(&self, a: &WreathElement, b: &WreathElement) -> WreathElement {
        // τ_m f shifts keys by -m.
        let m = b.shift;
        let modulus = self.lamp_modulus();
        let mut lamps = Vec::with_capacity(a.lamps.len() + b.lamps.len());
        let (mut i, mut j) = (0, 0);
        let push = |lamps: &mut Vec<(i64, i64)>, x: i64, v: i64| {
            let v = match modulus {
                Some(q) => v.rem_euclid(q),
                None => v,
            };
            if v != 0 {
                lamps.push((x, v));
            }
        };
        while i < a.lamps.len() || j < b.lamps.len() {
            let ka = a.lamps.get(i).map(|&(x, _)| x - m);
            let kb = b.lamps.get(j).map(|&(x, _)| x);
            match (ka, kb) {
                (Some(x), Some(y)) if x == y => {
                    push(&mut lamps, x, a.lamps[i].1 + b.lamps[j].1);
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    push(&mut lamps, x, a.lamps[i].1);
                    i += 1;
                }
                (Some(x), None) => {
                    push(&mut lamps, x, a.lamps[i].1);
                    i += 1;
                }
                (_, Some(y)) => {
                    push(&mut lamps, y, b.lamps[j].1);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        WreathElement { shift: a.shift + b.shift, lamps }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check_member(g)?;
        Ok(match g {
            GroupElement::Int(v) => GroupElement::Int(v.iter().map(|x| -x).collect()),
            GroupElement::Free(w) => GroupElement::Free(w.iter().rev().map(|l| -l).collect()),
            GroupElement::Wreath(w) => {
                let n = w.shift;
                let lamps = w
                    .lamps
                    .iter()
                    .map(|&(x, v)| {
                        let v = match self.lamp_modulus() {
                            Some(q) => (-v).rem_euclid(q),
                            None => -v,
                        };
                        (x + n, v)
                    })
                    .collect();
                GroupElement::Wreath(WreathElement { shift: -n, lamps })
            }
        })
    }

    /// Product of generators `s_0 s_1 … s_k` given by index.
    pub fn word(&self, letters: &[usize]) -> GroupElement {
        letters.iter().fold(self.identity(), |acc, &s| {
            self.multiply_unchecked(&acc, &self.generators[s])
        })
    }

    /// Closed-form word length for every supported family.
    pub fn word_length(&self, g: &GroupElement) -> Result<u64> {
        self.check_member(g)?;
        Ok(match g {
            GroupElement::Int(v) => v.iter().map(|x| x.unsigned_abs()).sum(),
            GroupElement::Free(w) => w.len() as u64,
            GroupElement::Wreath(w) => self.parry_length(w),
        })
    }

    /// Lamp cost plus the shortest tour from 0 through the absolute lamp
    /// support ending at the cursor.
    pub fn word_length_wreath(&self, g: &GroupElement) -> Result<u64> {
        match g {
            GroupElement::Wreath(w) if self.family.is_wreath() => {
                self.check_member(g)?;
                Ok(self.parry_length(w))
            }
            _ => Err(Error::usage(format!("{} is not a wreath product", self.name))),
        }
    }

    fn parry_length(&self, w: &WreathElement) -> u64 {
        let lamp_cost: u64 = match self.family {
            Family::WreathZ => w.lamps.iter().map(|&(_, v)| v.unsigned_abs()).sum(),
            _ => w.lamps.len() as u64,
        };
        tour_length(w.absolute_support(), w.shift) + lamp_cost
    }

    /// Word length by breadth-first search, `None` if it exceeds `max_radius`.
    pub fn word_length_bfs(&self, g: &GroupElement, max_radius: u32) -> Result<Option<u32>> {
        self.check_member(g)?;
        let e = self.identity();
        if *g == e {
            return Ok(Some(0));
        }
        let mut seen: HashSet<GroupElement> = HashSet::from([e.clone()]);
        let mut frontier = vec![e];
        for r in 1..=max_radius {
            let mut next = Vec::new();
            for x in &frontier {
                for s in &self.generators[1..] {
                    let y = self.multiply_unchecked(s, x);
                    if y == *g {
                        return Ok(Some(r));
                    }
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        Ok(None)
    }

    /// Projection `Z≀Z → C_2≀Z` reducing every lamp mod 2.
    pub fn theta(&self, g: &GroupElement) -> Result<GroupElement> {
        if self.family != Family::WreathZ {
            return Err(Error::usage("theta is defined on ZwrZ only"));
        }
        self.check_member(g)?;
        let w = g.as_wreath().expect("checked");
        Ok(GroupElement::Wreath(theta_wreath(w)))
    }
}

pub(crate) fn theta_wreath(w: &WreathElement) -> WreathElement {
    WreathElement {
        shift: w.shift,
        lamps: w.lamps.iter().filter(|(_, v)| v.rem_euclid(2) == 1).map(|&(x, _)| (x, 1)).collect(),
    }
}

fn lamps_canonical(lamps: &[(i64, i64)]) -> bool {
    lamps.windows(2).all(|p| p[0].0 < p[1].0) && lamps.iter().all(|&(_, v)| v != 0)
}

/// Shortest walk on `Z` from 0 visiting `[lo, hi]` and ending at `k`.
pub fn tour_length(support: Option<(i64, i64)>, k: i64) -> u64 {
    let Some((lo, hi)) = support else {
        return k.unsigned_abs();
    };
    let a = lo.min(0).min(k);
    let b = hi.max(0).max(k);
    let left_first = -a + (b - a) + (b - k);
    let right_first = b + (b - a) + (k - a);
    left_first.min(right_first) as u64
}

/// Enumerated Cayley ball `B(1, n)` in breadth-first discovery order.
#[derive(Clone, Debug)]
pub struct Ball {
    group: MarkedGroup,
    radius: u32,
    elements: IndexSet<GroupElement>,
    lengths: Vec<u32>,
    left: Vec<u32>,
    sphere_offsets: Vec<usize>,
}

impl Ball {
    pub fn enumerate(group: &MarkedGroup, radius: u32) -> Result<Self> {
        Self::enumerate_with_budget(group, radius, DEFAULT_BALL_BUDGET)
    }

    pub fn enumerate_with_budget(group: &MarkedGroup, radius: u32, budget: usize) -> Result<Self> {
        let ngen = group.num_generators();
        let mut elements: IndexSet<GroupElement> = IndexSet::new();
        elements.insert(group.identity());
        let mut lengths = vec![0u32];
        let mut left: Vec<u32> = Vec::new();
        let mut sphere_offsets = vec![0usize, 1];
        for level in 0..=radius {
            let (start, end) = (sphere_offsets[level as usize], sphere_offsets[level as usize + 1]);
            for i in start..end {
                for s in 0..ngen {
                    let y = group.multiply_unchecked(&group.generators[s], &elements[i]);
                    let idx = if level < radius {
                        let (idx, new) = elements.insert_full(y);
                        if new {
                            lengths.push(level + 1);
                            if elements.len() > budget {
                                return Err(Error::resource(format!(
                                    "ball of {} exceeds the budget of {budget} elements; \
                                     attained radius {level}",
                                    group.name()
                                )));
                            }
                        }
                        idx as u32
                    } else {
                        elements.get_index_of(&y).map_or(OUTSIDE, |i| i as u32)
                    };
                    left.push(idx);
                }
            }
            if level < radius {
                sphere_offsets.push(elements.len());
            }
        }
        Ok(Ball { group: group.clone(), radius, elements, lengths, left, sphere_offsets })
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &GroupElement> {
        self.elements.iter()
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.elements.get_index_of(g)
    }

    pub fn length(&self, i: usize) -> u32 {
        self.lengths[i]
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    /// Index of `s·g_i`, or `None` if it lies outside the ball.
    #[inline]
    pub fn left_mul(&self, i: usize, s: usize) -> Option<usize> {
        let v = self.left[i * self.group.num_generators() + s];
        (v != OUTSIDE).then_some(v as usize)
    }

    /// Index range of the sphere of radius `k`.
    pub fn sphere(&self, k: u32) -> std::ops::Range<usize> {
        let k = k as usize;
        if k + 1 >= self.sphere_offsets.len() {
            return self.len()..self.len();
        }
        self.sphere_offsets[k]..self.sphere_offsets[k + 1]
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        self.sphere_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `V(k) = |B(1, k)|` for `k ≤ radius`.
    pub fn volume(&self, k: u32) -> usize {
        self.sphere_offsets[(k.min(self.radius) + 1) as usize]
    }

    /// Index of `g·h` when both are in the ball and the product is too.
    pub fn product_index(&self, g: usize, h: usize) -> Option<usize> {
        let prod = self.group.multiply_unchecked(&self.elements[g], &self.elements[h]);
        self.index_of(&prod)
    }

    pub fn inverse_index(&self, g: usize) -> usize {
        let inv = self.group.inverse(&self.elements[g]).expect("ball element");
        self.index_of(&inv).expect("balls are symmetric")
    }
}

/// Visits every element of a wreath ball `B(1, radius)` with cursor `shift`,
/// in a fixed order, passing the element and its word length.
///
/// No tables are built, so this reaches radii far beyond [`Ball`].
pub fn for_each_wreath_with_shift<F>(group: &MarkedGroup, radius: u32, shift: i64, mut visit: F)
where
    F: FnMut(&WreathElement, u32),
{
    let lamp_cost_max: Option<i64> = match group.family() {
        Family::WreathFinite(m) => Some(m as i64 - 1),
        Family::WreathZ => None,
        _ => return,
    };
    let r = radius as i64;
    let k = shift;
    if k.abs() > r {
        return;
    }
    let mut element = WreathElement::translation(k);
    visit(&element, k.unsigned_abs() as u32);
    for lo in -r..=r {
        for hi in lo..=r {
            let tour = tour_length(Some((lo, hi)), k) as i64;
            let min_cost = if lo == hi { 1 } else { 2 };
            if tour + min_cost > r {
                continue;
            }
            element.lamps.clear();
            fill_lamps(lo, lo, hi, k, r - tour, tour, lamp_cost_max, &mut element, &mut visit);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fill_lamps<F>(
    pos: i64,
    lo: i64,
    hi: i64,
    k: i64,
    budget: i64,
    spent: i64,
    finite: Option<i64>,
    element: &mut WreathElement,
    visit: &mut F,
) where
    F: FnMut(&WreathElement, u32),
{
    if pos > hi {
        visit(element, spent as u32);
        return;
    }
    // The far endpoint still needs at least one unit of lamp cost.
    let reserve = if pos < hi { 1 } else { 0 };
    let endpoint = pos == lo || pos == hi;
    if !endpoint {
        fill_lamps(pos + 1, lo, hi, k, budget, spent, finite, element, visit);
    }
    match finite {
        Some(top) => {
            if budget > reserve {
                for v in 1..=top {
                    element.lamps.push((pos - k, v));
                    fill_lamps(pos + 1, lo, hi, k, budget - 1, spent + 1, finite, element, visit);
                    element.lamps.pop();
                }
            }
        }
        None => {
            for mag in 1..=(budget - reserve) {
                for v in [mag, -mag] {
                    element.lamps.push((pos - k, v));
                    fill_lamps(pos + 1, lo, hi, k, budget - mag, spent + mag, finite, element, visit);
                    element.lamps.pop();
                }
            }
        }
    }
}

/// Number of elements of the wreath ball `B(1, radius)`, by streaming.
pub fn wreath_ball_size(group: &MarkedGroup, radius: u32) -> u64 {
    let r = radius as i64;
    (-r..=r)
        .map(|k| {
            let mut n = 0u64;
            for_each_wreath_with_shift(group, radius, k, |_, _| n += 1);
            n
        })
        .sum()
}
