//! Compression moduli, condition (C_p), explicit tree embeddings into ℓ^p and
//! the integral obstruction for finite binary trees.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;

use crate::error::{check_exponent, Error, Result};
use crate::numeric::{abs_pow, compensated_sum, romberg};

const E: f64 = std::f64::consts::E;

/// Upper end of the numerically integrated range in (C_p) checks.
pub const CP_T_MAX: f64 = 1_099_511_627_776.0; // 2^40

/// Last admissible lacunar breakpoint.
pub const LACUNAR_CAP: u64 = 1 << 53;

#[derive(Clone, Debug, PartialEq)]
pub enum CompressionModulus {
    /// `t^a`.
    Power { a: f64 },
    /// `t^a / (L1^b · L2^c)` with `L1 = ln(t + e)`, `L2 = ln(L1 + e)`.
    PowerLog { a: f64, b: f64, c: f64 },
    Constant { c: f64 },
    /// `values[i]` on `[breakpoints[i], breakpoints[i+1])`, constant after
    /// the last breakpoint.
    Lacunar { breakpoints: Vec<u64>, values: Vec<f64> },
    /// Piecewise linear through `(t, f(t))`, constant past both ends.
    Tabulated { points: Vec<(f64, f64)> },
}

impl fmt::Display for CompressionModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressionModulus::Power { a } => write!(f, "pow:{a}"),
            CompressionModulus::PowerLog { a, b, c } => write!(f, "powlog:{a}:{b}:{c}"),
            CompressionModulus::Constant { c } => write!(f, "const:{c}"),
            CompressionModulus::Lacunar { breakpoints, .. } => write!(f, "lacunar[{} steps]", breakpoints.len()),
            CompressionModulus::Tabulated { points } => write!(f, "table[{} points]", points.len()),
        }
    }
}

fn parse_num(s: &str, text: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::usage(format!("bad number {s:?} in modulus {text:?}")))?;
    if !v.is_finite() {
        return Err(Error::usage(format!("non-finite number in modulus {text:?}")));
    }
    Ok(v)
}

impl CompressionModulus {
    /// Parses `pow:a`, `powlog:a:b[:c]`, `const:c` or `table:t=v,t=v,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let m = match kind {
            "pow" => CompressionModulus::Power { a: parse_num(rest, text)? },
            "powlog" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if !(2..=3).contains(&parts.len()) {
                    return Err(Error::usage(format!("powlog needs a:b or a:b:c, got {text:?}")));
                }
                let c = if parts.len() == 3 { parse_num(parts[2], text)? } else { 0.0 };
                CompressionModulus::PowerLog { a: parse_num(parts[0], text)?, b: parse_num(parts[1], text)?, c }
            }
            "const" => CompressionModulus::Constant { c: parse_num(rest, text)? },
            "table" => {
                let mut points = Vec::new();
                for item in rest.split(',') {
                    let (t, v) = item
                        .split_once('=')
                        .ok_or_else(|| Error::usage(format!("table entries are t=v, got {item:?}")))?;
                    points.push((parse_num(t, text)?, parse_num(v, text)?));
                }
                CompressionModulus::Tabulated { points }
            }
            _ => {
                return Err(Error::usage(format!(
                    "unknown modulus {text:?}; expected pow:a, powlog:a:b[:c], const:c or table:t=v,..."
                )))
            }
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        match self {
            CompressionModulus::Power { a } if *a < 0.0 => Err(Error::usage("power exponent must be >= 0")),
            CompressionModulus::PowerLog { a, b, c } if *a < 0.0 || *b < 0.0 || *c < 0.0 => {
                Err(Error::usage("powlog exponents must be >= 0"))
            }
            CompressionModulus::Constant { c } if *c < 0.0 => Err(Error::usage("constant must be >= 0")),
            CompressionModulus::Lacunar { breakpoints, values } => {
                if breakpoints.is_empty()
                    || breakpoints.len() != values.len()
                    || breakpoints[0] != 1
                    || breakpoints.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::usage("lacunar steps need increasing breakpoints starting at 1"));
                }
                Ok(())
            }
            CompressionModulus::Tabulated { points } => {
                if points.is_empty() || points.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::usage("table points need strictly increasing t"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CompressionModulus::Power { a } => t.powf(*a),
            CompressionModulus::PowerLog { a, b, c } => {
                let l1 = (t + E).ln();
                let l2 = (l1 + E).ln();
                t.powf(*a) / (l1.powf(*b) * l2.powf(*c))
            }
            CompressionModulus::Constant { c } => *c,
            CompressionModulus::Lacunar { breakpoints, values } => {
                let i = breakpoints.partition_point(|&n| n as f64 <= t);
                values[i.saturating_sub(1)]
            }
            CompressionModulus::Tabulated { points } => {
                let i = points.partition_point(|&(x, _)| x <= t);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[i - 1].1
                } else {
                    let (x0, y0) = points[i - 1];
                    let (x1, y1) = points[i];
                    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Checks `f` is nondecreasing on a dense grid of `[1, 2^40]`.
    pub fn check_monotone(&self) -> Result<()> {
        let mut grid: Vec<f64> = (1..=1024).map(|t| t as f64).collect();
        let steps = 8000;
        let top = CP_T_MAX.ln();
        grid.extend((0..=steps).map(|i| (top * i as f64 / steps as f64).exp()));
        match self {
            CompressionModulus::Lacunar { breakpoints, .. } => {
                grid.extend(breakpoints.iter().flat_map(|&n| [n as f64, n as f64 - 0.5]));
            }
            CompressionModulus::Tabulated { points } => grid.extend(points.iter().map(|p| p.0)),
            _ => {}
        }
        grid.retain(|&t| t >= 1.0);
        grid.sort_by(f64::total_cmp);
        let mut prev = self.eval(grid[0]);
        if !(prev >= 0.0) {
            return Err(Error::usage(format!("modulus {self} is negative or undefined at t=1")));
        }
        for &t in &grid[1..] {
            let v = self.eval(t);
            if !(v >= prev - 1e-12 * prev.abs()) {
                return Err(Error::usage(format!("modulus {self} decreases near t={t}")));
            }
            prev = v;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "converges",
            Verdict::Diverges => "diverges",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpReport {
    pub verdict: Verdict,
    /// `∫_1^{2^40} (f(t)/t)^p dt/t`.
    pub partial_integral: f64,
    /// Upper bound on the remaining tail; infinite when it diverges.
    pub tail_estimate: f64,
}

/// `∫_a^b (f(t)/t)^p dt/t` by Romberg in `s = ln t` on dyadic pieces.
pub fn cp_integral(f: &CompressionModulus, p: f64, a: f64, b: f64) -> f64 {
    let integrand = |s: f64| {
        let t = s.exp();
        abs_pow(f.eval(t) / t, p)
    };
    let mut cuts: Vec<f64> = Vec::new();
    let mut x = a;
    while x < b {
        cuts.push(x);
        x *= 2.0;
    }
    cuts.push(b);
    match f {
        CompressionModulus::Lacunar { breakpoints, .. } => {
            cuts.extend(breakpoints.iter().map(|&n| n as f64).filter(|&n| n > a && n < b));
        }
        CompressionModulus::Tabulated { points } => {
            cuts.extend(points.iter().map(|p| p.0).filter(|&n| n > a && n < b));
        }
        _ => {}
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces: Vec<f64> = cuts
        .windows(2)
        .map(|w| match f {
            // Constant on the piece: exact.
            CompressionModulus::Lacunar { .. } | CompressionModulus::Constant { .. } => {
                let v = f.eval(w[0]);
                abs_pow(v, p) * (w[0].powf(-p) - w[1].powf(-p)) / p
            }
            _ => romberg(integrand, w[0].ln(), w[1].ln(), 1e-11, 24),
        })
        .collect();
    compensated_sum(pieces)
}

/// Decides condition (C_p): `∫_1^∞ (f(t)/t)^p dt/t < ∞`.
pub fn check_cp(f: &CompressionModulus, p: f64) -> Result<CpReport> {
    check_exponent(p)?;
    f.check_monotone()?;
    let t = CP_T_MAX;
    let partial = cp_integral(f, p, 1.0, t);
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;
    let tail = match *f {
        CompressionModulus::Power { a } => {
            if a < 1.0 {
                t.powf(p * (a - 1.0)) / (p * (1.0 - a))
            } else {
                f64::INFINITY
            }
        }
        CompressionModulus::PowerLog { a, b, c } => {
            let l1 = (t + E).ln();
            let l2 = (l1 + E).ln();
            let (pb, pc) = (p * b, p * c);
            if a < 1.0 {
                t.powf(p * (a - 1.0)) / (p * (1.0 - a)) / (l1.powf(pb) * l2.powf(pc))
            } else if a > 1.0 || pb < 1.0 - 1e-12 {
                f64::INFINITY
            } else if pb > 1.0 + 1e-12 {
                // L1 ≥ ln t, so the tail is at most ∫ ds / s^{pb}.
                t.ln().powf(1.0 - pb) / (pb - 1.0) / l2.powf(pc)
            } else if pc > 1.0 && !close(pc, 1.0) {
                // pb = 1: ∫ ds / (s (ln s)^{pc}).
                t.ln().ln().powf(1.0 - pc) / (pc - 1.0)
            } else {
                f64::INFINITY
            }
        }
        CompressionModulus::Constant { c } => abs_pow(c, p) * t.powf(-p) / p,
        CompressionModulus::Lacunar { ref breakpoints, ref values } => {
            let last = *breakpoints.last().expect("validated") as f64;
            let stored = if last > t { cp_integral(f, p, t, last) } else { 0.0 };
            let from = last.max(t);
            stored + abs_pow(*values.last().expect("validated"), p) * from.powf(-p) / p
        }
        CompressionModulus::Tabulated { ref points } => {
            let last = points.last().expect("validated").0;
            let stored = if last > t { cp_integral(f, p, t, last) } else { 0.0 };
            stored + abs_pow(points.last().expect("validated").1, p) * last.max(t).powf(-p) / p
        }
    };
    let verdict = if !partial.is_finite() {
        Verdict::Inconclusive
    } else if tail.is_finite() {
        Verdict::Converges
    } else {
        Verdict::Diverges
    };
    Ok(CpReport { verdict, partial_integral: partial, tail_estimate: tail })
}

/// `ξ_0 = ξ_1 = 0`, `ξ_{j+1} − ξ_j = f(j)·j^{−1−1/p}`.
pub fn build_xi(f: &CompressionModulus, p: f64, n: usize) -> Result<Vec<f64>> {
    check_exponent(p)?;
    if n < 2 {
        return Err(Error::usage("xi needs N >= 2"));
    }
    f.check_monotone()?;
    if check_cp(f, p)?.verdict != Verdict::Converges {
        log::warn!("modulus {f} does not satisfy (C_{p}); the embedding is still built");
    }
    let mut xi = vec![0.0; n + 1];
    for j in 1..n {
        xi[j + 1] = xi[j] + f.eval(j as f64) * (j as f64).powf(-1.0 - 1.0 / p);
    }
    Ok(xi)
}

/// Sampled compression `ρ(t)` at integer `t = 1, 2, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionCurve {
    pub samples: Vec<(u32, f64)>,
}

impl CompressionCurve {
    /// `ρ(t) = min_{d ≥ t} m(d)` from per-distance minima `m`.
    pub fn from_distance_minima(minima: &[(u32, f64)]) -> Self {
        let top = minima.iter().map(|m| m.0).max().unwrap_or(0);
        let mut best = vec![f64::INFINITY; top as usize + 2];
        for &(d, v) in minima {
            best[d as usize] = best[d as usize].min(v);
        }
        let mut samples = Vec::with_capacity(top as usize);
        let mut run = f64::INFINITY;
        for d in (1..=top).rev() {
            run = run.min(best[d as usize]);
            samples.push((d, run));
        }
        samples.reverse();
        CompressionCurve { samples }
    }

    pub fn max_t(&self) -> u32 {
        self.samples.last().map_or(0, |s| s.0)
    }

    /// `ρ(t)` at integer `t`; `None` past the sampled range.
    pub fn at(&self, t: u32) -> Option<f64> {
        let first = self.samples.first()?.0;
        if t < first {
            return Some(self.samples[0].1);
        }
        self.samples.get((t - first) as usize).map(|s| s.1)
    }

    /// `ρ(⌈t⌉)`, a lower bound for the compression at real `t`.
    pub fn at_real(&self, t: f64) -> Option<f64> {
        self.at(t.max(1.0).ceil() as u32)
    }

    /// Piecewise-linear interpolation between integer samples.
    pub fn interpolate(&self, t: f64) -> f64 {
        let (first, last) = (self.samples[0].0 as f64, self.max_t() as f64);
        let t = t.clamp(first, last);
        let i = (t.floor() - first) as usize;
        let (t0, y0) = self.samples[i];
        match self.samples.get(i + 1) {
            Some(&(_, y1)) => y0 + (y1 - y0) * (t - t0 as f64),
            None => y0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        CompressionCurve { samples: self.samples.iter().map(|&(t, v)| (t, c * v)).collect() }
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    /// `ρ(t) ≤ lip·t` up to rounding.
    pub fn respects_lipschitz(&self, lip: f64) -> bool {
        self.samples.iter().all(|&(t, v)| v <= lip * t as f64 * (1.0 + 1e-12) + 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    /// Complete binary rooted tree with leaves at depth `J`.
    BinaryRooted(u32),
    /// Arbitrary finite tree as a parent array; `parent[root] == root`.
    General { parent: Vec<usize>, root: usize },
}

impl Tree {
    /// Builds a rooted tree from an undirected edge list by BFS.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], root: usize) -> Result<Self> {
        if root >= n || edges.len() + 1 != n {
            return Err(Error::usage("a tree on n vertices has n - 1 edges and a root below n"));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::usage("edge endpoint out of range"));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![usize::MAX; n];
        parent[root] = root;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if parent.contains(&usize::MAX) {
            return Err(Error::usage("edge list is not connected"));
        }
        Ok(Tree::General { parent, root })
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            Tree::BinaryRooted(j) => (1usize << (j + 1)) - 1,
            Tree::General { parent, .. } => parent.len(),
        }
    }

    /// Distinct triples `(k, k′, c)` with `k ≥ k′` realized by pairs `x ≠ y`:
    /// `k = d(x, z)`, `k′ = d(y, z)`, `c = depth z`, `z` the meet.
    pub fn meet_triples(&self) -> Result<Vec<(u32, u32, u32)>> {
        match *self {
            Tree::BinaryRooted(j) => {
                let mut out = Vec::new();
                for c in 0..j {
                    let h = j - c;
                    for k in 1..=h {
                        for k2 in 0..=k {
                            out.push((k, k2, c));
                        }
                    }
                }
                Ok(out)
            }
            Tree::General { ref parent, root } => general_triples(parent, root),
        }
    }
}

fn general_triples(parent: &[usize], root: usize) -> Result<Vec<(u32, u32, u32)>> {
    let n = parent.len();
    let mut children = vec![Vec::new(); n];
    for (v, &p) in parent.iter().enumerate() {
        if v != root {
            children[p].push(v);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut depth = vec![0u32; n];
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &c in &children[v] {
            depth[c] = depth[v] + 1;
            stack.push(c);
        }
    }
    if order.len() != n {
        return Err(Error::usage("parent array does not describe a tree"));
    }
    // Height of each subtree; every relative depth up to it is realized.
    let mut height = vec![0u32; n];
    for &v in order.iter().rev() {
        if v != root {
            let p = parent[v];
            height[p] = height[p].max(height[v] + 1);
        }
    }
    let work: u64 = (0..n).map(|v| (height[v] as u64 + 1).pow(2)).sum();
    if work > 50_000_000 {
        return Err(Error::resource("tree too deep for meet-depth enumeration"));
    }
    let mut seen = HashSet::new();
    for z in 0..n {
        let c = depth[z];
        let mut hs: Vec<u32> = children[z].iter().map(|&w| height[w] + 1).collect();
        hs.sort_unstable_by(|a, b| b.cmp(a));
        if let Some(&h0) = hs.first() {
            for k in 1..=h0 {
                seen.insert((k, 0, c));
            }
        }
        if hs.len() >= 2 {
            // Two branches of heights h0 ≥ h1: any k ≤ h0 with k′ ≤ h1, and
            // k ≤ h1 with k′ ≤ h0.
            let (h0, h1) = (hs[0], hs[1]);
            for k in 1..=h0 {
                for k2 in 1..=k.min(h1) {
                    seen.insert((k, k2, c));
                }
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeEmbedding {
    pub tree: Tree,
    pub p: f64,
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeCurve {
    pub curve: CompressionCurve,
    /// Largest edge length `‖F(x) − F(parent x)‖_p`.
    pub lipschitz: f64,
    /// `min_{x ≠ y} ‖F(x) − F(y)‖_p / d(x, y)`.
    pub min_ratio: f64,
}

impl TreeEmbedding {
    pub fn new(tree: Tree, p: f64, xi: Vec<f64>) -> Result<Self> {
        check_exponent(p)?;
        if xi.len() < 2 || xi[0] != 0.0 || xi[1] != 0.0 {
            return Err(Error::usage("xi must start with xi_0 = xi_1 = 0"));
        }
        if xi.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::usage("xi must be nondecreasing"));
        }
        Ok(TreeEmbedding { tree, p, xi })
    }

    /// Binary tree of depth `J` with `ξ` built from `f`.
    pub fn binary_from_modulus(j: u32, f: &CompressionModulus, p: f64) -> Result<Self> {
        if j == 0 || j > 20 {
            return Err(Error::resource("binary trees are supported for 1 <= J <= 20"));
        }
        let xi = build_xi(f, p, 2 * j as usize + 2)?;
        Self::new(Tree::BinaryRooted(j), p, xi)
    }

    fn xi_at(&self, i: u32) -> f64 {
        let i = i as usize;
        *self.xi.get(i).unwrap_or_else(|| self.xi.last().expect("nonempty"))
    }

    /// `‖F(x) − F(y)‖_p^p` for a pair with meet triple `(k, k′, c)`.
    pub fn triple_distance_pow(&self, k: u32, k2: u32, c: u32) -> f64 {
        let p = self.p;
        let mut terms = Vec::with_capacity((k + k2 + c + 1) as usize);
        terms.extend((0..k).map(|i| abs_pow(self.xi_at(i), p)));
        terms.extend((0..k2).map(|i| abs_pow(self.xi_at(i), p)));
        terms.extend((0..=c).map(|j| abs_pow(self.xi_at(k + j) - self.xi_at(k2 + j), p)));
        compensated_sum(terms)
    }

    fn max_depth(&self) -> Result<u32> {
        Ok(match &self.tree {
            Tree::BinaryRooted(j) => *j,
            Tree::General { .. } => self.meet_depths()?,
        })
    }

    fn meet_depths(&self) -> Result<u32> {
        Ok(self.tree.meet_triples()?.iter().map(|&(k, _, c)| k + c).max().unwrap_or(0))
    }

    /// Exact `ρ(t)` for `t = 1..diameter`, the Lipschitz constant and the
    /// smallest distance ratio, from meet-depth triples.
    pub fn compression_curve(&self) -> Result<TreeCurve> {
        let triples = self.tree.meet_triples()?;
        if self.xi.len() < (2 * self.max_depth()? + 2) as usize {
            return Err(Error::usage("xi is shorter than twice the tree depth"));
        }
        let p = self.p;
        let minima: Vec<(u32, f64)> = triples
            .par_iter()
            .map(|&(k, k2, c)| (k + k2, self.triple_distance_pow(k, k2, c).powf(1.0 / p)))
            .collect();
        let lipschitz = minima
            .iter()
            .zip(&triples)
            .filter(|(_, t)| t.0 == 1 && t.1 == 0)
            .map(|(m, _)| m.1)
            .fold(0.0, f64::max);
        let min_ratio = minima.iter().map(|&(d, v)| v / d as f64).fold(f64::INFINITY, f64::min);
        let curve = CompressionCurve::from_distance_minima(&minima);
        if !curve.respects_lipschitz(lipschitz) {
            return Err(Error::assertion("compression bound", "ρ(t) exceeds Lip·t"));
        }
        Ok(TreeCurve { curve, lipschitz, min_ratio })
    }

    /// `(Σ_{j=0}^{⌈n/2⌉−1} ξ_j^p)^{1/p}`, which bounds `ρ(n)` from below.
    pub fn lemma_bound(&self, n: u32) -> f64 {
        let top = n.div_ceil(2);
        compensated_sum((0..top).map(|j| abs_pow(self.xi_at(j), self.p))).powf(1.0 / self.p)
    }

    /// `(Σ_{i<J} (Δξ_i)^p)^{1/p}`, the length of the deepest edge.
    pub fn edge_bound(&self, j: u32) -> f64 {
        compensated_sum((0..j).map(|i| abs_pow(self.xi_at(i + 1) - self.xi_at(i), self.p))).powf(1.0 / self.p)
    }
}

/// `∫_1^{2J} (ρ(t)/(Lip·t))^q dt/t` with `ρ` interpolated linearly.
pub fn bourgain_integral(curve: &CompressionCurve, q: f64, j: u32, lip: f64) -> Result<f64> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::usage(format!("q must be a finite real > 1, got {q}")));
    }
    if !(lip > 0.0) {
        return Err(Error::usage("Lipschitz constant must be positive"));
    }
    let top = 2 * j;
    if j == 0 || curve.max_t() < top || curve.samples[0].0 > 1 {
        return Err(Error::usage(format!("curve must cover [1, {top}]")));
    }
    let pieces: Vec<f64> = (1..top)
        .map(|i| {
            romberg(
                |s: f64| {
                    let t = s.exp();
                    abs_pow(curve.interpolate(t) / (lip * t), q)
                },
                (i as f64).ln(),
                ((i + 1) as f64).ln(),
                1e-11,
                24,
            )
        })
        .collect();
    Ok(compensated_sum(pieces))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BourgainRow {
    pub j: u32,
    pub integral: f64,
    /// Smallest distance ratio of the Lipschitz-normalized map.
    pub min_ratio: f64,
    /// `(integral / ln J)^{1/q}`.
    pub bound: f64,
    pub lipschitz: f64,
}

/// Integral obstruction for the depth-`J` embedding built from `f`.
pub fn bourgain_row(f: &CompressionModulus, p: f64, q: f64, j: u32) -> Result<BourgainRow> {
    let emb = TreeEmbedding::binary_from_modulus(j, f, p)?;
    let tc = emb.compression_curve()?;
    let integral = bourgain_integral(&tc.curve, q, j, tc.lipschitz)?;
    let bound = if j >= 2 { (integral / (j as f64).ln()).powf(1.0 / q) } else { f64::INFINITY };
    Ok(BourgainRow { j, integral, min_ratio: tc.min_ratio / tc.lipschitz, bound, lipschitz: tc.lipschitz })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LacunarModulus {
    pub f: CompressionModulus,
    pub c: f64,
    pub breakpoints: Vec<u64>,
    /// `Σ_i (h(n_i)/n_i)^p`.
    pub series: f64,
}

fn is_sublinear(h: &CompressionModulus) -> Result<bool> {
    Ok(match *h {
        CompressionModulus::Power { a } => a < 1.0,
        CompressionModulus::PowerLog { a, b, c } => a < 1.0 || (a == 1.0 && (b > 0.0 || c > 0.0)),
        CompressionModulus::Constant { .. } => true,
        _ => {
            let top = LACUNAR_CAP as f64;
            let steps = 4000;
            let grid: Vec<f64> = (0..=steps).map(|i| (top.ln() * i as f64 / steps as f64).exp()).collect();
            let ratios: Vec<f64> = grid.iter().map(|&t| h.eval(t) / t).collect();
            ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) && ratios[steps] < ratios[0] * 1e-3
        }
    })
}

/// Smallest `n > prev` with `h(n)/n ≤ bound`, assuming `h(n)/n` decreases.
fn first_below(h: &CompressionModulus, prev: u64, bound: f64) -> Option<u64> {
    let ok = |n: u64| h.eval(n as f64) / n as f64 <= bound;
    let mut hi = prev + 1;
    while !ok(hi) {
        if hi >= LACUNAR_CAP {
            return None;
        }
        hi = (hi * 2).min(LACUNAR_CAP);
    }
    let mut lo = prev;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Step modulus `f = h(n_i)` on `[n_i, n_{i+1})` with `n_0 = 1` and `n_i` the
/// first integer past `n_{i−1}` where `h(n)/n ≤ 2^{−i}`.
pub fn lacunar_modulus(h: &CompressionModulus, p: f64) -> Result<LacunarModulus> {
    check_exponent(p)?;
    h.check_monotone()?;
    if !is_sublinear(h)? {
        return Err(Error::usage(format!("{h} is not sublinear")));
    }
    let mut breakpoints = vec![1u64];
    let mut i = 1;
    while let Some(n) = first_below(h, *breakpoints.last().expect("nonempty"), 2f64.powi(-i)) {
        breakpoints.push(n);
        i += 1;
        if i > 1000 {
            break;
        }
    }
    let values: Vec<f64> = breakpoints.iter().map(|&n| h.eval(n as f64)).collect();
    let series = compensated_sum(breakpoints.iter().zip(&values).map(|(&n, &v)| abs_pow(v / n as f64, p)));
    let f = CompressionModulus::Lacunar { breakpoints: breakpoints.clone(), values };
    f.validate()?;
    Ok(LacunarModulus { f, c: 1.0, breakpoints, series })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifier_examples() {
        let v = |s: &str| check_cp(&CompressionModulus::parse(s).unwrap(), 2.0).unwrap().verdict;
        assert_eq!(v("pow:0.9"), Verdict::Converges);
        assert_eq!(v("pow:1"), Verdict::Diverges);
        assert_eq!(v("powlog:1:0.5"), Verdict::Diverges);
        assert_eq!(v("powlog:1:0.5:1"), Verdict::Converges);
        assert_eq!(v("const:3"), Verdict::Converges);
    }

    #[test]
    fn non_monotone_is_rejected() {
        let f = CompressionModulus::parse("table:1=0,2=3,5=1").unwrap();
        assert!(matches!(check_cp(&f, 2.0), Err(Error::Usage(_))));
    }

    #[test]
    fn xi_for_square_root() {
        let xi = build_xi(&CompressionModulus::Power { a: 0.5 }, 2.0, 50).unwrap();
        assert_eq!(xi[0], 0.0);
        assert_eq!(xi[1], 0.0);
        for j in 1..50 {
            assert!((xi[j + 1] - xi[j] - 1.0 / j as f64).abs() < 1e-14);
        }
        let zero = build_xi(&CompressionModulus::Constant { c: 0.0 }, 2.0, 10).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        assert!(build_xi(&CompressionModulus::Constant { c: 1.0 }, 2.0, 1).is_err());
    }

    #[test]
    fn zero_xi_gives_zero_curve() {
        let emb = TreeEmbedding::new(Tree::BinaryRooted(5), 2.0, vec![0.0; 12]).unwrap();
        let c = emb.compression_curve().unwrap();
        assert!(c.curve.samples.iter().all(|s| s.1 == 0.0));
        assert_eq!(c.curve.max_t(), 10);
    }

    #[test]
    fn isometric_curve_integral() {
        let j = 10;
        let curve = CompressionCurve { samples: (1..=2 * j).map(|t| (t, t as f64)).collect() };
        let i = bourgain_integral(&curve, 2.0, j, 1.0).unwrap();
        assert!((i - (2.0 * j as f64).ln()).abs() < 1e-9);
        assert!(bourgain_integral(&curve, 2.0, j, 0.0).is_err());
    }

    #[test]
    fn lacunar_of_constant_is_constant() {
        let h = CompressionModulus::Constant { c: 3.0 };
        let l = lacunar_modulus(&h, 2.0).unwrap();
        for t in [1.0, 2.5, 100.0, 1e9] {
            assert_eq!(l.f.eval(t), 3.0);
        }
        assert!(lacunar_modulus(&CompressionModulus::Power { a: 1.0 }, 2.0).is_err());
    }

    #[test]
    fn lacunar_touches_h() {
        let h = CompressionModulus::parse("powlog:1:1").unwrap();
        let l = lacunar_modulus(&h, 2.0).unwrap();
        let report = check_cp(&l.f, 2.0).unwrap();
        assert_eq!(report.verdict, Verdict::Converges);
        for &n in &l.breakpoints {
            assert_eq!(l.f.eval(n as f64), h.eval(n as f64));
        }
        assert!(report.partial_integral + report.tail_estimate <= 3.0 * l.series);
    }

    #[test]
    fn general_binary_tree_matches_direct_triples() {
        let j = 4u32;
        let n = (1usize << (j + 1)) - 1;
        let edges: Vec<(usize, usize)> = (1..n).map(|v| ((v - 1) / 2, v)).collect();
        let general = Tree::from_edges(n, &edges, 0).unwrap();
        let mut a = Tree::BinaryRooted(j).meet_triples().unwrap();
        let mut b = general.meet_triples().unwrap();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }
}
