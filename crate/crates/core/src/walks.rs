//! Symmetric random walks: exact convolution powers, return probabilities
//! and the return-probability route to isoperimetric certificates.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functions::{convolve, BoundaryPolicy, GroupFunction};
use crate::groups::{Ball, MarkedGroup};
use crate::isoperimetry::ProfileCertificate;
use crate::numeric::{compensated_sum, relative_error};

#[derive(Clone, Debug)]
pub struct WalkMeasure {
    nu: GroupFunction,
    symmetric: bool,
    lazy: bool,
}

impl WalkMeasure {
    /// Mass `1/2` at the identity, the rest spread evenly over `S ∖ {e}`.
    pub fn lazy_uniform(ball: Arc<Ball>) -> Result<Self> {
        let ngen = ball.group().num_generators();
        if ball.radius() < 1 {
            return Err(Error::resource("walk measures need a ball of radius >= 1"));
        }
        let w = 0.5 / (ngen - 1) as f64;
        let mut values = vec![(0usize, 0.5)];
        for s in 1..ngen {
            values.push((ball.left_mul(0, s).expect("generators lie in B(1,1)"), w));
        }
        Self::from_weights(ball, values)
    }

    /// Uniform on `S ∖ {e}` (no holding).
    pub fn simple(ball: Arc<Ball>) -> Result<Self> {
        let ngen = ball.group().num_generators();
        let w = 1.0 / (ngen - 1) as f64;
        let values: Vec<(usize, f64)> = (1..ngen)
            .map(|s| (ball.left_mul(0, s).expect("generators lie in B(1,1)"), w))
            .collect();
        Self::from_weights(ball, values)
    }

    pub fn from_weights(ball: Arc<Ball>, values: Vec<(usize, f64)>) -> Result<Self> {
        if values.iter().any(|&(_, v)| !(v >= 0.0)) {
            return Err(Error::usage("walk weights must be nonnegative"));
        }
        let nu = GroupFunction::from_values(ball.clone(), values)?;
        let total = nu.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::usage(format!("walk weights sum to {total}, not 1")));
        }
        let symmetric = nu.iter().all(|(g, v)| nu.get(ball.inverse_index(g)) == v);
        let lazy = nu.get(0) > 0.0;
        Ok(WalkMeasure { nu, symmetric, lazy })
    }

    pub fn function(&self) -> &GroupFunction {
        &self.nu
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_lazy(&self) -> bool {
        self.lazy
    }

    fn step_radius(&self) -> u32 {
        self.nu.support_radius()
    }
}

/// All powers `ν^{(0)}, …, ν^{(n)}`.
pub fn convolution_powers(nu: &WalkMeasure, n: u32) -> Result<Vec<GroupFunction>> {
    let ball = nu.function().ball().clone();
    let need = n as u64 * nu.step_radius() as u64;
    if need > ball.radius() as u64 {
        return Err(Error::resource(format!(
            "{n} steps need a ball of radius {need}, have {}",
            ball.radius()
        )));
    }
    let mut powers = vec![GroupFunction::delta_identity(ball)];
    for k in 0..n as usize {
        let next = convolve(nu.function(), &powers[k], BoundaryPolicy::Strict)?.function;
        let mass = next.sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::assertion("mass conservation", format!("step {}: total mass {mass}", k + 1)));
        }
        powers.push(next);
    }
    Ok(powers)
}

pub fn convolution_power(nu: &WalkMeasure, n: u32) -> Result<GroupFunction> {
    Ok(convolution_powers(nu, n)?.pop().expect("n + 1 powers"))
}

/// `ν^{(n)}(1)` for `n = 0..=n_max`.
pub fn return_probabilities(nu: &WalkMeasure, n_max: u32) -> Result<Vec<f64>> {
    Ok(convolution_powers(nu, n_max)?.iter().map(|f| f.get(0)).collect())
}

pub fn return_probability(nu: &WalkMeasure, n: u32) -> Result<f64> {
    Ok(convolution_power(nu, n)?.get(0))
}

/// `min_q 2(ψ(q) − ψ(q+1))/ψ(q)` over `q ∈ [n, 2n−1]` versus the bound
/// `(2/n)·ln(ψ(n)/ψ(2n))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub n: u32,
    pub q_star: u32,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Selection from `ψ(0..=2n)`.
pub fn select_scale(psi: &[f64], n: u32) -> Result<Selection> {
    let n_us = n as usize;
    if n == 0 || psi.len() < 2 * n_us + 1 {
        return Err(Error::usage("selection needs n >= 1 and psi up to 2n"));
    }
    let mut best = (n, f64::INFINITY);
    for q in n_us..2 * n_us {
        let r = 2.0 * (psi[q] - psi[q + 1]) / psi[q];
        if r < best.1 {
            best = (q as u32, r);
        }
    }
    let bound = 2.0 / n as f64 * (psi[n_us] / psi[2 * n_us]).ln();
    Ok(Selection { n, q_star: best.0, ratio: best.1, bound, holds: best.1 <= bound * (1.0 + 1e-12) })
}

#[derive(Clone, Debug)]
pub struct WalkCertificate {
    pub certificate: ProfileCertificate,
    pub selection: Selection,
    /// `ψ(q) = ‖ν^{(q)}‖_2^2` for `q = 0..=2n`.
    pub psi: Vec<f64>,
    /// `(min_{s ∈ S} ν^{(2)}(s) / ratio)^{1/2}`, implied by the selection.
    pub converted_bound: f64,
    /// Largest relative error in the energy identity over `q < 2n`.
    pub energy_error: f64,
}

/// Certificate with witness `ν^{(q*)}`, `q*` the selected scale.
pub fn walk_profile_certificate(nu: &WalkMeasure, n: u32) -> Result<WalkCertificate> {
    if !nu.is_lazy() || !nu.is_symmetric() {
        return Err(Error::usage("walk certificates need a lazy symmetric measure"));
    }
    if n == 0 {
        return Err(Error::usage("walk certificates need n >= 1"));
    }
    let ball = nu.function().ball().clone();
    let powers = convolution_powers(nu, 2 * n)?;
    let psi: Vec<f64> = powers.iter().map(|f| f.lp_norm_pow(2.0)).collect();
    let nu2 = convolve(nu.function(), nu.function(), BoundaryPolicy::Strict)?.function;
    let mut energy_error = 0.0f64;
    for q in 0..2 * n as usize {
        let lhs = powers[q].weighted_dirichlet_energy(&nu2)?;
        let rhs = 2.0 * (psi[q] - psi[q + 1]);
        energy_error = energy_error.max(relative_error(lhs, rhs));
    }
    if energy_error > 1e-10 {
        return Err(Error::assertion("energy identity", format!("relative error {energy_error}")));
    }
    let selection = select_scale(&psi, n)?;
    let group = ball.group();
    let min_s = (1..group.num_generators())
        .map(|s| nu2.get(ball.left_mul(0, s).expect("generator")))
        .fold(f64::INFINITY, f64::min);
    if !(min_s > 0.0) {
        return Err(Error::usage("the measure must charge every generator"));
    }
    let converted_bound = (min_s / selection.ratio).sqrt();
    let witness = powers[selection.q_star as usize].clone();
    let certificate = ProfileCertificate::from_explicit(witness, 2.0, "walk")?;
    if certificate.ratio < converted_bound * (1.0 - 1e-10) {
        return Err(Error::assertion(
            "gradient conversion",
            format!("ratio {} below converted bound {converted_bound}", certificate.ratio),
        ));
    }
    Ok(WalkCertificate { certificate, selection, psi, converted_bound, energy_error })
}

fn pascal(n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = prev[k - 1] + prev[k];
        }
        rows.push(row);
    }
    rows
}

/// Return probabilities `P_0..=P_N` of the lazy uniform walk on `C_m ≀ Z`
/// (`m = 1` gives the lazy walk on `Z`), by summing over the crossing
/// numbers of the cursor path.
///
/// Each visit slot at a site absorbs holding steps, which either idle or
/// add a uniform nonzero lamp value; a site with `v` slots returns its lamp
/// to zero with generating function
/// `G_v(z) = ((1 − αz)^{−v} + (m − 1)(1 − βz)^{−v}) / m`.
pub fn lamplighter_return_series(m: u32, n_max: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::usage("lamp group order must be >= 1"));
    }
    if n_max > 400 {
        return Err(Error::resource("return series supported up to N = 400"));
    }
    let n = n_max;
    let mf = m as f64;
    let w = 1.0 / (2.0 * (mf + 1.0));
    let alpha = 0.5 + (mf - 1.0) * w;
    let beta = 0.5 - w;
    let binom = pascal(2 * n + 2);
    let c = |a: usize, b: usize| -> f64 { if b > a { 0.0 } else { binom[a][b] } };
    // g[v][j]: coefficient of z^j in G_v.
    let g: Vec<Vec<f64>> = (0..=n + 1)
        .map(|v| {
            (0..=n)
                .map(|j| {
                    if v == 0 {
                        return if j == 0 { 1.0 } else { 0.0 };
                    }
                    let a = alpha.powi(j as i32);
                    let b = (mf - 1.0) * beta.powi(j as i32);
                    c(j + v - 1, j) * (a + b) / mf
                })
                .collect()
        })
        .collect();
    let half = n / 2;
    let w2 = w * w;
    // r[c][d]: coefficient of z^d in R(c).
    let mut r = vec![vec![0.0; n + 1]; half + 1];
    r[0][0] = 1.0;
    for d in 0..=n {
        for cc in 1..=half {
            let mut terms = vec![g[cc][d]];
            let mut wp = 1.0;
            for c2 in 1..=d / 2 {
                wp *= w2;
                if cc + c2 > n + 1 || c2 > half {
                    break;
                }
                let e = d - 2 * c2;
                let gv = &g[cc + c2];
                let conv = compensated_sum((0..=e).map(|i| gv[i] * r[c2][e - i]));
                terms.push(c(cc + c2 - 1, c2) * wp * conv);
            }
            r[cc][d] = compensated_sum(terms);
        }
    }
    let truncated_product = |a: &[f64], b: &[f64], len: usize| -> Vec<f64> {
        (0..=len).map(|k| compensated_sum((0..=k).map(|i| a[i] * b[k - i]))).collect()
    };
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    for total in 0..=half {
        let budget = n - 2 * total;
        let gv = &g[total + 1];
        for c0 in 0..=total {
            let c1 = total - c0;
            let weight = c(total, c0) * w2.powi(total as i32);
            let rr = truncated_product(&r[c0], &r[c1], budget);
            let h = truncated_product(gv, &rr, budget);
            for (e, v) in h.into_iter().enumerate() {
                terms[2 * total + e].push(weight * v);
            }
        }
    }
    let out: Vec<f64> = terms.into_iter().map(compensated_sum).collect();
    Ok(out)
}

/// Monte-Carlo frequency of returns at time `n`. Not a certificate.
pub fn simulate_return_frequency(group: &MarkedGroup, lazy: bool, n: u32, trials: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = group.generators();
    let e = group.identity();
    let mut hits = 0u64;
    for _ in 0..trials {
        let mut x = e.clone();
        for _ in 0..n {
            if lazy && rng.gen_bool(0.5) {
                continue;
            }
            let s = rng.gen_range(1..gens.len());
            x = group.multiply_unchecked(&x, &gens[s]);
        }
        if x == e {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}
