//! Small numerical helpers: compensated sums, Romberg quadrature, log-log fits.

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Romberg integration of a smooth integrand on `[a, b]`.
///
/// Trapezoid grids are halved until two successive Richardson estimates
/// agree to `rel_tol` (relative) or `max_levels` is reached.
pub fn romberg<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, max_levels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_levels);
    let mut h = b - a;
    rows.push(vec![0.5 * h * (f(a) + f(b))]);
    for level in 1..max_levels {
        h *= 0.5;
        let n_new = 1usize << (level - 1);
        let mid: f64 = compensated_sum((0..n_new).map(|i| f(a + (2 * i + 1) as f64 * h)));
        let mut row = Vec::with_capacity(level + 1);
        row.push(0.5 * rows[level - 1][0] + h * mid);
        let mut factor = 1.0;
        for j in 1..=level {
            factor *= 4.0;
            let prev = rows[level - 1][j - 1];
            row.push(row[j - 1] + (row[j - 1] - prev) / (factor - 1.0));
        }
        let best = row[level];
        let before = rows[level - 1][level - 1];
        rows.push(row);
        if level >= 3 && (best - before).abs() <= rel_tol * best.abs().max(f64::MIN_POSITIVE) {
            return best;
        }
    }
    let last = rows.last().expect("at least one level");
    last[last.len() - 1]
}

/// Ordinary least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x`, skipping non-positive samples.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    linear_fit(&logs).map(|(slope, _)| slope)
}

/// `|x|^p`, with the common integer exponents special-cased.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
