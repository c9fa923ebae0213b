#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use lpcomp::{GroupElement, MarkedGroup};

/// Word lengths of every element of `B(1, r)` by a plain hash-map BFS,
/// right-multiplying by generators.
pub fn bfs_lengths(group: &MarkedGroup, r: u32) -> HashMap<GroupElement, u32> {
    let e = group.identity();
    let mut dist = HashMap::from([(e.clone(), 0u32)]);
    let mut queue = VecDeque::from([e]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == r {
            continue;
        }
        for s in &group.generators()[1..] {
            let y = group.multiply(&x, s).unwrap();
            if !dist.contains_key(&y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// `C(2n, n)/4^n` for `n = 0..=n_max`: the lazy walk on `Z` returns at time
/// `n` exactly when the simple walk does at time `2n`.
pub fn lazy_z_returns(n_max: usize) -> Vec<f64> {
    let mut out = vec![1.0f64];
    for n in 1..=n_max {
        let prev = out[n - 1];
        out.push(prev * (2 * n - 1) as f64 / (2 * n) as f64);
    }
    out
}

/// Materialised tree map `F(x) = Σ_{i ≥ 1} ξ_i δ_{x_i}` along the path
/// `x = x_0, x_1, …, o`, and brute-force `min_{d(x,y) ≥ t} ‖F(x) − F(y)‖_p`.
pub struct BruteTree {
    pub parent: Vec<usize>,
    pub root: usize,
}

impl BruteTree {
    pub fn binary(depth: u32) -> Self {
        let n = (1usize << (depth + 1)) - 1;
        let parent = (0..n).map(|v| if v == 0 { 0 } else { (v - 1) / 2 }).collect();
        BruteTree { parent, root: 0 }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.parent.len()).filter(|&v| v != self.root).map(|v| (v, self.parent[v])).collect()
    }

    fn path(&self, mut x: usize) -> Vec<usize> {
        let mut out = vec![x];
        while x != self.root {
            x = self.parent[x];
            out.push(x);
        }
        out
    }

    fn image(&self, x: usize, xi: &[f64]) -> HashMap<usize, f64> {
        self.path(x)
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(i, v)| (v, xi[i.min(xi.len() - 1)]))
            .collect()
    }

    fn distance(&self, x: usize, y: usize) -> u32 {
        let px = self.path(x);
        let py = self.path(y);
        let mut i = px.len();
        let mut j = py.len();
        while i > 0 && j > 0 && px[i - 1] == py[j - 1] {
            i -= 1;
            j -= 1;
        }
        (i + j) as u32
    }

    /// `(ρ(1..=diameter), max edge length)`.
    pub fn curve(&self, xi: &[f64], p: f64) -> (Vec<f64>, f64) {
        let n = self.parent.len();
        let images: Vec<_> = (0..n).map(|x| self.image(x, xi)).collect();
        let mut best: HashMap<u32, f64> = HashMap::new();
        let mut lip = 0.0f64;
        for x in 0..n {
            for y in x + 1..n {
                let d = self.distance(x, y);
                let mut s = 0.0;
                for (v, a) in &images[x] {
                    s += (a - images[y].get(v).unwrap_or(&0.0)).abs().powf(p);
                }
                for (v, b) in &images[y] {
                    if !images[x].contains_key(v) {
                        s += b.abs().powf(p);
                    }
                }
                let norm = s.powf(1.0 / p);
                let e = best.entry(d).or_insert(f64::INFINITY);
                *e = e.min(norm);
                if d == 1 {
                    lip = lip.max(norm);
                }
            }
        }
        let diam = *best.keys().max().unwrap();
        let mut rho = vec![0.0; diam as usize];
        let mut run = f64::INFINITY;
        for d in (1..=diam).rev() {
            run = run.min(*best.get(&d).unwrap_or(&f64::INFINITY));
            rho[d as usize - 1] = run;
        }
        (rho, lip)
    }
}
