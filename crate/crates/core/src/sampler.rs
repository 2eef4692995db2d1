//! Discrete DPP sampling on quadrature nodes and pair functionals.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{discretize, eigensystem, DiscretizedKernel};
use crate::kernels::{Interval, KernelSpec};
use crate::specfun::QuadratureRule;

/// Identifier recorded in every batch.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64(seed), stream = configuration index";
/// Grid points per block side for ‖q‖₍₁,∞₎.
pub const NORM_GRID: usize = 64;
pub const NORM_AUDIT_GRID: usize = 256;
const OVERFLOW_GUARD: f64 = 500.0;

/// Spectral data of a discretized kernel, ready for sampling.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub kernel: String,
    pub window: Interval,
    pub rule: QuadratureRule,
    pub eigenvalues: Vec<f64>,
    /// Row k is the eigenvector of eigenvalues[k].
    pub eigenvectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub seed: u64,
    pub rng: String,
    pub kernel: String,
    pub window: Interval,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub configurations: Vec<Vec<f64>>,
}

impl SampleBatch {
    pub fn counts(&self) -> Vec<usize> {
        self.configurations.iter().map(Vec::len).collect()
    }

    /// One JSON array of sorted positions per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.configurations {
            out.push_str(&serde_json::to_string(c).expect("finite floats"));
            out.push('\n');
        }
        out
    }

    pub fn count_in(&self, config: usize, w: &Interval) -> usize {
        self.configurations[config].iter().filter(|&&x| w.contains(x)).count()
    }
}

impl Sampler {
    pub fn new(spec: &KernelSpec, window: &Interval, order: usize) -> Result<Self> {
        Self::from_discretized(discretize(spec, window, order)?)
    }

    pub fn from_discretized(d: DiscretizedKernel) -> Result<Self> {
        let e = eigensystem(&d)?;
        let eigenvalues = e.values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let eigenvectors = e.vectors.ok_or_else(|| invalid("eigenvectors missing"))?;
        Ok(Self { kernel: d.kernel, window: d.window, rule: d.rule, eigenvalues, eigenvectors })
    }

    pub fn order(&self) -> usize {
        self.rule.len()
    }

    /// Node indices of configuration `index` of the stream keyed by `seed`.
    pub fn sample_indices(&self, seed: u64, index: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let n = self.order();
        // stage 1: independent coins
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for (l, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let u: f64 = rng.gen();
            if u < *l {
                cols.push(v.clone());
            }
        }
        // stage 2: projection chain rule
        let mut picked = Vec::with_capacity(cols.len());
        while !cols.is_empty() {
            let m = cols.len();
            let diag: Vec<f64> = (0..n).map(|i| cols.iter().map(|c| c[i] * c[i]).sum()).collect();
            let total: f64 = diag.iter().sum();
            let mut target = rng.gen::<f64>() * total;
            let mut i = n - 1;
            for (j, d) in diag.iter().enumerate() {
                if target < *d {
                    i = j;
                    break;
                }
                target -= d;
            }
            picked.push(i);
            if m == 1 {
                break;
            }
            // eliminate coordinate i using the column with the largest entry there
            let p = (0..m).max_by(|&a, &b| cols[a][i].abs().total_cmp(&cols[b][i].abs())).unwrap();
            let pivot = cols.swap_remove(p);
            for c in cols.iter_mut() {
                let f = c[i] / pivot[i];
                for (x, y) in c.iter_mut().zip(&pivot) {
                    *x -= f * y;
                }
                c[i] = 0.0;
            }
            // re-orthonormalize (modified Gram–Schmidt)
            for a in 0..cols.len() {
                for b in 0..a {
                    let dot: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
                    let (head, tail) = cols.split_at_mut(a);
                    for (x, y) in tail[0].iter_mut().zip(&head[b]) {
                        *x -= dot * y;
                    }
                }
                let norm = cols[a].iter().map(|x| x * x).sum::<f64>().sqrt();
                cols[a].iter_mut().for_each(|x| *x /= norm);
            }
        }
        picked.sort_unstable();
        picked
    }

    pub fn sample(&self, count: usize, seed: u64) -> SampleBatch {
        let configurations = (0..count as u64)
            .into_par_iter()
            .map(|k| self.sample_indices(seed, k).into_iter().map(|i| self.rule.nodes[i]).collect())
            .collect();
        SampleBatch {
            seed,
            rng: RNG_ALGORITHM.to_string(),
            kernel: self.kernel.clone(),
            window: self.window,
            order: self.order(),
            nodes: self.rule.nodes.clone(),
            eigenvalues: self.eigenvalues.clone(),
            configurations,
        }
    }
}

pub fn sample(spec: &KernelSpec, window: &Interval, order: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    Ok(Sampler::new(spec, window, order)?.sample(count, seed))
}

type PairFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// q(x, y) with compact support [x.a, x.b] × [y.a, y.b]; q(x, x) is forced to 0.
#[derive(Clone)]
pub struct PairFunctional {
    pub name: String,
    q: Arc<PairFn>,
    pub support_x: Interval,
    pub support_y: Interval,
}

impl std::fmt::Debug for PairFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PairFunctional")
            .field("name", &self.name)
            .field("support_x", &self.support_x)
            .field("support_y", &self.support_y)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockNorm {
    pub k: i64,
    pub l: i64,
    pub max: f64,
}

impl PairFunctional {
    pub fn new(
        name: impl Into<String>,
        support_x: Interval,
        support_y: Interval,
        q: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        for w in [support_x, support_y] {
            if !w.a.is_finite() || !w.b.is_finite() {
                return Err(invalid("pair functional support must be bounded"));
            }
        }
        Ok(Self { name: name.into(), q: Arc::new(q), support_x, support_y })
    }

    pub fn zero() -> Self {
        let w = Interval { a: 0.0, b: 1.0 };
        Self::new("zero", w, w, |_, _| 0.0).expect("bounded")
    }

    /// e^{−x²−y²} on [−h, h]².
    pub fn gaussian_bump(half_width: f64) -> Result<Self> {
        let w = Interval::new(-half_width, half_width)?;
        Self::new(format!("gaussian_bump:{half_width}"), w, w, |x, y| (-x * x - y * y).exp())
    }

    /// The constant c on [a, b]².
    pub fn indicator_box(c: f64, a: f64, b: f64) -> Result<Self> {
        let w = Interval::new(a, b)?;
        Self::new(format!("box:{c}:{a}:{b}"), w, w, move |_, _| c)
    }

    /// Bilinear interpolation of values on a uniform grid over [xa, xb] × [ya, yb].
    pub fn custom_grid(support_x: Interval, support_y: Interval, values: Vec<Vec<f64>>) -> Result<Self> {
        let rows = values.len();
        let cols = values.first().map_or(0, Vec::len);
        if rows < 2 || cols < 2 || values.iter().any(|r| r.len() != cols) {
            return Err(invalid("custom grid needs a rectangular table of at least 2x2"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("custom grid values must be finite"));
        }
        let (sx, sy) = (support_x, support_y);
        Self::new("custom_grid", sx, sy, move |x, y| {
            let u = (x - sx.a) / sx.length() * (rows - 1) as f64;
            let v = (y - sy.a) / sy.length() * (cols - 1) as f64;
            let i = (u.floor() as usize).min(rows - 2);
            let j = (v.floor() as usize).min(cols - 2);
            let (fu, fv) = (u - i as f64, v - j as f64);
            (1.0 - fu) * (1.0 - fv) * values[i][j]
                + fu * (1.0 - fv) * values[i + 1][j]
                + (1.0 - fu) * fv * values[i][j + 1]
                + fu * fv * values[i + 1][j + 1]
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if x == y || !self.support_x.contains(x) || !self.support_y.contains(y) {
            return 0.0;
        }
        (self.q)(x, y)
    }

    /// max |q| over each block [k−1, k+1] × [l−1, l+1] meeting the support,
    /// by a `grid`×`grid` search over the intersection.
    pub fn block_norms(&self, grid: usize) -> Vec<BlockNorm> {
        let range = |w: &Interval| ((w.a - 1.0).ceil() as i64, (w.b + 1.0).floor() as i64);
        let axis = |k: i64, w: &Interval| -> Vec<f64> {
            let lo = w.a.max(k as f64 - 1.0);
            let hi = w.b.min(k as f64 + 1.0);
            if hi <= lo {
                return vec![lo];
            }
            (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect()
        };
        let (k0, k1) = range(&self.support_x);
        let (l0, l1) = range(&self.support_y);
        let mut out = Vec::new();
        for k in k0..=k1 {
            let xs = axis(k, &self.support_x);
            for l in l0..=l1 {
                let ys = axis(l, &self.support_y);
                let mut max = 0.0f64;
                for &x in &xs {
                    for &y in &ys {
                        max = max.max(self.eval(x, y).abs());
                    }
                }
                out.push(BlockNorm { k, l, max });
            }
        }
        out
    }

    pub fn norm_1_inf_with(&self, grid: usize) -> f64 {
        self.block_norms(grid).iter().map(|b| b.max).sum()
    }

    pub fn norm_1_inf(&self) -> f64 {
        self.norm_1_inf_with(NORM_GRID)
    }

    /// (64-grid value, 256-grid audit value).
    pub fn norm_audit(&self) -> (f64, f64) {
        (self.norm_1_inf(), self.norm_1_inf_with(NORM_AUDIT_GRID))
    }
}

/// Σ over ordered pairs of distinct particles of q(x, y).
pub fn additive_functional(config: &[f64], q: &PairFunctional) -> f64 {
    let mut s = 0.0;
    for (i, &x) in config.iter().enumerate() {
        for (j, &y) in config.iter().enumerate() {
            if i != j {
                s += q.eval(x, y);
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample mean and standard error of exp(λ·S_q).
pub fn mc_exp_moment(batch: &SampleBatch, q: &PairFunctional, lambda: f64) -> Result<McEstimate> {
    if batch.configurations.is_empty() {
        return Err(invalid("empty sample batch"));
    }
    let s: Vec<f64> = batch.configurations.iter().map(|c| lambda * additive_functional(c, q)).collect();
    let worst = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if worst >= OVERFLOW_GUARD {
        return Err(Error::Domain { what: "lambda * S_q exceeds the overflow guard", value: worst });
    }
    let e: Vec<f64> = s.iter().map(|v| v.exp()).collect();
    let (estimate, stderr) = mean_and_stderr(&e);
    Ok(McEstimate { estimate, stderr, samples: e.len(), seed: batch.seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaProbe {
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
}

/// E[f₁f₂] against E[f₁]E[f₂] for capped counts f_i = min(#_{C_i}, cap).
///
/// The standard error is that of lhs − rhs, from the per-sample influence
/// f₁f₂ − μ₂f₁ − μ₁f₂.
pub fn negative_association_probe(batch: &SampleBatch, c1: &Interval, c2: &Interval, cap: usize) -> Result<NaProbe> {
    if c1.b > c2.a && c2.b > c1.a {
        return Err(invalid(format!("windows {c1} and {c2} overlap")));
    }
    let n = batch.configurations.len();
    if n < 2 {
        return Err(invalid("negative association probe needs at least two samples"));
    }
    let f: Vec<(f64, f64)> = (0..n)
        .map(|i| (batch.count_in(i, c1).min(cap) as f64, batch.count_in(i, c2).min(cap) as f64))
        .collect();
    let nf = n as f64;
    let m1 = f.iter().map(|p| p.0).sum::<f64>() / nf;
    let m2 = f.iter().map(|p| p.1).sum::<f64>() / nf;
    let lhs = f.iter().map(|p| p.0 * p.1).sum::<f64>() / nf;
    let infl: Vec<f64> = f.iter().map(|p| p.0 * p.1 - m2 * p.0 - m1 * p.1).collect();
    let (_, stderr) = mean_and_stderr(&infl);
    Ok(NaProbe { lhs, rhs: m1 * m2, stderr })
}
