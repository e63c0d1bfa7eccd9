//! Seeded generators for the benchmark matrix families.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`; uniform reals are `rng.gen::<f64>()`, uniform
//! indices `rng.gen_range(0..n)`. The same seed gives a bitwise-identical
//! matrix on every platform.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::apps::AreProblem;
use crate::error::{Error, Result};
use crate::sparse::{lu_invert, power_iteration_radius, SparseMatrix};

/// Power iterations used for automatic α.
pub const ALPHA_POWER_ITERS: usize = 300;
/// Automatic α puts `α·ρ(H)` at this value.
pub const AUTO_ALPHA_TARGET: f64 = 0.9;

/// Tridiagonal dispersion stencil `[λ, 1−2λ, λ]`.
pub fn dispersion_stencil(lambda: f64) -> ([f64; 3], [isize; 3]) {
    ([lambda, 1.0 - 2.0 * lambda, lambda], [-1, 0, 1])
}

/// Riccati `B` stencil on offsets `-2..=2`.
pub const ARE_B_STENCIL: [f64; 5] = [-1.6, 0.0, 0.8, 0.0, -1.6];
/// Riccati `C` stencil on offsets `-1..=1`.
pub const ARE_C_STENCIL: [f64; 3] = [1.0 / 16.0, 7.0 / 8.0, 1.0 / 16.0];
/// Density of the random SPD `D` in Riccati problems.
pub const ARE_D_DENSITY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum AlphaPolicy {
    Explicit(f64),
    /// `α = 0.9 / ρ(H)` with ρ from power iteration.
    Auto,
}

/// Serializable description of a generated matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum GenSpec {
    RandSparse {
        n: usize,
        density: f64,
        seed: u64,
        /// Adds `2·n·density` to the diagonal; false reproduces a raw
        /// `sprand`-style matrix.
        shift: bool,
    },
    RandSpd { n: usize, density: f64, seed: u64 },
    Banded {
        n: usize,
        stencil: Vec<f64>,
        offsets: Vec<isize>,
    },
    /// `[[0, B], [I, 0]]` with `B` the dispersion matrix.
    DispersionEmbedding { n: usize, lambda: f64 },
    Network { n: usize, seed: u64, alpha: AlphaPolicy },
}

impl GenSpec {
    pub fn generate(&self) -> Result<SparseMatrix> {
        match self {
            GenSpec::RandSparse {
                n,
                density,
                seed,
                shift,
            } => gen_rand_sparse_with(*n, *density, *seed, *shift),
            GenSpec::RandSpd { n, density, seed } => gen_rand_spd(*n, *density, *seed),
            GenSpec::Banded { n, stencil, offsets } => gen_banded(*n, stencil, offsets),
            GenSpec::DispersionEmbedding { n, lambda } => {
                let (s, o) = dispersion_stencil(*lambda);
                let b = gen_banded(*n, &s, &o)?;
                sign_embedding(&b)
            }
            GenSpec::Network { n, seed, alpha } => {
                let edges = gen_core_periphery_graph(*n, *seed)?;
                gen_network_sign_input(&edges, *alpha)
            }
        }
    }
}

fn check_density(density: f64) -> Result<()> {
    if density > 0.0 && density <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("density {density} not in (0, 1]")))
    }
}

/// `k` distinct positions from `0..total`, in sampling order.
fn sample_distinct(rng: &mut ChaCha8Rng, total: u64, k: u64) -> Vec<u64> {
    if k >= total {
        return (0..total).collect();
    }
    if 2 * k > total {
        // Dense: sample the excluded positions instead.
        let excluded: HashSet<u64> = sample_distinct(rng, total, total - k).into_iter().collect();
        return (0..total).filter(|p| !excluded.contains(p)).collect();
    }
    let mut seen = HashSet::with_capacity(k as usize);
    let mut out = Vec::with_capacity(k as usize);
    while (out.len() as u64) < k {
        let p = rng.gen_range(0..total);
        if seen.insert(p) {
            out.push(p);
        }
    }
    out
}

/// Random pattern with `round(density·n²)` entries uniform on (0, 1), plus
/// `2·n·density` on the diagonal so the spectrum stays off the imaginary
/// axis.
pub fn gen_rand_sparse(n: usize, density: f64, seed: u64) -> Result<SparseMatrix> {
    gen_rand_sparse_with(n, density, seed, true)
}

pub fn gen_rand_sparse_with(n: usize, density: f64, seed: u64, shift: bool) -> Result<SparseMatrix> {
    check_density(density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (n as u64) * (n as u64);
    let k = (density * total as f64).round() as u64;
    let mut entries: Vec<(usize, usize, f64)> = sample_distinct(&mut rng, total, k)
        .into_iter()
        .map(|p| ((p / n as u64) as usize, (p % n as u64) as usize, rng.gen::<f64>()))
        .collect();
    if shift {
        let d = 2.0 * n as f64 * density;
        let mut has_diag = vec![false; n];
        for e in entries.iter_mut() {
            if e.0 == e.1 {
                e.2 += d;
                has_diag[e.0] = true;
            }
        }
        entries.extend((0..n).filter(|&i| !has_diag[i]).map(|i| (i, i, d)));
    }
    SparseMatrix::from_triplets(n, n, &entries)
}

/// Symmetric positive definite: random symmetric off-diagonal pattern
/// (about `density·n²` entries, values uniform on (−1, 1)) with diagonal
/// `Σ|a_ij| + 0.1 + u`, `u ~ U(0, 1)`. Gershgorin gives `λ_min >= 0.1`.
pub fn gen_rand_spd(n: usize, density: f64, seed: u64) -> Result<SparseMatrix> {
    check_density(density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let k = ((density * (n * n) as f64 - n as f64).max(0.0) / 2.0).round() as u64;
    let mut entries = Vec::new();
    let mut abs_sums = vec![0.0; n];
    for p in sample_distinct(&mut rng, upper, k.min(upper)) {
        let (i, j) = upper_pair(n, p);
        let v = 2.0 * rng.gen::<f64>() - 1.0;
        if v == 0.0 {
            continue;
        }
        entries.push((i, j, v));
        entries.push((j, i, v));
        abs_sums[i] += v.abs();
        abs_sums[j] += v.abs();
    }
    for (i, s) in abs_sums.iter().enumerate() {
        entries.push((i, i, s + 0.1 + rng.gen::<f64>()));
    }
    SparseMatrix::from_triplets(n, n, &entries)
}

/// Maps `p` in `0..n(n−1)/2` to the strict upper-triangle pair `(i, j)`,
/// row by row.
fn upper_pair(n: usize, mut p: u64) -> (usize, usize) {
    let mut i = 0usize;
    loop {
        let row_len = (n - 1 - i) as u64;
        if p < row_len {
            return (i, i + 1 + p as usize);
        }
        p -= row_len;
        i += 1;
    }
}

/// Toeplitz band matrix: the value for offset `d` fills the whole
/// length-`(n − |d|)` diagonal (positive `d` above the main diagonal).
pub fn gen_banded(n: usize, stencil: &[f64], offsets: &[isize]) -> Result<SparseMatrix> {
    if stencil.len() != offsets.len() {
        return Err(Error::InvalidParameter(format!(
            "{} stencil values for {} offsets",
            stencil.len(),
            offsets.len()
        )));
    }
    let mut entries = Vec::new();
    for (&v, &d) in stencil.iter().zip(offsets) {
        if v == 0.0 || d.unsigned_abs() >= n {
            continue;
        }
        for i in 0..n {
            let j = i as isize + d;
            if j >= 0 && (j as usize) < n {
                entries.push((i, j as usize, v));
            }
        }
    }
    // Repeated offsets accumulate.
    entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
    for (i, j, v) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => merged.push((i, j, v)),
        }
    }
    SparseMatrix::from_triplets(n, n, &merged)
}

/// `[[0, B], [I, 0]]`, whose sign is `[[0, B^{1/2}], [B^{-1/2}, 0]]`.
pub fn sign_embedding(b: &SparseMatrix) -> Result<SparseMatrix> {
    if !b.is_square() {
        return Err(Error::NotSquare {
            op: "sign_embedding",
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    let n = b.nrows();
    let eye = SparseMatrix::identity(n);
    SparseMatrix::from_blocks(n, [[None, Some(b)], [Some(&eye), None]])
}

/// Riccati test problem: banded `B`, `C`; random SPD `D`; `Q = B·D⁻¹·Bᵀ`
/// symmetrized.
pub fn gen_are_pair(n: usize, seed: u64) -> Result<AreProblem> {
    if n < 5 {
        return Err(Error::InvalidParameter(format!("are pair needs n >= 5, got {n}")));
    }
    let b = gen_banded(n, &ARE_B_STENCIL, &[-2, -1, 0, 1, 2])?;
    let c = gen_banded(n, &ARE_C_STENCIL, &[-1, 0, 1])?;
    let d = gen_rand_spd(n, ARE_D_DENSITY, seed)?;
    let q = symmetrize(&b.matmul(&lu_invert(&d)?)?.matmul(&b.transpose())?)?;
    AreProblem::new(b, c, d, q)
}

/// `(G + Gᵀ)/2`.
pub fn symmetrize(g: &SparseMatrix) -> Result<SparseMatrix> {
    g.add(&g.transpose(), 0.5, 0.5)
}

/// `I − αH` for the undirected simple graph `edges` on nodes
/// `0..=max index`.
pub fn gen_network_sign_input(edges: &[(usize, usize)], alpha: AlphaPolicy) -> Result<SparseMatrix> {
    let h = adjacency(edges)?;
    let alpha = match alpha {
        AlphaPolicy::Explicit(a) => a,
        AlphaPolicy::Auto => auto_alpha(&h)?,
    };
    SparseMatrix::identity(h.nrows()).add(&h, 1.0, -alpha)
}

/// `0.9 / ρ(H)`.
pub fn auto_alpha(h: &SparseMatrix) -> Result<f64> {
    let rho = power_iteration_radius(h, ALPHA_POWER_ITERS, 0)?;
    if rho == 0.0 {
        return Err(Error::EmptyGraph);
    }
    Ok(AUTO_ALPHA_TARGET / rho)
}

/// Symmetric 0/1 adjacency matrix. Duplicate edges collapse; self loops are
/// rejected.
pub fn adjacency(edges: &[(usize, usize)]) -> Result<SparseMatrix> {
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap() + 1;
    let mut set = HashSet::with_capacity(edges.len());
    let mut entries = Vec::with_capacity(2 * edges.len());
    for &(a, b) in edges {
        if a == b {
            return Err(Error::InvalidParameter(format!("self loop on node {a}")));
        }
        let key = (a.min(b), a.max(b));
        if set.insert(key) {
            entries.push((a, b, 1.0));
            entries.push((b, a, 1.0));
        }
    }
    SparseMatrix::from_triplets(n, n, &entries)
}

/// Nodes in the dense core of [`gen_core_periphery_graph`].
pub const CORE_SIZE: usize = 48;
/// Edge probability inside the core.
pub const CORE_DENSITY: f64 = 0.5;
/// Periphery nodes link to neighbours up to this many positions back.
pub const PERIPHERY_REACH: usize = 3;
/// Probability of each candidate periphery link.
pub const PERIPHERY_LINK_PROB: f64 = 0.5;

/// Core–periphery network: a dense random core (nodes `0..48`, edge
/// probability 0.5) feeding a long sparse periphery where node `i` links to
/// each of `i−1..i−3` with probability 0.5 (always at least to `i−1`, so
/// the graph is connected). The spectral radius is set by the core, which
/// is the hub-dominated shape typical of real networks.
pub fn gen_core_periphery_graph(n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = CORE_SIZE.min(n);
    let mut edges = Vec::new();
    for i in 0..core {
        for j in i + 1..core {
            if rng.gen::<f64>() < CORE_DENSITY {
                edges.push((i, j));
            }
        }
        if i > 0 {
            // Spine keeps the core connected regardless of the draw.
            edges.push((i - 1, i));
        }
    }
    for i in core.max(1)..n {
        edges.push((i - 1, i));
        for back in 2..=PERIPHERY_REACH {
            if i >= back && rng.gen::<f64>() < PERIPHERY_LINK_PROB {
                edges.push((i - back, i));
            }
        }
    }
    Ok(edges)
}
