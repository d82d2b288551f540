//! Harris score on a binarized local patch.
//!
//! The newest `n` cells of the 9x9 timestamp window become ones, everything
//! else zero. Gradients come from 5x5 Sobel kernels evaluated on the central
//! 5x5 region (where the kernel fits without padding) and are accumulated into
//! the Gaussian-weighted second-moment matrix `[[A, C], [C, B]]`.

use thiserror::Error;

use crate::event::Timestamp;
use crate::sae::{LocalPatch, NEVER, PATCH_RADIUS, PATCH_SIZE};

pub const KERNEL_SIZE: usize = 5;
const KERNEL_RADIUS: usize = KERNEL_SIZE / 2;
const CELLS: usize = PATCH_SIZE * PATCH_SIZE;

pub type Kernel = [[i32; KERNEL_SIZE]; KERNEL_SIZE];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SobelKernels {
    /// Derivative along columns (x).
    pub x: Kernel,
    /// Derivative along rows (y).
    pub y: Kernel,
}

impl Default for SobelKernels {
    /// Binomial smoothing `(1 4 6 4 1)` crossed with the derivative `(-1 -2 0 2 1)`.
    fn default() -> Self {
        const SMOOTH: [i32; KERNEL_SIZE] = [1, 4, 6, 4, 1];
        const DERIV: [i32; KERNEL_SIZE] = [-1, -2, 0, 2, 1];
        let x: Kernel = std::array::from_fn(|r| std::array::from_fn(|c| SMOOTH[r] * DERIV[c]));
        SobelKernels { x, y: transpose(&x) }
    }
}

fn transpose(k: &Kernel) -> Kernel {
    std::array::from_fn(|r| std::array::from_fn(|c| k[c][r]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinerConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub n_newest: usize,
    pub threshold: f64,
    pub sobel: SobelKernels,
}

pub const DEFAULT_ALPHA: f64 = 0.04;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_N_NEWEST: usize = 25;
pub const DEFAULT_THRESHOLD: f64 = 8.0;

impl Default for RefinerConfig {
    fn default() -> Self {
        RefinerConfig {
            alpha: DEFAULT_ALPHA,
            sigma: DEFAULT_SIGMA,
            n_newest: DEFAULT_N_NEWEST,
            threshold: DEFAULT_THRESHOLD,
            sobel: SobelKernels::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha must be positive, got {0}")]
    Alpha(f64),
    #[error("sigma must be positive, got {0}")]
    Sigma(f64),
    #[error("n_newest must be in 1..={CELLS}, got {0}")]
    NNewest(usize),
    #[error("threshold must be finite, got {0}")]
    Threshold(f64),
    #[error("the y Sobel kernel must be the transpose of the x kernel")]
    KernelsNotTransposed,
}

impl RefinerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ConfigError::Sigma(self.sigma));
        }
        if self.n_newest == 0 || self.n_newest > CELLS {
            return Err(ConfigError::NNewest(self.n_newest));
        }
        if !self.threshold.is_finite() {
            return Err(ConfigError::Threshold(self.threshold));
        }
        if self.sobel.y != transpose(&self.sobel.x) {
            return Err(ConfigError::KernelsNotTransposed);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryPatch {
    pub bits: [[u8; PATCH_SIZE]; PATCH_SIZE],
}

impl BinaryPatch {
    pub fn ones(&self) -> usize {
        self.bits.iter().flatten().filter(|&&b| b == 1).count()
    }

    /// Rotates the pattern by 90 degrees: `out[r][c] = in[8 - c][r]`.
    pub fn rotated(&self) -> BinaryPatch {
        let bits = std::array::from_fn(|r| std::array::from_fn(|c| self.bits[PATCH_SIZE - 1 - c][r]));
        BinaryPatch { bits }
    }
}

/// Marks the `n` newest cells. Ties go to the earlier row-major cell;
/// never-fired cells are never marked.
pub fn binarize(patch: &LocalPatch, n: usize) -> BinaryPatch {
    let mut cells = [(0 as Timestamp, 0u8); CELLS];
    let mut live = 0;
    for (idx, &t) in patch.values.iter().flatten().enumerate() {
        if t != NEVER {
            cells[live] = (t, idx as u8);
            live += 1;
        }
    }
    let chosen = &mut cells[..live];
    if live > n {
        // newest first, then lowest index
        chosen.select_nth_unstable_by(n - 1, |a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    }
    let mut bits = [[0u8; PATCH_SIZE]; PATCH_SIZE];
    for &(_, idx) in chosen.iter().take(n) {
        bits[idx as usize / PATCH_SIZE][idx as usize % PATCH_SIZE] = 1;
    }
    BinaryPatch { bits }
}

/// Weighted gradient sums: `a = Σ w·Ix²`, `b = Σ w·Iy²`, `c = Σ w·Ix·Iy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientMoments {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub type Weights = [[f64; KERNEL_SIZE]; KERNEL_SIZE];

/// Gaussian over the 5x5 evaluation grid, normalized to sum to one.
pub fn gaussian_weights(sigma: f64) -> Weights {
    let r = KERNEL_RADIUS as f64;
    let mut w: Weights = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (dy, dx) = (i as f64 - r, j as f64 - r);
            (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        })
    });
    let total: f64 = w.iter().flatten().sum();
    w.iter_mut().flatten().for_each(|v| *v /= total);
    w
}

pub fn score(m: &GradientMoments, alpha: f64) -> f64 {
    let trace = m.a + m.b;
    (m.a * m.b - m.c * m.c) - alpha * trace * trace
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub is_corner: bool,
    pub score: f64,
}

/// A config with its Gaussian table precomputed, for use in the hot loop.
#[derive(Debug, Clone)]
pub struct Refiner {
    config: RefinerConfig,
    weights: Weights,
}

impl Refiner {
    pub fn new(config: RefinerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Refiner { weights: gaussian_weights(config.sigma), config })
    }

    pub fn config(&self) -> &RefinerConfig {
        &self.config
    }

    pub fn moments(&self, bp: &BinaryPatch) -> GradientMoments {
        let kx = &self.config.sobel.x;
        let ky = &self.config.sobel.y;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        // gradient positions: centre +- 2, so the kernel spans rows/cols 0..=8
        let first = PATCH_RADIUS - KERNEL_RADIUS;
        for (wi, row) in (first..first + KERNEL_SIZE).enumerate() {
            for (wj, col) in (first..first + KERNEL_SIZE).enumerate() {
                let (mut gx, mut gy) = (0i32, 0i32);
                for i in 0..KERNEL_SIZE {
                    let src = &bp.bits[row + i - KERNEL_RADIUS];
                    for j in 0..KERNEL_SIZE {
                        let v = src[col + j - KERNEL_RADIUS] as i32;
                        gx += kx[i][j] * v;
                        gy += ky[i][j] * v;
                    }
                }
                let w = self.weights[wi][wj];
                let (gx, gy) = (gx as f64, gy as f64);
                a += w * gx * gx;
                b += w * gy * gy;
                c += w * gx * gy;
            }
        }
        let m = GradientMoments { a, b, c };
        debug_assert!(
            m.a * m.b - m.c * m.c >= -1e-9 * (m.a * m.b).max(1.0),
            "moment matrix not positive semidefinite: {m:?}"
        );
        m
    }

    pub fn score_patch(&self, patch: &LocalPatch) -> f64 {
        let bp = binarize(patch, self.config.n_newest);
        score(&self.moments(&bp), self.config.alpha)
    }

    #[inline]
    pub fn refine(&self, patch: &LocalPatch) -> Refinement {
        let s = self.score_patch(patch);
        Refinement { is_corner: s > self.config.threshold, score: s }
    }
}

pub fn moments(bp: &BinaryPatch, cfg: &RefinerConfig) -> GradientMoments {
    Refiner { config: *cfg, weights: gaussian_weights(cfg.sigma) }.moments(bp)
}

pub fn refine(patch: &LocalPatch, cfg: &RefinerConfig) -> Refinement {
    Refiner { config: *cfg, weights: gaussian_weights(cfg.sigma) }.refine(patch)
}

/// Score distributions used to place the corner threshold.
///
/// Straight edges and right-angle wedges are rendered as timestamp patches of a
/// moving boundary (newest at the boundary, older behind it), binarized with
/// the configured `n_newest` and scored. A threshold separates the classes when
/// it lies in `[max_edge, min_wedge)`.
pub mod calibration {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct ScoreGap {
        pub max_edge: f64,
        pub min_wedge: f64,
    }

    impl ScoreGap {
        pub fn separates(&self, threshold: f64) -> bool {
            self.max_edge <= threshold && threshold < self.min_wedge
        }
    }

    fn render(age: impl Fn(i32, i32) -> Option<i64>) -> LocalPatch {
        let base: Timestamp = 1_000_000;
        let values = std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                let (dx, dy) = (c as i32 - PATCH_RADIUS as i32, r as i32 - PATCH_RADIUS as i32);
                age(dx, dy).map_or(NEVER, |a| base - a)
            })
        });
        LocalPatch::from_values(values)
    }

    /// Edges through the centre moving along each of the 8 compass directions.
    pub fn edge_patches() -> Vec<LocalPatch> {
        let dirs = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        dirs.iter()
            .map(|&(nx, ny)| {
                // cells behind the front (dot <= 0) fired earlier the further back they are
                render(move |dx, dy| {
                    let along = nx * dx + ny * dy;
                    (along <= 0).then_some(-along as i64 * 1000 + (dx + dy).rem_euclid(3) as i64)
                })
            })
            .collect()
    }

    /// A front moving along x that ends at the centre, in all four quadrants,
    /// plus the transposed family (front moving along y).
    pub fn wedge_patches() -> Vec<LocalPatch> {
        let mut out = Vec::new();
        for sx in [1, -1] {
            for sy in [1, -1] {
                out.push(render(move |dx, dy| {
                    (sx * dx <= 0 && sy * dy >= 0).then_some(-(sx * dx) as i64 * 1000 + dy.abs() as i64)
                }));
                out.push(render(move |dx, dy| {
                    (sy * dy <= 0 && sx * dx >= 0).then_some(-(sy * dy) as i64 * 1000 + dx.abs() as i64)
                }));
            }
        }
        out
    }

    pub fn score_gap(cfg: &RefinerConfig) -> Result<ScoreGap, ConfigError> {
        let refiner = Refiner::new(*cfg)?;
        let max_edge = edge_patches()
            .iter()
            .map(|p| refiner.score_patch(p))
            .fold(f64::NEG_INFINITY, f64::max);
        let min_wedge = wedge_patches()
            .iter()
            .map(|p| refiner.score_patch(p))
            .fold(f64::INFINITY, f64::min);
        Ok(ScoreGap { max_edge, min_wedge })
    }
}
