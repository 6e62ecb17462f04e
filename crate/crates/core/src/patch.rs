//! Patch-wise 2-D pipeline.
//!
//! The blurred image is cut into `d × d` tiles. Tile `(i, j)` sees the
//! `(d+p−1)²` source patch whose origin is `(i − c, j − c)`, `c = (p−1)/2`,
//! through the patch operator `ℋ`. Each tile is encoded and recovered on its
//! own, and the source patches are stitched back with count-weighted
//! averaging over the `p − 1` pixel overlaps. Source pixels outside the image
//! are estimated like any other and cropped when stitching.

use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{encode, AcquisitionError, BinaryMeasurements, PatchCoord, SensingEnsemble};
use crate::parallel::par_map;
use crate::signal::{ConvolutionOperator, Image, OperatorShape};
use crate::solver::{bsr_recover, BsrConfig, BsrError};

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
}

/// Tile origins over a `rows × cols` blurred image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    pub rows: usize,
    pub cols: usize,
    pub d: usize,
    pub p: usize,
    /// Row-major order. When a side is not a multiple of `d` the last tile
    /// is shifted back to end at the border and overlaps its neighbour.
    pub origins: Vec<PatchCoord>,
}

fn axis_origins(len: usize, d: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..len / d).map(|k| k * d).collect();
    if !len.is_multiple_of(d) {
        out.push(len - d);
    }
    out
}

impl PatchGrid {
    pub fn new(rows: usize, cols: usize, d: usize, p: usize) -> Result<Self, PatchError> {
        if d == 0 || d > rows || d > cols {
            return Err(PatchError::BadDims(format!("patch size {d} does not fit a {rows}×{cols} image")));
        }
        if p.is_multiple_of(2) {
            return Err(PatchError::BadDims(format!("kernel size {p} must be odd")));
        }
        let mut origins = Vec::new();
        for &r in &axis_origins(rows, d) {
            for &c in &axis_origins(cols, d) {
                origins.push(PatchCoord { row: r as u32, col: c as u32 });
            }
        }
        Ok(Self { rows, cols, d, p, origins })
    }

    /// Side of a source patch, `d + p − 1`.
    pub fn source_side(&self) -> usize {
        self.d + self.p - 1
    }

    /// Top-left source pixel seen by the tile at `origin`; may be negative.
    pub fn source_origin(&self, origin: PatchCoord) -> (isize, isize) {
        let c = (self.p / 2) as isize;
        (origin.row as isize - c, origin.col as isize - c)
    }

    /// Number of source patches covering each image pixel.
    pub fn coverage(&self) -> Vec<u32> {
        let mut acc = StitchAccumulator::new(self.rows, self.cols);
        let ones = vec![1.0; self.source_side() * self.source_side()];
        for &o in &self.origins {
            acc.add(self, o, &ones);
        }
        acc.count
    }
}

/// Splits `z` into tiles, each vectorized row-major.
pub fn decompose(z: &Image, d: usize, p: usize) -> Result<(PatchGrid, Vec<Vec<f64>>), PatchError> {
    let grid = PatchGrid::new(z.rows, z.cols, d, p)?;
    let tiles = grid
        .origins
        .iter()
        .map(|o| {
            let (r0, c0) = (o.row as usize, o.col as usize);
            (0..d * d).map(|k| z.get(r0 + k / d, c0 + k % d)).collect()
        })
        .collect();
    Ok((grid, tiles))
}

/// Inverse of [`decompose`]. Overlapping tiles carry identical values, so
/// later tiles simply overwrite.
pub fn reassemble(grid: &PatchGrid, tiles: &[Vec<f64>]) -> Image {
    let mut z = Image::zeros(grid.rows, grid.cols);
    let d = grid.d;
    for (o, tile) in grid.origins.iter().zip(tiles) {
        for k in 0..d * d {
            z.data[(o.row as usize + k / d) * grid.cols + o.col as usize + k % d] = tile[k];
        }
    }
    z
}

/// Source patch read from an image, zero outside it.
pub fn source_patch(x: &Image, grid: &PatchGrid, origin: PatchCoord) -> Vec<f64> {
    let side = grid.source_side();
    let (r0, c0) = grid.source_origin(origin);
    (0..side * side).map(|k| x.get_padded(r0 + (k / side) as isize, c0 + (k % side) as isize)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensingPolicy {
    /// A fresh matrix per tile, seeded from the base seed and the tile origin.
    PerPatch,
    /// One matrix for every tile.
    Shared,
}

/// Sensing seed of the tile at `origin`.
pub fn patch_seed(base: u64, origin: PatchCoord, policy: SensingPolicy) -> u64 {
    match policy {
        SensingPolicy::Shared => base,
        SensingPolicy::PerPatch => {
            // splitmix64 finalizer over the packed origin
            let mut h = base ^ ((origin.row as u64) << 32 | origin.col as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            h ^ (h >> 31)
        }
    }
}

/// `yₖ = sgn(aₖᵀ ℋ x⁽ⁱʲ⁾ − τ)` for one tile.
pub fn acquire_patch(
    x_patch: &[f64],
    op: &ConvolutionOperator,
    ensemble: &SensingEnsemble,
    tau: f64,
    origin: PatchCoord,
) -> Result<BinaryMeasurements, AcquisitionError> {
    let z = op.apply(x_patch).map_err(|e| AcquisitionError::DimensionMismatch(e.to_string()))?;
    let mut y = encode(&z, ensemble, tau)?;
    y.patch = Some(origin);
    Ok(y)
}

/// Encodes every tile of `z` with `m` measurements and a common threshold.
///
/// A tile whose signs all agree (for instance an empty tile) is still
/// recorded, bits and all; the decoder recognizes it and skips recovery.
pub fn acquire_image(
    z: &Image,
    grid: &PatchGrid,
    m: usize,
    tau: f64,
    base_seed: u64,
    policy: SensingPolicy,
) -> Result<Vec<BinaryMeasurements>, PatchError> {
    if (z.rows, z.cols) != (grid.rows, grid.cols) {
        return Err(PatchError::BadDims("image and grid sizes differ".into()));
    }
    let (_, tiles) = decompose(z, grid.d, grid.p)?;
    let mut out = Vec::with_capacity(tiles.len());
    for (&o, tile) in grid.origins.iter().zip(&tiles) {
        let a = SensingEnsemble::new(m, grid.d * grid.d, patch_seed(base_seed, o, policy));
        let y = match encode(tile, &a, tau) {
            Ok(y) => y,
            Err(AcquisitionError::DegenerateEncoding { sign, .. }) => {
                BinaryMeasurements { signs: vec![sign; m], sensing_seed: a.seed(), patch: None, encoder: None }
            }
            Err(e) => return Err(e.into()),
        };
        out.push(BinaryMeasurements { patch: Some(o), ..y });
    }
    Ok(out)
}

/// Running sums for count-weighted stitching.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchAccumulator {
    pub rows: usize,
    pub cols: usize,
    pub sum: Vec<f64>,
    pub count: Vec<u32>,
}

impl StitchAccumulator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, sum: vec![0.0; rows * cols], count: vec![0; rows * cols] }
    }

    /// Adds a source patch, dropping pixels outside the image.
    pub fn add(&mut self, grid: &PatchGrid, origin: PatchCoord, patch: &[f64]) {
        let side = grid.source_side();
        let (r0, c0) = grid.source_origin(origin);
        for (k, &v) in patch.iter().enumerate() {
            let r = r0 + (k / side) as isize;
            let c = c0 + (k % side) as isize;
            if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
                continue;
            }
            let idx = r as usize * self.cols + c as usize;
            self.sum[idx] += v;
            self.count[idx] += 1;
        }
    }

    pub fn finish(&self) -> Image {
        let data = self.sum.iter().zip(&self.count).map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect();
        Image { rows: self.rows, cols: self.cols, data }
    }
}

/// How each tile's estimate is scaled before stitching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatchScale {
    /// `x̂ / |τ̂|`. Every tile shares the encoder's threshold, so dividing by
    /// the recovered threshold puts all tiles on one scale.
    ThresholdAnchored,
    /// The unit-norm output of the solver.
    UnitNorm,
    /// The last LP iterate before normalization.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatchStatus {
    Recovered {
        tau: f64,
        scale: f64,
    },
    /// All signs equal: nothing to separate, the tile is zero-filled.
    Degenerate {
        sign: i8,
    },
    /// Recovery failed; the tile is zero-filled.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchOutcome {
    pub origin: PatchCoord,
    pub status: PatchStatus,
    /// Source patch as stitched, row-major `(d+p−1)²`.
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecovery {
    pub image: Image,
    pub patches: Vec<PatchOutcome>,
}

impl ImageRecovery {
    pub fn failed(&self) -> impl Iterator<Item = &PatchOutcome> {
        self.patches.iter().filter(|p| matches!(p.status, PatchStatus::Failed(_)))
    }
}

fn recover_one(
    y: &BinaryMeasurements,
    op: &ConvolutionOperator,
    config: &BsrConfig,
    scale: PatchScale,
) -> Result<(Vec<f64>, PatchStatus), BsrError> {
    let n = op.input_len();
    if let Some(&first) = y.signs.first() {
        if y.signs.iter().all(|&s| s == first) {
            return Ok((vec![0.0; n], PatchStatus::Degenerate { sign: first }));
        }
    }
    let a = SensingEnsemble::new(y.len(), op.output_len(), y.sensing_seed);
    let phi: Mat<f64> = a.matrix() * op.matrix();
    let r = bsr_recover(phi.as_ref(), &y.signs, config)?;
    let (raw, raw_tau) = r.raw();
    let estimate = match scale {
        PatchScale::UnitNorm => r.x.clone(),
        PatchScale::Raw => raw.to_vec(),
        PatchScale::ThresholdAnchored => {
            if raw_tau.abs() > 1e-9 * r.scale {
                raw.iter().map(|v| v / raw_tau.abs()).collect()
            } else {
                return Err(BsrError::InvalidInput("recovered threshold is zero; cannot anchor scale".into()));
            }
        }
    };
    Ok((estimate, PatchStatus::Recovered { tau: r.tau, scale: r.scale }))
}

/// Recovers every tile with up to `jobs` worker threads and stitches the
/// results in tile order, so the image does not depend on scheduling.
pub fn recover_image(
    measurements: &[BinaryMeasurements],
    grid: &PatchGrid,
    op: &ConvolutionOperator,
    config: &BsrConfig,
    scale: PatchScale,
    jobs: usize,
) -> Result<ImageRecovery, PatchError> {
    if op.shape() != (OperatorShape::Patch { d: grid.d, p: grid.p }) {
        return Err(PatchError::BadDims("operator does not match the patch grid".into()));
    }
    let mut by_origin: Vec<Option<&BinaryMeasurements>> = vec![None; grid.origins.len()];
    for y in measurements {
        let origin =
            y.patch.ok_or_else(|| PatchError::BadDims("measurement record without patch coordinates".into()))?;
        let slot = grid
            .origins
            .iter()
            .position(|&o| o == origin)
            .ok_or_else(|| PatchError::BadDims(format!("no tile at ({}, {})", origin.row, origin.col)))?;
        by_origin[slot] = Some(y);
    }
    let records: Vec<&BinaryMeasurements> = by_origin
        .into_iter()
        .enumerate()
        .map(|(k, y)| {
            y.ok_or_else(|| {
                let o = grid.origins[k];
                PatchError::BadDims(format!("missing measurements for tile ({}, {})", o.row, o.col))
            })
        })
        .collect::<Result<_, _>>()?;

    let results = par_map(&records, jobs, |y| {
        recover_one(y, op, config, scale)
            .unwrap_or_else(|e| (vec![0.0; op.input_len()], PatchStatus::Failed(e.to_string())))
    });

    let mut acc = StitchAccumulator::new(grid.rows, grid.cols);
    let mut patches = Vec::with_capacity(records.len());
    for (k, (estimate, status)) in results.into_iter().enumerate() {
        let origin = grid.origins[k];
        acc.add(grid, origin, &estimate);
        patches.push(PatchOutcome { origin, status, estimate });
    }
    Ok(ImageRecovery { image: acc.finish(), patches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{blur_image, build_patch_operator, make_gaussian_kernel};

    fn coord(row: u32, col: u32) -> PatchCoord {
        PatchCoord { row, col }
    }

    #[test]
    fn tiling() {
        let g = PatchGrid::new(32, 32, 16, 5).unwrap();
        assert_eq!(g.origins, vec![coord(0, 0), coord(0, 16), coord(16, 0), coord(16, 16)]);
        assert_eq!(PatchGrid::new(256, 256, 16, 5).unwrap().origins.len(), 256);
        assert_eq!(PatchGrid::new(16, 16, 16, 3).unwrap().origins, vec![coord(0, 0)]);
        let g = PatchGrid::new(20, 16, 8, 3).unwrap();
        let rows: Vec<u32> = g.origins.iter().map(|o| o.row).collect();
        assert_eq!(rows, vec![0, 0, 8, 8, 12, 12]);
        assert!(PatchGrid::new(8, 8, 4, 4).is_err());
        assert!(PatchGrid::new(8, 8, 9, 3).is_err());
    }

    #[test]
    fn decompose_round_trip() {
        let z = Image { rows: 20, cols: 12, data: (0..240).map(|v| v as f64 * 0.5).collect() };
        let (g, tiles) = decompose(&z, 8, 3).unwrap();
        assert_eq!(reassemble(&g, &tiles), z);
    }

    #[test]
    fn tiles_match_patch_operator() {
        let k = make_gaussian_kernel(5, 2.0).unwrap();
        let mut x = Image::zeros(24, 24);
        for (i, v) in x.data.iter_mut().enumerate() {
            *v = ((i * 7919) % 13) as f64 - 6.0;
        }
        let z = blur_image(&x, &k).unwrap();
        let (g, tiles) = decompose(&z, 8, 5).unwrap();
        let op = build_patch_operator(&k, 8).unwrap();
        for (&o, tile) in g.origins.iter().zip(&tiles) {
            let zz = op.apply(&source_patch(&x, &g, o)).unwrap();
            for (a, b) in zz.iter().zip(tile) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coverage_counts() {
        let g = PatchGrid::new(32, 32, 16, 5).unwrap();
        let cov = g.coverage();
        assert!(cov.iter().all(|&c| c >= 1));
        // 2-pixel bands on each side of the seam at 16
        assert_eq!(cov[5 * 32 + 5], 1);
        assert_eq!(cov[5 * 32 + 15], 2);
        assert_eq!(cov[15 * 32 + 17], 4);
        let total: u32 = cov.iter().sum();
        let g1 = PatchGrid::new(32, 32, 16, 1).unwrap();
        assert!(g1.coverage().iter().all(|&c| c == 1));
        assert!(total > 32 * 32);
    }

    #[test]
    fn seeds_differ_per_tile() {
        let a = patch_seed(9, coord(0, 16), SensingPolicy::PerPatch);
        let b = patch_seed(9, coord(16, 0), SensingPolicy::PerPatch);
        assert_ne!(a, b);
        assert_eq!(patch_seed(9, coord(16, 0), SensingPolicy::Shared), 9);
    }

    #[test]
    fn empty_tile_is_degenerate() {
        let k = make_gaussian_kernel(3, 1.0).unwrap();
        let op = build_patch_operator(&k, 4).unwrap();
        let a = SensingEnsemble::new(32, 16, 1);
        let err = acquire_patch(&vec![0.0; 36], &op, &a, 0.5, coord(0, 0)).unwrap_err();
        assert!(matches!(err, AcquisitionError::DegenerateEncoding { sign: -1, .. }));

        let z = Image::zeros(8, 8);
        let g = PatchGrid::new(8, 8, 4, 3).unwrap();
        let ys = acquire_image(&z, &g, 32, -0.1, 3, SensingPolicy::PerPatch).unwrap();
        assert!(ys.iter().all(|y| y.signs.iter().all(|&s| s == 1)));
        let rec = recover_image(&ys, &g, &op, &BsrConfig::noiseless(1), PatchScale::ThresholdAnchored, 2).unwrap();
        assert!(rec.patches.iter().all(|p| p.status == PatchStatus::Degenerate { sign: 1 }));
        assert!(rec.image.data.iter().all(|&v| v == 0.0));
    }
}
