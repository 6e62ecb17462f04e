//! Sparse point-source signals, blur kernels and their dense operators.

use std::f64::consts::PI;

use faer::Mat;
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("cannot place {requested} spikes on a grid of {cells} cells")]
    TooManySpikes { requested: usize, cells: usize },
    #[error("kernel size {0} must be odd")]
    EvenKernelSize(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid spike train: {0}")]
    InvalidSpikes(String),
    #[error("invalid kernel parameter: {0}")]
    InvalidKernel(String),
}

/// Support of a signal: a 1-D line or a row-major 2-D image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grid {
    Line(usize),
    Image { rows: usize, cols: usize },
}

impl Grid {
    pub fn square(side: usize) -> Self {
        Grid::Image { rows: side, cols: side }
    }

    pub fn cells(&self) -> usize {
        match *self {
            Grid::Line(n) => n,
            Grid::Image { rows, cols } => rows * cols,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AmplitudeLaw {
    Fixed(f64),
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    /// Linear (row-major for images) grid index.
    pub index: usize,
    pub amplitude: f64,
}

/// `x(n) = Σⱼ αⱼ δ(n − nⱼ)` on a discrete grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    grid: Grid,
    spikes: Vec<Spike>,
}

impl SpikeTrain {
    /// Validates and sorts the spikes by grid index.
    pub fn new(grid: Grid, mut spikes: Vec<Spike>) -> Result<Self, SignalError> {
        if spikes.is_empty() {
            return Err(SignalError::InvalidSpikes("at least one spike is required".into()));
        }
        spikes.sort_by_key(|s| s.index);
        for pair in spikes.windows(2) {
            if pair[0].index == pair[1].index {
                return Err(SignalError::InvalidSpikes(format!("duplicate location {}", pair[0].index)));
            }
        }
        for s in &spikes {
            if s.index >= grid.cells() {
                return Err(SignalError::InvalidSpikes(format!(
                    "location {} outside grid of {} cells",
                    s.index,
                    grid.cells()
                )));
            }
            if !s.amplitude.is_finite() || s.amplitude == 0.0 {
                return Err(SignalError::InvalidSpikes(format!(
                    "amplitude {} at {} must be finite and nonzero",
                    s.amplitude, s.index
                )));
            }
        }
        Ok(Self { grid, spikes })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.spikes.iter().map(|s| s.index).collect()
    }

    /// Dense vector of length `grid.cells()`.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.grid.cells()];
        for s in &self.spikes {
            x[s.index] = s.amplitude;
        }
        x
    }
}

/// Draws `s` distinct locations uniformly at random, then i.i.d. amplitudes.
pub fn make_spike_train(grid: Grid, s: usize, seed: u64, law: AmplitudeLaw) -> Result<SpikeTrain, SignalError> {
    let cells = grid.cells();
    if s > cells {
        return Err(SignalError::TooManySpikes { requested: s, cells });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locations = sample(&mut rng, cells, s).into_vec();
    locations.sort_unstable();
    let spikes = locations.into_iter().map(|index| Spike { index, amplitude: draw_amplitude(&mut rng, law) }).collect();
    SpikeTrain::new(grid, spikes)
}

fn draw_amplitude(rng: &mut ChaCha8Rng, law: AmplitudeLaw) -> f64 {
    match law {
        AmplitudeLaw::Fixed(a) => a,
        AmplitudeLaw::Uniform { low, high } => loop {
            let a = rng.random_range(low..=high);
            // zero amplitude is not a spike; redraw (a measure-zero event for low < high)
            if a != 0.0 {
                break a;
            }
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    Sinc { cutoff: f64 },
    Gaussian { sigma: f64 },
    Custom,
}

/// Low-pass response: a 1-D tap vector or a square, odd-sized 2-D mask.
#[derive(Debug, Clone, PartialEq)]
pub enum BlurKernel {
    Line { taps: Vec<f64>, kind: KernelKind },
    Mask { size: usize, taps: Vec<f64>, kind: KernelKind },
}

impl BlurKernel {
    pub fn custom_line(taps: Vec<f64>) -> Result<Self, SignalError> {
        if taps.is_empty() || taps.iter().any(|t| !t.is_finite()) {
            return Err(SignalError::InvalidKernel("taps must be finite and non-empty".into()));
        }
        Ok(BlurKernel::Line { taps, kind: KernelKind::Custom })
    }

    /// Row-major `size × size` mask.
    pub fn custom_mask(size: usize, taps: Vec<f64>) -> Result<Self, SignalError> {
        if size.is_multiple_of(2) {
            return Err(SignalError::EvenKernelSize(size));
        }
        if taps.len() != size * size || taps.iter().any(|t| !t.is_finite()) {
            return Err(SignalError::InvalidKernel(format!("mask needs {} finite taps", size * size)));
        }
        Ok(BlurKernel::Mask { size, taps, kind: KernelKind::Custom })
    }

    pub fn taps(&self) -> &[f64] {
        match self {
            BlurKernel::Line { taps, .. } | BlurKernel::Mask { taps, .. } => taps,
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            BlurKernel::Line { kind, .. } | BlurKernel::Mask { kind, .. } => *kind,
        }
    }

    /// Tap count (1-D) or side length (2-D).
    pub fn size(&self) -> usize {
        match self {
            BlurKernel::Line { taps, .. } => taps.len(),
            BlurKernel::Mask { size, .. } => *size,
        }
    }

    pub fn mask_tap(&self, r: usize, c: usize) -> f64 {
        match self {
            BlurKernel::Mask { size, taps, .. } => taps[r * size + c],
            BlurKernel::Line { .. } => panic!("mask_tap on a 1-D kernel"),
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed `sinc(2 f_c (n − c))`, centred, scaled to unit peak.
///
/// The cutoff is in cycles per sample; the main lobe's first zeros sit
/// `1 / (2 f_c)` samples from the centre.
pub fn make_sinc_kernel(len: usize, cutoff: f64) -> Result<BlurKernel, SignalError> {
    if len == 0 {
        return Err(SignalError::InvalidKernel("kernel length must be at least 1".into()));
    }
    if !(cutoff > 0.0 && cutoff <= 0.5) {
        return Err(SignalError::InvalidKernel(format!("cutoff {cutoff} outside (0, 0.5]")));
    }
    let centre = (len as f64 - 1.0) / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let window = if len == 1 { 1.0 } else { 0.54 - 0.46 * (2.0 * PI * n as f64 / (len as f64 - 1.0)).cos() };
            window * sinc(2.0 * cutoff * (n as f64 - centre))
        })
        .collect();
    normalize_peak(&mut taps);
    Ok(BlurKernel::Line { taps, kind: KernelKind::Sinc { cutoff } })
}

/// Centred 1-D Gaussian `exp(−k²/(2σ²))`, unit peak.
pub fn make_gaussian_line(len: usize, sigma: f64) -> Result<BlurKernel, SignalError> {
    if len == 0 || sigma <= 0.0 || !sigma.is_finite() {
        return Err(SignalError::InvalidKernel(format!("length {len}, sigma {sigma}")));
    }
    let centre = (len as f64 - 1.0) / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let k = n as f64 - centre;
            (-k * k / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    normalize_peak(&mut taps);
    Ok(BlurKernel::Line { taps, kind: KernelKind::Gaussian { sigma } })
}

/// `p × p` Gaussian mask `h(i,j) ∝ exp(−(i²+j²)/(2σ²))`, unit peak at the centre.
pub fn make_gaussian_kernel(p: usize, sigma: f64) -> Result<BlurKernel, SignalError> {
    if p.is_multiple_of(2) {
        return Err(SignalError::EvenKernelSize(p));
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(SignalError::InvalidKernel(format!("sigma {sigma}")));
    }
    let half = (p / 2) as f64;
    let taps = (0..p * p)
        .map(|k| {
            let i = (k / p) as f64 - half;
            let j = (k % p) as f64 - half;
            (-(i * i + j * j) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    Ok(BlurKernel::Mask { size: p, taps, kind: KernelKind::Gaussian { sigma } })
}

fn normalize_peak(taps: &mut [f64]) {
    let peak = taps.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if peak > 0.0 {
        for t in taps {
            *t /= peak;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorShape {
    /// Full linear convolution, `l_z = l_x + l_h − 1`.
    Linear { signal_len: usize, kernel_len: usize },
    /// Valid correlation of a `p × p` mask with a `(d+p−1)²` source patch.
    Patch { d: usize, p: usize },
}

#[derive(Debug, Clone)]
pub struct ConvolutionOperator {
    matrix: Mat<f64>,
    shape: OperatorShape,
}

impl ConvolutionOperator {
    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn shape(&self) -> OperatorShape {
        self.shape
    }

    pub fn input_len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SignalError> {
        if x.len() != self.input_len() {
            return Err(SignalError::DimensionMismatch(format!(
                "operator takes {} inputs, got {}",
                self.input_len(),
                x.len()
            )));
        }
        Ok(crate::lp::mat_vec(self.matrix.as_ref(), x))
    }
}

/// Dense Toeplitz matrix `H` with `H[i][j] = h[i − j]`, of size `(l_x + l_h − 1) × l_x`.
pub fn build_convolution_matrix(kernel: &BlurKernel, signal_len: usize) -> Result<ConvolutionOperator, SignalError> {
    let BlurKernel::Line { taps, .. } = kernel else {
        return Err(SignalError::DimensionMismatch("1-D operator needs a line kernel".into()));
    };
    if signal_len == 0 {
        return Err(SignalError::DimensionMismatch("signal length must be positive".into()));
    }
    let lh = taps.len();
    let lz = signal_len + lh - 1;
    let matrix = Mat::from_fn(lz, signal_len, |i, j| if i >= j && i - j < lh { taps[i - j] } else { 0.0 });
    Ok(ConvolutionOperator { matrix, shape: OperatorShape::Linear { signal_len, kernel_len: lh } })
}

/// Patch operator `ℋ` of size `d² × (d+p−1)²` (row-major vectorization on both sides).
pub fn build_patch_operator(kernel: &BlurKernel, d: usize) -> Result<ConvolutionOperator, SignalError> {
    let BlurKernel::Mask { size: p, taps, .. } = kernel else {
        return Err(SignalError::DimensionMismatch("patch operator needs a 2-D mask".into()));
    };
    if d == 0 {
        return Err(SignalError::DimensionMismatch("patch size must be positive".into()));
    }
    let p = *p;
    let side = d + p - 1;
    let mut matrix = Mat::<f64>::zeros(d * d, side * side);
    for a in 0..d {
        for b in 0..d {
            let row = a * d + b;
            for u in 0..p {
                for v in 0..p {
                    matrix[(row, (a + u) * side + b + v)] = taps[u * p + v];
                }
            }
        }
    }
    Ok(ConvolutionOperator { matrix, shape: OperatorShape::Patch { d, p } })
}

/// `z = H · dense(x)`.
pub fn apply_blur(x: &SpikeTrain, op: &ConvolutionOperator) -> Result<Vec<f64>, SignalError> {
    op.apply(&x.to_dense())
}

/// Row-major real image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_spikes(x: &SpikeTrain) -> Result<Self, SignalError> {
        match x.grid() {
            Grid::Image { rows, cols } => Ok(Self { rows, cols, data: x.to_dense() }),
            Grid::Line(_) => Err(SignalError::DimensionMismatch("spike train is 1-D".into())),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Value at signed coordinates, zero outside the image.
    pub fn get_padded(&self, r: isize, c: isize) -> f64 {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
            0.0
        } else {
            self.get(r as usize, c as usize)
        }
    }
}

/// Same-size blur of an image by a centred odd mask with zero padding:
/// `z(i,j) = Σ_{u,v} h(u,v) x(i+u−c, j+v−c)`, `c = (p−1)/2`.
pub fn blur_image(x: &Image, kernel: &BlurKernel) -> Result<Image, SignalError> {
    let BlurKernel::Mask { size: p, taps, .. } = kernel else {
        return Err(SignalError::DimensionMismatch("image blur needs a 2-D mask".into()));
    };
    let p = *p;
    let c = (p / 2) as isize;
    let mut z = Image::zeros(x.rows, x.cols);
    for i in 0..x.rows {
        for j in 0..x.cols {
            let mut acc = 0.0;
            for u in 0..p {
                for v in 0..p {
                    acc += taps[u * p + v] * x.get_padded(i as isize + u as isize - c, j as isize + v as isize - c);
                }
            }
            z.data[i * x.cols + j] = acc;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spike_train_image_setup() {
        let law = AmplitudeLaw::Uniform { low: 0.0, high: 5.0 };
        let x = make_spike_train(Grid::square(256), 100, 11, law).unwrap();
        assert_eq!(x.len(), 100);
        let mut locs = x.support();
        locs.dedup();
        assert_eq!(locs.len(), 100);
        assert!(x.spikes().iter().all(|s| s.amplitude > 0.0 && s.amplitude <= 5.0));
    }

    #[test]
    fn single_unit_spike() {
        let x = make_spike_train(Grid::Line(200), 1, 3, AmplitudeLaw::Fixed(1.0)).unwrap();
        assert_eq!(x.len(), 1);
        assert_eq!(x.spikes()[0].amplitude, 1.0);
        assert_eq!(x.to_dense().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn same_seed_same_train() {
        let law = AmplitudeLaw::Uniform { low: 0.0, high: 5.0 };
        let a = make_spike_train(Grid::Line(200), 6, 42, law).unwrap();
        let b = make_spike_train(Grid::Line(200), 6, 42, law).unwrap();
        assert_eq!(a, b);
        let c = make_spike_train(Grid::Line(200), 6, 43, law).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_many_spikes() {
        let err = make_spike_train(Grid::Line(5), 6, 0, AmplitudeLaw::Fixed(1.0)).unwrap_err();
        assert_eq!(err, SignalError::TooManySpikes { requested: 6, cells: 5 });
    }

    #[test]
    fn spike_train_rejects_duplicates_and_zero() {
        let dup = vec![Spike { index: 1, amplitude: 1.0 }, Spike { index: 1, amplitude: 2.0 }];
        assert!(SpikeTrain::new(Grid::Line(4), dup).is_err());
        let zero = vec![Spike { index: 1, amplitude: 0.0 }];
        assert!(SpikeTrain::new(Grid::Line(4), zero).is_err());
        let outside = vec![Spike { index: 4, amplitude: 1.0 }];
        assert!(SpikeTrain::new(Grid::Line(4), outside).is_err());
    }

    #[test]
    fn gaussian_mask_table_row_one() {
        let k = make_gaussian_kernel(5, 2.0).unwrap();
        let taps = k.taps();
        assert_eq!(taps.len(), 25);
        assert_eq!(k.mask_tap(2, 2), 1.0);
        for r in 0..5 {
            for c in 0..5 {
                let t = k.mask_tap(r, c);
                assert!(t > 0.0 && t <= 1.0);
                assert_eq!(t, k.mask_tap(c, r));
                assert_eq!(t, k.mask_tap(4 - r, c));
                assert_eq!(t, k.mask_tap(r, 4 - c));
            }
        }
    }

    #[test]
    fn gaussian_identity_and_ratio() {
        let k = make_gaussian_kernel(1, 3.7).unwrap();
        assert_eq!(k.taps(), &[1.0]);
        // corner (1,1) offset: exp(−2/(2·1)) = exp(−1)
        let k = make_gaussian_kernel(3, 1.0).unwrap();
        let ratio = k.mask_tap(0, 0) / k.mask_tap(1, 1);
        assert!((ratio - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn even_kernel_rejected() {
        assert_eq!(make_gaussian_kernel(4, 1.0).unwrap_err(), SignalError::EvenKernelSize(4));
        assert!(BlurKernel::custom_mask(2, vec![1.0; 4]).is_err());
    }

    #[test]
    fn sinc_kernel_shape() {
        let k = make_sinc_kernel(101, 0.05).unwrap();
        let taps = k.taps();
        assert_eq!(taps.len(), 101);
        assert_eq!(taps[50], 1.0);
        for n in 0..101 {
            assert!((taps[n] - taps[100 - n]).abs() < 1e-12);
        }
        // first zero crossing of sinc(0.1 k) at k = 10
        assert!(taps[60].abs() < 1e-12);
        assert!(taps[55] > 0.0 && taps[65] < 0.0);
    }

    #[test]
    fn identity_kernel_gives_identity_matrix() {
        let k = BlurKernel::custom_line(vec![1.0]).unwrap();
        let op = build_convolution_matrix(&k, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(op.matrix()[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn toeplitz_columns() {
        let k = BlurKernel::custom_line(vec![1.0, 2.0, 3.0]).unwrap();
        let op = build_convolution_matrix(&k, 4).unwrap();
        assert_eq!(op.output_len(), 6);
        for j in 0..4 {
            let col: Vec<f64> = (0..6).map(|i| op.matrix()[(i, j)]).collect();
            let mut expected = vec![0.0; 6];
            expected[j..j + 3].copy_from_slice(&[1.0, 2.0, 3.0]);
            assert_eq!(col, expected);
        }
        for i in 1..6 {
            for j in 1..4 {
                assert_eq!(op.matrix()[(i, j)], op.matrix()[(i - 1, j - 1)]);
            }
        }
    }

    #[test]
    fn sifting_and_linearity() {
        let k = make_sinc_kernel(11, 0.2).unwrap();
        let op = build_convolution_matrix(&k, 30).unwrap();
        let one = SpikeTrain::new(Grid::Line(30), vec![Spike { index: 7, amplitude: 1.0 }]).unwrap();
        let z = apply_blur(&one, &op).unwrap();
        for (i, zi) in z.iter().enumerate() {
            let expect = if (7..18).contains(&i) { k.taps()[i - 7] } else { 0.0 };
            assert_eq!(*zi, expect);
        }
        let two = SpikeTrain::new(
            Grid::Line(30),
            vec![Spike { index: 7, amplitude: 1.0 }, Spike { index: 12, amplitude: -2.0 }],
        )
        .unwrap();
        let z2 = apply_blur(&two, &op).unwrap();
        let other = SpikeTrain::new(Grid::Line(30), vec![Spike { index: 12, amplitude: -2.0 }]).unwrap();
        let zo = apply_blur(&other, &op).unwrap();
        for i in 0..z2.len() {
            assert!((z2[i] - z[i] - zo[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let k = BlurKernel::custom_line(vec![1.0, 1.0]).unwrap();
        let op = build_convolution_matrix(&k, 4).unwrap();
        assert!(matches!(op.apply(&[1.0; 3]), Err(SignalError::DimensionMismatch(_))));
    }

    #[test]
    fn patch_operator_matches_image_blur() {
        let k = make_gaussian_kernel(3, 1.0).unwrap();
        let op = build_patch_operator(&k, 4).unwrap();
        assert_eq!((op.output_len(), op.input_len()), (16, 36));
        let x = make_spike_train(Grid::square(12), 9, 5, AmplitudeLaw::Uniform { low: 0.5, high: 2.0 }).unwrap();
        let img = Image::from_spikes(&x).unwrap();
        let z = blur_image(&img, &k).unwrap();
        // z-patch at origin (4, 4): source rows/cols 3..=8
        let src: Vec<f64> = (0..36).map(|q| img.get(3 + q / 6, 3 + q % 6)).collect();
        let zp = op.apply(&src).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert!((zp[a * 4 + b] - z.get(4 + a, 4 + b)).abs() < 1e-14);
            }
        }
    }
}
