//! One-bit encoder: `yᵢ = sgn((Az)ᵢ − τ + wᵢ)` with a seeded ±1 sensing matrix.
//!
//! The threshold and noise realization are encoder-private. They are kept in
//! [`EncoderPrivate`], which is never written to the bitstream; the decoder
//! sees only signs, the sensing seed and optional patch coordinates.

use std::io::{Read, Write};

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("all {m} measurements have sign {sign:+}; choose a threshold inside the projection range")]
    DegenerateEncoding { m: usize, sign: i8 },
    #[error("projections are constant ({0}); no threshold separates them")]
    ConstantProjections(f64),
    #[error("threshold {tau} outside the open projection range ({min}, {max})")]
    ThresholdOutOfRange { tau: f64, min: f64, max: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid noise level {0}")]
    InvalidNoise(f64),
    #[error("malformed measurement file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `m × l_z` matrix of equiprobable ±1 entries, regenerated from its seed.
#[derive(Debug, Clone)]
pub struct SensingEnsemble {
    matrix: Mat<f64>,
    seed: u64,
}

impl SensingEnsemble {
    pub fn new(m: usize, lz: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Row-major draw order so the stream does not depend on faer's layout.
        let mut entries = vec![0.0; m * lz];
        for e in entries.iter_mut() {
            *e = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let matrix = Mat::from_fn(m, lz, |i, j| entries[i * lz + j]);
        Self { matrix, seed }
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lz(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// `Az`.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>, AcquisitionError> {
        if z.len() != self.lz() {
            return Err(AcquisitionError::DimensionMismatch(format!(
                "ensemble expects length {}, got {}",
                self.lz(),
                z.len()
            )));
        }
        Ok(crate::lp::mat_vec(self.matrix.as_ref(), z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// Everything the encoder knows that the decoder must not use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderPrivate {
    pub threshold: f64,
    pub noise: Option<NoiseSpec>,
    /// Signs that differ from the noiseless encoding.
    pub flips: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchCoord {
    pub row: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMeasurements {
    pub signs: Vec<i8>,
    pub sensing_seed: u64,
    pub patch: Option<PatchCoord>,
    /// `None` once the measurements have been through the bitstream.
    pub encoder: Option<EncoderPrivate>,
}

impl BinaryMeasurements {
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Drops the encoder-private fields.
    pub fn public(&self) -> Self {
        Self { encoder: None, ..self.clone() }
    }
}

/// `sgn` with `sgn(0) = +1`.
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

fn check_mixed(signs: &[i8]) -> Result<(), AcquisitionError> {
    match signs.first() {
        Some(&first) if signs.iter().all(|&s| s == first) => {
            Err(AcquisitionError::DegenerateEncoding { m: signs.len(), sign: first })
        }
        _ => Ok(()),
    }
}

pub fn encode(z: &[f64], a: &SensingEnsemble, tau: f64) -> Result<BinaryMeasurements, AcquisitionError> {
    let signs: Vec<i8> = a.project(z)?.into_iter().map(|p| sign(p - tau)).collect();
    check_mixed(&signs)?;
    Ok(BinaryMeasurements {
        signs,
        sensing_seed: a.seed(),
        patch: None,
        encoder: Some(EncoderPrivate { threshold: tau, noise: None, flips: 0 }),
    })
}

/// Draws `m` i.i.d. `N(0, σ²)` samples from the noise seed.
pub fn noise_draws(noise: NoiseSpec, m: usize) -> Result<Vec<f64>, AcquisitionError> {
    if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(AcquisitionError::InvalidNoise(noise.sigma));
    }
    if noise.sigma == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let normal = Normal::new(0.0, noise.sigma).map_err(|_| AcquisitionError::InvalidNoise(noise.sigma))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    Ok((0..m).map(|_| normal.sample(&mut rng)).collect())
}

/// Noise enters before quantization.
pub fn encode_noisy(
    z: &[f64],
    a: &SensingEnsemble,
    tau: f64,
    noise: NoiseSpec,
) -> Result<BinaryMeasurements, AcquisitionError> {
    let proj = a.project(z)?;
    let w = noise_draws(noise, proj.len())?;
    let mut flips = 0;
    let signs: Vec<i8> = proj
        .iter()
        .zip(&w)
        .map(|(p, wi)| {
            let clean = sign(p - tau);
            let noisy = sign(p - tau + wi);
            flips += usize::from(clean != noisy);
            noisy
        })
        .collect();
    check_mixed(&signs)?;
    Ok(BinaryMeasurements {
        signs,
        sensing_seed: a.seed(),
        patch: None,
        encoder: Some(EncoderPrivate { threshold: tau, noise: Some(noise), flips }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdPolicy {
    Fixed(f64),
    /// Sample median, kept strictly inside the projection range.
    Median,
}

pub fn choose_threshold(projections: &[f64], policy: ThresholdPolicy) -> Result<f64, AcquisitionError> {
    if projections.is_empty() {
        return Err(AcquisitionError::DimensionMismatch("no projections".into()));
    }
    let mut sorted = projections.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if min == max {
        return Err(AcquisitionError::ConstantProjections(min));
    }
    match policy {
        ThresholdPolicy::Fixed(tau) => {
            if tau > min && tau < max {
                Ok(tau)
            } else {
                Err(AcquisitionError::ThresholdOutOfRange { tau, min, max })
            }
        }
        ThresholdPolicy::Median => {
            let k = sorted.len();
            let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
            if median > min && median < max {
                return Ok(median);
            }
            // Ties pushed the median onto an extreme: step halfway to the
            // nearest distinct value on the inside.
            let inner = if median <= min {
                *sorted.iter().find(|&&p| p > min).unwrap()
            } else {
                *sorted.iter().rev().find(|&&p| p < max).unwrap()
            };
            Ok(0.5 * (median + inner))
        }
    }
}

/// `10·log10(‖Az − τ1‖² / ‖w‖²)`; `+∞` for zero noise.
pub fn input_snr(margins: &[f64], noise: &[f64]) -> f64 {
    let signal: f64 = margins.iter().map(|v| v * v).sum();
    let energy: f64 = noise.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / energy).log10()
    }
}

/// Noise level whose expected energy puts [`input_snr`] at `target_db`.
pub fn calibrate_sigma(margins: &[f64], target_db: f64) -> f64 {
    let mean_power = margins.iter().map(|v| v * v).sum::<f64>() / margins.len() as f64;
    (mean_power / 10f64.powf(target_db / 10.0)).sqrt()
}

const MAGIC: &[u8; 4] = b"BSR1";
const VERSION: u8 = 1;
const FLAG_PATCH: u8 = 1;

/// Writes the public part of each record: header, then one bit per sign
/// (least significant bit first, `1` for `+1`).
pub fn write_bitstream(mut out: impl Write, records: &[BinaryMeasurements]) -> Result<(), AcquisitionError> {
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION])?;
    out.write_all(&(records.len() as u32).to_le_bytes())?;
    for r in records {
        out.write_all(&[if r.patch.is_some() { FLAG_PATCH } else { 0 }])?;
        out.write_all(&(r.signs.len() as u32).to_le_bytes())?;
        out.write_all(&r.sensing_seed.to_le_bytes())?;
        if let Some(p) = r.patch {
            out.write_all(&p.row.to_le_bytes())?;
            out.write_all(&p.col.to_le_bytes())?;
        }
        let mut bytes = vec![0u8; r.signs.len().div_ceil(8)];
        for (i, &s) in r.signs.iter().enumerate() {
            if s > 0 {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        out.write_all(&bytes)?;
    }
    Ok(())
}

fn read_exact<const N: usize>(input: &mut impl Read) -> Result<[u8; N], AcquisitionError> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| AcquisitionError::Format(format!("truncated stream: {e}")))?;
    Ok(buf)
}

pub fn read_bitstream(mut input: impl Read) -> Result<Vec<BinaryMeasurements>, AcquisitionError> {
    if &read_exact::<4>(&mut input)? != MAGIC {
        return Err(AcquisitionError::Format("bad magic".into()));
    }
    let [version] = read_exact::<1>(&mut input)?;
    if version != VERSION {
        return Err(AcquisitionError::Format(format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(read_exact(&mut input)?) as usize;
    let mut records = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let [flags] = read_exact::<1>(&mut input)?;
        if flags & !FLAG_PATCH != 0 {
            return Err(AcquisitionError::Format(format!("unknown flags {flags:#04x}")));
        }
        let m = u32::from_le_bytes(read_exact(&mut input)?) as usize;
        let sensing_seed = u64::from_le_bytes(read_exact(&mut input)?);
        let patch = if flags & FLAG_PATCH != 0 {
            let row = u32::from_le_bytes(read_exact(&mut input)?);
            let col = u32::from_le_bytes(read_exact(&mut input)?);
            Some(PatchCoord { row, col })
        } else {
            None
        };
        let mut bytes = vec![0u8; m.div_ceil(8)];
        input.read_exact(&mut bytes).map_err(|e| AcquisitionError::Format(format!("truncated sign block: {e}")))?;
        let signs = (0..m).map(|i| if bytes[i / 8] >> (i % 8) & 1 == 1 { 1 } else { -1 }).collect();
        records.push(BinaryMeasurements { signs, sensing_seed, patch, encoder: None });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(AcquisitionError::Format("trailing bytes after last record".into()));
    }
    Ok(records)
}

/// JSON sidecar holding the encoder-private fields, one entry per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub records: Vec<Option<EncoderPrivate>>,
}

impl Sidecar {
    pub fn from_records(records: &[BinaryMeasurements]) -> Self {
        Self { records: records.iter().map(|r| r.encoder.clone()).collect() }
    }

    pub fn attach(&self, records: &mut [BinaryMeasurements]) -> Result<(), AcquisitionError> {
        if self.records.len() != records.len() {
            return Err(AcquisitionError::Format(format!(
                "sidecar has {} entries for {} records",
                self.records.len(),
                records.len()
            )));
        }
        for (r, e) in records.iter_mut().zip(&self.records) {
            r.encoder = e.clone();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_is_plus_minus_one_and_seeded() {
        let a = SensingEnsemble::new(50, 40, 9);
        let b = SensingEnsemble::new(50, 40, 9);
        let mut plus = 0;
        for i in 0..50 {
            for j in 0..40 {
                let v = a.matrix()[(i, j)];
                assert!(v == 1.0 || v == -1.0);
                assert_eq!(v, b.matrix()[(i, j)]);
                plus += usize::from(v > 0.0);
            }
        }
        // 2000 fair coins: far outside 6σ would mean a biased draw.
        assert!((plus as f64 - 1000.0).abs() < 6.0 * 22.4);
        let c = SensingEnsemble::new(50, 40, 10);
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn zero_signal_is_degenerate() {
        let a = SensingEnsemble::new(8, 5, 1);
        let err = encode(&[0.0; 5], &a, -1.0).unwrap_err();
        assert!(matches!(err, AcquisitionError::DegenerateEncoding { m: 8, sign: 1 }));
    }

    #[test]
    fn single_row_arithmetic() {
        let mut a = SensingEnsemble::new(2, 3, 0);
        a.matrix = Mat::from_fn(2, 3, |i, _| if i == 0 { 1.0 } else { -1.0 });
        let y = encode(&[1.0, 0.5, 1.5], &a, 1.0).unwrap();
        assert_eq!(y.signs, vec![1, -1]);
    }

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(sign(0.0), 1);
        assert_eq!(sign(-0.0), 1);
        assert_eq!(sign(-1e-300), -1);
    }

    #[test]
    fn median_threshold() {
        assert_eq!(choose_threshold(&[1.0, 2.0, 3.0, 4.0], ThresholdPolicy::Median).unwrap(), 2.5);
        let tau = choose_threshold(&[0.0, 0.0, 0.0, 0.0, 1.0], ThresholdPolicy::Median).unwrap();
        assert!(tau > 0.0 && tau < 1.0);
        assert!(matches!(
            choose_threshold(&[2.0; 4], ThresholdPolicy::Median),
            Err(AcquisitionError::ConstantProjections(_))
        ));
    }

    #[test]
    fn fixed_threshold_range_check() {
        let p = [-1.0, 0.0, 2.0];
        assert_eq!(choose_threshold(&p, ThresholdPolicy::Fixed(-0.1)).unwrap(), -0.1);
        assert!(choose_threshold(&p, ThresholdPolicy::Fixed(-1.0)).is_err());
        assert!(choose_threshold(&p, ThresholdPolicy::Fixed(3.0)).is_err());
    }

    #[test]
    fn zero_noise_matches_noiseless() {
        let a = SensingEnsemble::new(30, 10, 4);
        let z: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
        let clean = encode(&z, &a, 0.1).unwrap();
        let noisy = encode_noisy(&z, &a, 0.1, NoiseSpec { sigma: 0.0, seed: 3 }).unwrap();
        assert_eq!(clean.signs, noisy.signs);
        assert_eq!(noisy.encoder.unwrap().flips, 0);
    }

    #[test]
    fn snr_definition() {
        let margins = [3.0, 4.0];
        let noise = [0.3, 0.4];
        assert!((input_snr(&margins, &noise) - 20.0).abs() < 1e-12);
        assert_eq!(input_snr(&margins, &[0.0, 0.0]), f64::INFINITY);
        let sigma = calibrate_sigma(&margins, 15.0);
        assert!((2.0 * sigma * sigma * 10f64.powf(1.5) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn bitstream_round_trip() {
        let records = vec![
            BinaryMeasurements {
                signs: vec![1, -1, -1, 1, 1, 1, -1, 1, -1],
                sensing_seed: u64::MAX - 3,
                patch: Some(PatchCoord { row: 16, col: 48 }),
                encoder: Some(EncoderPrivate { threshold: -0.1, noise: None, flips: 0 }),
            },
            BinaryMeasurements { signs: vec![-1, 1], sensing_seed: 0, patch: None, encoder: None },
        ];
        let mut bytes = Vec::new();
        write_bitstream(&mut bytes, &records).unwrap();
        // 9 + 4 header, 1+4+8+8 + 2 bytes, 1+4+8 + 1 byte
        assert_eq!(bytes.len(), 9 + 23 + 14);
        let mut back = read_bitstream(bytes.as_slice()).unwrap();
        assert_eq!(back[0].signs, records[0].signs);
        assert_eq!(back[0].patch, records[0].patch);
        assert_eq!(back[0].encoder, None);
        assert_eq!(back[1], records[1]);

        let sidecar = Sidecar::from_records(&records);
        let json = serde_json::to_string(&sidecar).unwrap();
        let sidecar: Sidecar = serde_json::from_str(&json).unwrap();
        sidecar.attach(&mut back).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn bitstream_rejects_corruption() {
        let records = vec![BinaryMeasurements { signs: vec![1; 20], sensing_seed: 1, patch: None, encoder: None }];
        let mut bytes = Vec::new();
        write_bitstream(&mut bytes, &records).unwrap();
        assert!(read_bitstream(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_bitstream(extra.as_slice()).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(read_bitstream(bad.as_slice()).is_err());
    }
}
