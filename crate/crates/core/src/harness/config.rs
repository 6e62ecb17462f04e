use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::ThresholdPolicy;
use crate::patch::{PatchScale, SensingPolicy};
use crate::signal::{make_gaussian_kernel, make_gaussian_line, make_sinc_kernel, AmplitudeLaw, BlurKernel, Grid};
use crate::solver::{BsrConfig, BsrMode, EpsilonRule};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Noiseless 1-D recovery with per-iteration diagnostics.
    OneD,
    /// Patch-wise image recovery.
    TwoD,
    /// 1-D recovery over a list of input SNRs.
    NoiseSweep,
    /// Patch-wise recovery next to the full-precision basis pursuit baseline.
    OracleCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalParams {
    pub grid: Grid,
    pub spikes: usize,
    pub amplitude: AmplitudeLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelParams {
    Sinc {
        length: usize,
        cutoff: f64,
    },
    GaussianLine {
        length: usize,
        sigma: f64,
    },
    /// `p × p` mask.
    Gaussian {
        size: usize,
        sigma: f64,
    },
}

impl KernelParams {
    pub fn build(&self) -> Result<BlurKernel, HarnessError> {
        let k = match *self {
            KernelParams::Sinc { length, cutoff } => make_sinc_kernel(length, cutoff),
            KernelParams::GaussianLine { length, sigma } => make_gaussian_line(length, sigma),
            KernelParams::Gaussian { size, sigma } => make_gaussian_kernel(size, sigma),
        };
        k.map_err(|e| HarnessError::field("kernels", e.to_string()))
    }

    /// Short name used in output rows and file names.
    pub fn label(&self) -> String {
        match *self {
            KernelParams::Sinc { length, cutoff } => format!("sinc-{length}-{cutoff}"),
            KernelParams::GaussianLine { length, sigma } => format!("gauss-{length}-{sigma}"),
            KernelParams::Gaussian { size, sigma } => format!("gauss-{size}x{size}-{sigma}"),
        }
    }

    fn is_mask(&self) -> bool {
        matches!(self, KernelParams::Gaussian { .. })
    }

    fn length(&self) -> usize {
        match *self {
            KernelParams::Sinc { length, .. } | KernelParams::GaussianLine { length, .. } => length,
            KernelParams::Gaussian { size, .. } => size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchParams {
    pub side: usize,
    pub sensing: SensingPolicy,
    pub scale: PatchScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionParams {
    /// Per signal in 1-D, per tile in 2-D.
    pub measurements: usize,
    pub threshold: ThresholdPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<PatchParams>,
    /// Input SNRs in dB; only read by noise sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_snr_db: Vec<f64>,
}

/// Trial `t` uses `signal + t` and `sensing + t`; noise seeds also mix in
/// the sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedParams {
    pub signal: u64,
    pub sensing: u64,
    pub noise: u64,
    pub trials: usize,
}

impl SeedParams {
    pub fn signal_seed(&self, trial: usize) -> u64 {
        self.signal.wrapping_add(trial as u64)
    }

    pub fn sensing_seed(&self, trial: usize) -> u64 {
        self.sensing.wrapping_add(trial as u64)
    }

    pub fn noise_seed(&self, trial: usize, point: usize) -> u64 {
        self.noise.wrapping_add(trial as u64 * 1009).wrapping_add(point as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub signal: SignalParams,
    pub kernels: Vec<KernelParams>,
    pub acquisition: AcquisitionParams,
    pub solver: BsrConfig,
    pub seeds: SeedParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

pub const PRESETS: [&str; 4] = ["fig1", "table1-desk", "fig2", "fig3"];

/// Threshold shared by every tile in the image presets. Tiles are scaled by
/// their recovered threshold before stitching, so it has to sit well away
/// from zero relative to typical tile projections.
pub const IMAGE_THRESHOLD: f64 = -2.0;

fn line_setup(m: usize) -> (SignalParams, AcquisitionParams) {
    (
        SignalParams { grid: Grid::Line(200), spikes: 6, amplitude: AmplitudeLaw::Uniform { low: 1.0, high: 5.0 } },
        AcquisitionParams {
            measurements: m,
            threshold: ThresholdPolicy::Fixed(-0.1),
            patch: None,
            input_snr_db: Vec::new(),
        },
    )
}

fn image_setup() -> (SignalParams, AcquisitionParams) {
    (
        SignalParams { grid: Grid::square(64), spikes: 10, amplitude: AmplitudeLaw::Uniform { low: 0.0, high: 5.0 } },
        AcquisitionParams {
            measurements: 512,
            threshold: ThresholdPolicy::Fixed(IMAGE_THRESHOLD),
            patch: Some(PatchParams {
                side: 16,
                sensing: SensingPolicy::PerPatch,
                scale: PatchScale::ThresholdAnchored,
            }),
            input_snr_db: Vec::new(),
        },
    )
}

const SEEDS: SeedParams = SeedParams { signal: 0, sensing: 1000, noise: 5000, trials: 10 };

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        let cfg = match name {
            "fig1" => {
                let kernel = KernelParams::Sinc { length: 101, cutoff: 0.25 };
                let (signal, acquisition) = line_setup(450);
                Self {
                    name: name.into(),
                    kind: ExperimentKind::OneD,
                    signal,
                    kernels: vec![kernel],
                    acquisition,
                    solver: BsrConfig::noiseless(10),
                    seeds: SEEDS,
                    output: None,
                }
            }
            "fig3" => {
                let kernel = KernelParams::GaussianLine { length: 101, sigma: 1.0 };
                let (signal, mut acquisition) = line_setup(600);
                acquisition.input_snr_db = vec![30.0, 25.0, 20.0, 15.0, 10.0, 5.0];
                Self {
                    name: name.into(),
                    kind: ExperimentKind::NoiseSweep,
                    signal,
                    kernels: vec![kernel],
                    acquisition,
                    solver: BsrConfig::noisy(8, BsrMode::DEFAULT_BETA),
                    seeds: SEEDS,
                    output: None,
                }
            }
            "table1-desk" | "fig2" => {
                let (signal, acquisition) = image_setup();
                let (kind, kernels) = if name == "fig2" {
                    (ExperimentKind::OracleCompare, vec![KernelParams::Gaussian { size: 5, sigma: 2.0 }])
                } else {
                    (
                        ExperimentKind::TwoD,
                        vec![
                            KernelParams::Gaussian { size: 5, sigma: 2.0 },
                            KernelParams::Gaussian { size: 7, sigma: 3.0 },
                            KernelParams::Gaussian { size: 9, sigma: 4.0 },
                        ],
                    )
                };
                Self {
                    name: name.into(),
                    kind,
                    signal,
                    kernels,
                    acquisition,
                    solver: BsrConfig::noiseless(5),
                    seeds: SEEDS,
                    output: None,
                }
            }
            other => {
                return Err(HarnessError::field(
                    "preset",
                    format!("unknown preset `{other}`; expected one of {}", PRESETS.join(", ")),
                ))
            }
        };
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::field("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_string(self).expect("config serializes").as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn is_image(&self) -> bool {
        matches!(self.kind, ExperimentKind::TwoD | ExperimentKind::OracleCompare)
    }

    /// Blurred length `l_z = l_x + l_h − 1` for line experiments.
    pub fn blurred_len(&self, kernel: &KernelParams) -> usize {
        self.signal.grid.cells() + kernel.length() - 1
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let s = &self.signal;
        if self.kernels.is_empty() {
            return Err(HarnessError::field("kernels", "at least one kernel is required"));
        }
        if s.spikes == 0 || s.spikes > s.grid.cells() {
            return Err(HarnessError::field(
                "signal.spikes",
                format!("must be in 1..={}, got {}", s.grid.cells(), s.spikes),
            ));
        }
        if let AmplitudeLaw::Uniform { low, high } = s.amplitude {
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(HarnessError::field("signal.amplitude", format!("empty range [{low}, {high}]")));
            }
        }
        if self.acquisition.measurements == 0 {
            return Err(HarnessError::field("acquisition.measurements", "must be positive"));
        }
        if let ThresholdPolicy::Fixed(t) = self.acquisition.threshold {
            if !t.is_finite() {
                return Err(HarnessError::field("acquisition.threshold", "must be finite"));
            }
        }
        if self.solver.iterations == 0 {
            return Err(HarnessError::field("solver.iterations", "must be at least 1"));
        }
        match self.solver.mode {
            BsrMode::Noisy { beta } if !(beta > 0.0 && beta.is_finite()) => {
                return Err(HarnessError::field("solver.mode", format!("β must be positive, got {beta}")));
            }
            _ => {}
        }
        let (EpsilonRule::RelativeToFirst(e) | EpsilonRule::Absolute(e)) = self.solver.epsilon;
        if !(e > 0.0 && e.is_finite()) {
            return Err(HarnessError::field("solver.epsilon", format!("must be positive, got {e}")));
        }
        if self.seeds.trials == 0 {
            return Err(HarnessError::field("seeds.trials", "must be at least 1"));
        }
        for (i, k) in self.kernels.iter().enumerate() {
            if k.is_mask() != self.is_image() {
                return Err(HarnessError::field(
                    format!("kernels[{i}]"),
                    if self.is_image() {
                        "image experiments need a 2-D mask"
                    } else {
                        "line experiments need a 1-D kernel"
                    },
                ));
            }
            k.build().map_err(|e| HarnessError::field(format!("kernels[{i}]"), e.to_string()))?;
        }
        match (self.is_image(), s.grid, self.acquisition.patch) {
            (true, Grid::Image { rows, cols }, Some(p)) => {
                if p.side == 0 || rows < p.side || cols < p.side {
                    return Err(HarnessError::field(
                        "acquisition.patch.side",
                        format!("tile side {} does not fit a {rows}×{cols} image", p.side),
                    ));
                }
                if let ThresholdPolicy::Median = self.acquisition.threshold {
                    return Err(HarnessError::field(
                        "acquisition.threshold",
                        "image experiments need one fixed threshold shared by all tiles",
                    ));
                }
            }
            (true, Grid::Image { .. }, None) => {
                return Err(HarnessError::field("acquisition.patch", "image experiments need patch parameters"))
            }
            (true, Grid::Line(_), _) => {
                return Err(HarnessError::field("signal.grid", "image experiments need an image grid"))
            }
            (false, Grid::Image { .. }, _) => {
                return Err(HarnessError::field("signal.grid", "line experiments need a line grid"))
            }
            (false, Grid::Line(_), patch) => {
                if patch.is_some() {
                    return Err(HarnessError::field("acquisition.patch", "only image experiments use patches"));
                }
            }
        }
        match self.kind {
            ExperimentKind::NoiseSweep => {
                if self.acquisition.input_snr_db.is_empty() {
                    return Err(HarnessError::field("acquisition.input_snr_db", "a noise sweep needs SNR points"));
                }
                if self.acquisition.input_snr_db.iter().any(|v| !v.is_finite()) {
                    return Err(HarnessError::field("acquisition.input_snr_db", "SNR points must be finite"));
                }
                if self.solver.mode == BsrMode::Noiseless {
                    return Err(HarnessError::field("solver.mode", "a noise sweep needs the slack-relaxed mode"));
                }
            }
            _ if !self.acquisition.input_snr_db.is_empty() => {
                return Err(HarnessError::field("acquisition.input_snr_db", "only noise sweeps take SNR points"));
            }
            _ => {}
        }
        Ok(())
    }
}
