use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "dcg", version, about = "Detuning-robust pulse synthesis and benchmarking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Optimize the polynomial-times-cos² X_π/2 pulse.
    Synth(SynthArgs),
    /// Sample a pulse onto the 1/64 ns grid and write it as CSV.
    Waveform(WaveformArgs),
    /// Gate error versus drive detuning.
    Sweep(SweepArgs),
    /// Simulated randomized benchmarking.
    Rb(RbArgs),
    /// Build a CORPSE composite pulse.
    Corpse(CorpseArgs),
    /// Calibrate amplitude and DRAG weight and record the calibration sweeps.
    Calibrate(CalibrateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    /// Target gate; only x90 is supported.
    #[arg(long, default_value = "x90")]
    pub gate: String,
    #[arg(long, default_value_t = 40.0)]
    pub duration_ns: f64,
    /// Highest polynomial degree; odd coefficients stay zero.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Weight of the fidelity cost against the robustness cost.
    #[arg(long, default_value_t = 0.999)]
    pub weight: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Where the pulse comes from: `optimal`, `table`, `gaussian`, a synth JSON file or an envelope CSV.
#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct PulseArgs {
    #[arg(long, default_value = "optimal")]
    pub pulse: String,
    #[arg(long, default_value_t = 40.0)]
    pub duration_ns: f64,
    /// Gaussian width; defaults to an eighth of the duration.
    #[arg(long)]
    pub sigma_ns: Option<f64>,
    /// Degree used when `--pulse optimal` is synthesized on the fly.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct ModelArgs {
    /// Device preset: Q0, Q1 or Q0Q1.
    #[arg(long, default_value = "Q0")]
    pub preset: String,
    /// JSON qubit (or, for spectator RB, pair) model replacing the preset.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub no_decoherence: bool,
    #[arg(long)]
    pub no_thermal: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct GateArgs {
    /// Use the pulse as given instead of calibrating it on the model.
    #[arg(long)]
    pub no_calibrate: bool,
    /// Fixed DRAG weight; implies --no-calibrate.
    #[arg(long)]
    pub drag_beta_ns: Option<f64>,
    /// Fixed amplitude scale; implies --no-calibrate.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[command(args_override_self = true)]
pub struct WaveformArgs {
    #[command(flatten)]
    pub pulse: PulseArgs,
    #[arg(long, default_value_t = 0.0)]
    pub drag_beta_ns: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SweepMethod {
    Fast,
    Simulated,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pulse: PulseArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub gate: GateArgs,
    /// `start:stop:step` (inclusive) or a comma-separated list, in MHz.
    #[arg(long, allow_hyphen_values = true, default_value = "-8:8:0.25")]
    pub detuning_mhz: String,
    #[arg(long, value_enum, default_value_t = SweepMethod::Fast)]
    pub method: SweepMethod,
    /// Sequences per length on the simulated path.
    #[arg(long, default_value_t = 40)]
    pub seqs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum RbModeArg {
    Standard,
    Interleaved,
    Leakage,
    Spectator,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[command(args_override_self = true)]
pub struct RbArgs {
    #[arg(long, value_enum, default_value_t = RbModeArg::Standard)]
    pub mode: RbModeArg,
    /// As for other commands, plus `ideal` for the exact rotation.
    #[command(flatten)]
    pub pulse: PulseArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub gate: GateArgs,
    #[arg(long, default_value_t = 40)]
    pub seqs: usize,
    /// Comma-separated Clifford counts; defaults depend on the mode.
    #[arg(long)]
    pub lengths: Option<String>,
    #[arg(long)]
    pub seed: u64,
    /// Binomial shots per sequence (spectator mode).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Sample spectator flips per sequence instead of averaging them exactly.
    #[arg(long)]
    pub sample_flips: bool,
    /// Start the spectator in a random eigenstate.
    #[arg(long)]
    pub random_initial: bool,
    /// Detuning of the interleaved gate only, MHz.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub detuning_mhz: f64,
    /// Symmetric readout assignment error.
    #[arg(long, default_value_t = 0.0)]
    pub readout_error: f64,
    /// Average infidelity of depolarizing noise injected after each Clifford (two-level models).
    #[arg(long, default_value_t = 0.0)]
    pub depolarizing: f64,
    /// Histogram CSV of per-sequence survivals.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[command(args_override_self = true)]
pub struct CorpseArgs {
    /// Net rotation in units of π.
    #[arg(long, default_value_t = 0.5)]
    pub angle_pi: f64,
    /// Winding numbers n1,n2,n3.
    #[arg(long, default_value = "1,1,1")]
    pub windings: String,
    #[arg(long, default_value_t = 5.0)]
    pub rise_ns: f64,
    /// Peak Rabi frequency Ω/2π in MHz.
    #[arg(long)]
    pub peak_mhz: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NegativeArg {
    VirtualZ,
    PhaseInverted,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[command(args_override_self = true)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub pulse: PulseArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest odd repetition count of the amplitude sequence.
    #[arg(long, default_value_t = 21)]
    pub n_max: usize,
    /// How X_−π/2 is played in the DRAG sequence.
    #[arg(long, value_enum, default_value_t = NegativeArg::VirtualZ)]
    pub negative: NegativeArg,
    /// CSV of `protocol,value,n,observable` around the calibrated point.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
