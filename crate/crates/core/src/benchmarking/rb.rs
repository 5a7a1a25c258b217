//! Clifford randomized benchmarking: sequences, simulation and rate extraction.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::clifford::{clifford_group, x90_index, Primitive, GROUP_SIZE};
use super::fit::{epg_from_rb, error_per_clifford, fit_decay, fit_decay_weighted, DecayFit, Rate, RateKind};
use crate::error::{DcgError, Result};
use crate::gate::{virtual_z, x90, PulseGate};
use crate::linalg::{ComplexMatrix, C64};
use crate::model::{PairModel, QubitModel};
use crate::parallel::{map_indexed, Execution};
use crate::quantum::{unitary_superoperator, vectorize, GateChannel};

/// Doubling lengths `1, 2, 4, …, 512`.
pub fn default_lengths() -> Vec<usize> {
    (0..10).map(|k| 1 << k).collect()
}

/// What plays the physical `X_π/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateImplementation {
    /// The exact rotation, embedded with identity on any third level.
    Ideal,
    Pulse(PulseGate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectatorOptions {
    pub pair: PairModel,
    /// Binomial shots per sequence; `None` keeps analytic expectation values.
    pub shots: Option<u64>,
    /// Start the spectator in a random eigenstate instead of `|0⟩`.
    pub random_initial: bool,
    /// Replace the sampled flips by their exact average. Each boundary flips with
    /// probability 1/2, so the branch of every Clifford is uniform and independent.
    pub average_flips: bool,
}

impl SpectatorOptions {
    /// Analytic expectation values with the flips averaged exactly.
    pub fn new(pair: PairModel) -> Self {
        Self {
            pair,
            shots: None,
            random_initial: false,
            average_flips: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbMode {
    Standard,
    /// Interleaves the `X_π/2` after every random Clifford.
    Interleaved,
    /// Standard sequences, also fitting the population outside the qubit.
    Leakage,
    /// Interleaved, with the spectator flipped at random before each reference Clifford.
    Spectator(SpectatorOptions),
}

impl RbMode {
    pub fn name(&self) -> &'static str {
        match self {
            RbMode::Standard => "standard",
            RbMode::Interleaved => "interleaved",
            RbMode::Leakage => "leakage",
            RbMode::Spectator(_) => "spectator",
        }
    }

    fn interleaves(&self) -> bool {
        matches!(self, RbMode::Interleaved | RbMode::Spectator(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub n_sequences: usize,
    pub seed: u64,
    pub mode: RbMode,
    pub model: QubitModel,
    pub gate: GateImplementation,
    /// Extra detuning seen by the interleaved gate only (rad/s).
    pub interleaved_detuning: f64,
    /// Average infidelity of a depolarizing channel applied after each random Clifford.
    /// Two-level models only.
    pub depolarizing_error: f64,
    /// Symmetric assignment error applied to the survival readout.
    pub readout_error: f64,
    /// Weight each length by the inverse variance of its sequence mean.
    pub weighted_fit: bool,
    pub execution: Execution,
}

impl RbConfig {
    pub fn new(mode: RbMode, model: QubitModel, gate: GateImplementation, seed: u64) -> Self {
        Self {
            lengths: default_lengths(),
            n_sequences: 40,
            seed,
            mode,
            model,
            gate,
            interleaved_detuning: 0.0,
            depolarizing_error: 0.0,
            readout_error: 0.0,
            weighted_fit: true,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths[0] < 1 || self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DcgError::Config("lengths must be strictly increasing and at least 1".into()));
        }
        if self.n_sequences == 0 {
            return Err(DcgError::Config("n_sequences must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.depolarizing_error) || !(0.0..=1.0).contains(&self.readout_error) {
            return Err(DcgError::Config("error probabilities must lie in [0, 1]".into()));
        }
        if self.depolarizing_error > 0.0 && self.model.levels != 2 {
            return Err(DcgError::UnsupportedModel("depolarizing injection needs a two-level model".into()));
        }
        if matches!(self.mode, RbMode::Leakage) && self.model.levels < 3 {
            return Err(DcgError::UnsupportedModel("leakage RB needs a third level".into()));
        }
        if !self.interleaved_detuning.is_finite() {
            return Err(DcgError::Config("non-finite interleaved detuning".into()));
        }
        if let RbMode::Spectator(opts) = &self.mode {
            opts.pair.validate()?;
            if opts.shots == Some(0) {
                return Err(DcgError::Config("shots must be positive".into()));
            }
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbSequence {
    pub length: usize,
    pub index: usize,
    pub cliffords: Vec<usize>,
    pub recovery: usize,
    pub interleaved: bool,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sequence seed from `(seed, length, index)`.
pub fn sequence_seed(seed: u64, length: usize, index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ length as u64) ^ index as u64)
}

const FLIP_STREAM: u64 = 0x5EC7_A70F;
const SHOT_STREAM: u64 = 0x5407_5EED;

pub fn rb_sequence(seed: u64, length: usize, index: usize, interleaved: bool) -> RbSequence {
    let group = clifford_group();
    let x = x90_index();
    let mut rng = ChaCha8Rng::seed_from_u64(sequence_seed(seed, length, index));
    let cliffords: Vec<usize> = (0..length).map(|_| rng.random_range(0..GROUP_SIZE)).collect();
    let mut total = 0;
    for &c in &cliffords {
        total = group.product[c][total];
        if interleaved {
            total = group.product[x][total];
        }
    }
    RbSequence {
        length,
        index,
        cliffords,
        recovery: group.inverse[total],
        interleaved,
    }
}

/// Sequences grouped by length. Interleaved and reference runs share the random Cliffords.
pub fn rb_sequences(config: &RbConfig) -> Vec<Vec<RbSequence>> {
    let interleaved = config.mode.interleaves();
    config
        .lengths
        .iter()
        .map(|&l| (0..config.n_sequences).map(|i| rb_sequence(config.seed, l, i, interleaved)).collect())
        .collect()
}

/// Ideal unitary of a sequence, for checking recovery.
pub fn ideal_composition(seq: &RbSequence) -> ComplexMatrix {
    let group = clifford_group();
    let mut u = ComplexMatrix::identity(2);
    for &c in &seq.cliffords {
        u = &group.unitaries[c] * &u;
        if seq.interleaved {
            u = &x90() * &u;
        }
    }
    &group.unitaries[seq.recovery] * &u
}

/// Superoperators of all 24 Cliffords, alone and followed by the interleaved gate.
struct ChannelSet {
    cliffords: Vec<ComplexMatrix>,
    interleaved: Vec<ComplexMatrix>,
    dim: usize,
}

fn x90_superop(gate: &GateImplementation, model: &QubitModel) -> Result<ComplexMatrix> {
    let d = model.levels;
    Ok(match gate {
        GateImplementation::Ideal => {
            let mut u = x90().embed(d);
            for k in 2..d {
                u[(k, k)] = C64::new(1.0, 0.0);
            }
            unitary_superoperator(&u)
        }
        GateImplementation::Pulse(p) => p.channel(model)?.superoperator(),
    })
}

impl ChannelSet {
    fn build(
        gate: &GateImplementation,
        model: &QubitModel,
        interleaved_detuning: f64,
        depolarizing: Option<&ComplexMatrix>,
    ) -> Result<Self> {
        let d = model.levels;
        let sx = x90_superop(gate, model)?;
        let cliffords: Vec<ComplexMatrix> = clifford_group()
            .gates
            .iter()
            .map(|g| {
                g.decomposition.iter().fold(ComplexMatrix::identity(d * d), |s, p| {
                    let m = match p {
                        Primitive::X90 => sx.clone(),
                        Primitive::VirtualZ(phi) => unitary_superoperator(&virtual_z(*phi, d)),
                    };
                    &m * &s
                })
            })
            .map(|c| match depolarizing {
                Some(dep) => dep * &c,
                None => c,
            })
            .collect();
        let gate_x = if interleaved_detuning == 0.0 {
            sx
        } else {
            x90_superop(gate, &model.with_detuning(model.detuning + interleaved_detuning))?
        };
        let interleaved = cliffords.iter().map(|c| &gate_x * c).collect();
        Ok(Self {
            cliffords,
            interleaved,
            dim: d,
        })
    }

    fn average(a: &ChannelSet, b: &ChannelSet) -> ChannelSet {
        let mean = |x: &[ComplexMatrix], y: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
            x.iter().zip(y).map(|(p, q)| (p + q).scale_re(0.5)).collect()
        };
        ChannelSet {
            cliffords: mean(&a.cliffords, &b.cliffords),
            interleaved: mean(&a.interleaved, &b.interleaved),
            dim: a.dim,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    survival: f64,
    leaked: f64,
}

struct Simulator {
    branches: Vec<ChannelSet>,
    readout_error: f64,
    /// (random initial state, shots, sample flips)
    spectator: Option<(bool, Option<u64>, bool)>,
    seed: u64,
}

impl Simulator {
    fn new(config: &RbConfig) -> Result<Self> {
        let model = &config.model;
        let depolarizing = (config.depolarizing_error > 0.0)
            .then(|| GateChannel::depolarizing(2.0 * config.depolarizing_error).superoperator());
        let build = |m: &QubitModel| ChannelSet::build(&config.gate, m, config.interleaved_detuning, depolarizing.as_ref());
        let mut branches = vec![build(model)?];
        let mut spectator = None;
        if let RbMode::Spectator(opts) = &config.mode {
            // The target frame is calibrated with the spectator in |0⟩.
            let shift = opts.pair.branch_detuning(1) - opts.pair.branch_detuning(0);
            let flipped = build(&model.with_detuning(model.detuning + shift))?;
            if opts.average_flips {
                branches = vec![ChannelSet::average(&branches[0], &flipped)];
                spectator = opts.shots.map(|s| (false, Some(s), false));
            } else {
                branches.push(flipped);
                spectator = Some((opts.random_initial, opts.shots, true));
            }
        }
        Ok(Self {
            branches,
            readout_error: config.readout_error,
            spectator,
            seed: config.seed,
        })
    }

    fn run(&self, seq: &RbSequence, interleave: bool) -> Outcome {
        let d = self.branches[0].dim;
        let mut rho = ComplexMatrix::zeros(d);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        let mut v = vectorize(&rho);

        let mut flip_rng = self
            .spectator
            .filter(|s| s.2)
            .map(|_| ChaCha8Rng::seed_from_u64(sequence_seed(self.seed ^ FLIP_STREAM, seq.length, seq.index)));
        let mut branch = match (&self.spectator, flip_rng.as_mut()) {
            (Some((true, _, _)), Some(rng)) => usize::from(rng.random_bool(0.5)),
            _ => 0,
        };
        let mut maybe_flip = |branch: &mut usize| {
            if let Some(rng) = flip_rng.as_mut() {
                if rng.random_bool(0.5) {
                    *branch ^= 1;
                }
            }
        };

        for &c in &seq.cliffords {
            maybe_flip(&mut branch);
            let set = &self.branches[branch];
            v = if interleave { &set.interleaved[c] } else { &set.cliffords[c] }.mul_vec(&v);
        }
        maybe_flip(&mut branch);
        v = self.branches[branch].cliffords[seq.recovery].mul_vec(&v);

        let p0 = v[0].re;
        let leaked: f64 = (2..d).map(|k| v[k * d + k].re).sum();
        let mut survival = (1.0 - self.readout_error) * p0 + self.readout_error * (1.0 - p0 - leaked);
        if let Some((_, Some(shots), _)) = self.spectator {
            let tag = if interleave { 1 } else { 0 };
            let mut rng = ChaCha8Rng::seed_from_u64(sequence_seed(self.seed ^ SHOT_STREAM ^ tag, seq.length, seq.index));
            let k = Binomial::new(shots, survival.clamp(0.0, 1.0)).map(|b| b.sample(&mut rng)).unwrap_or(0);
            survival = k as f64 / shots as f64;
        }
        Outcome { survival, leaked }
    }
}

/// Per-length averages and their fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbCurve {
    pub survival_mean: Vec<f64>,
    pub survival_per_seq: Vec<Vec<f64>>,
    pub fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

/// Standard errors of the per-length means, floored at 1e-3 of the largest,
/// or `None` when every length is noiseless.
fn mean_standard_errors(per_seq: &[Vec<f64>]) -> Option<Vec<f64>> {
    let se: Vec<f64> = per_seq.iter().map(|v| std_dev(v) / (v.len() as f64).sqrt()).collect();
    let top = se.iter().cloned().fold(0.0, f64::max);
    (top > 0.0 && per_seq.iter().all(|v| v.len() > 1)).then(|| se.iter().map(|s| s.max(1e-3 * top)).collect())
}

impl RbCurve {
    fn from_values(lengths: &[usize], per_seq: Vec<Vec<f64>>, weighted: bool) -> Self {
        let mean: Vec<f64> = per_seq.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        let ls: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
        let sigmas = if weighted { mean_standard_errors(&per_seq) } else { None };
        let (fit, fit_error) = match fit_decay_weighted(&ls, &mean, sigmas.as_deref()) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            survival_mean: mean,
            survival_per_seq: per_seq,
            fit,
            fit_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageMethod {
    Fit,
    /// Least-squares slope of the leaked population through the origin, used when
    /// the decay is too slow for the fit to separate `B` from `p`.
    InitialSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageEstimate {
    pub lpg: Rate,
    pub method: LeakageMethod,
    pub leaked_mean: Vec<f64>,
    pub fit: Option<DecayFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbResult {
    pub mode: String,
    pub lengths: Vec<usize>,
    /// Interleaved curve in interleaved and spectator modes.
    pub survival_mean: Vec<f64>,
    pub survival_per_seq: Vec<Vec<f64>>,
    pub fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<RbCurve>,
    /// Error per Clifford of the reference decay.
    pub epc: Option<Rate>,
    /// Error per physical pulse, or of the interleaved gate.
    pub epg: Option<Rate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lpg: Option<LeakageEstimate>,
}

impl RbResult {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn slope_through_origin(lengths: &[usize], values: &[f64]) -> f64 {
    let (num, den) = lengths
        .iter()
        .zip(values)
        .fold((0.0, 0.0), |(n, d), (&l, &y)| (n + l as f64 * y, d + (l * l) as f64));
    num / den
}

fn leakage_estimate(lengths: &[usize], leaked_per_seq: &[Vec<f64>]) -> LeakageEstimate {
    let leaked_mean: Vec<f64> = leaked_per_seq.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let ls: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    let fit = fit_decay(&ls, &leaked_mean).ok();
    // A usable fit must see the leaked population saturate within the measured lengths.
    let usable = fit.as_ref().filter(|f| {
        let last = *ls.last().unwrap_or(&1.0);
        !f.degenerate && f.b > 0.0 && f.p < 1.0 && f.p.powf(last) < 0.5
    });
    match usable {
        Some(f) => LeakageEstimate {
            lpg: epg_from_rb(f, RateKind::Leakage),
            method: LeakageMethod::Fit,
            leaked_mean,
            fit: fit.clone(),
        },
        None => {
            let slope = slope_through_origin(lengths, &leaked_mean);
            LeakageEstimate {
                lpg: Rate {
                    value: slope / 2.0,
                    stderr: f64::NAN,
                    negative: slope < 0.0,
                },
                method: LeakageMethod::InitialSlope,
                leaked_mean,
                fit,
            }
        }
    }
}

/// Runs every sequence and returns per-length, per-sequence outcomes.
fn run_all(sim: &Simulator, config: &RbConfig, interleave: bool) -> Vec<Vec<Outcome>> {
    let n = config.n_sequences;
    let flat = map_indexed(config.execution, config.lengths.len() * n, |k| {
        let (li, si) = (k / n, k % n);
        let seq = rb_sequence(config.seed, config.lengths[li], si, interleave);
        sim.run(&seq, interleave)
    });
    flat.chunks(n).map(|c| c.to_vec()).collect()
}

fn survivals(outcomes: &[Vec<Outcome>]) -> Vec<Vec<f64>> {
    outcomes.iter().map(|v| v.iter().map(|o| o.survival).collect()).collect()
}

pub fn simulate_rb(config: &RbConfig) -> Result<RbResult> {
    config.validate()?;
    let sim = Simulator::new(config)?;
    let reference_outcomes = run_all(&sim, config, false);
    let reference = RbCurve::from_values(&config.lengths, survivals(&reference_outcomes), config.weighted_fit);
    let epc = reference.fit.as_ref().map(error_per_clifford);

    let (main, reference, epg, lpg) = match &config.mode {
        RbMode::Standard | RbMode::Leakage => {
            let epg = reference.fit.as_ref().map(|f| epg_from_rb(f, RateKind::Standard));
            let lpg = matches!(config.mode, RbMode::Leakage).then(|| {
                let leaked: Vec<Vec<f64>> =
                    reference_outcomes.iter().map(|v| v.iter().map(|o| o.leaked).collect()).collect();
                leakage_estimate(&config.lengths, &leaked)
            });
            (reference, None, epg, lpg)
        }
        RbMode::Interleaved | RbMode::Spectator(_) => {
            let interleaved = RbCurve::from_values(&config.lengths, survivals(&run_all(&sim, config, true)), config.weighted_fit);
            let epg = match (&interleaved.fit, &reference.fit) {
                (Some(i), Some(r)) => Some(epg_from_rb(i, RateKind::Interleaved { reference: r })),
                _ => None,
            };
            (interleaved, Some(reference), epg, None)
        }
    };
    Ok(RbResult {
        mode: config.mode.name().to_string(),
        lengths: config.lengths.clone(),
        survival_mean: main.survival_mean,
        survival_per_seq: main.survival_per_seq,
        fit: main.fit,
        fit_error: main.fit_error,
        reference,
        epc,
        epg,
        lpg,
    })
}

/// Dense short lengths for spectator averaging, where the decay length is about 20.
/// Includes 43, where the survival spread is compared.
pub fn spectator_lengths() -> Vec<usize> {
    vec![1, 2, 3, 4, 5, 6, 8, 10, 13, 16, 20, 25, 32, 43, 54, 68, 85]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub length: usize,
    /// Bin center.
    pub survival: f64,
    pub count: usize,
}

/// Counts of per-sequence survivals in bins of `width` over `[0, 1]`, empty bins omitted.
pub fn survival_histogram(lengths: &[usize], per_seq: &[Vec<f64>], width: f64) -> Vec<HistogramBin> {
    let nbins = (1.0 / width).round().max(1.0) as usize;
    let mut out = Vec::new();
    for (&length, values) in lengths.iter().zip(per_seq) {
        let mut counts = vec![0usize; nbins];
        for &v in values {
            let b = ((v.clamp(0.0, 1.0) / width) as usize).min(nbins - 1);
            counts[b] += 1;
        }
        out.extend(counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(b, &count)| HistogramBin {
            length,
            survival: (b as f64 + 0.5) * width,
            count,
        }));
    }
    out
}

pub fn write_histogram_csv<W: Write>(bins: &[HistogramBin], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for b in bins {
        wr.serialize(b)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectatorResult {
    pub averaged: RbResult,
    pub histogram: Vec<HistogramBin>,
}

/// Spectator-averaged interleaved RB plus the histogram of interleaved survivals.
pub fn spectator_rb(config: &RbConfig) -> Result<SpectatorResult> {
    if !matches!(config.mode, RbMode::Spectator(_)) {
        return Err(DcgError::Config("spectator_rb needs spectator mode".into()));
    }
    let averaged = simulate_rb(config)?;
    let histogram = survival_histogram(&averaged.lengths, &averaged.survival_per_seq, 0.01);
    Ok(SpectatorResult { averaged, histogram })
}

pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}
