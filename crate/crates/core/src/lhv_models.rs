//! Local models that reproduce quantum statistics.
//!
//! [`InstructionModel`]: at production the source draws a pair of
//! instructions, one per particle, each naming which of the four outcomes of
//! that particle's fixed POVM will occur. A station's response reads only
//! the instruction its own particle carries. With instruction pairs drawn
//! from the quantum 16-outcome table the model reproduces that table
//! exactly, including its violation of the CHSH combination.
//!
//! [`AdvanceModel`]: the settings for a run are announced before the pair
//! is produced. The source, knowing the announced pair `(tag1, tag2)`,
//! draws an outcome pair `(r1, r2)` from the quantum joint law for those
//! settings and gives each particle its half. This is not a Bell-local
//! model for settings chosen per trial at the stations; it shows that once
//! settings are known at the source, the derivation of the bound no longer
//! applies and quantum correlations are trivially reproduced.
//!
//! # Sampling
//!
//! All sampling uses [`rand_chacha::ChaCha8Rng`] seeded with
//! `seed_from_u64(seed)`. Outcome cells are drawn by cumulative-sum
//! inversion of one `f64` uniform over the cells in table order
//! (row-major, labels ordered `(A,+1), (A,-1), (a,+1), (a,-1)` and likewise
//! for `B`, `b`). Parallel runs give worker `w` the contiguous slice of trial
//! indices `[w·n/k, (w+1)·n/k)` and the generator stream `w`; worker 0 on a
//! single-worker run is bit-identical to the sequential path.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_povm::{EffectLabel, JointDistribution};
use crate::measurements::{
    chsh_combination, joint_outcome_table, Correlator, Outcome, SettingTag, SettingsQuartet,
    Station, TAG_PAIRS,
};
use crate::quantum_core::{DensityOperator, ALGEBRA_TOL, PROB_TOL};

/// Identity of the generator and cell-selection scheme, echoed in reports.
pub const GENERATOR_ID: &str =
    "rand_chacha-0.3 ChaCha8Rng seed_from_u64; stream=worker; cumulative-sum inversion";

/// The instruction handed to one particle: the POVM outcome it must produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalInstruction {
    outcome: EffectLabel,
}

/// Instructions for both particles of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstructionPair {
    pub out1: EffectLabel,
    pub out2: EffectLabel,
}

impl InstructionPair {
    /// Splits the pair at the source; each half travels with its particle.
    pub fn split(self) -> (LocalInstruction, LocalInstruction) {
        (
            LocalInstruction { outcome: self.out1 },
            LocalInstruction { outcome: self.out2 },
        )
    }
}

/// What a station reports when its particle arrives. Only the local
/// instruction is visible here.
pub fn station_response(instruction: &LocalInstruction) -> EffectLabel {
    instruction.outcome
}

/// Distribution over the 16 instruction pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct InstructionModel {
    weights: [[f64; 4]; 4],
}

impl InstructionModel {
    /// Weights must be nonnegative and sum to 1 within 1e-12.
    pub fn from_weights(weights: [[f64; 4]; 4]) -> Result<Self> {
        check_weights(&weights, ALGEBRA_TOL)?;
        Ok(InstructionModel { weights })
    }

    pub fn weights(&self) -> &[[f64; 4]; 4] {
        &self.weights
    }

    pub fn weight(&self, pair: InstructionPair) -> f64 {
        self.weights[pair.out1.index()][pair.out2.index()]
    }

    /// All 16 instruction pairs in table order.
    pub fn pairs() -> impl Iterator<Item = InstructionPair> {
        EffectLabel::all(Station::One).into_iter().flat_map(|out1| {
            EffectLabel::all(Station::Two)
                .into_iter()
                .map(move |out2| InstructionPair { out1, out2 })
        })
    }

    /// Source step: draw one instruction pair.
    pub fn emit<R: Rng + ?Sized>(&self, sampler: &CellSampler, rng: &mut R) -> InstructionPair {
        let (i, j) = sampler.sample(rng);
        InstructionPair {
            out1: EffectLabel::from_index(Station::One, i),
            out2: EffectLabel::from_index(Station::Two, j),
        }
    }
}

fn check_weights(weights: &[[f64; 4]; 4], tol: f64) -> Result<()> {
    let mut sum = 0.0;
    for &w in weights.iter().flatten() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::ProbabilityOutOfRange { value: w });
        }
        sum += w;
    }
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// Instruction frequencies copied from `d`.
pub fn instruction_model_from(d: &JointDistribution) -> Result<InstructionModel> {
    let weights = *d.probs();
    check_weights(&weights, PROB_TOL)?;
    Ok(InstructionModel { weights })
}

/// Outcome probabilities implied by the instruction weights.
pub fn predicted_distribution(m: &InstructionModel) -> JointDistribution {
    JointDistribution::from_table(m.weights).expect("model weights are a normalized table")
}

/// Outcome table computed the local way: sum over instruction pairs `λ`,
/// with each station's output produced by [`station_response`] from its own
/// half of `λ` only.
pub fn factorized_distribution(m: &InstructionModel) -> JointDistribution {
    let mut probs = [[0.0; 4]; 4];
    for pair in InstructionModel::pairs() {
        let (to1, to2) = pair.split();
        let r1 = station_response(&to1);
        let r2 = station_response(&to2);
        probs[r1.index()][r2.index()] += m.weight(pair);
    }
    JointDistribution::from_table(probs).expect("model weights are a normalized table")
}

/// One run of a sampled experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub out1: EffectLabel,
    pub out2: EffectLabel,
    /// Generator stream the trial was drawn from.
    pub hidden_seed_id: u64,
}

/// Cumulative-sum inversion over the 16 cells of a table.
#[derive(Debug, Clone)]
pub struct CellSampler {
    cumulative: [f64; 16],
    last_positive: usize,
}

impl CellSampler {
    pub fn new(weights: &[[f64; 4]; 4]) -> Self {
        let mut cumulative = [0.0; 16];
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (k, &w) in weights.iter().flatten().enumerate() {
            acc += w;
            cumulative[k] = acc;
            if w > 0.0 {
                last_positive = k;
            }
        }
        CellSampler {
            cumulative,
            last_positive,
        }
    }

    /// Returns `(row, column)`. Cells of zero weight are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u: f64 = rng.gen::<f64>() * self.cumulative[15];
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.last_positive);
        (k / 4, k % 4)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_instruction_stream(
    m: &InstructionModel,
    sampler: &CellSampler,
    range: std::ops::Range<u64>,
    seed: u64,
    stream: u64,
) -> Vec<TrialRecord> {
    let mut rng = stream_rng(seed, stream);
    range
        .map(|trial_index| {
            let (to1, to2) = m.emit(sampler, &mut rng).split();
            TrialRecord {
                trial_index,
                out1: station_response(&to1),
                out2: station_response(&to2),
                hidden_seed_id: stream,
            }
        })
        .collect()
}

/// `n` independent trials of the instruction model; bit-identical for equal
/// `(m, n, seed)`.
pub fn sample_instructions(m: &InstructionModel, n: u64, seed: u64) -> Vec<TrialRecord> {
    let sampler = CellSampler::new(&m.weights);
    run_instruction_stream(m, &sampler, 0..n, seed, 0)
}

/// Splits the run across `workers` threads, one generator stream each.
/// Output is ordered by `trial_index` and depends only on `(m, n, seed, workers)`.
pub fn sample_instructions_parallel(
    m: &InstructionModel,
    n: u64,
    seed: u64,
    workers: usize,
) -> Vec<TrialRecord> {
    let workers = workers.max(1) as u64;
    let sampler = CellSampler::new(&m.weights);
    let chunks: Vec<Vec<TrialRecord>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let range = (w * n / workers)..((w + 1) * n / workers);
                let sampler = &sampler;
                scope.spawn(move || run_instruction_stream(m, sampler, range, seed, w))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling worker panicked"))
            .collect()
    });
    chunks.into_iter().flatten().collect()
}

/// Draws `n` trials straight from a 16-outcome table. With the same seed
/// this consumes the generator exactly as [`sample_instructions`] does on
/// the model built from `d`.
pub fn sample_distribution(d: &JointDistribution, n: u64, seed: u64) -> Vec<TrialRecord> {
    let sampler = CellSampler::new(d.probs());
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|trial_index| {
            let (i, j) = sampler.sample(&mut rng);
            TrialRecord {
                trial_index,
                out1: EffectLabel::from_index(Station::One, i),
                out2: EffectLabel::from_index(Station::Two, j),
                hidden_seed_id: 0,
            }
        })
        .collect()
}

/// Per-cell counts, indexed like [`JointDistribution`].
pub fn count_table(records: &[TrialRecord]) -> [[u64; 4]; 4] {
    let mut counts = [[0u64; 4]; 4];
    for r in records {
        counts[r.out1.index()][r.out2.index()] += 1;
    }
    counts
}

/// Relative frequencies of the recorded outcome pairs.
pub fn empirical_distribution(records: &[TrialRecord]) -> Result<JointDistribution> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    JointDistribution::from_counts(&count_table(records))
}

/// `½ Σ |p_ij − q_ij|`.
pub fn tv_distance(p: &JointDistribution, q: &JointDistribution) -> f64 {
    0.5 * p
        .probs()
        .iter()
        .flatten()
        .zip(q.probs().iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Outcome-pair tables per announced setting pair.
///
/// Tables are indexed by the position of `(tag1, tag2)` in [`TAG_PAIRS`];
/// each holds `p(r1, r2)` at `2·r1.slot() + r2.slot()`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvanceModel {
    tables: [[f64; 4]; 4],
}

fn pair_index(tag1: SettingTag, tag2: SettingTag) -> Result<usize> {
    TAG_PAIRS
        .iter()
        .position(|&(a, b)| a == tag1 && b == tag2)
        .ok_or_else(|| {
            let (tag, expected) = if tag1.station() != Station::One {
                (tag1, Station::One)
            } else {
                (tag2, Station::Two)
            };
            Error::StationMismatch {
                tag,
                expected,
                found: tag.station(),
            }
        })
}

impl AdvanceModel {
    /// Each table must be nonnegative and normalized within 1e-12.
    pub fn from_tables(tables: [[f64; 4]; 4]) -> Result<Self> {
        for table in &tables {
            let mut sum = 0.0;
            for &p in table {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::ProbabilityOutOfRange { value: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ALGEBRA_TOL {
                return Err(Error::NotNormalized { sum });
            }
        }
        Ok(AdvanceModel { tables })
    }

    pub fn tables(&self) -> &[[f64; 4]; 4] {
        &self.tables
    }

    pub fn table(&self, tag1: SettingTag, tag2: SettingTag) -> Result<[f64; 4]> {
        Ok(self.tables[pair_index(tag1, tag2)?])
    }

    pub fn correlator(&self, tag1: SettingTag, tag2: SettingTag) -> Result<Correlator> {
        let t = self.table(tag1, tag2)?;
        Correlator::new(t[0] - t[1] - t[2] + t[3])
    }

    /// `[AB, Ab, aB, ab]`.
    pub fn correlators(&self) -> [Correlator; 4] {
        TAG_PAIRS.map(|(t1, t2)| self.correlator(t1, t2).expect("TAG_PAIRS are well formed"))
    }

    pub fn chsh_value(&self) -> f64 {
        let [e_ab, e_a_sb, e_sa_b, e_sa_sb] = self.correlators().map(Correlator::value);
        chsh_combination(e_ab, e_a_sb, e_sa_b, e_sa_sb)
    }

    /// 16-outcome table when each of the four setting pairs is announced
    /// with probability 1/4.
    pub fn uniform_announcement_distribution(&self) -> JointDistribution {
        per_setting_to_joint(&self.tables)
    }

    /// `n` trials: each trial's setting pair is announced uniformly at random,
    /// then the source draws the outcome pair from that pair's table.
    pub fn sample(&self, n: u64, seed: u64) -> Vec<TrialRecord> {
        sample_per_setting(&self.tables, n, seed)
    }
}

/// Joint law for projective measurements at each announced setting pair.
pub fn advance_model_from(rho: &DensityOperator, q: &SettingsQuartet) -> Result<AdvanceModel> {
    let mut tables = [[0.0; 4]; 4];
    for (k, (t1, t2)) in TAG_PAIRS.iter().enumerate() {
        let t = joint_outcome_table(rho, q.get(*t1), q.get(*t2))?;
        tables[k] = [t[0][0], t[0][1], t[1][0], t[1][1]];
    }
    // Born probabilities sum to 1 only up to rounding; renormalize within that noise.
    for table in &mut tables {
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized { sum });
        }
        for p in table.iter_mut() {
            *p /= sum;
        }
    }
    AdvanceModel::from_tables(tables)
}

/// Spreads per-setting-pair tables into a 16-outcome table with each pair
/// weighted 1/4.
pub fn per_setting_to_joint(tables: &[[f64; 4]; 4]) -> JointDistribution {
    let mut probs = [[0.0; 4]; 4];
    for (k, (t1, t2)) in TAG_PAIRS.iter().enumerate() {
        for r1 in Outcome::BOTH {
            for r2 in Outcome::BOTH {
                let l1 = EffectLabel::new(*t1, r1);
                let l2 = EffectLabel::new(*t2, r2);
                probs[l1.index()][l2.index()] = 0.25 * tables[k][2 * r1.slot() + r2.slot()];
            }
        }
    }
    JointDistribution::from_table(probs).expect("four normalized tables")
}

/// Trials in which a setting pair is picked uniformly (`gen_range(0..4)`)
/// and the outcome pair is drawn by inversion from that pair's table.
pub fn sample_per_setting(tables: &[[f64; 4]; 4], n: u64, seed: u64) -> Vec<TrialRecord> {
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|trial_index| {
            let k = rng.gen_range(0..4usize);
            let (t1, t2) = TAG_PAIRS[k];
            let table = &tables[k];
            let total: f64 = table.iter().sum();
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut cell = (0..4).rev().find(|&c| table[c] > 0.0).unwrap_or(3);
            for (c, &p) in table.iter().enumerate() {
                acc += p;
                if u < acc {
                    cell = c;
                    break;
                }
            }
            let (r1, r2) = (Outcome::BOTH[cell / 2], Outcome::BOTH[cell % 2]);
            TrialRecord {
                trial_index,
                out1: EffectLabel::new(t1, r1),
                out2: EffectLabel::new(t2, r2),
                hidden_seed_id: 0,
            }
        })
        .collect()
}
