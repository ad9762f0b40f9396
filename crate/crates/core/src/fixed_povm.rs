//! A single fixed four-outcome POVM per particle.
//!
//! Each POVM is a statistical mixture of the two projective measurements a
//! station could have chosen between. Every outcome carries a label
//! `(setting tag, ±1)`, so one run of the fixed experiment yields both a
//! result and the tag of the measurement it "acted as". Conditioning the
//! 16-outcome table on a pair of tags recovers the projective correlator for
//! those settings, and the CHSH combination can be evaluated with no choice
//! made anywhere.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measurements::{
    chsh_combination, projectors, Correlator, MeasurementSetting, Outcome, SettingTag,
    SettingsQuartet, Station, TAG_PAIRS,
};
use crate::quantum_core::{born_probability, is_psd, kron, ComplexMatrix, DensityOperator, ALGEBRA_TOL, PROB_TOL};

/// Tolerance on individual table entries before clamping into `[0, 1]`.
pub const ENTRY_TOL: f64 = 1e-12;

/// Label of one POVM outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EffectLabel {
    pub tag: SettingTag,
    pub result: Outcome,
}

impl EffectLabel {
    pub fn new(tag: SettingTag, result: Outcome) -> Self {
        EffectLabel { tag, result }
    }

    pub fn station(self) -> Station {
        self.tag.station()
    }

    /// Row/column of this label in a [`JointDistribution`]:
    /// `(A,+1), (A,-1), (a,+1), (a,-1)` for station 1 and likewise for `B`, `b`.
    pub fn index(self) -> usize {
        2 * self.tag.slot() + self.result.slot()
    }

    /// The four labels of a station in table order.
    pub fn all(station: Station) -> [EffectLabel; 4] {
        let [t0, t1] = SettingTag::tags_for(station);
        [
            EffectLabel::new(t0, Outcome::Plus),
            EffectLabel::new(t0, Outcome::Minus),
            EffectLabel::new(t1, Outcome::Plus),
            EffectLabel::new(t1, Outcome::Minus),
        ]
    }

    pub fn from_index(station: Station, index: usize) -> EffectLabel {
        Self::all(station)[index]
    }
}

impl fmt::Display for EffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.tag, self.result)
    }
}

/// A four-outcome POVM on one qubit, effects stored in label order.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    station: Station,
    effects: [ComplexMatrix; 4],
}

impl Povm {
    /// Validates positivity, completeness and that every label of `station`
    /// appears exactly once.
    pub fn new(station: Station, effects: Vec<(EffectLabel, ComplexMatrix)>) -> Result<Self> {
        if effects.len() != 4 {
            return Err(Error::InvalidPovm(format!(
                "expected 4 effects, got {}",
                effects.len()
            )));
        }
        let mut slots: [Option<ComplexMatrix>; 4] = Default::default();
        for (label, effect) in effects {
            if label.station() != station {
                return Err(Error::StationMismatch {
                    tag: label.tag,
                    expected: station,
                    found: label.station(),
                });
            }
            if effect.dim() != 2 {
                return Err(Error::InvalidPovm(format!(
                    "effect {label} is {}x{}, expected 2x2",
                    effect.dim(),
                    effect.dim()
                )));
            }
            let psd = is_psd(&effect, PROB_TOL)
                .map_err(|e| Error::InvalidPovm(format!("effect {label}: {e}")))?;
            if !psd {
                return Err(Error::InvalidPovm(format!("effect {label} is not positive")));
            }
            let slot = &mut slots[label.index()];
            if slot.is_some() {
                return Err(Error::InvalidPovm(format!("duplicate label {label}")));
            }
            *slot = Some(effect);
        }
        let effects = slots.map(|e| e.expect("four distinct labels fill four slots"));
        let mut sum = ComplexMatrix::zeros(2);
        for e in &effects {
            sum = sum.add(e)?;
        }
        let gap = sum.max_abs_diff(&ComplexMatrix::identity(2))?;
        if gap > ALGEBRA_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {gap:e}"
            )));
        }
        Ok(Povm { station, effects })
    }

    pub fn station(&self) -> Station {
        self.station
    }

    pub fn effect(&self, label: EffectLabel) -> &ComplexMatrix {
        &self.effects[label.index()]
    }

    pub fn effects(&self) -> impl Iterator<Item = (EffectLabel, &ComplexMatrix)> {
        EffectLabel::all(self.station).into_iter().zip(self.effects.iter())
    }
}

/// `{ w·P±(primary), (1−w)·P±(alternate) }` with labels taken from the
/// settings' tags.
pub fn mixed_povm(
    primary: &MeasurementSetting,
    alternate: &MeasurementSetting,
    weight: f64,
) -> Result<Povm> {
    if primary.station() != alternate.station() {
        return Err(Error::StationMismatch {
            tag: alternate.tag(),
            expected: primary.station(),
            found: alternate.station(),
        });
    }
    if primary.tag() == alternate.tag() {
        return Err(Error::InvalidPovm(format!(
            "both settings are tagged {}",
            primary.tag()
        )));
    }
    if !(weight > 0.0 && weight < 1.0) {
        return Err(Error::InvalidWeight(weight));
    }
    let mut effects = Vec::with_capacity(4);
    for (setting, w) in [(primary, weight), (alternate, 1.0 - weight)] {
        let (plus, minus) = projectors(setting);
        effects.push((EffectLabel::new(setting.tag(), Outcome::Plus), plus.scale(w)));
        effects.push((EffectLabel::new(setting.tag(), Outcome::Minus), minus.scale(w)));
    }
    Povm::new(primary.station(), effects)
}

/// The pair of fixed POVMs built from a quartet: `A`/`a` mixed with weight
/// `w1` on `A`, `B`/`b` mixed with weight `w2` on `B`.
pub fn quartet_povms(q: &SettingsQuartet, w1: f64, w2: f64) -> Result<(Povm, Povm)> {
    Ok((
        mixed_povm(q.get(SettingTag::A), q.get(SettingTag::SmallA), w1)?,
        mixed_povm(q.get(SettingTag::B), q.get(SettingTag::SmallB), w2)?,
    ))
}

/// Probability table over the 16 joint outcomes, rows indexed by the
/// station-1 label and columns by the station-2 label.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    probs: [[f64; 4]; 4],
}

impl JointDistribution {
    /// Entries must lie in `[-1e-12, 1 + 1e-12]` (then clamped) and sum to 1
    /// within 1e-10.
    pub fn from_table(probs: [[f64; 4]; 4]) -> Result<Self> {
        let mut clean = [[0.0; 4]; 4];
        for (i, row) in probs.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < -ENTRY_TOL || p > 1.0 + ENTRY_TOL {
                    return Err(Error::ProbabilityOutOfRange { value: p });
                }
                clean[i][j] = p.clamp(0.0, 1.0);
            }
        }
        let sum = table_sum(&clean);
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(JointDistribution { probs: clean })
    }

    /// Relative frequencies from a 16-cell count table.
    pub fn from_counts(counts: &[[u64; 4]; 4]) -> Result<Self> {
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            return Err(Error::EmptyRecords);
        }
        let n = total as f64;
        Self::from_table(counts.map(|row| row.map(|c| c as f64 / n)))
    }

    pub fn uniform() -> Self {
        JointDistribution {
            probs: [[1.0 / 16.0; 4]; 4],
        }
    }

    /// All mass on one outcome pair.
    pub fn delta(out1: EffectLabel, out2: EffectLabel) -> Result<Self> {
        check_label_stations(out1, out2)?;
        let mut probs = [[0.0; 4]; 4];
        probs[out1.index()][out2.index()] = 1.0;
        Ok(JointDistribution { probs })
    }

    pub fn probs(&self) -> &[[f64; 4]; 4] {
        &self.probs
    }

    pub fn get(&self, out1: EffectLabel, out2: EffectLabel) -> f64 {
        self.probs[out1.index()][out2.index()]
    }

    /// Total probability that station 1 reports tag `tag1` and station 2 tag `tag2`.
    pub fn block_mass(&self, tag1: SettingTag, tag2: SettingTag) -> f64 {
        let mut mass = 0.0;
        for r1 in Outcome::BOTH {
            for r2 in Outcome::BOTH {
                mass += self.get(EffectLabel::new(tag1, r1), EffectLabel::new(tag2, r2));
            }
        }
        mass
    }

    pub fn station_one_marginal(&self) -> [f64; 4] {
        self.probs.map(|row| row.iter().sum())
    }

    pub fn station_two_marginal(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for row in &self.probs {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }
}

impl Serialize for JointDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.probs.serialize(serializer)
    }
}

fn table_sum(t: &[[f64; 4]; 4]) -> f64 {
    t.iter().flatten().sum()
}

fn check_label_stations(out1: EffectLabel, out2: EffectLabel) -> Result<()> {
    if out1.station() != Station::One {
        return Err(Error::StationMismatch {
            tag: out1.tag,
            expected: Station::One,
            found: out1.station(),
        });
    }
    if out2.station() != Station::Two {
        return Err(Error::StationMismatch {
            tag: out2.tag,
            expected: Station::Two,
            found: out2.station(),
        });
    }
    Ok(())
}

/// `probs[i][j] = tr(ρ · E_i ⊗ F_j)`.
pub fn joint_distribution(rho: &DensityOperator, p1: &Povm, p2: &Povm) -> Result<JointDistribution> {
    if p1.station() != Station::One || p2.station() != Station::Two {
        return Err(Error::InvalidPovm(format!(
            "expected POVMs for stations (1, 2), got ({}, {})",
            p1.station(),
            p2.station()
        )));
    }
    let mut probs = [[0.0; 4]; 4];
    for (l1, e) in p1.effects() {
        for (l2, f) in p2.effects() {
            probs[l1.index()][l2.index()] = born_probability(rho, &kron(e, f))?;
        }
    }
    JointDistribution::from_table(probs)
}

/// Correlator of the sub-ensemble whose labels carry tags `(tag1, tag2)`.
///
/// Fails with [`Error::UndefinedConditional`] when that block has no mass.
pub fn conditional_correlator(
    d: &JointDistribution,
    tag1: SettingTag,
    tag2: SettingTag,
) -> Result<Correlator> {
    check_label_stations(EffectLabel::new(tag1, Outcome::Plus), EffectLabel::new(tag2, Outcome::Plus))?;
    let mut mass = 0.0;
    let mut signed = 0.0;
    for r1 in Outcome::BOTH {
        for r2 in Outcome::BOTH {
            let p = d.get(EffectLabel::new(tag1, r1), EffectLabel::new(tag2, r2));
            mass += p;
            signed += f64::from(r1.value() * r2.value()) * p;
        }
    }
    if !(mass > 0.0) {
        return Err(Error::UndefinedConditional { tag1, tag2 });
    }
    Correlator::new(signed / mass)
}

/// `[AB, Ab, aB, ab]` from label-conditioned sub-ensembles.
pub fn conditional_correlators(d: &JointDistribution) -> Result<[Correlator; 4]> {
    let mut out = Vec::with_capacity(4);
    for (t1, t2) in TAG_PAIRS {
        out.push(conditional_correlator(d, t1, t2)?);
    }
    Ok([out[0], out[1], out[2], out[3]])
}

/// `AB − Ab − aB − ab` evaluated on the fixed-POVM table.
pub fn chsh_from_fixed(d: &JointDistribution) -> Result<f64> {
    let [e_ab, e_a_sb, e_sa_b, e_sa_sb] = conditional_correlators(d)?.map(Correlator::value);
    Ok(chsh_combination(e_ab, e_a_sb, e_sa_b, e_sa_sb))
}
