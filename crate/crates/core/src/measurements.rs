//! Projective ±1 spin measurements, correlators and the CHSH combination.
//!
//! The combination used throughout is `AB − Ab − aB − ab`, with `A`, `a`
//! measured on particle 1 and `B`, `b` on particle 2. Note the sign pattern:
//! one positive term and three negative ones. Any local theory in which the
//! settings are chosen per trial keeps its absolute value at or below
//! [`LOCAL_BOUND`].

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum_core::{
    born_probability, kron, pauli, trace_of_product, ComplexMatrix, DensityOperator, ALGEBRA_TOL,
    PROB_TOL,
};

/// Bound on `|AB − Ab − aB − ab|` for local theories with per-trial choices.
pub const LOCAL_BOUND: f64 = 2.0;

/// `2√2`, the largest value the singlet reaches.
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Station {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Station::One => f.write_str("1"),
            Station::Two => f.write_str("2"),
        }
    }
}

/// One of the four measurement symbols `A`, `a` (particle 1) and `B`, `b`
/// (particle 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SettingTag {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "a")]
    SmallA,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "b")]
    SmallB,
}

impl SettingTag {
    pub const STATION_ONE: [SettingTag; 2] = [SettingTag::A, SettingTag::SmallA];
    pub const STATION_TWO: [SettingTag; 2] = [SettingTag::B, SettingTag::SmallB];

    pub fn station(self) -> Station {
        match self {
            SettingTag::A | SettingTag::SmallA => Station::One,
            SettingTag::B | SettingTag::SmallB => Station::Two,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            SettingTag::A => "A",
            SettingTag::SmallA => "a",
            SettingTag::B => "B",
            SettingTag::SmallB => "b",
        }
    }

    /// Position of the tag within its station: 0 for `A`/`B`, 1 for `a`/`b`.
    pub fn slot(self) -> usize {
        match self {
            SettingTag::A | SettingTag::B => 0,
            SettingTag::SmallA | SettingTag::SmallB => 1,
        }
    }

    pub fn tags_for(station: Station) -> [SettingTag; 2] {
        match station {
            Station::One => Self::STATION_ONE,
            Station::Two => Self::STATION_TWO,
        }
    }
}

impl fmt::Display for SettingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A ±1 measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// 0 for `+1`, 1 for `-1`.
    pub fn slot(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Plus => f.write_str("+1"),
            Outcome::Minus => f.write_str("-1"),
        }
    }
}

/// A projective spin measurement along a unit Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementSetting {
    tag: SettingTag,
    direction: [f64; 3],
}

impl MeasurementSetting {
    /// Requires `direction` to have unit norm within 1e-12.
    pub fn new(tag: SettingTag, direction: [f64; 3]) -> Result<Self> {
        if direction.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSetting(format!(
                "{tag}: non-finite direction {direction:?}"
            )));
        }
        let norm = norm3(direction);
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::InvalidSetting(format!(
                "{tag}: direction {direction:?} has norm {norm}, expected 1"
            )));
        }
        Ok(MeasurementSetting { tag, direction })
    }

    /// Normalizes `v`; the zero vector is rejected.
    pub fn from_vector(tag: SettingTag, v: [f64; 3]) -> Result<Self> {
        let norm = norm3(v);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidSetting(format!(
                "{tag}: cannot normalize {v:?}"
            )));
        }
        Self::new(tag, v.map(|x| x / norm))
    }

    /// Direction at `degrees` from the z axis towards x, in the x–z plane.
    pub fn in_plane(tag: SettingTag, degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::InvalidSetting(format!("{tag}: non-finite angle")));
        }
        let theta = degrees.to_radians();
        Self::new(tag, [theta.sin(), 0.0, theta.cos()])
    }

    pub fn tag(&self) -> SettingTag {
        self.tag
    }

    pub fn station(&self) -> Station {
        self.tag.station()
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    /// The same direction under a different label.
    pub fn relabel(&self, tag: SettingTag) -> MeasurementSetting {
        MeasurementSetting {
            tag,
            direction: self.direction,
        }
    }

    /// Rotates the direction by `degrees` about the y axis (within the x–z plane).
    pub fn rotated_in_plane(&self, degrees: f64) -> MeasurementSetting {
        let (s, c) = degrees.to_radians().sin_cos();
        let [x, y, z] = self.direction;
        MeasurementSetting {
            tag: self.tag,
            direction: [c * x + s * z, y, c * z - s * x],
        }
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Uniform random point on the unit sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        ];
        let n = norm3(v);
        if n > 1e-3 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// The four settings `A, a, B, b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettingsQuartet {
    settings: [MeasurementSetting; 4],
}

impl SettingsQuartet {
    /// Checks that each argument carries the tag of its position.
    pub fn new(
        upper_a: MeasurementSetting,
        lower_a: MeasurementSetting,
        upper_b: MeasurementSetting,
        lower_b: MeasurementSetting,
    ) -> Result<Self> {
        let settings = [upper_a, lower_a, upper_b, lower_b];
        let expected = [SettingTag::A, SettingTag::SmallA, SettingTag::B, SettingTag::SmallB];
        for (s, want) in settings.iter().zip(expected) {
            if s.tag() != want {
                return Err(Error::InvalidSetting(format!(
                    "quartet slot {want} holds setting tagged {}",
                    s.tag()
                )));
            }
        }
        Ok(SettingsQuartet { settings })
    }

    /// Coplanar quartet from in-plane angles in degrees, ordered `A, a, B, b`.
    pub fn from_angles(degrees: [f64; 4]) -> Result<Self> {
        Self::new(
            MeasurementSetting::in_plane(SettingTag::A, degrees[0])?,
            MeasurementSetting::in_plane(SettingTag::SmallA, degrees[1])?,
            MeasurementSetting::in_plane(SettingTag::B, degrees[2])?,
            MeasurementSetting::in_plane(SettingTag::SmallB, degrees[3])?,
        )
    }

    pub fn get(&self, tag: SettingTag) -> &MeasurementSetting {
        let idx = match tag {
            SettingTag::A => 0,
            SettingTag::SmallA => 1,
            SettingTag::B => 2,
            SettingTag::SmallB => 3,
        };
        &self.settings[idx]
    }

    pub fn settings(&self) -> &[MeasurementSetting; 4] {
        &self.settings
    }

    pub fn rotated_in_plane(&self, degrees: f64) -> SettingsQuartet {
        SettingsQuartet {
            settings: self.settings.map(|s| s.rotated_in_plane(degrees)),
        }
    }
}

/// Expectation value of the product of two ±1 results.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Correlator(f64);

impl Correlator {
    /// Accepts `|value| ≤ 1 + 1e-10` and clamps into `[-1, 1]`.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value.abs() > 1.0 + PROB_TOL {
            return Err(Error::ProbabilityOutOfRange { value });
        }
        Ok(Correlator(value.clamp(-1.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `n·σ` for a Bloch vector `n`.
pub fn spin_observable(direction: [f64; 3]) -> ComplexMatrix {
    let [sx, sy, sz] = pauli();
    let mut out = ComplexMatrix::zeros(2);
    for (sigma, &n) in [sx, sy, sz].iter().zip(direction.iter()) {
        out = out.add(&sigma.scale(n)).expect("2x2");
    }
    out
}

/// `(P+, P−) = ((I ± n·σ) / 2)`.
pub fn projectors(setting: &MeasurementSetting) -> (ComplexMatrix, ComplexMatrix) {
    let n_sigma = spin_observable(setting.direction());
    let id = ComplexMatrix::identity(2);
    let plus = id.add(&n_sigma).expect("2x2").scale(0.5);
    let minus = id.sub(&n_sigma).expect("2x2").scale(0.5);
    (plus, minus)
}

/// Projector onto the given result.
pub fn projector(setting: &MeasurementSetting, outcome: Outcome) -> ComplexMatrix {
    let (plus, minus) = projectors(setting);
    match outcome {
        Outcome::Plus => plus,
        Outcome::Minus => minus,
    }
}

fn check_stations(s1: &MeasurementSetting, s2: &MeasurementSetting) -> Result<()> {
    if s1.station() != Station::One {
        return Err(Error::StationMismatch {
            tag: s1.tag(),
            expected: Station::One,
            found: s1.station(),
        });
    }
    if s2.station() != Station::Two {
        return Err(Error::StationMismatch {
            tag: s2.tag(),
            expected: Station::Two,
            found: s2.station(),
        });
    }
    Ok(())
}

/// Quantum joint law `p(r1, r2)` for projective measurements `s1` ⊗ `s2`,
/// indexed `[r1.slot()][r2.slot()]`.
pub fn joint_outcome_table(
    rho: &DensityOperator,
    s1: &MeasurementSetting,
    s2: &MeasurementSetting,
) -> Result<[[f64; 2]; 2]> {
    check_stations(s1, s2)?;
    let mut table = [[0.0; 2]; 2];
    for r1 in Outcome::BOTH {
        for r2 in Outcome::BOTH {
            let effect = kron(&projector(s1, r1), &projector(s2, r2));
            table[r1.slot()][r2.slot()] = born_probability(rho, &effect)?;
        }
    }
    Ok(table)
}

/// `Σ r1·r2·p(r1, r2)` summed from Born-rule probabilities.
pub fn correlator(
    rho: &DensityOperator,
    s1: &MeasurementSetting,
    s2: &MeasurementSetting,
) -> Result<Correlator> {
    let table = joint_outcome_table(rho, s1, s2)?;
    let mut value = 0.0;
    for r1 in Outcome::BOTH {
        for r2 in Outcome::BOTH {
            value += f64::from(r1.value() * r2.value()) * table[r1.slot()][r2.slot()];
        }
    }
    Correlator::new(value)
}

/// Same quantity as [`correlator`], computed as `tr(ρ · (n1·σ ⊗ n2·σ))`.
pub fn correlator_via_observable(
    rho: &DensityOperator,
    s1: &MeasurementSetting,
    s2: &MeasurementSetting,
) -> Result<Correlator> {
    check_stations(s1, s2)?;
    let obs = kron(&spin_observable(s1.direction()), &spin_observable(s2.direction()));
    let value: Complex64 = trace_of_product(rho.matrix(), &obs);
    if value.im.abs() > PROB_TOL {
        return Err(Error::ComplexProbability { imag: value.im });
    }
    Correlator::new(value.re)
}

/// `AB − Ab − aB − ab`.
pub fn chsh_combination(big_big: f64, big_small: f64, small_big: f64, small_small: f64) -> f64 {
    big_big - big_small - small_big - small_small
}

/// The four correlators `[AB, Ab, aB, ab]`.
pub fn quartet_correlators(rho: &DensityOperator, q: &SettingsQuartet) -> Result<[Correlator; 4]> {
    let mut out = [Correlator(0.0); 4];
    for (k, (t1, t2)) in TAG_PAIRS.iter().enumerate() {
        out[k] = correlator(rho, q.get(*t1), q.get(*t2))?;
    }
    Ok(out)
}

/// Tag pairs in the order they enter the CHSH combination.
pub const TAG_PAIRS: [(SettingTag, SettingTag); 4] = [
    (SettingTag::A, SettingTag::B),
    (SettingTag::A, SettingTag::SmallB),
    (SettingTag::SmallA, SettingTag::B),
    (SettingTag::SmallA, SettingTag::SmallB),
];

/// Signed `AB − Ab − aB − ab`; compare its absolute value with [`LOCAL_BOUND`].
pub fn chsh_value(rho: &DensityOperator, q: &SettingsQuartet) -> Result<f64> {
    let [e_ab, e_a_sb, e_sa_b, e_sa_sb] = quartet_correlators(rho, q)?.map(Correlator::value);
    Ok(chsh_combination(e_ab, e_a_sb, e_sa_b, e_sa_sb))
}

/// In-plane angles (degrees) of [`optimal_quartet`], ordered `A, a, B, b`.
pub const OPTIMAL_ANGLES: [f64; 4] = [0.0, 90.0, 135.0, 45.0];

/// Coplanar settings for which the singlet reaches `AB − Ab − aB − ab = 2√2`.
pub fn optimal_quartet() -> SettingsQuartet {
    SettingsQuartet::from_angles(OPTIMAL_ANGLES).expect("fixed angles are valid")
}

/// `vA·vB − vA·vb − va·vB − va·vb` for a deterministic assignment.
pub fn deterministic_chsh([va_upper, va_lower, vb_upper, vb_lower]: [i32; 4]) -> i32 {
    va_upper * vb_upper - va_upper * vb_lower - va_lower * vb_upper - va_lower * vb_lower
}

/// All 16 assignments `(vA, va, vB, vb) ∈ {±1}^4` with their CHSH values.
pub fn deterministic_strategies() -> impl Iterator<Item = ([i32; 4], i32)> {
    (0u32..16).map(|bits| {
        let v = [0, 1, 2, 3].map(|k| if bits >> k & 1 == 0 { 1 } else { -1 });
        (v, deterministic_chsh(v))
    })
}

/// Largest `|AB − Ab − aB − ab|` over deterministic local strategies.
pub fn local_deterministic_bound() -> f64 {
    let best = deterministic_strategies()
        .map(|(_, v)| v.abs())
        .max()
        .expect("16 strategies");
    f64::from(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_core::{dagger, is_psd, maximally_mixed, product_00, random_density, singlet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z(tag: SettingTag) -> MeasurementSetting {
        MeasurementSetting::new(tag, [0.0, 0.0, 1.0]).unwrap()
    }

    fn x(tag: SettingTag) -> MeasurementSetting {
        MeasurementSetting::new(tag, [1.0, 0.0, 0.0]).unwrap()
    }

    fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    /// Independent brute force: expand `Σ r1 r2 ⟨ψ|P⊗Q|ψ⟩` entry by entry on
    /// the singlet amplitudes, with projectors built from explicit
    /// eigenvectors rather than `(I ± n·σ)/2`.
    fn singlet_correlator_brute(n1: [f64; 3], n2: [f64; 3]) -> f64 {
        fn eigvec(n: [f64; 3], sign: f64) -> [Complex64; 2] {
            // spin-up along (θ, φ): (cos θ/2, e^{iφ} sin θ/2); spin-down is orthogonal
            let theta = n[2].clamp(-1.0, 1.0).acos();
            let phi = n[1].atan2(n[0]);
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let e = Complex64::from_polar(1.0, phi);
            if sign > 0.0 {
                [Complex64::new(c, 0.0), e * s]
            } else {
                [Complex64::new(-s, 0.0), e * c]
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [0.0, h, -h, 0.0];
        let mut total = 0.0;
        for r1 in [1.0, -1.0] {
            for r2 in [1.0, -1.0] {
                let u = eigvec(n1, r1);
                let v = eigvec(n2, r2);
                // amplitude ⟨u⊗v|ψ⟩
                let mut amp = Complex64::new(0.0, 0.0);
                for i in 0..2 {
                    for j in 0..2 {
                        amp += (u[i] * v[j]).conj() * psi[2 * i + j];
                    }
                }
                total += r1 * r2 * amp.norm_sqr();
            }
        }
        total
    }

    #[test]
    fn projectors_along_z_and_x() {
        let (p, m) = projectors(&z(SettingTag::A));
        assert_eq!(p, ComplexMatrix::diag(&[1.0, 0.0]));
        assert_eq!(m, ComplexMatrix::diag(&[0.0, 1.0]));
        let (p, _) = projectors(&x(SettingTag::A));
        let want = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        assert!(p.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn projector_invariants_random_settings() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let id = ComplexMatrix::identity(2);
        for _ in 0..100 {
            let s = MeasurementSetting::new(SettingTag::B, random_unit_vector(&mut rng)).unwrap();
            let (p, m) = projectors(&s);
            assert!(p.add(&m).unwrap().max_abs_diff(&id).unwrap() <= 1e-14);
            for q in [&p, &m] {
                assert!(is_psd(q, 1e-12).unwrap());
                assert!(q.matmul(q).unwrap().max_abs_diff(q).unwrap() <= 1e-12);
                assert!(dagger(q).max_abs_diff(q).unwrap() <= 1e-15);
            }
        }
    }

    #[test]
    fn setting_validation() {
        assert!(MeasurementSetting::new(SettingTag::A, [0.0, 0.0, 0.0]).is_err());
        assert!(MeasurementSetting::new(SettingTag::A, [0.0, 0.0, 1.1]).is_err());
        assert!(MeasurementSetting::new(SettingTag::A, [f64::NAN, 0.0, 1.0]).is_err());
        assert!(MeasurementSetting::from_vector(SettingTag::A, [0.0; 3]).is_err());
        let s = MeasurementSetting::from_vector(SettingTag::A, [0.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.direction(), [0.0, 0.6, 0.8]);
        assert!(MeasurementSetting::in_plane(SettingTag::A, f64::INFINITY).is_err());
    }

    #[test]
    fn quartet_rejects_misplaced_tags() {
        let err = SettingsQuartet::new(
            z(SettingTag::A),
            z(SettingTag::B),
            z(SettingTag::B),
            z(SettingTag::SmallB),
        );
        assert!(matches!(err, Err(Error::InvalidSetting(_))));
    }

    #[test]
    fn singlet_correlator_examples() {
        let rho = singlet();
        let e = correlator(&rho, &z(SettingTag::A), &z(SettingTag::B)).unwrap();
        assert!((e.value() + 1.0).abs() < 1e-15);
        assert!((singlet_correlator_brute([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]) + 1.0).abs() < 1e-15);
        let e = correlator(&rho, &z(SettingTag::A), &x(SettingTag::B)).unwrap();
        assert!(e.value().abs() < 1e-15);
        for theta in [0.0f64, 30.0, 45.0, 60.0, 90.0] {
            let s1 = MeasurementSetting::in_plane(SettingTag::A, 10.0).unwrap();
            let s2 = MeasurementSetting::in_plane(SettingTag::B, 10.0 + theta).unwrap();
            let e = correlator(&rho, &s1, &s2).unwrap().value();
            let brute = singlet_correlator_brute(s1.direction(), s2.direction());
            assert!((e - brute).abs() < 1e-12, "θ={theta}");
            assert!((e + theta.to_radians().cos()).abs() < 1e-12, "θ={theta}");
        }
    }

    #[test]
    fn singlet_correlator_matches_minus_dot_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let rho = singlet();
        for _ in 0..1000 {
            let n1 = random_unit_vector(&mut rng);
            let n2 = random_unit_vector(&mut rng);
            let s1 = MeasurementSetting::new(SettingTag::SmallA, n1).unwrap();
            let s2 = MeasurementSetting::new(SettingTag::SmallB, n2).unwrap();
            let e = correlator(&rho, &s1, &s2).unwrap().value();
            assert!((e + dot(n1, n2)).abs() <= 1e-12);
            assert!((e - singlet_correlator_brute(n1, n2)).abs() <= 1e-12);
        }
    }

    #[test]
    fn correlator_routes_agree_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..300 {
            let rho = random_density(&mut rng);
            let s1 = MeasurementSetting::new(SettingTag::A, random_unit_vector(&mut rng)).unwrap();
            let s2 = MeasurementSetting::new(SettingTag::B, random_unit_vector(&mut rng)).unwrap();
            let born = correlator(&rho, &s1, &s2).unwrap().value();
            let obs = correlator_via_observable(&rho, &s1, &s2).unwrap().value();
            assert!((born - obs).abs() <= 1e-12);
        }
    }

    #[test]
    fn correlator_rejects_station_mismatch() {
        let rho = singlet();
        let err = correlator(&rho, &z(SettingTag::B), &z(SettingTag::A)).unwrap_err();
        assert!(matches!(err, Error::StationMismatch { expected: Station::One, .. }));
        let err = correlator(&rho, &z(SettingTag::A), &z(SettingTag::SmallA)).unwrap_err();
        assert!(matches!(err, Error::StationMismatch { expected: Station::Two, .. }));
    }

    #[test]
    fn chsh_examples() {
        let all_z = SettingsQuartet::from_angles([0.0; 4]).unwrap();
        assert!((chsh_value(&singlet(), &all_z).unwrap() - 2.0).abs() < 1e-15);
        assert!((chsh_value(&product_00(), &all_z).unwrap() + 2.0).abs() < 1e-15);
        assert!(chsh_value(&maximally_mixed(), &optimal_quartet()).unwrap().abs() < 1e-15);
        let v = chsh_value(&singlet(), &optimal_quartet()).unwrap();
        assert!((v.abs() - TSIRELSON_BOUND).abs() <= 1e-9, "{v}");
    }

    /// Grid search at 1° over coplanar quartets. For fixed `(A, a)` the
    /// maximum over `(B, b)` of `|f(B) − g(b)|` with `f = AB − aB` and
    /// `g = Ab + ab` is `max(max f − min g, max g − min f)`, so the full
    /// 360⁴ grid is covered exactly. Correlators come from the eigenvector
    /// brute force, not from the library.
    fn grid_search_max() -> (f64, [usize; 4]) {
        let dir = |deg: usize| {
            let t = (deg as f64).to_radians();
            [t.sin(), 0.0, t.cos()]
        };
        let e: Vec<Vec<f64>> = (0..360)
            .map(|i| (0..360).map(|j| singlet_correlator_brute(dir(i), dir(j))).collect())
            .collect();
        let mut best = (0.0, [0; 4]);
        for a_up in 0..360 {
            for a_lo in 0..360 {
                let (mut fmax, mut fmin, mut gmax, mut gmin) = ((f64::MIN, 0), (f64::MAX, 0), (f64::MIN, 0), (f64::MAX, 0));
                for k in 0..360 {
                    let f = e[a_up][k] - e[a_lo][k];
                    let g = e[a_up][k] + e[a_lo][k];
                    if f > fmax.0 { fmax = (f, k); }
                    if f < fmin.0 { fmin = (f, k); }
                    if g > gmax.0 { gmax = (g, k); }
                    if g < gmin.0 { gmin = (g, k); }
                }
                if fmax.0 - gmin.0 > best.0 {
                    best = (fmax.0 - gmin.0, [a_up, a_lo, fmax.1, gmin.1]);
                }
                if gmax.0 - fmin.0 > best.0 {
                    best = (gmax.0 - fmin.0, [a_up, a_lo, fmin.1, gmax.1]);
                }
            }
        }
        best
    }

    #[test]
    fn grid_search_confirms_optimal_quartet() {
        let (best, angles) = grid_search_max();
        assert!((best - TSIRELSON_BOUND).abs() <= 5e-3, "{best} at {angles:?}");
        let at_candidate = {
            let dir = |deg: f64| {
                let t = deg.to_radians();
                [t.sin(), 0.0, t.cos()]
            };
            let [au, al, bu, bl] = OPTIMAL_ANGLES.map(dir);
            singlet_correlator_brute(au, bu)
                - singlet_correlator_brute(au, bl)
                - singlet_correlator_brute(al, bu)
                - singlet_correlator_brute(al, bl)
        };
        assert!((at_candidate.abs() - best).abs() <= 1e-12);
        let lib = chsh_value(&singlet(), &optimal_quartet()).unwrap();
        assert!((lib - at_candidate).abs() <= 1e-12);
    }

    #[test]
    fn chsh_invariant_under_common_rotation() {
        let rho = singlet();
        let base = chsh_value(&rho, &optimal_quartet()).unwrap();
        for deg in [7.0, 33.0, 90.0, 181.5, 300.0] {
            let v = chsh_value(&rho, &optimal_quartet().rotated_in_plane(deg)).unwrap();
            assert!((v - base).abs() <= 1e-10);
        }
    }

    #[test]
    fn singlet_never_exceeds_tsirelson_on_random_quartets() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let rho = singlet();
        for _ in 0..1000 {
            let mk = |tag, rng: &mut ChaCha8Rng| {
                MeasurementSetting::new(tag, random_unit_vector(rng)).unwrap()
            };
            let q = SettingsQuartet::new(
                mk(SettingTag::A, &mut rng),
                mk(SettingTag::SmallA, &mut rng),
                mk(SettingTag::B, &mut rng),
                mk(SettingTag::SmallB, &mut rng),
            )
            .unwrap();
            assert!(chsh_value(&rho, &q).unwrap().abs() <= TSIRELSON_BOUND + 1e-9);
        }
    }

    #[test]
    fn local_bound_is_two() {
        assert_eq!(local_deterministic_bound(), 2.0);
        assert_eq!(deterministic_chsh([1, 1, 1, 1]), -2);
    }

    #[test]
    fn extremal_strategy_count_matches_reenumeration() {
        let from_lib = deterministic_strategies().filter(|(_, v)| v.abs() == 2).count();
        let mut independent = 0;
        for va in [1, -1] {
            for va2 in [1, -1] {
                for vb in [1, -1] {
                    for vb2 in [1, -1] {
                        let s: i32 = va * vb - va * vb2 - va2 * vb - va2 * vb2;
                        assert!(s.abs() <= 2);
                        if s.abs() == 2 {
                            independent += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(from_lib, independent);
        // vA(vB − vb) − va(vB + vb): exactly one bracket is ±2, so every strategy is extremal
        assert_eq!(independent, 16);
        assert_eq!(deterministic_strategies().count(), 16);
    }

    #[test]
    fn correlator_bounds() {
        assert!(Correlator::new(1.0 + 1e-11).is_ok());
        assert_eq!(Correlator::new(1.0 + 1e-11).unwrap().value(), 1.0);
        assert!(Correlator::new(1.01).is_err());
        assert!(Correlator::new(f64::NAN).is_err());
    }
}
