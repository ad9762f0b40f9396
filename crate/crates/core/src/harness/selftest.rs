//! Fast invariant checks behind the `self-test` command.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fixed_povm::{
    chsh_from_fixed, conditional_correlator, joint_distribution, quartet_povms,
};
use crate::lhv_models::{
    advance_model_from, instruction_model_from, predicted_distribution, sample_instructions,
    tv_distance,
};
use crate::measurements::{
    chsh_value, correlator, correlator_via_observable, local_deterministic_bound, optimal_quartet,
    random_unit_vector, MeasurementSetting, SettingTag, SettingsQuartet, TAG_PAIRS,
    TSIRELSON_BOUND,
};
use crate::quantum_core::{random_density, singlet};

use super::config::{Scenario, ScenarioConfig};
use super::report::{emit_report, ReportFormat};
use super::run::run_scenario;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_quartet(rng: &mut ChaCha8Rng) -> Result<SettingsQuartet> {
    SettingsQuartet::new(
        MeasurementSetting::new(SettingTag::A, random_unit_vector(rng))?,
        MeasurementSetting::new(SettingTag::SmallA, random_unit_vector(rng))?,
        MeasurementSetting::new(SettingTag::B, random_unit_vector(rng))?,
        MeasurementSetting::new(SettingTag::SmallB, random_unit_vector(rng))?,
    )
}

/// Runs every check; the caller decides how to report failures.
pub fn self_test() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
    let mut checks = Vec::new();

    checks.push(check("local deterministic bound = 2", Ok({
        let b = local_deterministic_bound();
        (b == 2.0, format!("{b}"))
    })));

    checks.push(check("singlet reaches 2*sqrt(2) at the optimal quartet", (|| {
        let v = chsh_value(&singlet(), &optimal_quartet())?;
        Ok(((v.abs() - TSIRELSON_BOUND).abs() <= 1e-9, format!("{v:.15}")))
    })()));

    checks.push(check("singlet correlator = -n1.n2, both routes agree", (|| {
        let rho = singlet();
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let s1 = MeasurementSetting::new(SettingTag::A, random_unit_vector(&mut rng))?;
            let s2 = MeasurementSetting::new(SettingTag::B, random_unit_vector(&mut rng))?;
            let (n1, n2) = (s1.direction(), s2.direction());
            let dot = n1[0] * n2[0] + n1[1] * n2[1] + n1[2] * n2[2];
            let born = correlator(&rho, &s1, &s2)?.value();
            let obs = correlator_via_observable(&rho, &s1, &s2)?.value();
            worst = worst.max((born + dot).abs()).max((born - obs).abs());
        }
        Ok((worst <= 1e-12, format!("max deviation {worst:e}")))
    })()));

    checks.push(check("fixed-POVM conditionals equal projective correlators", (|| {
        let mut worst = 0.0f64;
        let mut worst_chsh = 0.0f64;
        for _ in 0..25 {
            let rho = random_density(&mut rng);
            let q = random_quartet(&mut rng)?;
            let (p1, p2) = quartet_povms(&q, 0.5, 0.5)?;
            let d = joint_distribution(&rho, &p1, &p2)?;
            for (t1, t2) in TAG_PAIRS {
                let c = conditional_correlator(&d, t1, t2)?.value();
                let e = correlator(&rho, q.get(t1), q.get(t2))?.value();
                worst = worst.max((c - e).abs());
            }
            worst_chsh = worst_chsh.max((chsh_from_fixed(&d)? - chsh_value(&rho, &q)?).abs());
        }
        Ok((
            worst <= 1e-12 && worst_chsh <= 1e-10,
            format!("max correlator deviation {worst:e}, max CHSH deviation {worst_chsh:e}"),
        ))
    })()));

    checks.push(check("instruction model reproduces the singlet table", (|| {
        let (p1, p2) = quartet_povms(&optimal_quartet(), 0.5, 0.5)?;
        let d = joint_distribution(&singlet(), &p1, &p2)?;
        let predicted = predicted_distribution(&instruction_model_from(&d)?);
        let tv = tv_distance(&predicted, &d);
        let v = chsh_from_fixed(&predicted)?;
        Ok((tv == 0.0 && (v - TSIRELSON_BOUND).abs() <= 1e-9, format!("tv {tv:e}, chsh {v:.15}")))
    })()));

    checks.push(check("advance model reproduces projective correlators", (|| {
        let rho = singlet();
        let q = optimal_quartet();
        let m = advance_model_from(&rho, &q)?;
        let mut worst = 0.0f64;
        for (t1, t2) in TAG_PAIRS {
            let e = correlator(&rho, q.get(t1), q.get(t2))?.value();
            worst = worst.max((m.correlator(t1, t2)?.value() - e).abs());
        }
        let v = m.chsh_value();
        Ok((worst <= 1e-12 && (v - TSIRELSON_BOUND).abs() <= 1e-9, format!("max deviation {worst:e}, chsh {v:.15}")))
    })()));

    checks.push(check("sampling and reports are deterministic", (|| {
        let (p1, p2) = quartet_povms(&optimal_quartet(), 0.5, 0.5)?;
        let m = instruction_model_from(&joint_distribution(&singlet(), &p1, &p2)?)?;
        let same = sample_instructions(&m, 5_000, 11) == sample_instructions(&m, 5_000, 11);
        let mut cfg = ScenarioConfig::new(Scenario::FixedPovmLhv);
        cfg.trials = 5_000;
        cfg.seed = 11;
        let a = emit_report(&run_scenario(&cfg)?, ReportFormat::Json);
        let b = emit_report(&run_scenario(&cfg)?, ReportFormat::Json);
        Ok((same && a == b, format!("records equal: {same}, reports equal: {}", a == b)))
    })()));

    checks
}
