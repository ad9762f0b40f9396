//! Run reports and their serializations.
//!
//! JSON floats are written in scientific notation with 17 significant
//! digits, so every `f64` round-trips exactly and two runs with the same
//! configuration produce identical bytes. The CSV summary is a single
//! header line plus one row.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::fixed_povm::{EffectLabel, JointDistribution};
use crate::measurements::Station;

use super::config::{Scenario, ScenarioConfig};

/// Fixed CSV header of the summary format.
pub const CSV_HEADER: [&str; 7] = [
    "scenario",
    "chsh_value",
    "violates_eq1",
    "tv_distance",
    "chi_square",
    "trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    CsvSummary,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv-summary" => Ok(ReportFormat::CsvSummary),
            other => Err(format!("unknown format `{other}` (expected json or csv-summary)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub config: ScenarioConfig,
    /// Resolved in-plane angles in degrees, ordered `A, a, B, b`.
    pub resolved_angles_deg: [f64; 4],
}

/// `AB, Ab, aB, ab`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorSet {
    #[serde(rename = "AB")]
    pub ab: f64,
    #[serde(rename = "Ab")]
    pub a_sb: f64,
    #[serde(rename = "aB")]
    pub sa_b: f64,
    #[serde(rename = "ab")]
    pub sa_sb: f64,
}

impl CorrelatorSet {
    pub fn from_array([ab, a_sb, sa_b, sa_sb]: [f64; 4]) -> Self {
        CorrelatorSet { ab, a_sb, sa_b, sa_sb }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.ab, self.a_sb, self.sa_b, self.sa_sb]
    }
}

/// Row and column labels of a 16-outcome table.
#[derive(Debug, Clone, Serialize)]
pub struct TableLabels {
    pub station_1: [String; 4],
    pub station_2: [String; 4],
}

impl TableLabels {
    pub fn standard() -> Self {
        TableLabels {
            station_1: EffectLabel::all(Station::One).map(|l| l.to_string()),
            station_2: EffectLabel::all(Station::Two).map(|l| l.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticResults {
    pub table_labels: TableLabels,
    /// Exact 16-outcome table (per-setting tables weighted 1/4 each for the
    /// projective and advance scenarios).
    pub table: JointDistribution,
    pub correlators: CorrelatorSet,
    pub chsh_value: f64,
    pub local_bound: f64,
    pub violates_eq1: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LhvResults {
    pub model: String,
    /// TV distance between the model's predicted table and the quantum one.
    pub tv_distance_to_quantum: f64,
    pub max_correlator_deviation: f64,
    pub chsh_value: f64,
    pub reproduces_quantum: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloResults {
    pub trials: u64,
    pub seed: u64,
    pub generator: String,
    pub empirical_table: JointDistribution,
    pub tv_distance: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: u32,
    pub empirical_correlators: CorrelatorSet,
    pub empirical_chsh_value: f64,
    pub chsh_standard_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub tests_locality: bool,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub analytic: AnalyticResults,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhv: Option<LhvResults>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloResults>,
    pub verdict: Verdict,
}

impl RunReport {
    pub fn scenario(&self) -> Scenario {
        self.config.config.scenario
    }

    /// TV distance shown in the CSV summary: the sampled one when the run
    /// sampled, otherwise the model-vs-quantum one for local-model scenarios.
    pub fn headline_tv(&self) -> Option<f64> {
        self.monte_carlo
            .as_ref()
            .map(|mc| mc.tv_distance)
            .or(self.lhv.as_ref().map(|l| l.tv_distance_to_quantum))
    }
}

/// Pretty JSON with every float printed as `{:.16e}`.
struct ExactFloatFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for ExactFloatFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_float(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// 17 significant digits in scientific notation, e.g. `2.8284271247461903e0`.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn emit_report(report: &RunReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = Vec::new();
            let formatter = ExactFloatFormatter {
                inner: PrettyFormatter::with_indent(b"  "),
            };
            let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
            report
                .serialize(&mut ser)
                .expect("report serializes to an in-memory buffer");
            out.push(b'\n');
            out
        }
        ReportFormat::CsvSummary => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
            let cfg = &report.config.config;
            w.write_record([
                report.scenario().name().to_string(),
                format_float(report.analytic.chsh_value),
                report.analytic.violates_eq1.to_string(),
                opt(report.headline_tv()),
                opt(report.monte_carlo.as_ref().map(|m| m.chi_square)),
                cfg.trials.to_string(),
                cfg.seed.to_string(),
            ])
            .expect("in-memory write");
            w.into_inner().expect("in-memory flush")
        }
    }
}
