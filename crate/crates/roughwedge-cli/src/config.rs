//! Experiment configuration: the JSON schema consumed by `--config`.

use roughwedge::field::FieldSpec;
use roughwedge::integrate::{DomainSpec, Polygon, Scheme};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    IntegrateSimplex,
    IntegratePolygon,
    IntegrateDomain,
    ConvergenceTable,
    StokesCheck,
    ChainRuleCheck,
    DegreeCheck,
    VanishingCheck,
    BoundsAudit,
}

/// The three fields of the form `f dg¹∧dg²`. For composed commands the
/// `g` slots carry the legs (`h` pair) and `f` may be omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldsSpec {
    #[serde(default)]
    pub f: Option<FieldSpec>,
    pub g1: FieldSpec,
    pub g2: FieldSpec,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    /// Triangle vertices `[[x,y],[x,y],[x,y]]`.
    #[serde(default)]
    pub simplex: Option<[[f64; 2]; 3]>,
    #[serde(default)]
    pub polygon: Option<Polygon>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    /// Fan apex for polygon integration (defaults to the vertex centroid).
    #[serde(default)]
    pub apex: Option<[f64; 2]>,
    /// Grid exhaustion range for domains.
    #[serde(default)]
    pub k_min: Option<u32>,
    #[serde(default)]
    pub k_max: Option<u32>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRange {
    #[serde(default)]
    pub min: u32,
    pub max: u32,
}

impl Default for LevelRange {
    fn default() -> Self {
        Self { min: 0, max: 8 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Target for certified error bounds and pass/fail gaps.
    #[serde(default = "default_target")]
    pub target: f64,
    /// Largest acceptable excluded mass in degree checks.
    #[serde(default = "default_excluded")]
    pub excluded_mass: f64,
    /// Sample count for bounds audits.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_target() -> f64 {
    1e-6
}
fn default_excluded() -> f64 {
    1e-6
}
fn default_samples() -> usize {
    10_000
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            target: default_target(),
            excluded_mass: default_excluded(),
            samples: default_samples(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub fields: Option<FieldsSpec>,
    /// Name of a built-in composed integrand (`one`, `y1`, `y2`, `y1y2`,
    /// `gauss_y`).
    #[serde(default)]
    pub integrand: Option<String>,
    /// Name of a built-in smooth map for the chain rule (`identity`,
    /// `square_first`, `rotation_30deg`).
    #[serde(default)]
    pub map: Option<String>,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub levels: LevelRange,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Output path; `--out` overrides, stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_scheme() -> Scheme {
    Scheme::Strat
}
