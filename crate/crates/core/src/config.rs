//! JSON experiment configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bayes::{vmf_density, LikelihoodSpec, Measurement};
use crate::check::CheckConfig;
use crate::error::{Error, Result};
use crate::fpe::{DensityGrid, SolverConfig};
use crate::generator::{Convention, SdeSpec};
use crate::geometry::{Chart, ChartPoint, DriftPreset, FieldSpec, GridShape};
use crate::sde::InitialCondition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Check,
    Fpe,
    Mc,
    Compare,
    Filter,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Check => "check",
            ExperimentKind::Fpe => "fpe",
            ExperimentKind::Mc => "mc",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Filter => "filter",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartName {
    #[default]
    Sphere,
    Torus,
}

impl ChartName {
    pub fn chart(self) -> Chart {
        match self {
            ChartName::Sphere => Chart::sphere(),
            ChartName::Torus => Chart::torus(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_theta: 64,
            n_phi: 128,
        }
    }
}

/// Drift components in the orthonormal frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    #[default]
    Zero,
    Constant {
        theta: f64,
        phi: f64,
    },
    /// Drift that makes frame noise Brownian motion: `cot(theta)/2` in the
    /// Stratonovich convention, zero in the Ito one.
    Brownian,
    /// Rigid rotation about the z axis, `X^phi = omega sin(theta)`.
    Rotation {
        omega: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeConfig {
    pub convention: Convention,
    pub drift: DriftConfig,
    pub sigma_theta: f64,
    pub sigma_phi: f64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig {
            convention: Convention::Ito,
            drift: DriftConfig::Zero,
            sigma_theta: 1.0,
            sigma_phi: 1.0,
        }
    }
}

impl SdeConfig {
    pub fn spec(&self, chart: Chart) -> Result<SdeSpec> {
        if !(self.sigma_theta.is_finite() && self.sigma_phi.is_finite()) {
            return Err(Error::InvalidConfig("noise amplitudes must be finite".into()));
        }
        let preset = match self.drift {
            DriftConfig::Zero => DriftPreset::default(),
            DriftConfig::Constant { theta, phi } => DriftPreset::constant(theta, phi),
            DriftConfig::Brownian if self.convention == Convention::Stratonovich => {
                if chart == Chart::torus() {
                    DriftPreset::default()
                } else {
                    DriftPreset::brownian_strat()
                }
            }
            DriftConfig::Brownian => DriftPreset::default(),
            DriftConfig::Rotation { omega } => DriftPreset::rotation(omega),
        };
        let drift: FieldSpec = preset.field();
        Ok(SdeSpec::frame_aligned(
            chart,
            self.convention,
            drift,
            self.sigma_theta,
            self.sigma_phi,
        ))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    #[default]
    Uniform,
    /// Point mass; on the grid a single-cell spike.
    Point {
        theta: f64,
        phi: f64,
    },
    VonMisesFisher {
        kappa: f64,
        mean: [f64; 3],
    },
    /// Grid CSV, relative paths resolved against the config file.
    File {
        path: PathBuf,
    },
}

impl InitConfig {
    fn check_vmf(kappa: f64, mean: [f64; 3]) -> Result<()> {
        let n = crate::stats::norm(mean);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("mean direction has norm {n}, expected 1")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidConfig("kappa must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn density(&self, shape: GridShape, base: &Path) -> Result<DensityGrid> {
        match self {
            InitConfig::Uniform => Ok(DensityGrid::uniform(shape)),
            InitConfig::Point { theta, phi } => {
                let p = ChartPoint::new(*theta, *phi);
                if !p.is_finite() {
                    return Err(Error::InvalidConfig("initial point must be finite".into()));
                }
                let (j, k) = shape.cell_of(shape.chart().wrap(p));
                let mut d = DensityGrid::zeros(shape);
                d.values[shape.index(j, k)] = 1.0 / shape.weight(j);
                Ok(d)
            }
            InitConfig::VonMisesFisher { kappa, mean } => {
                Self::check_vmf(*kappa, *mean)?;
                if !matches!(shape.chart(), Chart::Sphere { .. }) {
                    return Err(Error::InvalidConfig("von Mises-Fisher needs the sphere".into()));
                }
                vmf_density(shape, *kappa, *mean)
            }
            InitConfig::File { path } => {
                let d = DensityGrid::read_csv(&base.join(path), shape.chart())?;
                if d.shape != shape {
                    return Err(Error::ShapeMismatch(format!(
                        "file grid {}x{} vs configured {}x{}",
                        d.n_theta(),
                        d.n_phi(),
                        shape.n_theta,
                        shape.n_phi
                    )));
                }
                Ok(d)
            }
        }
    }

    pub fn particles(&self, shape: GridShape, base: &Path) -> Result<InitialCondition> {
        Ok(match self {
            InitConfig::Uniform => InitialCondition::Uniform,
            InitConfig::Point { theta, phi } => InitialCondition::Point {
                theta: *theta,
                phi: *phi,
            },
            InitConfig::VonMisesFisher { kappa, mean } => {
                Self::check_vmf(*kappa, *mean)?;
                InitialCondition::VonMisesFisher {
                    kappa: *kappa,
                    mean: *mean,
                }
            }
            InitConfig::File { .. } => InitialCondition::Grid(self.density(shape, base)?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub particles: usize,
    pub dt: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            particles: 100_000,
            dt: 0.005,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Allowed L1 distance; defaults to 1.5 x the expected histogram error + 0.01.
    pub band: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub t: f64,
    pub kappa: f64,
    pub z: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub measurements: Vec<MeasurementConfig>,
    pub particles: usize,
    pub dt: f64,
    /// Run the particle filter oracle next to the grid filter.
    pub oracle: bool,
    pub budget_l1: f64,
    pub budget_angle_deg: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            measurements: Vec::new(),
            particles: 100_000,
            dt: 0.005,
            oracle: true,
            budget_l1: 0.05,
            budget_angle_deg: 2.0,
        }
    }
}

impl FilterConfig {
    pub fn schedule(&self) -> Result<Vec<Measurement>> {
        self.measurements
            .iter()
            .map(|m| {
                let lik = LikelihoodSpec::von_mises_fisher(m.kappa, m.z);
                lik.validate()?;
                Ok(Measurement {
                    t: m.t,
                    likelihood: lik,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the subcommand.
    pub kind: Option<ExperimentKind>,
    pub chart: ChartName,
    pub grid: GridConfig,
    pub sde: SdeConfig,
    pub solver: SolverConfig,
    pub seed: u64,
    pub init: InitConfig,
    pub mc: McConfig,
    pub compare: CompareConfig,
    pub check: CheckConfig,
    pub filter: FilterConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            chart: ChartName::Sphere,
            grid: GridConfig::default(),
            sde: SdeConfig::default(),
            solver: SolverConfig::default(),
            seed: 1,
            init: InitConfig::Uniform,
            mc: McConfig::default(),
            compare: CompareConfig::default(),
            check: CheckConfig::default(),
            filter: FilterConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn chart(&self) -> Chart {
        self.chart.chart()
    }

    pub fn shape(&self) -> Result<GridShape> {
        GridShape::new(self.chart(), self.grid.n_theta, self.grid.n_phi)
    }

    pub fn spec(&self) -> Result<SdeSpec> {
        self.sde.spec(self.chart())
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(Error::InvalidConfig(format!(
                    "config is for '{}', not '{}'",
                    k.name(),
                    kind.name()
                )));
            }
        }
        self.shape()?;
        self.spec()?;
        self.solver.validate()?;
        match kind {
            ExperimentKind::Check => self.check.validate()?,
            ExperimentKind::Mc | ExperimentKind::Compare => {
                if self.mc.particles == 0 || !(self.mc.dt > 0.0) {
                    return Err(Error::InvalidConfig("mc needs particles >= 1 and dt > 0".into()));
                }
                if let Some(b) = self.compare.band {
                    if !(b >= 0.0) {
                        return Err(Error::InvalidConfig("band must be non-negative".into()));
                    }
                }
            }
            ExperimentKind::Filter => {
                if self.chart != ChartName::Sphere {
                    return Err(Error::InvalidConfig("the filter runs on the sphere".into()));
                }
                self.filter.schedule()?;
                if self.filter.oracle && (self.filter.particles == 0 || !(self.filter.dt > 0.0)) {
                    return Err(Error::InvalidConfig("oracle needs particles >= 1 and dt > 0".into()));
                }
            }
            ExperimentKind::Fpe => {}
        }
        Ok(())
    }
}

/// The standard filter scenario: a concentrated prior near (1, 0, 0),
/// isotropic diffusion, and three kappa = 10 fixes of a static target.
pub fn standard_filter_scenario() -> ExperimentConfig {
    let unit = |v: [f64; 3]| {
        let n = crate::stats::norm(v);
        v.map(|x| x / n)
    };
    let zs = [
        unit([1.0, 0.05, 0.03]),
        unit([1.0, -0.04, 0.02]),
        unit([1.0, 0.02, -0.05]),
    ];
    ExperimentConfig {
        kind: Some(ExperimentKind::Filter),
        sde: SdeConfig {
            convention: Convention::Ito,
            drift: DriftConfig::Zero,
            sigma_theta: 0.1,
            sigma_phi: 0.1,
        },
        seed: 7,
        init: InitConfig::VonMisesFisher {
            kappa: 100.0,
            mean: [1.0, 0.0, 0.0],
        },
        filter: FilterConfig {
            measurements: zs
                .iter()
                .enumerate()
                .map(|(i, z)| MeasurementConfig {
                    t: 0.5 * (i + 1) as f64,
                    kappa: 10.0,
                    z: *z,
                })
                .collect(),
            ..Default::default()
        },
        ..Default::default()
    }
}
