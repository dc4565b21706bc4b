//! Run configuration and the built-in presets.

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::controller::FeedbackGains;
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::integrator::Method;
use crate::planner::PlanConfig;
use crate::reference::{default_j_max, integrate_reference, FourierControl, Reference};
use crate::spin_model::rwa_generators;
use crate::su_core::{
    ComplexMatrix, MatrixJson, SuElement, Tolerances, UnitaryMatrix, DEFAULT_RANK_TOL,
};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SU_STEER_SEED";

/// Fourier coefficients of the two-spin experiment (rows are controls).
pub const TWO_SPIN_ABAR: [[f64; 5]; 6] = [
    [-2.00, -1.39, 4.66, 4.31, 1.80],
    [-0.31, -1.54, 0.92, -3.20, -2.18],
    [-4.69, -0.31, 1.75, 3.94, -1.11],
    [-2.79, 0.77, 4.09, 2.34, 3.46],
    [2.19, 0.60, -0.27, 0.43, -3.75],
    [-0.18, -4.44, -1.38, -4.58, 2.59],
];

pub fn two_spin_abar() -> FourierControl {
    FourierControl::new(1.0, TWO_SPIN_ABAR.iter().map(|r| r.to_vec()).collect())
        .expect("valid table")
}

pub fn cnot() -> UnitaryMatrix {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let rows = vec![
        vec![l, o, o, o],
        vec![o, l, o, o],
        vec![o, o, o, -l],
        vec![o, o, l, o],
    ];
    UnitaryMatrix::new(ComplexMatrix::from_rows(&rows).expect("4x4")).expect("C-NOT is in SU(4)")
}

pub fn minus_identity(n: usize) -> Result<UnitaryMatrix> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "-I is not in SU({n}) for odd n"
        )));
    }
    UnitaryMatrix::new(ComplexMatrix::identity(n).scale(-1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorSpec {
    Preset(String),
    Matrices(Vec<MatrixJson>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierSource {
    /// The two-spin table, period 1.
    TwoSpin,
    Explicit(FourierControl),
    Random {
        a: f64,
        n_f: usize,
        seed: u64,
    },
    Zero {
        n_f: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSpec {
    Preset(String),
    Matrix(MatrixJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(rename = "T")]
    pub period: f64,
    pub generators: GeneratorSpec,
    pub fourier: FourierSource,
    /// Empty means `f_k = 1` for every control.
    pub gains: Vec<f64>,
    pub goal: GoalSpec,
    pub integrator: IntegratorConfig,
    /// Time limit of the direct branch and of the final segment.
    pub horizon: f64,
    pub err_target: f64,
    pub margin: f64,
    /// Segment closeness threshold as a fraction of `n`.
    pub eps_seg_fraction: f64,
    pub eps_final: f64,
    /// Per-segment cap in periods.
    pub segment_cap_periods: f64,
    pub j_max: Option<usize>,
    pub rank_tol: f64,
    /// Collect the E residual along tracking runs.
    pub e_residual: bool,
    /// Every `states_stride`-th emitted sample goes to `states.csv`.
    pub states_stride: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::cnot()
    }
}

impl RunConfig {
    /// The two-spin C-NOT experiment.
    pub fn cnot() -> Self {
        Self {
            n: 4,
            period: 1.0,
            generators: GeneratorSpec::Preset("spin4".into()),
            fourier: FourierSource::TwoSpin,
            gains: Vec::new(),
            goal: GoalSpec::Preset("cnot".into()),
            integrator: IntegratorConfig {
                step: 1e-3,
                dense_stride: 4,
                ..IntegratorConfig::default()
            },
            horizon: 200.0,
            err_target: 1e-2,
            margin: 0.1,
            eps_seg_fraction: 0.05,
            eps_final: 0.04,
            segment_cap_periods: 200.0,
            j_max: None,
            rank_tol: DEFAULT_RANK_TOL,
            e_residual: true,
            states_stride: 25,
            output_dir: None,
        }
    }

    /// Same system, goal `-I`, which forces the segmented branch.
    pub fn minus_identity() -> Self {
        Self {
            goal: GoalSpec::Preset("minus_identity".into()),
            e_residual: false,
            ..Self::cnot()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "cnot" => Ok(Self::cnot()),
            "minus_identity" => Ok(Self::minus_identity()),
            other => Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::DimensionTooSmall(self.n));
        }
        self.integrator.validate()?;
        let positive = [
            ("T", self.period),
            ("horizon", self.horizon),
            ("err_target", self.err_target),
            ("margin", self.margin),
            ("eps_seg_fraction", self.eps_seg_fraction),
            ("eps_final", self.eps_final),
            ("segment_cap_periods", self.segment_cap_periods),
            ("rank_tol", self.rank_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.states_stride == 0 {
            return Err(Error::InvalidParameter("states_stride must be >= 1".into()));
        }
        if self.gains.iter().any(|&f| f == 0.0 || !f.is_finite()) {
            return Err(Error::InvalidParameter(
                "gains must be finite and nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Applies `SU_STEER_SEED` to a seeded random Fourier source.
    pub fn apply_seed_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let parsed: u64 = v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "{SEED_ENV} must be an unsigned integer, got '{v}'"
                ))
            })?;
            if let FourierSource::Random { seed, .. } = &mut self.fourier {
                *seed = parsed;
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> Option<u64> {
        match self.fourier {
            FourierSource::Random { seed, .. } => Some(seed),
            _ => None,
        }
    }

    pub fn build_generators(&self) -> Result<Vec<SuElement>> {
        let gens = match &self.generators {
            GeneratorSpec::Preset(name) if name == "spin4" => {
                if self.n != 4 {
                    return Err(Error::DimensionMismatch {
                        expected: 4,
                        got: self.n,
                    });
                }
                rwa_generators()
            }
            GeneratorSpec::Preset(name) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown generator preset '{name}'"
                )))
            }
            GeneratorSpec::Matrices(list) => list
                .iter()
                .map(|j| SuElement::new(ComplexMatrix::try_from(j.clone())?))
                .collect::<Result<Vec<_>>>()?,
        };
        if gens.is_empty() {
            return Err(Error::Empty("generator list"));
        }
        if let Some(bad) = gens.iter().find(|h| h.dim() != self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: bad.dim(),
            });
        }
        Ok(gens)
    }

    pub fn build_controls(&self, m: usize) -> Result<FourierControl> {
        let fc = match &self.fourier {
            FourierSource::TwoSpin => {
                let fc = two_spin_abar();
                if self.period != 1.0 {
                    FourierControl::new(self.period, fc.coeffs().to_vec())?
                } else {
                    fc
                }
            }
            FourierSource::Explicit(fc) => fc.clone(),
            FourierSource::Random { a, n_f, seed } => {
                FourierControl::random(m, *n_f, *a, self.period, *seed)?
            }
            FourierSource::Zero { n_f } => FourierControl::zeros(m, *n_f, self.period)?,
        };
        if fc.m() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: fc.m(),
            });
        }
        Ok(fc)
    }

    pub fn build_goal(&self) -> Result<UnitaryMatrix> {
        match &self.goal {
            GoalSpec::Preset(name) => match name.as_str() {
                "cnot" => Ok(cnot()),
                "minus_identity" => minus_identity(self.n),
                "identity" => Ok(UnitaryMatrix::identity(self.n)),
                other => Err(Error::InvalidParameter(format!(
                    "unknown goal preset '{other}'"
                ))),
            },
            GoalSpec::Matrix(j) => {
                let m = ComplexMatrix::try_from(j.clone())?;
                if m.dim() != self.n {
                    return Err(Error::DimensionMismatch {
                        expected: self.n,
                        got: m.dim(),
                    });
                }
                UnitaryMatrix::normalized(m, &Tolerances::default())
            }
        }
    }

    pub fn gains_for(&self, m: usize) -> Result<Vec<f64>> {
        if self.gains.is_empty() {
            return Ok(vec![1.0; m]);
        }
        if self.gains.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.gains.len(),
            });
        }
        Ok(self.gains.clone())
    }

    pub fn j_max(&self) -> usize {
        self.j_max.unwrap_or_else(|| default_j_max(self.n))
    }
}

/// Everything a run needs, built from a [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: RunConfig,
    pub generators: Vec<SuElement>,
    pub controls: FourierControl,
    pub gains: FeedbackGains,
    pub goal: UnitaryMatrix,
    pub reference: Reference,
}

impl RunConfig {
    /// Tracking stages sit at `t`, `t + h/2`, `t + h`, so the reference is
    /// stored at half the tracking step.
    pub fn reference_integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            step: self.integrator.step / 2.0,
            method: Method::LieRk4,
            dense_stride: 1,
        }
    }

    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig {
            integrator: self.integrator,
            horizon: self.horizon,
            err_target: self.err_target,
            margin: self.margin,
            eps_seg: Some(self.eps_seg_fraction * self.n as f64),
            segment_cap: self.segment_cap_periods * self.period,
            segments: None,
            j_max: Some(self.j_max()),
            rank_tol: self.rank_tol,
            e_residual: self.e_residual,
        }
    }

    pub fn prepare(&self) -> Result<Experiment> {
        self.validate()?;
        let generators = self.build_generators()?;
        let controls = self.build_controls(generators.len())?;
        let gains = FeedbackGains::new(self.gains_for(generators.len())?)?;
        let goal = self.build_goal()?;
        let reference = integrate_reference(&controls, &generators, &self.reference_integrator())?;
        Ok(Experiment {
            config: self.clone(),
            generators,
            controls,
            gains,
            goal,
            reference,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnot_goal_properties() {
        let g = cnot();
        assert_eq!(g.fidelity(), 2.0);
        assert!(g.unitarity_residual() < 1e-15);
    }

    #[test]
    fn minus_identity_requires_even_n() {
        assert!(minus_identity(3).is_err());
        assert_eq!(minus_identity(4).unwrap().fidelity(), -4.0);
    }

    #[test]
    fn config_roundtrip() {
        let mut cfg = RunConfig::cnot();
        cfg.fourier = FourierSource::Random {
            a: 5.0,
            n_f: 5,
            seed: 9,
        };
        let s = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"horizon": 5.0}"#).unwrap();
        assert_eq!(cfg.horizon, 5.0);
        assert_eq!(cfg.n, 4);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::cnot();
        cfg.n = 1;
        assert!(matches!(cfg.validate(), Err(Error::DimensionTooSmall(1))));
        let mut cfg = RunConfig::cnot();
        cfg.gains = vec![1.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn builds_two_spin_setup() {
        let cfg = RunConfig::cnot();
        let gens = cfg.build_generators().unwrap();
        let fc = cfg.build_controls(gens.len()).unwrap();
        assert_eq!(fc.coeffs()[0][2], 4.66);
        assert_eq!(cfg.gains_for(6).unwrap(), vec![1.0; 6]);
        assert_eq!(cfg.j_max(), 6);
    }
}
