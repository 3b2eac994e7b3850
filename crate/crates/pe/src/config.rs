//! Experiment configuration: a strict JSON document.
//!
//! Physics parameters (γ, ρ̄, β, κ, T*, L) have no defaults; numerical and
//! output settings do. Unknown keys are rejected.

use std::fmt;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use pe_core::ibvp::{IbvpConfig, DEFAULT_CFL};
use pe_core::model::{
    make_default_equilibrium, make_equilibrium, validate_hypothesis, BoundaryForcing, DampingField, Equilibrium,
};
use pe_core::periodic::{default_tol, IterationConfig, DEFAULT_GRID, DEFAULT_MAX_ITER};
use pe_core::series::{FourierSeries, Polynomial, Signal};
use pe_core::Coefficients;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gas: GasConfig,
    pub domain: DomainConfig,
    pub damping: DampingConfig,
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasConfig {
    pub gamma: f64,
    pub rho_bar: f64,
    /// Sup-norm radius of the admissible ball; `0.1·c̄` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhood_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Time period `T*`.
    pub period: f64,
    /// Domain length `L`.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierConfig {
    fn series(&self, period: f64) -> FourierSeries {
        FourierSeries::new(period, self.mean, self.cos.clone(), self.sin.clone())
    }

    fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingConfig {
    Constant {
        beta0: f64,
    },
    /// `β₀ · g(t) · h(x)` with `g` a Fourier series and `h` a polynomial.
    Separable {
        beta0: f64,
        temporal: FourierConfig,
        spatial: Vec<f64>,
    },
    Tabulated {
        nt: usize,
        nx: usize,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    Zero,
    Fourier {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// `amplitude · |sin(2πt/T*)|^exponent`.
    PowerSine {
        amplitude: f64,
        exponent: f64,
    },
}

impl SignalConfig {
    fn signal(&self, period: f64) -> Signal {
        match self {
            SignalConfig::Zero => Signal::zero(period),
            SignalConfig::Fourier { mean, cos, sin } => {
                Signal::Fourier(FourierSeries::new(period, *mean, cos.clone(), sin.clone()))
            }
            SignalConfig::PowerSine { amplitude, exponent } => Signal::PowerSine {
                period,
                amplitude: *amplitude,
                exponent: *exponent,
            },
        }
    }

    fn check(&self, name: &str) -> Result<(), RunError> {
        match self {
            SignalConfig::Zero => Ok(()),
            SignalConfig::Fourier { mean, cos, sin } => {
                if mean.is_finite() && cos.iter().chain(sin).all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(invalid(format!("forcing.{name} has non-finite coefficients")))
                }
            }
            SignalConfig::PowerSine { amplitude, exponent } => {
                if !amplitude.is_finite() || !(*exponent > 1.0 && exponent.is_finite()) {
                    Err(invalid(format!(
                        "forcing.{name}: power_sine needs a finite amplitude and exponent > 1 (C¹ signal), got {amplitude}, {exponent}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub phi1b: SignalConfig,
    pub phi2b: SignalConfig,
    pub kappa1: f64,
    pub kappa2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    #[default]
    Nonlinear,
    Frozen,
}

impl From<CoefficientMode> for Coefficients {
    fn from(c: CoefficientMode) -> Self {
        match c {
            CoefficientMode::Nonlinear => Coefficients::Nonlinear,
            CoefficientMode::Frozen => Coefficients::Frozen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nt: usize,
    pub nx: usize,
    pub substeps: usize,
    pub interpolation_order: u8,
    pub coefficients: CoefficientMode,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nt: DEFAULT_GRID,
            nx: DEFAULT_GRID,
            substeps: pe_core::characteristics::DEFAULT_SUBSTEPS,
            interpolation_order: 3,
            coefficients: CoefficientMode::Nonlinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Validate,
    Periodic,
    Ibvp,
    Stability,
    Sweep,
    Oracle,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Validate => "validate",
            Mode::Periodic => "periodic",
            Mode::Ibvp => "ibvp",
            Mode::Stability => "stability",
            Mode::Sweep => "sweep",
            Mode::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Target forcing size `ε`; the configured forcing is rescaled.
    Epsilon,
    /// Constant damping level `β₀`.
    Beta0,
    /// Both reflection coefficients.
    Kappa,
    /// `Nt = Nx`.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Stopping threshold; `1e−10·max(ε, 1e−6)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub horizon_periods: f64,
    pub bump_amplitude: f64,
    pub snapshots_per_window: usize,
    pub cfl_fraction: f64,
    pub regularity_probe: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_parameter: Option<SweepParameter>,
    pub sweep_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            tol: None,
            max_iter: DEFAULT_MAX_ITER,
            horizon_periods: 3.0,
            bump_amplitude: 0.005,
            snapshots_per_window: 32,
            cfl_fraction: DEFAULT_CFL,
            regularity_probe: false,
            sweep_parameter: None,
            sweep_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub emit_fields: bool,
    pub emit_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            emit_fields: true,
            emit_csv: true,
        }
    }
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Validation(msg.into())
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, RunError> {
    serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config_str(&text).map_err(|e| match e {
        RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Solver objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub eq: Equilibrium,
    pub damping: DampingField,
    pub forcing: BoundaryForcing,
    pub iteration: IterationConfig,
    pub ibvp: IbvpConfig,
}

fn check_kappa(name: &str, symbol: &str, k: f64) -> Result<(), RunError> {
    if !(k.abs() < 1.0) {
        return Err(invalid(format!(
            "forcing.{name} = {k} violates the dissipative boundary condition |{symbol}| < 1"
        )));
    }
    Ok(())
}

fn check_beta0(name: &str, b: f64) -> Result<(), RunError> {
    if !b.is_finite() || b > 0.0 {
        return Err(invalid(format!(
            "{name} = {b} violates the damping hypothesis β ≤ 0 (β must be non-positive)"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Checks every invariant that can be checked without solving.
    pub fn validate(&self) -> Result<(), RunError> {
        self.model(1).map(|_| ())?;
        let run = &self.run;
        if let Some(tol) = run.tol {
            if !(tol > 0.0) {
                return Err(invalid(format!("run.tol must be positive, got {tol}")));
            }
        }
        if !(run.horizon_periods > 0.0 && run.horizon_periods.is_finite()) {
            return Err(invalid(format!(
                "run.horizon_periods must be positive, got {}",
                run.horizon_periods
            )));
        }
        if !(run.bump_amplitude >= 0.0 && run.bump_amplitude.is_finite()) {
            return Err(invalid(format!(
                "run.bump_amplitude must be non-negative, got {}",
                run.bump_amplitude
            )));
        }
        if run.snapshots_per_window < 2 {
            return Err(invalid("run.snapshots_per_window must be at least 2"));
        }
        if !(run.cfl_fraction > 0.0 && run.cfl_fraction <= 1.0) {
            return Err(invalid(format!(
                "run.cfl_fraction must lie in (0, 1], got {}",
                run.cfl_fraction
            )));
        }
        for v in &run.sweep_values {
            if !v.is_finite() {
                return Err(invalid("run.sweep_values must be finite"));
            }
            match run.sweep_parameter {
                Some(SweepParameter::Kappa) => check_kappa("kappa (sweep value)", "κ", *v)?,
                Some(SweepParameter::Beta0) => check_beta0("run.sweep_values beta0", *v)?,
                Some(SweepParameter::Epsilon) if *v < 0.0 => {
                    return Err(invalid(format!("epsilon sweep values must be non-negative, got {v}")))
                }
                Some(SweepParameter::Grid) if *v < 8.0 || v.fract() != 0.0 => {
                    return Err(invalid(format!("grid sweep values must be integers >= 8, got {v}")))
                }
                _ => {}
            }
        }
        if run.sweep_parameter == Some(SweepParameter::Beta0) && !matches!(self.damping, DampingConfig::Constant { .. })
        {
            return Err(invalid("a beta0 sweep requires constant damping"));
        }
        Ok(())
    }

    /// Checks that sweep settings are present (needed only in sweep mode).
    pub fn validate_sweep(&self) -> Result<SweepParameter, RunError> {
        let p = self
            .run
            .sweep_parameter
            .ok_or_else(|| invalid("sweep mode needs run.sweep_parameter"))?;
        if self.run.sweep_values.is_empty() {
            return Err(invalid("sweep mode needs a non-empty run.sweep_values"));
        }
        Ok(p)
    }

    /// Builds the solver objects with both grid sizes multiplied by `grid_scale`.
    pub fn model(&self, grid_scale: usize) -> Result<Model, RunError> {
        let gas = &self.gas;
        if !(gas.gamma > 1.0 && gas.gamma.is_finite()) {
            return Err(invalid(format!("gas.gamma must exceed 1, got {}", gas.gamma)));
        }
        if !(gas.rho_bar > 0.0 && gas.rho_bar.is_finite()) {
            return Err(invalid(format!("gas.rho_bar must be positive, got {}", gas.rho_bar)));
        }
        let (period, length) = (self.domain.period, self.domain.length);
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid(format!("domain.period must be positive, got {period}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid(format!("domain.length must be positive, got {length}")));
        }
        let eq = match gas.neighborhood_radius {
            Some(r) => make_equilibrium(gas.rho_bar, gas.gamma, r),
            None => make_default_equilibrium(gas.rho_bar, gas.gamma),
        }
        .map_err(|e| invalid(format!("gas: {e}")))?;

        let f = &self.forcing;
        check_kappa("kappa1", "κ₁", f.kappa1)?;
        check_kappa("kappa2", "κ₂", f.kappa2)?;
        f.phi1b.check("phi1b")?;
        f.phi2b.check("phi2b")?;
        let forcing = BoundaryForcing::new(f.phi1b.signal(period), f.phi2b.signal(period), f.kappa1, f.kappa2)
            .map_err(|e| invalid(format!("forcing: {e}")))?;

        let damping = match &self.damping {
            DampingConfig::Constant { beta0 } => {
                check_beta0("damping.beta0", *beta0)?;
                DampingField::constant(*beta0, period, length)
            }
            DampingConfig::Separable {
                beta0,
                temporal,
                spatial,
            } => {
                check_beta0("damping.beta0", *beta0)?;
                if !temporal.is_finite() || spatial.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("damping profiles must be finite"));
                }
                DampingField::separable(
                    *beta0,
                    temporal.series(period),
                    Polynomial::new(spatial.clone()),
                    length,
                )
            }
            DampingConfig::Tabulated { nt, nx, values } => {
                if let Some(v) = values.iter().find(|v| **v > 0.0) {
                    return Err(invalid(format!(
                        "damping.values contains {v}, violating the damping hypothesis β ≤ 0 (β must be non-positive)"
                    )));
                }
                DampingField::tabulated(*nt, *nx, values.clone(), period, length)
            }
        }
        .map_err(|e| invalid(format!("damping: {e}")))?;

        let g = &self.grid;
        if grid_scale < 1 {
            return Err(invalid("grid scale must be at least 1"));
        }
        let (nt, nx) = (g.nt * grid_scale, g.nx * grid_scale);
        let hyp = validate_hypothesis(&damping, nt, nx).map_err(|e| invalid(format!("damping: {e}")))?;
        if !hyp.passed() {
            let msgs: Vec<&str> = hyp.violations.iter().map(|(_, m)| m.as_str()).collect();
            return Err(invalid(format!(
                "damping violates the hypothesis β* ≤ β ≤ 0 with bounded derivatives: {}",
                msgs.join("; ")
            )));
        }
        let iteration = IterationConfig {
            nt,
            nx,
            tol: self.run.tol.unwrap_or_else(|| default_tol(&forcing)),
            max_iter: self.run.max_iter,
            substeps_per_cell: g.substeps,
            interpolation_order: g.interpolation_order,
            coefficients: g.coefficients.into(),
        };
        iteration.validate().map_err(|e| invalid(format!("grid/run: {e}")))?;
        Ok(Model {
            eq,
            damping,
            forcing,
            iteration,
            ibvp: IbvpConfig {
                cfl_fraction: self.run.cfl_fraction,
                coefficients: g.coefficients.into(),
            },
        })
    }
}
