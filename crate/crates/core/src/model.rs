//! Domain types: grid, rate constants, per-region state, and the full
//! simulation configuration with its validation rules.

use std::fmt;

/// One of the two subdomains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    One,
    Two,
}

impl Region {
    pub const BOTH: [Region; 2] = [Region::One, Region::Two];

    pub fn other(self) -> Region {
        match self {
            Region::One => Region::Two,
            Region::Two => Region::One,
        }
    }

    /// 0 for region one, 1 for region two.
    pub fn idx(self) -> usize {
        match self {
            Region::One => 0,
            Region::Two => 1,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::One => write!(f, "1"),
            Region::Two => write!(f, "2"),
        }
    }
}

/// SIR compartment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compartment {
    S,
    I,
    R,
}

impl Compartment {
    pub const ALL: [Compartment; 3] = [Compartment::S, Compartment::I, Compartment::R];

    pub fn idx(self) -> usize {
        match self {
            Compartment::S => 0,
            Compartment::I => 1,
            Compartment::R => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Compartment::S => 'S',
            Compartment::I => 'I',
            Compartment::R => 'R',
        }
    }
}

/// Uniform 1D mesh over two equal-width adjacent regions.
///
/// Region one spans `[x_left, x_interface]`, region two spans
/// `[x_interface, x_right]`. Each region holds `n_cells_per_region`
/// cells of width `dx`. Cell centers sit at half-cell offsets; the
/// shared interface is a face of both regions.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoRegionGrid {
    pub x_left: f64,
    pub x_interface: f64,
    pub x_right: f64,
    pub n_cells_per_region: usize,
    pub dx: f64,
}

impl TwoRegionGrid {
    pub fn new(
        x_left: f64,
        x_interface: f64,
        x_right: f64,
        n_cells_per_region: usize,
    ) -> Result<Self, ConfigError> {
        let grid = TwoRegionGrid {
            x_left,
            x_interface,
            x_right,
            n_cells_per_region,
            dx: if n_cells_per_region > 0 {
                (x_interface - x_left) / n_cells_per_region as f64
            } else {
                0.0
            },
        };
        let mut report = ConfigError::new();
        grid.check(&mut report);
        report.into_result(grid)
    }

    fn check(&self, report: &mut ConfigError) {
        if !(self.x_left < self.x_interface && self.x_interface < self.x_right) {
            report.push(Violation::GridDegenerate {
                field: "x_left/x_interface/x_right",
                detail: format!(
                    "require x_left < x_interface < x_right, got {} / {} / {}",
                    self.x_left, self.x_interface, self.x_right
                ),
            });
        }
        let w1 = self.x_interface - self.x_left;
        let w2 = self.x_right - self.x_interface;
        if (w1 - w2).abs() > 1e-12 * w1.abs().max(w2.abs()).max(1.0) {
            report.push(Violation::GridDegenerate {
                field: "x_interface",
                detail: format!("subdomain widths differ: {} vs {}", w1, w2),
            });
        }
        if self.n_cells_per_region == 0 {
            report.push(Violation::GridDegenerate {
                field: "n_cells_per_region",
                detail: "must be positive".to_string(),
            });
        }
        if !(self.dx > 0.0) {
            report.push(Violation::GridDegenerate {
                field: "dx",
                detail: format!("cell width {} not positive", self.dx),
            });
        }
    }

    /// Coordinate of cell center `k` (0-based from the region's left end).
    pub fn cell_center(&self, region: Region, k: usize) -> f64 {
        let origin = match region {
            Region::One => self.x_left,
            Region::Two => self.x_interface,
        };
        origin + (k as f64 + 0.5) * self.dx
    }

    /// Coordinate of face `j` of a region; faces run 0..=n from the
    /// region's left end, so face 0 and face n are region boundaries.
    pub fn face_coord(&self, region: Region, j: usize) -> f64 {
        let origin = match region {
            Region::One => self.x_left,
            Region::Two => self.x_interface,
        };
        origin + j as f64 * self.dx
    }

    /// Index of the cell adjacent to the shared interface.
    pub fn gamma_cell(&self, region: Region) -> usize {
        match region {
            Region::One => self.n_cells_per_region - 1,
            Region::Two => 0,
        }
    }

    /// Coordinate of a region's outer (non-interface) boundary.
    pub fn outer_coord(&self, region: Region) -> f64 {
        match region {
            Region::One => self.x_left,
            Region::Two => self.x_right,
        }
    }
}

/// All rate constants of the model plus the diffusion-shape and
/// threshold parameters. Rates are per day, migration probabilities
/// dimensionless in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicParams {
    /// Intra-region infection rates.
    pub beta_1: f64,
    pub beta_2: f64,
    /// Cross-region infection rates (region 1 infected by region 2's
    /// infected, and vice versa).
    pub beta_12: f64,
    pub beta_21: f64,
    /// Recovery rates.
    pub gamma_1: f64,
    pub gamma_2: f64,
    /// Migration probabilities (scalar interior value of the spatial field).
    pub lambda_1: f64,
    pub lambda_2: f64,
    /// Birth rates.
    pub big_lambda_1: f64,
    pub big_lambda_2: f64,
    /// Natural death rates per compartment.
    pub mu_s: f64,
    pub mu_i: f64,
    pub mu_r: f64,
    /// Temporal decay exponent of the diffusion coefficient.
    pub sigma_a: f64,
    /// Peak time of the diffusion coefficient.
    pub sigma_t_a: f64,
    /// Per-region direction thresholds for the interface mobility rule.
    pub i_threshold_1: f64,
    pub i_threshold_2: f64,
}

impl EpidemicParams {
    pub fn beta_local(&self, region: Region) -> f64 {
        match region {
            Region::One => self.beta_1,
            Region::Two => self.beta_2,
        }
    }

    pub fn beta_cross(&self, region: Region) -> f64 {
        match region {
            Region::One => self.beta_12,
            Region::Two => self.beta_21,
        }
    }

    pub fn gamma(&self, region: Region) -> f64 {
        match region {
            Region::One => self.gamma_1,
            Region::Two => self.gamma_2,
        }
    }

    pub fn lambda(&self, region: Region) -> f64 {
        match region {
            Region::One => self.lambda_1,
            Region::Two => self.lambda_2,
        }
    }

    pub fn birth_rate(&self, region: Region) -> f64 {
        match region {
            Region::One => self.big_lambda_1,
            Region::Two => self.big_lambda_2,
        }
    }

    pub fn i_threshold(&self, region: Region) -> f64 {
        match region {
            Region::One => self.i_threshold_1,
            Region::Two => self.i_threshold_2,
        }
    }

    fn check(&self, report: &mut ConfigError) {
        let rates: [(&'static str, f64); 13] = [
            ("beta_1", self.beta_1),
            ("beta_2", self.beta_2),
            ("beta_12", self.beta_12),
            ("beta_21", self.beta_21),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("big_lambda_1", self.big_lambda_1),
            ("big_lambda_2", self.big_lambda_2),
            ("mu_s", self.mu_s),
            ("mu_i", self.mu_i),
            ("mu_r", self.mu_r),
            ("sigma_a", self.sigma_a),
            ("sigma_t_a", self.sigma_t_a),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) {
                report.push(Violation::NegativeRate {
                    field: name,
                    value: v,
                });
            }
        }
        for (name, v) in [("lambda_1", self.lambda_1), ("lambda_2", self.lambda_2)] {
            if !(0.0..=1.0).contains(&v) {
                report.push(Violation::NegativeRate {
                    field: name,
                    value: v,
                });
            }
        }
        for (name, v) in [
            ("i_threshold_1", self.i_threshold_1),
            ("i_threshold_2", self.i_threshold_2),
        ] {
            if !(v > 0.0) {
                report.push(Violation::ThresholdNonPositive {
                    field: name,
                    value: v,
                });
            }
        }
    }
}

impl Default for EpidemicParams {
    /// Baseline parameter set of the reference scenario.
    fn default() -> Self {
        EpidemicParams {
            beta_1: 0.05,
            beta_2: 0.05,
            beta_12: 0.1,
            beta_21: 0.1,
            gamma_1: 0.2,
            gamma_2: 0.2,
            lambda_1: 0.01,
            lambda_2: 0.01,
            big_lambda_1: 0.005,
            big_lambda_2: 0.005,
            mu_s: 0.05,
            mu_i: 0.13,
            mu_r: 0.05,
            sigma_a: 0.01,
            sigma_t_a: 50.0,
            // An effectively-zero threshold closes the interface as soon
            // as any infection is present; that is the only regime in
            // which the lagged-explicit interface flux is stable on the
            // baseline grid (dt/dx ~ 3.8).
            i_threshold_1: 1e-60,
            i_threshold_2: 1e-60,
        }
    }
}

/// Cell-averaged S/I/R densities of one region at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionState {
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    pub time: f64,
}

impl RegionState {
    pub fn uniform(n: usize, s0: f64, i0: f64, r0: f64, time: f64) -> Self {
        RegionState {
            s: vec![s0; n],
            i: vec![i0; n],
            r: vec![r0; n],
            time,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.s.len()
    }

    pub fn field(&self, c: Compartment) -> &[f64] {
        match c {
            Compartment::S => &self.s,
            Compartment::I => &self.i,
            Compartment::R => &self.r,
        }
    }

    pub fn field_mut(&mut self, c: Compartment) -> &mut Vec<f64> {
        match c {
            Compartment::S => &mut self.s,
            Compartment::I => &mut self.i,
            Compartment::R => &mut self.r,
        }
    }

    /// (s, i, r) triple at one cell.
    pub fn cell(&self, k: usize) -> [f64; 3] {
        [self.s[k], self.i[k], self.r[k]]
    }

    /// Total population density integral of the region: dx * sum(S+I+R).
    pub fn population_measure(&self, dx: f64) -> f64 {
        let sum: f64 = self
            .s
            .iter()
            .zip(&self.i)
            .zip(&self.r)
            .map(|((s, i), r)| s + i + r)
            .sum();
        sum * dx
    }

    pub fn min_value(&self) -> f64 {
        let mut m = f64::INFINITY;
        for v in self.s.iter().chain(&self.i).chain(&self.r) {
            m = m.min(*v);
        }
        m
    }

    pub fn max_value(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for v in self.s.iter().chain(&self.i).chain(&self.r) {
            m = m.max(*v);
        }
        m
    }
}

/// Uniform initial densities per region plus the reporting scale
/// (individuals per unit density per region).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    pub s0_1: f64,
    pub i0_1: f64,
    pub r0_1: f64,
    pub s0_2: f64,
    pub i0_2: f64,
    pub r0_2: f64,
    pub population_scale: f64,
}

impl InitialConditions {
    pub fn triple(&self, region: Region) -> (f64, f64, f64) {
        match region {
            Region::One => (self.s0_1, self.i0_1, self.r0_1),
            Region::Two => (self.s0_2, self.i0_2, self.r0_2),
        }
    }

    fn check(&self, report: &mut ConfigError) {
        for (name, v) in [
            ("s0_1", self.s0_1),
            ("i0_1", self.i0_1),
            ("r0_1", self.r0_1),
            ("s0_2", self.s0_2),
            ("i0_2", self.i0_2),
            ("r0_2", self.r0_2),
        ] {
            if !(v >= 0.0) {
                report.push(Violation::NegativeRate {
                    field: name,
                    value: v,
                });
            }
        }
        if !(self.population_scale > 0.0) {
            report.push(Violation::NegativeRate {
                field: "population_scale",
                value: self.population_scale,
            });
        }
    }
}

/// Interface mobility law alpha(I).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaForm {
    /// alpha(I) = 1 / (1 + I^2)
    RationalDecay,
    /// alpha(I) = exp(-I)
    ExponentialDecay,
}

/// Spatial/temporal shape of the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaForm {
    /// sigma(y, t) = lambda * (y_right - y) * (y - y_left) * exp(-a (t - t_a)).
    /// Vanishes at both outer boundaries for every t; the scale is the
    /// region's migration probability.
    Parabolic,
    /// The same degenerate parabola with an explicit scale, decoupled
    /// from the migration probability. Lets verification runs keep the
    /// boundary degeneracy while the exchange terms are switched off.
    ParabolicFixed(f64),
    /// Constant-in-space-and-time coefficient, used by verification
    /// configurations that need a nondegenerate operator.
    Constant(f64),
}

/// Whether the divergence of the other region's diffusive flux is added
/// (through the paired-cell correspondence) as an explicit source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossDiffusion {
    Off,
    Paired,
}

/// Which infected quantity drives the lockdown trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockdownSignal {
    /// Infected density of the interface-adjacent cell of each region.
    Interface,
    /// dx-weighted infected total of each region.
    RegionalTotal,
}

/// Everything a run needs. Plain data; `validate_config` checks every
/// invariant and reports all violations at once.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub grid: TwoRegionGrid,
    pub params: EpidemicParams,
    pub dt: f64,
    pub t_final: f64,
    pub initial: InitialConditions,
    pub alpha_form: AlphaForm,
    /// Gauss-Seidel sweeps per time step.
    pub coupling_sweeps: usize,
    /// Interface-infected level at which the interface closes.
    pub lockdown_trigger: f64,
    /// alpha values at or below this are treated as exact zero.
    pub alpha_floor: f64,
    /// Days the interface stays closed after the trigger condition clears.
    pub reopen_delay: f64,
    pub lockdown_signal: LockdownSignal,
    pub sigma_form: SigmaForm,
    pub cross_diffusion: CrossDiffusion,
    /// Relative tolerance for clamping explicit-step undershoots to zero.
    pub clamp_tol_rel: f64,
    /// Clamp roundoff undershoots and abort on larger negatives. Left on
    /// for production runs; manufactured-solution verification turns it
    /// off because such solutions legitimately pass through values below
    /// the discretization error near the boundary.
    pub enforce_positivity: bool,
    /// Record one frame every this many steps.
    pub output_stride: usize,
    /// Cell index probed by the time-series output.
    pub probe_cell: usize,
}

impl SimulationConfig {
    /// Baseline scenario: unit-width regions, 302 cells each, 300 days at
    /// dt = 0.0125, reference rate table, normalized initial densities
    /// 0.8/0.2/0 and 1.0/0/0 with 300 individuals per unit density.
    pub fn baseline() -> Self {
        let params = EpidemicParams::default();
        let lockdown_trigger = params.i_threshold_1.min(params.i_threshold_2);
        SimulationConfig {
            grid: TwoRegionGrid::new(0.0, 1.0, 2.0, 302).expect("baseline grid"),
            params,
            dt: 0.0125,
            t_final: 300.0,
            initial: InitialConditions {
                s0_1: 0.8,
                i0_1: 0.2,
                r0_1: 0.0,
                s0_2: 1.0,
                i0_2: 0.0,
                r0_2: 0.0,
                population_scale: 300.0,
            },
            alpha_form: AlphaForm::RationalDecay,
            coupling_sweeps: 1,
            lockdown_trigger,
            alpha_floor: 0.0,
            reopen_delay: 0.0,
            lockdown_signal: LockdownSignal::Interface,
            sigma_form: SigmaForm::Parabolic,
            cross_diffusion: CrossDiffusion::Paired,
            clamp_tol_rel: 1e-10,
            enforce_positivity: true,
            output_stride: 80,
            probe_cell: 151,
        }
    }

    /// Number of time steps; valid only after `validate_config`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// One named invariant violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveStep { field: &'static str, detail: String },
    NegativeRate { field: &'static str, value: f64 },
    ThresholdNonPositive { field: &'static str, value: f64 },
    GridDegenerate { field: &'static str, detail: String },
}

impl Violation {
    pub fn field(&self) -> &'static str {
        match self {
            Violation::NonPositiveStep { field, .. }
            | Violation::NegativeRate { field, .. }
            | Violation::ThresholdNonPositive { field, .. }
            | Violation::GridDegenerate { field, .. } => field,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveStep { field, detail } => {
                write!(f, "NonPositiveStep({}): {}", field, detail)
            }
            Violation::NegativeRate { field, value } => {
                write!(f, "NegativeRate({}): value {} outside domain", field, value)
            }
            Violation::ThresholdNonPositive { field, value } => {
                write!(f, "ThresholdNonPositive({}): {} must be > 0", field, value)
            }
            Violation::GridDegenerate { field, detail } => {
                write!(f, "GridDegenerate({}): {}", field, detail)
            }
        }
    }
}

/// Collection of every violated invariant found in a configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    pub fn new() -> Self {
        ConfigError::default()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn into_result<T>(self, ok: T) -> Result<T, ConfigError> {
        if self.is_empty() {
            Ok(ok)
        } else {
            Err(self)
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} invalid configuration value(s):",
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  - {}", v)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Checks every type invariant and returns the config unchanged iff all
/// hold; otherwise the error names every violated invariant.
pub fn validate_config(cfg: &SimulationConfig) -> Result<(), ConfigError> {
    let mut report = ConfigError::new();
    cfg.grid.check(&mut report);
    cfg.params.check(&mut report);
    cfg.initial.check(&mut report);

    if !(cfg.dt > 0.0) {
        report.push(Violation::NonPositiveStep {
            field: "dt",
            detail: format!("dt = {} must be > 0", cfg.dt),
        });
    }
    if !(cfg.t_final >= 0.0) {
        report.push(Violation::NonPositiveStep {
            field: "t_final",
            detail: format!("t_final = {} must be >= 0", cfg.t_final),
        });
    }
    if cfg.dt > 0.0 && cfg.t_final >= 0.0 {
        let ratio = cfg.t_final / cfg.dt;
        if (ratio - ratio.round()).abs() > 1e-8 * ratio.max(1.0) {
            report.push(Violation::NonPositiveStep {
                field: "t_final",
                detail: format!("t_final/dt = {} is not an integer step count", ratio),
            });
        }
    }
    if cfg.coupling_sweeps == 0 {
        report.push(Violation::NonPositiveStep {
            field: "coupling_sweeps",
            detail: "must be >= 1".to_string(),
        });
    }
    if cfg.output_stride == 0 {
        report.push(Violation::NonPositiveStep {
            field: "output_stride",
            detail: "must be >= 1".to_string(),
        });
    }
    if cfg.probe_cell >= cfg.grid.n_cells_per_region {
        report.push(Violation::GridDegenerate {
            field: "probe_cell",
            detail: format!(
                "probe_cell {} outside 0..{}",
                cfg.probe_cell, cfg.grid.n_cells_per_region
            ),
        });
    }
    if !(cfg.lockdown_trigger > 0.0) {
        report.push(Violation::ThresholdNonPositive {
            field: "lockdown_trigger",
            value: cfg.lockdown_trigger,
        });
    }
    if !(cfg.alpha_floor >= 0.0) {
        report.push(Violation::NegativeRate {
            field: "alpha_floor",
            value: cfg.alpha_floor,
        });
    }
    if !(cfg.reopen_delay >= 0.0) {
        report.push(Violation::NegativeRate {
            field: "reopen_delay",
            value: cfg.reopen_delay,
        });
    }
    if let SigmaForm::Constant(c) | SigmaForm::ParabolicFixed(c) = cfg.sigma_form {
        if !(c >= 0.0) {
            report.push(Violation::NegativeRate {
                field: "sigma_constant",
                value: c,
            });
        }
    }
    if !(cfg.clamp_tol_rel >= 0.0) {
        report.push(Violation::NegativeRate {
            field: "clamp_tol_rel",
            value: cfg.clamp_tol_rel,
        });
    }

    report.into_result(())
}
