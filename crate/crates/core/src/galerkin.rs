//! Independent spectral verification oracle.
//!
//! Expands each region's fields in orthonormal sine modes that vanish at
//! the region's outer (Dirichlet) end and are free at the interface, so
//! the interface flux enters as a boundary load. The mode coefficients
//! follow the projected ODE system
//!
//!   M d' + K_i(t) d + K_j(t) d_j = G(d, d_j) + lambda_j M d_j - lambda_i M d_i
//!
//! integrated with classical explicit RK4. Nothing here touches the
//! finite-volume assembly or the implicit solver: a shared bug cannot
//! survive the cross-check.

use crate::coefficients::{DiffusionField, MigrationField};
use crate::model::{
    validate_config, Compartment, CrossDiffusion, LockdownSignal, Region, RegionState,
    SimulationConfig,
};
use crate::policy::{lockdown_update, InterfaceMode, LockdownLedger, MobilityPolicy};
use crate::reaction::reaction_eval;
use std::fmt;

#[derive(Debug)]
pub enum OracleError {
    Config(crate::model::ConfigError),
    QuadratureUnderResolved { max_delta: f64 },
    StiffnessStepTooLarge { dt: f64, bound: f64 },
    NegativeInfected { value: f64, time: f64 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Config(e) => write!(f, "invalid configuration: {}", e),
            OracleError::QuadratureUnderResolved { max_delta } => write!(
                f,
                "quadrature under-resolved: entries move by {} under refinement",
                max_delta
            ),
            OracleError::StiffnessStepTooLarge { dt, bound } => {
                write!(f, "RK4 step {} exceeds stability bound {}", dt, bound)
            }
            OracleError::NegativeInfected { value, time } => {
                write!(f, "negative infected signal {} at t = {}", value, time)
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Orthonormal basis of one region: mode k (0-based) is
/// `sqrt(2/L) sin((k + 1/2) pi s / L)` with `s` the distance from the
/// region's outer end. Every mode vanishes at the outer Dirichlet
/// boundary and has zero slope nowhere enforced at the interface, where
/// it takes the value `sqrt(2/L) (-1)^k`.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    pub n_modes: usize,
    pub region: Region,
    outer: f64,
    length: f64,
}

impl GalerkinBasis {
    pub fn new(cfg: &SimulationConfig, region: Region, n_modes: usize) -> Self {
        let outer = cfg.grid.outer_coord(region);
        let length = cfg.grid.x_interface - cfg.grid.x_left;
        GalerkinBasis {
            n_modes,
            region,
            outer,
            length,
        }
    }

    fn mu(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * std::f64::consts::PI / self.length
    }

    fn s_of_x(&self, x: f64) -> f64 {
        (x - self.outer).abs()
    }

    /// ds/dx: +1 when the outer end is on the left, -1 on the right.
    fn orientation(&self) -> f64 {
        match self.region {
            Region::One => 1.0,
            Region::Two => -1.0,
        }
    }

    pub fn value(&self, k: usize, x: f64) -> f64 {
        let norm = (2.0 / self.length).sqrt();
        norm * (self.mu(k) * self.s_of_x(x)).sin()
    }

    pub fn deriv(&self, k: usize, x: f64) -> f64 {
        let norm = (2.0 / self.length).sqrt();
        norm * self.mu(k) * (self.mu(k) * self.s_of_x(x)).cos() * self.orientation()
    }

    pub fn value_at_interface(&self, k: usize) -> f64 {
        let norm = (2.0 / self.length).sqrt();
        // sin((k + 1/2) pi) = (-1)^k
        norm * if k % 2 == 0 { 1.0 } else { -1.0 }
    }
}

/// Composite 4-point Gauss-Legendre rule over a region.
#[derive(Debug, Clone)]
struct QuadGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const GL4_X: [f64; 4] = [
    -0.8611363115940526,
    -0.33998104358485626,
    0.33998104358485626,
    0.8611363115940526,
];
const GL4_W: [f64; 4] = [
    0.34785484513745385,
    0.6521451548625461,
    0.6521451548625461,
    0.34785484513745385,
];

impl QuadGrid {
    fn new(a: f64, b: f64, cells: usize) -> Self {
        let h = (b - a) / cells as f64;
        let mut nodes = Vec::with_capacity(4 * cells);
        let mut weights = Vec::with_capacity(4 * cells);
        for c in 0..cells {
            let lo = a + c as f64 * h;
            let mid = lo + 0.5 * h;
            for q in 0..4 {
                nodes.push(mid + 0.5 * h * GL4_X[q]);
                weights.push(0.5 * h * GL4_W[q]);
            }
        }
        QuadGrid { nodes, weights }
    }
}

/// Mass matrix, spatial stiffness factor, and (optional) paired cross
/// stiffness of one region. The full stiffness at time t is
/// `kappa(t) * stiffness_spatial`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub mass: Vec<Vec<f64>>,
    pub stiffness: Vec<Vec<f64>>,
}

fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        let v = aug[col][k];
                        aug[row][k] -= f * v;
                    }
                }
            }
        }
    }
    aug.into_iter().map(|row| row[n..].to_vec()).collect()
}

fn matvec_dense(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Mass and stiffness of one region's basis at time `t` by composite
/// Gauss-Legendre quadrature with `quad_cells` panels (4 nodes each).
pub fn assemble_galerkin(
    basis: &GalerkinBasis,
    field: &DiffusionField,
    t: f64,
    quad_cells: usize,
    region_lo: f64,
    region_hi: f64,
) -> GalerkinSystem {
    let quad = QuadGrid::new(region_lo, region_hi, quad_cells);
    let n = basis.n_modes;
    let kappa = field.kappa(t);
    let mut mass = vec![vec![0.0; n]; n];
    let mut stiffness = vec![vec![0.0; n]; n];
    for (&x, &w) in quad.nodes.iter().zip(&quad.weights) {
        let sig = field.spatial(x) * kappa;
        for k in 0..n {
            let vk = basis.value(k, x);
            let dk = basis.deriv(k, x);
            for l in 0..n {
                mass[k][l] += w * vk * basis.value(l, x);
                stiffness[k][l] += w * sig * dk * basis.deriv(l, x);
            }
        }
    }
    GalerkinSystem { mass, stiffness }
}

/// Flat coefficient vector for both regions and all compartments.
#[derive(Debug, Clone)]
pub struct Coeffs {
    pub n_modes: usize,
    pub data: Vec<f64>, // layout: region-major, compartment, mode
}

impl Coeffs {
    fn zeros(n_modes: usize) -> Self {
        Coeffs {
            n_modes,
            data: vec![0.0; 6 * n_modes],
        }
    }

    fn slice(&self, region: Region, c: Compartment) -> &[f64] {
        let base = (region.idx() * 3 + c.idx()) * self.n_modes;
        &self.data[base..base + self.n_modes]
    }

    fn slice_mut(&mut self, region: Region, c: Compartment) -> &mut [f64] {
        let base = (region.idx() * 3 + c.idx()) * self.n_modes;
        &mut self.data[base..base + self.n_modes]
    }

    fn axpy(&mut self, a: f64, other: &Coeffs) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }
}

/// Interface load for one step, frozen across the RK4 stages to mirror
/// the lagged-explicit convention of the main solver.
#[derive(Debug, Clone, Copy)]
struct FrozenInterface {
    mode: InterfaceMode,
    /// Signed alpha per region.
    alpha: [f64; 2],
    /// Other-region boundary values per region per compartment.
    u_other_gamma: [[f64; 3]; 2],
}

/// The assembled oracle: basis tables, projected operators, policy.
pub struct GalerkinOracle {
    cfg: SimulationConfig,
    policy: MobilityPolicy,
    n_modes: usize,
    bases: [GalerkinBasis; 2],
    quads: [QuadGrid; 2],
    /// Basis values at own quadrature nodes: [region][k][q].
    v: [Vec<Vec<f64>>; 2],
    /// Other region's basis values at this region's paired node images.
    v_paired: [Vec<Vec<f64>>; 2],
    /// lambda fields at own nodes and paired images.
    lambda_nodes: [Vec<f64>; 2],
    lambda_paired: [Vec<f64>; 2],
    mass_inv: [Vec<Vec<f64>>; 2],
    mass: [Vec<Vec<f64>>; 2],
    /// Spatial stiffness factor (scale by kappa(t) at use).
    k0: [Vec<Vec<f64>>; 2],
    /// Paired cross stiffness factor (rows: own modes, cols: other's).
    k0_cross: [Vec<Vec<f64>>; 2],
    v_gamma: [Vec<f64>; 2],
    kappa: [KappaFn; 2],
}

#[derive(Debug, Clone, Copy)]
struct KappaFn {
    a: f64,
    t_a: f64,
    constant: bool,
}

impl KappaFn {
    fn eval(&self, t: f64) -> f64 {
        if self.constant {
            1.0
        } else {
            (-self.a * (t - self.t_a)).exp()
        }
    }
}

/// Reconstructed fields on the finite-volume cell centers at one time.
#[derive(Debug, Clone)]
pub struct OracleFrame {
    pub time: f64,
    pub region1: RegionState,
    pub region2: RegionState,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub frames: Vec<OracleFrame>,
    pub dt_used: f64,
    pub stability_bound: f64,
    pub lockdown_days: f64,
}

impl GalerkinOracle {
    pub fn new(cfg: &SimulationConfig, n_modes: usize) -> Result<Self, OracleError> {
        validate_config(cfg).map_err(OracleError::Config)?;
        assert!(n_modes >= 1);
        // Four panels (16 Gauss points) per oscillation of the highest
        // stiffness integrand keeps the refinement check comfortably
        // below its 1e-8 gate.
        let quad_cells = (4 * n_modes).max(32);
        let bases = [
            GalerkinBasis::new(cfg, Region::One, n_modes),
            GalerkinBasis::new(cfg, Region::Two, n_modes),
        ];
        let bounds = [
            (cfg.grid.x_left, cfg.grid.x_interface),
            (cfg.grid.x_interface, cfg.grid.x_right),
        ];
        let quads = [
            QuadGrid::new(bounds[0].0, bounds[0].1, quad_cells),
            QuadGrid::new(bounds[1].0, bounds[1].1, quad_cells),
        ];

        // Refinement check on the projected operators.
        let mut max_delta = 0.0f64;
        for region in Region::BOTH {
            let ri = region.idx();
            let field = DiffusionField::for_region(cfg, region);
            let coarse = assemble_galerkin(
                &bases[ri],
                &field,
                0.0,
                quad_cells,
                bounds[ri].0,
                bounds[ri].1,
            );
            let fine = assemble_galerkin(
                &bases[ri],
                &field,
                0.0,
                2 * quad_cells,
                bounds[ri].0,
                bounds[ri].1,
            );
            for k in 0..n_modes {
                for l in 0..n_modes {
                    max_delta = max_delta
                        .max((coarse.mass[k][l] - fine.mass[k][l]).abs())
                        .max((coarse.stiffness[k][l] - fine.stiffness[k][l]).abs());
                }
            }
        }
        if max_delta > 1e-8 {
            return Err(OracleError::QuadratureUnderResolved { max_delta });
        }

        let pair_shift = [
            cfg.grid.x_interface - cfg.grid.x_left, // region 1 node + L lives in region 2
            cfg.grid.x_left - cfg.grid.x_interface,
        ];

        let mut v: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut dv: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut v_paired: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut dv_paired: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut sigma_nodes: [Vec<f64>; 2] = [vec![], vec![]];
        let mut sigma_paired: [Vec<f64>; 2] = [vec![], vec![]];
        let mut lambda_nodes: [Vec<f64>; 2] = [vec![], vec![]];
        let mut lambda_paired: [Vec<f64>; 2] = [vec![], vec![]];
        let mut mass: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut mass_inv: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut k0: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut k0_cross: [Vec<Vec<f64>>; 2] = [vec![], vec![]];
        let mut v_gamma: [Vec<f64>; 2] = [vec![], vec![]];
        let mut kappa = [
            KappaFn {
                a: 0.0,
                t_a: 0.0,
                constant: true,
            },
            KappaFn {
                a: 0.0,
                t_a: 0.0,
                constant: true,
            },
        ];

        for region in Region::BOTH {
            let ri = region.idx();
            let rj = region.other().idx();
            let field_own = DiffusionField::for_region(cfg, region);
            let field_other = DiffusionField::for_region(cfg, region.other());
            kappa[ri] = KappaFn {
                a: field_own.a,
                t_a: field_own.t_a,
                constant: field_own.constant.is_some(),
            };
            let lam_own = MigrationField::for_region(cfg, region);
            let lam_other = MigrationField::for_region(cfg, region.other());
            let quad = &quads[ri];
            let nq = quad.nodes.len();

            v[ri] = (0..n_modes)
                .map(|k| quad.nodes.iter().map(|&x| bases[ri].value(k, x)).collect())
                .collect();
            dv[ri] = (0..n_modes)
                .map(|k| quad.nodes.iter().map(|&x| bases[ri].deriv(k, x)).collect())
                .collect();
            v_paired[ri] = (0..n_modes)
                .map(|k| {
                    quad.nodes
                        .iter()
                        .map(|&x| bases[rj].value(k, x + pair_shift[ri]))
                        .collect()
                })
                .collect();
            dv_paired[ri] = (0..n_modes)
                .map(|k| {
                    quad.nodes
                        .iter()
                        .map(|&x| bases[rj].deriv(k, x + pair_shift[ri]))
                        .collect()
                })
                .collect();
            sigma_nodes[ri] = quad.nodes.iter().map(|&x| field_own.spatial(x)).collect();
            sigma_paired[ri] = quad
                .nodes
                .iter()
                .map(|&x| field_other.spatial(x + pair_shift[ri]))
                .collect();
            lambda_nodes[ri] = quad.nodes.iter().map(|&x| lam_own.eval(x)).collect();
            lambda_paired[ri] = quad
                .nodes
                .iter()
                .map(|&x| lam_other.eval(x + pair_shift[ri]))
                .collect();

            let mut m = vec![vec![0.0; n_modes]; n_modes];
            let mut k = vec![vec![0.0; n_modes]; n_modes];
            let mut kc = vec![vec![0.0; n_modes]; n_modes];
            for q in 0..nq {
                let w = quad.weights[q];
                for a in 0..n_modes {
                    for b in 0..n_modes {
                        m[a][b] += w * v[ri][a][q] * v[ri][b][q];
                        k[a][b] += w * sigma_nodes[ri][q] * dv[ri][a][q] * dv[ri][b][q];
                        kc[a][b] += w * sigma_paired[ri][q] * dv[ri][a][q] * dv_paired[ri][b][q];
                    }
                }
            }
            mass_inv[ri] = dense_inverse(&m);
            mass[ri] = m;
            k0[ri] = k;
            k0_cross[ri] = kc;
            v_gamma[ri] = (0..n_modes)
                .map(|k| bases[ri].value_at_interface(k))
                .collect();
        }

        Ok(GalerkinOracle {
            cfg: cfg.clone(),
            policy: MobilityPolicy::from_config(cfg),
            n_modes,
            bases,
            quads,
            v,
            v_paired,
            lambda_nodes,
            lambda_paired,
            mass_inv,
            mass,
            k0,
            k0_cross,
            v_gamma,
            kappa,
        })
    }

    pub fn mass_matrix(&self, region: Region) -> &Vec<Vec<f64>> {
        &self.mass[region.idx()]
    }

    /// L2 projection of the initial data: the configured uniform triples,
    /// or an arbitrary profile when `init` is given.
    pub fn project_initial(&self, init: Option<&crate::stepper::InitFn>) -> Coeffs {
        let mut d = Coeffs::zeros(self.n_modes);
        for region in Region::BOTH {
            let ri = region.idx();
            let (s0, i0, r0) = self.cfg.initial.triple(region);
            for (c, u0) in Compartment::ALL.iter().zip([s0, i0, r0]) {
                // rhs_k = <u0, v_k>, coefficients = M^-1 rhs
                let rhs: Vec<f64> = (0..self.n_modes)
                    .map(|k| {
                        self.quads[ri]
                            .weights
                            .iter()
                            .zip(self.quads[ri].nodes.iter())
                            .zip(&self.v[ri][k])
                            .map(|((w, &x), vk)| {
                                let val = match init {
                                    None => u0,
                                    Some(f) => f(region, *c, x),
                                };
                                w * val * vk
                            })
                            .sum()
                    })
                    .collect();
                let coeff = matvec_dense(&self.mass_inv[ri], &rhs);
                d.slice_mut(region, *c).copy_from_slice(&coeff);
            }
        }
        d
    }

    /// Field value series at the quadrature nodes of `region`.
    fn reconstruct_at_nodes(&self, d: &Coeffs, region: Region, c: Compartment) -> Vec<f64> {
        let ri = region.idx();
        let nq = self.quads[ri].nodes.len();
        let coeff = d.slice(region, c);
        let mut out = vec![0.0; nq];
        for k in 0..self.n_modes {
            let vk = &self.v[ri][k];
            let dk = coeff[k];
            for q in 0..nq {
                out[q] += dk * vk[q];
            }
        }
        out
    }

    /// Other-region field values read at this region's paired images.
    fn reconstruct_paired(&self, d: &Coeffs, region: Region, c: Compartment) -> Vec<f64> {
        let ri = region.idx();
        let nq = self.quads[ri].nodes.len();
        let coeff = d.slice(region.other(), c);
        let mut out = vec![0.0; nq];
        for k in 0..self.n_modes {
            let vk = &self.v_paired[ri][k];
            let dk = coeff[k];
            for q in 0..nq {
                out[q] += dk * vk[q];
            }
        }
        out
    }

    fn value_at_gamma(&self, d: &Coeffs, region: Region, c: Compartment) -> f64 {
        let coeff = d.slice(region, c);
        coeff
            .iter()
            .zip(&self.v_gamma[region.idx()])
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Snapshot of the interface load for one step, for use with `rhs`.
    pub fn freeze(&self, d: &Coeffs, mode: InterfaceMode) -> Result<FrozenInterfaceView, OracleError> {
        self.freeze_interface(d, mode).map(FrozenInterfaceView)
    }

    fn freeze_interface(
        &self,
        d: &Coeffs,
        mode: InterfaceMode,
    ) -> Result<FrozenInterface, OracleError> {
        let mut alpha = [0.0; 2];
        let mut u_other = [[0.0; 3]; 2];
        if mode == InterfaceMode::RobinOpen {
            for region in Region::BOTH {
                let ri = region.idx();
                // truncation wiggle can dip slightly negative; the policy
                // argument is clamped like the main solver clamps states
                let i_gamma = self.value_at_gamma(d, region, Compartment::I).max(0.0);
                alpha[ri] = self
                    .policy
                    .signed_alpha(i_gamma, region.other())
                    .expect("clamped above");
                for c in Compartment::ALL {
                    u_other[ri][c.idx()] = self.value_at_gamma(d, region.other(), c);
                }
            }
        }
        Ok(FrozenInterface {
            mode,
            alpha,
            u_other_gamma: u_other,
        })
    }

    /// Time derivative of all coefficients. The interface load is taken
    /// from the frozen snapshot; everything else is evaluated at `d`.
    pub fn rhs(&self, d: &Coeffs, t: f64, iface: &FrozenInterfaceView) -> Coeffs {
        let mut out = Coeffs::zeros(self.n_modes);
        let cross_on = self.cfg.cross_diffusion == CrossDiffusion::Paired;

        for region in Region::BOTH {
            let ri = region.idx();
            let nq = self.quads[ri].nodes.len();
            let kappa_own = self.kappa[ri].eval(t);
            let kappa_other = self.kappa[region.other().idx()].eval(t);

            // Reconstruct everything once.
            let own: [Vec<f64>; 3] =
                Compartment::ALL.map(|c| self.reconstruct_at_nodes(d, region, c));
            let foreign: [Vec<f64>; 3] =
                Compartment::ALL.map(|c| self.reconstruct_paired(d, region, c));
            let n_total: f64 = self.quads[ri]
                .weights
                .iter()
                .enumerate()
                .map(|(q, w)| w * (own[0][q] + own[1][q] + own[2][q]))
                .sum();

            for c in Compartment::ALL {
                let ci = c.idx();
                // Pointwise reaction + exchange load projected onto modes.
                let mut load = vec![0.0; nq];
                for q in 0..nq {
                    let local = [own[0][q], own[1][q], own[2][q]];
                    let other = [foreign[0][q], foreign[1][q], foreign[2][q]];
                    let f = reaction_eval(local, other, n_total, &self.cfg.params, region)[ci];
                    let exch = self.lambda_paired[ri][q] * other[ci]
                        - self.lambda_nodes[ri][q] * local[ci];
                    load[q] = f + exch;
                }
                let mut g: Vec<f64> = (0..self.n_modes)
                    .map(|k| {
                        self.quads[ri]
                            .weights
                            .iter()
                            .enumerate()
                            .map(|(q, w)| w * load[q] * self.v[ri][k][q])
                            .sum()
                    })
                    .collect();

                // Interface boundary load (frozen): -alpha^j(I^i) u^j(G) v_k(G).
                if iface.0.mode == InterfaceMode::RobinOpen {
                    let flux = -iface.0.alpha[ri] * iface.0.u_other_gamma[ri][ci];
                    for k in 0..self.n_modes {
                        g[k] += flux * self.v_gamma[ri][k];
                    }
                }

                // Own diffusion: -kappa K0 d.
                let coeff = d.slice(region, c);
                for (k, row) in self.k0[ri].iter().enumerate() {
                    let mut v = 0.0;
                    for (l, kl) in row.iter().enumerate() {
                        v += kl * coeff[l];
                    }
                    g[k] -= kappa_own * v;
                }

                // Paired cross diffusion: -kappa_j K0_cross d_j.
                if cross_on {
                    let coeff_j = d.slice(region.other(), c);
                    for (k, row) in self.k0_cross[ri].iter().enumerate() {
                        let mut v = 0.0;
                        for (l, kl) in row.iter().enumerate() {
                            v += kl * coeff_j[l];
                        }
                        g[k] -= kappa_other * v;
                    }
                }

                let dd = matvec_dense(&self.mass_inv[ri], &g);
                out.slice_mut(region, c).copy_from_slice(&dd);
            }
        }
        out
    }

    /// Largest eigenvalue estimate of M^-1 K (kappa at its maximum over
    /// the horizon) by power iteration, doubled when cross coupling is on.
    pub fn stiffness_scale(&self) -> f64 {
        let mut bound = 0.0f64;
        for region in Region::BOTH {
            let ri = region.idx();
            let kappa_max = if self.kappa[ri].constant {
                1.0
            } else {
                // kappa is monotone in t: max at an endpoint of [0, T].
                self.kappa[ri]
                    .eval(0.0)
                    .max(self.kappa[ri].eval(self.cfg.t_final))
            };
            let n = self.n_modes;
            let mut x = vec![1.0; n];
            let mut lambda = 0.0;
            for _ in 0..60 {
                let kx = matvec_dense(&self.k0[ri], &x);
                let y = matvec_dense(&self.mass_inv[ri], &kx);
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    break;
                }
                lambda = norm;
                x = y.into_iter().map(|v| v / norm).collect();
            }
            bound = bound.max(lambda * kappa_max);
        }
        if self.cfg.cross_diffusion == CrossDiffusion::Paired {
            bound *= 2.0;
        }
        bound
    }

    fn lockdown_signals(&self, d: &Coeffs) -> (f64, f64) {
        match self.cfg.lockdown_signal {
            LockdownSignal::Interface => (
                self.value_at_gamma(d, Region::One, Compartment::I).max(0.0),
                self.value_at_gamma(d, Region::Two, Compartment::I).max(0.0),
            ),
            LockdownSignal::RegionalTotal => {
                let total = |region: Region| -> f64 {
                    let ri = region.idx();
                    let vals = self.reconstruct_at_nodes(d, region, Compartment::I);
                    self.quads[ri]
                        .weights
                        .iter()
                        .zip(&vals)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
                        .max(0.0)
                };
                (total(Region::One), total(Region::Two))
            }
        }
    }

    /// Integrates the coefficient ODE with classical RK4 and reconstructs
    /// the fields at the finite-volume cell centers at every record time
    /// (multiples of `output_stride * dt` plus the final time, matching
    /// the main solver's frames).
    pub fn run(&self, dt_request: Option<f64>) -> Result<OracleRun, OracleError> {
        self.run_from(None, dt_request)
    }

    /// `run` from an arbitrary initial profile.
    pub fn run_from(
        &self,
        init: Option<&crate::stepper::InitFn>,
        dt_request: Option<f64>,
    ) -> Result<OracleRun, OracleError> {
        let cfg = &self.cfg;
        let bound_rate = self.stiffness_scale().max(1e-12);
        let dt_bound = 0.5 / bound_rate;
        if let Some(dt) = dt_request {
            if dt > dt_bound {
                return Err(OracleError::StiffnessStepTooLarge {
                    dt,
                    bound: dt_bound,
                });
            }
        }

        let record_dt = cfg.dt * cfg.output_stride as f64;
        let n_frames = cfg.n_steps() / cfg.output_stride;
        let mut d = self.project_initial(init);
        let mut ledger = LockdownLedger::new();
        let mut frames = Vec::with_capacity(n_frames + 2);
        frames.push(self.frame(&d, 0.0));

        let mut dt_used = dt_bound;
        let mut t = 0.0;
        let total_steps_time = cfg.t_final;
        if total_steps_time > 0.0 {
            // Walk record interval by record interval so frames land
            // exactly on the solver's frame times.
            let mut emitted = 0usize;
            while emitted < n_frames
                || (emitted == n_frames && cfg.n_steps() % cfg.output_stride != 0)
            {
                let t_target = if emitted < n_frames {
                    (emitted + 1) as f64 * record_dt
                } else {
                    cfg.t_final
                };
                let span = t_target - t;
                let sub = (span / dt_bound).ceil().max(1.0) as usize;
                let h = span / sub as f64;
                dt_used = dt_used.min(h);
                if let Some(req) = dt_request {
                    dt_used = req.min(dt_used);
                }
                for _ in 0..sub {
                    let (sig1, sig2) = self.lockdown_signals(&d);
                    let mode = lockdown_update(&self.policy, sig1, sig2, t, h, &mut ledger);
                    let iface = FrozenInterfaceView(self.freeze_interface(&d, mode)?);

                    let k1 = self.rhs(&d, t, &iface);
                    let mut d2 = d.clone();
                    d2.axpy(0.5 * h, &k1);
                    let k2 = self.rhs(&d2, t + 0.5 * h, &iface);
                    let mut d3 = d.clone();
                    d3.axpy(0.5 * h, &k2);
                    let k3 = self.rhs(&d3, t + 0.5 * h, &iface);
                    let mut d4 = d.clone();
                    d4.axpy(h, &k3);
                    let k4 = self.rhs(&d4, t + h, &iface);

                    d.axpy(h / 6.0, &k1);
                    d.axpy(h / 3.0, &k2);
                    d.axpy(h / 3.0, &k3);
                    d.axpy(h / 6.0, &k4);
                    t += h;
                }
                t = t_target; // kill roundoff drift at frame boundaries
                frames.push(self.frame(&d, t));
                emitted += 1;
                if emitted >= n_frames
                    && (cfg.n_steps() % cfg.output_stride == 0 || t >= cfg.t_final)
                {
                    break;
                }
            }
        }

        Ok(OracleRun {
            frames,
            dt_used,
            stability_bound: dt_bound,
            lockdown_days: ledger.lockdown_days,
        })
    }

    /// Reconstruct a frame on the finite-volume cell centers.
    fn frame(&self, d: &Coeffs, t: f64) -> OracleFrame {
        let n = self.cfg.grid.n_cells_per_region;
        let mut states = Vec::with_capacity(2);
        for region in Region::BOTH {
            let ri = region.idx();
            let centers: Vec<f64> = (0..n)
                .map(|k| self.cfg.grid.cell_center(region, k))
                .collect();
            let mut fields: [Vec<f64>; 3] = Default::default();
            for c in Compartment::ALL {
                let coeff = d.slice(region, c);
                let vals: Vec<f64> = centers
                    .iter()
                    .map(|&x| {
                        (0..self.n_modes)
                            .map(|k| coeff[k] * self.bases[ri].value(k, x))
                            .sum()
                    })
                    .collect();
                fields[c.idx()] = vals;
            }
            let [s, i, r] = fields;
            states.push(RegionState { s, i, r, time: t });
        }
        let region2 = states.pop().unwrap();
        let region1 = states.pop().unwrap();
        OracleFrame {
            time: t,
            region1,
            region2,
        }
    }
}

/// Opaque wrapper so the frozen interface snapshot can cross the public
/// `rhs` signature without exposing its layout.
pub struct FrozenInterfaceView(FrozenInterface);

/// Convenience entry point: build the oracle and integrate.
pub fn run_oracle(cfg: &SimulationConfig, n_modes: usize) -> Result<OracleRun, OracleError> {
    GalerkinOracle::new(cfg, n_modes)?.run(None)
}

/// Relative L2 discrepancy between a solver record and an oracle run
/// over all compartments of both regions at the final common frame.
pub fn relative_l2_discrepancy(
    record: &crate::stepper::SimulationRecord,
    oracle: &OracleRun,
) -> f64 {
    let fa = record.final_frame();
    let fb = oracle.frames.last().expect("oracle emits frames");
    let mut num = 0.0;
    let mut den = 0.0;
    for (sa, sb) in [(&fa.region1, &fb.region1), (&fa.region2, &fb.region2)] {
        for c in Compartment::ALL {
            for (a, b) in sa.field(c).iter().zip(sb.field(c)) {
                num += (a - b) * (a - b);
                den += a * a;
            }
        }
    }
    (num / den.max(1e-300)).sqrt()
}
