//! Finite-volume diffusion operators: face fluxes, per-region stiffness
//! matrices, outer Dirichlet closure, and the switching interface flux.

use crate::coefficients::DiffusionField;
use crate::model::{Region, RegionState, TwoRegionGrid};
use crate::policy::{InterfaceMode, MobilityPolicy, NegativeInfected};

/// Tridiagonal matrix. `sub` and `sup` have length n-1.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn zero(n: usize) -> Self {
        TridiagonalMatrix {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        m.diag.fill(1.0);
        m
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for k in 0..n {
            let mut v = self.diag[k] * x[k];
            if k > 0 {
                v += self.sub[k - 1] * x[k - 1];
            }
            if k + 1 < n {
                v += self.sup[k] * x[k + 1];
            }
            y[k] = v;
        }
        y
    }

    /// `I + scale * self`, the implicit-Euler system matrix.
    pub fn shifted_identity(&self, scale: f64) -> TridiagonalMatrix {
        TridiagonalMatrix {
            sub: self.sub.iter().map(|v| scale * v).collect(),
            diag: self.diag.iter().map(|v| 1.0 + scale * v).collect(),
            sup: self.sup.iter().map(|v| scale * v).collect(),
        }
    }

    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.n();
        (0..n).all(|k| {
            let mut off = 0.0;
            if k > 0 {
                off += self.sub[k - 1].abs();
            }
            if k + 1 < n {
                off += self.sup[k].abs();
            }
            self.diag[k].abs() > off
        })
    }
}

/// Diffusive flux through one face: `sigma_face * (u_right - u_left) / dx`.
/// Zero whenever the face coefficient degenerates.
pub fn face_flux(sigma_face: f64, u_left: f64, u_right: f64, dx: f64) -> f64 {
    sigma_face * (u_right - u_left) / dx
}

/// Face coefficients of one region at time `t`: `n + 1` values, face 0
/// at the region's left boundary. The spatial profile is evaluated at
/// the exact face coordinates, so a degenerate profile yields exactly
/// zero at the outer boundary face.
pub fn face_sigmas(
    grid: &TwoRegionGrid,
    field: &DiffusionField,
    t: f64,
    region: Region,
) -> Vec<f64> {
    let n = grid.n_cells_per_region;
    let kappa = field.kappa(t);
    (0..=n)
        .map(|j| field.spatial(grid.face_coord(region, j)) * kappa)
        .collect()
}

/// Stiffness matrix K from interior-face fluxes only, sign convention
/// `du/dt + K u = rhs`: row k carries `-sigma_{k-1/2}/dx^2`,
/// `(sigma_{k-1/2} + sigma_{k+1/2})/dx^2`, `-sigma_{k+1/2}/dx^2`.
/// Boundary faces (0 and n) contribute nothing here; closures add them.
pub fn assemble_diffusion(face_sigma: &[f64], dx: f64) -> TridiagonalMatrix {
    let n = face_sigma.len() - 1;
    let inv_dx2 = 1.0 / (dx * dx);
    let mut m = TridiagonalMatrix::zero(n);
    for j in 1..n {
        // interior face j between cells j-1 and j
        let w = face_sigma[j] * inv_dx2;
        m.diag[j - 1] += w;
        m.diag[j] += w;
        m.sub[j - 1] -= w;
        m.sup[j - 1] -= w;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Homogeneous Dirichlet closure at a region's outer face: the boundary
/// value 0 sits on the face, half a cell from the adjacent center, so
/// the ghost flux adds `2 sigma_face / dx^2` to that row's diagonal.
/// With a degenerate face coefficient the closure contributes nothing
/// and the boundary flux is exactly zero.
pub fn boundary_closure_outer(m: &mut TridiagonalMatrix, side: Side, sigma_face: f64, dx: f64) {
    let n = m.n();
    let w = 2.0 * sigma_face / (dx * dx);
    match side {
        Side::Left => m.diag[0] += w,
        Side::Right => m.diag[n - 1] += w,
    }
}

/// Fully closed per-region diffusion operator: interior stencil plus the
/// outer Dirichlet closure. The interface face is left open; its flux is
/// imposed explicitly on the right-hand side.
pub fn region_diffusion_matrix(
    grid: &TwoRegionGrid,
    field: &DiffusionField,
    t: f64,
    region: Region,
) -> TridiagonalMatrix {
    let sigmas = face_sigmas(grid, field, t, region);
    let mut m = assemble_diffusion(&sigmas, grid.dx);
    match region {
        Region::One => boundary_closure_outer(&mut m, Side::Left, sigmas[0], grid.dx),
        Region::Two => {
            let n = grid.n_cells_per_region;
            boundary_closure_outer(&mut m, Side::Right, sigmas[n], grid.dx)
        }
    }
    m
}

/// Signed diffusive flux through a region's outer face for a given
/// state, under the Dirichlet ghost closure. Exactly zero when the face
/// coefficient is zero.
pub fn outer_face_flux(
    grid: &TwoRegionGrid,
    field: &DiffusionField,
    t: f64,
    region: Region,
    state: &RegionState,
) -> [f64; 3] {
    let n = grid.n_cells_per_region;
    let j = match region {
        Region::One => 0,
        Region::Two => n,
    };
    let sigma = field.spatial(grid.face_coord(region, j)) * field.kappa(t);
    let cell = match region {
        Region::One => 0,
        Region::Two => n - 1,
    };
    let mut out = [0.0; 3];
    for (ci, c) in crate::model::Compartment::ALL.iter().enumerate() {
        // ghost value 0 at distance dx/2
        out[ci] = sigma * (0.0 - state.field(*c)[cell]) / (grid.dx / 2.0);
    }
    out
}

/// Interface flux state for one region at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceFluxState {
    /// Signed mobility rate alpha^j(I^i) entering this region's flux.
    pub alpha_value: f64,
    pub mode: InterfaceMode,
}

impl InterfaceFluxState {
    pub fn closed() -> Self {
        InterfaceFluxState {
            alpha_value: 0.0,
            mode: InterfaceMode::NeumannClosed,
        }
    }
}

/// Replaces the diffusive flux through the interface for region `i` by
/// the Robin value `-alpha^j(I^i_G) * u^j_G` per compartment, where
/// `I^i_G` is region i's infected level at its interface-adjacent cell
/// and `u^j_G` is region j's field there. Under lockdown the flux is
/// exactly zero. Returns the flux *into* region i per compartment.
pub fn interface_closure(
    grid: &TwoRegionGrid,
    state_i: &RegionState,
    state_j: &RegionState,
    region_i: Region,
    policy: &MobilityPolicy,
    mode: InterfaceMode,
) -> Result<([f64; 3], InterfaceFluxState), NegativeInfected> {
    if mode == InterfaceMode::NeumannClosed {
        return Ok(([0.0; 3], InterfaceFluxState::closed()));
    }
    let gi = grid.gamma_cell(region_i);
    let gj = grid.gamma_cell(region_i.other());
    let i_gamma = state_i.i[gi];
    let alpha = policy.signed_alpha(i_gamma, region_i.other())?;
    let u_j = state_j.cell(gj);
    let flux = [-alpha * u_j[0], -alpha * u_j[1], -alpha * u_j[2]];
    Ok((
        flux,
        InterfaceFluxState {
            alpha_value: alpha,
            mode,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::DiffusionField;
    use crate::model::{AlphaForm, LockdownSignal, Region, RegionState, TwoRegionGrid};
    use crate::policy::MobilityPolicy;
    use proptest::prelude::*;

    fn grid4() -> TwoRegionGrid {
        TwoRegionGrid::new(0.0, 1.0, 2.0, 4).unwrap()
    }

    #[test]
    fn face_flux_cases() {
        assert_eq!(face_flux(0.0, 1.0, 5.0, 0.1), 0.0);
        assert_eq!(face_flux(0.01, 2.0, 2.0, 0.1), 0.0);
        // Scalar oracle: 0.01 * (2 - 1) * 302 = 3.02.
        let f = face_flux(0.01, 1.0, 2.0, 1.0 / 302.0);
        assert!((f - 3.02).abs() < 1e-12);
    }

    #[test]
    fn constant_sigma_gives_classic_stencil() {
        let c = 0.7;
        let dx = 0.25;
        let sigmas = vec![c; 5];
        let m = assemble_diffusion(&sigmas, dx);
        let w = c / (dx * dx);
        // interior row 1: (-c, 2c, -c)/dx^2
        assert!((m.sub[0] + w).abs() < 1e-15);
        assert!((m.diag[1] - 2.0 * w).abs() < 1e-15);
        assert!((m.sup[1] + w).abs() < 1e-15);
        // end rows see only their single interior face before closure
        assert!((m.diag[0] - w).abs() < 1e-15);
        assert!((m.diag[3] - w).abs() < 1e-15);
    }

    #[test]
    fn zero_sigma_gives_zero_matrix() {
        let m = assemble_diffusion(&[0.0; 9], 0.1);
        assert!(m.diag.iter().all(|&v| v == 0.0));
        assert!(m.sub.iter().all(|&v| v == 0.0));
        assert!(m.sup.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn interior_row_sums_vanish_for_any_profile() {
        let sigmas: Vec<f64> = (0..9)
            .map(|j| 0.01 + 0.002 * (j as f64).sin().abs())
            .collect();
        let m = assemble_diffusion(&sigmas, 0.125);
        for k in 1..m.n() - 1 {
            let row_sum = m.sub[k - 1] + m.diag[k] + m.sup[k];
            assert!(row_sum.abs() < 1e-10, "row {}: {}", k, row_sum);
        }
    }

    #[test]
    fn dirichlet_closure_against_dense_oracle_n4() {
        // Dense 4x4 oracle built row by row from the two-point fluxes,
        // constant sigma, ghost value at distance dx/2 on the left face.
        let c = 0.3;
        let dx = 0.25;
        let inv = 1.0 / (dx * dx);
        let mut dense = [[0.0f64; 4]; 4];
        // left boundary row: flux_left = c*(0 - u0)/(dx/2), flux_right = c*(u1-u0)/dx
        dense[0][0] = 2.0 * c * inv + c * inv;
        dense[0][1] = -c * inv;
        for k in 1..3 {
            dense[k][k - 1] = -c * inv;
            dense[k][k] = 2.0 * c * inv;
            dense[k][k + 1] = -c * inv;
        }
        // right row: interface side open (no contribution)
        dense[3][2] = -c * inv;
        dense[3][3] = c * inv;

        let sigmas = vec![c; 5];
        let mut m = assemble_diffusion(&sigmas, dx);
        boundary_closure_outer(&mut m, Side::Left, sigmas[0], dx);
        // boundary diag = 3c/dx^2 under the ghost convention
        assert!((m.diag[0] - 3.0 * c * inv).abs() < 1e-12);
        for k in 0..4 {
            let sub = if k > 0 { m.sub[k - 1] } else { 0.0 };
            let sup = if k < 3 { m.sup[k] } else { 0.0 };
            let row = [
                if k > 0 { dense[k][k - 1] } else { 0.0 },
                dense[k][k],
                if k < 3 { dense[k][k + 1] } else { 0.0 },
            ];
            assert!((sub - row[0]).abs() < 1e-12);
            assert!((m.diag[k] - row[1]).abs() < 1e-12);
            assert!((sup - row[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_outer_face_closure_is_inert() {
        let sigmas = vec![0.0, 0.5, 0.5, 0.5, 0.5];
        let dx = 0.25;
        let mut m = assemble_diffusion(&sigmas, dx);
        let before = m.diag[0];
        boundary_closure_outer(&mut m, Side::Left, sigmas[0], dx);
        assert_eq!(m.diag[0], before);
    }

    #[test]
    fn region_matrices_use_exact_face_coordinates() {
        let grid = grid4();
        let field = DiffusionField::parabolic(0.01, 0.01, 50.0, 0.0, 2.0);
        let s1 = face_sigmas(&grid, &field, 50.0, Region::One);
        let s2 = face_sigmas(&grid, &field, 50.0, Region::Two);
        assert_eq!(s1[0], 0.0, "outer face of region one is degenerate");
        assert_eq!(s2[4], 0.0, "outer face of region two is degenerate");
        assert!((s1[4] - 0.01).abs() < 1e-15, "interface face peaks");
        assert_eq!(s1[4], s2[0]);
    }

    #[test]
    fn implicit_matrix_is_strictly_diagonally_dominant() {
        let grid = TwoRegionGrid::new(0.0, 1.0, 2.0, 32).unwrap();
        let field = DiffusionField::parabolic(0.2, 0.01, 50.0, 0.0, 2.0);
        for region in Region::BOTH {
            let k = region_diffusion_matrix(&grid, &field, 10.0, region);
            let sys = k.shifted_identity(0.0125);
            assert!(sys.is_strictly_diagonally_dominant());
        }
    }

    fn open_policy() -> MobilityPolicy {
        MobilityPolicy {
            alpha_form: AlphaForm::RationalDecay,
            i_threshold: [0.5, 0.5],
            lockdown_trigger: f64::INFINITY,
            alpha_floor: 0.0,
            reopen_delay: 0.0,
            lockdown_signal: LockdownSignal::Interface,
        }
    }

    #[test]
    fn interface_flux_vanishes_for_large_infected() {
        let grid = grid4();
        let policy = open_policy();
        let mut s1 = RegionState::uniform(4, 1.0, 0.0, 0.0, 0.0);
        s1.i[3] = 1e6; // region one's interface cell
        let s2 = RegionState::uniform(4, 1.0, 0.0, 0.0, 0.0);
        let (flux, st) = interface_closure(
            &grid,
            &s1,
            &s2,
            Region::One,
            &policy,
            InterfaceMode::RobinOpen,
        )
        .unwrap();
        assert!(st.alpha_value.abs() < 1e-11);
        assert!(flux.iter().all(|f| f.abs() < 1e-11));
    }

    #[test]
    fn interface_flux_zero_when_other_side_empty() {
        let grid = grid4();
        let policy = open_policy();
        let s1 = RegionState::uniform(4, 1.0, 0.2, 0.0, 0.0);
        let s2 = RegionState::uniform(4, 0.0, 0.0, 0.0, 0.0);
        let (flux, _) = interface_closure(
            &grid,
            &s1,
            &s2,
            Region::One,
            &policy,
            InterfaceMode::RobinOpen,
        )
        .unwrap();
        assert_eq!(flux, [0.0; 3]);
    }

    #[test]
    fn interface_sign_uses_geq_at_threshold() {
        let grid = grid4();
        let policy = open_policy();
        let mut s1 = RegionState::uniform(4, 1.0, 0.0, 0.0, 0.0);
        s1.i[3] = 0.5; // exactly at region two's threshold
        let s2 = RegionState::uniform(4, 2.0, 0.0, 0.0, 0.0);
        let (flux, st) = interface_closure(
            &grid,
            &s1,
            &s2,
            Region::One,
            &policy,
            InterfaceMode::RobinOpen,
        )
        .unwrap();
        assert!(st.alpha_value > 0.0, "positive branch at I == threshold");
        // outflow from region one: -alpha * u2
        assert!(flux[0] < 0.0);
    }

    #[test]
    fn closed_interface_fluxes_are_exactly_zero() {
        let grid = grid4();
        let policy = open_policy();
        let s1 = RegionState::uniform(4, 1.0, 3.0, 0.5, 0.0);
        let s2 = RegionState::uniform(4, 2.0, 1.0, 0.25, 0.0);
        let (flux, st) = interface_closure(
            &grid,
            &s1,
            &s2,
            Region::One,
            &policy,
            InterfaceMode::NeumannClosed,
        )
        .unwrap();
        assert_eq!(flux, [0.0; 3]);
        assert_eq!(st.mode, InterfaceMode::NeumannClosed);
    }

    proptest! {
        /// Per-face coefficients give a symmetric matrix: sub_k == sup_k.
        #[test]
        fn assembly_is_symmetric(
            sigmas in prop::collection::vec(0.0..1.0f64, 3..40),
        ) {
            let m = assemble_diffusion(&sigmas, 0.01);
            for k in 0..m.n() - 1 {
                prop_assert_eq!(m.sub[k], m.sup[k]);
            }
        }

        /// With both boundary faces degenerate, K has exact zero row sums,
        /// so pure implicit diffusion conserves the discrete mass.
        #[test]
        fn closed_operator_conserves_mass(
            interior in prop::collection::vec(1e-4..1.0f64, 2..30),
        ) {
            let mut sigmas = vec![0.0];
            sigmas.extend(interior.iter());
            sigmas.push(0.0);
            let n = sigmas.len() - 1;
            let dx = 1.0 / n as f64;
            let m = assemble_diffusion(&sigmas, dx);
            let u: Vec<f64> = (0..n).map(|k| 0.5 + (k as f64 * 1.7).sin().abs()).collect();
            let ku = m.matvec(&u);
            let total: f64 = ku.iter().sum();
            let scale: f64 = ku.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(total.abs() <= 1e-12 * scale);
        }
    }
}
