//! Nonlinear reaction terms and the linear migration exchange operator.

use crate::model::{EpidemicParams, Region};

/// SIR reaction rates of one cell of region `region`, given the local
/// (s, i, r) triple, the paired cell of the other region, and the total
/// population measure of the local region:
///
/// dS = Lambda_i N_i - mu_S S - (beta_i I + beta_ij I_f) S
/// dI = (beta_i I + beta_ij I_f) S - (gamma_i + mu_I) I
/// dR = gamma_i I - mu_R R
pub fn reaction_eval(
    local: [f64; 3],
    foreign: [f64; 3],
    n_total_local: f64,
    p: &EpidemicParams,
    region: Region,
) -> [f64; 3] {
    let [s, i, r] = local;
    let i_f = foreign[1];
    let infection = (p.beta_local(region) * i + p.beta_cross(region) * i_f) * s;
    let ds = p.birth_rate(region) * n_total_local - p.mu_s * s - infection;
    let di = infection - (p.gamma(region) + p.mu_i) * i;
    let dr = p.gamma(region) * i - p.mu_r * r;
    [ds, di, dr]
}

/// Componentwise migration exchange between paired cells:
/// gain into region 1 is `lam2 * u2 - lam1 * u1`, gain into region 2 is
/// its exact negation, so the two-region total is conserved bitwise.
pub fn exchange_eval(u1: [f64; 3], u2: [f64; 3], lam1: f64, lam2: f64) -> ([f64; 3], [f64; 3]) {
    let mut gain1 = [0.0; 3];
    let mut gain2 = [0.0; 3];
    for c in 0..3 {
        let g = lam2 * u2[c] - lam1 * u1[c];
        gain1[c] = g;
        gain2[c] = -g;
    }
    (gain1, gain2)
}

/// Spatial correspondence between the regions: the cell at the same
/// offset from each region's own left end. An involution.
pub fn pair_cells(n_cells_per_region: usize, k: usize) -> Result<usize, IndexOutOfRange> {
    if k < n_cells_per_region {
        Ok(k)
    } else {
        Err(IndexOutOfRange {
            index: k,
            len: n_cells_per_region,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexOutOfRange {
    pub index: usize,
    pub len: usize,
}

impl std::fmt::Display for IndexOutOfRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cell index {} outside 0..{}", self.index, self.len)
    }
}

impl std::error::Error for IndexOutOfRange {}
