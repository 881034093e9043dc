//! Free Heisenberg evolution of the system operators and the Wick contractions
//! built from it.
//!
//! For the spin-boson free Hamiltonian `H₀ = −½Δσ^x + ½εσ^z` the Pauli
//! operators obey `σ̇ = A σ` with
//!
//! ```text
//!     ⎛ 0  −ε  0 ⎞
//! A = ⎜ ε   0  Δ ⎟
//!     ⎝ 0  −Δ  0 ⎠
//! ```
//!
//! so `σ^i(s) = b^i_j(s − t) σ^j(t)` with `b(u) = exp(A u)`, a rotation.
//! For `H₀ = ω₀ σ⁺σ⁻` the pair `(σ^x, σ^y)` rotates at `ω₀`.

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsParams {
    /// Tunnelling frequency Δ.
    pub delta: f64,
    /// Bias ε.
    pub epsilon: f64,
}

impl TlsParams {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        if !(delta.is_finite() && epsilon.is_finite()) {
            return Err(Error::domain(format!("non-finite TLS parameters Δ={delta}, ε={epsilon}")));
        }
        Ok(TlsParams { delta, epsilon })
    }

    /// `ω = sqrt(Δ² + ε²)`.
    pub fn omega(&self) -> f64 {
        self.delta.hypot(self.epsilon)
    }

    /// Generator `A` of the Heisenberg system `σ̇ = A σ`.
    pub fn generator(&self) -> Matrix3<f64> {
        let (d, e) = (self.delta, self.epsilon);
        Matrix3::new(0.0, -e, 0.0, e, 0.0, d, 0.0, -d, 0.0)
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Step function with the symmetric convention `θ(0) = ½`.
pub fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Closed-form `b(u)`; rows are `x, y, z`.
pub fn tls_propagator(p: &TlsParams, u: f64) -> Matrix3<f64> {
    let (d, e) = (p.delta, p.epsilon);
    let w = p.omega();
    // (cos ωu − 1)/ω² and sin(ωu)/ω, both regular as ω → 0
    let q = -0.5 * u * u * sinc(0.5 * w * u).powi(2);
    let s = u * sinc(w * u);
    let c = (w * u).cos();
    Matrix3::new(
        1.0 + e * e * q,
        -e * s,
        d * e * q,
        e * s,
        c,
        d * s,
        d * e * q,
        -d * s,
        1.0 + d * d * q,
    )
}

/// `{σ^z(s1), σ^z(s2)}` as a c-number, with operators expressed at `t_ref`.
pub fn anticommutator(p: &TlsParams, s1: f64, s2: f64, t_ref: f64) -> f64 {
    let b1 = tls_propagator(p, s1 - t_ref);
    let b2 = tls_propagator(p, s2 - t_ref);
    2.0 * (0..3).map(|i| b1[(2, i)] * b2[(2, i)]).sum::<f64>()
}

/// Wick contraction `−{σ^z(s1), σ^z(s2)} θ(s2 − s1)`.
pub fn contraction(p: &TlsParams, s1: f64, s2: f64, t_ref: f64) -> f64 {
    -anticommutator(p, s1, s2, t_ref) * step(s2 - s1)
}

/// Rotation of `(σ^x, σ^y)` generated by `ω₀ σ⁺σ⁻`.
pub fn jc_propagator(omega0: f64, u: f64) -> Matrix2<f64> {
    let (s, c) = (omega0 * u).sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `{σ^i(s1), σ^j(s2)}` for `i, j ∈ {x, y}`, operators expressed at `t_ref`.
pub fn jc_anticommutator(omega0: f64, s1: f64, s2: f64, t_ref: f64) -> Matrix2<f64> {
    let r1 = jc_propagator(omega0, s1 - t_ref);
    let r2 = jc_propagator(omega0, s2 - t_ref);
    2.0 * r1 * r2.transpose()
}

/// Matrix contraction `−{σ^i(s1), σ^j(s2)} θ(s2 − s1)`.
pub fn jc_contraction_matrix(omega0: f64, s1: f64, s2: f64) -> Matrix2<f64> {
    -jc_anticommutator(omega0, s1, s2, s2) * step(s2 - s1)
}

/// Free evolution of the operators the bath couples to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreeEvolution {
    SpinBoson(TlsParams),
    JaynesCummings { omega0: f64 },
}

impl FreeEvolution {
    /// Number of coupled operator components (1 for `σ^z`, 2 for `σ^x, σ^y`).
    pub fn coupled_dim(&self) -> usize {
        match self {
            FreeEvolution::SpinBoson(_) => 1,
            FreeEvolution::JaynesCummings { .. } => 2,
        }
    }

    /// Number of components `j` in `σ^i(s) = b^i_j(s − t) σ^j(t)`.
    pub fn target_dim(&self) -> usize {
        match self {
            FreeEvolution::SpinBoson(_) => 3,
            FreeEvolution::JaynesCummings { .. } => 2,
        }
    }

    /// Rows of the propagator belonging to the coupled operators, row-major
    /// `coupled_dim × target_dim`.
    pub fn coupled_rows(&self, u: f64) -> Vec<f64> {
        match self {
            FreeEvolution::SpinBoson(p) => {
                let b = tls_propagator(p, u);
                vec![b[(2, 0)], b[(2, 1)], b[(2, 2)]]
            }
            FreeEvolution::JaynesCummings { omega0 } => {
                let r = jc_propagator(*omega0, u);
                vec![r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]]
            }
        }
    }

    /// Anticommutator block of the coupled operators (before the θ gate),
    /// row-major `coupled_dim²`.
    pub fn anticommutator_block(&self, s1: f64, s2: f64) -> Vec<f64> {
        match self {
            FreeEvolution::SpinBoson(p) => vec![anticommutator(p, s1, s2, s2)],
            FreeEvolution::JaynesCummings { omega0 } => {
                let m = jc_anticommutator(*omega0, s1, s2, s2);
                vec![m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
            }
        }
    }
}

/// Coupled-operator propagator rows sampled at `u = −t_k` (i.e. `s − t` for
/// grid nodes `s <= t`).
#[derive(Debug, Clone)]
pub struct PropagatorTable {
    evolution: FreeEvolution,
    grid: TimeGrid,
    samples: Vec<f64>,
}

impl PropagatorTable {
    pub fn new(evolution: FreeEvolution, grid: TimeGrid) -> Self {
        let samples = (0..grid.len())
            .flat_map(|k| evolution.coupled_rows(-grid.node(k)))
            .collect();
        PropagatorTable {
            evolution,
            grid,
            samples,
        }
    }

    pub fn evolution(&self) -> &FreeEvolution {
        &self.evolution
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Rows at lag `u = −t_k`.
    pub fn rows_at_lag(&self, k: usize) -> &[f64] {
        let len = self.evolution.coupled_dim() * self.evolution.target_dim();
        &self.samples[k * len..(k + 1) * len]
    }

    /// Closed-form evaluation at arbitrary `u`.
    pub fn evaluate(&self, u: f64) -> Vec<f64> {
        self.evolution.coupled_rows(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identity_at_zero_lag() {
        let p = TlsParams::new(3.0, -2.0).unwrap();
        assert_eq!(tls_propagator(&p, 0.0), Matrix3::identity());
        assert_eq!(jc_propagator(4.0, 0.0), Matrix2::identity());
    }

    #[test]
    fn fig1_parameters_give_half_weight() {
        let p = TlsParams::new(10.0, 10.0).unwrap();
        assert!((p.omega() - 200f64.sqrt()).abs() < 1e-12);
        for u in [0.01, -0.3, 1.7] {
            let b = tls_propagator(&p, u);
            let expect = 1.0 + 0.5 * ((p.omega() * u).cos() - 1.0);
            assert!((b[(2, 2)] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn pure_dephasing_leaves_z_fixed() {
        let p = TlsParams::new(0.0, 7.0).unwrap();
        for u in [-2.0, 0.4, 11.0] {
            let b = tls_propagator(&p, u);
            assert_eq!(b[(2, 0)], 0.0);
            assert_eq!(b[(2, 1)], 0.0);
            assert_eq!(b[(2, 2)], 1.0);
        }
    }

    #[test]
    fn small_omega_limit_is_continuous() {
        let p = TlsParams::new(1e-8, 0.0).unwrap();
        let b = tls_propagator(&p, 3.0);
        assert!((b - Matrix3::identity()).amax() < 1e-6);
        let zero = TlsParams::new(0.0, 0.0).unwrap();
        assert_eq!(tls_propagator(&zero, 5.0), Matrix3::identity());
    }

    #[test]
    fn contraction_gating_and_equal_time_value() {
        let p = TlsParams::new(10.0, 10.0).unwrap();
        assert_eq!(contraction(&p, 0.5, 0.2, 0.0), 0.0);
        assert!((contraction(&p, 0.3, 0.3, 1.0) + 1.0).abs() < 1e-14);
        let delta = 1e-9;
        assert!((contraction(&p, 0.3 - delta, 0.3, 0.0) + 2.0).abs() < 1e-7);
    }

    #[test]
    fn jc_half_rotation_and_contraction() {
        let w0 = 2.5;
        let r = jc_propagator(w0, PI / w0);
        assert!((r + Matrix2::identity()).amax() < 1e-15);
        let c = jc_contraction_matrix(w0, 0.7, 0.7);
        assert!((c[(0, 0)] + 1.0).abs() < 1e-15 && (c[(1, 1)] + 1.0).abs() < 1e-15);
        assert!(c[(0, 1)].abs() < 1e-15);
        assert_eq!(jc_contraction_matrix(w0, 0.9, 0.2), Matrix2::zeros());
    }

    #[test]
    fn table_matches_closed_form() {
        let grid = TimeGrid::new(1.0, 11).unwrap();
        let evo = FreeEvolution::SpinBoson(TlsParams::new(1.0, 2.0).unwrap());
        let table = PropagatorTable::new(evo, grid);
        assert_eq!(table.rows_at_lag(4), evo.coupled_rows(-0.4).as_slice());
        assert_eq!(table.evaluate(0.0), vec![0.0, 0.0, 1.0]);
    }
}
