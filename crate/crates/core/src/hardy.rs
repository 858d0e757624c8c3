//! Hardy-type nonlocality check on two-qubit states with real (planar)
//! measurement settings.
//!
//! A setting is an angle `θ`: outcome `+` is `cos θ|0> + sin θ|1>` and `−` is
//! `−sin θ|0> + cos θ|1>`, where `|0>`, `|1>` are the first and second label
//! of each qubit. A witness needs
//! `P(A2=+,B2=+) = P(A1=+,B2=−) = P(A2=−,B1=+) = 0` while `P(A1=+,B1=+) > 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{SpaceRegistry, StateVector, Subsystem};
use crate::{EPS, ZERO_TOL};

/// Residual bound used while searching.
pub const SEARCH_TOL: f64 = 1e-6;

/// Setting angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HardySettings {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl HardySettings {
    pub fn from_degrees(a1: f64, a2: f64, b1: f64, b2: f64) -> Self {
        HardySettings {
            a1: a1.to_radians(),
            a2: a2.to_radians(),
            b1: b1.to_radians(),
            b2: b2.to_radians(),
        }
    }

    /// Same settings with the two sides exchanged.
    pub fn swapped(&self) -> Self {
        HardySettings {
            a1: self.b1,
            a2: self.b2,
            b1: self.a1,
            b2: self.a2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyResult {
    pub settings: HardySettings,
    /// `P(A1=+, B1=+)`.
    pub joint_probability: f64,
    /// `P(A1=+, B2=−)`, `P(A2=−, B1=+)`, `P(A2=+, B2=+)`.
    pub constraint_residuals: [f64; 3],
}

impl HardyResult {
    pub fn is_witness(&self) -> bool {
        self.constraint_residuals.iter().all(|r| *r <= EPS) && self.joint_probability > ZERO_TOL
    }
}

fn outcome_vector(angle: f64, plus: bool) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    if plus {
        [c, s]
    } else {
        [-s, c]
    }
}

fn amplitudes(state: &StateVector) -> Result<[Complex64; 4]> {
    let reg = state.registry();
    if reg.len() != 2 || reg.dims() != [2, 2] {
        return Err(Error::Hardy(format!(
            "expected two qubits, got dimensions {:?}",
            reg.dims()
        )));
    }
    let a = state.amplitudes();
    let n = state.norm();
    if n < ZERO_TOL {
        return Err(Error::ZeroVector);
    }
    Ok([a[0] / n, a[1] / n, a[2] / n, a[3] / n])
}

fn joint(psi: &[Complex64; 4], a: [f64; 2], b: [f64; 2]) -> f64 {
    (psi[0] * a[0] * b[0] + psi[1] * a[0] * b[1] + psi[2] * a[1] * b[0] + psi[3] * a[1] * b[1])
        .norm_sqr()
}

fn evaluate(psi: &[Complex64; 4], s: HardySettings) -> HardyResult {
    let v = outcome_vector;
    HardyResult {
        settings: s,
        joint_probability: joint(psi, v(s.a1, true), v(s.b1, true)),
        constraint_residuals: [
            joint(psi, v(s.a1, true), v(s.b2, false)),
            joint(psi, v(s.a2, false), v(s.b1, true)),
            joint(psi, v(s.a2, true), v(s.b2, true)),
        ],
    }
}

pub fn hardy_probability(state: &StateVector, settings: &HardySettings) -> Result<HardyResult> {
    Ok(evaluate(&amplitudes(state)?, *settings))
}

/// Angles of real unit vectors `x` minimizing `|x · phi|²`; every grid angle
/// when the minimum is degenerate.
fn orthogonal_angles(phi: [Complex64; 2], grid: &[f64]) -> Vec<f64> {
    let p = phi[0].norm_sqr();
    let r = phi[1].norm_sqr();
    let q = (phi[0] * phi[1].conj()).re;
    if (p - r).powi(2) + 4.0 * q * q <= ZERO_TOL * ZERO_TOL {
        return grid.to_vec();
    }
    let major = 0.5 * (2.0 * q).atan2(p - r);
    vec![(major + PI / 2.0).rem_euclid(PI)]
}

/// Side-2 vector left after projecting side 1 onto `a`.
fn reduce_first(psi: &[Complex64; 4], a: [f64; 2]) -> [Complex64; 2] {
    [psi[0] * a[0] + psi[2] * a[1], psi[1] * a[0] + psi[3] * a[1]]
}

/// Side-1 vector left after projecting side 2 onto `b`.
fn reduce_second(psi: &[Complex64; 4], b: [f64; 2]) -> [Complex64; 2] {
    [psi[0] * b[0] + psi[1] * b[1], psi[2] * b[0] + psi[3] * b[1]]
}

/// Best witness over planar settings.
///
/// `A2` runs over the grid `0, step, 2·step, … < 180°`. For each value the
/// three zero constraints fix `B2`, then `A1` and `B1` (falling back to the
/// grid when a constraint leaves a setting free). Ties keep the earliest
/// candidate in `(A2, B2, A1, B1)` order. A best value below the zero
/// threshold is reported as exactly 0.
pub fn hardy_search(state: &StateVector, resolution_deg: f64) -> Result<HardyResult> {
    if !(resolution_deg > 0.0 && resolution_deg <= 10.0) {
        return Err(Error::Hardy(format!(
            "grid resolution {resolution_deg}° outside (0°, 10°]"
        )));
    }
    let psi = amplitudes(state)?;
    let n = (180.0 / resolution_deg).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * PI / n as f64).collect();

    let mut best: Option<HardyResult> = None;
    let mut first_feasible: Option<HardyResult> = None;
    for &a2 in &grid {
        let v = outcome_vector;
        for b2 in orthogonal_angles(reduce_first(&psi, v(a2, true)), &grid) {
            for a1 in orthogonal_angles(reduce_second(&psi, v(b2, false)), &grid) {
                for b1 in orthogonal_angles(reduce_first(&psi, v(a2, false)), &grid) {
                    let r = evaluate(&psi, HardySettings { a1, a2, b1, b2 });
                    if r.constraint_residuals.iter().any(|x| *x > SEARCH_TOL) {
                        continue;
                    }
                    first_feasible.get_or_insert(r);
                    if best.is_none_or(|b| r.joint_probability > b.joint_probability) {
                        best = Some(r);
                    }
                }
            }
        }
    }
    Ok(match best {
        Some(b) if b.joint_probability >= ZERO_TOL => b,
        _ => {
            let mut r = first_feasible.unwrap_or_else(|| evaluate(&psi, HardySettings::default()));
            r.joint_probability = 0.0;
            r
        }
    })
}

fn qubit_pair() -> Arc<SpaceRegistry> {
    Arc::new(
        SpaceRegistry::new(vec![
            Subsystem::new("a", ["u", "d"]),
            Subsystem::new("b", ["u", "d"]),
        ])
        .expect("static registry"),
    )
}

/// `cos θ|uu> + sin θ|dd>` on qubits `a`, `b`.
pub fn schmidt_state(theta: f64) -> StateVector {
    let (s, c) = theta.sin_cos();
    let amps = [c, 0.0, 0.0, s]
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    StateVector::from_amplitudes(qubit_pair(), amps).expect("static dimensions")
}

pub fn singlet_state() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = [0.0, s, -s, 0.0]
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    StateVector::from_amplitudes(qubit_pair(), amps).expect("static dimensions")
}

/// Exchanges the two qubits of a two-qubit state.
pub fn swap_qubits(state: &StateVector) -> Result<StateVector> {
    let a = amplitudes(state)?;
    let reg = state.registry().subsystems();
    let swapped = Arc::new(SpaceRegistry::new(vec![reg[1].clone(), reg[0].clone()])?);
    StateVector::from_amplitudes(swapped, vec![a[0], a[2], a[1], a[3]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_with_z_settings_is_not_a_witness() {
        let up_up = schmidt_state(0.0);
        let r = hardy_probability(&up_up, &HardySettings::default()).unwrap();
        assert!((r.joint_probability - 1.0).abs() < 1e-12);
        assert!(!r.is_witness());
    }

    #[test]
    fn singlet_has_no_witness() {
        let r = hardy_search(&singlet_state(), 1.0).unwrap();
        assert_eq!(r.joint_probability, 0.0);
        assert!(!r.is_witness());
    }

    #[test]
    fn product_state_search_is_zero() {
        let r = hardy_search(&schmidt_state(0.0), 1.0).unwrap();
        assert_eq!(r.joint_probability, 0.0);
    }

    #[test]
    fn bad_resolution() {
        assert!(hardy_search(&singlet_state(), 0.0).is_err());
        assert!(hardy_search(&singlet_state(), 12.0).is_err());
    }

    #[test]
    fn three_qubit_state_rejected() {
        let reg = Arc::new(
            SpaceRegistry::new(vec![
                Subsystem::new("a", ["0", "1"]),
                Subsystem::new("b", ["0", "1", "2"]),
            ])
            .unwrap(),
        );
        let v = crate::hilbert::basis_state(&reg, &["0", "0"]).unwrap();
        assert!(hardy_probability(&v, &HardySettings::default()).is_err());
    }
}
