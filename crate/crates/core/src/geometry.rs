//! Geometry of the experiment: probe ball, concentric-sphere body, grids.
//!
//! The body is a ball of radius `r_omega` containing an insulated cavity of
//! radius `r_cavity` about the same center (radial mode). The probe ball
//! (center `p`, radius `eta`) carries the tent-shaped initial velocity that
//! generates the interrogating wave. Everything downstream works with the
//! two scalars R_D(p) and R_Omega(p): the radii of the smallest spheres
//! about `p` enclosing the cavity and the body.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

pub fn dist(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Probe ball B: center `p`, radius `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeBall {
    pub p: Vec3,
    pub eta: f64,
}

impl ProbeBall {
    pub fn new(p: Vec3, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(CoreError::Config(format!(
                "probe radius eta must be positive and finite, got {eta}"
            )));
        }
        Ok(ProbeBall { p, eta })
    }
}

/// Concentric-sphere body: outer radius, cavity radius, shared center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub r_omega: f64,
    pub r_cavity: f64,
    pub center: Vec3,
}

impl BodySpec {
    pub fn new(r_omega: f64, r_cavity: f64, center: Vec3) -> Result<Self> {
        if !(r_cavity > 0.0 && r_cavity < r_omega) || !r_omega.is_finite() {
            return Err(CoreError::Config(format!(
                "need 0 < r_cavity < r_omega, got r_cavity={r_cavity}, r_omega={r_omega}"
            )));
        }
        Ok(BodySpec {
            r_omega,
            r_cavity,
            center,
        })
    }
}

/// Grid parameters. `n_r`/`n_t` are floors: solvers refine beyond them
/// whenever the flux firing window demands it, never below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub n_r: usize,
    pub n_t: usize,
    pub t_final: f64,
}

impl Discretization {
    pub fn new(n_r: usize, n_t: usize, t_final: f64) -> Result<Self> {
        if n_r < 16 || n_t < 16 {
            return Err(CoreError::Config(format!(
                "grid floors are n_r >= 16 and n_t >= 16, got n_r={n_r}, n_t={n_t}"
            )));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(CoreError::Config(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        Ok(Discretization { n_r, n_t, t_final })
    }
}

/// Radius of the smallest sphere about `p` enclosing the ball
/// (center, radius): sup over the ball of the distance to `p`.
pub fn radius_sup(p: &Vec3, center: &Vec3, radius: f64) -> f64 {
    debug_assert!(radius > 0.0);
    dist(p, center) + radius
}

/// Geometric admissibility: eta + 2 R_D > R_Omega.
///
/// When it fails, the reflected return from the cavity is buried under the
/// direct boundary response and the indicator asymptotics are not
/// guaranteed; strict-mode runs must refuse, non-strict runs may proceed
/// with a logged warning.
pub fn check_constraint(eta: f64, r_d: f64, r_omega: f64) -> Result<bool> {
    if !(eta > 0.0 && r_d > 0.0 && r_omega > 0.0) {
        return Err(CoreError::Config(format!(
            "constraint check needs positive arguments, got eta={eta}, r_d={r_d}, r_omega={r_omega}"
        )));
    }
    Ok(eta + 2.0 * r_d > r_omega)
}
