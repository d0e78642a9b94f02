//! Relativistic kinematics with all physical constants set to one.

use crate::math::{Mat3, Vec3};

/// Lorentz factor sqrt(1 + |p|^2).
pub fn gamma(p: Vec3) -> f64 {
    (1.0 + p.norm_sq()).sqrt()
}

/// Relativistic velocity v(p) = p / sqrt(1 + |p|^2). Always subluminal.
pub fn relativistic_velocity(p: Vec3) -> Vec3 {
    p / gamma(p)
}

/// Jacobian Dv(p) = (I - p⊗p / (1+|p|^2)) / sqrt(1+|p|^2).
///
/// Symmetric positive definite with eigenvalues 1/gamma (transverse, double)
/// and 1/gamma^3 (along p), hence operator norm <= 1 and
/// det Dv(p) = (1+|p|^2)^(-5/2).
pub fn velocity_jacobian(p: Vec3) -> Mat3 {
    let g2 = 1.0 + p.norm_sq();
    let g = g2.sqrt();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let kron = if i == j { 1.0 } else { 0.0 };
            m[i][j] = (kron - p[i] * p[j] / g2) / g;
        }
    }
    Mat3(m)
}

/// det Dv(p), in closed form.
pub fn velocity_jacobian_det(p: Vec3) -> f64 {
    (1.0 + p.norm_sq()).powf(-2.5)
}

/// Lorentz force K = E + v(p) x B.
pub fn lorentz_force(p: Vec3, e: Vec3, b: Vec3) -> Vec3 {
    e + relativistic_velocity(p).cross(b)
}
