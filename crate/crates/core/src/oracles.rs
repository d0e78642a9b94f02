//! Independent reference solutions used by the test suites.
//!
//! Everything here is computed by quadrature or closed form, sharing no
//! code with the solver paths it checks.

use crate::initial::InitialDatum;
use crate::math::{gauss_legendre, Vec3};

/// integral over [0,1] of s^2 g(s) ds for a radial profile g, by
/// Gauss-Legendre quadrature.
pub fn radial_moment<F: Fn(f64) -> f64>(g: &F, nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let s = 0.5 * (xi + 1.0);
            0.5 * wi * s * s * g(s)
        })
        .sum()
}

/// Phase-space integral of the product bump datum.
pub fn phase_space_integral(f0: &InitialDatum) -> f64 {
    let shell = radial_moment(&crate::initial::bump_profile, 64);
    let four_pi = 4.0 * std::f64::consts::PI;
    f0.delta() * (four_pi * f0.r0.powi(3) * shell) * (four_pi * f0.p0.powi(3) * shell)
}

/// Field magnitude of a uniform ball of total charge `q` and radius `a`
/// at radius `r` (repelling convention, Delta Phi = rho).
pub fn uniform_ball_field(q: f64, a: f64, r: f64) -> f64 {
    if r <= a {
        q * r / (4.0 * std::f64::consts::PI * a * a * a)
    } else {
        q / (4.0 * std::f64::consts::PI * r * r)
    }
}

/// Enclosed charge of a radial density rho(|x|) supported in [0, support].
pub fn enclosed_charge<F: Fn(f64) -> f64>(rho: &F, support: f64, r: f64) -> f64 {
    let upper = r.min(support);
    if upper <= 0.0 {
        return 0.0;
    }
    let (x, w) = gauss_legendre(96);
    let four_pi = 4.0 * std::f64::consts::PI;
    four_pi
        * x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let s = 0.5 * upper * (xi + 1.0);
                0.5 * upper * wi * s * s * rho(s)
            })
            .sum::<f64>()
}

/// Radial field magnitude m(r)/(4 pi r^2) of a radial density.
pub fn radial_field_magnitude<F: Fn(f64) -> f64>(rho: &F, support: f64, r: f64) -> f64 {
    enclosed_charge(rho, support, r) / (4.0 * std::f64::consts::PI * r * r)
}

/// Potential (vanishing at infinity, Delta Phi = rho convention) of a
/// radial density at radius r.
pub fn radial_potential<F: Fn(f64) -> f64>(rho: &F, support: f64, r: f64) -> f64 {
    let (x, w) = gauss_legendre(96);
    let inner = enclosed_charge(rho, support, r) / (4.0 * std::f64::consts::PI);
    let lo = r.min(support);
    let tail: f64 = x
        .iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let s = lo + 0.5 * (support - lo) * (xi + 1.0);
            0.5 * (support - lo) * wi * s * rho(s)
        })
        .sum();
    -(inner / r.max(1e-300) + tail)
}

/// Free-streaming pushforward density rho(t, x) = integral of
/// f0(x - t v(p), p) dp, evaluated by substituting u = x - t v and
/// integrating over the spatial support ball with Gauss-Legendre nodes.
pub fn free_stream_density(f0: &InitialDatum, t: f64, x: Vec3, nodes: usize) -> f64 {
    assert!(t > 0.0, "pushforward quadrature requires t > 0");
    let (gl_x, gl_w) = gauss_legendre(nodes);
    let r0 = f0.r0;
    let vmax2 = f0.p0 * f0.p0 / (1.0 + f0.p0 * f0.p0);
    let mut sum = 0.0;
    for (ia, &xa) in gl_x.iter().enumerate() {
        let ux = xa * r0;
        for (ib, &xb) in gl_x.iter().enumerate() {
            let uy = xb * r0;
            for (ic, &xc) in gl_x.iter().enumerate() {
                let uz = xc * r0;
                let u = Vec3::new(ux, uy, uz);
                if u.norm_sq() >= r0 * r0 {
                    continue;
                }
                let v = (x - u) / t;
                let v2 = v.norm_sq();
                if v2 >= vmax2 {
                    continue;
                }
                let p = v / (1.0 - v2).sqrt();
                let jac = (1.0 - v2).powf(-2.5);
                let f = f0.evaluate(u, p);
                if f > 0.0 {
                    sum += gl_w[ia] * gl_w[ib] * gl_w[ic] * f * jac;
                }
            }
        }
    }
    sum * r0.powi(3) / t.powi(3)
}

/// Maximum of the (radial) free-streaming density over radius at time t.
pub fn free_stream_density_sup(f0: &InitialDatum, t: f64, nodes: usize, samples: usize) -> f64 {
    let vmax = f0.p0 / (1.0 + f0.p0 * f0.p0).sqrt();
    let rmax = f0.r0 + vmax * t;
    (0..samples)
        .map(|i| {
            let r = rmax * i as f64 / samples as f64;
            free_stream_density(f0, t, Vec3::new(r, 0.0, 0.0), nodes)
        })
        .fold(0.0f64, f64::max)
}

/// Maximum of the free-streaming density as a cloud-in-cell deposit of
/// spacing h sees it: the tent kernel convolution adds (h^2/12) Laplacian
/// at second order, evaluated here from the radial profile.
pub fn free_stream_density_sup_cic(
    f0: &InitialDatum,
    t: f64,
    h: f64,
    nodes: usize,
    samples: usize,
) -> f64 {
    let vmax = f0.p0 / (1.0 + f0.p0 * f0.p0).sqrt();
    let rmax = f0.r0 + vmax * t;
    let dr = rmax / samples as f64;
    let profile: Vec<f64> = (0..=samples + 1)
        .map(|i| free_stream_density(f0, t, Vec3::new(i as f64 * dr, 0.0, 0.0), nodes))
        .collect();
    let mut best = 0.0f64;
    for i in 0..samples {
        let r = i as f64 * dr;
        // Radial Laplacian rho'' + 2 rho'/r via centered differences; at
        // the origin, 3 rho''.
        let lap = if i == 0 {
            6.0 * (profile[1] - profile[0]) / (dr * dr)
        } else {
            let d2 = (profile[i + 1] - 2.0 * profile[i] + profile[i - 1]) / (dr * dr);
            let d1 = (profile[i + 1] - profile[i - 1]) / (2.0 * dr);
            d2 + 2.0 * d1 / r
        };
        best = best.max(profile[i] + h * h / 12.0 * lap);
    }
    best
}

/// Closed-form relativistic gyromotion in a uniform B = B e_z: returns
/// (position offset from the initial position, momentum) at time t for
/// initial momentum p0 at the origin.
pub fn gyro_orbit(p0: Vec3, b: f64, t: f64) -> (Vec3, Vec3) {
    let gamma = (1.0 + p0.norm_sq()).sqrt();
    let omega = b / gamma; // signed gyrofrequency for unit positive charge
    let (s, c) = (omega * t).sin_cos();
    // dp/dt = v x B rotates p_perp clockwise for positive charge and B > 0.
    let p = Vec3::new(
        p0[0] * c + p0[1] * s,
        -p0[0] * s + p0[1] * c,
        p0[2],
    );
    // x(t) integrates v = p/gamma.
    let x = if omega.abs() > 0.0 {
        Vec3::new(
            (p0[0] * s - p0[1] * (c - 1.0)) / (gamma * omega),
            (p0[1] * s + p0[0] * (c - 1.0)) / (gamma * omega),
            p0[2] * t / gamma,
        )
    } else {
        p0 * (t / gamma)
    };
    (x, p)
}

/// Period of relativistic gyromotion.
pub fn gyro_period(p0: Vec3, b: f64) -> f64 {
    2.0 * std::f64::consts::PI * (1.0 + p0.norm_sq()).sqrt() / b.abs()
}
