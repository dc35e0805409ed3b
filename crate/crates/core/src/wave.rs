//! The interrogating wave and its time-reversed boundary flux.
//!
//! A free-space wave starts from rest with velocity profile
//! psi(x) = (eta - |x-p|)+  — a radial tent over the probe ball. Its
//! spherical-mean (Kirchhoff) solution reduces, for this data, to a
//! piecewise-cubic closed form in (d, s) with d = |x-p|: the integrand
//! (eta - rho) rho is integrated over the part of the chord-distance range
//! [|d-s|, d+s] lying inside the tent support. Strong Huygens gives exact
//! support bounds: the wave at time s lives on the annulus
//! s - eta < d < s + eta, which is what makes the reversed flux fire only
//! during a short window and lets the heat solver start at the onset time.
//!
//! The closed form is the production path (it sits inside time-stepping
//! loops); a latitude-longitude surface quadrature is kept alongside as an
//! independent oracle.

use crate::error::{CoreError, Result};
use crate::geometry::{dist, ProbeBall, Vec3};
use crate::quad::GaussLegendre;

/// Value and both partial derivatives of the radial wave at (d, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveEval {
    pub v: f64,
    pub dv_ds: f64,
    pub dv_dd: f64,
}

const ZERO_EVAL: WaveEval = WaveEval {
    v: 0.0,
    dv_ds: 0.0,
    dv_dd: 0.0,
};

/// Antiderivative of (eta - rho) rho.
#[inline]
fn p_cubic(rho: f64, eta: f64) -> f64 {
    0.5 * eta * rho * rho - rho * rho * rho / 3.0
}

#[inline]
fn p_cubic_deriv(rho: f64, eta: f64) -> f64 {
    rho * (eta - rho)
}

/// Tent velocity profile over the probe ball.
pub fn psi_b(x: &Vec3, probe: &ProbeBall) -> f64 {
    let d = dist(x, &probe.p);
    if d < probe.eta {
        probe.eta - d
    } else {
        0.0
    }
}

/// Closed-form radial wave: value and (d, s) derivatives.
///
/// Branches: s = 0 returns the initial state (zero value, velocity = tent);
/// on the symmetry axis d ~ 0 the sphere mean degenerates to s (eta - s);
/// otherwise integrate the tent over chord distances [rho_lo, rho_hi]. The
/// field is C^1 across every piece boundary (the one-sided derivative
/// limits agree), so the piecewise derivatives below are unambiguous.
pub fn kirchhoff_radial(d: f64, s: f64, eta: f64) -> WaveEval {
    debug_assert!(d >= 0.0 && eta > 0.0);
    if s <= 0.0 {
        // initial data: v = 0, v_s = tent profile
        let dv = if s == 0.0 { (eta - d).max(0.0) } else { 0.0 };
        return WaveEval {
            v: 0.0,
            dv_ds: dv,
            dv_dd: 0.0,
        };
    }
    if d < 1e-9 * eta {
        if s >= eta {
            return ZERO_EVAL;
        }
        return WaveEval {
            v: s * (eta - s),
            dv_ds: eta - 2.0 * s,
            dv_dd: 0.0,
        };
    }
    let rho_lo = (d - s).abs();
    if rho_lo >= eta {
        return ZERO_EVAL;
    }
    let rho_hi = (d + s).min(eta);
    let inner = d + s < eta;
    let v = (p_cubic(rho_hi, eta) - p_cubic(rho_lo, eta)) / (2.0 * d);
    // sign of d(rho_lo)/ds; at s = d the factor p_cubic_deriv(0) kills it
    let sgn = if s > d {
        1.0
    } else if s < d {
        -1.0
    } else {
        0.0
    };
    let hi_term = if inner {
        p_cubic_deriv(rho_hi, eta)
    } else {
        0.0
    };
    let lo_term = p_cubic_deriv(rho_lo, eta) * sgn;
    WaveEval {
        v,
        dv_ds: (hi_term - lo_term) / (2.0 * d),
        dv_dd: (hi_term + lo_term) / (2.0 * d) - v / d,
    }
}

/// True iff (d, s) lies inside the open support annulus of the wave.
pub fn in_support(d: f64, s: f64, eta: f64) -> bool {
    if s <= 0.0 {
        return false;
    }
    if d < 1e-9 * eta {
        return s < eta;
    }
    (d - s).abs() < eta
}

/// Kirchhoff value and time derivative at a general point.
pub fn kirchhoff_eval(x: &Vec3, s: f64, probe: &ProbeBall) -> (f64, f64) {
    let e = kirchhoff_radial(dist(x, &probe.p), s, probe.eta);
    (e.v, e.dv_ds)
}

/// Sphere-mean oracle: (1/4 pi s) x integral of the tent over the sphere of
/// radius s about x, by latitude-longitude quadrature with the polar axis
/// along p - x (the integrand is zonal in that frame). The polar integral
/// runs in the variable t with cos(theta) = 1 - t^2, which keeps the
/// chord distance sqrt((d-s)^2 + 2 d s t^2) smooth through the d = s
/// configuration; the azimuth ring is an exact uniform sum.
pub fn kirchhoff_oracle(x: &Vec3, s: f64, probe: &ProbeBall, n_quad: usize) -> f64 {
    assert!(n_quad >= 8);
    if s <= 0.0 {
        return 0.0; // degenerate sphere
    }
    let eta = probe.eta;
    let d = dist(x, &probe.p);
    if d < 1e-14 {
        return if s < eta { s * (eta - s) } else { 0.0 };
    }
    // latitude where the chord distance crosses the tent edge
    let mu_edge = (d * d + s * s - eta * eta) / (2.0 * d * s);
    if mu_edge >= 1.0 {
        return 0.0; // entire sphere outside the tent
    }
    let lo = mu_edge.max(-1.0);
    let t_max = (1.0 - lo).sqrt();
    let gl = GaussLegendre::new(n_quad);
    let lat = gl.integrate(0.0, t_max, |t| {
        let rho2 = (d - s) * (d - s) + 2.0 * d * s * t * t;
        let rho = rho2.sqrt();
        let tent = if rho < eta { eta - rho } else { 0.0 };
        tent * 2.0 * t // d(mu) = 2 t dt
    });
    let n_phi = 16usize;
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut surf = 0.0;
    for _ in 0..n_phi {
        surf += lat * dphi;
    }
    s / (4.0 * std::f64::consts::PI) * surf
}

/// Diffusion-scaled wave: value and time derivative of
/// (1/sqrt(tau)) v(x, sqrt(tau) t). The time derivative of the scaled field
/// equals the raw dv_ds by the chain rule.
pub fn scaled_wave(x: &Vec3, t: f64, tau: f64, probe: &ProbeBall) -> (f64, f64) {
    debug_assert!(tau > 0.0);
    let th = tau.sqrt();
    let e = kirchhoff_radial(dist(x, &probe.p), th * t, probe.eta);
    (e.v / th, e.dv_ds)
}

/// Time-reversed boundary flux: normal derivative of the scaled wave
/// evaluated at reversed time,
/// f(x, t) = (1/sqrt(tau)) n . grad v(x, sqrt(tau)(T - t)).
///
/// The wave is radial about p, so the gradient is dv_dd times the unit
/// vector from p to x; this analytic path is exact for any geometry.
pub fn flux_trace(
    x: &Vec3,
    normal: &Vec3,
    t: f64,
    t_final: f64,
    tau: f64,
    probe: &ProbeBall,
) -> f64 {
    let th = tau.sqrt();
    let d = dist(x, &probe.p);
    let e = kirchhoff_radial(d, th * (t_final - t), probe.eta);
    if e.dv_dd == 0.0 {
        return 0.0;
    }
    let dir = [
        (x[0] - probe.p[0]) / d,
        (x[1] - probe.p[1]) / d,
        (x[2] - probe.p[2]) / d,
    ];
    let ndotr = normal[0] * dir[0] + normal[1] * dir[1] + normal[2] * dir[2];
    e.dv_dd / th * ndotr
}

/// Finite-difference flux path for cross-checking the analytic gradient:
/// centered differences along the normal with one Richardson level,
/// step 1e-5 eta.
pub fn flux_trace_fd(
    x: &Vec3,
    normal: &Vec3,
    t: f64,
    t_final: f64,
    tau: f64,
    probe: &ProbeBall,
) -> f64 {
    let th = tau.sqrt();
    let s = th * (t_final - t);
    let h = 1e-5 * probe.eta;
    let central = |step: f64| {
        let xp = [
            x[0] + step * normal[0],
            x[1] + step * normal[1],
            x[2] + step * normal[2],
        ];
        let xm = [
            x[0] - step * normal[0],
            x[1] - step * normal[1],
            x[2] - step * normal[2],
        ];
        (kirchhoff_eval(&xp, s, probe).0 - kirchhoff_eval(&xm, s, probe).0) / (2.0 * step)
    };
    let d_h = central(h);
    let d_h2 = central(0.5 * h);
    (4.0 * d_h2 - d_h) / (3.0 * th)
}

/// Discrete L^2(0,T; L^2(boundary sphere)) norm of the reversed flux on the
/// sphere of radius `r` in radial mode (probe concentric with the sphere,
/// so the flux is constant over it): sqrt(4 pi r^2 * int f(t)^2 dt),
/// integrated by Gauss-Legendre panels split at the support breakpoints.
pub fn flux_time_l2(r: f64, tau: f64, t_final: f64, probe: &ProbeBall, n_gl: usize) -> Result<f64> {
    if tau <= 0.0 {
        return Err(CoreError::Domain(format!("tau must be positive, got {tau}")));
    }
    let th = tau.sqrt();
    let d = dist(&[r, 0.0, 0.0], &probe.p);
    // f is nonzero for sqrt(tau)(T - t) in (d - eta, d + eta)
    let mut breaks = vec![
        (t_final - (d + probe.eta) / th).max(0.0),
        (t_final - d / th).max(0.0),
        (t_final - (d - probe.eta).max(0.0) / th).min(t_final),
        t_final,
    ];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let gl = GaussLegendre::new(n_gl);
    let x = [r, 0.0, 0.0];
    let n = [1.0, 0.0, 0.0];
    let sq = gl.integrate_panels(&breaks, |t| {
        let f = flux_trace(&x, &n, t, t_final, tau, probe);
        f * f
    });
    Ok((4.0 * std::f64::consts::PI * r * r * sq).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETA: f64 = 0.5;

    fn probe() -> ProbeBall {
        ProbeBall::new([0.0; 3], ETA).unwrap()
    }

    #[test]
    fn tent_profile_values() {
        let b = probe();
        assert_eq!(psi_b(&[0.0; 3], &b), ETA);
        assert_eq!(psi_b(&[ETA, 0.0, 0.0], &b), 0.0);
        assert_eq!(psi_b(&[2.0 * ETA, 0.0, 0.0], &b), 0.0);
        assert!((psi_b(&[0.2, 0.0, 0.0], &b) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn center_value_and_cutoff() {
        // on the axis the sphere mean is s (eta - s) until the tent is crossed
        let e = kirchhoff_radial(0.0, 0.2, ETA);
        assert!((e.v - 0.06).abs() < 1e-15);
        assert!((e.dv_ds - (ETA - 0.4)).abs() < 1e-15);
        assert_eq!(kirchhoff_radial(0.0, ETA, ETA).v, 0.0);
        assert_eq!(kirchhoff_radial(0.0, 0.9, ETA).v, 0.0);
    }

    #[test]
    fn support_annulus_exact_zero() {
        // outside s - eta < d < s + eta the closed form is exactly zero
        for i in 0..100 {
            for j in 1..100 {
                let d = i as f64 * 0.03;
                let s = j as f64 * 0.025;
                let e = kirchhoff_radial(d, s, ETA);
                if d >= s + ETA || (s >= ETA && d <= s - ETA) {
                    assert_eq!(e.v, 0.0, "support violation at d={d}, s={s}");
                    assert_eq!(e.dv_ds, 0.0);
                    assert_eq!(e.dv_dd, 0.0);
                }
            }
        }
    }

    #[test]
    fn initial_velocity_is_tent() {
        for d in [0.0, 0.1, 0.3, 0.49, 0.7] {
            let e = kirchhoff_radial(d, 0.0, ETA);
            assert_eq!(e.v, 0.0);
            assert!((e.dv_ds - (ETA - d).max(0.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn c1_continuity_across_piece_boundaries() {
        // value and s-derivative agree from both sides of each kink
        let eps = 1e-9;
        let cases = [
            (0.3, 0.3),        // s = d (rho_lo kink)
            (0.3, 0.2),        // d + s = eta (rho_hi kink)
            (0.3, 0.8),        // s = d + eta (outer support edge)
            (0.8, 0.3),        // d = s + eta (inner support edge)
            (0.2, 0.3),        // d + s = eta crossed the other way
        ];
        for (d, s) in cases {
            let lo = kirchhoff_radial(d, s - eps, ETA);
            let hi = kirchhoff_radial(d, s + eps, ETA);
            println!(
                "kink d={d} s={s}: v {:+.3e}/{:+.3e}, v_s {:+.3e}/{:+.3e}",
                lo.v, hi.v, lo.dv_ds, hi.dv_ds
            );
            assert!((lo.v - hi.v).abs() < 1e-8, "value jump at d={d}, s={s}");
            assert!(
                (lo.dv_ds - hi.dv_ds).abs() < 1e-6,
                "derivative jump at d={d}, s={s}"
            );
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for (d, s) in [(0.45, 0.3), (0.7, 0.45), (0.25, 0.6), (1.1, 0.9)] {
            let e = kirchhoff_radial(d, s, ETA);
            let fs = (kirchhoff_radial(d, s + h, ETA).v - kirchhoff_radial(d, s - h, ETA).v)
                / (2.0 * h);
            let fd = (kirchhoff_radial(d + h, s, ETA).v - kirchhoff_radial(d - h, s, ETA).v)
                / (2.0 * h);
            assert!(
                (e.dv_ds - fs).abs() < 1e-8,
                "dv_ds mismatch at ({d},{s}): {} vs {fs}",
                e.dv_ds
            );
            assert!(
                (e.dv_dd - fd).abs() < 1e-8,
                "dv_dd mismatch at ({d},{s}): {} vs {fd}",
                e.dv_dd
            );
        }
    }

    #[test]
    fn wave_equation_residual_second_order() {
        // interior to a smooth piece the radial d'Alembert operator
        // v_ss - v_dd - (2/d) v_d vanishes; the 5-point stencil residual
        // must shrink at second order in the stencil width
        let pts = [(0.45, 0.3), (0.72, 0.5), (0.6, 0.85)];
        for (d, s) in pts {
            let mut prev = f64::NAN;
            for k in 0..3 {
                let h = 1e-2 / 2f64.powi(k);
                let vpp = |dd: f64, ss: f64| kirchhoff_radial(dd, ss, ETA).v;
                let v_ss = (vpp(d, s + h) - 2.0 * vpp(d, s) + vpp(d, s - h)) / (h * h);
                let v_dd = (vpp(d + h, s) - 2.0 * vpp(d, s) + vpp(d - h, s)) / (h * h);
                let v_d = (vpp(d + h, s) - vpp(d - h, s)) / (2.0 * h);
                let resid = (v_ss - v_dd - 2.0 / d * v_d).abs();
                println!("({d},{s}) h={h:.1e}: residual {resid:.3e}");
                if k > 0 {
                    assert!(
                        resid < 0.3 * prev || resid < 1e-9,
                        "residual not shrinking at ({d},{s})"
                    );
                }
                prev = resid;
            }
        }
    }

    #[test]
    fn oracle_agreement_spot() {
        let b = probe();
        // center case matches the constant-integrand value to near machine
        let o = kirchhoff_oracle(&[0.0; 3], 0.2, &b, 64);
        assert!((o - 0.06).abs() < 1e-10, "center oracle {o}");
        // outside the support the oracle is exactly zero
        assert_eq!(kirchhoff_oracle(&[1.6, 0.0, 0.0], 1.0, &b, 64), 0.0);
        // generic points at the production quadrature size
        for (d, s) in [(0.3, 0.45), (0.62, 0.5), (0.5, 0.5), (1.0, 0.8)] {
            let v = kirchhoff_radial(d, s, ETA).v;
            let o = kirchhoff_oracle(&[d, 0.0, 0.0], s, &b, 256);
            let err = (v - o).abs() / (1.0 + v.abs());
            println!("oracle d={d} s={s}: closed {v:.12e} quad {o:.12e} err {err:.2e}");
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn oracle_self_convergence() {
        let b = probe();
        let x = [0.37, 0.0, 0.0];
        let s = 0.52;
        let e1 = (kirchhoff_oracle(&x, s, &b, 16) - kirchhoff_radial(0.37, s, ETA).v).abs();
        let e2 = (kirchhoff_oracle(&x, s, &b, 32) - kirchhoff_radial(0.37, s, ETA).v).abs();
        println!("oracle err n=16: {e1:.2e}, n=32: {e2:.2e}");
        assert!(e2 <= e1);
    }

    #[test]
    fn translation_invariance() {
        // shifting probe and evaluation point together changes nothing
        let b0 = probe();
        let shift = [0.4, -0.7, 1.1];
        let b1 = ProbeBall::new(shift, ETA).unwrap();
        for (d, s) in [(0.3, 0.45), (0.9, 0.6)] {
            let x0 = [d, 0.0, 0.0];
            let x1 = [d + shift[0], shift[1], shift[2]];
            let (v0, dv0) = kirchhoff_eval(&x0, s, &b0);
            let (v1, dv1) = kirchhoff_eval(&x1, s, &b1);
            assert!((v0 - v1).abs() < 1e-14);
            assert!((dv0 - dv1).abs() < 1e-14);
        }
    }

    #[test]
    fn scaling_identity_tau_one() {
        let b = probe();
        for (d, t) in [(0.3, 0.45), (0.8, 0.55)] {
            let (v, dv) = scaled_wave(&[d, 0.0, 0.0], t, 1.0, &b);
            let e = kirchhoff_radial(d, t, ETA);
            assert_eq!(v, e.v);
            assert_eq!(dv, e.dv_ds);
        }
        // t = 0: scaled value vanishes, velocity is the tent
        for d in [0.0, 0.2, 0.45] {
            let (v, dv) = scaled_wave(&[d, 0.0, 0.0], 0.0, 173.0, &b);
            assert_eq!(v, 0.0);
            assert!((dv - (ETA - d).max(0.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn flux_window_exact_zero() {
        let b = probe();
        let tau: f64 = 100.0;
        let th = tau.sqrt();
        let t_final = 1.0;
        let x = [1.0, 0.0, 0.0];
        let n = [1.0, 0.0, 0.0];
        let t_on = t_final - (1.0 + ETA) / th;
        let t_off = t_final - (1.0 - ETA) / th;
        for k in 0..50 {
            let t = t_final * k as f64 / 49.0;
            let f = flux_trace(&x, &n, t, t_final, tau, &b);
            if t < t_on - 1e-12 || t > t_off + 1e-12 {
                assert_eq!(f, 0.0, "flux leak at t={t}");
            }
        }
        // the window interior actually fires
        let mid = flux_trace(&x, &n, t_final - 1.0 / th, t_final, tau, &b);
        assert!(mid != 0.0);
    }

    #[test]
    fn analytic_flux_matches_fd_path() {
        let b = ProbeBall::new([0.1, -0.05, 0.2], ETA).unwrap();
        let x: [f64; 3] = [0.8, 0.3, -0.4];
        let nrm = {
            let m = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            [x[0] / m, x[1] / m, x[2] / m]
        };
        let tau = 36.0;
        let t_final = 1.0;
        for t in [0.82, 0.88, 0.93] {
            let a = flux_trace(&x, &nrm, t, t_final, tau, &b);
            let f = flux_trace_fd(&x, &nrm, t, t_final, tau, &b);
            println!("t={t}: analytic {a:.10e} fd {f:.10e}");
            assert!((a - f).abs() <= 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn flux_l2_norm_bounded_in_tau() {
        let b = probe();
        let mut norms = vec![];
        for tau in [50.0, 100.0, 200.0, 400.0] {
            let n = flux_time_l2(1.0, tau, 1.0, &b, 64).unwrap();
            println!("tau={tau}: ||f|| = {n:.6e}");
            norms.push(n);
        }
        // the window narrows like 1/sqrt(tau), so the norm decays; what must
        // never happen is growth, which would signal a scaling error
        for n in &norms {
            assert!(n.is_finite() && *n > 0.0);
        }
        assert!(
            *norms.last().unwrap() <= 2.0 * norms[0],
            "flux norm grows with tau: {norms:?}"
        );
    }
}
