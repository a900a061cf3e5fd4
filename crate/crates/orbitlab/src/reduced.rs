//! The reduced integrable system in Hopf coordinates (theta, phi1, phi2):
//! Lagrangian dynamics with a confining barrier near the two Hopf-link
//! circles, conserved momenta, the one-dimensional effective potential for
//! theta, turning points, quadrature periods, and a direct high-order
//! integrator used as a cross-check oracle for the closed-form flow.
//!
//! In these coordinates the metric is
//! ds^2 = d theta^2 + sin^2(theta) d phi1^2 + cos^2(theta) d phi2^2 and the
//! magnetic flow of strength eps is generated by
//!
//! ```text
//! L = (1/2)(theta'^2 + sin^2 th phi1'^2 + cos^2 th phi2'^2)
//!     - (eps/2)(sin^2 th phi1' + cos^2 th phi2') - V(theta)
//! ```
//!
//! whose Euler-Lagrange equations reproduce the ambient orbit equation
//! exactly (the verification against the closed form is part of the test
//! suite). The cyclic momenta are therefore
//!
//! ```text
//! c1 = sin^2(th) (phi1' - eps/2),   c2 = cos^2(th) (phi2' - eps/2),
//! ```
//!
//! and the conserved Reeb component is delta = c1 + c2 + eps/2.

use crate::error::{OrbitError, Result};
use crate::geom::{dot4, MagneticParams, SpherePoint, TangentVector};
use crate::numerics::{gauss_legendre, Dopri5, StepOutcome};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

/// State of the reduced system: chart angles and their velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub theta_dot: f64,
    pub phi1_dot: f64,
    pub phi2_dot: f64,
}

impl ReducedState {
    pub fn speed_sq(&self) -> f64 {
        let (s, c) = (self.theta.sin(), self.theta.cos());
        self.theta_dot * self.theta_dot
            + s * s * self.phi1_dot * self.phi1_dot
            + c * c * self.phi2_dot * self.phi2_dot
    }
}

/// The conserved quartet of the reduced flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedSet {
    pub c1: f64,
    pub c2: f64,
    /// Total energy E + V(theta).
    pub energy: f64,
    /// Reeb component delta = c1 + c2 + eps/2.
    pub delta: f64,
}

/// Barrier potential confined to a thin collar inside each cap:
/// zero for dist >= eps, and amplitude * ((eps - d) / (d - (eps - eps^k)))^2
/// on the collar, blowing up at the inner wall d = eps - eps^k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub epsilon: f64,
    /// Cap boundary colatitude (equals epsilon in the model).
    pub wall: f64,
    /// Sharpness exponent k controlling the collar thickness eps^k.
    pub sharpness: f64,
    pub amplitude: f64,
}

impl PotentialSpec {
    pub fn new(epsilon: f64) -> Self {
        PotentialSpec {
            epsilon,
            wall: epsilon,
            sharpness: 4.0,
            amplitude: 1.0,
        }
    }

    /// The zero potential (free magnetic flow).
    pub fn free() -> Self {
        PotentialSpec {
            epsilon: 0.0,
            wall: 0.0,
            sharpness: 4.0,
            amplitude: 0.0,
        }
    }

    pub fn is_free(&self) -> bool {
        self.amplitude == 0.0 || self.wall == 0.0
    }

    /// Inner hard-wall distance eps - eps^k.
    pub fn inner_wall(&self) -> f64 {
        self.wall - self.wall.powf(self.sharpness)
    }
}

fn cap_dist(theta: f64) -> f64 {
    theta.min(FRAC_PI_2 - theta)
}

/// Potential value at the given colatitude.
pub fn potential_value(v: &PotentialSpec, theta: f64) -> Result<f64> {
    if v.is_free() {
        return Ok(0.0);
    }
    let d = cap_dist(theta);
    if d >= v.wall {
        return Ok(0.0);
    }
    let w0 = v.inner_wall();
    if d <= w0 {
        return Err(OrbitError::InfinitePotential { dist: d });
    }
    let r = (v.wall - d) / (d - w0);
    Ok(v.amplitude * r * r)
}

/// dV/d(theta), including the sign flip of dist(theta) across theta = pi/4.
pub fn potential_slope(v: &PotentialSpec, theta: f64) -> Result<f64> {
    if v.is_free() {
        return Ok(0.0);
    }
    let d = cap_dist(theta);
    if d >= v.wall {
        return Ok(0.0);
    }
    let w0 = v.inner_wall();
    if d <= w0 {
        return Err(OrbitError::InfinitePotential { dist: d });
    }
    let span = v.wall - w0; // = eps^k
    let dv_dd = -2.0 * v.amplitude * (v.wall - d) * span / (d - w0).powi(3);
    let dd_dth = if theta <= FRAC_PI_4 { 1.0 } else { -1.0 };
    Ok(dv_dd * dd_dth)
}

/// Chart map: ambient tangent vector to reduced coordinates.
pub fn to_reduced(t: &TangentVector) -> Result<ReducedState> {
    let h = t.base.to_hopf();
    let (s, c) = (h.theta.sin(), h.theta.cos());
    if s < 1e-8 || c < 1e-8 {
        return Err(OrbitError::ChartDomain { theta: h.theta });
    }
    let (e1, e2) = (h.phi1.cos(), h.phi1.sin());
    let (f1, f2) = (h.phi2.cos(), h.phi2.sin());
    let d_theta = [c * e1, c * e2, -s * f1, -s * f2];
    let d_phi1 = [-s * e2, s * e1, 0.0, 0.0];
    let d_phi2 = [0.0, 0.0, -c * f2, c * f1];
    Ok(ReducedState {
        theta: h.theta,
        phi1: h.phi1,
        phi2: h.phi2,
        theta_dot: dot4(t.vec, d_theta),
        phi1_dot: dot4(t.vec, d_phi1) / (s * s),
        phi2_dot: dot4(t.vec, d_phi2) / (c * c),
    })
}

/// Inverse chart map.
pub fn from_reduced(r: &ReducedState) -> Result<TangentVector> {
    let (s, c) = (r.theta.sin(), r.theta.cos());
    if s < 1e-8 || c < 1e-8 {
        return Err(OrbitError::ChartDomain { theta: r.theta });
    }
    let (e1, e2) = (r.phi1.cos(), r.phi1.sin());
    let (f1, f2) = (r.phi2.cos(), r.phi2.sin());
    let x = [s * e1, s * e2, c * f1, c * f2];
    let v = [
        r.theta_dot * c * e1 - r.phi1_dot * s * e2,
        r.theta_dot * c * e2 + r.phi1_dot * s * e1,
        -r.theta_dot * s * f1 - r.phi2_dot * c * f2,
        -r.theta_dot * s * f2 + r.phi2_dot * c * f1,
    ];
    TangentVector::new(SpherePoint::new(x)?, v)
}

/// Conserved quantities of a state under strength m with potential v.
pub fn conserved_set(
    r: &ReducedState,
    m: MagneticParams,
    v: &PotentialSpec,
) -> Result<ConservedSet> {
    conserved_set_raw(r, m.epsilon, v)
}

pub(crate) fn conserved_set_raw(r: &ReducedState, eps: f64, v: &PotentialSpec) -> Result<ConservedSet> {
    let (s, c) = (r.theta.sin(), r.theta.cos());
    let c1 = s * s * (r.phi1_dot - 0.5 * eps);
    let c2 = c * c * (r.phi2_dot - 0.5 * eps);
    let energy = 0.5 * r.speed_sq() + potential_value(v, r.theta)?;
    Ok(ConservedSet {
        c1,
        c2,
        energy,
        delta: c1 + c2 + 0.5 * eps,
    })
}

/// Effective potential for the one-dimensional theta motion:
/// theta'^2 = 2 (energy - W(theta)).
pub fn effective_potential(
    cs: &ConservedSet,
    m: MagneticParams,
    v: &PotentialSpec,
    theta: f64,
) -> Result<f64> {
    effective_potential_raw(cs, m.epsilon, v, theta)
}

fn effective_potential_raw(
    cs: &ConservedSet,
    eps: f64,
    v: &PotentialSpec,
    theta: f64,
) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) || theta == 0.0 || theta == FRAC_PI_2 {
        return Err(OrbitError::ChartDomain { theta });
    }
    let (s, c) = (theta.sin(), theta.cos());
    let t1 = cs.c1 / (s * s) + 0.5 * eps;
    let t2 = cs.c2 / (c * c) + 0.5 * eps;
    Ok(potential_value(v, theta)? + 0.5 * s * s * t1 * t1 + 0.5 * c * c * t2 * t2)
}

/// All roots of energy - W(theta) on (0, pi/2), located by sign scan plus
/// bisection to 1e-12. The scan grid is refined inside the barrier collars
/// where roots can hide in a width-eps^k sliver.
pub fn turning_points(cs: &ConservedSet, m: MagneticParams, v: &PotentialSpec) -> Vec<f64> {
    let eps = m.epsilon;
    let g = |theta: f64| match effective_potential_raw(cs, eps, v, theta) {
        Ok(w) => cs.energy - w,
        Err(_) => -1.0, // inside the hard wall or off-chart: forbidden region
    };
    let lo = 1e-7;
    let hi = FRAC_PI_2 - 1e-7;
    let mut grid: Vec<f64> = (0..=4000)
        .map(|k| lo + (hi - lo) * k as f64 / 4000.0)
        .collect();
    if !v.is_free() {
        let w0 = v.inner_wall();
        for side in 0..2 {
            for k in 0..=2000 {
                let d = w0 + (v.wall - w0) * k as f64 / 2000.0;
                let th = if side == 0 { d } else { FRAC_PI_2 - d };
                if th > lo && th < hi {
                    grid.push(th);
                }
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (g(a), g(b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            // plain bisection: robust against the barrier's stiffness
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            while x1 - x0 > 1e-12 {
                let xm = 0.5 * (x0 + x1);
                let fm = g(xm);
                if fm == 0.0 {
                    x0 = xm;
                    x1 = xm;
                    break;
                }
                if f0 * fm < 0.0 {
                    x1 = xm;
                } else {
                    x0 = xm;
                    f0 = fm;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    roots
}

/// Libration period of the theta motion by endpoint-desingularized
/// quadrature: with theta = mid - half cos(u) the square-root singularities
/// at the turning points cancel and Gauss-Legendre converges rapidly. Node
/// count is doubled until two estimates agree to 1e-9 relative.
pub fn quadrature_period(cs: &ConservedSet, m: MagneticParams, v: &PotentialSpec) -> Result<f64> {
    let roots = turning_points(cs, m, v);
    // find a bracketing pair with classically allowed interior
    let mut interval = None;
    for w in roots.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if let Ok(wm) = effective_potential_raw(cs, m.epsilon, v, mid) {
            if cs.energy > wm {
                interval = Some((w[0], w[1]));
                break;
            }
        }
    }
    let (ta, tb) = interval.ok_or(OrbitError::NotLibrating)?;
    quadrature_period_between(cs, m, v, ta, tb)
}

/// Same as [`quadrature_period`] with an explicit turning-point pair.
pub fn quadrature_period_between(
    cs: &ConservedSet,
    m: MagneticParams,
    v: &PotentialSpec,
    ta: f64,
    tb: f64,
) -> Result<f64> {
    if tb <= ta {
        return Err(OrbitError::NotLibrating);
    }
    let mid = 0.5 * (ta + tb);
    let half = 0.5 * (tb - ta);
    let integrand = |u: f64| -> f64 {
        let th = mid - half * u.cos();
        let w = effective_potential_raw(cs, m.epsilon, v, th).unwrap_or(f64::INFINITY);
        let g = 2.0 * (cs.energy - w);
        if g <= 0.0 {
            // roundoff right at a turning point: the sin factor vanishes there
            return 0.0;
        }
        half * u.sin() / g.sqrt()
    };
    let mut prev = f64::NAN;
    for n in [64usize, 128, 256, 512] {
        let (xs, ws) = gauss_legendre(n);
        let mut acc = 0.0;
        for (&x, &w) in xs.iter().zip(&ws) {
            let u = 0.5 * std::f64::consts::PI * (x + 1.0);
            acc += w * integrand(u) * 0.5 * std::f64::consts::PI;
        }
        let t = 2.0 * acc;
        if prev.is_finite() && (t - prev).abs() <= 1e-9 * t.abs() {
            return Ok(t);
        }
        prev = t;
    }
    Ok(prev)
}

/// Outcome of one reduced-system integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    /// Reached the chart-handoff collar with the free potential; the caller
    /// should switch to the ambient closed form.
    ChartExit,
    /// The step-size floor was hit near the barrier; reported, never clamped.
    StepFloor,
}

/// Time-stamped reduced trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn last(&self) -> (f64, ReducedState) {
        (*self.times.last().unwrap(), *self.states.last().unwrap())
    }
}

/// Margin at which a free-potential trajectory hands off to the ambient
/// closed form instead of fighting the chart singularity.
pub const CHART_EXIT_MARGIN: f64 = 1e-3;

/// Integrate the Euler-Lagrange equations with a Dormand-Prince 5(4) pair at
/// tolerance 1e-12. Conserved quantities are never projected; drift is the
/// measured test surface.
pub fn integrate(
    r0: &ReducedState,
    m: MagneticParams,
    v: &PotentialSpec,
    t_end: f64,
    dt: f64,
) -> Trajectory {
    integrate_raw(r0, m.epsilon, v, t_end, dt)
}

/// Signed-strength variant: the reduced equations are well defined for any
/// real strength, and the time-reversal symmetry test needs eps -> -eps.
pub fn integrate_raw(
    r0: &ReducedState,
    eps: f64,
    v: &PotentialSpec,
    t_end: f64,
    dt: f64,
) -> Trajectory {
    let vv = *v;
    let rhs = move |_t: f64, y: &[f64; 6], dy: &mut [f64; 6]| {
        let (th, td, p1d, p2d) = (y[0], y[3], y[4], y[5]);
        let (s, c) = (th.sin(), th.cos());
        let vp = potential_slope(&vv, th).unwrap_or(0.0);
        dy[0] = td;
        dy[1] = p1d;
        dy[2] = p2d;
        dy[3] = s * c * (p1d - p2d) * (p1d + p2d - eps) - vp;
        let cot = c / if s.abs() < 1e-14 { 1e-14 } else { s };
        let tan = s / if c.abs() < 1e-14 { 1e-14 } else { c };
        dy[4] = -2.0 * cot * td * (p1d - 0.5 * eps);
        dy[5] = 2.0 * tan * td * (p2d - 0.5 * eps);
    };
    let solver: Dopri5<6> = Dopri5 {
        rel_tol: 1e-12,
        abs_tol: 1e-12,
        h_init: dt.clamp(1e-6, 1e-2),
        h_min: 1e-12,
        h_max: 0.05,
    };
    let y0 = [
        r0.theta,
        r0.phi1,
        r0.phi2,
        r0.theta_dot,
        r0.phi1_dot,
        r0.phi2_dot,
    ];
    let mut times = Vec::new();
    let mut states = Vec::new();
    let observer = |t: f64, y: &[f64; 6]| {
        times.push(t);
        states.push(ReducedState {
            theta: y[0],
            phi1: y[1],
            phi2: y[2],
            theta_dot: y[3],
            phi1_dot: y[4],
            phi2_dot: y[5],
        });
    };
    let event = if vv.is_free() {
        Some(move |_t: f64, y: &[f64; 6]| cap_dist(y[0]) - CHART_EXIT_MARGIN)
    } else {
        None
    };
    let (_, _, outcome) = solver.integrate(rhs, 0.0, t_end, y0, observer, event);
    let status = match outcome {
        StepOutcome::Completed => TrajectoryStatus::Completed,
        StepOutcome::EventHit => TrajectoryStatus::ChartExit,
        StepOutcome::StepSizeFloor => TrajectoryStatus::StepFloor,
    };
    Trajectory {
        times,
        states,
        status,
    }
}

/// Relative drift of (c1, c2, energy) along a trajectory, normalized by the
/// energy scale.
pub fn conserved_drift(traj: &Trajectory, eps: f64, v: &PotentialSpec) -> Result<(f64, f64, f64)> {
    let first = conserved_set_raw(&traj.states[0], eps, v)?;
    let scale = first.energy.abs().max(0.1);
    let (mut d1, mut d2, mut de) = (0.0f64, 0.0f64, 0.0f64);
    for st in &traj.states {
        let cs = conserved_set_raw(st, eps, v)?;
        d1 = d1.max((cs.c1 - first.c1).abs() / scale);
        d2 = d2.max((cs.c2 - first.c2).abs() / scale);
        de = de.max((cs.energy - first.energy).abs() / scale);
    }
    Ok((d1, d2, de))
}
