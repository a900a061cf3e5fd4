//! Ideal magnetic billiard on the sphere with two polar caps removed: the
//! table is {eps <= theta <= pi/2 - eps} in Hopf coordinates. Between wall
//! contacts the motion follows exact closed-form magnetic geodesic arcs;
//! at a wall the velocity component normal to the wall (the theta direction)
//! is reversed while speed, the Reeb component and both angular momenta are
//! preserved.
//!
//! Consecutive arcs of a bounce orbit are exact mirror images: the arc after
//! a bounce at a point with Hopf angles (a1, a2) is the anti-holomorphic
//! reflection (z1, z2) -> (e^{2 i a1} conj z1, e^{2 i a2} conj z2) of the
//! time-reversed arc before it. `mirror_extend` rebuilds a whole periodic
//! orbit from its first arc through these reflections alone and is used as
//! the independent reconstruction oracle for the period tests.

use crate::error::{OrbitError, Result};
use crate::flow::{evaluate, minimal_period, solve_closed_form, ClosedFormOrbit, Periodicity};
use crate::geom::{
    dot4, meridian_mirror, norm4, scale4, sub4, MagneticParams, SpherePoint, TangentVector, Vec4,
};
use crate::numerics::{brent, circumcircle3, dot3, norm3, sub3};
use crate::reduced::{conserved_set, to_reduced, PotentialSpec};
use crate::tol::TOL_CLOSE;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Which polar cap a wall belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapSide {
    /// Around theta = pi/2 (first Hopf-link circle).
    North,
    /// Around theta = 0 (second Hopf-link circle).
    South,
}

/// Geometry of one spherical cap of colatitude eps around a Hopf-link circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapGeometry {
    pub wall_colatitude: f64,
    /// Euclidean cap radius on the projection sphere: r = sin(eps) / 2.
    pub r: f64,
    pub which: CapSide,
}

impl CapGeometry {
    pub fn new(wall_colatitude: f64, which: CapSide) -> Result<Self> {
        let r = 0.5 * wall_colatitude.sin();
        if !(0.0 < r && r < 0.5) {
            return Err(OrbitError::InvalidParameter(format!(
                "cap radius {r} outside (0, 1/2)"
            )));
        }
        Ok(CapGeometry {
            wall_colatitude,
            r,
            which,
        })
    }

    /// Wall location as a theta value.
    pub fn wall_theta(&self) -> f64 {
        match self.which {
            CapSide::South => self.wall_colatitude,
            CapSide::North => FRAC_PI_2 - self.wall_colatitude,
        }
    }
}

/// One reflection event.
#[derive(Debug, Clone)]
pub struct BounceEvent {
    pub time: f64,
    pub state_in: TangentVector,
    pub state_out: TangentVector,
    pub cap: CapGeometry,
}

/// Orbit type by the set of caps touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BounceType {
    /// No wall contact: a plain magnetic geodesic.
    NoBounce,
    /// All bounces at one cap.
    OnePole,
    /// Bounces at both caps.
    BothPoles,
}

/// A traced billiard trajectory: exact arcs joined by reflection events.
#[derive(Debug, Clone)]
pub struct BounceOrbit {
    pub arcs: Vec<(ClosedFormOrbit, f64)>,
    pub events: Vec<BounceEvent>,
    pub orbit_type: BounceType,
    /// Set once the orbit is certified periodic (closure defect below the
    /// acceptance threshold).
    pub period: Option<f64>,
    /// Number of grazing contacts skipped during tracing.
    pub tangency_skips: usize,
}

impl BounceOrbit {
    pub fn total_time(&self) -> f64 {
        self.arcs.iter().map(|(_, d)| d).sum()
    }

    /// Position at global time t in [0, total_time].
    pub fn position(&self, t: f64) -> Vec4 {
        let mut acc = 0.0;
        for (i, (arc, dur)) in self.arcs.iter().enumerate() {
            if t <= acc + *dur || i + 1 == self.arcs.len() {
                return arc.position((t - acc).clamp(0.0, *dur));
            }
            acc += dur;
        }
        unreachable!()
    }

    /// Tangent state at global time t.
    pub fn state(&self, t: f64) -> TangentVector {
        let mut acc = 0.0;
        for (i, (arc, dur)) in self.arcs.iter().enumerate() {
            if t <= acc + *dur || i + 1 == self.arcs.len() {
                return evaluate(arc, (t - acc).clamp(0.0, *dur));
            }
            acc += dur;
        }
        unreachable!()
    }

    pub fn speed(&self) -> f64 {
        self.arcs[0].0.speed
    }
}

/// Specular reflection at a cap wall: reverse the theta-velocity, keep both
/// angular velocities. In ambient coordinates v -> v - 2 <v, n> n with n the
/// unit normal of the wall torus.
pub fn reflect(t: &TangentVector, cap: &CapGeometry) -> Result<TangentVector> {
    let h = t.base.to_hopf();
    let off_wall = (h.theta - cap.wall_theta()).abs();
    if off_wall > 1e-7 {
        return Err(OrbitError::Geometry(format!(
            "base point not on the wall: |theta - wall| = {off_wall}"
        )));
    }
    let n = wall_normal(&t.base);
    let vn = dot4(t.vec, n);
    let v_out = sub4(t.vec, scale4(n, 2.0 * vn));
    TangentVector::new(t.base, v_out)
}

/// Unit normal of the theta = const torus at x (the d/d theta direction).
fn wall_normal(x: &SpherePoint) -> Vec4 {
    let h = x.to_hopf();
    let (s, c) = (h.theta.sin(), h.theta.cos());
    let (e1, e2) = (h.phi1.cos(), h.phi1.sin());
    let (f1, f2) = (h.phi2.cos(), h.phi2.sin());
    [c * e1, c * e2, -s * f1, -s * f2]
}

/// Velocity threshold below which a wall contact counts as a grazing
/// tangency and is skipped rather than reflected.
pub const GRAZING_TOL: f64 = 1e-10;

/// Earliest entering wall contact of the arc on (t_min, t_max]: the squared
/// Hopf moduli |z1|^2, |z2|^2 are sinusoids of angular frequency 2a, so a
/// fine uniform scan bracketes every crossing and Brent polishes it.
fn next_wall_crossing(
    orbit: &ClosedFormOrbit,
    wall_eps: f64,
    t_min: f64,
    t_max: f64,
) -> Option<(f64, CapSide)> {
    if t_max <= t_min {
        return None;
    }
    let level = wall_eps.sin().powi(2);
    let sin_period = PI / orbit.half_gap.max(1e-9);
    let n = (((t_max - t_min) / sin_period * 192.0).ceil() as usize).clamp(64, 4_000_000);
    let z1sq = |s: f64| {
        let p = orbit.position(s);
        p[0] * p[0] + p[1] * p[1]
    };
    let g_south = move |s: f64| z1sq(s) - level;
    let g_north = move |s: f64| (1.0 - z1sq(s)) - level;
    let mut best: Option<(f64, CapSide)> = None;
    for (side, g) in [
        (CapSide::South, &g_south as &dyn Fn(f64) -> f64),
        (CapSide::North, &g_north as &dyn Fn(f64) -> f64),
    ] {
        let mut s0 = t_min;
        let mut f0 = g(s0);
        for k in 1..=n {
            let s1 = t_min + (t_max - t_min) * k as f64 / n as f64;
            let f1 = g(s1);
            // entering contact: the gap function crosses zero downward
            if f0 > 0.0 && f1 <= 0.0 {
                let root = brent(g, s0, s1, f0, f1, 1e-13, 200);
                if best.map_or(true, |(b, _)| root < b) {
                    best = Some((root, side));
                }
                break;
            }
            s0 = s1;
            f0 = f1;
        }
    }
    best
}

enum TraceStop {
    Time(f64),
    Events(usize),
}

fn trace_core(
    t0: &TangentVector,
    m: MagneticParams,
    wall_eps: f64,
    stop: TraceStop,
) -> Result<BounceOrbit> {
    if !(0.0 < wall_eps && wall_eps < std::f64::consts::FRAC_PI_4) {
        return Err(OrbitError::InvalidParameter(format!(
            "wall colatitude {wall_eps} outside (0, pi/4)"
        )));
    }
    if t0.base.cap_distance() < wall_eps - 1e-9 {
        return Err(OrbitError::Geometry("launch point inside a cap".to_string()));
    }
    let (t_total, max_events) = match stop {
        TraceStop::Time(t) => (t, usize::MAX),
        TraceStop::Events(k) => (f64::INFINITY, k),
    };
    // hard time ceiling so event-bounded traces of non-returning orbits halt
    let t_ceiling = match stop {
        TraceStop::Time(t) => t,
        TraceStop::Events(k) => 400.0 * (k as f64 + 1.0),
    };
    let mut arcs = Vec::new();
    let mut events = Vec::new();
    let mut tangency_skips = 0usize;
    let mut state = *t0;
    let mut t_accum = 0.0;
    // per-arc search window: covers at least two full theta oscillations
    let window = |orbit: &ClosedFormOrbit| 2.0 * PI / orbit.half_gap.max(1e-6) + 1.0;
    while events.len() < max_events && t_accum < t_total && t_accum < t_ceiling {
        let orbit = solve_closed_form(&state, m)?;
        let remaining = (t_total - t_accum).min(window(&orbit));
        let mut search_from = 1e-9 / orbit.half_gap.max(1e-3);
        let crossing = loop {
            match next_wall_crossing(&orbit, wall_eps, search_from, remaining) {
                None => break None,
                Some((s, side)) => {
                    let tv = evaluate(&orbit, s);
                    let theta_speed = dot4(tv.vec, wall_normal(&tv.base)).abs();
                    if theta_speed < GRAZING_TOL {
                        // measure-zero grazing contact: skip past it
                        tangency_skips += 1;
                        search_from = s + 1e-6 / orbit.half_gap.max(1e-3);
                        continue;
                    }
                    break Some((s, side));
                }
            }
        };
        match crossing {
            Some((s, side)) if t_accum + s <= t_total => {
                let state_in = evaluate(&orbit, s);
                let cap = CapGeometry::new(wall_eps, side)?;
                let state_out = reflect(&state_in, &cap)?;
                arcs.push((orbit, s));
                t_accum += s;
                events.push(BounceEvent {
                    time: t_accum,
                    state_in,
                    state_out,
                    cap,
                });
                state = state_out;
            }
            _ => {
                // no contact in the window: either type 1 or a quiet stretch
                let dt = remaining.min(t_ceiling - t_accum);
                arcs.push((orbit.clone(), dt));
                t_accum += dt;
                if t_accum >= t_total || t_accum >= t_ceiling {
                    break;
                }
                state = evaluate(&orbit, dt);
            }
        }
    }
    let touched_south = events.iter().any(|e| e.cap.which == CapSide::South);
    let touched_north = events.iter().any(|e| e.cap.which == CapSide::North);
    let orbit_type = match (touched_south, touched_north) {
        (false, false) => BounceType::NoBounce,
        (true, true) => BounceType::BothPoles,
        _ => BounceType::OnePole,
    };
    Ok(BounceOrbit {
        arcs,
        events,
        orbit_type,
        period: None,
        tangency_skips,
    })
}

/// Trace the billiard trajectory from t0 for total time t_end.
pub fn trace_billiard(
    t0: &TangentVector,
    m: MagneticParams,
    wall_eps: f64,
    t_end: f64,
) -> Result<BounceOrbit> {
    trace_core(t0, m, wall_eps, TraceStop::Time(t_end))
}

/// Trace exactly `k` reflection events (bounded by an internal time ceiling).
pub fn trace_bounces(
    t0: &TangentVector,
    m: MagneticParams,
    wall_eps: f64,
    k: usize,
) -> Result<BounceOrbit> {
    trace_core(t0, m, wall_eps, TraceStop::Events(k))
}

/// Post-bounce wall state on the given cap with prescribed angular
/// velocities and total speed; the outward theta-velocity is recovered from
/// the speed.
pub fn wall_state(
    wall_eps: f64,
    side: CapSide,
    phi1: f64,
    phi2: f64,
    phi1_dot: f64,
    phi2_dot: f64,
    speed: f64,
) -> Result<TangentVector> {
    let theta = match side {
        CapSide::South => wall_eps,
        CapSide::North => FRAC_PI_2 - wall_eps,
    };
    let (s, c) = (theta.sin(), theta.cos());
    let td2 = speed * speed - s * s * phi1_dot * phi1_dot - c * c * phi2_dot * phi2_dot;
    if td2 <= 0.0 {
        return Err(OrbitError::InvalidParameter(
            "angular velocities exceed the requested speed".to_string(),
        ));
    }
    let theta_dot = match side {
        CapSide::South => td2.sqrt(),
        CapSide::North => -td2.sqrt(),
    };
    crate::reduced::from_reduced(&crate::reduced::ReducedState {
        theta,
        phi1,
        phi2,
        theta_dot,
        phi1_dot,
        phi2_dot,
    })
}

fn wrap_pm_pi(a: f64) -> f64 {
    let mut r = a % TAU;
    if r > PI {
        r -= TAU;
    }
    if r < -PI {
        r += TAU;
    }
    r
}

/// Return-map closure defect in the reduced section coordinates
/// (theta, phi1, phi2, theta_dot, phi1_dot); the remaining angular velocity
/// is pinned by the energy level and enters implicitly.
pub fn closure_defect(orbit: &BounceOrbit, anchor: &TangentVector) -> Result<f64> {
    let last = orbit
        .events
        .last()
        .ok_or_else(|| OrbitError::Geometry("no events traced".to_string()))?;
    let a = to_reduced(anchor)?;
    let b = to_reduced(&last.state_out)?;
    let d = [
        b.theta - a.theta,
        wrap_pm_pi(b.phi1 - a.phi1),
        wrap_pm_pi(b.phi2 - a.phi2),
        b.theta_dot - a.theta_dot,
        b.phi1_dot - a.phi1_dot,
    ];
    Ok(d.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Search for a periodic bounce orbit near the seed by shooting on a wall
/// section.
///
/// The seed is traced to its first post-bounce wall state (the anchor).
/// Because both angular momenta and the energy survive reflections, the
/// return map on a wall section is a two-angle twist; the shooting unknowns
/// are the two angular velocities at the anchor and the residual is the pair
/// of per-cycle angle advances modulo 2 pi. A damped secant iteration with a
/// finite-difference Jacobian drives the five-coordinate closure defect
/// below 1e-9, giving up after 200 iterations.
///
/// A seed whose orbit never meets a wall is returned directly when the plain
/// magnetic geodesic closes on its own (defect already zero).
pub fn find_periodic_bounce(
    seed: &TangentVector,
    m: MagneticParams,
    wall_eps: f64,
) -> Option<BounceOrbit> {
    let probe = trace_core(seed, m, wall_eps, TraceStop::Events(24)).ok()?;
    if probe.events.is_empty() {
        let orbit = solve_closed_form(seed, m).ok()?;
        if let Periodicity::Periodic(p) = minimal_period(&orbit) {
            return Some(BounceOrbit {
                arcs: vec![(orbit, p)],
                events: vec![],
                orbit_type: BounceType::NoBounce,
                period: Some(p),
                tangency_skips: 0,
            });
        }
        return None;
    }
    let anchor = probe.events[0].state_out;
    let anchor_red = to_reduced(&anchor).ok()?;
    let speed = anchor.speed();
    // recurrence scan for the most promising cycle length
    let mut best: Option<(usize, f64)> = None;
    for k in 1..probe.events.len() {
        if (probe.events[k].cap.wall_theta() - probe.events[0].cap.wall_theta()).abs() > 1e-12 {
            continue;
        }
        let partial = BounceOrbit {
            arcs: probe.arcs[1..=k].to_vec(),
            events: probe.events[1..=k].to_vec(),
            orbit_type: probe.orbit_type,
            period: None,
            tangency_skips: 0,
        };
        let d = closure_defect(&partial, &anchor).ok()?;
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    let (k_events, _) = best?;
    refine_periodic(
        wall_eps,
        probe.events[0].cap.which,
        anchor_red.phi1,
        anchor_red.phi2,
        (anchor_red.phi1_dot, anchor_red.phi2_dot),
        speed,
        k_events,
        m,
    )
}

/// Secant refinement of a periodic bounce orbit from a wall anchor with a
/// known cycle length (number of bounces per period).
#[allow(clippy::too_many_arguments)]
pub fn refine_periodic(
    wall_eps: f64,
    side: CapSide,
    phi1: f64,
    phi2: f64,
    guess: (f64, f64),
    speed: f64,
    k_events: usize,
    m: MagneticParams,
) -> Option<BounceOrbit> {
    let shoot = |p1d: f64, p2d: f64| -> Option<(f64, f64, BounceOrbit, TangentVector)> {
        let start = wall_state(wall_eps, side, phi1, phi2, p1d, p2d, speed).ok()?;
        let orbit = trace_bounces(&start, m, wall_eps, k_events).ok()?;
        if orbit.events.len() < k_events {
            return None;
        }
        let end = to_reduced(&orbit.events.last().unwrap().state_out).ok()?;
        Some((
            wrap_pm_pi(end.phi1 - phi1),
            wrap_pm_pi(end.phi2 - phi2),
            orbit,
            start,
        ))
    };
    let mut u = guess;
    for _ in 0..200 {
        let (f1, f2, orbit, start) = shoot(u.0, u.1)?;
        let defect = closure_defect(&orbit, &start).ok()?;
        if defect < TOL_CLOSE {
            let mut orbit = orbit;
            orbit.period = Some(orbit.events.last().unwrap().time);
            orbit.arcs.truncate(orbit.events.len());
            return Some(orbit);
        }
        let h = 1e-7;
        let (g1a, g2a, _, _) = shoot(u.0 + h, u.1)?;
        let (g1b, g2b, _, _) = shoot(u.0, u.1 + h)?;
        let j11 = (g1a - f1) / h;
        let j21 = (g2a - f2) / h;
        let j12 = (g1b - f1) / h;
        let j22 = (g2b - f2) / h;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-14 {
            return None;
        }
        let d1 = (f1 * j22 - f2 * j12) / det;
        let d2 = (f2 * j11 - f1 * j21) / det;
        let step_norm = (d1 * d1 + d2 * d2).sqrt();
        let cap = 0.2;
        let scale = if step_norm > cap { cap / step_norm } else { 1.0 };
        u = (u.0 - scale * d1, u.1 - scale * d2);
    }
    None
}

/// Planar circle-intersection entry angle:
/// cos(alpha) = (d^2 - r^2 + R^2) / (2 d R).
pub fn cap_entry_angle(big_r: f64, d: f64, r: f64) -> Result<f64> {
    if !(d >= (big_r - r).abs() - 1e-14 && d <= big_r + r + 1e-14) {
        return Err(OrbitError::NoIntersection);
    }
    let c = (d * d - r * r + big_r * big_r) / (2.0 * d * big_r);
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Measured cap-entry half-angle of a smooth orbit that dips into one cap:
/// project the entry and exit contact points, fit the projected circle
/// center, and return half the angle subtended there by the in-cap chord.
/// Also returns the contact times.
pub fn measure_entry_angle(orbit: &ClosedFormOrbit, wall_eps: f64) -> Result<(f64, f64, f64)> {
    let span = 1.5 * TAU / orbit.half_gap.max(1e-9);
    let (s_in, side) =
        next_wall_crossing(orbit, wall_eps, 1e-9, span).ok_or(OrbitError::NoIntersection)?;
    let level = wall_eps.sin().powi(2);
    let g = |s: f64| {
        let p = orbit.position(s);
        let z1sq = p[0] * p[0] + p[1] * p[1];
        match side {
            CapSide::South => z1sq - level,
            CapSide::North => (1.0 - z1sq) - level,
        }
    };
    let mut s_out = None;
    let n = 20_000;
    let mut prev = (s_in + 1e-9, g(s_in + 1e-9));
    for k in 1..=n {
        let s = s_in + 1e-9 + span * k as f64 / n as f64;
        let f = g(s);
        if prev.1 < 0.0 && f >= 0.0 {
            s_out = Some(brent(g, prev.0, s, prev.1, f, 1e-13, 200));
            break;
        }
        prev = (s, f);
    }
    let s_out = s_out.ok_or(OrbitError::NoIntersection)?;
    let pr = |s: f64| crate::geom::hopf_project(&evaluate(orbit, s).base);
    let circ_period = TAU / (2.0 * orbit.half_gap);
    let (center, _) = circumcircle3(
        pr(s_out + 0.13 * circ_period),
        pr(s_out + 0.45 * circ_period),
        pr(s_out + 0.78 * circ_period),
    )
    .ok_or(OrbitError::NoIntersection)?;
    let u = sub3(pr(s_in), center);
    let w = sub3(pr(s_out), center);
    let cosang = dot3(u, w) / (norm3(u) * norm3(w));
    let full = cosang.clamp(-1.0, 1.0).acos();
    Ok((0.5 * full, s_in, s_out))
}

/// Mirror image of an arc across the meridian torus through the reflection
/// point: the exact continuation law of the billiard. Returns the next arc
/// parametrized forward from the bounce.
pub fn mirror_of_arc(
    arc: &ClosedFormOrbit,
    arc_duration: f64,
    bounce_phi1: f64,
    bounce_phi2: f64,
    m: MagneticParams,
) -> Result<ClosedFormOrbit> {
    let end = evaluate(arc, arc_duration);
    let p = meridian_mirror(end.base.coords(), bounce_phi1, bounce_phi2);
    let v = scale4(meridian_mirror(end.vec, bounce_phi1, bounce_phi2), -1.0);
    let t = TangentVector::new(SpherePoint::new(p)?, v)?;
    solve_closed_form(&t, m)
}

/// Result of rebuilding a periodic bounce orbit from its first arc alone.
pub struct MirrorExtension {
    pub arcs: Vec<(ClosedFormOrbit, f64)>,
    pub period: f64,
    /// Sup-norm deviation of the reconstruction from the traced orbit.
    pub reconstruction_error: f64,
    /// Worst ODE residual over the reconstructed arcs: each piece must be an
    /// exact magnetic geodesic in its own right.
    pub arc_residual: f64,
    /// Defect of the closing reflection against the first arc.
    pub closure_defect: f64,
}

/// Rebuild the orbit from the fundamental arc by successive meridian
/// reflections and compare with the traced arcs.
pub fn mirror_extend(orbit: &BounceOrbit, m: MagneticParams) -> Result<MirrorExtension> {
    if orbit.events.is_empty() || orbit.arcs.len() != orbit.events.len() {
        return Err(OrbitError::Geometry(
            "mirror extension needs a closed bounce orbit".to_string(),
        ));
    }
    let mut arcs: Vec<(ClosedFormOrbit, f64)> = vec![orbit.arcs[0].clone()];
    let mut recon_err: f64 = 0.0;
    let mut arc_res: f64 = 0.0;
    for k in 0..orbit.events.len() - 1 {
        let ev = &orbit.events[k];
        let h = ev.state_in.base.to_hopf();
        let (prev, prev_dur) = arcs.last().unwrap().clone();
        let next = mirror_of_arc(&prev, prev_dur, h.phi1, h.phi2, m)?;
        let dur = orbit.arcs[k + 1].1;
        arc_res = arc_res.max(next.ode_residual_sup(dur, 32));
        for j in 0..=16 {
            let s = dur * j as f64 / 16.0;
            let d = norm4(sub4(next.position(s), orbit.arcs[k + 1].0.position(s)));
            recon_err = recon_err.max(d);
        }
        arcs.push((next, dur));
    }
    // closing reflection wraps onto the first arc
    let ev = orbit.events.last().unwrap();
    let h = ev.state_in.base.to_hopf();
    let (last, last_dur) = arcs.last().unwrap().clone();
    let wrap = mirror_of_arc(&last, last_dur, h.phi1, h.phi2, m)?;
    let mut closure: f64 = 0.0;
    for j in 0..=16 {
        let s = orbit.arcs[0].1 * j as f64 / 16.0;
        closure = closure.max(norm4(sub4(wrap.position(s), orbit.arcs[0].0.position(s))));
    }
    let period = arcs.iter().map(|(_, d)| d).sum();
    Ok(MirrorExtension {
        arcs,
        period,
        reconstruction_error: recon_err,
        arc_residual: arc_res,
        closure_defect: closure,
    })
}

/// Conserved quartet (speed, reeb, c1, c2) of a tangent state, used to check
/// conservation across bounce events.
pub fn conserved_quartet(t: &TangentVector, m: MagneticParams) -> Result<[f64; 4]> {
    let r = to_reduced(t)?;
    let cs = conserved_set(&r, m, &PotentialSpec::free())?;
    Ok([t.speed(), t.reeb_component(), cs.c1, cs.c2])
}

/// Unit-speed state at the theta apex of an orbit that clips the south cap
/// to relative depth `beta` (apex colatitude (1 - beta) * eps). Used by the
/// cap-angle trend measurements.
pub fn cap_clipping_state(eps: f64, beta: f64, phi2_dot: f64) -> Result<TangentVector> {
    let theta = (1.0 - beta) * eps;
    let (s, c) = (theta.sin(), theta.cos());
    let residual = 1.0 - c * c * phi2_dot * phi2_dot;
    if residual <= 0.0 {
        return Err(OrbitError::InvalidParameter(
            "transverse angular velocity exceeds unit speed".to_string(),
        ));
    }
    crate::reduced::from_reduced(&crate::reduced::ReducedState {
        theta,
        phi1: 0.0,
        phi2: 0.0,
        theta_dot: 0.0,
        phi1_dot: residual.sqrt() / s,
        phi2_dot,
    })
}
