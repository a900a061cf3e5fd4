//! Exact magnetic geodesics on the round 3-sphere with contact magnetic
//! field: closed-form two-frequency solution, the equivalent rotation form
//! through the adapted complex structure, conserved quantities, minimal
//! periods and the radius of the Hopf-projected circle.
//!
//! The flow solves, in the ambient C^2,
//!
//! ```text
//! gamma'' - i eps gamma' + (c^2 - eps delta) gamma = 0
//! ```
//!
//! with speed c = |v| and Reeb component delta = Re<i x, v>, both constants
//! of motion.

use crate::error::{OrbitError, Result};
use crate::geom::{
    construct_j, from_complex, half_freq_gap, mul_i, norm4, scale4, sub4, to_complex,
    MagneticParams, SpherePoint, TangentVector, Vec4,
};
use crate::numerics::rational_approx;
use crate::tol::TOL_ALG;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Exact orbit gamma(s) = e^{i w+ s} P+ + e^{i w- s} P- with complex 2-vector
/// coefficients. The frequencies are the roots of w^2 - eps w - (c^2 - eps
/// delta) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormOrbit {
    pub freq_plus: f64,
    pub freq_minus: f64,
    pub coef_plus: [Complex64; 2],
    pub coef_minus: [Complex64; 2],
    pub speed: f64,
    pub reeb: f64,
    pub half_gap: f64,
    pub epsilon: f64,
}

/// Universal lower bound on periods of non-constant closed orbits at a given
/// speed: 2 pi / c on the fast branch, 2 pi / eps on the slow one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodBound {
    pub bound: f64,
    pub branch: PeriodBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodBranch {
    Fast,
    Slow,
}

/// Result of minimal-period detection for a closed-form orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Periodicity {
    Periodic(f64),
    NonPeriodic,
    Stationary,
}

impl Periodicity {
    pub fn period(&self) -> Option<f64> {
        match self {
            Periodicity::Periodic(t) => Some(*t),
            _ => None,
        }
    }
}

/// Solve the orbit through (x, v) at strength eps.
pub fn solve_closed_form(t: &TangentVector, m: MagneticParams) -> Result<ClosedFormOrbit> {
    let speed = t.speed();
    let reeb = t.reeb_component();
    let a = half_freq_gap(t, m);
    let scale = speed.max(m.epsilon).max(1e-3);
    if a < 1e-9 * scale {
        return Err(OrbitError::DegenerateInput(format!(
            "coincident frequencies (gap {a}); orbit formula undefined"
        )));
    }
    let freq_plus = 0.5 * m.epsilon + a;
    let freq_minus = 0.5 * m.epsilon - a;
    let x = to_complex(t.base.coords());
    let iv = to_complex(mul_i(t.vec));
    let gap = freq_plus - freq_minus; // = 2a
    let mut coef_plus = [Complex64::default(); 2];
    let mut coef_minus = [Complex64::default(); 2];
    for k in 0..2 {
        coef_plus[k] = -(freq_minus * x[k] + iv[k]) / gap;
        coef_minus[k] = (freq_plus * x[k] + iv[k]) / gap;
    }
    Ok(ClosedFormOrbit {
        freq_plus,
        freq_minus,
        coef_plus,
        coef_minus,
        speed,
        reeb,
        half_gap: a,
        epsilon: m.epsilon,
    })
}

impl ClosedFormOrbit {
    pub fn position(&self, s: f64) -> Vec4 {
        let ep = Complex64::from_polar(1.0, self.freq_plus * s);
        let em = Complex64::from_polar(1.0, self.freq_minus * s);
        from_complex([
            ep * self.coef_plus[0] + em * self.coef_minus[0],
            ep * self.coef_plus[1] + em * self.coef_minus[1],
        ])
    }

    pub fn velocity(&self, s: f64) -> Vec4 {
        let ip = Complex64::new(0.0, self.freq_plus);
        let im = Complex64::new(0.0, self.freq_minus);
        let ep = Complex64::from_polar(1.0, self.freq_plus * s);
        let em = Complex64::from_polar(1.0, self.freq_minus * s);
        from_complex([
            ip * ep * self.coef_plus[0] + im * em * self.coef_minus[0],
            ip * ep * self.coef_plus[1] + im * em * self.coef_minus[1],
        ])
    }

    /// Residual of the defining second-order equation at time s.
    pub fn ode_residual(&self, s: f64) -> f64 {
        let ep = Complex64::from_polar(1.0, self.freq_plus * s);
        let em = Complex64::from_polar(1.0, self.freq_minus * s);
        let kappa = self.speed * self.speed - self.epsilon * self.reeb;
        let mut worst: f64 = 0.0;
        for k in 0..2 {
            let g = ep * self.coef_plus[k] + em * self.coef_minus[k];
            let dg = Complex64::new(0.0, self.freq_plus) * ep * self.coef_plus[k]
                + Complex64::new(0.0, self.freq_minus) * em * self.coef_minus[k];
            let ddg = -(self.freq_plus * self.freq_plus) * ep * self.coef_plus[k]
                - (self.freq_minus * self.freq_minus) * em * self.coef_minus[k];
            let r = ddg - Complex64::new(0.0, self.epsilon) * dg + kappa * g;
            worst = worst.max(r.norm());
        }
        worst
    }

    /// Supremum of the ODE residual over `n` uniform sample times on [0, span].
    pub fn ode_residual_sup(&self, span: f64, n: usize) -> f64 {
        (0..n)
            .map(|k| self.ode_residual(span * k as f64 / (n.max(1) as f64)))
            .fold(0.0, f64::max)
    }
}

/// Evaluate (gamma(s), gamma'(s)) as a tangent vector.
pub fn evaluate(orbit: &ClosedFormOrbit, s: f64) -> TangentVector {
    let p = orbit.position(s);
    let v = orbit.velocity(s);
    let base = SpherePoint::new(p).expect("orbit left the sphere");
    TangentVector::new(base, v).expect("orbit velocity lost tangency")
}

/// Rotation form of the same orbit: gamma(s) = e^{i eps s / 2} exp(J a s) x
/// with exp(J a s) = cos(a s) I + sin(a s) J.
pub fn evaluate_quaternionic(
    t: &TangentVector,
    m: MagneticParams,
    s: f64,
) -> Result<SpherePoint> {
    let a = half_freq_gap(t, m);
    let j = construct_j(t, m)?;
    let x = t.base.coords();
    let (c, sn) = ((a * s).cos(), (a * s).sin());
    let rotated = [
        c * x[0] + sn * j.apply(x)[0],
        c * x[1] + sn * j.apply(x)[1],
        c * x[2] + sn * j.apply(x)[2],
        c * x[3] + sn * j.apply(x)[3],
    ];
    let z = to_complex(rotated);
    let phase = Complex64::from_polar(1.0, 0.5 * m.epsilon * s);
    SpherePoint::new(from_complex([phase * z[0], phase * z[1]]))
}

/// Minimal period of the orbit, if it closes.
///
/// Single-frequency orbits close at 2 pi over the surviving frequency. Two
/// nonzero frequencies close together exactly when their ratio is rational;
/// rationality is detected by continued fractions truncated at denominator
/// 10^6 with acceptance window 1e-9 / q^2.
pub fn minimal_period(orbit: &ClosedFormOrbit) -> Periodicity {
    let np = (orbit.coef_plus[0].norm_sqr() + orbit.coef_plus[1].norm_sqr()).sqrt();
    let nm = (orbit.coef_minus[0].norm_sqr() + orbit.coef_minus[1].norm_sqr()).sqrt();
    let freq_tol = 1e-12 * (orbit.freq_plus.abs() + orbit.freq_minus.abs()).max(1.0);
    let single = |freq: f64| {
        if freq.abs() < freq_tol {
            Periodicity::Stationary
        } else {
            Periodicity::Periodic(TAU / freq.abs())
        }
    };
    if nm < 1e-12 {
        return single(orbit.freq_plus);
    }
    if np < 1e-12 {
        return single(orbit.freq_minus);
    }
    if orbit.freq_minus.abs() < freq_tol {
        return single(orbit.freq_plus);
    }
    if orbit.freq_plus.abs() < freq_tol {
        return single(orbit.freq_minus);
    }
    let ratio = orbit.freq_plus / orbit.freq_minus;
    match rational_approx(ratio, 1_000_000, 1e-9) {
        Some((_, q)) => Periodicity::Periodic(TAU * q as f64 / orbit.freq_minus.abs()),
        None => Periodicity::NonPeriodic,
    }
}

/// Lower bound for periods of non-constant closed orbits at speed c.
pub fn period_lower_bound(c: f64, m: MagneticParams) -> Result<PeriodBound> {
    if c <= 0.0 {
        return Err(OrbitError::InvalidParameter(format!(
            "speed {c} must be positive"
        )));
    }
    if c >= m.epsilon {
        Ok(PeriodBound {
            bound: TAU / c,
            branch: PeriodBranch::Fast,
        })
    } else {
        Ok(PeriodBound {
            bound: TAU / m.epsilon,
            branch: PeriodBranch::Slow,
        })
    }
}

/// Euclidean radius of the Hopf projection of an orbit with speed c and Reeb
/// component delta: sqrt((c - delta)(c + delta) / (eps^2 + 4(c^2 - eps delta))).
pub fn hopf_radius(c: f64, delta: f64, m: MagneticParams) -> Result<f64> {
    if delta.abs() > c + TOL_ALG {
        return Err(OrbitError::InvalidParameter(format!(
            "Reeb component {delta} exceeds speed {c}"
        )));
    }
    let denom = m.epsilon * m.epsilon + 4.0 * (c * c - m.epsilon * delta);
    if denom <= 0.0 {
        return Err(OrbitError::DegenerateInput(
            "vanishing frequency discriminant".into(),
        ));
    }
    let num = ((c - delta) * (c + delta)).max(0.0);
    Ok((num / denom).sqrt())
}

/// Build a tangent vector with prescribed speed and Reeb component at x,
/// using the direction w (projected into the contact plane) for the
/// transverse part.
pub fn tangent_with_invariants(
    x: SpherePoint,
    c: f64,
    delta: f64,
    w_seed: Vec4,
) -> Result<TangentVector> {
    if delta.abs() > c {
        return Err(OrbitError::InvalidParameter(format!(
            "|delta| = {} > c = {c}",
            delta.abs()
        )));
    }
    let ix = mul_i(x.coords());
    let mut w = w_seed;
    // remove components along x and ix
    for b in [x.coords(), ix] {
        let t = crate::geom::dot4(w, b);
        w = sub4(w, scale4(b, t));
    }
    let n = norm4(w);
    if n < 1e-8 {
        return Err(OrbitError::DegenerateInput(
            "seed direction parallel to the Reeb plane".into(),
        ));
    }
    let transverse = (c * c - delta * delta).sqrt();
    let v = crate::geom::add4(scale4(ix, delta), scale4(w, transverse / n));
    TangentVector::new(x, v)
}
