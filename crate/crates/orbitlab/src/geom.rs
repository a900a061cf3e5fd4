//! Geometry of the unit 3-sphere inside C^2 ~ R^4: points, tangent vectors,
//! the two commuting complex structures, Hopf coordinates and projection, the
//! contact form, the cyclic lens-space action and the adapted complex
//! structure attached to a tangent vector at a given magnetic strength.
//!
//! Real coordinates are (x0, x1, x2, x3) with z1 = x0 + i x1 and
//! z2 = x2 + i x3.

use crate::error::{OrbitError, Result};
use crate::tol::TOL_ALG;
use num_complex::Complex64;
use std::sync::OnceLock;

pub type Vec4 = [f64; 4];

pub fn dot4(a: Vec4, b: Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm4(a: Vec4) -> f64 {
    dot4(a, a).sqrt()
}

pub fn add4(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn sub4(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn scale4(a: Vec4, s: f64) -> Vec4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// The standard complex structure i acting diagonally on both C factors.
pub fn mul_i(a: Vec4) -> Vec4 {
    [-a[1], a[0], -a[3], a[2]]
}

/// The structure j = diag(i, -i) defining the lens-space action.
pub fn mul_j(a: Vec4) -> Vec4 {
    [-a[1], a[0], a[3], -a[2]]
}

pub fn to_complex(a: Vec4) -> [Complex64; 2] {
    [Complex64::new(a[0], a[1]), Complex64::new(a[2], a[3])]
}

pub fn from_complex(z: [Complex64; 2]) -> Vec4 {
    [z[0].re, z[0].im, z[1].re, z[1].im]
}

/// A point on the unit sphere |x| = 1 in R^4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    coords: Vec4,
}

impl SpherePoint {
    /// Accepts inputs within 1e-6 of the sphere and renormalizes; anything
    /// worse is rejected rather than silently scaled.
    pub fn new(coords: Vec4) -> Result<Self> {
        let n = norm4(coords);
        if (n - 1.0).abs() > 1e-6 {
            return Err(OrbitError::InvalidParameter(format!(
                "point norm {n} too far from 1"
            )));
        }
        Ok(SpherePoint {
            coords: scale4(coords, 1.0 / n),
        })
    }

    pub fn coords(&self) -> Vec4 {
        self.coords
    }

    pub fn complex(&self) -> [Complex64; 2] {
        to_complex(self.coords)
    }

    pub fn from_hopf(h: HopfCoords) -> Self {
        let (s, c) = (h.theta.sin(), h.theta.cos());
        SpherePoint {
            coords: [
                s * h.phi1.cos(),
                s * h.phi1.sin(),
                c * h.phi2.cos(),
                c * h.phi2.sin(),
            ],
        }
    }

    /// Hopf chart: theta = arccos|z2| clamped to [0, pi/2], angles in [0, 2pi).
    pub fn to_hopf(&self) -> HopfCoords {
        let [z1, z2] = self.complex();
        let theta = z2.norm().clamp(0.0, 1.0).acos();
        HopfCoords {
            theta,
            phi1: wrap_angle(z1.im.atan2(z1.re)),
            phi2: wrap_angle(z2.im.atan2(z2.re)),
        }
    }

    /// Angular distance to the nearer of the two Hopf-link circles.
    pub fn cap_distance(&self) -> f64 {
        let th = self.to_hopf().theta;
        th.min(std::f64::consts::FRAC_PI_2 - th)
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = a % two_pi;
    if r < 0.0 {
        r + two_pi
    } else {
        r
    }
}

/// A tangent vector: base point plus an ambient vector orthogonal to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: SpherePoint,
    pub vec: Vec4,
}

impl TangentVector {
    pub fn new(base: SpherePoint, vec: Vec4) -> Result<Self> {
        let t = dot4(base.coords(), vec);
        if t.abs() > 1e-6 {
            return Err(OrbitError::InvalidParameter(format!(
                "vector not tangent: <x, v> = {t}"
            )));
        }
        // project out the residual normal component
        let vec = sub4(vec, scale4(base.coords(), t));
        Ok(TangentVector { base, vec })
    }

    pub fn speed(&self) -> f64 {
        norm4(self.vec)
    }

    /// Reeb component Re<i x, v>.
    pub fn reeb_component(&self) -> f64 {
        dot4(mul_i(self.base.coords()), self.vec)
    }
}

/// Hopf coordinates (theta, phi1, phi2) with theta in [0, pi/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfCoords {
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
}

/// Magnetic strength of the perturbation; must stay below 1/2 so the shifted
/// disk bundle embedding is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticParams {
    pub epsilon: f64,
}

impl MagneticParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(OrbitError::InvalidParameter(format!(
                "magnetic strength {epsilon} outside [0, 1/2)"
            )));
        }
        Ok(MagneticParams { epsilon })
    }
}

/// Contact form value: alpha_x(v) = (1/2) Re<i x, v>.
pub fn contact_form(t: &TangentVector) -> f64 {
    0.5 * t.reeb_component()
}

/// Generator power k of the order-p cyclic action
/// x -> diag(e^{2 pi i k / p}, e^{-2 pi i k / p}) x. Requires odd p >= 1.
pub fn zp_action(x: &SpherePoint, p: i64, k: i64) -> Result<SpherePoint> {
    if p <= 0 || p % 2 == 0 {
        return Err(OrbitError::InvalidParameter(format!(
            "group order {p} must be odd and positive"
        )));
    }
    let ang = std::f64::consts::TAU * k as f64 / p as f64;
    Ok(SpherePoint {
        coords: rotate_phases(x.coords(), ang, -ang),
    })
}

/// Apply the same diagonal phase rotation to a plain 4-vector (used for
/// tangent vectors, which transform identically under the linear action).
pub fn zp_action_vec(v: Vec4, p: i64, k: i64) -> Vec4 {
    let ang = std::f64::consts::TAU * k as f64 / p as f64;
    rotate_phases(v, ang, -ang)
}

fn rotate_phases(v: Vec4, a1: f64, a2: f64) -> Vec4 {
    let (c1, s1) = (a1.cos(), a1.sin());
    let (c2, s2) = (a2.cos(), a2.sin());
    [
        c1 * v[0] - s1 * v[1],
        s1 * v[0] + c1 * v[1],
        c2 * v[2] - s2 * v[3],
        s2 * v[2] + c2 * v[3],
    ]
}

/// Anti-holomorphic reflection (z1, z2) -> (e^{2 i a1} conj z1, e^{2 i a2} conj z2).
/// Fixes the torus {phi1 = a1, phi2 = a2}; composed with time reversal it
/// preserves the magnetic flow. Linear on R^4, so it applies to vectors too.
pub fn meridian_mirror(v: Vec4, a1: f64, a2: f64) -> Vec4 {
    let conj = [v[0], -v[1], v[2], -v[3]];
    rotate_phases(conj, 2.0 * a1, 2.0 * a2)
}

/// Hopf projection onto the 2-sphere of radius 1/2:
/// (z1, z2) -> (Re(conj(z1) z2), Im(conj(z1) z2), (|z1|^2 - |z2|^2)/2).
pub fn hopf_project(x: &SpherePoint) -> [f64; 3] {
    let [z1, z2] = x.complex();
    let w = z1.conj() * z2;
    [w.re, w.im, 0.5 * (z1.norm_sqr() - z2.norm_sqr())]
}

/// Orthogonal complex structure adapted to a tangent vector: the unique one
/// commuting with i that maps x to (v - (eps/2) i x) / a.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructureJ {
    mat: [[f64; 4]; 4],
}

impl ComplexStructureJ {
    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.mat
    }

    pub fn apply(&self, v: Vec4) -> Vec4 {
        let m = &self.mat;
        let mut out = [0.0; 4];
        for (r, row) in m.iter().enumerate() {
            out[r] = dot4(*row, v);
        }
        out
    }
}

/// Half the frequency gap: a = (1/2) sqrt(eps^2 + 4(c^2 - eps*delta)).
pub fn half_freq_gap(t: &TangentVector, m: MagneticParams) -> f64 {
    let c2 = dot4(t.vec, t.vec);
    let delta = t.reeb_component();
    let disc = m.epsilon * m.epsilon + 4.0 * (c2 - m.epsilon * delta);
    0.5 * disc.max(0.0).sqrt()
}

/// Build the adapted complex structure J(x, v, eps).
///
/// J x is pinned by the flow; on the orthogonal complement of span{x, Jx} the
/// action is a quarter turn whose sense is fixed once globally so that J
/// commutes with i (a startup self-test pins the sign).
pub fn construct_j(t: &TangentVector, m: MagneticParams) -> Result<ComplexStructureJ> {
    let a = half_freq_gap(t, m);
    let scale = t.speed().max(m.epsilon).max(1.0);
    if a < 1e-9 * scale {
        return Err(OrbitError::DegenerateInput(format!(
            "frequency gap {a} vanishes; adapted structure undefined"
        )));
    }
    let x = t.base.coords();
    let w = scale4(
        sub4(t.vec, scale4(mul_i(x), 0.5 * m.epsilon)),
        1.0 / a,
    );
    debug_assert!((norm4(w) - 1.0).abs() < 1e-8, "|v - (eps/2) i x| != a");
    Ok(build_j_from_frame(x, w, orientation_sign()))
}

/// Gram-Schmidt an oriented basis (e1, e2) of span{x, w}-perp from the fixed
/// seeds e_0..e_3, normalize det[x, w, e1, e2] = +1, then install the quarter
/// turn with the given sign.
fn build_j_from_frame(x: Vec4, w: Vec4, sigma: f64) -> ComplexStructureJ {
    let mut frame: Vec<Vec4> = vec![x, w];
    for k in 0..4 {
        if frame.len() == 4 {
            break;
        }
        let mut e = [0.0; 4];
        e[k] = 1.0;
        for f in &frame {
            e = sub4(e, scale4(*f, dot4(e, *f)));
        }
        let n = norm4(e);
        if n > 0.3 {
            frame.push(scale4(e, 1.0 / n));
        }
    }
    debug_assert_eq!(frame.len(), 4);
    let (e1, mut e2) = (frame[2], frame[3]);
    if det4(x, w, e1, e2) < 0.0 {
        e2 = scale4(e2, -1.0);
    }
    // J x = w, J w = -x, J e1 = sigma e2, J e2 = -sigma e1
    let mut mat = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            mat[r][c] = w[r] * x[c] - x[r] * w[c] + sigma * (e2[r] * e1[c] - e1[r] * e2[c]);
        }
    }
    ComplexStructureJ { mat }
}

fn det4(c0: Vec4, c1: Vec4, c2: Vec4, c3: Vec4) -> f64 {
    let m = [c0, c1, c2, c3];
    let mut det = 0.0;
    // Laplace expansion along the first row of the column matrix
    for (j, sign) in [(0, 1.0), (1, -1.0), (2, 1.0), (3, -1.0)] {
        let cols: Vec<usize> = (0..4).filter(|&c| c != j).collect();
        let sub = [
            [m[cols[0]][1], m[cols[1]][1], m[cols[2]][1]],
            [m[cols[0]][2], m[cols[1]][2], m[cols[2]][2]],
            [m[cols[0]][3], m[cols[1]][3], m[cols[2]][3]],
        ];
        let d3 = sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
            - sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0])
            + sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0]);
        det += sign * m[j][0] * d3;
    }
    det
}

/// Commutator norm ||J i - i J||_max, the observable that pins the sign.
fn commutator_defect(j: &ComplexStructureJ) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        let ji = j.apply(mul_i(e));
        let ij = mul_i(j.apply(e));
        worst = worst.max(norm4(sub4(ji, ij)));
    }
    worst
}

/// Global quarter-turn sign, pinned once by requiring [J, i] = 0 on a generic
/// probe input.
fn orientation_sign() -> f64 {
    static SIGN: OnceLock<f64> = OnceLock::new();
    *SIGN.get_or_init(|| {
        let x = SpherePoint::new([0.6, 0.0, 0.8, 0.0]).unwrap();
        let v = [0.0, 0.48, 0.0, 0.2, ];
        let v = sub4(v, scale4(x.coords(), dot4(x.coords(), v)));
        let t = TangentVector::new(x, v).unwrap();
        let m = MagneticParams::new(0.1).unwrap();
        let a = half_freq_gap(&t, m);
        let w = scale4(
            sub4(t.vec, scale4(mul_i(x.coords()), 0.5 * m.epsilon)),
            1.0 / a,
        );
        let mut best = (f64::INFINITY, 1.0);
        for sigma in [1.0, -1.0] {
            let j = build_j_from_frame(x.coords(), w, sigma);
            let d = commutator_defect(&j);
            if d < best.0 {
                best = (d, sigma);
            }
        }
        assert!(
            best.0 < TOL_ALG,
            "orientation self-test failed: residual {}",
            best.0
        );
        best.1
    })
}
