//! Shared numerical kernels: bracketing root finders, an embedded
//! Dormand–Prince integrator, Gauss–Legendre quadrature and small fitting
//! helpers. Everything here is deterministic and allocation-light.

/// Outcome of one adaptive integration run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Completed,
    EventHit,
    StepSizeFloor,
}

/// Brent's method on a bracketing interval. `fa` and `fb` must have opposite
/// signs. Returns the root location to absolute tolerance `tol`.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
    max_iter: usize,
) -> f64 {
    assert!(
        fa * fb <= 0.0,
        "brent: interval [{a}, {b}] does not bracket a root ({fa}, {fb})"
    );
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..max_iter {
        if fb == 0.0 || (b - a).abs() < tol {
            return b;
        }
        let mut s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let use_bisect = !((lo.min(b) < s && s < lo.max(b))
            && !(mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            && !(!mflag && (s - b).abs() >= (c - d).abs() / 2.0)
            && !(mflag && (b - c).abs() < tol)
            && !(!mflag && (c - d).abs() < tol));
        if use_bisect {
            s = (a + b) / 2.0;
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    b
}

/// Scan `[lo, hi]` with `n` uniform cells and bisект every sign change of `f`
/// down to `tol`. Returns the roots in increasing order.
pub fn scan_roots<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..=n {
        let x1 = lo + (hi - lo) * k as f64 / n as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            roots.push(brent(&mut f, x0, x1, f0, f1, tol, 200));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * tol);
    roots
}

/// Dormand–Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand–Prince 5(4) for a fixed-size state vector.
///
/// `rhs(t, y, dy)` fills the derivative. `observer` is called after every
/// accepted step with `(t, y)`. If `event` is given, integration stops at the
/// first sign change of the event function (located by bisection on dense
/// substeps) and reports [`StepOutcome::EventHit`].
pub struct Dopri5<const N: usize> {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl<const N: usize> Default for Dopri5<N> {
    fn default() -> Self {
        Dopri5 {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.05,
        }
    }
}

impl<const N: usize> Dopri5<N> {
    pub fn integrate<R, O, E>(
        &self,
        mut rhs: R,
        t0: f64,
        t_end: f64,
        y0: [f64; N],
        mut observer: O,
        mut event: Option<E>,
    ) -> (f64, [f64; N], StepOutcome)
    where
        R: FnMut(f64, &[f64; N], &mut [f64; N]),
        O: FnMut(f64, &[f64; N]),
        E: FnMut(f64, &[f64; N]) -> f64,
    {
        let mut t = t0;
        let mut y = y0;
        let mut h = self.h_init.min(t_end - t0).max(self.h_min);
        let mut k = [[0.0; N]; 7];
        let mut ev_prev = event.as_mut().map(|e| e(t, &y));
        observer(t, &y);
        while t < t_end {
            if h > t_end - t {
                h = t_end - t;
            }
            rhs(t, &y, &mut k[0]);
            let mut y_stage = [0.0; N];
            for s in 1..7 {
                for i in 0..N {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += DP_A[s][j] * kj[i];
                    }
                    y_stage[i] = y[i] + h * acc;
                }
                let mut out = [0.0; N];
                rhs(t + DP_C[s] * h, &y_stage, &mut out);
                k[s] = out;
            }
            let mut y5 = [0.0; N];
            let mut err = 0.0_f64;
            for i in 0..N {
                let mut acc5 = 0.0;
                let mut acc4 = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc5 += DP_B5[j] * kj[i];
                    acc4 += DP_B4[j] * kj[i];
                }
                y5[i] = y[i] + h * acc5;
                let sc = self.abs_tol + self.rel_tol * y[i].abs().max(y5[i].abs());
                let e = h * (acc5 - acc4) / sc;
                err += e * e;
            }
            err = (err / N as f64).sqrt();
            if err <= 1.0 || h <= self.h_min * (1.0 + 1e-3) {
                let t_new = t + h;
                if let (Some(e), Some(pv)) = (event.as_mut(), ev_prev) {
                    let ev_new = e(t_new, &y5);
                    if pv * ev_new < 0.0 {
                        // locate the crossing by re-integrating fixed small steps
                        let root = brent(
                            |tc| {
                                let frac = (tc - t) / h;
                                let (_, yc) = self.fixed_probe(&mut rhs, t, &y, h * frac);
                                e(tc, &yc)
                            },
                            t,
                            t_new,
                            pv,
                            ev_new,
                            1e-13,
                            100,
                        );
                        let (_, y_root) = self.fixed_probe(&mut rhs, t, &y, root - t);
                        observer(root, &y_root);
                        return (root, y_root, StepOutcome::EventHit);
                    }
                    ev_prev = Some(ev_new);
                }
                t = t_new;
                y = y5;
                observer(t, &y);
                if h <= self.h_min * (1.0 + 1e-3) && err > 1.0 {
                    return (t, y, StepOutcome::StepSizeFloor);
                }
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h = (h * fac).clamp(self.h_min, self.h_max);
        }
        (t, y, StepOutcome::Completed)
    }

    /// One dense probe: integrate from (t, y) by dt with small fixed RK4 steps.
    /// Used only for event localization inside a single accepted step.
    fn fixed_probe<R>(&self, rhs: &mut R, t: f64, y: &[f64; N], dt: f64) -> (f64, [f64; N])
    where
        R: FnMut(f64, &[f64; N], &mut [f64; N]),
    {
        let n_sub = 16;
        let h = dt / n_sub as f64;
        let mut yc = *y;
        let mut tc = t;
        let mut k1 = [0.0; N];
        let mut k2 = [0.0; N];
        let mut k3 = [0.0; N];
        let mut k4 = [0.0; N];
        let mut tmp = [0.0; N];
        for _ in 0..n_sub {
            rhs(tc, &yc, &mut k1);
            for i in 0..N {
                tmp[i] = yc[i] + 0.5 * h * k1[i];
            }
            rhs(tc + 0.5 * h, &tmp, &mut k2);
            for i in 0..N {
                tmp[i] = yc[i] + 0.5 * h * k2[i];
            }
            rhs(tc + 0.5 * h, &tmp, &mut k3);
            for i in 0..N {
                tmp[i] = yc[i] + h * k3[i];
            }
            rhs(tc + h, &tmp, &mut k4);
            for i in 0..N {
                yc[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            tc += h;
        }
        (tc, yc)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Best rational approximation p/q of `r` with q <= q_max accepted when
/// |r - p/q| < eps / q^2. Continued-fraction convergents.
pub fn rational_approx(r: f64, q_max: u64, eps: f64) -> Option<(i64, u64)> {
    if !r.is_finite() {
        return None;
    }
    let neg = r < 0.0;
    let mut x = r.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0u64, x.floor() as i64, 1u64);
    for _ in 0..64 {
        let pf = p1 as f64 / q1 as f64;
        if (r.abs() - pf).abs() < eps / (q1 as f64 * q1 as f64) {
            return Some((if neg { -p1 } else { p1 }, q1));
        }
        let frac = x - x.floor();
        if frac < 1e-15 {
            break;
        }
        x = 1.0 / frac;
        let a = x.floor() as i64;
        let p2 = a * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        if q2 > q_max || p2 < 0 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    None
}

/// Least-squares line fit `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Circumcircle of three points in R^3: returns (center, radius).
/// Degenerate (collinear) inputs return None.
pub fn circumcircle3(p0: [f64; 3], p1: [f64; 3], p2: [f64; 3]) -> Option<([f64; 3], f64)> {
    let a = sub3(p1, p0);
    let b = sub3(p2, p0);
    let axb = cross3(a, b);
    let denom = 2.0 * dot3(axb, axb);
    if denom < 1e-30 {
        return None;
    }
    let la = dot3(a, a);
    let lb = dot3(b, b);
    let t = scale3(cross3(sub3(scale3(a, lb), scale3(b, la)), axb), -1.0 / denom);
    let center = add3(p0, t);
    Some((center, norm3(sub3(p0, center))))
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
pub fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
pub fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}
pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cos_root() {
        let f = |x: f64| x.cos();
        let r = brent(f, 1.0, 2.0, 1.0f64.cos(), 2.0f64.cos(), 1e-14, 100);
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        // exact for degree <= 31
        let int: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(10)).sum();
        assert!((int - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn rational_approx_hits_simple_fractions() {
        assert_eq!(rational_approx(1.5, 1_000_000, 1e-9), Some((3, 2)));
        assert_eq!(rational_approx(-3.0, 1_000_000, 1e-9), Some((-3, 1)));
        assert_eq!(rational_approx(2.0_f64.sqrt(), 1_000_000, 1e-9), None);
    }

    #[test]
    fn dopri5_harmonic_oscillator_energy() {
        let solver: Dopri5<2> = Dopri5::default();
        let rhs = |_t: f64, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let (_, y, out) = solver.integrate(
            rhs,
            0.0,
            100.0,
            [1.0, 0.0],
            |_, _| {},
            None::<fn(f64, &[f64; 2]) -> f64>,
        );
        assert_eq!(out, StepOutcome::Completed);
        let e = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((e - 0.5).abs() < 1e-9, "energy drift {}", (e - 0.5).abs());
    }

    #[test]
    fn dopri5_event_location() {
        let solver: Dopri5<2> = Dopri5::default();
        let rhs = |_t: f64, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let (t, _, out) = solver.integrate(
            rhs,
            0.0,
            10.0,
            [1.0, 0.0],
            |_, _| {},
            Some(|_t: f64, y: &[f64; 2]| y[0]),
        );
        assert_eq!(out, StepOutcome::EventHit);
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }
}
