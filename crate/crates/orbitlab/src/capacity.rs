//! The lower-bound pipeline: reparametrize the barrier flow so fast orbits
//! get period one, compose with an admissibility profile whose slope stays
//! below the certified minimal period at every energy, and sweep the orbit
//! census under the reparametrized clock. The output is a capacity estimate
//! against the reference upper value 2 pi.
//!
//! The reparametrization is
//!
//! ```text
//! h(y) = 2 pi (y / sqrt(eps) + sqrt(eps) / 2)   for y <= eps / 2
//! h(y) = 2 pi sqrt(2 y)                          for y >= eps / 2
//! ```
//!
//! which is C1 at the junction. Periods transform level-wise:
//! T_h = T / h'(y).

use crate::error::{OrbitError, Result};
use crate::geom::MagneticParams;
use crate::lens::{
    lens_short_orbit_scan, zp_symmetric_bounce_scan, CensusRecord, LensSpace, ScanGrid,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Piecewise reparametrization map attached to a strength value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReparamProfile {
    pub epsilon: f64,
}

impl ReparamProfile {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(OrbitError::InvalidParameter(format!(
                "strength {epsilon} outside [0, 1/2)"
            )));
        }
        Ok(ReparamProfile { epsilon })
    }

    pub fn value(&self, y: f64) -> f64 {
        h_eps(y, self.epsilon)
    }

    pub fn slope(&self, y: f64) -> f64 {
        h_eps_prime(y, self.epsilon)
    }
}

/// Reparametrization value at kinetic-plus-potential level y >= 0.
pub fn h_eps(y: f64, epsilon: f64) -> f64 {
    let y = y.max(0.0);
    if epsilon > 0.0 && y <= 0.5 * epsilon {
        TAU * (y / epsilon.sqrt() + 0.5 * epsilon.sqrt())
    } else {
        TAU * (2.0 * y).sqrt()
    }
}

/// First derivative of the reparametrization (the period divisor).
pub fn h_eps_prime(y: f64, epsilon: f64) -> f64 {
    if epsilon > 0.0 && y <= 0.5 * epsilon {
        TAU / epsilon.sqrt()
    } else {
        TAU / (2.0 * y).sqrt()
    }
}

/// Smooth (C-infinity junction) variant for sensitivity tests: blends the
/// two branches over |y - eps/2| < width.
pub fn h_eps_smooth(y: f64, epsilon: f64, width: f64) -> f64 {
    if epsilon == 0.0 {
        return h_eps(y, epsilon);
    }
    let junction = 0.5 * epsilon;
    let t = (y - junction + width) / (2.0 * width);
    let s = smoothstep(t);
    let lin = TAU * (y / epsilon.sqrt() + 0.5 * epsilon.sqrt());
    let sq = TAU * (2.0 * y.max(0.0)).sqrt();
    (1.0 - s) * lin + s * sq
}

/// C-infinity monotone step: 0 for t <= 0, 1 for t >= 1.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let sa = (-1.0 / t).exp();
    let sb = (-1.0 / (1.0 - t)).exp();
    sa / (sa + sb)
}

/// Period of the reparametrized flow at level y: T / h'(y).
pub fn reparam_period(t_base: f64, y: f64, epsilon: f64) -> f64 {
    t_base / h_eps_prime(y, epsilon)
}

/// Certified minimal reparametrized period of smooth orbits at level y:
/// one on the fast band, sqrt(eps / 2y) capped at 1 / sqrt(eps) below it.
pub fn certified_min_period(y: f64, epsilon: f64) -> f64 {
    if epsilon <= 0.0 {
        return 1.0;
    }
    if y >= 0.5 * epsilon {
        1.0
    } else {
        let speed = (2.0 * y.max(0.0)).sqrt();
        if speed <= epsilon {
            1.0 / epsilon.sqrt()
        } else {
            epsilon.sqrt() / speed
        }
    }
}

/// Monotone admissibility profile on the reparametrized range: plateaus at
/// both ends, slope bounded by (1 - margin) times the certified minimal
/// period at each energy. Stored as a dense cumulative table.
#[derive(Debug, Clone)]
pub struct AdmissibilityProfile {
    pub epsilon: f64,
    pub margin: f64,
    /// Domain of the reparametrized Hamiltonian: [h(0), 2 pi (1 - 2 eps)].
    pub domain: (f64, f64),
    /// Plateau-and-ramp width at each end.
    pub plateau: f64,
    /// Slope cap on the fast band (1 - margin).
    pub fast_band_slope: f64,
    pub oscillation: f64,
    grid_step: f64,
    values: Vec<f64>,
}

impl AdmissibilityProfile {
    pub fn value(&self, u: f64) -> f64 {
        let (a, b) = self.domain;
        if u <= a {
            return 0.0;
        }
        if u >= b {
            return self.oscillation;
        }
        let t = (u - a) / self.grid_step;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Slope of the profile at u (analytic form of the construction).
    pub fn slope(&self, u: f64) -> f64 {
        slope_profile(u, self.epsilon, self.margin, self.domain, self.plateau)
    }

    /// Certified period of the composed Hamiltonian's orbits at level u:
    /// tau(u) / f'(u), infinite on the plateaus.
    pub fn certified_composed_period(&self, u: f64) -> f64 {
        let fp = self.slope(u);
        if fp <= 0.0 {
            return f64::INFINITY;
        }
        let y = level_from_h(u, self.epsilon);
        certified_min_period(y, self.epsilon) / fp
    }
}

/// Invert the reparametrization map.
pub fn level_from_h(u: f64, epsilon: f64) -> f64 {
    let junction = h_eps(0.5 * epsilon, epsilon);
    if epsilon > 0.0 && u <= junction {
        (u / TAU - 0.5 * epsilon.sqrt()) * epsilon.sqrt()
    } else {
        let w = u / TAU;
        0.5 * w * w
    }
}

fn slope_profile(u: f64, epsilon: f64, margin: f64, domain: (f64, f64), plateau: f64) -> f64 {
    let (a, b) = domain;
    if u <= a + plateau || u >= b - plateau {
        return 0.0;
    }
    // smooth tapers over one plateau width after/before the flats
    let ramp_in = smoothstep((u - a - plateau) / plateau);
    let ramp_out = smoothstep((b - plateau - u) / plateau);
    let y = level_from_h(u, epsilon);
    (1.0 - margin) * certified_min_period(y, epsilon) * ramp_in * ramp_out
}

/// Build the admissibility profile. The margin controls the slope headroom
/// (fast-band slope is 1 - margin) and scales the end plateaus.
pub fn build_admissible(epsilon: f64, margin: f64) -> Result<AdmissibilityProfile> {
    if !(0.0 < epsilon && epsilon < 0.5) {
        return Err(OrbitError::InvalidParameter(format!(
            "strength {epsilon} outside (0, 1/2)"
        )));
    }
    if !(0.0 < margin && margin < 0.5) {
        return Err(OrbitError::InvalidParameter(format!(
            "margin {margin} outside (0, 1/2)"
        )));
    }
    let a = h_eps(0.0, epsilon);
    let b = TAU * (1.0 - 2.0 * epsilon);
    if b <= a {
        return Err(OrbitError::InvalidParameter(
            "domain collapsed: strength too large".to_string(),
        ));
    }
    let plateau = 0.05 * margin * (b - a);
    if 4.0 * plateau >= b - a {
        return Err(OrbitError::InvalidParameter(
            "plateaus overlap: margin too large for the domain".to_string(),
        ));
    }
    // integrate the slope profile on a dense grid
    let n = 40_000usize;
    let mut values = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    let du = (b - a) / n as f64;
    let mut prev_slope = slope_profile(a, epsilon, margin, (a, b), plateau);
    values.push(0.0);
    for k in 1..=n {
        let u = a + du * k as f64;
        let s = slope_profile(u, epsilon, margin, (a, b), plateau);
        acc += 0.5 * (prev_slope + s) * du;
        prev_slope = s;
        values.push(acc);
    }
    Ok(AdmissibilityProfile {
        epsilon,
        margin,
        domain: (a, b),
        plateau,
        fast_band_slope: 1.0 - margin,
        oscillation: acc,
        grid_step: du,
        values,
    })
}

/// Verdict of one lower-bound certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub epsilon: f64,
    pub p: i64,
    /// Oscillation of the composed admissible Hamiltonian.
    pub oscillation: f64,
    /// Minimal composed period over every census record (infinite when the
    /// census found nothing periodic).
    pub min_period_found: f64,
    pub reference_upper: f64,
    pub pass: bool,
    /// Number of seeds swept; the certificate holds over this budget only.
    pub budget_used: usize,
    /// The census record that broke the period-one barrier, if any.
    pub witness: Option<CensusRecord>,
    /// Minimal reparametrized (pre-composition) period observed.
    pub min_reparam_period: f64,
}

/// Run the full lower-bound pipeline for one (lens order, strength) pair.
///
/// The sweep splits the budget between the smooth short-orbit census and the
/// deck-symmetric bounce census, converts each record's period with the
/// level-wise reparametrization and the profile slope, and reports the
/// minimum. The estimate is certified over the given budget only; that
/// honest weakening is part of the record.
pub fn certify_lower_bound(
    lens: LensSpace,
    epsilon: f64,
    search_budget: usize,
) -> Result<CapacityEstimate> {
    let m = MagneticParams::new(epsilon)?;
    let margin = if epsilon > 0.0 { 0.5 * epsilon } else { 0.01 };
    let (oscillation, profile) = if epsilon > 0.0 {
        let prof = build_admissible(epsilon, margin)?;
        (prof.oscillation, Some(prof))
    } else {
        // the control run has no barrier and no slow band; the bare
        // reparametrization already exposes the short geodesics
        (TAU, None)
    };
    let smooth_grid = ScanGrid {
        n_seeds: search_budget / 2,
        seed: 1,
        speed_min: 0.05,
        speed_max: (1.0 - 2.0 * epsilon).max(0.2),
    };
    let mut records = lens_short_orbit_scan(lens, m, &smooth_grid);
    if epsilon == 0.0 {
        // the short axis geodesics form a measure-zero family; seed them
        // explicitly so the control run cannot miss its witness
        records.extend(axis_geodesic_records(lens, (search_budget / 20).max(4)));
    }
    if epsilon > 0.0 {
        let bounce_grid = ScanGrid {
            n_seeds: search_budget - smooth_grid.n_seeds,
            seed: 2,
            speed_min: 0.1,
            speed_max: (1.0 - 2.0 * epsilon).max(0.2),
        };
        records.extend(zp_symmetric_bounce_scan(lens, m, epsilon, &bounce_grid));
    }
    let mut min_composed = f64::INFINITY;
    let mut min_reparam = f64::INFINITY;
    let mut witness: Option<CensusRecord> = None;
    for rec in &records {
        let y = 0.5 * rec.speed * rec.speed;
        let t_h = reparam_period(rec.period, y, epsilon);
        min_reparam = min_reparam.min(t_h);
        let t_composed = match &profile {
            Some(prof) => {
                let u = h_eps(y, epsilon);
                let fp = prof.slope(u);
                if fp <= 0.0 {
                    f64::INFINITY
                } else {
                    t_h / fp
                }
            }
            None => t_h,
        };
        if t_composed < min_composed {
            min_composed = t_composed;
            witness = Some(rec.clone());
        }
    }
    let pass = min_composed > 1.0 && oscillation <= TAU;
    Ok(CapacityEstimate {
        epsilon,
        p: lens.p,
        oscillation,
        min_period_found: min_composed,
        reference_upper: TAU,
        pass,
        budget_used: search_budget,
        witness: if pass { None } else { witness },
        min_reparam_period: min_reparam,
    })
}

/// Deck-axis geodesic records for the zero-strength control: unit-speed
/// launches in the deck rotation direction close downstairs at 2 pi / p.
fn axis_geodesic_records(lens: LensSpace, n: usize) -> Vec<CensusRecord> {
    use crate::flow::solve_closed_form;
    use crate::geom::{mul_j, SpherePoint, TangentVector};
    let m = MagneticParams::new(0.0).unwrap();
    let mut out = Vec::new();
    for i in 0..n as u64 {
        let ang = 0.37 + 2.1 * i as f64;
        let x = match SpherePoint::new([
            0.6 * ang.cos(),
            0.6 * ang.sin(),
            0.8 * (1.3 * ang).cos(),
            0.8 * (1.3 * ang).sin(),
        ]) {
            Ok(x) => x,
            Err(_) => continue,
        };
        let t = match TangentVector::new(x, mul_j(x.coords())) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let orbit = match solve_closed_form(&t, m) {
            Ok(o) => o,
            Err(_) => continue,
        };
        if let Some(period) = crate::lens::projected_minimal_period(&orbit, lens, 10.0) {
            out.push(CensusRecord {
                epsilon: 0.0,
                p: lens.p,
                speed: 1.0,
                reeb: orbit.reeb,
                seed: i,
                kind: crate::lens::OrbitKind::Geodesic,
                period,
                zp_invariant: true,
                defect: 0.0,
                reeb_axis: false,
            });
        }
    }
    out
}

/// Dataset of the reparametrization graph (for the plot front end).
pub fn heps_dataset(epsilon: f64, n: usize) -> Vec<(f64, f64)> {
    let y_max = 0.5;
    (0..=n)
        .map(|k| {
            let y = y_max * k as f64 / n as f64;
            (y, h_eps(y, epsilon))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn junction_continuity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let eps: f64 = rng.gen_range(1e-4..0.49);
            let y = 0.5 * eps;
            let lin = TAU * (y / eps.sqrt() + 0.5 * eps.sqrt());
            let sq = TAU * (2.0 * y).sqrt();
            assert!((lin - sq).abs() < 1e-12, "value jump at the junction");
            let dl = TAU / eps.sqrt();
            let ds = TAU / (2.0 * y).sqrt();
            assert!((dl - ds).abs() < 1e-12, "slope jump at the junction");
            assert!((h_eps(y, eps) - lin).abs() < 1e-12);
            assert!((h_eps_prime(y, eps) - dl).abs() < 1e-9);
        }
    }

    #[test]
    fn h_reference_values() {
        let eps = 0.16;
        // y = eps/2 from both branches: 2 pi sqrt(eps)
        assert!((h_eps(0.08, eps) - TAU * 0.4).abs() < 1e-12);
        // unit speed, no potential: h(1/2) = 2 pi
        assert!((h_eps(0.5, eps) - TAU).abs() < 1e-12);
        // y = 0: pi sqrt(eps)
        assert!((h_eps(0.0, eps) - PI * 0.4).abs() < 1e-12);
    }

    #[test]
    fn h_monotone_increasing() {
        for eps in [0.01, 0.1, 0.3] {
            let data = heps_dataset(eps, 4000);
            for w in data.windows(2) {
                assert!(w[1].1 > w[0].1, "not monotone at y = {}", w[0].0);
            }
        }
    }

    #[test]
    fn smooth_variant_stays_close() {
        let eps = 0.1;
        for width in [1e-3, 1e-4] {
            let mut worst: f64 = 0.0;
            for k in 0..=1000 {
                let y = 0.5 * k as f64 / 1000.0;
                worst = worst.max((h_eps_smooth(y, eps, width) - h_eps(y, eps)).abs());
            }
            assert!(worst < 10.0 * width, "mollified map strays {worst}");
        }
    }

    #[test]
    fn reparam_period_branches() {
        let eps: f64 = 0.09;
        // slow branch: base period 2 pi / sqrt(eps) maps to one
        let t = reparam_period(TAU / eps.sqrt(), 0.25 * eps, eps);
        assert!((t - 1.0).abs() < 1e-12);
        // fast branch: base period 2 pi / c at level c^2 / 2 maps to one
        let c = 0.7;
        let t = reparam_period(TAU / c, 0.5 * c * c, eps);
        assert!((t - 1.0).abs() < 1e-12);
        // linearity
        let t2 = reparam_period(2.0 * TAU / c, 0.5 * c * c, eps);
        assert!((t2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn admissible_profile_shape() {
        let eps = 0.05;
        let prof = build_admissible(eps, 0.025).unwrap();
        let (a, b) = prof.domain;
        assert!((a - PI * eps.sqrt()).abs() < 1e-12);
        assert!((b - TAU * (1.0 - 2.0 * eps)).abs() < 1e-12);
        // plateaus: identically zero near the left end, flat at the right
        assert_eq!(prof.value(a), 0.0);
        assert_eq!(prof.value(a + 0.5 * prof.plateau), 0.0);
        assert!((prof.value(b) - prof.oscillation).abs() < 1e-12);
        assert!((prof.value(b - 0.5 * prof.plateau) - prof.oscillation).abs() < 1e-9);
        // monotone
        let mut prev = -1.0;
        for k in 0..=2000 {
            let u = a + (b - a) * k as f64 / 2000.0;
            let v = prof.value(u);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn admissible_slope_bound_on_grid() {
        // finite differences on a 10^4 grid against the certified cap
        let eps = 0.05;
        let margin = 0.025;
        let prof = build_admissible(eps, margin).unwrap();
        let (a, b) = prof.domain;
        let n = 10_000;
        let du = (b - a) / n as f64;
        for k in 1..n {
            let u = a + du * (k as f64 + 0.5);
            let fd = (prof.value(u + 0.45 * du) - prof.value(u - 0.45 * du)) / (0.9 * du);
            let y = level_from_h(u, eps);
            let cap = (1.0 - margin) * certified_min_period(y, eps);
            assert!(
                fd <= cap * (1.0 + 1e-4) + 1e-12,
                "slope {fd} above cap {cap} at u = {u}"
            );
        }
        // composed periods certified above one everywhere
        for k in 0..=1000 {
            let u = a + (b - a) * k as f64 / 1000.0;
            assert!(prof.certified_composed_period(u) > 1.0);
        }
    }

    #[test]
    fn admissible_oscillation_tracks_linear_law() {
        // oscillation = (1 - margin) * 2 pi (1 - 2.5 eps) up to plateau loss
        for eps in [0.1, 0.05, 0.02] {
            let margin = 0.5 * eps;
            let prof = build_admissible(eps, margin).unwrap();
            let want = (1.0 - margin) * TAU * (1.0 - 2.5 * eps);
            let rel = (prof.oscillation - want).abs() / want;
            assert!(
                rel < 0.02,
                "oscillation {} vs linear law {want} (eps = {eps})",
                prof.oscillation
            );
        }
    }

    #[test]
    fn degenerate_margin_is_rejected() {
        assert!(build_admissible(0.05, 0.0).is_err());
        assert!(build_admissible(0.05, 0.72).is_err());
        assert!(build_admissible(0.0, 0.01).is_err());
    }

    #[test]
    fn control_run_fails_with_short_geodesic_witness() {
        let lens = LensSpace::new(3).unwrap();
        let est = certify_lower_bound(lens, 0.0, 400).unwrap();
        assert!(!est.pass, "zero-strength control must fail");
        let w = est.witness.expect("control failure needs a witness");
        // the witness family: short geodesic circles of length 2 pi / p in
        // flow units, i.e. period * speed = 2 pi / p
        assert!(
            (w.period * w.speed - TAU / 3.0).abs() < 1e-6,
            "witness should be a short axis circle, got period {} speed {}",
            w.period,
            w.speed
        );
        assert!((est.min_period_found - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn smooth_census_estimate_structure() {
        let lens = LensSpace::new(1).unwrap();
        let est = certify_lower_bound(lens, 0.05, 300).unwrap();
        assert!(est.oscillation < TAU);
        assert!(est.min_reparam_period > 0.0);
        assert_eq!(est.reference_upper, TAU);
    }

    #[test]
    fn oscillation_monotone_in_strength() {
        let lens = LensSpace::new(3).unwrap();
        let mut prev = 0.0;
        for eps in [0.1, 0.05, 0.02] {
            let est = certify_lower_bound(lens, eps, 200).unwrap();
            assert!(
                est.oscillation > prev,
                "oscillation should grow as the strength shrinks"
            );
            prev = est.oscillation;
        }
    }

    #[test]
    fn smoothstep_is_a_step() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for k in 0..=100 {
            let v = smoothstep(k as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }
}
