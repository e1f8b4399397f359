//! Schrödinger picture of the layered cloak.
//!
//! With `ψ = σ^{1/2} u` the acoustic equation becomes
//! `(-Δ + V + Q - E) ψ = 0` inside every layer, where the smooth part of the
//! cloaking potential is `V = E (1 - g^{1/2}/σ)` outside the cloaked ball
//! and `0` inside it. The sphere-supported part `σ^{-1/2} Δ σ^{1/2}` is only
//! reported: its operational content is the pair of transmission conditions
//! already enforced by the acoustic solve.

use std::io::Write;

use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homog::LayeredProfile;
use crate::radial::Interior;

type C64 = Complex64;

/// Samples closer than this to a breakpoint are moved outward by it.
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// Singular weights of `Δσ^{1/2}` at one breakpoint. For a jump `[f]` of a
/// piecewise-constant `f` at radius `r`, `Δf ⊃ [f] δ'(r - r_i) + (2[f]/r_i) δ(r - r_i)`;
/// both weights are divided by the mean of the one-sided `σ^{1/2}` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceRecord {
    pub r: f64,
    pub sqrt_sigma_inner: f64,
    pub sqrt_sigma_outer: f64,
    pub jump: f64,
    pub delta_prime_weight: f64,
    pub delta_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloakingPotential {
    pub energy: f64,
    pub breakpoints: Vec<f64>,
    /// Smooth part per layer.
    pub smooth: Vec<f64>,
    pub interfaces: Vec<InterfaceRecord>,
    /// Radius of the ball on which `V = 0` and `Q_in` acts.
    pub interior_radius: f64,
}

pub fn build_cloaking_potential(profile: &LayeredProfile, energy: f64, interior_radius: f64) -> CloakingPotential {
    let smooth = (0..profile.len())
        .map(|i| {
            let (_, hi) = profile.interval(i);
            if hi <= interior_radius {
                0.0
            } else {
                energy * (1.0 - profile.bulk[i] / profile.sigma[i])
            }
        })
        .collect();
    let interfaces = (1..profile.len())
        .filter_map(|i| {
            let r = profile.breakpoints[i];
            let inner = profile.sigma[i - 1].sqrt();
            let outer = profile.sigma[i].sqrt();
            let jump = outer - inner;
            if jump == 0.0 {
                return None;
            }
            let mean = 0.5 * (inner + outer);
            Some(InterfaceRecord {
                r,
                sqrt_sigma_inner: inner,
                sqrt_sigma_outer: outer,
                jump,
                delta_prime_weight: jump / mean,
                delta_weight: 2.0 * jump / (r * mean),
            })
        })
        .collect();
    CloakingPotential {
        energy,
        breakpoints: profile.breakpoints.clone(),
        smooth,
        interfaces,
        interior_radius,
    }
}

impl CloakingPotential {
    pub fn sup_smooth(&self) -> f64 {
        self.smooth.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn layer_of(&self, r: f64) -> usize {
        let n = self.smooth.len();
        (1..=n).find(|&i| r <= self.breakpoints[i]).map_or(n - 1, |i| i - 1)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Gauge-transformed samples `ψ = σ^{1/2} u` at signed positions along a
/// line through the origin (`r = |x|`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchrodingerField {
    pub energy: f64,
    pub positions: Vec<f64>,
    pub radii: Vec<f64>,
    #[serde(skip)]
    pub psi: Vec<C64>,
    /// Breakpoints where `ψ` jumps.
    pub interfaces: Vec<f64>,
}

impl SchrodingerField {
    /// CSV with columns `x,re_psi,im_psi,abs_psi`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re_psi,im_psi,abs_psi")?;
        for (x, p) in self.positions.iter().zip(&self.psi) {
            writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", x, p.re, p.im, p.norm())?;
        }
        Ok(())
    }
}

pub fn gauge_transform(profile: &LayeredProfile, energy: f64, positions: &[f64], u: &[C64]) -> Result<SchrodingerField> {
    if positions.len() != u.len() {
        return Err(Error::Domain("positions and field values differ in length".into()));
    }
    let interior_breaks = &profile.breakpoints[1..profile.len()];
    let mut radii = Vec::with_capacity(positions.len());
    let mut psi = Vec::with_capacity(positions.len());
    for (&x, &v) in positions.iter().zip(u) {
        let mut r = x.abs();
        if interior_breaks.iter().any(|&b| (r - b).abs() <= SNAP_TOLERANCE) {
            warn!("sample at r = {r} lies on a layer interface; snapped outward by {SNAP_TOLERANCE:e}");
            r += SNAP_TOLERANCE;
        }
        psi.push(v * profile.sigma_at(r).sqrt());
        radii.push(r);
    }
    Ok(SchrodingerField {
        energy,
        positions: positions.to_vec(),
        radii,
        psi,
        interfaces: interior_breaks.to_vec(),
    })
}

/// Max over interior sub-grid points of
/// `|ψ'' + 2ψ'/r - l(l+1)ψ/r² - (V + Q - E)ψ| / max|ψ|` for a radial mode
/// `ψ_l` sampled on a uniform grid strictly inside one layer.
pub fn schrodinger_residual(field: &SchrodingerField, l: usize, potential: &CloakingPotential, interior: Interior) -> Result<f64> {
    let r = &field.radii;
    let n = r.len();
    if n < 5 {
        return Err(Error::InsufficientResolution(format!("{n} samples; at least 5 are needed")));
    }
    if r.windows(2).any(|w| w[1] <= w[0]) || r[0] <= 0.0 {
        return Err(Error::Domain("residual samples must be positive and increasing".into()));
    }
    let layer = potential.layer_of(r[0]);
    if potential.layer_of(r[n - 1]) != layer {
        return Err(Error::InsufficientResolution("samples straddle a layer interface".into()));
    }
    let h = (r[n - 1] - r[0]) / (n - 1) as f64;
    if r.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::Domain("residual samples must be uniformly spaced".into()));
    }
    let q = interior.q_at(r[0]).unwrap_or(0.0);
    let shift = potential.smooth[layer] + q - potential.energy;
    let ll = (l * (l + 1)) as f64;
    let scale = field.psi.iter().fold(0.0f64, |m, p| m.max(p.norm()));
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let (pm, p0, pp) = (field.psi[i - 1], field.psi[i], field.psi[i + 1]);
        let d2 = (pp - 2.0 * p0 + pm) / (h * h);
        let d1 = (pp - pm) / (2.0 * h);
        let res = d2 + d1 * (2.0 / r[i]) - p0 * (ll / (r[i] * r[i])) - p0 * shift;
        worst = worst.max(res.norm());
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloakmap::CloakParams;
    use crate::dnspec::dn_eigenvalue;
    use crate::presets;
    use crate::radial::{solve_regular, ModeProblem};
    use crate::specfun::bessel_pair;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn uniform(lo: f64, h: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + h * i as f64).collect()
    }

    #[test]
    fn gauge_factors() {
        let m = presets::reference_cloak(1.0);
        let xs = [0.3, -0.7, 2.7];
        let u = [c(1.0), c(-2.0), C64::new(0.5, 0.5)];
        let f = gauge_transform(&m.profile, 2.0, &xs, &u).unwrap();
        assert!((f.psi[0] - u[0] * 2f64.sqrt()).norm() < 1e-15);
        assert!((f.psi[1] - u[1] * 2f64.sqrt()).norm() < 1e-15);
        assert_eq!(f.psi[2], u[2]);
        assert_eq!(f.radii[1], 0.7);
    }

    #[test]
    fn gauge_on_laminate_phase() {
        // cell with targets (1, 2) has phase a = 2 + √2
        let p = LayeredProfile::new(vec![0.0, 1.0, 1.5, 3.0], vec![1.0, 2.0 + 2f64.sqrt(), 1.0], vec![1.0; 3]).unwrap();
        let f = gauge_transform(&p, 2.0, &[1.2], &[c(1.0)]).unwrap();
        assert!((f.psi[0].re - (2.0 + 2f64.sqrt()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn breakpoint_samples_are_snapped_outward() {
        let m = presets::uncloaked_ball(1.0);
        let f = gauge_transform(&m.profile, 2.0, &[1.0], &[c(1.0)]).unwrap();
        assert_eq!(f.radii[0], 1.0 + SNAP_TOLERANCE);
        assert_eq!(f.psi[0], c(1.0));
    }

    #[test]
    fn potential_layout() {
        let m = presets::reference_cloak(1.0);
        let v = build_cloaking_potential(&m.profile, 2.0, m.interior.radius);
        assert_eq!(v.smooth[0], 0.0);
        assert_eq!(*v.smooth.last().unwrap(), 0.0);
        assert!(v.interfaces.iter().all(|i| i.r > m.interior.radius - 1e-15));
        for (i, s) in v.smooth.iter().enumerate().skip(1) {
            let want = 2.0 * (1.0 - m.profile.bulk[i] / m.profile.sigma[i]);
            assert_eq!(*s, want);
        }
        let rec = v.interfaces[0];
        let mean = 0.5 * (rec.sqrt_sigma_inner + rec.sqrt_sigma_outer);
        assert!((rec.delta_weight - 2.0 * rec.jump / (rec.r * mean)).abs() < 1e-15);
        let free = build_cloaking_potential(&LayeredProfile::free(), 2.0, 0.0);
        assert!(free.smooth.iter().all(|&s| s == 0.0) && free.interfaces.is_empty());
    }

    #[test]
    fn potential_grows_as_truncation_shrinks() {
        let mut last = 0.0;
        for (r, n) in [(1.05, 12), (1.01, 60), (1.005, 120)] {
            let m = presets::layered_cloak(&CloakParams::with_radius(r), n, 1.0).unwrap();
            let sup = build_cloaking_potential(&m.profile, 2.0, r).sup_smooth();
            assert!(sup > last, "R={r}: {sup}");
            last = sup;
        }
    }

    #[test]
    fn residual_free_mode_is_second_order() {
        let k = 2f64.sqrt();
        let v = build_cloaking_potential(&LayeredProfile::free(), 2.0, 0.0);
        let mut prev = None;
        for &h in &[2e-3, 1e-3, 5e-4] {
            let r = uniform(2.6, h, (0.04 / h).round() as usize + 1);
            let u: Vec<C64> = r.iter().map(|&x| bessel_pair(2, c(k * x)).unwrap().j).collect();
            let f = gauge_transform(&LayeredProfile::free(), 2.0, &r, &u).unwrap();
            let res = schrodinger_residual(&f, 2, &v, Interior::none()).unwrap();
            assert!(res < 1e-6, "h={h}: {res}");
            if let Some(p) = prev {
                let ratio: f64 = p / res;
                assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
            }
            prev = Some(res);
        }
    }

    #[test]
    fn residual_interior_mode() {
        let m = presets::reference_cloak(1.0);
        let v = build_cloaking_potential(&m.profile, 2.0, m.interior.radius);
        let kap = (2.0f64 - 1.0).sqrt();
        let residual = |h: f64| {
            let r = uniform(0.4, h, (0.008 / h).round() as usize + 1);
            let u: Vec<C64> = r.iter().map(|&x| bessel_pair(1, c(kap * x)).unwrap().j).collect();
            let f = gauge_transform(&m.profile, 2.0, &r, &u).unwrap();
            schrodinger_residual(&f, 1, &v, m.interior).unwrap()
        };
        let (coarse, fine) = (residual(1e-3), residual(5e-4));
        assert!(coarse < 2e-6, "{coarse}");
        assert!((coarse / fine - 4.0).abs() < 0.2);
        // with the wrong Q the residual is O(1)
        let r = uniform(0.4, 1e-3, 9);
        let u: Vec<C64> = r.iter().map(|&x| bessel_pair(1, c(kap * x)).unwrap().j).collect();
        let f = gauge_transform(&m.profile, 2.0, &r, &u).unwrap();
        assert!(schrodinger_residual(&f, 1, &v, Interior::new(0.0, m.interior.radius)).unwrap() > 0.1);
    }

    #[test]
    fn residual_in_cloak_layer_uses_smooth_potential() {
        let m = presets::reference_cloak(1.0);
        let v = build_cloaking_potential(&m.profile, 2.0, m.interior.radius);
        let sol = solve_regular(&ModeProblem::new(1, 2.0, &m.profile, m.interior)).unwrap();
        let i = m.profile.len() - 3;
        let (lo, hi) = m.profile.interval(i);
        let h = (hi - lo) / 40.0;
        let r = uniform(lo + 5.0 * h, h, 31);
        let u: Vec<C64> = r.iter().map(|&x| sol.eval(x).unwrap()[0]).collect();
        let f = gauge_transform(&m.profile, 2.0, &r, &u).unwrap();
        assert!(schrodinger_residual(&f, 1, &v, m.interior).unwrap() < 1e-5);
    }

    #[test]
    fn residual_needs_five_samples_in_one_layer() {
        let v = build_cloaking_potential(&LayeredProfile::free(), 2.0, 0.0);
        let f = gauge_transform(&LayeredProfile::free(), 2.0, &[1.0, 1.1, 1.2, 1.3], &[c(1.0); 4]).unwrap();
        assert!(matches!(schrodinger_residual(&f, 0, &v, Interior::none()), Err(Error::InsufficientResolution(_))));
        let m = presets::uncloaked_ball(1.0);
        let vb = build_cloaking_potential(&m.profile, 2.0, 1.0);
        let r = uniform(0.9, 0.05, 5);
        let f = gauge_transform(&m.profile, 2.0, &r, &[c(1.0); 5]).unwrap();
        assert!(matches!(schrodinger_residual(&f, 0, &vb, m.interior), Err(Error::InsufficientResolution(_))));
    }

    #[test]
    fn dn_data_is_gauge_invariant() {
        // σ = 1 on the outermost layer: ψ and ∂_r ψ agree with u at r = 3
        let m = presets::reference_cloak(1.0);
        for l in 0..4 {
            let sol = solve_regular(&ModeProblem::new(l, 2.0, &m.profile, m.interior)).unwrap();
            let [u, w] = sol.trace;
            let f = gauge_transform(&m.profile, 2.0, &[3.0], &[u]).unwrap();
            let sigma = m.profile.sigma_at(3.0);
            let lam_psi = sigma.sqrt() * w / (sigma * f.psi[0] / sigma.sqrt());
            let lam_u = dn_eigenvalue(&m.profile, c(2.0), m.interior, l).unwrap();
            assert!((lam_psi - lam_u).norm() < 1e-12 * lam_u.norm().max(1.0));
        }
    }
}
