//! Inverse homogenization of the truncated cloak into an isotropic radial
//! laminate.
//!
//! Each coarse cell of the shell `(R, 2)` is replaced by two isotropic
//! phases, densities `a` and `a / (1 + b)`, of equal thickness. A fine
//! laminate of this kind responds radially with the harmonic mean and
//! tangentially with the arithmetic mean of the two densities, so matching
//! those means to `(σ_r, σ_t)` reproduces the anisotropic cloak in the limit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cloakmap::{AnisotropicProfile, CloakParams, DEVICE_RADIUS, OUTER_RADIUS};
use crate::error::{Error, Result};
use crate::specfun::{gauss_integrate, gauss_legendre};

/// One period of `h(r') = a / (1 + b p(r'))` with `p` the 0/1 square wave
/// (0 on `[0, 1/2)`, 1 on `[1/2, 1)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseCell {
    pub a: f64,
    pub b: f64,
}

impl TwoPhaseCell {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("two-phase cell needs a > 0, b >= 0 (a = {a}, b = {b})")));
        }
        Ok(TwoPhaseCell { a, b })
    }

    pub fn profile(&self, t: f64) -> f64 {
        if t.rem_euclid(1.0) < 0.5 {
            self.a
        } else {
            self.a / (1.0 + self.b)
        }
    }

    /// Densities of the two phases in radial order.
    pub fn phases(&self) -> [f64; 2] {
        [self.a, self.a / (1.0 + self.b)]
    }
}

/// Harmonic and arithmetic means of the cell profile over one period.
pub fn forward_means(cell: &TwoPhaseCell) -> (f64, f64) {
    let TwoPhaseCell { a, b } = *cell;
    (a / (1.0 + 0.5 * b), a * (2.0 + b) / (2.0 * (1.0 + b)))
}

/// Closed-form inverse of [`forward_means`].
pub fn invert_targets(omega1: f64, omega2: f64) -> Result<TwoPhaseCell> {
    if !(omega1 > 0.0) || !omega2.is_finite() {
        return Err(Error::Domain(format!("harmonic-mean target must be positive, got {omega1}")));
    }
    if omega1 > omega2 {
        return Err(Error::InfeasibleTarget { omega1, omega2 });
    }
    let t = omega2 / omega1;
    let b = 2.0 * (t - 1.0) + 2.0 * (t * t - t).sqrt();
    TwoPhaseCell::new(omega1 * (1.0 + 0.5 * b), b)
}

/// Result of solving the periodic cell problem for one laminate cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorCheck {
    /// Flux constant of the radial corrector, `C₀ = (∫ 1/h)^{-1}`.
    pub flux_constant: f64,
    /// `|W¹(1) - W¹(0)|`.
    pub periodicity_residual: f64,
    /// Largest tangential corrector value (zero for a laminate).
    pub tangential_max: f64,
    pub max_residual: f64,
}

/// Solves the 1-D cell problem `d/dr'(h (dW¹/dr' + 1)) = 0` on one period by
/// midpoint quadrature and checks it against the harmonic mean.
pub fn cell_corrector_check(cell: &TwoPhaseCell) -> CorrectorCheck {
    const N: usize = 4096;
    let dt = 1.0 / N as f64;
    let inv_h: Vec<f64> = (0..N).map(|i| 1.0 / cell.profile((i as f64 + 0.5) * dt)).collect();
    let c0 = 1.0 / (inv_h.iter().sum::<f64>() * dt);
    // dW¹/dr' = -1 + C₀/h, integrated from W¹(0) = 0
    let mut w = 0.0f64;
    let mut w_max = 0.0f64;
    for ih in &inv_h {
        w += (-1.0 + c0 * ih) * dt;
        w_max = w_max.max(w.abs());
    }
    let periodicity = w.abs();
    // tangential problems: h (dWʲ/dr' + e_r·eʲ) = C with e_r·eʲ = 0, and
    // periodicity ∫ C/h = 0 fixes C
    let radial_component = 0.0;
    let tangential_flux = radial_component / (inv_h.iter().sum::<f64>() * dt);
    let tangential_max = inv_h
        .iter()
        .scan(0.0, |acc, ih| {
            *acc += tangential_flux * ih * dt;
            Some(f64::abs(*acc))
        })
        .fold(0.0, f64::max);
    let (omega1, _) = forward_means(cell);
    let mean_mismatch = (c0 - omega1).abs() / omega1;
    CorrectorCheck {
        flux_constant: c0,
        periodicity_residual: periodicity,
        tangential_max,
        max_residual: periodicity.max(mean_mismatch).max(tangential_max),
    }
}

/// Piecewise-constant isotropic radial medium on `[0, 3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredProfile {
    pub breakpoints: Vec<f64>,
    pub sigma: Vec<f64>,
    pub bulk: Vec<f64>,
    /// Coarse-cell index for each layer produced by homogenization.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Option<usize>>,
}

impl LayeredProfile {
    pub fn new(breakpoints: Vec<f64>, sigma: Vec<f64>, bulk: Vec<f64>) -> Result<Self> {
        let p = LayeredProfile {
            breakpoints,
            sigma,
            bulk,
            provenance: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sigma.len();
        if n == 0 || self.breakpoints.len() != n + 1 || self.bulk.len() != n {
            return Err(Error::Domain("layered profile arrays have inconsistent lengths".into()));
        }
        if !self.provenance.is_empty() && self.provenance.len() != n {
            return Err(Error::Domain("provenance length differs from layer count".into()));
        }
        if self.breakpoints[0] != 0.0 || self.breakpoints[n] != OUTER_RADIUS {
            return Err(Error::Domain("breakpoints must run from 0 to 3".into()));
        }
        if self.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        if self.sigma.iter().chain(&self.bulk).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Domain("layer densities and bulk weights must be positive".into()));
        }
        if self.breakpoints[n - 1] > 2.5 || self.sigma[n - 1] != 1.0 || self.bulk[n - 1] != 1.0 {
            return Err(Error::Domain("outermost layer must be free space covering (5/2, 3]".into()));
        }
        Ok(())
    }

    /// Homogeneous free space on the whole ball.
    pub fn free() -> Self {
        LayeredProfile::new(vec![0.0, OUTER_RADIUS], vec![1.0], vec![1.0]).unwrap()
    }

    /// A homogeneous ball of radius `radius` embedded in free space.
    pub fn ball(radius: f64, sigma: f64, bulk: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 2.5) {
            return Err(Error::Domain(format!("ball radius {radius} not in (0, 5/2]")));
        }
        LayeredProfile::new(vec![0.0, radius, OUTER_RADIUS], vec![sigma, 1.0], vec![bulk, 1.0])
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    /// Outer radius of the innermost layer.
    pub fn core_radius(&self) -> f64 {
        self.breakpoints[1]
    }

    /// Index of the layer containing `r`; breakpoints belong to the inner layer.
    pub fn layer_index(&self, r: f64) -> usize {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        inner.partition_point(|&b| b < r)
    }

    pub fn sigma_at(&self, r: f64) -> f64 {
        self.sigma[self.layer_index(r)]
    }

    /// Inserts a breakpoint at `r` (no-op if one already exists there).
    pub fn split_at(&self, r: f64) -> LayeredProfile {
        if r <= 0.0 || r >= OUTER_RADIUS || self.breakpoints.iter().any(|&b| (b - r).abs() < 1e-14) {
            return self.clone();
        }
        let i = self.layer_index(r);
        let mut out = self.clone();
        out.breakpoints.insert(i + 1, r);
        out.sigma.insert(i, self.sigma[i]);
        out.bulk.insert(i, self.bulk[i]);
        if !out.provenance.is_empty() {
            out.provenance.insert(i, self.provenance[i]);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: LayeredProfile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// CSV with columns `r_lo,r_hi,sigma,bulk`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r_lo,r_hi,sigma,bulk")?;
        for i in 0..self.len() {
            let (lo, hi) = self.interval(i);
            writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", lo, hi, self.sigma[i], self.bulk[i])?;
        }
        Ok(())
    }
}

/// Replaces the anisotropic shell `(R, 2)` of a truncated cloak by
/// `2 n_cells` isotropic layers.
pub fn discretize_cloak(profile: &AnisotropicProfile, params: &CloakParams, n_cells: usize) -> Result<LayeredProfile> {
    params.validate()?;
    if n_cells == 0 {
        return Err(Error::Domain("need at least one coarse cell".into()));
    }
    if profile.is_singular() {
        return Err(Error::SingularProfile(
            "the ideal cloak has no finite laminate; truncate it first".into(),
        ));
    }
    let r_in = params.r_trunc;
    let width = (DEVICE_RADIUS - r_in) / n_cells as f64;

    let mut breakpoints = vec![0.0, r_in];
    let mut sigma = vec![params.inner_sigma];
    let mut bulk = vec![params.inner_bulk];
    let mut provenance = vec![None];
    for cell in 0..n_cells {
        let lo = r_in + cell as f64 * width;
        let mid = lo + 0.5 * width;
        let hi = if cell + 1 == n_cells { DEVICE_RADIUS } else { lo + width };
        let two_phase = invert_targets(profile.sigma_r(mid), profile.sigma_t(mid))?;
        let g = profile.bulk(mid);
        breakpoints.push(mid);
        breakpoints.push(hi);
        for density in two_phase.phases() {
            sigma.push(density);
            bulk.push(g);
            provenance.push(Some(cell));
        }
    }
    breakpoints.push(OUTER_RADIUS);
    sigma.push(1.0);
    bulk.push(1.0);
    provenance.push(None);

    let out = LayeredProfile {
        breakpoints,
        sigma,
        bulk,
        provenance,
    };
    out.validate()?;
    Ok(out)
}

/// Largest relative mismatch between the harmonic and arithmetic means of
/// each two-phase cell of `layered` and `(σ_r, σ_t)` of `target` at the cell
/// midpoint.
pub fn laminate_mean_error(layered: &LayeredProfile, target: &AnisotropicProfile) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..layered.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (layered.provenance.get(i).copied().flatten(), layered.provenance.get(i + 1).copied().flatten())
        else {
            continue;
        };
        if a != b {
            continue;
        }
        let (s1, s2) = (layered.sigma[i], layered.sigma[i + 1]);
        let mid = layered.breakpoints[i + 1];
        let harm = 2.0 / (1.0 / s1 + 1.0 / s2);
        let arith = 0.5 * (s1 + s2);
        let e1 = (harm / target.sigma_r(mid) - 1.0).abs();
        let e2 = (arith / target.sigma_t(mid) - 1.0).abs();
        worst = worst.max(e1).max(e2);
    }
    worst
}

/// Isotropic staircase for the monopole: each shell layer carries the
/// harmonic mean of `σ_r r^{-2}` (rescaled to the layer) and the mean of
/// `g^{1/2} r²`, so the flux and mass integrals of the `l = 0` equation are
/// exact layer by layer.
pub fn radial_staircase(profile: &AnisotropicProfile, n_shell: usize) -> Result<LayeredProfile> {
    if profile.is_singular() || n_shell == 0 {
        return Err(Error::SingularProfile("staircase needs a truncated profile".into()));
    }
    let rule = gauss_legendre(12);
    let r_in = profile.plateau_radius;
    let width = (DEVICE_RADIUS - r_in) / n_shell as f64;
    let mut breakpoints = vec![0.0];
    let mut sigma = vec![profile.inner_sigma];
    let mut bulk = vec![profile.inner_bulk];
    for i in 0..n_shell {
        let lo = r_in + i as f64 * width;
        let hi = lo + width;
        // ∫ dr / (σ r²) and ∫ g r² dr against the same integrals for a constant
        let inv = gauss_integrate(&rule, lo, hi, |r| 1.0 / (profile.sigma_r(r) * r * r));
        let inv_geom = 1.0 / lo - 1.0 / hi;
        let mass = gauss_integrate(&rule, lo, hi, |r| profile.bulk(r) * r * r);
        let mass_geom = (hi.powi(3) - lo.powi(3)) / 3.0;
        breakpoints.push(lo);
        sigma.push(inv_geom / inv);
        bulk.push(mass / mass_geom);
    }
    breakpoints.push(DEVICE_RADIUS);
    breakpoints.push(OUTER_RADIUS);
    sigma.push(1.0);
    bulk.push(1.0);
    LayeredProfile::new(breakpoints, sigma, bulk)
}
