//! Plane-wave scattering by a radially layered medium.
//!
//! The incident wave `e^{ikz} = Σ i^l (2l+1) j_l(kr) P_l(cos θ)` is matched
//! per degree to `j_l(kr) + s_l h_l^(1)(kr)` outside the medium. Far-field
//! amplitudes use the convention `u^sc ~ a(θ) e^{ikr} / r`, so that
//! `a(θ) = (1/ik) Σ (2l+1) s_l P_l(cos θ)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homog::LayeredProfile;
use crate::radial::{solve_regular, Interior, ModeProblem, ModeSolution};
use crate::specfun::{legendre_all, MAX_ORDER};

type C64 = Complex64;

pub const AMPLITUDE_CONVENTION: &str = "u_sc ~ a(theta) exp(i k r) / r";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringResult {
    pub energy: f64,
    pub k: f64,
    pub l_max: usize,
    #[serde(serialize_with = "serialize_complex_vec")]
    pub s: Vec<C64>,
    pub sigma_total: f64,
    /// Smallest `l` with `|s_l| < 1e-14`, if reached.
    pub converged_l: Option<usize>,
}

fn serialize_complex_vec<S: serde::Serializer>(v: &[C64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl ScatteringResult {
    /// Builds a result from given coefficients (no medium attached).
    pub fn from_coefficients(k: f64, s: Vec<C64>) -> Self {
        let sigma_total = total_cross_section(k, &s);
        ScatteringResult {
            energy: k * k,
            k,
            l_max: s.len().saturating_sub(1),
            converged_l: s.iter().position(|z| z.norm() < 1e-14),
            s,
            sigma_total,
        }
    }

    /// `max_l ||1 + 2 s_l| - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.s
            .iter()
            .map(|s| ((ONE + 2.0 * s).norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `l,re_s,im_s`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "l,re_s,im_s")?;
        for (l, s) in self.s.iter().enumerate() {
            writeln!(out, "{l},{:.17e},{:.17e}", s.re, s.im)?;
        }
        Ok(())
    }
}

const ONE: C64 = C64::new(1.0, 0.0);

fn total_cross_section(k: f64, s: &[C64]) -> f64 {
    4.0 * PI / (k * k)
        * s.iter()
            .enumerate()
            .map(|(l, s)| (2 * l + 1) as f64 * s.norm_sqr())
            .sum::<f64>()
}

fn check_setup(profile: &LayeredProfile, energy: f64, interior: &Interior, l_max: usize) -> Result<()> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!(
            "scattering needs E > 0 (got {energy}); use the DN spectrum for other energies"
        )));
    }
    if l_max > MAX_ORDER {
        return Err(Error::Domain(format!("l_max = {l_max} exceeds {MAX_ORDER}")));
    }
    let outer_start = profile.breakpoints[profile.len() - 1];
    if interior.radius > outer_start {
        return Err(Error::Domain("interior potential must vanish in the outermost layer".into()));
    }
    Ok(())
}

/// `s_l` from the outermost-layer coefficients `(A, B)` of `A j_l + B y_l`.
fn coefficient_from_outer(l: usize, energy: f64, outer: [C64; 2]) -> Result<C64> {
    let [a, b] = outer;
    let denom = C64::i() * a - b;
    if denom.norm() <= 1e-14 * (a.norm() + b.norm()) {
        return Err(Error::ResonanceHit { l, energy });
    }
    Ok(b / denom)
}

/// Regular solution rescaled so its outermost layer equals `j_l + s_l h_l`.
#[derive(Debug, Clone)]
pub struct ScatteringMode {
    pub solution: ModeSolution,
    pub s: C64,
    /// Factor applied to [`ModeSolution::eval`].
    pub scale: C64,
}

impl ScatteringMode {
    pub fn radial(&self, r: f64) -> Result<C64> {
        Ok(self.solution.eval(r)?[0] * self.scale)
    }
}

pub fn scattering_mode(profile: &LayeredProfile, energy: f64, interior: Interior, l: usize) -> Result<ScatteringMode> {
    let solution = solve_regular(&ModeProblem::new(l, energy, profile, interior))?;
    let outer = solution.outer_coefficients();
    let s = coefficient_from_outer(l, energy, outer)?;
    let scale = (ONE + s) / outer[0];
    Ok(ScatteringMode { solution, s, scale })
}

/// Partial-wave coefficients `s_0 ..= s_{l_max}` for a plane wave at energy `E`.
pub fn scattering_coefficients(
    profile: &LayeredProfile,
    energy: f64,
    interior: Interior,
    l_max: usize,
) -> Result<ScatteringResult> {
    check_setup(profile, energy, &interior, l_max)?;
    let s = (0..=l_max)
        .into_par_iter()
        .map(|l| scattering_mode(profile, energy, interior, l).map(|m| m.s))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ScatteringResult::from_coefficients(energy.sqrt(), s);
    out.energy = energy;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub theta: Vec<f64>,
    pub amplitude: Vec<C64>,
    pub convention: &'static str,
}

impl FarField {
    /// CSV with columns `theta,re_a,im_a,abs2_a`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theta,re_a,im_a,abs2_a")?;
        for (t, a) in self.theta.iter().zip(&self.amplitude) {
            writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", t, a.re, a.im, a.norm_sqr())?;
        }
        Ok(())
    }
}

pub fn amplitude_at(result: &ScatteringResult, theta: f64) -> C64 {
    let p = legendre_all(result.s.len().saturating_sub(1), theta.cos());
    let sum: C64 = result
        .s
        .iter()
        .zip(&p)
        .enumerate()
        .map(|(l, (s, p))| s * ((2 * l + 1) as f64 * p))
        .sum();
    sum / C64::new(0.0, result.k)
}

/// Far-field amplitude at the given polar angles (radians from incidence).
pub fn far_field(result: &ScatteringResult, angles: &[f64]) -> FarField {
    FarField {
        theta: angles.to_vec(),
        amplitude: angles.iter().map(|&t| amplitude_at(result, t)).collect(),
        convention: AMPLITUDE_CONVENTION,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossSections {
    pub sigma_total: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub forward_amplitude: C64,
    /// `|σ - (4π/k) Im a(0)|` in units of `4π/k²`.
    pub optical_residual: f64,
}

fn serialize_complex<S: serde::Serializer>(z: &C64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(ser)
}

pub fn cross_sections(result: &ScatteringResult) -> CrossSections {
    let k = result.k;
    let forward = amplitude_at(result, 0.0);
    let unit = 4.0 * PI / (k * k);
    let optical = 4.0 * PI / k * forward.im;
    CrossSections {
        sigma_total: result.sigma_total,
        forward_amplitude: forward,
        optical_residual: (result.sigma_total - optical).abs() / unit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: [f64; 3],
    pub r: f64,
    pub u: C64,
}

/// Total field `u^tot` at arbitrary points for incidence along `direction`.
pub fn near_field(
    profile: &LayeredProfile,
    energy: f64,
    interior: Interior,
    l_max: usize,
    points: &[[f64; 3]],
    direction: [f64; 3],
) -> Result<Vec<FieldSample>> {
    check_setup(profile, energy, &interior, l_max)?;
    let dn = (direction.iter().map(|d| d * d).sum::<f64>()).sqrt();
    if !(dn > 0.0) {
        return Err(Error::Domain("incidence direction must be nonzero".into()));
    }
    let omega = direction.map(|d| d / dn);
    let modes = (0..=l_max)
        .into_par_iter()
        .map(|l| scattering_mode(profile, energy, interior, l))
        .collect::<Result<Vec<_>>>()?;
    points
        .iter()
        .map(|&p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if r > crate::cloakmap::OUTER_RADIUS * (1.0 + 1e-12) {
                return Err(Error::Domain(format!("sample point at r = {r} lies outside B(3)")));
            }
            let cos_t = if r == 0.0 {
                1.0
            } else {
                ((p[0] * omega[0] + p[1] * omega[1] + p[2] * omega[2]) / r).clamp(-1.0, 1.0)
            };
            let legendre = legendre_all(l_max, cos_t);
            let mut u = C64::new(0.0, 0.0);
            let mut i_pow = ONE;
            for (l, mode) in modes.iter().enumerate() {
                if r == 0.0 && l > 0 {
                    break;
                }
                u += i_pow * ((2 * l + 1) as f64 * legendre[l]) * mode.radial(r)?;
                i_pow *= C64::i();
            }
            Ok(FieldSample { point: p, r, u })
        })
        .collect()
}

/// Total field on the segment `{(x, 0, 0)}` for incidence along `+x`.
pub fn near_field_segment(
    profile: &LayeredProfile,
    energy: f64,
    interior: Interior,
    l_max: usize,
    xs: &[f64],
) -> Result<Vec<FieldSample>> {
    let points: Vec<[f64; 3]> = xs.iter().map(|&x| [x, 0.0, 0.0]).collect();
    near_field(profile, energy, interior, l_max, &points, [1.0, 0.0, 0.0])
}

/// CSV with columns `x,re_u,im_u,abs_u` (x = first coordinate).
pub fn write_segment_csv<W: Write>(samples: &[FieldSample], mut out: W) -> Result<()> {
    writeln!(out, "x,re_u,im_u,abs_u")?;
    for s in samples {
        writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", s.point[0], s.u.re, s.u.im, s.u.norm())?;
    }
    Ok(())
}
