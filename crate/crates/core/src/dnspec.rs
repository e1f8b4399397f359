//! Dirichlet-to-Neumann eigenvalues on `∂B(3)`, interior Neumann energies,
//! Dirichlet eigenvalues of the layered operator (almost trapped states)
//! and the pole structure of the DN map near them.
//!
//! For a radial medium the DN map is diagonal on spherical harmonics, so
//! everything here reduces to the boundary value `u(3)` of the regular
//! mode solution. Its zeros in `E` (or in `Q_in` at fixed `E`) are the
//! Dirichlet eigenvalues.

use std::io::Write;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cloakmap::{DEVICE_RADIUS, OUTER_RADIUS};
use crate::error::{Error, Result};
use crate::homog::LayeredProfile;
use crate::radial::{solve_regular, Interior, ModeProblem, ModeSolution};
use crate::specfun::{bessel_pair, gauss_legendre, MAX_ORDER};

type C64 = Complex64;

/// `|u(3)|` below this (unit-norm trace) counts as a Dirichlet eigenvalue.
pub const DIRICHLET_THRESHOLD: f64 = 1e-12;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `λ_l = ∂_r u(3) / u(3)` for the regular solution (σ = 1 at `r = 3`).
pub fn dn_eigenvalue(profile: &LayeredProfile, energy: C64, interior: Interior, l: usize) -> Result<C64> {
    let problem = ModeProblem {
        l,
        energy,
        profile,
        interior,
    };
    let sol = solve_regular(&problem)?;
    let [u, flux] = sol.trace;
    if u.norm() < DIRICHLET_THRESHOLD {
        return Err(Error::AtDirichletEigenvalue { l, energy: energy.re });
    }
    let sigma = profile.sigma[profile.len() - 1];
    Ok(flux / (sigma * u))
}

/// Free-space value `κ j_l'(3κ) / j_l(3κ)` with `κ = √E`.
pub fn free_dn_eigenvalue(energy: C64, l: usize) -> Result<C64> {
    let kappa = energy.sqrt();
    if kappa.norm() < 1e-8 {
        // harmonic limit: u = r^l
        return Ok(c(l as f64 / OUTER_RADIUS));
    }
    let p = bessel_pair(l, kappa * OUTER_RADIUS)?;
    let flux = kappa * p.jp;
    if p.j.norm() < DIRICHLET_THRESHOLD * (p.j.norm_sqr() + flux.norm_sqr()).sqrt() {
        return Err(Error::AtDirichletEigenvalue { l, energy: energy.re });
    }
    Ok(flux / p.j)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DNSpectrum {
    pub energy: f64,
    pub lambda: Vec<f64>,
    pub reference: Vec<f64>,
}

impl DNSpectrum {
    /// `max_l |λ_l - λ_l^free|`.
    pub fn max_deviation(&self) -> f64 {
        self.lambda
            .iter()
            .zip(&self.reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `E,l,lambda,lambda_free`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "E,l,lambda,lambda_free")?;
        for (l, (a, b)) in self.lambda.iter().zip(&self.reference).enumerate() {
            writeln!(out, "{:.17e},{l},{:.17e},{:.17e}", self.energy, a, b)?;
        }
        Ok(())
    }
}

/// DN eigenvalues for `l = 0..=l_max` at real energy.
pub fn dn_spectrum(profile: &LayeredProfile, energy: f64, interior: Interior, l_max: usize) -> Result<DNSpectrum> {
    if l_max > MAX_ORDER {
        return Err(Error::Domain(format!("l_max = {l_max} exceeds {MAX_ORDER}")));
    }
    let pairs = (0..=l_max)
        .into_par_iter()
        .map(|l| {
            let a = dn_eigenvalue(profile, c(energy), interior, l)?;
            let b = free_dn_eigenvalue(c(energy), l)?;
            Ok((a.re, b.re))
        })
        .collect::<Result<Vec<_>>>()?;
    let (lambda, reference) = pairs.into_iter().unzip();
    Ok(DNSpectrum {
        energy,
        lambda,
        reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Grid density per unit of the scanned parameter.
    pub points_per_unit: usize,
    /// Absolute tolerance on the polished root.
    pub x_tol: f64,
    /// Local refinement factor around near-zero minima of `|D|`.
    pub refine: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            points_per_unit: 2000,
            x_tol: 1e-13,
            refine: 64,
        }
    }
}

/// Illinois regula falsi on a bracket with `f(a) f(b) < 0`.
fn polish<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> Result<f64> {
    let mut side = 0;
    for _ in 0..200 {
        let x = if fa == fb { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        let x = if x > a.min(b) && x < a.max(b) { x } else { 0.5 * (a + b) };
        let fx = f(x)?;
        if fx == 0.0 || (b - a).abs() < tol {
            return Ok(x);
        }
        if (fx > 0.0) == (fb > 0.0) {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

fn grid(lo: f64, hi: f64, points_per_unit: usize) -> Vec<f64> {
    let n = (((hi - lo) * points_per_unit as f64).ceil() as usize).max(2);
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Roots of a real function on `[lo, hi]`: sign changes on a uniform grid,
/// plus a refined look at interior local minima of `|f|` that do not change
/// sign. Results are sorted and deduplicated.
pub fn scan_roots<F>(f: F, lo: f64, hi: f64, opts: &ScanOptions) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("invalid scan interval [{lo}, {hi}]")));
    }
    let xs = grid(lo, hi, opts.points_per_unit);
    let fs = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut brackets = Vec::new();
    for i in 0..xs.len() - 1 {
        if fs[i] == 0.0 {
            brackets.push((xs[i], xs[i]));
        } else if fs[i] * fs[i + 1] < 0.0 {
            brackets.push((xs[i], xs[i + 1]));
        }
    }
    if *fs.last().unwrap() == 0.0 {
        brackets.push((hi, hi));
    }
    for i in 1..xs.len() - 1 {
        let (a, b, m) = (fs[i - 1].abs(), fs[i + 1].abs(), fs[i].abs());
        let same_sign = fs[i - 1] * fs[i] > 0.0 && fs[i] * fs[i + 1] > 0.0;
        if same_sign && m < a && m < b && m < 1e-3 {
            let fine = grid(xs[i - 1], xs[i + 1], opts.refine * opts.points_per_unit);
            let ff = fine.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
            for j in 0..fine.len() - 1 {
                if ff[j] * ff[j + 1] < 0.0 {
                    brackets.push((fine[j], fine[j + 1]));
                }
            }
        }
    }
    let mut roots = brackets
        .into_iter()
        .map(|(a, b)| {
            if a == b {
                Ok(a)
            } else {
                polish(&f, a, f(a)?, b, f(b)?, opts.x_tol)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * opts.x_tol);
    Ok(roots)
}

/// Neumann energies of `-Δ + Q_in` on `B(1)` in degree `l`: roots of
/// `j_l'(√(E - Q_in)) = 0`. For `l = 0` the constant mode `E = Q_in` is
/// included when it lies in the bracket.
pub fn interior_neumann_energies(q_in: f64, l: usize, bracket: (f64, f64), opts: &ScanOptions) -> Result<Vec<f64>> {
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    let mut out = Vec::new();
    if l == 0 && lo <= q_in && q_in <= hi {
        out.push(q_in);
    }
    let start = lo.max(q_in);
    if start >= hi {
        return Ok(out);
    }
    // the l = 0 derivative vanishes at E = Q_in; step off that endpoint
    let start = if l == 0 && start == q_in { start + 1e-9 } else { start };
    let g = |e: f64| -> Result<f64> {
        let x = (e - q_in).sqrt();
        if x == 0.0 {
            return Ok(if l == 1 { 1.0 / 3.0 } else { 0.0 });
        }
        Ok(bessel_pair(l, c(x))?.jp.re)
    };
    out.extend(scan_roots(g, start, hi, opts)?.into_iter().filter(|&e| e > q_in + 1e-6));
    Ok(out)
}

/// Phase that makes a real-parameter mode solution real: the innermost
/// regular solution is `j_l(iy r) = i^l × real` when the core is evanescent.
fn real_phase(sol: &ModeSolution) -> C64 {
    let k = sol.layers[0].basis.kappa;
    if k.re.abs() < k.im.abs() {
        C64::i().powu(sol.l as u32)
    } else {
        c(1.0)
    }
}

/// Boundary determinant `D = u(3)` of the unit-norm trace, made real.
pub fn boundary_determinant(profile: &LayeredProfile, energy: f64, interior: Interior, l: usize) -> Result<f64> {
    let sol = solve_regular(&ModeProblem::new(l, energy, profile, interior))?;
    Ok((sol.trace[0] * real_phase(&sol).conj()).re)
}

/// A Dirichlet eigenfunction of one degree, normalized in `L²(B(3))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrappedMode {
    pub l: usize,
    pub energy: f64,
    pub q_in: f64,
    /// Radius of the region carrying `Q_in`.
    pub interior_radius: f64,
    pub radii: Vec<f64>,
    /// Real radial profile `φ(r)`; the full eigenfunction is `φ(r) Y_lm`.
    pub radial_profile: Vec<f64>,
    /// `‖φ‖_{L²(B(3)∖B(2))} / ‖φ‖_{L²(B(3))}`.
    pub concentration: f64,
    /// `‖φ‖_{L²(B(ρ))} / ‖φ‖_{L²(B(3))}` with `ρ` the interior radius.
    pub interior_concentration: f64,
    /// `|φ(3)|` after normalization.
    pub boundary_value: f64,
}

/// Builds the normalized mode at a (polished) eigenvalue and samples it at
/// `radii` (within `[0, 3]`).
pub fn trapped_mode(profile: &LayeredProfile, energy: f64, interior: Interior, l: usize, radii: &[f64]) -> Result<TrappedMode> {
    let sol = solve_regular(&ModeProblem::new(l, energy, profile, interior))?;
    let phase = real_phase(&sol).conj();
    let log_ref = sol.layers.iter().map(|s| s.log_scale).fold(f64::NEG_INFINITY, f64::max);
    let phi = |r: f64| -> Result<f64> { Ok((sol.eval_with_reference(r, log_ref)?[0] * phase).re) };
    let rule = gauss_legendre(24);
    let rho = if interior.radius > 0.0 { interior.radius } else { sol.layers[0].r_hi };
    let mut total = 0.0;
    let mut outer = 0.0;
    let mut inner = 0.0;
    let mut cuts: Vec<f64> = sol.layers.iter().map(|s| s.r_hi).collect();
    cuts.extend([DEVICE_RADIUS, rho]);
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut part = 0.0;
        for (t, wt) in rule.0.iter().zip(&rule.1) {
            let r = mid + half * t;
            let v = phi(r)?;
            part += wt * v * v * r * r;
        }
        part *= half;
        total += part;
        if a >= DEVICE_RADIUS {
            outer += part;
        }
        if b <= rho {
            inner += part;
        }
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numeric(format!("mode norm {total} at E = {energy}")));
    }
    let norm = total.sqrt();
    let radial_profile = radii.iter().map(|&r| Ok(phi(r)? / norm)).collect::<Result<Vec<_>>>()?;
    Ok(TrappedMode {
        l,
        energy,
        q_in: interior.q_in,
        interior_radius: rho,
        boundary_value: (phi(OUTER_RADIUS)? / norm).abs(),
        radii: radii.to_vec(),
        radial_profile,
        concentration: (outer / total).sqrt(),
        interior_concentration: (inner / total).sqrt(),
    })
}

/// Uniform radial grid on `[0, 3]`.
pub fn radial_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| OUTER_RADIUS * i as f64 / (n.max(2) - 1) as f64).collect()
}

const PROFILE_SAMPLES: usize = 301;

/// Dirichlet eigenvalues of degree `l` in an energy interval.
pub fn find_exceptional_energies(
    profile: &LayeredProfile,
    interior: Interior,
    l: usize,
    interval: (f64, f64),
    opts: &ScanOptions,
) -> Result<Vec<TrappedMode>> {
    let f = |e: f64| boundary_determinant(profile, e, interior, l);
    scan_roots(f, interval.0, interval.1, opts)?
        .into_iter()
        .map(|e| trapped_mode(profile, e, interior, l, &radial_grid(PROFILE_SAMPLES)))
        .collect()
}

/// Values of `Q_in` on `B(interior_radius)` for which `energy` is a
/// Dirichlet eigenvalue in degree `l`.
pub fn find_trapping_potentials(
    profile: &LayeredProfile,
    energy: f64,
    interior_radius: f64,
    l: usize,
    q_interval: (f64, f64),
    opts: &ScanOptions,
) -> Result<Vec<TrappedMode>> {
    let f = |q: f64| boundary_determinant(profile, energy, Interior::new(q, interior_radius), l);
    scan_roots(f, q_interval.0, q_interval.1, opts)?
        .into_iter()
        .map(|q| trapped_mode(profile, energy, Interior::new(q, interior_radius), l, &radial_grid(PROFILE_SAMPLES)))
        .collect()
}

/// CSV with columns `Q_in,E_n,l,concentration,interior_concentration`.
pub fn write_modes_csv<W: Write>(modes: &[TrappedMode], mut out: W) -> Result<()> {
    writeln!(out, "Q_in,E_n,l,concentration,interior_concentration")?;
    for m in modes {
        writeln!(
            out,
            "{:.17e},{:.17e},{},{:.17e},{:.17e}",
            m.q_in, m.energy, m.l, m.concentration, m.interior_concentration
        )?;
    }
    Ok(())
}

/// Least-squares fit `λ(E_n + δ) ≈ c₋₁/δ + c₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleFit {
    pub residue: f64,
    pub constant: f64,
    /// `‖fit - data‖₂ / ‖data‖₂`.
    pub residual: f64,
    pub simple_pole: bool,
    pub offsets: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn fit_simple_pole(offsets: &[f64], values: &[f64]) -> Result<PoleFit> {
    if offsets.len() < 2 || offsets.len() != values.len() || offsets.contains(&0.0) {
        return Err(Error::Domain("pole fit needs at least two nonzero offsets".into()));
    }
    // normal equations in the basis (1/δ, 1)
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&d, &v) in offsets.iter().zip(values) {
        let x = 1.0 / d;
        s11 += x * x;
        s12 += x;
        s22 += 1.0;
        b1 += x * v;
        b2 += v;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-300 {
        return Err(Error::Numeric("degenerate pole fit".into()));
    }
    let residue = (b1 * s22 - b2 * s12) / det;
    let constant = (s11 * b2 - s12 * b1) / det;
    let (mut err, mut norm) = (0.0, 0.0);
    for (&d, &v) in offsets.iter().zip(values) {
        let e = residue / d + constant - v;
        err += e * e;
        norm += v * v;
    }
    let residual = (err / norm).sqrt();
    let simple_pole = residual <= 0.1;
    if !simple_pole {
        warn!("DN data is not dominated by a simple pole (fit residual {residual:.3e})");
    }
    Ok(PoleFit {
        residue,
        constant,
        residual,
        simple_pole,
        offsets: offsets.to_vec(),
        values: values.to_vec(),
    })
}

/// Evaluates `λ_l` around a Dirichlet eigenvalue and fits the pole.
pub fn dn_pole_probe(profile: &LayeredProfile, interior: Interior, mode: &TrappedMode, offsets: &[f64]) -> Result<PoleFit> {
    let values = offsets
        .par_iter()
        .map(|&d| Ok(dn_eigenvalue(profile, c(mode.energy + d), interior, mode.l)?.re))
        .collect::<Result<Vec<_>>>()?;
    fit_simple_pole(offsets, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use std::f64::consts::PI;

    #[test]
    fn free_profile_matches_closed_form() {
        let m = presets::free_space();
        for l in 0..=10 {
            for &e in &[0.3, 2.0, 7.5] {
                let a = dn_eigenvalue(&m.profile, c(e), m.interior, l).unwrap();
                let b = free_dn_eigenvalue(c(e), l).unwrap();
                assert!((a - b).norm() < 1e-10 * b.norm().max(1.0), "l={l} E={e}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn free_l0_vanishes_in_harmonic_limit() {
        for &e in &[1e-4, 1e-6, 1e-8] {
            let k: f64 = f64::sqrt(e);
            let want = k / (3.0 * k).tan() - 1.0 / 3.0;
            let got = free_dn_eigenvalue(c(e), 0).unwrap().re;
            assert!((got - want).abs() < 1e-9 && got.abs() < 1e-3);
        }
    }

    #[test]
    fn large_degree_asymptotics() {
        for &l in &[20, 40, 60] {
            let lam = free_dn_eigenvalue(c(2.0), l).unwrap().re;
            assert!((lam - l as f64 / 3.0).abs() < 3.0 / l as f64, "l={l}: {lam}");
        }
    }

    #[test]
    fn at_dirichlet_eigenvalue_is_reported() {
        let m = presets::free_space();
        let e0 = (PI / 3.0).powi(2);
        match dn_eigenvalue(&m.profile, c(e0), m.interior, 0) {
            Err(Error::AtDirichletEigenvalue { l: 0, energy }) => assert_eq!(energy, e0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn neumann_energies() {
        let o = ScanOptions::default();
        let e = interior_neumann_energies(0.0, 0, (-1.0, 25.0), &o).unwrap();
        // tan x = x by bisection
        let mut a: f64 = 4.4;
        let mut b: f64 = 4.6;
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if (m.tan() - m) * (a.tan() - a) > 0.0 {
                a = m
            } else {
                b = m
            }
        }
        assert_eq!(e[0], 0.0);
        assert!((e[1] - a * a).abs() < 1e-9 && (e[1] - 20.1907).abs() < 1e-3, "{e:?}");
        assert_eq!(e.len(), 2);
        let e1 = interior_neumann_energies(0.0, 1, (0.0, 5.0), &o).unwrap();
        assert_eq!(e1.len(), 1);
        assert!((e1[0].sqrt() - 2.08158).abs() < 1e-5);
        assert!(interior_neumann_energies(10.0, 1, (0.0, 5.0), &o).unwrap().is_empty());
    }

    #[test]
    fn free_dirichlet_energies_and_modes() {
        let m = presets::free_space();
        let modes = find_exceptional_energies(&m.profile, m.interior, 0, (0.5, 5.0), &ScanOptions::default()).unwrap();
        assert_eq!(modes.len(), 2);
        for (n, mode) in modes.iter().enumerate() {
            let want = ((n + 1) as f64 * PI / 3.0).powi(2);
            assert!((mode.energy - want).abs() < 1e-10, "{} vs {want}", mode.energy);
            assert!(mode.boundary_value < 1e-10);
            // exterior share of sin(kr)/r on (2,3): closed form
            let k = want.sqrt();
            let int = |a: f64, b: f64| (b - a) / 2.0 - ((2.0 * k * b).sin() - (2.0 * k * a).sin()) / (4.0 * k);
            assert!((mode.concentration - (int(2.0, 3.0) / int(0.0, 3.0)).sqrt()).abs() < 1e-10);
        }
        assert!((modes[0].energy - 1.09662).abs() < 1e-5);
    }

    #[test]
    fn roots_are_bracketed() {
        let m = presets::uncloaked_ball(1.0);
        let modes = find_exceptional_energies(&m.profile, m.interior, 1, (0.5, 6.0), &ScanOptions::default()).unwrap();
        assert!(!modes.is_empty());
        for mode in &modes {
            let a = boundary_determinant(&m.profile, mode.energy - 1e-9, m.interior, 1).unwrap();
            let b = boundary_determinant(&m.profile, mode.energy + 1e-9, m.interior, 1).unwrap();
            assert!(a * b < 0.0);
        }
    }

    #[test]
    fn evanescent_core_determinant_is_real() {
        let m = presets::uncloaked_ball(5.0);
        for l in 0..4 {
            let sol = solve_regular(&ModeProblem::new(l, 2.0, &m.profile, m.interior)).unwrap();
            let z = sol.trace[0] * real_phase(&sol).conj();
            assert!(z.im.abs() < 1e-12 * z.norm().max(1e-300));
        }
    }

    #[test]
    fn free_residue_matches_expansion() {
        // near 3κ₀ = π: λ ≈ κ₀/(3(κ-κ₀)) and κ - κ₀ ≈ δ/(2κ₀), so c₋₁ = 2E₀/3
        let m = presets::free_space();
        let e0 = (PI / 3.0).powi(2);
        let mode = trapped_mode(&m.profile, e0, m.interior, 0, &radial_grid(11)).unwrap();
        let offsets: Vec<f64> = [1e-5, 1e-6, 1e-7].iter().flat_map(|d| [*d, -*d]).collect();
        let fit = dn_pole_probe(&m.profile, m.interior, &mode, &offsets).unwrap();
        assert!((fit.residue - 2.0 * e0 / 3.0).abs() < 1e-6);
        assert!(fit.simple_pole && fit.residual < 1e-2);
        // finite-difference oracle on 1/λ
        let h = 1e-6;
        let inv = |e: f64| 1.0 / free_dn_eigenvalue(c(e), 0).unwrap().re;
        let slope = (inv(e0 + h) - inv(e0 - h)) / (2.0 * h);
        assert!((1.0 / slope - fit.residue).abs() < 1e-6);
        // even part stays bounded
        for d in [1e-3, 1e-5] {
            let s = free_dn_eigenvalue(c(e0 + d), 0).unwrap().re + free_dn_eigenvalue(c(e0 - d), 0).unwrap().re;
            assert!(s.abs() < 1.0);
        }
    }

    #[test]
    fn pole_fit_flags_non_poles() {
        let d = [0.1, -0.1, 0.2, -0.2, 0.3];
        let v: Vec<f64> = d.iter().map(|x: &f64| x.sin() * 50.0).collect();
        assert!(!fit_simple_pole(&d, &v).unwrap().simple_pole);
        let v: Vec<f64> = d.iter().map(|x| 2.0 / x + 1.0).collect();
        let f = fit_simple_pole(&d, &v).unwrap();
        assert!((f.residue - 2.0).abs() < 1e-12 && (f.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scanner_finds_double_near_miss() {
        // (x - 0.5)² - 1e-9 has two close roots without a coarse sign change
        let f = |x: f64| Ok((x - 0.5).powi(2) - 1e-9);
        let r = scan_roots(f, 0.0, 1.0, &ScanOptions { points_per_unit: 100, ..Default::default() }).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - (0.5 - 1e-9f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn csv_layouts() {
        let s = DNSpectrum { energy: 2.0, lambda: vec![1.0], reference: vec![0.5] };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("E,l,lambda,lambda_free\n"));
    }
}
