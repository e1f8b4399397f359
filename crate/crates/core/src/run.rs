//! Task pipelines behind the command-line front end. Every run writes its
//! artifacts into `out_dir` and a JSON manifest with the resolved config,
//! the material profiles used and the embedded invariant checks.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use log::info;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cloakmap::{truncated_cloak, CloakParams, OUTER_RADIUS};
use crate::config::{RunConfig, Task};
use crate::dnspec::{
    boundary_determinant, dn_eigenvalue, dn_pole_probe, dn_spectrum, find_exceptional_energies,
    find_trapping_potentials, radial_grid, trapped_mode, write_modes_csv, ScanOptions, TrappedMode,
};
use crate::error::{Error, Result};
use crate::homog::{laminate_mean_error, LayeredProfile};
use crate::presets::{self, Medium};
use crate::quantum::{build_cloaking_potential, gauge_transform};
use crate::radial::{solve_regular, Interior, ModeProblem};
use crate::scatter::{
    cross_sections, far_field, near_field, near_field_segment, scattering_coefficients, write_segment_csv,
    ScatteringResult,
};

type C64 = Complex64;

pub const UNITARITY_TOL: f64 = 1e-10;
pub const OPTICAL_TOL: f64 = 1e-8;
pub const INTERFACE_TOL: f64 = 1e-12;
pub const LAMINATE_TOL: f64 = 1e-11;
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub task: Task,
    pub config: RunConfig,
    pub profiles: Map<String, Value>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub results: Map<String, Value>,
}

impl Manifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed()
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    manifest: Manifest,
}

impl<'a> Ctx<'a> {
    fn artifact<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.cfg.out_dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        write(&mut out)?;
        out.flush()?;
        self.manifest.artifacts.push(name.to_string());
        Ok(())
    }

    fn json_artifact<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.artifact(name, |w| Ok(writeln!(w, "{text}")?))
    }

    /// Records `value <= tolerance`.
    fn check(&mut self, name: &str, value: f64, tolerance: f64) {
        let passed = value <= tolerance;
        if !passed {
            log::warn!("check {name} failed: {value:e} > {tolerance:e}");
        }
        self.manifest.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            passed,
        });
    }

    fn result<T: Serialize>(&mut self, key: &str, value: T) -> Result<()> {
        self.manifest.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    fn profile(&mut self, key: &str, profile: &LayeredProfile) -> Result<()> {
        self.manifest.profiles.insert(key.to_string(), serde_json::to_value(profile)?);
        Ok(())
    }

    fn cloak_params(&self) -> CloakParams {
        CloakParams {
            r_trunc: self.cfg.r_trunc,
            m: self.cfg.m,
            ..CloakParams::default()
        }
    }

    fn cloak(&self, q_in: f64) -> Result<Medium> {
        let mut m = presets::layered_cloak(&self.cloak_params(), self.cfg.n_fine_layers, q_in)?;
        m.interior = Interior::new(q_in, self.cfg.interior_radius());
        Ok(m)
    }

    fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            points_per_unit: self.cfg.points_per_unit,
            ..ScanOptions::default()
        }
    }
}

/// Executes the configured task. `config` must come from
/// [`RunConfig::validate`].
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut ctx = Ctx {
        cfg: config,
        manifest: Manifest {
            version: env!("CARGO_PKG_VERSION"),
            task: config.task,
            config: config.clone(),
            profiles: Map::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            results: Map::new(),
        },
    };
    info!("running task {}", config.task);
    match config.task {
        Task::Profile => task_profile(&mut ctx)?,
        Task::Scatter => task_scatter(&mut ctx)?,
        Task::Dn => task_dn(&mut ctx)?,
        Task::Resonance => task_resonance(&mut ctx)?,
        Task::Quantum => task_quantum(&mut ctx)?,
        Task::Fig1Left => task_fig1_left(&mut ctx)?,
        Task::Fig1Right => task_fig1_right(&mut ctx)?,
        Task::Fig2 => task_fig2(&mut ctx)?,
    }
    let manifest_path = config.manifest_path();
    if let Some(parent) = manifest_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&ctx.manifest)? + "\n")?;
    Ok(RunOutcome {
        manifest: ctx.manifest,
        manifest_path,
    })
}

fn task_profile(ctx: &mut Ctx) -> Result<()> {
    let medium = ctx.cloak(ctx.cfg.q_in)?;
    let aniso = truncated_cloak(&ctx.cloak_params())?;
    let radii = radial_grid(601);
    ctx.artifact("anisotropic_profile.csv", |w| aniso.write_csv(&radii, w))?;
    ctx.artifact("layered_profile.csv", |w| medium.profile.write_csv(w))?;
    ctx.json_artifact("layered_profile.json", &medium.profile)?;
    ctx.check("laminate_round_trip", laminate_mean_error(&medium.profile, &aniso), LAMINATE_TOL);
    ctx.result("n_layers", medium.profile.len())?;
    ctx.profile("cloak", &medium.profile)
}

/// Largest interface mismatch over `l = 0..=l_max`.
fn interface_residual(medium: &Medium, energy: f64, l_max: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for l in 0..=l_max {
        let sol = solve_regular(&ModeProblem::new(l, energy, &medium.profile, medium.interior))?;
        worst = sol.interface_residuals()?.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}

fn scatter_medium(ctx: &mut Ctx, key: &str, medium: &Medium) -> Result<ScatteringResult> {
    let cfg = ctx.cfg;
    let res = scattering_coefficients(&medium.profile, cfg.energy, medium.interior, cfg.l_max)?;
    let angles: Vec<f64> = (0..cfg.angle_samples)
        .map(|i| PI * i as f64 / (cfg.angle_samples - 1) as f64)
        .collect();
    let ff = far_field(&res, &angles);
    let cs = cross_sections(&res);
    ctx.artifact(&format!("{key}_coefficients.csv"), |w| res.write_csv(w))?;
    ctx.artifact(&format!("{key}_far_field.csv"), |w| ff.write_csv(w))?;
    ctx.check(&format!("{key}_unitarity"), res.unitarity_defect(), UNITARITY_TOL);
    ctx.check(&format!("{key}_optical_theorem"), cs.optical_residual, OPTICAL_TOL);
    ctx.check(
        &format!("{key}_interface_continuity"),
        interface_residual(medium, cfg.energy, cfg.l_max)?,
        INTERFACE_TOL,
    );
    ctx.result(
        key,
        json!({
            "sigma_total": res.sigma_total,
            "forward_amplitude": [cs.forward_amplitude.re, cs.forward_amplitude.im],
            "optical_residual": cs.optical_residual,
            "converged_l": res.converged_l,
            "amplitude_convention": ff.convention,
        }),
    )?;
    ctx.profile(key, &medium.profile)?;
    Ok(res)
}

fn task_scatter(ctx: &mut Ctx) -> Result<()> {
    let medium = ctx.cloak(ctx.cfg.q_in)?;
    let res = scatter_medium(ctx, "cloak", &medium)?;
    ctx.json_artifact("scatter_summary.json", &res)
}

fn task_dn(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let medium = ctx.cloak(cfg.q_in)?;
    let spec = dn_spectrum(&medium.profile, cfg.energy, medium.interior, cfg.l_max)?;
    let mut imag = 0.0f64;
    for l in 0..=cfg.l_max {
        let z = dn_eigenvalue(&medium.profile, C64::new(cfg.energy, 0.0), medium.interior, l)?;
        imag = imag.max(z.im.abs() / z.norm().max(1.0));
    }
    ctx.artifact("dn_spectrum.csv", |w| spec.write_csv(w))?;
    ctx.check("dn_real", imag, 1e-10);
    ctx.check(
        "cloak_interface_continuity",
        interface_residual(&medium, cfg.energy, cfg.l_max)?,
        INTERFACE_TOL,
    );
    ctx.result("max_deviation_from_free", spec.max_deviation())?;
    ctx.profile("cloak", &medium.profile)
}

/// Q_in roots at fixed energy for `l = 0..=scan_l_max`, sorted by `(l, Q)`.
fn trapping_scan(ctx: &Ctx, medium: &Medium) -> Result<Vec<TrappedMode>> {
    let cfg = ctx.cfg;
    let mut modes = Vec::new();
    for l in 0..=cfg.scan_l_max {
        modes.extend(find_trapping_potentials(
            &medium.profile,
            cfg.energy,
            cfg.interior_radius(),
            l,
            cfg.q_scan,
            &ctx.scan_options(),
        )?);
    }
    Ok(modes)
}

/// The most strongly trapped mode of a scan.
fn most_trapped(modes: &[TrappedMode]) -> Option<&TrappedMode> {
    modes
        .iter()
        .min_by(|a, b| a.concentration.total_cmp(&b.concentration))
}

fn boundary_check(ctx: &mut Ctx, name: &str, modes: &[TrappedMode]) {
    let worst = modes.iter().map(|m| m.boundary_value).fold(0.0, f64::max);
    ctx.check(name, worst, BOUNDARY_TOL);
}

fn task_resonance(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let medium = ctx.cloak(cfg.q_in)?;
    let q_modes = trapping_scan(ctx, &medium)?;
    let mut e_modes = Vec::new();
    for l in 0..=cfg.scan_l_max {
        e_modes.extend(find_exceptional_energies(
            &medium.profile,
            medium.interior,
            l,
            cfg.e_scan,
            &ctx.scan_options(),
        )?);
    }
    let mut fits = Vec::new();
    for (i, mode) in e_modes.iter().enumerate() {
        let gap = e_modes
            .iter()
            .enumerate()
            .filter(|(j, m)| *j != i && m.l == mode.l)
            .map(|(_, m)| (m.energy - mode.energy).abs())
            .fold(cfg.e_scan.1 - cfg.e_scan.0, f64::min);
        let offsets: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .flat_map(|s| [s * gap, -s * gap])
            .collect();
        let fit = dn_pole_probe(&medium.profile, medium.interior, mode, &offsets)?;
        fits.push(json!({
            "l": mode.l,
            "energy": mode.energy,
            "residue": fit.residue,
            "constant": fit.constant,
            "residual": fit.residual,
            "simple_pole": fit.simple_pole,
        }));
    }
    ctx.artifact("trapping_potentials.csv", |w| write_modes_csv(&q_modes, w))?;
    ctx.artifact("exceptional_energies.csv", |w| write_modes_csv(&e_modes, w))?;
    ctx.json_artifact("trapped_modes.json", &json!({ "q_scan": q_modes, "e_scan": e_modes }))?;
    boundary_check(ctx, "dirichlet_boundary_value", &[q_modes.as_slice(), e_modes.as_slice()].concat());
    ctx.result("n_trapping_potentials", q_modes.len())?;
    ctx.result("n_exceptional_energies", e_modes.len())?;
    ctx.result("pole_fits", fits)?;
    ctx.profile("cloak", &medium.profile)
}

fn segment_x(n: usize) -> Vec<f64> {
    radial_grid(n)
}

fn task_quantum(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let medium = ctx.cloak(cfg.q_in)?;
    let potential = build_cloaking_potential(&medium.profile, cfg.energy, medium.interior.radius);
    let xs = segment_x(cfg.segment_samples);
    let u = near_field_segment(&medium.profile, cfg.energy, medium.interior, cfg.l_max, &xs)?;
    let psi = gauge_transform(&medium.profile, cfg.energy, &xs, &u.iter().map(|s| s.u).collect::<Vec<_>>())?;
    ctx.json_artifact("cloaking_potential.json", &potential)?;
    ctx.artifact("segment_u.csv", |w| write_segment_csv(&u, w))?;
    ctx.artifact("segment_psi.csv", |w| psi.write_csv(w))?;
    ctx.check("gauge_interior_factor", gauge_factor_error(&psi.radii, &psi.psi, &u), 0.0);
    ctx.result("sup_smooth_potential", potential.sup_smooth())?;
    ctx.profile("cloak", &medium.profile)
}

/// `max |ψ - √2 u|` over samples inside `B(1)`.
fn gauge_factor_error(radii: &[f64], psi: &[C64], u: &[crate::scatter::FieldSample]) -> f64 {
    radii
        .iter()
        .zip(psi)
        .zip(u)
        .filter(|((r, _), _)| **r < 1.0)
        .map(|((_, p), s)| (p - s.u * 2f64.sqrt()).norm())
        .fold(0.0, f64::max)
}

/// Points of the plane `y = 0` inside `B(3)` on an `n × n` grid.
fn plane_grid(n: usize) -> Vec<[f64; 3]> {
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = -OUTER_RADIUS + 2.0 * OUTER_RADIUS * i as f64 / (n - 1) as f64;
            let z = -OUTER_RADIUS + 2.0 * OUTER_RADIUS * j as f64 / (n - 1) as f64;
            if x * x + z * z <= OUTER_RADIUS * OUTER_RADIUS {
                pts.push([x, 0.0, z]);
            }
        }
    }
    pts
}

const PLANE_SAMPLES: usize = 121;

fn task_fig1_left(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let cloak = ctx.cloak(cfg.q_in)?;
    let ball = presets::uncloaked_ball(cfg.q_in);
    let a = scatter_medium(ctx, "cloak", &cloak)?;
    let b = scatter_medium(ctx, "uncloaked_ball", &ball)?;
    let pts = plane_grid(PLANE_SAMPLES);
    let field = near_field(&cloak.profile, cfg.energy, cloak.interior, cfg.l_max, &pts, [0.0, 0.0, 1.0])?;
    ctx.artifact("fig1_left_plane.csv", |w| {
        writeln!(w, "x,z,re_u,im_u,abs_u")?;
        for s in &field {
            writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", s.point[0], s.point[2], s.u.re, s.u.im, s.u.norm())?;
        }
        Ok(())
    })?;
    ctx.result("cross_section_ratio", a.sigma_total / b.sigma_total)
}

fn trapped_medium(ctx: &mut Ctx) -> Result<(Medium, TrappedMode)> {
    let cfg = ctx.cfg;
    let base = ctx.cloak(cfg.q_in)?;
    let modes = trapping_scan(ctx, &base)?;
    let mode = most_trapped(&modes)
        .cloned()
        .ok_or_else(|| Error::Numeric(format!("no trapping potential in Q_in ∈ [{}, {}]", cfg.q_scan.0, cfg.q_scan.1)))?;
    let medium = ctx.cloak(mode.q_in)?;
    ctx.artifact("trapping_potentials.csv", |w| write_modes_csv(&modes, w))?;
    ctx.result(
        "trapped_mode",
        json!({
            "l": mode.l,
            "Q_in": mode.q_in,
            "energy": mode.energy,
            "concentration": mode.concentration,
            "interior_concentration": mode.interior_concentration,
            "boundary_value": mode.boundary_value,
        }),
    )?;
    boundary_check(ctx, "dirichlet_boundary_value", &modes);
    let d = boundary_determinant(&medium.profile, cfg.energy, medium.interior, mode.l)?;
    ctx.result("boundary_determinant_at_root", d)?;
    ctx.profile("trapped", &medium.profile)?;
    Ok((medium, mode))
}

fn task_fig1_right(ctx: &mut Ctx) -> Result<()> {
    let (medium, mode) = trapped_medium(ctx)?;
    ctx.artifact("fig1_right_radial.csv", |w| {
        writeln!(w, "r,phi")?;
        for (r, p) in mode.radii.iter().zip(&mode.radial_profile) {
            writeln!(w, "{r:.17e},{p:.17e}")?;
        }
        Ok(())
    })?;
    // φ(r) P_l(cos θ) on the plane y = 0, axis along z
    let pts = plane_grid(PLANE_SAMPLES);
    let radii: Vec<f64> = pts.iter().map(|p| (p[0] * p[0] + p[2] * p[2]).sqrt()).collect();
    let full = trapped_mode(&medium.profile, mode.energy, medium.interior, mode.l, &radii)?;
    ctx.artifact("fig1_right_plane.csv", |w| {
        writeln!(w, "x,z,phi")?;
        for ((p, r), v) in pts.iter().zip(&radii).zip(&full.radial_profile) {
            let cos_t = if *r == 0.0 { 1.0 } else { p[2] / r };
            let y = crate::specfun::legendre_all(mode.l, cos_t)[mode.l];
            writeln!(w, "{:.17e},{:.17e},{:.17e}", p[0], p[2], v * y)?;
        }
        Ok(())
    })?;
    Ok(())
}

fn task_fig2(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let xs = segment_x(cfg.segment_samples);
    let cloak = ctx.cloak(cfg.q_in)?;
    let u = near_field_segment(&cloak.profile, cfg.energy, cloak.interior, cfg.l_max, &xs)?;
    let uv: Vec<C64> = u.iter().map(|s| s.u).collect();
    let psi = gauge_transform(&cloak.profile, cfg.energy, &xs, &uv)?;
    ctx.artifact("fig2_cloak_u.csv", |w| write_segment_csv(&u, w))?;
    ctx.artifact("fig2_cloak_psi.csv", |w| psi.write_csv(w))?;
    ctx.check("gauge_interior_factor", gauge_factor_error(&psi.radii, &psi.psi, &u), 0.0);
    let inside = segment_stats(&xs, &uv, |r| r < 1.0);
    let outside = segment_stats(&xs, &uv, |r| r > 2.0);
    ctx.result("cloak_interior_max_over_exterior_mean", inside.max / outside.mean)?;
    ctx.profile("cloak", &cloak.profile)?;

    let (trapped, mode) = trapped_medium(ctx)?;
    let phi = trapped_mode(&trapped.profile, mode.energy, trapped.interior, mode.l, &xs)?;
    let pv: Vec<C64> = phi.radial_profile.iter().map(|&v| C64::new(v, 0.0)).collect();
    let tpsi = gauge_transform(&trapped.profile, cfg.energy, &xs, &pv)?;
    ctx.artifact("fig2_trapped_u.csv", |w| {
        writeln!(w, "x,phi")?;
        for (x, v) in xs.iter().zip(&phi.radial_profile) {
            writeln!(w, "{x:.17e},{v:.17e}")?;
        }
        Ok(())
    })?;
    ctx.artifact("fig2_trapped_psi.csv", |w| tpsi.write_csv(w))?;
    let t_in = segment_stats(&xs, &pv, |r| r < 1.0);
    let t_out = segment_stats(&xs, &pv, |r| r > 2.0);
    ctx.result("trapped_exterior_max_over_interior_max", t_out.max / t_in.max)
}

pub struct SegmentStats {
    pub max: f64,
    pub mean: f64,
}

/// Max and mean of `|u|` over samples whose radius satisfies `keep`.
pub fn segment_stats(xs: &[f64], u: &[C64], keep: impl Fn(f64) -> bool) -> SegmentStats {
    let vals: Vec<f64> = xs
        .iter()
        .zip(u)
        .filter(|(x, _)| keep(x.abs()))
        .map(|(_, v)| v.norm())
        .collect();
    SegmentStats {
        max: vals.iter().copied().fold(0.0, f64::max),
        mean: vals.iter().sum::<f64>() / vals.len().max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_grid_stays_in_ball() {
        let pts = plane_grid(11);
        assert!(pts.iter().all(|p| p[0] * p[0] + p[2] * p[2] <= 9.0 && p[1] == 0.0));
        assert!(pts.contains(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn stats_filter_by_radius() {
        let xs = [0.0, 0.5, 2.5, 3.0];
        let u = [C64::new(1.0, 0.0), C64::new(0.0, 3.0), C64::new(2.0, 0.0), C64::new(4.0, 0.0)];
        let s = segment_stats(&xs, &u, |r| r > 2.0);
        assert_eq!((s.max, s.mean), (4.0, 3.0));
        assert_eq!(segment_stats(&xs, &u, |r| r < 1.0).max, 3.0);
    }

    #[test]
    fn profile_task_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(Task::Profile);
        cfg.out_dir = dir.path().to_path_buf();
        let out = run(&cfg.validate().unwrap()).unwrap();
        assert!(out.passed());
        for a in &out.manifest.artifacts {
            assert!(dir.path().join(a).exists());
        }
        assert!(out.manifest_path.exists());
        assert!(out.manifest.profiles.contains_key("cloak"));
    }
}
