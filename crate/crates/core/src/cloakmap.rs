//! Radial cloak geometry: the blow-up map, the ideal cloak it pushes
//! forward, and truncated (nonsingular) approximations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outer radius of the computational ball.
pub const OUTER_RADIUS: f64 = 3.0;
/// Outer radius of the cloaking device.
pub const DEVICE_RADIUS: f64 = 2.0;
/// Radius of the cloaked region for the ideal cloak.
pub const CLOAK_SURFACE: f64 = 1.0;

/// Maps a virtual radius in `(0, 3]` to the physical radius in `(1, 3]`.
pub fn blowup_map(y: f64) -> Result<f64> {
    if !(y > 0.0 && y <= OUTER_RADIUS) {
        return Err(Error::Domain(format!("blow-up map needs 0 < |y| <= 3, got {y}")));
    }
    Ok(if y > DEVICE_RADIUS { y } else { y / 2.0 + 1.0 })
}

pub fn inverse_blowup(r: f64) -> Result<f64> {
    if !(r > CLOAK_SURFACE && r <= OUTER_RADIUS) {
        return Err(Error::Domain(format!("inverse blow-up needs 1 < r <= 3, got {r}")));
    }
    Ok(if r > DEVICE_RADIUS { r } else { 2.0 * (r - 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloakParams {
    /// Truncation radius `R` in `(1, 2)`.
    pub r_trunc: f64,
    /// Bulk truncation index: `g_m = max(g, 1/m)`.
    pub m: f64,
    pub inner_sigma: f64,
    pub inner_bulk: f64,
}

impl Default for CloakParams {
    fn default() -> Self {
        CloakParams {
            r_trunc: 1.005,
            m: 1e8,
            inner_sigma: 2.0,
            inner_bulk: 8.0,
        }
    }
}

impl CloakParams {
    pub fn with_radius(r_trunc: f64) -> Self {
        CloakParams {
            r_trunc,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_trunc > 1.0 && self.r_trunc < 2.0) {
            return Err(Error::Domain(format!("truncation radius R = {} not in (1, 2)", self.r_trunc)));
        }
        if !(self.m >= 1.0) {
            return Err(Error::Domain(format!("bulk truncation index m = {} < 1", self.m)));
        }
        if !(self.inner_sigma > 0.0 && self.inner_bulk > 0.0) {
            return Err(Error::Domain("interior material must be positive".into()));
        }
        Ok(())
    }
}

/// Radially symmetric anisotropic medium: radial and tangential density
/// eigenvalues plus the bulk weight `g^{1/2}`, on the ball of radius 3.
///
/// Layout: a homogeneous plateau on `[0, plateau_radius]`, the pushed-forward
/// shell on `(plateau_radius, 2]`, free space on `(2, 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicProfile {
    pub plateau_radius: f64,
    pub inner_sigma: f64,
    pub inner_bulk: f64,
    /// Lower bound on `g^{1/2}` in the shell (`m^{-1/2}`), zero for none.
    pub bulk_floor: f64,
}

impl AnisotropicProfile {
    pub fn is_singular(&self) -> bool {
        self.plateau_radius <= CLOAK_SURFACE
    }

    pub fn sigma_r(&self, r: f64) -> f64 {
        if r <= self.plateau_radius {
            self.inner_sigma
        } else if r <= DEVICE_RADIUS {
            2.0 * (r - 1.0).powi(2) / (r * r)
        } else {
            1.0
        }
    }

    pub fn sigma_t(&self, r: f64) -> f64 {
        if r <= self.plateau_radius {
            self.inner_sigma
        } else if r <= DEVICE_RADIUS {
            2.0
        } else {
            1.0
        }
    }

    pub fn bulk(&self, r: f64) -> f64 {
        if r <= self.plateau_radius {
            self.inner_bulk
        } else if r <= DEVICE_RADIUS {
            (8.0 * (r - 1.0).powi(2) / (r * r)).max(self.bulk_floor)
        } else {
            1.0
        }
    }

    /// Radii where coefficients jump.
    pub fn discontinuities(&self) -> [f64; 2] {
        [self.plateau_radius, DEVICE_RADIUS]
    }

    pub fn sample(&self, r: f64) -> ProfileSample {
        ProfileSample {
            r,
            sigma_r: self.sigma_r(r),
            sigma_t: self.sigma_t(r),
            bulk: self.bulk(r),
        }
    }

    /// CSV with columns `r,sigma_r,sigma_t,bulk`.
    pub fn write_csv<W: Write>(&self, radii: &[f64], mut out: W) -> Result<()> {
        writeln!(out, "r,sigma_r,sigma_t,bulk")?;
        for &r in radii {
            let s = self.sample(r);
            writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", s.r, s.sigma_r, s.sigma_t, s.bulk)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub sigma_r: f64,
    pub sigma_t: f64,
    pub bulk: f64,
}

/// The pushforward of the identity by the blow-up map; degenerate at `r = 1`.
pub fn ideal_cloak() -> AnisotropicProfile {
    AnisotropicProfile {
        plateau_radius: CLOAK_SURFACE,
        inner_sigma: 2.0,
        inner_bulk: 8.0,
        bulk_floor: 0.0,
    }
}

/// The ideal cloak on `(R, 3]` with a homogeneous plateau on `[0, R]`
/// and `g` floored at `1/m` in the shell.
pub fn truncated_cloak(params: &CloakParams) -> Result<AnisotropicProfile> {
    params.validate()?;
    Ok(AnisotropicProfile {
        plateau_radius: params.r_trunc,
        inner_sigma: params.inner_sigma,
        inner_bulk: params.inner_bulk,
        bulk_floor: params.m.powf(-0.5),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pushforward `DF DFᵀ / det DF` of the identity through the blow-up map,
    /// with the Jacobian taken by central differences of the 3-D map.
    fn numeric_pushforward(r: f64) -> (f64, f64, f64) {
        let y = inverse_blowup(r).unwrap();
        // point on the x-axis; DF is diagonal there in (x, y, z)
        let map = |p: [f64; 3]| -> [f64; 3] {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let s = blowup_map(n).unwrap() / n;
            [p[0] * s, p[1] * s, p[2] * s]
        };
        let h = 1e-6 * y.max(1e-3);
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let mut p = [y, 0.0, 0.0];
            let mut q = p;
            p[k] += h;
            q[k] -= h;
            let (fp, fq) = (map(p), map(q));
            for i in 0..3 {
                jac[i][k] = (fp[i] - fq[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = (0..3).map(|k| jac[i][k] * jac[j][k]).sum::<f64>() / det;
            }
        }
        (s[0][0], s[1][1], 1.0 / det)
    }

    #[test]
    fn blowup_values() {
        assert_eq!(blowup_map(3.0).unwrap(), 3.0);
        assert_eq!(blowup_map(2.0).unwrap(), 2.0);
        assert_eq!(blowup_map(1.0).unwrap(), 1.5);
        assert!(blowup_map(0.0).is_err());
        assert_eq!(inverse_blowup(1.5).unwrap(), 1.0);
        assert_eq!(inverse_blowup(2.5).unwrap(), 2.5);
        assert!((inverse_blowup(1.005).unwrap() - 0.01).abs() < 1e-15);
        assert!(inverse_blowup(1.0).is_err());
    }

    #[test]
    fn inverse_matches_numeric_inversion() {
        // bisection on the monotone blow-up map
        let target = 1.005;
        let (mut lo, mut hi) = (1e-12, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if blowup_map(mid).unwrap() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - inverse_blowup(target).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn ideal_cloak_matches_numeric_pushforward() {
        let cloak = ideal_cloak();
        // deterministic scatter of 100 radii across (1, 3]
        for i in 0..100 {
            let u = ((i as f64 + 0.5) * 0.618_033_988_749_895).fract();
            let r = 1.0 + 1e-3 + u * (2.0 - 1e-3);
            if (r - 2.0).abs() < 1e-5 {
                continue;
            }
            let (sr, st, bulk) = numeric_pushforward(r);
            assert!((cloak.sigma_r(r) - sr).abs() < 1e-6 * sr.max(1e-6), "r={r}");
            assert!((cloak.sigma_t(r) - st).abs() < 1e-6 * st, "r={r}");
            assert!((cloak.bulk(r) - bulk).abs() < 1e-6 * bulk.max(1e-6), "r={r}");
        }
        assert!((numeric_pushforward(1.5).1 - 2.0).abs() < 1e-8);
    }

    #[test]
    fn ideal_cloak_limits() {
        let c = ideal_cloak();
        assert!(c.sigma_r(1.0 + 1e-9) < 1e-17);
        assert_eq!(c.bulk(0.5), 8.0);
        assert_eq!(c.sigma_t(0.5), 2.0);
        for r in [2.1, 2.5, 2.9, 3.0] {
            assert_eq!((c.sigma_r(r), c.sigma_t(r), c.bulk(r)), (1.0, 1.0, 1.0));
        }
        // det σ = g^{1/2} in the shell
        for r in [1.01, 1.3, 1.77, 1.99] {
            let det = c.sigma_r(r) * c.sigma_t(r).powi(2);
            assert!((det - c.bulk(r)).abs() < 1e-14 * det);
        }
    }

    #[test]
    fn truncated_values() {
        let t = truncated_cloak(&CloakParams::with_radius(1.005)).unwrap();
        let want = 2.0 * 0.005f64.powi(2) / 1.005f64.powi(2);
        assert!((t.sigma_r(1.005 + 1e-15) - want).abs() < 1e-12);
        assert!((want - 4.95e-5).abs() < 1e-7);
        assert_eq!(t.sigma_r(1.004), 2.0);
        assert_eq!(t.bulk(1.004), 8.0);
        assert_eq!((t.sigma_r(2.2), t.sigma_t(2.2), t.bulk(2.2)), (1.0, 1.0, 1.0));

        let p = CloakParams { m: 1e6, ..CloakParams::with_radius(1.005) };
        let t = truncated_cloak(&p).unwrap();
        let r: f64 = 1.01;
        let g = 64.0 * (r - 1.0).powi(4) / r.powi(4);
        assert!(g < 1e-6);
        assert!((t.bulk(r) - g.max(1e-6).sqrt()).abs() < 1e-15);
        assert!((t.bulk(r) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn truncation_monotone_in_radius_and_bounded() {
        let radii = [1.001, 1.005, 1.01, 1.05, 1.1, 1.5, 1.9];
        for w in radii.windows(2) {
            let lo = truncated_cloak(&CloakParams::with_radius(w[0])).unwrap();
            let hi = truncated_cloak(&CloakParams::with_radius(w[1])).unwrap();
            for i in 1..400 {
                let r = 1.0 + i as f64 / 400.0;
                assert!(hi.sigma_r(r) >= lo.sigma_r(r), "R={:?} r={r}", w);
                assert!(hi.sigma_t(r) >= lo.sigma_t(r));
            }
        }
        for &big_r in &radii {
            let t = truncated_cloak(&CloakParams::with_radius(big_r)).unwrap();
            for i in 0..=600 {
                let r = i as f64 / 200.0;
                for v in [t.sigma_r(r), t.sigma_t(r)] {
                    assert!(v >= 0.5 * (big_r - 1.0).powi(2) - 1e-15 && v <= 2.0);
                }
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(CloakParams::with_radius(0.9).validate().is_err());
        assert!(CloakParams::with_radius(2.0).validate().is_err());
        assert!(CloakParams { m: 0.5, ..Default::default() }.validate().is_err());
        assert!(CloakParams::default().validate().is_ok());
    }
}
