//! Spherical Bessel functions `j_l`, `y_l`, `h_l^(1)` of complex argument,
//! Legendre polynomials and Gauss-Legendre quadrature.
//!
//! `y_l` is always generated by upward recurrence (it is the dominant
//! solution). `j_l` is generated upward when the top order does not exceed
//! `|x|` and by Miller's downward recurrence otherwise, normalized against
//! the closed forms of `j_0` or `j_1`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest supported order.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPair {
    pub l: usize,
    pub x: Complex64,
    pub j: Complex64,
    pub y: Complex64,
    pub jp: Complex64,
    pub yp: Complex64,
}

impl BesselPair {
    /// Outgoing spherical Hankel function `h_l^(1) = j_l + i y_l`.
    pub fn h1(&self) -> Complex64 {
        self.j + Complex64::i() * self.y
    }

    pub fn h1p(&self) -> Complex64 {
        self.jp + Complex64::i() * self.yp
    }

    /// `j y' - j' y`, which equals `1/x^2`.
    pub fn wronskian(&self) -> Complex64 {
        self.j * self.yp - self.jp * self.y
    }
}

/// Values of `j_l(x)` and `y_l(x)` for `l = 0..=lmax`.
#[derive(Debug, Clone)]
pub struct BesselTable {
    pub x: Complex64,
    pub j: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl BesselTable {
    pub fn new(lmax: usize, x: Complex64) -> Result<Self> {
        check_argument(lmax, x)?;
        // one extra order so every derivative is available
        let top = lmax + 1;
        let y = upward_y(top, x);
        let j = if x.norm() >= top as f64 {
            upward_j(top, x)
        } else {
            downward_j(top, x)
        };
        Ok(BesselTable { x, j, y })
    }

    pub fn lmax(&self) -> usize {
        self.j.len() - 2
    }

    pub fn pair(&self, l: usize) -> BesselPair {
        let x = self.x;
        let (jp, yp) = if l == 0 {
            (-self.j[1], -self.y[1])
        } else {
            let c = (l as f64 + 1.0) / x;
            (self.j[l - 1] - c * self.j[l], self.y[l - 1] - c * self.y[l])
        };
        BesselPair {
            l,
            x,
            j: self.j[l],
            y: self.y[l],
            jp,
            yp,
        }
    }
}

fn check_argument(l: usize, x: Complex64) -> Result<()> {
    if l > MAX_ORDER {
        return Err(Error::Domain(format!(
            "spherical Bessel order {l} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(Error::Domain(format!("non-finite Bessel argument {x}")));
    }
    if x.norm() == 0.0 {
        return Err(Error::Domain(
            "spherical Bessel functions evaluated at x = 0; use j_l(0) = δ_l0".into(),
        ));
    }
    Ok(())
}

/// `j_l`, `y_l` and their derivatives at a single order.
pub fn bessel_pair(l: usize, x: Complex64) -> Result<BesselPair> {
    Ok(BesselTable::new(l, x)?.pair(l))
}

fn j0(x: Complex64) -> Complex64 {
    x.sin() / x
}

fn j1(x: Complex64) -> Complex64 {
    x.sin() / (x * x) - x.cos() / x
}

fn upward_y(top: usize, x: Complex64) -> Vec<Complex64> {
    let mut y = Vec::with_capacity(top + 1);
    y.push(-x.cos() / x);
    y.push(-x.cos() / (x * x) - x.sin() / x);
    for n in 1..top {
        let next = (2.0 * n as f64 + 1.0) / x * y[n] - y[n - 1];
        y.push(next);
    }
    y.truncate(top + 1);
    y
}

fn upward_j(top: usize, x: Complex64) -> Vec<Complex64> {
    let mut j = Vec::with_capacity(top + 1);
    j.push(j0(x));
    j.push(j1(x));
    for n in 1..top {
        let next = (2.0 * n as f64 + 1.0) / x * j[n] - j[n - 1];
        j.push(next);
    }
    j.truncate(top + 1);
    j
}

fn downward_j(top: usize, x: Complex64) -> Vec<Complex64> {
    const RESCALE: f64 = 1e150;
    let start = 2 * top + 50 + x.norm().ceil() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); top + 1];
    let mut above = Complex64::new(0.0, 0.0);
    let mut current = Complex64::new(1.0, 0.0);
    for n in (1..=start).rev() {
        // f_{n-1} = (2n+1)/x f_n - f_{n+1}
        let below = (2.0 * n as f64 + 1.0) / x * current - above;
        above = current;
        current = below;
        if n <= top {
            out[n] = above;
        }
        if current.norm() > RESCALE {
            let s = 1.0 / RESCALE;
            current *= s;
            above *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    out[0] = current;
    let (exact0, exact1) = (j0(x), j1(x));
    let scale = if exact0.norm() >= exact1.norm() {
        exact0 / out[0]
    } else {
        exact1 / out[1]
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre_p(l: usize, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain(format!("Legendre argument {x} outside [-1, 1]")));
    }
    Ok(*legendre_all(l, x).last().unwrap())
}

/// `P_0(x) ..= P_lmax(x)`; no range check.
pub fn legendre_all(lmax: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(1.0);
    if lmax >= 1 {
        p.push(x);
    }
    for n in 1..lmax {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
    }
    p
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let p = legendre_all(n, z);
            let (pn, pn1) = (p[n], p[n - 1]);
            let dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let p = legendre_all(n, z);
        let dp = nf * (z * p[n] - p[n - 1]) / (z * z - 1.0);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates `f` over `[a, b]` with an `n`-point Gauss rule.
pub fn gauss_integrate<F: FnMut(f64) -> f64>(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(t, w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Power series `j_l(x) = x^l Σ (-x²/2)^k / (k! (2l+2k+1)!!)`.
    fn j_series(l: usize, x: Complex64) -> Complex64 {
        let mut dfact = 1.0;
        for m in (1..=2 * l + 1).step_by(2) {
            dfact *= m as f64;
        }
        let mut term = x.powu(l as u32) / dfact;
        let mut sum = term;
        for k in 1..200 {
            term *= -x * x / (2.0 * k as f64 * (2 * l + 2 * k + 1) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    }

    #[test]
    fn closed_forms_at_one() {
        let p = bessel_pair(0, c(1.0)).unwrap();
        assert!((p.j.re - 1f64.sin()).abs() < 1e-15);
        assert!((p.y.re + 1f64.cos()).abs() < 1e-15);
        let p1 = bessel_pair(1, c(1.0)).unwrap();
        assert!((p1.j.re - 0.301168678939757).abs() < 1e-14);
        assert!((p1.j - j_series(1, c(1.0))).norm() < 1e-15);
    }

    #[test]
    fn matches_power_series_small_and_complex() {
        for &x in &[c(0.01), c(0.3), c(2.5), Complex64::new(1.5, 2.0), Complex64::new(0.2, -0.7)] {
            for l in 0..=12 {
                let got = bessel_pair(l, x).unwrap().j;
                let want = j_series(l, x);
                assert!((got - want).norm() <= 1e-12 * want.norm(), "l={l} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn zero_argument_is_domain_error() {
        assert!(matches!(bessel_pair(0, c(0.0)), Err(Error::Domain(_))));
        assert!(matches!(bessel_pair(65, c(1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn large_order_small_argument_stays_finite() {
        let p = bessel_pair(40, c(0.5)).unwrap();
        assert!(p.j.norm() > 0.0 && p.j.norm() < 1e-40);
        assert!((p.j - j_series(40, c(0.5))).norm() < 1e-12 * p.j.norm());
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_p(0, 0.3).unwrap(), 1.0);
        assert!((legendre_p(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        for l in 0..20 {
            assert_eq!(legendre_p(l, 1.0).unwrap(), 1.0);
        }
        // P_7 from its explicit coefficients
        let x: f64 = 0.3;
        let p7 = (429.0 * x.powi(7) - 693.0 * x.powi(5) + 315.0 * x.powi(3) - 35.0 * x) / 16.0;
        assert!((legendre_p(7, x).unwrap() - p7).abs() < 1e-13);
        assert!(legendre_p(3, 1.01).is_err());
    }

    #[test]
    fn legendre_orthogonality_by_gauss_quadrature() {
        let rule = gauss_legendre(20);
        for l in 0..=8 {
            for m in 0..=8 {
                let v = gauss_integrate(&rule, -1.0, 1.0, |x| {
                    let p = legendre_all(8, x);
                    p[l] * p[m]
                });
                let want = if l == m { 2.0 / (2.0 * l as f64 + 1.0) } else { 0.0 };
                assert!((v - want).abs() < 1e-10, "l={l} m={m}: {v}");
            }
        }
    }

    fn recurrence_gap(lo: Complex64, mid: Complex64, hi: Complex64, l: usize, x: Complex64) -> f64 {
        let rhs = (2 * l + 1) as f64 / x * mid;
        (lo + hi - rhs).norm() / (lo.norm() + hi.norm() + rhs.norm())
    }

    proptest::proptest! {
        #[test]
        fn wronskian_prop(l in 0usize..=40, re in 0.05f64..40.0, im in -3.0f64..3.0) {
            let x = Complex64::new(re, im);
            let p = bessel_pair(l, x).unwrap();
            let want = 1.0 / (x * x);
            proptest::prop_assert!((p.wronskian() - want).norm() <= 1e-10 * want.norm());
        }

        #[test]
        fn three_term_recurrence_prop(l in 1usize..40, re in 0.05f64..40.0, im in -3.0f64..3.0) {
            let x = Complex64::new(re, im);
            let t = BesselTable::new(l + 1, x).unwrap();
            let (a, b, c) = (t.pair(l - 1), t.pair(l), t.pair(l + 1));
            proptest::prop_assert!(recurrence_gap(a.j, b.j, c.j, l, x) < 1e-11);
            proptest::prop_assert!(recurrence_gap(a.y, b.y, c.y, l, x) < 1e-11);
        }
    }
}
