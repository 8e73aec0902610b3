//! Contact form on `S^1 x D^2` with prescribed characteristic foliation on `{x = 0}`.
//!
//! The form is `u(p, q) dx + beta(p, q)` with `beta = -Z_q dp + Z_p dq`, so the zeros of
//! `beta` are the zeros of the planar field `Z` and the contact condition reads
//! `u div Z - Z . grad u > 0`.
//!
//! `Z` is a radial field `(G(r) / r^2) (p, q)` whose divergence profile is a sum of
//! smooth steps, plus `(k - 1) / 2` Gaussian sources on a circle and a compactly
//! supported rotation that turns the two zero circles of `G` into closed orbits.
//! Each source produces a positive elliptic zero and, between it and the origin, a
//! saddle where `u = -1`. Near the boundary `Z = (p, q)` and `u = 1`, which is
//! `dx + r^2 dphi`.

use super::{find_and_classify, PulledBack, SingularityReport};
use crate::error::{Error, Result};
use crate::verify::CheckReport;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

const SIG1: f64 = 0.5;
const SIG2: f64 = 5.0 / 14.0;

fn sig(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

fn dsig(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// `int_0^r s sig((s - t0) / w) ds`
fn step_integral(r: f64, t0: f64, w: f64) -> f64 {
    if r <= t0 {
        return 0.0;
    }
    if r >= t0 + w {
        return w * (t0 * SIG1 + w * SIG2) + 0.5 * (r * r - (t0 + w) * (t0 + w));
    }
    let u = (r - t0) / w;
    let s1 = u.powi(4) * (2.5 - 3.0 * u + u * u);
    let s2 = u.powi(5) * (2.0 - 2.5 * u + 6.0 / 7.0 * u * u);
    w * (t0 * s1 + w * s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiPrimeParams {
    /// First divergence step: start and width.
    pub ra: f64,
    pub wa: f64,
    /// Negative divergence level between the first two steps.
    pub l1: f64,
    pub t2: f64,
    pub w2: f64,
    pub t3: f64,
    pub w3: f64,
    /// Radius beyond which the normal form holds exactly.
    pub r_out: f64,
    /// Radius of the circle carrying the sources.
    pub rho: f64,
    pub source_width: f64,
    pub source_strength: f64,
    pub rotation: f64,
    pub rot_lo: f64,
    pub rot_hi: f64,
    /// Radius and width of the positive region of `u` around each source.
    pub u_source: (f64, f64),
    pub u_center: (f64, f64),
    pub u_outer_width: f64,
}

impl Default for XiPrimeParams {
    fn default() -> Self {
        XiPrimeParams {
            ra: 0.08,
            wa: 0.06,
            l1: 0.085,
            t2: 0.64,
            w2: 0.06,
            t3: 0.78,
            w3: 0.08,
            r_out: 0.92,
            rho: 0.33,
            source_width: 0.05,
            source_strength: 0.01,
            rotation: 0.5,
            rot_lo: 0.5,
            rot_hi: 0.86,
            u_source: (0.035, 0.03),
            u_center: (0.09, 0.05),
            u_outer_width: 0.06,
        }
    }
}

/// Parameter sets tried in order until verification passes.
pub fn schedule() -> Vec<XiPrimeParams> {
    let base = XiPrimeParams::default();
    let mut out = vec![base];
    for &(s, rho) in &[(0.04, 0.33), (0.03, 0.36), (0.02, 0.38)] {
        let mut p = base;
        p.source_width = s;
        p.source_strength = 4.0 * s * s;
        p.rho = rho;
        p.u_source = (0.7 * s, 0.6 * s);
        out.push(p);
    }
    out
}

#[derive(Debug, Clone)]
pub struct XiPrime {
    pub k: i64,
    pub params: XiPrimeParams,
    steps: Vec<(f64, f64, f64)>,
    centers: Vec<[f64; 2]>,
    /// Zero of the divergence profile inside the second step; `u` changes sign there too.
    r_zero: f64,
}

impl XiPrime {
    pub fn new(k: i64, params: XiPrimeParams) -> Result<Self> {
        if k < 1 || k % 2 == 0 {
            return Err(Error::Precondition("k must be odd and positive".into()));
        }
        let p = params;
        let mk = |l2: f64| vec![(p.ra, p.wa, -(2.0 + p.l1)), (p.t2, p.w2, p.l1 + l2), (p.t3, p.w3, 2.0 - l2)];
        // choose the middle level so that G(r_out) = r_out^2
        let excess = |st: &[(f64, f64, f64)]| st.iter().map(|&(t, w, d)| d * step_integral(p.r_out, t, w)).sum::<f64>();
        let (a, b) = (excess(&mk(0.0)), excess(&mk(1.0)));
        let l2 = -a / (b - a);
        let steps = mk(l2);
        let n = (k - 1) / 2;
        let centers =
            (0..n).map(|j| [p.rho * (TAU * j as f64 / n as f64).cos(), p.rho * (TAU * j as f64 / n as f64).sin()]).collect();
        let mut x = XiPrime { k, params, steps, centers, r_zero: 0.0 };
        let (mut lo, mut hi) = (p.t2, p.t2 + p.w2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if x.profile(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x.r_zero = 0.5 * (lo + hi);
        Ok(x)
    }

    /// Divergence of the radial part.
    pub fn profile(&self, r: f64) -> f64 {
        2.0 + self.steps.iter().map(|&(t, w, d)| d * sig((r - t) / w)).sum::<f64>()
    }

    /// `G(r) = int_0^r s profile(s) ds`; the radial part is `G / r^2 (p, q)`.
    pub fn g(&self, r: f64) -> f64 {
        r * r + self.steps.iter().map(|&(t, w, d)| d * step_integral(r, t, w)).sum::<f64>()
    }

    fn rot(&self, r: f64) -> f64 {
        let p = &self.params;
        let t = (r - p.rot_lo) / (p.rot_hi - p.rot_lo);
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            p.rotation * (PI * t).sin().powi(2)
        }
    }

    pub fn z(&self, p: f64, q: f64) -> [f64; 2] {
        let r = p.hypot(q);
        let f = if r < 1e-9 { 1.0 } else { self.g(r) / (r * r) };
        let (mut zp, mut zq) = (f * p, f * q);
        let s2 = self.params.source_width.powi(2);
        let amp = 2.0 * self.params.source_strength / s2;
        for c in &self.centers {
            let (dp, dq) = (p - c[0], q - c[1]);
            let e = amp * (-(dp * dp + dq * dq) / s2).exp();
            zp += dp * e;
            zq += dq * e;
        }
        let m = self.rot(r);
        [zp - m * q, zq + m * p]
    }

    pub fn div_z(&self, p: f64, q: f64) -> f64 {
        let r = p.hypot(q);
        let s2 = self.params.source_width.powi(2);
        let mut d = self.profile(r);
        for c in &self.centers {
            let dd = ((p - c[0]).powi(2) + (q - c[1]).powi(2)) / s2;
            d += 4.0 * self.params.source_strength / s2 * (1.0 - dd) * (-dd).exp();
        }
        d
    }

    /// `u` and its gradient.
    pub fn u_grad(&self, p: f64, q: f64) -> (f64, [f64; 2]) {
        let pr = &self.params;
        let r = p.hypot(q);
        let unit = if r > 1e-15 { [p / r, q / r] } else { [0.0, 0.0] };
        let (c0, cw) = pr.u_center;
        let mut u = -1.0 + 2.0 * (1.0 - sig((r - c0) / cw));
        let mut dr = -2.0 * dsig((r - c0) / cw) / cw;
        let o0 = self.r_zero - 0.5 * pr.u_outer_width;
        u += 2.0 * sig((r - o0) / pr.u_outer_width);
        dr += 2.0 * dsig((r - o0) / pr.u_outer_width) / pr.u_outer_width;
        let mut g = [dr * unit[0], dr * unit[1]];
        let (s0, sw) = pr.u_source;
        for c in &self.centers {
            let d = (p - c[0]).hypot(q - c[1]);
            u += 2.0 * (1.0 - sig((d - s0) / sw));
            if d > 1e-15 {
                let dd = -2.0 * dsig((d - s0) / sw) / sw;
                g[0] += dd * (p - c[0]) / d;
                g[1] += dd * (q - c[1]) / d;
            }
        }
        (u, g)
    }

    pub fn u(&self, p: f64, q: f64) -> f64 {
        self.u_grad(p, q).0
    }

    /// Coefficients `(u, beta_p, beta_q)` of `alpha'` in the coordinates `(x, p, q)`.
    pub fn alpha(&self, p: f64, q: f64) -> [f64; 3] {
        let z = self.z(p, q);
        [self.u(p, q), -z[1], z[0]]
    }

    /// `alpha' ^ d alpha'` in the order `(x, p, q)`.
    pub fn contact_value(&self, p: f64, q: f64) -> f64 {
        let (u, gu) = self.u_grad(p, q);
        let z = self.z(p, q);
        u * self.div_z(p, q) - z[0] * gu[0] - z[1] * gu[1]
    }

    /// Characteristic foliation of the page `{x = 0}`: the pullback is `beta`.
    pub fn page_pullback(&self) -> PulledBack {
        let me = self.clone();
        PulledBack::Numeric(Arc::new(move |p, q| {
            let a = me.alpha(p, q);
            [a[1], a[2]]
        }))
    }

    pub fn arrangement(&self) -> Vec<String> {
        let mut v = vec!["positive elliptic point at the center".to_string()];
        let n = self.centers.len();
        if n > 0 {
            v.push(format!(
                "{n} positive elliptic points near radius {:.3} at angles 2 pi j / {n}, each with a negative hyperbolic point between it and the center",
                self.params.rho
            ));
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct XiPrimeConstruction {
    pub form: XiPrime,
    pub report: SingularityReport,
    pub contact: CheckReport,
    pub normal_form: CheckReport,
    /// Index into the parameter schedule that passed.
    pub attempt: usize,
}

fn disk_grid(n: usize) -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let p = -1.0 + 2.0 * i as f64 / n as f64;
            let q = -1.0 + 2.0 * j as f64 / n as f64;
            if p.hypot(q) <= 1.0 {
                v.push((p, q));
            }
        }
    }
    v
}

/// Contact condition of `alpha'` on a grid of the disk (the form is `x`-invariant).
pub fn xi_prime_contact_check(x: &XiPrime, n: usize) -> CheckReport {
    let mut rep = CheckReport::new("contact_structure");
    for (p, q) in disk_grid(n) {
        let c = x.contact_value(p, q);
        let d = if c <= 0.0 { vec![format!("alpha' ^ d alpha' = {c:.3e}")] } else { vec![] };
        rep.record(&[0.0, p, q], c, d);
    }
    rep
}

/// `alpha' = dx + r^2 dphi` on the collar `r >= r_out` of the disk.
pub fn xi_prime_normal_form_check(x: &XiPrime) -> CheckReport {
    let mut rep = CheckReport::new("boundary_normal_form");
    let r0 = x.params.r_out + 0.01;
    for i in 0..=8 {
        let r = r0 + (1.0 - r0) * i as f64 / 8.0;
        for j in 0..64 {
            let t = TAU * j as f64 / 64.0;
            let (p, q) = (r * t.cos(), r * t.sin());
            let a = x.alpha(p, q);
            let dev = (a[0] - 1.0).abs().max((a[1] + q).abs()).max((a[2] - p).abs());
            let d = if dev > 1e-12 { vec![format!("deviation {dev:.3e} from dx + r^2 dphi")] } else { vec![] };
            rep.record(&[0.0, p, q], 1.0 - dev, d);
        }
    }
    rep
}

/// Builds and certifies `alpha'` for odd `k >= 1`.
pub fn construct_xi_prime(k: i64) -> Result<XiPrimeConstruction> {
    if k < 1 || k % 2 == 0 {
        return Err(Error::Precondition("k must be odd and positive".into()));
    }
    let expect = ((k + 1) / 2, 0, 0, (k - 1) / 2);
    let mut last = String::new();
    for (attempt, params) in schedule().into_iter().enumerate() {
        let form = XiPrime::new(k, params)?;
        let u = |p: f64, q: f64| form.u(p, q);
        let report = match find_and_classify(&form.page_pullback(), 1.0, 200, 1e-4, Some(&u)) {
            Ok(r) => r,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let got = (report.e_plus, report.e_minus, report.h_plus, report.h_minus);
        let contact = xi_prime_contact_check(&form, 300);
        let normal_form = xi_prime_normal_form_check(&form);
        if got == expect && contact.pass && normal_form.pass {
            return Ok(XiPrimeConstruction { form, report, contact, normal_form, attempt });
        }
        last = format!("counts {got:?}, contact {}, normal form {}", contact.pass, normal_form.pass);
    }
    Err(Error::Construction(format!("no parameter set verified for k = {k}: {last}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_integral_matches_quadrature() {
        for &r in &[0.05, 0.1, 0.13, 0.2, 0.9] {
            let n = 20000;
            let h = r / n as f64;
            let q: f64 = (0..n).map(|i| {
                let s = (i as f64 + 0.5) * h;
                s * sig((s - 0.08) / 0.06) * h
            }).sum();
            assert!((q - step_integral(r, 0.08, 0.06)).abs() < 1e-8);
        }
    }

    #[test]
    fn normal_form_outside() {
        let x = XiPrime::new(3, XiPrimeParams::default()).unwrap();
        assert!((x.g(0.95) - 0.95f64.powi(2)).abs() < 1e-12);
        assert!(xi_prime_normal_form_check(&x).pass);
    }

    #[test]
    fn even_k_rejected() {
        assert!(construct_xi_prime(2).is_err());
        assert!(construct_xi_prime(0).is_err());
    }

    #[test]
    fn k3_counts() {
        let c = construct_xi_prime(3).unwrap();
        assert_eq!((c.report.e_plus, c.report.h_minus, c.report.relative_euler), (2, 1, 3));
        assert!(c.report.euler_identity);
    }
}
