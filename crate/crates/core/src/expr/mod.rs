//! Canonical trigonometric polynomials.
//!
//! A term is `coeff * prod x_i^{p_i} * trig(sum f_j x_j + phase)` with integer
//! (possibly negative) powers and integer frequencies. Variables are coordinate
//! indices; an [`Expr`] carries no chart of its own.

mod parse;

pub use parse::parse_expr;

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

/// Coefficients with smaller magnitude are dropped during canonicalization.
pub const ZERO_TOL: f64 = 1e-12;
const PHASE_SNAP: f64 = 1e-13;
const PHASE_MERGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Const,
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub coeff: f64,
    /// Sorted by variable, no zero exponents.
    pub powers: Vec<(usize, i32)>,
    pub mode: Mode,
    /// Sorted by variable, no zero frequencies. Empty iff `mode == Const`.
    pub freq: Vec<(usize, i64)>,
    /// In `[0, pi/2)` after canonicalization; zero for constants.
    pub phase: f64,
}

impl TrigTerm {
    pub fn constant(c: f64) -> Self {
        TrigTerm { coeff: c, powers: vec![], mode: Mode::Const, freq: vec![], phase: 0.0 }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.powers
            .cmp(&other.powers)
            .then(self.mode.cmp(&other.mode))
            .then(self.freq.cmp(&other.freq))
            .then(self.phase.total_cmp(&other.phase))
    }

    fn same_key(&self, other: &Self) -> bool {
        self.powers == other.powers
            && self.mode == other.mode
            && self.freq == other.freq
            && (self.phase - other.phase).abs() <= PHASE_MERGE
    }

    /// Brings a single term into normal form. Returns `None` if it vanishes.
    fn normalize(mut self) -> Option<Self> {
        self.powers.retain(|&(_, p)| p != 0);
        self.powers.sort();
        self.freq.retain(|&(_, f)| f != 0);
        self.freq.sort();
        if self.mode == Mode::Const {
            self.freq.clear();
            self.phase = 0.0;
        } else if self.freq.is_empty() {
            let v = match self.mode {
                Mode::Cos => self.phase.cos(),
                _ => self.phase.sin(),
            };
            self.coeff *= v;
            self.mode = Mode::Const;
            self.phase = 0.0;
        } else {
            if self.freq[0].1 < 0 {
                for f in self.freq.iter_mut() {
                    f.1 = -f.1;
                }
                self.phase = -self.phase;
                if self.mode == Mode::Sin {
                    self.coeff = -self.coeff;
                }
            }
            let mut ph = self.phase.rem_euclid(TAU);
            if TAU - ph < PHASE_SNAP {
                ph = 0.0;
            }
            if ph >= PI - PHASE_SNAP {
                ph -= PI;
                self.coeff = -self.coeff;
            }
            if ph >= FRAC_PI_2 - PHASE_SNAP {
                ph -= FRAC_PI_2;
                // cos(u + pi/2) = -sin u, sin(u + pi/2) = cos u
                match self.mode {
                    Mode::Cos => {
                        self.mode = Mode::Sin;
                        self.coeff = -self.coeff;
                    }
                    _ => self.mode = Mode::Cos,
                }
            }
            if ph.abs() < PHASE_SNAP {
                ph = 0.0;
            }
            self.phase = ph.max(0.0);
        }
        if self.coeff.abs() < ZERO_TOL {
            return None;
        }
        Some(self)
    }

    fn trig_arg(&self, x: &[f64]) -> f64 {
        self.freq.iter().map(|&(i, f)| f as f64 * x[i]).sum::<f64>() + self.phase
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.coeff;
        for &(i, p) in &self.powers {
            v *= x[i].powi(p);
        }
        match self.mode {
            Mode::Const => v,
            Mode::Cos => v * self.trig_arg(x).cos(),
            Mode::Sin => v * self.trig_arg(x).sin(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        let a = self.powers.iter().map(|p| p.0).max();
        let b = self.freq.iter().map(|p| p.0).max();
        a.max(b)
    }
}

fn merge_powers(a: &[(usize, i32)], b: &[(usize, i32)]) -> Vec<(usize, i32)> {
    let mut out: Vec<(usize, i32)> = a.to_vec();
    for &(i, p) in b {
        match out.iter_mut().find(|q| q.0 == i) {
            Some(q) => q.1 += p,
            None => out.push((i, p)),
        }
    }
    out.retain(|q| q.1 != 0);
    out.sort();
    out
}

fn combine_freq(a: &[(usize, i64)], b: &[(usize, i64)], sign: i64) -> Vec<(usize, i64)> {
    let mut out: Vec<(usize, i64)> = a.to_vec();
    for &(i, f) in b {
        match out.iter_mut().find(|q| q.0 == i) {
            Some(q) => q.1 += sign * f,
            None => out.push((i, sign * f)),
        }
    }
    out.retain(|q| q.1 != 0);
    out.sort();
    out
}

/// Image of one source variable under an affine substitution:
/// `x_i -> sum c_j y_j + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineImage {
    pub coeffs: Vec<(usize, i64)>,
    pub constant: f64,
}

impl AffineImage {
    pub fn var(j: usize) -> Self {
        AffineImage { coeffs: vec![(j, 1)], constant: 0.0 }
    }
    pub fn constant(c: f64) -> Self {
        AffineImage { coeffs: vec![], constant: c }
    }
    pub fn shifted(j: usize, c: f64) -> Self {
        AffineImage { coeffs: vec![(j, 1)], constant: c }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expr {
    terms: Vec<TrigTerm>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Expr::from_terms(vec![TrigTerm::constant(c)])
    }

    pub fn var(i: usize) -> Self {
        Expr::from_terms(vec![TrigTerm {
            coeff: 1.0,
            powers: vec![(i, 1)],
            mode: Mode::Const,
            freq: vec![],
            phase: 0.0,
        }])
    }

    pub fn monomial(coeff: f64, powers: &[(usize, i32)]) -> Self {
        Expr::from_terms(vec![TrigTerm {
            coeff,
            powers: powers.to_vec(),
            mode: Mode::Const,
            freq: vec![],
            phase: 0.0,
        }])
    }

    /// `cos(sum f x + phase)`
    pub fn cos(freq: &[(usize, i64)], phase: f64) -> Self {
        Expr::from_terms(vec![TrigTerm {
            coeff: 1.0,
            powers: vec![],
            mode: Mode::Cos,
            freq: freq.to_vec(),
            phase,
        }])
    }

    /// `sin(sum f x + phase)`
    pub fn sin(freq: &[(usize, i64)], phase: f64) -> Self {
        Expr::from_terms(vec![TrigTerm {
            coeff: 1.0,
            powers: vec![],
            mode: Mode::Sin,
            freq: freq.to_vec(),
            phase,
        }])
    }

    pub fn from_terms(terms: Vec<TrigTerm>) -> Self {
        let mut ts: Vec<TrigTerm> = terms.into_iter().filter_map(TrigTerm::normalize).collect();
        ts.sort_by(|a, b| a.key_cmp(b));
        let mut out: Vec<TrigTerm> = Vec::with_capacity(ts.len());
        for t in ts {
            match out.last_mut() {
                Some(last) if last.same_key(&t) => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff.abs() >= ZERO_TOL);
        Expr { terms: out }
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the expression is a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [] => Some(0.0),
            [t] if t.mode == Mode::Const && t.powers.is_empty() => Some(t.coeff),
            _ => None,
        }
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().filter_map(|t| t.max_var()).max()
    }

    pub fn uses_var(&self, i: usize) -> bool {
        self.terms
            .iter()
            .any(|t| t.powers.iter().any(|p| p.0 == i) || t.freq.iter().any(|f| f.0 == i))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::from_terms(
            self.terms.iter().map(|t| TrigTerm { coeff: t.coeff * c, ..t.clone() }).collect(),
        )
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut ts = self.terms.clone();
        ts.extend(other.terms.iter().cloned());
        Expr::from_terms(ts)
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.scale(-1.0))
    }

    pub fn neg(&self) -> Expr {
        self.scale(-1.0)
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len() * 2);
        for a in &self.terms {
            for b in &other.terms {
                mul_terms(a, b, &mut out);
            }
        }
        Expr::from_terms(out)
    }

    pub fn powi(&self, n: u32) -> Expr {
        let mut acc = Expr::constant(1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn differentiate(&self, var: usize) -> Expr {
        let mut out = Vec::new();
        for t in &self.terms {
            if let Some(&(_, p)) = t.powers.iter().find(|q| q.0 == var) {
                let mut nt = t.clone();
                nt.coeff *= p as f64;
                for q in nt.powers.iter_mut() {
                    if q.0 == var {
                        q.1 -= 1;
                    }
                }
                out.push(nt);
            }
            if let Some(&(_, f)) = t.freq.iter().find(|q| q.0 == var) {
                let mut nt = t.clone();
                match t.mode {
                    Mode::Cos => {
                        nt.mode = Mode::Sin;
                        nt.coeff = -t.coeff * f as f64;
                    }
                    Mode::Sin => {
                        nt.mode = Mode::Cos;
                        nt.coeff = t.coeff * f as f64;
                    }
                    Mode::Const => unreachable!(),
                }
                out.push(nt);
            }
        }
        Expr::from_terms(out)
    }

    /// Canonical equality: the difference canonicalizes to zero.
    pub fn canonical_equal(&self, other: &Expr) -> bool {
        self.sub(other).is_zero()
    }

    /// Substitutes `x_i -> images[i]` for every source variable.
    ///
    /// A variable carrying a power must map to a single target variable with unit
    /// coefficient and no offset, or to a constant. Trigonometric arguments may map
    /// to any integer combination; offsets move into the phase.
    pub fn compose_affine(&self, images: &[AffineImage]) -> Result<Expr> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut coeff = t.coeff;
            let mut powers: Vec<(usize, i32)> = Vec::new();
            for &(i, p) in &t.powers {
                let img = images
                    .get(i)
                    .ok_or_else(|| Error::LeavesClass(format!("no image for variable {i}")))?;
                match img.coeffs.as_slice() {
                    [] => {
                        if img.constant == 0.0 && p < 0 {
                            return Err(Error::LeavesClass(format!(
                                "negative power of variable {i} sent to zero"
                            )));
                        }
                        coeff *= img.constant.powi(p);
                    }
                    [(j, 1)] if img.constant == 0.0 => powers.push((*j, p)),
                    _ => {
                        return Err(Error::LeavesClass(format!(
                            "polynomial variable {i} mapped to a non-trivial affine combination"
                        )))
                    }
                }
            }
            let mut phase = t.phase;
            let mut freq: Vec<(usize, i64)> = Vec::new();
            for &(i, f) in &t.freq {
                let img = images
                    .get(i)
                    .ok_or_else(|| Error::LeavesClass(format!("no image for variable {i}")))?;
                phase += f as f64 * img.constant;
                freq = combine_freq(
                    &freq,
                    &img.coeffs.iter().map(|&(j, c)| (j, c * f)).collect::<Vec<_>>(),
                    1,
                );
            }
            out.push(TrigTerm { coeff, powers: merge_powers(&[], &powers), mode: t.mode, freq, phase });
        }
        Ok(Expr::from_terms(out))
    }

    /// Substitution within one chart of dimension `dim`; unlisted variables are fixed.
    pub fn substitute_integer_affine(
        &self,
        dim: usize,
        subs: &[(usize, AffineImage)],
    ) -> Result<Expr> {
        let mut images: Vec<AffineImage> = (0..dim).map(AffineImage::var).collect();
        for (i, img) in subs {
            if *i >= dim {
                return Err(Error::LeavesClass(format!("variable {i} outside dimension {dim}")));
            }
            if img.coeffs.iter().any(|&(j, _)| j >= dim) {
                return Err(Error::LeavesClass(format!("image of {i} leaves dimension {dim}")));
            }
            images[*i] = img.clone();
        }
        self.compose_affine(&images)
    }

    /// Formats with the given coordinate names.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
        let mut s = String::new();
        for (k, t) in self.terms.iter().enumerate() {
            let c = t.coeff;
            if k > 0 {
                s.push_str(if c < 0.0 { " - " } else { " + " });
            } else if c < 0.0 {
                s.push('-');
            }
            let mut factors: Vec<String> = Vec::new();
            let ac = c.abs();
            if (ac - 1.0).abs() > 1e-15 || (t.powers.is_empty() && t.mode == Mode::Const) {
                factors.push(format!("{ac}"));
            }
            for &(i, p) in &t.powers {
                if p == 1 {
                    factors.push(name(i));
                } else {
                    factors.push(format!("{}^{}", name(i), p));
                }
            }
            if t.mode != Mode::Const {
                let mut arg = String::new();
                for (m, &(i, f)) in t.freq.iter().enumerate() {
                    if m > 0 {
                        arg.push_str(if f < 0 { " - " } else { " + " });
                    } else if f < 0 {
                        arg.push('-');
                    }
                    if f.abs() != 1 {
                        arg.push_str(&format!("{}*", f.abs()));
                    }
                    arg.push_str(&name(i));
                }
                if t.phase != 0.0 {
                    arg.push_str(&format!(" + {}", t.phase));
                }
                let fname = if t.mode == Mode::Cos { "cos" } else { "sin" };
                factors.push(format!("{fname}({arg})"));
            }
            s.push_str(&factors.join("*"));
        }
        s
    }
}

fn mul_terms(a: &TrigTerm, b: &TrigTerm, out: &mut Vec<TrigTerm>) {
    let powers = merge_powers(&a.powers, &b.powers);
    let c = a.coeff * b.coeff;
    let mk = |coeff: f64, mode: Mode, freq: Vec<(usize, i64)>, phase: f64| TrigTerm {
        coeff,
        powers: powers.clone(),
        mode,
        freq,
        phase,
    };
    match (a.mode, b.mode) {
        (Mode::Const, _) => out.push(mk(c, b.mode, b.freq.clone(), b.phase)),
        (_, Mode::Const) => out.push(mk(c, a.mode, a.freq.clone(), a.phase)),
        _ => {
            let fsum = combine_freq(&a.freq, &b.freq, 1);
            let fdif = combine_freq(&a.freq, &b.freq, -1);
            let psum = a.phase + b.phase;
            let pdif = a.phase - b.phase;
            let h = 0.5 * c;
            match (a.mode, b.mode) {
                (Mode::Cos, Mode::Cos) => {
                    out.push(mk(h, Mode::Cos, fdif, pdif));
                    out.push(mk(h, Mode::Cos, fsum, psum));
                }
                (Mode::Sin, Mode::Sin) => {
                    out.push(mk(h, Mode::Cos, fdif, pdif));
                    out.push(mk(-h, Mode::Cos, fsum, psum));
                }
                (Mode::Sin, Mode::Cos) => {
                    out.push(mk(h, Mode::Sin, fsum, psum));
                    out.push(mk(h, Mode::Sin, fdif, pdif));
                }
                (Mode::Cos, Mode::Sin) => {
                    out.push(mk(h, Mode::Sin, fsum, psum));
                    out.push(mk(-h, Mode::Sin, fdif, pdif));
                }
                _ => unreachable!(),
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&[]))
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn pythagorean_identity_cancels() {
        let c = Expr::cos(&[(0, 1)], 0.0);
        let s = Expr::sin(&[(0, 1)], 0.0);
        let one = c.mul(&c).add(&s.mul(&s));
        assert!(one.canonical_equal(&Expr::constant(1.0)));
    }

    #[test]
    fn double_angle() {
        let c = Expr::cos(&[(0, 1)], 0.0);
        let s = Expr::sin(&[(0, 1)], 0.0);
        let lhs = c.mul(&c).sub(&s.mul(&s));
        assert!(lhs.canonical_equal(&Expr::cos(&[(0, 2)], 0.0)));
        let lhs = s.mul(&c).scale(2.0);
        assert!(lhs.canonical_equal(&Expr::sin(&[(0, 2)], 0.0)));
    }

    #[test]
    fn phase_folding_is_canonical() {
        // cos(x + pi/2) = -sin x, sin(-x) = -sin x, cos(x + 3pi) = -cos x
        assert!(Expr::cos(&[(0, 1)], FRAC_PI_2).canonical_equal(&Expr::sin(&[(0, 1)], 0.0).neg()));
        assert!(Expr::sin(&[(0, -1)], 0.0).canonical_equal(&Expr::sin(&[(0, 1)], 0.0).neg()));
        assert!(Expr::cos(&[(0, 1)], 3.0 * PI).canonical_equal(&Expr::cos(&[(0, 1)], 0.0).neg()));
        let e = Expr::sin(&[(0, 1), (1, 2)], 7.1);
        for t in e.terms() {
            assert!(t.phase >= 0.0 && t.phase < FRAC_PI_2);
        }
    }

    #[test]
    fn zero_frequency_becomes_constant() {
        let e = Expr::cos(&[(0, 0)], 0.3);
        assert_eq!(e.as_constant(), Some(0.3f64.cos()));
    }

    #[test]
    fn differentiate_mixed_term() {
        let x = Expr::var(0);
        let e = x.mul(&x).mul(&Expr::sin(&[(0, 1)], 0.0));
        let d = e.differentiate(0);
        let expect = Expr::monomial(2.0, &[(0, 1)])
            .mul(&Expr::sin(&[(0, 1)], 0.0))
            .add(&Expr::monomial(1.0, &[(0, 2)]).mul(&Expr::cos(&[(0, 1)], 0.0)));
        assert!(d.canonical_equal(&expect));
    }

    #[test]
    fn laurent_powers() {
        let e = Expr::monomial(3.0, &[(0, -2)]);
        assert!(approx(e.eval(&[2.0]), 0.75));
        assert!(e.differentiate(0).canonical_equal(&Expr::monomial(-6.0, &[(0, -3)])));
        assert!(e.mul(&Expr::monomial(1.0, &[(0, 2)])).canonical_equal(&Expr::constant(3.0)));
    }

    #[test]
    fn affine_substitution_in_trig_argument() {
        // cos(2x + y) with x -> x + y + 0.5
        let e = Expr::cos(&[(0, 2), (1, 1)], 0.0);
        let s = e.substitute_integer_affine(2, &[(0, AffineImage { coeffs: vec![(0, 1), (1, 1)], constant: 0.5 })]).unwrap();
        let p = [0.3, -1.1];
        assert!(approx(s.eval(&p), (2.0 * (p[0] + p[1] + 0.5) + p[1]).cos()));
    }

    #[test]
    fn polynomial_variable_cannot_be_sheared() {
        let e = Expr::var(0);
        let r = e.substitute_integer_affine(2, &[(0, AffineImage { coeffs: vec![(0, 1), (1, 1)], constant: 0.0 })]);
        assert!(matches!(r, Err(Error::LeavesClass(_))));
    }

    #[test]
    fn restriction_to_constant() {
        let e = Expr::var(0).mul(&Expr::cos(&[(0, 1), (1, 1)], 0.0));
        let s = e.compose_affine(&[AffineImage::constant(2.0), AffineImage::var(0)]).unwrap();
        assert!(s.canonical_equal(&Expr::cos(&[(0, 1)], 2.0).scale(2.0)));
    }
}
