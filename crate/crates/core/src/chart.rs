//! Coordinate charts, points and sampling.

use crate::error::{Error, Result};
use crate::expr::Expr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Distance kept from excluded interval endpoints when sampling.
pub const ENDPOINT_MARGIN: f64 = 1e-3;

pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordKind {
    Angular,
    Radial,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub name: String,
    pub kind: CoordKind,
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
    /// Periodic angular coordinate: every real value is a valid point.
    pub periodic: bool,
    /// Non-angular coordinate that may still appear inside sin/cos.
    pub trig: bool,
}

impl Coordinate {
    pub fn angular(name: &str) -> Self {
        Coordinate {
            name: name.into(),
            kind: CoordKind::Angular,
            lo: 0.0,
            hi: TAU,
            lo_open: false,
            hi_open: true,
            periodic: true,
            trig: true,
        }
    }

    /// Angular coordinate restricted to an interval, e.g. `(0, 2 pi N)`.
    pub fn angular_interval(name: &str, lo: f64, hi: f64) -> Self {
        Coordinate { lo, hi, lo_open: true, hi_open: true, periodic: false, ..Coordinate::angular(name) }
    }

    /// Radial coordinate on `[lo, hi]`; the origin is excluded when `lo == 0`.
    pub fn radial(name: &str, lo: f64, hi: f64) -> Self {
        Coordinate {
            name: name.into(),
            kind: CoordKind::Radial,
            lo,
            hi,
            lo_open: lo == 0.0,
            hi_open: false,
            periodic: false,
            trig: false,
        }
    }

    pub fn linear(name: &str, lo: f64, hi: f64) -> Self {
        Coordinate { kind: CoordKind::Linear, lo_open: false, ..Coordinate::radial(name, lo, hi) }
    }

    pub fn trig_capable(mut self) -> Self {
        self.trig = true;
        self
    }

    pub fn closed(mut self) -> Self {
        self.lo_open = false;
        self.hi_open = false;
        self
    }

    pub fn open_hi(mut self) -> Self {
        self.hi_open = true;
        self
    }

    pub fn open_lo(mut self) -> Self {
        self.lo_open = true;
        self
    }

    pub fn allows_trig(&self) -> bool {
        self.kind == CoordKind::Angular || self.trig
    }

    pub fn contains(&self, v: f64) -> bool {
        if self.periodic {
            return v.is_finite();
        }
        let eps = 1e-12;
        let lo_ok = if self.lo_open { v > self.lo } else { v >= self.lo - eps };
        let hi_ok = if self.hi_open { v < self.hi } else { v <= self.hi + eps };
        lo_ok && hi_ok
    }

    /// Sampling interval after pulling away from excluded endpoints.
    fn sample_range(&self) -> (f64, f64) {
        let lo = if self.lo_open { self.lo + ENDPOINT_MARGIN } else { self.lo };
        let hi = if self.hi_open { self.hi - ENDPOINT_MARGIN } else { self.hi };
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub label: String,
    pub coords: Vec<Coordinate>,
}

pub struct ChartBuilder {
    label: String,
    coords: Vec<Coordinate>,
}

impl ChartBuilder {
    pub fn coord(mut self, c: Coordinate) -> Self {
        self.coords.push(c);
        self
    }
    pub fn angular(self, name: &str) -> Self {
        self.coord(Coordinate::angular(name))
    }
    pub fn radial(self, name: &str, lo: f64, hi: f64) -> Self {
        self.coord(Coordinate::radial(name, lo, hi))
    }
    pub fn linear(self, name: &str, lo: f64, hi: f64) -> Self {
        self.coord(Coordinate::linear(name, lo, hi))
    }
    pub fn build(self) -> Result<Chart> {
        Chart::new(&self.label, self.coords)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Grid,
    Random,
}

impl Chart {
    pub fn new(label: &str, coords: Vec<Coordinate>) -> Result<Chart> {
        if !(2..=4).contains(&coords.len()) {
            return Err(Error::Dimension(coords.len()));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].iter().any(|d| d.name == c.name) {
                return Err(Error::Precondition(format!("duplicate coordinate `{}`", c.name)));
            }
            if !(c.lo < c.hi) {
                return Err(Error::Precondition(format!("empty domain for `{}`", c.name)));
            }
        }
        Ok(Chart { label: label.into(), coords })
    }

    pub fn builder(label: &str) -> ChartBuilder {
        ChartBuilder { label: label.into(), coords: vec![] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::OutsideDomain(format!("point has {} coordinates, chart `{}` has {}", p.len(), self.label, self.dim())));
        }
        for (c, &v) in self.coords.iter().zip(p) {
            if !c.contains(v) {
                return Err(Error::OutsideDomain(format!("{} = {v} in chart `{}`", c.name, self.label)));
            }
        }
        Ok(())
    }

    /// Evaluates `e` at `p` after checking that `p` lies in the domain.
    pub fn evaluate(&self, e: &Expr, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(e.eval(p))
    }

    /// Deterministic sample of the domain. `Grid` gives `n^dim` points; `Random`
    /// gives `n` points drawn with the seeded generator.
    pub fn sample_points(&self, n: usize, mode: SampleMode, seed: u64) -> Vec<Point> {
        let ranges: Vec<(f64, f64, bool)> = self
            .coords
            .iter()
            .map(|c| {
                let (lo, hi) = c.sample_range();
                (lo, hi, c.periodic)
            })
            .collect();
        match mode {
            SampleMode::Grid => {
                let axes: Vec<Vec<f64>> = ranges
                    .iter()
                    .map(|&(lo, hi, periodic)| grid_axis(lo, hi, n, periodic))
                    .collect();
                let mut pts: Vec<Point> = vec![vec![]];
                for axis in &axes {
                    let mut next = Vec::with_capacity(pts.len() * axis.len());
                    for p in &pts {
                        for &v in axis {
                            let mut q = p.clone();
                            q.push(v);
                            next.push(q);
                        }
                    }
                    pts = next;
                }
                pts
            }
            SampleMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|_| ranges.iter().map(|&(lo, hi, _)| lo + (hi - lo) * rng.gen::<f64>()).collect())
                    .collect()
            }
        }
    }
}

fn grid_axis(lo: f64, hi: f64, n: usize, periodic: bool) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    if periodic {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_bounds() {
        assert!(matches!(Chart::builder("a").angular("x").build(), Err(Error::Dimension(1))));
        let c = Chart::builder("b").angular("x").angular("y").angular("z").angular("w").build();
        assert!(c.is_ok());
    }

    #[test]
    fn evaluate_checks_domain() {
        let c = Chart::builder("b").angular("x").radial("r", 0.0, 1.0).build().unwrap();
        let e = Expr::monomial(1.0, &[(1, 2)]);
        assert_eq!(c.evaluate(&e, &[0.0, 0.5]).unwrap(), 0.25);
        assert!(matches!(c.evaluate(&e, &[0.0, 2.0]), Err(Error::OutsideDomain(_))));
        assert!(matches!(c.evaluate(&e, &[0.0, 0.0]), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn samples_are_reproducible_and_inside() {
        let c = Chart::builder("b").angular("x").radial("r", 0.0, 1.0).build().unwrap();
        let a = c.sample_points(200, SampleMode::Random, 7);
        let b = c.sample_points(200, SampleMode::Random, 7);
        assert_eq!(a, b);
        for p in &a {
            c.check_point(p).unwrap();
            assert!(p[1] >= ENDPOINT_MARGIN);
        }
        assert_eq!(c.sample_points(5, SampleMode::Grid, 0).len(), 25);
    }
}
