//! Vector fields, one- and two-forms, brackets, exterior derivatives and numerical rank.

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, AffineImage, Expr};
use nalgebra::DMatrix;
use std::sync::Arc;

fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::ChartMismatch(a.label.clone(), b.label.clone()))
    }
}

fn parse_all(chart: &Chart, comps: &[&str]) -> Result<Vec<Expr>> {
    if comps.len() != chart.dim() {
        return Err(Error::WrongArity(format!(
            "{} components for a chart of dimension {}",
            comps.len(),
            chart.dim()
        )));
    }
    comps.iter().map(|s| parse_expr(s, chart)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub chart: Arc<Chart>,
    pub comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::WrongArity(format!("{} components for dimension {}", comps.len(), chart.dim())));
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }

    pub fn parse(chart: &Arc<Chart>, comps: &[&str]) -> Result<Self> {
        Ok(VectorField { chart: chart.clone(), comps: parse_all(chart, comps)? })
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField { chart: chart.clone(), comps: vec![Expr::zero(); chart.dim()] }
    }

    /// The coordinate field `d/dx_i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> Self {
        let mut v = Self::zero(chart);
        v.comps[i] = Expr::constant(1.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|a| a.scale(c)).collect() }
    }

    /// Multiplies every component by the function `f`.
    pub fn times(&self, f: &Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|a| a.mul(f)).collect() }
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (j, c) in self.comps.iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(&c.mul(&f.differentiate(j)));
            }
        }
        acc
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn canonical_equal(&self, other: &VectorField) -> bool {
        self.comps.len() == other.comps.len()
            && self.comps.iter().zip(&other.comps).all(|(a, b)| a.canonical_equal(b))
    }

    /// Reinterprets the field on a chart extending this one by extra trailing
    /// coordinates; the new components vanish.
    pub fn lift(&self, target: &Arc<Chart>) -> Result<VectorField> {
        if target.dim() < self.dim() || target.coords[..self.dim()] != self.chart.coords[..] {
            return Err(Error::ChartMismatch(self.chart.label.clone(), target.label.clone()));
        }
        let mut comps = self.comps.clone();
        comps.resize(target.dim(), Expr::zero());
        Ok(VectorField { chart: target.clone(), comps })
    }
}

/// `[X, Y]^i = sum_j X^j d_j Y^i - Y^j d_j X^i`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    same_chart(&x.chart, &y.chart)?;
    let comps = (0..x.dim()).map(|i| x.apply(&y.comps[i]).sub(&y.apply(&x.comps[i]))).collect();
    Ok(VectorField { chart: x.chart.clone(), comps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub chart: Arc<Chart>,
    pub coeffs: Vec<Expr>,
}

impl OneForm {
    pub fn new(chart: &Arc<Chart>, coeffs: Vec<Expr>) -> Result<Self> {
        if coeffs.len() != chart.dim() {
            return Err(Error::WrongArity(format!("{} coefficients for dimension {}", coeffs.len(), chart.dim())));
        }
        Ok(OneForm { chart: chart.clone(), coeffs })
    }

    pub fn parse(chart: &Arc<Chart>, coeffs: &[&str]) -> Result<Self> {
        Ok(OneForm { chart: chart.clone(), coeffs: parse_all(chart, coeffs)? })
    }

    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> Self {
        let mut c = vec![Expr::zero(); chart.dim()];
        c[i] = Expr::constant(1.0);
        OneForm { chart: chart.clone(), coeffs: c }
    }

    /// `df`
    pub fn exact(chart: &Arc<Chart>, f: &Expr) -> Self {
        OneForm { chart: chart.clone(), coeffs: (0..chart.dim()).map(|i| f.differentiate(i)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add(&self, other: &OneForm) -> Result<OneForm> {
        same_chart(&self.chart, &other.chart)?;
        Ok(OneForm {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &OneForm) -> Result<OneForm> {
        self.add(&other.times(&Expr::constant(-1.0)))
    }

    pub fn times(&self, f: &Expr) -> OneForm {
        OneForm { chart: self.chart.clone(), coeffs: self.coeffs.iter().map(|a| a.mul(f)).collect() }
    }

    /// Contraction `alpha(X)`.
    pub fn apply(&self, x: &VectorField) -> Result<Expr> {
        same_chart(&self.chart, &x.chart)?;
        let mut acc = Expr::zero();
        for (a, v) in self.coeffs.iter().zip(&x.comps) {
            if !a.is_zero() && !v.is_zero() {
                acc = acc.add(&a.mul(v));
            }
        }
        Ok(acc)
    }

    /// `(d beta)_{ij} = d_i beta_j - d_j beta_i`.
    pub fn exterior_derivative(&self) -> TwoForm {
        let n = self.dim();
        let mut w = TwoForm::zero(&self.chart);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.coeffs[j].differentiate(i).sub(&self.coeffs[i].differentiate(j));
                w.set(i, j, v);
            }
        }
        w
    }

    pub fn wedge(&self, other: &OneForm) -> Result<TwoForm> {
        same_chart(&self.chart, &other.chart)?;
        let n = self.dim();
        let mut w = TwoForm::zero(&self.chart);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.coeffs[i].mul(&other.coeffs[j]).sub(&self.coeffs[j].mul(&other.coeffs[i]));
                w.set(i, j, v);
            }
        }
        Ok(w)
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.eval(p)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    pub fn lift(&self, target: &Arc<Chart>) -> Result<OneForm> {
        if target.dim() < self.dim() || target.coords[..self.dim()] != self.chart.coords[..] {
            return Err(Error::ChartMismatch(self.chart.label.clone(), target.label.clone()));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(target.dim(), Expr::zero());
        Ok(OneForm { chart: target.clone(), coeffs })
    }
}

/// Two-form stored by its strictly upper-triangular coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    pub chart: Arc<Chart>,
    comps: Vec<Expr>,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl TwoForm {
    pub fn zero(chart: &Arc<Chart>) -> Self {
        let n = chart.dim();
        TwoForm { chart: chart.clone(), comps: vec![Expr::zero(); n * (n - 1) / 2] }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Coefficient of `dx_i ^ dx_j` with antisymmetry applied.
    pub fn get(&self, i: usize, j: usize) -> Expr {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.comps[pair_index(self.dim(), i, j)].clone(),
            std::cmp::Ordering::Greater => self.comps[pair_index(self.dim(), j, i)].neg(),
            std::cmp::Ordering::Equal => Expr::zero(),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Expr) {
        if i < j {
            let k = pair_index(self.dim(), i, j);
            self.comps[k] = v;
        } else if i > j {
            let k = pair_index(self.dim(), j, i);
            self.comps[k] = v.neg();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn add(&self, other: &TwoForm) -> Result<TwoForm> {
        same_chart(&self.chart, &other.chart)?;
        Ok(TwoForm {
            chart: self.chart.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        })
    }

    /// `omega(X, Y)`
    pub fn eval_pair(&self, x: &VectorField, y: &VectorField) -> Result<Expr> {
        same_chart(&self.chart, &x.chart)?;
        same_chart(&self.chart, &y.chart)?;
        let n = self.dim();
        let mut acc = Expr::zero();
        for i in 0..n {
            for j in i + 1..n {
                let w = &self.comps[pair_index(n, i, j)];
                if w.is_zero() {
                    continue;
                }
                let m = x.comps[i].mul(&y.comps[j]).sub(&x.comps[j].mul(&y.comps[i]));
                acc = acc.add(&w.mul(&m));
            }
        }
        Ok(acc)
    }

    /// Interior product `i_X omega`, i.e. `(i_X omega)_j = sum_i X^i omega_ij`.
    pub fn contract(&self, x: &VectorField) -> Result<OneForm> {
        same_chart(&self.chart, &x.chart)?;
        let n = self.dim();
        let coeffs = (0..n)
            .map(|j| {
                let mut acc = Expr::zero();
                for i in 0..n {
                    if i != j && !x.comps[i].is_zero() {
                        acc = acc.add(&x.comps[i].mul(&self.get(i, j)));
                    }
                }
                acc
            })
            .collect();
        Ok(OneForm { chart: self.chart.clone(), coeffs })
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }
}

/// Symbolic coefficients of `beta ^ omega` in the basis `dx_i ^ dx_j ^ dx_k`, `i<j<k`.
/// Dimension 3 gives one coefficient, dimension 4 gives four.
pub fn wedge_top_expr(beta: &OneForm, omega: &TwoForm) -> Result<Vec<Expr>> {
    same_chart(&beta.chart, &omega.chart)?;
    let n = beta.dim();
    if n != 3 && n != 4 {
        return Err(Error::Dimension(n));
    }
    let a = &beta.coeffs;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let v = a[i]
                    .mul(&omega.get(j, k))
                    .sub(&a[j].mul(&omega.get(i, k)))
                    .add(&a[k].mul(&omega.get(i, j)));
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Pointwise coefficients of `beta ^ omega`.
pub fn wedge_top(beta: &OneForm, omega: &TwoForm, p: &[f64]) -> Result<Vec<f64>> {
    Ok(wedge_top_expr(beta, omega)?.iter().map(|e| e.eval(p)).collect())
}

#[derive(Debug, Clone)]
pub struct Distribution {
    pub chart: Arc<Chart>,
    pub spanning: Vec<VectorField>,
    pub claimed_rank: usize,
}

impl Distribution {
    pub fn new(spanning: Vec<VectorField>, claimed_rank: usize) -> Result<Self> {
        let first = spanning.first().ok_or_else(|| Error::WrongArity("empty spanning set".into()))?;
        for v in &spanning[1..] {
            same_chart(&first.chart, &v.chart)?;
        }
        Ok(Distribution { chart: first.chart.clone(), spanning, claimed_rank })
    }
}

/// Integer-affine map `y = M x + c`. Rows of `M` that touch non-angular
/// coordinates must be identity rows, and `det M = +-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<i64>>,
    pub offset: Vec<f64>,
}

fn det_int(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    match n {
        0 => 1,
        1 => m[0][0],
        _ => {
            let mut d = 0;
            for c in 0..n {
                if m[0][c] == 0 {
                    continue;
                }
                let minor: Vec<Vec<i64>> =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, &v)| v).collect()).collect();
                let s = if c % 2 == 0 { 1 } else { -1 };
                d += s * m[0][c] * det_int(&minor);
            }
            d
        }
    }
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        let matrix = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
        AffineMap { matrix, offset: vec![0.0; n] }
    }

    pub fn det(&self) -> i64 {
        det_int(&self.matrix)
    }

    /// Exact inverse of a unimodular matrix via the adjugate.
    pub fn inverse_matrix(&self) -> Result<Vec<Vec<i64>>> {
        let n = self.matrix.len();
        let d = self.det();
        if d != 1 && d != -1 {
            return Err(Error::NotInvertible(d));
        }
        let mut inv = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..n {
                let minor: Vec<Vec<i64>> = self
                    .matrix
                    .iter()
                    .enumerate()
                    .filter(|&(r, _)| r != j)
                    .map(|(_, row)| row.iter().enumerate().filter(|&(c, _)| c != i).map(|(_, &v)| v).collect())
                    .collect();
                let s = if (i + j) % 2 == 0 { 1 } else { -1 };
                inv[i][j] = s * det_int(&minor) * d;
            }
        }
        Ok(inv)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, c)| row.iter().zip(x).map(|(&m, &v)| m as f64 * v).sum::<f64>() + c)
            .collect()
    }

    fn validate(&self, chart: &Chart) -> Result<()> {
        let n = chart.dim();
        if self.matrix.len() != n || self.matrix.iter().any(|r| r.len() != n) || self.offset.len() != n {
            return Err(Error::WrongArity(format!("map does not act on dimension {n}")));
        }
        for (i, c) in chart.coords.iter().enumerate() {
            if c.allows_trig() && c.kind == crate::chart::CoordKind::Angular {
                continue;
            }
            let row_ok = (0..n).all(|j| self.matrix[i][j] == (i == j) as i64);
            let col_ok = (0..n).all(|j| self.matrix[j][i] == (i == j) as i64);
            if !row_ok || !col_ok || self.offset[i] != 0.0 {
                return Err(Error::LeavesClass(format!("map moves non-angular coordinate `{}`", c.name)));
            }
        }
        Ok(())
    }

    /// Images of the source variables as functions of the target variables.
    pub fn inverse_images(&self) -> Result<Vec<AffineImage>> {
        let inv = self.inverse_matrix()?;
        let n = inv.len();
        Ok((0..n)
            .map(|i| {
                let coeffs: Vec<(usize, i64)> = (0..n).filter(|&j| inv[i][j] != 0).map(|j| (j, inv[i][j])).collect();
                let constant = -(0..n).map(|j| inv[i][j] as f64 * self.offset[j]).sum::<f64>();
                AffineImage { coeffs, constant }
            })
            .collect())
    }

    /// `f_* X` as a field in the target coordinates.
    pub fn pushforward(&self, x: &VectorField) -> Result<VectorField> {
        self.validate(&x.chart)?;
        let imgs = self.inverse_images()?;
        let moved: Vec<Expr> = x.comps.iter().map(|c| c.compose_affine(&imgs)).collect::<Result<_>>()?;
        let n = x.dim();
        let comps = (0..n)
            .map(|i| {
                let mut acc = Expr::zero();
                for j in 0..n {
                    if self.matrix[i][j] != 0 {
                        acc = acc.add(&moved[j].scale(self.matrix[i][j] as f64));
                    }
                }
                acc
            })
            .collect();
        Ok(VectorField { chart: x.chart.clone(), comps })
    }

    /// `(f^{-1})^* e`: the function `e` written in target coordinates.
    pub fn transport_function(&self, chart: &Chart, e: &Expr) -> Result<Expr> {
        self.validate(chart)?;
        e.compose_affine(&self.inverse_images()?)
    }
}

/// Numerical rank of the span of `vectors` and the smallest singular value
/// that was counted as nonzero.
pub fn rank_at(vectors: &[Vec<f64>], tol: f64) -> (usize, f64) {
    if vectors.is_empty() {
        return (0, 0.0);
    }
    let n = vectors[0].len();
    let m = DMatrix::from_fn(vectors.len(), n, |i, j| vectors[i][j]);
    let sv = m.singular_values();
    let mut vals: Vec<f64> = sv.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let rank = vals.iter().filter(|&&s| s > tol).count();
    let gap = if rank == 0 { 0.0 } else { vals[rank - 1] };
    (rank, gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Coordinate;

    fn darboux4() -> Arc<Chart> {
        Arc::new(
            Chart::builder("darboux")
                .linear("x", -1.0, 1.0)
                .linear("y", -1.0, 1.0)
                .linear("z", -1.0, 1.0)
                .linear("w", -1.0, 1.0)
                .build()
                .unwrap(),
        )
    }

    #[test]
    fn bracket_of_coordinate_fields_vanishes() {
        let c = darboux4();
        let b = lie_bracket(&VectorField::coordinate(&c, 0), &VectorField::coordinate(&c, 1)).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn heisenberg_bracket() {
        let c = darboux4();
        let c1 = VectorField::parse(&c, &["1", "0", "y", "0"]).unwrap();
        let c2 = VectorField::parse(&c, &["0", "1", "0", "0"]).unwrap();
        let b = lie_bracket(&c1, &c2).unwrap();
        assert!(b.canonical_equal(&VectorField::parse(&c, &["0", "0", "-1", "0"]).unwrap()));
    }

    #[test]
    fn d_of_darboux_form() {
        let c = darboux4();
        let a = OneForm::parse(&c, &["-y", "0", "1", "0"]).unwrap();
        let da = a.exterior_derivative();
        assert!(da.get(0, 1).canonical_equal(&Expr::constant(1.0)));
        assert!(da.get(1, 0).canonical_equal(&Expr::constant(-1.0)));
        let top = wedge_top(&a, &da, &[0.2, 0.3, 0.1, 0.0]).unwrap();
        // basis order: xyz, xyw, xzw, yzw
        assert!((top[0] - 1.0).abs() < 1e-14);
        assert_eq!(&top[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn dd_is_zero() {
        let c = darboux4();
        let f = parse_expr("x^2*y - z*w^3 + 2*x", &c).unwrap();
        assert!(OneForm::exact(&c, &f).exterior_derivative().is_zero());
    }

    #[test]
    fn wedge_on_dimension_two_rejected() {
        let c = Arc::new(Chart::builder("p").linear("x", 0.0, 1.0).linear("y", 0.0, 1.0).build().unwrap());
        let a = OneForm::coordinate(&c, 0);
        assert!(matches!(wedge_top(&a, &a.exterior_derivative(), &[0.0, 0.0]), Err(Error::Dimension(2))));
    }

    #[test]
    fn shear_pushforward() {
        let c = Arc::new(
            Chart::new(
                "binding",
                vec![
                    Coordinate::angular("x"),
                    Coordinate::angular("y"),
                    Coordinate::radial("r", 0.0, 1.0),
                    Coordinate::angular("phi"),
                ],
            )
            .unwrap(),
        );
        // (x, y, r, phi) -> (x, y, r, phi + y)
        let mut f = AffineMap::identity(4);
        f.matrix[3][1] = 1;
        let dy = VectorField::coordinate(&c, 1);
        let w = f.pushforward(&dy).unwrap();
        assert!(w.canonical_equal(&VectorField::parse(&c, &["0", "1", "0", "1"]).unwrap()));
        let x = VectorField::parse(&c, &["0", "0", "cos(2*y + phi)", "0"]).unwrap();
        let px = f.pushforward(&x).unwrap();
        assert!(px.comps[2].canonical_equal(&parse_expr("cos(y + phi)", &c).unwrap()));
        let mut bad = AffineMap::identity(4);
        bad.matrix[2][1] = 1;
        assert!(bad.pushforward(&dy).is_err());
        let mut sing = AffineMap::identity(4);
        sing.matrix[3][3] = 2;
        assert!(matches!(sing.pushforward(&dy), Err(Error::NotInvertible(2))));
    }

    #[test]
    fn rank_reports_gap() {
        let (r, g) = rank_at(&[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0]], 1e-9);
        assert_eq!(r, 2);
        assert!((g - 1.0).abs() < 1e-12);
        let (r, _) = rank_at(&[vec![1.0, 1.0], vec![2.0, 2.0]], 1e-9);
        assert_eq!(r, 1);
    }
}
