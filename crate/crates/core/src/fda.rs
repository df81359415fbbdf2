//! Discretely sampled curves and the grid-weighted inner product
//! `<f, g>_m = m^{-1} sum_p f(t_p) g(t_p)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement of an equispaced design on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// `t_p = (p - 0.5) / m`
    #[default]
    Midpoint,
    /// `t_p = (p - 1) / (m - 1)`
    Endpoint,
}

impl GridKind {
    pub fn build(self, m: usize) -> Result<Grid> {
        match self {
            GridKind::Midpoint => Grid::midpoints(m),
            GridKind::Endpoint => Grid::endpoints(m),
        }
    }
}

/// Sampling design `t_1 < ... < t_m` in `[0, 1]`. Every grid carries the
/// quadrature weight `1/m`, regardless of point placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn midpoints(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InsufficientData { needed: 2, got: m });
        }
        let mf = m as f64;
        Ok(Self {
            points: (1..=m).map(|p| (p as f64 - 0.5) / mf).collect(),
        })
    }

    pub fn endpoints(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InsufficientData { needed: 2, got: m });
        }
        let step = (m - 1) as f64;
        Ok(Self {
            points: (0..m).map(|p| p as f64 / step).collect(),
        })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: points.len(),
            });
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("grid points"));
        }
        if points.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Domain("grid points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Grids always hold at least two points.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Quadrature weight `1/m`.
    #[inline]
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

/// A function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curve(Vec<f64>);

impl Curve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("curve values"));
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn constant(m: usize, value: f64) -> Self {
        Self(vec![value; m])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.points().iter().map(|&t| f(t)).collect())
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub(crate) fn from_dvector(v: &DVector<f64>) -> Self {
        Self::from_raw(v.iter().copied().collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v * s).collect())
    }

    /// `self += a * other`
    pub fn add_scaled(&mut self, a: f64, other: &Curve) {
        debug_assert_eq!(self.len(), other.len());
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            *s += a * o;
        }
    }

    pub fn sub(&self, other: &Curve) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Unchecked weighted dot product; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn dot_m(&self, other: &Curve) -> f64 {
        weighted_dot(&self.0, &other.0)
    }

    /// Discrete norm `sqrt(<f, f>_m)`.
    pub fn norm_m(&self) -> f64 {
        self.dot_m(self).sqrt()
    }
}

#[inline]
pub(crate) fn weighted_dot(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    s / a.len() as f64
}

/// `<f, g>_m = m^{-1} sum_p f_p g_p`.
pub fn inner_product(f: &Curve, g: &Curve, grid: &Grid) -> Result<f64> {
    grid.check_len(f.len())?;
    grid.check_len(g.len())?;
    Ok(f.dot_m(g))
}

/// `n` scalar responses paired with `n` curves on one shared grid.
///
/// Curves are stored as the rows of an `n x m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grid: Grid,
    y: Vec<f64>,
    x: DMatrix<f64>,
}

impl FunctionalDataset {
    pub fn new(grid: Grid, y: Vec<f64>, curves: &[Curve]) -> Result<Self> {
        if curves.len() != y.len() {
            return Err(Error::Dimension {
                expected: y.len(),
                found: curves.len(),
            });
        }
        for c in curves {
            grid.check_len(c.len())?;
        }
        let m = grid.len();
        let x = DMatrix::from_fn(curves.len(), m, |i, p| curves[i].values()[p]);
        Self::from_matrix(grid, y, x)
    }

    pub fn from_matrix(grid: Grid, y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: y.len(),
            });
        }
        if x.nrows() != y.len() {
            return Err(Error::Dimension {
                expected: y.len(),
                found: x.nrows(),
            });
        }
        grid.check_len(x.ncols())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("curves"));
        }
        Ok(Self { grid, y, x })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Curves as rows of an `n x m` matrix.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn curve(&self, i: usize) -> Curve {
        Curve::from_raw(self.x.row(i).iter().copied().collect())
    }

    pub fn curves(&self) -> Vec<Curve> {
        (0..self.n()).map(|i| self.curve(i)).collect()
    }

    /// Observations at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::Index {
                index: bad,
                available: self.n(),
            });
        }
        let y = indices.iter().map(|&i| self.y[i]).collect();
        let x = self.x.select_rows(indices);
        Self::from_matrix(self.grid.clone(), y, x)
    }

    /// Same design with the curve matrix replaced.
    pub fn with_curves(&self, x: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(self.grid.clone(), self.y.clone(), x)
    }
}

/// Returns `(y_bar, X_bar, centered)`.
pub fn center(data: &FunctionalDataset) -> Result<(f64, Curve, FunctionalDataset)> {
    let n = data.n();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let y_mean = data.y.iter().sum::<f64>() / n as f64;
    let x_mean: Vec<f64> = data.x.column_iter().map(|c| c.mean()).collect();
    let y = data.y.iter().map(|v| v - y_mean).collect();
    let mut x = data.x.clone();
    for (p, mut col) in x.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[p]);
    }
    let centered = FunctionalDataset {
        grid: data.grid.clone(),
        y,
        x,
    };
    Ok((y_mean, Curve::from_raw(x_mean), centered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grids() {
        let g = Grid::midpoints(4).unwrap();
        assert_eq!(g.points(), &[0.125, 0.375, 0.625, 0.875]);
        let e = Grid::endpoints(3).unwrap();
        assert_eq!(e.points(), &[0.0, 0.5, 1.0]);
        assert!(Grid::midpoints(1).is_err());
        assert!(Grid::from_points(vec![0.2, 0.1]).is_err());
        assert!(Grid::from_points(vec![0.2, 1.5]).is_err());
        assert!(Grid::from_points(vec![0.1, 0.5, 0.9]).is_ok());
    }

    #[test]
    fn inner_product_of_constants_is_one() {
        for m in [2, 7, 50] {
            let g = Grid::midpoints(m).unwrap();
            let one = Curve::constant(m, 1.0);
            assert!((inner_product(&one, &one, &g).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cosines_are_orthogonal_on_midpoints() {
        let g = Grid::midpoints(50).unwrap();
        let f = Curve::from_fn(&g, |t| 2f64.sqrt() * (2.0 * PI * t).cos()).unwrap();
        let h = Curve::from_fn(&g, |t| 2f64.sqrt() * (3.0 * PI * t).cos()).unwrap();
        assert!(inner_product(&f, &h, &g).unwrap().abs() < 1e-6);
        assert!(inner_product(&f, &Curve::zeros(50), &g).unwrap() == 0.0);
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let g = Grid::midpoints(5).unwrap();
        let err = inner_product(&Curve::zeros(5), &Curve::zeros(4), &g).unwrap_err();
        assert_eq!(
            err,
            Error::Dimension {
                expected: 5,
                found: 4
            }
        );
    }

    #[test]
    fn two_point_center() {
        let g = Grid::midpoints(3).unwrap();
        let c = Curve::constant(3, 4.0);
        let d = FunctionalDataset::new(g, vec![1.0, 3.0], &[c.clone(), c]).unwrap();
        let (ybar, xbar, centered) = center(&d).unwrap();
        assert_eq!(ybar, 2.0);
        assert_eq!(xbar.values(), &[4.0, 4.0, 4.0]);
        assert_eq!(centered.y(), &[-1.0, 1.0]);
        assert!(centered.x().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn centered_data_is_a_fixed_point() {
        let g = Grid::midpoints(3).unwrap();
        let curves = [
            Curve::new(vec![1.0, -2.0, 0.5]).unwrap(),
            Curve::new(vec![-1.0, 2.0, -0.5]).unwrap(),
        ];
        let d = FunctionalDataset::new(g, vec![-1.5, 1.5], &curves).unwrap();
        let (ybar, xbar, centered) = center(&d).unwrap();
        assert_eq!(ybar, 0.0);
        assert!(xbar.values().iter().all(|v| *v == 0.0));
        assert_eq!(centered, d);
    }

    #[test]
    fn dataset_validation() {
        let g = Grid::midpoints(3).unwrap();
        let c = Curve::zeros(3);
        assert!(matches!(
            FunctionalDataset::new(g.clone(), vec![1.0], &[c.clone()]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            FunctionalDataset::new(g.clone(), vec![1.0, 2.0], &[c.clone(), Curve::zeros(4)]),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            FunctionalDataset::new(g, vec![1.0, f64::NAN], &[c.clone(), c]),
            Err(Error::NonFinite(_))
        ));
        assert!(Curve::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn subset_picks_rows() {
        let g = Grid::midpoints(2).unwrap();
        let curves: Vec<Curve> = (0..4)
            .map(|i| Curve::new(vec![i as f64, -(i as f64)]).unwrap())
            .collect();
        let d = FunctionalDataset::new(g, vec![0.0, 1.0, 2.0, 3.0], &curves).unwrap();
        let s = d.subset(&[3, 1]).unwrap();
        assert_eq!(s.y(), &[3.0, 1.0]);
        assert_eq!(s.curve(0).values(), &[3.0, -3.0]);
        assert!(d.subset(&[0, 9]).is_err());
    }
}
