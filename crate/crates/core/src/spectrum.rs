//! Spectral decomposition of the empirical covariance operator.
//!
//! The operator is discretised as `(1/m) S` with
//! `S_pq = n^{-1} sum_i (X_i(t_p) - X_bar(t_p)) (X_i(t_q) - X_bar(t_q))`.
//! Its Euclidean-orthonormal eigenvectors are scaled by `sqrt(m)` so the
//! eigenfunctions are orthonormal under `<.,.>_m`, and the eigenvalues do not
//! depend on grid resolution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fda::{center, Curve, FunctionalDataset, Grid};

/// Eigenvalues below this fraction of the leading one are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CovSpectrum {
    grid: Grid,
    n: usize,
    eigvals: Vec<f64>,
    /// `m x q`, column `j` is the eigenfunction values.
    eigfuns: DMatrix<f64>,
    positive_rank: usize,
    y_mean: f64,
    mean_curve: Curve,
    cross_cov: Curve,
    /// `<C_hat, phi_j>_m` for every retained `j`.
    cross_coeffs: Vec<f64>,
    /// Component of `C_hat` orthogonal to the positive eigenfunctions; zero
    /// up to roundoff and never used by the filters.
    cross_residual: Curve,
    trace: f64,
}

pub fn empirical_spectrum(data: &FunctionalDataset) -> Result<CovSpectrum> {
    let n = data.n();
    let m = data.m();
    let (y_mean, mean_curve, centered) = center(data)?;
    let xc = centered.x();
    if xc.iter().any(|v| !v.is_finite()) || centered.y().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("centered data"));
    }

    let mf = m as f64;
    let nf = n as f64;
    // (1/m) S, symmetric m x m
    let op = (xc.transpose() * xc) / (nf * mf);
    let trace = op.trace();

    let eig = SymmetricEigen::new(op);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalues"));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let q = (n - 1).min(m);
    let lead = eig.eigenvalues[order[0]].max(0.0);
    let cutoff = EIGEN_CLAMP * lead;
    let scale = mf.sqrt();

    let mut eigvals = Vec::with_capacity(q);
    let mut eigfuns = DMatrix::zeros(m, q);
    for (j, &k) in order.iter().take(q).enumerate() {
        let lam = eig.eigenvalues[k];
        eigvals.push(if lead > 0.0 && lam >= cutoff { lam } else { 0.0 });

        let v = eig.eigenvectors.column(k);
        // sign: entry of largest magnitude is positive
        let pivot = v.iamax();
        let sign = if v[pivot] < 0.0 { -scale } else { scale };
        eigfuns.column_mut(j).copy_from(&(v * sign));
    }
    let positive_rank = eigvals.iter().take_while(|&&l| l > 0.0).count();

    let yc = DVector::from_column_slice(centered.y());
    let cross = xc.transpose() * yc / nf;
    let cross_cov = Curve::from_dvector(&cross);

    let cross_coeffs: Vec<f64> = (0..q)
        .map(|j| eigfuns.column(j).dot(&cross) / mf)
        .collect();
    let mut residual = cross.clone();
    for (j, c) in cross_coeffs.iter().enumerate().take(positive_rank) {
        residual.axpy(-c, &eigfuns.column(j), 1.0);
    }
    // C_hat lies in the span of the centered curves, which is the positive
    // eigenspace; anything left over is roundoff
    debug_assert!(
        residual.amax() <= 1e-10 * cross.amax().max(f64::MIN_POSITIVE),
        "cross-covariance residual {} outside the positive eigenspace",
        residual.amax()
    );

    Ok(CovSpectrum {
        grid: data.grid().clone(),
        n,
        eigvals,
        eigfuns,
        positive_rank,
        y_mean,
        mean_curve,
        cross_cov,
        cross_coeffs,
        cross_residual: Curve::from_dvector(&residual),
        trace,
    })
}

impl CovSpectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Sample size the spectrum was computed from.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Retained eigenvalues, nonincreasing, `q = min(n - 1, m)` of them.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// Number of strictly positive eigenvalues after clamping.
    pub fn positive_rank(&self) -> usize {
        self.positive_rank
    }

    pub fn retained(&self) -> usize {
        self.eigvals.len()
    }

    pub fn eigfun(&self, j: usize) -> Result<Curve> {
        if j >= self.retained() {
            return Err(Error::Index {
                index: j,
                available: self.retained(),
            });
        }
        Ok(Curve::from_raw(self.eigfuns.column(j).iter().copied().collect()))
    }

    /// Eigenfunctions as the columns of an `m x q` matrix.
    pub fn eigfuns(&self) -> &DMatrix<f64> {
        &self.eigfuns
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn mean_curve(&self) -> &Curve {
        &self.mean_curve
    }

    pub fn cross_cov(&self) -> &Curve {
        &self.cross_cov
    }

    pub fn cross_coeffs(&self) -> &[f64] {
        &self.cross_coeffs
    }

    pub fn cross_residual(&self) -> &Curve {
        &self.cross_residual
    }

    /// `m^{-1} tr S`, the discrete trace of the covariance operator.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `(lambda_1 / lambda_j)^{1/2}` over the positive spectrum.
    pub fn condition_indices(&self) -> Vec<f64> {
        let lead = self.eigvals.first().copied().unwrap_or(0.0);
        self.eigvals[..self.positive_rank]
            .iter()
            .map(|l| (lead / l).sqrt())
            .collect()
    }

    /// Scores `<x_i - X_bar, phi_j>_m` for the rows of `x` (`rows x q`).
    pub fn scores(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.grid.check_len(x.ncols())?;
        let mut xc = x.clone();
        for (p, mut col) in xc.column_iter_mut().enumerate() {
            col.add_scalar_mut(-self.mean_curve.values()[p]);
        }
        Ok(xc * &self.eigfuns / self.grid.len() as f64)
    }
}

/// `(<c, phi_1>_m, ..., <c, phi_k>_m)`.
pub fn fourier_coeffs(c: &Curve, spec: &CovSpectrum, k: usize) -> Result<Vec<f64>> {
    spec.grid.check_len(c.len())?;
    if k > spec.retained() {
        return Err(Error::Index {
            index: k,
            available: spec.retained(),
        });
    }
    let v = DVector::from_column_slice(c.values());
    let m = spec.grid.len() as f64;
    Ok((0..k).map(|j| spec.eigfuns.column(j).dot(&v) / m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fda::inner_product;
    use std::f64::consts::PI;

    fn rank_one(a: &[f64], m: usize) -> (FunctionalDataset, Curve) {
        let g = Grid::midpoints(m).unwrap();
        let phi = Curve::from_fn(&g, |t| 2f64.sqrt() * (2.0 * PI * t).cos()).unwrap();
        let curves: Vec<Curve> = a.iter().map(|&s| phi.scaled(s)).collect();
        (FunctionalDataset::new(g, a.to_vec(), &curves).unwrap(), phi)
    }

    #[test]
    fn identical_curves_have_empty_spectrum() {
        let g = Grid::midpoints(6).unwrap();
        let c = Curve::new(vec![1.0, 2.0, 3.0, 2.0, 1.0, 0.0]).unwrap();
        let d = FunctionalDataset::new(g, vec![1.0, 2.0, 3.0], &[c.clone(), c.clone(), c])
            .unwrap();
        let s = empirical_spectrum(&d).unwrap();
        assert_eq!(s.positive_rank(), 0);
        assert!(s.eigvals().iter().all(|&l| l == 0.0));
        assert!(s.cross_cov().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank_one_eigenvalue_is_score_variance() {
        let a = [1.0, -2.0, 0.5, 3.0, -1.5];
        let (d, phi) = rank_one(&a, 20);
        let s = empirical_spectrum(&d).unwrap();
        let mean = a.iter().sum::<f64>() / 5.0;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((s.eigvals()[0] - var).abs() < 1e-12);
        assert_eq!(s.positive_rank(), 1);
        let phi1 = s.eigfun(0).unwrap();
        let dot = inner_product(&phi1, &phi, d.grid()).unwrap();
        assert!((dot.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sign_convention_and_ordering() {
        let a = [1.0, -2.0, 0.5, 3.0, -1.5, 2.2, -0.7];
        let (d, _) = rank_one(&a, 12);
        let s = empirical_spectrum(&d).unwrap();
        for j in 0..s.retained() {
            let f = s.eigfun(j).unwrap();
            let (imax, _) = f
                .values()
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .unwrap();
            assert!(f.values()[imax] > 0.0);
        }
        assert!(s.eigvals().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn fourier_coeffs_recover_linear_combination() {
        let g = Grid::midpoints(8).unwrap();
        let curves: Vec<Curve> = (0..12)
            .map(|i| {
                let i = i as f64;
                Curve::from_fn(&g, |t| (i * 0.7).sin() * t + (i * 1.3).cos() * t * t + (i * 0.31).sin())
                    .unwrap()
            })
            .collect();
        let y = (0..12).map(|i| i as f64).collect();
        let d = FunctionalDataset::new(g, y, &curves).unwrap();
        let s = empirical_spectrum(&d).unwrap();
        let mut c = s.eigfun(0).unwrap().scaled(2.0);
        c.add_scaled(3.0, &s.eigfun(2).unwrap());
        let k = fourier_coeffs(&c, &s, 3).unwrap();
        assert!((k[0] - 2.0).abs() < 1e-8 && k[1].abs() < 1e-8 && (k[2] - 3.0).abs() < 1e-8);

        let e2 = fourier_coeffs(&s.eigfun(1).unwrap(), &s, 3).unwrap();
        assert!(e2[0].abs() < 1e-10 && (e2[1] - 1.0).abs() < 1e-10 && e2[2].abs() < 1e-10);

        assert!(fourier_coeffs(&Curve::zeros(8), &s, 2)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(matches!(
            fourier_coeffs(&c, &s, s.retained() + 1),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn retains_min_n_minus_one_m() {
        let (d, _) = rank_one(&[1.0, 2.0, 3.0], 10);
        assert_eq!(empirical_spectrum(&d).unwrap().retained(), 2);
    }
}
