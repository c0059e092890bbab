//! Least squares with inference on a centered design, via Householder QR with
//! column pivoting.
//!
//! The response and every column are centered before fitting, which absorbs the
//! intercept; residual degrees of freedom are therefore `n - rank - 1`.
//! Columns that pivoting places beyond the numerical rank get no coefficient.

use ndarray::{ArrayView1, ArrayView2};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Relative size of a pivot (against the largest column norm) below which the
/// remaining columns are treated as linearly dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OlsFit {
    /// `None` for columns outside the identifiable subspace.
    pub coefficients: Vec<Option<f64>>,
    pub std_errors: Vec<Option<f64>>,
    pub t_stats: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub rank: usize,
    pub df_resid: usize,
    pub rss: f64,
}

/// Compact Householder QR of an `n x m` matrix stored column by column.
struct PivotedQr {
    cols: Vec<Vec<f64>>,
    reflectors: Vec<(Vec<f64>, f64)>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn factor(mut cols: Vec<Vec<f64>>) -> Self {
        let m = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let mut perm: Vec<usize> = (0..m).collect();
        let mut reflectors = Vec::with_capacity(m.min(n));
        let mut rank = 0;
        let mut max_norm = 0.0;

        for j in 0..m.min(n) {
            let (pivot, norm2) = (j..m)
                .map(|c| (c, cols[c][j..].iter().map(|v| v * v).sum::<f64>()))
                .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            cols.swap(j, pivot);
            perm.swap(j, pivot);

            let norm = norm2.sqrt();
            if j == 0 {
                max_norm = norm;
            }
            if norm == 0.0 || norm <= RANK_TOL * max_norm {
                break;
            }

            let x0 = cols[j][j];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let mut v = cols[j][j..].to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|a| a * a).sum();
            let beta = 2.0 / vnorm2;

            cols[j][j] = alpha;
            for c in cols[j][j + 1..].iter_mut() {
                *c = 0.0;
            }
            for col in cols.iter_mut().skip(j + 1) {
                let tail = &mut col[j..];
                let s = beta * v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>();
                for (t, vi) in tail.iter_mut().zip(&v) {
                    *t -= s * vi;
                }
            }
            reflectors.push((v, beta));
            rank = j + 1;
        }
        Self {
            cols,
            reflectors,
            perm,
            rank,
        }
    }

    /// Overwrites `b` with `Q^T b`.
    fn apply_qt(&self, b: &mut [f64]) {
        for (j, (v, beta)) in self.reflectors.iter().enumerate() {
            let tail = &mut b[j..];
            let s = beta * v.iter().zip(tail.iter()).map(|(a, c)| a * c).sum::<f64>();
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    fn r(&self, i: usize, c: usize) -> f64 {
        self.cols[c][i]
    }

    /// Solves `R b = rhs` on the leading `rank x rank` block.
    fn solve_r(&self, rhs: &[f64]) -> Vec<f64> {
        let r = self.rank;
        let mut b = rhs[..r].to_vec();
        for i in (0..r).rev() {
            let mut acc = b[i];
            for c in i + 1..r {
                acc -= self.r(i, c) * b[c];
            }
            b[i] = acc / self.r(i, i);
        }
        b
    }

    /// Squared row norms of `R^{-1}`, i.e. the diagonal of `(R^T R)^{-1}`.
    fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let r = self.rank;
        let mut diag = vec![0.0; r];
        // Column c of R^{-1} solves R z = e_c; only rows 0..=c are non-zero.
        for c in 0..r {
            let mut z = vec![0.0; c + 1];
            z[c] = 1.0 / self.r(c, c);
            for i in (0..c).rev() {
                let mut acc = 0.0;
                for (l, zl) in z.iter().enumerate().take(c + 1).skip(i + 1) {
                    acc -= self.r(i, l) * zl;
                }
                z[i] = acc / self.r(i, i);
            }
            for (d, zi) in diag.iter_mut().zip(&z) {
                *d += zi * zi;
            }
        }
        diag
    }
}

fn centered(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = values.collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.into_iter().map(|a| a - mean).collect()
}

/// Fits `y ~ X` after centering both, returning coefficients, standard errors
/// and two-sided t-test p-values. Requires `n > m + 1`.
pub fn fit_centered(y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>) -> Result<OlsFit> {
    let (n, m) = x.dim();
    if y.len() != n {
        return Err(Error::Contract(format!("response length {} but design has {n} rows", y.len())));
    }
    if n <= m + 1 {
        return Err(Error::Contract(format!(
            "thresholded OLS needs n > m + 1 observations, got n = {n}, m = {m}"
        )));
    }

    let mut qty = centered(y.iter().copied());
    let y_norm2: f64 = qty.iter().map(|v| v * v).sum();
    let cols: Vec<Vec<f64>> = x.columns().into_iter().map(|c| centered(c.iter().copied())).collect();
    let qr = PivotedQr::factor(cols);
    qr.apply_qt(&mut qty);

    let rank = qr.rank;
    let df_resid = n - rank - 1;
    let rss: f64 = qty[rank..].iter().map(|v| v * v).sum();
    let coef_piv = qr.solve_r(&qty);

    let mut out = OlsFit {
        coefficients: vec![None; m],
        std_errors: vec![None; m],
        t_stats: vec![None; m],
        p_values: vec![None; m],
        rank,
        df_resid,
        rss,
    };
    if rank == 0 {
        return Ok(out);
    }

    // A residual at rounding level means y lies in the column span: the
    // t-statistics are infinite for non-zero coefficients and undefined for
    // zero ones.
    let exact_fit = rss <= n as f64 * (f64::EPSILON * f64::EPSILON) * y_norm2 * 1e4;
    let sigma2 = rss / df_resid as f64;
    let inv_diag = qr.inverse_gram_diagonal();
    let t_dist = StudentsT::new(0.0, 1.0, df_resid as f64)
        .map_err(|e| Error::Contract(format!("invalid t distribution: {e}")))?;
    let max_abs = coef_piv.iter().fold(0.0f64, |a, b| a.max(b.abs()));

    for (i, &b) in coef_piv.iter().enumerate() {
        let col = qr.perm[i];
        let se = (sigma2 * inv_diag[i]).sqrt();
        out.coefficients[col] = Some(b);
        out.std_errors[col] = Some(se);
        let (t, p) = if exact_fit {
            if b.abs() > 1e-8 * max_abs {
                (f64::INFINITY.copysign(b), 0.0)
            } else {
                (0.0, 1.0)
            }
        } else {
            let t = b / se;
            (t, (2.0 * t_dist.sf(t.abs())).min(1.0))
        };
        out.t_stats[col] = Some(t);
        out.p_values[col] = Some(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};

    #[test]
    fn matches_normal_equations_on_small_system() {
        let x = array![[1.0, 2.0], [2.0, 1.0], [3.0, 5.0], [4.0, 3.0], [5.0, 8.0], [6.0, 4.0]];
        let y = array![1.5, 2.0, 4.1, 3.9, 6.8, 5.2];
        let fit = fit_centered(y.view(), x.view()).unwrap();

        // Normal equations on centered data, solved by Cramer's rule.
        let xm = x.mean_axis(ndarray::Axis(0)).unwrap();
        let ym = y.mean().unwrap();
        let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..6 {
            let (a, b, c) = (x[[i, 0]] - xm[0], x[[i, 1]] - xm[1], y[i] - ym);
            s11 += a * a;
            s12 += a * b;
            s22 += b * b;
            s1y += a * c;
            s2y += b * c;
        }
        let det = s11 * s22 - s12 * s12;
        let b1 = (s22 * s1y - s12 * s2y) / det;
        let b2 = (s11 * s2y - s12 * s1y) / det;
        assert!((fit.coefficients[0].unwrap() - b1).abs() < 1e-10);
        assert!((fit.coefficients[1].unwrap() - b2).abs() < 1e-10);

        // Standard errors from sigma^2 * diag((X^T X)^{-1}).
        let sigma2 = fit.rss / 3.0;
        assert!((fit.std_errors[0].unwrap() - (sigma2 * s22 / det).sqrt()).abs() < 1e-10);
        assert!((fit.std_errors[1].unwrap() - (sigma2 * s11 / det).sqrt()).abs() < 1e-10);
        assert_eq!(fit.df_resid, 3);
    }

    #[test]
    fn duplicate_column_is_not_identifiable() {
        let x = array![[1.0, 1.0, 0.3], [2.0, 2.0, -1.0], [3.0, 3.0, 0.5], [4.0, 4.0, 2.0], [5.0, 5.0, 0.1], [7.0, 7.0, 1.1]];
        let y = array![1.0, 2.5, 2.9, 4.2, 5.1, 6.8];
        let fit = fit_centered(y.view(), x.view()).unwrap();
        assert_eq!(fit.rank, 2);
        assert_eq!(fit.coefficients.iter().filter(|c| c.is_none()).count(), 1);
        assert!(fit.coefficients[2].is_some());
    }

    #[test]
    fn constant_design_has_rank_zero() {
        let x = Array2::from_elem((5, 2), 3.0);
        let y = Array1::linspace(0.0, 1.0, 5);
        let fit = fit_centered(y.view(), x.view()).unwrap();
        assert_eq!(fit.rank, 0);
        assert!(fit.p_values.iter().all(Option::is_none));
    }

    #[test]
    fn too_few_rows_rejected() {
        let x = Array2::<f64>::zeros((3, 2));
        let y = Array1::<f64>::zeros(3);
        assert!(fit_centered(y.view(), x.view()).is_err());
    }
}
