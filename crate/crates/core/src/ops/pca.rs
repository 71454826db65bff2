use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::EngineError;

/// Projects rows onto the two leading principal axes.
///
/// Axes are eigenvectors of the sample covariance ordered by descending
/// eigenvalue, each signed so its largest-magnitude component is positive.
pub fn pca2(rows: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, EngineError> {
    let n = rows.len();
    if n < 2 {
        return Err(EngineError::DegenerateInput(format!("need at least 2 rows, got {n}")));
    }
    let dim = rows[0].len();
    if dim < 2 {
        return Err(EngineError::DegenerateInput(format!("need vectors of dimension >= 2, got {dim}")));
    }
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, dim, |i, j| rows[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    if eigen.eigenvalues[order[0]] <= 1e-12 {
        return Err(EngineError::DegenerateInput("covariance has rank 0".into()));
    }

    let axes: Vec<Vec<f64>> = order[..2]
        .iter()
        .map(|&idx| {
            let v: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
            let pivot = v
                .iter()
                .enumerate()
                .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
            if v[pivot] < 0.0 {
                v.into_iter().map(|x| -x).collect()
            } else {
                v
            }
        })
        .collect();

    Ok((0..n)
        .map(|i| {
            let row = centered.row(i);
            let project = |axis: &[f64]| row.iter().zip(axis).map(|(x, a)| x * a).sum::<f64>();
            [project(&axes[0]), project(&axes[1])]
        })
        .collect())
}
