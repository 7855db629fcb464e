//! Brute-force reference implementations, deliberately naive and
//! independent of the library code they check.

#![allow(dead_code)]

/// AUC by counting every (positive, negative) pair; ties score one half.
pub fn pairwise_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0.0;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    credit += 1.0;
                } else if scores[i] == scores[j] {
                    credit += 0.5;
                }
            }
        }
    }
    credit / pairs
}

/// Sample covariance with divisor n - 1.
pub fn sample_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    cov
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, largest
/// first.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let d = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

#[derive(Clone, Copy)]
pub enum Gain {
    Newton { lambda: f64 },
    Gini,
}

impl Gain {
    /// Gain of splitting a node with sums `(a, b)` into left/right parts.
    pub fn of(&self, left: (f64, f64), right: (f64, f64)) -> f64 {
        let parent = (left.0 + right.0, left.1 + right.1);
        match *self {
            Gain::Newton { lambda } => {
                let s = |(g, h): (f64, f64)| g * g / (h + lambda);
                0.5 * (s(left) + s(right) - s(parent))
            }
            Gain::Gini => {
                // weight times Gini impurity, W (1 - p^2 - (1 - p)^2)
                let imp = |(pos, w): (f64, f64)| {
                    if w == 0.0 {
                        0.0
                    } else {
                        let p = pos / w;
                        w * (1.0 - p * p - (1.0 - p) * (1.0 - p))
                    }
                };
                imp(parent) - imp(left) - imp(right)
            }
        }
    }
}

/// Best gain per feature over every midpoint between consecutive distinct
/// values, each side keeping at least one row. `-inf` when a column is
/// constant.
pub fn exhaustive_gains(columns: &[Vec<f32>], stats: &[(f64, f64)], gain: Gain) -> Vec<f64> {
    columns
        .iter()
        .map(|col| {
            let mut distinct = col.clone();
            distinct.sort_by(f32::total_cmp);
            distinct.dedup();
            let mut best = f64::NEG_INFINITY;
            for pair in distinct.windows(2) {
                let t = (f64::from(pair[0]) + f64::from(pair[1])) / 2.0;
                let (mut l, mut r) = ((0.0, 0.0), (0.0, 0.0));
                for (x, s) in col.iter().zip(stats) {
                    if f64::from(*x) <= t {
                        l = (l.0 + s.0, l.1 + s.1);
                    } else {
                        r = (r.0 + s.0, r.1 + s.1);
                    }
                }
                best = best.max(gain.of(l, r));
            }
            best
        })
        .collect()
}

/// Central difference `(f(x + eps) - f(x - eps)) / 2 eps`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, eps: f64) -> f64 {
    (f(x + eps) - f(x - eps)) / (2.0 * eps)
}
