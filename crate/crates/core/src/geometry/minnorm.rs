//! Wolfe's minimum-norm-point algorithm for the convex hull of a finite set.

use super::linalg::{dot, solve};

/// Minimum-norm point of `conv(points)` together with its convex weights
/// (indexed like `points`). Panics on an empty input.
pub fn min_norm_point(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    assert!(!points.is_empty(), "min_norm_point needs at least one point");
    let dim = points[0].len();
    let scale = points
        .iter()
        .map(|p| dot(p, p))
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    let tol = 1e-13 * scale;

    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut set: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();

    for _major in 0..(10 * points.len() + 50) {
        let xx = dot(&x, &x);
        let (j, xj) = (0..points.len())
            .map(|k| (k, dot(&x, &points[k])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xj >= xx - tol || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);

        for _minor in 0..(points.len() + dim + 5) {
            let Some(mu) = affine_minimizer(points, &set) else {
                // Degenerate affine set: drop the newest point.
                set.pop();
                lambda.pop();
                break;
            };
            if mu.iter().all(|&m| m > 1e-14) {
                lambda = mu;
                break;
            }
            let mut theta = 1.0_f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= 1e-14 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut k = 0;
            while k < set.len() {
                if lambda[k] <= 1e-14 {
                    set.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            for l in lambda.iter_mut() {
                *l /= total;
            }
        }
        x = combine(points, &set, &lambda, dim);
    }

    let mut weights = vec![0.0; points.len()];
    for (i, &s) in set.iter().enumerate() {
        weights[s] = lambda[i];
    }
    (x, weights)
}

fn combine(points: &[Vec<f64>], set: &[usize], lambda: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&s, &l) in set.iter().zip(lambda) {
        for (xi, pi) in x.iter_mut().zip(&points[s]) {
            *xi += l * pi;
        }
    }
    x
}

/// Weights of the minimum-norm point of the affine hull of `points[set]`.
fn affine_minimizer(points: &[Vec<f64>], set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    let mut b = vec![0.0; k + 1];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = dot(&points[set[i]], &points[set[j]]);
        }
        a[i][k] = 1.0;
        a[k][i] = 1.0;
    }
    b[k] = 1.0;
    let sol = solve(a, b)?;
    Some(sol[..k].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_closest_to_origin() {
        let (x, w) = min_norm_point(&[vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12);
        assert!((w[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn origin_inside_triangle() {
        let (x, w) = min_norm_point(&[vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]);
        assert!(x[0].abs() < 1e-12 && x[1].abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_is_closest() {
        let (x, _) = min_norm_point(&[vec![2.0, 3.0], vec![3.0, 3.0], vec![2.0, 4.0]]);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }
}
