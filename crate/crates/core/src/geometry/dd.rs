//! Double description method for polyhedral cones `{s : a_i . s <= 0}`.
//!
//! The cone is maintained as `lin(L) + cone(R)` with every lineality vector
//! orthogonal to all processed constraints. A constraint that cuts the
//! lineality space turns one lineality vector into a ray; otherwise rays are
//! split by sign and adjacent pairs are combined (combinatorial adjacency
//! test on zero sets).

use super::linalg::{axpy, dot, norm, normalized, orthonormalize, scale};

const EPS: f64 = 1e-10;

#[derive(Clone, Debug, Default)]
pub struct ConeGenerators {
    /// Extreme rays of the pointed part, unit length.
    pub rays: Vec<Vec<f64>>,
    /// Orthonormal basis of the lineality space.
    pub lineality: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct ZeroSet(Vec<u64>);

impl ZeroSet {
    fn new(bits: usize) -> Self {
        ZeroSet(vec![0; bits.div_ceil(64).max(1)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn intersect(&self, other: &Self) -> Self {
        ZeroSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

#[derive(Clone, Debug)]
struct Ray {
    v: Vec<f64>,
    zeros: ZeroSet,
}

/// Generators of `{s in R^dim : row . s <= 0 for every row}`.
pub fn cone_generators(dim: usize, rows: &[Vec<f64>]) -> ConeGenerators {
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .filter_map(|r| if norm(r) > EPS { normalized(r) } else { None })
        .collect();
    let m = rows.len();
    let mut lineality: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();

    for (k, a) in rows.iter().enumerate() {
        // Constraint cutting through the lineality space.
        let pick = lineality
            .iter()
            .enumerate()
            .map(|(i, l)| (i, dot(a, l)))
            .filter(|(_, v)| v.abs() > EPS)
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));
        if let Some((j, al)) = pick {
            let mut lj = lineality.remove(j);
            let mut al = al;
            if al > 0.0 {
                lj = scale(&lj, -1.0);
                al = -al;
            }
            for l in lineality.iter_mut() {
                let c = dot(a, l) / al;
                *l = axpy(l, -c, &lj);
            }
            for r in rays.iter_mut() {
                let c = dot(a, &r.v) / al;
                r.v = axpy(&r.v, -c, &lj);
                if let Some(u) = normalized(&r.v) {
                    r.v = u;
                }
                r.zeros.insert(k);
            }
            let mut zeros = ZeroSet::new(m);
            for i in 0..k {
                zeros.insert(i);
            }
            rays.push(Ray {
                v: normalized(&lj).unwrap_or(lj),
                zeros,
            });
            lineality = orthonormalize(&lineality, EPS);
            continue;
        }

        let vals: Vec<f64> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > EPS).collect();
        if pos.is_empty() {
            for (r, &v) in rays.iter_mut().zip(&vals) {
                if v.abs() <= EPS {
                    r.zeros.insert(k);
                }
            }
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < -EPS).collect();
        let min_common = dim.saturating_sub(lineality.len() + 2);
        let mut next: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common = rays[p].zeros.intersect(&rays[q].zeros);
                if common.count() < min_common {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(i, r)| i == p || i == q || !common.is_subset(&r.zeros));
                if !adjacent {
                    continue;
                }
                let combo = axpy(&scale(&rays[q].v, vals[p]), -vals[q], &rays[p].v);
                if let Some(v) = normalized(&combo) {
                    let mut zeros = common;
                    zeros.insert(k);
                    next.push(Ray { v, zeros });
                }
            }
        }
        for (i, r) in rays.iter().enumerate() {
            if vals[i] <= EPS {
                let mut r = r.clone();
                if vals[i].abs() <= EPS {
                    r.zeros.insert(k);
                }
                next.push(r);
            }
        }
        rays = next;
    }

    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in rays {
        if !out.iter().any(|o| dot(o, &r.v) > 1.0 - 1e-12) {
            out.push(r.v);
        }
    }
    ConeGenerators {
        rays: out,
        lineality,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contains(rays: &[Vec<f64>], v: &[f64]) -> bool {
        rays.iter().any(|r| dot(r, v) > 1.0 - 1e-9)
    }

    #[test]
    fn orthant_in_three_dimensions() {
        let rows = vec![
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ];
        let g = cone_generators(3, &rows);
        assert!(g.lineality.is_empty());
        assert_eq!(g.rays.len(), 3);
        assert!(contains(&g.rays, &[1.0, 0.0, 0.0]));
        assert!(contains(&g.rays, &[0.0, 0.0, 1.0]));
    }

    #[test]
    fn halfspace_keeps_lineality() {
        let g = cone_generators(3, &[vec![1.0, 0.0, 0.0]]);
        assert_eq!(g.lineality.len(), 2);
        assert_eq!(g.rays.len(), 1);
        assert!(contains(&g.rays, &[-1.0, 0.0, 0.0]));
    }

    #[test]
    fn square_pyramid_has_four_rays() {
        // s3 >= |s1|, s3 >= |s2|
        let rows = vec![
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 0.0, -1.0],
            vec![0.0, 1.0, -1.0],
            vec![0.0, -1.0, -1.0],
        ];
        let g = cone_generators(3, &rows);
        assert!(g.lineality.is_empty());
        assert_eq!(g.rays.len(), 4);
        let s = 1.0 / 3f64.sqrt();
        for v in [[s, s, s], [-s, s, s], [s, -s, s], [-s, -s, s]] {
            assert!(contains(&g.rays, &v));
        }
    }

    #[test]
    fn opposite_constraints_leave_zero_cone() {
        let g = cone_generators(1, &[vec![1.0], vec![-1.0]]);
        assert!(g.rays.is_empty() && g.lineality.is_empty());
    }

    #[test]
    fn no_constraints_is_whole_space() {
        let g = cone_generators(2, &[]);
        assert_eq!(g.lineality.len(), 2);
        assert!(g.rays.is_empty());
    }
}
