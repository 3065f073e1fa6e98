//! Strict upper contour sets `{z in domain : g(z) > level}` of quasiconcave
//! functions. Intervals are exact up to a 1e-9 boundary grid; in higher
//! dimensions the set is fitted by a polytope from ray shooting.

use crate::geometry::linalg::{linspace, sphere_directions};
use crate::geometry::{BoxRegion, ConvexRegion, Halfspace};

const SCAN_POINTS: usize = 1025;
const BISECTIONS: usize = 64;
/// Interval endpoints are reported on this grid.
const SNAP: f64 = 1e9;
/// Declared Hausdorff fit tolerance for fitted polytopes.
pub const FIT_TOLERANCE: f64 = 1e-3;

/// `anchor` is a point on the level set (`g(anchor) = level`); a 1-D
/// endpoint within snapping distance of it is placed on it exactly.
pub(crate) fn strict_upper_set(g: &dyn Fn(&[f64]) -> f64, domain: &BoxRegion, level: f64, anchor: Option<&[f64]>) -> ConvexRegion {
    if domain.dim() == 1 {
        interval(&|z: f64| g(&[z]), domain.lo[0], domain.hi[0], level, anchor.map(|a| a[0]))
    } else {
        fitted(g, domain, level)
    }
}

fn snap(v: f64) -> f64 {
    (v * SNAP).round() / SNAP
}

fn interval(g: &dyn Fn(f64) -> f64, a: f64, b: f64, level: f64, anchor: Option<f64>) -> ConvexRegion {
    if a == b {
        return if g(a) > level {
            ConvexRegion::interval(a, a, false, false).unwrap()
        } else {
            ConvexRegion::empty(1)
        };
    }
    let grid = linspace(a, b, SCAN_POINTS);
    let vals: Vec<f64> = grid.iter().map(|&z| g(z)).collect();
    let kmax = (0..grid.len())
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(j.cmp(&i)))
        .unwrap();
    let mut zstar = grid[kmax];
    if vals[kmax] <= level {
        // The set may be narrower than the scan spacing.
        let lo = grid[kmax.saturating_sub(1)];
        let hi = grid[(kmax + 1).min(grid.len() - 1)];
        let z = golden_max(g, lo, hi);
        if g(z) <= level {
            return ConvexRegion::empty(1);
        }
        zstar = z;
    }

    let (lo, lo_closed) = if g(a) > level {
        (a, true)
    } else {
        let out = grid
            .iter()
            .zip(&vals)
            .filter(|(z, v)| **z < zstar && **v <= level)
            .map(|(z, _)| *z)
            .fold(a, f64::max);
        boundary(g, out, zstar, level, anchor)
    };
    let (hi, hi_closed) = if g(b) > level {
        (b, true)
    } else {
        let out = grid
            .iter()
            .zip(&vals)
            .filter(|(z, v)| **z > zstar && **v <= level)
            .map(|(z, _)| *z)
            .fold(b, f64::min);
        boundary(g, out, zstar, level, anchor)
    };
    ConvexRegion::interval(lo, hi, !lo_closed, !hi_closed).unwrap_or(ConvexRegion::empty(1))
}

/// Boundary between `outside` (g <= level) and `inside` (g > level),
/// snapped to the reporting grid; closed iff the snapped point is inside.
fn boundary(g: &dyn Fn(f64) -> f64, mut outside: f64, mut inside: f64, level: f64, anchor: Option<f64>) -> (f64, bool) {
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if g(mid) > level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    let s = snap(0.5 * (outside + inside));
    match anchor {
        Some(x) if (s - x).abs() <= 2.0 / SNAP => (x, false),
        _ => (s, g(s) > level),
    }
}

fn golden_max(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    for _ in 0..80 {
        if g(c) >= g(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - r * (hi - lo);
        d = lo + r * (hi - lo);
    }
    0.5 * (lo + hi)
}

/// Polytope fit: find a maximizer, shoot rays to the boundary, take the hull
/// of the inner boundary points and make every face strict except those
/// lying on the domain boundary.
fn fitted(g: &dyn Fn(&[f64]) -> f64, domain: &BoxRegion, level: f64) -> ConvexRegion {
    let dim = domain.dim();
    let per_axis = if dim == 2 { 33 } else { 9 };
    let (mut best, mut best_val) = (domain.center(), f64::NEG_INFINITY);
    for z in domain.grid(per_axis) {
        let v = g(&z);
        if v > best_val {
            best_val = v;
            best = z;
        }
    }
    // Pattern search refinement.
    let mut step = domain
        .lo
        .iter()
        .zip(&domain.hi)
        .map(|(l, h)| h - l)
        .fold(0.0, f64::max)
        / per_axis as f64;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..dim {
            for s in [-step, step] {
                let mut z = best.clone();
                z[i] = (z[i] + s).clamp(domain.lo[i], domain.hi[i]);
                let v = g(&z);
                if v > best_val {
                    best_val = v;
                    best = z;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if best_val <= level {
        return ConvexRegion::empty(dim);
    }

    let dirs = if dim == 2 {
        sphere_directions(2, 256)
    } else {
        sphere_directions(dim, 7)
    };
    let mut points = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let tmax = ray_exit(&best, d, domain);
        let at = |t: f64| -> Vec<f64> {
            best.iter()
                .zip(d)
                .map(|(b, v)| b + t * v)
                .zip(domain.lo.iter().zip(&domain.hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect()
        };
        if g(&at(tmax)) > level {
            points.push(at(tmax));
            continue;
        }
        let (mut inside, mut outside) = (0.0, tmax);
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (inside + outside);
            if g(&at(mid)) > level {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        points.push(at(inside));
    }
    let Ok(hull) = ConvexRegion::v_polytope(points) else {
        return ConvexRegion::empty(dim);
    };
    let hs: Vec<Halfspace> = hull
        .halfspaces()
        .into_iter()
        .map(|h| {
            let on_domain = (0..dim).any(|i| {
                let axis = h.normal[i].abs() > 1.0 - 1e-9;
                axis && ((h.normal[i] > 0.0 && (h.offset - domain.hi[i]).abs() < 1e-9)
                    || (h.normal[i] < 0.0 && (h.offset + domain.lo[i]).abs() < 1e-9))
            });
            Halfspace {
                strict: !on_domain,
                ..h
            }
        })
        .collect();
    ConvexRegion::h_polytope(dim, hs, Some(domain)).unwrap_or(ConvexRegion::empty(dim))
}

fn ray_exit(p: &[f64], d: &[f64], domain: &BoxRegion) -> f64 {
    let mut t = f64::INFINITY;
    for i in 0..p.len() {
        if d[i] > 1e-15 {
            t = t.min((domain.hi[i] - p[i]) / d[i]);
        } else if d[i] < -1e-15 {
            t = t.min((domain.lo[i] - p[i]) / d[i]);
        }
    }
    t.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_disk_is_close() {
        let g = |z: &[f64]| -((z[0] - 0.5).powi(2) + (z[1] - 0.5).powi(2));
        let r = strict_upper_set(&g, &BoxRegion::unit(2), -0.09, None);
        // true set: open disk of radius 0.3
        assert!(r.contains(&[0.5, 0.5], 0.0));
        assert!(r.contains(&[0.5 + 0.3 - FIT_TOLERANCE, 0.5], 0.0));
        assert!(!r.contains(&[0.8, 0.5], 0.0));
        assert!(!r.contains(&[0.75, 0.75], 0.0));
    }

    #[test]
    fn fitted_face_on_domain_is_closed() {
        let g = |z: &[f64]| z[0];
        let r = strict_upper_set(&g, &BoxRegion::unit(2), 0.6, None);
        assert!(r.contains(&[1.0, 0.5], 0.0));
        assert!(r.contains(&[1.0, 1.0], 0.0));
        assert!(!r.contains(&[0.6, 0.5], 0.0));
    }
}
