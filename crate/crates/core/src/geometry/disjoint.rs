use super::linalg::{dist, linspace, sphere_directions, sub};
use super::lp::lp_solve_raw;
use super::{check_dim, BallRegion, BoxRegion, ConvexRegion, GeometryError, Halfspace};

/// Default sampling resolution for verdicts involving balls.
pub const BALL_RESOLUTION: usize = 64;

const WITNESS_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum DisjointMethod {
    /// One side is empty.
    Trivial,
    /// Exact decision (interval arithmetic, LP or closed form).
    Exact,
    /// Semi-decision by sampling at the recorded resolution.
    Sampled { resolution: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisjointVerdict {
    pub disjoint: bool,
    /// A point in both regions (at the tolerance) when not disjoint.
    pub witness: Option<Vec<f64>>,
    pub method: DisjointMethod,
}

impl DisjointVerdict {
    fn yes(method: DisjointMethod) -> Self {
        DisjointVerdict {
            disjoint: true,
            witness: None,
            method,
        }
    }
}

/// Decides whether two regions share a point at tolerance `tol` (a shared
/// point must pass both membership tests at `tol`).
pub fn regions_disjoint(
    a: &ConvexRegion,
    b: &ConvexRegion,
    tol: f64,
) -> Result<DisjointVerdict, GeometryError> {
    check_dim(a.dim(), b.dim())?;
    if a.is_empty() || b.is_empty() {
        return Ok(DisjointVerdict::yes(DisjointMethod::Trivial));
    }
    let verdict = match (a, b) {
        (ConvexRegion::Box(x), ConvexRegion::Box(y)) => boxes(x, y, tol),
        (ConvexRegion::Ball(x), ConvexRegion::Ball(y)) => balls(x, y, tol),
        (ConvexRegion::Ball(x), other) | (other, ConvexRegion::Ball(x)) => {
            ball_polytope(x, other, tol, BALL_RESOLUTION)
        }
        _ => polyhedral(a, b, tol)?,
    };
    // Witnesses are re-checked against strictness flags; the slightly larger
    // tolerance absorbs LP round-off on closed faces and demands a real
    // margin on strict ones.
    if let Some(w) = &verdict.witness {
        let t = tol + WITNESS_SLACK;
        if !(a.contains(w, t) && b.contains(w, t)) {
            return Ok(DisjointVerdict::yes(verdict.method));
        }
    }
    Ok(verdict)
}

fn boxes(x: &BoxRegion, y: &BoxRegion, tol: f64) -> DisjointVerdict {
    let mut w = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        // Effective bounds after applying the tolerance; `strict` marks an
        // open effective endpoint.
        let lower = |b: &BoxRegion| {
            if b.lo_open[i] {
                (b.lo[i] + tol, true)
            } else {
                (b.lo[i] - tol, false)
            }
        };
        let upper = |b: &BoxRegion| {
            if b.hi_open[i] {
                (b.hi[i] - tol, true)
            } else {
                (b.hi[i] + tol, false)
            }
        };
        let (l1, s1) = lower(x);
        let (l2, s2) = lower(y);
        let (u1, t1) = upper(x);
        let (u2, t2) = upper(y);
        let (l, ls) = if l1 > l2 {
            (l1, s1)
        } else if l2 > l1 {
            (l2, s2)
        } else {
            (l1, s1 || s2)
        };
        let (u, us) = if u1 < u2 {
            (u1, t1)
        } else if u2 < u1 {
            (u2, t2)
        } else {
            (u1, t1 || t2)
        };
        if l > u || (l == u && (ls || us)) {
            return DisjointVerdict::yes(DisjointMethod::Exact);
        }
        // Prefer a point away from tolerance-widened bounds.
        let lo = x.lo[i].max(y.lo[i]);
        let hi = x.hi[i].min(y.hi[i]);
        let c = if lo <= hi { 0.5 * (lo + hi) } else { 0.5 * (l + u) };
        w.push(c.clamp(l, u));
    }
    DisjointVerdict {
        disjoint: false,
        witness: Some(w),
        method: DisjointMethod::Exact,
    }
}

fn balls(x: &BallRegion, y: &BallRegion, tol: f64) -> DisjointVerdict {
    let eff = |b: &BallRegion| if b.open { b.radius - tol } else { b.radius + tol };
    let (r1, r2) = (eff(x), eff(y));
    let d = dist(&x.center, &y.center);
    let open = x.open || y.open;
    if r1 < 0.0 || r2 < 0.0 || (open && (r1 <= 0.0 || r2 <= 0.0)) {
        return DisjointVerdict::yes(DisjointMethod::Exact);
    }
    let meet = d < r1 + r2 || (d == r1 + r2 && !open);
    if !meet {
        return DisjointVerdict::yes(DisjointMethod::Exact);
    }
    // Point on the segment of centres inside both balls.
    let w = if d <= 1e-300 {
        x.center.clone()
    } else {
        let lo = (d - r2).max(0.0);
        let hi = r1.min(d);
        let s = 0.5 * (lo + hi) / d;
        x.center
            .iter()
            .zip(&y.center)
            .map(|(a, b)| a + s * (b - a))
            .collect()
    };
    DisjointVerdict {
        disjoint: false,
        witness: Some(w),
        method: DisjointMethod::Exact,
    }
}

fn ball_polytope(ball: &BallRegion, other: &ConvexRegion, tol: f64, resolution: usize) -> DisjointVerdict {
    let both = |p: &[f64]| {
        let d = dist(p, &ball.center);
        let in_ball = if ball.open {
            ball.radius - d > tol
        } else {
            ball.radius - d >= -tol
        };
        in_ball && other.contains(p, tol)
    };
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if let Ok(q) = other.project(&ball.center) {
        let q = q.into_vec();
        let dir = sub(&ball.center, &q);
        for s in linspace(0.0, 1.0, resolution + 1) {
            candidates.push(q.iter().zip(&dir).map(|(a, b)| a + s * b).collect());
        }
    }
    for d in sphere_directions(ball.center.len(), resolution) {
        for frac in [0.25, 0.5, 0.75, 0.99] {
            candidates.push(
                ball.center
                    .iter()
                    .zip(&d)
                    .map(|(c, v)| c + frac * ball.radius * v)
                    .collect(),
            );
        }
    }
    candidates.extend(other.sample_points(resolution.min(16)));
    let method = DisjointMethod::Sampled { resolution };
    match candidates.into_iter().find(|p| both(p)) {
        Some(w) => DisjointVerdict {
            disjoint: false,
            witness: Some(w),
            method,
        },
        None => DisjointVerdict::yes(method),
    }
}

/// LP over `(z, mu)`: closed faces `a.z <= b + tol`, strict faces
/// `a.z + mu <= b - tol`; a positive optimal margin `mu` gives a witness.
fn polyhedral(a: &ConvexRegion, b: &ConvexRegion, tol: f64) -> Result<DisjointVerdict, GeometryError> {
    let (Some(ba), Some(bb)) = (a.bounding_box(), b.bounding_box()) else {
        return Ok(DisjointVerdict::yes(DisjointMethod::Trivial));
    };
    let n = a.dim();
    let pad = tol + 1e-9;
    let mut lo = Vec::with_capacity(n + 1);
    let mut hi = Vec::with_capacity(n + 1);
    for i in 0..n {
        let l = ba.lo[i].max(bb.lo[i]) - pad;
        let h = ba.hi[i].min(bb.hi[i]) + pad;
        if l > h {
            return Ok(DisjointVerdict::yes(DisjointMethod::Exact));
        }
        lo.push(l);
        hi.push(h);
    }
    lo.push(0.0);
    hi.push(1.0);
    let mut cons = Vec::new();
    for h in a.halfspaces().into_iter().chain(b.halfspaces()) {
        let mut row = h.normal.clone();
        if h.strict {
            row.push(1.0);
            cons.push(Halfspace::closed(row, h.offset - tol));
        } else {
            row.push(0.0);
            cons.push(Halfspace::closed(row, h.offset + tol));
        }
    }
    let mut obj = vec![0.0; n + 1];
    obj[n] = -1.0;
    match lp_solve_raw(&obj, &cons, &BoxRegion::closed(lo, hi)) {
        Err(super::lp::LpFailure::Infeasible) => Ok(DisjointVerdict::yes(DisjointMethod::Exact)),
        Err(e) => Err(e.into()),
        Ok((v, z)) => {
            let has_strict = cons.iter().any(|h| h.normal[n] != 0.0);
            if has_strict && -v <= 2.0 * WITNESS_SLACK {
                return Ok(DisjointVerdict::yes(DisjointMethod::Exact));
            }
            Ok(DisjointVerdict {
                disjoint: false,
                witness: Some(z[..n].to_vec()),
                method: DisjointMethod::Exact,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> ConvexRegion {
        ConvexRegion::interval(lo, hi, lo_open, hi_open).unwrap()
    }

    #[test]
    fn interval_cases() {
        let unit = iv(0.0, 1.0, false, false);
        assert!(regions_disjoint(&ConvexRegion::empty(1), &unit, 0.0).unwrap().disjoint);
        let v = regions_disjoint(&iv(0.25, 1.0, true, false), &unit, 0.0).unwrap();
        assert!(!v.disjoint && v.witness.is_some());
        assert!(regions_disjoint(&iv(0.5, 0.75, false, false), &iv(0.8, 0.9, false, false), 0.0)
            .unwrap()
            .disjoint);
        // touching at an open end
        assert!(regions_disjoint(&iv(0.0, 0.5, false, true), &iv(0.5, 1.0, false, false), 0.0)
            .unwrap()
            .disjoint);
        assert!(!regions_disjoint(&iv(0.0, 0.5, false, false), &iv(0.5, 1.0, false, false), 0.0)
            .unwrap()
            .disjoint);
    }

    #[test]
    fn polytope_against_box() {
        let tri = ConvexRegion::v_polytope(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let far = ConvexRegion::closed_box(vec![0.6, 0.6], vec![1.0, 1.0]).unwrap();
        let near = ConvexRegion::closed_box(vec![0.4, 0.4], vec![1.0, 1.0]).unwrap();
        assert!(regions_disjoint(&tri, &far, 1e-9).unwrap().disjoint);
        assert!(!regions_disjoint(&tri, &near, 1e-9).unwrap().disjoint);
    }

    #[test]
    fn strict_polytope_face_touching() {
        let open_half = ConvexRegion::h_polytope(
            2,
            vec![Halfspace::strict(vec![1.0, 1.0], 1.0)],
            Some(&BoxRegion::unit(2)),
        )
        .unwrap();
        let corner = ConvexRegion::v_polytope(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(regions_disjoint(&open_half, &corner, 0.0).unwrap().disjoint);
    }

    #[test]
    fn balls_and_polytopes() {
        let b = ConvexRegion::ball(vec![0.0, 0.0], 1.0, false).unwrap();
        let c = ConvexRegion::ball(vec![2.0, 0.0], 1.0, true).unwrap();
        assert!(regions_disjoint(&b, &c, 0.0).unwrap().disjoint);
        let sq = ConvexRegion::closed_box(vec![0.5, 0.5], vec![2.0, 2.0]).unwrap();
        let v = regions_disjoint(&b, &sq, 0.0).unwrap();
        assert!(!v.disjoint);
        assert_eq!(v.method, DisjointMethod::Sampled { resolution: BALL_RESOLUTION });
    }
}
