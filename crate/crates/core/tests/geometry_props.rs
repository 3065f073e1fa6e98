use genvi::geometry::linalg::{dist, dot, norm};
use genvi::geometry::{lp_solve, ConvexRegion, Halfspace};
use proptest::prelude::*;

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, dim)
}

/// Random full-dimensional V-polytope in 1..=4 dimensions.
fn polytope(max_dim: usize, max_pts: usize) -> impl Strategy<Value = ConvexRegion> {
    (1..=max_dim)
        .prop_flat_map(move |d| prop::collection::vec(point(d), d + 1..=max_pts.max(d + 1)))
        .prop_filter_map("degenerate", |pts| {
            let r = ConvexRegion::v_polytope(pts).ok()?;
            let v = r.closure_vertices();
            (v.len() > r.dim()).then_some(r)
        })
}

fn with_point(max_dim: usize) -> impl Strategy<Value = (ConvexRegion, Vec<f64>, Vec<f64>)> {
    polytope(max_dim, 8).prop_flat_map(|r| {
        let d = r.dim();
        (Just(r), point(d), point(d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normal_cone_generators_are_polar((r, x, _) in with_point(4), vertex in any::<prop::sample::Index>()) {
        // base at a vertex, and at an arbitrary point
        let verts = r.closure_vertices();
        for base in [verts[vertex.index(verts.len())].clone(), x] {
            let cone = r.normal_cone_at(&base).unwrap();
            for s in cone.generators() {
                let sup = r.support(s).unwrap() - dot(s, &base);
                prop_assert!(sup <= 1e-9 * norm(s).max(1.0), "support {sup} for {s:?}");
            }
        }
    }

    #[test]
    fn projection_is_nonexpansive((r, p, q) in with_point(4)) {
        let a = r.project(&p).unwrap();
        let b = r.project(&q).unwrap();
        prop_assert!(dist(a.coords(), b.coords()) <= dist(&p, &q) + 1e-9);
    }

    #[test]
    fn members_respect_support((r, d, _) in with_point(4)) {
        let sup = r.support(&d).unwrap();
        for p in r.sample_points(4) {
            prop_assert!(r.membership(&p, 0.0).unwrap());
            prop_assert!(dot(&d, &p) <= sup + 1e-9);
        }
    }

    #[test]
    fn lp_matches_vertex_enumeration(r in polytope(3, 12), c in point(3)) {
        let c = &c[..r.dim()];
        let verts = r.closure_vertices();
        prop_assume!(verts.len() <= 12);
        let brute = verts.iter().map(|v| dot(c, v)).fold(f64::INFINITY, f64::min);
        let cons: Vec<Halfspace> = r
            .halfspaces()
            .into_iter()
            .map(|h| Halfspace::closed(h.normal, h.offset))
            .collect();
        let bb = r.bounding_box().unwrap();
        let sol = lp_solve(c, &cons, &bb).unwrap();
        prop_assert!((sol.optimum - brute).abs() <= 1e-9, "lp {} brute {}", sol.optimum, brute);
    }
}

#[test]
fn ball_and_box_support() {
    let b = ConvexRegion::ball(vec![0.0, 0.0], 2.0, true).unwrap();
    assert!((b.support(&[3.0, 4.0]).unwrap() - 10.0).abs() < 1e-12);
    let k = ConvexRegion::closed_box(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
    assert_eq!(k.support(&[1.0, -1.0]).unwrap(), 2.0);
}
