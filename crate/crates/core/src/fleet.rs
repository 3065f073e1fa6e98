//! Seeded random instances satisfying the reformulation hypotheses by
//! construction: quasiconcave utilities with a flat top, so maximal points
//! and equilibria sit on every grid fine enough to resolve the plateau.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::games::{AffineForm, ConstraintMap, GameInstance, Player};
use crate::geometry::linalg::{cartesian, linspace};
use crate::geometry::{BoxRegion, ConvexRegion};
use crate::preferences::{Affine, LinearPiece, PieceValue, PiecewisePiece, PiecewiseTable, PreferenceMap};

/// Smallest plateau half-width in generated utilities.
pub const MIN_PLATEAU: f64 = 0.03;

/// Independent stream for `label` derived from a 64-bit seed.
pub fn stage_rng(seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

#[derive(Clone, Debug)]
pub struct SingleInstance {
    pub name: String,
    pub preference: PreferenceMap,
    pub feasible: ConvexRegion,
    /// Interior points for property sampling.
    pub samples: Vec<Vec<f64>>,
}

fn lattice(rng: &mut ChaCha8Rng, lo: f64, hi: f64, step: f64) -> f64 {
    let a = (lo / step).ceil() as i64;
    let b = (hi / step).floor() as i64;
    rng.gen_range(a..=b) as f64 * step
}

/// Sub-interval of `[0, 1]` with endpoints on the 1/20 lattice, width at
/// least 0.2.
fn random_interval(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = rng.gen_range(0..=16);
    let b = rng.gen_range(a + 4..=20);
    (a as f64 / 20.0, b as f64 / 20.0)
}

fn samples_1d() -> Vec<Vec<f64>> {
    linspace(0.05, 0.95, 10).into_iter().map(|v| vec![v]).collect()
}

fn samples_2d() -> Vec<Vec<f64>> {
    let axis = linspace(0.1, 0.9, 4);
    cartesian(&[axis.clone(), axis])
}

/// `min(s1 (z - c), -s2 (z - c), -r)`: peak at `c`, flat top of half-widths
/// `r/s1`, `r/s2`.
fn plateau_1d(rng: &mut ChaCha8Rng, i: usize) -> SingleInstance {
    let c = rng.gen_range(0.1..0.9);
    let s1 = rng.gen_range(0.5..3.0);
    let s2 = rng.gen_range(0.5..3.0);
    let h = rng.gen_range(MIN_PLATEAU..0.1);
    let r = h * f64::max(s1, s2);
    let pieces = vec![
        LinearPiece {
            own: vec![s1],
            rival: vec![],
            constant: -s1 * c,
        },
        LinearPiece {
            own: vec![-s2],
            rival: vec![],
            constant: s2 * c,
        },
        LinearPiece {
            own: vec![0.0],
            rival: vec![],
            constant: -r,
        },
    ];
    let (l, u) = random_interval(rng);
    SingleInstance {
        name: format!("plateau-1d-{i}"),
        preference: PreferenceMap::concave_piecewise_linear(pieces, BoxRegion::unit(1), 0, None)
            .expect("finite pieces"),
        feasible: ConvexRegion::closed_box(vec![l], vec![u]).expect("ordered"),
        samples: samples_1d(),
    }
}

/// Single-peaked table: `(x, 1]` below the peak, empty at it, `[c, x)`
/// above. The peak is a point of the 201-point grid of `K` or lies outside
/// `K`.
fn table_1d(rng: &mut ChaCha8Rng, i: usize) -> SingleInstance {
    let (l, u) = random_interval(rng);
    let grid = linspace(l, u, 201);
    let mut c = if rng.gen_bool(0.8) {
        grid[rng.gen_range(0..grid.len())]
    } else {
        lattice(rng, 0.05, 0.95, 0.05)
    };
    if (l..=u).contains(&c) {
        // nearest grid point of K
        c = *grid
            .iter()
            .min_by(|a, b| (*a - c).abs().total_cmp(&(*b - c).abs()))
            .expect("non-empty grid");
    }
    let pieces = vec![
        PiecewisePiece {
            from: 0.0,
            to: c,
            from_open: false,
            to_open: true,
            value: PieceValue::Interval {
                lo: Affine::identity(),
                hi: Affine::constant(1.0),
                lo_open: true,
                hi_open: false,
            },
        },
        PiecewisePiece {
            from: c,
            to: c,
            from_open: false,
            to_open: false,
            value: PieceValue::Empty,
        },
        PiecewisePiece {
            from: c,
            to: 1.0,
            from_open: true,
            to_open: false,
            value: PieceValue::Interval {
                lo: Affine::constant(c),
                hi: Affine::identity(),
                lo_open: false,
                hi_open: true,
            },
        },
    ];
    SingleInstance {
        name: format!("table-1d-{i}"),
        preference: PreferenceMap::piecewise(PiecewiseTable { pieces }, BoxRegion::unit(1)).expect("covering table"),
        feasible: ConvexRegion::closed_box(vec![l], vec![u]).expect("ordered"),
        samples: samples_1d(),
    }
}

/// `min(-abs(x1 - c), -r)` as an expression.
fn expr_1d(rng: &mut ChaCha8Rng, i: usize) -> SingleInstance {
    let c = lattice(rng, 0.1, 0.9, 0.01);
    let r = lattice(rng, MIN_PLATEAU, 0.1, 0.01);
    let text = format!("min(-abs(x1 - {c}), -{r})");
    let (l, u) = random_interval(rng);
    SingleInstance {
        name: format!("expr-1d-{i}"),
        preference: PreferenceMap::from_utility_expr(&text, BoxRegion::unit(1), 0, None).expect("valid expression"),
        feasible: ConvexRegion::closed_box(vec![l], vec![u]).expect("ordered"),
        samples: samples_1d(),
    }
}

/// Axis pieces `-w_i |z_i - c_i|`, a tilted piece that stays above the
/// cap on the flat top, and the cap `-r`. `K` is a lattice box containing
/// the flat top.
fn plateau_2d(rng: &mut ChaCha8Rng, i: usize) -> SingleInstance {
    let r = 0.1;
    let c = [rng.gen_range(0.25..0.75), rng.gen_range(0.25..0.75)];
    let w = [rng.gen_range(1.25..3.3), rng.gen_range(1.25..3.3)];
    let h = [r / w[0], r / w[1]];
    let mut pieces = Vec::new();
    for k in 0..2 {
        for sign in [1.0, -1.0] {
            let mut own = vec![0.0, 0.0];
            own[k] = sign * w[k];
            pieces.push(LinearPiece {
                own,
                rival: vec![],
                constant: -sign * w[k] * c[k],
            });
        }
    }
    let a: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let m = -r + a[0].abs() * h[0] + a[1].abs() * h[1] + 0.01;
    pieces.push(LinearPiece {
        own: a.to_vec(),
        rival: vec![],
        constant: m - a[0] * c[0] - a[1] * c[1],
    });
    pieces.push(LinearPiece {
        own: vec![0.0, 0.0],
        rival: vec![],
        constant: -r,
    });
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for k in 0..2 {
        let a = ((c[k] - h[k]) * 20.0).floor() as i64 - rng.gen_range(0..3);
        let b = ((c[k] + h[k]) * 20.0).ceil() as i64 + rng.gen_range(0..3);
        lo.push(a.max(0) as f64 / 20.0);
        hi.push(b.min(20) as f64 / 20.0);
    }
    SingleInstance {
        name: format!("plateau-2d-{i}"),
        preference: PreferenceMap::concave_piecewise_linear(pieces, BoxRegion::unit(2), 0, None)
            .expect("finite pieces"),
        feasible: ConvexRegion::closed_box(lo, hi).expect("ordered"),
        samples: samples_2d(),
    }
}

/// `count` single-agent instances cycling through the generator kinds.
pub fn single_agent_fleet(seed: u64, count: usize) -> Vec<SingleInstance> {
    let mut rng = stage_rng(seed, "fleet/single");
    (0..count)
        .map(|i| match i % 4 {
            0 => plateau_1d(&mut rng, i),
            1 => table_1d(&mut rng, i),
            2 => expr_1d(&mut rng, i),
            _ => plateau_2d(&mut rng, i),
        })
        .collect()
}

/// Two players on `[0, 1]` with `u_ν = min(-|z - (a y + b)|, -r)` and
/// affine bounds `l ∈ [0, 0.2]`, `u ∈ [0.8, 1]` in the rival's strategy.
pub fn game_fleet(seed: u64, count: usize) -> Vec<(String, GameInstance)> {
    let mut rng = stage_rng(seed, "fleet/games");
    let u = BoxRegion::unit(1);
    (0..count)
        .map(|i| {
            let players = (0..2)
                .map(|nu| {
                    let a: f64 = rng.gen_range(-0.25..0.25);
                    let b = rng.gen_range(0.25 + a.abs()..0.75 - a.abs());
                    let r = rng.gen_range(MIN_PLATEAU..0.08);
                    let pieces = vec![
                        LinearPiece {
                            own: vec![-1.0],
                            rival: vec![a],
                            constant: b,
                        },
                        LinearPiece {
                            own: vec![1.0],
                            rival: vec![-a],
                            constant: -b,
                        },
                        LinearPiece {
                            own: vec![0.0],
                            rival: vec![0.0],
                            constant: -r,
                        },
                    ];
                    let mut lc = vec![0.0, 0.0];
                    let mut hc = vec![0.0, 0.0];
                    lc[1 - nu] = rng.gen_range(0.0..0.1);
                    hc[1 - nu] = rng.gen_range(0.0..0.1);
                    Player {
                        name: format!("player-{}", nu + 1),
                        strategy: u.clone(),
                        constraint: ConstraintMap::AffineBox {
                            lo: vec![AffineForm {
                                coeffs: lc,
                                constant: rng.gen_range(0.0..0.1),
                            }],
                            hi: vec![AffineForm {
                                coeffs: hc,
                                constant: rng.gen_range(0.8..0.9),
                            }],
                        },
                        preference: PreferenceMap::concave_piecewise_linear(pieces, u.clone(), nu, Some(u.clone()))
                            .expect("finite pieces"),
                    }
                })
                .collect();
            (format!("game-{i}"), GameInstance::new(players).expect("consistent layout"))
        })
        .collect()
}
