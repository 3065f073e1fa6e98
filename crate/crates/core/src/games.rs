//! Generalized games `(X_ν, K_ν, P_ν)`: constraint maps, equilibrium and
//! maximality checks, and brute-force grid oracles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::linalg::{cartesian, linspace};
use crate::geometry::{regions_disjoint, BoxRegion, ConvexRegion, GeometryError};
use crate::preferences::{PreferenceError, PreferenceMap};

/// Numeric slack for intersection witnesses in maximality and equilibrium
/// checks. Disjointness is decided exactly up to this slack; the caller's
/// `tol` only relaxes feasibility.
pub const DISJOINT_SLACK: f64 = 1e-9;
/// Largest total dimension accepted by the grid oracles.
pub const MAX_BRUTE_DIM: usize = 3;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error("point {point:?} is not feasible")]
    Infeasible { point: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("player {player}: {message}")]
    InvalidPlayer { player: usize, message: String },
    #[error("total dimension {0} exceeds the grid oracle limit")]
    DimensionTooLarge(usize),
    #[error("grid needs at least {min} points per axis, got {got}")]
    GridTooCoarse { min: usize, got: usize },
    #[error("player {0} has no utility")]
    NoUtility(usize),
}

/// `c . x + constant` over the full profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl AffineForm {
    pub fn constant(c: f64, dim: usize) -> Self {
        AffineForm {
            coeffs: vec![0.0; dim],
            constant: c,
        }
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }
}

/// `K_ν : C => C_ν`.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintMap {
    Constant(ConvexRegion),
    /// `[l(x), u(x)]` per own coordinate, clipped to the strategy box.
    AffineBox { lo: Vec<AffineForm>, hi: Vec<AffineForm> },
}

impl ConstraintMap {
    pub fn eval(&self, x: &[f64], strategy: &BoxRegion) -> ConvexRegion {
        match self {
            ConstraintMap::Constant(r) => r.clone(),
            ConstraintMap::AffineBox { lo, hi } => {
                let l: Vec<f64> = lo
                    .iter()
                    .zip(&strategy.lo)
                    .map(|(f, c)| f.at(x).max(*c))
                    .collect();
                let u: Vec<f64> = hi
                    .iter()
                    .zip(&strategy.hi)
                    .map(|(f, c)| f.at(x).min(*c))
                    .collect();
                if l.iter().zip(&u).any(|(a, b)| a > b) {
                    ConvexRegion::empty(l.len())
                } else {
                    ConvexRegion::from_box(BoxRegion::closed(l, u))
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Player {
    pub name: String,
    pub strategy: BoxRegion,
    pub constraint: ConstraintMap,
    pub preference: PreferenceMap,
}

/// Players in profile order; player ν owns the coordinates
/// `offset(ν) .. offset(ν) + dim(ν)`.
#[derive(Clone, Debug)]
pub struct GameInstance {
    players: Vec<Player>,
    offsets: Vec<usize>,
    total: usize,
}

impl GameInstance {
    pub fn new(players: Vec<Player>) -> Result<Self, GameError> {
        let mut offsets = Vec::with_capacity(players.len());
        let mut total = 0;
        for p in &players {
            offsets.push(total);
            total += p.strategy.dim();
        }
        for (i, p) in players.iter().enumerate() {
            let bad = |message: String| GameError::InvalidPlayer { player: i, message };
            let pref = &p.preference;
            if pref.own_dim() != p.strategy.dim() {
                return Err(bad(format!(
                    "preference has own dimension {}, strategy box {}",
                    pref.own_dim(),
                    p.strategy.dim()
                )));
            }
            if players.len() > 1 && pref.rival_dim() != total - p.strategy.dim() {
                return Err(bad(format!(
                    "preference has rival dimension {}, expected {}",
                    pref.rival_dim(),
                    total - p.strategy.dim()
                )));
            }
            if pref.rival_dim() > 0 && pref.own_offset() != offsets[i] {
                return Err(bad(format!(
                    "preference own offset {} differs from {}",
                    pref.own_offset(),
                    offsets[i]
                )));
            }
            if !p.strategy.is_closed() || p.strategy.has_no_points() {
                return Err(bad("strategy box must be closed and non-empty".into()));
            }
            if let ConstraintMap::AffineBox { lo, hi } = &p.constraint {
                let ok = lo.len() == p.strategy.dim()
                    && hi.len() == p.strategy.dim()
                    && lo.iter().chain(hi).all(|f| f.coeffs.len() == total || f.coeffs.is_empty());
                if !ok {
                    return Err(bad("affine box coefficients have the wrong shape".into()));
                }
            }
            if let ConstraintMap::Constant(r) = &p.constraint {
                if r.dim() != p.strategy.dim() {
                    return Err(bad("constant constraint has the wrong dimension".into()));
                }
            }
        }
        Ok(GameInstance {
            players,
            offsets,
            total,
        })
    }

    /// Single decision maker with constant feasible set `K`.
    pub fn single(preference: PreferenceMap, k: ConvexRegion) -> Result<Self, GameError> {
        let strategy = preference.domain().clone();
        GameInstance::new(vec![Player {
            name: "player-1".into(),
            strategy,
            constraint: ConstraintMap::Constant(k),
            preference,
        }])
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn offset(&self, player: usize) -> usize {
        self.offsets[player]
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    /// Product of the strategy boxes.
    pub fn profile_box(&self) -> BoxRegion {
        let mut lo = Vec::with_capacity(self.total);
        let mut hi = Vec::with_capacity(self.total);
        for p in &self.players {
            lo.extend_from_slice(&p.strategy.lo);
            hi.extend_from_slice(&p.strategy.hi);
        }
        BoxRegion::closed(lo, hi)
    }

    /// `(x_ν, x_{-ν})`.
    pub fn split(&self, player: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let off = self.offsets[player];
        let d = self.players[player].strategy.dim();
        let own = x[off..off + d].to_vec();
        let mut rival = x[..off].to_vec();
        rival.extend_from_slice(&x[off + d..]);
        (own, rival)
    }

    pub fn constraint_value(&self, player: usize, x: &[f64]) -> ConvexRegion {
        let p = &self.players[player];
        p.constraint.eval(x, &p.strategy)
    }

    /// `P_ν(x)`.
    pub fn preference_value(&self, player: usize, x: &[f64]) -> Result<ConvexRegion, GameError> {
        let (own, rival) = self.split(player, x);
        let p = &self.players[player].preference;
        let y = (p.rival_dim() > 0).then_some(rival.as_slice());
        Ok(p.eval(&own, y)?)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GameError> {
        if x.len() != self.total {
            return Err(GameError::DimensionMismatch {
                expected: self.total,
                found: x.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalityReport {
    pub point: Vec<f64>,
    pub maximal: bool,
    /// A point of `P(x̄) ∩ K` when not maximal.
    pub witness: Option<Vec<f64>>,
    pub tol: f64,
}

/// `x̄ ∈ K` (within `tol`) is maximal iff `P(x̄) ∩ K = ∅`.
pub fn is_maximal(p: &PreferenceMap, k: &ConvexRegion, x: &[f64], tol: f64) -> Result<MaximalityReport, GameError> {
    if !k.membership(x, tol)? {
        return Err(GameError::Infeasible { point: x.to_vec() });
    }
    let value = p.eval(x, None)?;
    let v = regions_disjoint(&value, k, DISJOINT_SLACK)?;
    Ok(MaximalityReport {
        point: x.to_vec(),
        maximal: v.disjoint,
        witness: v.witness,
        tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub point: Vec<f64>,
    pub feasible_per_player: Vec<bool>,
    pub disjoint_per_player: Vec<bool>,
    /// Points of `P_ν(x̄) ∩ K_ν(x̄)` for players that are not satisfied.
    pub witnesses: Vec<Option<Vec<f64>>>,
    pub verdict: bool,
    pub tol: f64,
    pub disjoint_slack: f64,
}

/// Per-player feasibility `x̄_ν ∈ K_ν(x̄)` (within `tol`) and
/// `P_ν(x̄) ∩ K_ν(x̄) = ∅`.
pub fn is_equilibrium(g: &GameInstance, x: &[f64], tol: f64) -> Result<EquilibriumReport, GameError> {
    g.check_dim(x)?;
    let n = g.players.len();
    let mut rep = EquilibriumReport {
        point: x.to_vec(),
        feasible_per_player: Vec::with_capacity(n),
        disjoint_per_player: Vec::with_capacity(n),
        witnesses: Vec::with_capacity(n),
        verdict: true,
        tol,
        disjoint_slack: DISJOINT_SLACK,
    };
    for i in 0..n {
        let (own, _) = g.split(i, x);
        let k = g.constraint_value(i, x);
        let feasible = k.contains(&own, tol);
        let value = g.preference_value(i, x)?;
        let v = regions_disjoint(&value, &k, DISJOINT_SLACK)?;
        rep.feasible_per_player.push(feasible);
        rep.disjoint_per_player.push(v.disjoint);
        rep.witnesses.push(v.witness);
        rep.verdict &= feasible && v.disjoint;
    }
    Ok(rep)
}

/// Grid profiles over the product of strategy boxes, lexicographic order.
pub fn profile_grid(g: &GameInstance, per_axis: usize) -> Vec<Vec<f64>> {
    let b = g.profile_box();
    let axes: Vec<Vec<f64>> = (0..b.dim()).map(|i| linspace(b.lo[i], b.hi[i], per_axis)).collect();
    cartesian(&axes)
}

/// Largest grid spacing over the axes.
pub fn grid_spacing(b: &BoxRegion, per_axis: usize) -> f64 {
    (0..b.dim())
        .map(|i| (b.hi[i] - b.lo[i]) / (per_axis.max(2) - 1) as f64)
        .fold(0.0, f64::max)
}

/// All grid profiles passing [`is_equilibrium`] at `1.5 x` grid spacing.
pub fn brute_force_equilibria(g: &GameInstance, grid: usize) -> Result<Vec<Vec<f64>>, GameError> {
    if g.dim() > MAX_BRUTE_DIM {
        return Err(GameError::DimensionTooLarge(g.dim()));
    }
    if grid < 11 {
        return Err(GameError::GridTooCoarse { min: 11, got: grid });
    }
    let tol = 1.5 * grid_spacing(&g.profile_box(), grid);
    let pts = profile_grid(g, grid);
    let verdicts: Vec<Result<bool, GameError>> = pts
        .par_iter()
        .map(|x| is_equilibrium(g, x, tol).map(|r| r.verdict))
        .collect();
    let mut out = Vec::new();
    for (x, v) in pts.into_iter().zip(verdicts) {
        if v? {
            out.push(x);
        }
    }
    Ok(out)
}

/// For utility-backed players: `u_ν(x̄) >= max_z u_ν(z, x̄_{-ν}) - tol` over
/// grid points `z` of `K_ν(x̄)`, together with feasibility.
pub fn gnep_best_response_check(g: &GameInstance, x: &[f64], grid: usize, tol: f64) -> Result<bool, GameError> {
    g.check_dim(x)?;
    for (i, p) in g.players.iter().enumerate() {
        if !p.preference.has_utility() {
            return Err(GameError::NoUtility(i));
        }
    }
    for (i, p) in g.players.iter().enumerate() {
        let (own, rival) = g.split(i, x);
        let k = g.constraint_value(i, x);
        if !k.contains(&own, tol) {
            return Ok(false);
        }
        let u = |z: &[f64]| p.preference.utility_at(z, &rival).unwrap();
        let here = u(&own);
        let Some(bb) = k.bounding_box() else { return Ok(false) };
        for z in bb.grid(grid) {
            if k.contains(&z, 0.0) && u(&z) > here + tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::preferences::fixture;

    pub(crate) fn quadratic_game() -> GameInstance {
        let unit = BoxRegion::unit(1);
        let mk = |expr: &str, off: usize| {
            PreferenceMap::from_utility_expr(expr, unit.clone(), off, Some(unit.clone())).unwrap()
        };
        GameInstance::new(vec![
            Player {
                name: "a".into(),
                strategy: unit.clone(),
                constraint: ConstraintMap::Constant(ConvexRegion::from_box(unit.clone())),
                preference: mk("-(x1 - x2)^2", 0),
            },
            Player {
                name: "b".into(),
                strategy: unit.clone(),
                constraint: ConstraintMap::Constant(ConvexRegion::from_box(unit.clone())),
                preference: mk("-(x2 - x1)^2", 1),
            },
        ])
        .unwrap()
    }

    #[test]
    fn maximality_examples() {
        let p = fixture("example-3.1").unwrap();
        let k = ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap();
        assert!(is_maximal(&p, &k, &[0.5], 1e-9).unwrap().maximal);
        let r = is_maximal(&p, &k, &[0.25], 1e-9).unwrap();
        assert!(!r.maximal);
        let w = r.witness.unwrap();
        assert!(w[0] > 0.25 && w[0] <= 1.0);
        let e = PreferenceMap::empty(BoxRegion::unit(1));
        assert!(is_maximal(&e, &k, &[0.3], 1e-9).unwrap().maximal);
        assert!(is_maximal(&e, &k, &[1.3], 1e-9).is_err());
    }

    #[test]
    fn quadratic_game_equilibria() {
        let g = quadratic_game();
        assert!(is_equilibrium(&g, &[0.5, 0.5], 1e-9).unwrap().verdict);
        let r = is_equilibrium(&g, &[0.0, 1.0], 1e-9).unwrap();
        assert!(!r.verdict && !r.disjoint_per_player[0]);
        assert!(gnep_best_response_check(&g, &[0.5, 0.5], 101, 1e-9).unwrap());
        assert!(!gnep_best_response_check(&g, &[0.0, 1.0], 101, 1e-9).unwrap());
    }

    #[test]
    fn brute_force_examples() {
        let p = fixture("example-3.1").unwrap();
        let g = GameInstance::single(p, ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap()).unwrap();
        assert_eq!(brute_force_equilibria(&g, 11).unwrap(), vec![vec![0.5]]);
        let e = GameInstance::single(
            PreferenceMap::empty(BoxRegion::unit(1)),
            ConvexRegion::closed_box(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(brute_force_equilibria(&e, 11).unwrap().len(), 11);
        assert!(brute_force_equilibria(&e, 5).is_err());
    }

    #[test]
    fn affine_box_clips_to_strategy() {
        let k = ConstraintMap::AffineBox {
            lo: vec![AffineForm {
                coeffs: vec![0.0, 0.5],
                constant: 0.0,
            }],
            hi: vec![AffineForm::constant(2.0, 2)],
        };
        let r = k.eval(&[0.3, 0.8], &BoxRegion::unit(1));
        assert_eq!(r, ConvexRegion::closed_box(vec![0.4], vec![1.0]).unwrap());
    }
}
