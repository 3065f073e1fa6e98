//! Instance files: TOML with a version tag, one table per player and
//! optional solver, classify, verify and expectation sections.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use genvi::games::{AffineForm, ConstraintMap, GameInstance, Player};
use genvi::geometry::{BoxRegion, ConvexRegion};
use genvi::preferences::{fixture, LinearPiece, PiecewisePiece, PiecewiseTable, PreferenceMap, SourceKind, FIXTURES};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub name: String,
    pub players: Vec<PlayerSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<ExpectSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    pub name: String,
    /// Strategy box.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Defaults to the strategy box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSpec>,
    pub preference: PreferenceSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `[lo_k(x), hi_k(x)]` per own coordinate with affine bounds over the
    /// full profile, clipped to the strategy box.
    AffineBox { lo: Vec<AffineForm>, hi: Vec<AffineForm> },
    Polytope { vertices: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PreferenceSpec {
    Fixture { name: String },
    Table { pieces: Vec<PiecewisePiece> },
    /// Strict upper contour sets of an expression over the profile
    /// `x1, x2, ...`.
    Utility { expr: String },
    ConcavePl { pieces: Vec<LinearPiece> },
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Fixed-point starts when the profile has more than three coordinates.
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_grid() -> usize {
    201
}
fn default_tol() -> f64 {
    genvi::vi::DEFAULT_TOL
}
fn default_max_iters() -> usize {
    10_000
}
fn default_step() -> f64 {
    0.1
}
fn default_starts() -> usize {
    8
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            grid: default_grid(),
            tol: default_tol(),
            seed: 0,
            max_iters: default_max_iters(),
            step: default_step(),
            starts: default_starts(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {
    /// Profile grid per axis; ignored when `points` is given.
    #[serde(default = "default_points_per_axis")]
    pub points_per_axis: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    /// Extra uniformly drawn profiles from the seed.
    #[serde(default)]
    pub random: usize,
    #[serde(default = "default_t_steps")]
    pub t_steps: usize,
    #[serde(default = "default_radius_min")]
    pub radius_min: f64,
}

fn default_points_per_axis() -> usize {
    11
}
fn default_t_steps() -> usize {
    64
}
fn default_radius_min() -> f64 {
    1e-4
}

impl Default for ClassifySpec {
    fn default() -> Self {
        ClassifySpec {
            points_per_axis: default_points_per_axis(),
            points: None,
            random: 0,
            t_steps: default_t_steps(),
            radius_min: default_radius_min(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub point: Vec<f64>,
}

/// Expected verdicts per command; each present field becomes one check in
/// that command's report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExpectSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifyExpect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_vi: Option<SolveExpect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_qvi: Option<SolveExpect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyExpect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditExpect>,
}

/// Verdicts holding at every sampled profile.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyExpect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_midpoint: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_midpoint: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midpoint: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irreflexive: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveExpect {
    /// Verified solution points in grid order, compared coordinate-wise
    /// within `solution_tol`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solutions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_tol: Option<f64>,
    /// At least one verified solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonempty: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyExpect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditExpect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
}

/// Parsed and built instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub file: InstanceFile,
    pub sha256: String,
    pub game: GameInstance,
}

impl Instance {
    /// The single decision maker's map and constant feasible set, when the
    /// instance has exactly one player with a constant constraint.
    pub fn single(&self) -> Option<(&PreferenceMap, &ConvexRegion)> {
        match self.game.players() {
            [p] => match &p.constraint {
                ConstraintMap::Constant(k) => Some((&p.preference, k)),
                ConstraintMap::AffineBox { .. } => None,
            },
            _ => None,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses, validates and builds an instance from TOML text. `origin`
/// names the source in error messages.
pub fn load_str(text: &str, origin: &str) -> Result<Instance, CliError> {
    let raw: toml::Table = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    check_finite(&toml::Value::Table(raw), "")?;
    let file: InstanceFile = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let game = build(&file)?;
    Ok(Instance {
        file,
        sha256: sha256_hex(text.as_bytes()),
        game,
    })
}

pub fn load(path: &std::path::Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_str(&text, &path.display().to_string())
}

fn check_finite(v: &toml::Value, path: &str) -> Result<(), CliError> {
    match v {
        toml::Value::Float(f) if !f.is_finite() => Err(CliError::invalid(path, format!("{f} is not finite"))),
        toml::Value::Array(a) => a
            .iter()
            .enumerate()
            .try_for_each(|(i, x)| check_finite(x, &format!("{path}[{i}]"))),
        toml::Value::Table(t) => t.iter().try_for_each(|(k, x)| {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            check_finite(x, &p)
        }),
        _ => Ok(()),
    }
}

pub fn build(file: &InstanceFile) -> Result<GameInstance, CliError> {
    if file.version != FORMAT_VERSION {
        return Err(CliError::invalid(
            "version",
            format!("unsupported version {}, expected {FORMAT_VERSION}", file.version),
        ));
    }
    if file.players.is_empty() {
        return Err(CliError::invalid("players", "at least one player is required"));
    }
    validate_sections(file)?;
    let boxes: Vec<BoxRegion> = file
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| strategy_box(i, p))
        .collect::<Result<_, _>>()?;
    let total: usize = boxes.iter().map(BoxRegion::dim).sum();
    let multi = boxes.len() > 1;
    let mut offset = 0;
    let mut players = Vec::with_capacity(boxes.len());
    for (i, spec) in file.players.iter().enumerate() {
        let own = &boxes[i];
        let rival = multi.then(|| rival_box(&boxes, i));
        let field = format!("players[{i}]");
        let preference = build_preference(&spec.preference, own, offset, rival, &field)?;
        let constraint = build_constraint(spec.constraint.as_ref(), own, total, &field)?;
        players.push(Player {
            name: spec.name.clone(),
            strategy: own.clone(),
            constraint,
            preference,
        });
        offset += own.dim();
    }
    GameInstance::new(players).map_err(|e| CliError::invalid("players", e.to_string()))
}

fn validate_sections(file: &InstanceFile) -> Result<(), CliError> {
    let s = &file.solver;
    if s.grid < 2 {
        return Err(CliError::invalid("solver.grid", "needs at least 2 points per axis"));
    }
    if s.tol < 0.0 {
        return Err(CliError::invalid("solver.tol", "must be non-negative"));
    }
    if s.step <= 0.0 {
        return Err(CliError::invalid("solver.step", "must be positive"));
    }
    if let Some(c) = &file.classify {
        if c.points_per_axis < 1 || c.t_steps < 1 {
            return Err(CliError::invalid("classify", "grid sizes must be positive"));
        }
        if c.radius_min <= 0.0 {
            return Err(CliError::invalid("classify.radius_min", "must be positive"));
        }
    }
    Ok(())
}

fn strategy_box(i: usize, p: &PlayerSpec) -> Result<BoxRegion, CliError> {
    let field = format!("players[{i}]");
    if p.lo.is_empty() || p.lo.len() != p.hi.len() {
        return Err(CliError::invalid(format!("{field}.lo"), "lo and hi must be non-empty and of equal length"));
    }
    if p.lo.iter().zip(&p.hi).any(|(a, b)| a > b) {
        return Err(CliError::invalid(format!("{field}.lo"), "lo must not exceed hi"));
    }
    Ok(BoxRegion::closed(p.lo.clone(), p.hi.clone()))
}

fn rival_box(boxes: &[BoxRegion], skip: usize) -> BoxRegion {
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for (j, b) in boxes.iter().enumerate() {
        if j != skip {
            lo.extend_from_slice(&b.lo);
            hi.extend_from_slice(&b.hi);
        }
    }
    BoxRegion::closed(lo, hi)
}

fn build_preference(
    spec: &PreferenceSpec,
    own: &BoxRegion,
    offset: usize,
    rival: Option<BoxRegion>,
    field: &str,
) -> Result<PreferenceMap, CliError> {
    let field = format!("{field}.preference");
    let err = |e: genvi::preferences::PreferenceError| CliError::invalid(&field, e.to_string());
    Ok(match spec {
        PreferenceSpec::Fixture { name } => {
            if *own != BoxRegion::unit(1) {
                return Err(CliError::invalid(&field, format!("fixture `{name}` lives on [0, 1]")));
            }
            let p = fixture(name).map_err(|_| {
                CliError::invalid(format!("{field}.name"), format!("unknown fixture `{name}`, expected one of {FIXTURES:?}"))
            })?;
            p.embedded(offset, rival)
        }
        PreferenceSpec::Table { pieces } => PreferenceMap::piecewise(
            PiecewiseTable {
                pieces: pieces.clone(),
            },
            own.clone(),
        )
        .map_err(err)?
        .embedded(offset, rival),
        PreferenceSpec::Utility { expr } => {
            PreferenceMap::from_utility_expr(expr, own.clone(), offset, rival).map_err(err)?
        }
        PreferenceSpec::ConcavePl { pieces } => {
            PreferenceMap::concave_piecewise_linear(pieces.clone(), own.clone(), offset, rival).map_err(err)?
        }
        PreferenceSpec::Empty => PreferenceMap::empty_in_game(own.clone(), offset, rival),
    })
}

fn build_constraint(
    spec: Option<&ConstraintSpec>,
    own: &BoxRegion,
    total: usize,
    field: &str,
) -> Result<ConstraintMap, CliError> {
    let field = format!("{field}.constraint");
    let geo = |e: genvi::geometry::GeometryError| CliError::invalid(&field, e.to_string());
    Ok(match spec {
        None => ConstraintMap::Constant(ConvexRegion::from_box(own.clone())),
        Some(ConstraintSpec::Box { lo, hi }) => {
            if lo.len() != own.dim() || hi.len() != own.dim() {
                return Err(CliError::invalid(&field, "box has the wrong dimension"));
            }
            ConstraintMap::Constant(ConvexRegion::closed_box(lo.clone(), hi.clone()).map_err(geo)?)
        }
        Some(ConstraintSpec::Polytope { vertices }) => {
            if vertices.iter().any(|v| v.len() != own.dim()) {
                return Err(CliError::invalid(&field, "vertex has the wrong dimension"));
            }
            ConstraintMap::Constant(ConvexRegion::v_polytope(vertices.clone()).map_err(geo)?)
        }
        Some(ConstraintSpec::AffineBox { lo, hi }) => {
            let pad = |forms: &[AffineForm]| -> Result<Vec<AffineForm>, CliError> {
                forms
                    .iter()
                    .map(|f| match f.coeffs.len() {
                        0 => Ok(AffineForm::constant(f.constant, total)),
                        n if n == total => Ok(f.clone()),
                        n => Err(CliError::invalid(
                            &field,
                            format!("affine form has {n} coefficients, the profile has {total}"),
                        )),
                    })
                    .collect()
            };
            if lo.len() != own.dim() || hi.len() != own.dim() {
                return Err(CliError::invalid(&field, "one lo and one hi form per own coordinate"));
            }
            ConstraintMap::AffineBox {
                lo: pad(lo)?,
                hi: pad(hi)?,
            }
        }
    })
}

/// Single-player instance on `[0, 1]` reproducing a built-in fixture as an
/// explicit table.
pub fn export_fixture(name: &str) -> Result<InstanceFile, CliError> {
    let p = fixture(name)
        .map_err(|_| CliError::Usage(format!("unknown fixture `{name}`, expected one of {FIXTURES:?}")))?;
    let SourceKind::Piecewise(table) = p.source_kind() else {
        return Err(CliError::Usage(format!("fixture `{name}` is not a table")));
    };
    Ok(InstanceFile {
        version: FORMAT_VERSION,
        name: name.to_string(),
        players: vec![PlayerSpec {
            name: "decision-maker".into(),
            lo: vec![0.0],
            hi: vec![1.0],
            constraint: Some(ConstraintSpec::Box {
                lo: vec![0.0],
                hi: vec![1.0],
            }),
            preference: PreferenceSpec::Table { pieces: table.pieces },
        }],
        solver: SolverSpec::default(),
        classify: None,
        verify: None,
        expect: None,
    })
}

pub fn to_toml(file: &InstanceFile) -> Result<String, CliError> {
    toml::to_string(file).map_err(|e| CliError::Compute(format!("cannot serialize instance: {e}")))
}
