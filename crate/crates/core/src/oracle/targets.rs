use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::polytope::Polytope;
use crate::error::{invalid, Error, Result};

/// Lower clamp for the cotangent argument in `m2`; the upper one is `π − COT_EPS`.
pub const COT_EPS: f64 = 1e-8;

/// Transition width used for every facet of the `fig2` pieces.
pub const FIG2_DELTA: f64 = 0.1;

type PieceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One polytope piece `(P_k, f_k)`; `coords` lists the coordinates `f_k` reads.
#[derive(Clone)]
pub struct Piece {
    pub polytope: Polytope<f64>,
    pub coords: Vec<usize>,
    f: PieceFn,
}

impl Piece {
    pub fn new(
        polytope: Polytope<f64>,
        coords: Vec<usize>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { polytope, coords, f: Arc::new(f) }
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Piece")
            .field("polytope", &self.polytope)
            .field("coords", &self.coords)
            .finish_non_exhaustive()
    }
}

/// `Σ_k f_k(x) · Π_i h_{k,i}(x)`: each piece is blended in by the product
/// of its facet ramps.
#[derive(Debug, Clone)]
pub struct LocalDimTarget {
    pub dim: usize,
    pub pieces: Vec<Piece>,
}

impl LocalDimTarget {
    pub fn new(dim: usize, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return invalid("local-dimensionality target needs at least one piece");
        }
        for p in &pieces {
            for h in &p.polytope.halfspaces {
                if h.a.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: h.a.len() });
                }
            }
        }
        Ok(Self { dim, pieces })
    }

    /// Largest number of coordinates any piece depends on.
    pub fn local_dim(&self) -> usize {
        self.pieces.iter().map(|p| p.coords.len()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces.iter().map(|p| p.f(x) * p.polytope.squeeze(x)).sum()
    }

    /// Pointwise bounds the blend must respect. Positive parts are counted
    /// on the outer sets for the upper bound and the inner sets for the
    /// lower bound; negative parts the other way round.
    pub fn squeeze_bounds(&self, x: &[f64]) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for p in &self.pieces {
            let v = p.f(x);
            let inner = if p.polytope.contains_inner(x) { 1.0 } else { 0.0 };
            let outer = if p.polytope.contains_outer(x) { 1.0 } else { 0.0 };
            let (pos, neg) = (v.max(0.0), (-v).max(0.0));
            lo += pos * inner - neg * outer;
            hi += pos * outer - neg * inner;
        }
        (lo, hi)
    }

    /// First piece whose closed outer set contains `x`.
    pub fn piece_of(&self, x: &[f64]) -> Option<usize> {
        self.pieces.iter().position(|p| p.polytope.contains_outer(x))
    }
}

/// The built-in regression functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetName {
    M1,
    M2,
    M3,
    Fig2,
}

impl FromStr for TargetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(Self::M1),
            "m2" => Ok(Self::M2),
            "m3" => Ok(Self::M3),
            "fig2" => Ok(Self::Fig2),
            other => invalid(format!("unknown target `{other}`")),
        }
    }
}

impl fmt::Display for TargetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::M1 => "m1",
            Self::M2 => "m2",
            Self::M3 => "m3",
            Self::Fig2 => "fig2",
        };
        f.write_str(s)
    }
}

const W_H1: [f64; 10] = [0.1, 0.4, 0.3, 0.1, 0.2, 0.3, 0.6, 0.02, 0.7, 0.6];

fn in_h1(x: &[f64]) -> bool {
    dot(&W_H1, x) <= 1.63
}

fn in_h2(x: &[f64]) -> bool {
    dot(&W_H1, x) <= 1.6
}

fn in_h3(x: &[f64]) -> bool {
    4.0 * x[0] + 2.0 * x[1] + x[2] + 4.0 * x[3] + x[4] + x[5] <= 7.5
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// A regression function together with its sampling domain and the sets
/// used for per-piece noise calibration.
#[derive(Debug)]
pub struct Target {
    name: TargetName,
    local: Option<LocalDimTarget>,
    clamps: AtomicU64,
}

impl Clone for Target {
    fn clone(&self) -> Self {
        Self {
            name: self.name,
            local: self.local.clone(),
            clamps: AtomicU64::new(self.clamp_events()),
        }
    }
}

impl Target {
    pub fn new(name: TargetName) -> Self {
        let local = (name == TargetName::Fig2).then(fig2);
        Self { name, local, clamps: AtomicU64::new(0) }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    pub fn name(&self) -> TargetName {
        self.name
    }

    pub fn dim(&self) -> usize {
        match self.name {
            TargetName::Fig2 => 2,
            _ => 10,
        }
    }

    /// Per-coordinate sampling interval.
    pub fn domain(&self) -> (f64, f64) {
        match self.name {
            TargetName::Fig2 => (-2.0, 2.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn local(&self) -> Option<&LocalDimTarget> {
        self.local.as_ref()
    }

    /// Number of times the `m2` cotangent argument has been clamped.
    pub fn clamp_events(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        match self.name {
            TargetName::M1 => Ok(m1(x)),
            TargetName::M2 => self.m2(x),
            TargetName::M3 => self.m3(x),
            TargetName::Fig2 => Ok(self.local.as_ref().expect("fig2 pieces").eval(x)),
        }
    }

    pub fn num_pieces(&self) -> usize {
        match self.name {
            TargetName::M1 | TargetName::M2 => 2,
            TargetName::M3 => 3,
            TargetName::Fig2 => 4,
        }
    }

    /// Whether `x` belongs to calibration piece `k`. For `m1`/`m2` the pieces
    /// are `H1` and its complement; for `m3` they are `H2 ∪ H3`, `H2ᶜ ∪ H3`
    /// and `H3ᶜ`, which overlap; for `fig2` a point belongs to the first
    /// piece whose outer set contains it.
    pub fn in_piece(&self, k: usize, x: &[f64]) -> bool {
        match self.name {
            TargetName::M1 | TargetName::M2 => match k {
                0 => in_h1(x),
                1 => !in_h1(x),
                _ => false,
            },
            TargetName::M3 => match k {
                0 => in_h2(x) || in_h3(x),
                1 => !in_h2(x) || in_h3(x),
                2 => !in_h3(x),
                _ => false,
            },
            TargetName::Fig2 => self.local.as_ref().and_then(|l| l.piece_of(x)) == Some(k),
        }
    }

    fn m2(&self, x: &[f64]) -> Result<f64> {
        let z = x[0] * x[0] + 2.0 * x[1] + (6.0 * x[3].powi(3)).sin() - 3.0;
        let mut inner = PI / (1.0 + z.exp());
        if !(COT_EPS..=PI - COT_EPS).contains(&inner) {
            inner = inner.clamp(COT_EPS, PI - COT_EPS);
            self.clamps.fetch_add(1, Ordering::Relaxed);
        }
        let cot = 1.0 / inner.tan();
        if in_h1(x) {
            return Ok(cot);
        }
        let arg = x[2] + 0.9 * x[3] + 0.1;
        if arg < 0.0 {
            return Err(Error::OutOfDomain {
                target: "m2".into(),
                reason: format!("square-root argument {arg} is negative"),
            });
        }
        Ok(cot + (3.0 * x[2] + 2.0 * x[3] - 5.0 * x[0] + arg.sqrt()).exp())
    }

    fn m3(&self, x: &[f64]) -> Result<f64> {
        let (h2, h3) = (in_h2(x), in_h3(x));
        let mut v = 0.0;
        if h2 || h3 {
            let arg = x[0] * x[1] + 4.0 * x[2] + x[3].tan().abs();
            if !(arg > 0.0) {
                return Err(Error::OutOfDomain {
                    target: "m3".into(),
                    reason: format!("logarithm argument {arg} is not positive"),
                });
            }
            v += 2.0 * arg.ln();
        }
        if !h2 || h3 {
            v += x[2].powi(4) * x[4] * x[4] * x[5] - x[3] * x[6];
        }
        if !h3 {
            v += (3.0 * x[7] * x[7] + x[8] + 2.0).powf(0.1 + 4.0 * x[9] * x[9]);
        }
        Ok(v)
    }
}

fn m1(x: &[f64]) -> f64 {
    if in_h1(x) {
        10.0 / (1.0 + x[0] * x[0]) + 5.0 * (x[2] * x[3]).sin() + 2.0 * x[4]
    } else {
        x[0].exp() + x[1] * x[1] + (x[2] * x[3]).sin() - 3.0
    }
}

/// Four quadrant pieces of `[-2,2]²`, each depending on one coordinate.
fn fig2() -> LocalDimTarget {
    let quad = |lo: [f64; 2], hi: [f64; 2]| {
        Polytope::axis_box(&lo, &hi, FIG2_DELTA).expect("valid quadrant")
    };
    let pieces = vec![
        Piece::new(quad([-2.0, -2.0], [0.0, 0.0]), vec![0], |x| (4.0 * x[0]).sin()),
        Piece::new(quad([-2.0, 0.0], [0.0, 2.0]), vec![1], |x| x[1].exp()),
        Piece::new(quad([0.0, 0.0], [2.0, 2.0]), vec![1], |x| (4.0 * x[1]).cos()),
        Piece::new(quad([0.0, -2.0], [2.0, 0.0]), vec![0], |x| x[0].exp()),
    ];
    LocalDimTarget::new(2, pieces).expect("fig2 pieces")
}

/// Evaluates the named target.
pub fn target_eval(name: &str, x: &[f64]) -> Result<f64> {
    Target::by_name(name)?.eval(x)
}
