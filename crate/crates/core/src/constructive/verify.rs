use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::primitives::{
    build_identity, build_mult, build_relu, build_square, build_trunc, BoundedApproxNet,
};
use super::spline_net::{bspline_class_width, build_bspline_net};
use crate::error::{invalid, Error, Result};
use crate::oracle::{bspline_eval, KnotSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaName {
    Identity,
    Square,
    Mult,
    Relu,
    Trunc,
    Bspline1,
    Bspline2,
}

impl LemmaName {
    pub const ALL: [LemmaName; 7] = [
        Self::Identity,
        Self::Square,
        Self::Mult,
        Self::Relu,
        Self::Trunc,
        Self::Bspline1,
        Self::Bspline2,
    ];

    fn as_str(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Square => "square",
            Self::Mult => "mult",
            Self::Relu => "relu",
            Self::Trunc => "trunc",
            Self::Bspline1 => "bspline1",
            Self::Bspline2 => "bspline2",
        }
    }
}

impl fmt::Display for LemmaName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LemmaName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown lemma `{s}`")))
    }
}

/// Measured sup-error of a constructed network against its exact target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: LemmaName,
    pub r: f64,
    pub a: f64,
    pub grid_points: usize,
    pub measured: f64,
    pub theoretical_bound: f64,
    pub fp_slack: f64,
    pub hidden_layers: usize,
    pub width: usize,
    pub holds: bool,
}

fn axis(a: f64, points: usize) -> Vec<f64> {
    let m = points.max(2) - 1;
    (0..=m).map(|i| -a + 2.0 * a * i as f64 / m as f64).collect()
}

fn sup_1d(net: &BoundedApproxNet, xs: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
    xs.par_iter()
        .map(|&x| Ok((net.eval(&[x])? - f(x)).abs()))
        .try_reduce(|| 0.0, |p, q| Ok(p.max(q)))
}

fn sup_2d(net: &BoundedApproxNet, xs: &[f64], f: impl Fn(f64, f64) -> f64 + Sync) -> Result<f64> {
    xs.par_iter()
        .map(|&x| {
            xs.iter().try_fold(0.0f64, |m, &y| Ok(m.max((net.eval(&[x, y])? - f(x, y)).abs())))
        })
        .try_reduce(|| 0.0, |p, q| Ok(p.max(q)))
}

/// Builds the network for `lemma` at scale `r` on `[-a, a]` and measures its
/// error on a uniform grid with `points` nodes per axis. Spline cases use
/// cardinal knots with gap 1/4 on `[0, 1]` and include the knots in the grid.
pub fn verify_lemma(lemma: LemmaName, r: f64, a: f64, points: usize) -> Result<LemmaReport> {
    if points < 2 {
        return invalid("grid needs at least two points");
    }
    let xs = axis(a, points);
    let (net, measured) = match lemma {
        LemmaName::Identity => {
            let n = build_identity(r, a)?;
            let e = sup_1d(&n, &xs, |x| x)?;
            (n, e)
        }
        LemmaName::Square => {
            let n = build_square(r, a)?;
            let e = sup_1d(&n, &xs, |x| x * x)?;
            (n, e)
        }
        LemmaName::Relu => {
            let n = build_relu(r, a)?;
            let e = sup_1d(&n, &xs, |x| x.max(0.0))?;
            (n, e)
        }
        LemmaName::Mult => {
            let n = build_mult(r, a)?;
            let e = sup_2d(&n, &xs, |x, y| x * y)?;
            (n, e)
        }
        LemmaName::Trunc => {
            let n = build_trunc(&[1.0, -1.0], &[0.0, 0.0], r, a, 1.0)?;
            let e = sup_2d(&n, &xs, |x, y| (x - y).max(0.0))?;
            (n, e)
        }
        LemmaName::Bspline1 | LemmaName::Bspline2 => {
            let degree = if lemma == LemmaName::Bspline1 { 1 } else { 2 };
            let ks = KnotSequence::uniform(0.0, 0.25, 5, degree)?;
            let j = -(degree as isize);
            let n = build_bspline_net(j, degree, &ks, r, a, 4)?;
            debug_assert_eq!(n.net.width(), bspline_class_width(degree));
            let mut grid = xs.clone();
            grid.extend(ks.values().iter().copied().filter(|t| t.abs() <= a));
            let e = sup_1d(&n, &grid, |x| bspline_eval(&ks, j, degree, x).unwrap_or(f64::NAN))?;
            (n, e)
        }
    };
    let slack = net.fp_slack(1.0);
    Ok(LemmaReport {
        lemma,
        r,
        a,
        grid_points: points,
        measured,
        theoretical_bound: net.theoretical_bound,
        fp_slack: slack,
        hidden_layers: net.net.hidden_layers(),
        width: net.net.width(),
        holds: measured <= net.theoretical_bound + slack,
    })
}
