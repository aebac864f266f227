//! Asymptotic spectral shape `r(alpha, beta)` of repeat multiple accumulate ensembles.
//!
//! `r` is the exponential growth rate in `N` of the ensemble-average count of
//! trapping sets with `alpha N` variable nodes and `beta N` unsatisfied checks.
//! It is the supremum, over the information fraction `omega`, the per-level
//! output fractions and the split of `beta` across levels, of
//!
//! ```text
//! H(omega)/q + sum_l f_acc(in_l, alpha_o_l, beta_l) - H(omega) - sum_{l<L} H(alpha_o_l)
//! ```
//!
//! subject to `alpha = omega/q + sum_l alpha_o_l` and `beta = sum_l beta_l`,
//! where `in_1 = omega` and `in_l = alpha_o_(l-1)`. The inner `f_acc` problems
//! are concave and solved exactly; the outer problem is searched on a
//! deterministic grid followed by Nelder-Mead refinement.

pub mod inner;
mod outer;

pub use inner::{
    ascend_from, f_acc, f_acc_checked, f_acc_multistart, golden_section, objective, AccShapeArgs,
    InnerOptimum, Polygon,
};
pub use outer::OuterSearch;

use rayon::prelude::*;

use crate::combinatorics::binary_entropy;
use crate::error::{Error, Result};

/// `H(omega) / q`.
pub fn f_rep(omega: f64, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::Range("repetition factor must be at least 1".into()));
    }
    Ok(binary_entropy(omega)? / q as f64)
}

/// How the unsatisfied fraction is spread over the accumulator levels.
#[derive(Clone, Debug, PartialEq)]
pub enum SplitPolicy {
    /// Optimized jointly with the other intermediate fractions.
    Free,
    /// `beta_l = fractions[l] * beta`.
    Fixed(Vec<f64>),
}

impl SplitPolicy {
    /// All unsatisfied checks in the outermost accumulator.
    pub fn outermost(levels: usize) -> Self {
        let mut f = vec![0.0; levels];
        f[0] = 1.0;
        SplitPolicy::Fixed(f)
    }

    pub fn equal(levels: usize) -> Self {
        SplitPolicy::Fixed(vec![1.0 / levels as f64; levels])
    }

    /// `"free"` or `"fixed:f_1,...,f_L"`.
    pub fn label(&self) -> String {
        match self {
            SplitPolicy::Free => "free".into(),
            SplitPolicy::Fixed(f) => {
                format!(
                    "fixed:{}",
                    f.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticQuery {
    pub q: usize,
    pub levels: usize,
    pub alpha: f64,
    pub beta: f64,
    pub split: SplitPolicy,
}

impl AsymptoticQuery {
    pub fn new(q: usize, levels: usize, alpha: f64, beta: f64, split: SplitPolicy) -> Result<Self> {
        let query = AsymptoticQuery {
            q,
            levels,
            alpha,
            beta,
            split,
        };
        query.validate()?;
        Ok(query)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.levels == 0 {
            return Err(Error::Range("q and L must be at least 1".into()));
        }
        if self.alpha.is_nan() || self.alpha < 0.0
            || self.beta.is_nan() || self.beta < 0.0
            || !self.alpha.is_finite()
            || !self.beta.is_finite()
        {
            return Err(Error::Domain(format!(
                "alpha = {} and beta = {} must be finite and nonnegative",
                self.alpha, self.beta
            )));
        }
        if let SplitPolicy::Fixed(f) = &self.split {
            if f.len() != self.levels {
                return Err(Error::Length(format!(
                    "split has {} fractions for {} levels",
                    f.len(),
                    self.levels
                )));
            }
            let sum: f64 = f.iter().sum();
            if f.iter().any(|x| x.is_nan() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "split fractions {f:?} must be nonnegative and sum to 1"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelWitness {
    pub alpha_o: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
}

/// `r(alpha, beta)` with the intermediate fractions that attain it.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticPoint {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub omega: f64,
    pub levels: Vec<LevelWitness>,
}

impl AsymptoticPoint {
    pub fn r_clamped(&self) -> f64 {
        self.r.max(0.0)
    }

    /// The objective re-evaluated at the witness; `None` if the witness is infeasible.
    pub fn reevaluate(&self, q: usize) -> Option<f64> {
        let h = |x: f64| binary_entropy(x).ok();
        let mut total = h(self.omega)? / q as f64 - h(self.omega)?;
        let mut input = self.omega;
        for (l, lvl) in self.levels.iter().enumerate() {
            let args = AccShapeArgs::new(input, lvl.alpha_o, lvl.beta).ok()?;
            total += objective(&args, lvl.mu, lvl.nu)?;
            if l + 1 < self.levels.len() {
                total -= h(lvl.alpha_o)?;
            }
            input = lvl.alpha_o;
        }
        Some(total)
    }

    /// Largest violation of the two sum constraints.
    pub fn constraint_residual(&self, q: usize) -> f64 {
        let a: f64 = self.omega / q as f64 + self.levels.iter().map(|l| l.alpha_o).sum::<f64>();
        let b: f64 = self.levels.iter().map(|l| l.beta).sum();
        (a - self.alpha).abs().max((b - self.beta).abs())
    }
}

/// `r(alpha, beta)` with the default outer search; `Ok(None)` when infeasible.
pub fn r_point(query: &AsymptoticQuery) -> Result<Option<AsymptoticPoint>> {
    r_point_with(query, &OuterSearch::default())
}

pub fn r_point_with(
    query: &AsymptoticQuery,
    search: &OuterSearch,
) -> Result<Option<AsymptoticPoint>> {
    query.validate()?;
    if query.alpha > 1.0 / query.q as f64 + query.levels as f64 || query.beta > query.levels as f64
    {
        return Ok(None);
    }
    Ok(outer::maximize(query, search))
}

/// A constant-ratio curve `beta = delta * alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub q: usize,
    pub levels: usize,
    pub split: SplitPolicy,
    pub delta: f64,
    pub alpha_grid: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 0.0 || !self.delta.is_finite() {
            return Err(Error::Domain(format!(
                "delta = {} must be nonnegative",
                self.delta
            )));
        }
        if self.alpha_grid.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::Domain("alpha grid must lie in (0, 1]".into()));
        }
        if self.alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "alpha grid must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// `count` evenly spaced points from `start` to `stop` inclusive.
    pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
        match count {
            0 => vec![],
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }
}

/// One row per grid point in grid order; `None` rows are infeasible.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<(f64, f64, Option<AsymptoticPoint>)>> {
    sweep_with(spec, &OuterSearch::default())
}

pub fn sweep_with(
    spec: &SweepSpec,
    search: &OuterSearch,
) -> Result<Vec<(f64, f64, Option<AsymptoticPoint>)>> {
    spec.validate()?;
    AsymptoticQuery::new(spec.q, spec.levels, 0.0, 0.0, spec.split.clone())?;
    spec.alpha_grid
        .par_iter()
        .map(|&alpha| {
            let beta = spec.delta * alpha;
            let query = AsymptoticQuery {
                q: spec.q,
                levels: spec.levels,
                alpha,
                beta,
                split: spec.split.clone(),
            };
            Ok((alpha, beta, r_point_with(&query, search)?))
        })
        .collect()
}
