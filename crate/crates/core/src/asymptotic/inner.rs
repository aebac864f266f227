//! Growth exponent of one accumulator's trapping set count.
//!
//! For normalized input fraction `alpha_i`, output fraction `alpha_o` and
//! unsatisfied fraction `beta`, the exponent is the maximum over the event
//! fractions `(mu, nu)` of a sum of five terms `t * H(s / t)` with `s`, `t`
//! affine in `(mu, nu)`. Each term is the perspective of the concave binary
//! entropy, so the objective is jointly concave on a convex polygon.

use crate::error::{Error, Result};

/// Slack for boundary tests on the `(mu, nu)` polygon.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccShapeArgs {
    pub alpha_i: f64,
    pub alpha_o: f64,
    pub beta: f64,
}

impl AccShapeArgs {
    pub fn new(alpha_i: f64, alpha_o: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha_i", alpha_i), ("alpha_o", alpha_o), ("beta", beta)] {
            if v.is_nan() || !(-FEASIBILITY_TOL..=1.0 + FEASIBILITY_TOL).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(AccShapeArgs {
            alpha_i: alpha_i.clamp(0.0, 1.0),
            alpha_o: alpha_o.clamp(0.0, 1.0),
            beta: beta.clamp(0.0, 1.0),
        })
    }

    /// Half the input plus unsatisfied fraction, `(alpha_i + beta) / 2`.
    fn half_sum(&self) -> f64 {
        0.5 * (self.alpha_i + self.beta)
    }

    /// `(alpha_i - beta) / 2`.
    fn half_diff(&self) -> f64 {
        0.5 * (self.alpha_i - self.beta)
    }
}

/// Maximizer of the objective for one [`AccShapeArgs`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerOptimum {
    pub mu: f64,
    pub nu: f64,
    pub value: f64,
}

/// Feasible `(mu, nu)`: `mu` in `[mu_lo, mu_hi]`, `nu >= nu_lo`, `mu + nu <= sum_hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polygon {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub nu_lo: f64,
    pub sum_hi: f64,
}

impl Polygon {
    pub fn of(args: &AccShapeArgs) -> Option<Polygon> {
        let a_o = args.alpha_o;
        let mu_lo = args.half_diff().abs();
        let nu_lo = (args.half_sum() - a_o).max(0.0);
        let sum_hi = (1.0 - a_o).min(args.half_sum());
        let mu_hi = a_o.min(1.0 - a_o).min(sum_hi - nu_lo);
        if mu_lo > mu_hi + FEASIBILITY_TOL {
            return None;
        }
        Some(Polygon {
            mu_lo,
            mu_hi: mu_hi.max(mu_lo),
            nu_lo,
            sum_hi,
        })
    }

    pub fn nu_hi(&self, mu: f64) -> f64 {
        (self.sum_hi - mu).max(self.nu_lo)
    }

    pub fn contains(&self, mu: f64, nu: f64) -> bool {
        let tol = FEASIBILITY_TOL;
        mu >= self.mu_lo - tol
            && mu <= self.mu_hi + tol
            && nu >= self.nu_lo - tol
            && mu + nu <= self.sum_hi + tol
    }

    /// Corners in counter-clockwise order; repeated corners when degenerate.
    pub fn vertices(&self) -> [(f64, f64); 4] {
        [
            (self.mu_lo, self.nu_lo),
            (self.mu_hi, self.nu_lo),
            (self.mu_hi, self.nu_hi(self.mu_hi)),
            (self.mu_lo, self.nu_hi(self.mu_lo)),
        ]
    }

    /// Euclidean projection onto the polygon.
    pub fn project(&self, mu: f64, nu: f64) -> (f64, f64) {
        if self.contains(mu, nu) {
            return (mu, nu);
        }
        let v = self.vertices();
        let mut best = v[0];
        let mut best_d = f64::INFINITY;
        for i in 0..4 {
            let (a, b) = (v[i], v[(i + 1) % 4]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 {
                (((mu - a.0) * dx + (nu - a.1) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let p = (a.0 + t * dx, a.1 + t * dy);
            let d = (p.0 - mu).powi(2) + (p.1 - nu).powi(2);
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
        best
    }
}

fn entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.ln() - (1.0 - p) * (-p).ln_1p()
    }
}

/// `t * H(s / t)`, zero for `t = s = 0`; `None` outside `0 <= s <= t`.
pub fn perspective_entropy(s: f64, t: f64) -> Option<f64> {
    let tol = FEASIBILITY_TOL;
    if t < -tol || s < -tol || s > t + tol {
        return None;
    }
    if t <= 0.0 {
        return Some(0.0);
    }
    Some(t * entropy((s / t).clamp(0.0, 1.0)))
}

/// The five-term objective at `(mu, nu)`; `None` when infeasible.
pub fn objective(args: &AccShapeArgs, mu: f64, nu: f64) -> Option<f64> {
    let a_o = args.alpha_o;
    let terms = [
        (mu, 1.0 - a_o),
        (mu, a_o),
        (args.half_sum() - nu - mu, a_o - mu),
        (nu, 1.0 - a_o - mu),
        (args.half_diff() + mu, 2.0 * mu),
    ];
    let mut total = 0.0;
    for (s, t) in terms {
        total += perspective_entropy(s, t)?;
    }
    Some(total)
}

/// The `nu` maximizing the objective at fixed `mu`.
///
/// Setting the `nu`-derivative to zero gives
/// `nu = (1 - alpha_o - mu) (c - mu) / (1 - 2 mu)` with `c = (alpha_i + beta) / 2`;
/// concavity in `nu` makes the clamp onto the feasible interval exact.
fn best_nu(args: &AccShapeArgs, poly: &Polygon, mu: f64) -> (f64, NuClamp) {
    let (lo, hi) = (poly.nu_lo, poly.nu_hi(mu));
    let den = 1.0 - 2.0 * mu;
    let stationary = if den > 0.0 {
        (1.0 - args.alpha_o - mu) * (args.half_sum() - mu) / den
    } else {
        lo
    };
    if stationary <= lo {
        (lo, NuClamp::Lower)
    } else if stationary >= hi {
        (hi, NuClamp::Upper)
    } else {
        (stationary, NuClamp::Interior)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NuClamp {
    Lower,
    Interior,
    Upper,
}

/// Whether `g(mu) = max_nu F(mu, nu)` is increasing at `mu`.
///
/// With `nu` interior or at its constant lower bound the derivative is
/// `ln[4 (c - nu - mu)(1 - alpha_o - mu - nu) / ((mu + d)(mu - d))]`,
/// `d = (alpha_i - beta) / 2`. On the upper bound `nu = sum_hi - mu` it is
/// `ln[4 (alpha_o - c + nu) nu / ((mu + d)(mu - d))]`.
fn increasing_at(args: &AccShapeArgs, poly: &Polygon, mu: f64) -> bool {
    let (nu, clamp) = best_nu(args, poly, mu);
    let d = args.half_diff();
    let den = ((mu + d) * (mu - d)).max(0.0);
    let num = match clamp {
        NuClamp::Lower | NuClamp::Interior => {
            4.0 * (args.half_sum() - nu - mu).max(0.0) * (1.0 - args.alpha_o - mu - nu).max(0.0)
        }
        NuClamp::Upper => 4.0 * (args.alpha_o - args.half_sum() + nu).max(0.0) * nu.max(0.0),
    };
    num > den
}

fn eval_at(args: &AccShapeArgs, poly: &Polygon, mu: f64) -> InnerOptimum {
    let (nu, _) = best_nu(args, poly, mu);
    let value = objective(args, mu, nu).unwrap_or(f64::NEG_INFINITY);
    InnerOptimum { mu, nu, value }
}

/// Exact maximizer: `nu` in closed form, `mu` by bisection on the sign of
/// the derivative of the concave profile `max_nu F(mu, nu)`.
pub fn f_acc(args: &AccShapeArgs) -> Option<InnerOptimum> {
    let poly = Polygon::of(args)?;
    Some(maximize_in(args, &poly))
}

fn maximize_in(args: &AccShapeArgs, poly: &Polygon) -> InnerOptimum {
    let (mut lo, mut hi) = (poly.mu_lo, poly.mu_hi);
    if hi - lo > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if increasing_at(args, poly, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let candidates = [
        eval_at(args, poly, poly.mu_lo),
        eval_at(args, poly, 0.5 * (lo + hi)),
        eval_at(args, poly, poly.mu_hi),
    ];
    candidates
        .into_iter()
        .fold(None::<InnerOptimum>, |best, c| match best {
            Some(b) if b.value >= c.value => Some(b),
            _ => Some(c),
        })
        .expect("three candidates")
}

/// Domain-checked [`f_acc`]; `Ok(None)` marks an empty feasible polygon.
pub fn f_acc_checked(alpha_i: f64, alpha_o: f64, beta: f64) -> Result<Option<InnerOptimum>> {
    Ok(f_acc(&AccShapeArgs::new(alpha_i, alpha_o, beta)?))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    [(x, fx), (x1, f1), (x2, f2)]
        .into_iter()
        .fold((x, fx), |best, c| if c.1 > best.1 { c } else { best })
}

fn safe_ln_ratio(num: f64, den: f64) -> f64 {
    let v = num.max(0.0).ln() - den.max(0.0).ln();
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-60.0, 60.0)
    }
}

fn gradient(args: &AccShapeArgs, mu: f64, nu: f64) -> (f64, f64) {
    let s3 = args.half_sum() - nu - mu;
    let slack4 = 1.0 - args.alpha_o - mu - nu;
    let d = args.half_diff();
    let d_mu = safe_ln_ratio(4.0 * s3 * slack4, (mu + d) * (mu - d));
    let d_nu = safe_ln_ratio(s3 * slack4, (args.alpha_o - args.half_sum() + nu) * nu);
    (d_mu, d_nu)
}

/// Projected gradient ascent from `start` with golden-section line search
/// along the projected path, accelerated by parallel-tangent steps.
///
/// An independent route to the optimum of [`f_acc`], started anywhere.
pub fn ascend_from(args: &AccShapeArgs, start: (f64, f64)) -> Option<InnerOptimum> {
    let poly = Polygon::of(args)?;
    let value = |p: (f64, f64)| objective(args, p.0, p.1).unwrap_or(f64::NEG_INFINITY);
    let v = poly.vertices();
    let diameter = v
        .iter()
        .flat_map(|a| {
            v.iter()
                .map(move |b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
        })
        .fold(0.0, f64::max);

    let mut x = poly.project(start.0, start.1);
    let mut fx = value(x);
    if diameter == 0.0 {
        return Some(InnerOptimum {
            mu: x.0,
            nu: x.1,
            value: fx,
        });
    }
    let line = |from: (f64, f64), dir: (f64, f64), reach: f64| {
        let path = |t: f64| poly.project(from.0 + t * dir.0, from.1 + t * dir.1);
        let (t, ft) = golden_section(0.0, reach, reach * 1e-14, |t| value(path(t)));
        (path(t), ft)
    };
    let mut history = vec![x];
    for iter in 0..20_000 {
        let (g_mu, g_nu) = gradient(args, x.0, x.1);
        let norm = (g_mu * g_mu + g_nu * g_nu).sqrt();
        let mut improved = false;
        if norm > 0.0 {
            let (y, fy) = line(x, (g_mu / norm, g_nu / norm), diameter);
            if fy > fx {
                improved = fy - fx > 1e-17;
                x = y;
                fx = fy;
            }
        }
        history.push(x);
        if iter % 2 == 1 && history.len() >= 3 {
            let back = history[history.len() - 3];
            let dir = (x.0 - back.0, x.1 - back.1);
            let len = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
            if len > 0.0 {
                let (y, fy) = line(x, (dir.0 / len, dir.1 / len), diameter);
                if fy > fx {
                    improved |= fy - fx > 1e-17;
                    x = y;
                    fx = fy;
                    history.push(x);
                }
            }
        }
        if !improved {
            // Coordinate probes catch stalls on an edge where the gradient points outward.
            let mut probed = false;
            for dir in [
                (1.0, 0.0),
                (-1.0, 0.0),
                (0.0, 1.0),
                (0.0, -1.0),
                (1.0, -1.0),
                (-1.0, 1.0),
            ] {
                let (y, fy) = line(x, dir, diameter);
                if fy > fx + 1e-17 {
                    x = y;
                    fx = fy;
                    probed = true;
                }
            }
            if !probed {
                break;
            }
        }
    }
    Some(InnerOptimum {
        mu: x.0,
        nu: x.1,
        value: fx,
    })
}

/// Best of [`ascend_from`] over a 5x5 grid of feasible starts.
pub fn f_acc_multistart(args: &AccShapeArgs) -> Option<InnerOptimum> {
    let poly = Polygon::of(args)?;
    let mut best: Option<InnerOptimum> = None;
    for i in 0..5 {
        let mu = poly.mu_lo + (poly.mu_hi - poly.mu_lo) * i as f64 / 4.0;
        for j in 0..5 {
            let nu = poly.nu_lo + (poly.nu_hi(mu) - poly.nu_lo) * j as f64 / 4.0;
            if let Some(c) = ascend_from(args, (mu, nu)) {
                if best.is_none_or(|b| c.value > b.value) {
                    best = Some(c);
                }
            }
        }
    }
    best
}
