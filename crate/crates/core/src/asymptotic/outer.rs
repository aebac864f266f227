use crate::asymptotic::inner::{f_acc, AccShapeArgs, InnerOptimum};
use crate::asymptotic::{AsymptoticPoint, AsymptoticQuery, LevelWitness, SplitPolicy};
use crate::combinatorics::binary_entropy;

/// Outer search protocol: a uniform grid over the unit box of
/// stick-breaking coordinates, then Nelder-Mead from the best grid points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterSearch {
    /// Grid points per free dimension before the budget cap.
    pub grid_points: usize,
    /// Cap on the total number of grid evaluations; high-dimensional
    /// searches use `floor(max_grid_evals^(1/d))` points per dimension.
    pub max_grid_evals: usize,
    /// Number of best grid points refined by Nelder-Mead.
    pub seeds: usize,
    pub max_iterations: usize,
}

impl Default for OuterSearch {
    fn default() -> Self {
        OuterSearch {
            grid_points: 33,
            max_grid_evals: 40_000,
            seeds: 8,
            max_iterations: 4_000,
        }
    }
}

impl OuterSearch {
    pub fn points_per_dim(&self, dims: usize) -> usize {
        let mut g = self.grid_points.max(3);
        while g > 3 && (g as f64).powi(dims as i32) > self.max_grid_evals as f64 {
            g -= 1;
        }
        g
    }
}

struct Layout<'a> {
    query: &'a AsymptoticQuery,
    split_dims: usize,
}

struct Evaluation {
    value: f64,
    omega: f64,
    alpha_o: Vec<f64>,
    beta: Vec<f64>,
    inner: Vec<InnerOptimum>,
}

impl<'a> Layout<'a> {
    fn new(query: &'a AsymptoticQuery) -> Self {
        let split_dims = match query.split {
            SplitPolicy::Free => query.levels - 1,
            SplitPolicy::Fixed(_) => 0,
        };
        Layout { query, split_dims }
    }

    fn dims(&self) -> usize {
        self.query.levels + self.split_dims
    }

    /// Box coordinates to `(omega, alpha_o, beta)` by stick breaking.
    ///
    /// Each coordinate is warped by `(1 - cos(pi s)) / 2`, which packs grid
    /// points near both ends of every stick; optima with a tiny information
    /// fraction or a tiny first-level share are common.
    fn decode(&self, s: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = s.iter().map(|&x| warp(x)).collect();
        let levels = self.query.levels;
        let q = self.query.q as f64;
        let mut rest = self.query.alpha;
        let info = rest * z[0];
        rest -= info;
        let mut alpha_o = Vec::with_capacity(levels);
        for &zl in &z[1..levels] {
            let a = rest * zl;
            rest -= a;
            alpha_o.push(a);
        }
        alpha_o.push(rest.max(0.0));
        let beta = match &self.query.split {
            SplitPolicy::Fixed(f) => f.iter().map(|x| x * self.query.beta).collect(),
            SplitPolicy::Free => {
                let mut rest = self.query.beta;
                let mut beta = Vec::with_capacity(levels);
                for &zl in &z[levels..] {
                    let b = rest * zl;
                    rest -= b;
                    beta.push(b);
                }
                beta.push(rest.max(0.0));
                beta
            }
        };
        (q * info, alpha_o, beta)
    }

    fn evaluate(&self, z: &[f64]) -> Option<Evaluation> {
        let (omega, alpha_o, beta) = self.decode(z);
        if omega > 1.0 || alpha_o.iter().chain(&beta).any(|&x| x > 1.0) {
            return None;
        }
        let q = self.query.q as f64;
        let h_omega = binary_entropy(omega).ok()?;
        let mut value = h_omega / q - h_omega;
        let mut input = omega;
        let mut inner = Vec::with_capacity(alpha_o.len());
        for (l, (&a_o, &b)) in alpha_o.iter().zip(&beta).enumerate() {
            let opt = f_acc(&AccShapeArgs {
                alpha_i: input,
                alpha_o: a_o,
                beta: b,
            })?;
            value += opt.value;
            if l + 1 < alpha_o.len() {
                value -= binary_entropy(a_o).ok()?;
            }
            inner.push(opt);
            input = a_o;
        }
        value.is_finite().then_some(Evaluation {
            value,
            omega,
            alpha_o,
            beta,
            inner,
        })
    }

    fn score(&self, z: &[f64]) -> f64 {
        self.evaluate(z).map_or(f64::NEG_INFINITY, |e| e.value)
    }
}

fn warp(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * s).cos())
    }
}

fn clamp_box(z: &mut [f64]) {
    for x in z {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Nelder-Mead maximization inside the unit box.
fn nelder_mead(
    layout: &Layout<'_>,
    start: &[f64],
    step: f64,
    max_iterations: usize,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), layout.score(start)));
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] = if p[i] + step <= 1.0 {
            p[i] + step
        } else {
            p[i] - step
        };
        clamp_box(&mut p);
        let s = layout.score(&p);
        simplex.push((p, s));
    }
    let by_value_desc = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| {
        b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal)
    };
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        let mut p: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect();
        clamp_box(&mut p);
        p
    };
    for _ in 0..max_iterations {
        simplex.sort_by(by_value_desc);
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if size < 1e-11
            || (best.is_finite() && worst.is_finite() && best - worst <= 1e-15 && size < 1e-8)
        {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (p, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / d as f64;
            }
        }
        let reflect = point(&centroid, &simplex[d].0, -1.0);
        let fr = layout.score(&reflect);
        if fr > simplex[0].1 {
            let expand = point(&centroid, &simplex[d].0, -2.0);
            let fe = layout.score(&expand);
            simplex[d] = if fe > fr { (expand, fe) } else { (reflect, fr) };
            continue;
        }
        if fr > simplex[d - 1].1 {
            simplex[d] = (reflect, fr);
            continue;
        }
        let (contract, fc) = if fr > simplex[d].1 {
            let c = point(&centroid, &reflect, 0.5);
            let f = layout.score(&c);
            (c, f)
        } else {
            let c = point(&centroid, &simplex[d].0, 0.5);
            let f = layout.score(&c);
            (c, f)
        };
        if fc > simplex[d].1.max(fr) || (fc >= simplex[d].1 && fc.is_finite()) {
            simplex[d] = (contract, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (p, f) in simplex.iter_mut().skip(1) {
            *p = point(&anchor, p, 0.5);
            *f = layout.score(p);
        }
    }
    simplex.sort_by(by_value_desc);
    simplex.swap_remove(0)
}

/// Grid search then local refinement; `None` when no grid point is feasible.
pub(super) fn maximize(query: &AsymptoticQuery, search: &OuterSearch) -> Option<AsymptoticPoint> {
    let layout = Layout::new(query);
    let d = layout.dims();
    let g = search.points_per_dim(d);
    let total = g.pow(d as u32);

    let mut seeds: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut z = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for zi in z.iter_mut() {
            *zi = (rest % g) as f64 / (g - 1) as f64;
            rest /= g;
        }
        let s = layout.score(&z);
        if !s.is_finite() {
            continue;
        }
        if seeds.len() < search.seeds || s > seeds.last().unwrap().1 {
            let pos = seeds
                .iter()
                .position(|(_, v)| s > *v)
                .unwrap_or(seeds.len());
            seeds.insert(pos, (z.clone(), s));
            seeds.truncate(search.seeds.max(1));
        }
    }
    if seeds.is_empty() {
        return None;
    }

    let step = 1.0 / (g - 1) as f64;
    let mut best = seeds[0].clone();
    for (start, value) in &seeds {
        let mut current = (start.clone(), *value);
        let mut s = step;
        // Restarts with a shrinking simplex guard against premature collapse.
        for _ in 0..4 {
            let refined = nelder_mead(&layout, &current.0, s, search.max_iterations);
            let gain = refined.1 - current.1;
            if refined.1 >= current.1 {
                current = refined;
            }
            if gain <= 1e-13 {
                break;
            }
            s *= 0.25;
        }
        if current.1 > best.1 {
            best = current;
        }
    }

    let eval = layout.evaluate(&best.0)?;
    let levels = eval
        .alpha_o
        .iter()
        .zip(&eval.beta)
        .zip(&eval.inner)
        .map(|((&alpha_o, &beta), opt)| LevelWitness {
            alpha_o,
            beta,
            mu: opt.mu,
            nu: opt.nu,
        })
        .collect();
    Some(AsymptoticPoint {
        alpha: query.alpha,
        beta: query.beta,
        r: eval.value,
        omega: eval.omega,
        levels,
    })
}
