//! Boundary-coupling search. The objective everywhere is the cheap estimate
//! α_N(t)² from the Heisenberg engine; the exact oracle only enters through
//! [`cross_validate`].

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{boundary_profile, build_generator, CouplingProfile};
use crate::error::{invalid, Result};
use crate::heisenberg::{Origin, Propagator};
use crate::protocol::{average_fidelity, FidelityEstimate, InputSampling};

pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_RESOLUTION: usize = 256;
pub const MIN_RESOLUTION: usize = 8;
const MAX_REFINE_ITERATIONS: usize = 500;
const MEDIUMS_PER_INPUT: usize = 4;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Closed interval `[lo, hi]`; `lo == hi` is a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(invalid(format!("invalid {name} range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    fn grid(&self, resolution: usize) -> Vec<f64> {
        if self.lo == self.hi {
            return vec![self.lo];
        }
        let last = (resolution - 1) as f64;
        (0..resolution)
            .map(|k| if k == resolution - 1 { self.hi } else { self.lo + (self.hi - self.lo) * k as f64 / last })
            .collect()
    }
}

/// Default box: η ∈ [0.3, 1.5] and t ∈ [0.5, 4.0] at n = 5, with the time
/// axis stretched linearly in n.
pub fn default_box(n: usize) -> (Range, Range) {
    let s = n as f64 / 5.0;
    (Range::new(0.3, 1.5), Range::new(0.5 * s, 4.0 * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub eta: f64,
    pub t: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineStep {
    pub iteration: usize,
    pub eta: f64,
    pub t: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub start: Point,
    pub best: Point,
    pub trace: Vec<RefineStep>,
    pub converged: bool,
    /// False when no step beat the start value.
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub eta_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `estimate_surface[i][j]` is the estimate at `(eta_grid[i], t_grid[j])`.
    pub estimate_surface: Vec<Vec<f64>>,
    pub best_point: Point,
    pub refinement_trace: Vec<RefineStep>,
}

impl SweepResult {
    /// `eta,t,estimate`, one row per grid point, η outer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eta,t,estimate\n");
        for (eta, row) in self.eta_grid.iter().zip(&self.estimate_surface) {
            for (t, f) in self.t_grid.iter().zip(row) {
                out.push_str(&format!("{eta:.16e},{t:.16e},{f:.16e}\n"));
            }
        }
        out
    }

    pub fn best_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.best_point)?)
    }
}

fn objective(n: usize, eta: f64, t: f64) -> f64 {
    match boundary_profile(n, eta) {
        Ok(p) => far_end_estimate(&Propagator::new(&build_generator(&p)), t),
        Err(_) => 0.0,
    }
}

fn far_end_estimate(prop: &Propagator, t: f64) -> f64 {
    let a = prop.first_site(t).far_end();
    (a * a).clamp(0.0, 1.0)
}

/// Larger estimate wins; exact ties go to smaller t, then smaller η.
fn better(a: &Point, b: &Point) -> bool {
    if a.estimate != b.estimate {
        return a.estimate > b.estimate;
    }
    if a.t != b.t {
        return a.t < b.t;
    }
    a.eta < b.eta
}

/// Grid evaluation of α_N² over the boundary family. `resolution` points per
/// non-degenerate axis.
pub fn sweep(n: usize, eta_range: Range, t_range: Range, resolution: usize) -> Result<SweepResult> {
    sweep_from(n, eta_range, t_range, resolution, Origin::FirstSite)
}

/// [`sweep`] with the propagation direction chosen explicitly; `LastSite`
/// uses β_N(t)², the X̂_N → site 1 coefficient.
pub fn sweep_from(
    n: usize,
    eta_range: Range,
    t_range: Range,
    resolution: usize,
    origin: Origin,
) -> Result<SweepResult> {
    eta_range.validate("eta")?;
    t_range.validate("t")?;
    if resolution < MIN_RESOLUTION {
        return Err(invalid(format!("resolution must be ≥ {MIN_RESOLUTION}, got {resolution}")));
    }
    if eta_range.lo <= 0.0 {
        return Err(invalid("eta range must be strictly positive"));
    }
    boundary_profile(n, eta_range.lo)?;
    let eta_grid = eta_range.grid(resolution);
    let t_grid = t_range.grid(resolution);
    let estimate_surface: Vec<Vec<f64>> = eta_grid
        .par_iter()
        .map(|&eta| -> Result<Vec<f64>> {
            let p = boundary_profile(n, eta)?;
            let gen = match origin {
                Origin::FirstSite => build_generator(&p),
                Origin::LastSite => build_generator(&p).reversed(),
            };
            let prop = Propagator::new(&gen);
            Ok(t_grid.iter().map(|&t| far_end_estimate(&prop, t)).collect())
        })
        .collect::<Result<_>>()?;
    let mut best = Point { eta: eta_grid[0], t: t_grid[0], estimate: estimate_surface[0][0] };
    for (i, row) in estimate_surface.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            let cand = Point { eta: eta_grid[i], t: t_grid[j], estimate: f };
            if better(&cand, &best) {
                best = cand;
            }
        }
    }
    Ok(SweepResult { n, eta_grid, t_grid, estimate_surface, best_point: best, refinement_trace: Vec::new() })
}

/// Golden-section maximisation of `f` on `[a, b]` down to width `tol`.
/// Returns the best of the final midpoint and the two interior probes.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Coordinate-wise golden-section ascent of an arbitrary objective inside
/// `bounds`. Each sweep searches η then t over ±`step` around the current
/// point; a move is accepted only if it does not lower the value.
pub fn refine_with<F: Fn(f64, f64) -> f64>(
    f: F,
    start: (f64, f64),
    bounds: (Range, Range),
    step: (f64, f64),
    tolerance: f64,
) -> Result<Refinement> {
    let (eb, tb) = bounds;
    eb.validate("eta")?;
    tb.validate("t")?;
    if !(tolerance > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tolerance}")));
    }
    if !eb.contains(start.0) || !tb.contains(start.1) {
        return Err(invalid(format!(
            "start ({}, {}) outside the search box [{}, {}] x [{}, {}]",
            start.0, start.1, eb.lo, eb.hi, tb.lo, tb.hi
        )));
    }
    let (mut eta, mut t) = start;
    let mut value = f(eta, t);
    let start_point = Point { eta, t, estimate: value };
    let mut trace = vec![RefineStep { iteration: 0, eta, t, estimate: value }];
    let inner = tolerance * 0.1;
    let mut converged = false;
    for iteration in 1..=MAX_REFINE_ITERATIONS {
        let (eta0, t0) = (eta, t);
        let lo = (eta - step.0).max(eb.lo);
        let hi = (eta + step.0).min(eb.hi);
        if hi > lo {
            let (x, fx) = golden_max(|x| f(x, t), lo, hi, inner);
            if fx >= value {
                eta = x;
                value = fx;
            }
        }
        let lo = (t - step.1).max(tb.lo);
        let hi = (t + step.1).min(tb.hi);
        if hi > lo {
            let (x, fx) = golden_max(|x| f(eta, x), lo, hi, inner);
            if fx >= value {
                t = x;
                value = fx;
            }
        }
        trace.push(RefineStep { iteration, eta, t, estimate: value });
        if (eta - eta0).abs() < tolerance && (t - t0).abs() < tolerance {
            converged = true;
            break;
        }
    }
    let improved = value > start_point.estimate;
    let best = if improved { Point { eta, t, estimate: value } } else { start_point };
    Ok(Refinement { start: start_point, best, trace, converged, improved })
}

/// Local refinement of α_N² over the boundary family from `start = (η, t)`.
/// The initial bracket is `step` per coordinate.
pub fn refine(
    n: usize,
    start: (f64, f64),
    tolerance: f64,
    bounds: (Range, Range),
    step: (f64, f64),
) -> Result<Refinement> {
    boundary_profile(n, start.0.max(f64::MIN_POSITIVE))?;
    if bounds.0.lo <= 0.0 {
        return Err(invalid("eta bounds must be strictly positive"));
    }
    refine_with(|eta, t| objective(n, eta, t), start, bounds, step, tolerance)
}

/// Grid search over t at fixed couplings followed by golden-section
/// refinement inside the winning cell. Returns (t*, α_N(t*)²).
pub fn refine_time(profile: &CouplingProfile, t_range: Range, resolution: usize, tolerance: f64) -> Result<(f64, f64)> {
    t_range.validate("t")?;
    if resolution < MIN_RESOLUTION {
        return Err(invalid(format!("resolution must be ≥ {MIN_RESOLUTION}, got {resolution}")));
    }
    let prop = Propagator::new(&build_generator(profile));
    let grid = t_range.grid(resolution);
    let (mut bi, mut bf) = (0, far_end_estimate(&prop, grid[0]));
    for (i, &t) in grid.iter().enumerate().skip(1) {
        let f = far_end_estimate(&prop, t);
        if f > bf {
            bi = i;
            bf = f;
        }
    }
    if grid.len() == 1 {
        return Ok((grid[0], bf));
    }
    let lo = grid[bi.saturating_sub(1)];
    let hi = grid[(bi + 1).min(grid.len() - 1)];
    let (t, f) = golden_max(|t| far_end_estimate(&prop, t), lo, hi, tolerance * 0.1);
    Ok(if f >= bf { (t, f) } else { (grid[bi], bf) })
}

/// Sweep over `box_` followed by refinement from the grid argmax; the result
/// carries the refined best point and its trace.
pub fn optimize_in(n: usize, box_: (Range, Range), resolution: usize, tolerance: f64) -> Result<SweepResult> {
    let mut result = sweep(n, box_.0, box_.1, resolution)?;
    let cell = |r: &Range, len: usize| if len > 1 { (r.hi - r.lo) / (len - 1) as f64 } else { 0.0 };
    let step = (cell(&box_.0, result.eta_grid.len()), cell(&box_.1, result.t_grid.len()));
    let bp = result.best_point;
    let refined = refine(n, (bp.eta, bp.t), tolerance, box_, step)?;
    if refined.best.estimate > bp.estimate {
        result.best_point = refined.best;
    }
    result.refinement_trace = refined.trace;
    Ok(result)
}

/// [`optimize_in`] over the default box at the default resolution.
pub fn optimize(n: usize) -> Result<SweepResult> {
    optimize_in(n, default_box(n), DEFAULT_RESOLUTION, DEFAULT_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub n: usize,
    pub t: f64,
    pub estimate: f64,
    pub exact: FidelityEstimate,
    /// exact mean − estimate.
    pub gap: f64,
}

/// Exact protocol average at `(profile, t)` against the α_N² estimate.
/// Uses `n_samples` Haar inputs with four seeded random mediums each.
pub fn cross_validate(
    profile: &CouplingProfile,
    t: f64,
    n_samples: usize,
    seed: u64,
    cap: usize,
) -> Result<CrossValidation> {
    let prop = Propagator::new(&build_generator(profile));
    let estimate = far_end_estimate(&prop, t);
    let exact = average_fidelity(profile, t, InputSampling::Haar(n_samples), MEDIUMS_PER_INPUT, seed, cap)?;
    Ok(CrossValidation { n: profile.n_sites(), t, estimate, gap: exact.mean - estimate, exact })
}
