//! Convergence studies: one discretization per level, energy errors
//! against a reference pairing, CSV output.

use std::io::Write;
use std::time::Instant;

use fracdiff_core::extension_solver::{
    choose_truncation, diagonalize, energy_error_squared, solve_diagonalized, solve_sparse_combination,
    DiagonalizedSystem, ExtensionSolution, PreparedOmega, TracePairing, Truncation, TruncationMode,
};
use fracdiff_core::fem_omega::{
    default_grading, graded_triangulation, hp_interval_space, boundary_layer_count, CornerGrading, IntervalSpace,
    OmegaSpace, P1Space, TriMesh,
};
use fracdiff_core::spectral_oracle::{eigenfunction_pairing, oracle_pairing, SpectralBasis};
use fracdiff_core::{DomainKind, DomainSpec, FractionalProblem};

use crate::error::CliError;
use crate::spec::{Method, Overrides, ReferenceMode, StudySpec};

pub const CSV_HEADER: &str = "level,h,M,q,N_omega,N_total,energy_error,eoc,wall_ms";

/// Summary of the y-discretization of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct YSummary {
    pub y_max: f64,
    pub alpha: f64,
    pub elements: usize,
    pub dofs: usize,
    pub max_degree: usize,
    pub min_element: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl YSummary {
    pub fn of(d: &DiagonalizedSystem) -> Self {
        Self {
            y_max: d.y_space.y_max(),
            alpha: d.alpha,
            elements: d.y_space.mesh.num_elements(),
            dofs: d.len(),
            max_degree: d.y_space.degrees.max(),
            min_element: d.y_space.mesh.min_element_size(),
            mu_min: d.mu[0],
            mu_max: *d.mu.last().expect("nonempty y-space"),
        }
    }

    /// `Y^2 / (1 - alpha^2)`.
    pub fn mu_bound(&self) -> f64 {
        self.y_max * self.y_max / (1.0 - self.alpha * self.alpha)
    }
}

/// Result of one level before the reference is known.
#[derive(Debug, Clone)]
pub struct LevelSolve {
    pub level: usize,
    pub h: f64,
    pub m: usize,
    pub q: usize,
    pub n_omega: usize,
    pub n_total: usize,
    /// `d_s <f, tr u_h>`.
    pub scaled_pairing: f64,
    pub wall_ms: f64,
    pub y: Vec<YSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub m: usize,
    pub q: usize,
    pub n_omega: usize,
    pub n_total: usize,
    pub energy_error: f64,
    pub eoc: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub reference: f64,
    /// Estimated error of a fine-solve reference (energy norm).
    pub reference_error: Option<f64>,
    pub rows: Vec<StudyRow>,
    pub levels: Vec<LevelSolve>,
}

/// Nominal mesh size of a level.
pub fn nominal_h(level: usize) -> f64 {
    0.5f64.powi(level as i32)
}

fn grading_for(domain: &DomainSpec, graded: bool, beta: Option<f64>) -> Vec<CornerGrading> {
    if !graded {
        return vec![];
    }
    let mut g = default_grading(domain);
    if let Some(b) = beta {
        for (c, corner) in g.iter_mut().zip(&domain.corners) {
            if corner.angle > std::f64::consts::PI + 1e-12 {
                c.beta = b;
            }
        }
    }
    g
}

fn interval_bounds(domain: &DomainSpec) -> Option<(f64, f64)> {
    match domain.kind {
        DomainKind::Interval { a, b } => Some((a, b)),
        _ => None,
    }
}

/// P1 space of nominal size `h`; grading toward re-entrant corners if asked.
pub fn p1_space(problem: &FractionalProblem, h: f64, graded: bool, beta: Option<f64>) -> Result<OmegaSpace, CliError> {
    if let Some((a, b)) = interval_bounds(&problem.domain) {
        let n = ((b - a) / h).round().max(1.0) as usize;
        return Ok(OmegaSpace::Interval(IntervalSpace::uniform(a, b, n, 1)?));
    }
    let g = grading_for(&problem.domain, graded, beta);
    Ok(OmegaSpace::P1(P1Space::new(graded_triangulation(&problem.domain, h, &g)?)))
}

fn p1_truncation(problem: &FractionalProblem, h: f64, ov: &Overrides) -> Result<Truncation, CliError> {
    let t = choose_truncation(h, TruncationMode::P1, problem.order)?;
    let Truncation::P1 { y_max, eta, k } = t else { unreachable!() };
    Ok(Truncation::P1 { y_max: ov.y_max.unwrap_or(y_max), eta: ov.eta.unwrap_or(eta), k: ov.k.unwrap_or(k) })
}

fn hp_truncation(problem: &FractionalProblem, h: f64, ov: &Overrides) -> Result<Truncation, CliError> {
    let t = choose_truncation(h, TruncationMode::HpInY, problem.order)?;
    let Truncation::HpInY { y_max, m, sigma, slope } = t else { unreachable!() };
    Ok(Truncation::HpInY {
        y_max: ov.y_max.unwrap_or(y_max),
        m: ov.m.unwrap_or(m),
        sigma: ov.sigma.unwrap_or(sigma),
        slope: ov.slope.unwrap_or(slope),
    })
}

/// Parameters of the fully hp discretization at degree `q = M = level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpFullParams {
    pub q: usize,
    pub m: usize,
    pub y_max: f64,
    pub sigma: f64,
    pub slope: f64,
    pub sigma_x: f64,
    pub layers: usize,
}

/// `q = M = level`, `Y = M`, `sigma = 0.05`, slope 2, `sigma_x = sigma` and
/// the smallest `L` with `sigma_x^{2L} <= Y (slope M)^{-2} sigma^M`.
pub fn hp_full_params(level: usize, ov: &Overrides) -> Result<HpFullParams, CliError> {
    let m = ov.m.unwrap_or(level).max(1);
    let q = ov.q.unwrap_or(level).max(1);
    let y_max = ov.y_max.unwrap_or(m as f64).max(1.0);
    let sigma = ov.sigma.unwrap_or(0.05);
    let slope = ov.slope.unwrap_or(2.0);
    let sigma_x = ov.sigma_x.unwrap_or(sigma);
    let layers = match ov.layers {
        Some(l) => l,
        None => {
            let eps = (y_max.sqrt() * sigma.powf(0.5 * m as f64) / (slope * m as f64)).min(1.0);
            boundary_layer_count(eps, sigma_x)?
        }
    };
    Ok(HpFullParams { q, m, y_max, sigma, slope, sigma_x, layers })
}

fn hp_full_space(problem: &FractionalProblem, p: &HpFullParams) -> Result<OmegaSpace, CliError> {
    let (a, b) = interval_bounds(&problem.domain).ok_or_else(|| CliError::Spec("hp_full_1d needs an interval".into()))?;
    // layers given directly: pick epsilon = sigma_x^L
    let eps = p.sigma_x.powi(p.layers as i32);
    let sp = hp_interval_space(a, b, eps.min(1.0), p.q, p.sigma_x)?;
    Ok(OmegaSpace::Interval(sp))
}

/// Spatial space and y-discretization of a single-tensor method at `level`.
pub fn level_discretization(
    problem: &FractionalProblem,
    method: Method,
    level: usize,
    ov: &Overrides,
) -> Result<(OmegaSpace, Truncation, f64, usize), CliError> {
    let h = nominal_h(level);
    Ok(match method {
        Method::P1Uniform => (p1_space(problem, h, false, None)?, p1_truncation(problem, h, ov)?, h, 1),
        Method::P1Graded => (p1_space(problem, h, true, ov.beta)?, p1_truncation(problem, h, ov)?, h, 1),
        Method::HpInY => {
            (p1_space(problem, h, ov.beta.is_some(), ov.beta)?, hp_truncation(problem, h, ov)?, h, 1)
        }
        Method::HpFull1d => {
            let p = hp_full_params(level, ov)?;
            let space = hp_full_space(problem, &p)?;
            let h = match &space {
                OmegaSpace::Interval(s) => s.h_max(),
                OmegaSpace::P1(s) => s.mesh.h_max(),
            };
            let t = Truncation::HpInY { y_max: p.y_max, m: p.m, sigma: p.sigma, slope: p.slope };
            (space, t, h, p.q)
        }
        Method::Sparse => return Err(CliError::Spec("sparse levels are built by the combination driver".into())),
    })
}

/// Solves one level of a single-tensor method by diagonalization.
pub fn solve_level_full(
    problem: &FractionalProblem,
    method: Method,
    level: usize,
    ov: &Overrides,
) -> Result<(LevelSolve, ExtensionSolution, OmegaSpace), CliError> {
    let wrap = |e: CliError| match e {
        CliError::Numerical(source) => CliError::Level { level, source },
        other => other,
    };
    let start = Instant::now();
    let (space, trunc, h, q) = level_discretization(problem, method, level, ov).map_err(wrap)?;
    let y_space = trunc.y_space().map_err(|e| wrap(e.into()))?;
    let diag = diagonalize(&y_space, problem.order.alpha()).map_err(|e| wrap(e.into()))?;
    let omega = PreparedOmega::new(problem, space).map_err(|e| wrap(e.into()))?;
    let sol = solve_diagonalized(problem.order, &omega, &diag, false).map_err(|e| wrap(e.into()))?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let solve = LevelSolve {
        level,
        h,
        m: diag.y_space.mesh.num_elements(),
        q,
        n_omega: sol.n_omega,
        n_total: sol.total_dofs(),
        scaled_pairing: sol.scaled_pairing(),
        wall_ms,
        y: vec![YSummary::of(&diag)],
    };
    Ok((solve, sol, omega.space))
}

/// Nested spatial hierarchy `h_l = 2^-l`, `l = 0..=top`, refined toward
/// re-entrant corners for polygons.
pub fn sparse_omega_hierarchy(
    problem: &FractionalProblem,
    top: usize,
    beta: Option<f64>,
) -> Result<Vec<PreparedOmega>, CliError> {
    let mut out = Vec::with_capacity(top + 1);
    let mut mesh: Option<TriMesh> = None;
    let g = grading_for(&problem.domain, true, beta);
    for l in 0..=top {
        let h = nominal_h(l);
        let space = match interval_bounds(&problem.domain) {
            Some(_) => p1_space(problem, h, false, None)?,
            None => {
                let m = match mesh.take() {
                    None => graded_triangulation(&problem.domain, h, &g)?,
                    Some(mut m) => {
                        m.refine_to(h, &g);
                        m
                    }
                };
                mesh = Some(m.clone());
                OmegaSpace::P1(P1Space::new(m))
            }
        };
        out.push(PreparedOmega::new(problem, space)?);
    }
    Ok(out)
}

/// y hierarchy for the combination formula at top level `top`: radical
/// meshes with `k_l = 2^-(l+1)` and a common `Y = |ln 2^-top|`.
pub fn sparse_y_hierarchy(problem: &FractionalProblem, top: usize, ov: &Overrides) -> Result<Vec<DiagonalizedSystem>, CliError> {
    let h_top = nominal_h(top.max(1));
    let base = p1_truncation(problem, h_top, ov)?;
    let Truncation::P1 { y_max, eta, .. } = base else { unreachable!() };
    (0..=top)
        .map(|l| {
            let t = Truncation::P1 { y_max, eta, k: nominal_h(l + 1) };
            Ok(diagonalize(&t.y_space()?, problem.order.alpha())?)
        })
        .collect()
}

fn solve_level_sparse(
    problem: &FractionalProblem,
    level: usize,
    omegas: &[PreparedOmega],
    ov: &Overrides,
) -> Result<LevelSolve, CliError> {
    let wrap = |e: CliError| match e {
        CliError::Numerical(source) => CliError::Level { level, source },
        other => other,
    };
    let start = Instant::now();
    let ys = sparse_y_hierarchy(problem, level, ov).map_err(wrap)?;
    let sol = solve_sparse_combination(problem.order, &omegas[..=level], &ys, level).map_err(|e| wrap(e.into()))?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(LevelSolve {
        level,
        h: nominal_h(level),
        m: ys[level].y_space.mesh.num_elements(),
        q: 1,
        n_omega: omegas[level].dim(),
        n_total: sol.total_dofs(),
        scaled_pairing: sol.scaled_pairing(),
        wall_ms,
        y: ys.iter().map(YSummary::of).collect(),
    })
}

/// Solves every level of `method` in `levels` (inclusive).
pub fn solve_levels(
    problem: &FractionalProblem,
    method: Method,
    levels: [usize; 2],
    ov: &Overrides,
) -> Result<Vec<LevelSolve>, CliError> {
    let [lo, hi] = levels;
    if method == Method::Sparse {
        let omegas = sparse_omega_hierarchy(problem, hi, ov.beta)?;
        return (lo..=hi).map(|l| solve_level_sparse(problem, l, &omegas, ov)).collect();
    }
    (lo..=hi).map(|l| solve_level_full(problem, method, l, ov).map(|r| r.0)).collect()
}

/// Exact `d_s <f, u>` where available.
pub fn oracle_reference(problem: &FractionalProblem) -> Result<f64, CliError> {
    match problem.domain.kind {
        DomainKind::Interval { .. } | DomainKind::Rectangle { .. } => {
            let basis = SpectralBasis::for_problem(problem)?;
            Ok(oracle_pairing(&basis, problem)?.value)
        }
        DomainKind::Polygon { .. } => eigenfunction_pairing(problem)?.ok_or_else(|| {
            CliError::Spec("no exact reference for this polygon forcing; use a fine_solve reference".into())
        }),
    }
}

/// Pairing of a fine solve and an estimate of its own energy error, from
/// the difference to the next coarser level assuming the squared error
/// drops at least fourfold per level.
pub fn fine_reference(
    problem: &FractionalProblem,
    method: Method,
    level: usize,
    ov: &Overrides,
) -> Result<(f64, f64), CliError> {
    let pair = solve_levels(problem, method, [level - 1, level], ov)?;
    let (coarse, fine) = (pair[0].scaled_pairing, pair[1].scaled_pairing);
    Ok((fine, ((fine - coarse).abs() / 3.0).sqrt()))
}

/// Runs the study. `timing = false` writes zero wall times so repeated
/// runs give identical output.
pub fn run_study(spec: &StudySpec, timing: bool) -> Result<StudyReport, CliError> {
    let problem = spec.load_problem()?;
    spec.validate(&problem)?;
    let (reference, reference_error) = match &spec.reference {
        ReferenceMode::Oracle => (oracle_reference(&problem)?, None),
        ReferenceMode::Value { pairing } => (*pairing, None),
        ReferenceMode::FineSolve { extra_levels, method } => {
            if *extra_levels == 0 {
                return Err(CliError::Spec("fine_solve needs extra_levels >= 1".into()));
            }
            let (p, e) = fine_reference(&problem, method.unwrap_or(spec.method), spec.levels[1] + extra_levels, &spec.overrides)?;
            (p, Some(e))
        }
    };
    let levels = solve_levels(&problem, spec.method, spec.levels, &spec.overrides)?;
    let rows = make_rows(&levels, reference, timing)?;
    if let (Some(e), Some(first)) = (reference_error, rows.first()) {
        if e > 0.05 * first.energy_error {
            return Err(CliError::UnresolvedReference { estimate: e, coarsest: first.energy_error });
        }
    }
    Ok(StudyReport { reference, reference_error, rows, levels })
}

pub fn make_rows(levels: &[LevelSolve], reference: f64, timing: bool) -> Result<Vec<StudyRow>, CliError> {
    let mut rows: Vec<StudyRow> = Vec::with_capacity(levels.len());
    for l in levels {
        let e2 = energy_error_squared(reference, &ScaledPairing(l.scaled_pairing))
            .map_err(|source| CliError::Level { level: l.level, source })?;
        let err = e2.sqrt();
        let eoc = rows.last().and_then(|p| (p.energy_error > 0.0 && err > 0.0).then(|| (p.energy_error / err).log2()));
        rows.push(StudyRow {
            level: l.level,
            h: l.h,
            m: l.m,
            q: l.q,
            n_omega: l.n_omega,
            n_total: l.n_total,
            energy_error: err,
            eoc,
            wall_ms: if timing { l.wall_ms } else { 0.0 },
        });
    }
    Ok(rows)
}

struct ScaledPairing(f64);

impl TracePairing for ScaledPairing {
    fn scaled_pairing(&self) -> f64 {
        self.0
    }
}

pub fn write_csv(rows: &[StudyRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let eoc = r.eoc.map(|e| format!("{e:.4}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:.6e},{},{},{},{},{:.10e},{},{:.1}",
            r.level, r.h, r.m, r.q, r.n_omega, r.n_total, r.energy_error, eoc, r.wall_ms
        )?;
    }
    Ok(())
}
