//! Trace samples near the left endpoint of an interval, for reading off
//! the algebraic boundary behavior.

use std::io::Write;

use fracdiff_core::extension_solver::ExtensionSolution;
use fracdiff_core::fem_omega::OmegaSpace;

/// `(d, tr u(a + d))` for each distance `d`.
pub fn boundary_profile(space: &OmegaSpace, sol: &ExtensionSolution, distances: &[f64]) -> Vec<(f64, f64)> {
    let a = match space {
        OmegaSpace::Interval(s) => s.breakpoints[0],
        OmegaSpace::P1(_) => f64::NAN,
    };
    distances.iter().map(|&d| (d, space.eval(&sol.trace, [a + d, 0.0]))).collect()
}

/// Least-squares slope of `ln value` against `ln dist`; `None` if fewer
/// than two positive samples.
pub fn loglog_slope(table: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = table.iter().filter(|(d, v)| *d > 0.0 && *v > 0.0).map(|(d, v)| (d.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    Some(sxy / sxx)
}

/// `count` log-spaced distances covering `[lo, hi]`.
pub fn log_distances(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

pub fn write_profile(table: &[(f64, f64)], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "dist,value")?;
    for (d, v) in table {
        writeln!(w, "{d:.6e},{v:.10e}")?;
    }
    Ok(())
}
