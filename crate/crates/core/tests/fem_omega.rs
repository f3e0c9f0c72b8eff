use fracdiff_core::fem_omega::{
    default_grading, graded_hierarchy, hp_interval_space, OmegaSpace, PreparedForcing, ShiftedSolver,
};
use fracdiff_core::{Coefficients, DomainSpec, Forcing};

/// `int_0^2 u` for `-eps^2 u'' + u = 1`, `u(0) = u(2) = 0`; equals the
/// squared energy norm of `u`.
fn exact_energy(eps: f64) -> f64 {
    2.0 - 2.0 * eps * (1.0 / eps).tanh()
}

fn fitted_rate(qs: &[usize], errs: &[f64]) -> f64 {
    let n = qs.len() as f64;
    let xm = qs.iter().map(|&q| q as f64).sum::<f64>() / n;
    let ym = errs.iter().map(|e| e.ln()).sum::<f64>() / n;
    let sxy: f64 = qs.iter().zip(errs).map(|(&q, e)| (q as f64 - xm) * (e.ln() - ym)).sum();
    let sxx: f64 = qs.iter().map(|&q| (q as f64 - xm).powi(2)).sum();
    -sxy / sxx
}

#[test]
fn boundary_layer_hp_converges_robustly() {
    let d = DomainSpec::interval(0.0, 2.0).unwrap();
    let f = PreparedForcing::new(&Forcing::Constant(1.0), &d).unwrap();
    // the error is read off a difference of energies, so it bottoms out
    // near sqrt(machine epsilon); degrees up to 5 stay clear of that floor
    let qs: Vec<usize> = (1..=5).collect();
    let mut rates = Vec::new();
    for eps in [1.0, 1e-2, 1e-4, 1e-6] {
        let mut errs = Vec::new();
        for &q in &qs {
            let sp = OmegaSpace::Interval(hp_interval_space(0.0, 2.0, eps, q, 0.5).unwrap());
            let sys = sp.assemble(&Coefficients::laplacian()).unwrap();
            let b = sp.load(&f).unwrap();
            let u = ShiftedSolver::new(&sys).unwrap().solve(eps * eps, &b).unwrap();
            let discrete: f64 = b.iter().zip(&u).map(|(x, y)| x * y).sum();
            let exact = exact_energy(eps);
            errs.push(((exact - discrete).max(0.0) / exact).sqrt());
        }
        let rate = fitted_rate(&qs, &errs);
        eprintln!("eps={eps:e}: errors {errs:?} rate {rate}");
        assert!(rate > 0.0);
        rates.push(rate);
    }
    let (lo, hi) = rates.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!((hi - lo) / hi < 0.5, "rates {rates:?}");
}

#[test]
fn graded_hierarchy_stays_conforming_and_nested() {
    let d = DomainSpec::l_shape();
    let g = default_grading(&d);
    let sizes: Vec<f64> = (1..=5).map(|l| 0.5f64.powi(l)).collect();
    let ms = graded_hierarchy(&d, &sizes, &g).unwrap();
    let theta0 = ms[0].min_angle();
    for w in ms.windows(2) {
        w[1].check_conforming().unwrap();
        assert!(w[0].is_refined_by(&w[1]));
        assert!(w[1].min_angle() >= theta0 - 1e-12);
    }
}
