use brwlab::model::*;
use brwlab::spaces::*;
use brwlab::spectral::*;
use brwlab::Error;

fn central_binomial(n: u64) -> u64 {
    (1..=n).fold(1u64, |acc, k| acc * (n + k) / k)
}

/// First passage generating function from a neighbour to `x` for simple random walk on `T_d`.
fn tree_first_passage(d: f64, s: f64) -> f64 {
    (d - (d * d - 4.0 * (d - 1.0) * s * s).sqrt()) / (2.0 * (d - 1.0) * s)
}

#[test]
fn lattice_return_counts_are_central_binomials() {
    let z = lattice_zd(1, 1.0);
    for view in [horizon_view(&z, &z.root(), 16).unwrap(), {
        let ball = z.ball(16).unwrap();
        let kernel = build_moment_kernel(&ball).unwrap();
        HorizonView { model: z.clone(), ball, kernel, vertex: 0, lumped: false }
    }] {
        let s = n_step_moments(&view.kernel, view.vertex, 16, None).unwrap();
        assert_eq!(s.returns[2].value(), 2.0);
        for n in 1..=8u64 {
            assert_eq!(s.returns[2 * n as usize].value(), central_binomial(n) as f64);
            assert!(s.returns[2 * n as usize - 1].is_zero());
        }
        assert_eq!(s.period(), Some(2));
        for n in 0..=16 {
            assert_eq!(s.totals[n].value(), 2f64.powi(n as i32));
        }
    }
}

#[test]
fn moments_refuse_short_balls() {
    let z = lattice_zd(1, 1.0);
    let kernel = build_moment_kernel(&z.ball(5).unwrap()).unwrap();
    assert!(matches!(n_step_moments(&kernel, 0, 7, None), Err(Error::HorizonExceedsBall { .. })));
    let t = homogeneous_tree(3, 1.0, Decoration::None);
    let cap = t.structure().cap().unwrap() as usize;
    assert!(matches!(horizon_view(&t.with_root(Site::new(&[0, 1, 0])), &Site::new(&[0, 1, 0]), cap + 1), Err(Error::RadiusCap { .. })));
}

#[test]
fn one_step_total_on_critical_tree() {
    let t = homogeneous_tree(3, 1.0 / 3.0, Decoration::None);
    let view = horizon_view(&t, &t.root(), 3).unwrap();
    let s = n_step_moments(&view.kernel, view.vertex, 3, None).unwrap();
    assert!((s.totals[1].value() - 1.0).abs() < 1e-15);
}

#[test]
fn scaled_moments_do_not_overflow() {
    let z = lattice_zd(1, 1.0);
    let view = horizon_view(&z, &z.root(), 2000).unwrap();
    let s = n_step_moments(&view.kernel, view.vertex, 2000, None).unwrap();
    assert!(s.returns[2000].value().is_infinite());
    let ln = s.returns[2000].ln();
    // ln C(2000, 1000) via Stirling with two correction terms.
    let n = 1000.0f64;
    let stirling = 2.0 * n * 2f64.ln() - 0.5 * (std::f64::consts::PI * n).ln() - 1.0 / (8.0 * n);
    assert!((ln - stirling).abs() < 1e-6, "{ln} vs {stirling}");
}

#[test]
fn growth_rates_on_lattice_tree_and_finite_class() {
    let z = lattice_zd(1, 1.0);
    let view = horizon_view(&z, &z.root(), 2000).unwrap();
    let (ms, mw) = estimate_growth_rates(&view.kernel, view.vertex, 2000).unwrap();
    assert!(ms.lower >= 1.95 && ms.lower <= 2.0, "{}", ms.lower);
    assert!(ms.moment_lower >= 1.99 && ms.moment_lower <= 2.0);
    assert!(ms.lower <= ms.estimate && ms.estimate <= 2.0 + 1e-12);
    assert!((mw.estimate - 2.0).abs() < 1e-12);
    assert_eq!(ms.period, Some(2));

    let t = homogeneous_tree(3, 1.0, Decoration::None);
    let view = horizon_view(&t, &t.root(), 60).unwrap();
    assert!(view.lumped);
    let (ms, mw) = estimate_growth_rates(&view.kernel, view.vertex, 60).unwrap();
    let true_ms = 2.0 * 2f64.sqrt();
    assert!(ms.lower >= 2.70 && ms.lower <= true_ms, "{}", ms.lower);
    assert!(ms.moment_lower < 2.70);
    assert!(ms.lower <= mw.estimate && (mw.estimate - 3.0).abs() < 0.1);

    let k = MomentKernel::from_dense(&[vec![3.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let (ms, mw) = estimate_growth_rates(&k, 0, 20).unwrap();
    let root = (3.0 + 13f64.sqrt()) / 2.0;
    assert!((ms.exact.unwrap() - root).abs() < 1e-10);
    assert!((mw.exact.unwrap() - root).abs() < 1e-10);
    assert!(ms.lower <= root + 1e-12);
}

#[test]
fn growth_requires_two_periods() {
    let z = lattice_zd(1, 1.0);
    let view = horizon_view(&z, &z.root(), 3).unwrap();
    assert!(matches!(estimate_growth_rates(&view.kernel, view.vertex, 3), Err(Error::Precondition(_))));
}

#[test]
fn perron_root_examples() {
    let k = MomentKernel::from_dense(&[vec![3.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let p = perron_root(&k, DEFAULT_PERRON_TOL).unwrap();
    assert!((p.value - (3.0 + 13f64.sqrt()) / 2.0).abs() < 1e-10);
    assert!(p.residual <= 1e-10);
    assert!(p.lower <= p.value && p.value <= p.upper);

    let p = perron_root(&MomentKernel::from_dense(&[vec![2.0]]).unwrap(), DEFAULT_PERRON_TOL).unwrap();
    assert_eq!(p.value, 2.0);

    let cycle = MomentKernel::from_dense(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
    let p = perron_root(&cycle, DEFAULT_PERRON_TOL).unwrap();
    assert!((p.value - 1.0).abs() < 1e-12);
    assert_eq!(p.period, Some(3));

    let reducible = MomentKernel::from_dense(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(perron_root(&reducible, DEFAULT_PERRON_TOL), Err(Error::Reducible)));
}

#[test]
fn phi_series_examples() {
    let gw = galton_watson(&[0.25, 0.0, 0.75]);
    let k = build_moment_kernel(&gw.whole().unwrap()).unwrap();
    let s = phi_gamma_series(&k, 0, 0, 1.0, 1).unwrap();
    assert_eq!(s.phi_total(), 1.5);
    assert_eq!(s.phi_exceeds_one_at, Some(1));

    let z = lattice_zd(1, 0.6);
    let view = horizon_view(&z, &z.root(), 400).unwrap();
    let s = phi_gamma_series(&view.kernel, view.vertex, view.vertex, 1.0, 400).unwrap();
    assert!(s.phi_exceeds_one_at.is_some());

    let t = homogeneous_tree(3, 1.0, Decoration::None);
    let view = horizon_view(&t, &t.root(), 60).unwrap();
    let t_param = 0.2;
    let rho = 3.0;
    let f = tree_first_passage(3.0, rho * t_param);
    let s = phi_gamma_series(&view.kernel, view.vertex, view.vertex, t_param, 60).unwrap();
    assert!((s.phi_total() - rho * t_param * f).abs() < 1e-6, "{} vs {}", s.phi_total(), rho * t_param * f);
    let neighbour = view.ball.require(&Site::new(&[0, 1])).unwrap();
    let s = phi_gamma_series(&view.kernel, neighbour, view.vertex, t_param, 59).unwrap();
    assert!((s.phi_total() - f).abs() < 1e-6);
}

#[test]
fn gamma_identity_residual_decreases() {
    let z = lattice_zd(1, 1.0);
    let view = horizon_view(&z, &z.root(), 200).unwrap();
    let mut last = f64::INFINITY;
    for n in [10, 20, 40, 80, 160] {
        let s = phi_gamma_series(&view.kernel, view.vertex, view.vertex, 0.3, n).unwrap();
        let r = s.identity_residual.unwrap();
        assert!(r < last || r < 1e-14, "{r} >= {last} at {n}");
        last = r;
    }
    assert!(last < 1e-10);
}

#[test]
fn local_classification_examples() {
    let gw = galton_watson(&[0.25, 0.0, 0.75]);
    let c = classify_local_survival(&gw, &gw.root(), 10).unwrap();
    assert_eq!(c.verdict, Verdict::Survives);

    let t = homogeneous_tree(3, 0.34, Decoration::None);
    let c = classify_local_survival(&t, &t.root(), 60).unwrap();
    assert_eq!(c.verdict, Verdict::Undecided);
    assert!(c.growth.lower < 1.0);

    let t = homogeneous_tree(3, 0.5, Decoration::None);
    assert_eq!(classify_local_survival(&t, &t.root(), 60).unwrap().verdict, Verdict::Survives);

    let strip = build_example("strip").unwrap().model;
    let corner = classify_local_survival(&strip, &Site::new(&[0, 1]), 10).unwrap();
    assert_eq!(corner.verdict, Verdict::Dies);
    assert!((corner.growth.exact.unwrap() - 0.9).abs() < 1e-12);
    let upper = classify_local_survival(&strip, &Site::new(&[3, 1]), 10).unwrap();
    assert_eq!(upper.verdict, Verdict::Dies);
    assert_eq!(upper.growth.exact, Some(0.0));
    let start = classify_local_survival(&strip, &Site::new(&[0, 0]), 20).unwrap();
    assert_ne!(start.verdict, Verdict::Survives);
    assert_eq!(start.growth.lower, 0.0);
    assert!(!start.caveats.is_empty());
}

#[test]
fn witness_chain_collatz_wielandt() {
    let m = build_example("lambda-w-attained-chain").unwrap().model;
    let ball = m.ball(200).unwrap();
    let k = build_moment_kernel(&ball).unwrap();
    let v: Vec<f64> = ball.sites().iter().map(|s| if s.get(0) == 0 { 0.5 } else { 1.0 / (s.get(0) + 1) as f64 }).collect();
    let ok = collatz_wielandt_check(&k, 1.0, &v, WitnessForm::Nonlinear, 0.0).unwrap();
    assert!(ok.passed);
    assert_eq!(ok.slack[0], Some(0.0));
    assert_eq!(ok.checked, ball.inside_len());

    let bad = collatz_wielandt_check(&k, 0.9, &v, WitnessForm::Nonlinear, 0.0).unwrap();
    assert!(!bad.passed);
    assert!(bad.failing.iter().any(|x| ball.site(*x).get(0) >= 2));

    let bp = build_example("continuous-bp").unwrap().model;
    let k = build_moment_kernel(&bp.whole().unwrap()).unwrap();
    let eq = collatz_wielandt_check(&k, 1.0, &[0.5], WitnessForm::Nonlinear, 0.0).unwrap();
    assert_eq!(eq.min_slack, 0.0);
    assert!(eq.passed);

    let lin = collatz_wielandt_check(&k, 1.0, &[0.5], WitnessForm::Linear { power: 3 }, 0.0).unwrap();
    assert!(lin.passed);
    assert!(matches!(collatz_wielandt_check(&k, 1.0, &[1.5], WitnessForm::Nonlinear, 0.0), Err(Error::Domain(_))));
    let one = collatz_wielandt_check(&k, 1.0, &[1.0], WitnessForm::Nonlinear, 0.0).unwrap();
    assert_eq!(one.excluded, vec![0]);
}

#[test]
fn global_classification_examples() {
    for d in [3u32, 4, 5] {
        let t = homogeneous_tree(d, 0.5, Decoration::None);
        let g = classify_global_fbrw(&t, None, &t.root(), 4).unwrap();
        assert!((g.lambda_w.unwrap() - 1.0 / d as f64).abs() < 1e-12);
        assert_eq!(g.verdict, Verdict::Survives);
    }
    for d in [1usize, 2, 3] {
        let z = lattice_zd(d, 0.1);
        let g = classify_global_fbrw(&z, None, &z.root(), 3).unwrap();
        assert!((g.lambda_w.unwrap() - 1.0 / (2.0 * d as f64)).abs() < 1e-12);
        assert_eq!(g.verdict, Verdict::Dies);
    }
    let sq = build_example("square-tree-fgraph").unwrap().model;
    let g = classify_global_fbrw(&sq, None, &sq.root(), 8).unwrap();
    assert!((g.lambda_w.unwrap() - 2.0 / (3.0 + 13f64.sqrt())).abs() < 1e-12);
    assert!(g.projection_residual <= 1e-12);

    let a = noext(NoExtVariant::A);
    assert!(classify_global_fbrw(&a, None, &a.root(), 5).is_err());
    assert!(matches!(classify_global_fbrw(&a, Some(&|_| 0), &a.root(), 5), Err(Error::FiberMismatch { .. })));
}

#[test]
fn critical_values_on_lattice() {
    let z = lattice_zd(1, 1.0);
    let g = classify_global_fbrw(&z, None, &z.root(), 3).unwrap();
    let c = critical_values(&z, &z.root(), 2000, Some(&g)).unwrap();
    assert!((c.lambda_w.unwrap() - 0.5).abs() < 1e-12);
    assert!(c.lambda_s_upper >= 0.5 && c.lambda_s_upper <= 0.5 / 0.975);
    assert!((c.lambda_s_estimate - 0.5).abs() < 1e-3);
}

fn line_windows(ball: &Ball, max: i64) -> Vec<Vec<VertexId>> {
    (1..=max).map(|n| (-n..=n).map(|i| ball.require(&Site::scalar(i)).unwrap()).collect()).collect()
}

#[test]
fn convergence_parameters_on_line_windows() {
    let z = lattice_zd(1, 1.0);
    let ball = z.ball(51).unwrap();
    let k = build_moment_kernel(&ball).unwrap();
    let seq = convergence_parameter_sequence(&k, 0, &line_windows(&ball, 50)).unwrap();
    assert!(seq.nested);
    for (i, r) in seq.values.iter().enumerate() {
        let n = (i + 1) as f64;
        let expected = 1.0 / (2.0 * (std::f64::consts::PI / (2.0 * n + 2.0)).cos());
        assert!((r - expected).abs() < 1e-10, "n={n}: {r} vs {expected}");
    }
    assert!(seq.values.windows(2).all(|p| p[1] < p[0]));
    assert!(seq.values[49] - 0.5 < 5e-3);

    let constant = vec![line_windows(&ball, 3)[2].clone(); 4];
    let seq = convergence_parameter_sequence(&k, 0, &constant).unwrap();
    assert!(seq.values.iter().all(|v| *v == seq.values[0]));
}

#[test]
fn convergence_parameters_on_tree_balls() {
    let t = homogeneous_tree(3, 1.0, Decoration::None);
    let ball = t.ball(12).unwrap();
    let k = build_moment_kernel(&ball).unwrap();
    let windows: Vec<Vec<VertexId>> = (1..=12).map(|r| (0..ball.inside_len()).filter(|v| ball.dist(*v) <= r).collect()).collect();
    let seq = convergence_parameter_sequence(&k, 0, &windows).unwrap();
    assert!(seq.nonincreasing(1e-12));
    let limit = 1.0 / (2.0 * 2f64.sqrt());
    assert!(seq.values[11] - limit < 0.02 && seq.values[11] > limit);
}

#[test]
fn geometry_examples() {
    let z2 = lattice_zd(2, 1.0);
    let a = geometry_diagnostics(&z2, &z2.root(), 10, None).unwrap();
    let b = geometry_diagnostics(&z2, &z2.root(), 80, None).unwrap();
    // |B(r)| = 2r^2 + 2r + 1, so the secant slope decays like 2 ln 2 / (r / 2).
    assert!(b.growth_exponent < a.growth_exponent && b.growth_exponent < 0.035);
    assert!(b.isoperimetric_upper.unwrap() < a.isoperimetric_upper.unwrap());
    assert!(b.isoperimetric_upper.unwrap() < 0.06);
    assert!(b.reversibility.unwrap().reversible);

    let t = homogeneous_tree(3, 1.0, Decoration::None);
    let g = geometry_diagnostics(&t, &t.root(), 10, None).unwrap();
    assert!(g.isoperimetric_profile.unwrap().iter().all(|r| *r >= 1.0));
    assert!((g.growth_exponent - 2f64.ln()).abs() < 0.01);

    let r = radial_tree(&[1, 2], 1.0);
    let params = UniformGrowthParams { k_w: 6f64.sqrt(), epsilon: 0.75, nbar: 2, samples: 200 };
    let g = geometry_diagnostics(&r, &r.root(), 10, Some(params)).unwrap();
    assert!(g.uniform_growth.unwrap().passed);

    let strip = build_example("strip").unwrap().model;
    let g = geometry_diagnostics(&strip, &strip.root(), 10, None).unwrap();
    assert!(g.isoperimetric_upper.is_none() && !g.notices.is_empty());
}

#[test]
fn series_csv_layout() {
    let mut buf = Vec::new();
    write_series_csv(&mut buf, &[1.0, 0.5]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "n,value\n0,1\n1,0.5\n");
}

#[test]
fn survival_report_serializes() {
    let gw = galton_watson(&[0.25, 0.0, 0.75]);
    let report = SurvivalReport {
        model: gw.name(),
        vertex: gw.label(&gw.root()),
        local: Some(classify_local_survival(&gw, &gw.root(), 5).unwrap()),
        ..Default::default()
    };
    let json = report.to_json();
    assert_eq!(json["local"]["verdict"], "survives");
    assert_eq!(json["local"]["evidence"][0]["kind"], "phi-partial-sum");
}
