use brwlab::genfun::*;
use brwlab::model::*;
use brwlab::spaces::*;
use brwlab::Error;

fn tight() -> IterationSettings {
    IterationSettings { tol: 1e-13, ..Default::default() }
}

fn gw() -> BrwModel {
    galton_watson(&[0.25, 0.0, 0.75])
}

#[test]
fn generating_function_examples() {
    let ball = gw().whole().unwrap();
    assert!((eval_g(&ball, &[1.0 / 3.0], 0, Boundary::PinOne).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(eval_g(&ball, &[1.0], 0, Boundary::PinOne).unwrap(), 1.0);
    assert!(matches!(eval_g(&ball, &[1.5], 0, Boundary::PinOne), Err(Error::Domain(_))));

    let bp = build_example("continuous-bp").unwrap().model;
    let ball = bp.whole().unwrap();
    assert_eq!(eval_g(&ball, &[0.5], 0, Boundary::PinOne).unwrap(), 0.5);

    let t = homogeneous_tree(3, 0.5, Decoration::None);
    let ball = t.ball(3).unwrap();
    let ones = vec![1.0; ball.inside_len()];
    for x in 0..ball.inside_len() {
        assert_eq!(eval_g(&ball, &ones, x, Boundary::PinOne).unwrap(), 1.0);
    }
}

#[test]
fn global_extinction_examples() {
    let q = global_extinction_bracket(&gw(), 5, tight()).unwrap();
    assert_eq!(q.width(), 0.0);
    assert!((q.lower.values[0] - 1.0 / 3.0).abs() < 1e-9);

    let sub = global_extinction_bracket(&galton_watson(&[0.5, 0.5]), 5, tight()).unwrap();
    assert!((sub.upper.values[0] - 1.0).abs() < 1e-9);

    let bp = build_example("two-type-bp").unwrap().model;
    let q = global_extinction_bracket(&bp, 5, tight()).unwrap();
    let ball = bp.whole().unwrap();
    let one = ball.id(&Site::scalar(1)).unwrap();
    let two = ball.id(&Site::scalar(2)).unwrap();
    // Fixed point of z1 = 1/4 + 3/4 z2^2 with z2 = 1/5 + 4/5 z1, i.e. 12 z^2 - 19 z + 7 = 0.
    let z1 = (19.0 - (19.0f64 * 19.0 - 4.0 * 12.0 * 7.0).sqrt()) / 24.0;
    assert!((q.lower.values[one] - z1).abs() < 1e-9);
    assert!((q.lower.values[two] - (0.2 + 0.8 * z1)).abs() < 1e-9);
    assert!((z1 - 7.0 / 12.0).abs() < 1e-15);
}

#[test]
fn global_bracket_orders_policies_on_infinite_space() {
    let t = homogeneous_tree(3, 0.5, Decoration::None);
    let q = global_extinction_bracket(&t, 6, IterationSettings::default()).unwrap();
    for (l, u) in q.lower.values.iter().zip(&q.upper.values) {
        assert!(l <= u);
    }
    assert!(q.lower.values[0] < 2.0 / 3.0 && q.upper.values[0] > 2.0 / 3.0 - 1e-9);
    assert!(q.converged());
}

#[test]
fn never_hit_examples() {
    let p = 0.3;
    let m = galton_watson(&[1.0 - p, p]);
    let h = never_hit_bracket(&m, &[0], 3, tight()).unwrap();
    assert!((h.lower.values[0] - (1.0 - p)).abs() < 1e-15);
    assert_eq!(h.width(), 0.0);

    let chain = BrwModel::new(
        FiniteStructure::new(
            "oriented path",
            Site::scalar(0),
            (0..6)
                .map(|i| {
                    let law = if i < 5 {
                        ReproductionLaw::IndependentDiffusion {
                            offspring: OffspringLaw::Finite(vec![0.0, 1.0]),
                            moves: vec![(Site::scalar(i + 1), 1.0)],
                        }
                    } else {
                        ReproductionLaw::null()
                    };
                    (Site::scalar(i), law)
                })
                .collect(),
        )
        .unwrap(),
    );
    let h = never_hit_bracket(&chain, &[0], 10, tight()).unwrap();
    assert!(h.lower.values[1..].iter().all(|v| *v == 1.0));

    let drift = build_example("drift-chain").unwrap().model;
    let ball = drift.ball(10).unwrap();
    let h = never_hit_bracket(&drift, &[0], 10, tight()).unwrap();
    assert!(h.lower.values.iter().zip(&h.upper.values).all(|(l, u)| l <= u));
    assert!(h.upper.values[ball.id(&Site::scalar(5)).unwrap()] > 0.9);
}

#[test]
fn local_extinction_examples() {
    let m = gw();
    let local = local_extinction_vector(&m, &[0], 3, tight()).unwrap();
    let global = global_extinction_bracket(&m, 3, tight()).unwrap();
    assert!((local.local.lower.values[0] - global.lower.values[0]).abs() < 1e-12);

    let bp = build_example("two-type-bp").unwrap().model;
    let global = global_extinction_bracket(&bp, 3, tight()).unwrap();
    for a in 0..2 {
        let local = local_extinction_vector(&bp, &[a], 3, tight()).unwrap();
        for x in 0..2 {
            assert!((local.local.lower.values[x] - global.lower.values[x]).abs() < 1e-9);
        }
        assert!(local.ordering_violation <= 1e-12);
        for x in 0..2 {
            assert!((local.alternative_start.lower.values[x] - local.local.lower.values[x]).abs() < 1e-9);
        }
    }
}

#[test]
fn pure_global_phase_separates_local_and_global_extinction() {
    let t = homogeneous_tree(3, 0.34, Decoration::None);
    let proj = project_local_isomorphism(&t, &|_| 0, 3).unwrap();
    let qbar = global_extinction_bracket(&proj.model, 1, tight()).unwrap();
    assert!((qbar.lower.values[0] - 1.0 / 1.02).abs() < 1e-9);

    let lumped = t.lumped().unwrap();
    let local = local_extinction_vector(&lumped, &[0], 40, tight()).unwrap();
    assert!(local.local.upper.values[0] > 1.0 - 1e-9);
    assert!(local.local.upper.values[0] > qbar.upper.values[0] + 0.01);
}

#[test]
fn nodeath_transform_examples() {
    let ball = gw().whole().unwrap();
    let q = [1.0 / 3.0];
    assert!(nodeath_generating_function(&ball, &q, &[0.0], 0).unwrap().abs() < 1e-15);
    assert!((nodeath_generating_function(&ball, &q, &[1.0], 0).unwrap() - 1.0).abs() < 1e-15);
    assert!((nodeath_generating_function(&ball, &q, &[0.5], 0).unwrap() - 0.375).abs() < 1e-15);
    assert!(matches!(nodeath_generating_function(&ball, &[1.0], &[0.5], 0), Err(Error::Domain(_))));
}

#[test]
fn maximum_principle_examples() {
    let bp = build_example("two-type-bp").unwrap().model;
    let ball = bp.whole().unwrap();
    let q = global_extinction_bracket(&bp, 3, tight()).unwrap();
    let local = local_extinction_vector(&bp, &[0], 3, tight()).unwrap();
    let out = maximum_principle_check(&ball, &local.local.upper.values, &q.lower.values, 1e-9).unwrap();
    assert!(out.holds() && out.checked == 2);
    assert!(maximum_principle_check(&ball, &[1.0, 1.0], &q.lower.values, 1e-12).unwrap().holds());

    // Path 0 <-> 1 <-> 2 with an interior strict maximum at 1.
    let site = Site::scalar;
    let diffuse = |moves: Vec<(Site, f64)>| ReproductionLaw::IndependentDiffusion { offspring: OffspringLaw::Finite(vec![0.5, 0.0, 0.5]), moves };
    let path = BrwModel::new(
        FiniteStructure::new(
            "path",
            site(1),
            vec![
                (site(0), diffuse(vec![(site(1), 1.0)])),
                (site(1), diffuse(vec![(site(0), 0.5), (site(2), 0.5)])),
                (site(2), diffuse(vec![(site(1), 1.0)])),
            ],
        )
        .unwrap(),
    );
    let ball = path.whole().unwrap();
    let mid = ball.id(&site(1)).unwrap();
    let mut z = vec![0.0; 3];
    z[ball.id(&site(0)).unwrap()] = 0.1;
    z[mid] = 0.4;
    let qbar = vec![0.0; 3];
    let out = maximum_principle_check(&ball, &z, &qbar, 1e-12).unwrap();
    assert_eq!(out.witness, Some(mid));
    let cert = out.certificate(&ball, &z, &qbar).unwrap();
    assert!(cert.verify(&ball, 1e-12).unwrap());

    z[mid] = 0.9;
    assert!(matches!(maximum_principle_check(&ball, &z, &qbar, 1e-12), Err(Error::Precondition(_))));
}

#[test]
fn global_survival_certificate_round_trips() {
    let ball = gw().whole().unwrap();
    let cert = global_survival_check(&ball, &[0.5], 0.0).unwrap().expect("z = 1/2 satisfies G(z) <= z");
    assert!(cert.verify(&ball, 0.0).unwrap());
    assert!(global_survival_check(&ball, &[0.2], 0.0).unwrap().is_none());
    let json = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["kind"], "global-survival");
}

fn full(ball: &Ball, inside: &[f64], boundary: Boundary) -> Vec<f64> {
    extend(ball, inside, boundary)
}

#[test]
fn escape_certificate_on_binary_drift_chain() {
    let m = build_example("binary-drift-chain").unwrap().model;
    let radius = 40;
    let ball = m.ball(radius).unwrap();
    let hit = never_hit_bracket(&m, &[0], radius, tight()).unwrap();
    let v = full(&ball, &hit.upper.values, Boundary::PinOne);
    let qbar = vec![1.0 / 3.0; ball.len()];
    let out = mv_certificate_check(&ball, &[0], &v, &qbar, 1e-9).unwrap();
    assert!(out.verified, "slack {} gap {}", out.min_slack, out.gap);
    assert!(out.certificate.unwrap().verify(&ball, 1e-9).unwrap());

    let fails = mv_certificate_check(&ball, &[0], &qbar, &qbar, 1e-9).unwrap();
    assert!(!fails.verified);
    assert_eq!(fails.gap, 0.0);

    let low = vec![0.0; ball.len()];
    assert!(matches!(mv_certificate_check(&ball, &[0], &low, &qbar, 1e-9), Err(Error::Domain(_))));
}

#[test]
fn escape_certificate_fails_in_strong_local_regime() {
    let t = homogeneous_tree(3, 2.0 / 3.0, Decoration::None).lumped().unwrap();
    let radius = 30;
    let ball = t.ball(radius).unwrap();
    let hit = never_hit_bracket(&t, &[0], radius, tight()).unwrap();
    let qbar = vec![0.5; ball.len()];
    let v: Vec<f64> = full(&ball, &hit.lower.values, Boundary::PinZero).iter().map(|x| x.max(0.5)).collect();
    let out = mv_certificate_check(&ball, &[0], &v, &qbar, 1e-9).unwrap();
    assert!(!out.verified, "slack {} gap {}", out.min_slack, out.gap);
}

#[test]
fn extinction_vector_exports() {
    let q = global_extinction_bracket(&gw(), 2, tight()).unwrap();
    let json = q.to_json();
    assert_eq!(json[0]["policy"], serde_json::json!(Boundary::PinZero));
    assert!(json[0]["values"].is_array());
    let mut buf = Vec::new();
    q.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("vertex,label,lower,upper\n"));
    assert_eq!(text.lines().count(), 2);
}
