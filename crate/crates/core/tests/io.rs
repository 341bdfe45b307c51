use nalgebra::{DMatrix, DVector};
use netsing::continuation::Fig2Panel;
use netsing::fixtures;
use netsing::io::{
    analyze, bifurcate, diagram_csv, emit_network, kron_network, parse_network_str, reduce_network, BifurcateRequest,
    ReduceOptions, FIG1_JSON,
};
use netsing::singularity::BifurcationKind;
use netsing::{Error, NetworkModel};

fn fig1_laplacian(k: f64) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(5, 5);
    let mut add = |i: usize, j: usize, w: f64| {
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    };
    for (i, j) in [(0, 1), (0, 3), (1, 2), (1, 4), (2, 4)] {
        add(i, j, 1.0);
    }
    add(1, 3, -k);
    l
}

#[test]
fn analyze_bundled_file() {
    let net = parse_network_str(FIG1_JSON).unwrap();
    let rep = analyze(&net, 1e-8).unwrap();
    assert_eq!(rep.summary(), "SINGULAR, corank 2, k* = 0.5, r_24 = 2");
    let cert = rep.certificate.unwrap();
    assert!((cert.critical_gain - 0.5).abs() <= 1e-9);
    assert!((cert.effective_resistance - 2.0).abs() <= 1e-9);
    // kernel ∝ (2, -3, -3, 7, -3) up to sign
    let v = DVector::from_vec(cert.kernel_vector);
    let oracle = DVector::from_vec(vec![2.0, -3.0, -3.0, 7.0, -3.0]).normalize();
    assert!((v.dot(&oracle).abs() - 1.0).abs() < 1e-10);
    // spectrum at z = 0 against an independent eigen solve
    let mut ev: Vec<f64> = fig1_laplacian(0.5).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (a, b) in rep.spectrum.iter().zip(&ev) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn kron_matches_schur_oracle() {
    let net = fixtures::fig1_with(0.3, 0.5);
    let rep = kron_network(&net, None).unwrap();
    assert_eq!(rep.nodes, 3);
    let l = fig1_laplacian(0.3);
    let lbb = l.view((0, 0), (3, 3));
    let lbc = l.view((0, 3), (3, 2));
    let lcc = l.view((3, 3), (2, 2)).into_owned();
    let oracle = lbb - lbc * lcc.try_inverse().unwrap() * lbc.transpose();
    for i in 0..3 {
        for j in 0..3 {
            assert!((rep.laplacian[i][j] - oracle[(i, j)]).abs() < 1e-12);
        }
    }
    let nonzero =
        (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| oracle[(i, j)].abs() > 1e-12).count();
    assert_eq!(rep.edges.len(), nonzero);
    for e in &rep.edges {
        assert!((e.weight + oracle[(e.from - 1, e.to - 1)]).abs() < 1e-12);
    }
}

#[test]
fn kron_without_internal_nodes_passes_through() {
    let text = r#"{"nodes": 3, "terminals": [1, 2, 3], "edges": [
        {"from": 1, "to": 2, "model": {"type": "linear", "resistance": 2}},
        {"from": 2, "to": 3, "model": {"type": "linear", "resistance": 4}},
        {"from": 1, "to": 3, "model": {"type": "linear", "resistance": 0.5}}]}"#;
    let rep = kron_network(&parse_network_str(text).unwrap(), None).unwrap();
    let w: Vec<(usize, usize, f64)> = rep.edges.iter().map(|e| (e.from, e.to, e.weight)).collect();
    assert_eq!(w, vec![(1, 2, 0.5), (1, 3, 2.0), (2, 3, 0.25)]);
}

#[test]
fn kron_at_singular_internal_block() {
    // a negative edge between the two internal nodes cancelling the resistor in parallel
    let text = r#"{"nodes": 4, "terminals": [1, 4], "edges": [
        {"from": 1, "to": 2, "model": {"type": "linear", "resistance": 1}},
        {"from": 2, "to": 3, "model": {"type": "linear", "resistance": 1}},
        {"from": 3, "to": 4, "model": {"type": "linear", "resistance": 1}},
        {"from": 2, "to": 3, "model": {"type": "cubic_negative", "gain": 1.5, "cubic": 0}}]}"#;
    let net = parse_network_str(text).unwrap();
    assert!(matches!(kron_network(&net, None).unwrap_err(), Error::SingularInternalBlock { .. }));
}

fn reduce(net: &NetworkModel) -> netsing::io::ReduceReport {
    reduce_network(net, &ReduceOptions::default()).unwrap()
}

#[test]
fn reduce_classifies_examples() {
    let r = reduce(&fixtures::fig1());
    assert_eq!(r.classification, BifurcationKind::Transcritical);
    assert_eq!(r.class_label, "transcritical");
    let d = r.deviation.unwrap();
    assert!(d.f_xx < 1e-3 && d.f_lambdax < 1e-3, "{d:?}");

    let r = reduce_network(&fixtures::fig1(), &ReduceOptions { beta: Some(0.0), ..Default::default() }).unwrap();
    assert_eq!(r.class_label, "pitchfork (supercritical)");
    assert!((r.fd.f_xxx - 4.0).abs() < 4e-3);

    assert_eq!(reduce(&fixtures::fig1_cubic(0.5, -1.0)).classification, BifurcationKind::PitchforkSubcritical);
    assert_eq!(reduce(&fixtures::fig1_cubic(0.5, 0.0)).classification, BifurcationKind::HighCodimension);
}

#[test]
fn reduce_moves_gain_to_critical_value() {
    let r = reduce(&fixtures::fig1_with(0.3, 0.5));
    assert!((r.parameter_value - 0.5).abs() < 1e-12);
    assert_eq!(r.parameter, "k");
}

#[test]
fn reduce_skips_closed_form_with_notice() {
    // a second negative edge violates the closed-form hypotheses; drive the gain of the
    // first one, tuned to the singular value by hand
    let mut text = FIG1_JSON.replace(
        r#""parameters": { "k": 0.5, "beta": 0.5 }"#,
        r#""parameters": { "k": 0.5, "beta": 0.5, "k2": 1e-3 }"#,
    );
    text = text.replace(
        r#"{ "from": 2, "to": 4,"#,
        r#"{ "from": 3, "to": 4, "model": { "type": "tanh_negative", "gain": "k2", "beta": 0 } },
    { "from": 2, "to": 4,"#,
    );
    let net = parse_network_str(&text).unwrap();
    // find the singular k by bisection on the smallest eigenvalue on 1⊥
    let smallest = |k: f64| -> f64 {
        let n = net.with_parameter("k", k).unwrap();
        let mut ev: Vec<f64> =
            n.laplacian_at(&DVector::zeros(5)).unwrap().matrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev[0] + ev[1] // one eigenvalue is zero; the other changes sign
    };
    let (mut lo, mut hi) = (0.3, 0.7);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if smallest(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let net = net.with_parameter("k", 0.5 * (lo + hi)).unwrap();
    let r = reduce_network(&net, &ReduceOptions { param_dir: Some("k".into()), ..Default::default() }).unwrap();
    assert!(r.closed_form.is_none());
    assert!(r.notice.unwrap().contains("closed form skipped"));
    assert_eq!(r.classification, BifurcationKind::Transcritical);
}

#[test]
fn csv_is_deterministic() {
    let net = fixtures::fig1();
    let req = BifurcateRequest { preset: Some(Fig2Panel::Top), ..Default::default() };
    let (_, d1) = bifurcate(&net, &req).unwrap();
    let (_, d2) = bifurcate(&net, &req).unwrap();
    let (a, b) = (diagram_csv(&d1).unwrap(), diagram_csv(&d2).unwrap());
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(lines.next().unwrap(), "branch,lambda,x,stable,z1,z2,z3,z4,z5");
    let first = lines.next().unwrap();
    let cols: Vec<&str> = first.split(',').collect();
    assert_eq!(cols.len(), 9);
    // twelve significant digits
    assert_eq!(cols[1].split('e').next().unwrap().trim_start_matches('-').len(), 13);
    // grouped by branch, ascending ids
    let ids: Vec<usize> = a.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(ids.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn bifurcate_rejects_bad_requests() {
    let net = fixtures::fig1();
    let req = BifurcateRequest {
        param: Some("k".into()),
        range: Some((0.3, 0.7)),
        currents: Some(DVector::from_vec(vec![0.1, 0.0, 0.0])),
        ..Default::default()
    };
    let err = bifurcate(&net, &req).unwrap_err();
    assert!(err.to_string().contains("boundary currents must sum to zero"));
    let req = BifurcateRequest { param: Some("k".into()), range: Some((0.7, 0.3)), ..Default::default() };
    assert!(bifurcate(&net, &req).is_err());
    let req = BifurcateRequest { param: Some("gain".into()), range: Some((0.3, 0.7)), ..Default::default() };
    assert_eq!(bifurcate(&net, &req).unwrap_err(), Error::UnknownParameter("gain".into()));
}

#[test]
fn emitted_file_is_valid_json_with_one_based_labels() {
    let text = emit_network(&fixtures::fig1());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["terminals"], serde_json::json!([1, 2, 3]));
    assert_eq!(v["edges"][5]["from"], 2);
    assert_eq!(v["edges"][5]["to"], 4);
    assert_eq!(v["edges"][5]["model"]["type"], "tanh_negative");
}
