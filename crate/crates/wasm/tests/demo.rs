use logconcave_wasm::{bounds_text, fit_1d_curve, fit_2d_cells, sample_flat};

#[test]
fn one_dimensional_fit_is_a_density_on_the_hull() {
    let xs = sample_flat("gaussian", 1, 80, 3).unwrap();
    assert_eq!(xs.len(), 80);
    let curve = fit_1d_curve(&xs, "gaussian", 401).unwrap();
    assert_eq!(curve.len(), 3 * 401);
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut mass = 0.0;
    for w in curve.chunks(3).collect::<Vec<_>>().windows(2) {
        mass += 0.5 * (w[0][1] + w[1][1]) * (w[1][0] - w[0][0]);
    }
    assert!((mass - 1.0).abs() < 0.02, "{mass}");
    for t in curve.chunks(3) {
        if t[0] < lo || t[0] > hi {
            assert_eq!(t[1], 0.0);
        }
        assert!(t[2] > 0.0);
    }
}

#[test]
fn two_dimensional_cells_cover_the_hull() {
    let xy = sample_flat("uniform", 2, 40, 5).unwrap();
    let cells = fit_2d_cells(&xy).unwrap();
    assert_eq!(cells.len() % 9, 0);
    let area: f64 = cells
        .chunks(9)
        .map(|c| 0.5 * ((c[3] - c[0]) * (c[7] - c[1]) - (c[6] - c[0]) * (c[4] - c[1])).abs())
        .sum();
    let pts: Vec<logconcave::Point> = xy.chunks(2).map(logconcave::Point::from).collect();
    let hull = logconcave::geometry::convex_hull(&pts).unwrap();
    assert!((area - hull.volume()).abs() < 1e-9 * hull.volume());
    assert!(cells.chunks(3).all(|v| v[2] > 0.0));
}

#[test]
fn errors_are_messages() {
    assert!(fit_2d_cells(&[0.0, 1.0, 2.0]).is_err());
    assert!(sample_flat("tent:x", 1, 3, 0).is_err());
    assert!(bounds_text(1, 2.0, 0.1).is_err());
    assert!(bounds_text(1, 0.1, 0.1).unwrap().contains("N1,953837\n"));
}
