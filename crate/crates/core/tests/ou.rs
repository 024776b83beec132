use antieig_core::linalg::{expm_skew, ComplexMatrix, Lu, RealMatrix, C64};
use antieig_core::ou::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rotation(omega: f64) -> RealMatrix {
    RealMatrix::new(2, 2, vec![0.0, -omega, omega, 0.0]).unwrap()
}

fn scalar(a: C64, b: C64, omega: f64) -> OuSpec {
    OuSpec::new(ComplexMatrix::from_diagonal(&[a]), ComplexMatrix::from_diagonal(&[b]), rotation(omega), 2).unwrap()
}

fn pair() -> OuSpec {
    let v = ComplexMatrix::from_rows(&[vec![c(1., 0.), c(0.5, 0.5)], vec![c(0.2, 0.), c(1., -0.3)]]).unwrap();
    let vi = Lu::factor(&v).unwrap().inverse();
    let a = v.matmul(&ComplexMatrix::from_diagonal(&[c(1., 0.5), c(0.7, 0.)])).matmul(&vi);
    let b = v.matmul(&ComplexMatrix::from_diagonal(&[c(0.3, 0.), c(-0.2, 1.)])).matmul(&vi);
    OuSpec::new(a, b, rotation(0.8), 2).unwrap()
}

fn gaussian(center: [f64; 2], width: f64) -> impl Fn(&[f64]) -> f64 {
    move |x| libm::exp(-((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (2.0 * width * width))
}

/// Heat flow of a Gaussian stays Gaussian: variance w² grows to w² + 2t
/// and the amplitude drops by w²/(w² + 2t) in two dimensions. The drift
/// only moves the evaluation point to e^{tS}x.
#[test]
fn rotated_gaussian_convolution() {
    let spec = scalar(c(1., 0.), c(0., 0.), 1.0);
    let grid = GridSpec::default_for(2).unwrap();
    let (center, w, t) = ([1.0, 0.5], 1.0, 0.6);
    let g = gaussian(center, w);
    let field = GridField::from_fn(grid, 1, |x| vec![c(g(x), 0.0)]).unwrap();
    let out = apply_semigroup(&spec, &field, t).unwrap();
    let q = expm_skew(spec.s(), t).unwrap();
    let spread = w * w + 2.0 * t;
    let mut worst: f64 = 0.0;
    for p in 0..grid.len() {
        let y = q.mul_vec(&grid.point(p));
        let expected = (w * w / spread) * libm::exp(-((y[0] - center[0]).powi(2) + (y[1] - center[1]).powi(2)) / (2.0 * spread));
        worst = worst.max((out.value(p)[0] - c(expected, 0.0)).norm());
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn constants_are_preserved_without_potential() {
    let spec = OuSpec::new(
        ComplexMatrix::from_diagonal(&[c(1., 0.2), c(0.5, 0.)]),
        ComplexMatrix::zeros(2, 2),
        rotation(0.5),
        2,
    )
    .unwrap();
    let grid = GridSpec::default_for(2).unwrap();
    let value = [c(1.0, -2.0), c(0.5, 0.0)];
    let field = GridField::from_fn(grid, 2, |_| value.to_vec()).unwrap();
    let out = apply_semigroup(&spec, &field, 0.5).unwrap();
    for p in 0..grid.len() {
        let x = grid.point(p);
        if x.iter().all(|v| v.abs() <= 6.0) {
            for (got, want) in out.value(p).iter().zip(&value) {
                assert!((got - want).norm() < 1e-8);
            }
        }
    }
}

#[test]
fn semigroup_law_on_default_grid() {
    let spec = pair();
    let grid = GridSpec::default_for(2).unwrap();
    let (g1, g2) = (gaussian([0.5, -0.5], 1.2), gaussian([-1.0, 0.0], 0.9));
    let field = GridField::from_fn(grid, 2, |x| vec![c(g1(x), 0.3 * g2(x)), c(g2(x), 0.0)]).unwrap();
    let (t, s) = (0.3, 0.5);
    let stepwise = apply_semigroup(&spec, &apply_semigroup(&spec, &field, s).unwrap(), t).unwrap();
    let direct = apply_semigroup(&spec, &field, t + s).unwrap();
    assert!(stepwise.max_distance(&direct) < 1e-4);
}

#[test]
fn kernel_is_rotation_invariant() {
    let spec = pair();
    let q = expm_skew(spec.s(), 0.37).unwrap();
    let (x, xi) = ([0.4, -1.2], [1.0, 0.3]);
    for &t in &[0.2, 1.0, 3.5] {
        let h = kernel_eval(&spec, &x, &xi, t).unwrap();
        let hq = kernel_eval(&spec, &q.mul_vec(&x), &q.mul_vec(&xi), t).unwrap();
        assert!(h.sub(&hq).max_abs() < 1e-13);
    }
}

#[test]
fn chapman_kolmogorov() {
    let heat = scalar(c(1., 0.), c(0., 0.), 0.0);
    let grid = GridSpec::default_for(2).unwrap();
    let rep = chapman_check(&heat, 0.3, 0.5, &grid, 8, 11).unwrap();
    assert!(rep.deviation.unwrap() < 1e-6);
    let rep = chapman_check(&pair(), 0.4, 0.25, &grid, 8, 11).unwrap();
    assert!(rep.deviation.unwrap() < 1e-4, "{:?}", rep);
    let rep = chapman_check(&heat, 5e-4, 0.5, &grid, 8, 11).unwrap();
    assert_eq!(rep.deviation, None);
}

#[test]
fn mass_deviation_shrinks_under_refinement() {
    let spec = pair();
    let coarse = GridSpec::new(2, 29, 16.0).unwrap();
    let (dev_coarse, dev_fine) = mass_refinement(&spec, &[0.5, -1.0], 0.25, &coarse).unwrap();
    assert!(dev_coarse > 1e-10, "coarse grid already at the rounding floor: {dev_coarse}");
    assert!(dev_fine * 4.0 <= dev_coarse, "{dev_coarse} -> {dev_fine}");
}

/// `(λ − Δ)v = g` on the Fourier side: `v̂ = ĝ/(λ + |k|²)`. For
/// `g = exp(−|x − c|²/(2w²))` in two dimensions, Parseval and polar
/// coordinates reduce `‖v‖₂/‖g‖₂` to `w²∫_0^∞ e^{−w²u}/(λ + u)² du`.
fn fourier_ratio(lambda: f64, w: f64) -> f64 {
    let upper = 60.0 / (w * w);
    let m = 200_000;
    let h = upper / m as f64;
    let f = |u: f64| libm::exp(-w * w * u) / ((lambda + u) * (lambda + u));
    let mut s = f(0.0) + f(upper);
    for k in 1..m {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    libm::sqrt(w * w * s * h / 3.0)
}

#[test]
fn resolvent_matches_fourier_oracle() {
    let spec = scalar(c(1., 0.), c(0., 0.), 0.0);
    let grid = GridSpec::default_for(2).unwrap();
    let g = gaussian([0.5, 0.0], 1.0);
    let field = GridField::from_fn(grid, 1, |x| vec![c(g(x), 0.0)]).unwrap();
    let t_max = default_t_max(1.0);
    let rep = resolvent_probe(&spec, c(1., 0.), &field, 2.0, t_max, default_n_time(t_max)).unwrap();
    let oracle = fourier_ratio(1.0, 1.0);
    assert!((rep.ratio - oracle).abs() < 1e-4 * oracle, "{} vs {oracle}", rep.ratio);
    assert!(rep.ratio <= rep.bound);
    assert_eq!(rep.bound, 1.0);
}

#[test]
fn potential_shifts_admissible_half_plane() {
    let spec = scalar(c(1., 0.), c(1., 0.5), 0.0);
    assert_eq!(spec.beta_b(), -1.0);
    let grid = GridSpec::default_for(2).unwrap();
    let g = gaussian([0.0, 0.0], 1.0);
    let field = GridField::from_fn(grid, 1, |x| vec![c(g(x), 0.0)]).unwrap();
    // λ = 0 is admissible only because β_B = −1 shifts the half-plane
    let t_max = default_t_max(1.0);
    let rep = resolvent_probe(&spec, c(0.0, 0.0), &field, 2.0, t_max, default_n_time(t_max)).unwrap();
    assert!((rep.bound - 1.0).abs() < 1e-15);
    assert!(rep.ratio <= rep.bound);
    let err = resolvent_probe(&spec, c(-1.0, 0.0), &field, 2.0, 50.0, 12).unwrap_err();
    assert!(matches!(err, antieig_core::Error::Input(_)));
}

#[test]
fn resolvent_rejects_short_horizon_and_odd_steps() {
    let spec = scalar(c(1., 0.), c(0., 0.), 0.0);
    let grid = GridSpec::new(2, 17, 8.0).unwrap();
    let field = GridField::from_fn(grid, 1, |x| vec![c(gaussian([0.0, 0.0], 1.0)(x), 0.0)]).unwrap();
    assert!(resolvent_probe(&spec, c(1., 0.), &field, 2.0, 5.0, 10).is_err());
    assert!(resolvent_probe(&spec, c(1., 0.), &field, 2.0, 14.0, 11).is_err());
}
