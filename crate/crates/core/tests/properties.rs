use junction::complementing::{
    build_linearization, check_complementing, check_junction, default_samples, determinant_bruteforce,
    determinant_closed_form, determinant_scale, reduced_matrix, Mode, Sample, C64,
};
use junction::gevrey::{
    combo_bound_check, majorant_leq, majorant_product, vandermonde_check, ExactRational, MajorantPoly,
};
use junction::hodograph::{forward_transform, inverse_transform, max_difference, GraphFunction, LineSet, TargetGrid};
use junction::junction_config::{JunctionConfig, Side};
use junction::mcf_sim::{junction_conditions, perturbed_y, step, total_area, SolverParams};
use proptest::prelude::*;

fn slopes_strategy(q: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, m), q)
}

prop_compose! {
    fn normalized_config()(q in 3usize..=5, m in 1usize..=3, n in 1usize..=3)
        (s in 2..q, theta in prop::collection::vec(1u32..=3, q), mut slopes in slopes_strategy(q, m),
         gap in 0.05..3.0f64, base in -1.5..1.5f64, n in Just(n), m in Just(m))
        -> JunctionConfig {
        slopes[0] = vec![0.0; m];
        slopes[1] = vec![0.0; m];
        slopes[0][0] = base + gap;
        slopes[1][0] = base;
        JunctionConfig::new(n, m, s, theta, slopes).unwrap()
    }
}

fn rotate_tail(cfg: &JunctionConfig, angle: f64) -> JunctionConfig {
    // rotation in the (2nd, 3rd) slope components keeps the leading pair normalized
    let (c, s) = (angle.cos(), angle.sin());
    let slopes = cfg
        .slopes()
        .iter()
        .map(|a| {
            let mut b = a.clone();
            if a.len() >= 3 {
                b[1] = c * a[1] - s * a[2];
                b[2] = s * a[1] + c * a[2];
            } else if a.len() == 2 {
                b[1] = -a[1];
            }
            b
        })
        .collect();
    cfg.with_slopes(slopes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn determinant_nonnegative_and_oracles_agree(cfg in normalized_config()) {
        let sys = build_linearization(&cfg, None, Mode::Elliptic).unwrap();
        let d = determinant_closed_form(&sys);
        let scale = determinant_scale(&sys);
        prop_assert!(d >= -1e-12 * scale);
        prop_assert!((d - determinant_bruteforce(&sys)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn verdict_invariant_under_multiplicity_scaling(cfg in normalized_config(), factor in 2u32..=4) {
        let scaled = cfg.with_theta(cfg.theta().iter().map(|t| t * factor).collect()).unwrap();
        for mode in [Mode::Elliptic, Mode::Parabolic] {
            let a = check_junction(&cfg, None, mode).unwrap();
            let b = check_junction(&scaled, None, mode).unwrap();
            prop_assert_eq!(a.holds, b.holds);
            prop_assert_eq!(a.kernel_dim, b.kernel_dim);
            // D is homogeneous of degree 3 in θ for m >= 2 and degree 2 for m = 1
            let deg = if cfg.m() == 1 { 2 } else { 3 };
            let expected = a.d * (factor as f64).powi(deg);
            prop_assert!((b.d - expected).abs() <= 1e-9 * b.d_scale);
        }
    }

    #[test]
    fn verdict_invariant_under_slope_rotation(cfg in normalized_config(), angle in 0.0..std::f64::consts::TAU) {
        let rotated = rotate_tail(&cfg, angle);
        let a = check_junction(&cfg, None, Mode::Elliptic).unwrap();
        let b = check_junction(&rotated, None, Mode::Elliptic).unwrap();
        prop_assert_eq!(a.holds, b.holds);
        prop_assert_eq!(a.d_nonzero, b.d_nonzero);
        prop_assert!(a.d > 0.0 && b.d > 0.0);
        // D itself is a minor in a fixed tail basis; the whole reduced system is invariant
        let full = |c: &JunctionConfig| reduced_matrix(&build_linearization(c, None, Mode::Elliptic).unwrap()).determinant();
        let (fa, fb) = (full(&cfg), full(&rotated));
        prop_assert!((fa - fb).abs() <= 1e-9 * fa.abs().max(1.0), "{} vs {}", fa, fb);
    }

    #[test]
    fn verdict_independent_of_samples(cfg in normalized_config(), r in 0.1..5.0f64, phase in -1.5..1.5f64, scale in 0.2..5.0f64) {
        let sys = build_linearization(&cfg, None, Mode::Parabolic).unwrap();
        let base = check_complementing(&sys, &default_samples(&sys)).unwrap();
        let dim = cfg.n().saturating_sub(1).max(1);
        let mut xi = vec![0.0; dim];
        xi[0] = scale;
        let extra = [Sample { xi, rho: Some(C64::from_polar(r, phase)) }];
        let other = check_complementing(&sys, &extra).unwrap();
        prop_assert_eq!(base.kernel_dim, other.kernel_dim);
        prop_assert!(base.sample_independent);
    }

    #[test]
    fn boundary_balance_is_negated_balance(q in 3usize..=5, m in 1usize..=3, seed_slopes in slopes_strategy(5, 3)) {
        let slopes: Vec<Vec<f64>> = seed_slopes.iter().take(q).map(|a| a[..m].to_vec()).collect();
        let cfg = JunctionConfig::new(1, m, 2, vec![1; q], slopes.clone()).unwrap();
        let report = cfg.balance_residual();
        let boundary = cfg.boundary_balance_residual(&[], &slopes).unwrap();
        let norm = report.residual.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - report.norm).abs() <= 1e-14 * (1.0 + norm));
        for (a, b) in report.residual.iter().zip(&boundary) {
            prop_assert!((a + b).abs() <= 1e-14);
        }
    }
}

fn poly(b: u32, p: usize, q: usize, c: &[u8]) -> MajorantPoly {
    MajorantPoly::from_coeffs(b, p, q, c.iter().map(|&x| ExactRational::new(x as i64, 1)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn majorant_order_and_products(
        f in prop::collection::vec(0u8..5, 12),
        bump in prop::collection::vec(0u8..3, 12),
        h in prop::collection::vec(0u8..4, 12),
    ) {
        let (b, p, q) = (1, 2, 3);
        let f = poly(b, p, q, &f);
        let g_coeffs: Vec<u8> = (0..12).map(|i| {
            let c = f.coeff(i / 4, i % 4).to_f64() as u8;
            c + bump[i]
        }).collect();
        let g = poly(b, p, q, &g_coeffs);
        let h = poly(b, p, q, &h);
        prop_assert!(majorant_leq(&f, &f).unwrap());
        prop_assert!(majorant_leq(&f, &g).unwrap());
        // constants are excluded from the order, so compare products of series with equal constants
        let mut h1 = h.clone();
        h1.set(0, 0, ExactRational::zero()).unwrap();
        let fh = majorant_product(&f, &h1).unwrap();
        let gh = majorant_product(&g, &h1).unwrap();
        prop_assert!(majorant_leq(&fh, &gh).unwrap());
    }

    #[test]
    fn vandermonde_and_combo_bound(m in 0u32..12, n in 0u32..12, b in 1u32..=3, k in 0u32..24) {
        prop_assert!(vandermonde_check(m, n, k.min(m + n)));
        if 2 * b * m + n >= 4 {
            prop_assert!(combo_bound_check(b, m, n).unwrap().holds);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hodograph_psi_monotone_and_roundtrip(
        gap in 0.3..2.0f64,
        base in -1.0..1.0f64,
        other in -1.0..1.0f64,
        curv in -0.3..0.3f64,
        gamma in -0.5..0.5f64,
    ) {
        let h = 1.0 / 64.0;
        let nodes = 33;
        let sheet = |side: Side, f: Box<dyn Fn(f64) -> f64>| {
            GraphFunction::sample(side, LineSet::single(), h, vec![gamma], nodes, move |_, x| vec![f(x - gamma)]).unwrap()
        };
        let sheets = vec![
            sheet(Side::Plus, Box::new(move |t| (base + gap) * t + curv * t * t)),
            sheet(Side::Plus, Box::new(move |t| base * t)),
            sheet(Side::Minus, Box::new(move |t| other * t - curv * t * t)),
        ];
        let reach = 0.4 * gap * 0.5;
        let target = TargetGrid { h: h * gap, nodes: (reach / (h * gap)) as usize + 1 };
        let pair = forward_transform(&sheets, target).unwrap();
        let dpsi = pair.psi_derivative(0);
        prop_assert!(dpsi.iter().all(|&d| d > 0.0));
        prop_assert!(pair.psi[0].windows(2).all(|w| w[1] > w[0]));
        let back_grid = TargetGrid { h, nodes: 6 };
        let back = inverse_transform(&pair, back_grid, back_grid).unwrap();
        for (a, b) in sheets.iter().zip(&back) {
            let e = max_difference(a, b);
            // interpolation error of strongly curved data at h = 1/64
            prop_assert!(e < 2e-5, "{}", e);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flow_step_keeps_constraints_and_decreases_area(
        gamma in -0.1..0.1f64,
        p in -0.1..0.1f64,
        amp in 0.0..0.1f64,
    ) {
        let params = SolverParams { h: 1.0 / 32.0, dt: 2e-3, ..SolverParams::default() };
        let mut s = perturbed_y(32, gamma, p, amp);
        let mut area = f64::INFINITY;
        for n in 0..5 {
            s = step(&s, &params).unwrap();
            let bal = junction_conditions(&s).iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(bal <= params.newton_tol);
            prop_assert!(s.coincidence_error() <= params.newton_tol);
            let a = total_area(&s);
            if n > 0 {
                prop_assert!(a <= area + 10.0 * params.newton_tol);
            }
            area = a;
        }
    }
}
