use approx::assert_abs_diff_eq;
use euler_poisson_path::grid::*;
use euler_poisson_path::Error;
use proptest::prelude::*;

#[test]
fn grid_spacing_and_times() {
    let g = make_grid(2, 8, 2.0, 4).unwrap();
    assert_eq!(g.num_nodes(), 64);
    assert_abs_diff_eq!(g.h(), 0.125);
    assert_abs_diff_eq!(g.cell_volume(), 0.015625);
    assert_abs_diff_eq!(g.dt(), 0.5);
    assert_eq!(g.kick_times(), vec![0.5, 1.0, 1.5]);
    assert_abs_diff_eq!(g.time(4), 2.0);
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(matches!(make_grid(0, 8, 1.0, 4), Err(Error::InvalidGrid(_))));
    assert!(matches!(make_grid(4, 200, 1.0, 4), Err(Error::InvalidGrid(_))));
    assert!(matches!(make_grid(1, 1, 1.0, 4), Err(Error::InvalidGrid(_))));
    assert!(matches!(make_grid(1, 8, 0.0, 4), Err(Error::InvalidGrid(_))));
    assert!(matches!(make_grid(1, 8, 1.0, 1), Err(Error::InvalidGrid(_))));
}

#[test]
fn row_major_indexing_with_axis_zero_slowest() {
    let g = make_grid(2, 4, 1.0, 2).unwrap();
    assert_eq!(g.multi_index(6), vec![1, 2]);
    assert_eq!(g.flat_index(&[1, 2]), 6);
    assert_eq!(g.flat_index(&[-1, 5]), g.flat_index(&[3, 1]));
    assert_eq!(g.coords(6), vec![0.25, 0.5]);
}

#[test]
fn uniform_density_integrates_to_one() {
    let g = make_grid(3, 4, 1.0, 2).unwrap();
    let u = DensityField::uniform(g);
    assert_abs_diff_eq!(integrate(u.as_scalar()), 1.0, epsilon = 1e-15);
}

#[test]
fn density_constructor_checks_mass_and_sign() {
    let g = make_grid(1, 4, 1.0, 2).unwrap();
    assert!(matches!(DensityField::from_values(g, vec![1.0, 1.0, -0.5, 2.5]), Err(Error::NegativeDensity { node: 2, .. })));
    assert!(DensityField::from_values(g, vec![2.0; 4]).is_err());
    assert!(matches!(DensityField::from_values(g, vec![1.0; 3]), Err(Error::SizeMismatch { expected: 4, got: 3 })));
    let z = ScalarField::zeros(g);
    assert!(matches!(normalize_density(&z), Err(Error::ZeroMass)));
}

#[test]
fn normalization_scales_to_unit_mass() {
    let g = make_grid(1, 4, 1.0, 2).unwrap();
    let f = ScalarField::new(g, vec![1.0, 2.0, 3.0, 2.0]).unwrap();
    let d = normalize_density(&f).unwrap();
    assert_abs_diff_eq!(integrate(d.as_scalar()), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(d.values()[2] / d.values()[0], 3.0, epsilon = 1e-14);
}

#[test]
fn shifting_a_field_is_cyclic() {
    let g = make_grid(1, 4, 1.0, 2).unwrap();
    let f = ScalarField::new(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    assert_eq!(f.shifted(0, 1).values, vec![3.0, 0.0, 1.0, 2.0]);
    assert_abs_diff_eq!(f.osc(), 3.0);
    assert_abs_diff_eq!(f.max_abs(), 3.0);
}

#[test]
fn trapezoid_quadrature_is_spectrally_accurate_for_trig_polynomials() {
    let g = make_grid(2, 16, 1.0, 2).unwrap();
    let f = ScalarField::from_fn(g, |x| (2.0 * std::f64::consts::PI * (3.0 * x[0] + x[1])).cos().powi(2));
    assert_abs_diff_eq!(integrate(&f), 0.5, epsilon = 1e-14);
}

proptest! {
    #[test]
    fn periodic_diff_lies_in_half_open_interval(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let d = periodic_diff(a, b);
        prop_assert!((-0.5..0.5).contains(&d));
        let k = a - b - d;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn flat_index_inverts_multi_index(k in 0usize..125) {
        let g = make_grid(3, 5, 1.0, 2).unwrap();
        let idx: Vec<i64> = g.multi_index(k).into_iter().map(|i| i as i64).collect();
        prop_assert_eq!(g.flat_index(&idx), k);
    }
}
