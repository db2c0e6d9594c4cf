use nalgebra::DMatrix;
use proptest::prelude::*;
use spectral_shift::models::geometric_schedule;
use spectral_shift::properties::{run_property_suites, SUITES};
use spectral_shift::sweep::{check_schedule, fit_rate};
use spectral_shift::CsrMatrix;

#[test]
fn all_property_suites_hold_on_random_instances() {
    let outcomes = run_property_suites(2024, 100).unwrap();
    assert_eq!(outcomes.len(), SUITES.len());
    for o in &outcomes {
        assert_eq!(o.instances, 100);
        assert!(o.pass(), "{} failed {} times (worst {:e})", o.name, o.failures, o.worst);
    }
}

proptest! {
    #[test]
    fn rate_fit_is_exact_on_power_laws(p in 0.5f64..3.0, c in 0.1f64..10.0, start in 1e-3f64..1.0) {
        let xs = geometric_schedule(start, 0.5, 6);
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(p)).collect();
        prop_assume!(ys.iter().all(|y| *y >= 1e-7));
        let f = fit_rate(&xs, &ys).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-9);
        prop_assert!((f.log_intercept - c.ln()).abs() < 1e-8);
    }

    #[test]
    fn geometric_schedules_are_admissible(start in 1e-6f64..1.0, ratio in 0.05f64..0.95, count in 1usize..12) {
        prop_assert!(check_schedule(&geometric_schedule(start, ratio, count)).is_ok());
    }

    #[test]
    fn coordinate_text_round_trip(entries in proptest::collection::vec(-1e3f64..1e3, 36), keep in proptest::collection::vec(any::<bool>(), 36)) {
        let m = DMatrix::from_fn(6, 6, |i, j| if keep[6 * i + j] { entries[6 * i + j] } else { 0.0 });
        let a = CsrMatrix::from_dense(&m);
        let back = CsrMatrix::from_coordinate_text(&a.to_coordinate_text()).unwrap();
        prop_assert_eq!(back.to_dense(), m);
    }
}
