use npe_core::coupling::Simulation;
use npe_core::heat_kernel::heat_semigroup;
use npe_core::verification::ManufacturedCase;

#[test]
fn pure_diffusion_tracks_the_heat_semigroup() {
    let case = ManufacturedCase::pure_diffusion();
    let sim = Simulation::new(case.config(65).unwrap()).unwrap();
    let (mut s, _) = sim.initial_state().unwrap();
    let expected = heat_semigroup(&s.c[0], 0.005).unwrap();
    for _ in 0..20 {
        s = sim.step_with(&s, 0.00025, Some(&case)).unwrap().0;
    }
    assert!((s.t - 0.005).abs() < 1e-15);
    let err = s.c[0].max_diff(&expected);
    assert!(err < 1e-3, "error {err:e}");
}

#[test]
fn zero_forcing_matches_the_unforced_step() {
    let case = ManufacturedCase::static_neutral();
    let sim = Simulation::new(case.config(17).unwrap()).unwrap();
    let (s, _) = sim.initial_state().unwrap();
    let (forced, _) = sim.step_with(&s, 0.01, Some(&case)).unwrap();
    let (plain, _) = sim.step(&s, 0.01).unwrap();
    for (a, b) in forced.c.iter().zip(&plain.c) {
        assert_eq!(a.values(), b.values());
    }
    assert_eq!(forced.vorticity.omega.values(), plain.vorticity.omega.values());
}
