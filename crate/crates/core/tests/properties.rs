use grasshopper::annealer::{anneal, greedy_descent, AnnealSchedule};
use grasshopper::analysis::{planar_stripe_derivative, planar_stripe_success};
use grasshopper::cogs::{build_cogged_lawn, jump_circle_region_arcs};
use grasshopper::geom;
use grasshopper::grid::{generate_goldberg, generate_healpix};
use grasshopper::interaction::{build_shell_table, kernel_phi, resolvable_range};
use grasshopper::lawn::{
    delta_probability, evaluate_probability, new_random_lawn, read_lawn, write_lawn, SetupKind,
};
use grasshopper::spectral::{sph_transform, spectral_probability};
use grasshopper::SphericalGrid;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;

const SETUPS: [SetupKind; 3] = [
    SetupKind::AntipodalOneLawn,
    SetupKind::NonAntipodalOneLawn,
    SetupKind::AntipodalTwoLawn,
];

fn small_grid() -> &'static SphericalGrid {
    static GRID: OnceLock<SphericalGrid> = OnceLock::new();
    GRID.get_or_init(|| generate_healpix(6).unwrap())
}

fn check_grid(g: &SphericalGrid) -> Result<(), TestCaseError> {
    let n = g.n_sites() as f64;
    prop_assert!((g.spacing().powi(2) * n - 4.0 * PI).abs() < 1e-12);
    for p in g.points() {
        prop_assert!((geom::norm(p) - 1.0).abs() < 1e-12);
    }
    let map = g.antipodes().expect("paired grid");
    for i in 0..g.n_sites() {
        let j = map.partner(i);
        prop_assert!(j != i && map.partner(j) == i);
        prop_assert!(geom::norm(&geom::add(g.point(i), g.point(j))) < 1e-12);
    }
    prop_assert!(g.min_pair_angle() > 0.0);
    Ok(())
}

/// An angle inside the grid's resolvable range, from a unit fraction.
fn resolvable(g: &SphericalGrid, frac: f64) -> f64 {
    let (lo, hi) = resolvable_range(g, true);
    lo + (hi - lo) * frac
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn healpix_grids_are_unit_and_paired(n_side in 1usize..12) {
        check_grid(&generate_healpix(n_side).unwrap())?;
    }

    #[test]
    fn goldberg_grids_are_unit_and_paired(f in 1usize..10) {
        check_grid(&generate_goldberg(f).unwrap())?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kernel_is_even_and_bounded(x in -4.0f64..4.0) {
        prop_assert_eq!(kernel_phi(x), kernel_phi(-x));
        prop_assert!((0.0..=0.5).contains(&kernel_phi(x)));
    }

    #[test]
    fn planar_success_is_a_probability(r in 1e-3f64..50.0) {
        let u = planar_stripe_success(r);
        prop_assert!((0.0..=2.0 / 3.0 + 1e-12).contains(&u));
        let fd = (planar_stripe_success(r + 1e-7) - planar_stripe_success(r - 1e-7)) / 2e-7;
        // finite differences straddle a kink only where r sinφ = 1 at φ = π/2
        if (r - r.round()).abs() > 1e-4 {
            prop_assert!((fd - planar_stripe_derivative(r)).abs() < 1e-5, "r={} fd={} d={}", r, fd, planar_stripe_derivative(r));
        }
    }

    #[test]
    fn jump_circle_fractions_sum_to_one(
        q in 2usize..7,
        half_k in 1usize..7,
        height in 0.0f64..1.2,
        polar in 0.0f64..PI,
        azimuth in 0.0f64..(2.0 * PI),
        theta in 0.01f64..(PI - 0.01),
    ) {
        let spec = build_cogged_lawn(q, 2 * half_k + 1, height).unwrap();
        let a = jump_circle_region_arcs(&geom::from_polar(polar, azimuth), theta, &spec).unwrap();
        let total = a.north + a.south + a.slots.iter().sum::<f64>();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(a.north >= 0.0 && a.south >= 0.0 && a.slots.iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn jump_circle_fractions_repeat_with_the_period(
        half_k in 1usize..7,
        height in 0.0f64..1.0,
        polar in 0.0f64..PI,
        azimuth in 0.0f64..(2.0 * PI),
        theta in 0.05f64..(PI - 0.05),
    ) {
        let k = 2 * half_k + 1;
        let spec = build_cogged_lawn(3, k, height).unwrap();
        let p = geom::from_polar(polar, azimuth);
        let r = geom::rotate(&p, &[0.0, 0.0, 1.0], 2.0 * PI / k as f64);
        let a = jump_circle_region_arcs(&p, theta, &spec).unwrap();
        let b = jump_circle_region_arcs(&r, theta, &spec).unwrap();
        prop_assert!((a.north - b.north).abs() < 1e-10);
        prop_assert!((a.south - b.south).abs() < 1e-10);
        for s in 0..2 * k {
            // slot s moves to s + 2 under one period
            prop_assert!((a.slots[s] - b.slots[(s + 2) % (2 * k)]).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moves_keep_constraints_and_deltas_compose(
        setup in 0usize..3,
        seed in any::<u64>(),
        frac in 0.0f64..1.0,
        steps in 1usize..300,
    ) {
        let g = small_grid();
        let theta = resolvable(g, frac);
        let shells = build_shell_table(g, theta).unwrap();
        let mut state = new_random_lawn(g, SETUPS[setup], seed).unwrap();
        let start = evaluate_probability(&state, &shells).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut sum = 0.0;
        for _ in 0..steps {
            let mv = state.random_move(&mut rng);
            sum += delta_probability(&state, &mv, &shells).unwrap();
            state.apply_move(&mv).unwrap();
        }
        prop_assert!(state.validate().is_ok());
        prop_assert_eq!(state.area1() * 2, state.n_sites());
        let end = evaluate_probability(&state, &shells).unwrap();
        prop_assert!((start + sum - end).abs() < 1e-9);
    }

    #[test]
    fn lawn_files_round_trip(setup in 0usize..3, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let g = small_grid();
        let theta = resolvable(g, frac);
        let state = new_random_lawn(g, SETUPS[setup], seed).unwrap();
        let shells = build_shell_table(g, theta).unwrap();
        let text = write_lawn(&state, theta, "", None);
        let (back, header, _) = read_lawn(&text, g).unwrap();
        prop_assert_eq!(back.spins1(), state.spins1());
        prop_assert_eq!(back.spins2(), state.spins2());
        prop_assert_eq!(header.theta.to_bits(), theta.to_bits());
        prop_assert_eq!(
            evaluate_probability(&back, &shells).unwrap().to_bits(),
            evaluate_probability(&state, &shells).unwrap().to_bits()
        );
    }

    #[test]
    fn spectra_are_conjugate_symmetric_and_antipodal_sums_are_one(
        two in any::<bool>(),
        seed in any::<u64>(),
        theta in 0.05f64..(PI - 0.05),
    ) {
        let g = small_grid();
        let setup = if two { SetupKind::AntipodalTwoLawn } else { SetupKind::AntipodalOneLawn };
        let state = new_random_lawn(g, setup, seed).unwrap();
        let s1 = sph_transform(&state, g, 1, 12).unwrap();
        let s2 = sph_transform(&state, g, 2, 12).unwrap();
        for l in 0..=12usize {
            for m in 1..=l as i64 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert!((s1.coefficient(l, -m) - s1.coefficient(l, m).conj() * sign).norm() < 1e-10);
            }
        }
        let a = spectral_probability(&s1, &s2, theta, setup).unwrap();
        let b = spectral_probability(&s1, &s2, PI - theta, setup).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn annealing_best_never_drops_and_greedy_never_loses(
        setup in 0usize..3,
        seed in any::<u64>(),
        frac in 0.0f64..1.0,
    ) {
        let g = small_grid();
        let theta = resolvable(g, frac);
        let shells = build_shell_table(g, theta).unwrap();
        let start = new_random_lawn(g, SETUPS[setup], seed).unwrap();
        let schedule = AnnealSchedule { max_sweeps: Some(150), ..AnnealSchedule::with_seed(seed) };
        let r = anneal(start, &shells, &schedule).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1].best_p >= w[0].best_p));
        prop_assert!(r.best_state.validate().is_ok());
        let best = r.best_probability;
        let gr = greedy_descent(r.best_state, &shells, seed).unwrap();
        prop_assert!(gr.best_probability >= best - 1e-12);
        prop_assert!(gr.best_state.validate().is_ok());
    }
}
