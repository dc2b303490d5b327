use std::f64::consts::PI;

use glory_core::dynamics::{
    galerkin_tensor, integrate, rhs, rhs_oracle, ForcingSpec, GalerkinTensor, Integrator,
    ModelParams, ProbeSchedule, PseudoSpectral, Scheme, Stepper, StepperConfig, TensorOracle,
};
use glory_core::spectral::random::random_admissible;
use glory_core::spectral::{mode_set, ModeIndex, SpectralField, Truncation};
use glory_core::Error;

fn m(l1: i32, l2: i32) -> ModeIndex {
    ModeIndex::new(l1, l2).unwrap()
}

type Mode = (i32, i32);

/// Every nonzero `⟨B(e_j, e_k), e_ℓ⟩₂` at `n1 = n2 = 2`, from exact symbolic
/// integration, in units of `1/(15π²)`.
const SYMBOLIC_N2: &[(Mode, Mode, Mode, f64)] = &[
    ((-2, 2), (0, 1), (2, 2), -32.0),
    ((-2, 2), (2, 2), (0, 1), 32.0),
    ((-1, 2), (0, 1), (1, 2), -16.0),
    ((-1, 2), (1, 2), (0, 1), 16.0),
    ((0, 1), (-2, 2), (2, 2), 64.0),
    ((0, 1), (-1, 2), (1, 2), 32.0),
    ((0, 1), (1, 2), (-1, 2), -32.0),
    ((0, 1), (2, 2), (-2, 2), -64.0),
    ((1, 2), (-1, 2), (0, 1), -16.0),
    ((1, 2), (0, 1), (-1, 2), 16.0),
    ((2, 2), (-2, 2), (0, 1), -32.0),
    ((2, 2), (0, 1), (-2, 2), 32.0),
];

#[test]
fn tensor_matches_symbolic_integrals() {
    let t = Truncation::new(2, 2).unwrap();
    let tensor = galerkin_tensor(t).unwrap();
    let modes = tensor.modes().to_vec();
    assert_eq!(modes, mode_set(&t));
    let pos = |mode: (i32, i32)| modes.iter().position(|x| *x == m(mode.0, mode.1)).unwrap();
    let unit = 1.0 / (15.0 * PI * PI);
    let mut expected = vec![0.0; modes.len().pow(3)];
    let n = modes.len();
    for &(j, k, l, v) in SYMBOLIC_N2 {
        expected[(pos(j) * n + pos(k)) * n + pos(l)] = v * unit;
    }
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let want = expected[(j * n + k) * n + l];
                assert!(
                    (tensor.get(j, k, l) - want).abs() < 1e-14,
                    "T[{:?},{:?},{:?}] = {} vs {}",
                    modes[j],
                    modes[k],
                    modes[l],
                    tensor.get(j, k, l),
                    want
                );
            }
            assert!(tensor.v_entry(j, k).abs() < 1e-14);
        }
    }
}

#[test]
fn tensor_structure() {
    let t = Truncation::new(4, 4).unwrap();
    let tensor = galerkin_tensor(t).unwrap();
    let n = tensor.len();
    let first = tensor.modes().iter().position(|x| *x == m(0, 1)).unwrap();
    for l in 0..n {
        assert_eq!(tensor.get(first, first, l), 0.0);
    }
    // ⟨B(e_j, e_k), e_k⟩ = 0 for every pair.
    for j in 0..n {
        for k in 0..n {
            assert!(tensor.get(j, k, k).abs() < 1e-14);
        }
    }
    assert!(matches!(
        GalerkinTensor::build_with_cap(t, 10),
        Err(Error::Config(_))
    ));
}

#[test]
fn tensor_rhs_matches_pseudo_spectral() {
    let t = Truncation::new(4, 4).unwrap();
    let tensor = galerkin_tensor(t).unwrap();
    let ps = PseudoSpectral::new(t);
    let p = ModelParams::new(0.7, 0.3, 0.25).unwrap();
    let k = random_admissible(t, 99, 0, 0.1);
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let u = random_admissible(t, seed, 0, 1.0 + seed as f64 / 4.0);
        let a = rhs(&ps, &u, Some(&k), &p).unwrap();
        let b = rhs_oracle(&u, Some(&k), &p, &tensor).unwrap();
        worst = worst.max((&a - &b).max_abs());
    }
    assert!(worst <= 1e-12, "max discrepancy {worst:e}");
    let zero = SpectralField::zeros(t);
    assert_eq!(rhs_oracle(&zero, Some(&k), &p, &tensor).unwrap(), k);
}

#[test]
fn euler_step_hand_value() {
    let t = Truncation::new(2, 2).unwrap();
    let ps = PseudoSpectral::new(t);
    let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
    let cfg = StepperConfig::new(Scheme::ImexEuler, 0.1, 0.1).unwrap();
    let f = ForcingSpec::Zero;
    let stepper = Stepper::new(&ps, cfg, p, &f).unwrap();
    let u = SpectralField::from_modes(t, &[(m(0, 1), PI)]).unwrap();
    let next = stepper.step(&u, 0.0, &mut None).unwrap();
    assert!((next.get(m(0, 1)) - PI / 1.1).abs() < 1e-15);
}

#[test]
fn linear_subspace_orders() {
    let t = Truncation::new(2, 4).unwrap();
    let u0 = SpectralField::from_modes(t, &[(m(0, 1), 1.0), (m(0, 3), 0.5)]).unwrap();
    let p = ModelParams::new(0.5, 0.2, 0.0).unwrap();
    let exact = |l2: i32, c0: f64, time: f64| c0 * ((p.alpha - p.mu * (l2 * l2) as f64) * time).exp();
    for (scheme, order) in [(Scheme::ImexEuler, 1.0), (Scheme::Cnab2, 2.0)] {
        let err = |dt: f64| {
            let cfg = StepperConfig::new(scheme, dt, 1.0).unwrap();
            let ps = PseudoSpectral::new(t);
            let f = ForcingSpec::Zero;
            let mut it = Integrator::new(&ps, cfg, p, &f, ProbeSchedule::every(1000), u0.clone())
                .unwrap();
            it.run_until(u64::MAX).unwrap();
            let u = it.state().u.clone();
            (u.get(m(0, 1)) - exact(1, 1.0, 1.0))
                .abs()
                .max((u.get(m(0, 3)) - exact(3, 0.5, 1.0)).abs())
        };
        let (e1, e2) = (err(0.02), err(0.01));
        let observed = (e1 / e2).log2();
        assert!((observed - order).abs() < 0.15, "{scheme:?}: {observed}");
    }
}

#[test]
fn diffusion_is_unconditionally_stable() {
    let t = Truncation::new(6, 6).unwrap();
    let ps = PseudoSpectral::new(t);
    let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
    let f = ForcingSpec::Zero;
    for scheme in [Scheme::ImexEuler, Scheme::Cnab2] {
        for dt in [1e-3, 0.1, 10.0, 1e3] {
            let cfg = StepperConfig::new(scheme, dt, 20.0 * dt).unwrap();
            let stepper = Stepper::new(&ps, cfg, p, &f).unwrap();
            // x1-independent data: B vanishes and only diffusion acts.
            let mut u = random_admissible(t, 4, 0, 3.0).map_modes(|m| (m.l1 == 0) as i32 as f64);
            assert!(u.norm_sq() > 0.0);
            let mut prev = None;
            for n in 0..20 {
                let next = stepper.step(&u, n as f64 * dt, &mut prev).unwrap();
                assert!(next.norm_sq() <= u.norm_sq() * (1.0 + 1e-15));
                u = next;
            }
        }
    }
}

#[test]
fn zero_length_run_has_one_sample() {
    let t = Truncation::new(2, 2).unwrap();
    let u0 = random_admissible(t, 1, 0, 1.0);
    let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
    let cfg = StepperConfig::new(Scheme::Cnab2, 0.01, 0.0).unwrap();
    let rec = integrate(&u0, cfg, p, &ForcingSpec::Zero, ProbeSchedule::default()).unwrap();
    assert_eq!(rec.samples.len(), 1);
    assert_eq!(rec.samples[0].t, 0.0);
    assert_eq!(rec.samples[0].energy_residual, None);
}

#[test]
fn divergence_carries_partial_record() {
    let t = Truncation::new(1, 2).unwrap();
    let u0 = SpectralField::from_modes(t, &[(m(0, 1), PI)]).unwrap();
    let p = ModelParams::new(1.0, 20.0, 0.0).unwrap();
    let cfg = StepperConfig::new(Scheme::Cnab2, 0.01, 10.0).unwrap();
    match integrate(&u0, cfg, p, &ForcingSpec::Zero, ProbeSchedule::every(10)) {
        Err(Error::Divergence { time, record }) => {
            // ‖u‖ = π·e^{19t} crosses 1e12 near t ≈ 1.39.
            assert!((time - (1e12f64 / PI).ln() / 19.0).abs() < 0.05, "{time}");
            assert_eq!(record.diverged_at, Some(time));
            assert!(record.samples.len() > 10);
            assert!(record.samples.last().unwrap().l2_norm_sq.sqrt() <= 1e12);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn energy_residual_is_small_on_nonlinear_run() {
    let t = Truncation::new(6, 6).unwrap();
    let u0 = random_admissible(t, 8, 0, 2.0);
    let p = ModelParams::new(1.0, 0.0, 0.25).unwrap();
    let k = random_admissible(t, 8, 1, 0.5);
    let f = ForcingSpec::constant(k).unwrap();
    let worst = |dt: f64| {
        let cfg = StepperConfig::new(Scheme::Cnab2, dt, 0.5).unwrap();
        let rec = integrate(&u0, cfg, p, &f, ProbeSchedule::every((0.05 / dt) as u64)).unwrap();
        rec.samples[1..rec.samples.len() - 1]
            .iter()
            .map(|s| s.energy_residual.unwrap().abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = (worst(0.01), worst(0.005));
    assert!(a < 1e-3, "{a}");
    assert!((a / b).log2() > 1.8, "{a} {b}");
}

#[test]
fn oracle_and_pseudo_spectral_trajectories_agree() {
    let t = Truncation::new(4, 4).unwrap();
    let tensor = galerkin_tensor(t).unwrap();
    let oracle = TensorOracle::new(tensor);
    let ps = PseudoSpectral::new(t);
    let p = ModelParams::new(1.0, 0.0, 0.25).unwrap();
    let f = ForcingSpec::Zero;
    let cfg = StepperConfig::new(Scheme::Cnab2, 1e-2, 1.0).unwrap();
    let u0 = random_admissible(t, 3, 0, 2.0);
    let run = |terms: &dyn glory_core::dynamics::ExplicitTerms| {
        let mut it = Integrator::new(terms, cfg, p, &f, ProbeSchedule::every(10), u0.clone()).unwrap();
        it.run_until(u64::MAX).unwrap();
        it.state().u.clone()
    };
    let (a, b) = (run(&ps), run(&oracle));
    assert!((&a - &b).max_abs() < 1e-12);
}
