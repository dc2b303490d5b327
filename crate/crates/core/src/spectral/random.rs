//! Seeded random fields for initial data and randomized property suites.
//!
//! Each field draws from its own ChaCha stream `(seed, stream)`, so suites can
//! be split across threads without changing any sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ModeIndex, SpectralField, Truncation};

/// Generator for stream `stream` of `seed`.
pub fn field_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard-normal coefficients on the admissible modes, damped by `1/|ℓ|³`.
/// Inadmissible slots stay zero.
pub fn smooth_admissible(trunc: Truncation, rng: &mut ChaCha8Rng) -> SpectralField {
    draw(trunc, rng, ModeIndex::is_admissible)
}

/// Same distribution over every slot, admissible or not; for inequalities
/// stated on all of `L₂`.
pub fn smooth_unconstrained(trunc: Truncation, rng: &mut ChaCha8Rng) -> SpectralField {
    draw(trunc, rng, |_| true)
}

fn draw(
    trunc: Truncation,
    rng: &mut ChaCha8Rng,
    keep: impl Fn(&ModeIndex) -> bool,
) -> SpectralField {
    let mut u = SpectralField::zeros(trunc);
    let modes: Vec<ModeIndex> = trunc.all_modes().collect();
    for (slot, mode) in u.coeffs_mut().iter_mut().zip(modes) {
        // Draw for every slot so the sequence does not depend on `keep`.
        let z: f64 = StandardNormal.sample(rng);
        if keep(&mode) {
            *slot = z / mode.eigenvalue().powf(1.5);
        }
    }
    u
}

/// Rescale `u` so that `‖∇u‖₂ = target`. A zero field stays zero.
pub fn rescale_to_grad_norm(u: &SpectralField, target: f64) -> SpectralField {
    let grad = u
        .iter()
        .map(|(m, c)| m.eigenvalue() * c * c)
        .sum::<f64>()
        .sqrt();
    if grad == 0.0 {
        u.clone()
    } else {
        u.scaled(target / grad)
    }
}

/// Admissible random field with `‖∇u‖₂ = target`, reproducible from
/// `(seed, stream)`.
pub fn random_admissible(trunc: Truncation, seed: u64, stream: u64, target: f64) -> SpectralField {
    let mut rng = field_rng(seed, stream);
    rescale_to_grad_norm(&smooth_admissible(trunc, &mut rng), target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_are_admissible_and_scaled() {
        let t = Truncation::new(4, 5).unwrap();
        for stream in 0..10 {
            let u = random_admissible(t, 7, stream, 2.5);
            assert!(u.is_admissible());
            let grad: f64 = u.iter().map(|(m, c)| m.eigenvalue() * c * c).sum();
            assert!((grad.sqrt() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let t = Truncation::new(3, 3).unwrap();
        assert_eq!(random_admissible(t, 1, 4, 1.0), random_admissible(t, 1, 4, 1.0));
        assert_ne!(random_admissible(t, 1, 4, 1.0), random_admissible(t, 1, 5, 1.0));
        assert_ne!(random_admissible(t, 1, 4, 1.0), random_admissible(t, 2, 4, 1.0));
    }

    #[test]
    fn zero_target_gives_zero_field() {
        let t = Truncation::new(2, 2).unwrap();
        assert_eq!(random_admissible(t, 3, 0, 0.0).norm_sq(), 0.0);
    }
}
