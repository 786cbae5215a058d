use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ProblemError;

/// `clean + ε` with Gaussian `ε` rescaled so that
/// `10 log₁₀(‖clean‖² / ‖ε‖²) = snr_db` holds exactly. An infinite SNR
/// returns `clean` unchanged.
pub fn add_noise_snr(clean: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>, ProblemError> {
    let energy: f64 = clean.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(ProblemError::DegenerateSignal);
    }
    if snr_db == f64::INFINITY {
        return Ok(clean.to_vec());
    }
    if !snr_db.is_finite() {
        return Err(ProblemError::InvalidParameter(
            "snr_db must be finite or +inf",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<f64> = clean.iter().map(|_| rng.sample(StandardNormal)).collect();
    let noise_energy: f64 = eps.iter().map(|v| v * v).sum();
    let target = energy * 10f64.powf(-snr_db / 10.0);
    let scale = (target / noise_energy).sqrt();
    Ok(clean.iter().zip(&eps).map(|(c, e)| c + scale * e).collect())
}

/// `10 log₁₀(‖clean‖² / ‖noisy − clean‖²)`
pub fn snr_db_of(clean: &[f64], noisy: &[f64]) -> f64 {
    let signal: f64 = clean.iter().map(|v| v * v).sum();
    let noise: f64 = clean
        .iter()
        .zip(noisy)
        .map(|(c, n)| (n - c) * (n - c))
        .sum();
    10.0 * (signal / noise).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_is_hit_exactly() {
        let clean: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let noisy = add_noise_snr(&clean, 20.0, 1).unwrap();
        let signal: f64 = clean.iter().map(|v| v * v).sum();
        let noise: f64 = clean.iter().zip(&noisy).map(|(c, n)| (n - c).powi(2)).sum();
        assert!((noise / signal - 0.01).abs() <= 1e-14);
        assert!((snr_db_of(&clean, &noisy) - 20.0).abs() <= 1e-10);
    }

    #[test]
    fn infinite_snr_is_identity() {
        let clean = [1.0, -2.0, 3.0];
        assert_eq!(add_noise_snr(&clean, f64::INFINITY, 4).unwrap(), clean);
    }

    #[test]
    fn seeds_change_noise_but_not_level() {
        let clean = [1.0, 2.0, 3.0, 4.0];
        let a = add_noise_snr(&clean, 10.0, 1).unwrap();
        let b = add_noise_snr(&clean, 10.0, 2).unwrap();
        assert_ne!(a, b);
        assert!((snr_db_of(&clean, &a) - snr_db_of(&clean, &b)).abs() <= 1e-10);
        assert_eq!(a, add_noise_snr(&clean, 10.0, 1).unwrap());
    }

    #[test]
    fn zero_signal_is_rejected() {
        assert_eq!(
            add_noise_snr(&[0.0; 3], 20.0, 0),
            Err(ProblemError::DegenerateSignal)
        );
    }
}
