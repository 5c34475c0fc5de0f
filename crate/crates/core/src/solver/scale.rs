//! Fixed-point mass scaling so flow feasibility is decided exactly.

use crate::error::{CoreError, Result};

/// Masses are mapped to integer units of 1e-12 before any flow computation.
pub const SCALE: f64 = 1e12;

/// Round both weight vectors to integer units and reconcile the (tiny) sum
/// mismatch left by rounding, so the scaled problem is exactly balanced.
///
/// Fails when the totals differ by more than `tol` in the first place.
pub fn scale_balanced(mu_w: &[f64], nu_w: &[f64], tol: f64) -> Result<(Vec<u64>, Vec<u64>)> {
    let total_mu: f64 = mu_w.iter().sum();
    let total_nu: f64 = nu_w.iter().sum();
    if (total_mu - total_nu).abs() > tol {
        return Err(CoreError::Unbalanced(total_mu, total_nu));
    }
    let to_units = |w: &[f64]| -> Vec<u64> { w.iter().map(|&x| (x * SCALE).round() as u64).collect() };
    let mut a = to_units(mu_w);
    let mut b = to_units(nu_w);
    let sum_a: i128 = a.iter().map(|&x| x as i128).sum();
    let sum_b: i128 = b.iter().map(|&x| x as i128).sum();
    let diff = sum_a - sum_b;
    if diff != 0 {
        // Bump the heaviest atom of the lighter side; the correction is at
        // most tol * SCALE + (len/2) units, i.e. within tolerance as mass.
        let (side, amount) = if diff > 0 {
            (&mut b, diff as u64)
        } else {
            (&mut a, (-diff) as u64)
        };
        let k = side
            .iter()
            .enumerate()
            .max_by_key(|&(_, &v)| v)
            .map(|(i, _)| i)
            .ok_or_else(|| CoreError::InvalidMeasure("empty weight vector".into()))?;
        side[k] += amount;
    }
    Ok((a, b))
}

/// Unit slack absorbed by feasibility verdicts: per-atom rounding is ±1/2,
/// the balancing bump adds at most `tol * SCALE + n/2`, so comparisons on
/// subset-tight instances can be off by this much without the real problem
/// being infeasible.
pub fn rounding_slack(n_atoms: usize, tol: f64) -> u64 {
    n_atoms as u64 + 2 + (tol * SCALE) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_balance_after_rounding() {
        let mu = vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let nu = vec![0.5, 0.5];
        let (a, b) = scale_balanced(&mu, &nu, 1e-9).unwrap();
        assert_eq!(
            a.iter().map(|&x| x as i128).sum::<i128>(),
            b.iter().map(|&x| x as i128).sum::<i128>()
        );
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(scale_balanced(&[1.0], &[0.5], 1e-9).is_err());
    }

    #[test]
    fn units_track_mass_within_rounding() {
        let mu = vec![0.123456789, 0.876543211];
        let (a, _) = scale_balanced(&mu, &[1.0], 1e-9).unwrap();
        for (w, &u) in mu.iter().zip(&a) {
            assert!((u as f64 / SCALE - w).abs() < 1e-12);
        }
    }
}
