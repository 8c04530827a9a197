//! Importance-weighted loss estimators and the concentration tools used to
//! monitor them.

use crate::error::{Error, Result};
use crate::policy::Partition;

/// Running rare/common loss totals and their importance-weighted estimates
/// for every arm.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorTracker {
    gamma1: f64,
    gamma2: f64,
    l_rare: Vec<f64>,
    u_rare: Vec<f64>,
    l_common: Vec<f64>,
    u_common: Vec<f64>,
}

impl EstimatorTracker {
    pub fn new(d: usize, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 > 0.0 && gamma2 > 0.0) {
            return Err(Error::domain("estimator constants must be positive"));
        }
        Ok(EstimatorTracker {
            gamma1,
            gamma2,
            l_rare: vec![0.0; d],
            u_rare: vec![0.0; d],
            l_common: vec![0.0; d],
            u_common: vec![0.0; d],
        })
    }

    /// Absorb one round. `losses` holds the true round losses of every arm,
    /// `played` the active coordinates and `hat_p` the play marginals.
    pub fn update(&self, partition: &Partition, played: &[usize], losses: &[f64], hat_p: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        let d = self.l_rare.len();
        if losses.len() != d || hat_p.len() != d || partition.d() != d {
            return Err(Error::Internal("estimator update with mismatched dimensions".into()));
        }
        let mut is_played = vec![false; d];
        for &i in played {
            is_played[i] = true;
        }
        for i in 0..d {
            let loss = losses[i];
            if partition.is_rare(i) {
                next.l_rare[i] += loss;
                if is_played[i] {
                    next.u_rare[i] += loss / self.gamma2;
                }
            } else {
                next.l_common[i] += loss;
                if is_played[i] {
                    if hat_p[i] <= 0.0 {
                        return Err(Error::Internal(format!("arm {i} was played with zero probability")));
                    }
                    next.u_common[i] += loss / hat_p[i];
                }
            }
        }
        Ok(next)
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn l_rare(&self) -> &[f64] {
        &self.l_rare
    }

    pub fn u_rare(&self) -> &[f64] {
        &self.u_rare
    }

    pub fn l_common(&self) -> &[f64] {
        &self.l_common
    }

    pub fn u_common(&self) -> &[f64] {
        &self.u_common
    }

    /// Smallest slack of `U_R <= 2 L + 8 log T / gamma2` over arms whose
    /// rare loss is still at most `lstar_lower`; `None` if no arm qualifies.
    pub fn rare_bound_slack(&self, lstar_lower: f64, horizon: usize) -> Option<f64> {
        let cap = 2.0 * lstar_lower + 8.0 * (horizon as f64).ln() / self.gamma2;
        (0..self.l_rare.len())
            .filter(|&i| self.l_rare[i] <= lstar_lower)
            .map(|i| cap - self.u_rare[i])
            .reduce(f64::min)
    }

    /// Smallest slack of `U_C <= L_C + lambda sqrt(L / gamma1)` over arms
    /// with common loss at most `l_tilde`.
    pub fn common_bound_slack(&self, lambda: f64, l_tilde: f64) -> Option<f64> {
        let width = lambda * (l_tilde / self.gamma1).sqrt();
        (0..self.l_common.len())
            .filter(|&i| self.l_common[i] <= l_tilde)
            .map(|i| self.l_common[i] + width - self.u_common[i])
            .reduce(f64::min)
    }
}

/// Freedman tail `exp(-a^2 / (2b + M a))`.
pub fn freedman_tail(a: f64, b: f64, m: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && m > 0.0) {
        return Err(Error::domain(format!("Freedman parameters must be positive (a={a}, b={b}, M={m})")));
    }
    Ok((-a * a / (2.0 * b + m * a)).exp())
}

/// Resolvent of `R <= X + Y sqrt(Z + R)`: every such `R` is at most
/// `X + Y^2 + Y sqrt(Z) + Y sqrt(X)`.
///
/// Completing the square gives `R <= X + Y^2/2 + sqrt(Y^4/4 + Y^2 Z + X Y^2)`
/// (see [`self_bounding_tight`]); the closed form follows from
/// subadditivity of the square root. The `Y sqrt(X)` term cannot be
/// dropped: with `X = Y = 1, Z = 0` the largest feasible `R` is the golden
/// ratio squared, above `X + Y^2 = 2`.
pub fn self_bounding_solve(x: f64, y: f64, z: f64) -> Result<f64> {
    check_self_bounding(x, y, z)?;
    Ok(x + y * y + y * z.sqrt() + y * x.sqrt())
}

/// Largest `R` satisfying `R <= X + Y sqrt(Z + R)`.
pub fn self_bounding_tight(x: f64, y: f64, z: f64) -> Result<f64> {
    check_self_bounding(x, y, z)?;
    let y2 = y * y;
    Ok(x + y2 / 2.0 + (y2 * y2 / 4.0 + y2 * z + x * y2).sqrt())
}

fn check_self_bounding(x: f64, y: f64, z: f64) -> Result<()> {
    if !(x >= 0.0 && y >= 0.0 && z >= 0.0) {
        return Err(Error::domain("self-bounding inputs must be nonnegative"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn tracker_examples() {
        let t = EstimatorTracker::new(3, 0.2, 0.1).unwrap();
        let part = Partition::from_rare(3, &[2]);
        let next = t.update(&part, &[1], &[0.3, 0.4, 0.5], &[0.0, 0.5, 0.0]).unwrap();
        assert_eq!(next.u_common(), &[0.0, 0.8, 0.0]);
        assert_eq!(next.l_common(), &[0.3, 0.4, 0.0]);
        assert_eq!(next.l_rare(), &[0.0, 0.0, 0.5]);
        let next = next.update(&part, &[2], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.05]).unwrap();
        assert!((next.u_rare()[2] - 10.0).abs() < 1e-12);
        assert!(t.update(&part, &[0], &[0.3, 0.4, 0.5], &[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn freedman_examples() {
        assert!((freedman_tail(1e-9, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((freedman_tail(4.0, 4.0, 1.0).unwrap() - (-16.0f64 / 12.0).exp()).abs() < 1e-15);
        assert!((freedman_tail(4.0, 4.0, 1.0).unwrap() - 0.2636).abs() < 1e-4);
        assert!(freedman_tail(0.0, 1.0, 1.0).is_err());
        assert!(freedman_tail(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn freedman_rare_parameterisation() {
        for &(horizon, lstar, gamma) in &[(100.0f64, 10.0, 0.1), (1e4, 100.0, 0.01), (1e6, 50.0, 0.3)] {
            let lt = horizon.ln();
            let a = 4.0 * lt / gamma + 4.0 * (lstar * lt / gamma).sqrt();
            let tail = freedman_tail(a, lstar / gamma, 1.0 / gamma).unwrap();
            assert!(tail <= 2.0 / (horizon * horizon));
        }
    }

    #[test]
    fn self_bounding_examples() {
        assert_eq!(self_bounding_solve(2.5, 0.0, 7.0).unwrap(), 2.5);
        assert_eq!(self_bounding_solve(0.0, 1.0, 4.0).unwrap(), 3.0);
        // the bound without the sqrt(X) term fails here
        let phi2 = ((1.0 + 5f64.sqrt()) / 2.0).powi(2);
        assert!((self_bounding_tight(1.0, 1.0, 0.0).unwrap() - phi2).abs() < 1e-12);
        assert!(phi2 <= 1.0 + phi2.sqrt() + 1e-12 && phi2 > 2.0);
        assert!(self_bounding_solve(1.0, 1.0, 0.0).unwrap() >= phi2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (x, y, z) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..3.0), rng.gen_range(0.0..10.0));
            let bound = self_bounding_solve(x, y, z).unwrap();
            let tight = self_bounding_tight(x, y, z).unwrap();
            assert!(tight <= bound + 1e-12);
            assert!(tight <= x + y * (z + tight).sqrt() + 1e-9);
            for k in 0..=2000 {
                let r = k as f64 * 0.02;
                if r <= x + y * (z + r).sqrt() {
                    assert!(r <= tight + 1e-9 && r <= bound + 1e-12);
                }
            }
        }
    }
}
