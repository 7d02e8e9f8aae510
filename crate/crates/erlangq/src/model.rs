//! Queue parameters, the state-phase space and the phase-count bijection.
//!
//! The queue has Erlang-k service (k exponential phases at rate kμ each, mean
//! service time 1/μ) and batch arrivals: a batch of size m ∈ {1..l} arrives at
//! rate λ_m. With λ = Σ λ_m and c_m = λ_m/λ the traffic intensity is
//! ρ = λ Σ m·c_m / μ.
//!
//! States are pairs (n, s) with n customers and the served customer in phase
//! s ∈ 1..k (and (0,0) for the empty system). The bijection
//! g_k(n, s) = k(n-1) + s maps state-phases onto the total number of
//! outstanding service phases, which is the coordinate the ODE oracle and the
//! simulator work in.

use crate::error::{Error, Result};

/// Validated queue parameters with derived quantities populated.
///
/// Immutable after construction; safe to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    k: u32,
    mu: f64,
    batch_rates: Vec<f64>,
    lambda: f64,
    batch_probs: Vec<f64>,
    rho: f64,
    mean_batch: f64,
    batch_second_moment: f64,
}

impl ModelParams {
    /// Validates raw parameters and computes the derived fields once.
    pub fn new(k: u32, mu: f64, batch_rates: &[f64]) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidModel("k must be >= 1".into()));
        }
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidModel(format!("mu must be positive, got {mu}")));
        }
        if batch_rates.is_empty() {
            return Err(Error::InvalidModel("batch_rates must be non-empty".into()));
        }
        for (i, &r) in batch_rates.iter().enumerate() {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "batch rate lambda_{} must be positive and finite, got {r}",
                    i + 1
                )));
            }
        }
        let lambda: f64 = batch_rates.iter().sum();
        let batch_probs: Vec<f64> = batch_rates.iter().map(|r| r / lambda).collect();
        let mean_batch: f64 = batch_probs
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * c)
            .sum();
        let batch_second_moment: f64 = batch_probs
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powi(2) * c)
            .sum();
        let rho = lambda * mean_batch / mu;
        Ok(Self {
            k,
            mu,
            batch_rates: batch_rates.to_vec(),
            lambda,
            batch_probs,
            rho,
            mean_batch,
            batch_second_moment,
        })
    }

    /// The degenerate no-arrival queue (λ = 0). `new` rejects zero rates, so
    /// this case gets its own constructor; every transient quantity then
    /// collapses to its closed-form limit.
    pub fn without_arrivals(k: u32, mu: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidModel("k must be >= 1".into()));
        }
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidModel(format!("mu must be positive, got {mu}")));
        }
        Ok(Self {
            k,
            mu,
            batch_rates: vec![],
            lambda: 0.0,
            batch_probs: vec![],
            rho: 0.0,
            mean_batch: 0.0,
            batch_second_moment: 0.0,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Per-phase service rate kμ.
    pub fn k_mu(&self) -> f64 {
        self.k as f64 * self.mu
    }

    /// Number of batch sizes l (zero for the no-arrival queue).
    pub fn max_batch(&self) -> usize {
        self.batch_probs.len()
    }

    pub fn batch_rates(&self) -> &[f64] {
        &self.batch_rates
    }

    /// Total arrival rate λ = Σ λ_m.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Batch-size probabilities c_m = λ_m / λ.
    pub fn batch_probs(&self) -> &[f64] {
        &self.batch_probs
    }

    /// Traffic intensity ρ = λ Σ m c_m / μ.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// ρ ≥ 1: the queue is unstable. Transient formulas stay valid; only
    /// steady-state checks are skipped.
    pub fn is_unstable(&self) -> bool {
        self.rho >= 1.0
    }

    /// Mean batch size Σ m c_m.
    pub fn mean_batch(&self) -> f64 {
        self.mean_batch
    }

    /// Second moment of the batch size Σ m² c_m.
    pub fn batch_second_moment(&self) -> f64 {
        self.batch_second_moment
    }

    /// Total event rate λ + kμ out of any busy state.
    pub fn total_rate(&self) -> f64 {
        self.lambda + self.k_mu()
    }
}

/// A point (n, s) of the state space: (0,0) or n ≥ 1 with 1 ≤ s ≤ k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StatePhase {
    n: u64,
    s: u32,
}

impl StatePhase {
    pub fn new(n: u64, s: u32, k: u32) -> Result<Self> {
        let valid = (n == 0 && s == 0) || (n >= 1 && s >= 1 && s <= k);
        if valid {
            Ok(Self { n, s })
        } else {
            Err(Error::InvalidState { n, s, k })
        }
    }

    pub fn empty() -> Self {
        Self { n: 0, s: 0 }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s(&self) -> u32 {
        self.s
    }
}

/// Total outstanding service phases, the image of g_k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhaseCount(pub u64);

/// g_k(n, s): (0,0) ↦ 0, otherwise k(n-1) + s.
pub fn g_map(state: StatePhase, k: u32) -> Result<PhaseCount> {
    let valid = (state.n == 0 && state.s == 0) || (state.n >= 1 && state.s >= 1 && state.s <= k);
    if !valid {
        return Err(Error::InvalidState {
            n: state.n,
            s: state.s,
            k,
        });
    }
    if state.n == 0 {
        Ok(PhaseCount(0))
    } else {
        Ok(PhaseCount(k as u64 * (state.n - 1) + state.s as u64))
    }
}

/// Inverse of g_k: m ↦ (a_k(m), b_k(m)).
///
/// b_k(m) is the representative of m mod k in 1..k and a_k(m) = (m - b_k)/k + 1.
pub fn g_inverse(m: PhaseCount, k: u32) -> StatePhase {
    if m.0 == 0 {
        return StatePhase::empty();
    }
    let rem = m.0 % k as u64;
    let s = if rem == 0 { k as u64 } else { rem };
    let n = (m.0 - s) / k as u64 + 1;
    StatePhase { n, s: s as u32 }
}

/// Batch-size distribution padded onto phase counts: mass c_i at m = i·k.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedBatchDist {
    atoms: Vec<(u64, f64)>,
}

impl PaddedBatchDist {
    pub fn from_params(params: &ModelParams) -> Self {
        let k = params.k() as u64;
        let atoms = params
            .batch_probs()
            .iter()
            .enumerate()
            .map(|(i, &c)| ((i as u64 + 1) * k, c))
            .collect();
        Self { atoms }
    }

    /// (phase-count jump, probability) pairs, ascending in jump size.
    pub fn atoms(&self) -> &[(u64, f64)] {
        &self.atoms
    }

    /// Probability of a jump of exactly `m` phases; zero off-support.
    pub fn prob(&self, m: u64) -> f64 {
        self.atoms
            .iter()
            .find(|(j, _)| *j == m)
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, c)| c).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn validate_reference_set() {
        let p = ModelParams::new(2, 1.0, &[0.3, 0.2]).unwrap();
        assert_relative_eq!(p.lambda(), 0.5);
        assert_relative_eq!(p.batch_probs()[0], 0.6);
        assert_relative_eq!(p.batch_probs()[1], 0.4);
        assert_relative_eq!(p.rho(), 0.7);
        assert!(!p.is_unstable());
        let mass: f64 = p.batch_probs().iter().sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_mm1_degenerate() {
        let p = ModelParams::new(1, 1.0, &[1.0]).unwrap();
        assert_relative_eq!(p.rho(), 1.0);
        assert!(p.is_unstable());
    }

    #[test]
    fn validate_rejects_bad_input() {
        assert!(ModelParams::new(2, 1.0, &[0.3, -0.2]).is_err());
        assert!(ModelParams::new(0, 1.0, &[0.3]).is_err());
        assert!(ModelParams::new(2, 0.0, &[0.3]).is_err());
        assert!(ModelParams::new(2, 1.0, &[]).is_err());
        assert!(ModelParams::new(2, f64::NAN, &[0.3]).is_err());
        assert!(ModelParams::new(2, 1.0, &[f64::INFINITY]).is_err());
    }

    #[test]
    fn g_map_examples() {
        assert_eq!(g_map(StatePhase::empty(), 3).unwrap(), PhaseCount(0));
        assert_eq!(g_map(StatePhase::new(2, 1, 3).unwrap(), 3).unwrap(), PhaseCount(4));
        assert_eq!(g_map(StatePhase::new(1, 3, 3).unwrap(), 3).unwrap(), PhaseCount(3));
        assert!(StatePhase::new(0, 1, 3).is_err());
        assert!(StatePhase::new(1, 4, 3).is_err());
    }

    #[test]
    fn g_inverse_examples() {
        assert_eq!(g_inverse(PhaseCount(0), 3), StatePhase::empty());
        assert_eq!(g_inverse(PhaseCount(4), 3), StatePhase::new(2, 1, 3).unwrap());
        assert_eq!(g_inverse(PhaseCount(3), 3), StatePhase::new(1, 3, 3).unwrap());
    }

    #[test]
    fn padded_dist_has_l_atoms_and_unit_mass() {
        let p = ModelParams::new(3, 2.0, &[0.5, 0.25, 0.25]).unwrap();
        let d = PaddedBatchDist::from_params(&p);
        assert_eq!(d.atoms().len(), 3);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        assert_relative_eq!(d.prob(3), 0.5);
        assert_relative_eq!(d.prob(6), 0.25);
        assert_eq!(d.prob(4), 0.0);
    }

    proptest! {
        #[test]
        fn g_round_trip_from_count(m in 0u64..10_000, k in 1u32..=8) {
            let state = g_inverse(PhaseCount(m), k);
            prop_assert_eq!(g_map(state, k).unwrap(), PhaseCount(m));
        }

        #[test]
        fn g_round_trip_from_state(n in 1u64..=1000, k in 1u32..=8, s_fr in 0.0f64..1.0) {
            let s = 1 + (s_fr * k as f64) as u32;
            let s = s.min(k);
            let state = StatePhase::new(n, s, k).unwrap();
            let m = g_map(state, k).unwrap();
            prop_assert_eq!(g_inverse(m, k), state);
        }
    }
}
