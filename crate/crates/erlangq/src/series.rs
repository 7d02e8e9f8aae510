//! Composition enumeration and the zero state-phase probability series.
//!
//! Every closed form in this crate is a sum over multi-indices
//! (m₁,…,m_l) with Σ m_j = n, weighted by Π c_i^{m_i}/m_i!. This module
//! enumerates those compositions once, keeps their log-weights, and evaluates
//!
//!   p₀(t) = (1/τ) Σ_{h≥1} h Σ_{n≥0} ηⁿ Σ_m (Π c_i^{m_i}/m_i!)
//!           τ^{h+n+kΣjm_j} / (h+kΣjm_j)! · e^{-(1+η)τ},
//!
//! with η = λ/(kμ) and τ = kμt. Terms span many orders of magnitude, so each
//! one is assembled in log space and exponentiated once; the final sum is
//! compensated and taken in descending magnitude.

use rayon::prelude::*;

use crate::curve::{CurvePoint, Provenance, TransientCurve};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::special::{ln_factorial, sum_descending};

/// A multi-index m = (m₁,…,m_l) with its order Σ m_j and weighted jump Σ j·m_j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composition {
    parts: Vec<u32>,
    order: u32,
    weighted_jump: u64,
}

impl Composition {
    pub fn new(parts: Vec<u32>) -> Self {
        let order = parts.iter().sum();
        let weighted_jump = parts
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as u64 + 1) * m as u64)
            .sum();
        Self {
            parts,
            order,
            weighted_jump,
        }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Σ m_j.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Σ j·m_j, the total batch content indexed by this composition.
    pub fn weighted_jump(&self) -> u64 {
        self.weighted_jump
    }
}

/// All l-part compositions of n, in ascending lexicographic order.
/// The count is C(n+l-1, l-1).
pub fn enumerate_compositions(n: u32, l: u32) -> Vec<Composition> {
    assert!(l >= 1, "need at least one batch size");
    let mut out = Vec::new();
    let mut current = vec![0u32; l as usize];
    fill(&mut out, &mut current, 0, n);
    out
}

fn fill(out: &mut Vec<Composition>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(Composition::new(current.clone()));
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        fill(out, current, pos + 1, remaining - v);
    }
}

/// ln Π c_i^{m_i}/m_i!, via the log-factorial table.
pub fn log_term_weight(comp: &Composition, params: &ModelParams) -> f64 {
    let c = params.batch_probs();
    comp.parts()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            if m == 0 {
                0.0
            } else {
                m as f64 * c[i].ln() - ln_factorial(m as u64)
            }
        })
        .sum()
}

/// Dimensionless series parameters η = λ/(kμ) and τ = kμt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesParams {
    pub eta: f64,
    pub tau: f64,
}

impl SeriesParams {
    pub fn from_model(params: &ModelParams, t: f64) -> Self {
        Self {
            eta: params.lambda() / params.k_mu(),
            tau: params.k_mu() * t,
        }
    }
}

/// Cutoffs and tolerance controls for every infinite sum in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationSpec {
    /// Outer (h) index cutoff.
    pub h_max: u32,
    /// Composition-order cutoff.
    pub n_max: u32,
    /// Absolute tail target; evaluations whose tail estimate exceeds this fail.
    pub tail_tol: f64,
    /// Quadrature nodes per unit time (minimum 128 nodes total).
    pub quad_points: u32,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self {
            h_max: 200,
            n_max: 60,
            tail_tol: 1e-9,
            quad_points: 64,
        }
    }
}

impl TruncationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.h_max < 1 || self.n_max < 1 || self.quad_points < 1 {
            return Err(Error::Config("truncation cutoffs must be >= 1".into()));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::Config("tail_tol must be positive".into()));
        }
        Ok(())
    }

    /// Shells below this magnitude (and decreasing) stop the adaptive sweep.
    pub(crate) fn shell_cutoff(&self) -> f64 {
        self.tail_tol * 1e-4
    }
}

/// A truncated-series evaluation: the clamped value, the raw pre-clamp sum and
/// the truncation-tail estimate (last h-shell plus last n-shell magnitude).
#[derive(Clone, Copy, Debug)]
pub struct SeriesEval {
    pub value: f64,
    pub raw: f64,
    pub tail_estimate: f64,
}

/// Flattened composition weights, grouped by order. Shared by the p₀ series,
/// the transient state probabilities, the busy-period series and the
/// fractional coefficient families, so the index sets cannot drift apart.
#[derive(Clone, Debug)]
pub(crate) struct WeightTable {
    orders: Vec<Vec<TermWeight>>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TermWeight {
    pub ln_weight: f64,
    /// Σ j·m_j
    pub weighted_jump: u64,
    /// k · Σ j·m_j
    pub k_jump: u64,
    /// m₁ (needed for the shifted composition in the s = k terms)
    pub first_part: u32,
}

impl WeightTable {
    pub fn build(params: &ModelParams, n_max: u32) -> Self {
        let l = params.max_batch() as u32;
        let k = params.k() as u64;
        if l == 0 {
            // no arrivals: only the empty composition exists
            return Self {
                orders: vec![vec![TermWeight {
                    ln_weight: 0.0,
                    weighted_jump: 0,
                    k_jump: 0,
                    first_part: 0,
                }]],
            };
        }
        let orders = (0..=n_max)
            .map(|n| {
                enumerate_compositions(n, l)
                    .iter()
                    .map(|comp| TermWeight {
                        ln_weight: log_term_weight(comp, params),
                        weighted_jump: comp.weighted_jump(),
                        k_jump: k * comp.weighted_jump(),
                        first_part: comp.parts()[0],
                    })
                    .collect()
            })
            .collect();
        Self { orders }
    }

    pub fn order(&self, n: u32) -> &[TermWeight] {
        &self.orders[n as usize]
    }

    /// Largest stored order (≤ n_max; 0 for the no-arrival queue).
    pub fn top_order(&self) -> u32 {
        self.orders.len() as u32 - 1
    }
}

/// Zero state-phase probability p₀(t), truncated at (h_max, n_max).
pub fn p_zero(params: &ModelParams, t: f64, trunc: &TruncationSpec) -> Result<SeriesEval> {
    let table = WeightTable::build(params, trunc.n_max);
    p_zero_with(params, t, trunc, &table)
}

pub(crate) fn p_zero_with(
    params: &ModelParams,
    t: f64,
    trunc: &TruncationSpec,
    table: &WeightTable,
) -> Result<SeriesEval> {
    trunc.validate()?;
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Numerical(format!("t must be finite and >= 0, got {t}")));
    }
    // analytic limit; the 1/τ prefactor is singular at τ = 0
    if t == 0.0 {
        return Ok(SeriesEval {
            value: 1.0,
            raw: 1.0,
            tail_estimate: 0.0,
        });
    }

    let k_mu = params.k_mu();
    let tau = k_mu * t;
    let eta = params.lambda() / k_mu;
    let ln_tau = tau.ln();
    let ln_eta = if eta > 0.0 { eta.ln() } else { f64::NEG_INFINITY };
    let damping = -(1.0 + eta) * tau;
    let n_top = if eta == 0.0 { 0 } else { table.top_order() };
    let cutoff = trunc.shell_cutoff();

    let mut values: Vec<f64> = Vec::with_capacity(1024);
    let mut shell_by_n = vec![0.0f64; n_top as usize + 1];
    let mut max_n_used = 0u32;
    let mut last_shell_h = 0.0;
    let mut prev_shell_h = f64::INFINITY;
    let mut h_below = 0u32;

    for h in 1..=trunc.h_max {
        let ln_h = (h as f64).ln();
        let mut shell_h = 0.0;
        let mut prev_shell_hn = f64::INFINITY;
        let mut n_below = 0u32;
        for n in 0..=n_top {
            let ln_eta_part = if n == 0 { 0.0 } else { n as f64 * ln_eta };
            let mut shell_hn = 0.0;
            for tw in table.order(n) {
                let ln_term = ln_h
                    + ln_eta_part
                    + tw.ln_weight
                    + ((h + n) as f64 + tw.k_jump as f64) * ln_tau
                    - ln_factorial(h as u64 + tw.k_jump)
                    + damping
                    - ln_tau;
                let v = ln_term.exp();
                shell_hn += v;
                values.push(v);
            }
            shell_by_n[n as usize] += shell_hn;
            shell_h += shell_hn;
            max_n_used = max_n_used.max(n);
            // stop after the order shells have peaked and dropped below cutoff
            if n >= 1 && shell_hn < cutoff && shell_hn <= prev_shell_hn {
                n_below += 1;
                if n_below >= 2 {
                    break;
                }
            } else {
                n_below = 0;
            }
            prev_shell_hn = shell_hn;
        }
        last_shell_h = shell_h;
        // the h-sum peaks near h ≈ τ; only stop past the mode
        if (h as f64) > tau && shell_h < cutoff && shell_h <= prev_shell_h {
            h_below += 1;
            if h_below >= 2 {
                break;
            }
        } else {
            h_below = 0;
        }
        prev_shell_h = shell_h;
    }

    let tail_estimate = last_shell_h + shell_by_n[max_n_used as usize];
    let raw = sum_descending(&mut values);
    if !raw.is_finite() {
        return Err(Error::Numerical("p_zero series produced a non-finite sum".into()));
    }
    if tail_estimate > trunc.tail_tol {
        return Err(Error::TruncationTail {
            quantity: "p_zero",
            estimate: tail_estimate,
            tolerance: trunc.tail_tol,
        });
    }
    Ok(SeriesEval {
        value: raw.clamp(0.0, 1.0),
        raw,
        tail_estimate,
    })
}

/// p₀ over a sorted, nonnegative time grid. Points are independent and fan
/// out to worker threads; the result is identical to pointwise evaluation.
pub fn p_zero_curve(
    params: &ModelParams,
    t_grid: &[f64],
    trunc: &TruncationSpec,
) -> Result<TransientCurve> {
    validate_grid(t_grid)?;
    let table = WeightTable::build(params, trunc.n_max);
    let evals: Vec<(usize, Result<SeriesEval>)> = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| (i, p_zero_with(params, t, trunc, &table)))
        .collect();
    let mut curve = TransientCurve::new("p0", Provenance::Analytic);
    for (i, ev) in evals {
        let ev = ev.map_err(|e| e.at_grid_index(i, t_grid[i]))?;
        curve.points.push(CurvePoint {
            t: t_grid[i],
            value: ev.value,
            std_error: None,
            tail_estimate: Some(ev.tail_estimate),
        });
    }
    Ok(curve)
}

pub(crate) fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Config("time grid must be non-empty".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Config("time grid must be nonnegative and finite".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("time grid must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_params() -> ModelParams {
        ModelParams::new(2, 1.0, &[0.3, 0.2]).unwrap()
    }

    #[test]
    fn composition_enumeration_examples() {
        assert_eq!(
            enumerate_compositions(0, 3),
            vec![Composition::new(vec![0, 0, 0])]
        );
        let c22: Vec<Vec<u32>> = enumerate_compositions(2, 2)
            .iter()
            .map(|c| c.parts().to_vec())
            .collect();
        assert_eq!(c22, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(enumerate_compositions(3, 2).len(), 4);
    }

    #[test]
    fn composition_count_is_binomial() {
        fn binom(n: u64, k: u64) -> u64 {
            (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
        }
        for l in 1..=4u32 {
            for n in 0..=8u32 {
                let count = enumerate_compositions(n, l).len() as u64;
                assert_eq!(count, binom((n + l - 1) as u64, (l - 1) as u64));
            }
        }
    }

    #[test]
    fn log_weight_examples() {
        let p = reference_params();
        let zero = Composition::new(vec![0, 0]);
        assert_eq!(log_term_weight(&zero, &p), 0.0);
        let single = Composition::new(vec![1, 0]);
        assert_relative_eq!(log_term_weight(&single, &p), 0.6f64.ln(), epsilon = 1e-15);
        let mixed = Composition::new(vec![2, 1]);
        assert_relative_eq!(
            log_term_weight(&mixed, &p),
            (0.6f64.powi(2) * 0.4 / 2.0).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn p_zero_initial_condition() {
        let p = reference_params();
        let ev = p_zero(&p, 0.0, &TruncationSpec::default()).unwrap();
        assert_eq!(ev.value, 1.0);
    }

    #[test]
    fn p_zero_no_arrivals_is_one() {
        let p = ModelParams::without_arrivals(2, 1.0).unwrap();
        for t in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let ev = p_zero(&p, t, &TruncationSpec::default()).unwrap();
            assert!((ev.raw - 1.0).abs() < 1e-12, "t={t}: raw={}", ev.raw);
        }
    }

    #[test]
    fn p_zero_curve_matches_pointwise() {
        let p = reference_params();
        let trunc = TruncationSpec::default();
        let grid = [0.0, 0.5, 1.0, 2.5];
        let curve = p_zero_curve(&p, &grid, &trunc).unwrap();
        for (pt, &t) in curve.points.iter().zip(grid.iter()) {
            let ev = p_zero(&p, t, &trunc).unwrap();
            assert_eq!(pt.value, ev.value, "bitwise match at t={t}");
        }
    }

    #[test]
    fn p_zero_curve_rejects_bad_grids() {
        let p = reference_params();
        let trunc = TruncationSpec::default();
        assert!(p_zero_curve(&p, &[], &trunc).is_err());
        assert!(p_zero_curve(&p, &[0.5, 0.5], &trunc).is_err());
        assert!(p_zero_curve(&p, &[-1.0, 0.5], &trunc).is_err());
    }

    #[test]
    fn p_zero_within_unit_interval_before_clamp() {
        let p = reference_params();
        let trunc = TruncationSpec::default();
        for t in [0.05, 0.3, 0.7, 1.3, 2.9, 4.7] {
            let ev = p_zero(&p, t, &trunc).unwrap();
            assert!(ev.raw >= -trunc.tail_tol && ev.raw <= 1.0 + trunc.tail_tol);
        }
    }

    #[test]
    fn monotone_truncation_bound() {
        // enlarging the cutoffs must not move the value by more than the
        // reported tail estimate
        let p = reference_params();
        let base = TruncationSpec {
            h_max: 24,
            n_max: 10,
            tail_tol: 1e-2,
            ..TruncationSpec::default()
        };
        let larger = TruncationSpec {
            h_max: 60,
            n_max: 30,
            ..base
        };
        for t in [0.5, 1.0, 2.0] {
            let small = p_zero(&p, t, &base).unwrap();
            let big = p_zero(&p, t, &larger).unwrap();
            assert!(
                (small.raw - big.raw).abs() <= small.tail_estimate + 1e-15,
                "t={t}: delta={:.3e} estimate={:.3e}",
                (small.raw - big.raw).abs(),
                small.tail_estimate
            );
        }
    }

    #[test]
    fn tail_breach_reports_estimate() {
        let p = reference_params();
        let trunc = TruncationSpec {
            h_max: 3,
            n_max: 2,
            tail_tol: 1e-12,
            ..TruncationSpec::default()
        };
        match p_zero(&p, 2.0, &trunc) {
            Err(Error::TruncationTail { estimate, .. }) => assert!(estimate > 1e-12),
            other => panic!("expected tail failure, got {other:?}"),
        }
    }

    #[test]
    fn single_rate_case_matches_independent_summation() {
        // l = 1 collapses to the classical M/E_k/1 series; code the single-rate
        // sum directly with its own factorial accumulation and compare.
        let k = 3u32;
        let mu = 1.0;
        let lam = 0.8;
        let p = ModelParams::new(k, mu, &[lam]).unwrap();
        let trunc = TruncationSpec::default();
        for t in [0.3, 1.0, 2.0] {
            let tau = k as f64 * mu * t;
            let eta = lam / (k as f64 * mu);
            let mut total = 0.0f64;
            for h in 1..=trunc.h_max as u64 {
                for n in 0..=trunc.n_max as u64 {
                    let mut ln_fact_n = 0.0;
                    for i in 1..=n {
                        ln_fact_n += (i as f64).ln();
                    }
                    let mut ln_fact_hkn = 0.0;
                    for i in 1..=(h + k as u64 * n) {
                        ln_fact_hkn += (i as f64).ln();
                    }
                    let ln_term = (h as f64).ln() + n as f64 * eta.ln() - ln_fact_n
                        + ((h + n + k as u64 * n) as f64) * tau.ln()
                        - ln_fact_hkn
                        - (1.0 + eta) * tau
                        - tau.ln();
                    total += ln_term.exp();
                }
            }
            let ev = p_zero(&p, t, &trunc).unwrap();
            assert!((ev.raw - total).abs() < 1e-10, "t={t}: {} vs {total}", ev.raw);
        }
    }

    #[test]
    fn reindexing_identity() {
        // Σ_{m,r} f(m, r) = Σ_{m,r,w} f(m, rk + w - 1) on a finite box, for
        // every k; exercised with pseudo-random absolutely-summable values.
        let l = 2usize;
        let box_m = 4u32;
        let r_box = 24u64;
        let f = |parts: &[u32], r: u64| -> f64 {
            let mut x = r as f64 * 0.618_033_988_749;
            for (i, &m) in parts.iter().enumerate() {
                x += (m as f64) * (1.3 + i as f64);
            }
            (x.sin() * 0.5 + 0.5) * (-(r as f64) * 0.3).exp()
                * parts.iter().map(|&m| (-(m as f64)).exp()).product::<f64>()
        };
        for k in [1u64, 2, 3, 4] {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for order in 0..=(box_m * l as u32) {
                for comp in enumerate_compositions(order, l as u32) {
                    if comp.parts().iter().any(|&m| m > box_m) {
                        continue;
                    }
                    for r in 0..r_box {
                        lhs += f(comp.parts(), r);
                    }
                    for r in 0..r_box / k {
                        for w in 1..=k {
                            rhs += f(comp.parts(), r * k + w - 1);
                        }
                    }
                }
            }
            assert!((lhs - rhs).abs() < 1e-12, "k={k}: {lhs} vs {rhs}");
        }
    }

    proptest! {
        #[test]
        fn p_zero_bounded_for_random_params(
            k in 1u32..=4,
            mu in 0.4f64..2.0,
            r1 in 0.05f64..0.6,
            r2 in 0.05f64..0.6,
            t in 0.0f64..4.0,
        ) {
            let p = ModelParams::new(k, mu, &[r1, r2]).unwrap();
            let trunc = TruncationSpec::default();
            let ev = p_zero(&p, t, &trunc).unwrap();
            prop_assert!(ev.raw >= -trunc.tail_tol);
            prop_assert!(ev.raw <= 1.0 + trunc.tail_tol);
            prop_assert!(ev.value >= 0.0 && ev.value <= 1.0);
        }
    }
}
