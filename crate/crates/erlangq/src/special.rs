//! Scalar numerics shared by the series evaluators: log-gamma, a log-factorial
//! table, the regularized lower incomplete gamma function and compensated
//! summation helpers.
//!
//! Everything here is plain f64. Accuracy targets are ~1e-14 relative, which is
//! what the series in the rest of the crate need to hit their tolerances.

use std::sync::OnceLock;

/// Lanczos coefficients, g = 7, 9 terms.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_74;

/// Natural log of the gamma function for x > 0 (reflection handles x < 0.5).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // ln Γ(x) = ln(π / sin(πx)) - ln Γ(1 - x)
        let s = (std::f64::consts::PI * x).sin();
        std::f64::consts::PI.ln() - s.ln() - ln_gamma(1.0 - x)
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + 7.5;
        LN_SQRT_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Gamma function via `ln_gamma`.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (std::f64::consts::PI * x).sin();
        std::f64::consts::PI / (s * (ln_gamma(1.0 - x)).exp())
    } else {
        ln_gamma(x).exp()
    }
}

const LN_FACTORIAL_LEN: usize = 20_001;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_LEN);
        let mut acc = CompensatedSum::new();
        t.push(0.0);
        for i in 1..LN_FACTORIAL_LEN as u64 {
            acc.add((i as f64).ln());
            t.push(acc.total());
        }
        t
    })
}

/// ln n!, table-backed (compensated cumulative sum) up to n = 20000.
pub fn ln_factorial(n: u64) -> f64 {
    let table = ln_factorial_table();
    if (n as usize) < table.len() {
        table[n as usize]
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// ln Γ(x) that routes integer arguments through the factorial table.
pub fn ln_gamma_int_aware(x: f64) -> f64 {
    let r = x.round();
    if r >= 1.0 && r < LN_FACTORIAL_LEN as f64 && (x - r).abs() < 1e-12 {
        ln_factorial(r as u64 - 1)
    } else {
        ln_gamma(x)
    }
}

/// Regularized lower incomplete gamma function P(s, x) = γ(s, x)/Γ(s).
///
/// Series expansion for x < s + 1, Lentz continued fraction for the upper
/// tail otherwise. The standard switch point keeps both sides fast and
/// accurate over the full range.
pub fn regularized_lower_gamma(s: f64, x: f64) -> f64 {
    assert!(s > 0.0 && x >= 0.0, "P(s,x) needs s > 0, x >= 0");
    if x == 0.0 {
        return 0.0;
    }
    let ln_prefactor = s * x.ln() - x - ln_gamma_int_aware(s);
    if x < s + 1.0 {
        // γ(s,x) series: x^s e^{-x} Σ_n x^n / (s (s+1) ... (s+n))
        let mut term = 1.0 / s;
        let mut sum = term;
        for n in 1..10_000 {
            term *= x / (s + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (ln_prefactor.exp() * sum).min(1.0)
    } else {
        // Q(s,x) continued fraction, modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = ln_prefactor.exp() * h;
        (1.0 - q).clamp(0.0, 1.0)
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// Compensated sum of `values` taken in descending order of magnitude.
pub fn sum_descending(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    let mut acc = CompensatedSum::new();
    for &v in values.iter() {
        acc.add(v);
    }
    acc.total()
}

/// Streaming ln Σ exp(ln_i) over nonnegative contributions.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSumAcc {
    max: f64,
    sum: f64,
}

impl LogSumAcc {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, ln: f64) {
        if ln == f64::NEG_INFINITY {
            return;
        }
        if ln <= self.max {
            self.sum += (ln - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - ln).exp() + 1.0;
            self.max = ln;
        }
    }

    /// ln of the accumulated sum; -inf when nothing was pushed.
    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_q.
pub(crate) fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_q(x) and P'_q(x)
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=q {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = qf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}
