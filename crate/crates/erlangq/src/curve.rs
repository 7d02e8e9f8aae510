//! Time-indexed result curves with provenance tags.

/// Which route produced a value. Output rows always carry this so plots never
/// silently mix closed-form, ODE and simulation numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Ode,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Ode => "ode",
            Provenance::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
    pub std_error: Option<f64>,
    pub tail_estimate: Option<f64>,
}

/// A named quantity sampled over a time grid.
#[derive(Clone, Debug)]
pub struct TransientCurve {
    pub quantity: String,
    pub n: Option<u64>,
    pub s: Option<u32>,
    pub provenance: Provenance,
    pub points: Vec<CurvePoint>,
}

impl TransientCurve {
    pub fn new(quantity: impl Into<String>, provenance: Provenance) -> Self {
        Self {
            quantity: quantity.into(),
            n: None,
            s: None,
            provenance,
            points: Vec::new(),
        }
    }

    pub fn with_state(mut self, n: u64, s: u32) -> Self {
        self.n = Some(n);
        self.s = Some(s);
        self
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}
