use serde::{Deserialize, Serialize};

use crate::exprlang::{parse, Expr};
use crate::{Error, Result};

/// Smallest time at which coefficients are evaluated; keeps `log(1/t)`
/// chains finite.
pub const T_FLOOR: f64 = 1e-300;

/// Catalog of oscillation scales, as written in configuration files, e.g.
/// `{"kind": "log_power", "gamma": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NuSpec {
    Constant { c: f64 },
    Log,
    LogPower { gamma: f64 },
    /// `log(1/t) · Π_i (log^{[i]}(1/t))^{γ_i}` for `i = 2, 3, ...`.
    IteratedLog { gammas: Vec<f64> },
    Custom { expr: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossClass {
    None,
    Finite,
    ArbitrarilySmall,
    Infinite,
}

impl LossClass {
    pub fn label(self) -> &'static str {
        match self {
            LossClass::None => "none",
            LossClass::Finite => "finite",
            LossClass::ArbitrarilySmall => "arbitrarily_small",
            LossClass::Infinite => "infinite",
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Constant(f64),
    Log,
    LogPower(f64),
    IteratedLog(Vec<f64>),
    Custom(Expr),
}

/// A validated oscillation scale `ν` on `(0, T]`: positive, strictly
/// decreasing (unless constant) and bounded below by `C₄ = ν(T)`.
#[derive(Debug, Clone)]
pub struct NuFunction {
    spec: NuSpec,
    kind: Kind,
    horizon: f64,
    c4: f64,
}

impl NuFunction {
    pub fn new(spec: NuSpec, horizon: f64) -> Result<Self> {
        if !(horizon > T_FLOOR && horizon.is_finite()) {
            return Err(Error::OutOfRange { what: "T", value: horizon, range: "(0, inf)".into() });
        }
        let kind = match &spec {
            NuSpec::Constant { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidInput(format!("constant nu must be positive, got {c}")));
                }
                Kind::Constant(*c)
            }
            NuSpec::Log => Kind::Log,
            NuSpec::LogPower { gamma } => {
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidInput(format!("log_power needs gamma > 0, got {gamma}")));
                }
                Kind::LogPower(*gamma)
            }
            NuSpec::IteratedLog { gammas } => {
                if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
                    return Err(Error::InvalidInput("iterated_log needs gammas in (0, 1]".into()));
                }
                Kind::IteratedLog(gammas.clone())
            }
            NuSpec::Custom { expr } => {
                let e = parse(expr)?;
                e.check_only_var("t")?;
                Kind::Custom(e)
            }
        };
        let mut nu = NuFunction { spec, kind, horizon, c4: 0.0 };
        nu.validate()?;
        Ok(nu)
    }

    pub fn constant(c: f64, horizon: f64) -> Result<Self> {
        NuFunction::new(NuSpec::Constant { c }, horizon)
    }

    pub fn log(horizon: f64) -> Result<Self> {
        NuFunction::new(NuSpec::Log, horizon)
    }

    pub fn spec(&self) -> &NuSpec {
        &self.spec
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    /// `inf ν = ν(T)`.
    pub fn c4(&self) -> f64 {
        self.c4
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= T_FLOOR && t <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                range: format!("[{T_FLOOR:e}, {}]", self.horizon),
            });
        }
        self.eval_unchecked(t)
    }

    fn eval_unchecked(&self, t: f64) -> Result<f64> {
        let l = (1.0 / t).ln();
        let v = match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Log => l,
            Kind::LogPower(g) => {
                if l <= 0.0 {
                    return Err(Error::OutOfRange { what: "log(1/t)", value: l, range: "(0, inf)".into() });
                }
                l.powf(*g)
            }
            Kind::IteratedLog(gammas) => {
                let mut v = l;
                let mut inner = l;
                for g in gammas {
                    if inner <= 0.0 {
                        return Err(Error::OutOfRange {
                            what: "iterated log",
                            value: inner,
                            range: "(0, inf)".into(),
                        });
                    }
                    inner = inner.ln();
                    if inner <= 0.0 {
                        return Err(Error::OutOfRange {
                            what: "iterated log",
                            value: inner,
                            range: "(0, inf)".into(),
                        });
                    }
                    v *= inner.powf(*g);
                }
                v
            }
            Kind::Custom(e) => e.eval1("t", t)?,
        };
        Ok(v)
    }

    // Positivity, monotonicity and the lower bound on the dyadic grid
    // t_j = T 2^{-j} down to the evaluation floor.
    fn validate(&mut self) -> Result<()> {
        let mut prev: Option<f64> = None;
        let mut t = self.horizon;
        while t >= T_FLOOR {
            let v = self.eval_unchecked(t)?;
            if !(v > 0.0) {
                return Err(Error::Invariant(format!("nu({t:e}) = {v} is not positive")));
            }
            if let Some(p) = prev {
                if !self.is_constant() && v <= p {
                    return Err(Error::Invariant(format!("nu is not strictly decreasing near t = {t:e}")));
                }
            }
            prev = Some(v);
            t *= 0.5;
        }
        self.c4 = self.eval_unchecked(self.horizon)?;
        Ok(())
    }

    /// Loss class for catalog scales; custom expressions carry no structure
    /// to classify.
    pub fn classify_loss(&self) -> Result<LossClass> {
        match &self.spec {
            NuSpec::Constant { .. } => Ok(LossClass::None),
            NuSpec::Log => Ok(LossClass::Finite),
            NuSpec::LogPower { gamma } if *gamma < 1.0 => Ok(LossClass::ArbitrarilySmall),
            NuSpec::LogPower { gamma } if *gamma == 1.0 => Ok(LossClass::Finite),
            NuSpec::LogPower { gamma } => Err(Error::InvalidInput(format!(
                "log_power with gamma = {gamma} > 1 is outside the classified catalog"
            ))),
            NuSpec::IteratedLog { .. } => Ok(LossClass::Infinite),
            NuSpec::Custom { .. } => {
                Err(Error::InvalidInput("custom nu expressions cannot be classified".into()))
            }
        }
    }
}
