//! Countdown and transmission duration laws.
//!
//! Every law exposes its mean, CDF, equilibrium-residual CDF and a sampler.
//! The text grammar used on the command line is
//! `exp:MEAN`, `uni:LO,HI`, `det:VALUE`, `erlang:STAGES,STAGE_MEAN` and
//! `mix:W1*SPEC1|W2*SPEC2|...` (mixtures do not nest).

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DurationDistribution {
    Exponential {
        mean: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Deterministic {
        value: f64,
    },
    Erlang {
        stages: u32,
        stage_mean: f64,
    },
    Mixture {
        components: Vec<(f64, DurationDistribution)>,
    },
}

impl DurationDistribution {
    pub fn exponential(mean: f64) -> Self {
        Self::Exponential { mean }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::Uniform { lo, hi }
    }

    pub fn deterministic(value: f64) -> Self {
        Self::Deterministic { value }
    }

    pub fn erlang(stages: u32, stage_mean: f64) -> Self {
        Self::Erlang { stages, stage_mean }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Self::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return bad(format!("exponential mean {mean} must be positive"));
                }
            }
            Self::Uniform { lo, hi } => {
                if *lo < 0.0 || !(hi.is_finite() && hi > lo) {
                    return bad(format!("uniform bounds [{lo}, {hi}] need 0 <= lo < hi"));
                }
            }
            Self::Deterministic { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return bad(format!("deterministic value {value} must be positive"));
                }
            }
            Self::Erlang { stages, stage_mean } => {
                if *stages == 0 {
                    return bad("erlang needs at least one stage".into());
                }
                if !(stage_mean.is_finite() && *stage_mean > 0.0) {
                    return bad(format!("erlang stage mean {stage_mean} must be positive"));
                }
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return bad("mixture needs at least one component".into());
                }
                let mut total = 0.0;
                for (w, part) in components {
                    if !(w.is_finite() && *w > 0.0) {
                        return bad(format!("mixture weight {w} must be positive"));
                    }
                    if matches!(part, Self::Mixture { .. }) {
                        return bad("mixtures do not nest".into());
                    }
                    part.validate()?;
                    total += w;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture weights sum to {total}, expected 1"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { mean } => *mean,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Deterministic { value } => *value,
            Self::Erlang { stages, stage_mean } => *stages as f64 * stage_mean,
            Self::Mixture { components } => components.iter().map(|(w, d)| w * d.mean()).sum(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { mean } => 1.0 - (-t / mean).exp(),
            Self::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Deterministic { value } => {
                if t >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Erlang { stages, stage_mean } => {
                // 1 - e^{-x} Σ_{j<k} x^j / j!  with x = t / stage_mean.
                let x = t / stage_mean;
                let mut term = 1.0;
                let mut sum = 1.0;
                for j in 1..*stages {
                    term *= x / j as f64;
                    sum += term;
                }
                1.0 - (-x).exp() * sum
            }
            Self::Mixture { components } => components.iter().map(|(w, d)| w * d.cdf(t)).sum(),
        }
    }

    /// Equilibrium residual-life CDF: `(1/mean) ∫_0^t (1 - F(u)) du`.
    pub fn residual_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { mean } => 1.0 - (-t / mean).exp(),
            Self::Uniform { lo, hi } => {
                let mean = 0.5 * (lo + hi);
                let integral = if t <= *lo {
                    t
                } else if t >= *hi {
                    mean
                } else {
                    let u = t - lo;
                    lo + u - u * u / (2.0 * (hi - lo))
                };
                (integral / mean).clamp(0.0, 1.0)
            }
            Self::Deterministic { value } => (t / value).clamp(0.0, 1.0),
            Self::Erlang { stages, stage_mean } => {
                // (1/k) Σ_{j=1}^{k} P(j, x): mean of the regularized lower
                // incomplete gamma over integer shapes 1..=k.
                let k = *stages;
                let x = t / stage_mean;
                let e = (-x).exp();
                let mut term = e;
                let mut tail = e; // e^{-x} Σ_{m=0}^{j-1} x^m / m!, starting at j = 1
                let mut sum = 0.0;
                for j in 1..=k {
                    sum += 1.0 - tail;
                    if j < k {
                        term *= x / j as f64;
                        tail += term;
                    }
                }
                (sum / k as f64).clamp(0.0, 1.0)
            }
            Self::Mixture { components } => {
                // Residual CDFs combine weighted by component means.
                let mean = self.mean();
                let num: f64 = components
                    .iter()
                    .map(|(w, d)| w * d.mean() * d.residual_cdf(t))
                    .sum();
                (num / mean).clamp(0.0, 1.0)
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { mean } => {
                let u: f64 = rng.gen();
                -mean * (1.0 - u).ln()
            }
            Self::Uniform { lo, hi } => {
                let u: f64 = rng.gen();
                lo + u * (hi - lo)
            }
            Self::Deterministic { value } => *value,
            Self::Erlang { stages, stage_mean } => {
                let mut total = 0.0;
                for _ in 0..*stages {
                    let u: f64 = rng.gen();
                    total += -stage_mean * (1.0 - u).ln();
                }
                total
            }
            Self::Mixture { components } => {
                let mut pick: f64 = rng.gen();
                for (w, d) in components {
                    if pick < *w {
                        return d.sample(rng);
                    }
                    pick -= w;
                }
                components.last().expect("validated mixture").1.sample(rng)
            }
        }
    }

    /// Parses the spec grammar; the result is validated.
    pub fn parse(spec: &str) -> Result<Self> {
        let parsed = Self::parse_inner(spec, true)?;
        parsed.validate()?;
        Ok(parsed)
    }

    fn parse_inner(spec: &str, allow_mixture: bool) -> Result<Self> {
        let fail = |reason: &str| Error::DistributionParse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| fail("expected `kind:args`"))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| fail(&format!("`{s}` is not a number")))
        };
        match kind.trim() {
            "exp" => Ok(Self::Exponential { mean: num(args)? }),
            "det" => Ok(Self::Deterministic { value: num(args)? }),
            "uni" => {
                let (lo, hi) = args
                    .split_once(',')
                    .ok_or_else(|| fail("uni needs LO,HI"))?;
                Ok(Self::Uniform {
                    lo: num(lo)?,
                    hi: num(hi)?,
                })
            }
            "erlang" => {
                let (k, m) = args
                    .split_once(',')
                    .ok_or_else(|| fail("erlang needs STAGES,STAGE_MEAN"))?;
                let stages = k
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| fail(&format!("`{k}` is not a stage count")))?;
                Ok(Self::Erlang {
                    stages,
                    stage_mean: num(m)?,
                })
            }
            "mix" => {
                if !allow_mixture {
                    return Err(fail("mixtures do not nest"));
                }
                let mut components = Vec::new();
                for part in args.split('|') {
                    let (w, inner) = part
                        .split_once('*')
                        .ok_or_else(|| fail("mixture component needs WEIGHT*SPEC"))?;
                    components.push((num(w)?, Self::parse_inner(inner, false)?));
                }
                Ok(Self::Mixture { components })
            }
            other => Err(fail(&format!("unknown kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for DurationDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Exponential { mean } => write!(f, "exp:{mean}"),
            Self::Uniform { lo, hi } => write!(f, "uni:{lo},{hi}"),
            Self::Deterministic { value } => write!(f, "det:{value}"),
            Self::Erlang { stages, stage_mean } => write!(f, "erlang:{stages},{stage_mean}"),
            Self::Mixture { components } => {
                write!(f, "mix:")?;
                for (i, (w, d)) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{w}*{d}")?;
                }
                Ok(())
            }
        }
    }
}
