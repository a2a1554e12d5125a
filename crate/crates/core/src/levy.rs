//! Levy process models with exact equidistant-increment sampling.
//!
//! A [`LevyModel`] describes the driving process `xi` of a Lamperti
//! representation together with its zooming-in metadata: the index `beta`
//! of the small-time limit `xi_hat` and the scaling exponent of
//! `a_n = n^(1/beta)`. Paths are sampled on the grid `k/n` as exact partial
//! sums of i.i.d. increments distributed as `xi_{1/n}`; a fine master grid
//! can be coarsened by pure index selection so that every resolution refers
//! to the same sample path.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};

/// Jump size law of the compound Poisson component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpDist {
    Normal { mean: f64, sd: f64 },
    TwoPoint { up: f64, down: f64, p_up: f64 },
    ExponentialSigned { rate: f64, p_up: f64 },
}

impl JumpDist {
    fn validate(&self) -> Result<()> {
        match *self {
            JumpDist::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::invalid("jump_mean", "must be finite"));
                }
                if !(sd > 0.0) || !sd.is_finite() {
                    return Err(Error::invalid("jump_sd", "must be positive and finite"));
                }
            }
            JumpDist::TwoPoint { up, down, p_up } => {
                if !up.is_finite() || !down.is_finite() {
                    return Err(Error::invalid("jump_up", "jump sizes must be finite"));
                }
                if !(0.0..=1.0).contains(&p_up) {
                    return Err(Error::invalid("jump_p_up", "must lie in [0, 1]"));
                }
            }
            JumpDist::ExponentialSigned { rate, p_up } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    return Err(Error::invalid(
                        "jump_rate_param",
                        "must be positive and finite",
                    ));
                }
                if !(0.0..=1.0).contains(&p_up) {
                    return Err(Error::invalid("jump_p_up", "must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpDist::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            JumpDist::TwoPoint { up, down, p_up } => {
                if rng.gen::<f64>() < p_up {
                    up
                } else {
                    down
                }
            }
            JumpDist::ExponentialSigned { rate, p_up } => {
                let e: f64 = rng.sample(Exp1);
                let mag = e / rate;
                if rng.gen::<f64>() < p_up {
                    mag
                } else {
                    -mag
                }
            }
        }
    }
}

/// Structural family of the model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// The constant zero process.
    Zero,
    /// `xi_t = mu t + sigma W_t`.
    BrownianDrift { mu: f64, sigma: f64 },
    /// Strictly stable with index `stability` and `positivity = P(xi_1 < 0)`.
    Stable { stability: f64, positivity: f64 },
    /// `xi_t = mu t + sigma W_t + compound Poisson(rate, jump_dist)`.
    CompoundPoissonBrownian {
        mu: f64,
        sigma: f64,
        rate: f64,
        jump_dist: JumpDist,
    },
}

/// A validated Levy process model with zooming-in metadata.
///
/// `beta` is the self-similarity index of the small-time limit `xi_hat`
/// (assumption: `a_n xi_{1/n}` converges to a nondegenerate `xi_hat_1`),
/// and `scaling_index = 1/beta` so that `a_n = n^(1/beta)`. For the built-in
/// kinds both are derived; [`LevyModel::override_zooming`] is the seam for
/// models whose limit is known externally.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    kind: ModelKind,
    beta: f64,
    scaling_index: f64,
}

impl LevyModel {
    /// The zero process. Every increment is 0; zooming metadata is
    /// immaterial because all scaled errors vanish identically.
    pub fn zero() -> Self {
        LevyModel {
            kind: ModelKind::Zero,
            beta: 1.0,
            scaling_index: 1.0,
        }
    }

    /// Brownian motion with drift. `sigma > 0` gives `beta = 2` with
    /// `xi_hat = sigma * (standard BM)`; `sigma = 0` is deterministic drift
    /// with `beta = 1` and `xi_hat_t = mu t`.
    pub fn brownian_drift(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", "must be nonnegative and finite"));
        }
        if sigma == 0.0 && mu == 0.0 {
            return Err(Error::invalid(
                "sigma",
                "degenerate model: need sigma > 0 or mu != 0 (use LevyModel::zero for the zero process)",
            ));
        }
        let beta = if sigma > 0.0 { 2.0 } else { 1.0 };
        Ok(LevyModel {
            kind: ModelKind::BrownianDrift { mu, sigma },
            beta,
            scaling_index: 1.0 / beta,
        })
    }

    /// Strictly stable process; `beta = stability` and `xi_hat` has the same
    /// law (strict stability makes zooming in exact at every scale).
    pub fn stable(stability: f64, positivity: f64) -> Result<Self> {
        if !(0.0 < positivity && positivity < 1.0) {
            return Err(Error::invalid("positivity", "must lie in (0, 1)"));
        }
        // Admissibility alpha - 1 <= alpha*rho <= 1 is re-checked by the
        // sampler; doing it here names the field at model-build time.
        if stability * positivity > 1.0 + 1e-12 || stability * positivity < stability - 1.0 - 1e-12
        {
            return Err(Error::invalid(
                "positivity",
                format!(
                    "(stability, positivity) = ({stability}, {positivity}) violates stability-1 <= stability*positivity <= 1"
                ),
            ));
        }
        StableLaw::new(stability, positivity)?;
        Ok(LevyModel {
            kind: ModelKind::Stable {
                stability,
                positivity,
            },
            beta: stability,
            scaling_index: 1.0 / stability,
        })
    }

    /// Brownian motion with drift plus a compound Poisson jump part whose
    /// jump times and sizes are recorded exactly during sampling.
    pub fn compound_poisson_brownian(
        mu: f64,
        sigma: f64,
        rate: f64,
        jump_dist: JumpDist,
    ) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", "must be nonnegative and finite"));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::invalid(
                "jump_rate",
                "must be nonnegative and finite",
            ));
        }
        jump_dist.validate()?;
        if sigma == 0.0 && mu == 0.0 && rate == 0.0 {
            return Err(Error::invalid(
                "sigma",
                "degenerate model: no Brownian part, drift, or jumps",
            ));
        }
        // Small-time behavior: the Brownian part dominates when present,
        // otherwise the drift; a pure compound Poisson process has no
        // nondegenerate zooming limit (it is 0 with probability -> 1).
        let beta = if sigma > 0.0 { 2.0 } else { 1.0 };
        Ok(LevyModel {
            kind: ModelKind::CompoundPoissonBrownian {
                mu,
                sigma,
                rate,
                jump_dist,
            },
            beta,
            scaling_index: 1.0 / beta,
        })
    }

    /// Replace the derived zooming metadata. Escape hatch for externally
    /// identified limits; the built-in experiments never need it.
    pub fn override_zooming(mut self, beta: f64) -> Result<Self> {
        if !(0.0 < beta && beta <= 2.0) {
            return Err(Error::invalid("beta", "must lie in (0, 2]"));
        }
        self.beta = beta;
        self.scaling_index = 1.0 / beta;
        Ok(self)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Index of the zooming limit `xi_hat`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Exponent in `a_n = n^scaling_index`; equals `1/beta`.
    pub fn scaling_index(&self) -> f64 {
        self.scaling_index
    }

    /// The scaling sequence `a_n = n^(1/beta)`.
    pub fn a_n(&self, n: u32) -> f64 {
        (n as f64).powf(self.scaling_index)
    }

    /// Variance parameter of the Brownian component (0 when absent).
    pub fn sigma(&self) -> f64 {
        match self.kind {
            ModelKind::BrownianDrift { sigma, .. } => sigma,
            ModelKind::CompoundPoissonBrownian { sigma, .. } => sigma,
            _ => 0.0,
        }
    }

    /// Whether sampled paths carry exact jump records.
    pub fn records_jumps(&self) -> bool {
        matches!(self.kind, ModelKind::CompoundPoissonBrownian { .. })
    }

    /// The model of the zooming limit `xi_hat`, which is itself a Levy
    /// process (self-similar of index `1/beta`). The zero process maps to
    /// itself (its degenerate limit is exact at every scale); a pure
    /// compound Poisson process has no nondegenerate limit and errors.
    pub fn zoom_limit_model(&self) -> Result<LevyModel> {
        match self.kind {
            ModelKind::Zero => Ok(LevyModel::zero()),
            ModelKind::BrownianDrift { mu, sigma } => {
                if sigma > 0.0 {
                    LevyModel::brownian_drift(0.0, sigma)
                } else {
                    LevyModel::brownian_drift(mu, 0.0)
                }
            }
            ModelKind::Stable {
                stability,
                positivity,
            } => LevyModel::stable(stability, positivity),
            ModelKind::CompoundPoissonBrownian { mu, sigma, .. } => {
                if sigma > 0.0 {
                    LevyModel::brownian_drift(0.0, sigma)
                } else if mu != 0.0 {
                    LevyModel::brownian_drift(mu, 0.0)
                } else {
                    Err(Error::Unsupported(
                        "a pure compound Poisson process has no nondegenerate zooming limit".into(),
                    ))
                }
            }
        }
    }

    /// One draw of `xi_hat_1` from the zooming limit law.
    pub fn sample_xi_hat_1<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let limit = self.zoom_limit_model()?;
        let sampler = IncrementSampler::new(&limit, 1.0)?;
        Ok(sampler.sample_diffuse(rng))
    }
}

/// Build a model from a string-keyed parameter map (the CLI config format).
///
/// Recognized keys: `kind`, `mu`, `sigma`, `stability`, `positivity`,
/// `jump_rate`, `jump_dist`, `jump_mean`, `jump_sd`, `jump_up`, `jump_down`,
/// `jump_p_up`, `jump_rate_param`, `beta`. Unknown keys are rejected.
pub fn make_model(params: &BTreeMap<String, String>) -> Result<LevyModel> {
    const KNOWN: &[&str] = &[
        "kind",
        "mu",
        "sigma",
        "stability",
        "positivity",
        "jump_rate",
        "jump_dist",
        "jump_mean",
        "jump_sd",
        "jump_up",
        "jump_down",
        "jump_p_up",
        "jump_rate_param",
        "beta",
    ];
    for key in params.keys() {
        if !KNOWN.contains(&key.as_str()) {
            return Err(Error::InvalidParameter {
                field: "model",
                message: format!("unknown model key `{key}`"),
            });
        }
    }
    let get = |key: &'static str| -> Result<Option<f64>> {
        match params.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::InvalidParameter {
                    field: "model",
                    message: format!("`{key}` is not a number: {raw}"),
                }),
        }
    };
    let kind = params
        .get("kind")
        .ok_or_else(|| Error::invalid("kind", "missing model kind"))?
        .as_str();
    let model = match kind {
        "zero" => LevyModel::zero(),
        "brownian_drift" => {
            LevyModel::brownian_drift(get("mu")?.unwrap_or(0.0), get("sigma")?.unwrap_or(0.0))?
        }
        "stable" => {
            let stability = get("stability")?
                .ok_or_else(|| Error::invalid("stability", "required for kind = stable"))?;
            let positivity = get("positivity")?.unwrap_or(0.5);
            LevyModel::stable(stability, positivity)?
        }
        "compound_poisson_brownian" => {
            let jump_dist = match params
                .get("jump_dist")
                .map(String::as_str)
                .unwrap_or("normal")
            {
                "normal" => JumpDist::Normal {
                    mean: get("jump_mean")?.unwrap_or(0.0),
                    sd: get("jump_sd")?.unwrap_or(1.0),
                },
                "two_point" => JumpDist::TwoPoint {
                    up: get("jump_up")?.unwrap_or(1.0),
                    down: get("jump_down")?.unwrap_or(-1.0),
                    p_up: get("jump_p_up")?.unwrap_or(0.5),
                },
                "exponential_signed" => JumpDist::ExponentialSigned {
                    rate: get("jump_rate_param")?.unwrap_or(1.0),
                    p_up: get("jump_p_up")?.unwrap_or(0.5),
                },
                other => {
                    return Err(Error::InvalidParameter {
                        field: "jump_dist",
                        message: format!("unknown jump distribution `{other}`"),
                    })
                }
            };
            LevyModel::compound_poisson_brownian(
                get("mu")?.unwrap_or(0.0),
                get("sigma")?.unwrap_or(0.0),
                get("jump_rate")?.unwrap_or(0.0),
                jump_dist,
            )?
        }
        other => {
            return Err(Error::InvalidParameter {
                field: "kind",
                message: format!("unknown model kind `{other}`"),
            })
        }
    };
    match get("beta")? {
        Some(beta) => model.override_zooming(beta),
        None => Ok(model),
    }
}

/// Strictly stable unit-time sampler (Chambers–Mallows–Stuck).
///
/// Parameterization: the characteristic exponent is
/// `-|theta|^alpha (1 - i b tan(pi alpha / 2) sign(theta))` for
/// `alpha != 1`, so `alpha = 2` is `N(0, 2)`; for `alpha = 1` the law is a
/// standard Cauchy plus the deterministic drift fixed by `positivity`.
/// Skewness `b` is derived from `positivity = P(X < 0)` via
/// `b = tan(pi alpha (1/2 - positivity)) / tan(pi alpha / 2)`.
#[derive(Debug, Clone, Copy)]
pub struct StableLaw {
    alpha: f64,
    inv_alpha: f64,
    theta0: f64,
    scale: f64,
    tail_exponent: f64,
    cauchy_drift: f64,
    is_cauchy: bool,
}

impl StableLaw {
    pub fn new(stability: f64, positivity: f64) -> Result<Self> {
        let alpha = stability;
        let rho = positivity;
        if !(0.0 < alpha && alpha <= 2.0) {
            return Err(Error::invalid("stability", "must lie in (0, 2]"));
        }
        let lo = (1.0 - 1.0 / alpha).max(0.0);
        let hi = (1.0 / alpha).min(1.0);
        if !(lo..=hi).contains(&rho) {
            return Err(Error::InvalidParameter {
                field: "positivity",
                message: format!("must lie in [{lo}, {hi}] for stability {alpha}"),
            });
        }
        if (alpha - 1.0).abs() < 1e-12 {
            if rho <= 0.0 || rho >= 1.0 {
                return Err(Error::invalid(
                    "positivity",
                    "must lie in (0, 1) for stability 1",
                ));
            }
            // Strictly 1-stable: standard Cauchy plus drift b with
            // P(b + C < 0) = rho, i.e. b = tan(pi (1/2 - rho)).
            return Ok(StableLaw {
                alpha: 1.0,
                inv_alpha: 1.0,
                theta0: 0.0,
                scale: 1.0,
                tail_exponent: 0.0,
                cauchy_drift: (PI * (0.5 - rho)).tan(),
                is_cauchy: true,
            });
        }
        let half_pi_alpha = PI * alpha / 2.0;
        let skew = if (alpha - 2.0).abs() < 1e-12 {
            0.0
        } else {
            (PI * alpha * (0.5 - rho)).tan() / half_pi_alpha.tan()
        };
        let bt = skew * half_pi_alpha.tan();
        let theta0 = bt.atan() / alpha;
        let scale = (1.0 + bt * bt).powf(1.0 / (2.0 * alpha));
        Ok(StableLaw {
            alpha,
            inv_alpha: 1.0 / alpha,
            theta0,
            scale,
            tail_exponent: (1.0 - alpha) / alpha,
            cauchy_drift: 0.0,
            is_cauchy: false,
        })
    }

    /// One draw at unit time.
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_cauchy {
            let u: f64 = rng.gen();
            return self.cauchy_drift + (PI * (u - 0.5)).tan();
        }
        let v = PI * (rng.gen::<f64>() - 0.5);
        let w: f64 = rng.sample(Exp1);
        let a = self.alpha * (v + self.theta0);
        let base = a.sin() / v.cos().powf(self.inv_alpha);
        self.scale * base * ((v - a).cos() / w).powf(self.tail_exponent)
    }

    /// One increment over a step of length `dt` (strict `dt^(1/alpha)`
    /// scaling).
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        dt.powf(self.inv_alpha) * self.sample_unit(rng)
    }
}

/// One exactly sampled strictly stable increment over a step of length `dt`.
pub fn stable_increment<R: Rng + ?Sized>(
    stability: f64,
    positivity: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", "must be positive and finite"));
    }
    Ok(StableLaw::new(stability, positivity)?.sample_increment(dt, rng))
}

/// Exact jump record of a compound Poisson component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// Equidistant samples `xi_0, xi_{1/n}, ..., xi_{m/n}` of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    /// Grid resolution; the step is `1/n`.
    pub n: u32,
    /// `m + 1` values starting at `values[0] = 0`.
    pub values: Vec<f64>,
    /// Exact jump records, present only for compound Poisson models.
    pub jumps: Option<Vec<Jump>>,
    /// Replication identifier of the stream that produced the path.
    pub seed_tag: u64,
}

impl GridPath {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 / self.n as f64
    }
}

/// Per-cell increment sampler for one (model, resolution) pair.
///
/// Cells are consumed strictly left to right with a fixed draw order, so a
/// path extended from the same stream is bit-identical to one sampled with
/// the longer horizon in the first place.
pub(crate) struct IncrementSampler<'a> {
    model: &'a LevyModel,
    dt: f64,
    sqrt_dt: f64,
    drift: f64,
    stable: Option<StableLaw>,
    poisson: Option<Poisson<f64>>,
}

/// Increment source over cells of width `1/n`, jumps folded into the cell
/// increment without records. Backs streaming consumers that never
/// materialize a path.
pub(crate) fn path_increments(model: &LevyModel, n: u32) -> Result<IncrementSampler<'_>> {
    if n == 0 {
        return Err(Error::invalid("n", "grid resolution must be positive"));
    }
    IncrementSampler::new(model, 1.0 / n as f64)
}

impl<'a> IncrementSampler<'a> {
    pub(crate) fn new(model: &'a LevyModel, dt: f64) -> Result<Self> {
        let (drift, stable, poisson) = match model.kind {
            ModelKind::Zero => (0.0, None, None),
            ModelKind::BrownianDrift { mu, .. } => (mu * dt, None, None),
            ModelKind::Stable {
                stability,
                positivity,
            } => (0.0, Some(StableLaw::new(stability, positivity)?), None),
            ModelKind::CompoundPoissonBrownian { mu, rate, .. } => {
                let poisson = if rate > 0.0 {
                    Some(
                        Poisson::new(rate * dt).map_err(|e| Error::InvalidParameter {
                            field: "jump_rate",
                            message: format!("invalid Poisson intensity: {e}"),
                        })?,
                    )
                } else {
                    None
                };
                (mu * dt, None, poisson)
            }
        };
        Ok(IncrementSampler {
            model,
            dt,
            sqrt_dt: dt.sqrt(),
            drift,
            stable,
            poisson,
        })
    }

    /// Increment of the continuous part only (used for zooming-limit draws).
    fn sample_diffuse<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.model.kind {
            ModelKind::Zero => 0.0,
            ModelKind::BrownianDrift { sigma, .. } => {
                if sigma > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    self.drift + sigma * self.sqrt_dt * z
                } else {
                    self.drift
                }
            }
            ModelKind::Stable { .. } => {
                self.stable.as_ref().unwrap().sample_increment(self.dt, rng)
            }
            ModelKind::CompoundPoissonBrownian { sigma, .. } => {
                if sigma > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    self.drift + sigma * self.sqrt_dt * z
                } else {
                    self.drift
                }
            }
        }
    }

    /// Increment over one cell with jumps folded in and not recorded.
    pub(crate) fn step<R: Rng + ?Sized>(&self, cell_index: usize, rng: &mut R) -> f64 {
        self.sample_cell(cell_index, rng, None)
    }

    /// Increment over the cell `(cell_index/n, (cell_index+1)/n]`, recording
    /// exact jumps when the model has them.
    fn sample_cell<R: Rng + ?Sized>(
        &self,
        cell_index: usize,
        rng: &mut R,
        jumps: Option<&mut Vec<Jump>>,
    ) -> f64 {
        let mut inc = self.sample_diffuse(rng);
        if let ModelKind::CompoundPoissonBrownian { ref jump_dist, .. } = self.model.kind {
            if let Some(poisson) = &self.poisson {
                let count = poisson.sample(rng) as usize;
                if count > 0 {
                    let mut cell_jumps = Vec::with_capacity(count);
                    for _ in 0..count {
                        // u in (0, 1] keeps jump times inside the half-open
                        // cell and strictly positive.
                        let u = 1.0 - rng.gen::<f64>();
                        let time = (cell_index as f64 + u) * self.dt;
                        let size = jump_dist.sample(rng);
                        cell_jumps.push(Jump { time, size });
                    }
                    cell_jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
                    for j in &cell_jumps {
                        inc += j.size;
                    }
                    if let Some(out) = jumps {
                        out.extend_from_slice(&cell_jumps);
                    }
                }
            }
        }
        inc
    }
}

fn checked_steps(n: u32, horizon: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("n", "grid resolution must be positive"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid("horizon", "must be positive and finite"));
    }
    let raw = n as f64 * horizon;
    let rounded = raw.round();
    if (raw - rounded).abs() > 1e-9 * raw.max(1.0) || rounded < 1.0 {
        return Err(Error::FractionalHorizon { n, horizon });
    }
    Ok(rounded as usize)
}

/// Sample a path of `model` on the grid `k/n`, `k = 0..=n*horizon`.
///
/// Values are exact partial sums of i.i.d. increments distributed as
/// `xi_{1/n}`; the result is a deterministic function of
/// `(model, n, horizon, stream)`.
pub fn sample_path<R: Rng + ?Sized>(
    model: &LevyModel,
    n: u32,
    horizon: f64,
    rng: &mut R,
) -> Result<GridPath> {
    sample_path_tagged(model, n, horizon, rng, 0)
}

/// As [`sample_path`], attaching a replication identifier to the path.
pub fn sample_path_tagged<R: Rng + ?Sized>(
    model: &LevyModel,
    n: u32,
    horizon: f64,
    rng: &mut R,
    seed_tag: u64,
) -> Result<GridPath> {
    let steps = checked_steps(n, horizon)?;
    let mut path = GridPath {
        n,
        values: Vec::with_capacity(steps + 1),
        jumps: if model.records_jumps() {
            Some(Vec::new())
        } else {
            None
        },
        seed_tag,
    };
    path.values.push(0.0);
    extend_path(&mut path, model, steps, rng)?;
    Ok(path)
}

/// Extend `path` in place to `total_steps` grid steps using the same stream
/// that sampled it. The extended path is bit-identical to one sampled with
/// the longer horizon directly.
pub fn extend_path<R: Rng + ?Sized>(
    path: &mut GridPath,
    model: &LevyModel,
    total_steps: usize,
    rng: &mut R,
) -> Result<()> {
    let sampler = IncrementSampler::new(model, 1.0 / path.n as f64)?;
    let mut jumps = path.jumps.take();
    let mut current = *path.values.last().expect("grid path is never empty");
    for cell in path.steps()..total_steps {
        let inc = sampler.sample_cell(cell, rng, jumps.as_mut());
        current += inc;
        path.values.push(current);
    }
    path.jumps = jumps;
    Ok(())
}

/// Deterministic coarsening: select every `(fine.n / n)`-th value of the
/// fine grid so both resolutions refer to the same sample path, bit for bit.
pub fn coarsen(fine: &GridPath, n: u32) -> Result<GridPath> {
    if n == 0 {
        return Err(Error::invalid("n", "grid resolution must be positive"));
    }
    if !fine.n.is_multiple_of(n) {
        return Err(Error::GridMismatch {
            fine: fine.n,
            coarse: n,
        });
    }
    let stride = (fine.n / n) as usize;
    if !fine.steps().is_multiple_of(stride) {
        return Err(Error::GridMismatch {
            fine: fine.n,
            coarse: n,
        });
    }
    let values: Vec<f64> = fine.values.iter().copied().step_by(stride).collect();
    Ok(GridPath {
        n,
        values,
        jumps: fine.jumps.clone(),
        seed_tag: fine.seed_tag,
    })
}
