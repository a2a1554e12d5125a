//! The discretized Lamperti clock and its inversion.
//!
//! For a sampled path of `xi` the clock `I_t = int_0^t exp(alpha xi_s) ds`
//! is approximated on the grid either by the left Riemann sum (piecewise
//! constant integrand) or by the trapezoid rule (integrand linear between
//! grid points). Both interpolants are strictly increasing and piecewise
//! polynomial, so the first passage `tau_n(r) = inf{s : I_s >= r}` is solved
//! exactly within a grid step: a linear equation for the Riemann scheme and
//! a quadratic (stable root form) for the trapezoid scheme.
//!
//! The pssMp sample is then `X_t = x exp(xi_{[tau_n(r) n]/n})` with
//! `r = t x^-alpha`, which equals the exact process at the perturbed time
//! `T = x^alpha I_{[tau_n(r) n]/n}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::levy::{GridPath, LevyModel};

/// Quadrature scheme for the clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Piecewise-constant integrand `exp(alpha xi_{[sn]/n})`.
    LeftRiemann,
    /// Integrand linear between the points `(i/n, exp(alpha xi_{i/n}))`.
    Trapezoid,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::LeftRiemann => "left_riemann",
            Scheme::Trapezoid => "trapezoid",
        }
    }
}

/// Largest magnitude of `alpha * xi` accepted by the quadrature; beyond it
/// `exp` overflows or flushes to zero and the clock stops being strictly
/// increasing in floating point.
pub const MAX_EXPONENT: f64 = 700.0;

/// Running values of the discretized clock on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralApprox {
    pub scheme: Scheme,
    pub n: u32,
    /// `I_{k/n}` for `k = 0..=steps`; strictly increasing from 0.
    pub grid_values: Vec<f64>,
    /// `exp(alpha xi_{k/n})` for `k = 0..=steps`.
    pub integrand_values: Vec<f64>,
    pub alpha: f64,
}

impl IntegralApprox {
    pub fn steps(&self) -> usize {
        self.grid_values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 / self.n as f64
    }

    pub fn last(&self) -> f64 {
        *self.grid_values.last().unwrap()
    }

    /// Evaluate the scheme's interpolant at time `s` in `[0, horizon]`.
    pub fn value_at(&self, s: f64) -> f64 {
        let n = self.n as f64;
        let scaled = s * n;
        if scaled <= 0.0 {
            return 0.0;
        }
        let k = (scaled.floor() as usize).min(self.steps().saturating_sub(1));
        let u = s - k as f64 / n;
        let f_left = self.integrand_values[k];
        match self.scheme {
            Scheme::LeftRiemann => self.grid_values[k] + u * f_left,
            Scheme::Trapezoid => {
                let f_right = self.integrand_values[k + 1];
                self.grid_values[k] + u * f_left + 0.5 * u * u * n * (f_right - f_left)
            }
        }
    }
}

/// Compute the running clock of `path` under `scheme`.
///
/// Uses compensated summation so that inversions near a threshold stay
/// reliable over up to 10^7 terms. `alpha * xi` outside `[-700, 700]` is an
/// error naming the offending grid index rather than a silent infinity.
pub fn integral(path: &GridPath, alpha: f64, scheme: Scheme) -> Result<IntegralApprox> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    if path.values.len() < 2 {
        return Err(Error::invalid("path", "needs at least one grid step"));
    }
    let n = path.n as f64;
    let mut integrand = Vec::with_capacity(path.values.len());
    for (index, &xi) in path.values.iter().enumerate() {
        let exponent = alpha * xi;
        if exponent.abs() > MAX_EXPONENT {
            return Err(Error::ExponentOverflow {
                index,
                value: exponent,
            });
        }
        integrand.push(exponent.exp());
    }
    let mut grid = Vec::with_capacity(path.values.len());
    let mut acc = KahanSum::new();
    grid.push(0.0);
    match scheme {
        Scheme::LeftRiemann => {
            for &f in &integrand[..path.steps()] {
                acc.add(f / n);
                grid.push(acc.value());
            }
        }
        Scheme::Trapezoid => {
            for pair in integrand.windows(2) {
                acc.add((pair[0] + pair[1]) / (2.0 * n));
                grid.push(acc.value());
            }
        }
    }
    Ok(IntegralApprox {
        scheme,
        n: path.n,
        grid_values: grid,
        integrand_values: integrand,
        alpha,
    })
}

/// Result of inverting the clock at a level `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingResult {
    /// `tau_n(r)`, or the horizon when the level was not reached.
    pub tau_n: f64,
    /// Grid index `k` with `tau_n in [k/n, (k+1)/n)`.
    pub grid_index: usize,
    /// `{tau_n * n}` in `[0, 1)`.
    pub frac_part: f64,
    /// `xi_{[tau_n n]/n}`, the value used by the pssMp sample.
    pub xi_at_floor: f64,
    /// Whether the level was reached within the sampled horizon.
    pub reached: bool,
}

/// Solve for the offset `u` in `[0, 1/n]` with interpolant value `r` on the
/// step starting at `I_left`, given integrand values at both ends.
fn solve_step(scheme: Scheme, i_left: f64, f_left: f64, f_right: f64, n: f64, r: f64) -> f64 {
    let c = r - i_left;
    let u = match scheme {
        Scheme::LeftRiemann => c / f_left,
        Scheme::Trapezoid => {
            // a u^2 + b u = c with a = (f_right - f_left) n / 2, b = f_left.
            // The discriminant is >= f_right^2 >= 0 for any c up to the full
            // step, and the 2c / (b + sqrt) form avoids cancellation when
            // the slope change is small.
            let a = 0.5 * n * (f_right - f_left);
            let b = f_left;
            let disc = (b * b + 4.0 * a * c).max(0.0);
            2.0 * c / (b + disc.sqrt())
        }
    };
    u.clamp(0.0, 1.0 / n)
}

/// First passage of the discretized clock over the level `r`.
///
/// If `r` is not reached within the sampled horizon the result carries
/// `reached = false` and `tau_n = horizon`; the caller is expected to extend
/// the path. If `r` equals a grid value of the clock exactly, `tau_n` is
/// that grid point and `frac_part = 0`.
pub fn invert(integral: &IntegralApprox, r: f64) -> HittingResult {
    let n = integral.n as f64;
    if r > integral.last() {
        let steps = integral.steps();
        return HittingResult {
            tau_n: integral.horizon(),
            grid_index: steps,
            frac_part: 0.0,
            xi_at_floor: integral.integrand_values[steps].ln() / integral.alpha,
            reached: false,
        };
    }
    let idx = integral.grid_values.partition_point(|&v| v < r);
    if idx == 0 || integral.grid_values[idx] == r {
        // level at or below a grid value of the clock
        let xi = integral.integrand_values[idx].ln() / integral.alpha;
        return HittingResult {
            tau_n: idx as f64 / n,
            grid_index: idx,
            frac_part: 0.0,
            xi_at_floor: xi,
            reached: true,
        };
    }
    let k = idx - 1;
    let u = solve_step(
        integral.scheme,
        integral.grid_values[k],
        integral.integrand_values[k],
        integral.integrand_values[k + 1],
        n,
        r,
    );
    let frac = u * n;
    let (grid_index, frac_part) = if frac >= 1.0 { (k + 1, 0.0) } else { (k, frac) };
    HittingResult {
        tau_n: (k as f64 + frac) / n,
        grid_index,
        frac_part,
        xi_at_floor: integral.integrand_values[grid_index].ln() / integral.alpha,
        reached: true,
    }
}

/// Default horizon cap (in time units) for adaptive path extension.
pub const DEFAULT_HORIZON_CAP: f64 = 65536.0;

/// A pssMp sampled at a finite set of times, with diagnostics.
#[derive(Debug, Clone)]
pub struct PssmpSample {
    /// Starting position.
    pub x: f64,
    /// Self-similarity index (`1/alpha` is the Hurst index).
    pub alpha: f64,
    /// Requested sampling times.
    pub times: Vec<f64>,
    /// `X_t = x exp(xi_{[tau_n(t x^-alpha) n]/n})` per time.
    pub values: Vec<f64>,
    /// Inversion diagnostics per time.
    pub hitting: Vec<HittingResult>,
    /// Time perturbation `T = x^alpha I_{[tau_n n]/n}` per time, evaluated
    /// with this sample's own clock (substitute a finer clock for limit
    /// experiments via [`time_shift`]).
    pub time_shift: Vec<f64>,
    /// The driving path, retained for error analysis.
    pub path: GridPath,
    /// The clock used for the inversions.
    pub integral: IntegralApprox,
}

/// Sample a pssMp at the given times with the default horizon cap.
pub fn sample_pssmp<R: Rng + ?Sized>(
    model: &LevyModel,
    x: f64,
    alpha: f64,
    times: &[f64],
    n: u32,
    scheme: Scheme,
    rng: &mut R,
) -> Result<PssmpSample> {
    sample_pssmp_with_cap(model, x, alpha, times, n, scheme, DEFAULT_HORIZON_CAP, rng)
}

/// Sample a pssMp, adaptively doubling the sampled horizon of `xi` until the
/// clock reaches `t_max x^-alpha` or the horizon cap is exceeded.
#[allow(clippy::too_many_arguments)]
pub fn sample_pssmp_with_cap<R: Rng + ?Sized>(
    model: &LevyModel,
    x: f64,
    alpha: f64,
    times: &[f64],
    n: u32,
    scheme: Scheme,
    horizon_cap: f64,
    rng: &mut R,
) -> Result<PssmpSample> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid("x", "must be positive and finite"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    if times.is_empty() {
        return Err(Error::invalid("times", "need at least one sampling time"));
    }
    for w in times.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::invalid("times", "must be strictly increasing"));
        }
    }
    if !(times[0] > 0.0) {
        return Err(Error::invalid("times", "must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("n", "grid resolution must be positive"));
    }

    let x_pow = x.powf(alpha);
    let targets: Vec<f64> = times.iter().map(|t| t / x_pow).collect();
    let r_max = *targets.last().unwrap();

    let (path, clock) = grow_until(model, alpha, scheme, n, r_max, horizon_cap, rng, 0)?;

    let mut values = Vec::with_capacity(times.len());
    let mut hitting = Vec::with_capacity(times.len());
    let mut shifts = Vec::with_capacity(times.len());
    for &r in &targets {
        let mut hit = invert(&clock, r);
        // read xi from the path directly so downstream identities are exact
        hit.xi_at_floor = path.values[hit.grid_index];
        values.push(x * hit.xi_at_floor.exp());
        shifts.push(x_pow * clock.grid_values[hit.grid_index]);
        hitting.push(hit);
    }
    Ok(PssmpSample {
        x,
        alpha,
        times: times.to_vec(),
        values,
        hitting,
        time_shift: shifts,
        path,
        integral: clock,
    })
}

/// Sample a path and extend it (doubling) until its clock reaches `r_max`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn grow_until<R: Rng + ?Sized>(
    model: &LevyModel,
    alpha: f64,
    scheme: Scheme,
    n: u32,
    r_max: f64,
    horizon_cap: f64,
    rng: &mut R,
    seed_tag: u64,
) -> Result<(GridPath, IntegralApprox)> {
    let cap_steps = (horizon_cap * n as f64).ceil() as usize;
    // Initial guess: the clock grows at unit rate while xi is near 0, so a
    // horizon around 2 r_max usually suffices; doubling covers the rest.
    let mut steps = ((2.0 * r_max * n as f64).ceil() as usize).clamp(1, cap_steps.max(1));
    let mut path =
        crate::levy::sample_path_tagged(model, n, steps as f64 / n as f64, rng, seed_tag)?;
    loop {
        let clock = integral(&path, alpha, scheme)?;
        if clock.last() >= r_max {
            return Ok((path, clock));
        }
        if steps >= cap_steps {
            return Err(Error::HorizonCapExceeded {
                cap: horizon_cap,
                r: r_max,
            });
        }
        steps = (steps * 2).min(cap_steps);
        crate::levy::extend_path(&mut path, model, steps, rng)?;
    }
}

/// Time perturbations `n (t_i - T_i)` of a sample, with the clock `I`
/// evaluated from a finer surrogate of the same replication.
pub fn time_shift(sample: &PssmpSample, truth: &IntegralApprox) -> Result<Vec<f64>> {
    let n = sample.path.n;
    if !truth.n.is_multiple_of(n) {
        return Err(Error::GridMismatch {
            fine: truth.n,
            coarse: n,
        });
    }
    if truth.alpha != sample.integral.alpha {
        return Err(Error::IntegralMismatch {
            message: format!("alpha {} vs {}", truth.alpha, sample.integral.alpha),
        });
    }
    let stride = (truth.n / n) as usize;
    let x_pow = sample.x.powf(sample.alpha);
    sample
        .times
        .iter()
        .zip(&sample.hitting)
        .map(|(&t, hit)| {
            let fine_index = hit.grid_index * stride;
            if fine_index >= truth.grid_values.len() {
                return Err(Error::IntegralMismatch {
                    message: "fine clock does not cover the coarse hitting index".into(),
                });
            }
            Ok(n as f64 * (t - x_pow * truth.grid_values[fine_index]))
        })
        .collect()
}

/// Streaming first passage of the clock for a freshly sampled path, keeping
/// O(1) memory. Used for fine-resolution diagnostics where the path itself
/// is not needed afterwards.
pub fn invert_streaming<R: Rng + ?Sized>(
    model: &LevyModel,
    alpha: f64,
    scheme: Scheme,
    n: u32,
    r: f64,
    horizon_cap: f64,
    rng: &mut R,
) -> Result<HittingResult> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("r", "must be positive and finite"));
    }
    if n == 0 {
        return Err(Error::invalid("n", "grid resolution must be positive"));
    }
    let sampler = crate::levy::path_increments(model, n)?;
    let nf = n as f64;
    let cap_steps = (horizon_cap * nf).ceil() as usize;
    let mut acc = KahanSum::new();
    let mut xi_left = 0.0f64;
    let mut f_left = 1.0f64;
    for k in 0..cap_steps {
        let (xi_right, f_right) = {
            let xi = xi_left + sampler.step(k, rng);
            let exponent = alpha * xi;
            if exponent.abs() > MAX_EXPONENT {
                return Err(Error::ExponentOverflow {
                    index: k + 1,
                    value: exponent,
                });
            }
            (xi, exponent.exp())
        };
        let i_left = acc.value();
        match scheme {
            Scheme::LeftRiemann => acc.add(f_left / nf),
            Scheme::Trapezoid => acc.add((f_left + f_right) / (2.0 * nf)),
        }
        let i_right = acc.value();
        if i_right >= r {
            if i_right == r {
                return Ok(HittingResult {
                    tau_n: (k + 1) as f64 / nf,
                    grid_index: k + 1,
                    frac_part: 0.0,
                    xi_at_floor: xi_right,
                    reached: true,
                });
            }
            let u = solve_step(scheme, i_left, f_left, f_right, nf, r);
            let frac = u * nf;
            let (grid_index, frac_part, xi) = if frac >= 1.0 {
                (k + 1, 0.0, xi_right)
            } else {
                (k, frac, xi_left)
            };
            return Ok(HittingResult {
                tau_n: (k as f64 + frac) / nf,
                grid_index,
                frac_part,
                xi_at_floor: xi,
                reached: true,
            });
        }
        xi_left = xi_right;
        f_left = f_right;
    }
    Err(Error::HorizonCapExceeded {
        cap: horizon_cap,
        r,
    })
}
