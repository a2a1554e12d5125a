//! Prelimit and limit error variables of the discretization.
//!
//! Everything here is computed from a coupled pair of grids built from one
//! sample path: a fine master grid at resolution `N` standing in for the
//! continuous path, and a coarse grid at resolution `n` obtained by index
//! selection. The prelimit variables (`n(tau - tau_n)`, scaled relative
//! error, time shift, window bounds) are observable; the limit variables
//! (`Delta`, `L(r)`, `xi_hat_{L+U}`) are sampled through fine-grid
//! surrogates driven by dedicated substreams, so prelimit and limit samples
//! of one replication share the same driving path.
//!
//! The limit of the scaled quadrature error is
//!
//! ```text
//! Delta_t = (sigma^2/sqrt(12)) int_0^t f'(xi_s) dW'_s
//!         + sum_{T_m <= t} (f(xi_{T_m}) - f(xi_{T_m-})) (kappa_m - 1/2)
//!         + (f(xi_t) - f(0)) / 2,          f(x) = exp(alpha x),
//! ```
//!
//! with the boundary term dropped for the trapezoid scheme, and the inverse
//! clock error converges to `L(r) = -Delta_{tau(r)} exp(-alpha xi_{tau(r)})`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::lamperti::{self, HittingResult, IntegralApprox, Scheme, MAX_EXPONENT};
use crate::levy::{GridPath, LevyModel, ModelKind};

/// Per-replication bundle of prelimit and limit error variables at one
/// `(n, time)` pair. Limit-side fields are `NaN` for models without a
/// limit surrogate (pure-jump stable drivers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub replication: u64,
    pub n: u32,
    pub time: f64,
    /// Clock target `r = t x^-alpha`.
    pub r: f64,
    /// `n (tau(r) - tau_n(r))`.
    pub prelimit_tau_err: f64,
    /// Limit inverse error `L(r)`.
    pub l_r: f64,
    /// `a_n (X_t - X^(n)_t) / X_t`.
    pub prelimit_rel_err: f64,
    /// `sign(L+U) |L+U|^(1/beta) xi_hat_1`.
    pub limit_rel_err: f64,
    /// `{tau(r) n}`.
    pub frac_part: f64,
    /// `B_bar^(n)(r)`, the window upper bound.
    pub upper_bound: f64,
    /// `B_underbar^(n)(r)`, the window lower bound.
    pub lower_bound: f64,
    /// `n (t - T^(n))` with the clock from the fine grid.
    pub time_shift_prelimit: f64,
    /// `(L(r) + U) X_t^alpha`.
    pub time_shift_limit: f64,
    /// The uniform draw paired with this sampling time.
    pub u: f64,
    /// `Delta_{tau(r)}` from the fine-grid surrogate.
    pub delta_at_tau: f64,
}

/// `Delta^(n)_t = n (I_{[tn]/n} - I^(n)_{[tn]/n})`, with the fine grid's
/// clock standing in for the true `I`.
pub fn prelimit_integral_error(
    fine: &IntegralApprox,
    coarse: &IntegralApprox,
    t: f64,
) -> Result<f64> {
    if !fine.n.is_multiple_of(coarse.n) {
        return Err(Error::GridMismatch {
            fine: fine.n,
            coarse: coarse.n,
        });
    }
    if fine.alpha != coarse.alpha || fine.scheme != coarse.scheme {
        return Err(Error::IntegralMismatch {
            message: "fine and coarse clocks must share alpha and scheme".into(),
        });
    }
    let n = coarse.n as f64;
    let k = ((t * n).floor() as usize).min(coarse.steps());
    let stride = (fine.n / coarse.n) as usize;
    let fine_index = k * stride;
    if fine_index > fine.steps() {
        return Err(Error::IntegralMismatch {
            message: format!("time {t} is beyond the fine clock horizon"),
        });
    }
    Ok(n * (fine.grid_values[fine_index] - coarse.grid_values[k]))
}

/// A surrogate evaluation time, carried both as a real time (gating the
/// jump sum) and as its exact count of full fine cells (gating the Brownian
/// sum and the boundary term, immune to float rounding of `t * N`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct DeltaMark {
    pub(crate) full_cells: usize,
    pub(crate) time: f64,
}

fn marks_from_times(fine: &GridPath, times: &[f64]) -> Result<Vec<DeltaMark>> {
    let nf = fine.n as f64;
    let mut out = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        if !(t > 0.0) || t < prev {
            return Err(Error::invalid(
                "t",
                "surrogate times must be positive and nondecreasing",
            ));
        }
        prev = t;
        let full_cells = ((t * nf).floor() as usize).min(fine.steps());
        out.push(DeltaMark {
            full_cells,
            time: t,
        });
    }
    Ok(out)
}

/// Sample `Delta_t` at several times from the fine-grid surrogate:
/// a Riemann–Ito sum for the Brownian integral (truncated at the last full
/// fine cell), the exact jump sum with fresh uniforms `kappa_m`, and the
/// boundary term for the left Riemann scheme.
///
/// Errors for stable drivers: their jump times are not recorded, so the
/// limit surrogate is unavailable; compare prelimit samples across
/// resolutions instead.
#[allow(clippy::too_many_arguments)]
pub fn delta_surrogate_multi<R1, R2>(
    fine: &GridPath,
    model: &LevyModel,
    alpha: f64,
    times: &[f64],
    scheme: Scheme,
    wprime: &mut R1,
    kappa: &mut R2,
) -> Result<Vec<f64>>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let integrand: Result<Vec<f64>> = fine
        .values
        .iter()
        .enumerate()
        .map(|(index, &xi)| {
            let e = alpha * xi;
            if e.abs() > MAX_EXPONENT {
                Err(Error::ExponentOverflow { index, value: e })
            } else {
                Ok(e.exp())
            }
        })
        .collect();
    delta_surrogate_with_integrand(
        fine,
        &integrand?,
        model,
        alpha,
        times,
        scheme,
        wprime,
        kappa,
    )
}

/// As [`delta_surrogate_multi`] with the integrand `exp(alpha xi_{k/N})`
/// already computed (it is a byproduct of the fine clock).
#[allow(clippy::too_many_arguments)]
pub fn delta_surrogate_with_integrand<R1, R2>(
    fine: &GridPath,
    integrand: &[f64],
    model: &LevyModel,
    alpha: f64,
    times: &[f64],
    scheme: Scheme,
    wprime: &mut R1,
    kappa: &mut R2,
) -> Result<Vec<f64>>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let marks = marks_from_times(fine, times)?;
    delta_surrogate_at_marks(fine, integrand, model, alpha, &marks, scheme, wprime, kappa)
}

/// Core surrogate over exact marks; the harness passes hitting indices
/// directly so no time is re-floored.
#[allow(clippy::too_many_arguments)]
pub(crate) fn delta_surrogate_at_marks<R1, R2>(
    fine: &GridPath,
    integrand: &[f64],
    model: &LevyModel,
    alpha: f64,
    marks: &[DeltaMark],
    scheme: Scheme,
    wprime: &mut R1,
    kappa: &mut R2,
) -> Result<Vec<f64>>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    if matches!(model.kind(), ModelKind::Stable { .. }) {
        return Err(Error::Unsupported(
            "limit surrogate unavailable for stable drivers (no exact jump records); \
             use prelimit-vs-prelimit comparison across resolutions"
                .into(),
        ));
    }
    if integrand.len() != fine.values.len() {
        return Err(Error::IntegralMismatch {
            message: "integrand length does not match the fine grid".into(),
        });
    }
    let sigma = model.sigma();
    let nf = fine.n as f64;
    let sqrt_dt = (1.0 / nf).sqrt();
    let bm_coeff = sigma * sigma / 12f64.sqrt();

    let mut results = Vec::with_capacity(marks.len());
    let mut bm_sum = KahanSum::new();
    let mut jump_sum = 0.0f64;
    let mut cells_done = 0usize;
    let mut jumps_done = 0usize;
    let empty = Vec::new();
    let jumps = fine.jumps.as_ref().unwrap_or(&empty);

    for mark in marks {
        if sigma > 0.0 && mark.full_cells > cells_done {
            for &f in &integrand[cells_done..mark.full_cells] {
                let dw = sqrt_dt * wprime.sample::<f64, _>(rand_distr::StandardNormal);
                bm_sum.add(alpha * f * dw);
            }
        }
        cells_done = cells_done.max(mark.full_cells);
        while jumps_done < jumps.len() && jumps[jumps_done].time <= mark.time {
            let jump = &jumps[jumps_done];
            let pre_index =
                (((jump.time * nf).ceil() - 1.0).max(0.0) as usize).min(fine.steps() - 1);
            let xi_pre = fine.values[pre_index];
            let e_post = alpha * (xi_pre + jump.size);
            if e_post.abs() > MAX_EXPONENT {
                return Err(Error::ExponentOverflow {
                    index: pre_index,
                    value: e_post,
                });
            }
            let k_m: f64 = kappa.gen();
            jump_sum += (e_post.exp() - integrand[pre_index]) * (k_m - 0.5);
            jumps_done += 1;
        }
        let boundary = match scheme {
            Scheme::LeftRiemann => 0.5 * (integrand[mark.full_cells] - 1.0),
            Scheme::Trapezoid => 0.0,
        };
        results.push(bm_coeff * bm_sum.value() + jump_sum + boundary);
    }
    Ok(results)
}

/// Sample `Delta_t` at a single time.
pub fn delta_surrogate<R1, R2>(
    fine: &GridPath,
    model: &LevyModel,
    alpha: f64,
    t: f64,
    scheme: Scheme,
    wprime: &mut R1,
    kappa: &mut R2,
) -> Result<f64>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    Ok(delta_surrogate_multi(fine, model, alpha, &[t], scheme, wprime, kappa)?[0])
}

/// Limit inverse error `L(r) = -Delta_{tau(r)} exp(-alpha xi_{tau(r)})`.
pub fn limit_inverse_error(delta_at_tau: f64, xi_at_tau: f64, alpha: f64) -> f64 {
    -delta_at_tau * (-alpha * xi_at_tau).exp()
}

/// Prelimit inverse error `n (tau(r) - tau_n(r))`, with `tau(r)` from the
/// fine-grid inversion.
pub fn prelimit_inverse_error(
    fine_hit: &HittingResult,
    coarse_hit: &HittingResult,
    n: u32,
) -> Result<f64> {
    if !fine_hit.reached || !coarse_hit.reached {
        return Err(Error::InversionUnreached { r: f64::NAN });
    }
    Ok(n as f64 * (fine_hit.tau_n - coarse_hit.tau_n))
}

/// Scaled relative error `a_n (X_t - X^(n)_t) / X_t`.
pub fn relative_error_prelimit(x_true: f64, x_approx: f64, a_n: f64) -> f64 {
    a_n * (x_true - x_approx) / x_true
}

/// One draw of the limit relative error
/// `sign(L+U) |L+U|^(1/beta) xi_hat_1`.
pub fn relative_error_limit(l_r: f64, u: f64, beta: f64, xi_hat_1: f64) -> f64 {
    let s = l_r + u;
    if s == 0.0 {
        return 0.0;
    }
    s.signum() * s.abs().powf(1.0 / beta) * xi_hat_1
}

/// Window bounds `(B_bar, B_underbar)`:
/// `B_bar = a_n (xi_{tau(r)} - inf over [tau_n - 1/n, tau_n])` and the
/// analogous lower bound with the supremum, both over fine-grid points.
pub fn error_bounds(
    fine: &GridPath,
    fine_hit: &HittingResult,
    coarse_hit: &HittingResult,
    coarse_n: u32,
    a_n: f64,
) -> Result<(f64, f64)> {
    if !fine.n.is_multiple_of(coarse_n) {
        return Err(Error::GridMismatch {
            fine: fine.n,
            coarse: coarse_n,
        });
    }
    let stride = (fine.n / coarse_n) as usize;
    let xi_at_tau = fine.values[fine_hit.grid_index.min(fine.steps())];
    let frac_scaled = coarse_hit.frac_part * stride as f64;
    let hi = (coarse_hit.grid_index * stride + frac_scaled.floor() as usize).min(fine.steps());
    // window start tau_n - 1/n, clipped at 0
    let lo_signed =
        coarse_hit.grid_index as i64 * stride as i64 - stride as i64 + frac_scaled.ceil() as i64;
    let lo = lo_signed.max(0) as usize;
    let window = &fine.values[lo..=hi];
    let mut inf = f64::INFINITY;
    let mut sup = f64::NEG_INFINITY;
    for &v in window {
        inf = inf.min(v);
        sup = sup.max(v);
    }
    Ok((a_n * (xi_at_tau - inf), a_n * (xi_at_tau - sup)))
}

/// Scaled zoomed-in trajectory `a_n (X_{s/n} - x)` on a grid of `s` values
/// in `[0, 1]`, evaluated with an internal pssMp resolution of `100 n`.
pub fn zoom_trajectory<R: Rng + ?Sized>(
    model: &LevyModel,
    x: f64,
    alpha: f64,
    n: u32,
    s_grid: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if s_grid.is_empty() {
        return Err(Error::invalid("s_grid", "need at least one point"));
    }
    for w in s_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::invalid("s_grid", "must be strictly increasing"));
        }
    }
    if !(0.0..=1.0).contains(&s_grid[0]) || *s_grid.last().unwrap() > 1.0 {
        return Err(Error::invalid("s_grid", "points must lie in [0, 1]"));
    }
    // Evaluation resolution >= 100 n, scaled with the start: the one-step
    // evaluation error is ~ x^(alpha/beta) / factor^(1/beta) in units of the
    // zoom signal, so the factor grows like x^alpha to keep it an order of
    // magnitude down. Step counts stay bounded because the clock target
    // shrinks by the same x^-alpha.
    let factor = (100.0 * x.powf(alpha)).max(100.0).ceil();
    if !(factor <= u32::MAX as f64) {
        return Err(Error::invalid("x", "zoom resolution overflows"));
    }
    let fine_n = n
        .checked_mul(factor as u32)
        .ok_or_else(|| Error::invalid("n", "zoom resolution overflows"))?;
    let a_n = model.a_n(n);
    let positive: Vec<f64> = s_grid
        .iter()
        .copied()
        .filter(|&s| s > 0.0)
        .map(|s| s / n as f64)
        .collect();
    let mut out = Vec::with_capacity(s_grid.len());
    if s_grid[0] == 0.0 {
        out.push(0.0);
    }
    if !positive.is_empty() {
        let sample =
            lamperti::sample_pssmp(model, x, alpha, &positive, fine_n, Scheme::LeftRiemann, rng)?;
        out.extend(sample.values.iter().map(|&v| a_n * (v - x)));
    }
    Ok(out)
}

/// Kolmogorov–Smirnov distance of fractional parts to the standard uniform
/// law; the statistical diagnostic for the density assumption on the
/// inverse clock.
pub fn frac_part_diagnostic(frac_parts: &[f64]) -> f64 {
    crate::mc::ks_distance_to_cdf(frac_parts, |x| x.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lamperti::{integral, invert, Scheme};
    use crate::levy::{coarsen, sample_path, JumpDist, LevyModel};
    use crate::rng::{SeedPlan, StreamRole};

    fn stream(rep: u64, role: StreamRole) -> crate::rng::Substream {
        SeedPlan::new(515151).stream(rep, role)
    }

    fn drift_model() -> LevyModel {
        LevyModel::brownian_drift(1.0, 0.0).unwrap()
    }

    #[test]
    fn integral_error_drift_closed_form() {
        // n = 2, t = 1: 2 (e - 1 - (1 + e^0.5)/2) ~ 0.787842
        let model = drift_model();
        let fine_path = sample_path(&model, 2000, 1.0, &mut stream(0, StreamRole::Path)).unwrap();
        let fine = integral(&fine_path, 1.0, Scheme::LeftRiemann).unwrap();
        let coarse = integral(&coarsen(&fine_path, 2).unwrap(), 1.0, Scheme::LeftRiemann).unwrap();
        let d = prelimit_integral_error(&fine, &coarse, 1.0).unwrap();
        let exact = 2.0 * (1f64.exp() - 1.0 - 0.5 * (1.0 + 0.5f64.exp()));
        // the fine clock underestimates e - 1 by O(1/N)
        assert!((d - exact).abs() < 2e-3, "{d} vs {exact}");
        assert!((exact - 0.787842).abs() < 1e-6);

        // as n grows the scaled error approaches (e - 1)/2
        let coarse200 =
            integral(&coarsen(&fine_path, 200).unwrap(), 1.0, Scheme::LeftRiemann).unwrap();
        let d200 = prelimit_integral_error(&fine, &coarse200, 1.0).unwrap();
        let limit = 0.5 * (1f64.exp() - 1.0);
        assert!((d200 - limit).abs() < 0.1, "{d200} vs {limit}");
        assert!((limit - 0.859141).abs() < 1e-6);
    }

    #[test]
    fn integral_error_trapezoid_vanishes_for_smooth_paths() {
        let model = drift_model();
        let fine_path = sample_path(&model, 2000, 1.0, &mut stream(0, StreamRole::Path)).unwrap();
        let fine = integral(&fine_path, 1.0, Scheme::Trapezoid).unwrap();
        for n in [2u32, 10, 100] {
            let coarse =
                integral(&coarsen(&fine_path, n).unwrap(), 1.0, Scheme::Trapezoid).unwrap();
            let d = prelimit_integral_error(&fine, &coarse, 1.0).unwrap();
            assert!(d.abs() < 2.0 / n as f64, "n = {n}: {d}");
        }
    }

    #[test]
    fn integral_error_zero_path() {
        let path = sample_path(
            &LevyModel::zero(),
            100,
            1.0,
            &mut stream(0, StreamRole::Path),
        )
        .unwrap();
        let fine = integral(&path, 2.0, Scheme::LeftRiemann).unwrap();
        let coarse = integral(&coarsen(&path, 10).unwrap(), 2.0, Scheme::LeftRiemann).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let d = prelimit_integral_error(&fine, &coarse, t).unwrap();
            assert!(d.abs() < 1e-12);
        }
        // mismatched pairs are rejected
        let not_nested = integral(&coarsen(&path, 25).unwrap(), 2.0, Scheme::LeftRiemann).unwrap();
        let coarse10 = integral(&coarsen(&path, 10).unwrap(), 2.0, Scheme::LeftRiemann).unwrap();
        assert!(matches!(
            prelimit_integral_error(&not_nested, &coarse10, 0.5),
            Err(Error::GridMismatch { .. })
        ));
        let other_scheme = integral(&coarsen(&path, 10).unwrap(), 2.0, Scheme::Trapezoid).unwrap();
        assert!(matches!(
            prelimit_integral_error(&fine, &other_scheme, 0.5),
            Err(Error::IntegralMismatch { .. })
        ));
    }

    #[test]
    fn delta_surrogate_boundary_term_only() {
        // sigma = 0, no jumps, left Riemann, mu = 1, alpha = 1, t = log 2:
        // Delta = (f(xi_t) - f(0))/2 = (2 - 1)/2
        let model = drift_model();
        let path = sample_path(&model, 10_000, 1.0, &mut stream(0, StreamRole::Path)).unwrap();
        let mut w = stream(0, StreamRole::BrownianAux);
        let mut k = stream(0, StreamRole::JumpUniform);
        let t = 2f64.ln();
        let d =
            delta_surrogate(&path, &model, 1.0, t, Scheme::LeftRiemann, &mut w, &mut k).unwrap();
        assert!((d - 0.5).abs() < 1e-3, "{d}");
        let d_tr =
            delta_surrogate(&path, &model, 1.0, t, Scheme::Trapezoid, &mut w, &mut k).unwrap();
        assert_eq!(d_tr, 0.0);
    }

    #[test]
    fn delta_surrogate_jump_sum_matches_manual_formula() {
        let model = LevyModel::compound_poisson_brownian(
            0.0,
            0.0,
            4.0,
            JumpDist::Normal { mean: 0.0, sd: 1.0 },
        )
        .unwrap();
        let path = sample_path(&model, 1000, 1.0, &mut stream(3, StreamRole::Path)).unwrap();
        let jumps = path.jumps.clone().unwrap();
        assert!(!jumps.is_empty());
        let mut w = stream(3, StreamRole::BrownianAux);
        let mut k = stream(3, StreamRole::JumpUniform);
        let t = 1.0;
        let got =
            delta_surrogate(&path, &model, 0.5, t, Scheme::Trapezoid, &mut w, &mut k).unwrap();
        // manual: same kappa stream, same pre-jump grid values
        let mut k2 = stream(3, StreamRole::JumpUniform);
        let mut expected = 0.0;
        for j in &jumps {
            let pre = ((j.time * 1000.0).ceil() - 1.0).max(0.0) as usize;
            let xi_pre = path.values[pre];
            let kap: f64 = k2.gen();
            expected += ((0.5 * (xi_pre + j.size)).exp() - (0.5 * xi_pre).exp()) * (kap - 0.5);
        }
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn delta_surrogate_rejects_stable() {
        let model = LevyModel::stable(1.5, 0.5).unwrap();
        let path = sample_path(&model, 100, 1.0, &mut stream(1, StreamRole::Path)).unwrap();
        let mut w = stream(1, StreamRole::BrownianAux);
        let mut k = stream(1, StreamRole::JumpUniform);
        let err = delta_surrogate(&path, &model, 0.3, 0.5, Scheme::LeftRiemann, &mut w, &mut k);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn limit_inverse_error_formula() {
        assert!((limit_inverse_error(0.5, 2f64.ln(), 1.0) + 0.25).abs() < 1e-15);
        assert_eq!(limit_inverse_error(0.0, 1.23, 2.0), -0.0);
    }

    #[test]
    fn prelimit_inverse_error_drift() {
        let model = drift_model();
        let fine_path = sample_path(&model, 20_000, 1.0, &mut stream(0, StreamRole::Path)).unwrap();
        let fine_hit = invert(
            &integral(&fine_path, 1.0, Scheme::LeftRiemann).unwrap(),
            1.0,
        );
        let coarse = integral(&coarsen(&fine_path, 2).unwrap(), 1.0, Scheme::LeftRiemann).unwrap();
        let coarse_hit = invert(&coarse, 1.0);
        let err = prelimit_inverse_error(&fine_hit, &coarse_hit, 2).unwrap();
        let exact = 2.0 * (2f64.ln() - (0.5 + 0.5 * (-0.5f64).exp()));
        assert!((err - exact).abs() < 1e-3, "{err} vs {exact}");
        assert!((exact + 0.220236).abs() < 1e-6);
    }

    #[test]
    fn prelimit_inverse_error_requires_reached_inversions() {
        let path = sample_path(
            &LevyModel::zero(),
            10,
            1.0,
            &mut stream(0, StreamRole::Path),
        )
        .unwrap();
        let clock = integral(&path, 1.0, Scheme::LeftRiemann).unwrap();
        let reached = invert(&clock, 0.5);
        let unreached = invert(&clock, 5.0);
        assert!(matches!(
            prelimit_inverse_error(&reached, &unreached, 10),
            Err(Error::InversionUnreached { .. })
        ));
    }

    #[test]
    fn relative_error_limit_formula() {
        assert_eq!(relative_error_limit(-0.25, 0.75, 1.0, 1.0), 0.5);
        assert_eq!(relative_error_limit(-0.5, 0.5, 2.0, 3.0), 0.0);
        let v = relative_error_limit(-0.75, 0.25, 2.0, 2.0);
        assert!((v + 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn error_bounds_zero_path() {
        let path = sample_path(
            &LevyModel::zero(),
            100,
            1.0,
            &mut stream(0, StreamRole::Path),
        )
        .unwrap();
        let clock = integral(&path, 2.0, Scheme::LeftRiemann).unwrap();
        let fine_hit = invert(&clock, 0.37);
        let coarse = integral(&coarsen(&path, 10).unwrap(), 2.0, Scheme::LeftRiemann).unwrap();
        let coarse_hit = invert(&coarse, 0.37);
        let (upper, lower) = error_bounds(&path, &fine_hit, &coarse_hit, 10, 10f64.sqrt()).unwrap();
        assert_eq!((upper, lower), (0.0, 0.0));
    }

    #[test]
    fn error_bounds_sandwich_brownian() {
        let model = LevyModel::brownian_drift(0.5, 1.0).unwrap();
        for rep in 0..50u64 {
            let mut rng = stream(rep, StreamRole::Path);
            let (path, clock) = crate::lamperti::grow_until(
                &model,
                2.0,
                Scheme::LeftRiemann,
                1000,
                1.0,
                1024.0,
                &mut rng,
                rep,
            )
            .unwrap();
            let fine_hit = invert(&clock, 1.0);
            let coarse_path = coarsen(&path, 10).unwrap();
            let coarse = integral(&coarse_path, 2.0, Scheme::LeftRiemann).unwrap();
            let coarse_hit = invert(&coarse, 1.0);
            if !coarse_hit.reached {
                continue;
            }
            let a_n = 10f64.sqrt();
            let (upper, lower) = error_bounds(&path, &fine_hit, &coarse_hit, 10, a_n).unwrap();
            let mid = a_n
                * (path.values[fine_hit.grid_index] - coarse_path.values[coarse_hit.grid_index]);
            assert!(
                lower <= mid && mid <= upper,
                "rep {rep}: {lower} <= {mid} <= {upper}"
            );
        }
    }

    #[test]
    fn relative_error_limit_matches_grid_path_construction() {
        // two routes to xi_hat_{L+U} for a standard-Brownian xi_hat: the
        // self-similarity formula sign(s)|s|^(1/2) Z against a grid walk of
        // a two-sided Brownian path evaluated at floor(|s| M)/M
        use rand_distr::StandardNormal;
        let mut rng = stream(9, StreamRole::Oracle);
        let mesh = 1000usize;
        let draws = 10_000usize;
        let mut formula = Vec::with_capacity(draws);
        let mut walked = Vec::with_capacity(draws);
        for _ in 0..draws {
            // synthetic coupled pair: heavy-ish L plus an independent uniform
            let l = -0.3 + 0.6 * rng.sample::<f64, _>(StandardNormal);
            let u: f64 = rng.gen();
            let z: f64 = rng.sample(StandardNormal);
            formula.push(relative_error_limit(l, u, 2.0, z));
            let s: f64 = l + u;
            let k = (s.abs() * mesh as f64).floor() as usize;
            let mut w = 0.0;
            for _ in 0..k {
                w += (1.0 / mesh as f64).sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            let leftover = s.abs() - k as f64 / mesh as f64;
            w += leftover.max(0.0).sqrt() * rng.sample::<f64, _>(StandardNormal);
            walked.push(if s < 0.0 { -w } else { w });
        }
        let d = crate::mc::ks_distance_two_sample(&formula, &walked);
        assert!(d < 0.02, "KS = {d}");
    }

    #[test]
    fn zoom_trajectory_zero_model() {
        let model = LevyModel::zero();
        let mut rng = stream(0, StreamRole::Path);
        let out = zoom_trajectory(&model, 1.0, 2.0, 100, &[0.0, 0.5, 1.0], &mut rng).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn frac_diagnostic_flags_degenerate_inverse() {
        let parts = vec![0.37; 1000];
        let d = frac_part_diagnostic(&parts);
        assert!((d - 0.63).abs() < 1e-12, "{d}");
        assert!((0.0..=1.0).contains(&d));
    }
}
