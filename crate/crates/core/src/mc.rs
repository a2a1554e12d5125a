//! Replication harness and statistics.
//!
//! [`run_experiment`] fans replications out across threads: each replication
//! samples one fine master path, coarsens it to every requested resolution,
//! and assembles the coupled prelimit/limit error variables of the `limits`
//! module into [`ErrorRecord`]s. Results are keyed by replication index and
//! merged deterministically, so the output depends only on the master seed,
//! never on the worker count or scheduling.
//!
//! The statistics mirror how the results are reported: paired trimmed
//! histograms, Kolmogorov–Smirnov distances (two-sample and against an
//! analytic CDF), and a Hill tail-index diagnostic.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lamperti::{integral, invert, HittingResult, IntegralApprox, Scheme};
use crate::levy::{coarsen, extend_path, sample_path_tagged, GridPath, LevyModel, ModelKind};
use crate::limits::{
    delta_surrogate_at_marks, error_bounds, limit_inverse_error, relative_error_limit,
    relative_error_prelimit, DeltaMark, ErrorRecord,
};
use crate::rng::{SeedPlan, StreamRole};

/// Full description of a coupled prelimit/limit experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: LevyModel,
    /// Self-similarity index of the pssMp.
    pub alpha: f64,
    /// Starting position.
    pub x: f64,
    /// Sampling times of the pssMp.
    pub times: Vec<f64>,
    /// Coarse resolutions; each must divide `fine_n`.
    pub n_list: Vec<u32>,
    /// Fine master resolution standing in for the continuous path.
    pub fine_n: u32,
    pub replications: usize,
    pub master_seed: u64,
    pub scheme: Scheme,
    /// Cap (in time units) for adaptive horizon doubling.
    pub horizon_cap: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be positive and finite"));
        }
        if !(self.x > 0.0) || !self.x.is_finite() {
            return Err(Error::invalid("x", "must be positive and finite"));
        }
        if self.times.is_empty() || !(self.times[0] > 0.0) {
            return Err(Error::invalid("times", "need at least one positive time"));
        }
        for w in self.times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::invalid("times", "must be strictly increasing"));
            }
        }
        if self.n_list.is_empty() {
            return Err(Error::invalid(
                "n_list",
                "need at least one coarse resolution",
            ));
        }
        for &n in &self.n_list {
            if n == 0 || !self.fine_n.is_multiple_of(n) {
                return Err(Error::invalid(
                    "n_list",
                    format!(
                        "fine resolution {} is not a multiple of n = {n}",
                        self.fine_n
                    ),
                ));
            }
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if !(self.horizon_cap > 0.0) {
            return Err(Error::invalid("horizon_cap", "must be positive"));
        }
        Ok(())
    }
}

/// All replications of one `(n, time)` pair, ordered by replication index.
#[derive(Debug, Clone)]
pub struct ExperimentCell {
    pub n: u32,
    pub time: f64,
    pub records: Vec<ErrorRecord>,
}

/// Output of [`run_experiment`], one cell per `(n, time)`.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub cells: Vec<ExperimentCell>,
}

impl ExperimentOutput {
    pub fn cell(&self, n: u32, time: f64) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.n == n && c.time == time)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Run the coupled experiment. Deterministic given `master_seed` no matter
/// how replications are scheduled; failures carry the replication index.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let per_rep: Vec<Vec<ErrorRecord>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            replicate(config, rep).map_err(|e| Error::Replication {
                replication: rep,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(config.n_list.len() * config.times.len());
    for (ni, &n) in config.n_list.iter().enumerate() {
        for (ti, &time) in config.times.iter().enumerate() {
            let idx = ni * config.times.len() + ti;
            let records = per_rep.iter().map(|v| v[idx]).collect();
            cells.push(ExperimentCell { n, time, records });
        }
    }
    Ok(ExperimentOutput { cells })
}

/// One replication: one fine path, every coarse resolution, every time.
fn replicate(config: &ExperimentConfig, rep: u64) -> Result<Vec<ErrorRecord>> {
    let plan = SeedPlan::new(config.master_seed);
    let mut path_rng = plan.stream(rep, StreamRole::Path);
    let model = &config.model;
    let fine_n = config.fine_n;
    let nf = fine_n as f64;

    let x_pow = config.x.powf(config.alpha);
    let targets: Vec<f64> = config.times.iter().map(|t| t / x_pow).collect();
    let r_max = *targets.last().unwrap();

    // Steps stay a multiple of every stride so coarsening is always exact.
    let granule = config.n_list.iter().fold(1usize, |acc, &n| {
        let stride = (fine_n / n) as usize;
        acc / gcd(acc, stride) * stride
    });
    let cap_steps = ((config.horizon_cap * nf).ceil() as usize / granule).max(1) * granule;
    let round_up = |s: usize| s.max(1).div_ceil(granule) * granule;
    let mut steps = round_up((r_max * nf).ceil() as usize).min(cap_steps);

    let mut fine_path = sample_path_tagged(model, fine_n, steps as f64 / nf, &mut path_rng, rep)?;
    let (fine_clock, coarse) = loop {
        let fine_clock = integral(&fine_path, config.alpha, config.scheme)?;
        let coarse: Vec<(GridPath, IntegralApprox)> = config
            .n_list
            .iter()
            .map(|&n| {
                let p = coarsen(&fine_path, n)?;
                let c = integral(&p, config.alpha, config.scheme)?;
                Ok((p, c))
            })
            .collect::<Result<_>>()?;
        if fine_clock.last() >= r_max && coarse.iter().all(|(_, c)| c.last() >= r_max) {
            break (fine_clock, coarse);
        }
        if steps >= cap_steps {
            return Err(Error::HorizonCapExceeded {
                cap: config.horizon_cap,
                r: r_max,
            });
        }
        steps = (steps * 2).min(cap_steps);
        extend_path(&mut fine_path, model, steps, &mut path_rng)?;
    };

    // Fine-grid "truth": hitting times, path values at them, X_t.
    let fine_hits: Vec<HittingResult> = targets
        .iter()
        .map(|&r| {
            let mut hit = invert(&fine_clock, r);
            hit.xi_at_floor = fine_path.values[hit.grid_index];
            hit
        })
        .collect();

    // Limit variables, shared across coarse resolutions.
    let delta_available = !matches!(model.kind(), ModelKind::Stable { .. });
    let deltas: Vec<f64> = if delta_available {
        let marks: Vec<DeltaMark> = fine_hits
            .iter()
            .map(|h| DeltaMark {
                full_cells: h.grid_index,
                time: h.tau_n,
            })
            .collect();
        let mut wprime = plan.stream(rep, StreamRole::BrownianAux);
        let mut kappa = plan.stream(rep, StreamRole::JumpUniform);
        delta_surrogate_at_marks(
            &fine_path,
            &fine_clock.integrand_values,
            model,
            config.alpha,
            &marks,
            config.scheme,
            &mut wprime,
            &mut kappa,
        )?
    } else {
        vec![f64::NAN; targets.len()]
    };
    let l_values: Vec<f64> = deltas
        .iter()
        .zip(&fine_hits)
        .map(|(&d, h)| limit_inverse_error(d, h.xi_at_floor, config.alpha))
        .collect();

    let mut u_rng = plan.stream(rep, StreamRole::TimeUniform);
    let u_draws: Vec<f64> = targets.iter().map(|_| u_rng.gen::<f64>()).collect();

    let mut xihat_rng = plan.stream(rep, StreamRole::ZoomLimit);
    let xi_hat_draws: Vec<f64> = match model.zoom_limit_model() {
        Ok(_) => targets
            .iter()
            .map(|_| model.sample_xi_hat_1(&mut xihat_rng))
            .collect::<Result<_>>()?,
        Err(_) => vec![f64::NAN; targets.len()],
    };

    let mut records = Vec::with_capacity(config.n_list.len() * targets.len());
    for (&n, (coarse_path, coarse_clock)) in config.n_list.iter().zip(&coarse) {
        let a_n = model.a_n(n);
        let stride = (fine_n / n) as usize;
        for (i, (&t, &r)) in config.times.iter().zip(&targets).enumerate() {
            let fine_hit = &fine_hits[i];
            let mut coarse_hit = invert(coarse_clock, r);
            coarse_hit.xi_at_floor = coarse_path.values[coarse_hit.grid_index];

            let x_true = config.x * fine_hit.xi_at_floor.exp();
            let x_approx = config.x * coarse_hit.xi_at_floor.exp();
            let (upper, lower) = error_bounds(&fine_path, fine_hit, &coarse_hit, n, a_n)?;

            let scaled = (fine_hit.grid_index as f64 + fine_hit.frac_part) * (n as f64 / nf);
            let frac_part = scaled - scaled.floor();

            let l_r = l_values[i];
            let u = u_draws[i];
            records.push(ErrorRecord {
                replication: rep,
                n,
                time: t,
                r,
                prelimit_tau_err: n as f64 * (fine_hit.tau_n - coarse_hit.tau_n),
                l_r,
                prelimit_rel_err: relative_error_prelimit(x_true, x_approx, a_n),
                limit_rel_err: relative_error_limit(l_r, u, model.beta(), xi_hat_draws[i]),
                frac_part,
                upper_bound: upper,
                lower_bound: lower,
                time_shift_prelimit: n as f64
                    * (t - x_pow * fine_clock.grid_values[coarse_hit.grid_index * stride]),
                time_shift_limit: (l_r + u) * x_true.powf(config.alpha),
                u,
                delta_at_tau: deltas[i],
            });
        }
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// statistics
// ---------------------------------------------------------------------------

/// Type-7 (linear interpolation) quantile of a sorted sample.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// How paired histograms are trimmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrimRule {
    /// Use the full range of both samples.
    None,
    /// Lower bound = min of the two 1%-quantiles, upper bound = max of the
    /// two 99%-quantiles, so each histogram keeps at least 98% of its
    /// sample.
    Paper98,
}

#[derive(Debug, Clone, Copy)]
pub struct HistogramSpec {
    pub bin_count: usize,
    pub trim: TrimRule,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            bin_count: 60,
            trim: TrimRule::Paper98,
        }
    }
}

/// Two histograms over identical bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPair {
    pub lower: f64,
    pub upper: f64,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
}

impl HistogramPair {
    pub fn bin_count(&self) -> usize {
        self.counts_a.len()
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let width = (self.upper - self.lower) / self.bin_count() as f64;
        (
            self.lower + i as f64 * width,
            self.lower + (i + 1) as f64 * width,
        )
    }
}

/// Histogram two samples over shared bin edges, resolving the bounds by the
/// trim rule and dropping values outside them.
pub fn trimmed_histogram(a: &[f64], b: &[f64], spec: &HistogramSpec) -> Result<HistogramPair> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if spec.bin_count == 0 {
        return Err(Error::invalid("bin_count", "must be positive"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (mut lower, mut upper) = match spec.trim {
        TrimRule::None => (sa[0].min(sb[0]), sa[sa.len() - 1].max(sb[sb.len() - 1])),
        TrimRule::Paper98 => (
            quantile_type7(&sa, 0.01).min(quantile_type7(&sb, 0.01)),
            quantile_type7(&sa, 0.99).max(quantile_type7(&sb, 0.99)),
        ),
    };
    if !(upper > lower) {
        // degenerate range (constant samples): widen so the single value
        // lands in one bin
        upper = lower + 1.0;
        lower -= f64::EPSILON;
    }
    let width = (upper - lower) / spec.bin_count as f64;
    let mut counts_a = vec![0u64; spec.bin_count];
    let mut counts_b = vec![0u64; spec.bin_count];
    let fill = |sample: &[f64], counts: &mut [u64]| {
        for &v in sample {
            if v < lower || v > upper || v.is_nan() {
                continue;
            }
            let idx = (((v - lower) / width) as usize).min(spec.bin_count - 1);
            counts[idx] += 1;
        }
    };
    fill(&sa, &mut counts_a);
    fill(&sb, &mut counts_b);
    Ok(HistogramPair {
        lower,
        upper,
        counts_a,
        counts_b,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic. Ties are handled by advancing
/// both samples through a tied value before the gap is measured.
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() || j < sb.len() {
        let v = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < sa.len() && sa[i] == v {
            i += 1;
        }
        while j < sb.len() && sb[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov–Smirnov statistic against an analytic CDF.
pub fn ks_distance_to_cdf<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    d
}

/// Hill estimator of the tail index over the top `k` order statistics of
/// the positive part of the sample. Needs at least `k + 1` positive values.
pub fn hill_tail_index(sample: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid(
            "k",
            "order-statistic count must be positive",
        ));
    }
    let mut pos: Vec<f64> = sample.iter().copied().filter(|&v| v > 0.0).collect();
    if pos.len() < k + 1 {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: pos.len(),
        });
    }
    pos.sort_by(|x, y| y.total_cmp(x));
    let threshold = pos[k];
    let sum_log: f64 = pos[..k].iter().map(|&v| (v / threshold).ln()).sum();
    Ok(k as f64 / sum_log)
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

/// Render a float with 17 significant digits so it round-trips exactly.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub const RECORDS_HEADER: &str = "replication,n,time,r,prelimit_tau_err,l_r,prelimit_rel_err,\
limit_rel_err,frac_part,upper_bound,lower_bound,time_shift_prelimit,time_shift_limit,u,delta_at_tau";

/// Emit error records as CSV (one row per record, ordered as given).
pub fn write_records_csv<P: AsRef<Path>>(path: P, cells: &[ExperimentCell]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    writeln!(w, "{RECORDS_HEADER}").map_err(io_err(path))?;
    for cell in cells {
        for rec in &cell.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                rec.replication,
                rec.n,
                fmt_float(rec.time),
                fmt_float(rec.r),
                fmt_float(rec.prelimit_tau_err),
                fmt_float(rec.l_r),
                fmt_float(rec.prelimit_rel_err),
                fmt_float(rec.limit_rel_err),
                fmt_float(rec.frac_part),
                fmt_float(rec.upper_bound),
                fmt_float(rec.lower_bound),
                fmt_float(rec.time_shift_prelimit),
                fmt_float(rec.time_shift_limit),
                fmt_float(rec.u),
                fmt_float(rec.delta_at_tau),
            )
            .map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Emit a paired histogram: `bin_left,bin_right,count_a,count_b`.
pub fn write_histogram_csv<P: AsRef<Path>>(path: P, hist: &HistogramPair) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    writeln!(w, "bin_left,bin_right,count_a,count_b").map_err(io_err(path))?;
    for i in 0..hist.bin_count() {
        let (left, right) = hist.bin_edges(i);
        writeln!(
            w,
            "{},{},{},{}",
            fmt_float(left),
            fmt_float(right),
            hist.counts_a[i],
            hist.counts_b[i]
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Emit named sample columns with a leading replication index column.
pub fn write_samples_csv<P: AsRef<Path>>(
    path: P,
    names: &[&str],
    columns: &[Vec<f64>],
) -> Result<()> {
    let path = path.as_ref();
    if names.len() != columns.len() {
        return Err(Error::invalid("names", "one name per column required"));
    }
    let rows = columns.first().map(|c| c.len()).unwrap_or(0);
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::invalid("columns", "columns must have equal length"));
    }
    let mut w = create_writer(path)?;
    writeln!(w, "replication,{}", names.join(",")).map_err(io_err(path))?;
    for row in 0..rows {
        let fields: Vec<String> = columns.iter().map(|c| fmt_float(c[row])).collect();
        writeln!(w, "{},{}", row, fields.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
