//! Smile calibration of a path-dependent-volatility model by particles.
//!
//! Per step, the unknown variance σ²(kh, ·) over feature bins solves the
//! finite inverse problem E[σ²(kh, Y)|X] = σ²_loc(kh, X) on the empirical
//! joint of (asset bin, feature bin): exactly when the sign-constrained solve
//! admits it, in weighted least squares otherwise — the residual being the
//! empirical trace of non-representability.

use rand::distributions::Distribution;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CondrepError, Result};
use crate::linsolve::nnls_weighted;
use crate::measures::DiscreteJoint;
use crate::representation::solve_nonneg;
use crate::rngutil::stream;

/// Standard normal CDF; erfc keeps full relative accuracy deep in the tails,
/// which matters for finite differences of far-from-the-money prices.
fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Black-Scholes call on forward `fwd` with total standard deviation
/// `sig = σ√t` (zero rates).
pub fn bs_call(fwd: f64, strike: f64, sig: f64) -> f64 {
    if sig <= 1e-12 {
        return (fwd - strike).max(0.0);
    }
    let d1 = ((fwd / strike).ln() + 0.5 * sig * sig) / sig;
    let d2 = d1 - sig;
    fwd * norm_cdf(d1) - strike * norm_cdf(d2)
}

/// Synthetic arbitrage-free call surfaces (unit spot, zero rates).
#[derive(Debug, Clone)]
pub enum SurfaceModel {
    Flat {
        vol: f64,
    },
    /// Piecewise-constant term structure: (t_end, vol) segments.
    TermStructure {
        segments: Vec<(f64, f64)>,
    },
    /// Mixture of two lognormals with means m and (1 − w·m)/(1 − w):
    /// skewed smile, arbitrage-free by construction.
    SkewedMixture {
        w: f64,
        mean1: f64,
        vol1: f64,
        vol2: f64,
    },
}

impl SurfaceModel {
    pub fn price(&self, t: f64, strike: f64) -> f64 {
        match self {
            SurfaceModel::Flat { vol } => bs_call(1.0, strike, vol * t.sqrt()),
            SurfaceModel::TermStructure { segments } => {
                let mut var = 0.0;
                let mut t0 = 0.0;
                for &(t_end, vol) in segments {
                    let dt = (t.min(t_end) - t0).max(0.0);
                    var += vol * vol * dt;
                    t0 = t_end;
                    if t <= t_end {
                        break;
                    }
                }
                // Last segment extends to infinity.
                if t > t0 {
                    let vol = segments.last().map_or(0.0, |s| s.1);
                    var += vol * vol * (t - t0);
                }
                bs_call(1.0, strike, var.sqrt())
            }
            SurfaceModel::SkewedMixture {
                w,
                mean1,
                vol1,
                vol2,
            } => {
                let mean2 = (1.0 - w * mean1) / (1.0 - w);
                w * bs_call(*mean1, strike, vol1 * t.sqrt())
                    + (1.0 - w) * bs_call(mean2, strike, vol2 * t.sqrt())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CallSurface {
    pub times: Vec<f64>,
    pub strikes: Vec<f64>,
    /// prices[time][strike]
    pub prices: Vec<Vec<f64>>,
}

pub fn synth_call_surface(model: &SurfaceModel, times: &[f64], strikes: &[f64]) -> CallSurface {
    let prices = times
        .iter()
        .map(|&t| strikes.iter().map(|&x| model.price(t, x)).collect())
        .collect();
    CallSurface {
        times: times.to_vec(),
        strikes: strikes.to_vec(),
        prices,
    }
}

#[derive(Debug, Clone)]
pub struct LocalVolGrid {
    /// Interior times of the input grid.
    pub times: Vec<f64>,
    /// Interior strikes of the input grid.
    pub strikes: Vec<f64>,
    /// locvar[time][strike] = σ²_loc ≥ 0.
    pub locvar: Vec<Vec<f64>>,
    /// Count of negative numerators floored at 0.
    pub clipped: usize,
}

/// Linear interpolation on a sorted grid, clamped at the ends.
fn interp1(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[grid.len() - 1] {
        return values[grid.len() - 1];
    }
    let i = grid.partition_point(|&a| a <= x) - 1;
    let w = (x - grid[i]) / (grid[i + 1] - grid[i]);
    values[i] * (1.0 - w) + values[i + 1] * w
}

impl LocalVolGrid {
    /// Linear interpolation in strike on a row, clamped at the ends.
    pub fn interp_row(&self, row: usize, x: f64) -> f64 {
        interp1(&self.strikes, &self.locvar[row], x)
    }

    /// Row index whose time is nearest to `t`.
    pub fn nearest_row(&self, t: f64) -> usize {
        (0..self.times.len())
            .min_by(|&a, &b| {
                (self.times[a] - t)
                    .abs()
                    .total_cmp(&(self.times[b] - t).abs())
            })
            .unwrap_or(0)
    }
}

/// Dupire variances `σ²_loc = 2 ∂_t C / (x² ∂²_xx C)` by central finite
/// differences on the interior of the grid.
pub fn dupire_localvol(surface: &CallSurface) -> Result<LocalVolGrid> {
    let nt = surface.times.len();
    let nx = surface.strikes.len();
    if nt < 3 || nx < 3 {
        return Err(CondrepError::ArbitrageError(
            "grid needs at least 3 times and 3 strikes".into(),
        ));
    }
    let mut locvar = vec![];
    let mut clipped = 0usize;
    for j in 1..nt - 1 {
        let dt = surface.times[j + 1] - surface.times[j - 1];
        let mut row = vec![];
        for i in 1..nx - 1 {
            let x = surface.strikes[i];
            let dxl = x - surface.strikes[i - 1];
            let dxr = surface.strikes[i + 1] - x;
            let c = &surface.prices;
            let dcdt = (c[j + 1][i] - c[j - 1][i]) / dt;
            // Second difference, nonuniform-safe.
            let d2 = 2.0
                * (dxl * c[j][i + 1] - (dxl + dxr) * c[j][i] + dxr * c[j][i - 1])
                / (dxl * dxr * (dxl + dxr));
            if d2 < -1e-7 {
                return Err(CondrepError::ArbitrageError(format!(
                    "non-convex in strike at t={}, x={}: second difference {d2}",
                    surface.times[j], x
                )));
            }
            let denom = (x * x * d2).max(1e-12);
            let mut v = 2.0 * dcdt / denom;
            if v < 0.0 {
                clipped += 1;
                v = 0.0;
            }
            row.push(v);
        }
        locvar.push(row);
    }
    Ok(LocalVolGrid {
        times: surface.times[1..nt - 1].to_vec(),
        strikes: surface.strikes[1..nx - 1].to_vec(),
        locvar,
        clipped,
    })
}

/// Dupire row at a single time, built from a 3-time mini-grid evaluated on
/// the analytic surface. Steps shrink with maturity: the time quotient needs
/// dt ≪ t near the √t kink, and the strike quotient needs dx ≪ σ√t to
/// resolve the gamma peak, with far wings the most demanding.
pub fn dupire_row_at(model: &SurfaceModel, t: f64, x_lo: f64, x_hi: f64, h: f64) -> Result<LocalVolGrid> {
    let t_mid = t.max(h / 8.0);
    let dt = t_mid / 256.0;
    let dx = (0.004 * t_mid.sqrt()).min(0.01).max((x_hi - x_lo) / 3000.0);
    let lo = (x_lo - 3.0 * dx).max(dx);
    let n = ((x_hi + 3.0 * dx - lo) / dx).ceil() as usize;
    let strikes: Vec<f64> = (0..=n).map(|i| lo + dx * i as f64).collect();
    let times = [t_mid - dt, t_mid, t_mid + dt];
    let surface = synth_call_surface(model, &times, &strikes);
    dupire_localvol(&surface)
}

/// Market input for the calibration loop: either an analytic model (mini-grid
/// differentiation at each step time) or a discrete price grid (differentiated
/// once, rows matched by nearest time).
#[derive(Debug, Clone)]
pub enum SurfaceSource {
    Analytic(SurfaceModel),
    Grid(CallSurface),
}

impl SurfaceSource {
    pub fn price(&self, t: f64, strike: f64) -> f64 {
        match self {
            SurfaceSource::Analytic(m) => m.price(t, strike),
            SurfaceSource::Grid(s) => {
                let row_at = |j: usize| interp1(&s.strikes, &s.prices[j], strike);
                let ts = &s.times;
                if t <= ts[0] {
                    return row_at(0);
                }
                if t >= ts[ts.len() - 1] {
                    return row_at(ts.len() - 1);
                }
                let j = ts.partition_point(|&a| a <= t) - 1;
                let w = (t - ts[j]) / (ts[j + 1] - ts[j]);
                row_at(j) * (1.0 - w) + row_at(j + 1) * w
            }
        }
    }
}

/// EWMA decay rates, mixing weights, and the affine-in-features vol map
/// `σ = β₀ + β₁R₁ + β₂√R₂`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// λ_{1,0}, λ_{1,1}, λ_{2,0}, λ_{2,1} (1/years).
    pub lambdas: [f64; 4],
    /// θ₁, θ₂ ∈ [0,1].
    pub thetas: [f64; 2],
    /// β₀, β₁, β₂.
    pub betas: [f64; 3],
}

impl FeatureSpec {
    pub fn r1(&self, r1a: f64, r1b: f64) -> f64 {
        (1.0 - self.thetas[0]) * r1a + self.thetas[0] * r1b
    }

    pub fn r2(&self, r2a: f64, r2b: f64) -> f64 {
        (1.0 - self.thetas[1]) * r2a + self.thetas[1] * r2b
    }

    /// The β-scaled feature pair used for conditioning bins.
    pub fn coords(&self, r1a: f64, r1b: f64, r2a: f64, r2b: f64) -> (f64, f64) {
        (
            self.betas[1] * self.r1(r1a, r1b),
            self.betas[2] * self.r2(r2a, r2b).max(0.0).sqrt(),
        )
    }

    /// σ from the affine map, clipped at zero; the bool reports clipping.
    pub fn sigma(&self, r1a: f64, r1b: f64, r2a: f64, r2b: f64) -> (f64, bool) {
        let (u1, u2) = self.coords(r1a, r1b, r2a, r2b);
        let s = self.betas[0] + u1 + u2;
        if s < 0.0 {
            (0.0, true)
        } else {
            (s, false)
        }
    }
}

/// N particles: asset level, four EWMA accumulators, uniform weights.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    pub x: Vec<f64>,
    pub r1a: Vec<f64>,
    pub r1b: Vec<f64>,
    pub r2a: Vec<f64>,
    pub r2b: Vec<f64>,
}

impl ParticleCloud {
    /// All particles start at the spot with flat (zero) feature history.
    pub fn new(n: usize, spot: f64) -> Self {
        ParticleCloud {
            x: vec![spot; n],
            r1a: vec![0.0; n],
            r1b: vec![0.0; n],
            r2a: vec![0.0; n],
            r2b: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// One Euler step. `sigma2` holds σ²(kh, y_i) per particle. The default
/// update is multiplicative, X ← X(1 + σΔW); `literal_additive` switches to
/// X ← X + σΔW. Accumulators decay exactly: R ← e^{−λh}R + λ·r (returns) and
/// R ← e^{−λh}R + λ·r² (squared returns), with r the step return ΔX/X
/// (ΔX for the additive variant).
pub fn step_simulate(
    cloud: &mut ParticleCloud,
    sigma2: &[f64],
    spec: &FeatureSpec,
    h: f64,
    step: usize,
    seed: u64,
    literal_additive: bool,
) -> Result<()> {
    let n = cloud.len();
    if sigma2.len() != n {
        return Err(CondrepError::DimensionMismatch {
            expected: n,
            got: sigma2.len(),
        });
    }
    let sqh = h.sqrt();
    let decay: Vec<f64> = spec.lambdas.iter().map(|l| (-l * h).exp()).collect();
    let bad = std::sync::atomic::AtomicUsize::new(usize::MAX);
    let xs = &mut cloud.x;
    let r1a = &mut cloud.r1a;
    let r1b = &mut cloud.r1b;
    let r2a = &mut cloud.r2a;
    let r2b = &mut cloud.r2b;
    xs.par_iter_mut()
        .zip(r1a.par_iter_mut())
        .zip(r1b.par_iter_mut())
        .zip(r2a.par_iter_mut())
        .zip(r2b.par_iter_mut())
        .enumerate()
        .for_each(|(i, ((((x, a), b), c), d))| {
            let mut rng = stream(seed, ((step as u64) << 32) | i as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            let sig = sigma2[i].max(0.0).sqrt();
            let dw = sig * z * sqh;
            let r = if literal_additive {
                *x += dw;
                dw
            } else {
                *x *= 1.0 + dw;
                dw
            };
            *a = decay[0] * *a + spec.lambdas[0] * r;
            *b = decay[1] * *b + spec.lambdas[1] * r;
            *c = decay[2] * *c + spec.lambdas[2] * r * r;
            *d = decay[3] * *d + spec.lambdas[3] * r * r;
            if !x.is_finite() {
                bad.store(i, std::sync::atomic::Ordering::Relaxed);
            }
        });
    let b = bad.load(std::sync::atomic::Ordering::Relaxed);
    if b != usize::MAX {
        return Err(CondrepError::NonFiniteState(step));
    }
    Ok(())
}

/// Uniform binning over [lo, hi]; out-of-range values clamp to the end bins.
#[derive(Debug, Clone, Serialize)]
pub struct BinSpec {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl BinSpec {
    pub fn from_values(values: &[f64], n: usize) -> Self {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || hi - lo < 1e-12 {
            return BinSpec { n: 1, lo, hi: lo };
        }
        BinSpec { n, lo, hi }
    }

    pub fn index(&self, v: f64) -> usize {
        if self.n <= 1 || self.hi <= self.lo {
            return 0;
        }
        let t = (v - self.lo) / (self.hi - self.lo);
        ((t * self.n as f64) as usize).min(self.n - 1)
    }

    pub fn center(&self, i: usize) -> f64 {
        if self.n <= 1 {
            return self.lo;
        }
        self.lo + (i as f64 + 0.5) * (self.hi - self.lo) / self.n as f64
    }
}

/// Weighted within-bin averages of `values`; `None` marks empty bins.
pub fn estimate_cond_exp(
    x: &[f64],
    weights: &[f64],
    values: &[f64],
    bins: &BinSpec,
) -> Vec<Option<f64>> {
    let mut num = vec![0.0; bins.n];
    let mut den = vec![0.0; bins.n];
    for ((&xi, &wi), &vi) in x.iter().zip(weights).zip(values) {
        let b = bins.index(xi);
        num[b] += wi * vi;
        den[b] += wi;
    }
    num.iter()
        .zip(&den)
        .map(|(&s, &m)| if m > 0.0 { Some(s / m) } else { None })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Feasibility {
    Exact,
    LeastSquares,
}

/// Per-step calibration output: σ² per occupied feature bin, the residual of
/// the fit, and enough of the empirical problem to audit it.
#[derive(Debug, Clone)]
pub struct StepCalibration {
    pub feasibility: Feasibility,
    /// σ²(kh, ·) per kept y-bin.
    pub sigma2: Vec<f64>,
    /// σ² assigned to each particle.
    pub sigma2_per_particle: Vec<f64>,
    /// Weighted squared gap `Σ_i μ_i (Mg − f)_i²`.
    pub residual: f64,
    /// x-marginal over kept bins.
    pub mu: Vec<f64>,
    /// Target local variances per kept x-bin.
    pub f: Vec<f64>,
    pub x_centers: Vec<f64>,
    /// Particle count per kept x-bin.
    pub bin_counts: Vec<usize>,
}

/// Builds the empirical joint over (x-bin, y-label) and solves the inverse
/// problem for σ²(kh, ·): sign-constrained feasibility first, weighted
/// nonnegative least squares on refusal. `independent` replaces the joint by
/// the product of its marginals (severing the X–Y link deliberately).
pub fn calibrate_step(
    x: &[f64],
    ylabels: &[usize],
    target: impl Fn(f64) -> f64,
    n_xbins: usize,
    tol: f64,
    independent: bool,
) -> Result<StepCalibration> {
    let n = x.len();
    if n == 0 {
        return Err(CondrepError::EmptyCloud);
    }
    let xspec = BinSpec::from_values(x, n_xbins);
    // Map to dense row/col indices over occupied bins.
    let mut row_of = std::collections::BTreeMap::new();
    let mut col_of = std::collections::BTreeMap::new();
    for i in 0..n {
        let r = xspec.index(x[i]);
        let next = row_of.len();
        row_of.entry(r).or_insert(next);
        let next = col_of.len();
        col_of.entry(ylabels[i]).or_insert(next);
    }
    let nr = row_of.len();
    let nc = col_of.len();
    let mut counts = vec![vec![0u64; nc]; nr];
    for i in 0..n {
        counts[row_of[&xspec.index(x[i])]][col_of[&ylabels[i]]] += 1;
    }
    let p: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / n as f64).collect())
        .collect();
    let xs: Vec<f64> = row_of.keys().map(|&r| xspec.center(r)).collect();
    let ys: Vec<f64> = col_of.keys().map(|&c| c as f64).collect();
    let dj = DiscreteJoint::new(xs.clone(), ys, p)?;
    let dj = if independent {
        dj.product_of_marginals()
    } else {
        dj
    };
    let (mu, _) = dj.marginals();
    let f: Vec<f64> = xs.iter().map(|&c| target(c)).collect();
    let bin_counts: Vec<usize> = counts
        .iter()
        .map(|row| row.iter().sum::<u64>() as usize)
        .collect();

    let kernel = dj.kernel_x_given();
    let residual_of = |g: &[f64]| -> f64 {
        (0..nr)
            .map(|i| {
                let mg: f64 = (0..nc).map(|j| kernel.entry(i, j) * g[j]).sum();
                mu[i] * (mg - f[i]).powi(2)
            })
            .sum()
    };

    // The LP decides feasibility of the tolerance box; the returned g is
    // always the nonnegative weighted least-squares minimizer, which has no
    // reason to sit on the box edge the way an LP vertex does.
    let feasibility = if solve_nonneg(&dj, &f, &tol)?.is_feasible() {
        Feasibility::Exact
    } else {
        Feasibility::LeastSquares
    };
    let m = nalgebra::DMatrix::from_fn(nr, nc, |i, j| *kernel.entry(i, j));
    let b = nalgebra::DVector::from_column_slice(&f);
    let g: Vec<f64> = nnls_weighted(&m, &b, &mu).iter().cloned().collect();
    let residual = residual_of(&g);
    let sigma2_per_particle: Vec<f64> = ylabels.iter().map(|l| g[col_of[l]]).collect();
    Ok(StepCalibration {
        feasibility,
        sigma2: g,
        sigma2_per_particle,
        residual,
        mu,
        f,
        x_centers: xs,
        bin_counts,
    })
}

/// SLV leverage on x-bins: `ℓ² = σ²_loc / E[φ(Z)²|X]`.
pub fn calibrate_slv_step(
    x: &[f64],
    weights: &[f64],
    z: &[f64],
    phi: impl Fn(f64) -> f64,
    locvar: impl Fn(f64) -> f64,
    bins: &BinSpec,
    floor: f64,
) -> Result<Vec<Option<f64>>> {
    let phi2: Vec<f64> = z.iter().map(|&zi| phi(zi).powi(2)).collect();
    let cond = estimate_cond_exp(x, weights, &phi2, bins);
    cond.iter()
        .enumerate()
        .map(|(i, c)| match c {
            None => Ok(None),
            Some(d) if *d <= floor => Err(CondrepError::DegenerateDenominator(i)),
            Some(d) => Ok(Some(locvar(bins.center(i)) / d)),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRow {
    pub k: usize,
    pub t: f64,
    pub residual: f64,
    pub feasibility: Feasibility,
    pub occupied_ybins: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepriceRow {
    pub t: f64,
    pub strike: f64,
    pub model_price: f64,
    pub market_price: f64,
    pub mc_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub steps: Vec<StepRow>,
    pub reprice: Vec<RepriceRow>,
    pub clip_count: usize,
}

#[derive(Debug, Clone)]
pub struct CalibConfig {
    pub surface: SurfaceSource,
    pub spec: FeatureSpec,
    pub particles: usize,
    pub steps: usize,
    pub h: f64,
    pub xbins: usize,
    /// Feature bins per coordinate (n1 × n2 grid).
    pub ybins: (usize, usize),
    pub seed: u64,
    pub tol: f64,
    pub independent: bool,
    pub literal_additive: bool,
    pub reprice_strikes: Vec<f64>,
}

impl CalibConfig {
    pub fn flat_default() -> Self {
        CalibConfig {
            surface: SurfaceSource::Analytic(SurfaceModel::Flat { vol: 0.2 }),
            spec: FeatureSpec {
                lambdas: [25.0, 5.0, 25.0, 5.0],
                thetas: [0.3, 0.5],
                betas: [0.2, 0.0, 0.0],
            },
            particles: 100_000,
            steps: 50,
            h: 0.02,
            xbins: 40,
            ybins: (20, 20),
            seed: 7,
            tol: 2e-3,
            independent: false,
            literal_additive: false,
            reprice_strikes: (0..=8).map(|i| 0.8 + 0.05 * i as f64).collect(),
        }
    }
}

/// Per-particle feature-bin labels on the β-scaled coordinate grid.
pub fn feature_labels(cloud: &ParticleCloud, spec: &FeatureSpec, ybins: (usize, usize)) -> Vec<usize> {
    let n = cloud.len();
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|i| spec.coords(cloud.r1a[i], cloud.r1b[i], cloud.r2a[i], cloud.r2b[i]))
        .collect();
    let u1: Vec<f64> = coords.iter().map(|c| c.0).collect();
    let u2: Vec<f64> = coords.iter().map(|c| c.1).collect();
    let b1 = BinSpec::from_values(&u1, ybins.0);
    let b2 = BinSpec::from_values(&u2, ybins.1);
    (0..n)
        .map(|i| b1.index(u1[i]) * b2.n + b2.index(u2[i]))
        .collect()
}

/// Alternates calibration and simulation over `K` steps, then reprices the
/// final maturity against the input surface.
pub fn run_calibration(cfg: &CalibConfig) -> Result<CalibrationReport> {
    let mut cloud = ParticleCloud::new(cfg.particles, 1.0);
    if cfg.particles == 0 {
        return Err(CondrepError::EmptyCloud);
    }
    let grid_lv = match &cfg.surface {
        SurfaceSource::Grid(s) => Some(dupire_localvol(s)?),
        SurfaceSource::Analytic(_) => None,
    };
    let mut clip_count = grid_lv.as_ref().map_or(0, |g| g.clipped);
    let mut steps = vec![];
    for k in 0..cfg.steps {
        let t = k as f64 * cfg.h;
        let x_lo = cloud.x.iter().cloned().fold(f64::INFINITY, f64::min);
        let x_hi = cloud.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let grid = match (&cfg.surface, &grid_lv) {
            (SurfaceSource::Analytic(m), _) => {
                dupire_row_at(m, t, x_lo.max(0.05), x_hi.max(0.1), cfg.h)?
            }
            (SurfaceSource::Grid(_), Some(lv)) => {
                let r = lv.nearest_row(t.max(cfg.h / 8.0));
                LocalVolGrid {
                    times: vec![lv.times[r]],
                    strikes: lv.strikes.clone(),
                    locvar: vec![lv.locvar[r].clone()],
                    clipped: 0,
                }
            }
            _ => unreachable!(),
        };
        clip_count += grid.clipped;
        let labels = feature_labels(&cloud, &cfg.spec, cfg.ybins);
        let cal = calibrate_step(
            &cloud.x,
            &labels,
            |x| grid.interp_row(0, x),
            cfg.xbins,
            cfg.tol,
            cfg.independent,
        )?;
        steps.push(StepRow {
            k,
            t,
            residual: cal.residual,
            feasibility: cal.feasibility,
            occupied_ybins: cal.sigma2.len(),
        });
        step_simulate(
            &mut cloud,
            &cal.sigma2_per_particle,
            &cfg.spec,
            cfg.h,
            k,
            cfg.seed,
            cfg.literal_additive,
        )?;
    }
    let t_final = cfg.steps as f64 * cfg.h;
    let n = cfg.particles as f64;
    let reprice = cfg
        .reprice_strikes
        .iter()
        .map(|&strike| {
            let payoffs: Vec<f64> = cloud.x.iter().map(|&x| (x - strike).max(0.0)).collect();
            let mean = payoffs.iter().sum::<f64>() / n;
            let var = payoffs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
            RepriceRow {
                t: t_final,
                strike,
                model_price: mean,
                market_price: cfg.surface.price(t_final, strike),
                mc_se: (var / n).sqrt(),
            }
        })
        .collect();
    Ok(CalibrationReport {
        steps,
        reprice,
        clip_count,
    })
}

/// Independent samples of the cloud's x with a generic per-particle sigma:
/// helper for martingale tests.
pub fn weighted_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
