//! End-to-end acceptance suite: one test per criterion, each printing a
//! single PASS/FAIL line (run with --nocapture to see them alongside the
//! test harness output).

use std::time::Instant;

use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use condrep::counterexample::{
    admissible, alpha, f_mu, mu_measure, nu_density, represent_indicator, sample_xy,
    soussolution, AtlasEvaluator, BandFamily,
};
use condrep::intervals::IntervalSet;
use condrep::mixing::{mixing_check, pair_check, DigitScheme};
use condrep::operators::{apply_t, bernoulli_mixture_g, xi_criterion, BernoulliMixture};
use condrep::pdvcalib::{
    calibrate_step, dupire_row_at, feature_labels, step_simulate, CalibConfig, Feasibility,
    ParticleCloud, SurfaceModel,
};
use condrep::representation::{
    check_condition_d, construct_g_dirac, decide_rplus, find_tau, solve_nonneg,
};
use condrep::rngutil::{random_rational_joint, stream};
use condrep::scalar::{ratio, Scalar};

fn report(n: usize, name: &str, ok: bool) {
    println!(
        "criterion {n}: {} — {name}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {name}");
}

#[test]
fn criterion_1_finite_support_equivalence() {
    let start = Instant::now();
    let mut ok = true;
    for case in 0..200u64 {
        let mut rng = stream(101, case);
        let i = rng.gen_range(1..=5usize);
        let j = rng.gen_range(i..=7usize);
        let planted = case % 2 == 0;
        let dj = random_rational_joint(&mut rng, i, j, planted);
        let rep = decide_rplus(&dj).expect("LP runs");
        let tau = find_tau(&dj);
        ok &= rep.routes_agree && rep.rplus == tau.is_some();
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 10.0;
    report(
        1,
        "LP-over-indicators agrees with the injection witness on 200 random joints",
        ok,
    );
}

#[test]
fn criterion_2_constructive_g_exact() {
    let mut ok = true;
    let mut found = 0usize;
    let mut attempt = 0u64;
    while found < 50 {
        let mut rng = stream(102, attempt);
        attempt += 1;
        let i = rng.gen_range(1..=5usize);
        let j = rng.gen_range(i..=7usize);
        let dj = random_rational_joint(&mut rng, i, j, true);
        if !check_condition_d(&dj) {
            continue;
        }
        found += 1;
        for _ in 0..20 {
            let f: Vec<BigRational> = (0..i)
                .map(|_| ratio(rng.gen_range(0..6), rng.gen_range(1..5)))
                .collect();
            let g = construct_g_dirac(&dj, &f).expect("(D) holds");
            let tg = apply_t(&dj, &g).expect("dimensions match");
            ok &= tg == f;
            ok &= g.iter().all(|v| *v >= BigRational::zero());
            let (mu, nu) = dj.marginals();
            let f_mass: BigRational = mu.iter().zip(&f).map(|(m, v)| m * v).sum();
            let g_mass: BigRational = nu.iter().zip(&g).map(|(n, v)| n * v).sum();
            ok &= f_mass == g_mass;
        }
    }
    report(
        2,
        "Dirac-column g solves Mg = f exactly with equal L1 masses, 50 x 20 instances",
        ok,
    );
}

#[test]
fn criterion_3_bernoulli_mixture_closed_form() {
    let mut ok = true;
    for (pn, pd) in [(1i64, 4i64), (1, 2), (3, 4)] {
        for k in 2..=8usize {
            let bm = BernoulliMixture::uniform(ratio(pn, pd), k);
            let dj = bm.to_joint();
            for mask in 1u32..((1 << k) - 1) {
                let f: Vec<BigRational> = (0..k)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect();
                let (g, has_negative) = bernoulli_mixture_g(&bm, &f).expect("valid");
                ok &= apply_t(&dj, &g).expect("dims") == f;
                ok &= has_negative;
                // Negative exactly on the complement of A.
                for i in 0..k {
                    let in_a = mask >> i & 1 == 1;
                    ok &= g[i].is_negative() == !in_a;
                }
                ok &= !solve_nonneg(&dj, &f, &BigRational::zero())
                    .expect("LP runs")
                    .is_feasible();
            }
        }
    }
    report(
        3,
        "mixture closed form is exact, negative precisely off A, and sign-constrained infeasible",
        ok,
    );
}

#[test]
fn criterion_4_counterexample_identities() {
    let mut ok = true;
    let bands = BandFamily { m_max: 25 };

    // Total y-mass: density 15 on each band, summed over m <= 25.
    let mut nu_total = BigRational::zero();
    for m in 1..=25u32 {
        let (lo, hi) = bands.band(m);
        let mid = (&lo + &hi) / ratio(2, 1);
        let dens: BigRational = Scalar::from_f64(nu_density(ToPrimitive::to_f64(&mid).unwrap()));
        nu_total += dens * (hi - lo);
    }
    ok &= (nu_total - BigRational::one()).abs() < ratio(1, 10_000_000_000);

    // Total x-mass: f_mu is constant on the dyadic-4 shells, so evaluating at
    // shell midpoints and multiplying exact lengths integrates it exactly.
    let mut mu_total = f_mu(&ratio(1, 2)) * ratio(1, 2); // central [1/4, 3/4]
    for m in 1..=25u32 {
        let lo = ratio(1, 4i64.pow(m + 1));
        let hi = ratio(1, 4i64.pow(m));
        let mid = (&lo + &hi) / ratio(2, 1);
        let len = &hi - &lo;
        mu_total += f_mu(&mid) * &len; // left shell
        mu_total += f_mu(&(BigRational::one() - mid)) * len; // mirrored shell
    }
    ok &= (mu_total - BigRational::one()).abs() < ratio(1, 10_000_000_000);

    ok &= f_mu(&ratio(1, 2)) == ratio(5, 4);

    // Reflection bound lambda(A_m^k) >= 2 lambda(A cap I_m^k) - alpha_m.
    for case in 0..100u64 {
        let mut rng = stream(104, case);
        let mut pieces = vec![];
        for _ in 0..rng.gen_range(1..=3usize) {
            let d = rng.gen_range(40..200i64);
            let a = rng.gen_range(0..d);
            let b = rng.gen_range(a + 1..=d);
            pieces.push((ratio(a, d), ratio(b, d)));
        }
        let a_set = IntervalSet::new(pieces).expect("valid pieces");
        let m = rng.gen_range(3..=6u32);
        let k = rng.gen_range(2..=(4u64.pow(m) / 2 - 3));
        assert!(admissible(m, k));
        let cell = IntervalSet::new(vec![(
            ratio(k as i64, 1) * alpha(m),
            ratio(k as i64 + 1, 1) * alpha(m),
        )])
        .expect("cell");
        let (amk, _atlas) = soussolution(&a_set, m, k).expect("admissible");
        let inter = a_set.intersection(&cell).length();
        ok &= amk.length() >= ratio(2, 1) * inter - alpha(m);
    }
    report(
        4,
        "unit masses within 1e-10, f_mu(1/2) = 5/4, reflection bound on 100 random cells",
        ok,
    );
}

#[test]
fn criterion_5_indicator_representation_mc() {
    let start = Instant::now();
    let mut ok = true;
    let a = IntervalSet::interval((3, 10), (4, 10)).expect("valid");
    let target = ratio(1, 10_000); // 1e-3 * lambda(A)
    let rep = represent_indicator(&a, &target);
    ok &= rep.iterations <= 600;
    ok &= rep.remainder.length() <= target;

    let covered = a.difference(&rep.remainder);
    let eval = AtlasEvaluator::new(&rep.atlas);
    let nb = 64usize;
    let mut count = vec![0u64; nb];
    let mut sum = vec![0.0; nb];
    let mut sumsq = vec![0.0; nb];
    let mut rng = stream(105, 0);
    for _ in 0..1_000_000 {
        let (x, y, m) = sample_xy(&mut rng);
        let b = ((x * nb as f64) as usize).min(nb - 1);
        let v = eval.eval(m, y);
        count[b] += 1;
        sum[b] += v;
        sumsq[b] += v * v;
    }
    for b in 0..nb {
        if count[b] == 0 {
            continue;
        }
        let bin = IntervalSet::interval((b as i64, nb as i64), (b as i64 + 1, nb as i64))
            .expect("valid bin");
        let mb = mu_measure(&bin);
        let truth = ToPrimitive::to_f64(&(mu_measure(&covered.intersection(&bin)) / mb)).unwrap();
        let n = count[b] as f64;
        let mean = sum[b] / n;
        let se = ((sumsq[b] / n - mean * mean).max(0.0) / n).sqrt();
        ok &= (mean - truth).abs() <= 3.0 * se + 1e-9;
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 120.0;
    report(
        5,
        "indicator atlas converges and the 1e6-sample conditional audit stays within 3 SE",
        ok,
    );
}

#[test]
fn criterion_6_mixing_estimates() {
    let mut ok = true;
    let scheme = DigitScheme::new(ratio(3, 10), 12);
    let n = 1_000_000usize;

    let single = mixing_check(&scheme, None, &[0, 1, 2, 5, 10], n, 106);
    for row in &single.rows {
        ok &= (row.estimate - 0.3).abs() <= 3.0 * row.std_error;
    }

    let pairs = [(0u32, 1u32), (1, 2), (2, 5), (5, 10), (0, 10)];
    for row in pair_check(&scheme, &pairs, n, 107) {
        ok &= (row.estimate - 0.09).abs() <= 3.0 * row.std_error;
    }

    // Against a fixed half-interval the intersections trend to a * 1/2.
    let a_hat = IntervalSet::interval((0, 1), (1, 2)).expect("valid");
    let hat = mixing_check(&scheme, Some(&a_hat), &[0, 1, 2, 5, 10], n, 108);
    let dev: Vec<f64> = hat.rows.iter().map(|r| (r.estimate - 0.15).abs()).collect();
    ok &= dev[0] > dev[4]; // m = 0 reads the digit that pins [0, 1/2)
    for (i, row) in hat.rows.iter().enumerate().skip(1) {
        ok &= dev[i] <= 3.0 * row.std_error;
    }
    report(
        6,
        "digit sets carry mass a, pairwise a^2, and mix against a fixed half-interval",
        ok,
    );
}

#[test]
fn criterion_7_xi_criterion() {
    let mut ok = true;
    for (case, (pn, pd)) in [(0u64, (3i64, 10i64)), (1, (3, 5)), (2, (3, 4))] {
        for k in 2..=6usize {
            let mut rng = stream(107, case * 10 + k as u64);
            // Random positive rational marginal.
            let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..9)).collect();
            let total: i64 = raw.iter().sum();
            let mu: Vec<BigRational> = raw.iter().map(|&v| ratio(v, total)).collect();
            let p = ratio(pn, pd);
            let bm = BernoulliMixture::new(p.clone(), (0..k).map(|i| i as f64).collect(), mu.clone())
                .expect("valid mixture");
            let dj = bm.to_joint();
            let xi = xi_criterion(&dj, 12).expect("small instance");
            let min_mu = mu.iter().min().expect("nonempty").clone();
            let expect =
                ToPrimitive::to_f64(&(&p + (BigRational::one() - &p) * min_mu)).unwrap();
            ok &= (xi.xi - expect).abs() <= 1e-12;
            ok &= xi.surjective == (xi.xi > 0.5);

            if xi.xi > 0.5 {
                // Unconstrained solvability: M is invertible here, residual ~ 0.
                let djf = dj.to_f64();
                let kern = djf.kernel_x_given();
                let m = nalgebra::DMatrix::from_fn(k, k, |i, j| *kern.entry(i, j));
                let lu = m.clone().lu();
                for t in 0..20u64 {
                    let mut rng2 = stream(1070 + t, case);
                    let f =
                        nalgebra::DVector::from_fn(k, |_, _| rng2.gen_range(-2.0..2.0f64));
                    let g = lu.solve(&f).expect("invertible");
                    let resid = (&m * &g - &f).abs().max();
                    ok &= resid <= 1e-10;
                }
            }
        }
    }
    report(
        7,
        "xi equals p + (1-p) min mu exactly and xi > 1/2 gives unconstrained solvability",
        ok,
    );
}

#[test]
fn criterion_8_pdv_flat_surface() {
    let start = Instant::now();
    let mut ok = true;
    let cfg = CalibConfig::flat_default();
    let model = SurfaceModel::Flat { vol: 0.2 };
    let mut cloud = ParticleCloud::new(cfg.particles, 1.0);

    for k in 0..cfg.steps {
        let t = k as f64 * cfg.h;
        let x_lo = cloud.x.iter().cloned().fold(f64::INFINITY, f64::min);
        let x_hi = cloud.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let grid = dupire_row_at(&model, t, x_lo.max(0.05), x_hi.max(0.1), cfg.h).expect("grid");

        // Interior of the Dupire row: strikes within 4.5 total sd of the money.
        let band = 4.5 * 0.2 * t.max(cfg.h / 8.0).sqrt();
        for (i, &x) in grid.strikes.iter().enumerate() {
            if x.ln().abs() <= band {
                ok &= (grid.locvar[0][i].sqrt() - 0.2).abs() <= 0.002;
            }
        }

        let labels = feature_labels(&cloud, &cfg.spec, cfg.ybins);
        let cal = calibrate_step(
            &cloud.x,
            &labels,
            |x| grid.interp_row(0, x),
            cfg.xbins,
            cfg.tol,
            false,
        )
        .expect("cloud occupied");
        ok &= cal.feasibility == Feasibility::Exact;
        // Degenerate features collapse to one y-bin: sigma^2 is one number.
        ok &= cal.sigma2.len() == 1;
        for (j, &c) in cal.bin_counts.iter().enumerate() {
            if c >= 500 {
                ok &= (cal.sigma2[0] - 0.04).abs() <= 0.05 * 0.04;
                ok &= (cal.f[j] - 0.04).abs() <= 0.05 * 0.04;
            }
        }
        step_simulate(
            &mut cloud,
            &cal.sigma2_per_particle,
            &cfg.spec,
            cfg.h,
            k,
            cfg.seed,
            false,
        )
        .expect("finite");
    }

    let t_final = cfg.steps as f64 * cfg.h;
    let n = cfg.particles as f64;
    for i in 0..=8 {
        let strike = 0.8 + 0.05 * i as f64;
        let payoffs: Vec<f64> = cloud.x.iter().map(|&x| (x - strike).max(0.0)).collect();
        let mean = payoffs.iter().sum::<f64>() / n;
        let var = payoffs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        ok &= (mean - model.price(t_final, strike)).abs() <= 3.0 * se;
    }
    let elapsed = start.elapsed();
    ok &= elapsed.as_secs_f64() < 300.0;
    report(
        8,
        "flat-surface pipeline: accurate Dupire row, feasible steps near 0.04, reprice in 3 SE",
        ok,
    );
}

#[test]
fn criterion_9_pdv_independence_residual() {
    let mut ok = true;
    let model = SurfaceModel::SkewedMixture {
        w: 0.4,
        mean1: 0.9,
        vol1: 0.15,
        vol2: 0.3,
    };
    let spec = CalibConfig::flat_default().spec;

    let run = |particles: usize, ok: &mut bool| -> Vec<f64> {
        let mut cloud = ParticleCloud::new(particles, 1.0);
        let mut residuals = vec![];
        for k in 0..30 {
            let t = k as f64 * 0.02;
            let x_lo = cloud.x.iter().cloned().fold(f64::INFINITY, f64::min);
            let x_hi = cloud.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let grid =
                dupire_row_at(&model, t, x_lo.max(0.05), x_hi.max(0.1), 0.02).expect("grid");
            let labels = feature_labels(&cloud, &spec, (20, 20));
            let cal = calibrate_step(
                &cloud.x,
                &labels,
                |x| grid.interp_row(0, x),
                40,
                2e-3,
                true, // sever the X-Y link: joint = product of marginals
            )
            .expect("cloud occupied");
            // Analytic oracle: constant predictors can do no better than the
            // mu-mean, so the residual is the weighted variance of f.
            let mean: f64 = cal.mu.iter().zip(&cal.f).map(|(m, f)| m * f).sum();
            let var: f64 = cal
                .mu
                .iter()
                .zip(&cal.f)
                .map(|(m, f)| m * (f - mean).powi(2))
                .sum();
            *ok &= (cal.residual - var).abs() <= 1e-10;
            if k > 0 {
                *ok &= cal.residual > 0.0;
            }
            residuals.push(cal.residual);
            step_simulate(&mut cloud, &cal.sigma2_per_particle, &spec, 0.02, k, 9, false)
                .expect("finite");
        }
        residuals
    };

    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let r1 = median(run(20_000, &mut ok));
    let r2 = median(run(40_000, &mut ok));
    ok &= r2 >= 0.9 * r1;
    report(
        9,
        "independent Y: residual is the weighted variance of f and survives doubling particles",
        ok,
    );
}
