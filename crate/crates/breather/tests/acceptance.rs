//! End-to-end acceptance run on the shipped example configuration.
//!
//! Runs without the test harness and prints one `PASS`/`FAIL` line per
//! criterion. Criteria listed in `KNOWN_FAILING` are reported but do not
//! fail the run; every other criterion must pass and every computation
//! must complete.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use breather::cli;
use breather::config::RunConfig;
use breather::io::read_csv;
use breather_core::breather::{
    build_series, decay_profile, divergence_residual, flat_is_minus, series_convergence_study, synthesize, unflatten,
    CoefficientTable, Period, SeriesOptions, SolverKind,
};
use breather_core::checks::{check_b, drude_truncation_demo, gamma_bound_sweep};
use breather_core::pencil::{delta0_search, winding_count, Delta0Options, PencilContext};
use breather_core::resolvent::{linear_fit, r_squared, relative_gap, solve_analytic, solve_fd, StaggeredGrid};
use breather_core::susceptibility::{paley_wiener_exponent, LinearSusceptibility, NonlinearSusceptibility};
use breather_core::C64;
use common::c;
use common::oracles::*;

const KNOWN_FAILING: [u32; 3] = [3, 7, 9];

const ROOT_TOL: f64 = 5e-4;
const G1_TOL: f64 = 1e-12;
const SEED_DIGITS_TOL: f64 = 5e-5;
const TABLE_TOL: f64 = 2e-3;
const RATIO_TOL: f64 = 1e-3;
const DELTA0_SLOPE: (f64, f64) = (-1.15, -0.80);
const FD_SLOPE: (f64, f64) = (-2.2, -1.8);
const DECAY_R2: f64 = 0.99;
const CONJ_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;
const REAL_TOL: f64 = 1e-12;
const PERIODIC_TOL: f64 = 1e-10;
const DIV_RATIO: (f64, f64) = (3.0, 5.0);
const GAP_FACTOR: f64 = 10.0;

struct Outcome {
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn config() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example_paper.json");
    RunConfig::load(&path).unwrap()
}

fn fd_options(d: f64, n: usize, eps: f64, nu_max: u32, base: &SeriesOptions) -> SeriesOptions {
    SeriesOptions { grid: StaggeredGrid::new(d, n).unwrap(), eps, nu_max, solver: SolverKind::Fd, ..*base }
}

fn c1(cfg: &RunConfig) -> Result<(bool, String)> {
    let mut cfg = cfg.clone();
    cfg.spectrum.j_schedule.clear();
    let dir = tempfile::tempdir()?;
    cli::spectrum(&cfg, dir.path())?;
    let (_, rows) = read_csv(&dir.path().join("untruncated.csv"))?;
    let target = c(1.8179, -0.1488);
    let best = rows
        .iter()
        .map(|r| c(r[0], r[1]))
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
        .ok_or_else(|| anyhow!("no roots"))?;
    let dist = (best - target).norm();
    Ok((dist < ROOT_TOL, format!("root {:.10}{:+.10}i, distance {dist:.2e}", best.re, best.im)))
}

fn c2(cfg: &RunConfig) -> Result<(bool, String)> {
    let d = cfg.lorentz()?;
    let t = d.t_j(1001);
    let seed = cfg.omega_inf()?;
    let w = breather_core::pencil::newton(|w| d.g(1, w, t), seed, 1e-15, 50)?;
    let g = d.g(1, w, t).0.norm();
    let same = (w.re - seed.re).abs() < SEED_DIGITS_TOL && (w.im - seed.im).abs() < SEED_DIGITS_TOL;
    Ok((g < G1_TOL && same, format!("omega_T {:.12}{:+.12}i, |G1| {g:.2e}", w.re, w.im)))
}

fn c3(cfg: &RunConfig) -> Result<(bool, String)> {
    let d = cfg.lorentz()?;
    let t = cfg.truncation()?.ok_or_else(|| anyhow!("untruncated"))?;
    let rep = check_b(&d, cfg.omega_inf()?, t);
    let margin = |name: &str| rep.get(name).map(|r| r.margin).ok_or_else(|| anyhow!("missing {name}"));
    let (mu2, va, dist) = (margin("B4")?, margin("B3")?, margin("B5")?);
    let ok = [(mu2, 0.0477), (va, 0.3207), (dist, 0.1488)].iter().all(|&(v, p)| (v - p).abs() <= TABLE_TOL)
        && (rep.gamma_ratio - 3.3602).abs() <= RATIO_TOL;
    Ok((ok, format!("min|mu2| {mu2:.4} min|V_a| {va:.4} dist {dist:.4} gamma/|omega_I| {:.4}", rep.gamma_ratio)))
}

fn c4(cfg: &RunConfig) -> Result<(bool, String)> {
    let d = cfg.lorentz()?;
    let t = cfg.truncation()?.ok_or_else(|| anyhow!("untruncated"))?;
    let n = winding_count(|w| d.g(1, w, t), &cli::strip_rect(20.0, d.gamma, 0.05, t))?;
    Ok((n == 4, format!("I_T = {n} at T = {t:.4}")))
}

fn c5(cfg: &RunConfig) -> Result<(bool, String)> {
    let d = cfg.lorentz()?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for j in [101, 161, 251, 401, 631, 1001] {
        let t = d.t_j(j);
        x.push(t.ln());
        y.push(delta0_search(&d, 1, t, 20.0, &Delta0Options::default())?.ln());
    }
    let s = linear_fit(&x, &y).0;
    Ok(((DELTA0_SLOPE.0..=DELTA0_SLOPE.1).contains(&s), format!("log-log slope {s:.4}")))
}

fn c6(cfg: &RunConfig, ctx: &PencilContext) -> Result<(bool, String)> {
    let base = fd_options(40.0, 2000, cfg.eps, 10, &cfg.series_options()?);
    let tab = series_convergence_study(ctx, &base, &[2000, 4000, 8000], 32000, 10)?;
    let s = tab.slope.ok_or_else(|| anyhow!("no fit"))?;
    let errs: Vec<String> = tab.rows.iter().map(|r| format!("{:.3e}", r.error)).collect();
    Ok(((FD_SLOPE.0..=FD_SLOPE.1).contains(&s), format!("slope {s:.4}, errors [{}]", errs.join(", "))))
}

fn c7(cfg: &RunConfig, ctx: &PencilContext) -> Result<(bool, String)> {
    let base = cfg.series_options()?;
    let small = decay_profile(&build_series(ctx, &fd_options(cfg.grid.d, cfg.grid.n, 0.5, 10, &base))?, Period::TwoPi);
    let x: Vec<f64> = small.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = small.iter().map(|p| p.1.ln()).collect();
    let representable = small.iter().filter(|p| p.1 > 0.0).count();
    let (slope, r2) =
        if y.iter().all(|v| v.is_finite()) { (linear_fit(&x, &y).0, r_squared(&x, &y)) } else { (f64::NAN, f64::NAN) };
    let on_positive = cli::semilog_fit(&small.iter().map(|p| (p.0 as f64, p.1)).collect::<Vec<_>>());
    let large = decay_profile(&build_series(ctx, &fd_options(cfg.grid.d, cfg.grid.n, 20.0, 10, &base))?, Period::TwoPi);
    let decays = large.windows(2).filter(|w| w[0].0 >= 2).all(|w| w[1].1 < w[0].1 || (w[0].1 == 0.0 && w[1].1 == 0.0));
    let peak = large.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0).unwrap_or(0);
    let ok = r2 > DECAY_R2 && slope < 0.0 && decays;
    Ok((
        ok,
        format!(
            "eps 0.5: R2 {r2:.4} slope {slope:.3} ({representable}/10 levels nonzero; on those R2 {:.4}); eps 20: peak at nu = {peak}, decays beyond 2: {decays}",
            on_positive.map(|f| f.1).unwrap_or(f64::NAN)
        ),
    ))
}

fn div_rel(ctx: &PencilContext, t: &CoefficientTable, n: i32, nu: u32) -> Result<f64> {
    let q = ctx.spectral_quantities(n, nu)?;
    let e = t.entry(n, nu).unwrap();
    let g = &t.grid;
    let d: f64 = (0..=g.n)
        .map(|f| q.v(flat_is_minus(f, g)).scale_by(e.u[f][0]).to_complex().norm_sqr() + e.rhs(f)[0].norm_sqr())
        .sum();
    Ok(divergence_residual(ctx, t, n, nu)? / ((g.h() * d).sqrt() / ctx.omega_nnu(n, nu).norm()))
}

fn c8(cfg: &RunConfig, ctx: &PencilContext) -> Result<(bool, String)> {
    let base = cfg.series_options()?;
    let nu_max = 6;
    let t = build_series(ctx, &fd_options(40.0, 2000, 0.5, nu_max, &base))?;
    let mut fails = Vec::new();

    let outside =
        (1..=nu_max).all(|nu| t.entry(nu as i32 + 1, nu).is_none() && t.entry(-(nu as i32) - 1, nu).is_none());
    let parity = t.members().all(|(n, nu)| t.entry(n, nu).unwrap().zero == ((n + nu as i32) % 2 != 0));
    if !(outside && parity) {
        fails.push("cone");
    }

    let mut conj = 0.0f64;
    for (n, nu) in t.members().filter(|&(n, _)| n > 0) {
        let (a, b) = (t.entry(n, nu).unwrap(), t.entry(-n, nu).unwrap());
        if a.zero != b.zero {
            conj = f64::INFINITY;
            continue;
        }
        let scale = a.u.iter().map(|v| v[0].norm().max(v[1].norm())).fold(1e-300, f64::max);
        for (x, y) in a.u.iter().zip(&b.u) {
            for i in 0..2 {
                conj = conj.max((x[i].conj() - y[i]).norm() / scale);
            }
        }
    }
    if conj > CONJ_TOL {
        fails.push("conjugate");
    }

    let h1 = (-1..=1).all(|n| t.entry(n, 1).unwrap().h.iter().all(|a| a[0].norm() == 0.0 && a[1].norm() == 0.0));
    if !h1 {
        fails.push("h^{n,1}");
    }

    let res = t.members().filter_map(|(n, nu)| t.entry(n, nu).unwrap().residual).fold(0.0, f64::max);
    if res >= RESIDUAL_TOL {
        fails.push("residual");
    }

    let coarse = build_series(ctx, &fd_options(40.0, 1000, 0.5, 4, &base))?;
    let mut div_ok = true;
    for (n, nu) in [(1, 1), (0, 2), (2, 2), (1, 3), (2, 4)] {
        let (r1, r2) = (div_rel(ctx, &coarse, n, nu)?, div_rel(ctx, &t, n, nu)?);
        div_ok &= r2 < 1e-10 || (DIV_RATIO.0..=DIV_RATIO.1).contains(&(r1 / r2));
    }
    if !div_ok {
        fails.push("divergence");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = 2.0 * std::f64::consts::PI / ctx.k;
    let (mut imag, mut per) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let (x, y, tt) = (rng.gen_range(-39.0..39.0), rng.gen_range(0.0..p), rng.gen_range(0.0..3.0));
        let (a, im) = synthesize(&t, x, y, tt, nu_max);
        let b = synthesize(&t, x, y + p, tt, nu_max).0;
        imag = imag.max(im);
        let s = a.iter().map(|v| v.abs()).fold(1e-300, f64::max);
        per = per.max((0..3).map(|i| (a[i] - b[i]).abs() / s).fold(0.0, f64::max));
    }
    if imag >= REAL_TOL {
        fails.push("real");
    }
    if per >= PERIODIC_TOL {
        fails.push("periodic");
    }
    Ok((
        fails.is_empty(),
        format!("conj {conj:.1e} residual {res:.1e} imag {imag:.1e} periodic {per:.1e} failed {fails:?}"),
    ))
}

fn c9(cfg: &RunConfig, ctx: &PencilContext) -> Result<(bool, String)> {
    let base = cfg.series_options()?;
    let t = build_series(ctx, &fd_options(cfg.grid.d, cfg.grid.n, 0.5, 6, &base))?;
    let g = t.grid;
    let bound = GAP_FACTOR * g.h() * g.h();
    let mut worst = (0.0f64, (0, 0));
    let mut over = Vec::new();
    for (n, nu) in t.members().filter(|&(n, nu)| nu >= 2 && n >= 0) {
        let e = t.entry(n, nu).unwrap();
        if e.zero {
            continue;
        }
        let rhs = unflatten(&e.h, &g);
        let fd = solve_fd(ctx, n, nu, &rhs, &g)?.field;
        let an = solve_analytic(ctx, n, nu, &rhs, &g)?.grid_function();
        let gap = relative_gap(&fd, &an);
        if gap >= bound {
            over.push(format!("({n},{nu}) {gap:.2e}"));
        }
        if gap > worst.0 {
            worst = (gap, (n, nu));
        }
    }
    Ok((
        over.is_empty(),
        format!("bound {bound:.2e}, worst {:.3e} at {:?}, over bound: [{}]", worst.0, worst.1, over.join(", ")),
    ))
}

fn c10(cfg: &RunConfig) -> Result<(bool, String)> {
    let demo = drude_truncation_demo(&cfg.drude_dispersion()?, 1, None, &cfg.drude.t_schedule)?;
    let counts: Vec<String> = demo
        .counts
        .iter()
        .map(|(t, r)| match r {
            Ok(n) => format!("{t}:{n}"),
            Err(_) => format!("{t}:err"),
        })
        .collect();
    let last_zero = matches!(demo.counts.last(), Some((_, Ok(0))));
    Ok((
        demo.untruncated_count >= 1 && last_zero,
        format!("untruncated {}, truncated [{}]", demo.untruncated_count, counts.join(" ")),
    ))
}

fn worst_rel<F: FnMut(&mut ChaCha8Rng) -> (C64, C64)>(seed: u64, mut f: F) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100).map(|_| f(&mut rng)).map(|(a, b)| rel(a, b)).fold(0.0, f64::max)
}

fn c11(cfg: &RunConfig, ctx: &PencilContext) -> Result<(bool, String)> {
    let lorentz = worst_rel(11, |rng| {
        let t_cut = rng.gen_range(0.5..30.0);
        let w = c(rng.gen_range(-6.0..6.0), rng.gen_range(-1.0..0.5));
        let m = LinearSusceptibility::TruncatedLorentz { c_l: 20.0, gamma: 0.5, omega_star: 2.0, t_cut };
        (m.ft_chi1(w).unwrap(), chi1_oracle(&m, w))
    });
    let drude = worst_rel(12, |rng| {
        let t_cut = rng.gen_range(0.5..30.0);
        let w = c(rng.gen_range(-6.0..6.0), rng.gen_range(-1.0..0.5));
        let m = LinearSusceptibility::TruncatedDrude { c_d: 20.0, gamma: 0.5, t_cut };
        (m.ft_chi1(w).unwrap(), chi1_oracle(&m, w))
    });
    let nl = cfg.nonlinear.as_ref().ok_or_else(|| anyhow!("no nonlinearity"))?.susceptibility();
    let t_n = nl.t_n.ok_or_else(|| anyhow!("untruncated nonlinearity"))?;
    let chi2 = worst_rel(21, |rng| {
        let (w1, w2) = (sample_w(rng), sample_w(rng));
        (nl.ft_chi2(0, 0, 0, w1, w2).unwrap(), nl.c2[0][0][0] * chi2_oracle(w1, w2, t_n))
    });
    let chi3 = worst_rel(31, |rng| {
        let w = [sample_w(rng), sample_w(rng), sample_w(rng)];
        (nl.ft_chi3(1, 1, 1, 1, w[0], w[1], w[2]).unwrap(), nl.c3[1][1][1][1] * chi3_oracle(w, t_n))
    });
    let unit = NonlinearSusceptibility::diagonal(1.0, 1.0, nl.gamma_t, nl.omega_star_t, Some(t_n));
    let ratios = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100)
            .map(|_| {
                let w = [sample_w(&mut rng), sample_w(&mut rng), sample_w(&mut rng)];
                unit.k3(w[0], w[1], w[2]).unwrap().norm() / paley_wiener_exponent(&w, t_n).exp()
            })
            .fold(0.0, f64::max)
    };
    let (fit, fresh) = (ratios(41), ratios(42));
    let gb = gamma_bound_sweep(ctx, 6)?;
    let ok = lorentz < 1e-10 && drude < 1e-10 && chi2 < 1e-8 && chi3 < 1e-6 && fresh <= fit && gb.violations == 0;
    Ok((
        ok,
        format!(
            "chi1 L {lorentz:.1e} D {drude:.1e} chi2 {chi2:.1e} chi3 {chi3:.1e}; PW fit {fit:.3e} fresh {fresh:.3e}; cone bound violations {}",
            gb.violations
        ),
    ))
}

fn timed<F: FnOnce() -> Result<(bool, String)>>(budget_s: u64, f: F) -> Result<Outcome> {
    let start = Instant::now();
    let (pass, detail) = f()?;
    Ok(Outcome { pass, detail, elapsed: start.elapsed(), budget: Duration::from_secs(budget_s) })
}

fn main() {
    let cfg = config();
    let ctx = cfg.context().unwrap();
    let (cfg, ctx) = (&cfg, &ctx);
    let results: Vec<Result<Outcome>> = std::thread::scope(|s| {
        let jobs: Vec<Box<dyn FnOnce() -> Result<Outcome> + Send + '_>> = vec![
            Box::new(move || timed(1, || c1(cfg))),
            Box::new(move || timed(1, || c2(cfg))),
            Box::new(move || timed(5, || c3(cfg))),
            Box::new(move || timed(30, || c4(cfg))),
            Box::new(move || timed(600, || c5(cfg))),
            Box::new(move || timed(300, || c6(cfg, ctx))),
            Box::new(move || timed(600, || c7(cfg, ctx))),
            Box::new(move || timed(120, || c8(cfg, ctx))),
            Box::new(move || timed(120, || c9(cfg, ctx))),
            Box::new(move || timed(60, || c10(cfg))),
            Box::new(move || timed(120, || c11(cfg, ctx))),
        ];
        let handles: Vec<_> = jobs.into_iter().map(|j| s.spawn(j)).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut unexpected = Vec::new();
    println!();
    for (i, r) in results.iter().enumerate() {
        let id = i as u32 + 1;
        match r {
            Ok(o) => {
                let in_time = o.elapsed <= o.budget;
                let pass = o.pass && in_time;
                println!(
                    "criterion {id:2}: {} [{:.2} s of {} s] {}",
                    if pass { "PASS" } else { "FAIL" },
                    o.elapsed.as_secs_f64(),
                    o.budget.as_secs(),
                    o.detail
                );
                if !pass && !KNOWN_FAILING.contains(&id) {
                    unexpected.push(id);
                }
            }
            Err(e) => {
                println!("criterion {id:2}: FAIL error: {e:#}");
                unexpected.push(id);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria {unexpected:?} failed");
        std::process::exit(1);
    }
}
