//! Verb implementations. Each writes its files under `out` and returns a
//! JSON summary that is also stored as `summary.json`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use breather_core::breather::{
    build_series_with, decay_profile, series_convergence_study, synthesize, CoefficientTable, Period,
};
use breather_core::checks::{check_a6_cone, check_b, drude_truncation_demo, gamma_bound_sweep, DrudeDemo};
use breather_core::pencil::{
    delta0_search, eigen_continuation, eigenfunction, oscillation_depth, winding_count, ContourRectangle,
    Delta0Options, Tolerances,
};
use breather_core::resolvent::{linear_fit, r_squared, StaggeredGrid};
use breather_core::C64;

use crate::config::RunConfig;
use crate::exec::ThreadExecutor;
use crate::io::{write_csv, write_json, write_table};
use crate::svg::{Plot, Series, Style};

fn cx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn finish(out: &Path, v: Value) -> Result<Value> {
    write_json(&out.join("summary.json"), &v)?;
    Ok(v)
}

/// `(slope, R²)` of `ln y` against `x` over the strictly positive values.
pub fn semilog_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let p: Vec<&(f64, f64)> = points.iter().filter(|p| p.1 > 0.0 && p.1.is_finite()).collect();
    if p.len() < 2 {
        return None;
    }
    let x: Vec<f64> = p.iter().map(|p| p.0).collect();
    let y: Vec<f64> = p.iter().map(|p| p.1.ln()).collect();
    Some((linear_fit(&x, &y).0, r_squared(&x, &y)))
}

/// Strip rectangle with panels fine enough for `e^{iωT}` on the long edges.
pub fn strip_rect(a: f64, gamma: f64, delta: f64, t: f64) -> ContourRectangle {
    let mut r = ContourRectangle::strip(a, gamma, delta);
    r.min_depth = oscillation_depth(t, 2.0 * a);
    r
}

pub fn spectrum(cfg: &RunConfig, out: &Path) -> Result<Value> {
    prepare(out)?;
    let d = cfg.lorentz()?;
    let roots = d.untruncated_eigenvalues(1)?;
    let rows: Vec<Vec<f64>> = roots.iter().map(|r| vec![r.re, r.im, d.g_inf(1, *r).0.norm()]).collect();
    write_csv(&out.join("untruncated.csv"), &["re", "im", "abs_g"], &rows)?;
    let seed = cfg.omega_inf()?;
    let sc = &cfg.spectrum;
    let ts: Vec<(u32, f64)> = sc.j_schedule.iter().map(|&j| (j, d.t_j(j))).collect();
    let mut summary = json!({
        "untruncated": roots.iter().map(|r| cx(*r)).collect::<Vec<_>>(),
        "seed": cx(seed),
    });
    if ts.is_empty() {
        return finish(out, summary);
    }

    let tl: Vec<f64> = ts.iter().map(|p| p.1).collect();
    let pts = eigen_continuation(&d, 1, &tl, seed)?;
    let rows: Vec<Vec<f64>> = ts
        .iter()
        .zip(&pts)
        .map(|(&(j, t), p)| vec![j as f64, t, p.omega.re, p.omega.im, p.residual, (p.omega - seed).norm()])
        .collect();
    write_csv(&out.join("eigenvalues.csv"), &["j", "T", "re", "im", "abs_g", "dist_untruncated"], &rows)?;
    summary["eigenvalues"] = pts.iter().map(|p| json!({"T": p.t, "omega": cx(p.omega), "abs_g": p.residual})).collect();
    Plot::new("Eigenvalue over the truncation schedule", "Re ω", "Im ω")
        .with(Series::new("truncated", pts.iter().map(|p| (p.omega.re, p.omega.im)).collect(), Style::Markers))
        .with(Series::new("untruncated", vec![(seed.re, seed.im)], Style::Markers))
        .save(&out.join("eigen_trajectory.svg"))?;

    if sc.winding {
        let mut rows = Vec::new();
        let mut counts = Vec::new();
        for &(j, t) in &ts {
            let rect = strip_rect(sc.contour_a, d.gamma, sc.delta, t);
            let r = winding_count(|w| d.g(1, w, t), &rect);
            rows.push(vec![j as f64, t, r.as_ref().map(|&c| c as f64).unwrap_or(f64::NAN)]);
            counts.push(match r {
                Ok(c) => json!({"T": t, "count": c}),
                Err(e) => json!({"T": t, "error": e.to_string()}),
            });
        }
        write_csv(&out.join("winding.csv"), &["j", "T", "count"], &rows)?;
        summary["winding"] = Value::Array(counts);
    }

    if sc.delta0 {
        let opts = Delta0Options::default();
        let mut rows = Vec::new();
        let mut fit = Vec::new();
        for &(j, t) in &ts {
            match delta0_search(&d, 1, t, sc.contour_a, &opts) {
                Ok(v) => {
                    rows.push(vec![j as f64, t, v]);
                    fit.push((t, v));
                }
                Err(e) => {
                    rows.push(vec![j as f64, t, f64::NAN]);
                    eprintln!("delta0 at T = {t}: {e}");
                }
            }
        }
        write_csv(&out.join("delta0.csv"), &["j", "T", "delta0"], &rows)?;
        let slope = (fit.len() >= 2).then(|| {
            let x: Vec<f64> = fit.iter().map(|p| p.0.ln()).collect();
            let y: Vec<f64> = fit.iter().map(|p| p.1.ln()).collect();
            linear_fit(&x, &y).0
        });
        summary["delta0"] = json!({"values": fit, "loglog_slope": slope});
        Plot::new("δ₀(T)", "T", "δ₀")
            .log(true, true)
            .with(Series::new("δ₀", fit.clone(), Style::Markers))
            .with(Series::new("δ₀", fit, Style::Line))
            .save(&out.join("delta0.svg"))?;
    }
    finish(out, summary)
}

pub fn eigen(cfg: &RunConfig, out: &Path) -> Result<Value> {
    prepare(out)?;
    let d = cfg.lorentz()?;
    let w_inf = cfg.omega_inf()?;
    let ctx = cfg.context()?;
    let t = cfg.truncation()?;
    let g = match t {
        Some(t) => d.g(1, ctx.omega0, t).0.norm(),
        None => d.g_inf(1, ctx.omega0).0.norm(),
    };
    let ef = eigenfunction(&ctx)?;
    let grid = StaggeredGrid::new(cfg.grid.d, cfg.grid.n)?;
    let rows: Vec<Vec<f64>> = (0..=grid.n)
        .map(|j| {
            let x = grid.x_int(j);
            let v = ef.eval_side(x, j <= grid.mid());
            vec![x, v[0].re, v[0].im, v[1].re, v[1].im, v[2].re, v[2].im]
        })
        .collect();
    write_csv(
        &out.join("eigenfunction.csv"),
        &["x", "phi1_re", "phi1_im", "phi2_re", "phi2_im", "phi3_re", "phi3_im"],
        &rows,
    )?;
    finish(
        out,
        json!({
            "T": t,
            "omega_untruncated": cx(w_inf),
            "omega0": cx(ctx.omega0),
            "abs_g": g,
            "mu_minus": cx(ef.mu_minus),
            "mu_plus": cx(ef.mu_plus),
            "norm_sq_12": ef.l2_norm_sq_12(),
        }),
    )
}

pub fn build_table(cfg: &RunConfig, threads: usize) -> Result<CoefficientTable> {
    let ctx = cfg.context()?;
    let opts = cfg.series_options()?;
    Ok(build_series_with(&ctx, &opts, &ThreadExecutor::new(threads))?)
}

pub fn breather(cfg: &RunConfig, out: &Path, threads: usize) -> Result<Value> {
    prepare(out)?;
    let table = build_table(cfg, threads)?;
    write_table(&out.join("table"), &table, Some(cfg))?;
    let two_pi = decay_profile(&table, Period::TwoPi);
    let natural = decay_profile(&table, Period::Natural);
    let rows: Vec<Vec<f64>> = two_pi.iter().zip(&natural).map(|(a, b)| vec![a.0 as f64, a.1, b.1]).collect();
    write_csv(&out.join("decay.csv"), &["nu", "norm_2pi", "norm_natural"], &rows)?;
    let pts: Vec<(f64, f64)> = two_pi.iter().map(|p| (p.0 as f64, p.1)).collect();
    let fit = semilog_fit(&pts);
    Plot::new("Level norms", "ν", "‖u^ν‖")
        .log(false, true)
        .with(Series::new("ε", pts.clone(), Style::Markers))
        .save(&out.join("decay.svg"))?;

    let g = &table.grid;
    let m = table.nu_max;
    let mut rows = Vec::new();
    for j in 0..=g.n {
        let x = g.x_int(j);
        let seed = synthesize(&table, x, 0.0, 0.0, 1).0;
        let full = synthesize(&table, x, 0.0, 0.0, m).0;
        rows.push(vec![x, seed[0], seed[1], full[0], full[1]]);
    }
    write_csv(&out.join("profile.csv"), &["x", "eps_phi1", "eps_phi2", "psi1", "psi2"], &rows)?;
    for (i, name) in [(0usize, "psi1"), (1, "psi2")] {
        Plot::new(&format!("{name} at t = 0, y = 0"), "x", name)
            .with(Series::new("εφ", rows.iter().map(|r| (r[0], r[1 + i])).collect(), Style::Dashed))
            .with(Series::new(&format!("ψ^({m})"), rows.iter().map(|r| (r[0], r[3 + i])).collect(), Style::Line))
            .save(&out.join(format!("{name}.svg")))?;
    }
    finish(
        out,
        json!({
            "omega0": cx(table.omega0),
            "eps": table.eps,
            "nu_max": m,
            "grid": {"d": g.d, "n": g.n},
            "decay": pts,
            "semilog_slope": fit.map(|f| f.0),
            "semilog_r2": fit.map(|f| f.1),
            "warnings": table.warnings.iter().map(|w| json!({"nu": w.nu, "norm": w.norm})).collect::<Vec<_>>(),
        }),
    )
}

fn drude_json(demo: &DrudeDemo) -> Value {
    json!({
        "rect": [demo.rect.x_left, demo.rect.x_right, demo.rect.y_bottom, demo.rect.y_top],
        "untruncated_roots": demo.untruncated_roots.iter().map(|z| cx(*z)).collect::<Vec<_>>(),
        "untruncated_count": demo.untruncated_count,
        "counts": demo.counts.iter().map(|(t, r)| match r {
            Ok(c) => json!({"T": t, "count": c}),
            Err(e) => json!({"T": t, "error": e.to_string()}),
        }).collect::<Vec<_>>(),
        "non_increasing": demo.non_increasing,
    })
}

pub fn drude_demo(cfg: &RunConfig, out: &Path) -> Result<Value> {
    prepare(out)?;
    let d = cfg.drude_dispersion()?;
    let demo = drude_truncation_demo(&d, 1, None, &cfg.drude.t_schedule)?;
    let rows: Vec<Vec<f64>> =
        demo.counts.iter().map(|(t, r)| vec![*t, r.as_ref().map(|&c| c as f64).unwrap_or(f64::NAN)]).collect();
    write_csv(&out.join("drude.csv"), &["T", "count"], &rows)?;
    finish(out, drude_json(&demo))
}

/// Returns the report and whether every check passed.
pub fn check(cfg: &RunConfig, out: &Path, with_drude: bool) -> Result<(Value, bool)> {
    prepare(out)?;
    let d = cfg.lorentz()?;
    let Some(t) = cfg.truncation()? else {
        bail!("check needs a truncated minus side (`T` or `j`)");
    };
    let w_inf = cfg.omega_inf()?;
    let ctx = cfg.context()?;
    let b = check_b(&d, w_inf, t);
    let cone = check_a6_cone(&ctx, cfg.nu_max, &Tolerances::default())?;
    let gb = gamma_bound_sweep(&ctx, cfg.nu_max.min(6))?;
    let mut passed = b.passed() && cone.violations.is_empty() && gb.violations == 0;
    let mut report = json!({
        "assumptions": b,
        "cone": {
            "checked": cone.checked,
            "min_dispersion": cone.min_dispersion,
            "violations": cone.violations.iter().map(|v| json!({"n": v.n, "nu": v.nu, "kind": v.kind})).collect::<Vec<_>>(),
        },
        "gamma_bound": {
            "c_beta": gb.c_beta,
            "c_gamma": gb.c_gamma,
            "samples_beta": gb.samples_beta,
            "samples_gamma": gb.samples_gamma,
            "violations": gb.violations,
            "max_ratio": gb.max_ratio,
            "beta_exponent": gb.beta_exponent,
            "gamma_exponent": gb.gamma_exponent,
        },
    });
    if with_drude {
        let dd = cfg.drude_dispersion()?;
        let demo = drude_truncation_demo(&dd, 1, None, &cfg.drude.t_schedule)?;
        let last_zero = matches!(demo.counts.last(), Some((_, Ok(0))));
        passed &= demo.untruncated_count >= 1 && last_zero;
        report["drude"] = drude_json(&demo);
    }
    report["passed"] = json!(passed);
    write_json(&out.join("report.json"), &report)?;
    Ok((report, passed))
}

pub fn converge(cfg: &RunConfig, out: &Path) -> Result<Value> {
    prepare(out)?;
    let ctx = cfg.context()?;
    let base = cfg.series_options()?;
    let cc = &cfg.converge;
    let tab = series_convergence_study(&ctx, &base, &cc.n_list, cc.reference_n, cc.partial_sum.min(cfg.nu_max))?;
    let rows: Vec<Vec<f64>> = tab.rows.iter().map(|r| vec![r.n as f64, r.h, r.error]).collect();
    write_csv(&out.join("converge.csv"), &["N", "h", "error"], &rows)?;
    let pts: Vec<(f64, f64)> = tab.rows.iter().map(|r| (r.n as f64, r.error)).collect();
    let mut plot = Plot::new("Partial-sum error against N", "N", "relative L² error")
        .log(true, true)
        .with(Series::new("FD", pts.clone(), Style::Markers));
    if let (Some(s), Some(first)) = (tab.slope, pts.first()) {
        let guide = pts.iter().map(|p| (p.0, first.1 * (p.0 / first.0).powf(s))).collect();
        plot = plot.with(Series::new(&format!("slope {s:.3}"), guide, Style::Dashed));
    }
    plot.save(&out.join("converge.svg"))?;

    let d = cfg.lorentz()?;
    let seed = cfg.omega_inf()?;
    let ts: Vec<f64> = cfg.spectrum.j_schedule.iter().map(|&j| d.t_j(j)).collect();
    let eig = if ts.is_empty() { Vec::new() } else { eigen_continuation(&d, 1, &ts, seed)? };
    let erows: Vec<Vec<f64>> = eig.iter().map(|p| vec![p.t, (p.omega - seed).norm()]).collect();
    write_csv(&out.join("eigen_error.csv"), &["T", "dist_untruncated"], &erows)?;
    Plot::new("Truncated eigenvalue against T", "T", "|ω_T − ω_∞|")
        .log(true, true)
        .with(Series::new("distance", erows.iter().map(|r| (r[0], r[1])).collect(), Style::Markers))
        .save(&out.join("eigen_error.svg"))?;
    finish(
        out,
        json!({
            "reference_n": tab.reference_n,
            "rows": tab.rows.iter().map(|r| json!({"N": r.n, "h": r.h, "error": r.error})).collect::<Vec<_>>(),
            "slope": tab.slope,
            "eigen_error": erows,
        }),
    )
}
