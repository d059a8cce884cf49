//! One function per subcommand. Each writes its artifacts and the summary.

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use renorm3d::cantor::{
    build_pieces, max_diameter, min_hull_gap, nesting_excess, permutation_check, pieces_csv,
    tip_seeds,
};
use renorm3d::config::{Family, RunConfig};
use renorm3d::henon::{renorm_tower, HenonMap3D, RenormOptions, RenormTower};
use renorm3d::io::{csv_records, csv_table, fmt17, num, nums, to_json_string};
use renorm3d::toysplit::{
    cone_certificate, is_toy_model, kappa_bound, line_field_discontinuity_probe,
    min_expansion_scaling, perturbed_cone_certificate, splitting_orbit, strong_stable_probe,
    SEPARATION, TOY_TOL,
};
use renorm3d::unimodal::{presentation_tower, solve_fixed_point, universal_a};
use renorm3d::universality::{
    birkhoff_jacobian, jacobian_universality_fit, log_jac_renormalized, lyapunov_exponents,
    JacobianRoute,
};
use renorm3d::{Error, ScalarField1D};

use crate::report::{Output, Summary};

/// Samples of `a(x)` written to `a_of_x.csv`.
const A_SAMPLES: usize = 201;
/// Level of the strong-stable probe.
const STRONG_STABLE_LEVEL: usize = 4;
/// Deepest level of the minimum-expansion scan.
const EXPANSION_LEVELS: usize = 5;
/// Levels of the presentation tower used for `v*`.
const PRESENTATION_LEVELS: usize = 40;

fn build_tower(cfg: &RunConfig, depth: usize) -> Result<(HenonMap3D, RenormTower)> {
    let map = cfg.build_map().context("building the base map")?;
    let tower = renorm_tower(&map, depth, &RenormOptions::default())
        .with_context(|| format!("building the depth-{depth} tower"))?;
    Ok((map, tower))
}

fn universal_jacobian(cfg: &RunConfig) -> Result<ScalarField1D> {
    let fstar = cfg.fixed_point().context("solving for the fixed point")?;
    let pt = presentation_tower(&fstar, PRESENTATION_LEVELS)?;
    Ok(universal_a(&pt.v, &fstar)?)
}

/// `b₁ b₂` when the configured map is a named toy family.
fn toy_product(cfg: &RunConfig) -> Result<Option<f64>> {
    Ok(match cfg.map.family()? {
        Some(Family::ToyAffine { b1, b2, .. }) => Some(b1 * b2),
        _ => None,
    })
}

pub fn fixed_point(cfg: &RunConfig, out: &Output) -> Result<()> {
    let tol = cfg.tolerances.fixed_point;
    let fp = solve_fixed_point(cfg.degree, tol)
        .with_context(|| format!("degree {} at tolerance {tol:e}", cfg.degree))?;
    let pt = presentation_tower(&fp.map, PRESENTATION_LEVELS)?;
    let a = universal_a(&pt.v, &fp.map)?;

    out.write("fstar.json", &to_json_string(&fp))?;
    let vstar = json!({
        "v": pt.v,
        "u": pt.u,
        "rate": num(pt.rate),
        "increments": nums(&pt.increments),
    });
    out.write("vstar.json", &to_json_string(&vstar))?;
    let dom = a.domain();
    let rows: Vec<Vec<f64>> = dom
        .grid(A_SAMPLES)
        .into_iter()
        .map(|x| vec![x, a.eval(x)])
        .collect();
    out.write("a_of_x.csv", &csv_table(&["x", "a"], &rows))?;

    let mut s = Summary::default();
    s.note(format!(
        "degree {}, {} Newton iterations",
        cfg.degree, fp.iterations
    ));
    s.below("fixed-point residual", fp.residual, tol);
    s.value("sigma", fp.sigma);
    s.below("|1/sigma - 2.6|", (1.0 / fp.sigma - 2.6).abs(), 0.1);
    s.value("g*'(1)", pt.rate);
    out.finish(&s)
}

pub fn tower(cfg: &RunConfig, out: &Output) -> Result<()> {
    let (_, tower) = build_tower(cfg, cfg.depth)?;
    let summaries: Vec<_> = tower.steps.iter().map(|st| st.summary()).collect();
    out.write(
        "tower.json",
        &to_json_string(&json!({ "steps": summaries })),
    )?;
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|st| {
            let mut row = vec![(st.level + 1).to_string()];
            row.extend([st.eps_norm, st.delta_norm, st.sigma].map(fmt17));
            row
        })
        .collect();
    out.write(
        "norms.csv",
        &csv_records(&["level", "eps_norm", "delta_norm", "sigma"], &rows),
    )?;

    let mut s = Summary::default();
    let eps = tower.eps_norms();
    for n in 1..eps.len().saturating_sub(1) {
        let (now, next) = (eps[n], eps[n + 1]);
        if now > 0.0 && next > 0.0 && now < 1.0 {
            let label = format!("ln|eps_{}| / ln|eps_{n}|", n + 1);
            s.within(&label, next.ln() / now.ln(), 1.7, 2.3);
        } else {
            s.note(format!("level {n}: eps norm {now:.6e}, no log-ratio"));
        }
    }
    for st in &summaries {
        if st.frozen_eps || st.frozen_delta {
            s.note(format!(
                "level {}: fields frozen below working precision",
                st.level + 1
            ));
        }
    }
    if let Some(last) = summaries.last() {
        s.value("sigma at the deepest level", last.sigma);
    }
    out.finish(&s)
}

pub fn pieces(cfg: &RunConfig, out: &Output) -> Result<()> {
    let level = cfg.probes.pieces_level;
    let (map, tower) = build_tower(cfg, cfg.depth.max(level))?;
    let pieces = build_pieces(&tower, level)?;
    out.write("pieces.csv", &pieces_csv(&pieces))?;

    let mut s = Summary::default();
    s.note(format!("level {level}: {} pieces", pieces.len()));
    if level >= 1 {
        let parents = build_pieces(&tower, level - 1)?;
        s.below("nesting excess", nesting_excess(&parents, &pieces), 1e-12);
        let ratio = max_diameter(&pieces) / max_diameter(&parents);
        let sigma = *tower.sigmas().last().context("empty tower")?;
        s.below("diameter ratio / (1.2 sigma_n)", ratio / (1.2 * sigma), 1.0);
        let (gap, i, j) = min_hull_gap(&pieces);
        s.above(
            &format!("hull gap between {} and {}", pieces[i].word, pieces[j].word),
            gap,
            0.0,
        );
    }
    let perm = permutation_check(&map, &pieces)?;
    s.below(
        &format!("permutation ratio (worst {})", perm.worst_word),
        perm.worst_ratio,
        1.0,
    );
    s.below("containment ratio", perm.containment_ratio, 1.0);
    out.finish(&s)
}

pub fn universality(cfg: &RunConfig, out: &Output) -> Result<()> {
    let (map, tower) = build_tower(cfg, cfg.depth)?;
    let a = universal_jacobian(cfg)?;
    let route = if is_toy_model(&map, TOY_TOL) {
        JacobianRoute::Fields
    } else {
        JacobianRoute::Conjugacy
    };
    let levels: Vec<usize> = (1..=cfg.depth).collect();
    let fit = jacobian_universality_fit(&tower, &a, &levels, route)?;
    let tip = tip_seeds(&tower)?[0];
    let steps = cfg.probes.lyapunov_steps;
    let b_birkhoff = birkhoff_jacobian(&map, tip, steps)?;

    // Random probes at the deepest fitted level, against the grid value.
    let n = *fit.levels.last().context("no fitted level")?;
    let scale = 2f64.powi(n as i32) * fit.b.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut random_worst: f64 = 0.0;
    for _ in 0..cfg.probes.random_probes {
        let w = [
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        ];
        let lj = log_jac_renormalized(&tower, n, w, route)?;
        let dev = (lj - scale - a.eval(w[0]).ln()).exp_m1().abs();
        random_worst = random_worst.max(dev);
    }

    let rows: Vec<Vec<String>> = fit
        .levels
        .iter()
        .zip(&fit.residuals)
        .map(|(&l, &e)| vec![l.to_string(), fmt17(e)])
        .collect();
    out.write("residuals.csv", &csv_records(&["level", "E"], &rows))?;
    let report = json!({
        "fit": fit,
        "b_birkhoff": num(b_birkhoff),
        "birkhoff_steps": steps,
        "random": {
            "seed": cfg.seed,
            "count": cfg.probes.random_probes,
            "level": n,
            "max_residual": num(random_worst),
        },
    });
    out.write("universality.json", &to_json_string(&report))?;

    let mut s = Summary::default();
    s.value("b (quadrature over the pieces)", fit.b);
    s.value("b (Birkhoff along the tip orbit)", b_birkhoff);
    s.below(
        "|b_quadrature / b_birkhoff - 1|",
        (fit.b / b_birkhoff - 1.0).abs(),
        1e-6,
    );
    if let Some(b1b2) = toy_product(cfg)? {
        s.below("|b / (b1 b2) - 1|", (fit.b / b1b2 - 1.0).abs(), 1e-10);
    }
    s.note(format!("route {route:?}, levels {:?}", fit.levels));
    for (w, l) in fit.residuals.windows(2).zip(&fit.levels[1..]) {
        s.below(&format!("E_{l} / E_{}", l - 1), w[1] / w[0], 1.0);
    }
    s.below("fitted rho", fit.rho, 1.0);
    let grid = *fit.residuals.last().context("no residual")?;
    s.value(&format!("E_{n} on the grid"), grid);
    s.value(
        &format!("E_{n} on {} random probes", cfg.probes.random_probes),
        random_worst,
    );
    out.finish(&s)
}

pub fn cones(cfg: &RunConfig, out: &Output) -> Result<()> {
    let (map, tower) = build_tower(cfg, cfg.depth)?;
    let level = cfg.probes.cone_level.min(cfg.depth);
    let orbit = splitting_orbit(&tower, level, cfg.probes.tip_steps)?;
    let gamma = cfg.gamma;
    let toy = is_toy_model(&map, TOY_TOL);
    let kappa = kappa_bound(&map, &orbit)?;
    let mut s = Summary::default();
    s.note(format!(
        "{} samples, gamma = {gamma}, {} model",
        orbit.len(),
        if toy { "toy" } else { "perturbed" }
    ));
    s.at_most("sup |C_N A_N^-1|", kappa.observed, kappa.kappa_sharp);
    s.value("closed-form kappa c m/(m-d)", kappa.kappa);
    s.below("kappa_sharp gamma", kappa.kappa_sharp * gamma, 1.0);

    let certificate = if toy {
        Ok(cone_certificate(&map, &orbit, gamma)?)
    } else {
        let rho0 = 0.9 * kappa.kappa_sharp * gamma / 2.0;
        s.value("rho0 = 0.9 kappa_sharp gamma / 2", rho0);
        perturbed_cone_certificate(&map, &orbit, gamma, rho0)
    };
    let certificate = match certificate {
        Ok(cert) => Some(cert),
        // A failed hypothesis is a finding about the map, reported in the summary.
        Err(Error::HypothesisFailed(why)) => {
            s.fail(&format!("certificate hypotheses: {why}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(cert) = &certificate {
        s.below("rho = 2 d/m", cert.params.rho, 1.0);
        s.below(
            &format!("cone contraction (worst sample {})", cert.worst_sample),
            cert.worst_contraction,
            1.0,
        );
        s.value("predicted contraction", cert.predicted_rate);
    }

    let mut report = json!({ "kappa": kappa, "certificate": certificate });
    if toy {
        let depth = cfg.depth.min(STRONG_STABLE_LEVEL);
        let strong = strong_stable_probe(&tower, depth, SEPARATION)?;
        s.above("projected piece gap", strong.min_projected_gap, 0.0);
        s.below(
            "vertical spread / projected gap",
            strong.vertical_spread / strong.min_projected_gap,
            1.0,
        );

        let lines = line_field_discontinuity_probe(&tower, level, cfg.probes.line_field_orbit)?;
        out.write("line_field.csv", &lines.csv())?;
        s.value("line-field push-forward error", lines.pushforward_error);

        let sigma = *tower.sigmas().last().context("empty tower")?;
        let levels = EXPANSION_LEVELS.min(cfg.depth);
        let expansion = min_expansion_scaling(&tower, sigma, levels)?;
        for row in &expansion.rows {
            s.below(
                &format!("|min expansion deviation| n = {}", row.n),
                row.deviation.abs(),
                10f64.ln(),
            );
        }
        report["strong_stable"] = serde_json::to_value(&strong)?;
        report["line_field"] = serde_json::to_value(&lines)?;
        report["expansion"] = serde_json::to_value(&expansion)?;
    } else {
        s.note("strong-stable, line-field and expansion probes need a toy model");
    }
    out.write("cones.json", &to_json_string(&report))?;
    out.finish(&s)
}

pub fn lyapunov(cfg: &RunConfig, out: &Output) -> Result<()> {
    let (map, tower) = build_tower(cfg, cfg.depth)?;
    let tip = tip_seeds(&tower)?[0];
    let est = lyapunov_exponents(&map, tip, cfg.probes.lyapunov_steps)?;
    out.write("lyapunov.json", &to_json_string(&est))?;

    let mut s = Summary::default();
    for (i, (c, e)) in est.chi.iter().zip(&est.errors).enumerate() {
        s.note(format!("chi_{i} = {c:.6e} +- {e:.3e}"));
    }
    s.below("|chi_0|", est.chi[0].abs(), 0.05);
    s.below("|chi_1 + chi_2 - ln b|", est.sum_gap().abs(), 0.05);
    out.finish(&s)
}
