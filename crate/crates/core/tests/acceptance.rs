//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use renorm3d::cantor::{
    adding_machine, build_pieces, max_diameter, min_hull_gap, nesting_excess, permutation_check,
    tip_seeds, Word,
};
use renorm3d::config::REFERENCE_MU;
use renorm3d::henon::{
    renorm_tower, renormalize, HenonMap3D, HorizontalDiffeo, RenormOptions, RenormTower,
};
use renorm3d::toysplit::{
    attractor_orbit, block_power, cone_invariance_check, direct_power, min_expansion_scaling,
    perturbed_cone_check,
};
use renorm3d::unimodal::{
    presentation_tower, solve_fixed_point, universal_a, FixedPoint, FIELD_DOMAIN,
};
use renorm3d::universality::{
    average_jacobian, birkhoff_jacobian, jacobian_universality_fit, lyapunov_exponents,
    JacobianRoute,
};
use renorm3d::{Interval, Result, ScalarField1D};

const B1: f64 = 0.1;
const B2: f64 = 0.001;
/// Accumulation of the cascade of `perturbed_toy(0.1, 0.001, mu, 0.003)`,
/// frozen from `locate_feigenbaum`.
const PERTURBED_MU: f64 = 1.561_502_616_156_643;
const PERTURBED_ETA: f64 = 0.003;
/// Level of the piece quadrature compared with the Birkhoff average.
const QUADRATURE_LEVEL: usize = 10;
const BIRKHOFF_STEPS: usize = 1 << 14;

struct Fixtures {
    fp: FixedPoint,
    a: ScalarField1D,
    toy: RenormTower,
    perturbed: RenormTower,
}

/// Outcome of one criterion: whether it holds and the measured values.
type Outcome = Result<(bool, String)>;

fn toy_map() -> HenonMap3D {
    HenonMap3D::toy_affine(B1, B2, REFERENCE_MU)
}

fn perturbed_map() -> HenonMap3D {
    HenonMap3D::perturbed_toy(B1, B2, PERTURBED_MU, PERTURBED_ETA)
}

fn tower(map: &HenonMap3D, depth: usize) -> Result<RenormTower> {
    renorm_tower(map, depth, &RenormOptions::default())
}

fn fixed_point_and_scaling(elapsed: Duration, fp: &FixedPoint) -> Outcome {
    let gap = (1.0 / fp.sigma - 2.6).abs();
    let ok = fp.residual < 1e-9 && gap < 0.1 && elapsed.as_secs_f64() < 60.0;
    Ok((
        ok,
        format!(
            "residual {:.3e} < 1e-9, |1/sigma - 2.6| = {gap:.4} < 0.1, {:.1} s < 60 s",
            fp.residual,
            elapsed.as_secs_f64()
        ),
    ))
}

fn super_exponential_decay() -> Outcome {
    let start = Instant::now();
    let t = tower(&toy_map(), 5)?;
    let eps = t.eps_norms();
    let ratios: Vec<f64> = (1..=4).map(|n| eps[n + 1].ln() / eps[n].ln()).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = ratios.iter().all(|r| (1.7..=2.3).contains(r)) && secs < 300.0;
    Ok((
        ok,
        format!("log ratios {ratios:.4?} in [1.7, 2.3], {secs:.1} s < 300 s"),
    ))
}

fn piece_structure(toy: &RenormTower, sigma: f64) -> Outcome {
    let map = &toy.maps[0];
    let mut ok = true;
    let mut worst_nest: f64 = f64::NEG_INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut worst_perm: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut parents = build_pieces(toy, 0)?;
    for n in 1..=5 {
        let pieces = build_pieces(toy, n)?;
        ok &= pieces.len() == 1 << n;
        worst_nest = worst_nest.max(nesting_excess(&parents, &pieces));
        min_gap = min_gap.min(min_hull_gap(&pieces).0);
        let perm = permutation_check(map, &pieces)?;
        ok &= perm.holds();
        worst_perm = worst_perm.max(perm.worst_ratio.max(perm.containment_ratio));
        worst_ratio = worst_ratio.max(max_diameter(&pieces) / max_diameter(&parents));
        parents = pieces;
    }
    ok &= worst_nest <= 0.0 && min_gap > 0.0 && worst_ratio <= 1.2 * sigma;
    Ok((
        ok,
        format!(
            "nesting excess {worst_nest:.2e} <= 0, min gap {min_gap:.3e} > 0, \
             permutation {worst_perm:.2e} <= 1, diameter ratio {worst_ratio:.4} <= {:.4}",
            1.2 * sigma
        ),
    ))
}

fn average_jacobian_exactness(toy: &RenormTower, perturbed: &RenormTower) -> Outcome {
    let b_toy = average_jacobian(toy, 5)?;
    let toy_gap = (b_toy / (B1 * B2) - 1.0).abs();
    let quad = average_jacobian(perturbed, QUADRATURE_LEVEL)?;
    let tip = tip_seeds(perturbed)?[0];
    let birk = birkhoff_jacobian(&perturbed.maps[0], tip, BIRKHOFF_STEPS)?;
    let gap = (quad / birk - 1.0).abs();
    Ok((
        toy_gap < 1e-10 && gap < 1e-6,
        format!(
            "toy |b/(b1 b2) - 1| = {toy_gap:.2e} < 1e-10, perturbed quadrature (level \
             {QUADRATURE_LEVEL}) vs Birkhoff = {gap:.2e} < 1e-6"
        ),
    ))
}

fn jacobian_universality(toy: &RenormTower, a: &ScalarField1D) -> Outcome {
    let fit = jacobian_universality_fit(toy, a, &[1, 2, 3, 4], JacobianRoute::Fields)?;
    Ok((
        fit.strictly_decreasing() && fit.rho < 1.0 && fit.excluded.is_empty(),
        format!(
            "E_1..4 = [{}] strictly decreasing, rho = {:.3} < 1",
            fit.residuals
                .iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
                .join(", "),
            fit.rho
        ),
    ))
}

fn lyapunov(perturbed: &RenormTower) -> Outcome {
    let tip = tip_seeds(perturbed)?[0];
    let est = lyapunov_exponents(&perturbed.maps[0], tip, BIRKHOFF_STEPS)?;
    let (chi0, gap) = (est.chi[0].abs(), est.sum_gap().abs());
    Ok((
        chi0 < 0.05 && gap < 0.05,
        format!("|chi_0| = {chi0:.2e} < 0.05, |chi_1 + chi_2 - ln b| = {gap:.2e} < 0.05"),
    ))
}

/// Toy map with `ε = b₁y + e z` and `δ = b₂z + 0.01xy`, so that both `B` and
/// `C` are nonzero.
fn coupled(eps_z: f64) -> Result<HenonMap3D> {
    let f = ScalarField1D::fit(|x| 1.0 - REFERENCE_MU * x * x, FIELD_DOMAIN, 2);
    HenonMap3D::from_fns(
        f,
        move |p| B1 * p[1] + eps_z * p[2],
        [1, 1, 1],
        |p| B2 * p[2] + 0.01 * p[0] * p[1],
        [1, 1, 1],
    )
}

fn cone_certification(toy: &RenormTower) -> Outcome {
    let map = &toy.maps[0];
    let tip = tip_seeds(toy)?[0];
    let orbit = attractor_orbit(map, tip, 16, 512);
    let cert = cone_invariance_check(map, &orbit, 0.1)?;
    let factor = cert.worst_contraction / cert.predicted_rate;
    let mut ok = (0.5..=2.0).contains(&factor);

    let weak = coupled(1e-6)?;
    let weak_orbit = attractor_orbit(&weak, tip, 16, 512);
    let rho0 = |m: &HenonMap3D, o: &[[f64; 3]]| -> Result<f64> {
        let k = renorm3d::toysplit::kappa_bound(m, o)?;
        Ok(0.9 * k.kappa_sharp * 0.1 / 2.0)
    };
    let weak_pass =
        perturbed_cone_check(&weak, &weak_orbit, 0.1, rho0(&weak, &weak_orbit)?).is_ok();
    let strong = coupled(1e-3)?;
    let strong_orbit = attractor_orbit(&strong, tip, 16, 512);
    let strong_fails = matches!(
        perturbed_cone_check(&strong, &strong_orbit, 0.1, rho0(&strong, &strong_orbit)?),
        Err(renorm3d::Error::HypothesisFailed(_))
    );
    ok &= weak_pass && strong_fails;
    Ok((
        ok,
        format!(
            "toy contraction {:.4e} / predicted {:.4e} = {factor:.3} in [0.5, 2]; \
             d_z eps = 1e-6 passes: {weak_pass}; 1e-3 fails its hypothesis: {strong_fails}",
            cert.worst_contraction, cert.predicted_rate
        ),
    ))
}

fn minimum_expansion(toy: &RenormTower, sigma: f64) -> Outcome {
    let report = min_expansion_scaling(toy, sigma, 5)?;
    let devs: Vec<f64> = report.rows.iter().map(|r| r.deviation).collect();
    let worst = devs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok((
        worst <= 10f64.ln(),
        format!("deviations n = 0..5 {devs:.3?}, max |.| = {worst:.3} <= ln 10"),
    ))
}

fn rel_gap(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

fn property_suites(toy: &RenormTower) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let pert = perturbed_map();
    let tip = tip_seeds(toy)?[0];
    let orbit = attractor_orbit(&pert, tip, 16, 512);
    let mut block: f64 = 0.0;
    for _ in 0..64 {
        let w = orbit[rng.random_range(0..orbit.len())];
        let n = rng.random_range(1..=64);
        block = block.max(rel_gap(
            &block_power(&pert, w, n)?.assemble(),
            &direct_power(&pert, w, n)?,
        ));
    }

    let small = HenonMap3D::perturbed_toy(1e-3, 1e-3, 1.4, 1e-3);
    let dom = Interval::new(-0.6, 0.4)?;
    let h = HorizontalDiffeo::new(&small, dom)?;
    let mut round: f64 = 0.0;
    for _ in 0..100 {
        let w = [
            rng.random_range(dom.lo..dom.hi),
            rng.random_range(dom.lo..dom.hi),
            rng.random_range(-0.4..0.4),
        ];
        let back = h.forward(h.inverse(w)?);
        round = round.max((0..3).map(|k| (back[k] - w[k]).abs()).fold(0.0, f64::max));
    }

    let map = HenonMap3D::perturbed_toy(B1, B2, REFERENCE_MU, 1e-3);
    let step = renormalize(&map, 0, &RenormOptions::default())?;
    let mut conj: f64 = 0.0;
    for _ in 0..100 {
        let u = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let lhs = step.psi_v(step.result.apply(u))?;
        let rhs = map.iterate(step.psi_v(u)?, 2);
        conj = conj.max((0..3).map(|k| (lhs[k] - rhs[k]).abs()).fold(0.0, f64::max));
    }

    let mut order_ok = true;
    for n in 1..=10 {
        let start = Word::from_value(rng.random_range(0..1u64 << n), n);
        let mut w = adding_machine(&start);
        let mut order = 1usize;
        while w != start {
            w = adding_machine(&w);
            order += 1;
        }
        order_ok &= order == 1 << n;
    }

    Ok((
        block < 1e-9 && round < 1e-10 && conj < 1e-8 && order_ok,
        format!(
            "block recursion {block:.2e} < 1e-9, H round trip {round:.2e} < 1e-10, \
             conjugacy {conj:.2e} < 1e-8, adding machine order 2^n: {order_ok}"
        ),
    ))
}

fn report(index: usize, name: &str, outcome: Outcome, elapsed: Duration) -> bool {
    let (pass, detail) = match outcome {
        Ok((pass, detail)) => (pass, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if pass { "PASS" } else { "FAIL" };
    println!(
        "{tag} {index} {name} [{:.1} s]: {detail}",
        elapsed.as_secs_f64()
    );
    pass
}

fn fixtures() -> Result<(Fixtures, Duration)> {
    let start = Instant::now();
    let fp = solve_fixed_point(20, 1e-9)?;
    let fp_time = start.elapsed();
    let pt = presentation_tower(&fp.map, 40)?;
    let a = universal_a(&pt.v, &fp.map)?;
    let toy = tower(&toy_map(), 6)?;
    let perturbed = tower(&perturbed_map(), QUADRATURE_LEVEL)?;
    Ok((
        Fixtures {
            fp,
            a,
            toy,
            perturbed,
        },
        fp_time,
    ))
}

fn main() -> ExitCode {
    println!("acceptance criteria");
    let t = Instant::now();
    let (fx, fp_time) = match fixtures() {
        Ok(f) => f,
        Err(e) => {
            println!("FAIL fixtures: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("fixtures built in {:.1} s", t.elapsed().as_secs_f64());
    let sigma = fx.fp.sigma;
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "fixed point and scaling",
            Box::new(|| fixed_point_and_scaling(fp_time, &fx.fp)),
        ),
        ("super-exponential decay", Box::new(super_exponential_decay)),
        (
            "piece structure",
            Box::new(|| piece_structure(&fx.toy, sigma)),
        ),
        (
            "average Jacobian",
            Box::new(|| average_jacobian_exactness(&fx.toy, &fx.perturbed)),
        ),
        (
            "Jacobian universality",
            Box::new(|| jacobian_universality(&fx.toy, &fx.a)),
        ),
        ("Lyapunov exponents", Box::new(|| lyapunov(&fx.perturbed))),
        (
            "cone certification",
            Box::new(|| cone_certification(&fx.toy)),
        ),
        (
            "minimum expansion scaling",
            Box::new(|| minimum_expansion(&fx.toy, sigma)),
        ),
        ("property suites", Box::new(|| property_suites(&fx.toy))),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        all &= report(i + 1, name, outcome, start.elapsed());
    }
    if all {
        println!("all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("some criteria fail");
        ExitCode::FAILURE
    }
}
