//! Subcommand implementations. Setup failures (bad sections, rejected
//! weights, malformed tables) surface as configuration errors; failures
//! inside a run (poles, exhausted budgets) as computation errors.

use std::f64::consts::TAU;
use std::fs;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use triflow::autoform::{self, AutomorphicField, RationalMap};
use triflow::ballmodel::{
    build_complex, dihedral_check, edge_cycles, face_isometry, face_label, FacePairing, FACES,
};
use triflow::domain::FundamentalDomain;
use triflow::flow::{
    integrate_wrapped, pendulum_energy, pendulum_field, IntegrationParams, PendulumParams, State,
    Trajectory,
};
use triflow::group::{enumerate_ball, WordBall};
use triflow::reeb::{
    classify_equilibrium, connected_sum_field, equilibrium_index, heegaard_glue, index_report,
    torus_distance, torus_field, HeegaardGluing, PlanarField, SumChart,
};
use triflow::HPoint;

use crate::config::{self, FieldConfig, RunConfig};
use crate::output;
use crate::CliError;

fn cfg_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

fn run_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Computation(msg.to_string())
}

fn need<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| {
        cfg_err(format!("missing [{name}] section; pass --scenario or --config"))
    })
}

fn write_file(path: &str, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| run_err(format!("writing {path}: {e}")))?;
    println!("wrote {path}");
    Ok(())
}

fn build_ball(cfg: &RunConfig) -> Result<(WordBall, FieldConfig), CliError> {
    let group = config::build_group(need(&cfg.group, "group")?)?;
    let fc = need(&cfg.field, "field")?.clone();
    let ball = enumerate_ball(&group, fc.ball_radius);
    Ok((ball, fc))
}

fn make_field<'a>(
    ball: &'a WordBall,
    fc: &FieldConfig,
) -> Result<AutomorphicField<'a>, CliError> {
    let (h1, h2) = build_h(fc)?;
    AutomorphicField::new(fc.m, h1, h2, ball).map_err(cfg_err)
}

fn build_h(fc: &FieldConfig) -> Result<(RationalMap, RationalMap), CliError> {
    Ok((config::build_polynomial(&fc.h1, "field.h1")?, config::build_polynomial(&fc.h2, "field.h2")?))
}

pub fn validate(cfg: &RunConfig, samples: usize) -> Result<(), CliError> {
    let d = config::build_domain(need(&cfg.domain, "domain")?)?;
    let report = d.validate_side_pairing(samples, cfg.seed());
    print!("{report}");
    if report.is_valid() {
        println!("side pairing valid");
        Ok(())
    } else {
        Err(run_err("side pairing violations found"))
    }
}

pub fn field_eval(cfg: &RunConfig) -> Result<(), CliError> {
    let (ball, fc) = build_ball(cfg)?;
    let f = make_field(&ball, &fc)?;
    let points = match &fc.points {
        Some(ps) if !ps.is_empty() => ps.clone(),
        _ => {
            return Err(cfg_err(
                "no evaluation points; pass --point x,y,r or set field.points",
            ))
        }
    };
    println!(
        "field weight {} over a radius-{} ball of {} words",
        fc.m,
        ball.radius(),
        ball.len()
    );
    for p in points {
        let v = autoform::eval_field(&f, HPoint::new(p[0], p[1], p[2])).map_err(run_err)?;
        println!("F({}, {}, {}) = ({}, {}, {}, {})", p[0], p[1], p[2], v.w, v.x, v.y, v.z);
    }
    Ok(())
}

fn covariance_points(
    cfg: &RunConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<[f64; 3]>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Some(dc) = &cfg.domain {
        let d = config::build_domain(dc)?;
        let cells = d.cells().len();
        let mut out = Vec::with_capacity(count);
        let mut cell = 0usize;
        while out.len() < count {
            let got = d.sample_cell_interior(cell, 1, &mut rng);
            out.extend(got);
            cell = (cell + 1) % cells;
        }
        out.truncate(count);
        Ok(out)
    } else {
        use rand::Rng;
        Ok((0..count)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.8..2.0),
                ]
            })
            .collect())
    }
}

pub fn covariance(cfg: &RunConfig) -> Result<(), CliError> {
    let gc = need(&cfg.group, "group")?;
    let fc = need(&cfg.field, "field")?;
    let cov = cfg.covariance.clone().unwrap_or_default();
    let group = config::build_group(gc)?;
    let letter = group.letter_by_label(&cov.generator).ok_or_else(|| {
        cfg_err(format!("unknown generator label {:?}", cov.generator))
    })?;
    if cov.radii.is_empty() {
        return Err(cfg_err("covariance.radii is empty"));
    }
    let points = covariance_points(cfg, cov.points, cfg.seed())?;
    if points.len() < cov.points {
        return Err(run_err("could not sample the requested interior points"));
    }
    println!(
        "covariance residual of F against {} at {} interior points",
        cov.generator,
        points.len()
    );
    println!("{:>8}  {:>8}  {:>14}  {:>14}", "radius", "words", "max", "mean");
    for &radius in &cov.radii {
        let ball = enumerate_ball(&group, radius);
        let (h1, h2) = build_h(fc)?;
        let f = AutomorphicField::new(fc.m, h1, h2, &ball).map_err(cfg_err)?;
        let t = group.letter_matrix(letter);
        let mut max = 0.0f64;
        let mut sum = 0.0f64;
        for p in &points {
            let r = autoform::covariance_residual(&f, t, HPoint::new(p[0], p[1], p[2]))
                .map_err(run_err)?;
            max = max.max(r);
            sum += r;
        }
        println!(
            "{:>8}  {:>8}  {:>14.6e}  {:>14.6e}",
            radius,
            ball.len(),
            max,
            sum / points.len() as f64
        );
    }
    Ok(())
}

fn report_trajectory(traj: &Trajectory, word: Option<String>) {
    println!("samples: {}  crossings: {}", traj.sample_count(), traj.crossing_count());
    let (t, x) = traj.final_sample();
    println!("final: t = {t}, point = ({}, {}, {}, {})", x[0], x[1], x[2], x[3]);
    if let Some(w) = word {
        println!("final word: {w}");
    }
    println!("stop: {}", output::stop_text(&traj.stop));
    print!("{}", output::events_table(traj));
}

fn outline_rects(d: &FundamentalDomain, proj: (usize, usize)) -> Vec<[f64; 4]> {
    if proj.0 > 2 || proj.1 > 2 {
        return Vec::new();
    }
    d.cells()
        .iter()
        .map(|c| {
            let a = c.sample_box[proj.0];
            let b = c.sample_box[proj.1];
            [a[0], a[1], b[0], b[1]]
        })
        .collect()
}

fn finish_run(traj: &Trajectory) -> Result<(), CliError> {
    if output::stop_is_failure(&traj.stop) {
        Err(run_err(output::stop_text(&traj.stop)))
    } else {
        Ok(())
    }
}

pub fn integrate(cfg: &RunConfig) -> Result<(), CliError> {
    let (ball, fc) = build_ball(cfg)?;
    let f = make_field(&ball, &fc)?;
    let d = config::build_domain(need(&cfg.domain, "domain")?)?;
    let ic = cfg.integrate.clone().unwrap_or_default();
    let params = IntegrationParams {
        rtol: ic.rtol,
        atol: ic.atol,
        max_steps: ic.max_steps,
        face_tol: ic.face_tol,
        equilibrium_tol: ic.equilibrium_tol,
        initial_step: None,
    };
    let field = |x: &State| -> triflow::error::Result<State> {
        let v = autoform::eval_field(&f, HPoint::new(x[0], x[1], x[2]))?;
        Ok([v.w, v.x, v.y, 0.0])
    };
    println!(
        "integrating over [0, {}] from ({}, {}, {}), ball of {} words",
        ic.t_end,
        ic.start[0],
        ic.start[1],
        ic.start[2],
        ball.len()
    );
    let traj = integrate_wrapped(field, ic.start, ic.t_end, &d, &params).map_err(run_err)?;
    let word = traj.segments.last().map(|s| d.word_label(&s.word));
    report_trajectory(&traj, word);
    if let Some(path) = &ic.out {
        write_file(path, &output::csv_hpoint(&traj, &d))?;
    }
    if let Some(path) = &ic.svg {
        let proj = output::parse_projection(&ic.projection, &["x", "y", "r"])
            .ok_or_else(|| cfg_err(format!("bad projection {:?}", ic.projection)))?;
        let names = ["x", "y", "r"];
        let svg = output::render_portrait(
            &[&traj],
            proj,
            (names[proj.0], names[proj.1]),
            &outline_rects(&d, proj),
        )
        .map_err(run_err)?;
        write_file(path, &svg)?;
    }
    finish_run(&traj)
}

pub fn demo_pendulum(cfg: &RunConfig) -> Result<(), CliError> {
    let pc = cfg.pendulum.clone().unwrap_or_default();
    let d = match &cfg.domain {
        Some(dc) => config::build_domain(dc)?,
        None => triflow::flow::klein_bottle_domain(pc.x2_max),
    };
    let pp = PendulumParams { g_over_l: pc.g_over_l, k: pc.k };
    let params = IntegrationParams {
        rtol: pc.rtol,
        atol: pc.atol,
        max_steps: pc.max_steps,
        ..IntegrationParams::default()
    };
    println!(
        "pendulum on the solid Klein bottle: g/l = {}, k = {}, t in [0, {}]",
        pp.g_over_l, pp.k, pc.t_end
    );
    let traj = integrate_wrapped(|x| Ok(pendulum_field(x, &pp)), pc.start, pc.t_end, &d, &params)
        .map_err(run_err)?;
    report_trajectory(&traj, None);
    let e0 = pendulum_energy(&pc.start, &pp);
    let drift = traj
        .segments
        .iter()
        .flat_map(|s| s.samples.iter())
        .map(|(_, x)| (pendulum_energy(x, &pp) - e0).abs())
        .fold(0.0f64, f64::max);
    println!("energy drift sup |E - E0| = {drift:e}");
    if let Some(path) = &pc.out {
        write_file(path, &output::csv_state4(&traj))?;
    }
    if let Some(path) = &pc.svg {
        let names = ["x1", "x2", "x3", "x4"];
        let proj = output::parse_projection(&pc.projection, &names)
            .ok_or_else(|| cfg_err(format!("bad projection {:?}", pc.projection)))?;
        let svg = output::render_portrait(
            &[&traj],
            proj,
            (names[proj.0], names[proj.1]),
            &outline_rects(&d, proj),
        )
        .map_err(run_err)?;
        write_file(path, &svg)?;
    }
    finish_run(&traj)
}

pub fn ball_check(cfg: &RunConfig) -> Result<(), CliError> {
    let bc = cfg.ball.clone().unwrap_or_default();
    if bc.pairing.len() != 4 {
        return Err(cfg_err("ball.pairing must list exactly four rows"));
    }
    let mut table = [(0usize, [0usize; 3]); 4];
    for (i, &(f, c)) in bc.pairing.iter().enumerate() {
        table[i] = (f, c);
    }
    let pairing = FacePairing::new(table).map_err(cfg_err)?;
    let (t1, t2, _) = build_complex();
    let cycles = edge_cycles(&pairing).map_err(cfg_err)?;
    println!("edge classes: {}", cycles.len());
    for (i, class) in cycles.iter().enumerate() {
        let members: Vec<String> = class
            .members
            .iter()
            .map(|&(tet, e)| format!("T{}:{}{}", tet + 1, e[0], e[1]))
            .collect();
        println!("  class {i}: {} member(s): {}", class.members.len(), members.join(" "));
    }
    let report = dihedral_check(&t1, &t2, &cycles).map_err(run_err)?;
    println!("{report}");
    let mut worst = 0.0f64;
    for face in 0..4 {
        let iso = face_isometry(&t1, &t2, &pairing, face).map_err(run_err)?;
        let (g, corr) = pairing.table[face];
        let mut residual = 0.0f64;
        for k in 0..3 {
            let src = t2.vertices()[FACES[face][k]];
            let dst = t1.vertices()[FACES[g][corr[k]]];
            let img = iso.apply_boundary(src).map_err(run_err)?;
            let d2: f64 = (0..3).map(|a| (img[a] - dst[a]).powi(2)).sum();
            residual = residual.max(d2.sqrt());
        }
        println!(
            "pairing {} -> {}: vertex residual {:.3e}",
            face_label(1, face),
            face_label(0, g),
            residual
        );
        worst = worst.max(residual);
    }
    if report.all_proper() && worst < 1e-9 {
        println!("gluing checks passed");
        Ok(())
    } else {
        Err(run_err("gluing checks failed"))
    }
}

fn reversed(base: &PlanarField) -> Result<PlanarField, CliError> {
    let b = base.clone();
    PlanarField::new(
        move |u, v| {
            let (x, y) = b.eval(u, v);
            (-x, -y)
        },
        true,
    )
    .map_err(run_err)
}

fn chart_name(chart: SumChart) -> &'static str {
    match chart {
        SumChart::Torus1 => "torus-1",
        SumChart::Torus2 => "torus-2",
        SumChart::Neck => "neck",
    }
}

pub fn reeb_indices(cfg: &RunConfig) -> Result<(), CliError> {
    let rc = cfg.reeb.clone().unwrap_or_default();
    match rc.system.as_str() {
        "torus" => {
            let f = torus_field();
            let report = index_report(&f, rc.probe_radius).map_err(run_err)?;
            println!("torus leaf system, probe radius {}", rc.probe_radius);
            println!("{report}");
            Ok(())
        }
        "genus2" => {
            let sys1 = torus_field();
            let sys2 = reversed(&sys1)?;
            let glued = connected_sum_field(&sys1, &sys2, rc.rho).map_err(cfg_err)?;
            println!(
                "genus-2 plumbing: disk radius {} around ({}, {}), clearance {}",
                glued.disk_radius(),
                glued.removed_center().0,
                glued.removed_center().1,
                glued.clearance()
            );
            let remaining = glued.remaining_equilibria();
            for &(chart, e) in remaining {
                let side = if chart == SumChart::Torus1 { &sys1 } else { &sys2 };
                let mut dmin = torus_distance(e, glued.removed_center()) - glued.disk_radius();
                for &(oc, o) in remaining {
                    if oc == chart && o != e {
                        dmin = dmin.min(torus_distance(e, o));
                    }
                }
                let radius = (0.5 * dmin).min(0.2);
                let idx = equilibrium_index(side, e, radius).map_err(run_err)?;
                println!(
                    "  [{}] ({:+.6}, {:+.6})  {}  index {:+}",
                    chart_name(chart),
                    e.0,
                    e.1,
                    classify_equilibrium(side, e),
                    idx
                );
            }
            let total = glued.index_sum().map_err(run_err)?;
            println!("index total: {total:+}");
            let line = glued.singular_line();
            println!("singular line: {}", line.description);
            Ok(())
        }
        other => Err(cfg_err(format!(
            "unknown reeb system {other:?} (expected \"torus\" or \"genus2\")"
        ))),
    }
}

pub fn reeb_glue(cfg: &RunConfig) -> Result<(), CliError> {
    let rc = cfg.reeb.clone().unwrap_or_default();
    let gluing = HeegaardGluing::new(rc.genus, rc.psi).map_err(cfg_err)?;
    let p = rc.psi;
    let det = (p[0][0] * p[1][1] - p[0][1] * p[1][0]) as f64;
    let pf = [[p[0][0] as f64, p[0][1] as f64], [p[1][0] as f64, p[1][1] as f64]];
    let inv = [
        [p[1][1] as f64 / det, -(p[0][1] as f64) / det],
        [-(p[1][0] as f64) / det, p[0][0] as f64 / det],
    ];
    let x2 = torus_field();
    let base = x2.clone();
    let x1 = PlanarField::new(
        move |u, v| {
            let (a, b) = base.eval(pf[0][0] * u + pf[0][1] * v, pf[1][0] * u + pf[1][1] * v);
            (inv[0][0] * a + inv[0][1] * b, inv[1][0] * a + inv[1][1] * b)
        },
        true,
    )
    .map_err(run_err)?;
    let glued = heegaard_glue(&x1, &x2, &gluing).map_err(run_err)?;
    println!(
        "genus-{} gluing, psi = [[{}, {}], [{}, {}]] on each handle",
        gluing.genus, p[0][0], p[0][1], p[1][0], p[1][1]
    );
    println!("side 1 carries the psi-pullback of the side 2 torus system");
    println!("boundary residual sup |collar(1) - X1| = {:e}", glued.boundary_residual);
    if rc.grid == 0 {
        return Err(cfg_err("reeb.grid must be positive"));
    }
    for &t in &rc.collar_times {
        println!("collar t = {t}");
        println!("u,v,du,dv");
        for i in 0..rc.grid {
            for j in 0..rc.grid {
                let u = TAU * i as f64 / rc.grid as f64;
                let v = TAU * j as f64 / rc.grid as f64;
                let (du, dv) = glued.collar.eval(t, u, v).map_err(run_err)?;
                println!("{u},{v},{du},{dv}");
            }
        }
    }
    Ok(())
}
