//! One function per subcommand, mapping library results onto the
//! documented JSON/CSV outputs and exit codes.

use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::Path;

use qwres_core::expansion::{self, Expansion};
use qwres_core::gallery::{self, DoubleBarrier, PerturbationFamily, TripleBarrier};
use qwres_core::observables::{self, DecayFit, DecayReport, SurvivalSeries};
use qwres_core::solver::{self, Resonance, SolverOptions, SpectrumSummary};
use qwres_core::transfer;
use qwres_core::verify;
use qwres_core::walk::{self, CoinSequence, IntervalZ, WalkState};

use crate::io::{
    self, c_json, emit, read_state, read_walk, state_spec, to_json_text, walk_spec, write_atomic,
    CliResult, Failure,
};
use crate::{Cli, Cmd, GalleryCmd, Method, SiteValue, Suite};

/// Routes a parsed command line to its implementation.
pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Simulate {
            walk,
            state,
            n,
            emit_plotdata,
            out,
        } => simulate(&walk, &state, n, emit_plotdata.as_deref(), out.as_deref()),
        Cmd::Resonances {
            walk,
            method,
            tol,
            incoming,
            out,
        } => resonances(&walk, method, tol, incoming, out.as_deref()),
        Cmd::States {
            walk,
            lambda,
            chain,
            window,
            out,
        } => states(&walk, lambda, chain, window, out.as_deref()),
        Cmd::Expand {
            walk,
            state,
            j,
            predict,
            verify,
            tol,
            out,
        } => expand_cmd(&walk, &state, j, predict, verify, tol, out.as_deref()),
        Cmd::Observe {
            walk,
            state,
            n_max,
            j,
            survival,
            tau,
            weak_limit,
            mu,
            emit_plotdata,
            out,
        } => observe(
            &walk,
            &state,
            n_max,
            j,
            survival,
            tau,
            weak_limit,
            mu,
            emit_plotdata.as_deref(),
            out.as_deref(),
        ),
        Cmd::Gallery { model } => match model {
            GalleryCmd::DoubleBarrier { k, r, out } => gallery_double(k, r, out.as_deref()),
            GalleryCmd::TripleBarrier {
                r_sites,
                r_m1,
                r_0,
                r_1,
                out,
            } => gallery_triple(&r_sites, r_m1, r_0, r_1, out.as_deref()),
        },
        Cmd::Perturb {
            walk,
            theta_grid,
            eps,
            track,
            tol,
            out,
        } => perturb(&walk, theta_grid, &eps.0, &track, tol, out.as_deref()),
        Cmd::Verify { suite } => verify_cmd(suite),
        Cmd::Sigma { walk, out } => sigma_cmd(&walk, out.as_deref()),
    }
}

fn opts_with_tol(tol: f64) -> CliResult<SolverOptions> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Failure::Domain(format!(
            "tolerance must be positive: {tol}"
        )));
    }
    Ok(SolverOptions {
        residual_tol: tol,
        ..SolverOptions::default()
    })
}

/// A finite f64 as JSON, null for NaN/inf (serde_json cannot hold them).
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn site_norm(a: [Complex64; 2]) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

// ---------------------------------------------------------------- simulate

fn simulate(
    walk_path: &Path,
    state_path: &Path,
    n: usize,
    plotdata: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<()> {
    let coins = read_walk(walk_path)?;
    let psi = read_state(state_path)?;
    let mut snaps = Vec::with_capacity(n + 1);
    snaps.push(psi);
    for _ in 0..n {
        let next = walk::apply_u(&coins, snaps.last().unwrap());
        snaps.push(next);
    }
    if let Some(path) = plotdata {
        let grid = snaps.last().unwrap().window();
        let mut csv = String::from("x,n,amp\n");
        for (step, snap) in snaps.iter().enumerate() {
            for x in grid.sites() {
                let amp = site_norm(snap.amp(x));
                csv.push_str(&format!("{x},{step},{amp}\n"));
            }
        }
        write_atomic(path, &csv)?;
    }
    emit(out, &to_json_text(&state_spec(snaps.last().unwrap())))
}

// -------------------------------------------------------------- resonances

fn res_row(r: &Resonance) -> Value {
    json!({
        "re": r.lambda.re,
        "im": r.lambda.im,
        "mult": r.multiplicity,
        "residual": num(r.residual),
    })
}

fn summary_json(s: &SpectrumSummary) -> Value {
    json!({
        "Lambda0": s.lambda0,
        "m0": s.m0,
        "sum_mult": s.sum_mult,
        "budget": s.budget,
    })
}

fn summary_of_list(res: &[Resonance], budget: usize) -> Value {
    let lambda0 = res.iter().map(|r| r.lambda.norm()).fold(0.0, f64::max);
    let m0 = res
        .iter()
        .filter(|r| (r.lambda.norm() - lambda0).abs() <= 1e-9)
        .map(|r| r.multiplicity)
        .max()
        .unwrap_or(0);
    json!({
        "Lambda0": lambda0,
        "m0": m0,
        "sum_mult": res.iter().map(|r| r.multiplicity).sum::<usize>(),
        "budget": budget,
    })
}

fn budget_of(coins: &CoinSequence) -> usize {
    coins.chs().map_or(0, |chs| 2 * (chs.card() as usize - 1))
}

/// Repeats each location `multiplicity` times for multiset comparison.
fn with_multiplicity(res: &[Resonance]) -> Vec<Complex64> {
    res.iter()
        .flat_map(|r| std::iter::repeat_n(r.lambda, r.multiplicity))
        .collect()
}

/// Greedy nearest-match multiset distance; infinite on size mismatch.
fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut remaining = b.to_vec();
    let mut worst = 0.0f64;
    for z in a {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty by size check");
        worst = worst.max(dist);
        remaining.swap_remove(idx);
    }
    worst
}

/// The cut-off-evolution spectrum on the perturbation hull, as resonance
/// rows (nonzero eigenvalues only, with σ residuals).
fn cutoff_resonances(coins: &CoinSequence, opts: &SolverOptions) -> CliResult<Vec<Resonance>> {
    let Some(chs) = coins.chs() else {
        return Ok(vec![]);
    };
    let e = solver::cutoff_matrix(coins, chs)?;
    let eigen = solver::eigen_oracle(&e)?;
    let sig = transfer::sigma(coins)?;
    let scale = sig.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut rows: Vec<Resonance> = eigen
        .into_iter()
        .filter(|(z, _)| z.norm() >= opts.zero_radius)
        .map(|(z, m)| Resonance {
            lambda: z,
            multiplicity: m,
            kind: solver::Kind::Outgoing,
            residual: qwres_core::roots::eval_poly(&sig.coeffs, z).norm() / scale.max(1e-300),
        })
        .collect();
    rows.sort_by(|a, b| {
        let q = |v: f64| (v * 1e12).round();
        (q(a.lambda.re), q(a.lambda.im))
            .partial_cmp(&(q(b.lambda.re), q(b.lambda.im)))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows)
}

fn resonances(
    walk_path: &Path,
    method: Method,
    tol: f64,
    incoming: bool,
    out: Option<&Path>,
) -> CliResult<()> {
    let coins = read_walk(walk_path)?;
    let opts = opts_with_tol(tol)?;
    let doc;
    let mut verification: Option<String> = None;
    if incoming {
        let list = solver::incoming_resonances(&coins, &opts)?;
        doc = json!({
            "resonances": list.iter().map(res_row).collect::<Vec<_>>(),
            "summary": summary_of_list(&list, budget_of(&coins)),
        });
    } else {
        match method {
            Method::Sigma => {
                let (res, summary) = solver::find_resonances(&coins, &opts)?;
                doc = json!({
                    "resonances": res.iter().map(res_row).collect::<Vec<_>>(),
                    "summary": summary_json(&summary),
                });
            }
            Method::Cutoff => {
                let rows = cutoff_resonances(&coins, &opts)?;
                doc = json!({
                    "resonances": rows.iter().map(res_row).collect::<Vec<_>>(),
                    "summary": summary_of_list(&rows, budget_of(&coins)),
                });
            }
            Method::Both => {
                let (res, summary) = solver::find_resonances(&coins, &opts)?;
                let rows = cutoff_resonances(&coins, &opts)?;
                let dist = multiset_distance(&with_multiplicity(&res), &with_multiplicity(&rows));
                doc = json!({
                    "resonances": res.iter().map(res_row).collect::<Vec<_>>(),
                    "summary": summary_json(&summary),
                    "cutoff": rows.iter().map(res_row).collect::<Vec<_>>(),
                    "agreement": num(dist),
                });
                if dist.is_nan() || dist > 1e-6 {
                    verification = Some(format!(
                        "sigma-root and cutoff-spectrum resonance sets disagree \
                         (multiset distance {dist:.3e} exceeds 1e-6)"
                    ));
                }
            }
        }
    }
    emit(out, &to_json_text(&doc))?;
    match verification {
        Some(msg) => Err(Failure::Verification(msg)),
        None => Ok(()),
    }
}

// ------------------------------------------------------------------ states

fn states(
    walk_path: &Path,
    lambda: Complex64,
    chain: usize,
    window: Option<IntervalZ>,
    out: Option<&Path>,
) -> CliResult<()> {
    let coins = read_walk(walk_path)?;
    let opts = SolverOptions::default();
    if chain == 0 {
        return Err(Failure::Domain("chain length must be at least 1".into()));
    }
    let jc = solver::jordan_chain(&coins, lambda, chain, window, &opts)?;
    let text = if chain == 1 {
        to_json_text(&state_spec(&jc.states[0].state))
    } else {
        let specs: Vec<_> = jc.states.iter().map(|s| state_spec(&s.state)).collect();
        to_json_text(&specs)
    };
    emit(out, &text)
}

// ------------------------------------------------------------------ expand

fn binom(n: i64, l: usize) -> f64 {
    let mut out = 1.0f64;
    for i in 0..l as i64 {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// The time-evolution sum with the chain member fixed to `φ_{λ,k−1}`
/// inside the l-sum (the alternative reading; for simple chains it
/// coincides with the implemented `φ_{λ,k−l}` form).
fn predict_fixed_member(
    coins: &CoinSequence,
    exp: &Expansion,
    n: i64,
    opts: &SolverOptions,
) -> CliResult<(WalkState, IntervalZ)> {
    let two_j = 2 * exp.j.card();
    if n <= two_j {
        return Err(Failure::Domain(format!(
            "prediction requires n > 2|J| = {two_j}, got n = {n}"
        )));
    }
    let region = exp.j.neighborhood(n - 1 - two_j);
    let window = match coins.chs() {
        Some(chs) => region.hull(&chs.neighborhood(1)),
        None => region,
    };
    let mut out = WalkState::zero(region);
    for (chain, cs) in exp.chains.iter().zip(&exp.coeffs) {
        let m = chain.len();
        let wide = solver::jordan_chain(coins, chain.lambda, m, Some(window), opts)?;
        let ln = chain.lambda.powi(n as i32);
        for (ki, c) in cs.iter().enumerate() {
            let k = ki + 1;
            for l in 0..k {
                let w = ln * c * binom(n, l) * chain.lambda.powi(-(l as i32));
                let member = &wide.states[if k >= 2 { k - 2 } else { k - l - 1 }].state;
                for x in region.sites() {
                    let a = member.amp(x);
                    let cur = out.amp(x);
                    out.set(x, [cur[0] + w * a[0], cur[1] + w * a[1]]);
                }
            }
        }
    }
    Ok((out, region))
}

fn rel_error(predicted: &WalkState, direct: &WalkState, region: &IntervalZ) -> f64 {
    let mut diff_sq = 0.0;
    let mut norm_sq = 0.0;
    for x in region.sites() {
        let p = predicted.amp(x);
        let d = direct.amp(x);
        diff_sq += (p[0] - d[0]).norm_sqr() + (p[1] - d[1]).norm_sqr();
        norm_sq += d[0].norm_sqr() + d[1].norm_sqr();
    }
    (diff_sq / norm_sq.max(1e-300)).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn expand_cmd(
    walk_path: &Path,
    state_path: &Path,
    j: IntervalZ,
    predict: Option<i64>,
    verify: bool,
    tol: f64,
    out: Option<&Path>,
) -> CliResult<()> {
    let coins = read_walk(walk_path)?;
    let psi = read_state(state_path)?;
    let opts = opts_with_tol(tol)?;
    let exp = expansion::expand(&coins, &psi, j, &opts)?;

    let terms: Vec<Value> = exp
        .chains
        .iter()
        .zip(&exp.coeffs)
        .map(|(chain, cs)| {
            json!({
                "lambda": c_json(chain.lambda),
                "multiplicity": chain.len(),
                "coefficients": cs.iter().map(|c| c_json(*c)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut doc = json!({
        "J": [j.lo(), j.hi()],
        "input_norm": exp.input_norm,
        "residual": num(exp.residual),
        "condition": num(exp.condition),
        "zero_dim": exp.zero.dim(),
        "zero_norm": exp.zero_part().norm(),
        "lambda_count": exp.lambda_count(1e-9),
        "terms": terms,
    });
    let map = doc.as_object_mut().expect("object literal");

    if let Some(n) = predict {
        let (state, region) = expansion::predict_evolution(&coins, &exp, n, &opts)?;
        map.insert(
            "prediction".into(),
            json!({
                "n": n,
                "window": [region.lo(), region.hi()],
                "state": state_spec(&state),
            }),
        );
    }

    let mut verification: Option<String> = None;
    if verify {
        let n0 = 2 * j.card();
        let checks: Vec<i64> = vec![n0 + 1, n0 + 4, n0 + 8];
        let has_blocks = exp.chains.iter().any(|c| c.len() >= 2);
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        let mut worst_alt = 0.0f64;
        for &n in &checks {
            let (pred, region) = expansion::predict_evolution(&coins, &exp, n, &opts)?;
            let direct = walk::evolve(&coins, &psi, n as usize);
            let err = rel_error(&pred, &direct, &region);
            worst = worst.max(err);
            let alt_err = if has_blocks {
                let (alt, _) = predict_fixed_member(&coins, &exp, n, &opts)?;
                let e = rel_error(&alt, &direct, &region);
                worst_alt = worst_alt.max(e);
                Some(e)
            } else {
                None
            };
            rows.push(json!({
                "n": n,
                "relative_error": num(err),
                "alternative_error": alt_err.map_or(Value::Null, num),
            }));
        }
        let passed = worst <= 1e-6;
        map.insert(
            "verification".into(),
            json!({
                "checks": rows,
                "max_relative_error": num(worst),
                "form": "descending chain member per l",
                "alternative": if has_blocks {
                    json!({
                        "form": "fixed chain member",
                        "max_relative_error": num(worst_alt),
                    })
                } else {
                    Value::Null
                },
                "passed": passed,
            }),
        );
        if !passed {
            verification = Some(format!(
                "time-evolution prediction deviates from direct evolution \
                 (max relative error {worst:.3e} exceeds 1e-6)"
            ));
        }
    }

    emit(out, &to_json_text(&doc))?;
    match verification {
        Some(msg) => Err(Failure::Verification(msg)),
        None => Ok(()),
    }
}

// ----------------------------------------------------------------- observe

fn fit_json(f: &DecayFit) -> Value {
    json!({
        "slope": num(f.slope),
        "power": num(f.power),
        "intercept": num(f.intercept),
        "residual": num(f.residual),
    })
}

fn decay_json(rep: &DecayReport) -> Value {
    json!({
        "lambda0": rep.lambda0,
        "m0": rep.m0,
        "lambda_psi": rep.lambda_psi,
        "p_lambda_psi": rep.p_lambda_psi,
        "m_envelope": num(rep.m_envelope),
        "m_prime_envelope": num(rep.m_prime_envelope),
        "fit": rep.fit.as_ref().map_or(Value::Null, fit_json),
    })
}

#[allow(clippy::too_many_arguments)]
fn observe(
    walk_path: &Path,
    state_path: &Path,
    n_max: usize,
    j: IntervalZ,
    survival: bool,
    tau: bool,
    weak_limit: bool,
    mu: Option<i64>,
    plotdata: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<()> {
    let coins = read_walk(walk_path)?;
    let psi = read_state(state_path)?;
    let norm_sq = psi.norm_sq();
    if norm_sq <= 0.0 {
        return Err(Failure::Domain("the zero state has no observables".into()));
    }
    let opts = SolverOptions::default();
    let all = !survival && !tau && !weak_limit && mu.is_none();

    // One pass of direct evolution feeds the CSV and the final-time
    // weak-limit row.
    let mut rows: Vec<(usize, f64, f64, f64, f64)> = Vec::with_capacity(n_max + 1);
    let mut cur = psi.clone();
    for n in 0..=n_max {
        if n > 0 {
            cur = walk::apply_u(&coins, &cur);
        }
        let surv = cur.restrict(&j).norm_sq() / norm_sq;
        let (cp, cm, flat) = observables::sharp_cut_masses(&coins, &cur);
        rows.push((n, surv, cp / norm_sq, cm / norm_sq, flat / norm_sq));
    }
    if let Some(path) = plotdata {
        let mut csv = String::from("n,survival,c_plus,c_minus,flat_norm\n");
        for (n, surv, cp, cm, flat) in &rows {
            csv.push_str(&format!("{n},{surv},{cp},{cm},{flat}\n"));
        }
        write_atomic(path, &csv)?;
    }

    let mut doc = json!({
        "J": [j.lo(), j.hi()],
        "n_max": n_max,
        "survival_final": rows.last().map(|r| r.1),
    });
    let map = doc.as_object_mut().expect("object literal");

    if survival || all {
        let value = match observables::decay_report(&coins, &psi, j, n_max, &opts) {
            Ok(rep) => decay_json(&rep),
            Err(e) => {
                // The full report needs the resonance expansion; fall back
                // to the fit against the global spectrum.
                let series = SurvivalSeries {
                    j,
                    probs: rows.iter().map(|r| r.1).collect(),
                };
                let (_, summary) = solver::find_resonances(&coins, &opts)?;
                json!({
                    "lambda0": summary.lambda0,
                    "m0": summary.m0,
                    "fit": observables::decay_fit(&series).as_ref().map_or(Value::Null, fit_json),
                    "note": format!("expansion unavailable: {e}"),
                })
            }
        };
        map.insert("decay".into(), value);
    }
    if tau || all {
        let value = match observables::mean_survival_time(&coins, &psi, j, n_max, &opts) {
            Ok(rep) => json!({
                "tau": num(rep.tau),
                "tail_bound": num(rep.tail_bound),
                "n_used": rep.n_used,
                "bound_lambda0": num(rep.bound_lambda0),
                "bound_lambda_psi": num(rep.bound_lambda_psi),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        map.insert("tau".into(), value);
    }
    if weak_limit || all {
        let last = rows.last().expect("at least one row");
        map.insert(
            "weak_limit".into(),
            json!({
                "n": n_max,
                "c_plus_hat": last.2,
                "c_minus_hat": last.3,
                "flat_norm_sq": last.4,
            }),
        );
    }
    if let Some(n) = mu {
        let dist = observables::distribution(&coins, &psi, n)?;
        map.insert(
            "mu".into(),
            json!({
                "n": n,
                "total": dist.total,
                "sites": dist.probs.iter().map(|&(x, p)| json!([x, p])).collect::<Vec<_>>(),
            }),
        );
    }

    emit(out, &to_json_text(&doc))
}

// ----------------------------------------------------------------- gallery

fn gallery_double(k: i64, r: f64, out: Option<&Path>) -> CliResult<()> {
    let db = DoubleBarrier::new(k, r)?;
    let spec = walk_spec(&db.coins);
    let doc = json!({
        "k": k,
        "r": r,
        "walk": spec,
        "alpha": c_json(db.alpha()),
        "lambda0": r.powf(1.0 / k as f64),
        "period": db.period(),
        "resonances": db.exact_resonances().iter().map(|z| c_json(*z)).collect::<Vec<_>>(),
    });
    if let Some(path) = out {
        write_atomic(path, &to_json_text(&walk_spec(&db.coins)))?;
    }
    print!("{}", to_json_text(&doc));
    Ok(())
}

fn gallery_triple(
    r_sites: &[SiteValue],
    r_m1: Option<f64>,
    r_0: Option<f64>,
    r_1: Option<f64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let mut params: [Option<f64>; 3] = [r_m1, r_0, r_1];
    for sv in r_sites {
        let idx = match sv.site {
            -1 => 0,
            0 => 1,
            1 => 2,
            other => {
                return Err(Failure::Domain(format!(
                    "triple barrier sites are -1, 0, 1; got {other}"
                )))
            }
        };
        if params[idx].is_some() {
            return Err(Failure::Domain(format!(
                "rotation parameter for site {} given twice",
                sv.site
            )));
        }
        params[idx] = Some(sv.value);
    }
    let [Some(a), Some(b), Some(c)] = params else {
        return Err(Failure::Domain(
            "triple barrier needs rotation parameters at sites -1, 0, 1 \
             (use --r SITE=VALUE or --r-1/--r0/--r1)"
                .into(),
        ));
    };
    let tb = TripleBarrier::new(a, b, c)?;
    let (res, _) = solver::find_resonances(&tb.coins, &SolverOptions::default())?;
    let doc = json!({
        "r": { "-1": a, "0": b, "1": c },
        "walk": walk_spec(&tb.coins),
        "quartic": tb.quartic().iter().map(|z| c_json(*z)).collect::<Vec<_>>(),
        "multiplicity_two": tb.multiplicity_two(),
        "double_roots": if tb.multiplicity_two() {
            json!(tb.double_roots().iter().map(|z| c_json(*z)).collect::<Vec<_>>())
        } else {
            Value::Null
        },
        "resonances": res.iter().map(res_row).collect::<Vec<_>>(),
    });
    if let Some(path) = out {
        write_atomic(path, &to_json_text(&walk_spec(&tb.coins)))?;
    }
    print!("{}", to_json_text(&doc));
    Ok(())
}

// ----------------------------------------------------------------- perturb

fn slope_fit(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn perturb(
    walk_path: &Path,
    theta_grid: usize,
    eps: &[f64],
    track: &str,
    tol: f64,
    out: Option<&Path>,
) -> CliResult<()> {
    let coins = read_walk(walk_path)?;
    let opts = opts_with_tol(tol)?;
    if theta_grid == 0 {
        return Err(Failure::Domain("theta grid must be nonempty".into()));
    }
    for &e in eps {
        if e.is_nan() || e <= 0.0 {
            return Err(Failure::Domain(format!("epsilon must be positive: {e}")));
        }
    }
    let (res, _) = solver::find_resonances(&coins, &opts)?;
    if res.is_empty() {
        return Err(Failure::Domain(
            "the walk has no resonances to track".into(),
        ));
    }
    let tracked = if track == "lambda0" {
        res.iter()
            .max_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()))
            .expect("nonempty")
    } else {
        let target = io::parse_complex(track)
            .map_err(|e| Failure::Domain(format!("--track wants `lambda0` or RE,IM: {e}")))?;
        res.iter()
            .min_by(|a, b| {
                (a.lambda - target)
                    .norm()
                    .total_cmp(&(b.lambda - target).norm())
            })
            .expect("nonempty")
    };
    let lambda0 = tracked.lambda;
    let m = tracked.multiplicity;

    let family = PerturbationFamily::new(&coins)?;
    let thetas: Vec<f64> = (0..theta_grid)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / theta_grid as f64)
        .collect();
    let sweep = gallery::splitting_sweep(&family, &thetas, eps, lambda0, m, &opts);

    // Jobs are laid out θ-major, ε-minor, matching the sweep's order.
    let mut points = Vec::with_capacity(sweep.len());
    let mut per_theta = Vec::with_capacity(theta_grid);
    for (ti, &theta) in thetas.iter().enumerate() {
        let mut loglog = Vec::new();
        for (ei, _) in eps.iter().enumerate() {
            match &sweep[ti * eps.len() + ei] {
                Ok(p) => {
                    if p.max_displacement > 0.0 {
                        loglog.push((p.eps.ln(), p.max_displacement.ln()));
                    }
                    points.push(json!({
                        "theta": p.theta,
                        "eps": p.eps,
                        "predicted": num(p.predicted),
                        "max_displacement": num(p.max_displacement),
                        "n_tracked": p.roots.len(),
                        "all_simple": p.all_simple,
                        "roots": p.roots.iter().map(|z| c_json(*z)).collect::<Vec<_>>(),
                    }));
                }
                Err(e) => points.push(json!({
                    "theta": theta,
                    "eps": eps[ei],
                    "error": e.to_string(),
                })),
            }
        }
        let gamma_abs = family.gamma(theta, lambda0).map(|g| g.norm()).ok();
        per_theta.push(json!({
            "theta": theta,
            "gamma_abs": gamma_abs.map_or(Value::Null, num),
            "slope": slope_fit(&loglog).map_or(Value::Null, num),
        }));
    }

    let doc = json!({
        "lambda0": c_json(lambda0),
        "multiplicity": m,
        "expected_slope": 1.0 / m as f64,
        "theta_grid": theta_grid,
        "eps": eps,
        "points": points,
        "per_theta": per_theta,
    });
    emit(out, &to_json_text(&doc))
}

// ------------------------------------------------------------------ verify

fn verify_cmd(suite: Suite) -> CliResult<()> {
    let checks = match suite {
        Suite::Paper => verify::run_all(),
        Suite::Quick => verify::quick(),
    };
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Verification(format!(
            "{failed} of {} checks failed",
            checks.len()
        )));
    }
    Ok(())
}

// ------------------------------------------------------------------- sigma

fn sigma_cmd(walk_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let coins = read_walk(walk_path)?;
    let tp = transfer::transfer_poly(&coins)?;
    let sig = transfer::sigma_of_product(&tp)?;
    let doc = json!({
        "k": sig.k,
        "degree": sig.degree(),
        "coefficients": sig.coeffs.iter().map(|c| c_json(*c)).collect::<Vec<_>>(),
        "delta": c_json(tp.delta),
    });
    emit(out, &to_json_text(&doc))
}
