//! Steps shared by the subcommands and the pipeline. Each step computes,
//! writes its files, appends to the summary and records certificate failures.

use std::path::Path;

use fractal_ap::ap::{APWitness, find_persistent_triples, witness_summary};
use fractal_ap::brownian::{
    BaseMeasure, BrownianEnsemble, lambda_ensemble, lambda_expectation_closed, moment_estimate, paley_zygmund_bound,
};
use fractal_ap::cantor::{ConstructionLog, Mode, construct, fmt12};
use fractal_ap::measure::{CantorParams, KMode, LevelApproximation};
use fractal_ap::salem::{KappaRule, SalemParams, pick_a, salem_fourier, window_average};
use fractal_ap::spectral::{
    DecayHypothesis, DecayReport, FourierTable, Method, Provenance, WindowGrid, ball_condition, choose_fejer_n,
    decay_condition, decay_rows, error_terms, fejer_split, fourier_table, lambda_fourier, mu1_sup_norm,
    restriction_exponents, restriction_sweep,
};
use serde::{Deserialize, Serialize};

use crate::CliError;
use crate::report::{Artifacts, Csv, Summary, lambda_line};
use crate::row;

/// State threaded through the steps of one invocation.
pub struct Run {
    pub art: Artifacts,
    pub summary: Summary,
    pub failures: Vec<String>,
}

impl Run {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        Ok(Self {
            art: Artifacts::create(out).map_err(|e| CliError::io(out, e))?,
            summary: Summary::default(),
            failures: Vec::new(),
        })
    }

    fn fail(&mut self, what: String) {
        self.summary.line(format!("CERTIFICATE FAILED: {what}"));
        self.failures.push(what);
    }

    /// Writes `report.txt` and the manifest; returns the failures.
    pub fn finish(mut self, command: &str, seed: u64) -> Result<Vec<String>, CliError> {
        let text = self.summary.render();
        let root = self.art.root().to_path_buf();
        self.art
            .write("report.txt", text.as_bytes())
            .map_err(|e| CliError::io(&root, e))?;
        print!("{text}");
        let manifest = self
            .art
            .finish(command, seed, self.failures)
            .map_err(|e| CliError::io(&root, e))?;
        Ok(manifest.failures)
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<(), CliError> {
        self.art.write_json(name, v).map_err(|e| CliError::io(name, e))
    }

    fn csv(&mut self, name: &str, csv: Csv) -> Result<(), CliError> {
        self.art.write_csv(name, csv).map_err(|e| CliError::io(name, e))
    }
}

/// A construction as stored in `chain.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub params: CantorParams,
    pub depth: u32,
    pub seed: u64,
    pub mode: Mode,
    pub alpha: f64,
    pub levels: Vec<LevelApproximation>,
}

impl ChainFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let chain: ChainFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: not a chain file: {e}", path.display())))?;
        if chain.levels.len() != chain.depth as usize + 1 {
            return Err(CliError::Input(format!(
                "{}: depth {} but {} levels",
                path.display(),
                chain.depth,
                chain.levels.len()
            )));
        }
        Ok(chain)
    }

    /// Level `j`, or the deepest one.
    pub fn level(&self, j: Option<u32>) -> Result<&LevelApproximation, CliError> {
        let j = j.unwrap_or(self.depth);
        self.levels
            .get(j as usize)
            .ok_or_else(|| CliError::Input(format!("level {j} is beyond the chain depth {}", self.depth)))
    }
}

fn k_mode_name(k: KMode) -> &'static str {
    match k {
        KMode::Unit => "unit",
        KMode::Pow2 => "pow2",
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Strict => "strict",
        Mode::Report => "report",
    }
}

pub fn step_construct(run: &mut Run, params: CantorParams, depth: u32, seed: u64, mode: Mode) -> Result<ChainFile, CliError> {
    let (levels, log): (Vec<LevelApproximation>, ConstructionLog) = construct(&params, depth, seed, mode)?;
    let chain = ChainFile {
        params,
        depth,
        seed,
        mode,
        alpha: params.alpha(),
        levels,
    };
    run.json("chain.json", &chain)?;
    run.art
        .write("construction_log.csv", log.to_csv().as_bytes())
        .map_err(|e| CliError::io("construction_log.csv", e))?;
    let s = &mut run.summary;
    s.heading("construction");
    s.line(format!(
        "random Cantor set: N0 = {}, t0 = {}, n = {}, K = {}, depth {}, seed {}, mode {}",
        params.n0,
        params.t0,
        params.n,
        k_mode_name(params.k_mode),
        depth,
        seed,
        mode_name(mode)
    ));
    s.line(format!("alpha = ln t / ln N = {}", fmt12(chain.alpha)));
    for a in &chain.levels {
        s.line(format!(
            "level {}: {} cells, modulus {}",
            a.level(),
            a.cell_count(),
            a.modulus()
        ));
    }
    for l in &log.levels {
        s.line(format!(
            "level {}: retries {}, discrepancy increment {} (target {})",
            l.level,
            l.retries(),
            fmt12(l.achieved),
            fmt12(l.target_bound)
        ));
    }
    Ok(chain)
}

pub fn step_fourier(run: &mut Run, level: &LevelApproximation, k_max: u64) -> Result<FourierTable<f64>, CliError> {
    let table = fourier_table::<f64>(level, k_max)?;
    let mut csv = Csv::new(&["k", "re", "im"]);
    for (k, z) in table.iter() {
        csv.row(row![k, z.re, z.im]);
    }
    run.csv("fourier.csv", csv)?;
    let s = &mut run.summary;
    s.heading("fourier");
    s.line(format!(
        "level {}: coefficients for |k| ≤ {} ({:?})",
        level.level(),
        k_max,
        table.method()
    ));
    s.line(format!("|μ̂(1)| = {}", fmt12(table.get(1).norm())));
    Ok(table)
}

#[derive(Serialize)]
struct CheckAb {
    level: u32,
    alpha: f64,
    beta: f64,
    b: f64,
    empirical_c1: f64,
    witness_window_x: f64,
    witness_window_eps: f64,
    c1: Option<f64>,
    ball_pass: Option<bool>,
    empirical_c2: f64,
    argmax_k: i64,
    c2: Option<f64>,
    decay_pass: Option<bool>,
}

pub struct AbInput<'a> {
    pub chain: &'a ChainFile,
    pub level: &'a LevelApproximation,
    pub table: &'a FourierTable<f64>,
    pub beta: f64,
    pub b: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

pub fn step_check_ab(run: &mut Run, inp: AbInput<'_>) -> Result<DecayReport<f64>, CliError> {
    let params = inp.chain.params;
    let alpha = params.alpha();
    let n = params.big_n()?;
    let grid = WindowGrid::adic(inp.level.modulus(), &[2, n]);
    let ball = ball_condition(inp.level, params.exponent(), &grid, inp.c1)?;
    let mut csv = Csv::new(&["window_x", "window_eps", "ratio"]);
    for r in &ball.rows {
        csv.row(row![r.window_x(), r.window_eps(), r.ratio]);
    }
    run.csv("ball.csv", csv)?;

    let decay = decay_condition(inp.table, inp.beta, inp.b, alpha, inp.c2)?;
    let mut csv = Csv::new(&["k", "abs_coeff", "decay_ratio"]);
    for (k, abs, ratio) in decay_rows(inp.table, inp.beta, inp.b, alpha) {
        csv.row(row![k, abs, ratio]);
    }
    run.csv("decay.csv", csv)?;
    run.json(
        "check_ab.json",
        &CheckAb {
            level: inp.level.level(),
            alpha,
            beta: inp.beta,
            b: inp.b,
            empirical_c1: ball.empirical_c1,
            witness_window_x: ball.witness.window_x(),
            witness_window_eps: ball.witness.window_eps(),
            c1: inp.c1,
            ball_pass: ball.pass,
            empirical_c2: decay.empirical_c2,
            argmax_k: decay.argmax_k,
            c2: inp.c2,
            decay_pass: decay.pass,
        },
    )?;
    run.summary.heading("conditions (A) and (B)");
    run.summary.line(format!(
        "ball condition: empirical C1 = {} at window [{}, {} + {}]",
        fmt12(ball.empirical_c1),
        fmt12(ball.witness.window_x()),
        fmt12(ball.witness.window_x()),
        fmt12(ball.witness.window_eps())
    ));
    run.summary.line(format!(
        "decay condition: empirical C2 = {} at k = {} (beta = {}, B = {}, |k| ≤ {})",
        fmt12(decay.empirical_c2),
        decay.argmax_k,
        fmt12(inp.beta),
        fmt12(inp.b),
        inp.table.k_max()
    ));
    if let (Some(c1), Some(pass)) = (inp.c1, ball.pass) {
        if pass {
            run.summary.line(format!("ball condition holds with C1 = {}", fmt12(c1)));
        } else {
            run.fail(format!("ball condition: empirical C1 {} > {}", fmt12(ball.empirical_c1), fmt12(c1)));
        }
    }
    if let (Some(c2), Some(pass)) = (inp.c2, decay.pass) {
        if pass {
            run.summary.line(format!("decay condition holds with C2 = {}", fmt12(c2)));
        } else {
            run.fail(format!("decay condition: empirical C2 {} > {}", fmt12(decay.empirical_c2), fmt12(c2)));
        }
    }
    Ok(decay)
}

/// `C₂` to use: the configured value, else the table's empirical one.
pub fn hypothesis(table: &FourierTable<f64>, alpha: f64, beta: f64, b: f64, c2: Option<f64>) -> Result<DecayHypothesis, CliError> {
    Ok(match c2 {
        Some(c2) => DecayHypothesis {
            beta,
            c2,
            b,
            alpha,
            provenance: Provenance::Configured,
        },
        None => DecayHypothesis {
            beta,
            c2: decay_condition(table, beta, b, alpha, None)?.empirical_c2,
            b,
            alpha,
            provenance: Provenance::Empirical,
        },
    })
}

#[derive(Serialize)]
struct LambdaFile<'a> {
    #[serde(flatten)]
    estimate: &'a fractal_ap::spectral::LambdaEstimate,
    hypothesis: &'a DecayHypothesis,
}

pub fn step_lambda(run: &mut Run, table: &FourierTable<f64>, cutoff: u64, hyp: &DecayHypothesis) -> Result<(), CliError> {
    let est = lambda_fourier(table, table, table, cutoff, hyp)?;
    run.json(
        "lambda.json",
        &LambdaFile {
            estimate: &est,
            hypothesis: hyp,
        },
    )?;
    run.summary.heading("trilinear form");
    run.summary.line(format!(
        "cutoff {}, C2 = {} ({:?}), beta = {}",
        cutoff,
        fmt12(hyp.c2),
        hyp.provenance,
        fmt12(hyp.beta)
    ));
    if est.certified {
        run.summary.line(lambda_line(est.value, est.tail, true));
    } else {
        run.fail(lambda_line(est.value, est.tail, false));
    }
    Ok(())
}

#[derive(Serialize)]
struct FejerFile {
    n: u64,
    formula_n: Option<u64>,
    grid: usize,
    mu1_min: f64,
    mu1_max: f64,
    error_terms: fractal_ap::spectral::ErrorTerms,
}

/// Fejér split of `table`; `n = None` takes `N = ⌊e^{1/(1-α)}/C₂⌋` capped
/// at `k_max/4` so that `μ̂₁` and the error sums stay inside the table.
pub fn step_fejer(run: &mut Run, table: &FourierTable<f64>, n: Option<u64>, hyp: &DecayHypothesis) -> Result<(), CliError> {
    let formula = choose_fejer_n(hyp.alpha, hyp.c2).ok();
    let cap = (table.k_max() / 4).max(1);
    let n = n.unwrap_or_else(|| formula.unwrap_or(cap).min(cap));
    let grid = (4 * n as usize).next_power_of_two().max(64);
    let ext = mu1_sup_norm(table, n, grid)?;
    let terms = error_terms(table, n, hyp.beta, hyp.c2, hyp.b, hyp.alpha)?;
    let (mu1, mu2) = fejer_split(table, n);
    let mut csv = Csv::new(&["k", "mu1_re", "mu1_im", "mu2_re", "mu2_im"]);
    for k in 0..=(4 * n).min(table.k_max()) as i64 {
        let (a, b) = (mu1.get(k), mu2.get(k));
        csv.row(row![k, a.re, a.im, b.re, b.im]);
    }
    run.csv("fejer.csv", csv)?;
    run.json(
        "fejer.json",
        &FejerFile {
            n,
            formula_n: formula,
            grid,
            mu1_min: ext.min,
            mu1_max: ext.max,
            error_terms: terms,
        },
    )?;
    run.summary.heading("fejer decomposition");
    run.summary.line(format!(
        "N = {n} (formula value {}), μ1 on {grid} points: min {}, max {}",
        formula.map_or("n/a".to_string(), |f| f.to_string()),
        fmt12(ext.min),
        fmt12(ext.max)
    ));
    run.summary.line(format!(
        "error terms: observed112 {} (bound {}), observed222 {} (bound {})",
        fmt12(terms.observed112),
        fmt12(terms.bound112),
        fmt12(terms.observed222),
        fmt12(terms.bound222)
    ));
    if ext.min < -1e-9 {
        run.fail(format!("μ1 is negative: min {}", fmt12(ext.min)));
    }
    Ok(())
}

#[derive(Serialize)]
struct RestrictionFile<'a> {
    p: f64,
    theta: f64,
    report: &'a fractal_ap::spectral::RestrictionReport,
    max_growth: f64,
}

pub fn step_restriction(
    run: &mut Run,
    level: &LevelApproximation,
    alpha: f64,
    beta: f64,
    trials: usize,
    max_degree: u64,
    seed: u64,
) -> Result<(), CliError> {
    let (p, theta) = restriction_exponents(alpha, beta)?;
    let report = restriction_sweep(level, trials, max_degree, p, seed)?;
    let growth = report.growth();
    let mut csv = Csv::new(&["degree", "max_ratio", "dirichlet_ratio", "random_max_ratio", "growth"]);
    for b in &report.buckets {
        let g = growth.iter().find(|(d, _)| 2 * d == b.degree).map_or(f64::NAN, |g| g.1);
        csv.row(row![b.degree, b.max_ratio, b.dirichlet_ratio, b.random_max_ratio, g]);
    }
    run.csv("restriction.csv", csv)?;
    let max_growth = growth.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    run.json(
        "restriction.json",
        &RestrictionFile {
            p,
            theta,
            report: &report,
            max_growth,
        },
    )?;
    run.summary.heading("restriction probe");
    run.summary.line(format!(
        "p = {}, theta = {}, {} trials per degree up to {}",
        fmt12(p),
        fmt12(theta),
        trials,
        max_degree
    ));
    run.summary.line(format!(
        "largest ratio {}, largest bucket-to-bucket growth {}",
        fmt12(report.max_ratio),
        fmt12(max_growth)
    ));
    Ok(())
}

/// Searches `levels` (first entry = roots) and writes the witness files.
pub fn step_find_ap(run: &mut Run, levels: &[LevelApproximation], slack: u64) -> Result<Vec<APWitness>, CliError> {
    let witnesses = find_persistent_triples(levels, slack)?;
    let rows = witness_summary(levels, &witnesses, slack)?;
    run.json("witnesses.json", &witnesses)?;
    let mut csv = Csv::new(&["level", "p", "q", "r", "persistence_depth", "exact"]);
    for w in &witnesses {
        csv.row(row![w.level, w.p, w.q, w.r, w.persistence_depth, if w.exact { "true" } else { "false" }]);
    }
    run.csv("witnesses.csv", csv)?;
    let mut csv = Csv::new(&["level", "witness_count", "persistent_count"]);
    for &(level, count, persistent) in &rows {
        csv.row(row![level, count, persistent]);
    }
    run.csv("witness_summary.csv", csv)?;
    let s = &mut run.summary;
    s.heading("progressions");
    let deepest = levels.last().map_or(0, |l| l.level());
    let persistent = witnesses.iter().filter(|w| w.persistence_depth == deepest).count();
    if persistent == 0 {
        s.line("no persistent witnesses");
    } else {
        s.line(format!(
            "{persistent} of {} root triples (slack {slack}) persist to level {deepest}",
            witnesses.len()
        ));
        let w = &witnesses[0];
        s.line(format!(
            "first witness: level {} cells (p, q, r) = ({}, {}, {})",
            w.level, w.p, w.q, w.r
        ));
    }
    for &(level, count, p) in &rows {
        s.line(format!("level {level}: {count} nontrivial triples, {p} roots reach it"));
    }
    Ok(witnesses)
}

#[derive(Serialize)]
struct SalemCertificate<'a> {
    d: usize,
    alpha: f64,
    s: f64,
    a: &'a [f64],
    kappa: f64,
    delta_s: f64,
    revised_a_ok: bool,
    eta: &'a [f64],
    direction_radius: u64,
    attempts: u32,
    window_length: f64,
    window_average: &'a fractal_ap::salem::WindowAverage,
    depth: u32,
    xi_max: u64,
    empirical_c2: f64,
    argmax_xi: i64,
}

pub fn step_salem(run: &mut Run, d: usize, alpha: f64, s: f64, depth: u32, xi_max: u64, seed: u64) -> Result<(), CliError> {
    let cert = pick_a(d, alpha, s, seed)?;
    let params = SalemParams::new(cert.a.clone(), alpha, KappaRule::LowerEdge)?;
    let mut csv = Csv::new(&["xi", "re", "im", "trunc_bound"]);
    let mut values = Vec::with_capacity(xi_max as usize + 1);
    for xi in 0..=xi_max {
        let (z, tb) = salem_fourier::<f64>(&params, xi as f64, depth)?;
        if xi > 0 {
            csv.row(row![xi, z.re, z.im, tb]);
        }
        values.push(z);
    }
    run.csv("salem.csv", csv)?;
    let table = FourierTable::from_nonnegative(values, Method::ProductFormula, 0.0, "salem")?;
    let decay = decay_condition(&table, alpha, 0.0, alpha, None)?;
    let big_t = 100.0 / cert.delta_s;
    let window = window_average(&params, s, big_t, 0.0)?;
    run.json(
        "salem_certificate.json",
        &SalemCertificate {
            d,
            alpha,
            s,
            a: &cert.a,
            kappa: cert.kappa,
            delta_s: cert.delta_s,
            revised_a_ok: cert.revised_a_ok,
            eta: &cert.eta,
            direction_radius: cert.direction_radius,
            attempts: cert.attempts,
            window_length: big_t,
            window_average: &window,
            depth,
            xi_max,
            empirical_c2: decay.empirical_c2,
            argmax_xi: decay.argmax_k,
        },
    )?;
    let sm = &mut run.summary;
    sm.heading("salem dissection");
    sm.line(format!(
        "d = {d}, alpha = {}, kappa = {}, seed {seed}",
        fmt12(alpha),
        fmt12(cert.kappa)
    ));
    sm.line(format!(
        "a = [{}]",
        cert.a.iter().map(|&v| fmt12(v)).collect::<Vec<_>>().join(", ")
    ));
    sm.line(format!(
        "delta_{} = {} (direction radius {}, draws: {})",
        fmt12(s),
        fmt12(cert.delta_s),
        cert.direction_radius,
        cert.attempts
    ));
    sm.line(format!(
        "window average of |P|^{} over T = {}: {} (bound {}, {:?})",
        fmt12(s),
        fmt12(big_t),
        fmt12(window.average),
        fmt12(window.bound),
        window.method
    ));
    sm.line(format!(
        "sup |μ̂(ξ)|·ξ^(alpha/2) for 1 ≤ ξ ≤ {xi_max}: {} at ξ = {}",
        fmt12(decay.empirical_c2),
        decay.argmax_k
    ));
    if !cert.revised_a_ok {
        run.fail("a violates the revised spacing conditions".to_string());
    }
    if !window.pass {
        run.fail(format!(
            "window average {} exceeds {}",
            fmt12(window.average),
            fmt12(window.bound)
        ));
    }
    Ok(())
}

/// Uniform base on `2^g` cells for `alpha = 2`; otherwise the deepest level
/// of a Cantor construction with `N0 = 16`, `t0 = round(16^{α/2})`, resolved
/// by the `2^g` grid.
pub fn brownian_base(alpha: f64, g: u32, seed: u64) -> Result<(BaseMeasure, String), CliError> {
    if alpha >= 2.0 {
        return Ok((BaseMeasure::uniform(1 << g)?, format!("uniform, {} atoms", 1u64 << g)));
    }
    let t0 = 16f64.powf(alpha / 2.0).round().clamp(1.0, 15.0) as u64;
    let depth = (g / 4).max(1);
    let params = CantorParams::new(16, t0, 1, KMode::Unit)?;
    let (chain, _) = construct(&params, depth, seed, Mode::Strict)?;
    let level = &chain[depth as usize];
    let label = format!(
        "Cantor, N0 = 16, t0 = {t0} (dimension {}), depth {depth}, {} atoms",
        fmt12(params.alpha()),
        level.cell_count()
    );
    Ok((BaseMeasure::cantor(level)?, label))
}

#[derive(Serialize)]
struct BrownianFile<'a> {
    base: &'a str,
    grid_depth: u32,
    paths: usize,
    moments: &'a fractal_ap::brownian::MomentReport,
    lambda: &'a [LambdaRow],
}

#[derive(Serialize)]
struct LambdaRow {
    epsilon: f64,
    lambda_mean: f64,
    lambda_stderr: f64,
    closed_form: f64,
    closed_form_stderr: f64,
    paley_zygmund: fractal_ap::brownian::PzBound,
}

pub struct BrownianInput<'a> {
    pub alpha: f64,
    pub grid_depth: u32,
    pub paths: usize,
    pub xi_list: &'a [f64],
    pub q: f64,
    pub epsilon: &'a [f64],
    pub closed_samples: u64,
    pub seed: u64,
}

pub fn step_brownian(run: &mut Run, inp: BrownianInput<'_>) -> Result<(), CliError> {
    let (base, label) = brownian_base(inp.alpha, inp.grid_depth, inp.seed)?;
    let ensemble = BrownianEnsemble::new(inp.paths, inp.grid_depth, base, inp.seed)?;
    let moments = moment_estimate(&ensemble, inp.xi_list, inp.q)?;
    let mut csv = Csv::new(&["xi", "mean_abs2q", "stderr"]);
    for r in &moments.rows {
        csv.row(row![r.xi, r.mean, r.stderr]);
    }
    run.csv("moments.csv", csv)?;

    let mut rows = Vec::new();
    let mut csv = Csv::new(&["epsilon", "lambda_mean", "lambda_stderr", "closed_form"]);
    for &eps in inp.epsilon {
        let s = lambda_ensemble(&ensemble, eps, inp.paths)?;
        let c = lambda_expectation_closed(&ensemble.base, eps, inp.closed_samples, inp.seed)?;
        csv.row(row![eps, s.mean, s.stderr, c.value]);
        rows.push(LambdaRow {
            epsilon: eps,
            lambda_mean: s.mean,
            lambda_stderr: s.stderr,
            closed_form: c.value,
            closed_form_stderr: c.stderr,
            paley_zygmund: paley_zygmund_bound(&s.values, eps),
        });
    }
    run.csv("lambda_eps.csv", csv)?;
    run.json(
        "brownian.json",
        &BrownianFile {
            base: &label,
            grid_depth: inp.grid_depth,
            paths: inp.paths,
            moments: &moments,
            lambda: &rows,
        },
    )?;

    let s = &mut run.summary;
    s.heading("brownian image");
    s.line(format!(
        "base: {label}; grid 2^{}, {} paths, seed {}",
        inp.grid_depth, inp.paths, inp.seed
    ));
    for r in &moments.rows {
        let exact = r.exact.map_or(String::new(), |e| format!(" (exact {})", fmt12(e)));
        s.line(format!(
            "E|μ̂({})|^{} = {} ± {}{exact}",
            fmt12(r.xi),
            fmt12(2.0 * inp.q),
            fmt12(r.mean),
            fmt12(r.stderr)
        ));
    }
    if let (Some(slope), Some(se)) = (moments.slope, moments.slope_stderr) {
        s.line(format!("log-log slope {} ± {}", fmt12(slope), fmt12(se)));
    }
    for r in &rows {
        s.line(format!(
            "epsilon {}: Λ_ε = {} ± {} over paths, closed form {} ± {}",
            fmt12(r.epsilon),
            fmt12(r.lambda_mean),
            fmt12(r.lambda_stderr),
            fmt12(r.closed_form),
            fmt12(r.closed_form_stderr)
        ));
        let pz = &r.paley_zygmund;
        s.line(format!(
            "epsilon {}: P(Λ_ε > {}·E Λ_ε) ≥ {} ± {}",
            fmt12(r.epsilon),
            fmt12(pz.lambda),
            fmt12(pz.bound),
            fmt12(pz.stderr)
        ));
    }
    for r in &rows {
        if r.paley_zygmund.inconclusive {
            run.fail(format!(
                "Paley–Zygmund bound inconclusive at epsilon {} (mean {})",
                fmt12(r.epsilon),
                fmt12(r.paley_zygmund.mean)
            ));
        }
    }
    Ok(())
}
