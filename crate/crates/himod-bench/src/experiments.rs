//! The six experiments. Each one writes its CSV into the output directory, appends
//! human-readable lines to the summary and returns its data for programmatic checks.
//!
//! Everything except the timing columns is a deterministic function of the config: the
//! parallel loops only map independent per-parameter work.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use himod::io::{fmt_f64, CsvWriter};
use himod::par::{self, Execution};
use himod::rom::{Cutoff, GreedyLog, TrainingSet};
use himod::stokes::infsup_himod;

use crate::config::{ExperimentConfig, Method};
use crate::problem::*;
use crate::timing::{crossover, mean, median_time, slope};

pub type Summary = Vec<String>;

fn csv(out: &Path, file: &str, schema: &str, header: &[&str]) -> Result<CsvWriter> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    CsvWriter::create(out.join(file), schema, header).with_context(|| format!("creating {file}"))
}

fn mu_fields(mu: &[f64]) -> String {
    mu.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn write_greedy_log(out: &Path, file: &str, log: &GreedyLog) -> Result<()> {
    let mut w = csv(out, file, "greedy-log", &["iteration", "index", "mu", "max_eta", "defect", "elapsed_s"])?;
    for r in &log.records {
        w.row(&[
            r.iteration.to_string(),
            r.index.to_string(),
            mu_fields(&r.mu),
            fmt_f64(r.max_eta),
            fmt_f64(r.defect),
            fmt_f64(r.elapsed),
        ])?;
    }
    w.finish()?;
    Ok(())
}

/// Eigenvalues of one correlation matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub role: &'static str,
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// λ_k / λ₁, k from 1.
    pub fn normalized(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1] / self.eigenvalues[0]
    }
}

pub fn eig_decay(c: &ExperimentConfig, model: &Model, summary: &mut Summary) -> Result<Vec<Spectrum>> {
    let set = training_set(c, c.training_size)?;
    let exec = Execution::default();
    let spectra = match model {
        Model::Adr(m) => {
            let pod = adr_pod(m, &set, pod_cutoff(c), exec)?;
            vec![Spectrum { role: "state", eigenvalues: pod.spectrum.eigenvalues().to_vec() }]
        }
        Model::Stokes(m) => {
            let pod = stokes_pod(m, &set, pod_cutoff(c), exec)?;
            vec![
                Spectrum { role: "velocity", eigenvalues: pod.velocity.1.eigenvalues().to_vec() },
                Spectrum { role: "pressure", eigenvalues: pod.pressure.1.eigenvalues().to_vec() },
                Spectrum { role: "supremizer", eigenvalues: pod.supremizer.1.eigenvalues().to_vec() },
            ]
        }
    };
    let mut w = csv(&c.out, "spectrum.csv", "spectrum", &["role", "k", "lambda", "normalized"])?;
    for s in &spectra {
        for (k, l) in s.eigenvalues.iter().enumerate() {
            w.row(&[s.role.to_string(), (k + 1).to_string(), fmt_f64(*l), fmt_f64(s.normalized(k + 1))])?;
        }
    }
    w.finish()?;
    for s in &spectra {
        let at = |k: usize| if k <= s.eigenvalues.len() { format!("{:.3e}", s.normalized(k)) } else { "-".into() };
        summary.push(format!(
            "eig-decay {}: M = {}, lambda_5/lambda_1 = {}, lambda_20/lambda_1 = {}",
            s.role,
            s.eigenvalues.len(),
            at(5),
            at(20)
        ));
    }
    Ok(spectra)
}

/// Mean errors over the testing set for one method and basis size.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub method: &'static str,
    pub n: usize,
    /// Mean H¹ error of the state or velocity.
    pub error_u: f64,
    /// Mean L² pressure error (Stokes).
    pub error_p: Option<f64>,
    /// Mean estimator (HiRB).
    pub eta: Option<f64>,
    /// Relative errors at the query parameter.
    pub query_u: f64,
    pub query_p: Option<f64>,
}

pub struct ErrorSweep {
    pub rows: Vec<ErrorRow>,
    pub greedy_log: Option<GreedyLog>,
}

impl ErrorSweep {
    pub fn get(&self, method: &str, n: usize) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.method == method && r.n == n)
    }

    pub fn method(&self, method: &str) -> Vec<&ErrorRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }
}

fn adr_errors(
    m: &AdrModel,
    test: &TrainingSet,
    truth: &[Vec<f64>],
    query: (&[f64], &[f64]),
    solve: impl Fn(&[f64]) -> Result<(Vec<f64>, Option<f64>)> + Sync,
) -> Result<(f64, Option<f64>, f64)> {
    let per = par::try_map_indexed(Execution::default(), test.len(), |j| {
        let (u, eta) = solve(test.get(j))?;
        Ok::<_, anyhow::Error>((m.x.distance(&u, &truth[j]), eta))
    })?;
    let err = mean(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let eta = per.iter().map(|p| p.1).collect::<Option<Vec<f64>>>().map(|v| mean(&v));
    let (u, _) = solve(query.0)?;
    Ok((err, eta, m.x.distance(&u, query.1) / m.x.norm(query.1)))
}

pub fn error_vs_n(c: &ExperimentConfig, model: &Model, summary: &mut Summary) -> Result<ErrorSweep> {
    let set = training_set(c, c.training_size)?;
    let test = testing_set(c)?;
    let exec = Execution::default();
    let mut rows = vec![];
    let mut greedy_log = None;
    match model {
        Model::Adr(m) => {
            let truth = par::try_map_indexed(exec, test.len(), |j| m.sys.solve(test.get(j)))?;
            let query_truth = m.sys.solve(&c.query)?;
            let query = (c.query.as_slice(), query_truth.as_slice());
            if c.method.pod() {
                let pod = adr_pod(m, &set, pod_cutoff(c), exec)?;
                for n in 1..=pod.reduced.len() {
                    let r = pod.reduced.truncate(n);
                    let (error_u, _, query_u) =
                        adr_errors(m, &test, &truth, query, |mu| Ok((r.query(mu)?.1, None)))?;
                    rows.push(ErrorRow { method: "hipod", n, error_u, error_p: None, eta: None, query_u, query_p: None });
                }
            }
            if c.method.rb() {
                let g = adr_greedy(m, &set, &greedy_options(c, c.n, exec))?;
                for n in 1..=g.basis().len() {
                    let t = g.truncate(n);
                    let (error_u, eta, query_u) = adr_errors(m, &test, &truth, query, |mu| {
                        let (u, eta) = t.query(mu)?;
                        Ok((u, Some(eta)))
                    })?;
                    rows.push(ErrorRow { method: "hirb", n, error_u, error_p: None, eta, query_u, query_p: None });
                }
                greedy_log = Some(g.log);
            }
        }
        Model::Stokes(m) => {
            let truth = par::try_map_indexed(exec, test.len(), |j| m.sys.solve(test.get(j)))?;
            let (qu, qp) = m.sys.solve(&c.query)?;
            let errors = |solve: &(dyn Fn(&[f64]) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)> + Sync)| -> Result<_> {
                let per = par::try_map_indexed(exec, test.len(), |j| {
                    let (u, p, eta) = solve(test.get(j))?;
                    Ok::<_, anyhow::Error>((m.xu.distance(&u, &truth[j].0), m.xp.distance(&p, &truth[j].1), eta))
                })?;
                let eu = mean(&per.iter().map(|p| p.0).collect::<Vec<_>>());
                let ep = mean(&per.iter().map(|p| p.1).collect::<Vec<_>>());
                let eta = per.iter().map(|p| p.2).collect::<Option<Vec<f64>>>().map(|v| mean(&v));
                let (u, p, _) = solve(&c.query)?;
                Ok((eu, ep, eta, m.xu.distance(&u, &qu) / m.xu.norm(&qu), m.xp.distance(&p, &qp) / m.xp.norm(&qp)))
            };
            if c.method.pod() {
                let pod = stokes_pod(m, &set, pod_cutoff(c), exec)?;
                let top = pod.velocity.0.len().min(pod.pressure.0.len());
                for n in 1..=top {
                    let r = pod.reduced(m, n, n, n)?;
                    let (eu, ep, _, qu_rel, qp_rel) = errors(&|mu| {
                        let (u, p) = r.query(mu)?;
                        Ok((u, p, None))
                    })?;
                    rows.push(ErrorRow {
                        method: "hipod",
                        n,
                        error_u: eu,
                        error_p: Some(ep),
                        eta: None,
                        query_u: qu_rel,
                        query_p: Some(qp_rel),
                    });
                }
            }
            if c.method.rb() {
                // Greedy runs are deterministic and nested, so a run per size equals the
                // prefixes of the largest one.
                for n in 1..=c.n {
                    let g = stokes_greedy(m, &set, &greedy_options(c, n, exec))?;
                    let (eu, ep, eta, qu_rel, qp_rel) = errors(&|mu| {
                        let (u, p, eta) = g.query(mu)?;
                        Ok((u, p, Some(eta)))
                    })?;
                    rows.push(ErrorRow {
                        method: "hirb",
                        n,
                        error_u: eu,
                        error_p: Some(ep),
                        eta,
                        query_u: qu_rel,
                        query_p: Some(qp_rel),
                    });
                    let stopped = g.log.records.len() < n;
                    greedy_log = Some(g.log);
                    if stopped {
                        break;
                    }
                }
            }
        }
    }
    let mut w = csv(
        &c.out,
        "error_vs_n.csv",
        "error-vs-n",
        &["method", "n", "mean_error_u", "mean_error_p", "mean_eta", "query_rel_error_u", "query_rel_error_p"],
    )?;
    for r in &rows {
        w.row(&[
            r.method.to_string(),
            r.n.to_string(),
            fmt_f64(r.error_u),
            opt(r.error_p),
            opt(r.eta),
            fmt_f64(r.query_u),
            opt(r.query_p),
        ])?;
    }
    w.finish()?;
    if let Some(log) = &greedy_log {
        write_greedy_log(&c.out, "greedy_log.csv", log)?;
    }
    for method in ["hipod", "hirb"] {
        if let Some(last) = rows.iter().filter(|r| r.method == method).last() {
            let mut line = format!("error-vs-n {method}: N = {}, mean error u = {:.3e}", last.n, last.error_u);
            if let Some(p) = last.error_p {
                line += &format!(", mean error p = {p:.3e}");
            }
            if let Some(e) = last.eta {
                line += &format!(", mean eta = {e:.3e}");
            }
            summary.push(line);
        }
    }
    Ok(ErrorSweep { rows, greedy_log })
}

/// One timed query.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedupRecord {
    pub method: &'static str,
    pub n: usize,
    pub query: usize,
    pub mu: Vec<f64>,
    pub tau_m: f64,
    pub tau_mn: f64,
    pub error_u: f64,
    pub error_p: Option<f64>,
    pub eta: Option<f64>,
}

impl SpeedupRecord {
    pub fn speedup(&self) -> f64 {
        self.tau_m / self.tau_mn
    }
}

pub struct SpeedupTable {
    pub records: Vec<SpeedupRecord>,
    /// Median HiMod assembly time, reported apart from τ_m.
    pub assembly: f64,
}

impl SpeedupTable {
    pub fn mean_speedup(&self, method: &str, n: usize) -> Option<f64> {
        let s: Vec<f64> = self.records.iter().filter(|r| r.method == method && r.n == n).map(|r| r.speedup()).collect();
        (!s.is_empty()).then(|| mean(&s))
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut n: Vec<usize> = self.records.iter().map(|r| r.n).collect();
        n.sort_unstable();
        n.dedup();
        n
    }
}

/// τ_m and τ_{m,N} per testing parameter, timed sequentially on the calling thread.
pub fn speedup(c: &ExperimentConfig, model: &Model, summary: &mut Summary) -> Result<SpeedupTable> {
    let set = training_set(c, c.training_size)?;
    let test = testing_set(c)?;
    let queries = c.timed_queries.min(test.len());
    let reps = c.repetitions;
    let top = c.speedup_sizes.iter().copied().max().unwrap_or(c.n);
    let mut records = vec![];
    let assembly;
    match model {
        Model::Adr(m) => {
            let spec = himod::adr::AdrProblemSpec { robin: c.rho, ..himod::adr::AdrProblemSpec::benchmark() };
            assembly = median_time(reps, || Ok(himod::adr::assemble_adr(&m.space, &spec)?))?.0;
            let pod = if c.method.pod() { Some(adr_pod(m, &set, Cutoff::Fixed(top), Execution::default())?) } else { None };
            let rb = if c.method.rb() {
                Some(adr_greedy(m, &set, &greedy_options(c, top, Execution::default()))?)
            } else {
                None
            };
            for q in 0..queries {
                let mu = test.get(q);
                let (tau_m, truth) = median_time(reps, || Ok(m.sys.solve(mu)?))?;
                for &n in &c.speedup_sizes {
                    if let Some(pod) = &pod {
                        let r = pod.reduced.truncate(n);
                        let (tau_mn, (_, u)) = median_time(reps, || Ok(r.query(mu)?))?;
                        records.push(SpeedupRecord {
                            method: "hipod",
                            n,
                            query: q,
                            mu: mu.to_vec(),
                            tau_m,
                            tau_mn,
                            error_u: m.x.distance(&u, &truth),
                            error_p: None,
                            eta: None,
                        });
                    }
                    if let Some(g) = &rb {
                        let t = g.truncate(n);
                        let (tau_mn, (u, eta)) = median_time(reps, || Ok(t.query(mu)?))?;
                        records.push(SpeedupRecord {
                            method: "hirb",
                            n,
                            query: q,
                            mu: mu.to_vec(),
                            tau_m,
                            tau_mn,
                            error_u: m.x.distance(&u, &truth),
                            error_p: None,
                            eta: Some(eta),
                        });
                    }
                }
            }
        }
        Model::Stokes(m) => {
            let spec = himod::stokes::StokesProblemSpec::benchmark();
            assembly = median_time(reps, || Ok(himod::stokes::assemble_stokes(&m.space, &spec)?))?.0;
            let pod = if c.method.pod() { Some(stokes_pod(m, &set, Cutoff::Fixed(top), Execution::default())?) } else { None };
            let mut pod_models = vec![];
            let mut rb_models = vec![];
            for &n in &c.speedup_sizes {
                if let Some(pod) = &pod {
                    pod_models.push((n, pod.reduced(m, n, n, n)?));
                }
                if c.method.rb() {
                    rb_models.push((n, stokes_greedy(m, &set, &greedy_options(c, n, Execution::default()))?));
                }
            }
            for q in 0..queries {
                let mu = test.get(q);
                let (tau_m, (tu, tp)) = median_time(reps, || Ok(m.sys.solve(mu)?))?;
                for (n, r) in &pod_models {
                    let (tau_mn, (u, p)) = median_time(reps, || Ok(r.query(mu)?))?;
                    records.push(SpeedupRecord {
                        method: "hipod",
                        n: *n,
                        query: q,
                        mu: mu.to_vec(),
                        tau_m,
                        tau_mn,
                        error_u: m.xu.distance(&u, &tu),
                        error_p: Some(m.xp.distance(&p, &tp)),
                        eta: None,
                    });
                }
                for (n, g) in &rb_models {
                    let (tau_mn, (u, p, eta)) = median_time(reps, || Ok(g.query(mu)?))?;
                    records.push(SpeedupRecord {
                        method: "hirb",
                        n: *n,
                        query: q,
                        mu: mu.to_vec(),
                        tau_m,
                        tau_mn,
                        error_u: m.xu.distance(&u, &tu),
                        error_p: Some(m.xp.distance(&p, &tp)),
                        eta: Some(eta),
                    });
                }
            }
        }
    }
    let mut w = csv(
        &c.out,
        "speedup.csv",
        "speedup",
        &["method", "n", "query", "mu", "error_u", "error_p", "eta", "tau_m_s", "tau_mn_s", "speedup"],
    )?;
    for r in &records {
        w.row(&[
            r.method.to_string(),
            r.n.to_string(),
            r.query.to_string(),
            mu_fields(&r.mu),
            fmt_f64(r.error_u),
            opt(r.error_p),
            opt(r.eta),
            fmt_f64(r.tau_m),
            fmt_f64(r.tau_mn),
            fmt_f64(r.speedup()),
        ])?;
    }
    w.finish()?;
    let table = SpeedupTable { records, assembly };
    summary.push(format!("speedup: {queries} queries, median of {reps} runs each, assembly {:.3e} s", table.assembly));
    for n in table.sizes() {
        for method in ["hipod", "hirb"] {
            if let Some(s) = table.mean_speedup(method, n) {
                summary.push(format!("speedup {method} N = {n}: mean {s:.1}"));
            }
        }
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineRow {
    pub m: usize,
    pub pod_seconds: f64,
    pub rb_seconds: f64,
    pub pod_solves: usize,
    pub rb_solves: usize,
}

pub struct OfflineCost {
    pub rows: Vec<OfflineRow>,
    pub pod_slope: f64,
    pub rb_slope: f64,
    /// Interpolated M where the two timing curves cross, if they do.
    pub crossover: Option<f64>,
}

/// HiPOD and HiRB offline wall time against M, sequential and with N fixed.
pub fn offline_cost(c: &ExperimentConfig, model: &Model, summary: &mut Summary) -> Result<OfflineCost> {
    let exec = Execution::Sequential;
    let mut rows = vec![];
    for &size in &c.offline_sizes {
        let set = training_set(c, size)?;
        let opts = greedy_options(c, c.n, exec);
        let (pod_seconds, pod_solves, rb_seconds, rb_solves) = match model {
            Model::Adr(m) => {
                let (tp, pod) = median_time(c.repetitions, || adr_pod(m, &set, Cutoff::Fixed(c.n), exec))?;
                let (tr, g) = median_time(c.repetitions, || adr_greedy(m, &set, &opts))?;
                (tp, pod.snapshots.len(), tr, g.log.solves)
            }
            Model::Stokes(m) => {
                let (tp, pod) = median_time(c.repetitions, || stokes_pod(m, &set, Cutoff::Fixed(c.n), exec))?;
                let (tr, g) = median_time(c.repetitions, || stokes_greedy(m, &set, &opts))?;
                (tp, pod.snapshots.velocity.len(), tr, g.log.solves)
            }
        };
        rows.push(OfflineRow { m: size, pod_seconds, rb_seconds, pod_solves, rb_solves });
    }
    let ms: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let tp: Vec<f64> = rows.iter().map(|r| r.pod_seconds).collect();
    let tr: Vec<f64> = rows.iter().map(|r| r.rb_seconds).collect();
    let (pod_slope, rb_slope) = if rows.len() > 1 { (slope(&ms, &tp), slope(&ms, &tr)) } else { (f64::NAN, f64::NAN) };
    let cross = crossover(&ms, &tp, &tr);
    let mut w = csv(&c.out, "offline_cost.csv", "offline-cost", &["m", "pod_solves", "rb_solves", "pod_s", "rb_s"])?;
    for r in &rows {
        w.row(&[r.m.to_string(), r.pod_solves.to_string(), r.rb_solves.to_string(), fmt_f64(r.pod_seconds), fmt_f64(r.rb_seconds)])?;
    }
    w.finish()?;
    summary.push(format!(
        "offline-cost: N = {}, slope hipod {:.3e} s/sample, hirb {:.3e} s/sample, crossover {}",
        c.n,
        pod_slope,
        rb_slope,
        cross.map(|m| format!("at M = {m:.0}")).unwrap_or_else(|| "none".into())
    ));
    Ok(OfflineCost { rows, pod_slope, rb_slope, crossover: cross })
}

pub struct InfsupSweep {
    pub beta_himod: f64,
    /// (N_s, β_N)
    pub reduced: Vec<(usize, f64)>,
}

/// β of the reduced Stokes problem with N_u = N_p = N and N_s supremizers, 0 ≤ N_s ≤ max.
pub fn infsup_sweep(c: &ExperimentConfig, model: &Model, summary: &mut Summary) -> Result<InfsupSweep> {
    let Model::Stokes(m) = model else { bail!("infsup-sweep needs a Stokes config") };
    let set = training_set(c, c.training_size)?;
    let exec = Execution::default();
    let pod = stokes_pod(m, &set, Cutoff::Fixed(c.n), exec)?;
    let beta_himod = infsup_himod(&m.sys, &m.xu, &m.xp, exec)?;
    let mut reduced = vec![];
    for ns in 0..=c.supremizers {
        let r = pod.reduced(m, c.n, ns, c.n)?;
        reduced.push((ns, r.infsup(&m.xu, &m.xp)?));
    }
    let mut w = csv(&c.out, "infsup.csv", "infsup-sweep", &["n_s", "beta_reduced", "beta_himod"])?;
    for (ns, b) in &reduced {
        w.numbers(&[*ns as f64, *b, beta_himod])?;
    }
    w.finish()?;
    summary.push(format!("infsup-sweep: beta_himod = {beta_himod:.4e}"));
    for (ns, b) in &reduced {
        summary.push(format!("infsup-sweep: N_s = {ns}, beta_reduced = {b:.4e}"));
    }
    Ok(InfsupSweep { beta_himod, reduced })
}

/// HiMod and reduced fields at the query parameter on an nx × ny grid of fibers.
pub fn field_export(c: &ExperimentConfig, model: &Model, summary: &mut Summary) -> Result<usize> {
    let set = training_set(c, c.training_size)?;
    let exec = Execution::default();
    let grid = |map: &himod::geometry::DomainMap| -> Result<Vec<(f64, f64)>> {
        let mut pts = Vec::with_capacity(c.field_nx * c.field_ny);
        for i in 0..c.field_nx {
            let x = c.length * i as f64 / (c.field_nx - 1) as f64;
            for j in 0..c.field_ny {
                let y_hat = -0.5 + j as f64 / (c.field_ny - 1) as f64;
                pts.push((x, map.eval(x, y_hat)?.y));
            }
        }
        Ok(pts)
    };
    let started = Instant::now();
    let rows = match model {
        Model::Adr(m) => {
            let pts = grid(m.space.map())?;
            let mut cols = vec![("himod".to_string(), m.space.evaluate_field(&m.sys.solve(&c.query)?, &pts)?)];
            if c.method.pod() {
                let pod = adr_pod(m, &set, pod_cutoff(c), exec)?;
                cols.push(("hipod".into(), m.space.evaluate_field(&pod.reduced.query(&c.query)?.1, &pts)?));
            }
            if c.method.rb() {
                let g = adr_greedy(m, &set, &greedy_options(c, c.n, exec))?;
                cols.push(("hirb".into(), m.space.evaluate_field(&g.query(&c.query)?.0, &pts)?));
            }
            let mut header = vec!["x".to_string(), "y".to_string()];
            header.extend(cols.iter().map(|(n, _)| format!("u_{n}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut w = csv(&c.out, "field.csv", "field-adr", &header)?;
            for (i, &(x, y)) in pts.iter().enumerate() {
                let mut row = vec![x, y];
                row.extend(cols.iter().map(|(_, v)| v[i]));
                w.numbers(&row)?;
            }
            w.finish()?;
            pts.len()
        }
        Model::Stokes(m) => {
            let pts = grid(m.space.velocity().map())?;
            let (u, p) = m.sys.solve(&c.query)?;
            let mut cols = vec![("himod".to_string(), m.space.evaluate(&u, &p, &pts)?)];
            if c.method.pod() {
                let pod = stokes_pod(m, &set, pod_cutoff(c), exec)?;
                let (u, p) = pod.reduced(m, c.n, c.n, c.n)?.query(&c.query)?;
                cols.push(("hipod".into(), m.space.evaluate(&u, &p, &pts)?));
            }
            if c.method.rb() {
                let g = stokes_greedy(m, &set, &greedy_options(c, c.n, exec))?;
                let (u, p, _) = g.query(&c.query)?;
                cols.push(("hirb".into(), m.space.evaluate(&u, &p, &pts)?));
            }
            let mut header = vec!["x".to_string(), "y".to_string()];
            for (n, _) in &cols {
                header.extend([format!("ux_{n}"), format!("uy_{n}"), format!("p_{n}")]);
            }
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut w = csv(&c.out, "field.csv", "field-stokes", &header)?;
            for (i, &(x, y)) in pts.iter().enumerate() {
                let mut row = vec![x, y];
                for (_, v) in &cols {
                    row.extend_from_slice(&v[i][2..]);
                }
                w.numbers(&row)?;
            }
            w.finish()?;
            pts.len()
        }
    };
    summary.push(format!(
        "field-export: {rows} points at mu = [{}] in {:.2} s",
        c.query.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
        started.elapsed().as_secs_f64()
    ));
    Ok(rows)
}

pub fn describe(c: &ExperimentConfig) -> String {
    let method = match c.method {
        Method::HiPod => "hipod",
        Method::HiRb => "hirb",
        Method::Both => "both",
    };
    format!(
        "problem {:?}, N_el = {}, M = {}, N = {}, method {method}, training seed {}, greedy seed {}, testing {} (seed {})",
        c.problem, c.elements, c.training_size, c.n, c.training_seed, c.greedy_seed, c.testing_size, c.testing_seed
    )
}
