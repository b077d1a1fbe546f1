//! Subcommand bodies. Each returns whether every reported check passed.

use crate::config::RunConfig;
use crate::{AnalyzeArgs, Context, PotentialArgs, SampleArgs, TransformArgs, VerifyArgs};
use anyhow::{anyhow, bail, Context as _, Result};
use hsdual::mcmc::{height_chain, run, spin_diamond_chain, spin_star_chain, ChainKind, ChainSeed, ChainState, ChainSummary, Estimate, TorusLoops};
use hsdual::observables::{CltReport, SeriesReport, TorusSeries, TorusSeriesConfig, XyReport};
use hsdual::oracle::{default_corpus, verify_transform, Corpus, IdentityRegistry, ModelSpec, VerificationReport};
use hsdual::transforms::{degree_reduce, star_tree_transform, TransformLog, Transformer};
use hsdual::{FiniteGraph, PotentialRegistry, Sector};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Where a CSV goes: an explicit `--out`, else `output.dir/<default>`, else stdout.
fn destination(ctx: &Context, explicit: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    match explicit {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p.clone()),
        None if ctx.cfg.output.dir.as_os_str().is_empty() => None,
        None => Some(ctx.cfg.output.dir.join(default_name)),
    }
}

fn open_output(dest: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match dest {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn header(ctx: &Context, out: &mut dyn Write, what: &str) -> Result<()> {
    if ctx.timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        writeln!(out, "# hsdual {} {what} unix={secs}", env!("CARGO_PKG_VERSION"))?;
    }
    Ok(())
}

fn corpus_for(ctx: &Context, name: &str, twists: Option<usize>) -> Result<Corpus> {
    let cfg = &ctx.cfg;
    let mut c = default_corpus();
    match name {
        "default" => {}
        "config" => {
            let g = cfg.build_graph()?;
            let side = TorusLoops::side(&g);
            c.graphs = vec![("config".into(), g, side)];
            c.potentials = vec![cfg.graph.potential.clone()];
        }
        other => bail!("unknown corpus `{other}` (known: default, config)"),
    }
    c.budget = cfg.oracle.budget;
    c.seed = cfg.oracle.seed;
    c.twists = twists.unwrap_or(cfg.oracle.twists);
    c.truncation = (cfg.oracle.truncation > 0).then_some(cfg.oracle.truncation);
    c.quadrature = (cfg.oracle.quadrature > 0).then_some(cfg.oracle.quadrature);
    Ok(c)
}

pub fn verify(ctx: &Context, a: &VerifyArgs) -> Result<bool> {
    let corpus = corpus_for(ctx, &a.corpus, a.twists)?;
    let ids = IdentityRegistry::default();
    let names: Vec<String> = if a.identities.is_empty() {
        ids.names().iter().map(|s| s.to_string()).collect()
    } else {
        a.identities.clone()
    };
    for n in &names {
        ids.get(n)?;
    }
    let reg = PotentialRegistry::default();
    // identities are independent; run them concurrently and report in order
    let results: Vec<Result<Vec<VerificationReport>>> =
        names.par_iter().map(|n| Ok(ids.run(n, &corpus, &reg)?)).collect();
    let dest = destination(ctx, &a.out, "verify.csv");
    let mut out = open_output(&dest)?;
    header(ctx, &mut out, &format!("verify corpus={}", a.corpus))?;
    writeln!(out, "{}", VerificationReport::CSV_HEADER)?;
    let mut all_pass = true;
    for (name, res) in names.iter().zip(results) {
        let reps = res.with_context(|| format!("identity {name}"))?;
        let failed = reps.iter().filter(|r| !r.pass).count();
        all_pass &= failed == 0;
        eprintln!("{name}: {} reports, {failed} failed", reps.len());
        for r in &reps {
            writeln!(out, "{}", r.csv_row())?;
        }
    }
    out.flush()?;
    Ok(all_pass)
}

fn chain_for(kind: ChainKind, m: &ModelSpec) -> Result<ChainState> {
    Ok(match kind {
        ChainKind::Height => height_chain(m)?,
        ChainKind::SpinStar => spin_star_chain(m)?,
        ChainKind::SpinDiamond => spin_diamond_chain(m)?,
    })
}

fn model_for(cfg: &RunConfig, kind: ChainKind) -> Result<ModelSpec> {
    let m = ModelSpec::new(cfg.build_graph()?, &PotentialRegistry::default(), kind.sector())?;
    Ok(m.with_budget(cfg.oracle.budget))
}

fn write_rows(out: &mut dyn Write, chain: usize, kind: ChainKind, m: &ModelSpec, p: &hsdual::mcmc::RunParams, seed: u64) -> Result<ChainSummary> {
    let mut state = chain_for(kind, m)?;
    let mut k = 0u64;
    let mut line = String::new();
    let mut failed = None;
    let summary = run(&mut state, p, ChainSeed { master: seed, chain: chain as u64 }, |s| {
        use std::fmt::Write as _;
        k += 1;
        line.clear();
        let _ = write!(line, "{chain},{}", k * p.thin);
        for x in s.field() {
            let _ = write!(line, ",{x}");
        }
        line.push('\n');
        if failed.is_none() {
            if let Err(e) = out.write_all(line.as_bytes()) {
                failed = Some(e);
            }
        }
    });
    if let Some(e) = failed {
        return Err(e.into());
    }
    Ok(summary)
}

pub fn sample(ctx: &Context, a: &SampleArgs) -> Result<bool> {
    let mut cfg = ctx.cfg.clone();
    if let Some(c) = &a.chain {
        cfg.mcmc.chain = c.clone();
    }
    let m = &mut cfg.mcmc;
    m.sweeps = a.sweeps.unwrap_or(m.sweeps);
    m.burn_in = a.burnin.unwrap_or(m.burn_in);
    m.thin = a.thin.unwrap_or(m.thin);
    m.seed = a.seed.unwrap_or(m.seed);
    m.chains = a.chains.unwrap_or(m.chains);
    cfg.validate()?;
    let kind = cfg.chain_kind()?;
    let model = model_for(&cfg, kind)?;
    let p = cfg.run_params()?;
    let (seed, n_chains) = (cfg.mcmc.seed, cfg.mcmc.chains);

    let dest = destination(ctx, &a.out, "samples.csv");
    let mut out = open_output(&dest)?;
    header(ctx, &mut out, &format!("sample chain={} seed={seed}", kind.name()))?;
    write!(out, "chain,sweep")?;
    for e in 0..model.n_edges() {
        write!(out, ",e{e}")?;
    }
    writeln!(out)?;

    let summaries = if n_chains == 1 {
        vec![write_rows(&mut out, 0, kind, &model, &p, seed)?]
    } else {
        // chains run in parallel into part files, concatenated in chain order
        let dir = match &dest {
            Some(d) => d.parent().map(Path::to_path_buf).unwrap_or_default(),
            None => std::env::temp_dir(),
        };
        let stem = format!("hsdual-sample-{}", std::process::id());
        let parts: Vec<PathBuf> = (0..n_chains).map(|k| dir.join(format!("{stem}.part{k}"))).collect();
        let summaries: Vec<Result<ChainSummary>> = parts
            .par_iter()
            .enumerate()
            .map(|(k, path)| {
                let mut w = BufWriter::new(File::create(path)?);
                let s = write_rows(&mut w, k, kind, &model, &p, seed)?;
                w.flush()?;
                Ok(s)
            })
            .collect();
        let mut done = Vec::new();
        for (path, s) in parts.iter().zip(summaries) {
            if s.is_ok() {
                std::io::copy(&mut File::open(path)?, &mut out)?;
            }
            let _ = std::fs::remove_file(path);
            done.push(s?);
        }
        done
    };
    out.flush()?;
    for (k, s) in summaries.iter().enumerate() {
        eprintln!("chain {k}: acceptance {:.3}, delta {:.4}, max drift {:.2e}", s.acceptance, s.delta, s.drift);
    }
    Ok(true)
}

#[derive(Serialize)]
struct EstimateJson {
    mean: f64,
    se: f64,
    tau_int: f64,
}

impl From<&Estimate> for EstimateJson {
    fn from(e: &Estimate) -> Self {
        EstimateJson {
            mean: e.mean,
            se: e.se,
            tau_int: e.tau_int,
        }
    }
}

#[derive(Serialize)]
struct CheckJson {
    name: String,
    lhs: f64,
    rhs: f64,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

impl From<&VerificationReport> for CheckJson {
    fn from(r: &VerificationReport) -> Self {
        CheckJson {
            name: r.instance.clone(),
            lhs: r.lhs,
            rhs: r.rhs,
            residual: r.residual,
            tolerance: r.tolerance,
            pass: r.pass,
        }
    }
}

#[derive(Serialize)]
struct CltJson {
    n: usize,
    ks: f64,
    ks_pass: bool,
    variance: EstimateJson,
    target: EstimateJson,
    gap: EstimateJson,
    variance_pass: bool,
}

impl From<&CltReport> for CltJson {
    fn from(c: &CltReport) -> Self {
        CltJson {
            n: c.n,
            ks: c.ks,
            ks_pass: c.ks_pass,
            variance: (&c.variance).into(),
            target: (&c.target).into(),
            gap: (&c.gap).into(),
            variance_pass: c.variance_pass,
        }
    }
}

#[derive(Serialize)]
struct XyJson {
    distance: usize,
    lhs: f64,
    rhs: f64,
    se: f64,
    pass: bool,
}

impl From<&XyReport> for XyJson {
    fn from(x: &XyReport) -> Self {
        XyJson {
            distance: x.distance,
            lhs: x.lhs,
            rhs: x.rhs,
            se: x.se,
            pass: x.pass,
        }
    }
}

#[derive(Serialize)]
struct Summary {
    side: usize,
    chains: usize,
    samples: u64,
    u2: EstimateJson,
    symmetric_sum: CheckJson,
    bridges: Vec<CheckJson>,
    rp_correlation: Vec<CheckJson>,
    direction: Vec<CheckJson>,
    clt: Option<CltJson>,
    xy: Vec<XyJson>,
    pass: bool,
}

fn summarize(r: &SeriesReport, acc: &TorusSeries, chains: usize, samples: u64) -> Summary {
    let sym = r.symmetric_check("symmetric-sum");
    let bridges = r.bridge_checks("bridge");
    let rp = r.reflection_checks("c");
    let dir = r.direction_checks("c");
    let clt = acc.clt_report();
    let xy = acc.xy_reports();
    let pass = sym.pass
        && bridges.iter().chain(&rp).chain(&dir).all(|c| c.pass)
        && clt.as_ref().is_none_or(|c| c.ks_pass && c.variance_pass)
        && xy.iter().all(|x| x.pass);
    Summary {
        side: r.side,
        chains,
        samples,
        u2: (&r.u2).into(),
        symmetric_sum: (&sym).into(),
        bridges: bridges.iter().map(Into::into).collect(),
        rp_correlation: rp.iter().map(Into::into).collect(),
        direction: dir.iter().map(Into::into).collect(),
        clt: clt.as_ref().map(Into::into),
        xy: xy.iter().map(Into::into).collect(),
        pass,
    }
}

/// Rows of a sample CSV: `(chain, edge field)`, skipping comments and the header.
fn sample_rows(path: &Path, n_edges: usize, mut f: impl FnMut(usize, &[f64])) -> Result<()> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut field = Vec::with_capacity(n_edges);
    let mut seen_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if !line.starts_with("chain,sweep") {
                bail!("{}: expected the `chain,sweep,e0,...` header", path.display());
            }
            seen_header = true;
            continue;
        }
        let mut cols = line.split(',');
        let bad = || anyhow!("{}: line {}: malformed row", path.display(), i + 1);
        let chain: usize = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        cols.next().ok_or_else(bad)?;
        field.clear();
        for c in cols {
            field.push(c.trim().parse::<f64>().map_err(|_| bad())?);
        }
        if field.len() != n_edges {
            bail!("{}: line {}: {} edge values, the graph has {n_edges} edges", path.display(), i + 1, field.len());
        }
        f(chain, &field);
    }
    Ok(())
}

pub fn analyze(ctx: &Context, a: &AnalyzeArgs) -> Result<bool> {
    let cfg = &ctx.cfg;
    if cfg.chain_kind()? != ChainKind::SpinDiamond {
        bail!("analyze needs spin-diamond samples (mcmc.chain = \"spin-diamond\")");
    }
    let model = model_for(cfg, ChainKind::SpinDiamond)?;
    let side = TorusLoops::side(&model.graph).ok_or_else(|| anyhow!("analyze needs a torus graph"))?;
    let an = &cfg.analysis;
    let mut tcfg = TorusSeriesConfig::new(side, an.max_distance);
    tcfg.bridge_lengths = if an.bridge_lengths.is_empty() {
        (1..=an.max_distance).collect()
    } else {
        an.bridge_lengths.clone()
    };
    tcfg.clt_length = (an.clt_length > 0).then_some(an.clt_length);
    tcfg.xy_beta = match (an.xy_check, &model.potentials[0].provenance) {
        (true, hsdual::Provenance::Xy(b)) if model.potentials.iter().all(|p| p.provenance == model.potentials[0].provenance) => Some(*b),
        _ => None,
    };

    // first pass: rows per chain, so each accumulator knows its batch size
    let mut counts: Vec<u64> = Vec::new();
    sample_rows(&a.samples, model.n_edges(), |k, _| {
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    })?;
    if counts.iter().all(|&c| c == 0) {
        bail!("{}: no samples", a.samples.display());
    }
    // a common expected length gives every chain the same batch size, so
    // chains of unequal length still pool
    let longest = counts.iter().copied().max().unwrap_or(1);
    let mut accs: Vec<TorusSeries> = counts
        .iter()
        .map(|_| TorusSeries::new(tcfg.clone(), model.potentials.clone(), longest))
        .collect::<hsdual::Result<_>>()?;
    sample_rows(&a.samples, model.n_edges(), |k, j| accs[k].push(j))?;
    let (chains, samples) = (counts.iter().filter(|&&c| c > 0).count(), counts.iter().sum());
    let mut acc = accs.swap_remove(0);
    for other in &accs {
        acc.merge(other);
    }
    let report = acc.report();

    let dest = destination(ctx, &a.out, "series.csv");
    let mut out = open_output(&dest)?;
    header(ctx, &mut out, &format!("analyze samples={}", a.samples.display()))?;
    writeln!(out, "{}", SeriesReport::CSV_HEADER)?;
    for row in report.csv_rows() {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    drop(out);

    let summary = summarize(&report, &acc, chains, samples);
    let json = serde_json::to_string_pretty(&summary)?;
    match &a.summary {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(summary.pass)
}

pub fn transform(ctx: &Context, a: &TransformArgs) -> Result<bool> {
    let reg = PotentialRegistry::default();
    let g = match &a.input {
        Some(p) => FiniteGraph::from_text(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("in {}", p.display()))?,
        None => ctx.cfg.build_graph()?,
    };
    let mut t = Transformer::new(g.clone(), &reg);
    if let Some(r) = &a.replay {
        let ops = TransformLog::parse_ops(&std::fs::read_to_string(r)?).with_context(|| format!("in {}", r.display()))?;
        for op in ops {
            t.apply(op)?;
        }
    }
    let ops = TransformLog::parse_ops(&a.ops.join("\n")).context("in --op")?;
    for op in ops {
        t.apply(op)?;
    }
    for &v in &a.degree_reduce {
        // earlier ops may have renumbered vertices; follow the map
        let at = t.log.map.get(v).copied().ok_or_else(|| anyhow!("vertex {v} out of range"))?;
        degree_reduce(&mut t, at)?;
    }
    let (mut h, mut log) = t.finish();
    if a.star_tree {
        let (s, more) = star_tree_transform(&h, &reg)?;
        log.ops.extend(more.ops);
        log.map = log.map.iter().map(|&v| more.map[v]).collect();
        h = s;
    }
    let dest = match &a.output {
        Some(p) if p.as_os_str() == "-" => None,
        other => other.clone(),
    };
    let mut out = open_output(&dest)?;
    out.write_all(h.to_text().as_bytes())?;
    out.flush()?;
    drop(out);
    if let Some(l) = &a.log {
        std::fs::write(l, log.to_text())?;
    }
    eprintln!(
        "{} ops: V{}E{} -> V{}E{}",
        log.ops.len(),
        g.n_vertices(),
        g.n_edges(),
        h.n_vertices(),
        h.n_edges()
    );
    if !a.check {
        return Ok(true);
    }
    let budget = ctx.cfg.oracle.budget;
    let before = ModelSpec::new(g, &reg, Sector::Star)?.with_budget(budget);
    let after = ModelSpec::new(h, &reg, Sector::Star)?.with_budget(budget);
    let reps = verify_transform("transform", &before, &after, &log.map, false)?;
    eprintln!("{}", VerificationReport::CSV_HEADER);
    for r in &reps {
        eprintln!("{}", r.csv_row());
    }
    Ok(reps.iter().all(|r| r.pass))
}

pub fn potentials(ctx: &Context, a: &PotentialArgs) -> Result<bool> {
    let id = match (&a.family, a.beta, &a.id) {
        (Some(f), Some(b), None) => format!("{f}:{b}"),
        (None, None, Some(id)) => id.clone(),
        _ => bail!("give either --family with --beta, or --id"),
    };
    let pair = PotentialRegistry::default().resolve(&id)?;
    let dest = destination(ctx, &a.out, "potential.csv");
    let mut out = open_output(&dest)?;
    header(ctx, &mut out, &format!("potentials id={}", pair.id()))?;
    match a.grid {
        Some(m) => {
            if m == 0 {
                bail!("--grid needs at least one point");
            }
            writeln!(out, "alpha,w,U,dU,d2U")?;
            for j in 0..m {
                let alpha = -std::f64::consts::PI + std::f64::consts::TAU * j as f64 / m as f64;
                let v = pair.spin.eval(alpha);
                writeln!(out, "{alpha:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", v.w, v.u, v.du, v.d2u)?;
            }
        }
        None => {
            writeln!(out, "n,c_n,V_n")?;
            for n in 0..=pair.height.n_max() as i64 {
                writeln!(out, "{n},{:.17e},{:.17e}", pair.height.c(n), pair.height.potential(n))?;
            }
        }
    }
    out.flush()?;
    Ok(true)
}
