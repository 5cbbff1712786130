//! One runner per subcommand. Each writes its result to `out`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};

use anyhow::{bail, Context, Result};
use hybridlab_core::archcount::{self, count_with, heuristic_compute, state_size, FlopMode, StateLayer};
use hybridlab_core::constructions::{compose_permutations_gdn, parity_gdn, solve_state_based_recall, HybridOrder, PointerEncoding};
use hybridlab_core::formula::{barrington_compile, eval_ast, eval_via_gdn, parse_polish, CompileOptions, FormulaAst};
use hybridlab_core::gdn::{gdn_chunkwise, gdn_scan, max_abs_diff, random_sequence, ChunkConfig, GdnHeadIO};
use hybridlab_core::quantmodel::{log_grid, loss_curve, Axis, QuantConfig, RawQuantConfig};
use hybridlab_core::scalefit::{
    bootstrap_replicate, compute_optimal, fit_scaling_law, min_compute_for_target, params_to_target, percentile_intervals,
    savings_factor, tokens_to_target, FitConfig, Interval, SavingsMode, ScalingLawParams,
};
use hybridlab_core::tasks::{gen_task, oracle_answer, render_text, RenderOptions, TaskKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::*;
use crate::formats::{read_arch_spec, read_json, read_params, read_scaling_csv, write_csv, write_json, TaskRecord};
use crate::UsageError;

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::GdnCheck(a) => gdn_check(a, out),
        Command::ConstructEval(a) => construct_eval(a, out),
        Command::Formula(a) => formula(a, out),
        Command::GenTasks(a) => gen_tasks(a, out),
        Command::Quantmodel(a) => quantmodel(a, out),
        Command::FitScaling(a) => fit_scaling(a, out),
        Command::Savings(a) => savings(a, out),
        Command::ComputeOptimal(a) => compute_optimal_cmd(a, out),
        Command::Count(a) => count(a, out),
        Command::StateSize(a) => state_size_cmd(a, out),
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, value: &T, rows: &[impl Serialize]) -> Result<()> {
    match format {
        Format::Json => write_json(out, value),
        Format::Csv => write_csv(out, rows),
    }
}

#[derive(Debug, Serialize)]
pub struct GdnCheckReport {
    pub seed: u64,
    pub d: usize,
    pub len: usize,
    pub chunk: usize,
    pub cases: u64,
    pub neg_eigenvalues: bool,
    pub tolerance: f64,
    pub max_abs_diff: f64,
    pub pass: bool,
}

fn scan_vs_chunkwise(seq: &[GdnHeadIO], cfg: &ChunkConfig) -> Result<f64> {
    let a = gdn_scan(seq, cfg)?;
    let b = gdn_chunkwise(seq, cfg)?;
    Ok(max_abs_diff(&a, &b))
}

fn worst(diffs: impl IntoIterator<Item = f64>) -> f64 {
    diffs.into_iter().fold(0.0, |m: f64, x| if m.is_nan() || x.is_nan() { f64::NAN } else { m.max(x) })
}

fn gdn_check(a: GdnCheckArgs, out: &mut dyn Write) -> Result<()> {
    if a.chunk == 0 {
        return Err(UsageError("--chunk must be at least 1".into()).into());
    }
    let cfg = ChunkConfig { chunk_len: a.chunk, neg_eigenvalues: !a.no_neg_eigenvalues };
    let (d, len, cases, diff) = match &a.input {
        Some(path) => {
            let seq: Vec<GdnHeadIO> = read_json(path)?;
            let d = seq.first().map_or(0, |t| t.head_dim());
            (d, seq.len(), 1, scan_vs_chunkwise(&seq, &cfg)?)
        }
        None => {
            if a.d == 0 || a.cases == 0 {
                return Err(UsageError("--d and --cases must be at least 1".into()).into());
            }
            let diffs = (0..a.cases)
                .into_par_iter()
                .map(|i| scan_vs_chunkwise(&random_sequence(a.d, a.len, a.seed.wrapping_add(i)), &cfg))
                .collect::<Result<Vec<_>>>()?;
            (a.d, a.len, a.cases, worst(diffs))
        }
    };
    let report = GdnCheckReport {
        seed: a.seed,
        d,
        len,
        chunk: a.chunk,
        cases,
        neg_eigenvalues: cfg.neg_eigenvalues,
        tolerance: a.tolerance,
        max_abs_diff: diff,
        pass: diff <= a.tolerance,
    };
    emit(out, a.format, &report, std::slice::from_ref(&report))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderResult {
    pub order: &'static str,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

#[derive(Debug, Serialize)]
pub struct ConstructReport {
    pub kind: &'static str,
    pub n: usize,
    pub m: usize,
    pub count: u64,
    pub seed: u64,
    /// Only meaningful for state-based recall.
    pub encoding: Option<&'static str>,
    pub results: Vec<OrderResult>,
}

#[derive(Serialize)]
struct ConstructRow<'a> {
    kind: &'a str,
    n: usize,
    m: usize,
    count: u64,
    seed: u64,
    encoding: Option<&'a str>,
    order: &'a str,
    correct: u64,
    accuracy: f64,
}

fn tally(order: &'static str, count: u64, check: impl Fn(u64) -> Result<bool> + Sync) -> Result<OrderResult> {
    let correct = (0..count)
        .into_par_iter()
        .map(|i| check(i).map(u64::from))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let accuracy = if count == 0 { f64::NAN } else { correct as f64 / count as f64 };
    Ok(OrderResult { order, correct, total: count, accuracy })
}

fn construct_eval(a: ConstructEvalArgs, out: &mut dyn Write) -> Result<()> {
    let seed = a.seed;
    let encoding = match a.encoding {
        EncodingArg::Unary => PointerEncoding::Unary,
        EncodingArg::Binary => PointerEncoding::Binary,
    };
    let (kind, results) = match a.kind {
        ConstructKind::StateBasedRecall => {
            let orders: &[(HybridOrder, &str)] = match a.order {
                OrderArg::GdnFirst => &[(HybridOrder::GdnFirst, "gdn_first")],
                OrderArg::AttnFirst => &[(HybridOrder::AttnFirst, "attn_first")],
                OrderArg::Both => &[(HybridOrder::GdnFirst, "gdn_first"), (HybridOrder::AttnFirst, "attn_first")],
            };
            let mut results = Vec::new();
            for &(order, name) in orders {
                results.push(tally(name, a.count, |i| {
                    let inst = gen_task(TaskKind::StateBasedRecall, a.n, a.m, seed.wrapping_add(i))?;
                    let got = solve_state_based_recall(&inst, order, encoding)?;
                    Ok(got as usize == oracle_answer(&inst))
                })?);
            }
            ("state_based_recall", results)
        }
        ConstructKind::StateTracking => {
            let r = tally("gdn", a.count, |i| {
                let inst = gen_task(TaskKind::StateTracking, a.n, 0, seed.wrapping_add(i))?;
                let swaps: Vec<(usize, usize)> = inst.swaps.iter().map(|&(x, y)| (x as usize, y as usize)).collect();
                let p = compose_permutations_gdn(&swaps)?;
                Ok(p.mapping()[inst.query_var] as usize == oracle_answer(&inst))
            })?;
            ("state_tracking", vec![r])
        }
        ConstructKind::Parity => {
            let r = tally("gdn", a.count, |i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
                let bits: Vec<u8> = (0..a.n).map(|_| rng.gen_range(0..=1)).collect();
                let want = bits.iter().filter(|&&b| b == 1).count() % 2;
                Ok(parity_gdn(&bits) as usize == want)
            })?;
            ("parity", vec![r])
        }
    };
    let report = ConstructReport {
        kind,
        n: a.n,
        m: a.m,
        count: a.count,
        seed,
        encoding: (kind == "state_based_recall").then_some(match encoding {
            PointerEncoding::Unary => "unary",
            PointerEncoding::Binary => "binary",
        }),
        results,
    };
    let rows: Vec<ConstructRow> = report
        .results
        .iter()
        .map(|r| ConstructRow {
            kind: report.kind,
            n: report.n,
            m: report.m,
            count: report.count,
            seed: report.seed,
            encoding: report.encoding,
            order: r.order,
            correct: r.correct,
            accuracy: r.accuracy,
        })
        .collect();
    emit(out, a.format, &report, &rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct FormulaRow {
    pub line: usize,
    pub formula: String,
    pub depth: u32,
    pub leaves: usize,
    pub eval_ast: u8,
    pub eval_gdn: u8,
    pub agree: bool,
    pub program_len: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct FormulaReport<'a> {
    seed: u64,
    max_depth: u32,
    rows: &'a [FormulaRow],
}

fn formula(a: FormulaArgs, out: &mut dyn Write) -> Result<()> {
    let items: Vec<(usize, String, FormulaAst)> = match a.random {
        Some(count) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..count as usize)
                .map(|i| {
                    let f = FormulaAst::random(&mut rng, a.depth, 0.3);
                    (i + 1, f.to_string(), f)
                })
                .collect()
        }
        None => {
            let reader: Box<dyn BufRead> = if a.input.as_os_str() == "-" {
                Box::new(BufReader::new(io::stdin()))
            } else {
                let f = File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
                Box::new(BufReader::new(f))
            };
            let mut items = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                let text = line.trim();
                if text.is_empty() || text.starts_with('#') {
                    continue;
                }
                let ast = parse_polish(text).with_context(|| format!("line {}", i + 1))?;
                items.push((i + 1, text.to_string(), ast));
            }
            items
        }
    };
    let opts = CompileOptions { max_depth: a.max_depth };
    let rows = items
        .into_par_iter()
        .map(|(line, text, ast)| {
            let program = barrington_compile(&ast, &opts).with_context(|| format!("line {line}"))?;
            let want = eval_ast(&ast);
            let got = eval_via_gdn(&program).with_context(|| format!("line {line}"))?;
            Ok(FormulaRow {
                line,
                formula: text,
                depth: ast.depth(),
                leaves: ast.leaf_count(),
                eval_ast: want,
                eval_gdn: got,
                agree: want == got,
                program_len: program.len(),
                seed: a.seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = FormulaReport { seed: a.seed, max_depth: a.max_depth, rows: &rows };
    emit(out, a.format, &report, &rows)
}

#[derive(Serialize)]
struct TaskCsvRow<'a> {
    kind: &'a str,
    n: usize,
    m: usize,
    seed: u64,
    answer: usize,
    text: &'a str,
}

fn gen_tasks(a: GenTasksArgs, out: &mut dyn Write) -> Result<()> {
    let opts = RenderOptions::new(a.reveal, a.strict_fraction)?;
    let records = (0..a.count)
        .into_par_iter()
        .map(|i| {
            let inst = gen_task(a.kind, a.n, a.m, a.seed.wrapping_add(i))?;
            Ok(TaskRecord::new(&inst, render_text(&inst, &opts)))
        })
        .collect::<Result<Vec<_>>>()?;
    match a.format {
        Format::Json => {
            for r in &records {
                serde_json::to_writer(&mut *out, r)?;
                writeln!(out)?;
            }
            Ok(())
        }
        Format::Csv => {
            let rows: Vec<TaskCsvRow> = records
                .iter()
                .map(|r| TaskCsvRow { kind: r.kind.as_str(), n: r.n, m: r.m, seed: r.seed, answer: r.answer, text: &r.text })
                .collect();
            write_csv(out, &rows)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantRow {
    pub axis_value: f64,
    pub exact: f64,
    pub closed: f64,
    pub eps: f64,
}

#[derive(Serialize)]
struct QuantReport<'a> {
    axis: Axis,
    config: RawQuantConfig,
    rows: &'a [QuantRow],
}

fn quantmodel(a: QuantmodelArgs, out: &mut dyn Write) -> Result<()> {
    let base = match &a.config {
        Some(path) => read_json::<QuantConfig>(path)?,
        None => QuantConfig::new(a.alpha, a.l0, a.delta, a.delta_p, 0.0, a.c, a.c_p, a.t, a.t_p)?,
    };
    if a.points == 0 {
        return Err(UsageError("--points must be at least 1".into()).into());
    }
    let lo = a.lo.unwrap_or(match a.axis {
        Axis::Tasks => 1.0,
        Axis::Params => base.c_p(),
        Axis::Tokens => base.t_p(),
    });
    if !(lo > 0.0 && a.hi >= lo) {
        bail!("grid needs 0 < lo <= hi, got lo = {lo}, hi = {}", a.hi);
    }
    let grid = log_grid(lo, a.hi, if lo == a.hi { 1 } else { a.points });
    let mut rows = Vec::new();
    for &eps in &a.eps {
        let cfg = base.with_eps(eps)?;
        let curve = loss_curve(a.axis, &grid, &cfg)?;
        for ((&x, &exact), &closed) in curve.grid.iter().zip(&curve.exact).zip(&curve.closed) {
            rows.push(QuantRow { axis_value: x, exact, closed, eps });
        }
    }
    let report = QuantReport { axis: a.axis, config: base.into(), rows: &rows };
    emit(out, a.format, &report, &rows)
}

#[derive(Debug, Serialize)]
pub struct CiReport {
    pub level: f64,
    #[serde(rename = "E")]
    pub e: Interval,
    #[serde(rename = "A")]
    pub a: Interval,
    pub alpha: Interval,
    #[serde(rename = "B")]
    pub b: Interval,
    pub beta: Interval,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub params: ScalingLawParams,
    pub ci: Option<CiReport>,
    pub r2: f64,
    pub objective: f64,
    pub e_below_min_loss: bool,
    pub a_opt: f64,
    pub b_opt: f64,
    pub points: usize,
    pub huber_delta: f64,
    pub fixed_exponents: Option<(f64, f64)>,
    pub bootstrap: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct FitRow {
    parameter: &'static str,
    estimate: f64,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
    r2: f64,
    seed: u64,
}

fn fit_scaling(a: FitScalingArgs, out: &mut dyn Write) -> Result<()> {
    let fixed = match a.fixed_exponents.as_deref() {
        None => None,
        Some(&[alpha, beta]) => Some((alpha, beta)),
        Some(_) => return Err(UsageError("--fixed-exponents takes exactly two values: alpha,beta".into()).into()),
    };
    let file = File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let points = read_scaling_csv(file).with_context(|| format!("reading {}", a.input.display()))?;
    let cfg = FitConfig {
        huber_delta: a.huber_delta,
        bootstrap_n: a.bootstrap.max(1),
        ci_level: a.ci_level,
        fixed_exponents: fixed,
        seed: a.seed,
        ..FitConfig::default()
    };
    let fit = fit_scaling_law(&points, &cfg)?;
    let ci = if a.bootstrap > 0 {
        let reps = (0..a.bootstrap as u64)
            .into_par_iter()
            .map(|i| bootstrap_replicate(&points, &fit.params, &cfg, i))
            .collect::<Result<Vec<_>, _>>()?;
        let [e, a_, alpha, b, beta] = percentile_intervals(&reps, cfg.ci_level);
        Some(CiReport { level: cfg.ci_level, e, a: a_, alpha, b, beta })
    } else {
        None
    };
    let p = fit.params;
    let intervals = ci.as_ref().map(|c| [c.e, c.a, c.alpha, c.b, c.beta]);
    let rows: Vec<FitRow> = hybridlab_core::scalefit::PARAM_NAMES
        .iter()
        .zip(p.as_array())
        .enumerate()
        .map(|(i, (&name, v))| FitRow {
            parameter: name,
            estimate: v,
            ci_lo: intervals.map(|iv| iv[i].lo),
            ci_hi: intervals.map(|iv| iv[i].hi),
            r2: fit.diagnostics.r2,
            seed: a.seed,
        })
        .collect();
    let report = FitReport {
        params: p,
        ci,
        r2: fit.diagnostics.r2,
        objective: fit.diagnostics.objective,
        e_below_min_loss: fit.diagnostics.e_below_min_loss,
        a_opt: p.a_opt(),
        b_opt: p.b_opt(),
        points: points.len(),
        huber_delta: a.huber_delta,
        fixed_exponents: fixed,
        bootstrap: a.bootstrap,
        seed: a.seed,
    };
    emit(out, a.format, &report, &rows)
}

#[derive(Debug, Serialize)]
pub struct SavingsReport {
    pub mode: &'static str,
    pub target: f64,
    pub n: Option<f64>,
    pub d: Option<f64>,
    /// Tokens, parameters or FLOPs the reference law needs.
    pub reference: f64,
    pub arch: f64,
    pub savings: f64,
}

fn savings(a: SavingsArgs, out: &mut dyn Write) -> Result<()> {
    let mode = match a.mode {
        SavingsModeArg::Tokens => SavingsMode::Tokens {
            n: a.n.ok_or_else(|| UsageError("--mode tokens needs --n".into()))?,
            target: a.target,
        },
        SavingsModeArg::Params => SavingsMode::Params {
            d: a.d.ok_or_else(|| UsageError("--mode params needs --d".into()))?,
            target: a.target,
        },
        SavingsModeArg::Compute => SavingsMode::Compute { target: a.target },
    };
    let r = read_params(&a.reference)?;
    let h = read_params(&a.arch)?;
    let (name, need_r, need_h) = match mode {
        SavingsMode::Tokens { n, target } => ("tokens", tokens_to_target(&r, n, target)?, tokens_to_target(&h, n, target)?),
        SavingsMode::Params { d, target } => ("params", params_to_target(&r, d, target)?, params_to_target(&h, d, target)?),
        SavingsMode::Compute { target } => {
            let x = min_compute_for_target(&r, target)?;
            let y = min_compute_for_target(&h, target)?;
            ("compute", 6.0 * x.n * x.d, 6.0 * y.n * y.d)
        }
    };
    let report = SavingsReport {
        mode: name,
        target: a.target,
        n: if name == "tokens" { a.n } else { None },
        d: if name == "params" { a.d } else { None },
        reference: need_r,
        arch: need_h,
        savings: savings_factor(&r, &h, mode)?,
    };
    emit(out, a.format, &report, std::slice::from_ref(&report))
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalRow {
    pub law: &'static str,
    pub compute: f64,
    pub n: f64,
    pub d: f64,
    pub loss: f64,
    pub a_opt: f64,
    pub b_opt: f64,
}

#[derive(Serialize)]
struct OptimalReport<'a> {
    results: &'a [OptimalRow],
}

fn compute_optimal_cmd(a: ComputeOptimalArgs, out: &mut dyn Write) -> Result<()> {
    let mut laws = vec![("reference", read_params(&a.reference)?)];
    if let Some(path) = &a.arch {
        laws.push(("arch", read_params(path)?));
    }
    let mut rows = Vec::new();
    for (law, p) in &laws {
        for &c in &a.compute {
            let opt = compute_optimal(p, c)?;
            rows.push(OptimalRow { law, compute: c, n: opt.n, d: opt.d, loss: opt.loss, a_opt: p.a_opt(), b_opt: p.b_opt() });
        }
    }
    emit(out, a.format, &OptimalReport { results: &rows }, &rows)
}

#[derive(Debug, Serialize)]
pub struct CountOutput {
    #[serde(flatten)]
    pub report: archcount::CountReport,
    pub seq_len: usize,
    pub d_mlp: usize,
    pub h_gdn: usize,
    /// `6·N·D` with `N` the total parameter count.
    pub heuristic_train_compute: Option<f64>,
}

#[derive(Serialize)]
struct CountRow {
    total_params: usize,
    non_embedding_params: usize,
    embedding_params: usize,
    layers: usize,
    flop_mode: &'static str,
    softmax: bool,
    seq_len: usize,
    flops_fwd_per_token: f64,
    train_compute: Option<f64>,
    heuristic_train_compute: Option<f64>,
}

fn count(a: CountArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = read_arch_spec(&a.spec)?;
    if let Some(s) = a.seq_len {
        spec.seq_len = s;
    }
    let layers = spec.layers()?;
    let mode = a.mode.unwrap_or_else(|| FlopMode::train_for(&layers));
    let report = count_with(&spec, mode, a.softmax, a.tokens)?;
    let heuristic = a.tokens.map(|t| heuristic_compute(report.non_embedding_params as f64, t));
    let row = CountRow {
        total_params: report.total_params,
        non_embedding_params: report.non_embedding_params,
        embedding_params: report.embedding_params,
        layers: report.layers.len(),
        flop_mode: mode.as_str(),
        softmax: a.softmax,
        seq_len: spec.seq_len,
        flops_fwd_per_token: report.flops_fwd_per_token,
        train_compute: report.train_compute,
        heuristic_train_compute: heuristic,
    };
    let output = CountOutput { report, seq_len: spec.seq_len, d_mlp: spec.d_mlp(), h_gdn: spec.h_gdn(), heuristic_train_compute: heuristic };
    emit(out, a.format, &output, &[row])
}

#[derive(Debug, Clone, Serialize)]
pub struct StateRow {
    pub kind: &'static str,
    pub elements: u64,
    pub bytes: u64,
    pub mib: f64,
    pub precision_bytes: u64,
    pub ratio_to_gdn: Option<f64>,
}

fn need(v: Option<usize>, flag: &str, kind: &str) -> Result<usize> {
    v.ok_or_else(|| UsageError(format!("--kind {kind} needs --{flag}")).into())
}

fn state_row(kind: &'static str, layer: StateLayer, precision: u64, gdn: Option<u64>) -> Result<StateRow> {
    let s = state_size(layer, precision)?;
    Ok(StateRow {
        kind,
        elements: s.elements,
        bytes: s.bytes,
        mib: s.mib(),
        precision_bytes: precision,
        ratio_to_gdn: gdn.map(|g| s.elements as f64 / g as f64),
    })
}

fn state_size_cmd(a: StateSizeArgs, out: &mut dyn Write) -> Result<()> {
    let p = a.precision_bytes;
    if a.table {
        let gdn = StateLayer::Gdn { heads: 30, d_k: 96, d_v: 192 };
        let g = state_size(gdn, p)?.elements;
        let rows = vec![
            state_row("mha", StateLayer::Mha { seq_len: 32768, kv_heads: 32, d_head: 128 }, p, Some(g))?,
            state_row("gqa", StateLayer::Gqa { seq_len: 32768, kv_heads: 8, d_head: 128 }, p, Some(g))?,
            state_row("swa", StateLayer::Swa { window: 4096, kv_heads: 8, d_head: 128 }, p, Some(g))?,
            state_row("gdn", gdn, p, Some(g))?,
        ];
        return emit(out, a.format, &rows, &rows);
    }
    let kind = a.kind.context("--kind is required")?;
    let (name, layer) = match kind {
        StateKind::Mha => (
            "mha",
            StateLayer::Mha { seq_len: need(a.seq_len, "seq-len", "mha")?, kv_heads: need(a.kv_heads, "kv-heads", "mha")?, d_head: need(a.d_head, "d-head", "mha")? },
        ),
        StateKind::Gqa => (
            "gqa",
            StateLayer::Gqa { seq_len: need(a.seq_len, "seq-len", "gqa")?, kv_heads: need(a.kv_heads, "kv-heads", "gqa")?, d_head: need(a.d_head, "d-head", "gqa")? },
        ),
        StateKind::Swa => (
            "swa",
            StateLayer::Swa { window: need(a.window, "window", "swa")?, kv_heads: need(a.kv_heads, "kv-heads", "swa")?, d_head: need(a.d_head, "d-head", "swa")? },
        ),
        StateKind::Gdn => (
            "gdn",
            StateLayer::Gdn { heads: need(a.heads, "heads", "gdn")?, d_k: need(a.d_k, "d-k", "gdn")?, d_v: need(a.d_v, "d-v", "gdn")? },
        ),
    };
    let row = state_row(name, layer, p, None)?;
    emit(out, a.format, &row, std::slice::from_ref(&row))
}
