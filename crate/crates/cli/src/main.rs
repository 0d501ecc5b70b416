use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::bail;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use waring_circle::arcs::{classify, dirichlet_approx, window_params, WindowParams};
use waring_circle::counting::{
    count_representations, count_representations_naive, moment_integral, CountConfig,
};
use waring_circle::exp_sums::{
    complete_sum, hua_bound_ratio, ratio_scan, weyl_complete_ratio, CompleteSumSpec,
};
use waring_circle::oscillatory::{gamma_constant, gamma_oracle};
use waring_circle::singular_series::SumTables;
use waring_circle::verify::{
    end_to_end_report, equal_mu, minor_arc_sweep, predict_main_term, render_tables, sweep_point,
    theta_table, wright_table, HRule, DEFAULT_SEED,
};
use waring_circle::weyl_sums::{weyl_differencing_check, WindowSpec};
use waring_circle::{ArcPoint64, Complex64, Error, ProblemInstance64};

#[derive(Parser)]
#[command(
    name = "waring",
    version,
    about = "Circle-method computations for Waring's problem with almost proportional summands"
)]
struct Cli {
    /// Write results to this file; format chosen by extension (.csv or .json).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Memory cap for exact counters, in MB.
    #[arg(long = "budget-mem", global = true, default_value_t = 2048)]
    budget_mem: usize,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact γ(n,r) with the quadrature oracle for comparison.
    Gamma {
        #[arg(long)]
        r: u32,
    },
    /// Complete sum S_b(a,q), or a bound-ratio scan with --scan.
    Csum {
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, default_value_t = 1)]
        q: u64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        b: i64,
        /// Scan hua and weyl ratios for q = 1..=SCAN.
        #[arg(long)]
        scan: Option<u64>,
    },
    /// Short Weyl sums against the minor-arc bound.
    Weyl {
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: u64,
        /// Points to evaluate; sampled uniformly when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Also check the differencing inequality at this depth.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Window parameters and arc labels for a problem instance.
    Arcs {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
    },
    /// Local factors A(q,N) and partial sums of the singular series.
    Singular {
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 9)]
        r: u32,
        #[arg(long, value_parser = parse_u128)]
        target: u128,
        #[arg(long = "q-max", default_value_t = 1000)]
        q_max: u64,
    },
    /// Exact mean value of |T|^(2^k).
    Moments {
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: u64,
        #[arg(long)]
        k: u32,
    },
    /// Exact representation count J.
    Count {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Use the depth-first oracle instead of the convolution counter.
        #[arg(long)]
        naive: bool,
        /// Also print the predicted main term with this truncation.
        #[arg(long)]
        predict: Option<u64>,
    },
    /// The θ tables.
    Tables,
    /// Quick self-checks; exit code 2 on any violation.
    Verify,
    /// Exact counts against the predicted main term.
    Report {
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, value_delimiter = ',', value_parser = parse_u128)]
        targets: Vec<u128>,
        /// H = N^e.
        #[arg(long = "h-exp", conflicts_with = "h")]
        h_exp: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        q: u64,
    },
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, default_value_t = 3)]
    n: u32,
    /// Summand count; defaults to 2^n + 1, or the length of --mu.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_parser = parse_u128)]
    target: u128,
    #[arg(long)]
    h: f64,
    /// Weights; equal weights when absent.
    #[arg(long, value_delimiter = ',')]
    mu: Vec<f64>,
}

impl ProblemArgs {
    fn instance(&self) -> anyhow::Result<ProblemInstance64> {
        let p = if self.mu.is_empty() {
            let r = self.r.unwrap_or((1usize << self.n) + 1);
            ProblemInstance64::equal_weights(self.n, r, self.target, self.h)?
        } else {
            if let Some(r) = self.r {
                if r != self.mu.len() {
                    bail!("--r {r} disagrees with {} weights", self.mu.len());
                }
            }
            ProblemInstance64::new(self.n, self.mu.len(), self.target, self.h, self.mu.clone())?
        };
        if !p.has_standard_r() {
            eprintln!("warning: r = {} differs from 2^n + 1", p.r);
        }
        Ok(p)
    }
}

/// Integers given plainly or as exact scientific notation (`1e7`).
fn parse_u128(s: &str) -> Result<u128, String> {
    if let Ok(v) = s.parse::<u128>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not an integer: {s}"))?;
    if f >= 1.0 && f.fract() == 0.0 && f < 2f64.powi(100) {
        Ok(f as u128)
    } else {
        Err(format!("not a positive integer: {s}"))
    }
}

enum Format {
    Csv,
    Json,
}

fn format_of(path: &Path) -> anyhow::Result<Format> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        _ => bail!("output path must end in .csv or .json: {}", path.display()),
    }
}

/// Rows go to CSV on stdout by default; a summary document goes to JSON.
fn emit_rows<T: Serialize>(rows: &[T], out: Option<&Path>) -> anyhow::Result<()> {
    match out.map(format_of).transpose()? {
        Some(Format::Json) => {
            let f = std::fs::File::create(out.unwrap())?;
            serde_json::to_writer_pretty(f, rows)?;
        }
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_path(out.unwrap())?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_doc(doc: &serde_json::Value, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Format::Csv = format_of(path)? {
                bail!("this command produces a document; use a .json path");
            }
            std::fs::write(path, serde_json::to_string_pretty(doc)?)?;
        }
        None => {
            use std::io::Write;
            writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(doc)?)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CsumRow {
    q: u64,
    hua: f64,
    weyl: f64,
}

#[derive(Serialize)]
struct ArcRow {
    alpha: f64,
    a: u64,
    q: u64,
    lambda: f64,
    label: String,
}

#[derive(Serialize)]
struct SingularRow {
    q: u64,
    re: f64,
    im: f64,
    partial: f64,
}

fn uniform_points(seed: u64, count: usize) -> Vec<f64> {
    // SplitMix64; enough for spreading sample points.
    let mut state = seed;
    (0..count)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let out = cli.out.as_deref();
    let cfg = CountConfig::default().with_mem_mb(cli.budget_mem);
    match cli.cmd {
        Cmd::Gamma { r } => {
            let g = gamma_constant(r)?;
            let oracle = gamma_oracle(r)?;
            emit_doc(
                &json!({
                    "r": r,
                    "exact": format!("{}/{}", g.numerator, g.denominator),
                    "value": g.real_value,
                    "oracle": oracle,
                    "difference": (g.real_value - oracle).abs(),
                }),
                out,
            )?;
        }
        Cmd::Csum { n, a, q, b, scan } => match scan {
            Some(q_max) => {
                let hua = ratio_scan::<f64>(n, q_max, true)?;
                let weyl = ratio_scan::<f64>(n, q_max, false)?;
                let rows: Vec<CsumRow> = hua
                    .iter()
                    .zip(&weyl)
                    .map(|(h, w)| CsumRow {
                        q: h.0,
                        hua: h.1,
                        weyl: w.1,
                    })
                    .collect();
                emit_rows(&rows, out)?;
            }
            None => {
                let s: Complex64 = complete_sum(CompleteSumSpec::new(n, a, q, b))?;
                emit_doc(
                    &json!({
                        "n": n, "a": a, "q": q, "b": b,
                        "re": s.re, "im": s.im, "abs": s.norm(),
                        "hua_ratio": hua_bound_ratio::<f64>(n, q)?,
                        "weyl_ratio": weyl_complete_ratio::<f64>(n, q)?,
                    }),
                    out,
                )?;
            }
        },
        Cmd::Weyl {
            n,
            x,
            y,
            alpha,
            samples,
            k,
        } => {
            let w = WindowSpec::new(n, x, y)?;
            if !w.in_minor_range() {
                eprintln!("warning: y > x/100, outside the minor-arc lemma's range");
            }
            let wp = WindowParams::single_window(n, x as f64, y as f64)?;
            let points = if alpha.is_empty() {
                uniform_points(cli.seed, samples)
            } else {
                alpha
            };
            let rows = points
                .par_iter()
                .map(|&a| {
                    let arc = dirichlet_approx(a, wp.tau)?;
                    sweep_point(&w, &wp, a, &arc)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            emit_rows(&rows, out)?;
            if let Some(k) = k {
                for &a in &points {
                    let c = weyl_differencing_check(&w, a, k)?;
                    eprintln!(
                        "alpha={a} k={k} lhs={:.6e} rhs={:.6e} holds={}",
                        c.lhs,
                        c.rhs,
                        c.holds(1e-9)
                    );
                }
            }
        }
        Cmd::Arcs { problem, alpha } => {
            let p = problem.instance()?;
            let wp = window_params(&p)?;
            eprintln!(
                "tau={:.6e} eta={:.6e} L={:.6} H_r/L={:.4}",
                wp.tau,
                wp.eta,
                wp.log_scale,
                wp.major_q_limit()
            );
            let points = if alpha.is_empty() {
                uniform_points(cli.seed, 20)
            } else {
                alpha
            };
            let rows = points
                .iter()
                .map(|&a| {
                    let arc: ArcPoint64 = dirichlet_approx(a, wp.tau)?;
                    Ok(ArcRow {
                        alpha: a,
                        a: arc.a,
                        q: arc.q,
                        lambda: arc.lambda,
                        label: classify(&arc, &wp).to_string(),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            emit_rows(&rows, out)?;
        }
        Cmd::Singular {
            n,
            r,
            target,
            q_max,
        } => {
            let tables = SumTables::new(n, q_max)?;
            let s = tables.series(r, target, q_max)?;
            eprintln!("S(N,Q)={:.12} tail={:.3e}", s.value, s.tail_estimate);
            if !s.tail_converges {
                eprintln!("warning: r/n <= 2, the tail estimate diverges");
            }
            let rows: Vec<SingularRow> = s
                .factors
                .iter()
                .zip(s.running())
                .map(|(f, partial)| SingularRow {
                    q: f.q,
                    re: f.re,
                    im: f.im,
                    partial,
                })
                .collect();
            emit_rows(&rows, out)?;
        }
        Cmd::Moments { n, x, y, k } => {
            let w = WindowSpec::new(n, x, y)?;
            if !w.in_moment_range() {
                eprintln!("warning: y outside (sqrt x, x / ln x]");
            }
            let m = moment_integral(&w, k, &cfg)?;
            emit_doc(
                &json!({ "n": n, "x": x, "y": y, "k": k, "count": m.count.to_string() }),
                out,
            )?;
        }
        Cmd::Count {
            problem,
            naive,
            predict,
        } => {
            let p = problem.instance()?;
            let mut doc = if naive {
                let c = count_representations_naive(&p, &cfg)?;
                json!({ "count": c.to_string(), "method": "naive" })
            } else {
                let o = count_representations(&p, &cfg)?;
                let mut v = serde_json::to_value(&o)?;
                v["method"] = json!("convolution");
                v
            };
            if let Some(q) = predict {
                let pred = predict_main_term(&p, q)?;
                doc["prediction"] = serde_json::to_value(pred)?;
            }
            emit_doc(&doc, out)?;
        }
        Cmd::Tables => match out {
            None => {
                use std::io::Write;
                write!(std::io::stdout(), "{}", render_tables())?;
            }
            Some(_) => {
                let mut rows = wright_table();
                rows.extend(theta_table());
                emit_rows(&rows, out)?;
            }
        },
        Cmd::Verify => return verify(cli.seed, out),
        Cmd::Report {
            n,
            targets,
            h_exp,
            h,
            mu,
            q,
        } => {
            if targets.is_empty() {
                bail!("--targets is required");
            }
            let rule = match (h_exp, h) {
                (Some(e), None) => HRule::Power(e),
                (None, Some(h)) => HRule::Fixed(h),
                (None, None) => HRule::Power(0.97),
                _ => unreachable!("clap rejects both"),
            };
            let mu = if mu.is_empty() {
                equal_mu((1usize << n) + 1)
            } else {
                mu
            };
            let report = end_to_end_report(n, &targets, rule, &mu, q, &cfg)?;
            match out.map(format_of).transpose()? {
                Some(Format::Csv) => emit_rows(&report.rows, out)?,
                _ => emit_doc(&serde_json::to_value(&report)?, out)?,
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Fast checks of the main bounds and identities.
fn verify(seed: u64, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let mut results = Vec::new();
    let mut record = |name: &str, ok: bool, detail: String| {
        eprintln!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" });
        results.push(json!({ "check": name, "ok": ok, "detail": detail }));
    };

    let g = gamma_constant(3)?;
    record(
        "gamma(3) = 3/8",
        g.numerator == 3.into() && g.denominator == 8.into(),
        g.exact().to_string(),
    );
    let worst = (2..=20)
        .map(|r| Ok((gamma_constant(r)?.real_value - gamma_oracle(r)?).abs()))
        .collect::<Result<Vec<f64>, Error>>()?
        .into_iter()
        .fold(0.0, f64::max);
    record(
        "gamma oracle",
        worst < 1e-9,
        format!("max diff {worst:.2e}"),
    );

    let wright: Vec<String> = wright_table().into_iter().map(|r| r.theta).collect();
    let ours: Vec<String> = theta_table().into_iter().map(|r| r.theta).collect();
    record(
        "theta table",
        ours[0] == "1/30" && ours[7] == "1/46170",
        ours.join(" "),
    );
    record(
        "wright table",
        wright[0] == "1/51" && wright[7] == "1/46090",
        wright.join(" "),
    );

    let mut held = 0;
    let pts = uniform_points(seed, 100);
    for (i, &a) in pts.iter().enumerate() {
        let n = 3 + (i % 3) as u32;
        let k = 1 + (i % 2) as u32;
        let w = WindowSpec::new(n, 200 + i as u64, 16)?;
        if weyl_differencing_check(&w, a, k)?.holds(1e-9) {
            held += 1;
        }
    }
    record(
        "differencing inequality",
        held == pts.len(),
        format!("{held}/{}", pts.len()),
    );

    let sweep = minor_arc_sweep(3, 1_000_000, 10_000, 100, seed)?;
    record(
        "minor-arc bound",
        sweep.violations() == 0,
        format!(
            "{} violations in {} points",
            sweep.violations(),
            sweep.minor.len()
        ),
    );

    let dev = waring_circle::multiplicativity_check(3, 9, 1_000_003, 9, 5)?;
    record("multiplicativity", dev < 1e-8, format!("{dev:.2e}"));

    let cfg = CountConfig::default();
    let p = ProblemInstance64::equal_weights(3, 9, 9, 7.0)?;
    let c = count_representations(&p, &cfg)?.count;
    record("trivial count", c == 1u8.into(), c.to_string());

    let all_ok = results.iter().all(|r| r["ok"] == json!(true));
    if let Some(path) = out {
        emit_doc(&json!(results), Some(path))?;
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .map(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            .or_else(|| c.downcast_ref::<csv::Error>().map(|e| matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe)))
            .unwrap_or(false)
    })
}
