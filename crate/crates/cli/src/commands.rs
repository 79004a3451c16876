use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use badeconv::artifact::{self, manifest_path, write_json, RunManifest, TupleFile, SCHEMA_VERSION};
use badeconv::construct::{construct_ba_tuple, ConstructOptions, InvariantReport};
use badeconv::diophantine::{aleph, badness_scan, cf_audit, default_r0, fit_growth, minkowski_witness, CfAuditEntry};
use badeconv::estimator::{estimate, make_config, Mode};
use badeconv::model::{make_design, simulate, ChannelDesign, DesignKind, KernelProfile};
use badeconv::precision::{parse_rational, rational_to_f64, Real};
use badeconv::risk::{compare_designs, write_csv, RiskSettings};
use badeconv::signals::Signal;
use badeconv::theory::{alpha_n, alpha_n_from_ln, choose_m, nu_opt, TheoryParams};
use badeconv::{Error, Result};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use crate::{
    AlephArgs, AuditArgs, BenchArgs, Command, ConstructArgs, DesignArgs, EstimateArgs, SimulateArgs, SmoothnessArgs,
    TheoryCommand, VerifyArgs,
};

pub(crate) fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Construct(a) => construct(a),
        Command::Verify(a) => verify(a),
        Command::AuditCf(a) => audit(a),
        Command::Aleph(a) => aleph_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Theory(t) => theory(t),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn finish_manifest(mut manifest: RunManifest, at: &Path, started: Instant) -> Result<()> {
    manifest.duration_secs = started.elapsed().as_secs_f64();
    write_json(at, &manifest)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn interval(a: &str, b: &str) -> Result<(BigRational, BigRational)> {
    Ok((parse_rational(a)?, parse_rational(b)?))
}

fn load_tuple_reals(path: &Path) -> Result<(TupleFile, Vec<Real>)> {
    let file = TupleFile::load(path)?;
    let beta = file.beta_reals(path)?;
    Ok((file, beta))
}

fn construct(args: ConstructArgs) -> Result<()> {
    let started = Instant::now();
    let (a, b) = interval(&args.a, &args.b)?;
    let opts = ConstructOptions {
        precision_bits: args.precision_bits,
        ..ConstructOptions::default()
    };
    let tuple = construct_ba_tuple(args.m as usize, &a, &b, opts)?;
    let file = TupleFile::from_tuple(&tuple);
    file.save(&args.out)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(rename = "M")]
        m: usize,
        precision_bits: u32,
        beta: Vec<String>,
        invariants: &'a InvariantReport,
        all_hold: bool,
        out: String,
    }
    let invariants = file.invariants.as_ref().expect("fresh tuples carry invariants");
    print_json(&Summary {
        m: tuple.m,
        precision_bits: tuple.trace.precision_bits,
        beta: tuple.beta.iter().map(|x| x.to_decimal(20)).collect(),
        invariants,
        all_hold: invariants.all_hold(),
        out: display(&args.out),
    })?;

    let mut manifest = RunManifest::new(
        "construct",
        json!({"M": args.m, "a": args.a, "b": args.b, "precision_bits": tuple.trace.precision_bits}),
    );
    manifest.outputs.push(display(&args.out));
    finish_manifest(manifest, &manifest_path(&args.out, false), started)
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    #[serde(rename = "M")]
    m: usize,
    qmax: u64,
    min_score: f64,
    argmin_q: u64,
    /// Record-breaking `(q, score)` pairs.
    curve: Vec<(u64, f64)>,
    minkowski_bound: f64,
    witness: Option<badeconv::diophantine::MinkowskiWitness>,
    cf_audit: Vec<CfAuditEntry>,
    /// Set when some q ≤ qmax makes every qβ_i an integer.
    zero_badness: bool,
}

fn verify(args: VerifyArgs) -> Result<()> {
    let started = Instant::now();
    let (file, beta) = load_tuple_reals(&args.tuple)?;
    let scan = badness_scan(&beta, args.qmax)?;
    let witness = minkowski_witness(&beta, args.qmax)?;
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        m: file.m,
        qmax: args.qmax,
        min_score: scan.min_score,
        argmin_q: scan.argmin_q,
        curve: scan.curve,
        minkowski_bound: witness.bound,
        witness: witness.witness,
        cf_audit: cf_audit(&beta, args.depth as usize)?,
        zero_badness: scan.min_score == 0.0,
    };
    if report.zero_badness {
        eprintln!(
            "warning: min score is 0 at q = {}; the tuple is not badly approximable",
            report.argmin_q
        );
    }
    print_json(&report)?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
        let mut manifest = RunManifest::new(
            "verify",
            json!({"tuple": display(&args.tuple), "qmax": args.qmax, "depth": args.depth}),
        );
        manifest.inputs.push(display(&args.tuple));
        manifest.outputs.push(display(out));
        finish_manifest(manifest, &manifest_path(out, false), started)?;
    }
    Ok(())
}

fn audit(args: AuditArgs) -> Result<()> {
    let (_, beta) = load_tuple_reals(&args.tuple)?;
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "depth": args.depth,
        "cf_audit": cf_audit(&beta, args.depth as usize)?,
    }))
}

fn aleph_cmd(args: AlephArgs) -> Result<()> {
    if args.j_min > args.j_max {
        return Err(Error::InvalidArgument(format!(
            "j-min {} exceeds j-max {}",
            args.j_min, args.j_max
        )));
    }
    let (_, beta) = load_tuple_reals(&args.tuple)?;
    let r0 = args.r0.unwrap_or_else(default_r0);
    let reports = (args.j_min..=args.j_max)
        .map(|j| aleph(&beta, j, args.k, r0))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(u32, f64)> = reports.iter().map(|r| (r.j, r.value)).collect();
    let fit = fit_growth(&points).ok();
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "M": beta.len(),
        "k": args.k,
        "r0": r0,
        "levels": reports,
        "growth_exponent": fit.as_ref().map(|f| f.exponent),
        "growth_bound": 1.0 + 1.0 / beta.len() as f64,
    }))
}

fn build_design(args: &DesignArgs) -> Result<(ChannelDesign, KernelProfile)> {
    let (a, b) = interval(&args.a, &args.b)?;
    let kind = DesignKind::parse(&args.design)?;
    let design = if kind == DesignKind::BaTuple {
        let path = args
            .tuple
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("ba-tuple design needs --tuple".into()))?;
        let tuple = TupleFile::load(path)?.to_tuple(path)?;
        make_design(kind, tuple.m, &a, &b, Some(&tuple))?
    } else {
        let m = if kind == DesignKind::Single { 1 } else { args.m };
        make_design(kind, m, &a, &b, None)?
    };
    Ok((design, KernelProfile::boxcar(rational_to_f64(&a), rational_to_f64(&b))))
}

fn simulate_cmd(args: SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let (design, profile) = build_design(&args.design)?;
    let signal = Signal::by_id(&args.signal)?;
    let data = simulate(&design, &profile, &signal, args.n_per_channel, args.noise_sd, args.seed)?;
    let sidecar = artifact::save_dataset(&data, &args.out)?;
    print_json(&json!({
        "M": design.m(),
        "N": args.n_per_channel,
        "n": data.n(),
        "design_digest": design.digest(),
        "binary": display(&args.out),
        "sidecar": display(&sidecar),
    }))?;
    let mut manifest = RunManifest::new(
        "simulate",
        json!({
            "design": args.design.design,
            "M": design.m(),
            "tuple": args.design.tuple.as_deref().map(display),
            "a": args.design.a,
            "b": args.design.b,
            "signal": args.signal,
            "n_per_channel": args.n_per_channel,
            "noise_sd": args.noise_sd,
        }),
    );
    manifest.seed = Some(args.seed);
    manifest.inputs.extend(args.design.tuple.as_deref().map(display));
    manifest.outputs = vec![display(&args.out), display(&sidecar)];
    finish_manifest(manifest, &manifest_path(&args.out, false), started)
}

fn resolve_mode(mode: &str, eta: Option<f64>) -> Result<(Mode, f64)> {
    let mode = Mode::parse(mode)?;
    Ok((mode, eta.unwrap_or_else(|| mode.default_eta())))
}

fn estimate_cmd(args: EstimateArgs) -> Result<()> {
    let started = Instant::now();
    let (mode, eta) = resolve_mode(&args.mode, args.eta)?;
    let data = artifact::load_dataset(&args.data)?;
    let config = make_config(
        mode,
        &data.design,
        &data.profile,
        data.n_per_channel,
        data.noise_sd,
        eta,
    )?;
    let result = estimate(&data, &config)?;
    let l2_error = Signal::by_id(&data.signal_id)
        .ok()
        .map(|s| s.l2_distance_sq(&badeconv::meyer::synthesis_spectrum(&result.coeffs_thresholded)));
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "data": display(&args.data),
        "config": config,
        "l2_error_sq": l2_error,
        "result": result,
    });
    write_json(&args.out, &report)?;
    print_json(&json!({
        "mode": mode.as_str(),
        "j0": config.j0,
        "J": config.j_max,
        "survival": result.survival,
        "resonant": result.resonant,
        "l2_error_sq": l2_error,
        "out": display(&args.out),
    }))?;
    let mut manifest = RunManifest::new(
        "estimate",
        json!({"data": display(&args.data), "mode": mode.as_str(), "eta": eta}),
    );
    manifest.seed = Some(data.seed);
    manifest.inputs.push(display(&args.data));
    manifest.outputs.push(display(&args.out));
    if let Some(path) = &args.samples_out {
        let n = result.f_hat_samples.len();
        let mut text = String::from("x,f_hat\n");
        for (i, v) in result.f_hat_samples.iter().enumerate() {
            text.push_str(&format!("{},{}\n", i as f64 / n as f64, v));
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
        manifest.outputs.push(display(path));
    }
    finish_manifest(manifest, &manifest_path(&args.out, false), started)
}

/// `ba-tuple:PATH`, `uniform:M`, `rational:M` or `single`.
fn parse_design_spec(spec: &str, a: &BigRational, b: &BigRational) -> Result<(ChannelDesign, Option<PathBuf>)> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, v)) => (DesignKind::parse(k)?, Some(v)),
        None => (DesignKind::parse(spec)?, None),
    };
    let bad = || Error::InvalidArgument(format!("bad design spec {spec:?}"));
    match kind {
        DesignKind::BaTuple => {
            let path = PathBuf::from(arg.ok_or_else(bad)?);
            let tuple = TupleFile::load(&path)?.to_tuple(&path)?;
            Ok((make_design(kind, tuple.m, a, b, Some(&tuple))?, Some(path)))
        }
        DesignKind::Single => Ok((make_design(kind, 1, a, b, None)?, None)),
        DesignKind::Uniform | DesignKind::Rational => {
            let m = arg.ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?;
            Ok((make_design(kind, m, a, b, None)?, None))
        }
        DesignKind::Custom => Err(bad()),
    }
}

fn bench(args: BenchArgs) -> Result<()> {
    let started = Instant::now();
    let (mode, eta) = resolve_mode(&args.mode, args.eta)?;
    let (a, b) = interval(&args.a, &args.b)?;
    let mut designs = Vec::new();
    let mut inputs = Vec::new();
    for spec in &args.designs {
        let (d, path) = parse_design_spec(spec, &a, &b)?;
        designs.push(d);
        inputs.extend(path.as_deref().map(display));
    }
    let profile = KernelProfile::boxcar(rational_to_f64(&a), rational_to_f64(&b));
    let signal = Signal::by_id(&args.signal)?;
    let settings = RiskSettings {
        mode,
        eta,
        noise_sd: args.noise_sd,
        reps: args.reps,
        seed: args.seed,
    };
    let comparison = compare_designs(&designs, &profile, &signal, &args.n_list, &settings)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let csv_path = args.out_dir.join("risk.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_csv(&comparison.rows, file)?;
    let report_path = args.out_dir.join("report.json");
    write_json(
        &report_path,
        &json!({"schema_version": SCHEMA_VERSION, "comparison": comparison}),
    )?;

    print_json(&json!({
        "rows": comparison.rows.len(),
        "designs": comparison.designs,
        "out_dir": display(&args.out_dir),
    }))?;
    let mut manifest = RunManifest::new(
        "bench",
        json!({
            "designs": args.designs,
            "signal": args.signal,
            "n_list": args.n_list,
            "reps": args.reps,
            "mode": mode.as_str(),
            "eta": eta,
            "noise_sd": args.noise_sd,
            "a": args.a,
            "b": args.b,
        }),
    );
    manifest.seed = Some(args.seed);
    manifest.inputs = inputs;
    manifest.outputs = vec![display(&csv_path), display(&report_path)];
    finish_manifest(manifest, &manifest_path(&args.out_dir, true), started)
}

fn params(s: &SmoothnessArgs, nu: f64) -> Result<TheoryParams> {
    TheoryParams::new(s.s, s.p, s.q, s.radius, nu)
}

fn theory(cmd: TheoryCommand) -> Result<()> {
    match cmd {
        TheoryCommand::ChooseM { n, nu } => {
            let m = choose_m(n, nu)?;
            let raw = nu * (n.ln() / n.ln().ln()).sqrt();
            print_json(&json!({"n": n, "nu": nu, "raw": raw, "M": m}))
        }
        TheoryCommand::AlphaN {
            n,
            ln_n,
            smoothness,
            nu,
        } => {
            let base = params(&smoothness, 1.0)?;
            let p = base.with_nu(nu.unwrap_or_else(|| nu_opt(&base)))?;
            let a = match (n, ln_n) {
                (Some(n), _) => alpha_n(n, &p)?,
                (None, Some(l)) if l >= 16f64.ln() => alpha_n_from_ln(l, &p),
                _ => return Err(Error::InvalidArgument("need n ≥ 16".into())),
            };
            print_json(&json!({"params": p, "alpha": a, "value": a.value()}))
        }
        TheoryCommand::NuOpt { smoothness } => {
            let p = params(&smoothness, 1.0)?;
            let v = nu_opt(&p);
            print_json(&json!({"params": p.with_nu(v)?, "nu_opt": v}))
        }
    }
}
