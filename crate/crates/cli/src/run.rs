use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use twistrec::curve::{CurveModel, RamLocation};
use twistrec::deform::{dm_cubic, family_with, rauch_check, taylor_check, TaylorOpts};
use twistrec::elliptic::{j_invariant, reduce_tau};
use twistrec::hitchin::dimension_table;
use twistrec::kernels::{bergman, cauchy_kernel, residue_at, symmetrize_b};
use twistrec::periods::{cycle_basis, normalized_basis, period_data, CycleOpts};
use twistrec::quad::QuadOpts;
use twistrec::recursion::{check_properties, evaluate_w};
use twistrec::{CheckRecord, CurveFamily, CycleBasis, Engine, Mode, Point, RecursionSetup, SpectralCurve};

use crate::config::{qpoly, Command, RunConfig, Suite};
use crate::CliError;

/// What a run produced: text for stdout, written files, and whether every
/// enabled check passed.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

struct Sink {
    stdout: String,
    files: Vec<PathBuf>,
    dir: PathBuf,
}

impl Sink {
    fn line(&mut self, s: impl AsRef<str>) {
        self.stdout.push_str(s.as_ref());
        self.stdout.push('\n');
    }

    fn write(&mut self, name: &str, body: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::File::create(&path)?.write_all(body)?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output.dir)?;
    let mut sink = Sink { stdout: String::new(), files: Vec::new(), dir: cfg.output.dir.clone() };
    sink.write("config.json", cfg.to_json().as_bytes())?;
    let pass = match cfg.command {
        Command::Dims => dims(cfg, &mut sink)?,
        Command::Recursion => recursion(cfg, &mut sink)?,
        Command::Periods => periods(cfg, &mut sink)?,
        Command::Verify => verify(cfg, &mut sink)?,
    };
    Ok(Outcome { stdout: sink.stdout, files: sink.files, pass })
}

fn dims(cfg: &RunConfig, sink: &mut Sink) -> Result<bool, CliError> {
    let t = dimension_table(&cfg.moduli)?;
    sink.line(format!("moduli_dim {}", t.moduli_dim));
    sink.line(format!("hitchin_base_dim {}", t.hitchin_base_dim));
    sink.line(format!("effective_base_dim {}", t.effective_base_dim));
    sink.line(format!("spectral_genus {}", t.spectral_genus));
    let body = serde_json::to_string(&json!({ "moduli": cfg.moduli, "table": t })).expect("json");
    sink.write("dims.json", format!("{body}\n").as_bytes())?;
    Ok(true)
}

fn cycles(cfg: &RunConfig, curve: &SpectralCurve) -> Result<Option<CycleBasis>, CliError> {
    if curve.genus == 0 {
        return Ok(None);
    }
    Ok(Some(cycle_basis(curve, CycleOpts { separation: cfg.separation, pairs: None })?))
}

fn engine(cfg: &RunConfig, curve: &SpectralCurve, cb: Option<&CycleBasis>) -> Result<std::sync::Arc<Engine>, CliError> {
    let r = &cfg.recursion;
    let setup = RecursionSetup {
        variant: r.variant,
        normalization: r.normalization,
        w01_factor: qpoly(&r.w01_factor)?,
        contour_nodes: r.contour_nodes,
        series_order: r.series_order,
        ..RecursionSetup::default()
    };
    Ok(Engine::new(curve, cb, setup)?)
}

/// Stable pairs `(g, n)` selected by the recursion settings.
fn pairs(cfg: &RunConfig) -> Vec<(u32, u32)> {
    let r = &cfg.recursion;
    if r.single {
        return vec![(r.g_max, r.n_max)];
    }
    let mut out = Vec::new();
    for g in 0..=r.g_max {
        for n in 1..=r.n_max {
            if 2 * g + n > 2 && 2 * g + n <= r.max_weight + 2 {
                out.push((g, n));
            }
        }
    }
    out
}

/// Seeded sample points away from ramification and twist zeros.
struct Sampler {
    rng: ChaCha8Rng,
    avoid: Vec<C>,
    hyper: Option<f64>,
}

impl Sampler {
    fn new(cfg: &RunConfig, curve: &SpectralCurve) -> Result<Self, CliError> {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        match &curve.model {
            CurveModel::Hyperelliptic { .. } => {
                let scale = curve.branch_points().iter().map(|b| b.norm()).fold(1.0, f64::max);
                let avoid = curve.twist.as_ref().map(|t| t.zeros.clone()).unwrap_or_default();
                Ok(Sampler { rng, avoid, hyper: Some(scale) })
            }
            _ => {
                let avoid = curve
                    .ramification_points()?
                    .iter()
                    .filter_map(|r| match r.location {
                        RamLocation::Z(z) => Some(z),
                        _ => None,
                    })
                    .collect();
                Ok(Sampler { rng, avoid, hyper: None })
            }
        }
    }

    fn point(&mut self, curve: &SpectralCurve, taken: &[Point]) -> Point {
        loop {
            let (lo, hi, scale) = match self.hyper {
                Some(s) => (1.5, 1.8, s),
                None => (0.3, 2.5, 1.0),
            };
            let u = C::from_polar(scale * self.rng.random_range(lo..hi), self.rng.random_range(0.0..2.0 * PI));
            let sheet = if self.rng.random_bool(0.5) { 1 } else { -1 };
            if self.avoid.iter().any(|a| (u - a).norm() < 0.25) || taken.iter().any(|p| (p.x_coord() - u).norm() < 0.1) {
                continue;
            }
            return match self.hyper {
                Some(_) => curve.point_over(u, sheet),
                None => Point::Z(u),
            };
        }
    }

    fn tuple(&mut self, curve: &SpectralCurve, n: usize) -> Vec<Point> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let p = self.point(curve, &out);
            out.push(p);
        }
        out
    }
}

fn recursion(cfg: &RunConfig, sink: &mut Sink) -> Result<bool, CliError> {
    let curve = cfg.build_curve()?;
    let cb = cycles(cfg, &curve)?;
    let eng = engine(cfg, &curve, cb.as_ref())?;
    let mut sampler = Sampler::new(cfg, &curve)?;
    let mut exact_lines = String::new();
    for (g, n) in pairs(cfg) {
        match cfg.recursion.mode {
            Mode::Exact => {
                let text = eng.compute_w(g, n, Mode::Exact)?.serialize()?;
                sink.line(format!("W_{{{g},{n}}} = {text}"));
                exact_lines.push_str(&serde_json::to_string(&json!({ "g": g, "n": n, "w": text })).expect("json"));
                exact_lines.push('\n');
            }
            Mode::Evaluable => {
                let name = format!("{}_g{g}_n{n}.csv", cfg.output.csv_prefix);
                let rows = sample_csv(&eng, &curve, &mut sampler, g, n, cfg.samples)?;
                sink.write(&name, &rows)?;
                sink.line(format!("W_{{{g},{n}}}: {} rows -> {name}", cfg.samples));
            }
        }
    }
    if !exact_lines.is_empty() {
        sink.write("recursion.jsonl", exact_lines.as_bytes())?;
    }
    Ok(true)
}

fn sample_csv(eng: &Engine, curve: &SpectralCurve, sampler: &mut Sampler, g: u32, n: u32, rows: usize) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let xy = sampler.hyper.is_some();
    let mut header = Vec::new();
    for i in 0..n {
        if xy {
            header.extend([format!("x{i}_re"), format!("x{i}_im"), format!("y{i}_re"), format!("y{i}_im")]);
        } else {
            header.extend([format!("z{i}_re"), format!("z{i}_im")]);
        }
    }
    let unit = if xy { "dx" } else { "dz" };
    header.extend([format!("w_per_{unit}_re"), format!("w_per_{unit}_im")]);
    w.write_record(&header).map_err(csv_err)?;
    for _ in 0..rows {
        let pts = sampler.tuple(curve, n as usize);
        let v = eng.eval_w(g, n, &pts)?;
        let mut rec = Vec::new();
        for p in &pts {
            let (x, y) = curve.xy(*p);
            match p {
                Point::Z(z) => rec.extend([z.re.to_string(), z.im.to_string()]),
                _ => rec.extend([x.re.to_string(), x.im.to_string(), y.re.to_string(), y.im.to_string()]),
            }
        }
        rec.extend([v.re.to_string(), v.im.to_string()]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn c2(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn periods(cfg: &RunConfig, sink: &mut Sink) -> Result<bool, CliError> {
    let curve = cfg.build_curve()?;
    let cb = cycles(cfg, &curve)?.ok_or_else(|| CliError::Config("periods need a genus-1 curve".into()))?;
    let d = period_data(&curve, &cb)?;
    let out = json!({
        "tau": c2(d.tau),
        "tau_reduced": c2(reduce_tau(d.tau)),
        "j": c2(j_invariant(d.tau)),
        "a_period": c2(d.a_period),
        "b_period": c2(d.b_period),
        "lambda": d.lambda.map(c2),
        "cycles": cb.to_json(),
        "conventions": { "a_period": "oint_A dx/y", "tau": "oint_B v with oint_A v = 1", "lambda": "oint_A y dx / s" },
    });
    let text = serde_json::to_string(&out).expect("json");
    sink.line(&text);
    sink.write("periods.json", format!("{text}\n").as_bytes())?;
    Ok(true)
}

fn family(cfg: &RunConfig) -> Result<CurveFamily, CliError> {
    let base = cfg.build_curve()?;
    let [re, im] = cfg.family.direction;
    Ok(family_with(&base, C::new(re, im), cfg.family.radius, CycleOpts { separation: cfg.separation, pairs: None })?)
}

fn verify(cfg: &RunConfig, sink: &mut Sink) -> Result<bool, CliError> {
    let mut suites = cfg.suite.clone();
    suites.sort();
    suites.dedup();
    let mut records = Vec::new();
    for s in suites {
        match s {
            Suite::Properties => properties(cfg, &mut records)?,
            Suite::Rauch => rauch(cfg, &mut records)?,
            Suite::DmCubic => cubic(cfg, &mut records)?,
            Suite::Taylor => {
                let f = family(cfg)?;
                let opts = TaylorOpts { order: cfg.family.quadrature_order, panels: cfg.family.quadrature_panels, step: cfg.family.steps };
                records.push(taylor_check(&f, opts, cfg.tolerances.taylor)?);
            }
            Suite::BergmanNormalization => bergman_normalization(cfg, &mut records)?,
        }
    }
    let header = CheckRecord {
        check: "config".into(),
        lhs: C::new(0.0, 0.0),
        rhs: C::new(0.0, 0.0),
        rel_err: 0.0,
        tolerance: 0.0,
        pass: true,
        constants_resolved: serde_json::to_value(cfg).expect("json"),
    };
    let mut report = serde_json::to_string(&header).expect("json");
    report.push('\n');
    for r in &records {
        let line = serde_json::to_string(r).expect("json");
        sink.line(&line);
        report.push_str(&line);
        report.push('\n');
    }
    sink.write(&cfg.output.report, report.as_bytes())?;
    Ok(records.iter().all(|r| r.pass))
}

fn properties(cfg: &RunConfig, out: &mut Vec<CheckRecord>) -> Result<(), CliError> {
    let curve = cfg.build_curve()?;
    let cb = cycles(cfg, &curve)?;
    let eng = engine(cfg, &curve, cb.as_ref())?;
    let mode = cfg.recursion.mode;
    if mode == Mode::Exact && !eng.supports_exact() {
        return Err(CliError::Config("exact mode is not available on this curve; use evaluable".into()));
    }
    let tol = cfg.tolerances.properties;
    let mut sampler = Sampler::new(cfg, &curve)?;
    for (g, n) in pairs(cfg) {
        let w = eng.compute_w(g, n, mode)?;
        let samples: Vec<Vec<Point>> = (0..cfg.samples).map(|_| sampler.tuple(&curve, n as usize)).collect();
        let rep = check_properties(&w, &samples)?;
        let consts = json!({ "mode": mode, "variant": cfg.recursion.variant, "normalization": cfg.recursion.normalization });
        let zero = C::new(0.0, 0.0);
        let re = |v: f64| C::new(v, 0.0);
        out.push(CheckRecord::vanishing(&format!("symmetry W_{{{g},{n}}}"), re(rep.symmetry_defect), zero, tol, consts.clone()));
        out.push(CheckRecord::vanishing(&format!("oddness W_{{{g},{n}}}"), re(rep.oddness_defect), zero, tol, consts.clone()));
        let poles_ok = rep.pole_centers_ok && rep.max_pole_order <= rep.pole_order_bound;
        out.push(CheckRecord {
            check: format!("pole order W_{{{g},{n}}}"),
            lhs: re(rep.max_pole_order as f64),
            rhs: re(rep.pole_order_bound as f64),
            rel_err: 0.0,
            tolerance: tol,
            pass: poles_ok,
            constants_resolved: json!({ "pole_centers_ok": rep.pole_centers_ok, "relation": "lhs <= rhs" }),
        });
        if mode == Mode::Exact {
            let mut worst = CheckRecord::new(&format!("exact vs evaluable W_{{{g},{n}}}"), zero, zero, tol, consts.clone());
            for pts in &samples {
                let a = evaluate_w(&w, pts)?;
                let b = eng.eval_w(g, n, pts)?;
                let r = CheckRecord::new(&worst.check, a, b, tol, consts.clone());
                if r.rel_err >= worst.rel_err {
                    worst = r;
                }
            }
            out.push(worst);
        }
    }
    Ok(())
}

fn rauch(cfg: &RunConfig, out: &mut Vec<CheckRecord>) -> Result<(), CliError> {
    let f = family(cfg)?;
    let mut sampler = Sampler::new(cfg, &f.base)?;
    for i in 0..cfg.family.rauch_pairs {
        let pq = sampler.tuple(&f.base, 2);
        let mut r = rauch_check(&f, pq[0], pq[1], cfg.family.steps, cfg.tolerances.rauch)?;
        r.check = format!("rauch[{i}]");
        out.push(r);
    }
    Ok(())
}

fn cubic(cfg: &RunConfig, out: &mut Vec<CheckRecord>) -> Result<(), CliError> {
    let f = family(cfg)?;
    let rep = dm_cubic(&f, cfg.family.steps, cfg.tolerances.dm_cubic);
    let consts = json!({ "degenerate": rep.degenerate, "errors": rep.errors, "cubic": "c = d tau / d lambda" });
    let named = [("fd", rep.c_fd), ("res", rep.c_res), ("int", rep.c_int)];
    if rep.degenerate {
        for (name, v) in named {
            let v = v.unwrap_or(C::new(0.0, 0.0));
            out.push(CheckRecord::vanishing(&format!("dm_cubic_{name} vanishes"), v, C::new(0.0, 0.0), cfg.tolerances.degenerate, consts.clone()));
        }
        return Ok(());
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b) = match (named[i].1, named[j].1) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(CliError::NonConvergence(format!("cubic: {}", rep.errors.join("; ")))),
        };
        out.push(CheckRecord::new(&format!("dm_cubic_{}_{}", named[i].0, named[j].0), a, b, cfg.tolerances.dm_cubic, consts.clone()));
    }
    Ok(())
}

fn bergman_normalization(cfg: &RunConfig, out: &mut Vec<CheckRecord>) -> Result<(), CliError> {
    let curve = cfg.build_curve()?;
    let cb = cycles(cfg, &curve)?.ok_or_else(|| CliError::Config("bergman-normalization needs a genus-1 curve".into()))?;
    let b = symmetrize_b(&curve, &bergman(&curve, Some(&cb))?);
    let v = normalized_basis(&curve, &cb)?;
    let mut sampler = Sampler::new(cfg, &curve)?;
    let opts = QuadOpts::default();
    let zero = C::new(0.0, 0.0);
    let consts = json!({ "a_period": "oint_A B = 0", "b_period": "oint_B B = 2 pi i v" });
    let failure = std::sync::Mutex::new(None);
    let form = |p2: Point| {
        let (b, failure) = (&b, &failure);
        move |x: C, y: C| match b.eval(Point::XY { x, y }, p2) {
            Ok(v) => v,
            Err(e) => {
                *failure.lock().unwrap() = Some(e);
                zero
            }
        }
    };
    let tol = &cfg.tolerances;
    for i in 0..cfg.samples {
        let p2 = sampler.point(&curve, &[]);
        let (x2, y2) = curve.xy(p2);
        let a = cb.a.integrate(&curve, &form(p2), opts)?;
        let bp = cb.b.integrate(&curve, &form(p2), opts)?;
        out.push(CheckRecord::vanishing(&format!("bergman_a_period[{i}]"), a, zero, tol.bergman_a, consts.clone()));
        let want = C::new(0.0, 2.0 * PI) * v.per_dx(x2, y2);
        out.push(CheckRecord::new(&format!("bergman_b_period[{i}]"), bp, want, tol.bergman_b, consts.clone()));
    }
    if let Some(e) = failure.lock().unwrap().take() {
        return Err(e.into());
    }
    let pq = sampler.tuple(&curve, 2);
    let (pa, pb) = (pq[0], pq[1]);
    let w = cauchy_kernel(&curve, &b, pa, pb)?;
    let radius = 0.1 * (pa.x_coord() - pb.x_coord()).norm().min(1.0);
    let consts = json!({ "cauchy": "residue +1 at a, -1 at b" });
    out.push(CheckRecord::new("cauchy_residue_a", residue_at(&curve, &w, pa, radius)?, C::new(1.0, 0.0), cfg.tolerances.residue, consts.clone()));
    out.push(CheckRecord::new("cauchy_residue_b", residue_at(&curve, &w, pb, radius)?, C::new(-1.0, 0.0), cfg.tolerances.residue, consts));
    Ok(())
}
