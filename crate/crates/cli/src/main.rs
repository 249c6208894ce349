use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use paulisym::catalog::{
    self, closure, generators, verify_superintegrable, CatalogEntry, EntryReport, SuperintegrableSystem, VectorPotentialChoice, ROW_COUNTS,
    SCHEMA_VERSION,
};
use paulisym::expr::{parse_expr, ZeroTest};
use paulisym::model::{PotentialSpec, SpinOrbitMomentum, COUPLINGS};
use paulisym::numlab::scenario::Scenario;
use paulisym::numlab::{Grid, Stencil};
use paulisym::verify::gauge_check;
use paulisym::{Declarations, DiffOp, Error, Expr, Variant};

const USAGE: u8 = 64;
const INTERNAL: u8 = 70;

/// Verify Lie symmetries of Pauli-type Hamiltonians.
#[derive(Parser, Debug)]
#[command(name = "paulisym", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed of the randomized zero test.
    #[arg(long, global = true, env = "PAULISYM_SEED", default_value_t = 0x5eed)]
    seed: u64,
    /// Random trials per zero test.
    #[arg(long, global = true, default_value_t = 64, value_parser = clap::value_parser!(u64).range(16..=4096))]
    trials: u64,
    /// Relative tolerance of the zero test.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Count catalog expected failures as passes.
    #[arg(long, global = true)]
    expected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Sp,
    QrseH3,
    QrseH3a,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Sp => Variant::Sp,
            VariantArg::QrseH3 => Variant::QrseH3,
            VariantArg::QrseH3a => Variant::QrseH3a,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VecPot {
    Zero,
    Printed,
    Radial,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MomentumArg {
    Canonical,
    Kinetic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StencilArg {
    #[value(name = "2")]
    Second,
    #[value(name = "4")]
    Fourth,
}

#[derive(Args, Debug)]
struct Selector {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    table: u8,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..))]
    row: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Show the catalog.
    List {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        table: Option<u8>,
    },
    /// Verify every generator of one catalog row.
    VerifyEntry {
        #[command(flatten)]
        sel: Selector,
        #[arg(long, value_enum, default_value_t = VariantArg::Sp)]
        variant: VariantArg,
    },
    /// Verify the whole catalog.
    VerifyAll {
        #[arg(long, value_enum, default_value_t = VariantArg::Sp)]
        variant: VariantArg,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        table: Option<u8>,
    },
    /// Print the symmetry residuals of one catalog row.
    Residual {
        #[command(flatten)]
        sel: Selector,
        #[arg(long, value_enum, default_value_t = VariantArg::Sp)]
        variant: VariantArg,
        /// Restrict to one generator of the primary template.
        #[arg(long)]
        generator: Option<String>,
    },
    /// Integrals of the logarithmic-potential system.
    Superintegrable {
        #[arg(long, default_value_t = 1.0, value_parser = positive)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        #[arg(long, value_enum, default_value_t = VecPot::Zero)]
        vecpot: VecPot,
        /// Components of phi, comma separated.
        #[arg(long, default_value = "0,0,1")]
        phi: String,
        /// Coefficient of ln(r)/nu in A0.
        #[arg(long, default_value = "1/2")]
        scale: String,
        #[arg(long, value_enum, default_value_t = VariantArg::QrseH3)]
        variant: VariantArg,
    },
    /// Close a set of generators under brackets.
    Closure {
        /// Generators in the operator language, e.g. `J1` or `x1*d2 - x2*d1`.
        #[arg(required = true)]
        generators: Vec<String>,
        /// Generators treated as odd (anticommutators and squares).
        #[arg(long, value_delimiter = ',')]
        odd: Vec<String>,
    },
    /// Check gauge covariance of a Hamiltonian.
    Gauge {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4), requires = "row", conflicts_with = "config")]
        table: Option<u8>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..), requires = "table")]
        row: Option<u8>,
        /// Potential configuration as JSON.
        #[arg(long, required_unless_present = "table")]
        config: Option<PathBuf>,
        /// Gauge function.
        #[arg(long)]
        phi: String,
        #[arg(long, value_enum, default_value_t = VariantArg::Sp)]
        variant: VariantArg,
        #[arg(long, value_enum)]
        momentum: Option<MomentumArg>,
    },
    /// Grid evolution of a conservation scenario.
    Evolve {
        #[arg(long, value_parser = ["axial", "log"])]
        scenario: String,
        #[arg(long, default_value_t = 48, value_parser = clap::value_parser!(u64).range(8..=256))]
        n: u64,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        steps: u64,
        #[arg(long, value_parser = positive)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value_t = StencilArg::Fourth)]
        stencil: StencilArg,
        /// Write the trajectory of the conserved run as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be positive".into()),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Invalid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

struct Outcome {
    ok: bool,
    json: Value,
    text: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            let body = match cli.common.format {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("serializable report") + "\n",
                Format::Text => out.text,
            };
            let mut stdout = io::stdout().lock();
            if stdout.write_all(body.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(INTERNAL);
            }
            ExitCode::from(u8::from(!out.ok))
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(INTERNAL)
        }
    }
}

fn zero_test(c: &Common) -> ZeroTest {
    ZeroTest::new(c.seed).with_trials(c.trials as usize).with_tol(c.tol)
}

fn catalog_entries() -> Result<Vec<CatalogEntry>, Failure> {
    catalog::load_builtin().map_err(|e| Failure::Internal(e.to_string()))
}

fn select(entries: &[CatalogEntry], sel: &Selector) -> Result<CatalogEntry, Failure> {
    let rows = ROW_COUNTS[sel.table as usize - 1];
    catalog::find(entries, sel.table, sel.row)
        .cloned()
        .ok_or_else(|| Failure::Usage(format!("table {} has rows 1..={rows}, no row {}", sel.table, sel.row)))
}

fn couplings() -> Declarations {
    COUPLINGS.iter().fold(Declarations::new(), |d, c| d.param(c))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let c = &cli.common;
    match &cli.command {
        Command::List { table } => list(*table),
        Command::VerifyEntry { sel, variant } => {
            let entry = select(&catalog_entries()?, sel)?;
            let rep = catalog::verify_entry(&entry, (*variant).into(), &zero_test(c))?;
            let ok = if c.expected { rep.matches_expected } else { rep.reproduced };
            Ok(Outcome { ok, text: entry_text(&rep), json: envelope("verify-entry", c, serde_json::to_value(&rep).expect("report")) })
        }
        Command::VerifyAll { variant, table } => {
            let mut entries = catalog_entries()?;
            if let Some(t) = table {
                entries.retain(|e| e.table == *t);
            }
            let sum = catalog::verify_all(&entries, (*variant).into(), &zero_test(c))?;
            let ok = if c.expected { sum.all_expected() } else { sum.reproduced == sum.rows };
            let mut text = String::new();
            for e in &sum.entries {
                text.push_str(&entry_line(e));
            }
            text.push_str(&format!(
                "{} rows, variant {}: {} reproduced, {} as expected, {} agree with the tables\n",
                sum.rows,
                sum.variant.name(),
                sum.reproduced,
                sum.matches_expected,
                sum.agrees_with_tables
            ));
            Ok(Outcome { ok, text, json: envelope("verify-all", c, serde_json::to_value(&sum).expect("report")) })
        }
        Command::Residual { sel, variant, generator } => {
            let entry = select(&catalog_entries()?, sel)?;
            if let Some(g) = generator {
                if !entry.primary().generators.iter().any(|(n, _)| n == g) {
                    let names: Vec<_> = entry.primary().generators.iter().map(|(n, _)| n.as_str()).collect();
                    return Err(Failure::Usage(format!("{} has no generator `{g}` (have {})", entry.id(), names.join(", "))));
                }
            }
            let rep = catalog::verify_entry(&entry, (*variant).into(), &zero_test(c))?;
            let picked: Vec<_> = rep.primary().generators.iter().filter(|g| generator.as_ref().is_none_or(|n| *n == g.generator)).collect();
            let ok = picked.iter().all(|g| g.report.symmetry || (c.expected && !g.expected));
            let mut text = format!("{} [{}] variant {}\n", rep.id, rep.primary().label, rep.variant.name());
            for g in &picked {
                let verdict = if g.report.symmetry { "symmetry" } else { "residual" };
                let note = if g.expected { "" } else { " (expected failure)" };
                text.push_str(&format!("  {}: {verdict}{note}\n", g.generator));
                if let Some(r) = &g.report.residual {
                    text.push_str(&format!("    {r}\n"));
                }
            }
            let json = json!({
                "id": rep.id,
                "template": rep.primary().label,
                "variant": rep.variant,
                "generators": picked,
            });
            Ok(Outcome { ok, text, json: envelope("residual", c, json) })
        }
        Command::Superintegrable { nu, g, vecpot, phi, scale, variant } => {
            if *g == 0.0 || !g.is_finite() {
                return Err(Failure::Usage("--g must be finite and nonzero".into()));
            }
            let decls = couplings();
            let comps =
                phi.split(',').map(|s| parse_expr(s.trim(), &decls)).collect::<Result<Vec<_>, _>>().map_err(|e| Failure::Usage(e.to_string()))?;
            let phi: [Expr; 3] = comps.try_into().map_err(|_| Failure::Usage("--phi takes three components".into()))?;
            let scale = parse_expr(scale, &Declarations::new()).map_err(|e| Failure::Usage(e.to_string()))?;
            let vector = match vecpot {
                VecPot::Zero => VectorPotentialChoice::Zero,
                VecPot::Printed => VectorPotentialChoice::printed(phi),
                VecPot::Radial => VectorPotentialChoice::radial_field(phi),
            };
            let mut sys = SuperintegrableSystem::new(*nu, vector);
            sys.g = *g;
            sys.scale = scale;
            sys.variant = (*variant).into();
            let rep = verify_superintegrable(&sys, &zero_test(c))?;
            let ok = if c.expected { rep.matches_expected } else { rep.checks.iter().all(|k| k.symmetry) };
            let mut text = format!("A0 = {}, {}, variant {}\n", rep.scalar_potential, rep.vector_potential, rep.variant.name());
            for k in &rep.checks {
                let mark = if k.symmetry { "ok  " } else { "FAIL" };
                let note = if k.symmetry == k.expected { "" } else { " (unexpected)" };
                text.push_str(&format!("  {mark} {}{note}\n", k.name));
            }
            if let Some(alg) = &rep.algebra {
                text.push_str(&closure_text(alg));
            }
            Ok(Outcome { ok, text, json: envelope("superintegrable", c, serde_json::to_value(&rep).expect("report")) })
        }
        Command::Closure { generators: srcs, odd } => {
            let decls = couplings();
            let mut gens = Vec::new();
            for s in srcs {
                let op = DiffOp::parse(s, &decls, &generators::lookup)?;
                gens.push((s.clone(), op));
            }
            for o in odd {
                if !srcs.contains(o) {
                    return Err(Failure::Usage(format!("odd generator `{o}` is not in the set")));
                }
            }
            let odd: Vec<&str> = odd.iter().map(String::as_str).collect();
            let rep = closure(&gens, &odd, &zero_test(c))?;
            Ok(Outcome { ok: rep.closes, text: closure_text(&rep), json: envelope("closure", c, serde_json::to_value(&rep).expect("report")) })
        }
        Command::Gauge { table, row, config, phi, variant, momentum } => {
            let (mut cfg, decls) = match (table, row, config) {
                (Some(t), Some(r), _) => {
                    let entry = select(&catalog_entries()?, &Selector { table: *t, row: *r })?;
                    (entry.primary().cfg.clone(), couplings())
                }
                (_, _, Some(path)) => {
                    let src = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                    let spec: PotentialSpec = serde_json::from_str(&src).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                    (spec.build()?, spec.declarations())
                }
                _ => return Err(Failure::Usage("give --table/--row or --config".into())),
            };
            if let Some(m) = momentum {
                cfg.momentum = match m {
                    MomentumArg::Canonical => SpinOrbitMomentum::Canonical,
                    MomentumArg::Kinetic => SpinOrbitMomentum::Kinetic,
                };
            }
            let phi = parse_expr(phi, &decls).map_err(|e| Failure::Usage(e.to_string()))?;
            let variant: Variant = (*variant).into();
            let rep = gauge_check(&cfg, variant, &phi, &zero_test(c))?;
            let shifts_pauli = variant == Variant::QrseH3 && cfg.momentum == SpinOrbitMomentum::Canonical;
            let ok = if c.expected && shifts_pauli { rep.with_pauli_shift } else { rep.covariant };
            let text = format!(
                "phi = {}, variant {}, {} momentum\n  covariant: {}\n  covariant with shifted Pauli term: {}\n",
                rep.phi,
                variant.name(),
                match rep.momentum {
                    SpinOrbitMomentum::Canonical => "canonical",
                    SpinOrbitMomentum::Kinetic => "kinetic",
                },
                rep.covariant,
                rep.with_pauli_shift
            );
            Ok(Outcome { ok, text, json: envelope("gauge", c, serde_json::to_value(&rep).expect("report")) })
        }
        Command::Evolve { scenario, n, steps, dt, stencil, csv } => {
            let sc = Scenario::by_name(scenario)?;
            let base: Grid<f64> = sc.grid();
            let grid = Grid::new(*n as usize, base.half_width);
            let mut spec = sc.spec::<f64>(*steps as usize);
            if let Some(dt) = dt {
                spec.dt = *dt;
            }
            spec.stencil = match stencil {
                StencilArg::Second => Stencil::Second,
                StencilArg::Fourth => Stencil::Fourth,
            };
            let (rep, traj) = sc.run_traced(grid, &spec)?;
            if let Some(path) = csv {
                let f = File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                traj.write_csv(f)?;
            }
            let text = format!(
                "{}: {} relative drift {:.3e}, {} relative drift {:.3e}, ratio {:.1}, norm drift {:.3e}\n",
                rep.name,
                rep.conserved_name,
                rep.conserved.relative_drift,
                rep.control_name,
                rep.control.relative_drift,
                rep.ratio,
                rep.conserved.norm_drift
            );
            Ok(Outcome { ok: rep.passes(), text, json: envelope("evolve", c, serde_json::to_value(&rep).expect("report")) })
        }
    }
}

fn envelope(command: &str, c: &Common, report: Value) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "command": command,
        "seed": c.seed,
        "trials": c.trials,
        "tol": c.tol,
        "expected_mode": c.expected,
        "report": report,
    })
}

fn entry_line(e: &EntryReport) -> String {
    let p = e.primary();
    let failing: Vec<_> = p.generators.iter().filter(|g| !g.report.symmetry).map(|g| g.generator.as_str()).collect();
    let status = if e.reproduced { "ok".to_string() } else { format!("fails {}", failing.join(",")) };
    let mark = if e.matches_expected { "" } else { " (unexpected)" };
    format!("{:<6} {:<10} {status}{mark}\n", e.id, p.label)
}

fn entry_text(e: &EntryReport) -> String {
    let mut out = format!("{} variant {}\n", e.id, e.variant.name());
    for t in &e.templates {
        out.push_str(&format!("  [{}]\n", t.label));
        for g in &t.generators {
            let mark = if g.report.symmetry { "ok  " } else { "FAIL" };
            let note = if g.report.symmetry == g.expected { "" } else { " (unexpected)" };
            out.push_str(&format!("    {mark} {}{note}\n", g.generator));
        }
    }
    out.push_str(&format!("  reproduced: {}, as expected: {}, agrees with tables: {}\n", e.reproduced, e.matches_expected, e.agrees_with_tables));
    out
}

fn closure_text(rep: &catalog::ClosureReport) -> String {
    let mut out = format!("basis: {}\n", rep.basis.join(", "));
    for r in &rep.relations {
        if r.closes {
            out.push_str(&format!("  {} = {}\n", r.lhs, r.rhs()));
        } else {
            out.push_str(&format!("  {} not in span (residual {:.2e})\n", r.lhs, r.residual));
        }
    }
    out.push_str(&format!("closes: {}\n", rep.closes));
    out
}

fn list(table: Option<u8>) -> Result<Outcome, Failure> {
    let entries = catalog_entries()?;
    let mut text = String::new();
    let mut rows = Vec::new();
    for e in entries.iter().filter(|e| table.is_none_or(|t| e.table == t)) {
        let p = e.primary();
        let names: Vec<&str> = p.generators.iter().map(|(n, _)| n.as_str()).collect();
        text.push_str(&format!("{:<6} {:<10} {}\n", e.id(), p.label, names.join(" ")));
        let templates: Vec<Value> = e
            .templates
            .iter()
            .map(|t| {
                json!({
                    "label": t.label,
                    "note": t.note,
                    "generators": t.generators.iter().map(|(n, _)| n).collect::<Vec<_>>(),
                    "expected_fail": t.expected_fail,
                })
            })
            .collect();
        rows.push(json!({ "id": e.id(), "table": e.table, "row": e.row, "templates": templates }));
    }
    let json = json!({ "schema": SCHEMA_VERSION, "command": "list", "entries": rows });
    Ok(Outcome { ok: true, text, json })
}
