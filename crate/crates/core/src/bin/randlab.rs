use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use randlab::runner::{self, Overrides};
use randlab::scenario::{Experiment, Scenario};

/// Runs scenario experiments on staged approximations over Cantor space.
///
/// Subcommands other than `run` execute the scenario's experiments of the
/// matching kind, with any flags given merged into their parameters. When the
/// scenario has no such experiment, one is built from the flags alone.
#[derive(Parser)]
#[command(name = "randlab", version)]
struct Cli {
    /// Seed for every experiment, replacing the ones in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Stage budget for fireworks runs, decoding horizon for Γ and KG decode stage.
    #[arg(long, global = true)]
    horizon: Option<u32>,
    /// Depth for every tree in the scenario.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Directory for report files; without it reports go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a scenario file.
    Run { scenario: PathBuf },
    /// Fireworks construction of a 1-generic.
    #[command(subcommand)]
    Fireworks(FireworksCmd),
    /// Demuth and difference-union tests.
    #[command(subcommand)]
    Tests(TestsCmd),
    /// Kučera–Gács coding into a Π⁰₁ class.
    #[command(subcommand)]
    Kg(KgCmd),
    /// Coding into a weakly 2-random and the decoder Γ.
    #[command(subcommand)]
    W2r(W2rCmd),
    /// Minimal-pair analysis for a pair of functionals.
    #[command(subcommand)]
    Minpair(MinpairCmd),
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    /// Only the named experiment of this kind.
    #[arg(long)]
    experiment: Option<String>,
}

#[derive(Args)]
struct FireworksArgs {
    #[command(flatten)]
    common: Common,
    /// Adversary enumerator names.
    #[arg(long, value_delimiter = ',')]
    adversaries: Option<Vec<String>>,
    #[arg(long)]
    k: Option<u32>,
    /// `default`, `paired` or `constant:N`.
    #[arg(long)]
    cap_bound: Option<String>,
    #[arg(long)]
    target_length: Option<usize>,
    #[arg(long)]
    universe_depth: Option<usize>,
    /// Caps for a single run.
    #[arg(long, value_delimiter = ',')]
    caps: Option<Vec<u64>>,
    /// Oracle bits to read caps from.
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Subcommand)]
enum FireworksCmd {
    /// One seeded run with its trace.
    Run(FireworksArgs),
    /// Every cap vector: exact failure probability and outcome histogram.
    Sweep(FireworksArgs),
    /// Failure sets over all oracle blocks.
    Extract(FireworksArgs),
}

#[derive(Subcommand)]
enum TestsCmd {
    /// Convert between test forms and verify the result.
    Convert {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["d2u", "u2d"])]
        direction: Option<String>,
        #[arg(long)]
        test: Option<String>,
    },
    /// Check a Demuth test's version and measure bounds.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        test: Option<String>,
    },
}

#[derive(Subcommand)]
enum KgCmd {
    Encode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tree: Option<String>,
        #[arg(long)]
        payload: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
        /// Code the bits directly, without the self-delimiting wrapper.
        #[arg(long)]
        raw: bool,
    },
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tree: Option<String>,
        #[arg(long)]
        codeword: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long)]
        stage: Option<u32>,
    },
    /// Encode and decode every payload up to a length.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tree: Option<String>,
        #[arg(long)]
        max_len: Option<usize>,
    },
}

#[derive(Subcommand)]
enum W2rCmd {
    Encode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, value_delimiter = ',')]
        payloads: Option<Vec<String>>,
    },
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        codeword: Option<String>,
        #[arg(long)]
        tmax: Option<u32>,
    },
    Claim1 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, value_delimiter = ',')]
        payloads: Option<Vec<String>>,
        #[arg(long)]
        tmax: Option<u32>,
    },
    Claim2 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        dense_opens: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        payloads: Option<Vec<String>>,
        /// Genericity columns the run stands in for.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
    },
}

#[derive(Subcommand)]
enum MinpairCmd {
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        psi: Option<String>,
        /// Prefix of the generic G.
        #[arg(long)]
        g: Option<String>,
        /// Prefix of the random X.
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        levels: Option<u64>,
    },
}

#[derive(Default)]
struct Flags(Table);

impl Flags {
    fn set(&mut self, key: &str, v: Option<impl Into<Value>>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.to_string(), v.into());
        }
        self
    }

    fn list<T: Into<Value>>(&mut self, key: &str, v: Option<Vec<T>>) -> &mut Self {
        self.set(key, v.map(|xs| Value::Array(xs.into_iter().map(Into::into).collect())))
    }

    fn int(&mut self, key: &str, v: Option<impl TryInto<i64>>) -> &mut Self {
        self.set(key, v.and_then(|x| x.try_into().ok()).map(Value::Integer))
    }
}

fn cap_bound_value(s: &str) -> Result<Value, String> {
    match s {
        "default" | "paired" => Ok(Value::String(s.to_string())),
        _ => {
            let n = s
                .strip_prefix("constant:")
                .and_then(|n| n.parse::<i64>().ok())
                .ok_or_else(|| format!("bad cap bound '{s}'; use default, paired or constant:N"))?;
            let mut t = Table::new();
            t.insert("constant".into(), Value::Integer(n));
            Ok(Value::Table(t))
        }
    }
}

fn fireworks_flags(a: &FireworksArgs) -> Result<Table, String> {
    let mut f = Flags::default();
    f.list("adversaries", a.adversaries.clone())
        .int("k", a.k)
        .int("target_length", a.target_length)
        .int("universe_depth", a.universe_depth)
        .set("oracle", a.oracle.clone());
    if let Some(caps) = &a.caps {
        f.list("caps", Some(caps.iter().map(|&c| c as i64).collect()));
    }
    if let Some(b) = &a.cap_bound {
        f.set("cap_bound", Some(cap_bound_value(b)?));
    }
    Ok(f.0)
}

fn absolute(p: &Path) -> String {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()).display().to_string()
}

/// The scenario file, the experiment kind and the flag parameters.
fn plan(cmd: Command) -> Result<(Common, &'static str, Table), String> {
    Ok(match cmd {
        Command::Run { scenario } => (
            Common {
                scenario,
                experiment: None,
            },
            "",
            Table::new(),
        ),
        Command::Fireworks(FireworksCmd::Run(a)) => {
            let t = fireworks_flags(&a)?;
            (a.common, "fireworks_run", t)
        }
        Command::Fireworks(FireworksCmd::Sweep(a)) => {
            let t = fireworks_flags(&a)?;
            (a.common, "fireworks_sweep", t)
        }
        Command::Fireworks(FireworksCmd::Extract(a)) => {
            let t = fireworks_flags(&a)?;
            (a.common, "fireworks_extract", t)
        }
        Command::Tests(TestsCmd::Convert {
            common,
            direction,
            test,
        }) => {
            let mut f = Flags::default();
            f.set("direction", direction).set("test", test);
            (common, "tests_convert", f.0)
        }
        Command::Tests(TestsCmd::Verify { common, test }) => {
            let mut f = Flags::default();
            f.set("test", test);
            (common, "verify_demuth", f.0)
        }
        Command::Kg(KgCmd::Encode {
            common,
            tree,
            payload,
            sigma,
            raw,
        }) => {
            let mut f = Flags::default();
            f.set("tree", tree)
                .set("payload", payload)
                .set("sigma", sigma)
                .set("raw", raw.then_some(true));
            (common, "kg_encode", f.0)
        }
        Command::Kg(KgCmd::Decode {
            common,
            tree,
            codeword,
            sigma,
            stage,
        }) => {
            let mut f = Flags::default();
            f.set("tree", tree)
                .set("codeword", codeword)
                .set("sigma", sigma)
                .int("stage", stage);
            (common, "kg_decode", f.0)
        }
        Command::Kg(KgCmd::Roundtrip {
            common,
            tree,
            max_len,
        }) => {
            let mut f = Flags::default();
            f.set("tree", tree).int("max_len", max_len);
            (common, "kg_roundtrip", f.0)
        }
        Command::W2r(W2rCmd::Encode {
            common,
            scheme,
            payloads,
        }) => {
            let mut f = Flags::default();
            f.set("scheme", scheme).list("payloads", payloads);
            (common, "w2r_encode", f.0)
        }
        Command::W2r(W2rCmd::Decode {
            common,
            scheme,
            codeword,
            tmax,
        }) => {
            let mut f = Flags::default();
            f.set("scheme", scheme).set("codeword", codeword).int("tmax", tmax);
            (common, "w2r_decode", f.0)
        }
        Command::W2r(W2rCmd::Claim1 {
            common,
            scheme,
            payloads,
            tmax,
        }) => {
            let mut f = Flags::default();
            f.set("scheme", scheme).list("payloads", payloads).int("tmax", tmax);
            (common, "w2r_claim1", f.0)
        }
        Command::W2r(W2rCmd::Claim2 {
            common,
            scheme,
            dense_opens,
            payloads,
            targets,
        }) => {
            let mut f = Flags::default();
            f.set("scheme", scheme)
                .set("dense_opens", dense_opens.as_deref().map(absolute))
                .list("payloads", payloads)
                .list("targets", targets);
            (common, "w2r_claim2", f.0)
        }
        Command::Minpair(MinpairCmd::Analyze {
            common,
            phi,
            psi,
            g,
            x,
            levels,
        }) => {
            let mut f = Flags::default();
            f.set("phi", phi)
                .set("psi", psi)
                .set("g", g)
                .set("x", x)
                .int("levels", levels);
            (common, "minpair_analyze", f.0)
        }
    })
}

fn select(scenario: &mut Scenario, kind: &str, only: Option<&str>, flags: &Table, seed: Option<u64>) {
    if kind.is_empty() {
        return;
    }
    let mut chosen: Vec<Experiment> = scenario
        .experiments
        .iter()
        .filter(|e| e.kind == kind && only.is_none_or(|n| e.name == n))
        .cloned()
        .collect();
    if chosen.is_empty() {
        let name = only.unwrap_or(kind);
        chosen.push(Experiment::new(name, kind, seed.unwrap_or(0), Table::new()));
    }
    for e in &mut chosen {
        for (k, v) in flags {
            e.params.insert(k.clone(), v.clone());
        }
        if flags.contains_key("dense_opens") {
            // A file given on the command line replaces inline opens.
            e.params.remove("opens");
        }
    }
    scenario.experiments = chosen;
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, kind, flags) = match plan(cli.command) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut scenario = match Scenario::load(&common.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(d) = cli.depth {
        if let Err(e) = scenario.override_depth(d) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    select(&mut scenario, kind, common.experiment.as_deref(), &flags, cli.seed);
    let base = common
        .scenario
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let overrides = Overrides {
        seed: cli.seed,
        horizon: cli.horizon,
    };
    let report = runner::run_scenario(&scenario, &base, &overrides);
    let mut stdout = std::io::stdout().lock();
    let printed = match &cli.out {
        Some(dir) => {
            if let Err(e) = report.write_to(dir) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            write!(stdout, "{}", report.summary())
        }
        None => report
            .files()
            .iter()
            .try_for_each(|(path, content)| write!(stdout, "== {path} ==\n{content}")),
    };
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    if let Err(e) = printed.and_then(|()| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if report.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
