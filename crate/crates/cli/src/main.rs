use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spploc::harness::{
    fit_scaling, report_text, run_experiment, summary_table, target_exponent, write_csv, ConfigError,
    ExperimentConfig, ExperimentError, FitModel, ProtocolKind,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_ABORTED: u8 = 3;
const EXIT_IO: u8 = 1;

/// Run spatial population protocol experiments and write one CSV row per trial.
#[derive(Debug, Parser)]
#[command(name = "spploc", version)]
struct Cli {
    /// key=value config file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// kcontact, leaderloc, improved1d, selfstab or vector
    #[arg(long)]
    protocol: Option<String>,
    /// Population sizes, repeatable or comma-separated (2^10 accepted)
    #[arg(long = "n", value_name = "N")]
    n: Vec<String>,
    /// Dimension of the space
    #[arg(long)]
    k: Option<String>,
    /// Contact threshold of the epidemic
    #[arg(long = "k-contact")]
    k_contact: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Base seed; every trial derives its own streams from it
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Budget in multiples of the protocol's time bound
    #[arg(long = "budget-mult")]
    budget_mult: Option<String>,
    /// Buffer line constant D (selfstab)
    #[arg(long = "buffer-d")]
    buffer_d: Option<String>,
    /// Deadline constant C_d (selfstab)
    #[arg(long = "deadline-c")]
    deadline_c: Option<String>,
    /// Adversarial recipe (selfstab) or label recipe (vector)
    #[arg(long)]
    recipe: Option<String>,
    /// `uniform` or a position file path
    #[arg(long)]
    positions: Option<String>,
    /// CSV output path; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fit the scaling law and compare the exponent with this target
    /// (`theory` uses the protocol's own bound)
    #[arg(long, value_name = "TARGET")]
    fit: Option<String>,
    /// Allowed deviation from the fit target
    #[arg(long = "fit-tol", default_value_t = 0.1)]
    fit_tol: f64,
    /// Print per-n medians and failure counts
    #[arg(long)]
    summary: bool,
    /// Largest n for the exhaustive silence check
    #[arg(long = "silence-max-n")]
    silence_max_n: Option<String>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::new(ProtocolKind::KContact);
    let mut protocol_given = false;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        protocol_given = spploc::harness::parse_key_values(&text)
            .map_err(|e| e.to_string())?
            .iter()
            .any(|(k, _)| k == "protocol");
        cfg.apply_file_text(&text).map_err(|e| e.to_string())?;
    }
    let set = |cfg: &mut ExperimentConfig, key: &str, value: &Option<String>| -> Result<(), ConfigError> {
        match value {
            Some(v) => cfg.set(key, v),
            None => Ok(()),
        }
    };
    let flags = [
        ("protocol", &cli.protocol),
        ("k", &cli.k),
        ("k-contact", &cli.k_contact),
        ("trials", &cli.trials),
        ("seed", &cli.seed),
        ("tol", &cli.tol),
        ("budget-mult", &cli.budget_mult),
        ("buffer-d", &cli.buffer_d),
        ("deadline-c", &cli.deadline_c),
        ("recipe", &cli.recipe),
        ("positions", &cli.positions),
        ("silence-max-n", &cli.silence_max_n),
    ];
    for (key, value) in flags {
        set(&mut cfg, key, value).map_err(|e| e.to_string())?;
    }
    protocol_given |= cli.protocol.is_some();
    if !protocol_given {
        return Err("no protocol given (use --protocol or a config file)".into());
    }
    if !cli.n.is_empty() {
        cfg.set("n", &cli.n.join(",")).map_err(|e| e.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn fit_target(cli: &Cli, cfg: &ExperimentConfig) -> Result<Option<Option<f64>>, String> {
    let Some(text) = &cli.fit else {
        return Ok(None);
    };
    if cfg.protocol == ProtocolKind::Vector {
        return Ok(Some(None));
    }
    if text == "theory" {
        return Ok(Some(target_exponent(cfg.protocol, cfg.reported_k())));
    }
    text.parse::<f64>()
        .map(|t| Some(Some(t)))
        .map_err(|e| format!("bad fit target `{text}`: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let target = match fit_target(&cli, &cfg) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let rows = match run_experiment(&cfg) {
        Ok(rows) => rows,
        Err(e @ (ExperimentError::Config(_) | ExperimentError::Positions(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let written = match &cfg.output {
        Some(path) => match File::create(path) {
            Ok(f) => write_csv(&rows, BufWriter::new(f)).map_err(|e| e.to_string()),
            Err(e) => Err(format!("{}: {e}", path.display())),
        },
        None => write_csv(&rows, io::stdout().lock()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: writing CSV: {e}");
        return ExitCode::from(EXIT_IO);
    }

    // Reports go to stdout only when the CSV does not.
    let mut report: Box<dyn Write> = if cfg.output.is_some() {
        Box::new(io::stdout())
    } else {
        Box::new(io::stderr())
    };
    if cli.summary {
        let _ = write!(report, "{}", summary_table(&rows));
    }
    if let Some(target) = target {
        let model = FitModel::for_protocol(cfg.protocol, cfg.reported_k());
        match fit_scaling(&rows, model, target, cli.fit_tol) {
            Ok(r) => {
                let _ = write!(report, "{}", report_text(&r));
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }

    let aborted: Vec<_> = rows.iter().filter(|r| r.aborted()).collect();
    if !aborted.is_empty() {
        for r in &aborted {
            eprintln!("aborted: n={} trial={}: {}", r.n, r.trial, r.extras["abort"]);
        }
        return ExitCode::from(EXIT_ABORTED);
    }
    ExitCode::SUCCESS
}
