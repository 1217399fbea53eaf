use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use kirchhoff_core::closed_form::{BubbleSpec, KirchhoffParams, Q_HEIGHT};
use kirchhoff_core::grid::MIN_NODES;
use kirchhoff_core::spectral::Tolerances;

#[derive(Debug, Parser)]
#[command(
    name = "kirchhoff",
    version,
    about = "Verification reports for -(a + b∫|∇u|²)Δu = u⁵ on R³"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Constants,
    Verify,
    Kernel,
    Spectrum,
    Shoot,
    Sweep,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scaling constants and the fixed-point cross-check.
    Constants(CommonArgs),
    /// Identity checks of the closed-form family and the discrete proof chain.
    Verify(CommonArgs),
    /// Kernel census of the linearized operator over sectors 0..=lmax.
    Kernel(CommonArgs),
    /// Lowest generalized eigenvalues of one sector.
    Spectrum(CommonArgs),
    /// Shooting rediscovery of the solution.
    Shoot(CommonArgs),
    /// Kernel census repeated over a list of grid sizes.
    Sweep(CommonArgs),
}

impl Command {
    pub fn split(self) -> (CommandKind, CommonArgs) {
        match self {
            Command::Constants(a) => (CommandKind::Constants, a),
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Kernel(a) => (CommandKind::Kernel, a),
            Command::Spectrum(a) => (CommandKind::Spectrum, a),
            Command::Shoot(a) => (CommandKind::Shoot, a),
            Command::Sweep(a) => (CommandKind::Sweep, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Translation centre as "x,y,z".
    #[arg(long, value_parser = parse_triple, default_value = "0,0,0", allow_hyphen_values = true)]
    pub x0: [f64; 3],
    /// Interior grid nodes.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub lmax: usize,
    /// Sector for `spectrum`.
    #[arg(long, default_value_t = 0)]
    pub sector: usize,
    /// Number of eigenvalues for `spectrum`.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Fixed kernel threshold instead of the adaptive one.
    #[arg(long, allow_negative_numbers = true)]
    pub tol_kernel: Option<f64>,
    /// Initial height for `shoot`; defaults to 3^{1/4}.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Grid sizes for `sweep`, e.g. "96,128,192,256".
    #[arg(long, value_parser = parse_list, default_value = "96,128,192,256")]
    pub n_list: SizeList,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long)]
    pub no_timestamp: bool,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected \"x,y,z\", got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(out)
}

/// A comma-separated list taken as one argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeList(pub Vec<usize>);

fn parse_list(s: &str) -> Result<SizeList, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(SizeList)
}

/// Validated, serializable run parameters. Recorded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub x0: [f64; 3],
    pub n: usize,
    pub l_max: usize,
    pub sector: usize,
    pub k: usize,
    pub tol_kernel: Option<f64>,
    pub alpha: f64,
    pub n_list: Vec<usize>,
    pub format: Format,
    pub out_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

impl RunConfig {
    pub fn from_args(command: CommandKind, args: &CommonArgs) -> Result<Self, UsageError> {
        let cfg = Self {
            command,
            a: args.a,
            b: args.b,
            lambda: args.lambda,
            x0: args.x0,
            n: args.n,
            l_max: args.lmax,
            sector: args.sector,
            k: args.k,
            tol_kernel: args.tol_kernel,
            alpha: args.alpha.unwrap_or(Q_HEIGHT),
            n_list: args.n_list.0.clone(),
            format: args.format,
            out_path: args.out.as_ref().map(|p| p.display().to_string()),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let finite = [self.a, self.b, self.lambda, self.alpha]
            .iter()
            .chain(&self.x0)
            .all(|v| v.is_finite());
        if !finite {
            return Err(usage("numeric arguments must be finite"));
        }
        KirchhoffParams::new(self.a, self.b).map_err(|e| usage(e.to_string()))?;
        if self.lambda <= 0.0 {
            return Err(usage("--lambda must be positive"));
        }
        if self.alpha <= 0.0 {
            return Err(usage("--alpha must be positive"));
        }
        if self.n < MIN_NODES {
            return Err(usage(format!("--n must be at least {MIN_NODES}")));
        }
        if self.l_max < 2 {
            return Err(usage("--lmax must be at least 2"));
        }
        if self.k == 0 {
            return Err(usage("--k must be at least 1"));
        }
        if let Some(t) = self.tol_kernel {
            if !(t.is_finite() && t > 0.0) {
                return Err(usage("--tol-kernel must be finite and positive"));
            }
        }
        if self.n_list.is_empty()
            || self.n_list.iter().any(|&n| n < MIN_NODES)
            || self.n_list.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(usage(format!(
                "--n-list must be strictly ascending sizes of at least {MIN_NODES}"
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> KirchhoffParams {
        KirchhoffParams {
            a: self.a,
            b: self.b,
        }
    }

    pub fn bubble(&self) -> BubbleSpec {
        BubbleSpec::new(self.params(), self.lambda, self.x0).expect("validated configuration")
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            kernel: self.tol_kernel,
            eigen_count: self.k.max(Tolerances::default().eigen_count),
            ..Tolerances::default()
        }
    }
}

/// Worker count from `KIRCHHOFF_THREADS`, defaulting to the machine's
/// available parallelism.
pub fn thread_budget() -> Result<usize, UsageError> {
    match std::env::var("KIRCHHOFF_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(usage(format!(
                "KIRCHHOFF_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
