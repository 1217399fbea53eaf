use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use kirchhoff_core::report::{Check, ConvergenceRow, KernelSummary, Status, VerificationReport};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsData {
    pub grad_q_sq: f64,
    pub sqrt_c: f64,
    pub c: f64,
    pub kappa: f64,
    pub c_fixed_point: f64,
    pub fixed_point_iterations: usize,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootData {
    pub alpha: f64,
    pub c: f64,
    pub lambda_expected: f64,
    pub lambda_fit: f64,
    pub far_field_constant: f64,
    pub grad_norm_sq: f64,
    pub recovered_c: f64,
    pub max_rel_err: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KernelFlag {
    Kernel,
    Nonzero,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub sector: usize,
    pub index: usize,
    pub eigenvalue: f64,
    pub kernel_flag: KernelFlag,
    /// `|cos|` against the analytic mode of the sector, where there is one.
    pub alignment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub r: f64,
    pub phi: f64,
    pub slope: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Constants(ConstantsData),
    Shoot(ShootData),
    Spectrum(Vec<SpectrumRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliReport {
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub checks: Vec<Check>,
    pub kernel: Option<KernelSummary>,
    pub convergence: Vec<ConvergenceRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Payload>,
    pub status: Status,
    /// Set when the pipeline stopped early; the checks are then partial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CliReport {
    pub fn new(config: RunConfig, report: VerificationReport) -> Self {
        Self {
            config,
            timestamp: None,
            checks: report.checks,
            kernel: report.kernel,
            convergence: report.convergence,
            data: None,
            status: report.status,
            error: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail | Status::Inconclusive => 1,
        }
    }
}

/// Pretty JSON with every `f64` written as `{:.16e}`: 17 significant digits,
/// enough to round-trip exactly.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_string(
    write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> csv::Result<String> {
    csv_string(|w| {
        w.write_record(["sector", "index", "eigenvalue", "kernel_flag", "alignment"])?;
        for r in rows {
            let flag = match r.kernel_flag {
                KernelFlag::Kernel => "KERNEL",
                KernelFlag::Nonzero => "NONZERO",
                KernelFlag::Ambiguous => "AMBIGUOUS",
            };
            w.write_record([
                r.sector.to_string(),
                r.index.to_string(),
                num(r.eigenvalue),
                flag.to_string(),
                r.alignment.map_or_else(String::new, num),
            ])?;
        }
        Ok(())
    })
}

pub fn checks_csv(checks: &[Check]) -> csv::Result<String> {
    csv_string(|w| {
        w.write_record(["name", "value", "tolerance", "relation", "status"])?;
        for c in checks {
            let rel = match c.relation {
                kirchhoff_core::report::Relation::Below => "below",
                kirchhoff_core::report::Relation::Above => "above",
                kirchhoff_core::report::Relation::Equal => "equal",
            };
            w.write_record([
                c.name.clone(),
                num(c.value),
                num(c.tolerance),
                rel.to_string(),
                c.status.as_str().to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> csv::Result<String> {
    csv_string(|w| {
        w.write_record([
            "n",
            "dim",
            "tol_kernel",
            "kernel_mu_l0",
            "kernel_mu_l1",
            "alignment_l0",
            "alignment_l1",
            "gap",
            "status",
        ])?;
        let opt = |v: Option<&f64>| v.map_or_else(String::new, |x| num(*x));
        for r in rows {
            w.write_record([
                r.n.to_string(),
                r.dim.to_string(),
                num(r.tol_kernel),
                opt(r.kernel_eigenvalues.get(&0)),
                opt(r.kernel_eigenvalues.get(&1)),
                opt(r.alignments.get(&0)),
                opt(r.alignments.get(&1)),
                num(r.gap),
                r.status.as_str().to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn profile_csv(rows: &[ProfileRow]) -> csv::Result<String> {
    csv_string(|w| {
        w.write_record(["r", "phi", "slope", "closed_form"])?;
        for p in rows {
            w.write_record([num(p.r), num(p.phi), num(p.slope), num(p.closed_form)])?;
        }
        Ok(())
    })
}
