//! The `popgini` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or domain error,
//! 3 reproduction mismatch. Output is buffered and written to `out` only on
//! success; diagnostics go to `err`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::{bundled_reference, load_csv, reconstructed_reference, Dataset, ParseOptions};
use crate::error::Error;
use crate::gini::{gini_coefficient, max_gini, subsample_experiment, IncomeSample};
use crate::regress::HcVariant;
use crate::report::{
    build_report, calibrate, comparison_text, fit_table_text, fmt_fixed, reproduction_check,
    thousands, SortKey,
};
use crate::targetmodel::{
    compare_forms_with, fit_target_model_with, predict, TargetGiniModel, TargetOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "popgini",
    version,
    about = "Target Gini coefficients for a given population size"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Fit Gini on ln(Pop) and ln(Pop)^2 through the origin and print the regression table
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        json: bool,
    },
    /// Predict the target Gini for a population
    Predict {
        #[arg(long, allow_negative_numbers = true)]
        population: i64,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        coefficients: CoefficientArgs,
        #[arg(long)]
        json: bool,
    },
    /// Classify every country against its target Gini
    Report {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        coefficients: CoefficientArgs,
        #[arg(long, value_enum, default_value_t = SortArg::Original)]
        sort: SortArg,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Compare linear, quadratic, cubic and log+root forms
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        json: bool,
    },
    /// Gini coefficient of incomes read one per line (file or stdin)
    Gini {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Mean Gini of random subsamples versus the full-sample Gini
    SubsampleBias {
        /// Incomes, one per line; stdin when absent
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..=100_000_000))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Write the dataset as name,population,gini CSV
    DumpData {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Compare every computed figure with the published tables
    Reproduce {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        coefficients: CoefficientArgs,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct DataArgs {
    /// CSV with a name,population,gini header; the bundled table when absent
    #[arg(long, conflicts_with = "dataset")]
    pub input: Option<PathBuf>,
    /// Bundled dataset to use when --input is absent
    #[arg(long, value_enum)]
    pub dataset: Option<DatasetArg>,
    /// Do not append the one-person observation before fitting
    #[arg(long)]
    pub no_anchor: bool,
    #[arg(long, default_value = "hc1", value_parser = parse_hc)]
    pub hc: HcVariant,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct CoefficientArgs {
    /// Coefficient precision for predictions
    #[arg(long = "coefficients", value_enum, default_value_t = PrecisionArg::Published)]
    pub precision: PrecisionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    /// Published table, Gini at three decimals
    Table,
    /// Same countries with Gini at four decimals
    Reconstructed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    /// Rounded to the four decimals of the published equation
    Published,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SortArg {
    Original,
    Gap,
    Name,
    Population,
}

impl From<SortArg> for SortKey {
    fn from(s: SortArg) -> Self {
        match s {
            SortArg::Original => SortKey::Original,
            SortArg::Gap => SortKey::Gap,
            SortArg::Name => SortKey::Name,
            SortArg::Population => SortKey::Population,
        }
    }
}

fn parse_hc(s: &str) -> Result<HcVariant, String> {
    s.parse()
}

/// A command line that could not be turned into a [`CliConfig`].
#[derive(Debug)]
pub struct UsageError {
    pub message: String,
    /// `--help` or `--version`: print to stdout and exit 0.
    pub is_info: bool,
}

pub fn parse_args<I, S>(argv: I) -> Result<CliConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    CliConfig::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        let is_info = matches!(
            e.kind(),
            ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
        );
        UsageError {
            message: e.render().to_string(),
            is_info,
        }
    })
}

/// Parses `argv` (including the program name) and runs it.
pub fn main_with(
    argv: Vec<String>,
    input: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    match parse_args(&argv) {
        Ok(config) => run(&config, input, out, err),
        Err(e) if e.is_info => {
            let _ = out.write_all(e.message.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = err.write_all(e.message.as_bytes());
            EXIT_USAGE
        }
    }
}

struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            code: EXIT_OK,
        }
    }
}

pub fn run(
    config: &CliConfig,
    input: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut diagnostics = Vec::new();
    match execute(config, input, &mut diagnostics) {
        Ok(output) => {
            for d in diagnostics {
                let _ = writeln!(err, "{d}");
            }
            if out.write_all(output.text.as_bytes()).is_err() {
                return EXIT_DATA;
            }
            output.code
        }
        Err(e) => {
            for d in diagnostics {
                let _ = writeln!(err, "{d}");
            }
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn load_dataset(args: &DataArgs) -> Result<Dataset, Error> {
    match (&args.input, args.dataset) {
        (Some(path), _) => {
            let file =
                File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            load_csv(file, &ParseOptions::default())
        }
        (None, Some(DatasetArg::Reconstructed)) => Ok(reconstructed_reference()),
        (None, _) => Ok(bundled_reference()),
    }
}

/// `--no-anchor` also drops an anchor row already present in the input.
fn without_anchor(d: &Dataset) -> Result<Dataset, Error> {
    Dataset::new(d.countries().cloned().collect())
}

fn fit_model(args: &DataArgs) -> Result<(Dataset, TargetGiniModel), Error> {
    let d = load_dataset(args)?;
    let fitted = if args.no_anchor {
        without_anchor(&d)?
    } else {
        d.clone()
    };
    let m = fit_target_model_with(
        &fitted,
        &TargetOptions {
            add_anchor: !args.no_anchor,
            hc: args.hc,
        },
    )?;
    Ok((d, m))
}

fn with_precision(m: &TargetGiniModel, p: PrecisionArg) -> TargetGiniModel {
    match p {
        PrecisionArg::Published => m.published_precision(),
        PrecisionArg::Full => m.full_precision(),
    }
}

fn read_incomes(path: &Option<PathBuf>, input: &mut dyn Read) -> Result<IncomeSample, Error> {
    let mut text = String::new();
    match path {
        Some(p) => {
            File::open(p)
                .and_then(|mut f| f.read_to_string(&mut text))
                .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        }
        None => {
            input.read_to_string(&mut text)?;
        }
    }
    IncomeSample::parse_lines(&text)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct PredictOutput<'a> {
    #[serde(flatten)]
    prediction: crate::targetmodel::Prediction,
    beta1: f64,
    beta2: f64,
    precision: crate::targetmodel::CoefficientPrecision,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct FitOutput<'a> {
    model: &'a TargetGiniModel,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct GiniOutput {
    n: usize,
    gini: f64,
    max_gini: f64,
}

#[derive(Serialize)]
struct ReproduceOutput<'a> {
    passed: bool,
    summary: &'a crate::report::ReproductionSummary,
    calibration: &'a crate::report::Calibration,
}

fn execute(
    config: &CliConfig,
    input: &mut dyn Read,
    diagnostics: &mut Vec<String>,
) -> Result<Output, Error> {
    match &config.command {
        Command::Fit { data, json } => {
            let (_, m) = fit_model(data)?;
            let warnings = m.sign_warnings();
            if *json {
                Ok(Output::ok(to_json(&FitOutput {
                    model: &m,
                    warnings,
                })))
            } else {
                Ok(Output::ok(fit_table_text(&m)))
            }
        }
        Command::Predict {
            population,
            data,
            coefficients,
            json,
        } => {
            let population = u64::try_from(*population)
                .ok()
                .filter(|p| *p >= 1)
                .ok_or_else(|| {
                    Error::Domain(format!("population must be at least 1, got {population}"))
                })?;
            let (_, m) = fit_model(data)?;
            let m = with_precision(&m, coefficients.precision);
            let p = predict(&m, population)?;
            let mut warnings = Vec::new();
            if p.extrapolated {
                warnings.push(format!(
                    "population {} exceeds the largest fitted population {}",
                    thousands(population),
                    thousands(m.max_population)
                ));
            }
            if p.out_of_bounds {
                warnings.push(format!("prediction {} lies outside [0, (P-1)/P]", p.gini));
            }
            diagnostics.extend(warnings.iter().map(|w| format!("warning: {w}")));
            if *json {
                Ok(Output::ok(to_json(&PredictOutput {
                    prediction: p,
                    beta1: m.beta1,
                    beta2: m.beta2,
                    precision: m.precision,
                    warnings: &warnings,
                })))
            } else {
                Ok(Output::ok(format!("{}\n", fmt_fixed(p.gini, 3))))
            }
        }
        Command::Report {
            data,
            coefficients,
            sort,
            json,
            csv,
        } => {
            let (d, m) = fit_model(data)?;
            let m = with_precision(&m, coefficients.precision);
            let report = build_report(&m, &d)?.sorted((*sort).into());
            let text = if *json {
                to_json(&report)
            } else if *csv {
                report.to_csv()
            } else {
                report.to_text()
            };
            Ok(Output::ok(text))
        }
        Command::Compare { data, json } => {
            let d = load_dataset(data)?;
            let d = if data.no_anchor {
                without_anchor(&d)?
            } else {
                d
            };
            let c = compare_forms_with(
                &d,
                &TargetOptions {
                    add_anchor: !data.no_anchor,
                    hc: data.hc,
                },
            )?;
            Ok(Output::ok(if *json {
                to_json(&c)
            } else {
                comparison_text(&c)
            }))
        }
        Command::Gini { input: path, json } => {
            let s = read_incomes(path, input)?;
            let g = gini_coefficient(&s)?;
            let bound = max_gini(s.len() as u64)?;
            if *json {
                Ok(Output::ok(to_json(&GiniOutput {
                    n: s.len(),
                    gini: g,
                    max_gini: bound,
                })))
            } else {
                Ok(Output::ok(format!(
                    "n          {}\ngini       {}\nmax_gini   {}\n",
                    s.len(),
                    g,
                    bound
                )))
            }
        }
        Command::SubsampleBias {
            input: path,
            k,
            trials,
            seed,
            json,
        } => {
            let s = read_incomes(path, input)?;
            let r = subsample_experiment(&s, *k as usize, *trials as usize, *seed)?;
            if *json {
                return Ok(Output::ok(to_json(&r)));
            }
            let mut text = String::new();
            let rows: [(&str, String); 7] = [
                ("full_gini", r.full_gini.to_string()),
                ("subsample_size", r.subsample_size.to_string()),
                ("trials", r.trials.to_string()),
                ("mean_subsample_gini", r.mean_subsample_gini.to_string()),
                ("stderr_of_mean", r.stderr_of_mean.to_string()),
                ("skipped_zero_draws", r.skipped_zero_draws.to_string()),
                (
                    "mean_defined_gini",
                    r.mean_defined_gini
                        .map_or("n/a".to_string(), |g| g.to_string()),
                ),
            ];
            for (k, v) in rows {
                text.push_str(&format!("{k:<20} {v}\n"));
            }
            Ok(Output::ok(text))
        }
        Command::DumpData { data } => {
            let d = load_dataset(data)?;
            Ok(Output::ok(d.to_csv()))
        }
        Command::Reproduce {
            data,
            coefficients,
            json,
        } => {
            let (d, m) = fit_model(data)?;
            let m = with_precision(&m, coefficients.precision);
            let summary = reproduction_check(&m, &d)?;
            let calibration = calibrate(&d)?;
            let text = if *json {
                to_json(&ReproduceOutput {
                    passed: summary.all_passed(),
                    summary: &summary,
                    calibration: &calibration,
                })
            } else {
                let mut t = summary.to_text();
                for n in &calibration.notes {
                    t.push_str(&format!("calibration: {n}\n"));
                }
                t
            };
            Ok(Output {
                text,
                code: if summary.all_passed() {
                    EXIT_OK
                } else {
                    EXIT_MISMATCH
                },
            })
        }
    }
}
