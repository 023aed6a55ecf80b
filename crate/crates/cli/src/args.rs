use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use maass_periods::merom::PrincipalTerm;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "maass-periods", version, about = "Meromorphic modular forms with poles at Heegner points, their cycle integrals and the Maass form coefficients they encode")]
pub struct Cli {
    /// worker threads for the numerical fan-out
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// recorded in the output; no subcommand draws random numbers
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with parameters; flags given on the command line win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// write the JSON result here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Twisted Heegner divisor Z(D, r)
    Heegner(HeegnerArgs),
    /// Gamma_0(N)-class representatives of forms [aN, b, c] with b = r mod 2N
    Classreps(ClassrepsArgs),
    /// Values of f_{k,D,r} or of a combination given by a principal part
    Eval(EvalArgs),
    /// Fourier coefficients: quadrature, prediction from Maass coefficients, or inversion
    Fourier(FourierArgs),
    /// Coefficients of a Maass Poincare series by two-height separation
    Poincare(PoincareArgs),
    /// Hecke operator T_m on a coefficient table
    Hecke(HeckeArgs),
    /// Cycle pairing along a closed geodesic, optionally the period formula
    Pairing(PairingArgs),
    /// The normalised form zeta = eta - multiple of G and its rescaled coefficients
    Zeta(ZetaArgs),
    /// Run the acceptance criteria
    Check(CheckArgs),
}

/// A point x + iy written "x,y".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pt(pub f64, pub f64);

impl FromStr for Pt {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
        match v[..] {
            [x, y] => Ok(Pt(x, y)),
            _ => Err(format!("expected x,y, got {s:?}")),
        }
    }
}

/// A matrix written "a,b,c,d".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix(pub [i64; 4]);

impl FromStr for Matrix {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<i64> = s.split(',').map(|t| t.trim().parse::<i64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
        <[i64; 4]>::try_from(v).map(Matrix).map_err(|_| format!("expected a,b,c,d, got {s:?}"))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FormArgs {
    /// half the weight of the meromorphic form
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<i64>,
    #[arg(long = "Delta", allow_hyphen_values = true)]
    #[serde(rename = "Delta")]
    pub delta: Option<i64>,
    #[arg(long)]
    pub rho: Option<i64>,
    #[arg(long = "D", allow_hyphen_values = true)]
    #[serde(rename = "D")]
    pub d: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<i64>,
    /// truncation target of the lattice sums
    #[arg(long)]
    pub tol: Option<f64>,
    /// principal part {D, r, c} list (config file only); replaces D and r
    #[arg(skip)]
    #[serde(default)]
    pub principal_part: Vec<PrincipalTerm>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct HeegnerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ClassrepsArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<i64>,
    #[arg(long = "D", allow_hyphen_values = true)]
    #[serde(rename = "D")]
    pub d: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<i64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
    /// evaluation points x,y (repeatable)
    #[arg(long = "z", allow_hyphen_values = true)]
    #[serde(default)]
    pub z: Vec<Pt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FourierMode {
    Direct,
    Predicted,
    Invert,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FourierArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
    #[arg(long, value_enum)]
    pub mode: Option<FourierMode>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// quadrature heights y1,y2
    #[arg(long)]
    pub heights: Option<Pt>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// coefficient table JSON for the predicted mode; computed from the
    /// Poincare series P_{D,r} when absent
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// in predicted mode, also run the quadrature and report per-n residuals
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub compare: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub poincare: PoincareOptions,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PoincareOptions {
    /// horocycle heights for separating c+ and c-
    #[arg(long)]
    pub poincare_heights: Option<Pt>,
    #[arg(long)]
    pub poincare_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PoincareArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<i64>,
    /// twice the weight, e.g. -9 for weight -9/2
    #[arg(long, allow_hyphen_values = true)]
    pub weight_times_2: Option<i32>,
    /// use the dual Weil representation
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dual: Option<bool>,
    #[arg(long = "D", allow_hyphen_values = true)]
    #[serde(rename = "D")]
    pub d: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<i64>,
    /// spectral parameter; the harmonic value 1 - kappa/2 when absent
    #[arg(long)]
    pub s: Option<f64>,
    /// largest D to extract
    #[arg(long)]
    pub d_max: Option<i64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub poincare: PoincareOptions,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct HeckeArgs {
    /// coefficient table JSON
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<i64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PairingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
    /// hyperbolic matrix a,b,c,d
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<Matrix>,
    #[arg(long, allow_hyphen_values = true)]
    pub base_point: Option<Pt>,
    /// polygon vertices between the base point and its image (repeatable)
    #[arg(long = "waypoint", allow_hyphen_values = true)]
    #[serde(default)]
    pub waypoints: Vec<Pt>,
    /// also run the period formula (level 1, k = 6, G = Delta)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub period: Option<bool>,
    /// c+(|Delta|, rho) for the period formula
    #[arg(long, allow_hyphen_values = true)]
    pub c_top: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ZetaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub heights: Option<Pt>,
    /// c+(|Delta|, rho); computed from the Poincare series when absent
    #[arg(long, allow_hyphen_values = true)]
    pub c_top: Option<f64>,
    /// denominator bound for rational recognition
    #[arg(long)]
    pub max_den: Option<i128>,
    #[command(flatten)]
    #[serde(flatten)]
    pub poincare: PoincareOptions,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    /// criteria to run, e.g. 1,3,7 (default: all)
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub criteria: Vec<u8>,
}

fn prune(v: &mut Value) {
    if let Value::Object(m) = v {
        m.retain(|_, x| !(x.is_null() || x.as_array().is_some_and(|a| a.is_empty())));
    }
}

/// Overlays the flags given on the command line onto the config file.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Value>) -> Result<T, CliError> {
    let mut base = match file {
        Some(Value::Object(m)) => Value::Object(m.clone()),
        Some(_) => return Err(CliError::Usage("config file must hold a JSON object".into())),
        None => Value::Object(Default::default()),
    };
    let mut over = serde_json::to_value(flags)?;
    prune(&mut over);
    if let (Value::Object(b), Value::Object(o)) = (&mut base, over) {
        for (k, v) in o {
            b.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| CliError::Usage(format!("bad parameters: {e}")))
}

pub fn require<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing parameter {name}")))
}
