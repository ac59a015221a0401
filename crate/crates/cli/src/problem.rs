//! Problems named on the command line: `emden:n=3,nu=1`, `airy`,
//! `harmonic:omega2=4`.

use std::fmt;
use std::str::FromStr;

use oscerr::oscillators::{
    ef_system, ElementaryDifferentials, EmdenFowlerProblem, EmdenFowlerSystem, LinearOscillatorProblem,
    LinearOscillatorSystem,
};
use oscerr::rk::OdeSystem;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemSpec {
    Emden { n: u32, nu: f64 },
    Airy,
    Harmonic { omega2: f64 },
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec::Emden { n: 3, nu: 1.0 }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Emden { n, nu } => write!(f, "emden:n={n},nu={nu}"),
            ProblemSpec::Airy => f.write_str("airy"),
            ProblemSpec::Harmonic { omega2 } => write!(f, "harmonic:omega2={omega2}"),
        }
    }
}

fn bad(s: &str, why: &str) -> CliError {
    CliError::Usage(format!("problem {s:?}: {why} (expected emden:n=N,nu=NU, airy or harmonic:omega2=W)"))
}

impl FromStr for ProblemSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut params = Vec::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad(s, "parameters are key=value"))?;
            params.push((k.trim(), v.trim()));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let known = |keys: &[&str]| match params.iter().find(|(k, _)| !keys.contains(k)) {
            Some((k, _)) => Err(bad(s, &format!("unknown parameter {k:?}"))),
            None => Ok(()),
        };
        match kind {
            "emden" => {
                known(&["n", "nu"])?;
                let n = get("n").map_or(Ok(3), str::parse).map_err(|_| bad(s, "n must be an odd integer"))?;
                let nu = get("nu").map_or(Ok(1.0), str::parse).map_err(|_| bad(s, "nu must be a number"))?;
                Ok(ProblemSpec::Emden { n, nu })
            }
            "airy" => {
                known(&[])?;
                Ok(ProblemSpec::Airy)
            }
            "harmonic" => {
                known(&["omega2"])?;
                let omega2 = get("omega2").map_or(Ok(1.0), str::parse).map_err(|_| bad(s, "omega2 must be a number"))?;
                Ok(ProblemSpec::Harmonic { omega2 })
            }
            _ => Err(bad(s, "unknown problem")),
        }
    }
}

/// A problem together with its initial values.
#[derive(Clone, Debug)]
pub enum Problem {
    Emden(EmdenFowlerProblem),
    Linear(LinearOscillatorProblem),
}

impl Problem {
    pub fn new(spec: ProblemSpec, y0: [f64; 2]) -> Result<Self> {
        Ok(match spec {
            ProblemSpec::Emden { n, nu } => Problem::Emden(EmdenFowlerProblem::new(n, nu, y0[0], y0[1])?),
            ProblemSpec::Airy => Problem::Linear(LinearOscillatorProblem::airy(y0[0], y0[1])),
            ProblemSpec::Harmonic { omega2 } => Problem::Linear(LinearOscillatorProblem::constant(omega2, y0[0], y0[1])?),
        })
    }

    pub fn system(&self) -> System {
        match self {
            Problem::Emden(p) => System::Emden(ef_system(p)),
            Problem::Linear(p) => System::Linear(LinearOscillatorSystem::new(p)),
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match self {
            Problem::Emden(p) => p.initial_state(),
            Problem::Linear(p) => p.initial_state(),
        }
    }
}

/// Either right-hand side, behind one type.
pub enum System {
    Emden(EmdenFowlerSystem),
    Linear(LinearOscillatorSystem),
}

impl OdeSystem for System {
    fn dimension(&self) -> usize {
        match self {
            System::Emden(s) => s.dimension(),
            System::Linear(s) => s.dimension(),
        }
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        match self {
            System::Emden(s) => s.rhs(y, dy),
            System::Linear(s) => s.rhs(y, dy),
        }
    }

    fn jacobian(&self, y: &[f64], jac: &mut [f64]) {
        match self {
            System::Emden(s) => s.jacobian(y, jac),
            System::Linear(s) => s.jacobian(y, jac),
        }
    }

    fn check_state(&self, y: &[f64]) -> oscerr::Result<()> {
        match self {
            System::Emden(s) => s.check_state(y),
            System::Linear(s) => s.check_state(y),
        }
    }
}

impl ElementaryDifferentials for System {
    fn derivative_action(&self, y: &[f64], dirs: &[&[f64]], out: &mut [f64]) {
        match self {
            System::Emden(s) => s.derivative_action(y, dirs, out),
            System::Linear(s) => s.derivative_action(y, dirs, out),
        }
    }
}

/// Parses `1,0` into an initial `(y, y')`.
pub fn parse_pair(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(CliError::Usage(format!("{s:?} is not a pair of numbers"))),
        },
        _ => Err(CliError::Usage(format!("{s:?} is not a pair of numbers like 1,0"))),
    }
}
