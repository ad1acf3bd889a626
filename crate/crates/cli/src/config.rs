//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use fekete_core::geometry::{interval_candidates, lattice_candidates, sphere_candidates, CandidateSet, Domain, LatticeDomain};
use fekete_core::kernels::{brownian_kernel, gaussian_kernel, spherical_imq_kernel, EigenOrdering, MercerKernel};
use fekete_core::solver::{Backend, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelConfig,
    pub domain: DomainConfig,
    pub method: MethodConfig,
    /// Point counts for `algorithm1` and `p_greedy` sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Slack in the local-maximum test.
    #[serde(default)]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum KernelConfig {
    Brownian,
    SphericalImq {
        gamma: f64,
    },
    Gaussian {
        epsilon: f64,
        alpha: f64,
        #[serde(default)]
        ordering: EigenOrdering,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval01 { m: usize },
    Interval11 { m: usize },
    Sphere { k: usize },
    Square { k: usize },
    Triangle { k: usize },
    Disk { k: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Algorithm1 {},
    /// Cumulative point counts `n_1 < n_2 < …`, one per stage.
    Algorithm2 { schedule: Vec<usize> },
    PGreedy {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// `builtin` or `external:<cmd>`.
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_backend() -> String {
    "builtin".into()
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_max_iter() -> usize {
    SolverOptions::default().max_iter
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: default_backend(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl fmt::Display for KernelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelConfig::Brownian => write!(f, "brownian"),
            KernelConfig::SphericalImq { gamma } => write!(f, "spherical_imq(gamma={gamma})"),
            KernelConfig::Gaussian { epsilon, alpha, ordering } => {
                let ord = match ordering {
                    EigenOrdering::Standard => "standard",
                    EigenOrdering::Swapped => "swapped",
                };
                write!(f, "gaussian(epsilon={epsilon},alpha={alpha},ordering={ord})")
            }
        }
    }
}

impl fmt::Display for DomainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainConfig::Interval01 { m } => write!(f, "interval01(m={m})"),
            DomainConfig::Interval11 { m } => write!(f, "interval11(m={m})"),
            DomainConfig::Sphere { k } => write!(f, "sphere(k={k})"),
            DomainConfig::Square { k } => write!(f, "square(k={k})"),
            DomainConfig::Triangle { k } => write!(f, "triangle(k={k})"),
            DomainConfig::Disk { k } => write!(f, "disk(k={k})"),
        }
    }
}

impl fmt::Display for MethodConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodConfig::Algorithm1 {} => "algorithm1",
            MethodConfig::Algorithm2 { .. } => "algorithm2",
            MethodConfig::PGreedy {} => "p_greedy",
        })
    }
}

impl DomainConfig {
    pub fn domain(self) -> Domain {
        match self {
            DomainConfig::Interval01 { .. } => Domain::Interval01,
            DomainConfig::Interval11 { .. } => Domain::Interval11,
            DomainConfig::Sphere { .. } => Domain::Sphere,
            DomainConfig::Square { .. } => Domain::Square,
            DomainConfig::Triangle { .. } => Domain::Triangle,
            DomainConfig::Disk { .. } => Domain::Disk,
        }
    }

    pub fn candidates(self) -> fekete_core::Result<CandidateSet> {
        match self {
            DomainConfig::Interval01 { m } | DomainConfig::Interval11 { m } => interval_candidates(m, self.domain()),
            DomainConfig::Sphere { k } => sphere_candidates(k),
            DomainConfig::Square { k } => lattice_candidates(k, LatticeDomain::Square),
            DomainConfig::Triangle { k } => lattice_candidates(k, LatticeDomain::Triangle),
            DomainConfig::Disk { k } => lattice_candidates(k, LatticeDomain::Disk),
        }
    }
}

impl KernelConfig {
    /// Instantiates the kernel for points of dimension `dim`.
    pub fn build(&self, dim: usize) -> fekete_core::Result<Box<dyn MercerKernel>> {
        Ok(match *self {
            KernelConfig::Brownian => Box::new(brownian_kernel()),
            KernelConfig::SphericalImq { gamma } => Box::new(spherical_imq_kernel(gamma)?),
            KernelConfig::Gaussian { epsilon, alpha, ordering } => Box::new(gaussian_kernel(dim, epsilon, alpha, ordering)?),
        })
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// A validated configuration with its kernel and candidate grid.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub kernel: Box<dyn MercerKernel>,
    pub candidates: CandidateSet,
    pub backend: Backend,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The point counts processed by the run, in order.
    pub fn totals(&self) -> &[usize] {
        match &self.method {
            MethodConfig::Algorithm2 { schedule } => schedule,
            _ => self.n_values.as_deref().unwrap_or(&[]),
        }
    }

    /// Checks the configuration and builds kernel and candidates.
    pub fn prepare(self) -> Result<Experiment, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match (&self.method, &self.n_values) {
            (MethodConfig::Algorithm2 { .. }, Some(_)) => return bad("n_values is not used by algorithm2; give a schedule".into()),
            (MethodConfig::Algorithm2 { schedule }, None) if schedule.is_empty() => return bad("empty schedule".into()),
            (MethodConfig::Algorithm2 { schedule }, None) if schedule.windows(2).any(|p| p[1] <= p[0]) => {
                return bad(format!("schedule must increase strictly: {schedule:?}"))
            }
            (MethodConfig::Algorithm1 {} | MethodConfig::PGreedy {}, None) => return bad(format!("{} needs n_values", self.method)),
            (MethodConfig::Algorithm1 {} | MethodConfig::PGreedy {}, Some(ns)) if ns.is_empty() => return bad("empty n_values".into()),
            _ => {}
        }
        let totals = self.totals();
        if let Some(dup) = totals.iter().enumerate().find(|(i, n)| totals[..*i].contains(n)) {
            return bad(format!("n = {} listed twice", dup.1));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be a nonnegative number, got {}", self.tau));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) || self.solver.max_iter == 0 {
            return bad("solver tol must be positive and max_iter nonzero".into());
        }
        let backend = Backend::parse(&self.solver.backend).map_err(|e| CliError::Config(e.to_string()))?;

        let candidates = self.domain.candidates().map_err(|e| CliError::Config(e.to_string()))?;
        let kernel = self
            .kernel
            .build(self.domain.domain().dim())
            .map_err(|e| CliError::Config(e.to_string()))?;
        for y in &candidates.points {
            kernel
                .check_point(y)
                .map_err(|e| CliError::Config(format!("kernel {} does not accept domain {}: {e}", self.kernel, self.domain)))?;
        }
        let m = candidates.len();
        if let Some(&n) = totals.iter().find(|&&n| n == 0 || n > m) {
            return bad(format!("n = {n} outside 1..={m}"));
        }
        Ok(Experiment {
            config: self,
            kernel,
            candidates,
            backend,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "kernel": {"name": "brownian"},
            "domain": {"name": "interval01", "m": 20},
            "method": {"name": "algorithm1"},
            "n_values": [2, 3],
            "output": "out"
        })
    }

    fn prepare(v: serde_json::Value) -> Result<Experiment, CliError> {
        ExperimentConfig::parse(&v.to_string())?.prepare()
    }

    #[test]
    fn defaults_fill_in() {
        let e = prepare(base()).unwrap();
        assert_eq!(e.config.solver, SolverConfig::default());
        assert_eq!(e.config.seed, 0);
        assert_eq!(e.backend, Backend::Builtin);
        assert_eq!(e.candidates.len(), 20);
    }

    #[test]
    fn schedule_iff_algorithm2() {
        let mut v = base();
        v["method"] = serde_json::json!({"name": "algorithm2", "schedule": [2, 4]});
        assert!(matches!(prepare(v.clone()), Err(CliError::Config(_))));
        v.as_object_mut().unwrap().remove("n_values");
        assert_eq!(prepare(v).unwrap().config.totals(), &[2, 4]);

        let mut v = base();
        v.as_object_mut().unwrap().remove("n_values");
        assert!(prepare(v).is_err());
        let mut v = base();
        v["method"] = serde_json::json!({"name": "algorithm1", "schedule": [2]});
        assert!(prepare(v).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for (key, value) in [
            ("n_values", serde_json::json!([0])),
            ("n_values", serde_json::json!([21])),
            ("n_values", serde_json::json!([3, 3])),
            ("domain", serde_json::json!({"name": "sphere", "k": 5})),
            ("kernel", serde_json::json!({"name": "spherical_imq", "params": {"gamma": 1.5}})),
            ("solver", serde_json::json!({"backend": "mosek"})),
            ("tau", serde_json::json!(-1.0)),
            ("colour", serde_json::json!("red")),
        ] {
            let mut v = base();
            v[key] = value;
            assert!(prepare(v).is_err(), "{key} accepted");
        }
    }

    #[test]
    fn gaussian_dimension_follows_domain() {
        let mut v = base();
        v["kernel"] = serde_json::json!({"name": "gaussian", "params": {"epsilon": 1.0, "alpha": 1.0}});
        v["domain"] = serde_json::json!({"name": "disk", "k": 7});
        let e = prepare(v).unwrap();
        assert_eq!(e.kernel.dim(), 2);
        assert_eq!(e.config.kernel.to_string(), "gaussian(epsilon=1,alpha=1,ordering=standard)");
    }
}
