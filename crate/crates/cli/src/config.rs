//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use nehari_core::mesh::Mesh;
use nehari_core::nehari::SolverOptions;
use nehari_core::nfunction::{CustomNFunction, NFunctionSpec, Weight};
use nehari_core::problem::{KirchhoffSpec, ProblemSpec, Reaction};
use nehari_core::properties::SuiteOptions;

use crate::expr::Expr;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub check: SuiteOptions,
    #[serde(default)]
    pub fibering: FiberingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub operator: OperatorConfig,
    #[serde(default)]
    pub kirchhoff: KirchhoffConfig,
    /// singular exponent, `f(s) = s^-gamma`
    pub gamma: f64,
    /// superlinear exponent, `g(s) = s^(r-1)`
    pub r: f64,
    pub lambda: Option<f64>,
    /// grid for `scan`; defaults to `[lambda]`
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Power { p: f64 },
    SumPower { p: f64, q: f64, weight: f64 },
    DoublePhase { p: f64, q: f64, mu: MuConfig },
    LogDoublePhase { p: f64, q: f64, mu: MuConfig },
    LogPerturbed { p: f64, q: f64, mu: MuConfig },
    /// expressions in `s`, `x`, `y`
    Custom { h: String, dh: String, d2h: String },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MuConfig {
    Constant(f64),
    /// expression in `x`, `y`
    Expression(String),
    Affine(AffineMu),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMu {
    pub offset: f64,
    pub slope: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KirchhoffConfig {
    Constant { a: f64 },
    /// `a + b s^exponent`
    AffinePower { a: f64, b: f64, exponent: f64 },
    /// expressions in `s`
    Custom { m: String, dm: String },
}

impl Default for KirchhoffConfig {
    fn default() -> Self {
        KirchhoffConfig::Constant { a: 1.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    /// cells per side
    pub n: usize,
    /// text mesh, relative to the config file
    pub file: Option<PathBuf>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { dim: 2, n: 16, file: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub n_directions: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { n_directions: 20 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberingConfig {
    /// random direction index; the product-of-sines start when absent
    pub direction: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let (Some(f), Some(dir)) = (&cfg.mesh.file, path.parent()) {
        cfg.mesh.file = Some(dir.join(f));
    }
    Ok(cfg)
}

fn weight(mu: &MuConfig) -> Result<Weight, String> {
    Ok(match mu {
        MuConfig::Constant(c) => Weight::Constant(*c),
        MuConfig::Affine(a) => Weight::Affine {
            offset: a.offset,
            slope: a.slope,
        },
        MuConfig::Expression(src) => {
            let e = Expr::parse(src, &["x", "y"])?;
            Weight::Field {
                name: src.clone(),
                f: Arc::new(move |x| e.eval(0.0, *x)),
            }
        }
    })
}

fn nfunction(op: &OperatorConfig) -> Result<NFunctionSpec, String> {
    let spec = match op {
        OperatorConfig::Power { p } => NFunctionSpec::power(*p),
        OperatorConfig::SumPower { p, q, weight } => NFunctionSpec::sum_power(*p, *q, *weight),
        OperatorConfig::DoublePhase { p, q, mu } => NFunctionSpec::double_phase(*p, *q, weight(mu)?),
        OperatorConfig::LogDoublePhase { p, q, mu } => NFunctionSpec::log_double_phase(*p, *q, weight(mu)?),
        OperatorConfig::LogPerturbed { p, q, mu } => NFunctionSpec::log_perturbed_double_phase(*p, *q, weight(mu)?),
        OperatorConfig::Custom { h, dh, d2h } => {
            let vars = ["s", "x", "y"];
            let (h, dh, d2h) = (Expr::parse(h, &vars)?, Expr::parse(dh, &vars)?, Expr::parse(d2h, &vars)?);
            let x_independent = !(h.uses_position() || dh.uses_position() || d2h.uses_position());
            let name = format!("custom({})", h.source());
            let (h, dh, d2h) = (Arc::new(h), Arc::new(dh), Arc::new(d2h));
            NFunctionSpec::custom(CustomNFunction {
                name,
                h: Arc::new(move |x, s| h.eval(s, *x)),
                dh: Arc::new(move |x, s| dh.eval(s, *x)),
                d2h: Arc::new(move |x, s| d2h.eval(s, *x)),
                x_independent,
            })
        }
    };
    spec.map_err(|e| format!("problem.operator: {e}"))
}

fn kirchhoff(k: &KirchhoffConfig) -> Result<KirchhoffSpec, String> {
    let spec = match k {
        KirchhoffConfig::Constant { a } => KirchhoffSpec::constant(*a),
        KirchhoffConfig::AffinePower { a, b, exponent } => KirchhoffSpec::affine_power(*a, *b, *exponent),
        KirchhoffConfig::Custom { m, dm } => {
            let (m, dm) = (Arc::new(Expr::parse(m, &["s"])?), Arc::new(Expr::parse(dm, &["s"])?));
            let name = format!("custom({})", m.source());
            KirchhoffSpec::custom(
                name,
                Arc::new(move |s| m.eval(s, [0.0; 2])),
                Arc::new(move |s| dm.eval(s, [0.0; 2])),
            )
        }
    };
    spec.map_err(|e| format!("problem.kirchhoff: {e}"))
}

pub fn mesh(cfg: &MeshConfig) -> Result<Arc<Mesh>, String> {
    let m = match &cfg.file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Mesh::from_text(&text)
        }
        None => match cfg.dim {
            1 => Mesh::interval(cfg.n),
            2 => Mesh::unit_square(cfg.n, cfg.n),
            d => return Err(format!("mesh.dim = {d}; only 1 and 2 are supported")),
        },
    };
    m.map(Arc::new).map_err(|e| format!("mesh: {e}"))
}

impl RunConfig {
    pub fn lambda(&self) -> Result<f64, String> {
        self.problem.lambda.ok_or_else(|| "problem.lambda is required".to_string())
    }

    pub fn lambda_grid(&self) -> Result<Vec<f64>, String> {
        let grid = match (&self.problem.lambdas, self.problem.lambda) {
            (Some(g), _) => g.clone(),
            (None, Some(l)) => vec![l],
            (None, None) => return Err("problem.lambdas (or problem.lambda) is required".into()),
        };
        if grid.is_empty() {
            return Err("problem.lambdas is empty".into());
        }
        if let Some(bad) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(format!("problem.lambdas contains {bad}; values must be positive"));
        }
        Ok(grid)
    }

    pub fn problem(&self, lambda: f64) -> Result<ProblemSpec, String> {
        let p = &self.problem;
        let f = Reaction::singular(p.gamma).map_err(|e| format!("problem.gamma: {e}"))?;
        let g = Reaction::superlinear(p.r).map_err(|e| format!("problem.r: {e}"))?;
        ProblemSpec::new(nfunction(&p.operator)?, kirchhoff(&p.kirchhoff)?, f, g, lambda, mesh(&self.mesh)?)
            .map_err(|e| format!("problem: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, toml::de::Error> {
        toml::from_str(s)
    }

    const BASE: &str = r#"
[problem]
gamma = 0.5
r = 4.0
lambda = 1e-3

[problem.operator]
kind = "double_phase"
p = 1.5
q = 2.0
mu = 1
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = parse(BASE).unwrap();
        assert_eq!(cfg.mesh.n, 16);
        assert_eq!(cfg.solver.residual_tol, 1e-6);
        assert!(matches!(cfg.problem.kirchhoff, KirchhoffConfig::Constant { a } if a == 1.0));
        assert_eq!(cfg.lambda_grid().unwrap(), vec![1e-3]);
    }

    #[test]
    fn weight_forms() {
        let affine = BASE.replace("mu = 1", "mu = { offset = 1.0, slope = [0.5, 0.0] }");
        assert!(matches!(parse(&affine).unwrap().problem.operator, OperatorConfig::DoublePhase { mu: MuConfig::Affine(_), .. }));
        let expr = BASE.replace("mu = 1", "mu = \"1.0 + x * y\"");
        let cfg = parse(&expr).unwrap();
        let nf = nfunction(&cfg.problem.operator).unwrap();
        assert!(!nf.is_x_independent());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = BASE.replace("gamma", "gama");
        let err = parse(&bad).unwrap_err().to_string();
        assert!(err.contains("gama"), "{err}");
        let bad = format!("{BASE}\n[solver]\nresidual_tol = 1e-6\nfoo = 1\n");
        assert!(parse(&bad).is_err());
        let bad = format!("{BASE}\n[solver.roots]\nn_scn = 10\n");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn empty_grid_is_an_error() {
        let cfg = parse(&BASE.replace("lambda = 1e-3", "lambdas = []")).unwrap();
        assert!(cfg.lambda_grid().is_err());
        assert!(cfg.lambda().is_err());
    }

    #[test]
    fn custom_kirchhoff_is_validated() {
        let k = KirchhoffConfig::Custom {
            m: "1.0 - s".into(),
            dm: "-1.0".into(),
        };
        assert!(kirchhoff(&k).is_err());
        let k = KirchhoffConfig::Custom {
            m: "1.0 + 0.5 * s".into(),
            dm: "0.5".into(),
        };
        assert!(kirchhoff(&k).is_ok());
    }
}
