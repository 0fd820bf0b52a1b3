//! TOML experiment configuration. Unknown keys are rejected, omitted keys
//! take documented defaults, and a validated config serializes back to the
//! same canonical text.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::expr::Expr;
use crate::error::{Error, Result};
use crate::operator::{make_kernel, KernelSpec, SphericalDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SolveElliptic,
    SolveParabolic,
    FitExponent,
    Blowup,
    VerifyBarrier,
    Gamma,
    Symbol,
    Harnack,
    Regularity,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SolveElliptic => "solve-elliptic",
            Scenario::SolveParabolic => "solve-parabolic",
            Scenario::FitExponent => "fit-exponent",
            Scenario::Blowup => "blowup",
            Scenario::VerifyBarrier => "verify-barrier",
            Scenario::Gamma => "gamma",
            Scenario::Symbol => "symbol",
            Scenario::Harnack => "harnack",
            Scenario::Regularity => "regularity",
        }
    }

    fn needs_obstacle(&self) -> bool {
        matches!(
            self,
            Scenario::SolveElliptic | Scenario::SolveParabolic | Scenario::FitExponent | Scenario::Blowup | Scenario::Regularity
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub dim: usize,
    pub s: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub density_mean: f64,
    pub density_cos: Vec<f64>,
    pub density_sin: Vec<f64>,
    pub drift: Vec<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            dim: 1,
            s: 0.5,
            lambda: 1.0,
            big_lambda: 1.0,
            density_mean: 1.0,
            density_cos: vec![],
            density_sin: vec![],
            drift: vec![],
        }
    }
}

impl KernelConfig {
    pub fn build(&self) -> Result<KernelSpec> {
        make_kernel(
            self.s,
            self.lambda,
            self.big_lambda,
            SphericalDensity {
                mean: self.density_mean,
                cos: self.density_cos.clone(),
                sin: self.density_sin.clone(),
            },
            self.drift.clone(),
            self.dim,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// The box is `[-half_width, half_width]^n`.
    pub half_width: f64,
    pub h: f64,
    /// Final time of the parabolic problem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_width: 2.0,
            h: 1.0 / 128.0,
            horizon: None,
            steps: None,
        }
    }
}

impl GridConfig {
    pub fn nodes(&self) -> usize {
        (2.0 * self.half_width / self.h).round() as usize + 1
    }
}

/// A written `[obstacle]` section must give `expr` and exactly one of
/// `support` or `bound`; the defaults apply only when the section is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub expr: String,
    /// Radius of a ball containing the support, when compact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<f64>,
    /// Bound on `|φ|` outside the box when the support is not compact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        ObstacleConfig {
            expr: "pos(1 - x^2)^2".into(),
            support: Some(1.0),
            bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Absolute tolerance of the far-field quadrature.
    pub quad_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 200_000,
            omega: None,
            quad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Probe times for space-time solutions; all boundary points when empty.
    pub times: Vec<f64>,
    pub gap_tol: f64,
    /// Growth power used to interpolate the boundary between nodes; `1 + s`
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_power: Option<f64>,
    pub normal_radius: f64,
    /// Smallest radius in units of `h`.
    pub r_min_cells: f64,
    pub r_max: f64,
    pub delta_cls: f64,
    pub eps_c: f64,
    pub min_r2: f64,
    pub blowup_radii: Vec<f64>,
    pub blowup_nodes: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            times: vec![],
            gap_tol: 1e-9,
            boundary_power: None,
            normal_radius: 0.15,
            r_min_cells: 4.0,
            r_max: 0.25,
            delta_cls: 0.12,
            eps_c: 0.2,
            min_r2: 0.98,
            blowup_radii: vec![0.25, 0.177, 0.125, 0.088],
            blowup_nodes: 33,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierChoice {
    ExpCusp,
    ConeSuper,
    TravelingConeSub,
    PowerRegularized,
    HeatTailSuper,
}

impl BarrierChoice {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "exp-cusp" => BarrierChoice::ExpCusp,
            "cone-super" => BarrierChoice::ConeSuper,
            "traveling-cone-sub" => BarrierChoice::TravelingConeSub,
            "power-regularized" => BarrierChoice::PowerRegularized,
            "heat-tail-super" => BarrierChoice::HeatTailSuper,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierConfig {
    pub kind: BarrierChoice,
    pub e: Vec<f64>,
    /// Cusp exponent, or cone decay exponent.
    pub theta: f64,
    pub eta: f64,
    /// Cusp or front speed.
    pub v: f64,
    pub parabolic: bool,
    pub omega: f64,
    /// Cone half-opening.
    pub theta0: f64,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    pub eps: f64,
    /// Candidates for the searched parameter (θ for cones, γ for traveling
    /// cones); the given value alone when empty.
    pub search: Vec<f64>,
    pub spacings: Vec<f64>,
    pub sample_step: f64,
    pub max_doublings: usize,
    pub radii: Vec<f64>,
    pub nodes_per_unit: usize,
    pub steps: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig {
            kind: BarrierChoice::ConeSuper,
            e: vec![1.0],
            theta: 0.2,
            eta: 0.5,
            v: 0.0,
            parabolic: false,
            omega: 0.5,
            theta0: std::f64::consts::FRAC_PI_3,
            gamma: 0.3,
            gamma0: None,
            eps: 0.2,
            search: vec![],
            spacings: vec![0.0625, 0.03125, 0.015625],
            sample_step: 0.1,
            max_doublings: 10,
            radii: vec![2.0, 4.0, 8.0],
            nodes_per_unit: 16,
            steps: 64,
        }
    }
}

impl BarrierConfig {
    /// Applies `key=value` overrides separated by commas.
    pub fn apply_params(&mut self, params: &str) -> Result<()> {
        let bad = |msg: String| Error::Config {
            code: "E_PARAM",
            line: 0,
            msg,
        };
        for item in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("expected key=value, got '{item}'")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || v.parse::<f64>().map_err(|_| bad(format!("'{v}' is not a number for {k}")));
            let list = || -> Result<Vec<f64>> {
                v.split(';').map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("'{v}' is not a list of numbers for {k}")))).collect()
            };
            match k {
                "theta" => self.theta = num()?,
                "eta" => self.eta = num()?,
                "v" => self.v = num()?,
                "omega" => self.omega = num()?,
                "theta0" => self.theta0 = num()?,
                "gamma" => self.gamma = num()?,
                "gamma0" => self.gamma0 = Some(num()?),
                "eps" => self.eps = num()?,
                "parabolic" => self.parabolic = num()? != 0.0,
                "e" => self.e = list()?,
                "search" => self.search = list()?,
                "spacings" => self.spacings = list()?,
                _ => return Err(bad(format!("unknown barrier parameter '{k}'"))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaConfig {
    pub directions: Vec<Vec<f64>>,
    pub speeds: Vec<f64>,
    /// `|ξ|` values for the symbol table.
    pub magnitudes: Vec<f64>,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            directions: vec![],
            speeds: vec![0.0, 0.5, 1.0, 2.0],
            magnitudes: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnackConfig {
    pub e: Vec<f64>,
    pub opening: f64,
    pub omega: f64,
    pub eps: f64,
    pub h: f64,
    pub half_width: f64,
    pub horizon: f64,
    pub steps: usize,
    pub radii: Vec<f64>,
    pub floor: f64,
    /// Initial data and forcing of the two solutions; built-in generic data
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing2: Option<String>,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        HarnackConfig {
            e: vec![1.0],
            opening: std::f64::consts::FRAC_PI_2,
            omega: 0.0,
            eps: 0.01,
            h: 1.0 / 128.0,
            half_width: 3.0,
            horizon: 1.5,
            steps: 192,
            radii: vec![0.5, 0.25, 0.125, 0.0625],
            floor: 1e-6,
            initial1: None,
            initial2: None,
            forcing1: None,
            forcing2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularityConfig {
    pub eps: f64,
    pub t1: f64,
    pub t2: f64,
    /// Exponent of the parabolic Hölder seminorm of `u`.
    pub beta: f64,
    pub pair_budget: u64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig {
            eps: 0.0,
            t1: 0.25,
            t2: 1.0,
            beta: 0.5,
            pair_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub write_grids: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { write_grids: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<ObstacleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<BarrierConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harnack: Option<HarnackConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<RegularityConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside `[section]` (top level when `None`); 0 if absent.
pub fn key_line(text: &str, section: Option<&str>, key: &str) -> usize {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = Some(rest.trim_end_matches(']').trim().to_string());
            continue;
        }
        let here = match (&current, section) {
            (None, None) => true,
            (Some(c), Some(s)) => c == s,
            _ => false,
        };
        if here {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    0
}

impl ExperimentConfig {
    /// Parses and validates, filling the sections the scenario needs with
    /// defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let line = e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(0);
            let code = if msg.contains("unknown field") {
                "E_UNKNOWN_KEY"
            } else if msg.contains("invalid type") || msg.contains("invalid value") || msg.contains("unknown variant") {
                "E_TYPE"
            } else if msg.contains("missing field") {
                "E_MISSING"
            } else {
                "E_SYNTAX"
            };
            Error::Config { code, line, msg }
        })?;
        cfg.complete();
        cfg.validate(text)?;
        Ok(cfg)
    }

    /// A config with every needed section at its defaults.
    pub fn defaults(scenario: Scenario) -> Self {
        let mut cfg = ExperimentConfig {
            scenario,
            seed: 0,
            kernel: KernelConfig::default(),
            grid: None,
            obstacle: None,
            solver: None,
            fit: None,
            barrier: None,
            gamma: None,
            harnack: None,
            regularity: None,
            output: OutputConfig::default(),
        };
        cfg.complete();
        cfg
    }

    fn complete(&mut self) {
        use Scenario::*;
        let sc = self.scenario;
        if sc.needs_obstacle() {
            self.grid.get_or_insert_with(GridConfig::default);
            self.obstacle.get_or_insert_with(ObstacleConfig::default);
            self.solver.get_or_insert_with(SolverConfig::default);
        }
        if matches!(sc, SolveParabolic | Regularity) {
            let g = self.grid.as_mut().unwrap();
            g.horizon.get_or_insert(1.0);
            g.steps.get_or_insert(128);
        }
        if matches!(sc, FitExponent | Blowup) {
            self.fit.get_or_insert_with(FitConfig::default);
        }
        match sc {
            VerifyBarrier => {
                self.barrier.get_or_insert_with(BarrierConfig::default);
            }
            Gamma | Symbol => {
                let dim = self.kernel.dim;
                let g = self.gamma.get_or_insert_with(GammaConfig::default);
                if g.directions.is_empty() {
                    let mut e = vec![0.0; dim.max(1)];
                    e[0] = 1.0;
                    g.directions.push(e);
                }
            }
            Harnack => {
                self.harnack.get_or_insert_with(HarnackConfig::default);
            }
            Regularity => {
                self.regularity.get_or_insert_with(RegularityConfig::default);
            }
            _ => {}
        }
    }

    /// Semantic checks; `text` is only used to locate offending lines.
    pub fn validate(&self, text: &str) -> Result<()> {
        // TOML integers are signed
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config {
                code: "E_RANGE",
                line: key_line(text, None, "seed"),
                msg: format!("seed {} exceeds {}", self.seed, i64::MAX),
            });
        }
        let k = &self.kernel;
        if k.drift.iter().any(|b| *b != 0.0) && k.s != 0.5 {
            let line = key_line(text, Some("kernel"), "drift");
            return Err(Error::Config {
                code: "E_DRIFT_S",
                line,
                msg: format!("a drift requires s = 1/2 (got s = {})", k.s),
            });
        }
        if let Err(e) = k.build() {
            return Err(Error::Config {
                code: "E_KERNEL",
                line: key_line(text, Some("kernel"), "s"),
                msg: e.to_string(),
            });
        }
        let range = |ok: bool, section: &str, key: &str, msg: String| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config {
                    code: "E_RANGE",
                    line: key_line(text, Some(section), key),
                    msg,
                })
            }
        };
        if let Some(g) = &self.grid {
            range(g.h > 0.0 && g.half_width > g.h, "grid", "h", format!("need 0 < h < half_width (got {}, {})", g.h, g.half_width))?;
            if let Some(t) = g.horizon {
                range(t > 0.0, "grid", "horizon", format!("horizon must be positive (got {t})"))?;
            }
            if let Some(n) = g.steps {
                range(n > 0, "grid", "steps", "steps must be positive".into())?;
            }
            let nodes = g.nodes().pow(k.dim as u32);
            range(nodes <= 1 << 20, "grid", "h", format!("{nodes} grid nodes exceed the limit of 2^20"))?;
        }
        if let Some(o) = &self.obstacle {
            let e = Expr::parse(&o.expr).map_err(|e| Error::Config {
                code: "E_EXPR",
                line: key_line(text, Some("obstacle"), "expr"),
                msg: e.to_string(),
            })?;
            range(e.dims_used <= k.dim, "obstacle", "expr", format!("expression uses {} coordinates in dimension {}", e.dims_used, k.dim))?;
            range(!e.uses_time, "obstacle", "expr", "obstacles do not depend on t".into())?;
            range(!(o.support.is_some() && o.bound.is_some()), "obstacle", "bound", "give either `support` or `bound`, not both".into())?;
            if o.support.is_none() && o.bound.is_none() {
                return Err(Error::Config {
                    code: "E_MISSING",
                    line: key_line(text, Some("obstacle"), "expr"),
                    msg: "obstacle needs either `support` or `bound` for its values outside the box".into(),
                });
            }
        }
        if let Some(h) = &self.harnack {
            for (key, src) in [("initial1", &h.initial1), ("initial2", &h.initial2), ("forcing1", &h.forcing1), ("forcing2", &h.forcing2)] {
                if let Some(src) = src {
                    Expr::parse(src).map_err(|e| Error::Config {
                        code: "E_EXPR",
                        line: key_line(text, Some("harnack"), key),
                        msg: e.to_string(),
                    })?;
                }
            }
        }
        if let Some(r) = &self.regularity {
            range(r.beta > 0.0 && r.beta < 1.0, "regularity", "beta", format!("β = {} outside (0, 1)", r.beta))?;
        }
        if self.scenario == Scenario::Harnack {
            let s = k.s;
            range(s >= 0.5, "kernel", "s", format!("boundary Harnack needs s ≥ 1/2 (got {s})"))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(text: &str) -> (&'static str, usize) {
        match ExperimentConfig::parse(text).unwrap_err() {
            Error::Config { code, line, .. } => (code, line),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn minimal_elliptic_gets_defaults() {
        let c = ExperimentConfig::parse("scenario = \"solve-elliptic\"\n").unwrap();
        assert_eq!(c.grid, Some(GridConfig::default()));
        assert_eq!(c.obstacle.as_ref().unwrap().expr, "pos(1 - x^2)^2");
        assert!(c.fit.is_none());
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml(), c.to_toml());
    }

    #[test]
    fn error_codes() {
        assert_eq!(code("scenario = \"gamma\"\n[kernel]\ns = 0.75\ndrift = [1.0]\n"), ("E_DRIFT_S", 4));
        assert_eq!(code("scenario = \"gamma\"\nsed = 3\n").0, "E_UNKNOWN_KEY");
        assert_eq!(code("scenario = \"gamma\"\n[kernel]\ns = \"half\"\n"), ("E_TYPE", 3));
        assert_eq!(code("seed = 1\n").0, "E_MISSING");
        assert_eq!(code("scenario = \"solve-elliptic\"\n[obstacle]\nexpr = \"1 +\"\n"), ("E_EXPR", 3));
        assert_eq!(code("scenario = \"gamma\"\n[kernel]\ns = 1.5\n").0, "E_KERNEL");
        assert_eq!(code("scenario = [\n").0, "E_SYNTAX");
    }

    #[test]
    fn barrier_param_overrides() {
        let mut b = BarrierConfig::default();
        b.apply_params("theta=0.1, e=0.6;0.8").unwrap();
        assert_eq!(b.theta, 0.1);
        assert_eq!(b.e, vec![0.6, 0.8]);
        assert!(b.apply_params("nope=1").is_err());
    }
}
