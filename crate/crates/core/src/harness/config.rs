use std::fmt;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::iterative::{C3Variant, IterConfig, QuadRule};
use crate::problems::{
    build_scalar_noise_problem, build_vectorial_2x2, build_vectorial_mxm, CoulombProblem, CoulombState,
    LinearSdeProblem, Perturbation,
};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Named problem presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemPreset {
    /// 10×10 drift, single noise operator.
    Scalar10,
    /// 2×2 system with two noise operators at a named perturbation level.
    Vec2x2(Perturbation),
    /// m×m system with two noise operators.
    VecMxM(usize),
    Coulomb,
}

impl ProblemPreset {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("scalar10", None) => Ok(ProblemPreset::Scalar10),
            ("coulomb", None) => Ok(ProblemPreset::Coulomb),
            ("vec2x2", None) => Ok(ProblemPreset::Vec2x2(Perturbation::Weak01)),
            ("vec2x2", Some(a)) => Perturbation::parse(a)
                .map(ProblemPreset::Vec2x2)
                .ok_or_else(|| config_err(format!("unknown perturbation `{a}` (weak01, weak001, strong)"))),
            ("vecMxM", Some(a)) => match a.parse::<usize>() {
                Ok(m) if m >= 2 => Ok(ProblemPreset::VecMxM(m)),
                _ => Err(config_err(format!("vecMxM needs an integer size >= 2, got `{a}`"))),
            },
            _ => Err(config_err(format!(
                "unknown problem `{s}` (scalar10, vec2x2:<level>, vecMxM:<m>, coulomb)"
            ))),
        }
    }

    pub fn is_coulomb(self) -> bool {
        self == ProblemPreset::Coulomb
    }

    /// Number of independent Wiener components.
    pub fn noise_dims(self) -> usize {
        match self {
            ProblemPreset::Scalar10 => 1,
            ProblemPreset::Vec2x2(_) | ProblemPreset::VecMxM(_) => 2,
            ProblemPreset::Coulomb => 3,
        }
    }

    /// The linear problem behind a non-Coulomb preset.
    pub fn linear(self, t_end: f64) -> Result<LinearSdeProblem> {
        let p = match self {
            ProblemPreset::Scalar10 => build_scalar_noise_problem(),
            ProblemPreset::Vec2x2(level) => build_vectorial_2x2(1.0, level.alpha2())?,
            ProblemPreset::VecMxM(m) => build_vectorial_mxm(m)?,
            ProblemPreset::Coulomb => return Err(config_err("coulomb is not a linear problem")),
        };
        p.with_t_end(t_end)
    }
}

impl fmt::Display for ProblemPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemPreset::Scalar10 => write!(f, "scalar10"),
            ProblemPreset::Vec2x2(p) => write!(f, "vec2x2:{}", p.name()),
            ProblemPreset::VecMxM(m) => write!(f, "vecMxM:{m}"),
            ProblemPreset::Coulomb => write!(f, "coulomb"),
        }
    }
}

/// Integrator selection. Coulomb sweep parameters left as `None` take the
/// experiment-wide defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Em,
    Milstein,
    MilsteinFull,
    AbSplit,
    Summative(usize),
    Iter(usize),
    CoulombRelax { sweeps: Option<usize>, rule: Option<QuadRule> },
    CoulombTaylor { sweeps: Option<usize>, rule: Option<QuadRule> },
}

fn parse_sweep_args(name: &str, arg: Option<&str>) -> Result<(Option<usize>, Option<QuadRule>)> {
    let Some(arg) = arg else { return Ok((None, None)) };
    let mut sweeps = None;
    let mut rule = None;
    for part in arg.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some(r) = QuadRule::parse(part) {
            rule = Some(r);
        } else {
            match part.parse::<usize>() {
                Ok(n) if n >= 1 => sweeps = Some(n),
                _ => return Err(config_err(format!("{name}: bad argument `{part}` (expected <sweeps>,<rule>)"))),
            }
        }
    }
    Ok((sweeps, rule))
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let count = |what: &str| -> Result<usize> {
            match arg.map(|a| a.trim().parse::<usize>()) {
                Some(Ok(n)) if n >= 1 => Ok(n),
                _ => Err(config_err(format!("{head} needs a positive {what}, e.g. `{head}:2`"))),
            }
        };
        match head {
            "em" if arg.is_none() => Ok(Scheme::Em),
            "milstein" if arg.is_none() => Ok(Scheme::Milstein),
            "milstein_full" if arg.is_none() => Ok(Scheme::MilsteinFull),
            "ab_split" if arg.is_none() => Ok(Scheme::AbSplit),
            "summative" => Ok(Scheme::Summative(count("sub-step count")?)),
            "iter" => {
                let k = count("iteration count")?;
                if k > 3 {
                    return Err(config_err(format!("iter:{k}: iteration count must be 1, 2 or 3")));
                }
                Ok(Scheme::Iter(k))
            }
            "coulomb_relax" => {
                let (sweeps, rule) = parse_sweep_args(head, arg)?;
                Ok(Scheme::CoulombRelax { sweeps, rule })
            }
            "coulomb_taylor" => {
                let (sweeps, rule) = parse_sweep_args(head, arg)?;
                Ok(Scheme::CoulombTaylor { sweeps, rule })
            }
            _ => Err(config_err(format!("unknown scheme `{s}`"))),
        }
    }

    /// Parses a comma-separated list. A quadrature-rule token directly after
    /// a `coulomb_*:<sweeps>` entry belongs to that entry.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let mut merged: Vec<String> = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let joins = QuadRule::parse(tok).is_some()
                && merged.last().is_some_and(|l| l.starts_with("coulomb_") && l.contains(':'));
            if joins {
                let last = merged.last_mut().expect("checked");
                last.push(',');
                last.push_str(tok);
            } else {
                merged.push(tok.to_string());
            }
        }
        if merged.is_empty() {
            return Err(config_err("scheme list is empty"));
        }
        merged.iter().map(|t| Self::parse(t)).collect()
    }

    /// Fills unset sweep parameters from the defaults.
    pub fn resolved(self, defaults: &IterConfig) -> Self {
        match self {
            Scheme::CoulombRelax { sweeps, rule } => Scheme::CoulombRelax {
                sweeps: Some(sweeps.unwrap_or(defaults.sweeps)),
                rule: Some(rule.unwrap_or(defaults.quad_rule)),
            },
            Scheme::CoulombTaylor { sweeps, rule } => Scheme::CoulombTaylor {
                sweeps: Some(sweeps.unwrap_or(defaults.sweeps)),
                rule: Some(rule.unwrap_or(defaults.quad_rule)),
            },
            s => s,
        }
    }

    /// Rejects pairings the scheme is not defined for.
    pub fn check_compatible(self, problem: ProblemPreset) -> Result<()> {
        let single = problem.noise_dims() == 1;
        let ok = match self {
            Scheme::Em | Scheme::Milstein => true,
            Scheme::MilsteinFull | Scheme::Iter(1 | 2) => !problem.is_coulomb(),
            Scheme::AbSplit | Scheme::Summative(_) | Scheme::Iter(_) => single,
            Scheme::CoulombRelax { .. } | Scheme::CoulombTaylor { .. } => problem.is_coulomb(),
        };
        if ok {
            Ok(())
        } else {
            Err(config_err(format!("scheme `{self}` is not available for problem `{problem}`")))
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sweep_args = |f: &mut fmt::Formatter<'_>, name: &str, s: &Option<usize>, r: &Option<QuadRule>| {
            write!(f, "{name}")?;
            match (s, r) {
                (None, None) => Ok(()),
                (Some(s), None) => write!(f, ":{s}"),
                (None, Some(r)) => write!(f, ":{}", r.name()),
                (Some(s), Some(r)) => write!(f, ":{s},{}", r.name()),
            }
        };
        match self {
            Scheme::Em => write!(f, "em"),
            Scheme::Milstein => write!(f, "milstein"),
            Scheme::MilsteinFull => write!(f, "milstein_full"),
            Scheme::AbSplit => write!(f, "ab_split"),
            Scheme::Summative(n) => write!(f, "summative:{n}"),
            Scheme::Iter(k) => write!(f, "iter:{k}"),
            Scheme::CoulombRelax { sweeps, rule } => sweep_args(f, "coulomb_relax", sweeps, rule),
            Scheme::CoulombTaylor { sweeps, rule } => sweep_args(f, "coulomb_taylor", sweeps, rule),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Exact map on the finest grid of the step list; linear problems only.
    ExactLinear,
    /// Milstein on a fine grid of the given step.
    FineMilstein(f64),
}

impl Reference {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exact_linear" {
            return Ok(Reference::ExactLinear);
        }
        if let Some(dt) = s.strip_prefix("fine_milstein:") {
            return match dt.trim().parse::<f64>() {
                Ok(h) if h > 0.0 && h.is_finite() => Ok(Reference::FineMilstein(h)),
                _ => Err(config_err(format!("fine_milstein needs a positive step, got `{dt}`"))),
            };
        }
        Err(config_err(format!("unknown reference `{s}` (exact_linear, fine_milstein:<dt>)")))
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::ExactLinear => write!(f, "exact_linear"),
            Reference::FineMilstein(h) => write!(f, "fine_milstein:{h}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(config_err(format!("unknown format `{other}` (csv, json)"))),
        }
    }
}

/// Default reference step for the Coulomb problem.
pub const COULOMB_REFERENCE_DT: f64 = 1e-5;

/// One experiment: problem, schemes, grid, ensemble and output options.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemPreset,
    pub schemes: Vec<Scheme>,
    pub dt_list: Vec<f64>,
    pub n_paths: usize,
    pub t_end: f64,
    pub master_seed: u64,
    /// `None` picks `exact_linear` for linear problems and a fine Milstein
    /// run at [`COULOMB_REFERENCE_DT`] for the Coulomb problem.
    pub reference: Option<Reference>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub dump_noise: Option<PathBuf>,
    pub zero_noise: bool,
    pub v0: Option<f64>,
    pub mu0: Option<f64>,
    pub phi0: Option<f64>,
    pub iter: IterConfig,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    /// Largest tolerated fraction of failed paths in any cell.
    pub max_failures: f64,
    /// Record wall-clock runtimes. When off every runtime is written as 0.
    pub timing: bool,
    pub plot_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemPreset::Scalar10,
            schemes: vec![Scheme::Em, Scheme::Milstein],
            dt_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            n_paths: 1000,
            t_end: 1.0,
            master_seed: 0,
            reference: None,
            output: None,
            format: OutputFormat::Csv,
            dump_noise: None,
            zero_noise: false,
            v0: None,
            mu0: None,
            phi0: None,
            iter: IterConfig::default(),
            workers: 0,
            max_failures: 0.1,
            timing: true,
            plot_dir: None,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        _ => Err(config_err(format!("{key}: expected a boolean, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| config_err(format!("{key}: cannot parse `{v}`")))
}

impl ExperimentConfig {
    /// Sets one option. Keys use the long flag names; `-` and `_` are
    /// interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "problem" => self.problem = ProblemPreset::parse(v)?,
            "schemes" => self.schemes = Scheme::parse_list(v)?,
            "dt_list" => {
                self.dt_list = v
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| parse_num::<f64>("dt_list", t))
                    .collect::<Result<_>>()?
            }
            "paths" | "n_paths" => self.n_paths = parse_num("paths", v)?,
            "t_end" => self.t_end = parse_num("t_end", v)?,
            "seed" | "master_seed" => self.master_seed = parse_num("seed", v)?,
            "reference" => self.reference = if v == "auto" { None } else { Some(Reference::parse(v)?) },
            "output" => self.output = Some(PathBuf::from(v)),
            "format" => self.format = OutputFormat::parse(v)?,
            "dump_noise" => self.dump_noise = Some(PathBuf::from(v)),
            "zero_noise" => self.zero_noise = parse_bool("zero_noise", v)?,
            "v0" => self.v0 = Some(parse_num("v0", v)?),
            "mu0" => self.mu0 = Some(parse_num("mu0", v)?),
            "phi0" => self.phi0 = Some(parse_num("phi0", v)?),
            "sweeps" => self.iter.sweeps = parse_num("sweeps", v)?,
            "quad_rule" => {
                self.iter.quad_rule =
                    QuadRule::parse(v).ok_or_else(|| config_err(format!("unknown quad_rule `{v}`")))?
            }
            "iter_substeps" => self.iter.quadrature_substeps = parse_num("iter_substeps", v)?,
            "c3_variant" => {
                self.iter.c3_variant = C3Variant::parse(v).ok_or_else(|| {
                    config_err(format!("unknown c3_variant `{v}` (riemann, unweighted, increment)"))
                })?
            }
            "workers" => self.workers = parse_num("workers", v)?,
            "max_failures" => self.max_failures = parse_num("max_failures", v)?,
            "timing" => self.timing = parse_bool("timing", v)?,
            "plot_dir" => self.plot_dir = Some(PathBuf::from(v)),
            _ => return Err(config_err(format!("unknown option `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => config_err(format!("line {}: {m}", n + 1)),
                e => e,
            })?;
        }
        Ok(())
    }

    /// Defaults overlaid with `key=value` text, then validated.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolved_reference(&self) -> Reference {
        self.reference.unwrap_or(if self.problem.is_coulomb() {
            Reference::FineMilstein(COULOMB_REFERENCE_DT)
        } else {
            Reference::ExactLinear
        })
    }

    /// Step of the common fine grid all paths are drawn on.
    pub fn reference_dt(&self) -> f64 {
        match self.resolved_reference() {
            Reference::FineMilstein(h) => h,
            Reference::ExactLinear => self.dt_list.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Schemes with Coulomb sweep defaults filled in.
    pub fn resolved_schemes(&self) -> Vec<Scheme> {
        self.schemes.iter().map(|s| s.resolved(&self.iter)).collect()
    }

    /// Coulomb initial state with overrides applied.
    pub fn coulomb_initial(&self, p: &CoulombProblem) -> CoulombState {
        let d = p.default_initial();
        CoulombState::new(self.v0.unwrap_or(d.v), self.mu0.unwrap_or(d.mu), self.phi0.unwrap_or(d.phi))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(config_err("paths must be at least 1"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(config_err(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.dt_list.is_empty() {
            return Err(config_err("dt_list is empty"));
        }
        if self.schemes.is_empty() {
            return Err(config_err("scheme list is empty"));
        }
        if !(0.0..=1.0).contains(&self.max_failures) {
            return Err(config_err(format!("max_failures must lie in [0, 1], got {}", self.max_failures)));
        }
        self.iter.validate().map_err(|e| config_err(e.to_string()))?;
        for s in &self.schemes {
            s.check_compatible(self.problem)?;
        }
        if self.problem.is_coulomb() {
            if self.resolved_reference() == Reference::ExactLinear {
                return Err(config_err("reference `exact_linear` is not available for problem `coulomb`"));
            }
            let p = CoulombProblem::default();
            let s0 = self.coulomb_initial(&p);
            if !s0.is_finite() || s0.v < 0.0 || s0.mu.abs() > 1.0 - p.epsilon_mu() {
                return Err(config_err(format!(
                    "initial state (v0={}, mu0={}, phi0={}) needs v0 >= 0 and |mu0| <= 1 - {}",
                    s0.v,
                    s0.mu,
                    s0.phi,
                    p.epsilon_mu()
                )));
            }
        } else if self.v0.is_some() || self.mu0.is_some() || self.phi0.is_some() {
            return Err(config_err(format!("v0/mu0/phi0 apply to the coulomb problem, not `{}`", self.problem)));
        }
        for s in self.resolved_schemes() {
            if let Scheme::CoulombRelax { sweeps: Some(n), rule: Some(r) }
            | Scheme::CoulombTaylor { sweeps: Some(n), rule: Some(r) } = s
            {
                let c = IterConfig { sweeps: n, quad_rule: r, ..self.iter };
                c.validate().map_err(|e| config_err(format!("{s}: {e}")))?;
            }
        }
        let h = self.reference_dt();
        if !(h > 0.0 && h.is_finite()) {
            return Err(config_err("reference step must be positive"));
        }
        grid_steps(self.t_end, h).map_err(|_| {
            config_err(format!("reference step {h} does not divide t_end = {}", self.t_end))
        })?;
        for &dt in &self.dt_list {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err(format!("dt values must be positive, got {dt}")));
            }
            grid_steps(dt, h)
                .map_err(|_| config_err(format!("dt = {dt} is not a multiple of the reference step {h}")))?;
            grid_steps(self.t_end, dt).map_err(|_| config_err(format!("dt = {dt} does not divide t_end = {}", self.t_end)))?;
        }
        Ok(())
    }
}

/// `round(span / h)` when `span` is an integer multiple of `h`.
pub(crate) fn grid_steps(span: f64, h: f64) -> Result<usize> {
    let r = span / h;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * n {
        return Err(Error::invalid(format!("{span} is not a multiple of {h}")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_round_trip() {
        for s in [
            "em",
            "milstein",
            "milstein_full",
            "ab_split",
            "summative:8",
            "iter:3",
            "coulomb_relax",
            "coulomb_relax:3,simpson",
            "coulomb_taylor:2",
        ] {
            assert_eq!(Scheme::parse(s).unwrap().to_string(), s);
        }
        assert!(Scheme::parse("iter:4").is_err());
        assert!(Scheme::parse("summative").is_err());
        assert!(Scheme::parse("rk4").is_err());
    }

    #[test]
    fn list_rejoins_quadrature_tokens() {
        let l = Scheme::parse_list("em, coulomb_relax:3,simpson,coulomb_taylor:1,trapezoid,milstein").unwrap();
        assert_eq!(
            l,
            vec![
                Scheme::Em,
                Scheme::CoulombRelax { sweeps: Some(3), rule: Some(QuadRule::Simpson) },
                Scheme::CoulombTaylor { sweeps: Some(1), rule: Some(QuadRule::Trapezoid) },
                Scheme::Milstein,
            ]
        );
    }

    #[test]
    fn compatibility_matrix() {
        let v = ProblemPreset::VecMxM(10);
        assert!(Scheme::AbSplit.check_compatible(v).is_err());
        assert!(Scheme::Summative(4).check_compatible(v).is_err());
        assert!(Scheme::Iter(3).check_compatible(v).is_err());
        assert!(Scheme::Iter(2).check_compatible(v).is_ok());
        assert!(Scheme::Iter(3).check_compatible(ProblemPreset::Scalar10).is_ok());
        let relax = Scheme::CoulombRelax { sweeps: None, rule: None };
        assert!(relax.check_compatible(ProblemPreset::Scalar10).is_err());
        assert!(relax.check_compatible(ProblemPreset::Coulomb).is_ok());
        assert!(Scheme::MilsteinFull.check_compatible(ProblemPreset::Coulomb).is_err());
        let msg = Scheme::AbSplit.check_compatible(v).unwrap_err().to_string();
        assert!(msg.contains("ab_split") && msg.contains("vecMxM:10"));
    }

    #[test]
    fn text_config() {
        let cfg = ExperimentConfig::from_text(
            "# comment\nproblem = vec2x2:strong\nschemes=em,milstein_full\ndt-list=0.1,0.05\npaths=5\nseed=7\ntiming=off\n",
        )
        .unwrap();
        assert_eq!(cfg.problem, ProblemPreset::Vec2x2(Perturbation::Strong));
        assert_eq!(cfg.dt_list, vec![0.1, 0.05]);
        assert_eq!((cfg.n_paths, cfg.master_seed, cfg.timing), (5, 7, false));
        assert_eq!(cfg.reference_dt(), 0.05);

        assert!(ExperimentConfig::from_text("bogus=1").is_err());
        assert!(ExperimentConfig::from_text("paths").is_err());
        assert!(ExperimentConfig::from_text("paths=0").is_err());
        assert!(ExperimentConfig::from_text("dt_list=0.3").is_err());
        assert!(ExperimentConfig::from_text("problem=coulomb\nschemes=em\nreference=exact_linear").is_err());
        assert!(ExperimentConfig::from_text("mu0=0.5").is_err());
        assert!(ExperimentConfig::from_text("problem=coulomb\nschemes=em\nmu0=1.0").is_err());
        assert!(ExperimentConfig::from_text("quad_rule=simpson\niter_substeps=3").is_err());
    }

    #[test]
    fn coulomb_reference_default() {
        let cfg = ExperimentConfig::from_text("problem=coulomb\nschemes=em,coulomb_relax").unwrap();
        assert_eq!(cfg.resolved_reference(), Reference::FineMilstein(COULOMB_REFERENCE_DT));
        assert_eq!(
            cfg.resolved_schemes()[1],
            Scheme::CoulombRelax { sweeps: Some(2), rule: Some(QuadRule::Trapezoid) }
        );
    }

    #[test]
    fn grid_checks() {
        assert_eq!(grid_steps(1.0, 0.1).unwrap(), 10);
        assert_eq!(grid_steps(0.1, 1e-5).unwrap(), 10_000);
        assert!(grid_steps(1.0, 0.3).is_err());
        assert!(grid_steps(0.1, 1.0).is_err());
    }
}
