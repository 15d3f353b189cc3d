//! Scenario files: TOML with a `medium`, an optional `units` and a `scenario` table.

use qedk_core::medium::{FrequencyGrid, MediumModel, SusceptibilityKernel, TabulatedKernel, UnitsSystem};
use qedk_core::Branch;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::{Table, Value};

/// A problem with the configuration, located by its dotted key path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("`{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { key: key.into(), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Kernels,
    Coupling,
    Commutator,
    Energy,
    Kk,
    Example1,
    Example2,
    Example3,
    Example4,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::Kernels,
        ScenarioKind::Coupling,
        ScenarioKind::Commutator,
        ScenarioKind::Energy,
        ScenarioKind::Kk,
        ScenarioKind::Example1,
        ScenarioKind::Example2,
        ScenarioKind::Example3,
        ScenarioKind::Example4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Kernels => "kernels",
            ScenarioKind::Coupling => "coupling",
            ScenarioKind::Commutator => "commutator",
            ScenarioKind::Energy => "energy",
            ScenarioKind::Kk => "kk",
            ScenarioKind::Example1 => "example1",
            ScenarioKind::Example2 => "example2",
            ScenarioKind::Example3 => "example3",
            ScenarioKind::Example4 => "example4",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ScenarioKind::Kernels => "r, h, Z and the reservoir kernels over the time window",
            ScenarioKind::Coupling => "coupling spectra and the chi round trip",
            ScenarioKind::Commutator => "canonical commutator on the reservoir grid",
            ScenarioKind::Energy => "medium energy of the instantaneous limit",
            ScenarioKind::Kk => "Kramers-Kronig consistency of the permittivity",
            ScenarioKind::Example1 => "vacuum: Z is a pure phase, no reservoir coupling",
            ScenarioKind::Example2 => "instantaneous box medium: closed-form Z and conserved energy",
            ScenarioKind::Example3 => "step kernel: damped-oscillator closed form and envelope",
            ScenarioKind::Example4 => "Lorentz oscillator: polariton frequencies or asymptotic Q",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn needs_omega_q(self) -> bool {
        !matches!(self, ScenarioKind::Coupling | ScenarioKind::Kk)
    }

    fn needs_time(self) -> bool {
        !matches!(self, ScenarioKind::Kk)
    }

    fn needs_grid(self) -> bool {
        matches!(self, ScenarioKind::Coupling | ScenarioKind::Commutator | ScenarioKind::Kk)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel parameters as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Zero,
    Instantaneous { chi0: f64 },
    Box { chi0: f64, delta: f64 },
    Step { beta: f64 },
    Lorentz { omega0: f64, gamma: f64, omega_p: f64 },
    Tabulated(TabulatedKernel),
}

impl KernelSpec {
    fn electric(&self) -> qedk_core::Result<SusceptibilityKernel> {
        Ok(match self {
            KernelSpec::Zero => SusceptibilityKernel::Zero,
            KernelSpec::Instantaneous { chi0 } => SusceptibilityKernel::Instantaneous { chi0: *chi0 },
            KernelSpec::Box { chi0, delta } => SusceptibilityKernel::boxcar(*chi0, *delta)?,
            KernelSpec::Step { beta } => SusceptibilityKernel::step(*beta)?,
            KernelSpec::Lorentz { omega0, gamma, omega_p } => SusceptibilityKernel::lorentz(*omega0, *gamma, *omega_p)?,
            KernelSpec::Tabulated(t) => SusceptibilityKernel::Tabulated(t.clone()),
        })
    }

    /// Box and instantaneous magnetic kernels take the static susceptibility `χ_m⁰`.
    fn magnetic(&self) -> qedk_core::Result<SusceptibilityKernel> {
        match self {
            KernelSpec::Instantaneous { chi0 } => SusceptibilityKernel::magnetic_instantaneous(*chi0),
            KernelSpec::Box { chi0, delta } => SusceptibilityKernel::magnetic_box(*chi0, *delta),
            other => other.electric(),
        }
    }

    /// Static strength of a box or instantaneous kernel; 0 for `zero`.
    pub fn static_chi(&self) -> Option<f64> {
        match self {
            KernelSpec::Zero => Some(0.0),
            KernelSpec::Instantaneous { chi0 } | KernelSpec::Box { chi0, .. } => Some(*chi0),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            KernelSpec::Zero => "zero",
            KernelSpec::Instantaneous { .. } => "instantaneous",
            KernelSpec::Box { .. } => "box",
            KernelSpec::Step { .. } => "step",
            KernelSpec::Lorentz { .. } => "lorentz",
            KernelSpec::Tabulated(_) => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumSpec {
    pub chi_e: KernelSpec,
    pub chi_m: KernelSpec,
    pub model: MediumModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl TimeWindow {
    /// `t0, t0 + dt, …` up to and including `t1` (within rounding).
    pub fn samples(&self) -> Vec<f64> {
        let n = ((self.t1 - self.t0) / self.dt * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|i| self.t0 + i as f64 * self.dt).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridRule {
    Uniform,
    GaussLegendre,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub omega_max: f64,
    pub rule: GridRule,
    pub omega_min: Option<f64>,
}

impl GridSpec {
    pub fn build(&self) -> qedk_core::Result<FrequencyGrid> {
        match self.rule {
            GridRule::Uniform => FrequencyGrid::uniform(self.n, self.omega_max),
            GridRule::GaussLegendre => FrequencyGrid::gauss_legendre(self.n, self.omega_max),
            GridRule::Log => FrequencyGrid::log(self.n, self.omega_min.unwrap_or(self.omega_max / 1e4), self.omega_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub medium: MediumSpec,
    pub kind: ScenarioKind,
    omega_q: Option<f64>,
    time: Option<TimeWindow>,
    grid: Option<(GridSpec, FrequencyGrid)>,
    pub branch: Branch,
    /// Reservoir frequencies for the `ω_k`-dependent kernels.
    pub omega_k: Vec<f64>,
    /// Output directory, resolved against the config file's directory.
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn omega_q(&self) -> Result<f64> {
        self.omega_q.ok_or_else(|| missing("scenario.omega_q"))
    }

    pub fn time(&self) -> Result<TimeWindow> {
        self.time.ok_or_else(|| missing("scenario.time"))
    }

    pub fn grid(&self) -> Result<&FrequencyGrid> {
        self.grid.as_ref().map(|g| &g.1).ok_or_else(|| missing("scenario.grid"))
    }

    pub fn grid_spec(&self) -> Option<GridSpec> {
        self.grid.as_ref().map(|g| g.0)
    }

    /// `omega_k` from the file, or `[ω_q]` when absent.
    pub fn reservoir_frequencies(&self) -> Result<Vec<f64>> {
        if self.omega_k.is_empty() {
            Ok(vec![self.omega_q()?])
        } else {
            Ok(self.omega_k.clone())
        }
    }
}

fn missing(key: &str) -> ConfigError {
    ConfigError::new(key, "required key is missing")
}

/// One TOML table and its dotted path.
struct Node<'a> {
    path: String,
    table: &'a Table,
}

impl<'a> Node<'a> {
    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.table.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::new(self.key(k), format!("unknown key (expected one of: {})", allowed.join(", ")))),
            None => Ok(()),
        }
    }

    fn table(&self, k: &str) -> Result<Option<Node<'a>>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Node { path: self.key(k), table: t })),
            Some(_) => Err(ConfigError::new(self.key(k), "expected a table")),
        }
    }

    fn number(&self, k: &str) -> Result<Option<f64>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(v) => as_number(v).map(Some).ok_or_else(|| ConfigError::new(self.key(k), "expected a number")),
        }
    }

    fn required(&self, k: &str) -> Result<f64> {
        self.number(k)?.ok_or_else(|| missing(&self.key(k)))
    }

    fn positive(&self, k: &str) -> Result<Option<f64>> {
        match self.number(k)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(ConfigError::new(self.key(k), format!("must be positive and finite, got {v}"))),
            other => Ok(other),
        }
    }

    fn string(&self, k: &str) -> Result<Option<&'a str>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(ConfigError::new(self.key(k), "expected a string")),
        }
    }

    fn numbers(&self, k: &str) -> Result<Option<Vec<f64>>> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .enumerate()
                .map(|(i, v)| as_number(v).ok_or_else(|| ConfigError::new(format!("{}[{i}]", self.key(k)), "expected a number")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(ConfigError::new(self.key(k), "expected an array of numbers")),
        }
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(path.display().to_string(), format!("cannot read: {e}")))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse(&text, base)
}

/// Parses a scenario; relative paths inside it are resolved against `base`.
pub fn parse(text: &str, base: &Path) -> Result<ScenarioConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.message().lines().next().unwrap_or("malformed TOML").to_string();
        ConfigError::new("<file>", line)
    })?;
    let root = Node { path: String::new(), table: &root };
    root.only(&["medium", "units", "scenario"])?;

    let units = match root.table("units")? {
        Some(u) => {
            u.only(&["omega_ref"])?;
            let w = u.positive("omega_ref")?.unwrap_or(1.0);
            UnitsSystem::new(w).map_err(|e| ConfigError::new("units.omega_ref", e.to_string()))?
        }
        None => UnitsSystem::default(),
    };
    let medium = medium(root.table("medium")?, units, base)?;

    let sc = root.table("scenario")?.ok_or_else(|| missing("scenario"))?;
    sc.only(&["kind", "omega_q", "time", "grid", "branch", "omega_k", "output"])?;
    let kind_name = sc.string("kind")?.ok_or_else(|| missing("scenario.kind"))?;
    let kind = ScenarioKind::parse(kind_name).ok_or_else(|| {
        let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
        ConfigError::new("scenario.kind", format!("unknown scenario `{kind_name}` (expected one of: {})", names.join(", ")))
    })?;
    let omega_q = sc.positive("omega_q")?;
    let branch = match sc.string("branch")? {
        None | Some("forward") => Branch::Forward,
        Some("backward") => Branch::Backward,
        Some(other) => return Err(ConfigError::new("scenario.branch", format!("expected `forward` or `backward`, got `{other}`"))),
    };
    let omega_k = sc.numbers("omega_k")?.unwrap_or_default();
    if let Some(i) = omega_k.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(ConfigError::new(format!("scenario.omega_k[{i}]"), "reservoir frequencies must be positive"));
    }
    let time = sc.table("time")?.map(|t| time_window(&t)).transpose()?;
    let grid = sc.table("grid")?.map(|g| grid(&g)).transpose()?;
    let output = sc.string("output")?.map(|p| base.join(p));

    let cfg = ScenarioConfig { medium, kind, omega_q, time, grid, branch, omega_k, output };
    if kind.needs_omega_q() {
        cfg.omega_q()?;
    }
    if kind.needs_time() {
        cfg.time()?;
    }
    if kind.needs_grid() {
        cfg.grid()?;
    }
    requirements(&cfg)?;
    Ok(cfg)
}

fn time_window(t: &Node) -> Result<TimeWindow> {
    t.only(&["t0", "t1", "dt"])?;
    let t0 = t.number("t0")?.unwrap_or(0.0);
    let t1 = t.required("t1")?;
    let dt = t.required("dt")?;
    if !(t0 >= 0.0 && t0.is_finite()) {
        return Err(ConfigError::new(t.key("t0"), format!("must be >= 0, got {t0}")));
    }
    if !(t1 > t0 && t1.is_finite()) {
        return Err(ConfigError::new(t.key("t1"), format!("must exceed t0 = {t0}, got {t1}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ConfigError::new(t.key("dt"), format!("must be positive, got {dt}")));
    }
    if (t1 - t0) / dt > 1e7 {
        return Err(ConfigError::new(t.key("dt"), "window holds more than 1e7 samples"));
    }
    Ok(TimeWindow { t0, t1, dt })
}

fn grid(g: &Node) -> Result<(GridSpec, FrequencyGrid)> {
    g.only(&["n", "omega_max", "rule", "omega_min"])?;
    let n = g.required("n")?;
    if !(n >= 8.0 && n.fract() == 0.0 && n <= 1e7) {
        return Err(ConfigError::new(g.key("n"), format!("must be an integer >= 8, got {n}")));
    }
    let omega_max = g.positive("omega_max")?.ok_or_else(|| missing(&g.key("omega_max")))?;
    let rule = match g.string("rule")? {
        None | Some("uniform") => GridRule::Uniform,
        Some("gauss_legendre") | Some("gauss-legendre") => GridRule::GaussLegendre,
        Some("log") => GridRule::Log,
        Some(other) => {
            return Err(ConfigError::new(g.key("rule"), format!("expected `uniform`, `gauss_legendre` or `log`, got `{other}`")))
        }
    };
    let omega_min = g.positive("omega_min")?;
    if omega_min.is_some() && rule != GridRule::Log {
        return Err(ConfigError::new(g.key("omega_min"), "only used by the `log` rule"));
    }
    let spec = GridSpec { n: n as usize, omega_max, rule, omega_min };
    let built = spec.build().map_err(|e| ConfigError::new(g.path.clone(), e.to_string()))?;
    Ok((spec, built))
}

fn medium(node: Option<Node>, units: UnitsSystem, base: &Path) -> Result<MediumSpec> {
    let (chi_e, chi_m) = match node {
        None => (KernelSpec::Zero, KernelSpec::Zero),
        Some(m) => {
            m.only(&["chi_e", "chi_m"])?;
            let e = m.table("chi_e")?.map(|k| kernel(&k, base)).transpose()?.unwrap_or(KernelSpec::Zero);
            let h = m.table("chi_m")?.map(|k| kernel(&k, base)).transpose()?.unwrap_or(KernelSpec::Zero);
            (e, h)
        }
    };
    let e = chi_e.electric().map_err(|err| ConfigError::new("medium.chi_e", err.to_string()))?;
    let h = chi_m.magnetic().map_err(|err| ConfigError::new("medium.chi_m", err.to_string()))?;
    let model = MediumModel::new(e, h, units).map_err(|err| ConfigError::new("medium", err.to_string()))?;
    Ok(MediumSpec { chi_e, chi_m, model })
}

fn kernel(k: &Node, base: &Path) -> Result<KernelSpec> {
    let kind = k.string("kind")?.ok_or_else(|| missing(&k.key("kind")))?;
    let spec = match kind {
        "zero" => {
            k.only(&["kind"])?;
            KernelSpec::Zero
        }
        "instantaneous" => {
            k.only(&["kind", "chi0"])?;
            KernelSpec::Instantaneous { chi0: k.required("chi0")? }
        }
        "box" => {
            k.only(&["kind", "chi0", "delta"])?;
            KernelSpec::Box { chi0: k.required("chi0")?, delta: k.required("delta")? }
        }
        "step" => {
            k.only(&["kind", "beta"])?;
            KernelSpec::Step { beta: k.required("beta")? }
        }
        "lorentz" => {
            k.only(&["kind", "omega0", "gamma", "omega_p"])?;
            KernelSpec::Lorentz { omega0: k.required("omega0")?, gamma: k.required("gamma")?, omega_p: k.required("omega_p")? }
        }
        "tabulated" => {
            k.only(&["kind", "samples", "dt", "file"])?;
            tabulated(k, base)?
        }
        other => {
            return Err(ConfigError::new(
                k.key("kind"),
                format!("unknown kernel `{other}` (expected zero, instantaneous, box, step, lorentz or tabulated)"),
            ))
        }
    };
    Ok(spec)
}

fn tabulated(k: &Node, base: &Path) -> Result<KernelSpec> {
    let table = match (k.string("file")?, k.numbers("samples")?) {
        (Some(_), Some(_)) => return Err(ConfigError::new(k.key("file"), "give either `file` or `samples`, not both")),
        (Some(file), None) => {
            if k.table.contains_key("dt") {
                return Err(ConfigError::new(k.key("dt"), "the time step comes from the file"));
            }
            let pairs = read_pairs(&base.join(file)).map_err(|m| ConfigError::new(k.key("file"), m))?;
            TabulatedKernel::from_pairs(&pairs)
        }
        (None, Some(samples)) => {
            let dt = k.required("dt")?;
            TabulatedKernel::new(dt, samples)
        }
        (None, None) => return Err(missing(&k.key("samples"))),
    };
    table.map(KernelSpec::Tabulated).map_err(|e| ConfigError::new(k.path.clone(), e.to_string()))
}

/// `t,chi` rows after a header line.
fn read_pairs(path: &Path) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        let row = i + 2;
        if record.len() != 2 {
            return Err(format!("{} line {row}: expected two columns `t,chi`", path.display()));
        }
        let num = |j: usize| record[j].parse::<f64>().map_err(|_| format!("{} line {row}: `{}` is not a number", path.display(), &record[j]));
        pairs.push((num(0)?, num(1)?));
    }
    Ok(pairs)
}

/// Medium and grid constraints that depend on the scenario kind.
fn requirements(cfg: &ScenarioConfig) -> Result<()> {
    let (e, m) = (&cfg.medium.chi_e, &cfg.medium.chi_m);
    let kind = cfg.kind;
    let fail = |key: &str, msg: &str| Err(ConfigError::new(key, format!("{kind} {msg}")));
    match kind {
        ScenarioKind::Example1 if !cfg.medium.model.is_vacuum() => fail("medium", "requires both kernels to be `zero`"),
        ScenarioKind::Example2 | ScenarioKind::Energy if !matches!(e, KernelSpec::Box { .. } | KernelSpec::Instantaneous { .. }) => {
            fail("medium.chi_e.kind", "requires a `box` or `instantaneous` electric kernel")
        }
        ScenarioKind::Example2 | ScenarioKind::Energy if m.static_chi().is_none() => {
            fail("medium.chi_m.kind", "requires a `zero`, `box` or `instantaneous` magnetic kernel")
        }
        ScenarioKind::Example3 if !matches!(e, KernelSpec::Step { .. }) => fail("medium.chi_e.kind", "requires a `step` electric kernel"),
        ScenarioKind::Example4 if !matches!(e, KernelSpec::Lorentz { .. }) => fail("medium.chi_e.kind", "requires a `lorentz` electric kernel"),
        ScenarioKind::Example3 | ScenarioKind::Example4 if !matches!(m, KernelSpec::Zero) => {
            fail("medium.chi_m.kind", "requires a `zero` magnetic kernel")
        }
        ScenarioKind::Commutator => {
            let (wq, g) = (cfg.omega_q()?, cfg.grid()?);
            if g.len() < 200 || g.nodes()[0] > wq / 20.0 || g.omega_max() < 20.0 * wq {
                return fail("scenario.grid", "needs >= 200 nodes spanning [omega_q/20, 20 omega_q]");
            }
            Ok(())
        }
        _ => Ok(()),
    }
}
