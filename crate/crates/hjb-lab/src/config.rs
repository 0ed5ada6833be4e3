//! Experiment configuration: TOML schema, validation, and problem assembly.
//!
//! Validation never stops at the first problem — it walks the whole document
//! and reports **every** offending key with its path and the valid range, so
//! a broken file is fixed in one edit. The sample files under `configs/`
//! double as the schema reference.

use std::fmt;
use std::path::PathBuf;

use hjb_core::field::{self, ScalarField};
use hjb_core::instances;
use hjb_core::model::{
    Atom, DiffusionFactor, Hamiltonian, InitialData, JumpKind, LevyData, MeasureKind, ProblemSpec,
};

use toml::value::{Table, Value};

const TAU: f64 = std::f64::consts::TAU;

// ---------------------------------------------------------------------------
// Public shape
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Command {
    Check,
    Evolve,
    Stationary,
    Ergodic,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Evolve => "evolve",
            Command::Stationary => "stationary",
            Command::Ergodic => "ergodic",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Numerics {
    pub n: usize,
    /// Radial quadrature cells per decade.
    pub q: usize,
    pub cfl_safety: f64,
    pub residual_tol: f64,
    pub t_final: f64,
    /// Horizons for the time-route ergodic checkpoints.
    pub horizons: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            n: 128,
            q: 32,
            cfl_safety: 0.8,
            residual_tol: 1e-8,
            t_final: 5.0,
            horizons: vec![10.0, 25.0, 50.0],
            seeds: vec![0, 1, 2],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Output {
    pub dir: PathBuf,
    pub sample_every: usize,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: PathBuf::from("out"), sample_every: 25 }
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub command: Command,
    /// Fully assembled problem; absent only for `verify-all`, which pins its
    /// own instances.
    pub spec: Option<ProblemSpec>,
    /// Human-readable instance label for artifact rows.
    pub instance_label: String,
    pub numerics: Numerics,
    pub output: Output,
}

/// One rejected key: path plus reason.
#[derive(Clone, Debug)]
pub struct KeyError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for KeyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

// ---------------------------------------------------------------------------
// Table walker
// ---------------------------------------------------------------------------

/// Cursor over one TOML table that records errors instead of failing fast
/// and tracks which keys were consumed, so leftovers are reported as unknown.
struct Tab<'a> {
    path: String,
    table: &'a Table,
    seen: Vec<&'a str>,
    errors: &'a mut Vec<KeyError>,
}

impl<'a> Tab<'a> {
    fn new(path: &str, table: &'a Table, errors: &'a mut Vec<KeyError>) -> Self {
        Tab { path: path.to_string(), table, seen: Vec::new(), errors }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{}", self.path, k)
        }
    }

    fn err(&mut self, k: &str, msg: impl Into<String>) {
        self.errors.push(KeyError { key: self.key(k), message: msg.into() });
    }

    fn raw(&mut self, k: &'a str) -> Option<&'a Value> {
        let v = self.table.get(k);
        if v.is_some() {
            self.seen.push(k);
        }
        v
    }

    fn has(&self, k: &str) -> bool {
        self.table.contains_key(k)
    }

    fn str(&mut self, k: &'a str) -> Option<&'a str> {
        match self.raw(k) {
            None => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(other) => {
                self.err(k, format!("expected a string, got {}", kind_of(other)));
                None
            }
        }
    }

    fn f64(&mut self, k: &'a str) -> Option<f64> {
        match self.raw(k) {
            None => None,
            Some(Value::Float(x)) => Some(*x),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(other) => {
                self.err(k, format!("expected a number, got {}", kind_of(other)));
                None
            }
        }
    }

    fn usize(&mut self, k: &'a str) -> Option<usize> {
        match self.raw(k) {
            None => None,
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as usize),
            Some(Value::Integer(i)) => {
                self.err(k, format!("expected a nonnegative integer, got {i}"));
                None
            }
            Some(other) => {
                self.err(k, format!("expected an integer, got {}", kind_of(other)));
                None
            }
        }
    }

    fn sub(&mut self, k: &'a str) -> Option<(String, &'a Table)> {
        match self.raw(k) {
            None => None,
            Some(Value::Table(t)) => Some((self.key(k), t)),
            Some(other) => {
                self.err(k, format!("expected a table, got {}", kind_of(other)));
                None
            }
        }
    }

    fn f64_array(&mut self, k: &'a str) -> Option<Vec<f64>> {
        match self.raw(k) {
            None => None,
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(n) => out.push(*n as f64),
                        other => {
                            self.err(
                                k,
                                format!("element {i} must be a number, got {}", kind_of(other)),
                            );
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Some(other) => {
                self.err(k, format!("expected an array, got {}", kind_of(other)));
                None
            }
        }
    }

    /// Report every key this cursor never consumed.
    fn finish(mut self) {
        let leftover: Vec<String> = self
            .table
            .keys()
            .filter(|k| !self.seen.contains(&k.as_str()))
            .map(|k| k.clone())
            .collect();
        for k in leftover {
            self.err(&k, "unknown key".to_string());
        }
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "an array",
        Value::Table(_) => "a table",
    }
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Parse and validate one configuration document. All problems are returned
/// together.
pub fn parse(text: &str) -> Result<Config, Vec<KeyError>> {
    let root: Value = match text.parse() {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![KeyError { key: "<document>".into(), message: e.to_string() }]);
        }
    };
    let Value::Table(root) = root else {
        return Err(vec![KeyError {
            key: "<document>".into(),
            message: "top level must be a table".into(),
        }]);
    };

    let mut errors = Vec::new();
    let mut top = Tab::new("", &root, &mut errors);

    let command = match top.str("command") {
        Some("check") => Some(Command::Check),
        Some("evolve") => Some(Command::Evolve),
        Some("stationary") => Some(Command::Stationary),
        Some("ergodic") => Some(Command::Ergodic),
        Some("verify-all") => Some(Command::VerifyAll),
        Some(other) => {
            top.err(
                "command",
                format!(
                    "unknown command {other:?}; expected one of check, evolve, stationary, ergodic, verify-all"
                ),
            );
            None
        }
        None => {
            if top.has("command") {
                None // type error already recorded
            } else {
                top.err("command", "missing (required)".to_string());
                None
            }
        }
    };

    let needs_problem = !matches!(command, Some(Command::VerifyAll) | None);

    let mut spec = None;
    let mut label = String::from("custom");
    match top.sub("problem") {
        Some((path, t)) => {
            let mut tab = Tab::new(&path, t, top.errors);
            let built = problem_from(&mut tab);
            tab.finish();
            if let Some((s, l)) = built {
                label = l;
                spec = Some(s);
            }
        }
        None => {
            if needs_problem && !top.has("problem") {
                top.err("problem", "missing (required for this command)".to_string());
            }
        }
    }

    let mut numerics = Numerics::default();
    if let Some((path, t)) = top.sub("numerics") {
        let mut tab = Tab::new(&path, t, top.errors);
        numerics_from(&mut tab, &mut numerics);
        tab.finish();
    }

    let mut output = Output::default();
    if let Some((path, t)) = top.sub("output") {
        let mut tab = Tab::new(&path, t, top.errors);
        output_from(&mut tab, &mut output);
        tab.finish();
    }

    top.finish();

    // Defense in depth: the assembled instance must satisfy the core's own
    // documented ranges even if every key individually parsed.
    if let Some(s) = &spec {
        for v in s.violations() {
            errors.push(KeyError { key: "problem".into(), message: v });
        }
    }

    match (errors.is_empty(), command) {
        (true, Some(command)) => Ok(Config {
            command,
            spec,
            instance_label: label,
            numerics,
            output,
        }),
        _ => Err(errors),
    }
}

/// `parse` plus file IO, mapping read failures onto the same error shape.
pub fn load(path: &std::path::Path) -> Result<Config, Vec<KeyError>> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse(&text),
        Err(e) => Err(vec![KeyError {
            key: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        }]),
    }
}

// ---------------------------------------------------------------------------
// Problem section
// ---------------------------------------------------------------------------

const FAMILY_TABLES: [&str; 4] = ["hamiltonian", "diffusion", "levy", "jump"];

fn problem_from(tab: &mut Tab<'_>) -> Option<(ProblemSpec, String)> {
    let lambda = match tab.f64("lambda") {
        Some(l) if l >= 0.0 => Some(l),
        Some(l) => {
            tab.err("lambda", format!("must be >= 0, got {l}"));
            None
        }
        None => {
            if !tab.has("lambda") {
                tab.err("lambda", "missing (required)".to_string());
            }
            None
        }
    };

    let dimension = match tab.usize("dimension") {
        None => 1,
        Some(d @ (1 | 2)) => d,
        Some(d) => {
            tab.err("dimension", format!("must be 1 or 2, got {d}"));
            1
        }
    };

    let instance = tab.str("instance").map(str::to_owned);

    let built = if let Some(name) = &instance {
        for t in FAMILY_TABLES {
            if tab.has(t) {
                tab.err(
                    t,
                    format!("exclusive with problem.instance = {name:?}; remove one of the two"),
                );
                // consume so it is not double-reported as unknown
                let _ = tab.raw(t);
            }
        }
        if dimension != 1 {
            tab.err("dimension", "builtin instances are one-dimensional".to_string());
        }
        instance_from(tab, name, lambda.unwrap_or(1.0))
    } else {
        // Instance-only parameter keys are invalid in family mode.
        for k in ["forcing_level", "order"] {
            if tab.has(k) {
                let _ = tab.raw(k);
                tab.err(k, "only valid together with problem.instance".to_string());
            }
        }
        family_mode(tab, lambda.unwrap_or(1.0), dimension).map(|s| (s, "custom".into()))
    };

    // Optional initial datum, valid in both modes.
    let init = match tab.sub("initial") {
        Some((path, t)) => {
            let mut sub = Tab::new(&path, t, tab.errors);
            let f = initial_from(&mut sub);
            sub.finish();
            f
        }
        None => None,
    };

    // Optional truncation-radius override.
    let r_max = match tab.f64("r_max") {
        Some(r) if r > 0.0 => Some(r),
        Some(r) => {
            tab.err("r_max", format!("must be > 0, got {r}"));
            None
        }
        None => None,
    };

    lambda?;
    let (mut spec, label) = built?;
    if let Some(f) = init {
        spec.initial = Some(f);
    }
    if let Some(r) = r_max {
        spec.levy.r_max = r;
    }
    Some((spec, label))
}

fn instance_from(tab: &mut Tab<'_>, name: &str, lambda: f64) -> Option<(ProblemSpec, String)> {
    let spec = match name {
        "eikonal" => Some(instances::eikonal(lambda)),
        "mixed" => Some(instances::mixed(lambda)),
        "mixed_m2" => Some(instances::mixed_m2(lambda)),
        "pure_eikonal" => Some(instances::pure_eikonal(lambda)),
        "constant_forcing" => {
            let f0 = match tab.f64("forcing_level") {
                Some(f) => f,
                None => {
                    tab.err(
                        "forcing_level",
                        "missing (required by instance = \"constant_forcing\")".to_string(),
                    );
                    return None;
                }
            };
            Some(instances::constant_forcing(lambda, f0))
        }
        "atomic_degenerate" => Some(instances::atomic_degenerate(lambda)),
        "fractional_diagnostic" => {
            let order = match tab.f64("order") {
                Some(o) if o > 0.0 && o < 2.0 => o,
                Some(o) => {
                    tab.err("order", format!("must lie in (0, 2), got {o}"));
                    return None;
                }
                None => {
                    tab.err(
                        "order",
                        "missing (required by instance = \"fractional_diagnostic\")".to_string(),
                    );
                    return None;
                }
            };
            Some(instances::fractional_diagnostic(lambda, order))
        }
        other => {
            tab.err(
                "instance",
                format!(
                    "unknown instance {other:?}; builtin: eikonal, mixed, mixed_m2, pure_eikonal, constant_forcing, atomic_degenerate, fractional_diagnostic"
                ),
            );
            None
        }
    }?;
    // Consume parameter keys that belong to other instances so they surface
    // as misuse rather than as unknown keys.
    for k in ["forcing_level", "order"] {
        if tab.has(k) && !tab.seen.contains(&k) {
            let _ = tab.raw(k);
            tab.err(k, format!("not a parameter of instance {name:?}"));
        }
    }
    Some((spec, name.to_string()))
}

// ---------------------------------------------------------------------------
// Family mode
// ---------------------------------------------------------------------------

fn family_mode(tab: &mut Tab<'_>, lambda: f64, dimension: usize) -> Option<ProblemSpec> {
    let ham = match tab.sub("hamiltonian") {
        Some((path, t)) => {
            let mut sub = Tab::new(&path, t, tab.errors);
            let h = hamiltonian_from(&mut sub);
            sub.finish();
            h
        }
        None => {
            tab.err("hamiltonian", "missing (required without problem.instance)".to_string());
            None
        }
    };

    let diffusion = match tab.sub("diffusion") {
        Some((path, t)) => {
            let mut sub = Tab::new(&path, t, tab.errors);
            let d = diffusion_from(&mut sub);
            sub.finish();
            d
        }
        None => {
            tab.err("diffusion", "missing (required without problem.instance)".to_string());
            None
        }
    };

    let levy = match tab.sub("levy") {
        Some((path, t)) => {
            let mut sub = Tab::new(&path, t, tab.errors);
            let l = levy_from(&mut sub, dimension);
            sub.finish();
            l
        }
        None => {
            tab.err("levy", "missing (required without problem.instance; family = \"none\" opts out)".to_string());
            None
        }
    };

    let jump = match tab.sub("jump") {
        Some((path, t)) => {
            let mut sub = Tab::new(&path, t, tab.errors);
            let j = jump_from(&mut sub);
            sub.finish();
            j
        }
        None => Some(JumpKind::Translation),
    };

    let (ham, diffusion, mut levy, jump) = (ham?, diffusion?, levy?, jump?);
    if let JumpKind::Modulated { g_max, g_lip, .. } = &jump {
        // |j(x,z)| ≤ (sup g)|z|, Lip_x j ≤ Lip(g)|z|, per-radius first
        // moments scale by sup g.
        levy.c_j = g_max.max(*g_lip);
        levy.c_a_gen = *g_max;
    }
    levy.jump = jump;
    Some(ProblemSpec { dim: dimension, lambda, diffusion, hamiltonian: ham, levy, initial: None })
}

/// `H(x, p) = |p|^m − f(x)` with all structural constants derived from the
/// forcing wave:
///
/// * growth slack at `p = 0` needs `K ≥ sup f⁻`;
/// * `L_H = Lip(f)`, `H₀ = sup|f|`;
/// * modulus slope: `(|p+q|^m − |p|^m)/|q| ≤ m(1+|p|)^{m−1}`, and
///   `(1+r)^{m−1} ≤ max(1, 2^{m−2})·(1+r^{m−1})`, padded by 1%;
/// * scaling gap `H(x,Lp) − L·H(x,p) = (L^m − L)|p|^m + (L−1)f(x)` admits
///   `η ≤ (L^m − L)/L^m` and `η⁻¹ ≥ (L−1)·sup f⁻`; the declared value covers
///   scaling factors up to 11.
fn hamiltonian_from(tab: &mut Tab<'_>) -> Option<Hamiltonian> {
    // Parse every key before bailing so one bad entry cannot hide another.
    let family_ok = match tab.str("family") {
        Some("power") => true,
        Some(other) => {
            tab.err("family", format!("unknown Hamiltonian family {other:?}; builtin: power"));
            false
        }
        None => {
            if !tab.has("family") {
                tab.err("family", "missing (required)".to_string());
            }
            false
        }
    };
    let m = match tab.f64("exponent") {
        Some(m) if m > 1.0 => Some(m),
        Some(m) => {
            tab.err("exponent", format!("must be > 1, got {m}"));
            None
        }
        None => {
            if !tab.has("exponent") {
                tab.err("exponent", "missing (required)".to_string());
            }
            None
        }
    };
    let wave = match tab.sub("forcing") {
        Some((path, t)) => {
            let mut sub = Tab::new(&path, t, tab.errors);
            let w = wave_from(&mut sub, true);
            sub.finish();
            w
        }
        None => {
            tab.err("forcing", "missing (required)".to_string());
            None
        }
    };

    if !family_ok {
        return None;
    }
    let (m, (forcing, f_min, f_max, f_lip)) = (m?, wave?);
    let mut h = Hamiltonian::power_coercive(ScalarField::Constant(1.0), m, forcing);
    let k = (-f_min).max(0.0);
    h.k_const = k;
    h.l_h = f_lip;
    h.h_0 = f_max.abs().max(f_min.abs());
    h.c_zeta = m * 1.0f64.max(2.0f64.powf(m - 2.0)) * 1.01;
    let gap_cap = (2.0f64.powf(m) - 2.0) / 2.0f64.powf(m);
    let const_cap = if k > 1e-12 { 1.0 / (10.0 * k) } else { 0.1 };
    h.eta = Some(0.1f64.min(0.99 * gap_cap).min(const_cap));
    Some(h)
}

fn diffusion_from(tab: &mut Tab<'_>) -> Option<DiffusionFactor> {
    match tab.str("family") {
        Some("zero") => Some(DiffusionFactor::zero()),
        Some("constant") => {
            let v = match tab.f64("value") {
                Some(v) if v >= 0.0 => v,
                Some(v) => {
                    tab.err("value", format!("must be >= 0, got {v}"));
                    return None;
                }
                None => {
                    tab.err("value", "missing (required)".to_string());
                    return None;
                }
            };
            Some(DiffusionFactor::scalar_from_coefficient(
                ScalarField::Constant(v),
                v.sqrt(),
            ))
        }
        Some("cosine") => {
            // a(x) = offset + amplitude·cos(2π·frequency·x); strict
            // ellipticity (offset > |amplitude|) keeps σ = √a Lipschitz.
            let (field, a_min, a_max, a_lip) = wave_from(tab, false)?;
            if a_min <= 0.0 && a_lip > 0.0 {
                tab.err(
                    "offset",
                    format!(
                        "cosine diffusion needs offset > |amplitude| (σ = √a must stay Lipschitz); sampled min a = {a_min}"
                    ),
                );
                return None;
            }
            if a_min < 0.0 {
                tab.err("offset", format!("coefficient must stay >= 0; min a = {a_min}"));
                return None;
            }
            let l_sigma = if a_lip > 0.0 {
                a_max.sqrt().max(0.5 * a_lip / a_min.sqrt())
            } else {
                a_max.sqrt()
            };
            Some(DiffusionFactor::scalar_from_coefficient(field, l_sigma))
        }
        Some(other) => {
            tab.err(
                "family",
                format!("unknown diffusion family {other:?}; builtin: zero, constant, cosine"),
            );
            None
        }
        None => {
            if !tab.has("family") {
                tab.err("family", "missing (required)".to_string());
            }
            None
        }
    }
}

fn levy_from(tab: &mut Tab<'_>, dimension: usize) -> Option<LevyData> {
    match tab.str("family") {
        Some("none") => Some(LevyData::none()),
        Some("fractional") => {
            let order = match tab.f64("order") {
                Some(o) if o > 0.0 && o < 2.0 => o,
                Some(o) => {
                    tab.err("order", format!("must lie in (0, 2), got {o}"));
                    return None;
                }
                None => {
                    tab.err("order", "missing (required)".to_string());
                    return None;
                }
            };
            // ∫ 1∧|z|² ν(dz) over the truncated fractional measure.
            let c_nu = if dimension == 1 {
                2.0 / (2.0 - order) + 2.0 / order
            } else {
                TAU * (0.5 / (2.0 - order) + 0.5 / order) * 2.0
            } + 0.01;
            Some(LevyData {
                measure: MeasureKind::Fractional { order },
                jump: JumpKind::Translation,
                c_nu,
                c_j: 1.0,
                c_a_gen: 1.0,
                r_max: 10.0,
            })
        }
        Some("uniform") => {
            let radius = match tab.f64("radius") {
                Some(r) if r > 0.0 => Some(r),
                Some(r) => {
                    tab.err("radius", format!("must be > 0, got {r}"));
                    None
                }
                None => {
                    if !tab.has("radius") {
                        tab.err("radius", "missing (required)".to_string());
                    }
                    None
                }
            };
            let total_mass = match tab.f64("total_mass") {
                Some(m) if m >= 0.0 => Some(m),
                Some(m) => {
                    tab.err("total_mass", format!("must be >= 0, got {m}"));
                    None
                }
                None => {
                    if !tab.has("total_mass") {
                        tab.err("total_mass", "missing (required)".to_string());
                    }
                    None
                }
            };
            let (radius, total_mass) = (radius?, total_mass?);
            Some(LevyData {
                measure: MeasureKind::Finite { radius, total_mass },
                jump: JumpKind::Translation,
                c_nu: total_mass + 0.01,
                c_j: 1.0,
                c_a_gen: 1.0,
                r_max: radius.max(1.0),
            })
        }
        Some("atomic") => {
            let atoms = match tab.raw("atoms") {
                Some(Value::Array(items)) if !items.is_empty() => {
                    let mut out = Vec::with_capacity(items.len());
                    let mut ok = true;
                    for (i, item) in items.iter().enumerate() {
                        let Value::Table(t) = item else {
                            tab.err("atoms", format!("element {i} must be a table {{ z, mass }}"));
                            ok = false;
                            continue;
                        };
                        let mut sub =
                            Tab::new(&format!("{}[{i}]", tab.key("atoms")), t, tab.errors);
                        let a = atom_from(&mut sub, dimension);
                        sub.finish();
                        match a {
                            Some(a) => out.push(a),
                            None => ok = false,
                        }
                    }
                    if !ok {
                        return None;
                    }
                    out
                }
                Some(Value::Array(_)) => {
                    tab.err("atoms", "must contain at least one atom".to_string());
                    return None;
                }
                Some(other) => {
                    tab.err("atoms", format!("expected an array, got {}", kind_of(other)));
                    return None;
                }
                None => {
                    tab.err("atoms", "missing (required)".to_string());
                    return None;
                }
            };
            let mut c_nu = 0.01;
            let mut far = 1.0f64;
            for a in &atoms {
                let r2 = a.z[0] * a.z[0] + a.z[1] * a.z[1];
                c_nu += a.mass * r2.min(1.0);
                far = far.max(r2.sqrt());
            }
            Some(LevyData {
                measure: MeasureKind::Atomic { atoms },
                jump: JumpKind::Translation,
                c_nu,
                c_j: 1.0,
                c_a_gen: 1.0,
                r_max: far,
            })
        }
        Some(other) => {
            tab.err(
                "family",
                format!(
                    "unknown Lévy family {other:?}; builtin: fractional, uniform, atomic, none"
                ),
            );
            None
        }
        None => {
            if !tab.has("family") {
                tab.err("family", "missing (required)".to_string());
            }
            None
        }
    }
}

fn atom_from(tab: &mut Tab<'_>, dimension: usize) -> Option<Atom> {
    let z = match tab.raw("z") {
        Some(Value::Float(x)) => Some([*x, 0.0]),
        Some(Value::Integer(x)) => Some([*x as f64, 0.0]),
        Some(Value::Array(items)) => {
            if items.len() != dimension {
                tab.err("z", format!("needs {dimension} coordinate(s), got {}", items.len()));
                None
            } else {
                let mut z = [0.0f64; 2];
                let mut ok = true;
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Float(x) => z[i] = *x,
                        Value::Integer(x) => z[i] = *x as f64,
                        other => {
                            tab.err(
                                "z",
                                format!("coordinate {i} must be a number, got {}", kind_of(other)),
                            );
                            ok = false;
                        }
                    }
                }
                ok.then_some(z)
            }
        }
        Some(other) => {
            tab.err("z", format!("expected a number or array, got {}", kind_of(other)));
            None
        }
        None => {
            tab.err("z", "missing (required)".to_string());
            None
        }
    };
    let z = match z {
        Some(z) if z[0] == 0.0 && z[1] == 0.0 => {
            tab.err("z", "atom at the origin is not a jump".to_string());
            None
        }
        other => other,
    };
    let mass = match tab.f64("mass") {
        Some(m) if m > 0.0 => Some(m),
        Some(m) => {
            tab.err("mass", format!("must be > 0, got {m}"));
            None
        }
        None => {
            tab.err("mass", "missing (required)".to_string());
            None
        }
    };
    Some(Atom { z: z?, mass: mass? })
}

fn jump_from(tab: &mut Tab<'_>) -> Option<JumpKind> {
    match tab.str("family") {
        Some("translation") => Some(JumpKind::Translation),
        Some("modulated") => {
            // j(x, z) = g(x)·z with g(x) = offset + amplitude·cos(2π·f·x).
            let (g, g_min, g_max, g_lip) = cosine_wave_from(tab, false, false)?;
            if g_min <= 0.0 {
                tab.err("offset", format!("modulation needs offset > |amplitude|; min g = {g_min}"));
                return None;
            }
            Some(JumpKind::Modulated { g, g_min, g_max, g_lip })
        }
        Some(other) => {
            tab.err(
                "family",
                format!("unknown jump family {other:?}; builtin: translation, modulated"),
            );
            None
        }
        None => {
            if !tab.has("family") {
                tab.err("family", "missing (required)".to_string());
            }
            None
        }
    }
}

/// Shared wave reader: offset + amplitude·cos(2π·frequency·x + phase).
/// Returns the field plus (min, max, Lipschitz bound). `allow_phase` keeps
/// diffusion/modulation coefficients phase-free (their derived constants
/// assume pure cosine placement; phase adds nothing but another key).
fn wave_from(tab: &mut Tab<'_>, allow_phase: bool) -> Option<(ScalarField, f64, f64, f64)> {
    match tab.str("family") {
        Some("constant") | None if tab.has("value") => {
            let v = tab.f64("value")?;
            if tab.has("family") {
                let _ = tab.str("family");
            }
            return Some((ScalarField::Constant(v), v, v, 0.0));
        }
        _ => {}
    }
    match tab.str("family") {
        Some("constant") => {
            tab.err("value", "missing (required)".to_string());
            None
        }
        Some("cosine") | None => cosine_wave_from(tab, allow_phase, false),
        Some("sine") => cosine_wave_from(tab, allow_phase, true),
        Some(other) => {
            tab.err(
                "family",
                format!("unknown field family {other:?}; builtin: constant, cosine, sine"),
            );
            None
        }
    }
}

/// Read the raw wave keys (offset, amplitude, frequency, optional phase)
/// without dispatching on `family`, so callers whose `family` key carries a
/// different meaning (e.g. the modulated jump) can reuse them.
fn cosine_wave_from(
    tab: &mut Tab<'_>,
    allow_phase: bool,
    is_sine: bool,
) -> Option<(ScalarField, f64, f64, f64)> {
    let offset = tab.f64("offset").unwrap_or(0.0);
    let amplitude = match tab.f64("amplitude") {
        Some(a) if a >= 0.0 => Some(a),
        Some(a) => {
            tab.err("amplitude", format!("must be >= 0, got {a}"));
            None
        }
        None => {
            if !tab.has("amplitude") {
                tab.err("amplitude", "missing (required)".to_string());
            }
            None
        }
    };
    let frequency = match tab.usize("frequency") {
        None => Some(1i32),
        Some(f) if (1..=1_000).contains(&f) => Some(f as i32),
        Some(f) => {
            tab.err("frequency", format!("must lie in [1, 1000], got {f}"));
            None
        }
    };
    let phase = match tab.f64("phase") {
        None => Some(0.0),
        Some(p) if allow_phase => Some(p),
        Some(_) => {
            tab.err("phase", "not supported for this field".to_string());
            None
        }
    };
    let (amplitude, frequency, phase) = (amplitude?, frequency?, phase?);
    let field = if is_sine {
        field::sine(offset, amplitude, frequency)
    } else {
        ScalarField::cosine(offset, amplitude, frequency, phase)
    };
    Some((field, offset - amplitude, offset + amplitude, TAU * amplitude * frequency as f64))
}

fn initial_from(tab: &mut Tab<'_>) -> Option<InitialData> {
    match tab.str("family") {
        Some("zero") => Some(InitialData { field: ScalarField::Constant(0.0), lipschitz: 0.0 }),
        _ => {
            // Re-dispatch through the shared wave reader ("constant",
            // "cosine", "sine"); its Lipschitz bound doubles as L₀.
            let (field, _, _, lip) = wave_from(tab, true)?;
            Some(InitialData { field, lipschitz: lip })
        }
    }
}

// ---------------------------------------------------------------------------
// Numerics and output sections
// ---------------------------------------------------------------------------

fn numerics_from(tab: &mut Tab<'_>, out: &mut Numerics) {
    if let Some(n) = tab.usize("n") {
        if (8..=4096).contains(&n) {
            out.n = n;
        } else {
            tab.err("n", format!("must lie in [8, 4096], got {n}"));
        }
    }
    if let Some(q) = tab.usize("q") {
        if (1..=4096).contains(&q) {
            out.q = q;
        } else {
            tab.err("q", format!("must lie in [1, 4096], got {q}"));
        }
    }
    if let Some(c) = tab.f64("cfl_safety") {
        if c > 0.0 && c <= 1.0 {
            out.cfl_safety = c;
        } else {
            tab.err("cfl_safety", format!("must lie in (0, 1], got {c}"));
        }
    }
    if let Some(t) = tab.f64("residual_tol") {
        if t > 0.0 && t <= 1e-2 {
            out.residual_tol = t;
        } else {
            tab.err("residual_tol", format!("must lie in (0, 1e-2], got {t}"));
        }
    }
    if let Some(t) = tab.f64("t_final") {
        if t > 0.0 && t.is_finite() {
            out.t_final = t;
        } else {
            tab.err("t_final", format!("must be a positive finite time, got {t}"));
        }
    }
    if let Some(hs) = tab.f64_array("horizons") {
        let ok = !hs.is_empty()
            && hs.iter().all(|&t| t > 0.0)
            && hs.windows(2).all(|w| w[1] > w[0]);
        if ok {
            out.horizons = hs;
        } else {
            tab.err(
                "horizons",
                "must be a nonempty, strictly increasing list of positive times".to_string(),
            );
        }
    }
    if let Some(raw) = tab.raw("seeds") {
        match raw {
            Value::Array(items) if !items.is_empty() => {
                let mut seeds = Vec::with_capacity(items.len());
                let mut ok = true;
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Integer(s) if *s >= 0 => seeds.push(*s as u64),
                        _ => {
                            tab.err("seeds", format!("element {i} must be a nonnegative integer"));
                            ok = false;
                        }
                    }
                }
                if ok {
                    out.seeds = seeds;
                }
            }
            _ => tab.err("seeds", "must be a nonempty array of nonnegative integers".to_string()),
        }
    }
}

fn output_from(tab: &mut Tab<'_>, out: &mut Output) {
    if let Some(d) = tab.str("dir") {
        if d.is_empty() {
            tab.err("dir", "must not be empty".to_string());
        } else {
            out.dir = PathBuf::from(d);
        }
    }
    if let Some(s) = tab.usize("sample_every") {
        if s >= 1 {
            out.sample_every = s;
        } else {
            tab.err("sample_every", "must be at least 1".to_string());
        }
    }
}
