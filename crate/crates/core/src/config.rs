//! Plain-text run configuration.
//!
//! ```text
//! # comments start with '#'
//! [run]                 # optional
//! seed = 0
//! kb_mode = unit        # or si
//! output = results
//!
//! [exergy]              # exactly one mode section
//! q_r = 1000
//! t_r = 500
//! ...
//! ```
//!
//! Mode sections hold `key = number` pairs only (decimal or scientific notation).
//! Unknown keys, duplicates and malformed numbers are rejected with line numbers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::phase::GOLDEN_SHIFT;
use crate::report::format_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Exergy,
    Onsager,
    Phase,
    Variational,
    Verify,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Exergy,
        Mode::Onsager,
        Mode::Phase,
        Mode::Variational,
        Mode::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Exergy => "exergy",
            Mode::Onsager => "onsager",
            Mode::Phase => "phase",
            Mode::Variational => "variational",
            Mode::Verify => "verify",
        }
    }

    /// SI for exergy balances, `k_B = 1` for everything dynamical.
    pub fn default_kb(self) -> KbMode {
        match self {
            Mode::Exergy => KbMode::Si,
            _ => KbMode::Unit,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KbMode {
    /// `k_B = 1.380649e-23 J/K`.
    Si,
    /// `k_B = 1`.
    Unit,
}

impl KbMode {
    pub fn value(self) -> f64 {
        match self {
            KbMode::Si => crate::thermo::BOLTZMANN_SI,
            KbMode::Unit => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            KbMode::Si => "si",
            KbMode::Unit => "unit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub parameters: BTreeMap<String, f64>,
    pub output_path: Option<String>,
    pub seed: u64,
    pub kb_mode: KbMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Real,
    Count,
}

const EXERGY_REQUIRED: [&str; 8] = [
    "q_r", "t_r", "t_a", "delta_h", "delta_s", "delta_ek", "delta_eg", "w",
];

/// Default values of optional keys, per mode.
pub fn defaults(mode: Mode) -> &'static [(&'static str, f64)] {
    match mode {
        Mode::Exergy => &[],
        Mode::Onsager => &[("t", 0.0)],
        Mode::Phase => &[
            ("samples", 100_000.0),
            ("shift", GOLDEN_SHIFT),
            ("start", 0.0),
            ("lambda", 0.5),
            ("dt", 0.1),
            ("kick", 0.97),
            ("dump_steps", 100.0),
        ],
        Mode::Variational => &[
            ("dim", 1.0),
            ("curvature", 1.0),
            ("lower", -5.0),
            ("upper", 5.0),
            ("max_iters", 2000.0),
            ("starts", 4.0),
            ("tol_value", 1e-12),
            ("tol_param", 1e-10),
            ("fd_step", 1e-4),
            ("t_ref", 300.0),
            ("horizon", 1.0),
            ("dt", 0.01),
        ],
        Mode::Verify => &[
            ("instances", 1000.0),
            ("horizon", 1_000_000.0),
            ("samples", 100_000.0),
            ("members", 10_000.0),
            ("steps", 10_000.0),
        ],
    }
}

fn required(mode: Mode, params: &BTreeMap<String, f64>) -> Vec<String> {
    match mode {
        Mode::Exergy => EXERGY_REQUIRED.iter().map(|s| s.to_string()).collect(),
        Mode::Onsager => {
            let mut keys = vec!["n".to_string()];
            if let Some(n) = params.get("n") {
                keys.extend((0..*n as usize).map(|i| format!("xi_{i}")));
            }
            keys
        }
        Mode::Phase => vec!["horizon".into()],
        Mode::Variational => {
            let mut keys = vec!["peak".to_string()];
            let dim = params.get("dim").copied().unwrap_or(1.0) as usize;
            keys.extend((0..dim).map(|k| format!("center_{k}")));
            keys
        }
        Mode::Verify => vec![],
    }
}

fn indices(key: &str, prefix: &str, count: usize) -> Option<Vec<usize>> {
    let rest = key.strip_prefix(prefix)?;
    let parts: Vec<usize> = rest
        .split('_')
        .map(|p| p.parse().ok())
        .collect::<Option<_>>()?;
    (parts.len() == count).then_some(parts)
}

/// Kind of `key` in `mode`, or `None` when the key is not accepted.
fn schema(mode: Mode, key: &str, params: &BTreeMap<String, f64>) -> Option<Kind> {
    let count_keys: &[&str] = match mode {
        Mode::Onsager => &["n"],
        Mode::Phase => &["horizon", "samples", "dump_steps"],
        Mode::Variational => &["dim", "max_iters", "starts"],
        Mode::Verify => &["instances", "horizon", "samples", "members", "steps"],
        Mode::Exergy => &[],
    };
    if count_keys.contains(&key) {
        return Some(Kind::Count);
    }
    if defaults(mode).iter().any(|(k, _)| *k == key) {
        return Some(Kind::Real);
    }
    match mode {
        Mode::Exergy => (EXERGY_REQUIRED.contains(&key) || key == "t_ref" || key == "m_dot")
            .then_some(Kind::Real),
        Mode::Onsager => {
            let n = params.get("n").copied().unwrap_or(0.0) as usize;
            if key == "rho_s" || key == "rho_pi" {
                return Some(Kind::Real);
            }
            let ok = indices(key, "xi_", 1).is_some_and(|i| i[0] < n)
                || indices(key, "l2_", 2).is_some_and(|i| i.iter().all(|&v| v < n))
                || indices(key, "l3_", 3).is_some_and(|i| i.iter().all(|&v| v < n));
            ok.then_some(Kind::Real)
        }
        Mode::Phase => (key == "m_dot").then_some(Kind::Real),
        Mode::Variational => {
            if key == "peak" {
                return Some(Kind::Real);
            }
            let dim = params.get("dim").copied().unwrap_or(1.0) as usize;
            indices(key, "center_", 1)
                .is_some_and(|i| i[0] < dim)
                .then_some(Kind::Real)
        }
        Mode::Verify => None,
    }
}

fn parse_number(text: &str) -> Option<f64> {
    let plain = !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && text.chars().any(|c| c.is_ascii_digit());
    if !plain {
        return None;
    }
    text.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Parses and fully validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut mode: Option<(Mode, usize)> = None;
    let mut section: Option<(String, usize)> = None;
    let mut parameters = BTreeMap::new();
    let mut lines_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut run_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut seed = 0u64;
    let mut kb_mode = None;
    let mut output_path = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| {
                    Error::config(line_no, format!("malformed section header `{line}`"))
                })?
                .trim();
            if name == "run" {
                if run_lines.contains_key("[run]") {
                    return Err(Error::config(line_no, "section [run] appears twice"));
                }
                run_lines.insert("[run]".into(), line_no);
            } else {
                let m: Mode = name.parse().map_err(|_| {
                    Error::config(
                        line_no,
                        format!("unknown mode `{name}` (expected exergy, onsager, phase, variational or verify)"),
                    )
                })?;
                if let Some((prev, prev_line)) = mode {
                    return Err(Error::config(
                        line_no,
                        format!("second mode section [{m}]; [{prev}] already declared at line {prev_line}"),
                    ));
                }
                mode = Some((m, line_no));
            }
            section = Some((name.to_string(), line_no));
            continue;
        }

        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(line_no, format!("expected `key = value`, found `{line}`"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::config(line_no, "empty key"));
        }
        let Some((section_name, _)) = &section else {
            return Err(Error::config(
                line_no,
                format!("key `{key}` appears before any section"),
            ));
        };

        if section_name == "run" {
            if let Some(first) = run_lines.get(key) {
                return Err(Error::config(
                    line_no,
                    format!("duplicate key `{key}` in [run] (first defined at line {first})"),
                ));
            }
            run_lines.insert(key.to_string(), line_no);
            match key {
                "seed" => {
                    seed = value.parse().map_err(|_| {
                        Error::config(
                            line_no,
                            format!("seed must be a non-negative integer, got `{value}`"),
                        )
                    })?
                }
                "kb_mode" => {
                    kb_mode = Some(match value {
                        "si" => KbMode::Si,
                        "unit" => KbMode::Unit,
                        other => {
                            return Err(Error::config(
                                line_no,
                                format!("kb_mode must be `si` or `unit`, got `{other}`"),
                            ))
                        }
                    })
                }
                "output" => {
                    if value.is_empty() {
                        return Err(Error::config(line_no, "output path is empty"));
                    }
                    output_path = Some(value.to_string());
                }
                other => {
                    return Err(Error::config(
                        line_no,
                        format!("unknown key `{other}` in section [run]"),
                    ))
                }
            }
            continue;
        }

        if let Some(first) = lines_of.get(key) {
            return Err(Error::config(
                line_no,
                format!(
                    "duplicate key `{key}` in [{section_name}] (first defined at line {first})"
                ),
            ));
        }
        let number = parse_number(value).ok_or_else(|| {
            Error::config(
                line_no,
                format!("`{key}`: `{value}` is not a decimal or scientific number"),
            )
        })?;
        lines_of.insert(key.to_string(), line_no);
        parameters.insert(key.to_string(), number);
    }

    let (mode, mode_line) = mode.ok_or_else(|| {
        Error::config(
            text.lines().count().max(1),
            "missing mode section (one of [exergy], [onsager], [phase], [variational], [verify])",
        )
    })?;

    for (key, &line) in &lines_of {
        let value = parameters[key];
        match schema(mode, key, &parameters) {
            None => {
                return Err(Error::config(
                    line,
                    format!("unknown key `{key}` in section [{mode}]"),
                ))
            }
            Some(Kind::Count) if value < 0.0 || value.fract() != 0.0 => {
                return Err(Error::config(
                    line,
                    format!("`{key}` must be a non-negative integer, got {value}"),
                ))
            }
            _ => {}
        }
    }
    for key in required(mode, &parameters) {
        if !parameters.contains_key(&key) {
            return Err(Error::config(
                mode_line,
                format!("section [{mode}] is missing required key `{key}`"),
            ));
        }
    }

    Ok(RunConfig {
        mode,
        parameters,
        output_path,
        seed,
        kb_mode: kb_mode.unwrap_or(mode.default_kb()),
    })
}

impl RunConfig {
    /// A config for `mode` with the given parameters, default seed and `k_B`.
    pub fn new(mode: Mode, parameters: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        Self {
            mode,
            parameters: parameters
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            output_path: None,
            seed: 0,
            kb_mode: mode.default_kb(),
        }
    }

    /// Value of `key`, falling back to the mode default.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).copied().or_else(|| {
            defaults(self.mode)
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
        })
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| Error::invalid(key, format!("missing from section [{}]", self.mode)))
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::invalid(key, "must be a non-negative integer"));
        }
        Ok(v as usize)
    }

    /// Text that [`parse_config`] reads back into an equal config.
    pub fn render(&self) -> String {
        let mut out = String::from("[run]\n");
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("kb_mode = {}\n", self.kb_mode.name()));
        if let Some(path) = &self.output_path {
            out.push_str(&format!("output = {path}\n"));
        }
        out.push_str(&format!("\n[{}]\n", self.mode));
        for (k, v) in &self.parameters {
            out.push_str(&format!("{k} = {}\n", format_value(*v)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXERGY: &str = "\
# heat from a 500 K source
[exergy]
q_r = 1000
t_r = 500
t_a = 300
delta_h = 0
delta_s = 0
delta_ek = 0
delta_eg = 0
w = 0
t_ref = 3e2
";

    #[test]
    fn minimal_exergy_config() {
        let c = parse_config(EXERGY).unwrap();
        assert_eq!(c.mode, Mode::Exergy);
        assert_eq!(c.kb_mode, KbMode::Si);
        assert_eq!(c.seed, 0);
        assert_eq!(c.get("q_r"), Some(1000.0));
        assert_eq!(c.get("t_ref"), Some(300.0));
    }

    #[test]
    fn missing_key_names_key_and_section() {
        let text = EXERGY.replace("t_a = 300\n", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("`t_a`") && err.contains("[exergy]"), "{err}");
    }

    #[test]
    fn duplicate_key_cites_both_lines() {
        let text = format!("{EXERGY}q_r = 5\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("line 12") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("[exergy]\nq_r = 0x10\n", "not a decimal"),
            ("[exergy]\nq_r = inf\n", "not a decimal"),
            ("[exergy]\nbogus = 1\n", "unknown key `bogus`"),
            ("[thermo]\n", "unknown mode"),
            ("# nothing\n", "missing mode section"),
            ("q_r = 1\n", "before any section"),
            ("[verify]\n[phase]\n", "second mode section"),
            ("[run]\nkb_mode = cgs\n[verify]\n", "kb_mode"),
            ("[verify]\ninstances = 2.5\n", "non-negative integer"),
            (
                "[onsager]\nn = 1\nxi_0 = 1\nl2_0_1 = 2\n",
                "unknown key `l2_0_1`",
            ),
            ("[exergy]\nq_r 1\n", "expected `key = value`"),
        ];
        for (text, needle) in cases {
            let err = parse_config(text).unwrap_err();
            assert!(matches!(err, Error::Config { .. }));
            assert!(err.to_string().contains(needle), "{text:?} -> {err}");
        }
    }

    #[test]
    fn onsager_keys_follow_dimension() {
        let c = parse_config(
            "[onsager]\nn = 2\nxi_0 = 1\nxi_1 = 1\nl2_0_0 = 2\nl2_0_1 = 1\nl3_1_1_1 = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.count("n").unwrap(), 2);
        assert!(parse_config("[onsager]\nn = 2\nxi_0 = 1\n").is_err());
    }

    #[test]
    fn run_section() {
        let c = parse_config("[run]\nseed = 42\nkb_mode = unit\noutput = out/dir\n\n[exergy]\nq_r=1\nt_r=1\nt_a=1\ndelta_h=0\ndelta_s=0\ndelta_ek=0\ndelta_eg=0\nw=0\n").unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.kb_mode, KbMode::Unit);
        assert_eq!(c.output_path.as_deref(), Some("out/dir"));
    }

    fn any_config() -> impl Strategy<Value = RunConfig> {
        let mode = prop::sample::select(Mode::ALL.to_vec());
        (
            mode,
            any::<u64>(),
            any::<bool>(),
            prop::option::of("[a-z][a-z0-9_/]{0,12}"),
            prop::collection::vec(-1e300f64..1e300, 12),
        )
            .prop_map(|(mode, seed, si, output_path, values)| {
                let mut parameters = BTreeMap::new();
                let keys: Vec<String> = match mode {
                    Mode::Exergy => EXERGY_REQUIRED
                        .iter()
                        .map(|s| s.to_string())
                        .chain(["t_ref".into()])
                        .collect(),
                    Mode::Onsager => vec![
                        "xi_0".into(),
                        "xi_1".into(),
                        "l2_0_1".into(),
                        "l3_1_0_1".into(),
                    ],
                    Mode::Phase => vec!["shift".into(), "lambda".into()],
                    Mode::Variational => vec!["peak".into(), "center_0".into(), "curvature".into()],
                    Mode::Verify => vec![],
                };
                for (k, v) in keys.into_iter().zip(values) {
                    parameters.insert(k, v);
                }
                match mode {
                    Mode::Onsager => {
                        parameters.insert("n".into(), 2.0);
                    }
                    Mode::Phase => {
                        parameters.insert("horizon".into(), (seed % 1000) as f64);
                    }
                    Mode::Verify => {
                        parameters.insert("instances".into(), (seed % 77) as f64);
                    }
                    _ => {}
                }
                RunConfig {
                    mode,
                    parameters,
                    output_path,
                    seed,
                    kb_mode: if si { KbMode::Si } else { KbMode::Unit },
                }
            })
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(config in any_config()) {
            let text = config.render();
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(back, config);
        }
    }
}
