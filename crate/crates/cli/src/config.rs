use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use logdecay::model::{MediumSpec, Potential, Wavespeed};

/// Configuration error with the 1-based line it refers to (0 for whole-file problems).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

/// Accepted keys per section.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "medium",
        &[
            "wavespeed", "c", "c_inner", "c_outer", "jump_radius", "radii", "speeds", "bump_amplitude",
            "bump_radius", "decay_amplitude", "decay_rate", "potential", "v_amplitude", "rho", "v_width",
            "dimension", "delta0", "delta1", "witness",
        ],
    ),
    ("grid", &["r_max", "n_interior", "ell"]),
    ("carleman", &["h0", "eps0", "s", "h", "eps", "phase_h", "draws", "max_jumps", "atoms", "origin_h"]),
    (
        "decay",
        &[
            "gamma", "eta", "s", "m", "kind", "times", "split_time", "data_center", "data_width", "r_data",
            "r_obs", "stone_times", "stone_cap",
        ],
    ),
    (
        "resolvent",
        &["s", "lambda_min", "lambda_max", "samples", "eps", "s_low", "cap", "angles", "s_prime", "probes"],
    ),
    ("analysis", &["profiles", "kappa", "nu"]),
    ("output", &["directory", "formats"]),
];

/// Raw `section.key → (value, line)` table from an INI-style file.
#[derive(Debug, Clone, Default)]
pub struct Ini {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl Ini {
    /// `[section]` headers, `key = value` lines, `#`/`;` comments. Unknown
    /// sections and keys, duplicates and keys outside a section are rejected.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut ini = Ini::default();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split(['#', ';']).next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return err(line, format!("malformed section header {body:?}"));
                };
                let name = name.trim().to_string();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return err(line, format!("unknown section [{name}]"));
                }
                section = Some(name);
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return err(line, format!("expected key = value, got {body:?}"));
            };
            let key = key.trim().to_string();
            let Some(sec) = &section else {
                return err(line, format!("key {key:?} outside any section"));
            };
            let allowed = SCHEMA.iter().find(|(s, _)| s == sec).map(|(_, keys)| *keys).unwrap_or(&[]);
            if !allowed.contains(&key.as_str()) {
                return err(line, format!("unknown key {key:?} in [{sec}]"));
            }
            let slot = (sec.clone(), key.clone());
            if let Some((_, first)) = ini.entries.get(&slot) {
                return err(line, format!("duplicate key {key:?} in [{sec}] (first on line {first})"));
            }
            ini.entries.insert(slot, (value.trim().to_string(), line));
        }
        Ok(ini)
    }

    fn raw(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some((v, line)) => parse_f64(v, *line, key),
        }
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some((v, line)) => v.parse().or_else(|_| err(*line, format!("{key}: expected a nonnegative integer, got {v:?}"))),
        }
    }

    fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> (&'a str, usize) {
        self.raw(section, key).map_or((default, 0), |(v, l)| (v.as_str(), *l))
    }

    fn list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default.to_vec()),
            Some((v, line)) => parse_list(v, *line, key),
        }
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    match v {
        "inf" => Ok(f64::INFINITY),
        _ => v.parse().or_else(|_| err(line, format!("{key}: expected a number, got {v:?}"))),
    }
}

/// Comma-separated numbers, or `start:stop:step` (inclusive of `stop` up to rounding).
fn parse_list(v: &str, line: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let [a, b, h] = [parts[0], parts[1], parts[2]].map(|p| parse_f64(p, line, key));
        let (a, b, h) = (a?, b?, h?);
        if !(h > 0.0) || !(b >= a) {
            return err(line, format!("{key}: range needs start <= stop and a positive step"));
        }
        let count = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| a + h * k as f64).collect());
    }
    let values = v.split(',').map(|p| parse_f64(p.trim(), line, key)).collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return err(line, format!("{key}: empty list"));
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub r_max: f64,
    pub n_interior: usize,
    pub ell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanSection {
    pub h0: f64,
    pub eps0: f64,
    pub s: f64,
    pub h: Vec<f64>,
    pub eps: Vec<f64>,
    pub phase_h: f64,
    pub draws: usize,
    pub max_jumps: usize,
    /// Extra μ atoms `(r, mass)` for the randomized goal-estimate draws.
    pub atoms: Vec<(f64, f64)>,
    pub origin_h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySection {
    pub gamma: f64,
    pub eta: f64,
    pub s: f64,
    pub m: f64,
    pub kind: String,
    pub times: Vec<f64>,
    pub split_time: f64,
    pub data_center: f64,
    pub data_width: f64,
    pub r_data: f64,
    pub r_obs: f64,
    pub stone_times: Vec<f64>,
    pub stone_cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSection {
    pub s: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub samples: usize,
    pub eps: f64,
    pub s_low: f64,
    pub cap: f64,
    pub angles: usize,
    pub s_prime: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSection {
    pub profiles: usize,
    pub kappa: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub medium: MediumSpec,
    pub grid: GridConfig,
    pub carleman: CarlemanSection,
    pub decay: DecaySection,
    pub resolvent: ResolventSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

fn medium(ini: &Ini) -> Result<MediumSpec, ConfigError> {
    let m = "medium";
    let (kind, kind_line) = ini.str_or(m, "wavespeed", "constant");
    let wavespeed = match kind {
        "constant" => Wavespeed::Constant(ini.f64_or(m, "c", 1.0)?),
        "step" => Wavespeed::Step {
            inner: ini.f64_or(m, "c_inner", 0.8)?,
            outer: ini.f64_or(m, "c_outer", 1.0)?,
            radius: ini.f64_or(m, "jump_radius", 3.0)?,
        },
        "layers" => {
            let radii = ini.list_or(m, "radii", &[1.0, 2.0])?;
            let speeds = ini.list_or(m, "speeds", &[0.8, 0.9, 1.0])?;
            if speeds.len() != radii.len() + 1 {
                let line = ini.raw(m, "speeds").map_or(kind_line, |x| x.1);
                return err(line, "layers need one more speed than radii");
            }
            Wavespeed::Layers { radii, speeds }
        }
        "bump" => Wavespeed::SmoothBump {
            amplitude: ini.f64_or(m, "bump_amplitude", 0.3)?,
            radius: ini.f64_or(m, "bump_radius", 2.0)?,
        },
        "decaying" => Wavespeed::Decaying {
            amplitude: ini.f64_or(m, "decay_amplitude", 0.2)?,
            rate: ini.f64_or(m, "decay_rate", 3.0)?,
        },
        other => return err(kind_line, format!("unknown wavespeed {other:?} (constant, step, layers, bump, decaying)")),
    };
    let (pot, pot_line) = ini.str_or(m, "potential", "zero");
    let amplitude = ini.f64_or(m, "v_amplitude", 0.5)?;
    let potential = match pot {
        "zero" => Potential::Zero,
        "bracket" => Potential::Bracket { amplitude, rho: ini.f64_or(m, "rho", 4.0)? },
        "gaussian" => Potential::Gaussian { amplitude, width: ini.f64_or(m, "v_width", 1.0)? },
        other => return err(pot_line, format!("unknown potential {other:?} (zero, bracket, gaussian)")),
    };
    let dimension = ini.usize_or(m, "dimension", 3)?;
    if dimension < 2 {
        return err(ini.raw(m, "dimension").map_or(0, |x| x.1), "dimension must be at least 2");
    }
    Ok(MediumSpec {
        wavespeed,
        potential,
        dimension,
        delta0: ini.f64_or(m, "delta0", f64::INFINITY)?,
        delta1: ini.f64_or(m, "delta1", f64::INFINITY)?,
        witness: ini.f64_or(m, "witness", 1.0)?,
        potential_lipschitz: true,
    })
}

fn atoms(ini: &Ini) -> Result<Vec<(f64, f64)>, ConfigError> {
    let Some((v, line)) = ini.raw("carleman", "atoms") else {
        return Ok(Vec::new());
    };
    v.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| match p.split_once(':') {
            Some((r, mass)) => Ok((parse_f64(r.trim(), *line, "atoms")?, parse_f64(mass.trim(), *line, "atoms")?)),
            None => err(*line, format!("atoms: expected r:mass pairs, got {p:?}")),
        })
        .collect()
}

impl RunConfig {
    pub fn from_ini(command: &str, ini: &Ini) -> Result<Self, ConfigError> {
        let g = "grid";
        let grid = GridConfig {
            r_max: ini.f64_or(g, "r_max", 20.0)?,
            n_interior: ini.usize_or(g, "n_interior", 400)?,
            ell: ini.usize_or(g, "ell", 0)?,
        };
        if !(grid.r_max > 0.0) || grid.n_interior == 0 {
            return err(ini.raw(g, "r_max").or(ini.raw(g, "n_interior")).map_or(0, |x| x.1), "grid must be nonempty");
        }
        let c = "carleman";
        let carleman = CarlemanSection {
            h0: ini.f64_or(c, "h0", 1.0)?,
            eps0: ini.f64_or(c, "eps0", 0.1)?,
            s: ini.f64_or(c, "s", 0.75)?,
            h: ini.list_or(c, "h", &[1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125])?,
            eps: ini.list_or(c, "eps", &[0.1])?,
            phase_h: ini.f64_or(c, "phase_h", 0.5)?,
            draws: ini.usize_or(c, "draws", 100)?,
            max_jumps: ini.usize_or(c, "max_jumps", 3)?,
            atoms: atoms(ini)?,
            origin_h: ini.list_or(c, "origin_h", &[0.5, 0.25, 0.125])?,
        };
        let d = "decay";
        let (kind, kind_line) = ini.str_or(d, "kind", "cos");
        if !matches!(kind, "cos" | "sinc") {
            return err(kind_line, format!("kind must be cos or sinc, got {kind:?}"));
        }
        let decay = DecaySection {
            gamma: ini.f64_or(d, "gamma", 1.0)?,
            eta: ini.f64_or(d, "eta", 0.25)?,
            s: ini.f64_or(d, "s", 1.0)?,
            m: ini.f64_or(d, "m", 0.0)?,
            kind: kind.to_string(),
            times: ini.list_or(d, "times", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0])?,
            split_time: ini.f64_or(d, "split_time", 8.0)?,
            data_center: ini.f64_or(d, "data_center", 3.0)?,
            data_width: ini.f64_or(d, "data_width", 0.8)?,
            r_data: ini.f64_or(d, "r_data", 5.0)?,
            r_obs: ini.f64_or(d, "r_obs", 5.0)?,
            stone_times: ini.list_or(d, "stone_times", &[0.5, 1.0, 1.5])?,
            stone_cap: ini.f64_or(d, "stone_cap", 6.0)?,
        };
        let r = "resolvent";
        let resolvent = ResolventSection {
            s: ini.f64_or(r, "s", 0.75)?,
            lambda_min: ini.f64_or(r, "lambda_min", 0.5)?,
            lambda_max: ini.f64_or(r, "lambda_max", 3.0)?,
            samples: ini.usize_or(r, "samples", 12)?,
            eps: ini.f64_or(r, "eps", 0.1)?,
            s_low: ini.f64_or(r, "s_low", 1.5)?,
            cap: ini.f64_or(r, "cap", 4.0)?,
            angles: ini.usize_or(r, "angles", 6)?,
            s_prime: ini.f64_or(r, "s_prime", 1.2)?,
            probes: ini.usize_or(r, "probes", 10)?,
        };
        let a = "analysis";
        let analysis = AnalysisSection {
            profiles: ini.usize_or(a, "profiles", 100)?,
            kappa: ini.f64_or(a, "kappa", 2.0)?,
            nu: ini.f64_or(a, "nu", 0.9)?,
        };
        let (formats, formats_line) = ini.str_or("output", "formats", "csv");
        let mut svg = false;
        for f in formats.split(',').map(str::trim) {
            match f {
                "csv" => {}
                "svg" => svg = true,
                other => return err(formats_line, format!("unknown output format {other:?} (csv, svg)")),
            }
        }
        let output = OutputSection { directory: PathBuf::from(ini.str_or("output", "directory", "out").0), svg };
        Ok(RunConfig {
            command: command.to_string(),
            medium: medium(ini)?,
            grid,
            carleman,
            decay,
            resolvent,
            analysis,
            output,
        })
    }

    pub fn load(command: &str, path: Option<&Path>) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).or_else(|e| err(0, format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_ini(command, &Ini::parse(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = RunConfig::from_ini("phase", &Ini::parse("").unwrap()).unwrap();
        assert_eq!(cfg.medium, MediumSpec { delta0: f64::INFINITY, ..MediumSpec::flat(3) });
        assert_eq!(cfg.grid.n_interior, 400);
        assert!(!cfg.output.svg);
    }

    #[test]
    fn sections_and_lists() {
        let text = "# medium\n[medium]\nwavespeed = step\nc_inner = 0.7 ; slow core\n\n[decay]\ntimes = 1:3:0.5\nstone_times = 0.5, 1\n[output]\nformats = csv,svg\n";
        let cfg = RunConfig::from_ini("decay-sim", &Ini::parse(text).unwrap()).unwrap();
        assert_eq!(cfg.medium.wavespeed, Wavespeed::Step { inner: 0.7, outer: 1.0, radius: 3.0 });
        assert_eq!(cfg.decay.times, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        assert_eq!(cfg.decay.stone_times, vec![0.5, 1.0]);
        assert!(cfg.output.svg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[grid]\nr_max = 10\nbogus = 1\n", 3, "unknown key"),
            ("[nowhere]\n", 1, "unknown section"),
            ("r_max = 3\n", 1, "outside any section"),
            ("[grid]\nr_max = 1\nr_max = 2\n", 3, "duplicate"),
            ("[grid]\n\nr_max = ten\n", 3, "expected a number"),
            ("[medium]\nwavespeed = wobbly\n", 2, "unknown wavespeed"),
            ("[grid\n", 1, "malformed"),
        ];
        for (text, line, needle) in cases {
            let e = Ini::parse(text).and_then(|ini| RunConfig::from_ini("phase", &ini)).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
            assert!(e.message.contains(needle), "{text:?}: {e}");
        }
    }

    #[test]
    fn atoms_parse() {
        let ini = Ini::parse("[carleman]\natoms = 0.5:0.3, 1.5:0.4\n").unwrap();
        assert_eq!(atoms(&ini).unwrap(), vec![(0.5, 0.3), (1.5, 0.4)]);
        let bad = Ini::parse("[carleman]\natoms = 0.5\n").unwrap();
        assert_eq!(atoms(&bad).unwrap_err().line, 2);
    }
}
