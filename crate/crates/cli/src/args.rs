//! Argument preprocessing: `--config FILE` expansion and period syntax.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

pub const ENV_PREFIX: &str = "BREGKACZ_";

/// Environment variable that overrides `--<flag>`.
pub fn env_name(flag: &str) -> String {
    format!("{ENV_PREFIX}{}", flag.to_ascii_uppercase().replace('-', "_"))
}

/// Parses `key = value` lines (`#` comments, blank lines allowed) into flag
/// pairs. Keys are flag names without the leading dashes; `_` and `-` are
/// interchangeable.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value, got {line:?}", origin.display(), idx + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("{}:{}: invalid key {key:?}", origin.display(), idx + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Rewrites `argv` so that settings from `--config FILE` sit right after the
/// subcommand, ahead of the user's own flags. Since every flag overrides
/// itself, precedence ends up command line > environment > file > default:
/// file keys whose environment variable is set are dropped.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().context("--config needs a file argument")?);
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let pairs = parse_config(&text, path)?;
    // binary name, then the subcommand (first non-flag token)
    let sub = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 2);
    let at = sub.unwrap_or(rest.len());
    let injected: Vec<String> = pairs
        .into_iter()
        .filter(|(k, _)| std::env::var_os(env_name(k)).is_none())
        .flat_map(|(k, v)| [format!("--{k}"), v])
        .collect();
    rest.splice(at..at, injected);
    Ok(rest)
}

/// A restart period: absolute, a multiple of the block count (`165M`), or
/// derived from the error-bound constant (`auto`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodSpec {
    Iterations(usize),
    PerBlock(f64),
    Auto,
}

impl PeriodSpec {
    pub fn resolve(self, blocks: usize, auto: impl FnOnce() -> Result<usize>) -> Result<usize> {
        let k = match self {
            PeriodSpec::Iterations(k) => k,
            PeriodSpec::PerBlock(c) => (c * blocks as f64).round() as usize,
            PeriodSpec::Auto => auto()?,
        };
        if k == 0 {
            bail!("restart period must be at least 1");
        }
        Ok(k)
    }
}

impl FromStr for PeriodSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(PeriodSpec::Auto);
        }
        if let Some(c) = s.strip_suffix(['M', 'm']) {
            let c: f64 = c.trim().parse().map_err(|_| format!("bad period multiple {s:?}"))?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(format!("period multiple must be positive, got {s:?}"));
            }
            return Ok(PeriodSpec::PerBlock(c));
        }
        s.parse()
            .map(PeriodSpec::Iterations)
            .map_err(|_| format!("expected an integer, '<c>M' or 'auto', got {s:?}"))
    }
}

/// Epoch budget: a number, or `auto` for `200 max(m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Epochs(usize),
    Auto,
}

impl Budget {
    pub fn resolve(self, m: usize, n: usize) -> usize {
        match self {
            Budget::Epochs(e) => e,
            Budget::Auto => 200 * m.max(n),
        }
    }
}

impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(Budget::Auto);
        }
        s.trim()
            .parse()
            .map(Budget::Epochs)
            .map_err(|_| format!("expected an epoch count or 'auto', got {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn period_syntax() {
        assert_eq!("283".parse::<PeriodSpec>().unwrap(), PeriodSpec::Iterations(283));
        assert_eq!("165M".parse::<PeriodSpec>().unwrap(), PeriodSpec::PerBlock(165.0));
        assert_eq!("auto".parse::<PeriodSpec>().unwrap(), PeriodSpec::Auto);
        assert!("-3M".parse::<PeriodSpec>().is_err());
        assert!("x".parse::<PeriodSpec>().is_err());
        assert_eq!(
            PeriodSpec::PerBlock(165.0).resolve(125, || unreachable!()).unwrap(),
            20625
        );
        assert!(PeriodSpec::Iterations(0).resolve(1, || Ok(1)).is_err());
    }

    #[test]
    fn budget_syntax() {
        assert_eq!("auto".parse::<Budget>().unwrap().resolve(500, 784), 156_800);
        assert_eq!("12".parse::<Budget>().unwrap().resolve(500, 784), 12);
    }

    #[test]
    fn config_lines() {
        let pairs = parse_config("# sweep\nmax_epochs = 40\n\nblocks=5,10 # two\n", Path::new("c")).unwrap();
        assert_eq!(
            pairs,
            vec![("max-epochs".into(), "40".into()), ("blocks".into(), "5,10".into())]
        );
        assert!(parse_config("oops\n", Path::new("c")).is_err());
    }

    #[test]
    fn config_is_injected_before_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "tol=1e-3\nzz-unused-key=1\n").unwrap();
        let a = argv(&format!("bregkacz run --config {} --tol 1e-4", path.display()));
        let out = expand_config(a).unwrap();
        assert_eq!(out, argv("bregkacz run --tol 1e-3 --zz-unused-key 1 --tol 1e-4"));
    }

    #[test]
    fn env_names() {
        assert_eq!(env_name("max-epochs"), "BREGKACZ_MAX_EPOCHS");
    }
}
