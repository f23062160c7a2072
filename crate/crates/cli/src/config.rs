//! Flat `key=value` config files and the small list syntaxes used by flags.

use std::collections::BTreeSet;

use bifurc::Branch;

/// One `key=value` setting, with its 1-based line for error messages.
#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parses a config file. Blank lines and `#` comments are skipped; keys are
/// long flag names, with `_` accepted for `-`.
pub fn parse_config(text: &str) -> Result<Vec<Setting>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(s, _)| s).trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!(
                "line {}: expected key=value, found `{line}`",
                i + 1
            ));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push(Setting {
            key,
            value: v.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

/// Turns settings into `--key=value` arguments. `flags` are the switches that
/// take no value; for those the value must be a boolean.
pub fn settings_to_args(
    settings: &[Setting],
    known: &[String],
    flags: &[String],
) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for s in settings {
        if s.key == "config" || !known.contains(&s.key) {
            return Err(format!("line {}: unknown key `{}`", s.line, s.key));
        }
        if flags.contains(&s.key) {
            match s.value.as_str() {
                "true" | "yes" | "1" | "on" => args.push(format!("--{}", s.key)),
                "false" | "no" | "0" | "off" => {}
                v => {
                    return Err(format!(
                        "line {}: `{}` expects a boolean, found `{v}`",
                        s.line, s.key
                    ))
                }
            }
        } else {
            args.push(format!("--{}={}", s.key, s.value));
        }
    }
    Ok(args)
}

/// Parses an order list such as `1..4`, `0,2,5` or `0,3..5` (ranges inclusive).
pub fn parse_orders(s: &str) -> Result<Vec<usize>, String> {
    let mut set = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad order `{t}` in `{s}`"))
        };
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty order range `{part}`"));
            }
            set.extend(a..=b);
        } else {
            set.insert(num(part)?);
        }
    }
    if set.is_empty() {
        return Err("order list is empty".into());
    }
    Ok(set.into_iter().collect())
}

/// Branches selected by `plus`, `minus` or `both`.
pub fn parse_branches(s: &str) -> Result<Vec<Branch>, String> {
    match s {
        "both" => Ok(Branch::BOTH.to_vec()),
        _ => Branch::parse(s)
            .map(|b| vec![b])
            .ok_or_else(|| format!("bad branch `{s}`, expected plus, minus or both")),
    }
}

fn branch_symbol(c: char) -> Option<Branch> {
    match c {
        '+' => Some(Branch::Plus),
        '-' => Some(Branch::Minus),
        _ => None,
    }
}

/// Parses a branch-pair list such as `++,+-` or `plus:minus`.
pub fn parse_pairs(s: &str) -> Result<Vec<(Branch, Branch)>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let pair = if let Some((a, b)) = part.split_once(':') {
            Branch::parse(a).zip(Branch::parse(b))
        } else {
            let cs: Vec<char> = part.chars().collect();
            match cs[..] {
                [a, b] => branch_symbol(a).zip(branch_symbol(b)),
                _ => None,
            }
        };
        match pair {
            Some(p) if !out.contains(&p) => out.push(p),
            Some(_) => {}
            None => {
                return Err(format!(
                    "bad branch pair `{part}`, expected e.g. `+-` or `plus:minus`"
                ))
            }
        }
    }
    if out.is_empty() {
        return Err("branch pair list is empty".into());
    }
    Ok(out)
}

/// All pairs `(a, b)` of selected branches.
pub fn pairs_of(branches: &[Branch]) -> Vec<(Branch, Branch)> {
    let mut out = Vec::new();
    for &a in branches {
        for &b in branches {
            out.push((a, b));
        }
    }
    out
}
