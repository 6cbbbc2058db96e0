//! Flat `key = value` config files merged under the command-line flags.

use std::fs;
use std::path::Path;

/// Turns config lines into `--key value` tokens. Blank lines and lines
/// starting with `#` are ignored; a key without `=` is a bare switch.
pub fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        let key = key.trim_start_matches("--");
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(format!("line {}: malformed key '{key}'", no + 1));
        }
        match value {
            Some("true") | None => out.push(format!("--{key}")),
            Some("false") => {}
            Some(v) => {
                out.push(format!("--{key}"));
                out.push(v.to_owned());
            }
        }
    }
    Ok(out)
}

/// Splices the tokens of a `--config FILE` argument in right after the
/// subcommand, so flags given on the command line come later and win.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_owned());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read {path}: {e}"))?;
    let tokens = parse(&text)?;
    // first token that is not an option (or an option value) is the subcommand
    let pos = rest
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| !a.starts_with('-') && !rest[*i - 1].starts_with("--threads"))
        .map(|(i, _)| i + 1)
        .unwrap_or(rest.len());
    rest.splice(pos..pos, tokens);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_switches() {
        let t = parse("# comment\n\ndof = 4\nverify\nepsilon=1e-6\nquiet = false\n").unwrap();
        assert_eq!(t, ["--dof", "4", "--verify", "--epsilon", "1e-6"]);
        assert!(parse("bad key = 1").is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("cherlb-config-{}", std::process::id()));
        fs::write(&dir, "dof = 4\n").unwrap();
        let args: Vec<String> = ["cherlb", "--threads", "2", "bound", "--config", dir.to_str().unwrap(), "--dof", "6"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let got = expand(args).unwrap();
        assert_eq!(got, ["cherlb", "--threads", "2", "bound", "--dof", "4", "--dof", "6"]);
        fs::remove_file(dir).unwrap();
    }
}
