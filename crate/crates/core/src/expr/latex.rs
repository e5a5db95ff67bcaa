//! Cleaning of restricted LaTeX fragments into plain grammar text.

use super::ExprError;

const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa",
    "lambda", "mu", "nu", "xi", "omicron", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi",
    "psi", "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Upsilon", "Phi",
    "Psi", "Omega",
];

/// Rewrites a restricted LaTeX subset into plain grammar text:
/// `\frac{a}{b}` becomes `(a)/(b)`, `\cdot`/`\times` become `*`,
/// `^{e}` becomes `^(e)`, Greek commands are spelled out, subscripts are
/// fused into identifiers (`x_{1}` → `x_1`), and `\ln` maps to `log`.
///
/// Any backslash command outside the subset is rejected with
/// [`ExprError::UnsupportedLatexCommand`].
pub fn clean_source(raw: &str) -> Result<String, ExprError> {
    let chars: Vec<char> = raw.chars().collect();
    clean_chars(&chars)
}

fn clean_chars(chars: &[char]) -> Result<String, ExprError> {
    let mut out = String::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '\\' => {
                let (name, next) = read_command(chars, i + 1);
                i = next;
                match name.as_str() {
                    "cdot" | "times" => out.push('*'),
                    "frac" => {
                        let (num, next) = read_group(chars, i, &name)?;
                        let (den, next) = read_group(chars, next, &name)?;
                        i = next;
                        out.push('(');
                        out.push_str(&clean_chars(&num)?);
                        out.push_str(")/(");
                        out.push_str(&clean_chars(&den)?);
                        out.push(')');
                    }
                    "exp" | "log" | "sin" | "cos" | "abs" => out.push_str(&name),
                    "ln" => out.push_str("log"),
                    "le" | "leq" => out.push_str("<="),
                    "ge" | "geq" => out.push_str(">="),
                    _ if GREEK.contains(&name.as_str()) => out.push_str(&name),
                    _ => return Err(ExprError::UnsupportedLatexCommand(name)),
                }
            }
            '^' if chars.get(i + 1) == Some(&'{') => {
                let (group, next) = read_group(chars, i + 1, "^")?;
                i = next;
                out.push_str("^(");
                out.push_str(&clean_chars(&group)?);
                out.push(')');
            }
            '_' if chars.get(i + 1) == Some(&'{') => {
                let (group, next) = read_group(chars, i + 1, "_")?;
                i = next;
                let inner = clean_chars(&group)?;
                // Subscripts fuse into the identifier, so the content must
                // itself be identifier-shaped.
                if !inner.is_empty() && inner.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    out.push('_');
                    out.push_str(&inner);
                } else {
                    return Err(ExprError::UnsupportedLatexCommand(format!("_{{{}}}", inner)));
                }
            }
            // Stray grouping braces act as parentheses.
            '{' => {
                out.push('(');
                i += 1;
            }
            '}' => {
                out.push(')');
                i += 1;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Reads a command name after a backslash; returns (name, index after it).
fn read_command(chars: &[char], start: usize) -> (String, usize) {
    let mut i = start;
    let mut name = String::new();
    while i < chars.len() && chars[i].is_ascii_alphabetic() {
        name.push(chars[i]);
        i += 1;
    }
    (name, i)
}

/// Reads a `{...}` group with balanced braces starting at `start`.
fn read_group(chars: &[char], start: usize, ctx: &str) -> Result<(Vec<char>, usize), ExprError> {
    let mut i = start;
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    if chars.get(i) != Some(&'{') {
        return Err(ExprError::UnsupportedLatexCommand(format!(
            "{} (missing {{...}} group)",
            ctx
        )));
    }
    i += 1;
    let mut depth = 1usize;
    let mut body = Vec::new();
    while i < chars.len() {
        match chars[i] {
            '{' => {
                depth += 1;
                body.push('{');
            }
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok((body, i + 1));
                }
                body.push('}');
            }
            c => body.push(c),
        }
        i += 1;
    }
    Err(ExprError::UnsupportedLatexCommand(format!(
        "{} (unbalanced braces)",
        ctx
    )))
}
