//! Line-oriented scripts.
//!
//! ```text
//! # comments take a whole line
//! domain standard
//! order 3
//! let f = 1 - theta
//! print f*(1 + theta)
//! assert f*(1 + theta + theta^2 + theta^3) == 1
//! invert "1 - theta"
//! ```
//!
//! Any other line is a zsup subcommand. Relative paths resolve against the
//! script's directory. Execution stops at the first input error; failed
//! checks are reported and execution continues.

use std::path::Path;

use clap::Parser;
use serde_json::json;
use zsup_core::DomainSpec;

use crate::commands::{execute, Cli, Context, DEFAULT_ORDER};
use crate::report::{CliError, Report, Status};

pub fn run_file(ctx: &mut Context, path: &Path) -> Result<Status, CliError> {
    let text = ctx.read(path)?;
    let full = ctx.resolve(path);
    let mut local = ctx.clone();
    local.base_dir = full.parent().map(Path::to_path_buf);
    local.in_script = true;
    run_source(&mut local, &text)
}

pub fn run_source(ctx: &mut Context, text: &str) -> Result<Status, CliError> {
    let mut status = Status::Passed;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let result = statement(ctx, line).map_err(|e| e.context(format_args!("line {}", i + 1)))?;
        if result == Status::Failed {
            status = Status::Failed;
        }
    }
    Ok(status)
}

fn statement(ctx: &mut Context, line: &str) -> Result<Status, CliError> {
    let (head, rest) = match line.split_once(char::is_whitespace) {
        Some((h, r)) => (h, r.trim()),
        None => (line, ""),
    };
    match head {
        "domain" => {
            let d = if rest == "standard" {
                DomainSpec::standard_z2_squared(DEFAULT_ORDER)
            } else {
                ctx.load(Path::new(rest))?
            };
            ctx.set_domain(d);
            Ok(Status::Passed)
        }
        "order" => {
            let n = rest
                .parse()
                .map_err(|_| CliError::input(format!("`{rest}` is not a truncation order")))?;
            ctx.set_order(n)?;
            Ok(Status::Passed)
        }
        "let" => {
            let (name, expr) = rest
                .split_once('=')
                .ok_or_else(|| CliError::input("expected `let NAME = EXPR`"))?;
            let name = name.trim();
            let valid = name
                .chars()
                .next()
                .is_some_and(|c| c.is_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_alphanumeric() || c == '_');
            if !valid {
                return Err(CliError::input(format!("`{name}` is not a valid name")));
            }
            let value = ctx.series(expr)?;
            ctx.bindings.insert(name.to_string(), value);
            Ok(Status::Passed)
        }
        "print" => {
            let text = ctx.series(rest)?.to_expr_string();
            ctx.emit(&Report::new(json!({ "result": text })).line(text));
            Ok(Status::Passed)
        }
        "assert" => {
            let (lhs, rhs) = rest
                .split_once("==")
                .ok_or_else(|| CliError::input("expected `assert EXPR == EXPR`"))?;
            let (a, b) = (ctx.series(lhs)?, ctx.series(rhs)?);
            let ok = a == b;
            let mut report = Report::new(json!({
                "assert": rest,
                "ok": ok,
                "lhs": a.to_expr_string(),
                "rhs": b.to_expr_string(),
            }))
            .verdict(
                format!("assert {rest}: {}", if ok { "ok" } else { "FAIL" }),
                ok,
            );
            if !ok {
                report = report
                    .line(format!("  lhs = {}", a.to_expr_string()))
                    .line(format!("  rhs = {}", b.to_expr_string()));
            }
            ctx.emit(&report);
            Ok(report.status)
        }
        _ => {
            let words = shlex::split(line).ok_or_else(|| CliError::input("unbalanced quotes"))?;
            let cli = Cli::try_parse_from(std::iter::once("zsup".to_string()).chain(words))
                .map_err(|e| CliError::input(e.render().to_string().trim_end()))?;
            let mut local = ctx.clone();
            local.apply(&cli.opts)?;
            execute(&mut local, &cli.command)
        }
    }
}
