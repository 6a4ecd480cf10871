use std::fmt::Display;

use serde_json::Value;
use zsup_core::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Passed,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// A check ran and its answer was negative.
    Verification,
    /// Unreadable or malformed input, or an unsupported request.
    Input,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Display) -> Self {
        CliError {
            kind: ErrorKind::Input,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Verification => 1,
            ErrorKind::Input => 2,
        }
    }

    pub fn context(mut self, prefix: impl Display) -> Self {
        self.message = format!("{prefix}: {}", self.message);
        self
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::DegreeMismatch { .. }
            | Error::RangeViolation { .. }
            | Error::SingularAtSample { .. }
            | Error::NonDisjointSupport { .. }
            | Error::InhomogeneousProduct { .. }
            | Error::EmptyOverlap(..) => ErrorKind::Verification,
            _ => ErrorKind::Input,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

/// Result of one command in both output formats.
pub struct Report {
    pub text: Vec<Line>,
    pub json: Value,
    pub status: Status,
}

/// A text line, optionally marked as a pass/fail verdict for styling.
pub enum Line {
    Plain(String),
    Verdict(String, bool),
}

impl Report {
    pub fn new(json: Value) -> Self {
        Report {
            text: Vec::new(),
            json,
            status: Status::Passed,
        }
    }

    pub fn line(mut self, s: impl Into<String>) -> Self {
        self.text.push(Line::Plain(s.into()));
        self
    }

    pub fn lines(mut self, lines: impl IntoIterator<Item = String>) -> Self {
        self.text.extend(lines.into_iter().map(Line::Plain));
        self
    }

    pub fn verdict(mut self, s: impl Into<String>, ok: bool) -> Self {
        self.text.push(Line::Verdict(s.into(), ok));
        if !ok {
            self.status = Status::Failed;
        }
        self
    }

    pub fn render_text(&self, color: bool) -> String {
        let mut out = String::new();
        for line in &self.text {
            match line {
                Line::Plain(s) => out.push_str(s),
                Line::Verdict(s, ok) if color => {
                    let code = if *ok { 32 } else { 31 };
                    out.push_str(&format!("\x1b[{code}m{s}\x1b[0m"));
                }
                Line::Verdict(s, _) => out.push_str(s),
            }
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("JSON values serialize");
        s.push('\n');
        s
    }
}
