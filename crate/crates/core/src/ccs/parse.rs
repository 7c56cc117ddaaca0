//! Surface syntax for processes, and the nominal bridge.
//!
//! Grammar (loosest to tightest: `|`, `+`, prefixing; all binders extend
//! to one prefix-level operand, so `nu a. a.0 | b.0` restricts only the
//! left component):
//!
//! ```text
//! par    := sum ('|' sum)*
//! sum    := prefix ('+' prefix)*
//! prefix := '0' | '(' par ')'
//!         | 'nu' ident '.' prefix | 'mu' ident '.' prefix
//!         | action ['.' prefix]                 -- action alone means action.0
//! action := 'tau' | ident | '\'' ident          -- 'a is the co-action of a
//! ```
//!
//! A bare identifier in process position is the prefix shorthand `a.0`,
//! unless an enclosing `mu` binds that name, in which case it is the
//! recursion variable. Definition files hold one `name = process` per
//! line, with `#` comments.
//!
//! Parsing goes through a nominal AST ([`NamedProcess`]) and resolves
//! names afterwards: free channel names are collected in first-occurrence
//! order to form the ambient table, and `nu`-bound names become levels
//! above it. [`to_named`] inverts the resolution with generated binder
//! names, which gives the pretty-printer its round-trip property.

use super::{check_guarded, CcsError, Label, Process};

/// A label over explicit channel names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NamedLabel {
    In(String),
    Out(String),
    Tau,
}

/// A process term over explicit names, the parser's intermediate form and
/// the reference representation for cross-checking the level-based one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NamedProcess {
    Nil,
    Prefix(NamedLabel, Box<NamedProcess>),
    Sum(Box<NamedProcess>, Box<NamedProcess>),
    Par(Box<NamedProcess>, Box<NamedProcess>),
    Nu(String, Box<NamedProcess>),
    Var(String),
    Mu(String, Box<NamedProcess>),
}

/// A parsed definition file. All definitions share one ambient name
/// table; each is an independent closed process (definition names are not
/// in scope inside process expressions).
#[derive(Clone, Debug)]
pub struct CcsFile {
    pub names: Vec<String>,
    pub defs: Vec<(String, Process)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    OutIdent(String),
    TauKw,
    NuKw,
    MuKw,
    Zero,
    Dot,
    Plus,
    Bar,
    LPar,
    RPar,
}

fn syntax(offset: usize, msg: impl Into<String>) -> CcsError {
    CcsError::Syntax {
        offset,
        msg: msg.into(),
    }
}

fn scan(src: &str, base: usize) -> Result<Vec<(usize, Tok)>, CcsError> {
    let mut toks = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let at = base + i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {}
            '#' => {
                for (_, c2) in chars.by_ref() {
                    if c2 == '\n' {
                        break;
                    }
                }
            }
            '.' => toks.push((at, Tok::Dot)),
            '+' => toks.push((at, Tok::Plus)),
            '|' => toks.push((at, Tok::Bar)),
            '(' => toks.push((at, Tok::LPar)),
            ')' => toks.push((at, Tok::RPar)),
            '0' => toks.push((at, Tok::Zero)),
            '\'' => {
                let mut name = String::new();
                while let Some((_, c2)) = chars.peek() {
                    if c2.is_alphanumeric() || *c2 == '_' {
                        name.push(*c2);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(syntax(at, "expected a channel name after `'`"));
                }
                if is_keyword(&name) {
                    return Err(syntax(at, format!("`{name}` is not a channel name")));
                }
                toks.push((at, Tok::OutIdent(name)));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = String::new();
                name.push(c);
                while let Some((_, c2)) = chars.peek() {
                    if c2.is_alphanumeric() || *c2 == '_' {
                        name.push(*c2);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let tok = match name.as_str() {
                    "tau" => Tok::TauKw,
                    "nu" => Tok::NuKw,
                    "mu" => Tok::MuKw,
                    _ => Tok::Ident(name),
                };
                toks.push((at, tok));
            }
            _ => return Err(syntax(at, format!("unexpected character `{c}`"))),
        }
    }
    Ok(toks)
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "tau" | "nu" | "mu")
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    mu_stack: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect_dot(&mut self) -> Result<(), CcsError> {
        match self.peek() {
            Some(Tok::Dot) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(syntax(self.offset(), "expected `.`")),
        }
    }

    fn par(&mut self) -> Result<NamedProcess, CcsError> {
        let mut acc = self.sum()?;
        while matches!(self.peek(), Some(Tok::Bar)) {
            self.pos += 1;
            let rhs = self.sum()?;
            acc = NamedProcess::Par(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn sum(&mut self) -> Result<NamedProcess, CcsError> {
        let mut acc = self.prefix()?;
        while matches!(self.peek(), Some(Tok::Plus)) {
            self.pos += 1;
            let rhs = self.prefix()?;
            acc = NamedProcess::Sum(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn binder_name(&mut self) -> Result<String, CcsError> {
        match self.bump() {
            Some(Tok::Ident(name)) => Ok(name),
            _ => Err(syntax(self.offset(), "expected a binder name")),
        }
    }

    fn prefix(&mut self) -> Result<NamedProcess, CcsError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Zero) => Ok(NamedProcess::Nil),
            Some(Tok::LPar) => {
                let inner = self.par()?;
                match self.bump() {
                    Some(Tok::RPar) => Ok(inner),
                    _ => Err(syntax(self.offset(), "expected `)`")),
                }
            }
            Some(Tok::NuKw) => {
                let name = self.binder_name()?;
                self.expect_dot()?;
                let body = self.prefix()?;
                Ok(NamedProcess::Nu(name, Box::new(body)))
            }
            Some(Tok::MuKw) => {
                let name = self.binder_name()?;
                self.expect_dot()?;
                self.mu_stack.push(name.clone());
                let body = self.prefix();
                self.mu_stack.pop();
                Ok(NamedProcess::Mu(name, Box::new(body?)))
            }
            Some(Tok::TauKw) => Ok(NamedProcess::Prefix(
                NamedLabel::Tau,
                Box::new(self.prefix_tail()?),
            )),
            Some(Tok::OutIdent(name)) => Ok(NamedProcess::Prefix(
                NamedLabel::Out(name),
                Box::new(self.prefix_tail()?),
            )),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::Dot)) {
                    self.pos += 1;
                    let body = self.prefix()?;
                    Ok(NamedProcess::Prefix(NamedLabel::In(name), Box::new(body)))
                } else if self.mu_stack.iter().any(|n| *n == name) {
                    Ok(NamedProcess::Var(name))
                } else {
                    Ok(NamedProcess::Prefix(
                        NamedLabel::In(name),
                        Box::new(NamedProcess::Nil),
                    ))
                }
            }
            _ => Err(syntax(at, "expected a process")),
        }
    }

    /// The optional `. P` after an action; plain `a` means `a.0`.
    fn prefix_tail(&mut self) -> Result<NamedProcess, CcsError> {
        if matches!(self.peek(), Some(Tok::Dot)) {
            self.pos += 1;
            self.prefix()
        } else {
            Ok(NamedProcess::Nil)
        }
    }
}

fn parse_named(src: &str, base: usize) -> Result<NamedProcess, CcsError> {
    let toks = scan(src, base)?;
    if toks.is_empty() {
        return Err(syntax(base + src.len(), "expected a process"));
    }
    let end = base + src.len();
    let mut parser = Parser {
        toks,
        pos: 0,
        end,
        mu_stack: Vec::new(),
    };
    let term = parser.par()?;
    if parser.pos < parser.toks.len() {
        return Err(syntax(parser.offset(), "unexpected trailing input"));
    }
    Ok(term)
}

/// Free channel names of `p` in first-occurrence order (label positions
/// only; recursion variables are a separate namespace).
fn collect_free(p: &NamedProcess, nu_stack: &mut Vec<String>, out: &mut Vec<String>) {
    match p {
        NamedProcess::Nil | NamedProcess::Var(_) => {}
        NamedProcess::Prefix(l, q) => {
            if let NamedLabel::In(a) | NamedLabel::Out(a) = l {
                if !nu_stack.contains(a) && !out.contains(a) {
                    out.push(a.clone());
                }
            }
            collect_free(q, nu_stack, out);
        }
        NamedProcess::Sum(a, b) | NamedProcess::Par(a, b) => {
            collect_free(a, nu_stack, out);
            collect_free(b, nu_stack, out);
        }
        NamedProcess::Nu(bound, q) => {
            nu_stack.push(bound.clone());
            collect_free(q, nu_stack, out);
            nu_stack.pop();
        }
        NamedProcess::Mu(_, q) => collect_free(q, nu_stack, out),
    }
}

/// `mu` binder names in preorder, matching [`check_guarded`]'s numbering.
fn mu_names_preorder(p: &NamedProcess, out: &mut Vec<String>) {
    match p {
        NamedProcess::Nil | NamedProcess::Var(_) => {}
        NamedProcess::Prefix(_, q) | NamedProcess::Nu(_, q) => mu_names_preorder(q, out),
        NamedProcess::Sum(a, b) | NamedProcess::Par(a, b) => {
            mu_names_preorder(a, out);
            mu_names_preorder(b, out);
        }
        NamedProcess::Mu(name, q) => {
            out.push(name.clone());
            mu_names_preorder(q, out);
        }
    }
}

/// Resolves a nominal term against an ambient table: ambient name `i`
/// becomes level `i`, and each `nu` binder introduces the next level up.
pub fn to_debruijn(p: &NamedProcess, table: &[String]) -> Result<Process, CcsError> {
    fn label(
        l: &NamedLabel,
        table: &[String],
        nu_stack: &[String],
    ) -> Result<Label, CcsError> {
        let resolve = |a: &str| -> Result<usize, CcsError> {
            if let Some(i) = nu_stack.iter().rposition(|n| n == a) {
                Ok(table.len() + i)
            } else if let Some(i) = table.iter().position(|n| n == a) {
                Ok(i)
            } else {
                Err(CcsError::UnboundName(a.to_string()))
            }
        };
        Ok(match l {
            NamedLabel::In(a) => Label::In(resolve(a)?),
            NamedLabel::Out(a) => Label::Out(resolve(a)?),
            NamedLabel::Tau => Label::Tau,
        })
    }
    fn walk(
        p: &NamedProcess,
        table: &[String],
        nu_stack: &mut Vec<String>,
        mu_stack: &mut Vec<String>,
    ) -> Result<Process, CcsError> {
        Ok(match p {
            NamedProcess::Nil => Process::Nil,
            NamedProcess::Prefix(l, q) => Process::prefix(
                label(l, table, nu_stack)?,
                walk(q, table, nu_stack, mu_stack)?,
            ),
            NamedProcess::Sum(a, b) => Process::sum(
                walk(a, table, nu_stack, mu_stack)?,
                walk(b, table, nu_stack, mu_stack)?,
            ),
            NamedProcess::Par(a, b) => Process::par(
                walk(a, table, nu_stack, mu_stack)?,
                walk(b, table, nu_stack, mu_stack)?,
            ),
            NamedProcess::Nu(bound, q) => {
                nu_stack.push(bound.clone());
                let body = walk(q, table, nu_stack, mu_stack);
                nu_stack.pop();
                Process::nu(body?)
            }
            NamedProcess::Var(x) => match mu_stack.iter().rposition(|n| n == x) {
                Some(i) => Process::Var(mu_stack.len() - 1 - i),
                None => return Err(CcsError::UnboundName(x.clone())),
            },
            NamedProcess::Mu(x, q) => {
                mu_stack.push(x.clone());
                let body = walk(q, table, nu_stack, mu_stack);
                mu_stack.pop();
                Process::mu(body?)
            }
        })
    }
    walk(p, table, &mut Vec::new(), &mut Vec::new())
}

/// Renders a level-based term nominal again. Ambient levels take their
/// table names; binder levels get generated names that stay clear of the
/// table, so the result reparses (against the same table) to `p`.
pub fn to_named(p: &Process, table: &[String]) -> NamedProcess {
    fn chan(level: usize, table: &[String]) -> String {
        super::channel_name(level, table)
    }
    fn walk(p: &Process, table: &[String], nu_depth: usize, mu_depth: usize) -> NamedProcess {
        match p {
            Process::Nil => NamedProcess::Nil,
            Process::Prefix(l, q) => {
                let nl = match l {
                    Label::In(k) => NamedLabel::In(chan(*k, table)),
                    Label::Out(k) => NamedLabel::Out(chan(*k, table)),
                    Label::Tau => NamedLabel::Tau,
                };
                NamedProcess::Prefix(nl, Box::new(walk(q, table, nu_depth, mu_depth)))
            }
            Process::Sum(a, b) => NamedProcess::Sum(
                Box::new(walk(a, table, nu_depth, mu_depth)),
                Box::new(walk(b, table, nu_depth, mu_depth)),
            ),
            Process::Par(a, b) => NamedProcess::Par(
                Box::new(walk(a, table, nu_depth, mu_depth)),
                Box::new(walk(b, table, nu_depth, mu_depth)),
            ),
            Process::Nu(q) => {
                let name = generated_channel_name(table.len() + nu_depth, table);
                NamedProcess::Nu(name, Box::new(walk(q, table, nu_depth + 1, mu_depth)))
            }
            Process::Var(i) => NamedProcess::Var(format!("X{}", mu_depth - 1 - i)),
            Process::Mu(q) => NamedProcess::Mu(
                format!("X{mu_depth}"),
                Box::new(walk(q, table, nu_depth, mu_depth + 1)),
            ),
        }
    }
    walk(p, table, 0, 0)
}

/// A deterministic binder name for channel `level`, fresh for `table` and
/// the keywords. Distinct levels get distinct names.
pub(crate) fn generated_channel_name(level: usize, table: &[String]) -> String {
    let mut name = format!("n{level}");
    while table.contains(&name) || is_keyword(&name) {
        name.push('_');
    }
    name
}

fn print_label(l: &NamedLabel, out: &mut String) {
    match l {
        NamedLabel::In(a) => out.push_str(a),
        NamedLabel::Out(a) => {
            out.push('\'');
            out.push_str(a);
        }
        NamedLabel::Tau => out.push_str("tau"),
    }
}

/// Prints with minimal parentheses: `|` loosest, then `+`, then prefixes
/// and binders; left-nested chains print flat.
pub fn print_named(p: &NamedProcess) -> String {
    fn pp(p: &NamedProcess, req: u8, out: &mut String) {
        let prec = match p {
            NamedProcess::Par(..) => 0,
            NamedProcess::Sum(..) => 1,
            _ => 2,
        };
        let wrap = prec < req;
        if wrap {
            out.push('(');
        }
        match p {
            NamedProcess::Nil => out.push('0'),
            NamedProcess::Prefix(l, q) => {
                print_label(l, out);
                out.push('.');
                pp(q, 2, out);
            }
            NamedProcess::Sum(a, b) => {
                pp(a, 1, out);
                out.push_str(" + ");
                pp(b, 2, out);
            }
            NamedProcess::Par(a, b) => {
                pp(a, 0, out);
                out.push_str(" | ");
                pp(b, 1, out);
            }
            NamedProcess::Nu(name, q) => {
                out.push_str("nu ");
                out.push_str(name);
                out.push_str(". ");
                pp(q, 2, out);
            }
            NamedProcess::Var(x) => out.push_str(x),
            NamedProcess::Mu(x, q) => {
                out.push_str("mu ");
                out.push_str(x);
                out.push_str(". ");
                pp(q, 2, out);
            }
        }
        if wrap {
            out.push(')');
        }
    }
    let mut out = String::new();
    pp(p, 0, &mut out);
    out
}

/// Renders a process with the channel names of `table`; see
/// [`print_named`] for the layout and [`to_named`] for binder naming.
/// Structurally distinct terms print differently (printing reparses to
/// the original term), so the output doubles as a state identifier.
pub fn pretty(p: &Process, table: &[String]) -> String {
    print_named(&to_named(p, table))
}

fn check_guarded_named(
    named: &NamedProcess,
    term: &Process,
) -> Result<(), CcsError> {
    if let Err(v) = check_guarded(term) {
        let mut names = Vec::new();
        mu_names_preorder(named, &mut names);
        let name = names
            .get(v.mu_index)
            .cloned()
            .unwrap_or_else(|| "?".to_string());
        return Err(CcsError::Unguarded { name });
    }
    Ok(())
}

/// Parses one process expression, resolving free channel names against
/// `table` and appending names not yet present (in first-occurrence
/// order). Rejects unguarded recursion.
pub fn parse_process_with(src: &str, table: &mut Vec<String>) -> Result<Process, CcsError> {
    let named = parse_named(src, 0)?;
    let mut free = Vec::new();
    collect_free(&named, &mut Vec::new(), &mut free);
    for name in free {
        if !table.contains(&name) {
            table.push(name);
        }
    }
    let term = to_debruijn(&named, table)?;
    check_guarded_named(&named, &term)?;
    Ok(term)
}

/// Parses one process expression over a fresh ambient table.
pub fn parse_process(src: &str) -> Result<(Process, Vec<String>), CcsError> {
    let mut table = Vec::new();
    let term = parse_process_with(src, &mut table)?;
    Ok((term, table))
}

/// Parses a definition file: one `name = process` per line, `#` comments,
/// blank lines ignored. All definitions share the ambient table.
pub fn parse_file(src: &str) -> Result<CcsFile, CcsError> {
    let mut offset = 0;
    let mut named_defs: Vec<(String, NamedProcess)> = Vec::new();
    for line in src.split('\n') {
        let line_base = offset;
        offset += line.len() + 1;
        let code = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        if code.trim().is_empty() {
            continue;
        }
        let eq = code
            .find('=')
            .ok_or_else(|| syntax(line_base + code.len(), "expected `name = process`"))?;
        let name_part = &code[..eq];
        let name = name_part.trim();
        let name_at = line_base + (name_part.len() - name_part.trim_start().len());
        if name.is_empty()
            || !name.starts_with(|c: char| c.is_alphabetic() || c == '_')
            || !name.chars().all(|c| c.is_alphanumeric() || c == '_')
            || is_keyword(name)
        {
            return Err(syntax(name_at, "expected a definition name"));
        }
        if named_defs.iter().any(|(n, _)| n == name) {
            return Err(syntax(name_at, format!("duplicate definition `{name}`")));
        }
        let body = parse_named(&code[eq + 1..], line_base + eq + 1)?;
        named_defs.push((name.to_string(), body));
    }
    let mut names = Vec::new();
    for (_, body) in &named_defs {
        collect_free(body, &mut Vec::new(), &mut names);
    }
    let mut defs = Vec::new();
    for (name, body) in &named_defs {
        let term = to_debruijn(body, &names)?;
        check_guarded_named(body, &term)?;
        defs.push((name.clone(), term));
    }
    Ok(CcsFile { names, defs })
}
