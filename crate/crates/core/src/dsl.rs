//! The `.wfs` scenario text format.
//!
//! ```text
//! system coin labels h t
//! system spin labels u d
//! lab Lbar contains coin
//! agent Fbar inside Lbar
//! agent W outside
//! init sqrt(1/3)*|h> + sqrt(2/3)*|t>
//! measure Fbar on coin basis computational
//! prepare spin controlled-by coin map h -> |d> ; t -> |u> + |d>
//! measure W on spin basis {o=|d>-|u>; f=|d>+|u>} open
//! announce W to all
//! ```
//!
//! One statement per line; a `{ ... }` basis may span lines. `#` starts a
//! comment. The arrows `↑ ↓ → ←` are read as the labels `u d r l`.
//!
//! The `init` ket lists labels either for every system in declaration order
//! or only for the systems that are never prepared; in the second form the
//! prepared systems start in their first label. Basis and map kets are
//! normalized; the `init` ket must already be normalized.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::hilbert::{Amplitude, SpaceRegistry, StateVector, Subsystem};
use crate::measurement::MeasurementBasis;
use crate::scenario::{Agent, Location, Receivers, Scenario, ScenarioBuilder, Step, Visibility};
use crate::{hilbert, EPS};

/// Largest Hilbert-space dimension a file may declare.
pub const MAX_DIMENSION: usize = 4096;

const KEYWORDS: [&str; 21] = [
    "system",
    "labels",
    "lab",
    "contains",
    "agent",
    "inside",
    "outside",
    "init",
    "measure",
    "on",
    "basis",
    "computational",
    "sealed",
    "open",
    "prepare",
    "controlled-by",
    "map",
    "announce",
    "to",
    "all",
    "sqrt",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Lexical,
    Syntax,
    Semantic,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Lexical => "lexical",
            DiagnosticKind::Syntax => "syntax",
            DiagnosticKind::Semantic => "semantic",
        })
    }
}

/// A parse failure; `line` and `column` are 1-based, columns count characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {} error: {}",
            self.line, self.column, self.kind, self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

impl Pos {
    fn diag(self, kind: DiagnosticKind, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            line: self.line,
            column: self.col,
            kind,
            message: message.into(),
        }
    }

    fn semantic(self, message: impl Into<String>) -> Diagnostic {
        self.diag(DiagnosticKind::Semantic, message)
    }
}

type PResult<T> = std::result::Result<T, Diagnostic>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(String),
    Pipe,
    Close,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Equals,
    Semi,
    Arrow,
    Newline,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Number(n) => write!(f, "number `{n}`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Close => f.write_str("`>`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Newline => f.write_str("end of line"),
            Tok::Eof => f.write_str("end of file"),
        }
    }
}

fn arrow_alias(c: char) -> Option<char> {
    match c {
        '↑' => Some('u'),
        '↓' => Some('d'),
        '→' => Some('r'),
        '←' => Some('l'),
        _ => None,
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || arrow_alias(c).is_some()
}

fn lex(src: &str) -> PResult<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let single = match c {
            '|' => Some(Tok::Pipe),
            '>' => Some(Tok::Close),
            ',' => Some(Tok::Comma),
            '+' => Some(Tok::Plus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '=' => Some(Tok::Equals),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            i += 1;
            col += 1;
        } else if c == '\n' {
            out.push((Tok::Newline, pos));
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
        } else if c == '-' {
            if chars.get(i + 1) == Some(&'>') {
                out.push((Tok::Arrow, pos));
                i += 2;
                col += 2;
            } else {
                out.push((Tok::Minus, pos));
                i += 1;
                col += 1;
            }
        } else if c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            if i < chars.len() && is_word_char(chars[i]) {
                return Err(Pos {
                    line,
                    col: col + (i - start),
                }
                .diag(
                    DiagnosticKind::Lexical,
                    format!("unexpected `{}` after number", chars[i]),
                ));
            }
            out.push((Tok::Number(chars[start..i].iter().collect()), pos));
            col += i - start;
        } else if is_word_char(c) {
            let start = i;
            let mut word = String::new();
            while i < chars.len() && is_word_char(chars[i]) {
                word.push(arrow_alias(chars[i]).unwrap_or(chars[i]));
                i += 1;
            }
            if word == "controlled"
                && chars[i..].starts_with(&['-', 'b', 'y'])
                && !chars.get(i + 3).is_some_and(|c| is_word_char(*c))
            {
                word.push_str("-by");
                i += 3;
            }
            out.push((Tok::Word(word), pos));
            col += i - start;
        } else {
            return Err(pos.diag(
                DiagnosticKind::Lexical,
                format!("unexpected character `{}`", c.escape_default()),
            ));
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[derive(Debug, Clone)]
struct Name {
    text: String,
    pos: Pos,
}

#[derive(Debug, Clone)]
struct Term {
    coef: f64,
    labels: Vec<Name>,
}

#[derive(Debug, Clone)]
struct Ket {
    terms: Vec<Term>,
    pos: Pos,
}

#[derive(Debug, Clone)]
enum BasisAst {
    Computational,
    Explicit(Vec<(Name, Ket)>),
}

#[derive(Debug, Clone)]
enum Stmt {
    System {
        name: Name,
        labels: Vec<Name>,
    },
    Lab {
        name: Name,
        systems: Vec<Name>,
    },
    Agent {
        name: Name,
        lab: Option<Name>,
    },
    Init(Ket),
    Measure {
        measurer: Name,
        targets: Vec<Name>,
        basis: BasisAst,
        sealed: Option<bool>,
    },
    Prepare {
        target: Name,
        control: Name,
        map: Vec<(Name, Ket)>,
    },
    Announce {
        announcer: Name,
        receivers: Option<Vec<Name>>,
    },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    braces: usize,
}

impl Parser {
    fn peek(&mut self) -> &(Tok, Pos) {
        if self.braces > 0 {
            while self.toks[self.at].0 == Tok::Newline {
                self.at += 1;
            }
        }
        &self.toks[self.at]
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.peek().clone();
        if t.0 != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn unexpected(&mut self, wanted: &str) -> Diagnostic {
        let (t, pos) = self.peek().clone();
        pos.diag(
            DiagnosticKind::Syntax,
            format!("expected {wanted}, found {t}"),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if self.peek().0 == tok {
            Ok(self.next().1)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn at_word(&mut self, w: &str) -> bool {
        matches!(&self.peek().0, Tok::Word(x) if x == w)
    }

    fn keyword(&mut self, w: &str) -> PResult<Pos> {
        if self.at_word(w) {
            Ok(self.next().1)
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    fn at_name(&mut self) -> bool {
        matches!(&self.peek().0, Tok::Word(w) if !KEYWORDS.contains(&w.as_str()) && !w.starts_with(|c: char| c.is_ascii_digit()))
    }

    fn name(&mut self, what: &str) -> PResult<Name> {
        if self.at_name() {
            let (t, pos) = self.next();
            let Tok::Word(text) = t else { unreachable!() };
            Ok(Name { text, pos })
        } else {
            Err(self.unexpected(what))
        }
    }

    fn names(&mut self, what: &str) -> PResult<Vec<Name>> {
        let mut v = vec![self.name(what)?];
        while self.at_name() {
            v.push(self.name(what)?);
        }
        Ok(v)
    }

    fn at_label(&mut self) -> bool {
        match &self.peek().0 {
            Tok::Word(_) => true,
            Tok::Number(n) => n.chars().all(|c| c.is_ascii_digit()),
            _ => false,
        }
    }

    fn label(&mut self) -> PResult<Name> {
        if self.at_label() {
            let (t, pos) = self.next();
            let text = match t {
                Tok::Word(w) | Tok::Number(w) => w,
                _ => unreachable!(),
            };
            Ok(Name { text, pos })
        } else {
            Err(self.unexpected("a label"))
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let (t, pos) = self.next();
        match t {
            Tok::Number(n) => match n.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(pos.diag(
                    DiagnosticKind::Lexical,
                    format!("number `{n}` is out of range"),
                )),
            },
            other => Err(pos.diag(
                DiagnosticKind::Syntax,
                format!("expected a number, found {other}"),
            )),
        }
    }

    fn ratio(&mut self, first: f64) -> PResult<f64> {
        self.expect(Tok::Slash)?;
        let pos = self.peek().1;
        let d = self.number()?;
        if d == 0.0 {
            return Err(pos.semantic("division by zero"));
        }
        Ok(first / d)
    }

    fn coef(&mut self) -> PResult<Option<f64>> {
        match self.peek().0.clone() {
            Tok::Word(w) if w == "sqrt" => {
                self.next();
                self.expect(Tok::LParen)?;
                let n = self.number()?;
                let v = self.ratio(n)?;
                self.expect(Tok::RParen)?;
                Ok(Some(v.sqrt()))
            }
            Tok::Number(_) => {
                let n = self.number()?;
                if self.peek().0 == Tok::Slash {
                    Ok(Some(self.ratio(n)?))
                } else {
                    Ok(Some(n))
                }
            }
            _ => Ok(None),
        }
    }

    fn term(&mut self, sign: f64) -> PResult<Term> {
        let coef = match self.coef()? {
            Some(c) => {
                self.expect(Tok::Star)?;
                c
            }
            None => 1.0,
        };
        self.expect(Tok::Pipe)?;
        let mut labels = vec![self.label()?];
        while self.peek().0 == Tok::Comma {
            self.next();
            labels.push(self.label()?);
        }
        self.expect(Tok::Close)?;
        let coef = sign * coef;
        if !coef.is_finite() {
            return Err(labels[0].pos.semantic("coefficient is out of range"));
        }
        Ok(Term { coef, labels })
    }

    fn ket(&mut self) -> PResult<Ket> {
        let pos = self.peek().1;
        let mut sign = 1.0;
        if self.peek().0 == Tok::Minus {
            self.next();
            sign = -1.0;
        } else if self.peek().0 == Tok::Plus {
            self.next();
        }
        let mut terms = vec![self.term(sign)?];
        loop {
            let sign = match self.peek().0 {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.next();
            terms.push(self.term(sign)?);
        }
        Ok(Ket { terms, pos })
    }

    fn labelled_kets(&mut self, sep: Tok) -> PResult<Vec<(Name, Ket)>> {
        let mut out = Vec::new();
        loop {
            let l = self.label()?;
            self.expect(sep.clone())?;
            out.push((l, self.ket()?));
            if self.peek().0 == Tok::Semi {
                self.next();
            } else {
                return Ok(out);
            }
        }
    }

    fn basis(&mut self) -> PResult<BasisAst> {
        if self.at_word("computational") {
            self.next();
            return Ok(BasisAst::Computational);
        }
        self.expect(Tok::LBrace)?;
        self.braces += 1;
        let kets = self.labelled_kets(Tok::Equals)?;
        self.expect(Tok::RBrace)?;
        self.braces -= 1;
        Ok(BasisAst::Explicit(kets))
    }

    fn statement(&mut self) -> PResult<Option<(Stmt, Pos)>> {
        while self.peek().0 == Tok::Newline {
            self.next();
        }
        let (tok, pos) = self.peek().clone();
        let Tok::Word(w) = tok else {
            if tok == Tok::Eof {
                return Ok(None);
            }
            return Err(self.unexpected("a statement"));
        };
        let stmt = match w.as_str() {
            "system" => {
                self.next();
                let name = self.name("a system name")?;
                self.keyword("labels")?;
                let mut labels = vec![self.label()?];
                while self.at_label() {
                    labels.push(self.label()?);
                }
                Stmt::System { name, labels }
            }
            "lab" => {
                self.next();
                let name = self.name("a lab name")?;
                self.keyword("contains")?;
                Stmt::Lab {
                    name,
                    systems: self.names("a system name")?,
                }
            }
            "agent" => {
                self.next();
                let name = self.name("an agent name")?;
                if self.at_word("outside") {
                    self.next();
                    Stmt::Agent { name, lab: None }
                } else if self.at_word("inside") {
                    self.next();
                    Stmt::Agent {
                        name,
                        lab: Some(self.name("a lab name")?),
                    }
                } else {
                    return Err(self.unexpected("`inside` or `outside`"));
                }
            }
            "init" => {
                self.next();
                Stmt::Init(self.ket()?)
            }
            "measure" => {
                self.next();
                let measurer = self.name("an agent name")?;
                self.keyword("on")?;
                let targets = self.names("a system or lab name")?;
                self.keyword("basis")?;
                let basis = self.basis()?;
                let sealed = if self.at_word("sealed") {
                    self.next();
                    Some(true)
                } else if self.at_word("open") {
                    self.next();
                    Some(false)
                } else {
                    None
                };
                Stmt::Measure {
                    measurer,
                    targets,
                    basis,
                    sealed,
                }
            }
            "prepare" => {
                self.next();
                let target = self.name("a system name")?;
                self.keyword("controlled-by")?;
                let control = self.name("a system name")?;
                self.keyword("map")?;
                Stmt::Prepare {
                    target,
                    control,
                    map: self.labelled_kets(Tok::Arrow)?,
                }
            }
            "announce" => {
                self.next();
                let announcer = self.name("an agent name")?;
                self.keyword("to")?;
                let receivers = if self.at_word("all") {
                    self.next();
                    None
                } else {
                    Some(self.names("an agent name")?)
                };
                Stmt::Announce {
                    announcer,
                    receivers,
                }
            }
            _ => return Err(self.unexpected("a statement keyword")),
        };
        match self.peek().0 {
            Tok::Newline | Tok::Eof => Ok(Some((stmt, pos))),
            _ => Err(self.unexpected("end of line")),
        }
    }
}

fn parse_statements(src: &str) -> PResult<(Vec<(Stmt, Pos)>, Pos)> {
    let toks = lex(src)?;
    let end = toks.last().expect("lexer appends eof").1;
    let mut p = Parser {
        toks,
        at: 0,
        braces: 0,
    };
    let mut out = Vec::new();
    while let Some(s) = p.statement()? {
        out.push(s);
    }
    Ok((out, end))
}

fn sem(pos: Pos) -> impl Fn(Error) -> Diagnostic {
    move |e| pos.semantic(e.to_string())
}

/// Builds a state over `reg` from a ket whose terms list one label per system.
fn build_ket(reg: &Arc<SpaceRegistry>, ket: &Ket, pad: &[usize]) -> PResult<StateVector> {
    let subs = reg.subsystems();
    let written: Vec<usize> = (0..subs.len()).filter(|i| !pad.contains(i)).collect();
    let mut amps = vec![Amplitude::new(0.0, 0.0); reg.total_dim()];
    for term in &ket.terms {
        if term.labels.len() != written.len() {
            let names: Vec<&str> = written.iter().map(|&i| subs[i].name.as_str()).collect();
            return Err(term.labels[0].pos.semantic(format!(
                "expected {} label(s) per term, one for each of: {}",
                written.len(),
                names.join(", ")
            )));
        }
        let mut digits = vec![0; subs.len()];
        for (l, &i) in term.labels.iter().zip(&written) {
            digits[i] = subs[i].label_index(&l.text).ok_or_else(|| {
                l.pos.semantic(format!(
                    "unknown label `{}` for system `{}`",
                    l.text, subs[i].name
                ))
            })?;
        }
        amps[reg.index_of(&digits)] += Amplitude::new(term.coef, 0.0);
    }
    StateVector::from_amplitudes(reg.clone(), amps).map_err(sem(ket.pos))
}

fn build_scenario(stmts: &[(Stmt, Pos)], end: Pos) -> PResult<Scenario> {
    let first = stmts.first().map_or(end, |s| s.1);

    let mut systems: Vec<Subsystem> = Vec::new();
    let mut dim: usize = 1;
    for (s, pos) in stmts {
        if let Stmt::System { name, labels } = s {
            if systems.iter().any(|x| x.name == name.text) {
                return Err(name
                    .pos
                    .semantic(format!("system `{}` declared twice", name.text)));
            }
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].iter().any(|m| m.text == l.text) {
                    return Err(l.pos.semantic(format!("label `{}` repeated", l.text)));
                }
            }
            dim = dim.saturating_mul(labels.len());
            if dim > MAX_DIMENSION {
                return Err(pos.semantic(format!("total dimension exceeds {MAX_DIMENSION}")));
            }
            systems.push(Subsystem::new(
                name.text.clone(),
                labels.iter().map(|l| l.text.clone()),
            ));
        }
    }
    if systems.is_empty() {
        return Err(first.semantic("no `system` declared"));
    }
    let reg = Arc::new(SpaceRegistry::new(systems).map_err(sem(first))?);
    let system = |n: &Name| {
        if reg.position(&n.text).is_some() {
            Ok(n.text.clone())
        } else {
            Err(n.pos.semantic(format!("unknown system `{}`", n.text)))
        }
    };

    let mut builder = ScenarioBuilder::new(reg.clone());
    let mut labs: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (s, _) in stmts {
        if let Stmt::Lab { name, systems } = s {
            if labs.contains_key(&name.text) || reg.position(&name.text).is_some() {
                return Err(name
                    .pos
                    .semantic(format!("name `{}` already in use", name.text)));
            }
            let members = systems.iter().map(system).collect::<PResult<Vec<_>>>()?;
            let refs: Vec<&str> = members.iter().map(String::as_str).collect();
            builder.lab(&name.text, &refs);
            labs.insert(name.text.clone(), members);
        }
    }
    let mut agents: Vec<String> = Vec::new();
    for (s, _) in stmts {
        if let Stmt::Agent { name, lab } = s {
            if agents.contains(&name.text)
                || labs.contains_key(&name.text)
                || reg.position(&name.text).is_some()
            {
                return Err(name
                    .pos
                    .semantic(format!("name `{}` already in use", name.text)));
            }
            let agent = match lab {
                Some(l) if labs.contains_key(&l.text) => Agent::inside(&name.text, &l.text),
                Some(l) => return Err(l.pos.semantic(format!("unknown lab `{}`", l.text))),
                None => Agent::outside(&name.text),
            };
            builder.agent(agent);
            agents.push(name.text.clone());
        }
    }
    let agent = |n: &Name| {
        if agents.contains(&n.text) {
            Ok(n.text.clone())
        } else {
            Err(n.pos.semantic(format!("unknown agent `{}`", n.text)))
        }
    };

    let inits: Vec<(&Ket, Pos)> = stmts
        .iter()
        .filter_map(|(s, p)| match s {
            Stmt::Init(k) => Some((k, *p)),
            _ => None,
        })
        .collect();
    let (init, init_pos) = match inits.as_slice() {
        [] => return Err(end.semantic("no `init` statement")),
        [one] => *one,
        [_, second, ..] => return Err(second.1.semantic("`init` given twice")),
    };
    let mut prepared: Vec<usize> = Vec::new();
    for (s, _) in stmts {
        if let Stmt::Prepare { target, .. } = s {
            if let Some(i) = reg.position(&target.text) {
                if !prepared.contains(&i) {
                    prepared.push(i);
                }
            }
        }
    }
    let width = init.terms[0].labels.len();
    let pad: &[usize] = if width == reg.len() { &[] } else { &prepared };
    let state = build_ket(&reg, init, pad)?;
    if (state.norm_sqr() - 1.0).abs() > EPS {
        return Err(init_pos.semantic(format!(
            "initial state is not normalized (squared norm {})",
            state.norm_sqr()
        )));
    }
    builder.init(state);
    builder.build().map_err(sem(init_pos))?;

    for (s, pos) in stmts {
        match s {
            Stmt::Measure {
                measurer,
                targets,
                basis,
                sealed,
            } => {
                let who = agent(measurer)?;
                let mut target: Vec<String> = Vec::new();
                for t in targets {
                    let expanded = match labs.get(&t.text) {
                        Some(members) => members.clone(),
                        None => vec![system(t)?],
                    };
                    for e in expanded {
                        if target.contains(&e) {
                            return Err(t
                                .pos
                                .semantic(format!("system `{e}` measured twice in one step")));
                        }
                        target.push(e);
                    }
                }
                if target.is_empty() {
                    return Err(targets[0].pos.semantic("measurement on an empty lab"));
                }
                let basis = match basis {
                    BasisAst::Computational => {
                        MeasurementBasis::computational(&reg, &target).map_err(sem(*pos))?
                    }
                    BasisAst::Explicit(kets) => {
                        let sub = Arc::new(reg.restrict(&target).map_err(sem(*pos))?);
                        let kets = kets
                            .iter()
                            .map(|(l, k)| build_ket(&sub, k, &[]).map(|v| (l.text.clone(), v)))
                            .collect::<PResult<Vec<_>>>()?;
                        MeasurementBasis::from_kets(target.clone(), kets).map_err(sem(*pos))?
                    }
                };
                builder.measure(&who, basis, *sealed).map_err(sem(*pos))?;
            }
            Stmt::Prepare {
                target,
                control,
                map,
            } => {
                let t = system(target)?;
                system(control)?;
                let sub = Arc::new(reg.restrict(std::slice::from_ref(&t)).map_err(sem(*pos))?);
                let map = map
                    .iter()
                    .map(|(l, k)| {
                        let v = build_ket(&sub, k, &[])?;
                        hilbert::normalize(&v)
                            .map(|v| (l.text.clone(), v))
                            .map_err(sem(k.pos))
                    })
                    .collect::<PResult<Vec<_>>>()?;
                builder.prepare(&t, &control.text, map);
            }
            Stmt::Announce {
                announcer,
                receivers,
            } => {
                let who = agent(announcer)?;
                let receivers = match receivers {
                    None => Receivers::All,
                    Some(list) => {
                        Receivers::Agents(list.iter().map(agent).collect::<PResult<Vec<_>>>()?)
                    }
                };
                builder.announce(&who, receivers).map_err(sem(*pos))?;
            }
            _ => continue,
        }
        builder.build().map_err(sem(*pos))?;
    }
    builder.build().map_err(sem(first))
}

/// Parses a complete scenario; any error aborts with a single diagnostic.
pub fn parse_scenario(source: &str) -> Result<Scenario, Diagnostic> {
    let (stmts, end) = parse_statements(source)?;
    build_scenario(&stmts, end)
}

fn check_word(w: &str, what: &str, label: bool) -> crate::Result<()> {
    let ok = if label {
        !w.is_empty()
            && (w.chars().all(|c| c.is_ascii_digit()) || w.chars().all(is_word_char))
            && !(w.starts_with(|c: char| c.is_ascii_digit())
                && !w.chars().all(|c| c.is_ascii_digit()))
    } else {
        !w.is_empty()
            && w.chars().all(is_word_char)
            && !w.starts_with(|c: char| c.is_ascii_digit())
            && !KEYWORDS.contains(&w)
    };
    if ok && !w.chars().any(|c| arrow_alias(c).is_some()) {
        Ok(())
    } else {
        Err(Error::Scenario(format!(
            "{what} `{w}` cannot be written in the text format"
        )))
    }
}

fn render_ket(state: &StateVector) -> crate::Result<String> {
    let mut out = String::new();
    for (labels, a) in state.terms() {
        if a.im != 0.0 {
            return Err(Error::Scenario(
                "complex amplitudes cannot be written in the text format".into(),
            ));
        }
        if a.re == 0.0 {
            continue;
        }
        let mag = a.re.abs();
        if out.is_empty() {
            if a.re < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if a.re < 0.0 { " - " } else { " + " });
        }
        if mag != 1.0 {
            out.push_str(&format!("{mag}*"));
        }
        out.push('|');
        out.push_str(&labels.join(","));
        out.push('>');
    }
    if out.is_empty() {
        return Err(Error::ZeroVector);
    }
    Ok(out)
}

/// Canonical text for a scenario. Fails when the scenario uses something the
/// format cannot express (complex amplitudes, step ids or announcement
/// sources other than the automatic ones, unwritable names).
pub fn render_scenario(scenario: &Scenario) -> crate::Result<String> {
    let mut out = String::new();
    for s in scenario.registry.subsystems() {
        check_word(&s.name, "system name", false)?;
        for l in &s.labels {
            check_word(l, "label", true)?;
        }
        out.push_str(&format!(
            "system {} labels {}\n",
            s.name,
            s.labels.join(" ")
        ));
    }
    for lab in &scenario.labs {
        check_word(&lab.name, "lab name", false)?;
        if lab.subsystems.is_empty() {
            return Err(Error::Scenario(format!(
                "lab `{}` contains no system",
                lab.name
            )));
        }
        out.push_str(&format!(
            "lab {} contains {}\n",
            lab.name,
            lab.subsystems.join(" ")
        ));
    }
    for a in &scenario.agents {
        check_word(&a.name, "agent name", false)?;
        match &a.location {
            Location::Inside(l) => out.push_str(&format!("agent {} inside {l}\n", a.name)),
            Location::Outside => out.push_str(&format!("agent {} outside\n", a.name)),
        }
    }
    out.push_str(&format!("init {}\n", render_ket(&scenario.initial_state)?));
    for step in &scenario.steps {
        match step {
            Step::Measure(m) => {
                let basis = if m.basis.is_computational() {
                    "computational".to_string()
                } else {
                    let parts = m
                        .basis
                        .vectors()
                        .iter()
                        .map(|(l, v)| {
                            check_word(l, "outcome label", true)?;
                            Ok(format!("{l}={}", render_ket(v)?))
                        })
                        .collect::<crate::Result<Vec<_>>>()?;
                    format!("{{{}}}", parts.join("; "))
                };
                let vis = match m.visibility {
                    Visibility::Sealed { .. } => "sealed",
                    Visibility::Open => "open",
                };
                out.push_str(&format!(
                    "measure {} on {} basis {basis} {vis}\n",
                    m.measurer,
                    m.basis.target().join(" ")
                ));
            }
            Step::Prepare(p) => {
                let parts = p
                    .map
                    .iter()
                    .map(|(l, v)| Ok(format!("{l} -> {}", render_ket(v)?)))
                    .collect::<crate::Result<Vec<_>>>()?;
                out.push_str(&format!(
                    "prepare {} controlled-by {} map {}\n",
                    p.target,
                    p.control,
                    parts.join("; ")
                ));
            }
            Step::Announce(a) => {
                let to = match &a.receivers {
                    Receivers::All => "all".to_string(),
                    Receivers::Agents(list) if list.is_empty() => {
                        return Err(Error::Scenario(format!("`{}` has no receivers", a.id)))
                    }
                    Receivers::Agents(list) => list.join(" "),
                };
                out.push_str(&format!("announce {} to {to}\n", a.announcer));
            }
        }
    }
    match parse_scenario(&out) {
        Ok(back) if back.approx_eq(scenario, 1e-12) => Ok(out),
        Ok(_) => Err(Error::Scenario(
            "scenario cannot be expressed in the text format".into(),
        )),
        Err(d) => Err(Error::Scenario(format!(
            "rendered text does not parse: {d}"
        ))),
    }
}
