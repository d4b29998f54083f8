use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::{AExp, AExpKind, CExp, CExpKind, Expr, ExprKind, Label, Lambda, Program, Span, Var};

const KEYWORDS: [&str; 8] = ["lambda", "let", "callcc", "set!", "if", "cas", "spawn", "join"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseError {
    /// Malformed S-expression text.
    Syntax { span: Span, message: String },
    /// Well-formed S-expression that is not a program of the language.
    Grammar { span: Span, form: String, message: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. } | ParseError::Grammar { span, .. } => *span,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { span, message } => write!(f, "syntax error at {span}: {message}"),
            ParseError::Grammar { span, form, message } => {
                write!(f, "grammar error at {span}: {message} in `{form}`")
            }
        }
    }
}

impl core::error::Error for ParseError {}

/// Parses a single program and returns its labeled root expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let program = parse_program(text)?;
    Ok(Arc::unwrap_or_clone(program.root))
}

/// Parses a single program, keeping the source span of every label.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let sexp = Reader::new(text).read_program()?;
    let mut builder = Builder { spans: Vec::new() };
    let root = builder.expr(&sexp)?;
    Ok(Program::new(Arc::new(root), builder.spans))
}

#[derive(Debug)]
enum Sexp {
    Atom(String, Span),
    List(Vec<Sexp>, Span),
}

impl Sexp {
    fn span(&self) -> Span {
        match self {
            Sexp::Atom(_, s) | Sexp::List(_, s) => *s,
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Atom(a, _)) => Some(a),
                _ => None,
            },
            Sexp::Atom(..) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a, _) => f.write_str(a),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn here(&self) -> Span {
        Span { line: self.line, column: self.column }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read_program(&mut self) -> Result<Sexp, ParseError> {
        self.skip_trivia();
        if self.chars.peek().is_none() {
            return Err(ParseError::Syntax { span: self.here(), message: "empty program".to_string() });
        }
        let sexp = self.read()?;
        self.skip_trivia();
        if self.chars.peek().is_some() {
            return Err(ParseError::Syntax {
                span: self.here(),
                message: "trailing input after the program".to_string(),
            });
        }
        Ok(sexp)
    }

    fn read(&mut self) -> Result<Sexp, ParseError> {
        self.skip_trivia();
        let start = self.here();
        match self.chars.peek().copied() {
            None => Err(ParseError::Syntax { span: start, message: "unexpected end of input".to_string() }),
            Some(')') => Err(ParseError::Syntax { span: start, message: "unexpected `)`".to_string() }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(ParseError::Syntax {
                                span: start,
                                message: "unclosed `(`".to_string(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut token = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    token.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(token, start))
            }
        }
    }
}

fn is_integer(token: &str) -> bool {
    let digits = token.strip_prefix(['-', '+']).unwrap_or(token);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_identifier(token: &str) -> bool {
    let mut bytes = token.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b"-?!_$".contains(&b) => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b"-?!_$".contains(&b))
}

struct Builder {
    spans: Vec<Span>,
}

impl Builder {
    fn fresh(&mut self, span: Span) -> Label {
        let label = Label(self.spans.len() as u32);
        self.spans.push(span);
        label
    }

    fn grammar<T>(&self, sexp: &Sexp, message: &str) -> Result<T, ParseError> {
        Err(ParseError::Grammar { span: sexp.span(), form: sexp.to_string(), message: message.to_string() })
    }

    fn var(&self, sexp: &Sexp) -> Result<Var, ParseError> {
        match sexp {
            Sexp::Atom(name, _) if is_identifier(name) && !KEYWORDS.contains(&name.as_str()) => {
                Ok(Var::new(name))
            }
            Sexp::Atom(name, _) if KEYWORDS.contains(&name.as_str()) => {
                self.grammar(sexp, "keyword used as a variable")
            }
            _ => self.grammar(sexp, "expected a variable"),
        }
    }

    fn expr(&mut self, sexp: &Sexp) -> Result<Expr, ParseError> {
        match sexp.head() {
            Some("let") => {
                let label = self.fresh(sexp.span());
                let Sexp::List(items, _) = sexp else { unreachable!() };
                if items.len() != 3 {
                    return self.grammar(sexp, "`let` takes exactly one binding list and one body");
                }
                let (var, bound) = match &items[1] {
                    Sexp::List(bindings, _) if bindings.len() == 1 => match &bindings[0] {
                        Sexp::List(pair, _) if pair.len() == 2 => (self.var(&pair[0])?, &pair[1]),
                        other => return self.grammar(other, "malformed `let` binding"),
                    },
                    other => return self.grammar(other, "`let` binds exactly one variable"),
                };
                if !self.is_call(bound) {
                    return self.grammar(sexp, "`let` must bind a call expression");
                }
                let binding = Arc::new(self.call(bound)?);
                let body = Arc::new(self.expr(&items[2])?);
                Ok(Expr { label, kind: ExprKind::Let { var, binding, body } })
            }
            _ if self.is_call(sexp) => {
                let label = self.fresh(sexp.span());
                let call = self.call(sexp)?;
                Ok(Expr { label, kind: ExprKind::Call(Arc::new(call)) })
            }
            _ => {
                let atom = self.atom(sexp)?;
                Ok(Expr { label: atom.label, kind: ExprKind::Atom(atom) })
            }
        }
    }

    fn is_call(&self, sexp: &Sexp) -> bool {
        matches!(sexp, Sexp::List(..)) && !matches!(sexp.head(), Some("lambda") | Some("let"))
    }

    fn expect_len(&self, sexp: &Sexp, items: &[Sexp], len: usize, form: &str) -> Result<(), ParseError> {
        if items.len() == len {
            Ok(())
        } else {
            let msg = alloc::format!("`{form}` takes {} operand(s)", len - 1);
            self.grammar(sexp, &msg)
        }
    }

    fn call(&mut self, sexp: &Sexp) -> Result<CExp, ParseError> {
        let Sexp::List(items, span) = sexp else {
            return self.grammar(sexp, "expected a call expression");
        };
        if items.is_empty() {
            return self.grammar(sexp, "empty application");
        }
        if !self.is_call(sexp) {
            return self.grammar(sexp, "expected a call expression");
        }
        let label = self.fresh(*span);
        let kind = match sexp.head() {
            Some("callcc") => {
                self.expect_len(sexp, items, 2, "callcc")?;
                CExpKind::CallCC(self.atom(&items[1])?)
            }
            Some("set!") => {
                self.expect_len(sexp, items, 3, "set!")?;
                let var = self.var(&items[1])?;
                CExpKind::SetBang { var, value: self.atom(&items[2])? }
            }
            Some("if") => {
                self.expect_len(sexp, items, 4, "if")?;
                let cond = self.atom(&items[1])?;
                if !self.is_call(&items[2]) || !self.is_call(&items[3]) {
                    return self.grammar(sexp, "`if` branches must be call expressions");
                }
                let then = Arc::new(self.call(&items[2])?);
                let els = Arc::new(self.call(&items[3])?);
                CExpKind::If { cond, then, els }
            }
            Some("cas") => {
                self.expect_len(sexp, items, 4, "cas")?;
                let var = self.var(&items[1])?;
                let old = self.atom(&items[2])?;
                CExpKind::Cas { var, old, new: self.atom(&items[3])? }
            }
            Some("spawn") => {
                self.expect_len(sexp, items, 2, "spawn")?;
                CExpKind::Spawn(Arc::new(self.expr(&items[1])?))
            }
            Some("join") => {
                self.expect_len(sexp, items, 2, "join")?;
                CExpKind::Join(self.atom(&items[1])?)
            }
            _ => {
                let func = self.atom(&items[0])?;
                let args = items[1..].iter().map(|a| self.atom(a)).collect::<Result<Vec<_>, _>>()?;
                CExpKind::App { func, args }
            }
        };
        Ok(CExp { label, kind })
    }

    fn atom(&mut self, sexp: &Sexp) -> Result<AExp, ParseError> {
        match sexp {
            Sexp::Atom(token, span) => {
                let kind = if token == "#t" {
                    AExpKind::Bool(true)
                } else if token == "#f" {
                    AExpKind::Bool(false)
                } else if is_integer(token) {
                    match token.parse::<i64>() {
                        Ok(n) => AExpKind::Num(n),
                        Err(_) => return self.grammar(sexp, "integer literal out of range"),
                    }
                } else if KEYWORDS.contains(&token.as_str()) {
                    return self.grammar(sexp, "keyword used as an expression");
                } else if is_identifier(token) {
                    AExpKind::Var(Var::new(token))
                } else {
                    return Err(ParseError::Syntax {
                        span: *span,
                        message: alloc::format!("invalid token `{token}`"),
                    });
                };
                Ok(AExp { label: self.fresh(*span), kind })
            }
            Sexp::List(items, span) if sexp.head() == Some("lambda") => {
                if items.len() != 3 {
                    return self.grammar(sexp, "`lambda` takes a parameter list and one body");
                }
                let label = self.fresh(*span);
                let Sexp::List(raw_params, _) = &items[1] else {
                    return self.grammar(&items[1], "expected a parameter list");
                };
                let mut params: Vec<Var> = Vec::with_capacity(raw_params.len());
                for p in raw_params {
                    let v = self.var(p)?;
                    if params.contains(&v) {
                        return self.grammar(sexp, "duplicate lambda parameter");
                    }
                    params.push(v);
                }
                let body = Arc::new(self.expr(&items[2])?);
                let mut free = super::free_vars(&body);
                for p in &params {
                    free.remove(p);
                }
                let free = free.into_iter().collect();
                Ok(AExp { label, kind: AExpKind::Lam(Arc::new(Lambda { params, body, free })) })
            }
            _ => self.grammar(sexp, "expected an atomic expression"),
        }
    }
}
