//! Lexer and recursive-descent parser for constraint programs.
//!
//! Statements are separated by newlines or top-level commas. Newlines inside
//! brackets are plain whitespace. Arithmetic can be written infix
//! (`a + b * c`) or functionally (`plus(a, mul(b, c))`); both produce the same
//! tree. `#` starts a comment.

use super::ast::*;
use super::ops::{self, Op};
use super::DslError;
use crate::geom::Vec2;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Newline,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Pos {
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1, 1);
    let mut depth = 0i32;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        match c {
            '\n' => {
                if depth == 0 {
                    out.push((Tok::Newline, pos));
                }
                i += 1;
                line += 1;
                col = 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => advance(1, &mut i),
            '(' | '[' => {
                depth += 1;
                out.push((if c == '(' { Tok::LParen } else { Tok::LBracket }, pos));
                advance(1, &mut i);
            }
            ')' | ']' => {
                depth -= 1;
                out.push((if c == ')' { Tok::RParen } else { Tok::RBracket }, pos));
                advance(1, &mut i);
            }
            ',' => {
                out.push((Tok::Comma, pos));
                advance(1, &mut i);
            }
            '+' => {
                out.push((Tok::Plus, pos));
                advance(1, &mut i);
            }
            '-' => {
                out.push((Tok::Minus, pos));
                advance(1, &mut i);
            }
            '*' => {
                out.push((Tok::Star, pos));
                advance(1, &mut i);
            }
            '/' => {
                out.push((Tok::Slash, pos));
                advance(1, &mut i);
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text.parse().map_err(|_| DslError::at(line, col, format!("malformed number `{text}`")))?;
                col += i - start;
                out.push((Tok::Num(v), pos));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            }
            '%' => {
                return Err(DslError::at(
                    line,
                    col,
                    "percentages are not supported; write a fractional multiplier such as 0.5",
                ))
            }
            other => return Err(DslError::at(line, col, format!("unexpected character `{other}`"))),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Untyped parse tree.
#[derive(Clone, Debug)]
enum Expr {
    Num(f64, Pos),
    Ident(String, Pos),
    Call(String, Vec<Expr>, Pos),
    Point(Vec2, Pos),
    Bin(ArithOp, Box<Expr>, Box<Expr>, Pos),
}

impl Expr {
    fn pos(&self) -> Pos {
        match self {
            Expr::Num(_, p)
            | Expr::Ident(_, p)
            | Expr::Call(_, _, p)
            | Expr::Point(_, p)
            | Expr::Bin(_, _, _, p) => *p,
        }
    }

    fn describe(&self) -> String {
        match self {
            Expr::Num(v, _) => format!("number {v}"),
            Expr::Ident(n, _) => format!("`{n}`"),
            Expr::Call(n, _, _) => format!("`{n}(…)`"),
            Expr::Point(..) => "point literal".into(),
            Expr::Bin(..) => "arithmetic expression".into(),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> DslError {
        let p = self.pos();
        DslError::at(p.line, p.col, msg)
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), DslError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, found {}", tok_name(self.peek()))))
        }
    }

    fn statements(&mut self) -> Result<Vec<Expr>, DslError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Tok::Newline | Tok::Comma) {
                self.bump();
            }
            if *self.peek() == Tok::Eof {
                return Ok(out);
            }
            out.push(self.expr()?);
            match self.peek() {
                Tok::Newline | Tok::Comma | Tok::Eof => {}
                t => return Err(self.err(format!("expected end of statement, found {}", tok_name(t)))),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Plus,
                Tok::Minus => ArithOp::Minus,
                _ => return Ok(lhs),
            };
            let p = self.bump().1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs), p);
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            let p = self.bump().1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs), p);
        }
    }

    fn factor(&mut self) -> Result<Expr, DslError> {
        let (tok, p) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v, p)),
            Tok::Minus => match self.factor()? {
                Expr::Num(v, _) => Ok(Expr::Num(-v, p)),
                e => Ok(Expr::Bin(ArithOp::Minus, Box::new(Expr::Num(0.0, p)), Box::new(e), p)),
            },
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::LBracket => {
                let x = self.signed_number()?;
                self.expect(Tok::Comma, "`,` in point literal")?;
                let y = self.signed_number()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Expr::Point(Vec2::new(x, y), p))
            }
            Tok::Ident(name) => {
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Ident(name, p));
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`)` or `,`")?;
                Ok(Expr::Call(name, args, p))
            }
            t => Err(DslError::at(p.line, p.col, format!("unexpected {}", tok_name(&t)))),
        }
    }

    fn signed_number(&mut self) -> Result<f64, DslError> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            (Tok::Num(v), _) => Ok(if neg { -v } else { v }),
            (t, p) => Err(DslError::at(p.line, p.col, format!("expected a number, found {}", tok_name(&t)))),
        }
    }
}

fn tok_name(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => format!("`{v}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Typing pass: turns untyped trees into sorted AST nodes.
struct Typer {
    segment_count: Option<usize>,
}

impl Typer {
    fn op(&self, name: &str, p: Pos) -> Result<Op, DslError> {
        ops::lookup(name).ok_or_else(|| {
            let hint = match ops::suggest(name) {
                Some(s) => format!("; did you mean `{s}`?"),
                None => String::new(),
            };
            DslError::at(p.line, p.col, format!("unknown identifier `{name}`{hint}"))
        })
    }

    fn seg_ref(&self, name: &str, p: Pos) -> Result<Option<SegId>, DslError> {
        let Some(digits) = name.strip_prefix("seg") else {
            return Ok(None);
        };
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Ok(None);
        }
        let id: SegId = digits
            .parse()
            .map_err(|_| DslError::at(p.line, p.col, format!("segment index out of range in `{name}`")))?;
        if let Some(n) = self.segment_count {
            if id >= n {
                return Err(DslError::at(
                    p.line,
                    p.col,
                    format!("unresolved segment reference `{name}` (scene has {n} segments)"),
                ));
            }
        }
        Ok(Some(id))
    }

    fn arity(name: &str, want: usize, got: usize, sort: &str, p: Pos) -> Result<(), DslError> {
        if want == got {
            return Ok(());
        }
        let plural = if want == 1 { "" } else { "s" };
        Err(DslError::at(
            p.line,
            p.col,
            format!("{name} expects {want} {sort} argument{plural}, got {got}"),
        ))
    }

    fn statement(&self, e: &Expr) -> Result<Statement, DslError> {
        let Expr::Call(name, args, p) = e else {
            return Err(DslError::at(
                e.pos().line,
                e.pos().col,
                format!("a statement must be a constraint or motion specifier, found {}", e.describe()),
            ));
        };
        let op = self.op(name, *p)?;
        let canon = ops::name_of(op);
        match op {
            Op::Motion(kind) => {
                Self::arity(canon, 1, args.len(), "segment", *p)?;
                match self.seg(&args[0])? {
                    SegExpr::Ref(target) => Ok(Statement::Motion(MotionSpec { target, kind })),
                    _ => Err(DslError::at(p.line, p.col, format!("{canon} expects a plain segment reference"))),
                }
            }
            Op::Cmp(cmp) => {
                Self::arity(canon, 2, args.len(), "number", *p)?;
                Ok(Statement::Constraint(Constraint::Compare(
                    cmp,
                    self.num(&args[0])?,
                    self.num(&args[1])?,
                )))
            }
            Op::Pair(pair) => {
                Self::arity(canon, 2, args.len(), "segment", *p)?;
                Ok(Statement::Constraint(Constraint::Pair(
                    pair,
                    self.seg(&args[0])?,
                    self.seg(&args[1])?,
                )))
            }
            Op::Coincide => {
                if args.len() != 4 {
                    return Err(DslError::at(
                        p.line,
                        p.col,
                        format!("coincide_on_point expects (segment, [x, y], segment, [x, y]), got {} arguments", args.len()),
                    ));
                }
                let a = self.seg(&args[0])?;
                let b = self.seg(&args[2])?;
                for s in [&a, &b] {
                    if s.single().is_none() {
                        return Err(DslError::at(p.line, p.col, "coincide_on_point expects plain segment references"));
                    }
                }
                Ok(Statement::Constraint(Constraint::Coincide {
                    a,
                    pa: self.point(&args[1])?,
                    b,
                    pb: self.point(&args[3])?,
                }))
            }
            _ => Err(DslError::at(
                p.line,
                p.col,
                format!("`{canon}` cannot be a statement root; wrap it in a constraint specifier such as equal(…)"),
            )),
        }
    }

    fn point(&self, e: &Expr) -> Result<Vec2, DslError> {
        match e {
            Expr::Point(v, _) => Ok(*v),
            other => Err(DslError::at(
                other.pos().line,
                other.pos().col,
                format!("sort mismatch: expected a point literal [x, y], found {}", other.describe()),
            )),
        }
    }

    fn seg(&self, e: &Expr) -> Result<SegExpr, DslError> {
        let mismatch = |what: &Expr| {
            DslError::at(
                what.pos().line,
                what.pos().col,
                format!("sort mismatch: expected a segment, found {}", what.describe()),
            )
        };
        match e {
            Expr::Ident(name, p) => match self.seg_ref(name, *p)? {
                Some(id) => Ok(SegExpr::Ref(id)),
                None => {
                    self.op(name, *p)?;
                    Err(mismatch(e))
                }
            },
            Expr::Call(name, args, p) => {
                let op = self.op(name, *p)?;
                let canon = ops::name_of(op);
                match op {
                    Op::Old => {
                        Self::arity(canon, 1, args.len(), "segment", *p)?;
                        Ok(SegExpr::Old(Box::new(self.seg(&args[0])?)))
                    }
                    Op::Region(side) => {
                        Self::arity(canon, 1, args.len(), "segment", *p)?;
                        Ok(SegExpr::Region(side, Box::new(self.seg(&args[0])?)))
                    }
                    Op::Union | Op::Inter => {
                        if args.len() < 2 {
                            return Err(DslError::at(
                                p.line,
                                p.col,
                                format!("{canon} expects at least 2 segment arguments, got {}", args.len()),
                            ));
                        }
                        let v = args.iter().map(|a| self.seg(a)).collect::<Result<Vec<_>, _>>()?;
                        Ok(if op == Op::Union { SegExpr::Union(v) } else { SegExpr::Inter(v) })
                    }
                    _ => Err(mismatch(e)),
                }
            }
            _ => Err(mismatch(e)),
        }
    }

    fn num(&self, e: &Expr) -> Result<NumExpr, DslError> {
        let mismatch = |what: &Expr| {
            DslError::at(
                what.pos().line,
                what.pos().col,
                format!("sort mismatch: expected a number, found {}", what.describe()),
            )
        };
        match e {
            Expr::Num(v, _) => Ok(NumExpr::Lit(*v)),
            Expr::Bin(op, a, b, _) => Ok(NumExpr::Arith(*op, Box::new(self.num(a)?), Box::new(self.num(b)?))),
            Expr::Ident(name, p) => {
                if self.seg_ref(name, *p)?.is_none() {
                    self.op(name, *p)?;
                }
                Err(mismatch(e))
            }
            Expr::Point(..) => Err(mismatch(e)),
            Expr::Call(name, args, p) => {
                let op = self.op(name, *p)?;
                let canon = ops::name_of(op);
                match op {
                    Op::Arith(a) => {
                        Self::arity(canon, 2, args.len(), "number", *p)?;
                        Ok(NumExpr::Arith(a, Box::new(self.num(&args[0])?), Box::new(self.num(&args[1])?)))
                    }
                    Op::Attr(a) => {
                        Self::arity(canon, 1, args.len(), "segment", *p)?;
                        Ok(NumExpr::Attr(a, self.seg(&args[0])?))
                    }
                    Op::Rel(r) => {
                        Self::arity(canon, 2, args.len(), "segment", *p)?;
                        Ok(NumExpr::Rel(r, self.seg(&args[0])?, self.seg(&args[1])?))
                    }
                    _ => Err(mismatch(e)),
                }
            }
        }
    }
}

enum Statement {
    Motion(MotionSpec),
    Constraint(Constraint),
}

/// Parses a program; when `segment_count` is given, `segK` references are
/// checked against it.
pub fn parse_program(src: &str, segment_count: Option<usize>) -> Result<ConstraintProgram, DslError> {
    let toks = lex(src)?;
    let exprs = Parser { toks, i: 0 }.statements()?;
    let typer = Typer { segment_count };
    let mut prog = ConstraintProgram::default();
    for e in &exprs {
        match typer.statement(e)? {
            Statement::Motion(m) => prog.motions.push(m),
            Statement::Constraint(c) => prog.constraints.push(c),
        }
    }
    Ok(prog)
}
