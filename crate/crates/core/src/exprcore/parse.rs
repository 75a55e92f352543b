//! Expression DSL.
//!
//! ```text
//! expr    = term { ("+" | "-") term }
//! term    = unary { ("*" | "/") unary }
//! unary   = "-" unary | power
//! power   = atom [ "^" unary ]
//! atom    = number | ident | ident "(" expr ")" | "(" expr ")"
//! number  = digits [ "." digits ]
//! ident   = letter { letter | digit | "_" }
//! ```
//!
//! Exponents must reduce to rational constants. Functions: exp, log, sqrt,
//! abs, sign, sin, cos.

use num_bigint::BigInt;
use num_traits::{Pow, Zero};
use thiserror::Error;

use super::build::{func, pow, qr};
use super::node::{Expr, Func, Symbol, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: unexpected {found}, expected {expected}")]
    Syntax { pos: usize, found: String, expected: &'static str },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("exponent at position {pos} is not a rational constant")]
    NonConstantExponent { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(q) => format!("number `{q}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("token `{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.1.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().map(|c| c.1).collect();
            let mut value = if int_part.is_empty() { Q::zero() } else { Q::from_integer(int_part.parse::<BigInt>().unwrap()) };
            if i < chars.len() && chars[i].1 == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fs..i].iter().map(|c| c.1).collect();
                if !frac.is_empty() {
                    let num: BigInt = frac.parse().unwrap();
                    let den = BigInt::from(10).pow(frac.len() as u32);
                    value += Q::new(num, den);
                }
            }
            out.push((Tok::Num(value), pos));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().map(|c| c.1).collect()), pos));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), pos));
            i += 1;
        } else {
            return Err(ParseError::Syntax { pos, found: format!("character `{c}`"), expected: "an expression" });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a, F: Fn(&str) -> Option<Symbol>> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    resolve: &'a F,
}

impl<F: Fn(&str) -> Option<Symbol>> Parser<'_, F> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }
    fn pos(&self) -> usize {
        self.toks[self.at].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }
    fn fail<T>(&self, expected: &'static str) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), found: self.peek().describe(), expected })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Tok::Op('-') => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Op('/') => {
                    self.bump();
                    acc = acc / self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let pos = self.pos();
            let e = self.unary()?;
            let Some(c) = e.as_const() else {
                return Err(ParseError::NonConstantExponent { pos });
            };
            return Ok(pow(&base, c.clone()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(q) => {
                self.bump();
                Ok(Expr::constant(q))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::Op(')') {
                    return self.fail("`)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                let f = match name.as_str() {
                    "exp" => Some(Some(Func::Exp)),
                    "log" => Some(Some(Func::Log)),
                    "abs" => Some(Some(Func::Abs)),
                    "sign" => Some(Some(Func::Sign)),
                    "sin" => Some(Some(Func::Sin)),
                    "cos" => Some(Some(Func::Cos)),
                    "sqrt" => Some(None),
                    _ => None,
                };
                if let Some(f) = f {
                    if *self.peek() == Tok::Op('(') {
                        self.bump();
                        let arg = self.expr()?;
                        if *self.peek() != Tok::Op(')') {
                            return self.fail("`)`");
                        }
                        self.bump();
                        return Ok(match f {
                            Some(f) => func(f, &arg),
                            None => pow(&arg, qr(1, 2)),
                        });
                    }
                }
                match (self.resolve)(&name) {
                    Some(s) => Ok(Expr::var(&s)),
                    None => Err(ParseError::UnknownIdentifier { name, pos }),
                }
            }
            _ => self.fail("a number, identifier, or `(`"),
        }
    }
}

/// Parse with a caller-supplied identifier resolver.
pub fn parse_with<F: Fn(&str) -> Option<Symbol>>(text: &str, resolve: &F) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, resolve };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("an operator or end of input");
    }
    Ok(e)
}

/// Parse against a fixed symbol list. `r` resolves to the action parameter unless shadowed.
pub fn parse(text: &str, symbols: &[Symbol]) -> Result<Expr, ParseError> {
    parse_with(text, &|name: &str| {
        symbols
            .iter()
            .find(|s| s.name() == name)
            .cloned()
            .or_else(|| (name == "r").then(Symbol::action))
    })
}
