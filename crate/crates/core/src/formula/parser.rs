//! Recursive descent parser for cell formulas.
//!
//! ```text
//! formula := "=" expr
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | cellref | "[" ident "]" | ident "(" [expr ("," expr)*] ")" | "(" expr ")"
//! ```
//!
//! Whitespace between tokens is ignored. Positions in errors are 1-based
//! character offsets into the input.

use std::fmt;

use super::{CellAddress, Expr};
use crate::value::{Aggregate, BinaryOp};

const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError { position, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.position, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(x) => format!("number {x}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Equals => "'='".into(),
            Tok::End => "end of formula".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, pos));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
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
            if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j], '+' | '-') {
                    j += 1;
                }
                if !chars.get(j).is_some_and(char::is_ascii_digit) {
                    return Err(ParseError::new(i + 1, "malformed exponent"));
                }
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
            let literal: String = chars[start..i].iter().collect();
            let value: f64 = literal
                .parse()
                .map_err(|_| ParseError::new(pos, format!("invalid number {literal:?}")))?;
            if !value.is_finite() {
                return Err(ParseError::new(pos, format!("number {literal} is out of range")));
            }
            out.push((Tok::Number(value), pos));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else {
            return Err(ParseError::new(pos, format!("unexpected character {c:?}")));
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    index: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.index].0
    }

    fn position(&self) -> usize {
        self.tokens[self.index].1
    }

    fn advance(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.index].clone();
        if t.0 != Tok::End {
            self.index += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::new(self.position(), format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::new(self.position(), "formula nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.advance();
            let right = self.term()?;
            left = Expr::binary(op, left, right);
        }
        self.depth -= 1;
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => break,
            };
            self.advance();
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.advance();
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.advance();
        match tok {
            Tok::Number(x) => Ok(Expr::Number(x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::LBracket => match self.advance() {
                (Tok::Ident(name), _) => {
                    self.expect(Tok::RBracket, "']'")?;
                    Ok(Expr::Attr(name))
                }
                (other, p) => Err(ParseError::new(p, format!("expected attribute name, found {}", other.describe()))),
            },
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, pos)
                } else if let Some(addr) = CellAddress::parse_ascii(&name) {
                    Ok(Expr::Cell(addr))
                } else {
                    Err(ParseError::new(pos, format!("'{name}' is not a cell reference")))
                }
            }
            Tok::End => Err(ParseError::new(pos, "unexpected end of formula")),
            other => Err(ParseError::new(pos, format!("unexpected {}", other.describe()))),
        }
    }

    fn call(&mut self, name: String, pos: usize) -> Result<Expr, ParseError> {
        let func: Aggregate = name
            .parse()
            .map_err(|_| ParseError::new(pos, format!("unknown function '{name}'")))?;
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.expr()?);
            while *self.peek() == Tok::Comma {
                self.advance();
                args.push(self.expr()?);
            }
        }
        self.expect(Tok::RParen, "')' or ','")?;
        if args.len() != func.arity() {
            return Err(ParseError::new(
                pos,
                format!("{func} takes {} argument(s), got {}", func.arity(), args.len()),
            ));
        }
        Ok(Expr::call(func, args))
    }
}

/// Parses formula text. The text must start with `=` (leading whitespace is
/// allowed).
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, index: 0, depth: 0 };
    p.expect(Tok::Equals, "'=' at start of formula")?;
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("operator or end of formula"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(s: &str) -> Expr {
        Expr::Cell(s.parse().unwrap())
    }

    #[test]
    fn vwap_formulas() {
        assert_eq!(parse("=A4/A5").unwrap(), Expr::binary(BinaryOp::Div, cell("A4"), cell("A5")));
        assert_eq!(parse("=A1*A2").unwrap(), Expr::binary(BinaryOp::Mul, cell("A1"), cell("A2")));
        assert_eq!(parse("=SUM(A3)").unwrap(), Expr::call(Aggregate::Sum, vec![cell("A3")]));
        assert_eq!(parse("=[TradePrice]").unwrap(), Expr::Attr("TradePrice".into()));
    }

    #[test]
    fn precedence_and_parentheses() {
        let e = parse("=2*(3+4)").unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Mul,
                Expr::Number(2.0),
                Expr::binary(BinaryOp::Add, Expr::Number(3.0), Expr::Number(4.0))
            )
        );
        let e = parse("=1+2*3").unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Add,
                Expr::Number(1.0),
                Expr::binary(BinaryOp::Mul, Expr::Number(2.0), Expr::Number(3.0))
            )
        );
        let e = parse("=8/4/2").unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Div,
                Expr::binary(BinaryOp::Div, Expr::Number(8.0), Expr::Number(4.0)),
                Expr::Number(2.0)
            )
        );
        assert_eq!(parse("=-A1*A2").unwrap(), Expr::binary(BinaryOp::Mul, Expr::Neg(Box::new(cell("A1"))), cell("A2")));
        assert_eq!(parse("=--1").unwrap(), Expr::Neg(Box::new(Expr::Neg(Box::new(Expr::Number(1.0))))));
    }

    #[test]
    fn whitespace_and_case() {
        assert_eq!(parse("= a1 * a2").unwrap(), parse("=A1*A2").unwrap());
        assert_eq!(parse("  =\tsum ( b2 )").unwrap(), Expr::call(Aggregate::Sum, vec![cell("B2")]));
        assert_eq!(parse("=[ tradePrice ]").unwrap(), Expr::Attr("tradePrice".into()));
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("=1.5e3").unwrap(), Expr::Number(1500.0));
        assert_eq!(parse("=.5").unwrap(), Expr::Number(0.5));
        assert_eq!(parse("=2.").unwrap(), Expr::Number(2.0));
        assert_eq!(parse("=1E-2").unwrap(), Expr::Number(0.01));
        assert_eq!(parse("=0.1").unwrap(), Expr::Number(0.1));
    }

    #[test]
    fn errors_carry_positions() {
        let cases = [
            ("", 1),
            ("A1", 1),
            ("=", 2),
            ("=A4/", 5),
            ("=SUMM(A1)", 2),
            ("=SUM(A1,A2)", 2),
            ("=SUM()", 2),
            ("=(A1", 5),
            ("=A1 A2", 5),
            ("=foo", 2),
            ("=A0", 2),
            ("=1e", 3),
            ("=1e999", 2),
            ("=A1#", 4),
            ("=[]", 3),
            ("=[A1", 5),
            ("=A1:A5", 4),
            ("=\"x\"", 2),
            ("==A1", 2),
        ];
        for (text, pos) in cases {
            let err = parse(text).unwrap_err();
            assert_eq!(err.position, pos, "{text:?}: {err}");
        }
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let deep = format!("={}1{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(parse(&deep).is_err());
        let negs = format!("={}1", "-".repeat(10_000));
        assert!(parse(&negs).is_err());
        let ok = format!("={}1{}", "(".repeat(100), ")".repeat(100));
        assert_eq!(parse(&ok).unwrap(), Expr::Number(1.0));
    }

    #[test]
    fn non_ascii_input() {
        assert_eq!(parse("=A1*é").unwrap_err().position, 5);
    }
}
