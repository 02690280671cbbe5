//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right-associative *)
//! primary = number | constant | identifier
//!         | function "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! `-x^2` therefore parses as `-(x^2)` and `2^3^2` as `2^(3^2)`.

use super::ast::{BinaryOp, Expr, Func};
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

pub fn parse(source: &str) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::new("empty expression", 0));
    }
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: source.chars().count(),
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::new(
            format!("unexpected trailing token '{}'", tok.lexeme),
            tok.position,
        ));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == kind && t.lexeme == lexeme)
    }

    fn position(&self) -> usize {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn expect_close(&mut self, open_at: usize) -> Result<(), ParseError> {
        if self.peek_is(TokenKind::Paren, ")") {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::new(
                format!("unbalanced parenthesis opened at {open_at}"),
                self.position(),
            ))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek_is(TokenKind::Operator, "+") {
                BinaryOp::Add
            } else if self.peek_is(TokenKind::Operator, "-") {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_is(TokenKind::Operator, "*") {
                BinaryOp::Mul
            } else if self.peek_is(TokenKind::Operator, "/") {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_is(TokenKind::Operator, "-") {
            self.pos += 1;
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek_is(TokenKind::Operator, "^") {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.position();
        let Some(tok) = self.next() else {
            return Err(ParseError::new("unexpected end of expression", at));
        };
        match tok.kind {
            TokenKind::Number => tok
                .lexeme
                .parse::<f64>()
                .map(Expr::Constant)
                .map_err(|_| ParseError::new(format!("invalid number '{}'", tok.lexeme), at)),
            TokenKind::Identifier => {
                if self.peek_is(TokenKind::Paren, "(") {
                    let Some(func) = Func::from_name(&tok.lexeme) else {
                        return Err(ParseError::new(format!("unknown function '{}'", tok.lexeme), at));
                    };
                    let open = self.position();
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek().is_some_and(|t| t.kind == TokenKind::Comma) {
                        return Err(ParseError::new(
                            format!("function '{}' takes one argument", func.name()),
                            self.position(),
                        ));
                    }
                    self.expect_close(open)?;
                    return Ok(Expr::call(func, arg));
                }
                if Func::from_name(&tok.lexeme).is_some() {
                    return Err(ParseError::new(
                        format!("function '{}' requires an argument list", tok.lexeme),
                        at,
                    ));
                }
                Ok(match tok.lexeme.as_str() {
                    "pi" => Expr::Constant(std::f64::consts::PI),
                    "e" => Expr::Constant(std::f64::consts::E),
                    _ => Expr::Variable(tok.lexeme),
                })
            }
            TokenKind::Paren if tok.lexeme == "(" => {
                let inner = self.expr()?;
                self.expect_close(at)?;
                Ok(inner)
            }
            _ => Err(ParseError::new(format!("unexpected token '{}'", tok.lexeme), at)),
        }
    }
}
