//! The constraint expression language for `Arithmetic` and `Complex`
//! inter-parameter dependencies.
//!
//! Grammar (see `docs/constraint-language.md` for the full reference):
//!
//! ```text
//! expr    := and ( ("||" | "or") and )*
//! and     := not ( ("&&" | "and") not )*
//! not     := ("!" | "not") not | cmp
//! cmp     := sum ( ("==" | "!=" | "<=" | ">=" | "<" | ">") sum )?
//! sum     := product ( ("+" | "-") product )*
//! product := unary ( ("*" | "/" | "%") unary )*
//! unary   := "-" unary | primary
//! primary := NUMBER | STRING | "present" "(" IDENT ")" | "true" | "false"
//!          | IDENT | "(" expr ")"
//! ```
//!
//! Identifiers resolve to parameter values from the request assignment.
//! Any comparison or arithmetic step that touches an absent parameter, or a
//! value that cannot be coerced to the required type, makes the enclosing
//! predicate false and records a diagnostic instead of erroring: the only
//! hard error is a parse failure (`MALFORMED_LOGIC`).

use super::ipd::Assignment;
use super::ModelError;
use crate::diag::Diagnostic;

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Bool(bool),
    Ident(String),
    Present(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

/// Result of evaluating a constraint expression against an assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub satisfied: bool,
    pub diagnostics: Vec<Diagnostic>,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Str(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

fn tokenize(input: &str) -> Result<Vec<Token>, ModelError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            '\'' | '"' => {
                let quote = c;
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != quote {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(ModelError::MalformedLogic(format!(
                        "unterminated string literal at offset {i}"
                    )));
                }
                tokens.push(Token::Str(chars[start..j].iter().collect()));
                i = j + 1;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|_| {
                    ModelError::MalformedLogic(format!("bad numeric literal '{text}'"))
                })?;
                tokens.push(Token::Num(value));
            }
            '&' | '|' | '=' | '!' | '<' | '>' => {
                let pair: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                let two = match pair.as_str() {
                    "&&" | "||" | "==" | "!=" | "<=" | ">=" => true,
                    _ => false,
                };
                if two {
                    let op: &'static str = match pair.as_str() {
                        "&&" => "&&",
                        "||" => "||",
                        "==" => "==",
                        "!=" => "!=",
                        "<=" => "<=",
                        ">=" => ">=",
                        _ => unreachable!(),
                    };
                    tokens.push(Token::Op(op));
                    i += 2;
                } else {
                    let op: &'static str = match c {
                        '!' => "!",
                        '<' => "<",
                        '>' => ">",
                        _ => {
                            return Err(ModelError::MalformedLogic(format!(
                                "unexpected character '{c}' at offset {i}"
                            )))
                        }
                    };
                    tokens.push(Token::Op(op));
                    i += 1;
                }
            }
            '+' => {
                tokens.push(Token::Op("+"));
                i += 1;
            }
            '-' => {
                tokens.push(Token::Op("-"));
                i += 1;
            }
            '*' => {
                tokens.push(Token::Op("*"));
                i += 1;
            }
            '/' => {
                tokens.push(Token::Op("/"));
                i += 1;
            }
            '%' => {
                tokens.push(Token::Op("%"));
                i += 1;
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            _ => {
                return Err(ModelError::MalformedLogic(format!(
                    "unexpected character '{c}' at offset {i}"
                )))
            }
        }
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Token::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Token::Ident(id)) if id == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ModelError> {
        let mut lhs = self.parse_and()?;
        loop {
            if self.eat_op("||") || self.eat_keyword("or") {
                let rhs = self.parse_and()?;
                lhs = Expr::Binary {
                    op: BinOp::Or,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_and(&mut self) -> Result<Expr, ModelError> {
        let mut lhs = self.parse_not()?;
        loop {
            if self.eat_op("&&") || self.eat_keyword("and") {
                let rhs = self.parse_not()?;
                lhs = Expr::Binary {
                    op: BinOp::And,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_not(&mut self) -> Result<Expr, ModelError> {
        if self.eat_op("!") || self.eat_keyword("not") {
            let inner = self.parse_not()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.parse_cmp()
    }

    fn parse_cmp(&mut self) -> Result<Expr, ModelError> {
        let lhs = self.parse_sum()?;
        let op = match self.peek() {
            Some(Token::Op("==")) => Some(BinOp::Eq),
            Some(Token::Op("!=")) => Some(BinOp::Ne),
            Some(Token::Op("<=")) => Some(BinOp::Le),
            Some(Token::Op(">=")) => Some(BinOp::Ge),
            Some(Token::Op("<")) => Some(BinOp::Lt),
            Some(Token::Op(">")) => Some(BinOp::Gt),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let rhs = self.parse_sum()?;
            return Ok(Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            });
        }
        Ok(lhs)
    }

    fn parse_sum(&mut self) -> Result<Expr, ModelError> {
        let mut lhs = self.parse_product()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.parse_product()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn parse_product(&mut self) -> Result<Expr, ModelError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = if self.eat_op("*") {
                BinOp::Mul
            } else if self.eat_op("/") {
                BinOp::Div
            } else if self.eat_op("%") {
                BinOp::Rem
            } else {
                return Ok(lhs);
            };
            let rhs = self.parse_unary()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ModelError> {
        if self.eat_op("-") {
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, ModelError> {
        match self.bump() {
            Some(Token::Num(n)) => Ok(Expr::Num(n)),
            Some(Token::Str(s)) => Ok(Expr::Str(s)),
            Some(Token::LParen) => {
                let inner = self.parse_expr()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(ModelError::MalformedLogic("missing ')'".into())),
                }
            }
            Some(Token::Ident(id)) => match id.as_str() {
                "true" => Ok(Expr::Bool(true)),
                "false" => Ok(Expr::Bool(false)),
                "present" => {
                    if !matches!(self.bump(), Some(Token::LParen)) {
                        return Err(ModelError::MalformedLogic("expected '(' after present".into()));
                    }
                    let name = match self.bump() {
                        Some(Token::Ident(name)) => name,
                        _ => {
                            return Err(ModelError::MalformedLogic(
                                "expected identifier inside present(...)".into(),
                            ))
                        }
                    };
                    if !matches!(self.bump(), Some(Token::RParen)) {
                        return Err(ModelError::MalformedLogic("missing ')' after present".into()));
                    }
                    Ok(Expr::Present(name))
                }
                _ => Ok(Expr::Ident(id)),
            },
            Some(other) => Err(ModelError::MalformedLogic(format!(
                "unexpected token {other:?}"
            ))),
            None => Err(ModelError::MalformedLogic("unexpected end of input".into())),
        }
    }
}

/// Parse a constraint-logic expression. Fails with `MALFORMED_LOGIC`.
pub fn parse_expression(input: &str) -> Result<Expr, ModelError> {
    if input.trim().is_empty() {
        return Err(ModelError::MalformedLogic("empty expression".into()));
    }
    let tokens = tokenize(input)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.parse_expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(ModelError::MalformedLogic(format!(
            "trailing input after expression (token {})",
            parser.pos
        )));
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Bool(bool),
    Num(f64),
    Str(String),
    /// Absent parameter or failed coercion; poisons comparisons to false.
    Absent,
}

impl Value {
    fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(n) => Some(*n),
            Value::Str(s) => s.trim().parse::<f64>().ok(),
            _ => None,
        }
    }
}

struct EvalCtx<'a> {
    assignment: &'a Assignment,
    diagnostics: Vec<Diagnostic>,
}

impl EvalCtx<'_> {
    fn diag(&mut self, code: &str, message: String) {
        self.diagnostics.push(Diagnostic::new(code, message));
    }

    fn eval(&mut self, expr: &Expr) -> Value {
        match expr {
            Expr::Num(n) => Value::Num(*n),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Present(name) => Value::Bool(is_present(self.assignment, name)),
            Expr::Ident(name) => match self.assignment.get(name) {
                Some(Some(v)) => Value::Str(v.clone()),
                _ => Value::Absent,
            },
            Expr::Not(inner) => match self.eval(inner) {
                Value::Bool(b) => Value::Bool(!b),
                _ => {
                    self.diag("NON_BOOLEAN_OPERAND", "'!' applied to non-boolean".into());
                    Value::Bool(false)
                }
            },
            Expr::Neg(inner) => {
                let v = self.eval(inner);
                match v.as_num() {
                    Some(n) => Value::Num(-n),
                    None => {
                        self.diag("NON_NUMERIC_OPERAND", "unary '-' on non-numeric".into());
                        Value::Absent
                    }
                }
            }
            Expr::Binary { op, lhs, rhs } => self.eval_binary(*op, lhs, rhs),
        }
    }

    fn eval_binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> Value {
        match op {
            BinOp::And | BinOp::Or => {
                let l = self.truthy(lhs);
                // No short-circuit: diagnostics from both sides are wanted.
                let r = self.truthy(rhs);
                Value::Bool(if op == BinOp::And { l && r } else { l || r })
            }
            BinOp::Eq | BinOp::Ne => {
                let l = self.eval(lhs);
                let r = self.eval(rhs);
                if matches!(l, Value::Absent) || matches!(r, Value::Absent) {
                    return Value::Bool(false);
                }
                let equal = match (l.as_num(), r.as_num()) {
                    (Some(a), Some(b)) => a == b,
                    _ => match (&l, &r) {
                        (Value::Str(a), Value::Str(b)) => a == b,
                        (Value::Bool(a), Value::Bool(b)) => a == b,
                        _ => {
                            self.diag(
                                "TYPE_MISMATCH",
                                "equality between incompatible types".into(),
                            );
                            return Value::Bool(false);
                        }
                    },
                };
                Value::Bool(if op == BinOp::Eq { equal } else { !equal })
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let l = self.eval(lhs);
                let r = self.eval(rhs);
                let (Some(a), Some(b)) = (l.as_num(), r.as_num()) else {
                    if !matches!(l, Value::Absent) && !matches!(r, Value::Absent) {
                        self.diag("NON_NUMERIC_OPERAND", "ordering on non-numeric value".into());
                    }
                    return Value::Bool(false);
                };
                let result = match op {
                    BinOp::Lt => a < b,
                    BinOp::Le => a <= b,
                    BinOp::Gt => a > b,
                    BinOp::Ge => a >= b,
                    _ => unreachable!(),
                };
                Value::Bool(result)
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                let l = self.eval(lhs);
                let r = self.eval(rhs);
                let (Some(a), Some(b)) = (l.as_num(), r.as_num()) else {
                    if !matches!(l, Value::Absent) && !matches!(r, Value::Absent) {
                        self.diag(
                            "NON_NUMERIC_OPERAND",
                            "arithmetic on non-numeric value".into(),
                        );
                    }
                    return Value::Absent;
                };
                let n = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Rem => a % b,
                    _ => unreachable!(),
                };
                Value::Num(n)
            }
        }
    }

    fn truthy(&mut self, expr: &Expr) -> bool {
        match self.eval(expr) {
            Value::Bool(b) => b,
            other => {
                self.diag(
                    "NON_BOOLEAN_OPERAND",
                    format!("boolean connective applied to {other:?}"),
                );
                false
            }
        }
    }
}

fn is_present(assignment: &Assignment, name: &str) -> bool {
    matches!(assignment.get(name), Some(Some(_)))
}

fn referenced_idents(expr: &Expr, out: &mut Vec<String>) {
    match expr {
        Expr::Ident(name) => {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        Expr::Present(_) | Expr::Num(_) | Expr::Str(_) | Expr::Bool(_) => {}
        Expr::Not(inner) | Expr::Neg(inner) => referenced_idents(inner, out),
        Expr::Binary { lhs, rhs, .. } => {
            referenced_idents(lhs, out);
            referenced_idents(rhs, out);
        }
    }
}

/// Evaluate an `Arithmetic` constraint: every referenced parameter must be
/// present and numeric, otherwise the relation is unsatisfied (with a
/// diagnostic for the non-numeric case, which the underlying semantics leave
/// open).
pub fn eval_arithmetic(logic: &str, assignment: &Assignment) -> Result<EvalOutcome, ModelError> {
    let expr = parse_expression(logic)?;
    let mut idents = Vec::new();
    referenced_idents(&expr, &mut idents);
    let mut diagnostics = Vec::new();
    for name in &idents {
        match assignment.get(name) {
            Some(Some(v)) => {
                if v.trim().parse::<f64>().is_err() {
                    diagnostics.push(
                        Diagnostic::new(
                            "NON_NUMERIC_VALUE",
                            format!("parameter '{name}' has non-numeric value '{v}'"),
                        )
                        .with_subject(name.clone()),
                    );
                    return Ok(EvalOutcome {
                        satisfied: false,
                        diagnostics,
                    });
                }
            }
            _ => {
                return Ok(EvalOutcome {
                    satisfied: false,
                    diagnostics,
                })
            }
        }
    }
    let mut ctx = EvalCtx {
        assignment,
        diagnostics,
    };
    let satisfied = matches!(ctx.eval(&expr), Value::Bool(true));
    Ok(EvalOutcome {
        satisfied,
        diagnostics: ctx.diagnostics,
    })
}

/// Evaluate a `Complex` constraint: a boolean expression over presence and
/// value predicates.
pub fn eval_complex(logic: &str, assignment: &Assignment) -> Result<EvalOutcome, ModelError> {
    let expr = parse_expression(logic)?;
    let mut ctx = EvalCtx {
        assignment,
        diagnostics: Vec::new(),
    };
    let satisfied = matches!(ctx.eval(&expr), Value::Bool(true));
    Ok(EvalOutcome {
        satisfied,
        diagnostics: ctx.diagnostics,
    })
}
