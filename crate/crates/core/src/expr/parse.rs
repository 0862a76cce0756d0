//! Recursive-descent parser with precedence climbing for the expression
//! grammar in the module docs. Errors carry byte offsets into the source.

use super::{BinOp, Expr, ExprError, Func, Node};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let offset = i;
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '/' => {
                i += 1;
                Tok::Slash
            }
            '^' => {
                i += 1;
                Tok::Caret
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, format!("invalid number literal `{lit}`")))?;
                Tok::Num(v)
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            other => return Err(syntax(offset, format!("unexpected character `{other}`"))),
        };
        toks.push(Token { tok, offset });
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    end: usize,
    n: usize,
    r: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if t.tok == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(syntax(t.offset, format!("expected {what}"))),
            None => Err(syntax(self.end, format!("expected {what}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            let op = match t.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        while let Some(t) = self.peek() {
            let op = match t.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if let Some(t) = self.peek() {
            if t.tok == Tok::Minus {
                self.pos += 1;
                let inner = self.factor()?;
                return Ok(Node::Neg(Box::new(inner)));
            }
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some(t) = self.peek() {
            if t.tok == Tok::Caret {
                self.pos += 1;
                let exp = self.factor()?;
                return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some(t) = self.bump().cloned() else {
            return Err(syntax(self.end, "expected expression, found end of input"));
        };
        match t.tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(&name, t.offset),
            _ => Err(syntax(t.offset, "expected number, variable, or `(`")),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Node, ExprError> {
        let func = match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "abs" => Some(Func::Abs),
            _ => None,
        };
        if let Some(func) = func {
            self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
            let arg = self.expr()?;
            self.expect(Tok::RParen, "closing `)`")?;
            return Ok(Node::Call(func, Box::new(arg)));
        }
        if name == "t" {
            return Ok(Node::Time);
        }
        let (head, digits) = name.split_at(1);
        if (head == "x" || head == "u") && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            let idx: usize = digits.parse().map_err(|_| {
                syntax(offset, format!("variable index too large in `{name}`"))
            })?;
            let limit = if head == "x" { self.n } else { self.r };
            if idx == 0 || idx > limit {
                return Err(ExprError::IndexOutOfRange {
                    name: name.to_string(),
                    offset,
                    n: self.n,
                    r: self.r,
                });
            }
            return Ok(if head == "x" {
                Node::State(idx - 1)
            } else {
                Node::Control(idx - 1)
            });
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset,
        })
    }
}

/// Parse `text` against declared dimensions. Every `x`/`u` index is bounds
/// checked at parse time.
pub fn parse(text: &str, n: usize, r: usize) -> Result<Expr, ExprError> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        n,
        r,
    };
    let node = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(syntax(t.offset, "unexpected trailing input"));
    }
    Ok(Expr::from_node(node, n, r))
}
