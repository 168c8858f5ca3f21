//! Executes the conditional structure of an emitted header without a C
//! compiler. Only the statement forms the emitter produces are accepted:
//! `if (p <= LIT) { .. } else { .. }`, `return N;` and `(void)p;`.

use super::ValueType;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Le,
    Punct(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && next == Some('*') {
            let close = src_find(&chars, i + 2, "*/")
                .ok_or_else(|| Error::format("header", "unterminated comment"))?;
            i = close + 2;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            out.push(Tok::Punct('"'));
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() || (c == '-' && next.is_some_and(|n| n.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_alphanumeric() || d == '.' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if c == '<' && next == Some('=') {
            out.push(Tok::Le);
            i += 2;
        } else {
            out.push(Tok::Punct(c));
            i += 1;
        }
    }
    Ok(out)
}

fn src_find(chars: &[char], from: usize, pat: &str) -> Option<usize> {
    let p: Vec<char> = pat.chars().collect();
    (from..chars.len().saturating_sub(p.len() - 1)).find(|&i| chars[i..i + p.len()] == p[..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Lit {
    F32(f32),
    F64(f64),
    Int(i64),
}

#[derive(Debug, Clone, PartialEq)]
enum Stmt {
    If {
        param: usize,
        lit: Lit,
        then: Vec<Stmt>,
        otherwise: Vec<Stmt>,
    },
    Return(usize),
}

/// A parsed classifier function.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub params: Vec<String>,
    value_type: ValueType,
    body: Vec<Stmt>,
}

struct Cursor {
    toks: Vec<Tok>,
    pos: usize,
}

impl Cursor {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(format!("token {}", self.pos), msg)
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err("unexpected end of header"))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn punct(&mut self, c: char) -> Result<()> {
        match self.next()? {
            Tok::Punct(p) if p == c => Ok(()),
            other => Err(self.err(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let s = self.ident()?;
        if s == kw {
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`, found `{s}`")))
        }
    }
}

impl Program {
    /// Locates `int SYMBOL(` in `source` and parses that function.
    pub fn parse(source: &str, symbol: &str, value_type: ValueType) -> Result<Program> {
        let toks = tokenize(source)?;
        let start = toks
            .windows(3)
            .position(|w| {
                w[0] == Tok::Ident("int".into())
                    && w[1] == Tok::Ident(symbol.into())
                    && w[2] == Tok::Punct('(')
            })
            .ok_or_else(|| Error::format("header", format!("function `{symbol}` not found")))?;
        let mut cur = Cursor {
            toks,
            pos: start + 3,
        };
        let mut params = Vec::new();
        if cur.peek() != Some(&Tok::Punct(')')) {
            loop {
                cur.keyword(value_type.c_type())?;
                params.push(cur.ident()?);
                match cur.next()? {
                    Tok::Punct(',') => continue,
                    Tok::Punct(')') => break,
                    other => return Err(cur.err(format!("unexpected {other:?} in parameters"))),
                }
            }
        } else {
            cur.next()?;
        }
        cur.punct('{')?;
        let mut prog = Program {
            params,
            value_type,
            body: Vec::new(),
        };
        prog.body = prog.block(&mut cur)?;
        Ok(prog)
    }

    /// Statements up to and including the closing `}`.
    fn block(&self, cur: &mut Cursor) -> Result<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            match cur.next()? {
                Tok::Punct('}') => return Ok(out),
                Tok::Punct('(') => {
                    cur.keyword("void")?;
                    cur.punct(')')?;
                    let p = cur.ident()?;
                    self.param_index(cur, &p)?;
                    cur.punct(';')?;
                }
                Tok::Ident(kw) if kw == "return" => {
                    let n = match cur.next()? {
                        Tok::Num(n) => n.parse().map_err(|_| cur.err("bad class index"))?,
                        other => {
                            return Err(cur.err(format!("expected class index, found {other:?}")))
                        }
                    };
                    cur.punct(';')?;
                    out.push(Stmt::Return(n));
                }
                Tok::Ident(kw) if kw == "if" => {
                    cur.punct('(')?;
                    let p = cur.ident()?;
                    let param = self.param_index(cur, &p)?;
                    if cur.next()? != Tok::Le {
                        return Err(cur.err("expected `<=`"));
                    }
                    let lit = match cur.next()? {
                        Tok::Num(n) => self.literal(cur, &n)?,
                        other => return Err(cur.err(format!("expected literal, found {other:?}"))),
                    };
                    cur.punct(')')?;
                    cur.punct('{')?;
                    let then = self.block(cur)?;
                    cur.keyword("else")?;
                    cur.punct('{')?;
                    let otherwise = self.block(cur)?;
                    out.push(Stmt::If {
                        param,
                        lit,
                        then,
                        otherwise,
                    });
                }
                other => return Err(cur.err(format!("unexpected {other:?}"))),
            }
        }
    }

    fn param_index(&self, cur: &Cursor, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| cur.err(format!("unknown parameter `{name}`")))
    }

    fn literal(&self, cur: &Cursor, text: &str) -> Result<Lit> {
        let bad = || cur.err(format!("bad literal {text:?}"));
        match self.value_type {
            ValueType::Float => text
                .strip_suffix('f')
                .and_then(|t| t.parse().ok())
                .map(Lit::F32)
                .ok_or_else(bad),
            ValueType::Double => text.parse().map(Lit::F64).map_err(|_| bad()),
            ValueType::Int16 { .. } => text.parse().map(Lit::Int).map_err(|_| bad()),
        }
    }

    /// Runs the function on C-domain arguments (one per parameter).
    pub fn eval(&self, args: &[f64]) -> Result<usize> {
        if args.len() != self.params.len() {
            return Err(Error::Shape {
                expected: self.params.len(),
                got: args.len(),
            });
        }
        let mut block = &self.body;
        loop {
            match block.first() {
                Some(Stmt::Return(c)) => return Ok(*c),
                Some(Stmt::If {
                    param,
                    lit,
                    then,
                    otherwise,
                }) => {
                    let a = args[*param];
                    let le = match *lit {
                        Lit::F32(t) => (a as f32) <= t,
                        Lit::F64(t) => a <= t,
                        Lit::Int(t) => (a as i64) <= t,
                    };
                    block = if le { then } else { otherwise };
                }
                None => return Err(Error::format("header", "block ends without return")),
            }
        }
    }
}
