use crate::model::ConnectionKind;

use super::lexer::{Tok, Token};
use super::{ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone)]
pub(crate) struct Spanned<T> {
    pub value: T,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) enum AttrValue {
    Int(i64),
    Ident(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Attr {
    pub name: Spanned<String>,
    pub value: Spanned<AttrValue>,
}

#[derive(Debug, Clone)]
pub(crate) enum Member {
    UseCase(Spanned<String>),
    Candidate(Spanned<String>, Vec<Attr>),
    Entity(Spanned<String>, Vec<Attr>),
}

#[derive(Debug, Clone)]
pub(crate) enum Decl {
    Component {
        name: Spanned<String>,
        members: Vec<Member>,
    },
    Connection {
        kind: ConnectionKind,
        keyword: SourceSpan,
        from: Spanned<String>,
        to: Spanned<String>,
        attrs: Vec<Attr>,
    },
    DataStore {
        name: Spanned<String>,
        entities: Vec<Spanned<String>>,
        attrs: Vec<Attr>,
    },
}

const TOP_LEVEL: [&str; 4] = ["component", "local", "remote", "dataStore"];

struct Parser<'d> {
    tokens: Vec<Token>,
    pos: usize,
    diags: &'d mut Vec<ParseDiagnostic>,
}

type PResult<T> = Result<T, ()>;

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&mut self, expected: &str) -> PResult<T> {
        let t = self.peek().clone();
        self.diags.push(ParseDiagnostic::error(
            format!("expected {expected}, found {}", t.tok.describe()),
            t.span,
        ));
        Err(())
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            self.fail(&tok.describe())
        }
    }

    fn string(&mut self) -> PResult<Spanned<String>> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let value = s.clone();
                let span = self.bump().span;
                Ok(Spanned { value, span })
            }
            _ => self.fail("a quoted name"),
        }
    }

    fn ident(&mut self) -> PResult<Spanned<String>> {
        match &self.peek().tok {
            Tok::Ident(s) if !is_keyword(s) => {
                let value = s.clone();
                let span = self.bump().span;
                Ok(Spanned { value, span })
            }
            _ => self.fail("an identifier"),
        }
    }

    fn attrs(&mut self) -> PResult<Vec<Attr>> {
        let mut attrs = Vec::new();
        if self.peek().tok != Tok::LBracket {
            return Ok(attrs);
        }
        self.bump();
        loop {
            let name = match &self.peek().tok {
                Tok::Ident(s) => {
                    let value = s.clone();
                    Spanned {
                        value,
                        span: self.bump().span,
                    }
                }
                _ => return self.fail("an attribute name"),
            };
            self.expect(Tok::Eq)?;
            let value = match &self.peek().tok {
                Tok::Int(i) => {
                    let v = AttrValue::Int(*i);
                    Spanned {
                        value: v,
                        span: self.bump().span,
                    }
                }
                Tok::Ident(s) => {
                    let v = AttrValue::Ident(s.clone());
                    Spanned {
                        value: v,
                        span: self.bump().span,
                    }
                }
                _ => return self.fail("an integer or identifier value"),
            };
            attrs.push(Attr { name, value });
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBracket => {
                    self.bump();
                    return Ok(attrs);
                }
                _ => return self.fail("`,` or `]`"),
            }
        }
    }

    fn component(&mut self) -> PResult<Decl> {
        self.bump();
        let name = self.string()?;
        self.expect(Tok::LBrace)?;
        let mut members = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(kw) if kw == "useCase" => {
                    self.bump();
                    members.push(Member::UseCase(self.string()?));
                }
                Tok::Ident(kw) if kw == "serviceCandidate" => {
                    self.bump();
                    let name = self.ident()?;
                    let attrs = self.attrs()?;
                    members.push(Member::Candidate(name, attrs));
                }
                Tok::Ident(kw) if kw == "entityType" => {
                    self.bump();
                    let name = self.ident()?;
                    let attrs = self.attrs()?;
                    members.push(Member::Entity(name, attrs));
                }
                _ => return self.fail("`useCase`, `serviceCandidate`, `entityType` or `}`"),
            }
        }
        Ok(Decl::Component { name, members })
    }

    fn connection(&mut self, kind: ConnectionKind) -> PResult<Decl> {
        let keyword = self.bump().span;
        let from = self.string()?;
        self.expect(Tok::Arrow)?;
        let to = self.string()?;
        let attrs = self.attrs()?;
        Ok(Decl::Connection {
            kind,
            keyword,
            from,
            to,
            attrs,
        })
    }

    fn data_store(&mut self) -> PResult<Decl> {
        self.bump();
        let name = self.string()?;
        self.expect(Tok::LBrace)?;
        let mut entities = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(kw) if kw == "entityType" => {
                    self.bump();
                    entities.push(self.ident()?);
                }
                _ => return self.fail("`entityType` or `}`"),
            }
        }
        let attrs = self.attrs()?;
        Ok(Decl::DataStore { name, entities, attrs })
    }

    fn recover(&mut self) {
        self.bump();
        while self.peek().tok != Tok::Eof && !TOP_LEVEL.iter().any(|kw| self.at_keyword(kw)) {
            self.bump();
        }
    }

    fn model(&mut self) -> Vec<Decl> {
        let mut decls = Vec::new();
        while self.peek().tok != Tok::Eof {
            let result = match &self.peek().tok {
                Tok::Ident(kw) if kw == "component" => self.component(),
                Tok::Ident(kw) if kw == "local" => self.connection(ConnectionKind::Local),
                Tok::Ident(kw) if kw == "remote" => self.connection(ConnectionKind::Remote),
                Tok::Ident(kw) if kw == "dataStore" => self.data_store(),
                _ => self.fail("`component`, `local`, `remote` or `dataStore`"),
            };
            match result {
                Ok(decl) => decls.push(decl),
                Err(()) => self.recover(),
            }
        }
        decls
    }
}

pub(crate) fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "component" | "useCase" | "serviceCandidate" | "entityType" | "dataStore" | "local" | "remote"
    )
}

pub(crate) fn parse_decls(tokens: Vec<Token>, diags: &mut Vec<ParseDiagnostic>) -> Vec<Decl> {
    let mut parser = Parser { tokens, pos: 0, diags };
    parser.model()
}
