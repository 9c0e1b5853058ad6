use std::collections::HashMap;

use crate::algebra::{
    Agg, Binding, CmpOp, Comparison, Literal, Node, Operand, Param, ParamType, Predicate,
    RecommendMode, WorkflowAst,
};
use crate::textkit::SimilarityFn;

use super::lexer::{Tok, Token};
use super::{Diagnostic, SourceSpan, KEYWORDS, MAX_NESTING};

type PResult<T> = Result<T, Diagnostic>;

/// A name use, kept for the checks that run after parsing.
struct Use {
    name: String,
    start: usize,
    end: usize,
}

pub(crate) struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    refs: Vec<Vec<Use>>,
    param_uses: Vec<Use>,
    binding_spans: Vec<(usize, usize)>,
}

pub(crate) struct Parsed {
    pub ast: WorkflowAst,
    pub warnings: Vec<Diagnostic>,
}

impl<'s> Parser<'s> {
    pub(crate) fn new(src: &'s str, toks: Vec<Token>) -> Self {
        Parser {
            src,
            toks,
            pos: 0,
            depth: 0,
            refs: Vec::new(),
            param_uses: Vec::new(),
            binding_spans: Vec::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn span(&self, start: usize, end: usize) -> SourceSpan {
        SourceSpan::new(self.src, start, end)
    }

    fn error_at(&self, t: &Token, msg: String) -> Diagnostic {
        Diagnostic::error(msg, self.span(t.start, t.end))
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let t = self.peek();
        self.error_at(
            t,
            format!("expected {expected}, found {}", t.tok.describe()),
        )
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{kw}'")))
        }
    }

    fn punct(&mut self, want: Tok) -> PResult<()> {
        if self.peek().tok == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&want.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Token)> {
        match &self.peek().tok {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => {
                let t = self.peek();
                Err(self.error_at(t, format!("expected {what}, found reserved word '{s}'")))
            }
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump()))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub(crate) fn workflow(mut self) -> Result<Parsed, Vec<Diagnostic>> {
        let ast = self.workflow_syntax().map_err(|d| vec![d])?;
        self.check(ast)
    }

    fn workflow_syntax(&mut self) -> PResult<WorkflowAst> {
        self.keyword("workflow")?;
        let (name, _) = self.ident("workflow name")?;
        self.punct(Tok::LParen)?;
        let mut params = Vec::new();
        let mut param_names: HashMap<String, ()> = HashMap::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let (pname, t) = self.ident("parameter name")?;
                if param_names.insert(pname.clone(), ()).is_some() {
                    return Err(self.error_at(&t, format!("parameter {pname} declared twice")));
                }
                self.punct(Tok::Colon)?;
                let ty = match &self.peek().tok {
                    Tok::Ident(s) if s == "int" => ParamType::Int,
                    Tok::Ident(s) if s == "float" => ParamType::Float,
                    Tok::Ident(s) if s == "text" => ParamType::Text,
                    _ => return Err(self.unexpected("parameter type int, float or text")),
                };
                self.bump();
                params.push(Param { name: pname, ty });
                if self.peek().tok == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.punct(Tok::RParen)?;
        self.punct(Tok::Colon)?;
        let mut bindings = Vec::new();
        loop {
            if self.peek().tok == Tok::Eof && !bindings.is_empty() {
                break;
            }
            let (bname, t) = self.ident("binding name")?;
            if bindings.iter().any(|b: &Binding| b.name == bname) {
                return Err(self.error_at(&t, format!("binding {bname} defined twice")));
            }
            self.binding_spans.push((t.start, t.end));
            self.punct(Tok::Op("="))?;
            self.refs.push(Vec::new());
            let expr = self.expr()?;
            bindings.push(Binding { name: bname, expr });
        }
        for u in &self.param_uses {
            if !params.iter().any(|p| p.name == u.name) {
                return Err(Diagnostic::error(
                    format!("parameter ${} is not declared", u.name),
                    self.span(u.start, u.end),
                ));
            }
        }
        Ok(WorkflowAst {
            name,
            params,
            bindings,
        })
    }

    /// Name checks that need the whole workflow: no binding may be used
    /// before (or by) its own definition.
    fn check(self, ast: WorkflowAst) -> Result<Parsed, Vec<Diagnostic>> {
        let mut errors = Vec::new();
        let mut used = vec![false; ast.bindings.len()];
        for (i, uses) in self.refs.iter().enumerate() {
            for u in uses {
                if let Some(j) = ast.bindings[..i].iter().rposition(|b| b.name == u.name) {
                    used[j] = true;
                } else if ast.bindings[i..].iter().any(|b| b.name == u.name) {
                    errors.push(Diagnostic::error(
                        format!("binding {} is used before it is defined", u.name),
                        self.span(u.start, u.end),
                    ));
                }
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let last = ast.bindings.len() - 1;
        let warnings = ast.bindings[..last]
            .iter()
            .zip(&used)
            .filter(|(_, u)| !**u)
            .zip(&self.binding_spans)
            .map(|((b, _), &(start, end))| {
                Diagnostic::warning(
                    format!("binding {} is never used", b.name),
                    self.span(start, end),
                )
            })
            .collect();
        Ok(Parsed { ast, warnings })
    }

    fn expr(&mut self) -> PResult<Node> {
        if self.depth >= MAX_NESTING {
            let t = self.peek();
            return Err(self.error_at(t, format!("expressions nested deeper than {MAX_NESTING}")));
        }
        self.depth += 1;
        let node = self.expr_inner();
        self.depth -= 1;
        node
    }

    fn expr_inner(&mut self) -> PResult<Node> {
        if self.peek().tok == Tok::LParen {
            self.bump();
            let inner = self.expr()?;
            self.punct(Tok::RParen)?;
            return Ok(inner);
        }
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("an expression")),
        };
        match kw.as_str() {
            "select" => {
                self.bump();
                let input = self.expr()?;
                self.keyword("where")?;
                let predicate = self.predicate()?;
                Ok(Node::Select {
                    input: Box::new(input),
                    predicate,
                })
            }
            "project" => {
                self.bump();
                let input = self.expr()?;
                self.keyword("on")?;
                let mut columns = vec![self.ident("column name")?.0];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    columns.push(self.ident("column name")?.0);
                }
                Ok(Node::Project {
                    input: Box::new(input),
                    columns,
                })
            }
            "join" => {
                self.bump();
                let left = self.expr()?;
                self.punct(Tok::Comma)?;
                let right = self.expr()?;
                self.keyword("on")?;
                let left_col = self.ident("column name")?.0;
                self.punct(Tok::Op("="))?;
                let right_col = self.ident("column name")?.0;
                Ok(Node::Join {
                    left: Box::new(left),
                    right: Box::new(right),
                    left_col,
                    right_col,
                })
            }
            "extend" => {
                self.bump();
                let input = self.expr()?;
                self.keyword("with")?;
                let name = self.ident("attribute name")?.0;
                self.keyword("from")?;
                let source = self.expr()?;
                self.keyword("key")?;
                let group_key = self.ident("column name")?.0;
                self.keyword("map")?;
                self.punct(Tok::LParen)?;
                let key_col = self.ident("column name")?.0;
                self.punct(Tok::Arrow)?;
                let value_col = self.ident("column name")?.0;
                self.punct(Tok::RParen)?;
                Ok(Node::Extend {
                    input: Box::new(input),
                    source: Box::new(source),
                    group_key,
                    name,
                    key_col,
                    value_col,
                })
            }
            "recommend" => {
                self.bump();
                self.recommend()
            }
            _ => {
                let (name, t) = self.ident("an expression")?;
                self.refs.last_mut().expect("inside a binding").push(Use {
                    name: name.clone(),
                    start: t.start,
                    end: t.end,
                });
                Ok(Node::Ref(name))
            }
        }
    }

    fn recommend(&mut self) -> PResult<Node> {
        let candidates = self.expr()?;
        self.keyword("against")?;
        let reference = self.expr()?;
        let mode = if self.at_keyword("compare") {
            self.bump();
            let candidate_col = self.ident("column name")?.0;
            self.punct(Tok::Tilde)?;
            let reference_col = self.ident("column name")?.0;
            self.keyword("using")?;
            let t = self.peek().clone();
            let function = match &t.tok {
                Tok::Ident(s) => s.parse::<SimilarityFn>().map_err(|_| {
                    self.error_at(
                        &t,
                        format!("unknown similarity function '{s}'; expected jaccard, pearson or inv_euclidean"),
                    )
                })?,
                _ => return Err(self.unexpected("similarity function")),
            };
            self.bump();
            RecommendMode::Similarity {
                candidate_col,
                reference_col,
                function,
            }
        } else if self.at_keyword("aggregate") {
            self.bump();
            let value_col = self.ident("column name")?.0;
            self.keyword("match")?;
            let candidate_key = self.ident("column name")?.0;
            self.punct(Tok::Op("="))?;
            let reference_key = self.ident("column name")?.0;
            RecommendMode::Aggregate {
                value_col,
                candidate_key,
                reference_key,
            }
        } else {
            return Err(self.unexpected("'compare' or 'aggregate'"));
        };
        let mut agg = mode.default_agg();
        if self.at_keyword("agg") {
            self.bump();
            let t = self.peek().clone();
            agg = match &t.tok {
                Tok::Ident(s) => {
                    Agg::ALL
                        .into_iter()
                        .find(|a| a.keyword() == s)
                        .ok_or_else(|| {
                            self.error_at(
                                &t,
                                format!("unknown aggregation '{s}'; expected max, mean or sum"),
                            )
                        })?
                }
                _ => return Err(self.unexpected("aggregation max, mean or sum")),
            };
            self.bump();
        }
        let mut top = None;
        if self.at_keyword("top") {
            self.bump();
            let t = self.peek().clone();
            match t.tok {
                Tok::Int(n) if n >= 1 => top = Some(n as u64),
                Tok::Int(_) => return Err(self.error_at(&t, "top must be at least 1".into())),
                _ => return Err(self.unexpected("a positive integer")),
            }
            self.bump();
        }
        Ok(Node::Recommend {
            candidates: Box::new(candidates),
            reference: Box::new(reference),
            mode,
            agg,
            top,
        })
    }

    fn predicate(&mut self) -> PResult<Predicate> {
        let mut conjuncts = vec![self.comparison()?];
        while self.at_keyword("and") {
            self.bump();
            conjuncts.push(self.comparison()?);
        }
        Ok(Predicate { conjuncts })
    }

    fn comparison(&mut self) -> PResult<Comparison> {
        let column = self.ident("column name")?.0;
        let op = match self.peek().tok {
            Tok::Op(sym) => CmpOp::ALL
                .into_iter()
                .find(|o| o.symbol() == sym)
                .expect("lexer ops"),
            _ => return Err(self.unexpected("comparison operator")),
        };
        self.bump();
        let operand = match self.peek().tok.clone() {
            Tok::Int(i) => {
                self.bump();
                Operand::Literal(Literal::Int(i))
            }
            Tok::Float(f) => {
                self.bump();
                Operand::Literal(Literal::Float(f))
            }
            Tok::Str(s) => {
                self.bump();
                Operand::Literal(Literal::Text(s))
            }
            Tok::Dollar => {
                let dollar = self.bump();
                // The name must follow the '$' directly.
                if self.peek().start != dollar.end {
                    return Err(self.unexpected("parameter name"));
                }
                let (name, t) = self.ident("parameter name")?;
                self.param_uses.push(Use {
                    name: name.clone(),
                    start: dollar.start,
                    end: t.end,
                });
                Operand::Param(name)
            }
            _ => return Err(self.unexpected("a literal or $parameter")),
        };
        Ok(Comparison {
            column,
            op,
            operand,
        })
    }
}
