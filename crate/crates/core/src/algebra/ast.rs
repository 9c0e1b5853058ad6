use std::collections::BTreeMap;
use std::fmt;

use crate::relstore::{ColumnType, Value};
use crate::textkit::SimilarityFn;

#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowAst {
    pub name: String,
    pub params: Vec<Param>,
    /// Evaluated in order; the last binding is the output.
    pub bindings: Vec<Binding>,
}

impl WorkflowAst {
    pub fn output(&self) -> Option<&Binding> {
        self.bindings.last()
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    Int,
    Float,
    Text,
}

impl ParamType {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamType::Int => "int",
            ParamType::Float => "float",
            ParamType::Text => "text",
        }
    }

    pub fn column_type(self) -> ColumnType {
        match self {
            ParamType::Int => ColumnType::Int,
            ParamType::Float => ColumnType::Float,
            ParamType::Text => ColumnType::Text,
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub expr: Node,
}

/// One operator of a workflow.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// An earlier binding or, failing that, a base relation.
    Ref(String),
    Select {
        input: Box<Node>,
        predicate: Predicate,
    },
    Project {
        input: Box<Node>,
        columns: Vec<String>,
    },
    Join {
        left: Box<Node>,
        right: Box<Node>,
        left_col: String,
        right_col: String,
    },
    /// Attaches to every `input` tuple a rating map built from the `source`
    /// rows sharing its `group_key`.
    Extend {
        input: Box<Node>,
        source: Box<Node>,
        group_key: String,
        name: String,
        key_col: String,
        value_col: String,
    },
    /// Ranks `candidates` by comparing them to `reference`.
    Recommend {
        candidates: Box<Node>,
        reference: Box<Node>,
        mode: RecommendMode,
        agg: Agg,
        top: Option<u64>,
    },
}

impl Node {
    pub fn reference(name: impl Into<String>) -> Self {
        Node::Ref(name.into())
    }

    /// Direct child nodes in evaluation order.
    pub fn children(&self) -> Vec<&Node> {
        match self {
            Node::Ref(_) => vec![],
            Node::Select { input, .. } | Node::Project { input, .. } => vec![input],
            Node::Join { left, right, .. } => vec![left, right],
            Node::Extend { input, source, .. } => vec![input, source],
            Node::Recommend {
                candidates,
                reference,
                ..
            } => vec![candidates, reference],
        }
    }

    /// Every name referenced anywhere under this node.
    pub fn references(&self) -> Vec<&str> {
        match self {
            Node::Ref(name) => vec![name.as_str()],
            other => other
                .children()
                .into_iter()
                .flat_map(Node::references)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecommendMode {
    /// score(c) = agg over r of function(c.candidate_col, r.reference_col)
    Similarity {
        candidate_col: String,
        reference_col: String,
        function: SimilarityFn,
    },
    /// score(c) = agg of r.value_col over reference rows with
    /// r.reference_key = c.candidate_key
    Aggregate {
        value_col: String,
        candidate_key: String,
        reference_key: String,
    },
}

impl RecommendMode {
    pub fn default_agg(&self) -> Agg {
        match self {
            RecommendMode::Similarity { .. } => Agg::Max,
            RecommendMode::Aggregate { .. } => Agg::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agg {
    Max,
    Mean,
    Sum,
}

impl Agg {
    pub const ALL: [Agg; 3] = [Agg::Max, Agg::Mean, Agg::Sum];

    pub fn keyword(self) -> &'static str {
        match self {
            Agg::Max => "max",
            Agg::Mean => "mean",
            Agg::Sum => "sum",
        }
    }

    /// Folds `values`; an empty input yields `None`.
    ///
    /// Sums use compensated (Kahan–Babuška–Neumaier) summation, the same
    /// scheme SQL engines such as SQLite use for `SUM`/`AVG` over reals.
    pub fn apply(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        Some(match self {
            Agg::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Agg::Sum => compensated_sum(values),
            Agg::Mean => compensated_sum(values) / values.len() as f64,
        })
    }
}

impl fmt::Display for Agg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

pub(crate) fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut err = 0.0f64;
    for &x in values {
        let t = sum + x;
        if sum.abs() > x.abs() {
            err += (sum - t) + x;
        } else {
            err += (x - t) + sum;
        }
        sum = t;
    }
    sum + err
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub conjuncts: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub column: String,
    pub op: CmpOp,
    pub operand: Operand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Literal(Literal),
    Param(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Literal {
    pub fn to_value(&self) -> Value {
        match self {
            Literal::Int(i) => Value::Int(*i),
            Literal::Float(f) => Value::Float(*f),
            Literal::Text(s) => Value::Text(s.clone()),
        }
    }

    pub fn column_type(&self) -> ColumnType {
        match self {
            Literal::Int(_) => ColumnType::Int,
            Literal::Float(_) => ColumnType::Float,
            Literal::Text(_) => ColumnType::Text,
        }
    }
}

/// Parameter values bound for one evaluation.
pub type Args = BTreeMap<String, Literal>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agg_empty_and_values() {
        for agg in Agg::ALL {
            assert_eq!(agg.apply(&[]), None);
        }
        assert_eq!(Agg::Max.apply(&[-2.0, -1.0]), Some(-1.0));
        assert_eq!(Agg::Sum.apply(&[1.0, 2.5]), Some(3.5));
        assert_eq!(Agg::Mean.apply(&[1.0, 2.0, 4.5]), Some(2.5));
    }

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(&v), 2.0);
    }

    #[test]
    fn references_walk_the_tree() {
        let n = Node::Join {
            left: Box::new(Node::reference("a")),
            right: Box::new(Node::Select {
                input: Box::new(Node::reference("b")),
                predicate: Predicate { conjuncts: vec![] },
            }),
            left_col: "x".into(),
            right_col: "y".into(),
        };
        assert_eq!(n.references(), vec!["a", "b"]);
    }
}
