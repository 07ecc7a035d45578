use std::fmt;

/// Denominators smaller than this make division return 1.
pub const DIV_GUARD: f64 = 1e-9;
/// `exp` arguments are clamped to `[-EXP_CLAMP, EXP_CLAMP]`.
pub const EXP_CLAMP: f64 = 80.0;
/// Every node's output is clamped to this magnitude so that nested products
/// of clamped exponentials cannot overflow.
pub const VALUE_CLAMP: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [Self::Add, Self::Sub, Self::Mul, Self::Div];

    pub fn symbol(self) -> char {
        match self {
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Add => a + b,
            Self::Sub => a - b,
            Self::Mul => a * b,
            Self::Div => {
                if b.abs() < DIV_GUARD {
                    1.0
                } else {
                    a / b
                }
            }
        }
    }
}

/// Single-variable expression tree over `{+, -, *, /, exp}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn exp(child: Expr) -> Expr {
        Expr::Unary(UnaryOp::Exp, Box::new(child))
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Expr::Const(_) | Expr::Var)
    }

    /// Protected evaluation; finite for any finite `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Unary(UnaryOp::Exp, c) => c.eval(x).clamp(-EXP_CLAMP, EXP_CLAMP).exp(),
            Expr::Binary(op, l, r) => op.apply(l.eval(x), r.eval(x)),
        };
        v.clamp(-VALUE_CLAMP, VALUE_CLAMP)
    }

    /// Number of nodes on the longest root-to-leaf path; a lone terminal has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Unary(_, c) => 1 + c.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Unary(_, c) => 1 + c.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    /// Arity is enforced by the type; this checks the remaining structural
    /// invariants (depth cap, finite constants).
    pub fn is_well_formed(&self, max_depth: usize) -> bool {
        fn finite(e: &Expr) -> bool {
            match e {
                Expr::Const(c) => c.is_finite(),
                Expr::Var => true,
                Expr::Unary(_, c) => finite(c),
                Expr::Binary(_, l, r) => finite(l) && finite(r),
            }
        }
        self.depth() <= max_depth && finite(self)
    }

    /// Pre-order node `index`, with its 1-based level.
    pub fn node(&self, index: usize) -> Option<(&Expr, usize)> {
        fn walk<'a>(e: &'a Expr, idx: &mut usize, level: usize) -> Option<(&'a Expr, usize)> {
            if *idx == 0 {
                return Some((e, level));
            }
            *idx -= 1;
            match e {
                Expr::Const(_) | Expr::Var => None,
                Expr::Unary(_, c) => walk(c, idx, level + 1),
                Expr::Binary(_, l, r) => {
                    walk(l, idx, level + 1).or_else(|| walk(r, idx, level + 1))
                }
            }
        }
        let mut idx = index;
        walk(self, &mut idx, 1)
    }

    /// Mutable access to pre-order node `index`, with its 1-based level.
    pub fn node_mut(&mut self, index: usize) -> Option<(&mut Expr, usize)> {
        fn walk<'a>(
            e: &'a mut Expr,
            idx: &mut usize,
            level: usize,
        ) -> Option<(&'a mut Expr, usize)> {
            if *idx == 0 {
                return Some((e, level));
            }
            *idx -= 1;
            match e {
                Expr::Const(_) | Expr::Var => None,
                Expr::Unary(_, c) => walk(c, idx, level + 1),
                Expr::Binary(_, l, r) => {
                    if let Some(found) = walk(l, idx, level + 1) {
                        return Some(found);
                    }
                    walk(r, idx, level + 1)
                }
            }
        }
        let mut idx = index;
        walk(self, &mut idx, 1)
    }
}

/// Fully parenthesised infix. The default form prints constants with the
/// shortest exact representation (parseable back to the same tree); a
/// precision such as `{:.4}` rounds constants for reports.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => match f.precision() {
                Some(p) => write!(f, "{c:.p$}"),
                None => write!(f, "{c}"),
            },
            Expr::Var => f.write_str("x"),
            Expr::Unary(UnaryOp::Exp, c) => {
                f.write_str("exp(")?;
                fmt::Display::fmt(c, f)?;
                f.write_str(")")
            }
            Expr::Binary(op, l, r) => {
                f.write_str("(")?;
                fmt::Display::fmt(l, f)?;
                write!(f, " {} ", op.symbol())?;
                fmt::Display::fmt(r, f)?;
                f.write_str(")")
            }
        }
    }
}
