use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, LazyLock, Mutex, Weak};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

/// Sign knowledge a variable carries into every expression that uses it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assumption {
    Real,
    NonZero,
    Positive,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    assumption: Assumption,
}

impl Symbol {
    pub fn new(name: &str, assumption: Assumption) -> Self {
        Symbol { name: Arc::from(name), assumption }
    }
    pub fn real(name: &str) -> Self {
        Self::new(name, Assumption::Real)
    }
    pub fn positive(name: &str) -> Self {
        Self::new(name, Assumption::Positive)
    }
    pub fn nonzero(name: &str) -> Self {
        Self::new(name, Assumption::NonZero)
    }
    /// The formal action parameter `r`, always positive.
    pub fn action() -> Self {
        Self::positive("r")
    }
    /// A second positive parameter used for composition laws.
    pub fn action2() -> Self {
        Self::positive("s")
    }
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn assumption(&self) -> Assumption {
        self.assumption
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Log,
    Abs,
    Sign,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, PartialEq)]
pub enum Kind {
    Const(Q),
    Var(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Q),
    Func(Func, Expr),
}

/// Possible signs of a value, one bit each for negative, zero, positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignSet(u8);

impl SignSet {
    pub const NEG: SignSet = SignSet(1);
    pub const ZERO: SignSet = SignSet(2);
    pub const POS: SignSet = SignSet(4);
    pub const ANY: SignSet = SignSet(7);
    pub const NONZERO: SignSet = SignSet(5);
    pub const NONNEG: SignSet = SignSet(6);
    pub const NONPOS: SignSet = SignSet(3);

    pub fn union(self, o: SignSet) -> SignSet {
        SignSet(self.0 | o.0)
    }
    pub fn contains(self, o: SignSet) -> bool {
        self.0 & o.0 == o.0
    }
    pub fn subset_of(self, o: SignSet) -> bool {
        o.contains(self)
    }
    pub fn may_be_zero(self) -> bool {
        self.0 & 2 != 0
    }
    pub fn may_be_neg(self) -> bool {
        self.0 & 1 != 0
    }
    pub fn may_be_pos(self) -> bool {
        self.0 & 4 != 0
    }
    fn of_q(q: &Q) -> SignSet {
        if q.is_zero() {
            Self::ZERO
        } else if q.is_positive() {
            Self::POS
        } else {
            Self::NEG
        }
    }
    fn times(self, o: SignSet) -> SignSet {
        let mut out = 0u8;
        for a in [1u8, 2, 4] {
            if self.0 & a == 0 {
                continue;
            }
            for b in [1u8, 2, 4] {
                if o.0 & b == 0 {
                    continue;
                }
                out |= match (a, b) {
                    (2, _) | (_, 2) => 2,
                    (1, 1) | (4, 4) => 4,
                    _ => 1,
                };
            }
        }
        SignSet(out)
    }
    fn plus(self, o: SignSet) -> SignSet {
        if self == Self::ZERO {
            return o;
        }
        if o == Self::ZERO {
            return self;
        }
        let nonneg = |s: SignSet| s.subset_of(Self::NONNEG);
        let nonpos = |s: SignSet| s.subset_of(Self::NONPOS);
        if nonneg(self) && nonneg(o) {
            // sum of nonnegatives is zero only if both are
            let z = self.may_be_zero() && o.may_be_zero();
            return SignSet(4 | if z { 2 } else { 0 });
        }
        if nonpos(self) && nonpos(o) {
            let z = self.may_be_zero() && o.may_be_zero();
            return SignSet(1 | if z { 2 } else { 0 });
        }
        Self::ANY
    }
}

pub struct Node {
    pub(crate) kind: Kind,
    hash: u64,
    sign: SignSet,
}

/// Interned, immutable expression. Structurally equal expressions share one node.
#[derive(Clone)]
pub struct Expr(pub(crate) Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}
impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

const SHARDS: usize = 64;
const SWEEP_EVERY: usize = 1 << 16;

struct Shard {
    map: HashMap<u64, Vec<Weak<Node>>>,
    inserts: usize,
}

static INTERNER: LazyLock<Vec<Mutex<Shard>>> = LazyLock::new(|| {
    (0..SHARDS).map(|_| Mutex::new(Shard { map: HashMap::new(), inserts: 0 })).collect()
});

fn hash_kind(kind: &Kind) -> u64 {
    let mut h = DefaultHasher::new();
    match kind {
        Kind::Const(q) => {
            0u8.hash(&mut h);
            q.hash(&mut h);
        }
        Kind::Var(s) => {
            1u8.hash(&mut h);
            s.hash(&mut h);
        }
        Kind::Add(v) => {
            2u8.hash(&mut h);
            for e in v {
                h.write_u64(e.0.hash);
            }
        }
        Kind::Mul(v) => {
            3u8.hash(&mut h);
            for e in v {
                h.write_u64(e.0.hash);
            }
        }
        Kind::Pow(b, q) => {
            4u8.hash(&mut h);
            h.write_u64(b.0.hash);
            q.hash(&mut h);
        }
        Kind::Func(f, a) => {
            5u8.hash(&mut h);
            f.hash(&mut h);
            h.write_u64(a.0.hash);
        }
    }
    h.finish()
}

fn sign_of_kind(kind: &Kind) -> SignSet {
    match kind {
        Kind::Const(q) => SignSet::of_q(q),
        Kind::Var(s) => match s.assumption {
            Assumption::Real => SignSet::ANY,
            Assumption::NonZero => SignSet::NONZERO,
            Assumption::Positive => SignSet::POS,
        },
        Kind::Add(v) => v.iter().fold(SignSet::ZERO, |acc, e| acc.plus(e.sign())),
        Kind::Mul(v) => v.iter().fold(SignSet::POS, |acc, e| acc.times(e.sign())),
        Kind::Pow(b, q) => {
            let s = b.sign();
            if q.is_integer() {
                let even = q.numer().is_even();
                let mut out = if even {
                    let mut o = SignSet(0);
                    if s.may_be_neg() || s.may_be_pos() {
                        o = o.union(SignSet::POS);
                    }
                    if s.may_be_zero() {
                        o = o.union(SignSet::ZERO);
                    }
                    o
                } else {
                    s
                };
                if q.is_negative() {
                    // negative power of zero is undefined; drop the zero case
                    out = SignSet(out.0 & !2);
                    if out.0 == 0 {
                        out = SignSet::ANY;
                    }
                }
                out
            } else if q.denom().is_even() {
                // even root: defined only for nonnegative base
                if q.is_negative() || !s.may_be_zero() {
                    SignSet::POS
                } else {
                    SignSet::NONNEG
                }
            } else if q.numer().is_even() {
                if s.may_be_zero() && q.is_positive() { SignSet::NONNEG } else { SignSet::POS }
            } else {
                let mut o = s;
                if q.is_negative() {
                    o = SignSet(o.0 & !2);
                }
                o
            }
        }
        Kind::Func(f, a) => {
            let s = a.sign();
            match f {
                Func::Exp => SignSet::POS,
                Func::Log => SignSet::ANY,
                Func::Abs => {
                    if s.may_be_zero() {
                        if s == SignSet::ZERO { SignSet::ZERO } else { SignSet::NONNEG }
                    } else {
                        SignSet::POS
                    }
                }
                Func::Sign => s,
                Func::Sin | Func::Cos => SignSet::ANY,
            }
        }
    }
}

trait IsEven {
    fn is_even(&self) -> bool;
}
impl IsEven for BigInt {
    fn is_even(&self) -> bool {
        num_integer::Integer::is_even(self)
    }
}

pub(crate) fn intern(kind: Kind) -> Expr {
    let hash = hash_kind(&kind);
    let shard_ix = (hash as usize) % SHARDS;
    let mut shard = INTERNER[shard_ix].lock().unwrap_or_else(|p| p.into_inner());
    if let Some(bucket) = shard.map.get_mut(&hash) {
        let mut found = None;
        bucket.retain(|w| match w.upgrade() {
            Some(n) => {
                if found.is_none() && n.kind == kind {
                    found = Some(n);
                }
                true
            }
            None => false,
        });
        if let Some(n) = found {
            return Expr(n);
        }
    }
    let sign = sign_of_kind(&kind);
    let node = Arc::new(Node { kind, hash, sign });
    shard.map.entry(hash).or_default().push(Arc::downgrade(&node));
    shard.inserts += 1;
    if shard.inserts >= SWEEP_EVERY {
        shard.inserts = 0;
        shard.map.retain(|_, b| {
            b.retain(|w| w.strong_count() > 0);
            !b.is_empty()
        });
    }
    Expr(node)
}

impl Expr {
    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }
    pub fn sign(&self) -> SignSet {
        self.0.sign
    }
    pub fn fingerprint(&self) -> u64 {
        self.0.hash
    }
    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }
    pub fn as_const(&self) -> Option<&Q> {
        match &self.0.kind {
            Kind::Const(q) => Some(q),
            _ => None,
        }
    }
    pub fn is_zero_literal(&self) -> bool {
        matches!(&self.0.kind, Kind::Const(q) if q.is_zero())
    }
    pub fn is_one_literal(&self) -> bool {
        matches!(&self.0.kind, Kind::Const(q) if q.is_one())
    }
    pub fn children(&self) -> Vec<Expr> {
        match &self.0.kind {
            Kind::Const(_) | Kind::Var(_) => vec![],
            Kind::Add(v) | Kind::Mul(v) => v.clone(),
            Kind::Pow(b, _) => vec![b.clone()],
            Kind::Func(_, a) => vec![a.clone()],
        }
    }
    /// Number of leaves (constants and variables) in the tree view.
    pub fn leaf_count(&self) -> usize {
        match &self.0.kind {
            Kind::Const(_) | Kind::Var(_) => 1,
            Kind::Add(v) => v.iter().map(|e| e.leaf_count()).sum(),
            Kind::Mul(v) => {
                // a leading sign is notation for subtraction, not a leaf
                let skip = v[0].as_const().is_some_and(|c| c.abs().is_one());
                v.iter().skip(usize::from(skip)).map(|e| e.leaf_count()).sum()
            }
            Kind::Pow(b, q) => b.leaf_count() + usize::from(!q.is_integer() || !q.is_one()),
            Kind::Func(_, a) => a.leaf_count(),
        }
    }
}

fn rank(k: &Kind) -> u8 {
    match k {
        Kind::Const(_) => 0,
        Kind::Var(_) => 1,
        Kind::Pow(..) => 1,
        Kind::Func(..) => 2,
        Kind::Mul(_) => 3,
        Kind::Add(_) => 4,
    }
}

fn base_exp(e: &Expr) -> (&Expr, Q) {
    match e.kind() {
        Kind::Pow(b, q) => (b, q.clone()),
        _ => (e, Q::one()),
    }
}

/// Deterministic structural total order used to canonicalize sums and products.
pub fn canonical_cmp(a: &Expr, b: &Expr) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let (ka, kb) = (a.kind(), b.kind());
    let (ra, rb) = (rank(ka), rank(kb));
    if ra != rb {
        return ra.cmp(&rb);
    }
    match (ka, kb) {
        (Kind::Const(x), Kind::Const(y)) => x.cmp(y),
        (Kind::Var(_) | Kind::Pow(..), Kind::Var(_) | Kind::Pow(..)) => {
            let (ba, ea) = base_exp(a);
            let (bb, eb) = base_exp(b);
            if ba == a && bb == b {
                // both plain variables
                if let (Kind::Var(x), Kind::Var(y)) = (ka, kb) {
                    return x.cmp(y);
                }
            }
            let c = if ba == a || bb == b {
                match (ba.kind(), bb.kind()) {
                    (Kind::Var(x), Kind::Var(y)) => x.cmp(y),
                    _ => canonical_cmp(ba, bb),
                }
            } else {
                canonical_cmp(ba, bb)
            };
            c.then_with(|| ea.cmp(&eb))
        }
        (Kind::Func(f, x), Kind::Func(g, y)) => f.cmp(g).then_with(|| canonical_cmp(x, y)),
        (Kind::Mul(x), Kind::Mul(y)) | (Kind::Add(x), Kind::Add(y)) => {
            // compare from the most significant end
            let mut i = x.iter().rev();
            let mut j = y.iter().rev();
            loop {
                match (i.next(), j.next()) {
                    (Some(p), Some(q)) => {
                        let c = canonical_cmp(p, q);
                        if c != Ordering::Equal {
                            return c;
                        }
                    }
                    (None, Some(_)) => return Ordering::Less,
                    (Some(_), None) => return Ordering::Greater,
                    (None, None) => return Ordering::Equal,
                }
            }
        }
        _ => a.0.hash.cmp(&b.0.hash),
    }
}
