//! Seeded generators for random test data: expression trees, polynomials,
//! forms and metrics. Everything is deterministic in the seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{increasing_indices, Chart, KForm, SymTensor2, VectorField};
use crate::exprcore::{qr, Expr, ExprMatrix, Symbol};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_q<R: Rng>(rng: &mut R) -> Expr {
    let n: i64 = rng.random_range(-4..=4);
    let d: i64 = rng.random_range(1..=3);
    Expr::rational(n, d)
}

pub fn nonzero_q<R: Rng>(rng: &mut R) -> Expr {
    loop {
        let c = small_q(rng);
        if !c.is_zero_literal() {
            return c;
        }
    }
}

/// Random polynomial in `vars` with at most `terms` monomials of total degree ≤ `deg`.
pub fn polynomial<R: Rng>(rng: &mut R, vars: &[Symbol], deg: u32, terms: usize) -> Expr {
    let mut out = Vec::new();
    for _ in 0..terms {
        let mut m = vec![nonzero_q(rng)];
        let d = rng.random_range(0..=deg);
        for _ in 0..d {
            if vars.is_empty() {
                break;
            }
            let v = &vars[rng.random_range(0..vars.len())];
            m.push(Expr::var(v));
        }
        out.push(Expr::mul_all(m));
    }
    Expr::add_all(out)
}

/// Random expression tree of depth at most `depth`. Functions are applied only
/// where they stay smooth: logs and roots of positive arguments, abs and sign of
/// sign-definite ones, exponentials of bounded arguments.
pub fn tree<R: Rng>(rng: &mut R, vars: &[Symbol], depth: u32) -> Expr {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return if vars.is_empty() || rng.random_bool(0.3) {
            small_q(rng)
        } else {
            Expr::var(&vars[rng.random_range(0..vars.len())])
        };
    }
    let sub = |rng: &mut R| tree(rng, vars, depth - 1);
    match rng.random_range(0..11) {
        0 | 1 => sub(rng) + sub(rng),
        2 => sub(rng) - sub(rng),
        3 | 4 => sub(rng) * sub(rng),
        5 => {
            let a = sub(rng);
            let b = sub(rng);
            a / (Expr::one() + &b * &b)
        }
        6 => sub(rng).powi(rng.random_range(2..=3)),
        7 => sub(rng).sin(),
        8 => sub(rng).cos(),
        9 => {
            let a = sub(rng);
            let pos = Expr::one() + &a * &a;
            match rng.random_range(0..4) {
                0 => pos.log(),
                1 => pos.sqrt(),
                2 => (-pos).abs(),
                _ => pos.pow_q(qr(-1, 2)),
            }
        }
        _ => sub(rng).sin().exp(),
    }
}


/// Random polynomial k-form; each coefficient has up to `terms` monomials.
pub fn form<R: Rng>(rng: &mut R, chart: &Arc<Chart>, k: usize, deg: u32, terms: usize) -> KForm {
    let vars = chart.coords().to_vec();
    let entries = increasing_indices(chart.dim(), k)
        .into_iter()
        .map(|idx| (idx, polynomial(rng, &vars, deg, terms)))
        .collect();
    KForm::from_terms(chart, k, entries).expect("valid indices")
}

pub fn vector_field<R: Rng>(rng: &mut R, chart: &Arc<Chart>, deg: u32, terms: usize) -> VectorField {
    let vars = chart.coords().to_vec();
    let comps = (0..chart.dim()).map(|_| polynomial(rng, &vars, deg, terms)).collect();
    VectorField::new(chart, comps).expect("matching dimension")
}

/// Positive-definite metric I + v vᵀ with polynomial v.
pub fn metric<R: Rng>(rng: &mut R, chart: &Arc<Chart>, deg: u32) -> SymTensor2 {
    let vars = chart.coords().to_vec();
    let v: Vec<Expr> = (0..chart.dim()).map(|_| polynomial(rng, &vars, deg, 2)).collect();
    let n = chart.dim();
    let m = ExprMatrix::from_fn(n, n, |i, j| {
        let base = if i == j { Expr::one() } else { Expr::zero() };
        base + &v[i] * &v[j]
    });
    SymTensor2::new(chart, m).expect("symmetric by construction")
}
