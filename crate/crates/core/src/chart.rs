//! Exact inference over projective dependency trees.
//!
//! All routines work on an arc score matrix `S` where `S[(h, m)]` scores the
//! arc from head `h` to modifier `m`, with the synthetic ROOT at index 0.
//! Inference never reads the diagonal or column 0; those entries are treated
//! as blocked regardless of their stored values.
//!
//! Tables are indexed by `(start, end, direction, completeness)` in log
//! space. Direction `Right` means the head of the item is its left endpoint,
//! `Left` means the head is the right endpoint. Incomplete items carry the
//! arc being built; complete items are finished half-constituents.

use thiserror::Error;

use crate::mat::Mat;

/// Finite stand-in for log(0). Kept far enough from f64::MIN that sums of a
/// few of these cannot overflow, and detected via [`is_blocked`].
pub const NEG_INF: f64 = -1e30;

/// Anything at or below this is treated as log(0).
const BLOCKED_THRESHOLD: f64 = -1e29;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const INCOMPLETE: usize = 0;
pub const COMPLETE: usize = 1;

/// Largest sentence length accepted by [`enumerate_projective`].
pub const MAX_ENUMERATION_LEN: usize = 9;

/// Per-token head indices; index 0 is the ROOT slot and is never read.
pub type HeadArray = Vec<usize>;

#[derive(Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("sentence must contain ROOT plus at least one word, got length {0}")]
    TooShort(usize),
    #[error("score matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite score for arc {head}->{modifier}")]
    NonFiniteScore { head: usize, modifier: usize },
    #[error("head array does not encode a projective tree rooted at 0")]
    InvalidTree,
    #[error("enumeration supports lengths 2..={MAX_ENUMERATION_LEN}, got {0}")]
    EnumerationTooLong(usize),
}

pub fn is_blocked(log_weight: f64) -> bool {
    log_weight <= BLOCKED_THRESHOLD
}

fn clamp_blocked(x: f64) -> f64 {
    if x <= BLOCKED_THRESHOLD {
        NEG_INF
    } else {
        x
    }
}

/// Numerically stable log(exp(a) + exp(b)) over the blocked representation.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if is_blocked(hi) {
        return NEG_INF;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp of a term buffer.
fn logsumexp(terms: &[f64]) -> f64 {
    let mut hi = NEG_INF;
    for &x in terms {
        if x > hi {
            hi = x;
        }
    }
    if is_blocked(hi) {
        return NEG_INF;
    }
    let mut acc = 0.0;
    for &x in terms {
        acc += (x - hi).exp();
    }
    hi + acc.ln()
}

/// Arc score with the diagonal and ROOT-as-modifier column blocked.
#[inline]
fn arc(scores: &Mat, head: usize, modifier: usize) -> f64 {
    if modifier == 0 || head == modifier {
        NEG_INF
    } else {
        scores[(head, modifier)]
    }
}

/// One `(start, end, direction, completeness)` log-weight table.
#[derive(Clone, Debug)]
pub struct Chart {
    len: usize,
    data: Vec<f64>,
}

impl Chart {
    fn new(len: usize) -> Self {
        Chart { len, data: vec![NEG_INF; len * len * 4] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn idx(&self, s: usize, t: usize, dir: usize, comp: usize) -> usize {
        debug_assert!(s <= t && t < self.len && dir < 2 && comp < 2);
        ((s * self.len + t) * 2 + dir) * 2 + comp
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize, dir: usize, comp: usize) -> f64 {
        self.data[self.idx(s, t, dir, comp)]
    }

    #[inline]
    fn set(&mut self, s: usize, t: usize, dir: usize, comp: usize, value: f64) {
        let i = self.idx(s, t, dir, comp);
        self.data[i] = clamp_blocked(value);
    }

    /// `cell = logaddexp(cell, value)`, the ⊕ accumulation of the outside pass.
    #[inline]
    fn acc(&mut self, s: usize, t: usize, dir: usize, comp: usize, value: f64) {
        let i = self.idx(s, t, dir, comp);
        self.data[i] = logaddexp(self.data[i], value);
    }
}

fn check_scores(scores: &Mat) -> Result<usize, ChartError> {
    let len = scores.rows();
    if scores.cols() != len {
        return Err(ChartError::NotSquare { rows: scores.rows(), cols: scores.cols() });
    }
    if len < 2 {
        return Err(ChartError::TooShort(len));
    }
    for h in 0..len {
        for m in 1..len {
            if h != m && scores[(h, m)].is_nan() {
                return Err(ChartError::NonFiniteScore { head: h, modifier: m });
            }
        }
    }
    Ok(len)
}

/// Inside table plus the log partition function over all projective trees.
#[derive(Clone, Debug)]
pub struct Inside {
    pub alpha: Chart,
    pub log_z: f64,
}

/// Inside pass: log-sum-exp over all projective analyses of every span.
///
/// Spans with a ROOT-side left endpoint never host leftward items, so ROOT
/// can never become a modifier.
pub fn inside(scores: &Mat) -> Result<Inside, ChartError> {
    let len = check_scores(scores)?;
    let mut alpha = Chart::new(len);
    for s in 0..len {
        if s > 0 {
            alpha.set(s, s, LEFT, COMPLETE, 0.0);
        }
        alpha.set(s, s, RIGHT, COMPLETE, 0.0);
    }
    let mut terms = Vec::with_capacity(len);
    for k in 1..len {
        for s in 0..len - k {
            let t = s + k;
            // Incomplete items: both directions share the same split terms.
            terms.clear();
            for u in s..t {
                terms.push(alpha.get(s, u, RIGHT, COMPLETE) + alpha.get(u + 1, t, LEFT, COMPLETE));
            }
            let spans = logsumexp(&terms);
            if s > 0 {
                alpha.set(s, t, LEFT, INCOMPLETE, spans + arc(scores, t, s));
            }
            alpha.set(s, t, RIGHT, INCOMPLETE, spans + arc(scores, s, t));
            if s > 0 {
                terms.clear();
                for u in s..t {
                    terms.push(alpha.get(s, u, LEFT, COMPLETE) + alpha.get(u, t, LEFT, INCOMPLETE));
                }
                alpha.set(s, t, LEFT, COMPLETE, logsumexp(&terms));
            }
            terms.clear();
            for u in s..t {
                terms.push(alpha.get(s, u + 1, RIGHT, INCOMPLETE) + alpha.get(u + 1, t, RIGHT, COMPLETE));
            }
            alpha.set(s, t, RIGHT, COMPLETE, logsumexp(&terms));
        }
    }
    let log_z = alpha.get(0, len - 1, RIGHT, COMPLETE);
    Ok(Inside { alpha, log_z })
}

/// Outside pass matching [`inside`]; `beta[0, len-1, RIGHT, COMPLETE] = 0`.
///
/// Within one span the complete cells are distributed first: the incomplete
/// cells of the same span receive their completion context from them before
/// being read.
pub fn outside(scores: &Mat, inside: &Inside) -> Chart {
    let alpha = &inside.alpha;
    let len = alpha.len();
    let mut beta = Chart::new(len);
    beta.set(0, len - 1, RIGHT, COMPLETE, 0.0);
    for k in (1..len).rev() {
        for s in 0..len - k {
            let t = s + k;
            let b_rc = beta.get(s, t, RIGHT, COMPLETE);
            if !is_blocked(b_rc) {
                for u in s..t {
                    beta.acc(s, u + 1, RIGHT, INCOMPLETE, b_rc + alpha.get(u + 1, t, RIGHT, COMPLETE));
                }
                for u in s..t {
                    beta.acc(u + 1, t, RIGHT, COMPLETE, b_rc + alpha.get(s, u + 1, RIGHT, INCOMPLETE));
                }
            }
            if s > 0 {
                let b_lc = beta.get(s, t, LEFT, COMPLETE);
                if !is_blocked(b_lc) {
                    for u in s..t {
                        beta.acc(s, u, LEFT, COMPLETE, b_lc + alpha.get(u, t, LEFT, INCOMPLETE));
                    }
                    for u in s..t {
                        beta.acc(u, t, LEFT, INCOMPLETE, b_lc + alpha.get(s, u, LEFT, COMPLETE));
                    }
                }
            }
            let b_ri = beta.get(s, t, RIGHT, INCOMPLETE);
            if !is_blocked(b_ri) {
                let sc = arc(scores, s, t);
                for u in s..t {
                    beta.acc(s, u, RIGHT, COMPLETE, b_ri + alpha.get(u + 1, t, LEFT, COMPLETE) + sc);
                }
                for u in s..t {
                    beta.acc(u + 1, t, LEFT, COMPLETE, b_ri + alpha.get(s, u, RIGHT, COMPLETE) + sc);
                }
            }
            if s > 0 {
                let b_li = beta.get(s, t, LEFT, INCOMPLETE);
                if !is_blocked(b_li) {
                    let sc = arc(scores, t, s);
                    for u in s..t {
                        beta.acc(s, u, RIGHT, COMPLETE, b_li + alpha.get(u + 1, t, LEFT, COMPLETE) + sc);
                    }
                    for u in s..t {
                        beta.acc(u + 1, t, LEFT, COMPLETE, b_li + alpha.get(s, u, RIGHT, COMPLETE) + sc);
                    }
                }
            }
        }
    }
    beta
}

/// Posterior arc probabilities `P[(h, m)]` from matched inside/outside tables.
///
/// Every column `m >= 1` sums to one over heads; column 0 and the diagonal
/// stay zero.
pub fn arc_marginals(inside: &Inside, beta: &Chart) -> Mat {
    let alpha = &inside.alpha;
    let len = alpha.len();
    let log_z = inside.log_z;
    let mut p = Mat::zeros(len, len);
    for s in 0..len - 1 {
        for t in s + 1..len {
            let ri = alpha.get(s, t, RIGHT, INCOMPLETE) + beta.get(s, t, RIGHT, INCOMPLETE);
            if !is_blocked(ri) {
                p[(s, t)] = (ri - log_z).exp().clamp(0.0, 1.0);
            }
            if s > 0 {
                let li = alpha.get(s, t, LEFT, INCOMPLETE) + beta.get(s, t, LEFT, INCOMPLETE);
                if !is_blocked(li) {
                    p[(t, s)] = (li - log_z).exp().clamp(0.0, 1.0);
                }
            }
        }
    }
    p
}

/// Convenience: inside + outside + arc marginals in one call.
pub fn marginals(scores: &Mat) -> Result<(Mat, f64), ChartError> {
    let ins = inside(scores)?;
    let beta = outside(scores, &ins);
    let log_z = ins.log_z;
    Ok((arc_marginals(&ins, &beta), log_z))
}

/// Highest-scoring projective tree and its score (max-sum variant of the
/// inside recurrences with backpointers).
///
/// Ties break toward the lowest split index: a candidate replaces the
/// incumbent only on strict improvement.
pub fn eisner_decode(scores: &Mat) -> Result<(HeadArray, f64), ChartError> {
    let len = check_scores(scores)?;
    let (val, split) = viterbi_chart(scores, 0);
    let mut heads = vec![0usize; len];
    backtrace(&val, &split, 0, len - 1, RIGHT, COMPLETE, &mut heads);
    Ok((heads, val.get(0, len - 1, RIGHT, COMPLETE)))
}

/// [`eisner_decode`] restricted to trees where ROOT has exactly one child:
/// a word-only chart (position 0 excluded, so leftward items are legal
/// everywhere) is topped by a single ROOT arc whose child heads both the
/// left-complete and right-complete halves of the sentence.
pub fn eisner_decode_single_root(scores: &Mat) -> Result<(HeadArray, f64), ChartError> {
    let len = check_scores(scores)?;
    let (val, split) = viterbi_chart(scores, 1);
    let mut best = f64::NEG_INFINITY;
    let mut best_child = 1usize;
    for child in 1..len {
        let cand = arc(scores, 0, child)
            + val.get(1, child, LEFT, COMPLETE)
            + val.get(child, len - 1, RIGHT, COMPLETE);
        if cand > best {
            best = cand;
            best_child = child;
        }
    }
    let mut heads = vec![0usize; len];
    backtrace(&val, &split, 1, best_child, LEFT, COMPLETE, &mut heads);
    backtrace(&val, &split, best_child, len - 1, RIGHT, COMPLETE, &mut heads);
    heads[best_child] = 0;
    Ok((heads, best))
}

/// Max-sum chart over positions `first..len-1`. With `first = 0` position 0
/// is ROOT and never takes a head; with `first = 1` every covered position
/// is an ordinary word.
fn viterbi_chart(scores: &Mat, first: usize) -> (Chart, Vec<usize>) {
    let len = scores.rows();
    let mut val = Chart::new(len);
    // Backpointers store the winning split index u per cell.
    let mut split = vec![0usize; len * len * 4];
    for s in first..len {
        if s > 0 {
            val.set(s, s, LEFT, COMPLETE, 0.0);
        }
        val.set(s, s, RIGHT, COMPLETE, 0.0);
    }
    for k in 1..len - first {
        for s in first..len - k {
            let t = s + k;
            let mut best = f64::NEG_INFINITY;
            let mut best_u = s;
            for u in s..t {
                let cand = val.get(s, u, RIGHT, COMPLETE) + val.get(u + 1, t, LEFT, COMPLETE);
                if cand > best {
                    best = cand;
                    best_u = u;
                }
            }
            if s > 0 {
                val.set(s, t, LEFT, INCOMPLETE, best + arc(scores, t, s));
                split[val.idx(s, t, LEFT, INCOMPLETE)] = best_u;
            }
            val.set(s, t, RIGHT, INCOMPLETE, best + arc(scores, s, t));
            split[val.idx(s, t, RIGHT, INCOMPLETE)] = best_u;
            if s > 0 {
                let mut best = f64::NEG_INFINITY;
                let mut best_u = s;
                for u in s..t {
                    let cand = val.get(s, u, LEFT, COMPLETE) + val.get(u, t, LEFT, INCOMPLETE);
                    if cand > best {
                        best = cand;
                        best_u = u;
                    }
                }
                val.set(s, t, LEFT, COMPLETE, best);
                split[val.idx(s, t, LEFT, COMPLETE)] = best_u;
            }
            let mut best = f64::NEG_INFINITY;
            let mut best_u = s;
            for u in s..t {
                let cand = val.get(s, u + 1, RIGHT, INCOMPLETE) + val.get(u + 1, t, RIGHT, COMPLETE);
                if cand > best {
                    best = cand;
                    best_u = u;
                }
            }
            val.set(s, t, RIGHT, COMPLETE, best);
            split[val.idx(s, t, RIGHT, COMPLETE)] = best_u;
        }
    }
    (val, split)
}

fn backtrace(val: &Chart, split: &[usize], s: usize, t: usize, dir: usize, comp: usize, heads: &mut [usize]) {
    if s == t {
        return;
    }
    let u = split[val.idx(s, t, dir, comp)];
    match (dir, comp) {
        (RIGHT, INCOMPLETE) => {
            heads[t] = s;
            backtrace(val, split, s, u, RIGHT, COMPLETE, heads);
            backtrace(val, split, u + 1, t, LEFT, COMPLETE, heads);
        }
        (LEFT, INCOMPLETE) => {
            heads[s] = t;
            backtrace(val, split, s, u, RIGHT, COMPLETE, heads);
            backtrace(val, split, u + 1, t, LEFT, COMPLETE, heads);
        }
        (LEFT, COMPLETE) => {
            backtrace(val, split, s, u, LEFT, COMPLETE, heads);
            backtrace(val, split, u, t, LEFT, INCOMPLETE, heads);
        }
        (RIGHT, COMPLETE) => {
            backtrace(val, split, s, u + 1, RIGHT, INCOMPLETE, heads);
            backtrace(val, split, u + 1, t, RIGHT, COMPLETE, heads);
        }
        _ => unreachable!(),
    }
}

/// Sum of the arc scores of a projective tree.
pub fn tree_score(scores: &Mat, heads: &[usize]) -> Result<f64, ChartError> {
    if heads.len() != scores.rows() || scores.cols() != scores.rows() {
        return Err(ChartError::NotSquare { rows: scores.rows(), cols: scores.cols() });
    }
    if !is_projective_tree(heads) {
        return Err(ChartError::InvalidTree);
    }
    Ok(heads.iter().enumerate().skip(1).map(|(m, &h)| scores[(h, m)]).sum())
}

/// True iff `heads` encodes a projective dependency tree rooted at index 0:
/// every word reaches ROOT through its head chain and every arc spans only
/// descendants of its head. Multiple ROOT children are allowed.
pub fn is_projective_tree(heads: &[usize]) -> bool {
    let len = heads.len();
    if len < 2 {
        return false;
    }
    for (m, &h) in heads.iter().enumerate().skip(1) {
        if h >= len || h == m {
            return false;
        }
    }
    for m in 1..len {
        let mut cur = m;
        let mut steps = 0;
        while cur != 0 {
            cur = heads[cur];
            steps += 1;
            if steps > len {
                return false;
            }
        }
    }
    for m in 1..len {
        let h = heads[m];
        let (lo, hi) = if h < m { (h, m) } else { (m, h) };
        for k in lo + 1..hi {
            if !is_descendant(heads, k, h) {
                return false;
            }
        }
    }
    true
}

fn is_descendant(heads: &[usize], mut node: usize, ancestor: usize) -> bool {
    for _ in 0..heads.len() {
        if node == ancestor {
            return true;
        }
        if node == 0 {
            return false;
        }
        node = heads[node];
    }
    false
}

/// All projective trees over words `1..len-1`, in lexicographic head-array
/// order. Test and self-check support; guarded against combinatorial blowup.
pub fn enumerate_projective(len: usize) -> Result<Vec<HeadArray>, ChartError> {
    if len < 2 {
        return Err(ChartError::TooShort(len));
    }
    if len > MAX_ENUMERATION_LEN {
        return Err(ChartError::EnumerationTooLong(len));
    }
    let words = len - 1;
    let mut trees = Vec::new();
    let mut heads = vec![0usize; len];
    // Odometer over head assignments; heads[m] skips m itself.
    loop {
        if is_projective_tree(&heads) {
            trees.push(heads.clone());
        }
        let mut m = words;
        loop {
            if m == 0 {
                return Ok(trees);
            }
            heads[m] += 1;
            if heads[m] == m {
                heads[m] += 1;
            }
            if heads[m] < len {
                break;
            }
            heads[m] = 0;
            m -= 1;
        }
    }
}
