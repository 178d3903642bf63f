//! Reference paths out of the local minima other than `-1`, `c` and `+1`:
//! critical length, `Gamma^PCA`, `V*` and the per-case path builders.
//!
//! Builders are parametric: each case places its droplets or strips at
//! fixed anchors, applies one seed move or a column of pinned moves, and
//! then iterates `T` until it reaches a trap.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{transition_level, virtual_energy_level, Level};
use crate::error::{Error, Result};
use crate::kernel::{
    check_field, field_is_degenerate, is_trap, pinned_map_fix, pinned_map_flip, zero_temp_map,
};
use crate::lattice::{paint_rectangle, Pattern, Rect, Site, SpinConfig, Torus};

/// `lambda = floor(2/h) + 1`.
pub fn critical_length(h: f64) -> Result<usize> {
    check_field(h)?;
    Ok((2.0 / h).floor() as usize + 1)
}

/// `-2 h lambda^2 + 2 lambda (4 + h) - 2 h`.
pub fn gamma_pca(h: f64) -> Result<f64> {
    let l = critical_length(h)? as f64;
    Ok(-2.0 * h * l * l + 2.0 * l * (4.0 + h) - 2.0 * h)
}

/// `2 (2 - h)`.
pub fn v_star(h: f64) -> Result<f64> {
    check_field(h)?;
    Ok(2.0 * (2.0 - h))
}

/// Largest side strictly below `2/h`.
pub fn subcritical_side(h: f64) -> Result<usize> {
    check_field(h)?;
    Ok((2.0 / h).ceil() as usize - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    B1,
    B2,
    B3,
    D1,
    D2,
    D3,
    D4,
    D5,
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
}

impl CaseId {
    pub const ALL: [CaseId; 21] = [
        CaseId::A1,
        CaseId::A2,
        CaseId::A3,
        CaseId::A4,
        CaseId::A5,
        CaseId::A6,
        CaseId::B1,
        CaseId::B2,
        CaseId::B3,
        CaseId::D1,
        CaseId::D2,
        CaseId::D3,
        CaseId::D4,
        CaseId::D5,
        CaseId::E1,
        CaseId::E2,
        CaseId::E3,
        CaseId::E4,
        CaseId::E5,
        CaseId::E6,
        CaseId::E7,
    ];

    pub fn name(self) -> &'static str {
        use CaseId::*;
        match self {
            A1 => "A1",
            A2 => "A2",
            A3 => "A3",
            A4 => "A4",
            A5 => "A5",
            A6 => "A6",
            B1 => "B1",
            B2 => "B2",
            B3 => "B3",
            D1 => "D1",
            D2 => "D2",
            D3 => "D3",
            D4 => "D4",
            D5 => "D5",
            E1 => "E1",
            E2 => "E2",
            E3 => "E3",
            E4 => "E4",
            E5 => "E5",
            E6 => "E6",
            E7 => "E7",
        }
    }

    pub fn is_strip(self) -> bool {
        self.name().starts_with('E')
    }

    /// Quoted ceiling `V*_sigma` as an exact level, for side `l` of the
    /// rectangle the path acts on.
    pub fn quoted_ceiling(self, l: usize) -> Level {
        use CaseId::*;
        let erosion = Level::new(0, 2 * (l as i64 - 1));
        let growth = Level::new(4, -2);
        match self {
            A1 | A3 | A5 | B1 | D1 | D3 | D4 => erosion,
            E1 => Level::new(0, 2),
            _ => growth,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown case '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "site", rename_all = "snake_case")]
pub enum Move {
    T,
    Fix(usize),
    Flip(usize),
}

pub fn apply_move(config: &SpinConfig, mv: Move) -> SpinConfig {
    match mv {
        Move::T => zero_temp_map(config),
        Move::Fix(j) => pinned_map_fix(config, j),
        Move::Flip(j) => pinned_map_flip(config, j),
    }
}

/// A path with its per-step costs, transition energies and height.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTrace {
    pub h: f64,
    pub states: Vec<SpinConfig>,
    pub step_delta: Vec<f64>,
    pub step_transition_energy: Vec<f64>,
    pub height: f64,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    geometry: String,
    h: f64,
    states: Vec<String>,
    step_delta: Vec<f64>,
    step_transition_energy: Vec<f64>,
    height: f64,
}

impl PathTrace {
    pub fn from_states(h: f64, states: Vec<SpinConfig>) -> Result<Self> {
        check_field(h)?;
        let first = states
            .first()
            .ok_or_else(|| Error::Param("empty path".into()))?;
        let mut step_delta = Vec::with_capacity(states.len().saturating_sub(1));
        let mut step_te = Vec::with_capacity(step_delta.capacity());
        for w in states.windows(2) {
            let te = transition_level(&w[0], &w[1])?;
            let d = te - virtual_energy_level(&w[0]);
            step_delta.push(d.value(h));
            step_te.push(te.value(h));
        }
        let height = if step_te.is_empty() {
            virtual_energy_level(first).value(h)
        } else {
            step_te.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        Ok(PathTrace {
            h,
            states,
            step_delta,
            step_transition_energy: step_te,
            height,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn start(&self) -> &SpinConfig {
        &self.states[0]
    }

    pub fn end(&self) -> &SpinConfig {
        self.states.last().unwrap()
    }

    /// Index of the first step achieving the height.
    pub fn argmax_step(&self) -> Option<usize> {
        self.step_transition_energy
            .iter()
            .position(|&e| e == self.height)
    }

    pub fn to_json(&self) -> String {
        let j = TraceJson {
            geometry: self.states[0].torus().to_string(),
            h: self.h,
            states: self.states.iter().map(|s| s.hex_bits()).collect(),
            step_delta: self.step_delta.clone(),
            step_transition_energy: self.step_transition_energy.clone(),
            height: self.height,
        };
        serde_json::to_string_pretty(&j).expect("trace serialises")
    }

    /// Parses a trace and checks the stored numbers against a recomputation.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: TraceJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let torus = Torus::parse(&j.geometry)?;
        let states = j
            .states
            .iter()
            .map(|s| SpinConfig::parse_hex_bits(torus, s))
            .collect::<Result<Vec<_>>>()?;
        let t = PathTrace::from_states(j.h, states)?;
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
        };
        if !close(&t.step_delta, &j.step_delta)
            || !close(&t.step_transition_energy, &j.step_transition_energy)
            || (t.height - j.height).abs() > 1e-9
        {
            return Err(Error::Parse("trace values disagree with its states".into()));
        }
        Ok(t)
    }

    /// ASCII frames, one grid per state, annotated with the step energies.
    pub fn storyboard(&self) -> String {
        let mut out = String::new();
        for (k, s) in self.states.iter().enumerate() {
            out.push_str(&format!("frame {k}"));
            if k > 0 {
                out.push_str(&format!(
                    "  delta={:.6} transition={:.6}",
                    self.step_delta[k - 1],
                    self.step_transition_energy[k - 1]
                ));
            }
            out.push('\n');
            out.push_str(&s.to_grid());
            out.push('\n');
        }
        out
    }
}

/// Inputs of one case builder. `l` and `m` are the sides of the rectangle
/// the path acts on (for strip cases `l` is a strip width); `inner` is the
/// plus island of the B cases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    pub case: CaseId,
    pub torus: Torus,
    pub l: usize,
    pub m: usize,
    pub inner: Option<(usize, usize)>,
}

impl CaseParams {
    /// The fixed parameterisation used by the default suite.
    pub fn standard(case: CaseId, h: f64) -> Result<Self> {
        use CaseId::*;
        let lam = critical_length(h)?;
        let sub = subcritical_side(h)?;
        let side = (lam + sub + 10).max(16);
        let torus = Torus::new(side + side % 2, side + side % 2)?;
        let (l, m, inner) = match case {
            A1 | A3 | A5 | D1 | D3 | D4 => (sub, sub + 1, None),
            A2 | A4 | A6 | D2 | D5 => (lam, lam + 1, None),
            B1 => {
                if sub >= 3 {
                    (sub, sub + 3, Some((sub - 1, sub - 1)))
                } else {
                    (2, 6, Some((2, 2)))
                }
            }
            B2 => (lam + 2, lam + 4, Some((lam, lam))),
            B3 => {
                let lo = lam.max(sub + 2);
                (lo, lo + 2, Some((sub, sub)))
            }
            E1 | E2 | E3 => (1, torus.rows(), None),
            E4 | E5 | E6 => (6, torus.rows(), None),
            E7 => (4, torus.rows(), None),
        };
        Ok(CaseParams {
            case,
            torus,
            l,
            m,
            inner,
        })
    }

    /// Side conditions of the case against `h`.
    pub fn validate(&self, h: f64) -> Result<()> {
        use CaseId::*;
        let lam = critical_length(h)?;
        let fail = |msg: String| Err(Error::Constraint(format!("{}: {msg}", self.case)));
        let torus = self.torus;
        if self.l == 0 || self.l > self.m {
            return fail(format!("need 1 <= l <= m, got {}x{}", self.l, self.m));
        }
        if !self.case.is_strip() {
            let need = self.m + 3;
            if torus.rows() < need || torus.cols() < need {
                return fail(format!("torus {torus} too small, need both sides >= {need}"));
            }
        }
        match self.case {
            A1 | A3 | A5 | D1 | D3 | D4 if self.l >= lam => {
                fail(format!("requires l < lambda = {lam}, got l = {}", self.l))
            }
            A1 | A3 | A5 | D1 | D3 | D4 if self.l < 2 => fail("requires l >= 2".into()),
            A2 | A4 | A6 | D2 | D5 if self.l < lam => {
                fail(format!("requires l >= lambda = {lam}, got l = {}", self.l))
            }
            B1 | B2 | B3 => {
                let (il, im) = self
                    .inner
                    .ok_or_else(|| Error::Constraint(format!("{}: inner rectangle required", self.case)))?;
                if il > im || il == 0 || il > self.l || im > self.m || (il, im) == (self.l, self.m) {
                    return fail("inner rectangle must sit strictly inside the outer one".into());
                }
                match self.case {
                    B1 if self.l >= lam => fail(format!("outer side must be < lambda = {lam}")),
                    B2 if il < lam => fail(format!("inner side must be >= lambda = {lam}")),
                    B3 if il >= lam || self.l < lam => {
                        fail(format!("needs inner < lambda = {lam} <= outer"))
                    }
                    _ => Ok(()),
                }
            }
            E1 | E2 | E3 if self.l != 1 => fail("strip width must be 1".into()),
            E4 | E5 | E6 | E7 if self.l < 2 || self.l + 3 > torus.cols() => {
                fail(format!("strip width {} does not fit with a second wide strip", self.l))
            }
            E1 | E2 | E3 | E4 | E5 | E6 | E7 if torus.cols() < 8 => fail("torus too narrow for strips".into()),
            _ => Ok(()),
        }
    }
}

/// A built path together with the quoted per-case values.
#[derive(Clone, Debug)]
pub struct ReferencePath {
    pub params: CaseParams,
    pub moves: Vec<Move>,
    pub trace: PathTrace,
    /// Ceiling quoted for the case, as an exact level.
    pub quoted_ceiling: Level,
    /// Energy drop quoted for the A cases.
    pub quoted_drop: Option<Level>,
    /// Structural match of the terminal state, where a target shape is known.
    pub terminal_matches: Option<bool>,
}

const ANCHOR: (usize, usize) = (3, 3);

fn site(torus: Torus, r: i64, c: i64) -> usize {
    torus.index(torus.wrap(r, c))
}

fn rect(r: usize, c: usize, rows: usize, cols: usize) -> Result<Rect> {
    Rect::with_extent(Site::new(r, c), rows, cols)
}

fn paint(base: &SpinConfig, r: usize, c: usize, rows: usize, cols: usize, fill: Pattern) -> Result<SpinConfig> {
    paint_rectangle(base, &rect(r, c, rows, cols)?, fill)
}

/// Plain rectangle geometry in row/column terms.
#[derive(Clone, Copy, Debug)]
struct Block {
    r: usize,
    c: usize,
    rows: usize,
    cols: usize,
}

impl Block {
    fn contains(&self, torus: Torus, r: i64, c: i64) -> bool {
        let s = torus.wrap(r, c);
        let dr = (s.i1 + torus.rows() - self.r) % torus.rows();
        let dc = (s.i2 + torus.cols() - self.c) % torus.cols();
        dr < self.rows && dc < self.cols
    }

    fn corners(&self) -> Vec<(i64, i64)> {
        let (r, c) = (self.r as i64, self.c as i64);
        let (r2, c2) = (r + self.rows as i64 - 1, c + self.cols as i64 - 1);
        let mut v = vec![(r, c), (r, c2), (r2, c), (r2, c2)];
        v.sort_by_key(|&(a, b)| (a, b));
        v.dedup();
        v
    }
}

fn outside_neighbours(torus: Torus, b: &Block, r: i64, c: i64) -> Vec<usize> {
    [(-1, 0), (1, 0), (0, -1), (0, 1)]
        .iter()
        .filter(|(dr, dc)| !b.contains(torus, r + dr, c + dc))
        .map(|(dr, dc)| site(torus, r + dr, c + dc))
        .collect()
}

/// Erosion of the column slice through the first eligible corner, with
/// one `T` first when no corner is eligible.
fn erode(
    start: &SpinConfig,
    b: Block,
    pinned: fn(usize) -> Move,
    eligible: &dyn Fn(&SpinConfig, i64, i64) -> bool,
) -> Result<Vec<Move>> {
    let torus = start.torus();
    let mut moves = Vec::new();
    let mut cur = start.clone();
    let mut pick = b.corners().into_iter().find(|&(r, c)| eligible(&cur, r, c));
    if pick.is_none() {
        moves.push(Move::T);
        cur = zero_temp_map(&cur);
        pick = b.corners().into_iter().find(|&(r, c)| eligible(&cur, r, c));
    }
    let (r, c) = pick.ok_or_else(|| Error::Internal("no eligible corner after T".into()))?;
    let step = if r == b.r as i64 { 1 } else { -1 };
    for k in 0..b.rows as i64 - 1 {
        moves.push(pinned(site(torus, r + step * k, c)));
    }
    Ok(moves)
}

/// One seed move on the column just right of the block, at the first row
/// where `pick(inside, outside)` holds.
fn grow_right(
    start: &SpinConfig,
    b: Block,
    seed: fn(usize) -> Move,
    pick: &dyn Fn(&SpinConfig, usize, usize) -> bool,
) -> Result<Vec<Move>> {
    let torus = start.torus();
    let last = (b.c + b.cols - 1) as i64;
    for dr in 0..b.rows as i64 {
        let r = b.r as i64 + dr;
        let j = site(torus, r, last);
        let j1 = site(torus, r, last + 1);
        if pick(start, j, j1) {
            return Ok(vec![seed(j1)]);
        }
    }
    Err(Error::Internal("no eligible growth site".into()))
}

fn run_moves(start: &SpinConfig, moves: &[Move]) -> Vec<SpinConfig> {
    let mut states = vec![start.clone()];
    for &mv in moves {
        let next = apply_move(states.last().unwrap(), mv);
        states.push(next);
    }
    states
}

/// Appends `T` steps until the last state is a trap.
fn settle(states: &mut Vec<SpinConfig>, moves: &mut Vec<Move>) -> Result<()> {
    let cap = 4 * states[0].sites() + 8;
    for _ in 0..cap {
        let last = states.last().unwrap();
        if is_trap(last) {
            return Ok(());
        }
        let next = zero_temp_map(last);
        states.push(next);
        moves.push(Move::T);
    }
    Err(Error::Internal("T iteration did not reach a trap".into()))
}

fn both_parities(f: impl Fn(Pattern) -> Result<SpinConfig>) -> Result<Vec<SpinConfig>> {
    Ok(vec![f(Pattern::ChessEven)?, f(Pattern::ChessOdd)?])
}

/// Builds the start configuration, the move list and the terminal shapes.
fn construct(p: &CaseParams, h: f64) -> Result<(SpinConfig, Vec<Move>, Option<Vec<SpinConfig>>)> {
    use CaseId::*;
    let torus = p.torus;
    let minus = SpinConfig::minus(torus);
    let plus = SpinConfig::named(torus, Pattern::Plus);
    let chess = SpinConfig::named(torus, Pattern::ChessEven);
    let (r0, c0) = ANCHOR;
    let main = Block {
        r: r0,
        c: c0,
        rows: p.l,
        cols: p.m,
    };
    let spin = |c: &SpinConfig, r: i64, col: i64| c.spin(site(torus, r, col));
    let minus_corner = |c: &SpinConfig, r: i64, col: i64| spin(c, r, col) == -1;
    let plus_corner = |c: &SpinConfig, r: i64, col: i64| spin(c, r, col) == 1;
    let corner_in = |b: Block| {
        move |c: &SpinConfig, r: i64, col: i64| {
            spin(c, r, col) == 1 && outside_neighbours(torus, &b, r, col).iter().all(|&j| c.spin(j) == -1)
        }
    };
    // Column removed by an erosion, for the terminal shapes.
    let eroded_block = |moves: &[Move], b: Block| -> Block {
        let col = moves
            .iter()
            .find_map(|m| match m {
                Move::Fix(j) | Move::Flip(j) => Some(torus.site(*j).i2),
                Move::T => None,
            })
            .unwrap();
        let c = if col == b.c { b.c + 1 } else { b.c };
        Block {
            cols: b.cols - 1,
            c: c % torus.cols(),
            ..b
        }
    };
    let lower = r0 + p.l + 4;
    match p.case {
        A1 => {
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::ChessEven)?;
            let mv = erode(&s, main, Move::Fix, &minus_corner)?;
            let e = eroded_block(&mv, main);
            let t = both_parities(|f| paint(&minus, e.r, e.c, e.rows, e.cols, f))?;
            Ok((s, mv, Some(t)))
        }
        A3 => {
            let s = paint(&chess, r0, c0, p.l, p.m, Pattern::Plus)?;
            let mv = erode(&s, main, Move::Flip, &corner_in(main))?;
            let e = eroded_block(&mv, main);
            let t = both_parities(|f| {
                let bg = SpinConfig::named(torus, f);
                paint(&bg, e.r, e.c, e.rows, e.cols, Pattern::Plus)
            })?;
            Ok((s, mv, Some(t)))
        }
        A5 => {
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::Plus)?;
            let mv = erode(&s, main, Move::Flip, &plus_corner)?;
            let e = eroded_block(&mv, main);
            let slice_c = if e.c == main.c { main.c + main.cols - 1 } else { main.c };
            let t = both_parities(|f| {
                let a = paint(&minus, e.r, e.c, e.rows, e.cols, Pattern::Plus)?;
                paint(&a, main.r, slice_c, main.rows, 1, f)
            })?;
            Ok((s, mv, Some(t)))
        }
        A2 => {
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::ChessEven)?;
            let mv = grow_right(&s, main, Move::Flip, &|c, j, _| c.spin(j) == 1)?;
            let t = both_parities(|f| paint(&minus, r0, c0, p.l, p.m + 1, f))?;
            Ok((s, mv, Some(t)))
        }
        A4 => {
            let s = paint(&chess, r0, c0, p.l, p.m, Pattern::Plus)?;
            let mv = grow_right(&s, main, Move::Fix, &|c, _, j1| c.spin(j1) == 1)?;
            let t = both_parities(|f| {
                let bg = SpinConfig::named(torus, f);
                paint(&bg, r0, c0, p.l, p.m + 1, Pattern::Plus)
            })?;
            Ok((s, mv, Some(t)))
        }
        A6 => {
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::Plus)?;
            let mv = grow_right(&s, main, Move::Flip, &|_, _, _| true)?;
            let t = both_parities(|f| {
                let a = paint(&s, r0, c0 + p.m, p.l, 1, f)?;
                Ok(a)
            })?;
            Ok((s, mv, Some(t)))
        }
        B1 => {
            let (il, im) = p.inner.unwrap();
            let dc = if il >= 2 && p.l == il { (p.m - im) / 2 } else { 1 };
            let inner = Block {
                r: r0,
                c: c0 + dc,
                rows: il,
                cols: im,
            };
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::ChessEven)?;
            let s = paint(&s, inner.r, inner.c, il, im, Pattern::Plus)?;
            let mv = erode(&s, inner, Move::Flip, &corner_in(inner))?;
            Ok((s, mv, None))
        }
        B2 | B3 => {
            let (il, im) = p.inner.unwrap();
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::ChessEven)?;
            let s = paint(&s, r0 + 1, c0 + 1, il, im, Pattern::Plus)?;
            let mv = grow_right(&s, main, Move::Flip, &|c, j, _| c.spin(j) == 1)?;
            Ok((s, mv, None))
        }
        D1 => {
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::ChessEven)?;
            let s = paint(&s, lower, c0, p.l, p.m, Pattern::Plus)?;
            let b = Block { r: lower, ..main };
            let mv = erode(&s, b, Move::Flip, &plus_corner)?;
            Ok((s, mv, None))
        }
        D2 => {
            let sub = subcritical_side(h)?;
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::ChessEven)?;
            let s = paint(&s, lower, c0, sub, sub + 1, Pattern::ChessEven)?;
            let mv = grow_right(&s, main, Move::Flip, &|c, j, _| c.spin(j) == 1)?;
            Ok((s, mv, None))
        }
        D3 => {
            let s = paint(&minus, r0, c0, p.l, p.m, Pattern::ChessEven)?;
            let s = paint(&s, r0, c0 + p.m, p.l, p.m, Pattern::ChessOdd)?;
            let mv = erode(&s, main, Move::Fix, &minus_corner)?;
            Ok((s, mv, None))
        }
        D4 => {
            let s = paint(&chess, r0, c0, p.l, p.m, Pattern::Plus)?;
            let s = paint(&s, lower, c0, p.l, p.m, Pattern::Plus)?;
            let mv = erode(&s, main, Move::Flip, &corner_in(main))?;
            Ok((s, mv, None))
        }
        D5 => {
            let sub = subcritical_side(h)?;
            let s = paint(&chess, r0, c0, p.l, p.m, Pattern::Plus)?;
            let s = paint(&s, lower, c0, sub, sub + 1, Pattern::Plus)?;
            let mv = grow_right(&s, main, Move::Fix, &|c, _, j1| c.spin(j1) == 1)?;
            Ok((s, mv, None))
        }
        E1 => {
            let col = 5;
            let s = paint(&minus, 0, col, torus.rows(), 1, Pattern::ChessEven)?;
            let j = (0..torus.rows())
                .map(|r| site(torus, r as i64, col as i64))
                .find(|&j| s.spin(j) == -1)
                .unwrap();
            Ok((s, vec![Move::Fix(j)], None))
        }
        E2 => {
            let col = 5i64;
            let s = paint(&chess, 0, col as usize, torus.rows(), 1, Pattern::Plus)?;
            let j = (0..torus.rows() as i64)
                .find(|&r| spin(&s, r, col - 1) == -1 || spin(&s, r, col + 1) == -1)
                .map(|r| site(torus, r, col))
                .unwrap();
            Ok((s, vec![Move::Flip(j)], None))
        }
        E3 => {
            // Two plus strips half a torus apart, each between chessboards
            // of opposite parity.
            let half = torus.cols() / 2;
            let (a, b) = (5usize, 5 + half);
            let s = paint(&chess, 0, a + 1, torus.rows(), b - a - 1, Pattern::ChessOdd)?;
            let s = paint(&s, 0, a, torus.rows(), 1, Pattern::Plus)?;
            let s = paint(&s, 0, b, torus.rows(), 1, Pattern::Plus)?;
            let j = (0..torus.rows() as i64)
                .flat_map(|r| [(r, a as i64 - 1), (r, a as i64 + 1)])
                .find(|&(r, c)| spin(&s, r, c) == 1)
                .map(|(r, c)| site(torus, r, c))
                .unwrap();
            Ok((s, vec![Move::Fix(j)], None))
        }
        E4 | E5 => {
            let w = p.l;
            let bg = if p.case == E4 { &minus } else { &plus };
            let s = paint(bg, 0, 0, torus.rows(), w, Pattern::ChessEven)?;
            let r = (0..torus.rows() as i64)
                .find(|&r| spin(&s, r, w as i64 - 1) == 1)
                .unwrap();
            let mv = if p.case == E4 {
                Move::Flip(site(torus, r, w as i64))
            } else {
                Move::Fix(site(torus, r, w as i64 - 1))
            };
            Ok((s, vec![mv], None))
        }
        E6 => {
            let w = p.l;
            let s = paint(&minus, 0, 0, torus.rows(), w, Pattern::Plus)?;
            Ok((s, vec![Move::Flip(site(torus, 0, w as i64))], None))
        }
        E7 => {
            let w = p.l;
            let mid = (torus.cols() - w) / 2;
            let s = paint(&minus, 0, 0, torus.rows(), w, Pattern::ChessEven)?;
            let s = paint(&s, 0, w + mid, torus.rows(), torus.cols() - w - mid, Pattern::Plus)?;
            let j = site(torus, 0, (w + mid) as i64 - 1);
            Ok((s, vec![Move::Flip(j)], None))
        }
    }
}

/// Builds the path of `case` at field `h`.
pub fn build_reference_path(h: f64, case: &CaseParams) -> Result<ReferencePath> {
    case.validate(h)?;
    let (start, mut moves, terminal) = construct(case, h)?;
    if !is_trap(&start) {
        return Err(Error::Constraint(format!(
            "{}: start configuration is not a trap",
            case.case
        )));
    }
    let mut states = run_moves(&start, &moves);
    settle(&mut states, &mut moves)?;
    let terminal_matches = terminal.map(|t| t.contains(states.last().unwrap()));
    let trace = PathTrace::from_states(h, states)?;
    let l = match case.case {
        CaseId::B1 => case.inner.unwrap().0,
        _ => case.l,
    };
    let quoted_drop = match case.case {
        CaseId::A1 | CaseId::A3 | CaseId::A5 => Some(Level::new(4, -2 * l as i64)),
        CaseId::A2 | CaseId::A4 | CaseId::A6 => Some(Level::new(-4, 2 * l as i64)),
        _ => None,
    };
    Ok(ReferencePath {
        params: *case,
        moves,
        trace,
        quoted_ceiling: case.case.quoted_ceiling(l),
        quoted_drop,
        terminal_matches,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeilingReport {
    pub case: CaseId,
    pub h: f64,
    pub l: usize,
    pub m: usize,
    /// `max_k H(w_k, w_k+1) - H(w_1)`.
    pub ceiling: f64,
    pub ceiling_level: Level,
    pub argmax_step: usize,
    pub steps: usize,
    pub quoted_ceiling: f64,
    pub matches_quoted: bool,
    pub v_star: f64,
    pub gamma_pca: f64,
    pub drop: f64,
    pub drop_level: Level,
    pub quoted_drop: Option<f64>,
    pub drop_matches: Option<bool>,
    pub start_is_trap: bool,
    pub end_is_trap: bool,
    pub terminal_matches: Option<bool>,
    /// `l < 2/h` for erosion cases, `l > 2/h` for growth cases.
    pub side_condition: bool,
    pub field_degenerate: bool,
}

impl CeilingReport {
    /// Ceiling within `V*`, strictly positive drop, and the quoted
    /// drop and terminal shape where known.
    pub fn passes(&self) -> bool {
        self.ceiling <= self.v_star + 1e-12
            && self.v_star < self.gamma_pca
            && self.drop > 0.0
            && self.start_is_trap
            && self.end_is_trap
            && self.drop_matches != Some(false)
            && self.terminal_matches != Some(false)
    }
}

/// Recomputes every transition energy from the states and checks the
/// ceiling against `V*`.
pub fn verify_case_ceiling(h: f64, path: &ReferencePath) -> Result<CeilingReport> {
    let states = &path.trace.states;
    let h0 = virtual_energy_level(&states[0]);
    let mut best = None::<(Level, usize)>;
    for (k, w) in states.windows(2).enumerate() {
        let e = transition_level(&w[0], &w[1])? - h0;
        if best.map_or(true, |(b, _)| e.value(h) > b.value(h)) {
            best = Some((e, k));
        }
    }
    let (ceiling_level, argmax) = best.ok_or_else(|| Error::Param("path has no steps".into()))?;
    let drop_level = h0 - virtual_energy_level(states.last().unwrap());
    let p = &path.params;
    let l = match p.case {
        CaseId::B1 => p.inner.unwrap().0,
        _ => p.l,
    };
    let lf = l as f64;
    let side_condition = match p.case.quoted_ceiling(l) {
        q if q == Level::new(4, -2) => p.case.is_strip() || lf > 2.0 / h,
        _ => p.case.is_strip() || lf < 2.0 / h,
    };
    let report = CeilingReport {
        case: p.case,
        h,
        l: p.l,
        m: p.m,
        ceiling: ceiling_level.value(h),
        ceiling_level,
        argmax_step: argmax,
        steps: states.len() - 1,
        quoted_ceiling: path.quoted_ceiling.value(h),
        matches_quoted: ceiling_level == path.quoted_ceiling,
        v_star: v_star(h)?,
        gamma_pca: gamma_pca(h)?,
        drop: drop_level.value(h),
        drop_level,
        quoted_drop: path.quoted_drop.map(|d| d.value(h)),
        drop_matches: path.quoted_drop.map(|d| d == drop_level),
        start_is_trap: is_trap(&states[0]),
        end_is_trap: is_trap(states.last().unwrap()),
        terminal_matches: path.terminal_matches,
        side_condition,
        field_degenerate: field_is_degenerate(h),
    };
    if report.ceiling > report.v_star + 1e-12 {
        let why = if side_condition {
            "implementation fault"
        } else {
            "side condition on l versus 2/h not met"
        };
        return Err(Error::Constraint(format!(
            "{}: ceiling {} exceeds V* = {} ({why})",
            p.case, report.ceiling, report.v_star
        )));
    }
    Ok(report)
}

/// Standard suite: every case at its fixed parameterisation.
pub fn default_suite(h: f64) -> Result<Vec<(ReferencePath, CeilingReport)>> {
    CaseId::ALL
        .iter()
        .map(|&c| {
            let p = CaseParams::standard(c, h)?;
            let path = build_reference_path(h, &p)?;
            let rep = verify_case_ceiling(h, &path)?;
            Ok((path, rep))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        assert_eq!(critical_length(0.5).unwrap(), 5);
        assert_eq!(critical_length(0.9).unwrap(), 3);
        assert_eq!(critical_length(0.999).unwrap(), 3);
        assert!((gamma_pca(0.5).unwrap() - 19.0).abs() < 1e-12);
        assert!((gamma_pca(0.9).unwrap() - 11.4).abs() < 1e-12);
        assert_eq!(subcritical_side(0.5).unwrap(), 3);
        assert_eq!(subcritical_side(0.9).unwrap(), 2);
    }

    #[test]
    fn case_names_round_trip() {
        for c in CaseId::ALL {
            assert_eq!(c.name().parse::<CaseId>().unwrap(), c);
        }
    }
}
