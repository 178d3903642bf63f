//! Torus geometry, bit-packed spin configurations and rectangle painting.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `l1 x l2` periodic lattice. Both sides are even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Torus {
    l1: usize,
    l2: usize,
}

impl Torus {
    pub fn new(l1: usize, l2: usize) -> Result<Self> {
        if l1 < 2 || l2 < 2 || l1 % 2 != 0 || l2 % 2 != 0 {
            return Err(Error::Geometry { l1, l2 });
        }
        Ok(Torus { l1, l2 })
    }

    /// Parses `RxC` (also accepts `R×C`).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (a, b) = s
            .split_once(['x', 'X', '×'])
            .ok_or_else(|| Error::Parse(format!("geometry must look like 6x2, got {s:?}")))?;
        let l1 = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad row count {a:?}")))?;
        let l2 = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad column count {b:?}")))?;
        Torus::new(l1, l2)
    }

    pub fn rows(&self) -> usize {
        self.l1
    }

    pub fn cols(&self) -> usize {
        self.l2
    }

    pub fn sites(&self) -> usize {
        self.l1 * self.l2
    }

    pub fn words(&self) -> usize {
        self.sites().div_ceil(64)
    }

    pub fn index(&self, s: Site) -> usize {
        s.i1 * self.l2 + s.i2
    }

    pub fn site(&self, i: usize) -> Site {
        Site {
            i1: i / self.l2,
            i2: i % self.l2,
        }
    }

    /// Site at signed coordinates, reduced modulo the torus.
    pub fn wrap(&self, i1: i64, i2: i64) -> Site {
        Site {
            i1: i1.rem_euclid(self.l1 as i64) as usize,
            i2: i2.rem_euclid(self.l2 as i64) as usize,
        }
    }

    /// Up, down, left, right. On a side of length 2 the two wrap neighbours
    /// along that side are the same site and appear twice.
    pub fn neighbors(&self, i: usize) -> [usize; 4] {
        let (r, c) = (i / self.l2, i % self.l2);
        let up = (r + self.l1 - 1) % self.l1;
        let down = (r + 1) % self.l1;
        let left = (c + self.l2 - 1) % self.l2;
        let right = (c + 1) % self.l2;
        [
            up * self.l2 + c,
            down * self.l2 + c,
            r * self.l2 + left,
            r * self.l2 + right,
        ]
    }

    /// Lattice (L1) distance with wrap-around.
    pub fn distance(&self, a: Site, b: Site) -> usize {
        let d1 = a.i1.abs_diff(b.i1);
        let d2 = a.i2.abs_diff(b.i2);
        d1.min(self.l1 - d1) + d2.min(self.l2 - d2)
    }

    /// Neighbour table for every site, row-major.
    pub fn neighbor_table(&self) -> Vec<[usize; 4]> {
        (0..self.sites()).map(|i| self.neighbors(i)).collect()
    }
}

impl fmt::Display for Torus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.l1, self.l2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub i1: usize,
    pub i2: usize,
}

impl Site {
    pub fn new(i1: usize, i2: usize) -> Self {
        Site { i1, i2 }
    }
}

/// Fill patterns. Chessboard parity is global: `ChessEven` is `+1` where
/// `i1 + i2` is even, so `(0,0)` is `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Plus,
    Minus,
    ChessEven,
    ChessOdd,
}

impl Pattern {
    pub fn spin_at(self, s: Site) -> i8 {
        match self {
            Pattern::Plus => 1,
            Pattern::Minus => -1,
            Pattern::ChessEven => {
                if (s.i1 + s.i2) % 2 == 0 {
                    1
                } else {
                    -1
                }
            }
            Pattern::ChessOdd => {
                if (s.i1 + s.i2) % 2 == 0 {
                    -1
                } else {
                    1
                }
            }
        }
    }

    pub fn is_chess(self) -> bool {
        matches!(self, Pattern::ChessEven | Pattern::ChessOdd)
    }

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Plus => "plus",
            Pattern::Minus => "minus",
            Pattern::ChessEven => "chess_even",
            Pattern::ChessOdd => "chess_odd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "plus" | "+" => Ok(Pattern::Plus),
            "minus" | "-" => Ok(Pattern::Minus),
            "chess_even" | "ce" => Ok(Pattern::ChessEven),
            "chess_odd" | "co" => Ok(Pattern::ChessOdd),
            other => Err(Error::Parse(format!("unknown pattern {other:?}"))),
        }
    }

    pub const ALL: [Pattern; 4] = [
        Pattern::Plus,
        Pattern::Minus,
        Pattern::ChessEven,
        Pattern::ChessOdd,
    ];
}

/// A `{-1,+1}` configuration, one bit per site (bit set = `+1`).
/// Bits past the last site are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    torus: Torus,
    words: Vec<u64>,
}

impl SpinConfig {
    pub fn minus(torus: Torus) -> Self {
        SpinConfig {
            torus,
            words: vec![0; torus.words()],
        }
    }

    pub fn named(torus: Torus, kind: Pattern) -> Self {
        let mut c = SpinConfig::minus(torus);
        for i in 0..torus.sites() {
            if kind.spin_at(torus.site(i)) > 0 {
                c.set(i, 1);
            }
        }
        c
    }

    /// Builds the configuration whose bit pattern is `id` (requires `n <= 64`).
    pub fn from_state_id(torus: Torus, id: u64) -> Result<Self> {
        let n = torus.sites();
        if n > 64 {
            return Err(Error::TooLarge { sites: n, cap: 64 });
        }
        if n < 64 && id >> n != 0 {
            return Err(Error::Param(format!("state id {id:#x} has bits past site {n}")));
        }
        Ok(SpinConfig {
            torus,
            words: vec![id],
        })
    }

    pub fn from_words(torus: Torus, words: Vec<u64>) -> Result<Self> {
        if words.len() != torus.words() {
            return Err(Error::Param(format!(
                "expected {} words, got {}",
                torus.words(),
                words.len()
            )));
        }
        let c = SpinConfig { torus, words };
        if !c.padding_is_zero() {
            return Err(Error::Param("bits set past the last site".into()));
        }
        Ok(c)
    }

    fn padding_is_zero(&self) -> bool {
        let n = self.torus.sites();
        let rem = n % 64;
        rem == 0 || self.words[self.words.len() - 1] >> rem == 0
    }

    pub fn state_id(&self) -> Option<u64> {
        (self.words.len() == 1).then(|| self.words[0])
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn sites(&self) -> usize {
        self.torus.sites()
    }

    #[inline]
    pub fn is_plus(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        if self.is_plus(i) {
            1
        } else {
            -1
        }
    }

    pub fn spin_at(&self, s: Site) -> i8 {
        self.spin(self.torus.index(s))
    }

    #[inline]
    pub fn set(&mut self, i: usize, spin: i8) {
        let mask = 1u64 << (i & 63);
        if spin > 0 {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Sum of spins.
    pub fn magnetization(&self) -> i64 {
        2 * self.count_plus() as i64 - self.sites() as i64
    }

    /// Sites where `self` and `other` differ.
    pub fn diff_sites(&self, other: &SpinConfig) -> Vec<usize> {
        (0..self.sites())
            .filter(|&i| self.is_plus(i) != other.is_plus(i))
            .collect()
    }

    pub fn same_torus(&self, other: &SpinConfig) -> Result<()> {
        if self.torus != other.torus {
            return Err(Error::GeometryMismatch(
                self.torus.to_string(),
                other.torus.to_string(),
            ));
        }
        Ok(())
    }

    /// Rows of `+`/`-` separated by newlines, no trailing newline.
    pub fn to_grid(&self) -> String {
        let mut s = String::with_capacity(self.sites() + self.torus.rows());
        for r in 0..self.torus.rows() {
            if r > 0 {
                s.push('\n');
            }
            for c in 0..self.torus.cols() {
                s.push(if self.spin_at(Site::new(r, c)) > 0 { '+' } else { '-' });
            }
        }
        s
    }

    /// Inverse of [`to_grid`](Self::to_grid). Blank lines and surrounding
    /// whitespace are ignored; `\r` is tolerated.
    pub fn parse_grid(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::Parse("empty grid".into()));
        }
        let l2 = rows[0].chars().count();
        for (k, r) in rows.iter().enumerate() {
            if r.chars().count() != l2 {
                return Err(Error::Parse(format!("row {k} has a different length")));
            }
        }
        let torus = Torus::new(rows.len(), l2).map_err(|e| Error::Parse(e.to_string()))?;
        let mut c = SpinConfig::minus(torus);
        for (r, row) in rows.iter().enumerate() {
            for (col, ch) in row.chars().enumerate() {
                match ch {
                    '+' => c.set(torus.index(Site::new(r, col)), 1),
                    '-' => {}
                    other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
                }
            }
        }
        Ok(c)
    }

    /// The bit word as hex, most significant digit first, zero padded to
    /// `ceil(n/4)` digits.
    pub fn hex_bits(&self) -> String {
        let n = self.sites();
        let digits = n.div_ceil(4);
        let mut s = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut v = 0u8;
            for b in 0..4 {
                let i = 4 * d + b;
                if i < n && self.is_plus(i) {
                    v |= 1 << b;
                }
            }
            s.push(char::from_digit(v as u32, 16).unwrap());
        }
        s
    }

    /// `RxC:hexbits`.
    pub fn to_hex(&self) -> String {
        format!("{}:{}", self.torus, self.hex_bits())
    }

    pub fn parse_hex_bits(torus: Torus, hex: &str) -> Result<Self> {
        let hex = hex.trim();
        let n = torus.sites();
        let digits = n.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::Parse(format!(
                "expected {digits} hex digits for {torus}, got {}",
                hex.len()
            )));
        }
        let mut c = SpinConfig::minus(torus);
        for (k, ch) in hex.chars().enumerate() {
            let v = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {ch:?}")))?;
            let d = digits - 1 - k;
            for b in 0..4 {
                if v >> b & 1 == 1 {
                    let i = 4 * d + b;
                    if i >= n {
                        return Err(Error::Parse("bits set past the last site".into()));
                    }
                    c.set(i, 1);
                }
            }
        }
        Ok(c)
    }

    pub fn parse_hex(text: &str) -> Result<Self> {
        let (geo, bits) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse("hex dump must look like RxC:bits".into()))?;
        let torus = Torus::parse(geo).map_err(|e| Error::Parse(e.to_string()))?;
        SpinConfig::parse_hex_bits(torus, bits)
    }
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinConfig({})", self.to_hex())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `l` rows by `m` columns.
    Horizontal,
    /// `m` rows by `l` columns.
    Vertical,
}

/// Rectangle with sides `l <= m`, anchored at its top-left site. It may wrap
/// around the torus; if it spans a full dimension it is a strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub anchor: Site,
    pub l: usize,
    pub m: usize,
    pub orientation: Orientation,
}

impl Rect {
    pub fn new(anchor: Site, l: usize, m: usize, orientation: Orientation) -> Result<Self> {
        if l == 0 || l > m {
            return Err(Error::Param(format!("rectangle needs 1 <= l <= m, got {l}x{m}")));
        }
        Ok(Rect {
            anchor,
            l,
            m,
            orientation,
        })
    }

    /// Rectangle from explicit row/column extents.
    pub fn with_extent(anchor: Site, rows: usize, cols: usize) -> Result<Self> {
        if rows <= cols {
            Rect::new(anchor, rows, cols, Orientation::Horizontal)
        } else {
            Rect::new(anchor, cols, rows, Orientation::Vertical)
        }
    }

    pub fn rows(&self) -> usize {
        match self.orientation {
            Orientation::Horizontal => self.l,
            Orientation::Vertical => self.m,
        }
    }

    pub fn cols(&self) -> usize {
        match self.orientation {
            Orientation::Horizontal => self.m,
            Orientation::Vertical => self.l,
        }
    }

    pub fn fits(&self, torus: Torus) -> bool {
        self.rows() <= torus.rows()
            && self.cols() <= torus.cols()
            && self.anchor.i1 < torus.rows()
            && self.anchor.i2 < torus.cols()
    }

    pub fn is_strip(&self, torus: Torus) -> bool {
        self.rows() == torus.rows() || self.cols() == torus.cols()
    }

    pub fn check(&self, torus: Torus) -> Result<()> {
        if !self.fits(torus) {
            return Err(Error::Constraint(format!(
                "rectangle {}x{} at ({},{}) does not fit {torus}",
                self.rows(),
                self.cols(),
                self.anchor.i1,
                self.anchor.i2
            )));
        }
        Ok(())
    }

    /// Site at offset `(dr, dc)` from the anchor, wrapped.
    pub fn at(&self, torus: Torus, dr: i64, dc: i64) -> Site {
        torus.wrap(self.anchor.i1 as i64 + dr, self.anchor.i2 as i64 + dc)
    }

    pub fn sites(&self, torus: Torus) -> Vec<Site> {
        let mut v = Vec::with_capacity(self.rows() * self.cols());
        for dr in 0..self.rows() as i64 {
            for dc in 0..self.cols() as i64 {
                v.push(self.at(torus, dr, dc));
            }
        }
        v
    }

    pub fn contains(&self, torus: Torus, s: Site) -> bool {
        let dr = (s.i1 + torus.rows() - self.anchor.i1) % torus.rows();
        let dc = (s.i2 + torus.cols() - self.anchor.i2) % torus.cols();
        dr < self.rows() && dc < self.cols()
    }

    /// Smallest lattice distance between a site of `self` and a site of `other`.
    pub fn distance(&self, torus: Torus, other: &Rect) -> usize {
        let a = self.sites(torus);
        let b = other.sites(torus);
        let mut best = usize::MAX;
        for x in &a {
            for y in &b {
                best = best.min(torus.distance(*x, *y));
                if best == 0 {
                    return 0;
                }
            }
        }
        best
    }
}

/// Overwrites the rectangle region of `base` with `fill` (global parity).
pub fn paint_rectangle(base: &SpinConfig, rect: &Rect, fill: Pattern) -> Result<SpinConfig> {
    let torus = base.torus();
    rect.check(torus)?;
    let mut out = base.clone();
    for s in rect.sites(torus) {
        out.set(torus.index(s), fill.spin_at(s));
    }
    Ok(out)
}

/// Whether two filled rectangles interact. They are non-interacting when
/// one of these holds:
/// same chessboard parity or both plus at distance at least 3;
/// opposite chessboard parities at distance 1;
/// a chessboard next to a plus rectangle at distance 1 with facing sides of equal length.
pub fn rectangles_interacting(
    torus: Torus,
    r1: &Rect,
    f1: Pattern,
    r2: &Rect,
    f2: Pattern,
) -> Result<bool> {
    if f1 == Pattern::Minus || f2 == Pattern::Minus {
        return Err(Error::Param("minus rectangles are not classified".into()));
    }
    r1.check(torus)?;
    r2.check(torus)?;
    let d = r1.distance(torus, r2);
    let non_interacting = match (f1, f2) {
        (a, b) if a == b => d >= 3,
        (Pattern::ChessEven, Pattern::ChessOdd) | (Pattern::ChessOdd, Pattern::ChessEven) => d == 1,
        (c, Pattern::Plus) | (Pattern::Plus, c) if c.is_chess() => {
            d == 1 && facing_sides_equal(torus, r1, r2)
        }
        _ => false,
    };
    Ok(!non_interacting)
}

fn facing_sides_equal(torus: Torus, a: &Rect, b: &Rect) -> bool {
    // Side by side (a column of one touches a column of the other) compares
    // row extents; stacked compares column extents.
    let side_by_side = a.sites(torus).iter().any(|x| {
        b.sites(torus)
            .iter()
            .any(|y| x.i1 == y.i1 && torus.distance(*x, *y) == 1)
    });
    if side_by_side {
        a.rows() == b.rows()
    } else {
        a.cols() == b.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_double_count_on_short_side() {
        let t = Torus::new(4, 2).unwrap();
        let nb = t.neighbors(0);
        assert_eq!(nb[2], nb[3]);
        assert_ne!(nb[0], nb[1]);
    }

    #[test]
    fn hex_padding_rejected() {
        let t = Torus::new(2, 2).unwrap();
        assert!(SpinConfig::parse_hex_bits(t, "f").is_ok());
        let t6 = Torus::new(6, 2).unwrap();
        assert!(SpinConfig::parse_hex_bits(t6, "fff").is_ok());
        assert!(SpinConfig::from_state_id(t, 1 << 4).is_err());
    }

    #[test]
    fn rect_wraps() {
        let t = Torus::new(4, 4).unwrap();
        let r = Rect::new(Site::new(3, 3), 2, 2, Orientation::Horizontal).unwrap();
        assert!(r.contains(t, Site::new(0, 0)));
        assert!(!r.contains(t, Site::new(1, 1)));
        assert!(!r.is_strip(t));
    }
}
