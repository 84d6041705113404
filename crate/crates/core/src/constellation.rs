//! Signal sets, binary labelings and label-subset queries.
//!
//! A [`Constellation`] is a normalized complex signal set with `2^m` points;
//! a [`Labeling`] is a bijection between `m`-bit labels and point indices.
//! [`Alphabet`] bundles both together with precomputed bit tables and the
//! subsets `X_b^j` used by every bit metric.
//!
//! Labels are written most significant bit first: bit position 1 is the
//! leftmost character of the label string. [`subset`] and the text file
//! format use one-based positions; methods on [`Alphabet`] take zero-based
//! positions.

use std::fmt;
use std::io::BufRead;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Layout of a constellation, used to pick the matching Gray labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Points on the unit circle, index `k` at angle `2πk/M`.
    Psk,
    /// Square grid; index `i * side + q` has in-phase level `i` and quadrature level `q`.
    Qam { side: usize },
    /// Loaded from a file.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    points: Vec<Complex<T>>,
    bits: usize,
    name: String,
    geometry: Geometry,
}

fn log2_exact(order: usize) -> Option<usize> {
    (order >= 2 && order.is_power_of_two()).then(|| order.trailing_zeros() as usize)
}

impl<T: Scalar> Constellation<T> {
    /// `M`-PSK with points `exp(i2πk/M)`.
    pub fn psk(order: usize) -> Result<Self> {
        let bits = log2_exact(order)
            .ok_or_else(|| Error::invalid(format!("PSK order {order} is not a power of two ≥ 2")))?;
        let m = T::from_usize_lossy(order);
        let points = (0..order)
            .map(|k| {
                if order == 2 {
                    // keep BPSK exactly on the real axis
                    return Complex::new(if k == 0 { T::one() } else { -T::one() }, T::zero());
                }
                if order == 4 {
                    let (re, im) = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][k];
                    return Complex::new(T::lit(re), T::lit(im));
                }
                let phase = T::TAU() * T::from_usize_lossy(k) / m;
                Complex::new(phase.cos(), phase.sin())
            })
            .collect();
        let name = match order {
            2 => "bpsk".to_string(),
            _ => format!("psk{order}"),
        };
        Ok(Constellation { points, bits, name, geometry: Geometry::Psk })
    }

    /// Square `M`-QAM on the grid `{±1, ±3, ...}²`, scaled to unit energy.
    pub fn qam(order: usize) -> Result<Self> {
        let bits = log2_exact(order)
            .filter(|b| b % 2 == 0)
            .ok_or_else(|| Error::invalid(format!("QAM order {order} is not a square power of two")))?;
        let side = 1usize << (bits / 2);
        // mean of (2i - side + 1)^2 over one axis is (side^2 - 1)/3
        let energy = 2.0 * ((side * side - 1) as f64) / 3.0;
        let scale = T::lit(energy).sqrt().recip();
        let level = |i: usize| T::lit(2.0 * i as f64 - (side as f64 - 1.0)) * scale;
        let points = (0..side)
            .flat_map(|i| (0..side).map(move |q| (i, q)))
            .map(|(i, q)| Complex::new(level(i), level(q)))
            .collect();
        let name = match order {
            4 => "qpsk".to_string(),
            _ => format!("qam{order}"),
        };
        Ok(Constellation { points, bits, name, geometry: Geometry::Qam { side } })
    }

    /// Arbitrary signal set, rescaled to unit average energy.
    ///
    /// Returns the constellation and the factor that was applied to the points.
    pub fn from_points(name: impl Into<String>, points: Vec<Complex<T>>) -> Result<(Self, T)> {
        let bits = log2_exact(points.len()).ok_or_else(|| {
            Error::invalid(format!("{} points is not a power of two ≥ 2", points.len()))
        })?;
        for (i, a) in points.iter().enumerate() {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::invalid(format!("point {i} is not finite")));
            }
            if points[..i].iter().any(|b| b == a) {
                return Err(Error::invalid(format!("point {i} duplicates an earlier point")));
            }
        }
        let energy = mean_energy(&points);
        if energy <= T::zero() {
            return Err(Error::invalid("constellation has zero energy"));
        }
        let scale = energy.sqrt().recip();
        let points = points.into_iter().map(|p| p * scale).collect();
        let constellation = Constellation { points, bits, name: name.into(), geometry: Geometry::Custom };
        Ok((constellation, scale))
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex<T> {
        self.points[index]
    }

    /// Bits per symbol, `m`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Number of points, `2^m`.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn average_energy(&self) -> T {
        mean_energy(&self.points)
    }

    /// Pairs of adjacent points: consecutive ring positions for PSK,
    /// horizontal and vertical grid neighbors for QAM, nothing for custom sets.
    pub fn neighbors(&self) -> Vec<(usize, usize)> {
        match self.geometry {
            Geometry::Psk if self.order() == 2 => vec![(0, 1)],
            Geometry::Psk => (0..self.order()).map(|k| (k, (k + 1) % self.order())).collect(),
            Geometry::Qam { side } => {
                let mut pairs = Vec::with_capacity(2 * side * (side - 1));
                for i in 0..side {
                    for q in 0..side {
                        if i + 1 < side {
                            pairs.push((i * side + q, (i + 1) * side + q));
                        }
                        if q + 1 < side {
                            pairs.push((i * side + q, i * side + q + 1));
                        }
                    }
                }
                pairs
            }
            Geometry::Custom => Vec::new(),
        }
    }
}

fn mean_energy<T: Scalar>(points: &[Complex<T>]) -> T {
    let total = points.iter().fold(T::zero(), |acc, p| acc + p.norm_sqr());
    total / T::from_usize_lossy(points.len())
}

#[inline]
fn gray(k: usize) -> u32 {
    (k ^ (k >> 1)) as u32
}

/// Bijection between `m`-bit labels and point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    bits: usize,
    name: String,
    label_of: Vec<u32>,
    point_of: Vec<usize>,
}

impl Labeling {
    /// Builds a labeling from the label of every point, in point order.
    pub fn new(name: impl Into<String>, bits: usize, label_of: Vec<u32>) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::invalid(format!("{bits} bits per symbol is out of range 1..=16")));
        }
        let order = 1usize << bits;
        if label_of.len() != order {
            return Err(Error::invalid(format!(
                "labeling has {} entries, expected {order}",
                label_of.len()
            )));
        }
        let mut point_of = vec![usize::MAX; order];
        for (point, &label) in label_of.iter().enumerate() {
            let slot = point_of
                .get_mut(label as usize)
                .ok_or_else(|| Error::invalid(format!("label {label} does not fit in {bits} bits")))?;
            if *slot != usize::MAX {
                return Err(Error::invalid(format!("label {label} is assigned twice")));
            }
            *slot = point;
        }
        Ok(Labeling { bits, name: name.into(), label_of, point_of })
    }

    /// Binary reflected Gray code in ring order: point `k` carries `k ^ (k >> 1)`.
    pub fn brgc(bits: usize) -> Result<Self> {
        if bits == 0 {
            return Err(Error::invalid("Gray labeling needs at least one bit"));
        }
        Self::new("brgc", bits, (0..1usize << bits).map(gray).collect())
    }

    /// Per-axis Gray labeling of a square QAM grid: in-phase bits first, then quadrature bits.
    pub fn brgc_qam(bits: usize) -> Result<Self> {
        if bits == 0 || !bits.is_multiple_of(2) {
            return Err(Error::invalid(format!("square QAM Gray labeling needs an even bit count, got {bits}")));
        }
        let half = bits / 2;
        let side = 1usize << half;
        let labels = (0..side)
            .flat_map(|i| (0..side).map(move |q| (gray(i) << half) | gray(q)))
            .collect();
        Self::new("brgc", bits, labels)
    }

    /// Gray labeling matched to the constellation layout.
    pub fn brgc_for<T: Scalar>(constellation: &Constellation<T>) -> Result<Self> {
        match constellation.geometry() {
            Geometry::Qam { .. } => Self::brgc_qam(constellation.bits()),
            Geometry::Psk => Self::brgc(constellation.bits()),
            Geometry::Custom => Err(Error::Unsupported(
                "Gray labeling is only defined for built-in PSK and QAM layouts".into(),
            )),
        }
    }

    /// Point `k` carries label `k`.
    pub fn natural(bits: usize) -> Result<Self> {
        Self::new("natural", bits, (0..1u32 << bits).collect())
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn label(&self, point: usize) -> u32 {
        self.label_of[point]
    }

    pub fn point(&self, label: u32) -> usize {
        self.point_of[label as usize]
    }

    /// Bit at zero-based position `j` (position 0 is the leftmost label bit).
    #[inline]
    pub fn bit(&self, point: usize, j: usize) -> u8 {
        ((self.label_of[point] >> (self.bits - 1 - j)) & 1) as u8
    }

    pub fn bitstring(&self, point: usize) -> String {
        (0..self.bits).map(|j| if self.bit(point, j) == 1 { '1' } else { '0' }).collect()
    }
}

/// Indices of the points whose label has value `b` at one-based position `j`.
pub fn subset<T: Scalar>(
    constellation: &Constellation<T>,
    labeling: &Labeling,
    j: usize,
    b: u8,
) -> Result<Vec<usize>> {
    if labeling.bits() != constellation.bits() {
        return Err(Error::invalid("labeling and constellation disagree on bits per symbol"));
    }
    if j == 0 || j > labeling.bits() {
        return Err(Error::invalid(format!("bit position {j} outside 1..={}", labeling.bits())));
    }
    if b > 1 {
        return Err(Error::invalid(format!("bit value {b} is not binary")));
    }
    Ok((0..constellation.order()).filter(|&x| labeling.bit(x, j - 1) == b).collect())
}

/// A constellation together with its labeling and precomputed label tables.
#[derive(Debug, Clone)]
pub struct Alphabet<T> {
    constellation: Constellation<T>,
    labeling: Labeling,
    bit_table: Vec<u8>,
    subsets: Vec<[Vec<usize>; 2]>,
}

impl<T: Scalar> Alphabet<T> {
    pub fn new(constellation: Constellation<T>, labeling: Labeling) -> Result<Self> {
        let m = constellation.bits();
        if labeling.bits() != m {
            return Err(Error::invalid(format!(
                "labeling has {} bits but the constellation has {m}",
                labeling.bits()
            )));
        }
        let order = constellation.order();
        let mut bit_table = Vec::with_capacity(order * m);
        for x in 0..order {
            bit_table.extend((0..m).map(|j| labeling.bit(x, j)));
        }
        let subsets = (0..m)
            .map(|j| {
                let pick = |b| (0..order).filter(|&x| labeling.bit(x, j) == b).collect();
                [pick(0), pick(1)]
            })
            .collect();
        Ok(Alphabet { constellation, labeling, bit_table, subsets })
    }

    /// Built-in constellation with its Gray labeling.
    pub fn gray(constellation: Constellation<T>) -> Result<Self> {
        let labeling = Labeling::brgc_for(&constellation)?;
        Self::new(constellation, labeling)
    }

    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.constellation.bits()
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.constellation.order()
    }

    #[inline]
    pub fn point(&self, index: usize) -> Complex<T> {
        self.constellation.points[index]
    }

    /// Bit of point `x` at zero-based position `j`.
    #[inline]
    pub fn bit(&self, x: usize, j: usize) -> u8 {
        self.bit_table[x * self.bits() + j]
    }

    /// All `m` label bits of point `x`.
    #[inline]
    pub fn bits_of(&self, x: usize) -> &[u8] {
        let m = self.bits();
        &self.bit_table[x * m..(x + 1) * m]
    }

    /// `X_b^j` for zero-based position `j`.
    #[inline]
    pub fn subset(&self, j: usize, b: u8) -> &[usize] {
        &self.subsets[j][b as usize]
    }

    /// Point whose label equals that of `x` with bit `j` (zero-based) set to `b`.
    #[inline]
    pub fn with_bit(&self, x: usize, j: usize, b: u8) -> usize {
        let shift = self.bits() - 1 - j;
        let label = self.labeling.label(x);
        let label = (label & !(1 << shift)) | ((b as u32) << shift);
        self.labeling.point(label)
    }
}

impl<T: Scalar> fmt::Display for Alphabet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.constellation.name(), self.labeling.name())
    }
}

/// Reads a labeled constellation in the text format `<bitstring> <re> <im>`,
/// one symbol per line. Blank lines and lines starting with `#` are skipped.
///
/// Points are rescaled to unit average energy; the applied factor is returned.
pub fn read_alphabet<T: Scalar, R: BufRead>(name: &str, reader: R) -> Result<(Alphabet<T>, T)> {
    let mut bits = None;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        }
        let label_str = fields[0];
        if !label_str.chars().all(|c| c == '0' || c == '1') {
            return Err(parse_err(format!("label {label_str:?} is not a bit string")));
        }
        match bits {
            None => bits = Some(label_str.len()),
            Some(m) if m != label_str.len() => {
                return Err(parse_err(format!("label {label_str:?} has {} bits, expected {m}", label_str.len())))
            }
            _ => {}
        }
        let label = u32::from_str_radix(label_str, 2).map_err(|e| parse_err(e.to_string()))?;
        let coord = |s: &str| -> Result<T> {
            let v: f64 = s.parse().map_err(|_| parse_err(format!("{s:?} is not a number")))?;
            Ok(T::lit(v))
        };
        points.push(Complex::new(coord(fields[1])?, coord(fields[2])?));
        labels.push(label);
    }
    let bits = bits.ok_or_else(|| Error::Parse { line: 0, message: "no symbols found".into() })?;
    let (constellation, scale) = Constellation::from_points(name, points)?;
    if constellation.bits() != bits {
        return Err(Error::invalid(format!(
            "{} symbols do not match {bits}-bit labels",
            constellation.order()
        )));
    }
    let labeling = Labeling::new("file", bits, labels)?;
    Ok((Alphabet::new(constellation, labeling)?, scale))
}
