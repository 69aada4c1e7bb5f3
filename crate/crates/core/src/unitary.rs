//! 2×2 unitary arithmetic and the phase-invariant operator distance.
//!
//! All comparisons in this crate are made modulo global phase. The distance
//! is `sqrt((2 - |tr(U†V)|) / 2)`, which lies in `[0, 1]`, is symmetric and
//! satisfies the triangle inequality.

use std::f64::consts::TAU;
use std::fmt;
use std::hash::Hasher;
use std::ops::Mul;

use fnv::FnvHasher;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance on `U†U = I` when constructing from raw entries.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Two unitaries are treated as the same gate iff their distance is below this.
pub const UNIQUENESS_EPS: f64 = 1e-10;

/// Grid width used by [`hash_key`].
pub const HASH_GRID: f64 = 1e-6;

// Components closer than this to a grid line (or a pivot threshold) are
// probed on both sides by `probe_keys`.
const GUARD_BAND: f64 = 1e-9;

const PIVOT_MODULUS: f64 = 0.5;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A single-qubit gate `[[a, b], [c, d]]`, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2 {
    m: [Complex64; 4],
}

impl Unitary2 {
    pub const IDENTITY: Unitary2 = Unitary2 {
        m: [ONE, ZERO, ZERO, ONE],
    };

    /// Builds a unitary from row-major entries, checking `U†U = I` to
    /// [`UNITARITY_TOL`] and `|det U| = 1`.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        Self::with_tolerance([a, b, c, d], UNITARITY_TOL)
    }

    /// As [`Unitary2::new`] with a caller-chosen entrywise tolerance.
    pub fn with_tolerance(m: [Complex64; 4], tol: f64) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotUnitary {
                deviation: f64::INFINITY,
            });
        }
        let u = Unitary2 { m };
        let dev = u.unitarity_deviation();
        let det_dev = (u.det().norm() - 1.0).abs();
        if dev > tol || det_dev > tol.max(1e-9) {
            return Err(Error::NotUnitary {
                deviation: dev.max(det_dev),
            });
        }
        Ok(u)
    }

    /// Wraps entries without validation. Only for values known to be unitary
    /// (products of unitaries, fixed gate tables).
    pub(crate) const fn from_raw(m: [Complex64; 4]) -> Self {
        Unitary2 { m }
    }

    /// Diagonal gate `diag(1, e^{iφ})`.
    pub fn phase(phi: f64) -> Self {
        Unitary2::from_raw([ONE, ZERO, ZERO, Complex64::from_polar(1.0, phi)])
    }

    /// The generic single-qubit gate parameterised by `(α, β, θ)`:
    ///
    /// ```text
    /// [  cos(θ/2) e^{ i(α+β)/2}   sin(θ/2) e^{ i(α−β)/2} ]
    /// [ −sin(θ/2) e^{i(−α+β)/2}   cos(θ/2) e^{i(−α−β)/2} ]
    /// ```
    pub fn from_euler(alpha: f64, beta: f64, theta: f64) -> Self {
        let (alpha, beta, theta) = (
            alpha.rem_euclid(TAU),
            beta.rem_euclid(TAU),
            theta.rem_euclid(TAU),
        );
        let (s, c) = (theta / 2.0).sin_cos();
        let sum = (alpha + beta) / 2.0;
        let diff = (alpha - beta) / 2.0;
        Unitary2::from_raw([
            Complex64::from_polar(c, sum),
            Complex64::from_polar(s, diff),
            Complex64::from_polar(-s, -diff),
            Complex64::from_polar(c, -sum),
        ])
    }

    #[inline]
    pub fn entries(&self) -> &[Complex64; 4] {
        &self.m
    }

    #[inline]
    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.m;
        Unitary2::from_raw([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    #[inline]
    pub fn det(&self) -> Complex64 {
        let [a, b, c, d] = self.m;
        a * d - b * c
    }

    /// Multiplies every entry by `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let p = Complex64::from_polar(1.0, phi);
        Unitary2::from_raw(self.m.map(|z| z * p))
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint() * *self;
        let [a, b, c, d] = p.m;
        (a - ONE)
            .norm()
            .max(b.norm())
            .max(c.norm())
            .max((d - ONE).norm())
    }

    /// `tr(self† · other)`, computed from entries without forming the product.
    #[inline]
    pub fn trace_inner(&self, other: &Unitary2) -> Complex64 {
        let (x, y) = (&self.m, &other.m);
        x[0].conj() * y[0] + x[1].conj() * y[1] + x[2].conj() * y[2] + x[3].conj() * y[3]
    }

    pub fn max_entry_diff(&self, other: &Unitary2) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_f64s(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, z) in self.m.iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        out
    }

    pub(crate) fn from_f64s_raw(v: &[f64; 8]) -> Self {
        Unitary2::from_raw(std::array::from_fn(|i| {
            Complex64::new(v[2 * i], v[2 * i + 1])
        }))
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    #[inline]
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = rhs.m;
        Unitary2::from_raw([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl<'a> Mul<&'a Unitary2> for &'a Unitary2 {
    type Output = Unitary2;

    #[inline]
    fn mul(self, rhs: &Unitary2) -> Unitary2 {
        *self * *rhs
    }
}

impl fmt::Display for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.m;
        write!(f, "[[{a:.6}, {b:.6}], [{c:.6}, {d:.6}]]")
    }
}

/// Phase-invariant distance between two single-qubit gates, in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Distance(f64);

impl Distance {
    pub const ZERO: Distance = Distance(0.0);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Distance implied by `|tr(U†V)|` for 2×2 operators.
    #[inline]
    pub fn from_abs_trace(abs_tr: f64) -> Distance {
        let x = ((2.0 - abs_tr) / 2.0).clamp(0.0, 1.0);
        Distance(x.sqrt())
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// `sqrt((2 − |tr(u†v)|) / 2)`.
///
/// Evaluated as `½·‖u − e^{iφ}v‖_F` with `e^{iφ} = conj(t)/|t|`, `t = tr(u†v)`,
/// which is the same quantity but keeps full relative precision as the distance
/// approaches zero. The direct form bottoms out near 1e-8 from cancellation
/// in `2 − |tr|`.
#[inline]
pub fn distance(u: &Unitary2, v: &Unitary2) -> Distance {
    let t = u.trace_inner(v);
    let r = t.norm();
    if r == 0.0 {
        return Distance(1.0);
    }
    let p = t.conj() / r;
    let (x, y) = (&u.m, &v.m);
    let sq = (x[0] - p * y[0]).norm_sqr()
        + (x[1] - p * y[1]).norm_sqr()
        + (x[2] - p * y[2]).norm_sqr()
        + (x[3] - p * y[3]).norm_sqr();
    Distance((sq.sqrt() / 2.0).min(1.0))
}

/// True iff `d(u, w) ≤ d(u, v) + d(v, w)` up to a 1e-12 slack.
pub fn triangle_check(u: &Unitary2, v: &Unitary2, w: &Unitary2) -> bool {
    distance(u, w).value() <= distance(u, v).value() + distance(v, w).value() + 1e-12
}

#[inline]
pub fn same_up_to_phase(u: &Unitary2, v: &Unitary2) -> bool {
    distance(u, v).value() < UNIQUENESS_EPS
}

/// Removes the global phase: the first row-major entry with modulus above
/// 0.5 is rotated onto the positive real axis.
pub fn phase_canonicalize(u: &Unitary2) -> Unitary2 {
    let pivot =
        u.m.iter()
            .position(|z| z.norm() > PIVOT_MODULUS)
            // Unreachable for unitary input: some entry of each row has modulus ≥ 1/√2.
            .unwrap_or(0);
    rotate_to_pivot(u, pivot)
}

fn rotate_to_pivot(u: &Unitary2, pivot: usize) -> Unitary2 {
    let z = u.m[pivot];
    let r = z.norm();
    if r == 0.0 {
        return *u;
    }
    let p = z.conj() / r;
    let mut m = u.m.map(|e| e * p);
    m[pivot] = Complex64::new(r, 0.0);
    Unitary2::from_raw(m)
}

#[inline]
fn quantize(x: f64) -> i64 {
    (x / HASH_GRID).floor() as i64
}

fn key_from_cells(cells: &[i64; 8]) -> u64 {
    let mut h = FnvHasher::default();
    for c in cells {
        h.write_i64(*c);
    }
    h.finish()
}

/// Bucket key of an already phase-canonicalized unitary: each of the eight
/// real components is floored onto a grid of width [`HASH_GRID`].
///
/// A key only names a bucket. Membership is always confirmed by distance;
/// see [`probe_keys`] for the lookup side.
pub fn hash_key(canonical: &Unitary2) -> u64 {
    key_from_cells(&canonical.to_f64s().map(quantize))
}

/// Every bucket key under which a unitary equal to `u` (modulo phase, within
/// rounding) may have been stored by [`hash_key`].
///
/// Lookup is two-level: this coarse key set, then exact distance
/// confirmation by the caller. Neighbouring cells are added only on axes
/// where a component sits within a 1e-9 guard band of a grid line, and
/// alternative canonical forms are added when an entry modulus sits within
/// the guard band of the 0.5 pivot threshold. Usually a single key results.
pub fn probe_keys(u: &Unitary2) -> Vec<u64> {
    let mut pivots = Vec::with_capacity(2);
    for (i, z) in u.m.iter().enumerate() {
        let r = z.norm();
        if r > PIVOT_MODULUS - GUARD_BAND {
            pivots.push(i);
        }
        if r > PIVOT_MODULUS + GUARD_BAND {
            break;
        }
    }
    let mut keys = Vec::new();
    for pivot in pivots {
        let canon = rotate_to_pivot(u, pivot);
        let comps = canon.to_f64s();
        let mut variants: Vec<[i64; 8]> = vec![comps.map(quantize)];
        for (axis, &x) in comps.iter().enumerate() {
            let cell = quantize(x);
            let frac = x / HASH_GRID - cell as f64;
            let alt = if frac < GUARD_BAND / HASH_GRID {
                Some(cell - 1)
            } else if frac > 1.0 - GUARD_BAND / HASH_GRID {
                Some(cell + 1)
            } else {
                None
            };
            if let Some(alt) = alt {
                let extra: Vec<[i64; 8]> = variants
                    .iter()
                    .map(|v| {
                        let mut v = *v;
                        v[axis] = alt;
                        v
                    })
                    .collect();
                variants.extend(extra);
            }
        }
        keys.extend(variants.iter().map(key_from_cells));
    }
    keys.sort_unstable();
    keys.dedup();
    keys
}
