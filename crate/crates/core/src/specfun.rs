//! Bessel functions of the first kind, their derivatives and the roots of
//! `J_n'`.
//!
//! Small arguments are summed from the power series. Everything else goes
//! through Miller's backward recurrence normalized by
//! `J_0 + 2 * sum(J_2k) = 1`, which yields every order `0..=n` in one pass and
//! stays accurate to a few ulps over the range used for cavity modes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest azimuthal order accepted by the public evaluators.
pub const MAX_ORDER: u32 = 30;

/// Arguments at or below this value are evaluated from the power series.
const SERIES_LIMIT: f64 = 4.0;

/// Scan step used to bracket roots of `J_n'`. Consecutive roots are always
/// more than 2 apart for the supported orders.
const ROOT_SCAN_STEP: f64 = 0.05;

/// Newton refinement tolerance on the root abscissa.
const ROOT_TOL: f64 = 1e-12;

/// Acceptance threshold on `|J_n'(v)|` for a refined root.
pub const ROOT_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("bessel argument must be finite and non-negative, got {0}")]
    Domain(f64),
    #[error("bessel order {order} outside supported range 0..={max}")]
    UnsupportedOrder { order: u32, max: u32 },
    #[error("root index must be at least 1")]
    ZeroRootIndex,
    #[error("failed to bracket root {index} of J_{order}' below x = {limit}")]
    RootSearch { order: u32, index: u32, limit: f64 },
    #[error("root {index} of J_{order}' did not converge (residual {residual:e})")]
    RootNotConverged { order: u32, index: u32, residual: f64 },
}

/// Azimuthal order of a Bessel function, validated against [`MAX_ORDER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct BesselOrder(u32);

impl BesselOrder {
    pub fn new(n: u32) -> Result<Self, SpecfunError> {
        if n > MAX_ORDER {
            return Err(SpecfunError::UnsupportedOrder {
                order: n,
                max: MAX_ORDER,
            });
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = SpecfunError;
    fn try_from(n: u32) -> Result<Self, Self::Error> {
        Self::new(n)
    }
}

impl From<BesselOrder> for u32 {
    fn from(o: BesselOrder) -> u32 {
        o.0
    }
}

fn check_arg(x: f64) -> Result<(), SpecfunError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(SpecfunError::Domain(x))
    }
}

/// `J_n(x)` for a validated order and `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64, SpecfunError> {
    check_arg(x)?;
    let n = order.get() as usize;
    Ok(bessel_j_upto(n, x)[n])
}

/// `J_n'(x)`, computed as `-J_1` for `n = 0` and `(J_{n-1} - J_{n+1}) / 2`
/// otherwise.
pub fn bessel_j_prime(order: BesselOrder, x: f64) -> Result<f64, SpecfunError> {
    check_arg(x)?;
    let n = order.get() as usize;
    let js = bessel_j_upto(n + 1, x);
    Ok(derivative_from(&js, n))
}

/// `J_n(x)` and `J_n'(x)` from a single recurrence pass.
pub fn bessel_j_and_prime(order: BesselOrder, x: f64) -> Result<(f64, f64), SpecfunError> {
    check_arg(x)?;
    let n = order.get() as usize;
    let js = bessel_j_upto(n + 1, x);
    Ok((js[n], derivative_from(&js, n)))
}

/// `J_n(x) / x` with the removable singularity at the origin filled in by
/// its series limit (1/2 for `n = 1`, 0 for `n >= 2`). Returns 0 for `n = 0`
/// at the origin, where callers multiply by `n` anyway.
pub fn bessel_j_over_x(order: BesselOrder, x: f64) -> Result<f64, SpecfunError> {
    check_arg(x)?;
    let n = order.get();
    if x < 1e-6 {
        if n == 0 {
            return Ok(if x == 0.0 { 0.0 } else { bessel_j(order, x)? / x });
        }
        // (x/2)^(n-1) / (2 n!) * (1 - (x/2)^2 / (n+1) + ...)
        let half = 0.5 * x;
        let mut lead = 0.5;
        for k in 1..=n {
            lead /= k as f64;
        }
        lead *= half.powi(n as i32 - 1);
        return Ok(lead * (1.0 - half * half / (n as f64 + 1.0)));
    }
    Ok(bessel_j(order, x)? / x)
}

fn derivative_from(js: &[f64], n: usize) -> f64 {
    if n == 0 {
        -js[1]
    } else {
        0.5 * (js[n - 1] - js[n + 1])
    }
}

/// Returns `[J_0(x), ..., J_nmax(x)]`. Caller guarantees `x >= 0` and finite.
pub(crate) fn bessel_j_upto(nmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }
    if x <= SERIES_LIMIT {
        (0..=nmax).map(|n| series_j(n, x)).collect()
    } else {
        miller_j(nmax, x)
    }
}

fn series_j(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller_j(nmax: usize, x: f64) -> Vec<f64> {
    const BIG: f64 = 1e200;
    let m = (nmax as f64).max(x);
    let mut start = (m + 30.0 + (60.0 * m).sqrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut out = vec![0.0; nmax + 1];
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds J_{k-1}
        if j_cur.abs() > BIG {
            j_cur /= BIG;
            j_next /= BIG;
            norm /= BIG;
            for v in out.iter_mut() {
                *v /= BIG;
            }
        }
        let idx = k - 1;
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j_cur;
        }
        if idx <= nmax {
            out[idx] = j_cur;
        }
    }
    norm += j_cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// The `index`-th positive root of `J_n'`.
///
/// For `n = 0` the stationary point at the origin is skipped, so `v_01` is
/// 3.8317. Roots are bracketed by a forward scan and polished with Newton
/// steps using `J_n'' = -J_n'/x - (1 - n^2/x^2) J_n`, kept inside the bracket.
pub fn prime_root(order: BesselOrder, index: u32) -> Result<f64, SpecfunError> {
    if index == 0 {
        return Err(SpecfunError::ZeroRootIndex);
    }
    let n = order.get();
    let limit = (index as f64 + 0.5 * n as f64 + 2.0) * std::f64::consts::PI + n as f64;
    let dj = |x: f64| derivative_from(&bessel_j_upto(n as usize + 1, x), n as usize);

    let mut found = 0u32;
    let mut a = ROOT_SCAN_STEP;
    let mut fa = dj(a);
    while a < limit {
        let b = a + ROOT_SCAN_STEP;
        let fb = dj(b);
        let bracketed = fb == 0.0 || (fa != 0.0 && fa.signum() != fb.signum());
        if bracketed {
            found += 1;
            if found == index {
                return refine(n, index, a, b, fa, fb);
            }
        }
        a = b;
        fa = fb;
    }
    Err(SpecfunError::RootSearch {
        order: n,
        index,
        limit,
    })
}

fn refine(n: u32, index: u32, mut lo: f64, mut hi: f64, mut flo: f64, fhi: f64) -> Result<f64, SpecfunError> {
    if fhi == 0.0 {
        return Ok(hi);
    }
    let nf = n as f64;
    let eval = |x: f64| {
        let js = bessel_j_upto(n as usize + 1, x);
        (js[n as usize], derivative_from(&js, n as usize))
    };
    // bisect down to a small bracket first
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let (_, fm) = eval(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..60 {
        let (j, dj) = eval(x);
        let d2 = -dj / x - (1.0 - nf * nf / (x * x)) * j;
        if dj == 0.0 {
            break;
        }
        if dj.signum() == flo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - dj / d2;
        if !next.is_finite() || next < lo || next > hi {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= ROOT_TOL * x.max(1.0) {
            break;
        }
    }
    let residual = eval(x).1.abs();
    if residual > ROOT_RESIDUAL {
        return Err(SpecfunError::RootNotConverged {
            order: n,
            index,
            residual,
        });
    }
    Ok(x)
}

/// Immutable table of `J_n'` roots for `n <= max_order`, `i <= max_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeRootTable {
    max_order: u32,
    max_index: u32,
    // roots[n][i-1]
    roots: Vec<Vec<f64>>,
}

impl PrimeRootTable {
    pub fn build(max_order: u32, max_index: u32) -> Result<Self, SpecfunError> {
        if max_index == 0 {
            return Err(SpecfunError::ZeroRootIndex);
        }
        let mut roots = Vec::with_capacity(max_order as usize + 1);
        for n in 0..=max_order {
            let order = BesselOrder::new(n)?;
            let row = (1..=max_index)
                .map(|i| prime_root(order, i))
                .collect::<Result<Vec<_>, _>>()?;
            roots.push(row);
        }
        Ok(Self {
            max_order,
            max_index,
            roots,
        })
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn max_index(&self) -> u32 {
        self.max_index
    }

    pub fn get(&self, n: u32, i: u32) -> Option<f64> {
        if i == 0 {
            return None;
        }
        self.roots
            .get(n as usize)
            .and_then(|row| row.get(i as usize - 1))
            .copied()
    }

    /// Roots of `J_n'` in ascending order.
    pub fn row(&self, n: u32) -> Option<&[f64]> {
        self.roots.get(n as usize).map(Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(n: u32) -> BesselOrder {
        BesselOrder::new(n).unwrap()
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(ord(0), 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(ord(1), 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(ord(0), 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(ord(1), 0.0).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(bessel_j(ord(0), -1.0), Err(SpecfunError::Domain(-1.0)));
        assert!(bessel_j(ord(0), f64::NAN).is_err());
        assert!(matches!(
            BesselOrder::new(MAX_ORDER + 1),
            Err(SpecfunError::UnsupportedOrder { .. })
        ));
        assert_eq!(prime_root(ord(1), 0), Err(SpecfunError::ZeroRootIndex));
    }

    #[test]
    fn series_and_recurrence_agree_at_switchover() {
        for n in 0..6 {
            let a = series_j(n, SERIES_LIMIT);
            let b = miller_j(n, SERIES_LIMIT)[n];
            assert!((a - b).abs() < 1e-14, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn over_x_limit_is_continuous() {
        for n in 1..5 {
            let x = 0.9e-6;
            let limit = bessel_j_over_x(ord(n), x).unwrap();
            let direct = bessel_j(ord(n), x).unwrap() / x;
            assert!((limit - direct).abs() <= 1e-12 * direct.abs().max(1e-300), "n={n}");
        }
        assert_eq!(bessel_j_over_x(ord(1), 0.0).unwrap(), 0.5);
        assert_eq!(bessel_j_over_x(ord(2), 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_over_x(ord(0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn first_prime_roots() {
        assert!((prime_root(ord(1), 1).unwrap() - 1.841183781).abs() < 1e-9);
        assert!((prime_root(ord(2), 1).unwrap() - 3.054236928).abs() < 1e-9);
        assert!((prime_root(ord(0), 1).unwrap() - 3.831705970).abs() < 1e-9);
        let v31 = prime_root(ord(3), 1).unwrap();
        assert!((v31 - 4.201188941210528).abs() < 1e-10);
        assert!(bessel_j_prime(ord(3), 4.201188941210528).unwrap().abs() < 1e-10);
    }

    #[test]
    fn table_rows_increase() {
        let t = PrimeRootTable::build(4, 3).unwrap();
        for n in 0..=4 {
            let row = t.row(n).unwrap();
            assert!(row.windows(2).all(|w| w[0] < w[1]));
            for &v in row {
                assert!(bessel_j_prime(ord(n), v).unwrap().abs() <= ROOT_RESIDUAL);
            }
        }
        assert_eq!(t.get(0, 0), None);
        assert_eq!(t.get(5, 1), None);
    }
}
