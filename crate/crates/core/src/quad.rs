//! Adaptive Gauss–Kronrod quadrature and Gauss–Legendre rules.

use std::sync::OnceLock;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: estimated error {error:e}, worst subinterval [{worst_lo}, {worst_hi}]")]
    NotConverged {
        value: f64,
        error: f64,
        worst_lo: f64,
        worst_hi: f64,
    },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 500,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: T,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment<T> {
    lo: T,
    hi: T,
    value: T,
    error: T,
}

fn kronrod15<T: Scalar, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T) -> Result<Segment<T>, QuadError> {
    let center = (lo + hi) / T::lit(2.0);
    let half = (hi - lo) / T::lit(2.0);
    let mut eval = |x: T| -> Result<T, QuadError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite { x: x.as_f64() })
        }
    };
    let fc = eval(center)?;
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = eval(center - dx)? + eval(center + dx)?;
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    Ok(Segment {
        lo,
        hi,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    })
}

/// Globally adaptive G7–K15 integration of `f` over `[a, b]`.
///
/// Either limit may be infinite; infinite ranges are mapped onto a finite
/// interval before subdivision.
pub fn integrate<T, F>(f: F, a: T, b: T, cfg: &QuadConfig) -> Result<QuadResult<T>, QuadError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let mut f = f;
    if a == b {
        return Ok(QuadResult { value: T::zero(), abs_error: T::zero(), intervals: 0 });
    }
    if a > b {
        let r = integrate(f, b, a, cfg)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let one = T::one();
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adapt(&mut f, a, b, cfg),
        (true, false) => adapt(
            &mut |t: T| {
                let u = one - t;
                f(a + t / u) / (u * u)
            },
            T::zero(),
            one,
            cfg,
        ),
        (false, true) => adapt(
            &mut |t: T| {
                let u = one - t;
                f(b - t / u) / (u * u)
            },
            T::zero(),
            one,
            cfg,
        ),
        (false, false) => adapt(
            &mut |t: T| {
                let u = one - t * t;
                f(t / u) * (one + t * t) / (u * u)
            },
            -one,
            one,
            cfg,
        ),
    }
}

fn adapt<T: Scalar, F: FnMut(T) -> T>(
    f: &mut F,
    a: T,
    b: T,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>, QuadError> {
    let abs_tol = T::lit(cfg.abs_tol);
    let rel_tol = T::lit(cfg.rel_tol);
    let mut segs = vec![kronrod15(f, a, b)?];
    loop {
        let value: T = segs.iter().map(|s| s.value).sum();
        let error: T = segs.iter().map(|s| s.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadResult { value, abs_error: error, intervals: segs.len() });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, s)| if s.error > acc.1 { (i, s.error) } else { acc });
        let w = &segs[worst];
        let mid = (w.lo + w.hi) / T::lit(2.0);
        // below this width further splitting cannot help
        let resolvable = mid > w.lo && mid < w.hi;
        if segs.len() >= cfg.max_intervals || !resolvable {
            if error <= T::lit(cfg.abs_tol.max(cfg.rel_tol * value.as_f64().abs()) * 10.0)
                && !resolvable
            {
                return Ok(QuadResult { value, abs_error: error, intervals: segs.len() });
            }
            return Err(QuadError::NotConverged {
                value: value.as_f64(),
                error: error.as_f64(),
                worst_lo: w.lo.as_f64(),
                worst_hi: w.hi.as_f64(),
            });
        }
        let (lo, hi) = (w.lo, w.hi);
        let left = kronrod15(f, lo, mid)?;
        let right = kronrod15(f, mid, hi)?;
        segs[worst] = left;
        segs.push(right);
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed in `f64` by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_f64(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}

/// The 20-point rule, computed once.
pub fn gl20() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_f64(20))
}

/// Gauss–Legendre nodes and weights converted to `T`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let rule = if n == 20 { gl20().to_vec() } else { gauss_legendre_f64(n) };
    rule.into_iter().map(|(x, w)| (T::lit(x), T::lit(w))).unzip()
}
