//! Adaptive Gauss–Kronrod (G10/K21) quadrature for scalar, complex and
//! vector-valued integrands on finite, semi-infinite and infinite ranges.
//!
//! Semi-infinite pieces are mapped onto the unit interval with
//! `x = a + t / (1 - t)` (resp. `x = b - (1 - t) / t`); the Kronrod nodes never
//! touch the mapped endpoint, so integrands only need to be finite on the open
//! range. Error estimation follows the QUADPACK heuristics of `qk21`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_814_580_085,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Weights of the embedded 10-point Gauss rule, living on XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values that can be integrated: a fixed number of real components.
pub trait QuadValue: Clone {
    fn dim(&self) -> usize;
    fn component(&self, i: usize) -> f64;
    fn zeros_like(&self) -> Self;
    /// `self += w * other`
    fn axpy(&mut self, w: f64, other: &Self);
}

impl QuadValue for f64 {
    fn dim(&self) -> usize {
        1
    }
    fn component(&self, _i: usize) -> f64 {
        *self
    }
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
}

impl QuadValue for Complex64 {
    fn dim(&self) -> usize {
        2
    }
    fn component(&self, i: usize) -> f64 {
        if i == 0 {
            self.re
        } else {
            self.im
        }
    }
    fn zeros_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn axpy(&mut self, w: f64, other: &Self) {
        *self += other * w;
    }
}

impl QuadValue for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }
    fn component(&self, i: usize) -> f64 {
        self[i]
    }
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn axpy(&mut self, w: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += w * b;
        }
    }
}

impl QuadValue for Vec<Complex64> {
    fn dim(&self) -> usize {
        2 * self.len()
    }
    fn component(&self, i: usize) -> f64 {
        let z = self[i / 2];
        if i.is_multiple_of(2) {
            z.re
        } else {
            z.im
        }
    }
    fn zeros_like(&self) -> Self {
        vec![Complex64::new(0.0, 0.0); self.len()]
    }
    fn axpy(&mut self, w: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b * w;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    pub fn with_rel(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Finite(f64, f64),
    Upper(f64),
    Lower(f64),
}

impl Piece {
    // Maps t in the piece's parameter range to (x, dx/dt).
    #[inline]
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            Piece::Finite(_, _) => (t, 1.0),
            Piece::Upper(a) => {
                let s = 1.0 - t;
                (a + t / s, 1.0 / (s * s))
            }
            Piece::Lower(b) => (b - (1.0 - t) / t, 1.0 / (t * t)),
        }
    }

    fn param_range(&self) -> (f64, f64) {
        match *self {
            Piece::Finite(a, b) => (a, b),
            _ => (0.0, 1.0),
        }
    }
}

struct Segment<T> {
    piece: usize,
    lo: f64,
    hi: f64,
    value: T,
    error: f64,
}

fn gk21<T, F>(f: &mut F, piece: Piece, lo: f64, hi: f64) -> Result<(T, f64)>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |t: f64| -> T {
        let (x, jac) = piece.map(t);
        let mut v = f(x);
        if jac != 1.0 {
            let z = v.zeros_like();
            let mut scaled = z;
            scaled.axpy(jac, &v);
            v = scaled;
        }
        v
    };

    let mut values: Vec<T> = Vec::with_capacity(21);
    let fc = eval(centre);
    let mut resk = fc.zeros_like();
    let mut resg = fc.zeros_like();
    resk.axpy(WGK[10], &fc);
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(centre - dx);
        let f2 = eval(centre + dx);
        resk.axpy(WGK[j], &f1);
        resk.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            resg.axpy(WG[j / 2], &f1);
            resg.axpy(WG[j / 2], &f2);
        }
        values.push(f1);
        values.push(f2);
    }
    values.push(fc);

    let dim = resk.dim();
    let mut err_max: f64 = 0.0;
    for c in 0..dim {
        let k = resk.component(c);
        let g = resg.component(c);
        if !k.is_finite() || !g.is_finite() {
            return Err(Error::IntegrationFailure(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        let mean = k * 0.5;
        let mut resabs = WGK[10] * values[20].component(c).abs();
        let mut resasc = WGK[10] * (values[20].component(c) - mean).abs();
        for j in 0..10 {
            let a = values[2 * j].component(c);
            let b = values[2 * j + 1].component(c);
            resabs += WGK[j] * (a.abs() + b.abs());
            resasc += WGK[j] * ((a - mean).abs() + (b - mean).abs());
        }
        resabs *= half.abs();
        resasc *= half.abs();
        let mut err = ((k - g) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        err_max = err_max.max(err);
    }
    let mut value = resk.zeros_like();
    value.axpy(half, &resk);
    Ok((value, err_max))
}

fn norm_max<T: QuadValue>(v: &T) -> f64 {
    (0..v.dim())
        .map(|i| v.component(i).abs())
        .fold(0.0, f64::max)
}

/// Integrates `f` over the union of consecutive intervals `breaks[0]..breaks[n]`.
/// The first and last break may be infinite.
pub fn integrate_breaks<T, F>(mut f: F, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if breaks.len() < 2 {
        return Err(Error::IntegrationFailure(
            "need at least two break points".into(),
        ));
    }
    let mut pieces = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.is_nan() || b.is_nan() || a >= b && !(a.is_infinite() && b.is_infinite()) {
            if a == b {
                continue;
            }
            return Err(Error::IntegrationFailure(format!(
                "bad interval [{a}, {b}]"
            )));
        }
        match (a.is_infinite(), b.is_infinite()) {
            (false, false) => pieces.push(Piece::Finite(a, b)),
            (false, true) => pieces.push(Piece::Upper(a)),
            (true, false) => pieces.push(Piece::Lower(b)),
            (true, true) => {
                pieces.push(Piece::Lower(0.0));
                pieces.push(Piece::Upper(0.0));
            }
        }
    }
    if pieces.is_empty() {
        return Err(Error::IntegrationFailure("empty integration range".into()));
    }

    let mut evaluations = 0usize;
    let mut segs: Vec<Segment<T>> = Vec::new();
    for (idx, p) in pieces.iter().enumerate() {
        let (lo, hi) = p.param_range();
        let (value, error) = gk21(&mut f, *p, lo, hi)?;
        evaluations += 21;
        segs.push(Segment {
            piece: idx,
            lo,
            hi,
            value,
            error,
        });
    }

    let total = |segs: &Vec<Segment<T>>| -> (T, f64) {
        let mut acc = segs[0].value.zeros_like();
        let mut err = 0.0;
        for s in segs {
            acc.axpy(1.0, &s.value);
            err += s.error;
        }
        (acc, err)
    };

    loop {
        let (value, error) = total(&segs);
        let tol = opts.abs_tol.max(opts.rel_tol * norm_max(&value));
        if error <= tol {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if segs.len() >= opts.max_subdivisions {
            return Err(Error::IntegrationFailure(format!(
                "tolerance {tol:e} not reached after {} subdivisions (error estimate {error:e})",
                segs.len()
            )));
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0usize, -1.0), |(bi, be), (i, s)| {
                if s.error > be {
                    (i, s.error)
                } else {
                    (bi, be)
                }
            });
        let seg = segs.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        if !(mid > seg.lo && mid < seg.hi) {
            return Err(Error::IntegrationFailure(format!(
                "interval collapsed near {mid} (error estimate {error:e})"
            )));
        }
        let p = pieces[seg.piece];
        let (v1, e1) = gk21(&mut f, p, seg.lo, mid)?;
        let (v2, e2) = gk21(&mut f, p, mid, seg.hi)?;
        evaluations += 42;
        segs.push(Segment {
            piece: seg.piece,
            lo: seg.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        segs.push(Segment {
            piece: seg.piece,
            lo: mid,
            hi: seg.hi,
            value: v2,
            error: e2,
        });
    }
}

/// Integrates `f` over `[a, b]`; either end may be infinite.
pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate_breaks(f, &[a, b], opts)
}

/// Real-valued convenience wrapper returning only the value.
pub fn integrate_real<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate(f, a, b, opts).map(|r| r.value)
}
