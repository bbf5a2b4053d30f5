//! Adaptive Gauss-Kronrod quadrature in one and two dimensions, plus a fixed
//! tensor-product Gauss-Legendre rule.
//!
//! Every routine returns an [`Estimate`] carrying a value and an error bound.
//! An adaptive routine that cannot meet its tolerance within the evaluation
//! budget fails with [`Error::Accuracy`] instead of returning a silent guess.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::{invalid, Error, Result};

/// Which rule to use for two-dimensional integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Scheme {
    /// Nested adaptive Gauss-Kronrod (7-15), outer over the first variable.
    AdaptiveNested,
    /// Tensor Gauss-Legendre of the given order on `panels` equal panels per
    /// breakpoint interval. The error bound is the change when panels double.
    FixedTensor { order: usize, panels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { scheme: Scheme::AdaptiveNested, abs_tol: 1e-13, rel_tol: 1e-10, max_evals: 20_000_000 }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || (self.abs_tol == 0.0 && self.rel_tol == 0.0) {
            return Err(invalid("quadrature.tolerance", "need a non-negative tolerance, not both zero"));
        }
        if self.max_evals == 0 {
            return Err(invalid("quadrature.max_evals", "must be positive"));
        }
        if let Scheme::FixedTensor { order, panels } = self.scheme {
            if order == 0 || panels == 0 {
                return Err(invalid("quadrature.scheme", "order and panels must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
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

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Integrated error carried by the integrand itself (nested rules).
    carried: f64,
    /// The error estimate sits on the rounding floor; bisecting cannot help.
    at_roundoff: bool,
}

/// One 15-point Kronrod panel. The integrand returns `(value, carried_error)`.
fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let (fc, ec) = f(centr)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut carried = ec * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let absc = hlgth * XGK[j];
        let (f1, e1) = f(centr - absc)?;
        let (f2, e2) = f(centr + absc)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        carried += WGK[j] * (e1.abs() + e2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mut resabs = WGK[7] * fc.abs();
    for j in 0..7 {
        resabs += WGK[j] * (fv1[j].abs() + fv2[j].abs());
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let width = hlgth.abs();
    let value = resk * hlgth;
    resabs *= width;
    resasc *= width;
    let mut error = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * f64::min(1.0, libm::pow(200.0 * error / resasc, 1.5));
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    let mut at_roundoff = false;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && floor >= error {
        error = floor;
        at_roundoff = true;
    }
    Ok(Segment { a, b, value, error, carried: carried * width, at_roundoff })
}

struct Budget {
    used: Cell<usize>,
    max: usize,
}

impl Budget {
    fn new(max: usize) -> Self {
        Self { used: Cell::new(0), max }
    }
    fn charge(&self, n: usize) {
        self.used.set(self.used.get() + n);
    }
    fn exhausted(&self) -> bool {
        self.used.get() >= self.max
    }
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.len() < 2 {
        return Err(invalid("points", "need at least two breakpoints"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(invalid("points", "breakpoints must be finite"));
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("points", "breakpoints must be strictly increasing"));
    }
    Ok(())
}

#[derive(PartialEq)]
struct Ranked(f64, usize);

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Globally adaptive bisection driver. The tolerance applies to the
/// discretization error; errors carried by the integrand are added on top.
/// Segments whose error is pure rounding are retired rather than split.
fn adaptive<F>(mut f: F, points: &[f64], abs_tol: f64, rel_tol: f64, budget: &Budget) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut segs: Vec<Segment> = Vec::with_capacity(64);
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        let s = gk15(&mut f, w[0], w[1])?;
        if !s.at_roundoff {
            heap.push(Ranked(s.error, segs.len()));
        }
        segs.push(s);
    }
    let mut value: f64 = segs.iter().map(|s| s.value).sum();
    let mut error: f64 = segs.iter().map(|s| s.error).sum();
    loop {
        let tol = f64::max(abs_tol, rel_tol * value.abs());
        let done = error <= tol || heap.is_empty();
        if done || budget.exhausted() {
            // re-sum to drop accumulated update drift
            value = segs.iter().map(|s| s.value).sum();
            error = segs.iter().map(|s| s.error).sum();
            let carried: f64 = segs.iter().map(|s| s.carried).sum();
            if done {
                return Ok(Estimate { value, error: error + carried, evaluations: budget.used.get() });
            }
            return Err(Error::Accuracy { value, error_bound: error + carried, evaluations: budget.used.get() });
        }
        let Ranked(_, idx) = heap.pop().expect("heap is non-empty");
        let worst = segs[idx];
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval cannot be split further; keep its error as is
            continue;
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        segs[idx] = left;
        if !left.at_roundoff {
            heap.push(Ranked(left.error, idx));
        }
        if !right.at_roundoff {
            heap.push(Ranked(right.error, segs.len()));
        }
        segs.push(right);
    }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate_1d_breaks(f, &[a, b], spec)
}

/// Integrate `f` over `[points[0], points[last]]`, splitting at every
/// interior breakpoint (place them at kinks and support edges).
pub fn integrate_1d_breaks<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    check_points(points)?;
    let budget = Budget::new(spec.max_evals);
    match spec.scheme {
        Scheme::AdaptiveNested => adaptive(
            |x| {
                budget.charge(1);
                Ok((f(x), 0.0))
            },
            points,
            spec.abs_tol,
            spec.rel_tol,
            &budget,
        ),
        Scheme::FixedTensor { order, panels } => {
            let rule = GaussLegendre::new(order);
            let coarse = rule.integrate_panels(&mut f, points, panels);
            let fine = rule.integrate_panels(&mut f, points, 2 * panels);
            Ok(Estimate {
                value: fine,
                error: (fine - coarse).abs(),
                evaluations: 3 * order * panels * (points.len() - 1),
            })
        }
    }
}

/// Integrate `f` over `[a, inf)` with the map `x = a + t / (1 - t)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(mut f: F, a: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate_1d(
        |t| {
            let s = 1.0 - t;
            f(a + t / s) / (s * s)
        },
        0.0,
        1.0,
        &QuadratureSpec { scheme: Scheme::AdaptiveNested, ..*spec },
    )
}

/// Integrate `f(x, y)` over the rectangle spanned by the breakpoint lists.
/// The nested scheme splits the tolerance evenly between the outer (`x`)
/// rule and the inner (`y`) rules.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    x_points: &[f64],
    y_points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    spec.validate()?;
    check_points(x_points)?;
    check_points(y_points)?;
    match spec.scheme {
        Scheme::AdaptiveNested => {
            let budget = Budget::new(spec.max_evals);
            let x_len = x_points[x_points.len() - 1] - x_points[0];
            let inner_abs = 0.5 * spec.abs_tol / x_len;
            let inner_rel = 0.5 * spec.rel_tol;
            let f = &mut f;
            adaptive(
                |x| {
                    let inner = adaptive(
                        |y| {
                            budget.charge(1);
                            Ok((f(x, y), 0.0))
                        },
                        y_points,
                        inner_abs,
                        inner_rel,
                        &budget,
                    )?;
                    Ok((inner.value, inner.error))
                },
                x_points,
                0.5 * spec.abs_tol,
                0.5 * spec.rel_tol,
                &budget,
            )
        }
        Scheme::FixedTensor { order, panels } => {
            let rule = GaussLegendre::new(order);
            let mut run = |p: usize| {
                let f = &mut f;
                rule.integrate_panels(&mut |x| rule.integrate_panels(&mut |y| f(x, y), y_points, p), x_points, p)
            };
            let coarse = run(panels);
            let fine = run(2 * panels);
            let n1 = order * panels;
            Ok(Estimate {
                value: fine,
                error: (fine - coarse).abs(),
                evaluations: 5 * n1 * n1 * (x_points.len() - 1) * (y_points.len() - 1),
            })
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    fn integrate_panels<F: FnMut(f64) -> f64>(&self, f: &mut F, points: &[f64], panels: usize) -> f64 {
        let mut total = 0.0;
        for w in points.windows(2) {
            let h = (w[1] - w[0]) / panels as f64;
            for k in 0..panels {
                let a = w[0] + h * k as f64;
                let c = a + 0.5 * h;
                let mut s = 0.0;
                for (x, wt) in self.nodes.iter().zip(&self.weights) {
                    s += wt * f(c + 0.5 * h * x);
                }
                total += 0.5 * h * s;
            }
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
