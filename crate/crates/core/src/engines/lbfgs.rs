//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Stop once the gradient max-norm is at or below this.
    pub gtol: f64,
    pub max_evals: usize,
    pub memory: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-8,
            max_evals: 5000,
            memory: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub value: f64,
    pub x: Vec<f64>,
    pub gradient: Vec<f64>,
    pub evals: usize,
    pub converged: bool,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_ZOOM: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Tracker<'f, F> {
    f: &'f mut F,
    evals: usize,
    best: (f64, Vec<f64>, Vec<f64>),
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Tracker<'_, F> {
    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.evals += 1;
        let (v, g) = (self.f)(x);
        if v < self.best.0 {
            self.best = (v, x.to_vec(), g.clone());
        }
        (v, g)
    }
}

/// Minimizes a smooth objective that returns `(value, gradient)`. The result
/// is the best point evaluated, so reported values never increase.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &MinimizeOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut t = Tracker {
        f: &mut f,
        evals: 0,
        best: (f64::INFINITY, x0.to_vec(), vec![0.0; n]),
    };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = t.eval(&x);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = max_norm(&g) <= opts.gtol;
    while !converged && t.evals < opts.max_evals {
        let mut d = direction(&g, &hist);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let step0 = if hist.is_empty() {
            (1.0 / max_norm(&g)).min(1.0)
        } else {
            1.0
        };
        let Some((alpha, f_new, g_new)) = line_search(&mut t, &x, fx, slope, &d, step0, opts.max_evals)
        else {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            continue;
        };
        let x_new: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if hist.len() == opts.memory.max(1) {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        converged = max_norm(&g) <= opts.gtol;
        if !converged && decrease <= f64::EPSILON * fx.abs().max(1.0) && hist.is_empty() {
            break;
        }
    }
    let (value, bx, bg) = t.best;
    let converged = max_norm(&bg) <= opts.gtol;
    Minimum {
        value,
        x: bx,
        gradient: bg,
        evals: t.evals,
        converged,
    }
}

/// Two-loop recursion.
fn direction(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q
}

type Point = (f64, f64, Vec<f64>); // (value, slope, gradient)

fn probe<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    t: &mut Tracker<'_, F>,
    x: &[f64],
    d: &[f64],
    a: f64,
) -> Point {
    let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
    let (v, g) = t.eval(&xa);
    (v, dot(&g, d), g)
}

fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    t: &mut Tracker<'_, F>,
    x: &[f64],
    f0: f64,
    slope0: f64,
    d: &[f64],
    step0: f64,
    budget: usize,
) -> Option<(f64, f64, Vec<f64>)> {
    let mut prev: (f64, Point) = (0.0, (f0, slope0, Vec::new()));
    let mut a = step0;
    for i in 0..60 {
        if t.evals >= budget {
            return None;
        }
        let p = probe(t, x, d, a);
        if !p.0.is_finite() {
            a *= 0.5;
            continue;
        }
        if p.0 > f0 + C1 * a * slope0 || (i > 0 && p.0 >= prev.1 .0) {
            return zoom(t, x, d, f0, slope0, prev, (a, p), budget);
        }
        if p.1.abs() <= -C2 * slope0 {
            return Some((a, p.0, p.2));
        }
        if p.1 >= 0.0 {
            return zoom(t, x, d, f0, slope0, (a, p), prev, budget);
        }
        prev = (a, p);
        a *= 2.0;
    }
    None
}

fn zoom<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    t: &mut Tracker<'_, F>,
    x: &[f64],
    d: &[f64],
    f0: f64,
    slope0: f64,
    mut lo: (f64, Point),
    mut hi: (f64, Point),
    budget: usize,
) -> Option<(f64, f64, Vec<f64>)> {
    for _ in 0..MAX_ZOOM {
        if t.evals >= budget {
            break;
        }
        let (a_lo, f_lo, s_lo) = (lo.0, lo.1 .0, lo.1 .1);
        let (a_hi, f_hi) = (hi.0, hi.1 .0);
        let width = a_hi - a_lo;
        if width.abs() < 1e-16 * a_lo.abs().max(1.0) {
            break;
        }
        // quadratic through (lo, f_lo, s_lo) and (hi, f_hi), safeguarded
        let denom = 2.0 * (f_hi - f_lo - s_lo * width);
        let mut a = if denom.abs() > 0.0 {
            a_lo - s_lo * width * width / denom
        } else {
            f64::NAN
        };
        let (left, right) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
        let margin = 0.1 * (right - left);
        if !a.is_finite() || a < left + margin || a > right - margin {
            a = 0.5 * (a_lo + a_hi);
        }
        let p = probe(t, x, d, a);
        if p.0 > f0 + C1 * a * slope0 || p.0 >= f_lo {
            hi = (a, p);
        } else {
            if p.1.abs() <= -C2 * slope0 {
                return Some((a, p.0, p.2));
            }
            if p.1 * (a_hi - a_lo) >= 0.0 {
                hi = lo;
            }
            lo = (a, p);
        }
    }
    // accept the best sufficient-decrease point found, if any
    if lo.0 > 0.0 && lo.1 .0 < f0 {
        Some((lo.0, lo.1 .0, lo.1 .2))
    } else {
        None
    }
}
