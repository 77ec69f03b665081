//! Box-constrained limited-memory quasi-Newton minimization.
//!
//! Iterates are projected onto the box after every step, the search direction
//! comes from the L-BFGS two-loop recursion with bound-blocked components
//! zeroed, and steps are accepted only under an Armijo decrease condition, so
//! the objective never increases.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop when the projected gradient's max norm falls below this.
    pub gtol: f64,
    /// Stop when the relative objective decrease falls below this.
    pub ftol: f64,
    /// Largest allowed step in any coordinate.
    pub max_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iter: 200,
            memory: 10,
            gtol: 1e-7,
            ftol: 1e-12,
            max_step: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub start_value: f64,
    pub iterations: usize,
}

/// Minimizes `objective` over the box `[lower, upper]` from `x0`.
///
/// `objective` returns `None` at infeasible points (for example a failed
/// factorization); the search backs off from those. Returns `None` if the
/// projected starting point itself is infeasible.
pub fn minimize_box<F>(
    objective: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: Options,
) -> Option<Minimum>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let project = |x: &mut [f64]| {
        for ((xi, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
            *xi = xi.clamp(lo, hi);
        }
    };
    let mut x = x0.to_vec();
    project(&mut x);
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() {
        return None;
    }
    let start_value = f;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;

        let pg_norm = x
            .iter()
            .zip(&g)
            .zip(lower.iter().zip(upper))
            .map(|((&xi, &gi), (&lo, &hi))| ((xi - gi).clamp(lo, hi) - xi).abs())
            .fold(0.0, f64::max);
        if pg_norm < opts.gtol {
            break;
        }

        let mut d = two_loop(&g, &history);
        if dot(&d, &g) >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            history.clear();
        }
        for (i, di) in d.iter_mut().enumerate() {
            let blocked = (x[i] <= lower[i] && *di < 0.0) || (x[i] >= upper[i] && *di > 0.0);
            if blocked {
                *di = 0.0;
            }
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax == 0.0 {
            break;
        }
        let mut t = if dmax > opts.max_step { opts.max_step / dmax } else { 1.0 };

        let mut accepted = None;
        for _ in 0..50 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            project(&mut trial);
            let decrease: f64 = g.iter().zip(trial.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if decrease < 0.0 {
                if let Some((ft, gt)) = objective(&trial) {
                    if ft.is_finite() && ft <= f + 1e-4 * decrease {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let rel = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if rel < opts.ftol {
            break;
        }
    }

    Some(Minimum {
        x,
        value: f,
        start_value,
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        Some((f, g))
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let m = minimize_box(
            rosenbrock,
            &[-1.2, 1.0],
            &[-10.0, -10.0],
            &[10.0, 10.0],
            Options { max_iter: 500, ..Default::default() },
        )
        .unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
        assert!(m.value <= m.start_value);
    }

    #[test]
    fn active_bound() {
        // minimum of (x-3)^2 + (y+1)^2 on [0,2] x [0,2] is (2, 0)
        let f = |x: &[f64]| {
            Some((
                (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2),
                vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)],
            ))
        };
        let m = minimize_box(f, &[1.0, 1.0], &[0.0, 0.0], &[2.0, 2.0], Options::default()).unwrap();
        assert!((m.x[0] - 2.0).abs() < 1e-10 && m.x[1].abs() < 1e-10, "{:?}", m.x);
    }

    #[test]
    fn fixed_coordinate_stays_put() {
        let f = |x: &[f64]| Some((x[0] * x[0] + x[1] * x[1], vec![2.0 * x[0], 2.0 * x[1]]));
        let m = minimize_box(f, &[1.0, 1.5], &[-5.0, 1.5], &[5.0, 1.5], Options::default()).unwrap();
        assert_eq!(m.x[1], 1.5);
        assert!(m.x[0].abs() < 1e-8);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // objective undefined for x > 0.5; the minimizer at 1 is unreachable
        let f = |x: &[f64]| {
            (x[0] <= 0.5).then(|| ((x[0] - 1.0).powi(2), vec![2.0 * (x[0] - 1.0)]))
        };
        let m = minimize_box(f, &[-2.0], &[-5.0], &[5.0], Options::default()).unwrap();
        assert!(m.x[0] <= 0.5 && m.x[0] > 0.4, "{:?}", m.x);
        assert!(minimize_box(f, &[1.0], &[-5.0], &[5.0], Options::default()).is_none());
    }
}
