//! Nelder-Mead search confined to the unit cube.
//!
//! Trial points are projected onto `[0, 1]^d`, so every evaluated point lies
//! inside the box. Coefficients follow the dimension-adaptive scheme of Gao
//! and Han, which behaves better than the classic ones beyond a few
//! dimensions. When the simplex collapses the search restarts around the best
//! vertex until a restart stops improving or the budget runs out.

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop a pass once the spread of objective values drops below this.
    pub tol: f64,
    /// Edge length of each fresh simplex, in unit-cube coordinates.
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Budget<'a, F> {
    f: &'a mut F,
    evals: usize,
    max_evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Budget<'_, F> {
    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    /// Past the budget every point scores `+inf` without calling `f`.
    fn eval(&mut self, x: &[f64]) -> f64 {
        if self.exhausted() {
            return f64::INFINITY;
        }
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over the unit cube starting from `x0`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    options: &SimplexOptions,
) -> SimplexResult {
    let mut budget = Budget {
        f: &mut f,
        evals: 0,
        max_evals: options.max_evals.max(1),
    };
    let mut best_x = x0.to_vec();
    project(&mut best_x);
    let mut best = budget.eval(&best_x);
    let mut converged = false;
    while !budget.exhausted() {
        let (x, value, pass_converged) = pass(&mut budget, &best_x, best, options);
        converged = pass_converged;
        let improvement = best - value;
        if value < best {
            best = value;
            best_x = x;
        }
        if improvement.is_nan() || improvement <= options.tol {
            break;
        }
    }
    SimplexResult {
        x: best_x,
        value: best,
        evals: budget.evals,
        converged,
    }
}

/// One Nelder-Mead run from a fresh simplex around `start`.
fn pass<F: FnMut(&[f64]) -> f64>(
    budget: &mut Budget<'_, F>,
    start: &[f64],
    start_value: f64,
    options: &SimplexOptions,
) -> (Vec<f64>, f64, bool) {
    let d = start.len();
    let dim = d as f64;
    let reflect = 1.0;
    // the adaptive coefficients degenerate in one dimension
    let expand = 1.0 + 2.0 / dim.max(2.0);
    let contract = (0.75 - 1.0 / (2.0 * dim)).max(0.5);
    let shrink = (1.0 - 1.0 / dim).max(0.5);

    let mut vertices = vec![start.to_vec()];
    let mut values = vec![start_value];
    for i in 0..d {
        if budget.exhausted() {
            break;
        }
        let mut v = start.to_vec();
        // step away from the nearer face so the vertex stays distinct
        v[i] = if start[i] + options.initial_step <= 1.0 {
            start[i] + options.initial_step
        } else {
            start[i] - options.initial_step
        };
        values.push(budget.eval(&v));
        vertices.push(v);
    }
    if vertices.len() < d + 1 {
        return (start.to_vec(), start_value, false);
    }

    let mut order: Vec<usize> = (0..=d).collect();
    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (lo, hi, second) = (order[0], order[d], order[d - 1]);
        if values[hi] - values[lo] <= options.tol {
            return (vertices[lo].clone(), values[lo], true);
        }
        if budget.exhausted() {
            return (vertices[lo].clone(), values[lo], false);
        }

        let mut centroid = vec![0.0; d];
        for &i in &order[..d] {
            for (c, x) in centroid.iter_mut().zip(&vertices[i]) {
                *c += x / dim;
            }
        }
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&vertices[hi])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            project(&mut p);
            p
        };

        let xr = toward(reflect);
        let fr = budget.eval(&xr);
        if fr < values[lo] {
            let xe = toward(reflect * expand);
            let fe = budget.eval(&xe);
            if fe < fr {
                vertices[hi] = xe;
                values[hi] = fe;
            } else {
                vertices[hi] = xr;
                values[hi] = fr;
            }
            continue;
        }
        if fr < values[second] {
            vertices[hi] = xr;
            values[hi] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[hi] {
            let xc = toward(reflect * contract);
            let fc = budget.eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = toward(-contract);
            let fc = budget.eval(&xc);
            (xc, fc, fc < values[hi])
        };
        if accept {
            vertices[hi] = xc;
            values[hi] = fc;
            continue;
        }
        let anchor = vertices[lo].clone();
        for &i in &order[1..] {
            if budget.exhausted() {
                break;
            }
            for (v, a) in vertices[i].iter_mut().zip(&anchor) {
                *v = a + shrink * (*v - a);
            }
            values[i] = budget.eval(&vertices[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn options() -> SimplexOptions {
        SimplexOptions {
            max_evals: 20_000,
            tol: 1e-14,
            initial_step: 0.1,
        }
    }

    #[test]
    fn finds_interior_minimum() {
        let target = [0.3, 0.7, 0.55, 0.1];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
        let r = minimize(f, &[0.9; 4], &options());
        assert!(r.converged);
        for (x, t) in r.x.iter().zip(&target) {
            assert!((x - t).abs() < 1e-5, "{:?}", r.x);
        }
    }

    #[test]
    fn stays_in_box_for_exterior_minimum() {
        let mut seen_outside = false;
        let f = |x: &[f64]| {
            seen_outside |= x.iter().any(|v| !(0.0..=1.0).contains(v));
            (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2)
        };
        let r = minimize(f, &[0.5, 0.5], &options());
        assert!(!seen_outside);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && r.x[1].abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0] * 4.0 - 2.0, x[1] * 4.0 - 2.0);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize(f, &[0.1, 0.9], &options());
        assert!(r.value < 1e-8, "{}", r.value);
    }

    #[test]
    fn respects_budget() {
        let mut calls = 0;
        let f = |x: &[f64]| {
            calls += 1;
            x.iter().map(|v| v.sin()).sum()
        };
        let r = minimize(f, &[0.5; 6], &SimplexOptions { max_evals: 37, ..options() });
        assert_eq!(r.evals, 37);
        assert_eq!(calls, 37);
        assert!(!r.converged);
    }
}
