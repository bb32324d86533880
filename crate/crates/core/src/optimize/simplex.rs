//! Nelder-Mead downhill simplex with the standard coefficients
//! (reflection 1, expansion 2, contraction 1/2, shrink 1/2).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Vertex spread tolerance, relative to `max(|x_best|, step)` per coordinate.
    pub x_tol: f64,
    /// Objective spread tolerance, relative to `|f_best|`.
    pub f_tol: f64,
    pub max_iterations: usize,
    /// Diameter (same relative measure) above which hitting the iteration
    /// cap is reported as non-convergence.
    pub stall_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-4,
            f_tol: 1e-4,
            max_iterations: 400,
            stall_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Tolerances met before the iteration cap.
    pub within_tolerance: bool,
    /// Relative diameter of the final simplex.
    pub diameter: f64,
    /// Best objective value after each iteration; entry 0 is the initial simplex.
    pub trace: Vec<(usize, f64)>,
}

impl SimplexOutcome {
    pub fn converged(&self, opts: &SimplexOptions) -> bool {
        self.within_tolerance || self.diameter <= opts.stall_tol
    }
}

struct Simplex {
    vertices: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.vertices = order.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = order.iter().map(|&i| self.values[i]).collect();
    }

    fn diameter(&self, scale: &[f64]) -> f64 {
        let best = &self.vertices[0];
        self.vertices[1..]
            .iter()
            .flat_map(|v| v.iter().zip(best).zip(scale).map(|((a, b), s)| (a - b).abs() / s))
            .fold(0.0, f64::max)
    }

    fn spread(&self) -> f64 {
        let best = self.values[0];
        self.values[1..].iter().map(|v| (v - best).abs()).fold(0.0, f64::max)
    }
}

fn affine(a: &[f64], wa: f64, b: &[f64], wb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

/// Minimizes `f` starting from `x0` with an initial simplex of `x0` plus one
/// vertex per coordinate offset by `steps[i]`. NaN objective values are
/// treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len(), "one step per coordinate");
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut vertices = vec![x0.to_vec()];
    for (i, &s) in steps.iter().enumerate() {
        let mut v = x0.to_vec();
        v[i] += s;
        vertices.push(v);
    }
    let values = vertices.iter().map(|v| eval(v)).collect();
    let mut simplex = Simplex { vertices, values };
    simplex.sort();

    let scale_for = |best: &[f64]| -> Vec<f64> {
        best.iter()
            .zip(steps)
            .map(|(b, s)| b.abs().max(s.abs()).max(f64::MIN_POSITIVE))
            .collect()
    };

    let mut trace = vec![(0usize, simplex.values[0])];
    let mut iterations = 0usize;
    let mut within_tolerance = false;

    while iterations < opts.max_iterations {
        let scale = scale_for(&simplex.vertices[0]);
        if simplex.diameter(&scale) <= opts.x_tol
            && simplex.spread() <= opts.f_tol * simplex.values[0].abs()
        {
            within_tolerance = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex.vertices[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex.vertices[n].clone();
        let f_best = simplex.values[0];
        let f_second = simplex.values[n - 1];
        let f_worst = simplex.values[n];

        let reflected = affine(&centroid, 2.0, &worst, -1.0);
        let f_r = eval(&reflected);

        let mut shrink = false;
        if f_r < f_best {
            let expanded = affine(&centroid, 3.0, &worst, -2.0);
            let f_e = eval(&expanded);
            if f_e < f_r {
                simplex.vertices[n] = expanded;
                simplex.values[n] = f_e;
            } else {
                simplex.vertices[n] = reflected;
                simplex.values[n] = f_r;
            }
        } else if f_r < f_second {
            simplex.vertices[n] = reflected;
            simplex.values[n] = f_r;
        } else if f_r < f_worst {
            let outside = affine(&centroid, 1.5, &worst, -0.5);
            let f_c = eval(&outside);
            if f_c <= f_r {
                simplex.vertices[n] = outside;
                simplex.values[n] = f_c;
            } else {
                shrink = true;
            }
        } else {
            let inside = affine(&centroid, 0.5, &worst, 0.5);
            let f_cc = eval(&inside);
            if f_cc < f_worst {
                simplex.vertices[n] = inside;
                simplex.values[n] = f_cc;
            } else {
                shrink = true;
            }
        }

        if shrink {
            let best = simplex.vertices[0].clone();
            for j in 1..=n {
                let v = affine(&best, 0.5, &simplex.vertices[j], 0.5);
                simplex.values[j] = eval(&v);
                simplex.vertices[j] = v;
            }
        }
        simplex.sort();
        trace.push((iterations, simplex.values[0]));
    }

    let diameter = simplex.diameter(&scale_for(&simplex.vertices[0]));
    SimplexOutcome {
        x: simplex.vertices[0].clone(),
        f: simplex.values[0],
        iterations,
        evaluations,
        within_tolerance,
        diameter,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let out = nelder_mead(
            |p| (p[0] - 3.0).powi(2) + 2.0 * (p[1] + 1.0).powi(2) + 0.5,
            &[0.0, 0.0],
            &[0.5, 0.5],
            &SimplexOptions { x_tol: 1e-8, f_tol: 1e-12, ..Default::default() },
        );
        assert!((out.x[0] - 3.0).abs() < 1e-4, "{:?}", out.x);
        assert!((out.x[1] + 1.0).abs() < 1e-4, "{:?}", out.x);
        assert!(out.within_tolerance);
    }

    #[test]
    fn rosenbrock() {
        let out = nelder_mead(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
            &SimplexOptions { x_tol: 1e-10, f_tol: 1e-10, max_iterations: 2000, ..Default::default() },
        );
        assert!((out.x[0] - 1.0).abs() < 1e-3 && (out.x[1] - 1.0).abs() < 1e-3, "{:?}", out.x);
    }

    #[test]
    fn tiny_scale_one_dimension() {
        // Coefficients of order 1e-11, as in the dispersion fit.
        let target = -4.118e-11;
        let out = nelder_mead(
            |p| ((p[0] - target) / 1e-12).powi(2),
            &[0.0],
            &[1e-12],
            &SimplexOptions::default(),
        );
        assert!(((out.x[0] - target) / target).abs() < 1e-3, "{:?}", out.x);
        assert!(out.within_tolerance);
    }

    #[test]
    fn trace_is_monotone_non_increasing() {
        let out = nelder_mead(
            |p| p[0].abs() + (p[1] - 1.0).abs(),
            &[5.0, 5.0],
            &[1.0, 1.0],
            &SimplexOptions::default(),
        );
        assert!(out.trace.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn iteration_cap_reports_stall() {
        let opts = SimplexOptions { max_iterations: 3, ..Default::default() };
        let out = nelder_mead(|p| (p[0] - 100.0).powi(2), &[0.0], &[1.0], &opts);
        assert_eq!(out.iterations, 3);
        assert!(!out.within_tolerance);
        assert!(!out.converged(&opts));
    }

    #[test]
    fn nan_is_treated_as_infinite() {
        let out = nelder_mead(
            |p| if p[0] > 0.5 { f64::NAN } else { (p[0] + 1.0).powi(2) },
            &[0.0],
            &[1.0],
            &SimplexOptions::default(),
        );
        assert!((out.x[0] + 1.0).abs() < 1e-3);
    }
}
