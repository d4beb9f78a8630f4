//! Derivative-free Nelder-Mead simplex minimisation.
//!
//! Classic coefficients (reflect 1, expand 2, contract 1/2, shrink 1/2)
//! over a dense parameter vector; the callers transform to log space before
//! handing coordinates in, so positivity never needs explicit constraints
//! here. Termination on simplex diameter (max coordinate spread) or on an
//! evaluation budget.

/// Outcome of one simplex run.
#[derive(Debug, Clone)]
pub struct NmOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Termination controls.
#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    /// Stop when every coordinate spread across vertices drops below this.
    pub diameter_tol: f64,
    /// Evaluation budget.
    pub max_evaluations: usize,
    /// Offset of the non-anchor vertices from the start point.
    pub initial_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { diameter_tol: 1e-6, max_evaluations: 20_000, initial_step: 0.25 }
    }
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

/// Minimise `f` from `x0`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NmOptions) -> NmOutcome {
    let n = x0.len();
    assert!(n >= 1, "need at least one free parameter");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vertex> = Vec::with_capacity(n + 1);
    simplex.push(Vertex { x: x0.to_vec(), f: eval(x0, &mut evals) });
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let fx = eval(&x, &mut evals);
        simplex.push(Vertex { x, f: fx });
    }

    loop {
        simplex.sort_by(|a, b| a.f.partial_cmp(&b.f).unwrap());
        let diameter = (0..n)
            .map(|k| {
                let lo = simplex.iter().map(|v| v.x[k]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|v| v.x[k]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0f64, f64::max);
        if diameter < opts.diameter_tol {
            let best = &simplex[0];
            return NmOutcome { x: best.x.clone(), value: best.f, evaluations: evals, converged: true };
        }
        if evals >= opts.max_evaluations {
            let best = &simplex[0];
            return NmOutcome {
                x: best.x.clone(),
                value: best.f,
                evaluations: evals,
                converged: false,
            };
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, &xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].f;
        let second_worst = simplex[n - 1].f;
        let best = simplex[0].f;

        let blend = |t: f64| -> Vec<f64> {
            // point = centroid + t (centroid - worst_vertex)
            centroid
                .iter()
                .zip(&simplex[n].x)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let f_reflected = eval(&reflected, &mut evals);
        if f_reflected < best {
            let expanded = blend(2.0);
            let f_expanded = eval(&expanded, &mut evals);
            if f_expanded < f_reflected {
                simplex[n] = Vertex { x: expanded, f: f_expanded };
            } else {
                simplex[n] = Vertex { x: reflected, f: f_reflected };
            }
        } else if f_reflected < second_worst {
            simplex[n] = Vertex { x: reflected, f: f_reflected };
        } else {
            let contracted = if f_reflected < worst { blend(0.5) } else { blend(-0.5) };
            let f_contracted = eval(&contracted, &mut evals);
            if f_contracted < worst.min(f_reflected) {
                simplex[n] = Vertex { x: contracted, f: f_contracted };
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].x.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (xi, &bi) in v.x.iter_mut().zip(&best_x) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    v.f = eval(&v.x.clone(), &mut evals);
                }
            }
        }
    }
}
