//! Derivative-free Nelder–Mead simplex minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Converged once the spread of objective values across the simplex
    /// falls to this level.
    pub f_tolerance: f64,
    pub max_iterations: usize,
    /// Edge length of the initial simplex along each coordinate.
    pub initial_step: f64,
    /// Number of restarts from the current best point after convergence.
    /// A restart that does not improve by more than `f_tolerance` ends the
    /// search.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            f_tolerance: 1e-8,
            max_iterations: 2000,
            initial_step: 0.5,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting at `x0`. Non-finite objective values are treated
/// as `+inf`, so the simplex simply retreats from infeasible regions.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut best = x0.to_vec();
    let mut best_value = eval(x0);
    let mut iterations = 0;
    let mut converged = false;
    for attempt in 0..=opts.restarts {
        let budget = opts.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let run = simplex_search(&eval, &best, opts, budget);
        iterations += run.iterations;
        let improvement = best_value - run.value;
        let improved = run.value < best_value;
        if improved {
            best = run.x;
            best_value = run.value;
        }
        converged = run.converged;
        if !run.converged || (attempt > 0 && !(improvement > opts.f_tolerance)) {
            break;
        }
    }
    Minimum {
        x: best,
        value: best_value,
        iterations,
        converged,
    }
}

fn simplex_search<F>(f: &F, x0: &[f64], opts: &NelderMeadOptions, budget: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let point = |base: &[f64], dir: &[f64], t: f64| -> Vec<f64> {
        base.iter().zip(dir).map(|(b, d)| b + t * (d - b)).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if (values[n] - values[0]).abs() <= opts.f_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();

        let reflected = point(&centroid, &worst, -REFLECT);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = point(&centroid, &worst, -EXPAND);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = point(&centroid, &reflected, CONTRACT);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = point(&centroid, &worst, CONTRACT);
            let fc = f(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = point(&best, &simplex[i], SHRINK);
            values[i] = f(&simplex[i]);
        }
    }

    let (i_best, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty simplex");
    Minimum {
        x: simplex[i_best].clone(),
        value: values[i_best],
        iterations,
        converged,
    }
}
