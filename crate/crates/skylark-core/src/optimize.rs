//! Bounded derivative-free minimization.
//!
//! Two workhorses: golden-section search for unimodal one-dimensional
//! objectives, and a box-constrained Nelder-Mead simplex with deterministic
//! multi-start for the two- and three-parameter retrieval objectives.

/// Box bounds, one `(lo, hi)` pair per dimension.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "degenerate bounds");
        Bounds { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn span(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Point at box fractions `u` (each in [0, 1]).
    pub fn at_fraction(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, f)| self.lo[i] + f * self.span(i))
            .collect()
    }
}

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct MinResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> MinResult {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut evals = 0;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    evals += 2;
    while (b - a) > xtol && evals < 400 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    MinResult {
        x: vec![x],
        fx,
        evaluations: evals + 1,
        converged: (b - a) <= xtol,
    }
}

/// One Nelder-Mead descent from `start`, candidates clipped to the box.
fn nelder_mead_once<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    bounds: &Bounds,
    start: &[f64],
    initial_step: f64,
    max_iter: usize,
) -> MinResult {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let dim = bounds.dim();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    // Simplex seeded from the start plus one axis step per dimension.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut start = start.to_vec();
    bounds.clip(&mut start);
    simplex.push(start.clone());
    for i in 0..dim {
        let mut p = start.clone();
        let step = initial_step * bounds.span(i);
        p[i] = if p[i] + step <= bounds.hi[i] {
            p[i] + step
        } else {
            p[i] - step
        };
        bounds.clip(&mut p);
        simplex.push(p);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let mut converged = false;
    for _ in 0..max_iter {
        // Sort ascending by objective.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        let simplex_sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let fvals_sorted: Vec<f64> = order.iter().map(|&i| fvals[i]).collect();
        simplex = simplex_sorted;
        fvals = fvals_sorted;

        let best = fvals[0];
        let worst = fvals[dim];
        let size: f64 = (0..dim)
            .map(|i| {
                let lo = simplex.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
                (hi - lo) / bounds.span(i)
            })
            .fold(0.0, f64::max);
        if size < 1e-12 && (worst - best).abs() <= 1e-15 * (1.0 + best.abs()) {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for p in simplex.iter().take(dim) {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / dim as f64;
            }
        }

        let blend = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            bounds.clip(&mut p);
            p
        };

        let reflected = blend(ALPHA);
        let f_r = eval(&reflected, &mut evals);
        if f_r < fvals[0] {
            let expanded = blend(GAMMA);
            let f_e = eval(&expanded, &mut evals);
            if f_e < f_r {
                simplex[dim] = expanded;
                fvals[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                fvals[dim] = f_r;
            }
        } else if f_r < fvals[dim - 1] {
            simplex[dim] = reflected;
            fvals[dim] = f_r;
        } else {
            let contracted = if f_r < fvals[dim] {
                blend(RHO)
            } else {
                blend(-RHO)
            };
            let f_c = eval(&contracted, &mut evals);
            if f_c < fvals[dim].min(f_r) {
                simplex[dim] = contracted;
                fvals[dim] = f_c;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=dim {
                    let p: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + SIGMA * (v - b))
                        .collect();
                    simplex[i] = p;
                    fvals[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..=dim).collect();
    order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
    MinResult {
        x: simplex[order[0]].clone(),
        fx: fvals[order[0]],
        evaluations: evals,
        converged,
    }
}

/// Deterministic Latin-square start fractions for up to three dimensions.
fn latin_starts(dim: usize) -> Vec<Vec<f64>> {
    const LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    const PERM2: [usize; 5] = [2, 0, 4, 1, 3];
    const PERM3: [usize; 5] = [4, 2, 0, 3, 1];
    (0..5)
        .map(|i| {
            let mut u = vec![LEVELS[i]];
            if dim >= 2 {
                u.push(LEVELS[PERM2[i]]);
            }
            if dim >= 3 {
                u.push(LEVELS[PERM3[i]]);
            }
            u.truncate(dim);
            u
        })
        .collect()
}

/// Box-constrained Nelder-Mead with five Latin-square starts and two
/// shrinking polish restarts around the incumbent.
pub fn nelder_mead_multistart<F: FnMut(&[f64]) -> f64>(mut f: F, bounds: &Bounds) -> MinResult {
    let dim = bounds.dim();
    let max_iter = 400 * dim;
    let mut best: Option<MinResult> = None;
    let mut total_evals = 0;

    for u in latin_starts(dim) {
        let start = bounds.at_fraction(&u);
        let r = nelder_mead_once(&mut f, bounds, &start, 0.15, max_iter);
        total_evals += r.evaluations;
        if best.as_ref().map_or(true, |b| r.fx < b.fx) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one start");

    // Polish: restart with a tight simplex around the incumbent.
    for step in [1e-4, 1e-7] {
        let r = nelder_mead_once(&mut f, bounds, &best.x, step, max_iter);
        total_evals += r.evaluations;
        if r.fx < best.fx {
            best = r;
        }
    }

    best.evaluations = total_evals;
    best
}
