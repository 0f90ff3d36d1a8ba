//! Nelder-Mead downhill simplex.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop once every vertex lies within `tol` of the best one (max norm).
    pub tol: f64,
    pub max_iter: usize,
    /// Relative initial step per coordinate; coordinates at zero use the step itself.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tol: 1e-8,
            max_iter: 5_000,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
}

pub fn nelder_mead<F>(mut f: F, initial: &[f64], cfg: &NelderMeadConfig) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = initial.len();
    if n == 0 {
        return Err(Error::Domain("simplex needs at least one dimension".into()));
    }
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        clean(f(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((initial.to_vec(), eval(initial)));
    for i in 0..n {
        let mut x = initial.to_vec();
        x[i] += if x[i] == 0.0 { cfg.initial_step } else { cfg.initial_step * x[i].abs() };
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < cfg.tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;
        let (worst, f_worst) = simplex[n].clone();

        let xr = affine(&centroid, &worst, -cfg.reflection);
        let fr = eval(&xr);
        if fr < f_best {
            let xe = affine(&centroid, &xr, cfg.expansion);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < f_second {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc, accept) = if fr < f_worst {
                let xc = affine(&centroid, &xr, cfg.contraction);
                let fc = eval(&xc);
                (xc, fc, fc <= fr)
            } else {
                let xc = affine(&centroid, &worst, cfg.contraction);
                let fc = eval(&xc);
                (xc, fc, fc < f_worst)
            };
            if accept {
                simplex[n] = (xc, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x = affine(&anchor, &vertex.0, cfg.shrink);
                    let fx = eval(&x);
                    *vertex = (x, fx);
                }
            }
        }
        history.push(simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min));
    }
    let (point, value) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        point,
        value,
        iterations,
        evaluations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead(|x| x.iter().map(|v| (v - 3.0).powi(2)).sum(), &[0.0; 4], &NelderMeadConfig::default())
            .unwrap();
        assert!(r.converged);
        assert!(r.point.iter().all(|v| (v - 3.0).abs() < 1e-6), "{:?}", r.point);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &NelderMeadConfig::default()).unwrap();
        assert!(r.iterations <= 5_000);
        assert!((r.point[0] - 1.0).abs() < 1e-4 && (r.point[1] - 1.0).abs() < 1e-4, "{:?}", r.point);
    }

    #[test]
    fn absolute_value_in_one_dimension() {
        let cfg = NelderMeadConfig::default();
        let r = nelder_mead(|x| x[0].abs(), &[2.0], &cfg).unwrap();
        assert!(r.point[0].abs() < cfg.tol);
    }

    #[test]
    fn best_value_never_increases() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + x[0].sin();
        let r = nelder_mead(f, &[5.0, 5.0], &NelderMeadConfig::default()).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nan_is_treated_as_infinite() {
        let r = nelder_mead(|x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) }, &[1.0], &NelderMeadConfig::default())
            .unwrap();
        assert!((r.point[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn iteration_cap_reports_best_so_far() {
        let cfg = NelderMeadConfig { max_iter: 3, ..Default::default() };
        let r = nelder_mead(|x| x[0] * x[0] + x[1] * x[1], &[4.0, 4.0], &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(r.value <= 32.0);
    }
}
