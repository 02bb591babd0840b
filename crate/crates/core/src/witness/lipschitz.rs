//! Sampled lower bounds on `Lip(f) = sup ‖∇f‖` over the unit ball.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{norm, sample_ball, sample_sphere, stream_rng, SampleRng};

/// A `C¹` function on the closed unit ball of `ℝ^dim` with its gradient.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

impl SmoothFunction for crate::polynomials::Quadratic {
    fn dim(&self) -> usize {
        crate::polynomials::Quadratic::dim(self)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_slice(x))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.gradient_into(x, out);
        Ok(())
    }
}

/// Where and how densely [`estimate_lip`] samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Uniform points of the ball.
    pub uniform: usize,
    /// Uniform points of the sphere of radius 0.999.
    pub sphere: usize,
    /// Points stratified in radius over `[shell_inner, 1]`.
    pub shell: usize,
    pub shell_inner: f64,
    /// If set, shell points have at most this many nonzero coordinates.
    pub shell_support: Option<usize>,
    /// Number of best samples refined by local ascent.
    pub refine: usize,
    pub ascent_steps: usize,
    /// Finite-difference consistency checks of the gradient.
    pub fd_checks: usize,
    pub fd_step: f64,
    pub fd_tol: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            uniform: 20_000,
            sphere: 5_000,
            shell: 20_000,
            shell_inner: 0.0,
            shell_support: None,
            refine: 8,
            ascent_steps: 200,
            fd_checks: 64,
            fd_step: 1e-5,
            fd_tol: 1e-4,
            seed: 0,
        }
    }
}

/// Outcome of [`estimate_lip`].
#[derive(Debug, Clone, PartialEq)]
pub struct LipEstimate {
    /// `max ‖∇f‖` over every visited point: a lower bound on `Lip(f)`.
    pub lower: f64,
    pub argmax: Vec<f64>,
    pub samples: usize,
    /// Largest gradient/finite-difference discrepancy seen.
    pub fd_residual: f64,
}

/// Lower-bounds the Lipschitz constant of `f` on the unit ball by the largest
/// gradient norm found on a mixed sample followed by local ascent.
///
/// Before sampling, the gradient is spot-checked against central finite
/// differences; a discrepancy above `fd_tol` is an error.
pub fn estimate_lip<F: SmoothFunction + ?Sized>(f: &F, config: &SamplerConfig) -> Result<LipEstimate> {
    let dim = f.dim();
    let mut rng = stream_rng(config.seed, 0);
    let mut grad = alloc::vec![0.0; dim];

    let fd_residual = fd_spot_check(f, config, &mut stream_rng(config.seed, 1))?;

    let mut top: Vec<(f64, Vec<f64>)> = Vec::with_capacity(config.refine + 1);
    let mut samples = 0usize;
    let mut visit = |x: Vec<f64>, grad: &mut [f64], top: &mut Vec<(f64, Vec<f64>)>| -> Result<()> {
        f.gradient(&x, grad)?;
        let g = norm(grad);
        samples += 1;
        if top.len() < config.refine.max(1) || g > top[top.len() - 1].0 {
            let pos = top.partition_point(|(v, _)| *v >= g);
            top.insert(pos, (g, x));
            top.truncate(config.refine.max(1));
        }
        Ok(())
    };

    for _ in 0..config.uniform {
        visit(sample_ball(dim, &mut rng), &mut grad, &mut top)?;
    }
    for _ in 0..config.sphere {
        let mut x = sample_sphere(dim, &mut rng);
        x.iter_mut().for_each(|v| *v *= 0.999);
        visit(x, &mut grad, &mut top)?;
    }
    let inner = config.shell_inner.clamp(0.0, 1.0);
    for k in 0..config.shell {
        let u = (k as f64 + rng.random::<f64>()) / config.shell.max(1) as f64;
        let r = inner + (1.0 - inner) * u;
        let mut x = match config.shell_support {
            Some(s) if s < dim => sparse_direction(dim, s, &mut rng),
            _ => sample_sphere(dim, &mut rng),
        };
        x.iter_mut().for_each(|v| *v *= r);
        visit(x, &mut grad, &mut top)?;
    }

    let mut best = top
        .first()
        .cloned()
        .unwrap_or_else(|| (0.0, alloc::vec![0.0; dim]));
    for (g0, x0) in top {
        let (g, x) = ascend(f, x0, g0, config.ascent_steps, &mut rng, &mut samples)?;
        if g > best.0 || (g == best.0 && lex_less(&x, &best.1)) {
            best = (g, x);
        }
    }
    Ok(LipEstimate {
        lower: best.0,
        argmax: best.1,
        samples,
        fd_residual,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Unit vector supported on `support` random coordinates (with repetition
/// allowed, so sometimes fewer).
fn sparse_direction(dim: usize, support: usize, rng: &mut SampleRng) -> Vec<f64> {
    loop {
        let mut x = alloc::vec![0.0; dim];
        let k = rng.random_range(1..=support.max(1));
        let dense = sample_sphere(k, rng);
        for v in dense {
            let i = rng.random_range(0..dim);
            x[i] = v;
        }
        let n = norm(&x);
        if n > 0.0 {
            x.iter_mut().for_each(|v| *v /= n);
            return x;
        }
    }
}

/// Random-direction hill climb on `‖∇f‖`, staying inside the ball.
fn ascend<F: SmoothFunction + ?Sized>(
    f: &F,
    mut x: Vec<f64>,
    mut g: f64,
    steps: usize,
    rng: &mut SampleRng,
    samples: &mut usize,
) -> Result<(f64, Vec<f64>)> {
    let dim = x.len();
    let mut grad = alloc::vec![0.0; dim];
    let mut step = 0.05;
    for _ in 0..steps {
        let dir = sample_sphere(dim, rng);
        let mut y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
        let r = norm(&y);
        if r > 1.0 - 1e-12 {
            let shrink = (1.0 - 1e-12) / r;
            y.iter_mut().for_each(|v| *v *= shrink);
        }
        f.gradient(&y, &mut grad)?;
        *samples += 1;
        let gy = norm(&grad);
        if gy > g {
            g = gy;
            x = y;
            step *= 1.5;
        } else {
            step *= 0.85;
        }
        if step < 1e-9 {
            break;
        }
    }
    Ok((g, x))
}

fn fd_spot_check<F: SmoothFunction + ?Sized>(
    f: &F,
    config: &SamplerConfig,
    rng: &mut SampleRng,
) -> Result<f64> {
    let dim = f.dim();
    let h = config.fd_step;
    let mut grad = alloc::vec![0.0; dim];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut attempts = 0;
    while checked < config.fd_checks && attempts < 100 * config.fd_checks.max(1) {
        attempts += 1;
        let mut x = match config.shell_support {
            Some(s) if s < dim => sparse_direction(dim, s, rng),
            _ => sample_sphere(dim, rng),
        };
        let inner = config.shell_inner.clamp(0.0, 1.0);
        let r = (inner + (1.0 - inner) * rng.random::<f64>()).min(1.0 - 2.0 * h);
        x.iter_mut().for_each(|v| *v *= r);
        f.gradient(&x, &mut grad)?;
        if norm(&grad) == 0.0 && attempts < 50 * config.fd_checks.max(1) {
            continue;
        }
        checked += 1;
        for k in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (f.value(&xp)? - f.value(&xm)?) / (2.0 * h);
            worst = worst.max((fd - grad[k]).abs());
        }
    }
    if worst > config.fd_tol {
        return Err(Error::InconsistentGradient { residual: worst });
    }
    Ok(worst)
}
