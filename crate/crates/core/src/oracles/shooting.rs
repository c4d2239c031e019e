//! Continuum reference by shooting: integrate `E'' = -k0^2 (nu + eps |E|^2) E`
//! backward from `z_max`, where the outgoing condition fixes `E` and `E'` up to
//! the transmitted amplitude `T`, and tune `T` until the implied incoming
//! amplitude at `z = 0` is one.
//!
//! The integrator is a Taylor-series method of high order applied on each
//! material layer separately. Because the equation is invariant under a global
//! phase, only `|T|` has to be found; its phase follows from the incoming amplitude.

use crate::error::{NlhError, Result};
use crate::model::ProblemSpec;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    /// Number of Taylor terms per step.
    pub order: usize,
    /// Upper bound on `k_eff h` for a step, `k_eff = k0 sqrt(nu + eps |E|^2)`.
    pub max_phase_step: f64,
    /// Relative size allowed for the last two Taylor terms of a step.
    pub tail_tol: f64,
    /// Target for `| |E_inc implied| - 1 |`.
    pub root_tol: f64,
    pub max_root_iter: usize,
    /// Re-run with half the step bound and compare fields.
    pub self_check: bool,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { order: 30, max_phase_step: 1.0, tail_tol: 1e-17, root_tol: 1e-13, max_root_iter: 100, self_check: false }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 4 {
            return Err(NlhError::InvalidConfig("shooting order must be at least 4".into()));
        }
        if !(self.max_phase_step > 0.0 && self.root_tol > 0.0 && self.tail_tol > 0.0) {
            return Err(NlhError::InvalidConfig("shooting tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One Taylor step: `E(z0 + s) = sum_n coef[n] s^n` for `s` between 0 and `h`.
#[derive(Debug, Clone)]
struct TaylorStep {
    z0: f64,
    h: f64,
    coef: Vec<C64>,
}

impl TaylorStep {
    fn eval(&self, s: f64) -> (C64, C64) {
        let mut e = C64::new(0.0, 0.0);
        let mut de = C64::new(0.0, 0.0);
        for (n, c) in self.coef.iter().enumerate().rev() {
            e = e * s + c;
            if n > 0 {
                de = de * s + c * n as f64;
            }
        }
        (e, de)
    }
}

/// Taylor coefficients of the solution through `(e, de)` in a medium `(nu, eps)`.
fn taylor_coefficients(k0: f64, nu: f64, eps: f64, e: C64, de: C64, order: usize) -> Vec<C64> {
    let k2 = k0 * k0;
    let mut a = vec![C64::new(0.0, 0.0); order];
    let mut p = vec![0.0f64; order];
    let mut c = vec![C64::new(0.0, 0.0); order];
    a[0] = e;
    a[1] = de;
    for n in 0..order - 2 {
        // |E|^2 series is real; only the new diagonal of the products is needed.
        p[n] = (0..=n).map(|i| (a[i].conj() * a[n - i]).re).sum();
        c[n] = (0..=n).map(|i| a[n - i] * p[i]).sum();
        a[n + 2] = -(a[n] * nu + c[n] * eps) * (k2 / ((n + 1) as f64 * (n + 2) as f64));
    }
    a
}

/// Backward trajectory from `z_max` to 0.
#[derive(Debug, Clone)]
struct Trajectory {
    steps: Vec<TaylorStep>,
}

impl Trajectory {
    fn end_state(&self) -> (C64, C64) {
        let last = self.steps.last().unwrap();
        last.eval(last.h)
    }

    fn eval(&self, z: f64) -> (C64, C64) {
        // steps run from z_max downward; step k covers [z0 + h, z0] with h < 0.
        let idx = self.steps.partition_point(|s| s.z0 + s.h > z).min(self.steps.len() - 1);
        let s = &self.steps[idx];
        s.eval(z - s.z0)
    }
}

fn integrate(spec: &ProblemSpec, t: C64, cfg: &ShootingConfig, phase_step: f64) -> Trajectory {
    let k0 = spec.k0();
    let mat = spec.material();
    let bps = mat.breakpoints();
    let mut e = t * C64::from_polar(1.0, k0 * spec.z_max());
    let mut de = e * C64::new(0.0, k0);
    let mut steps = Vec::new();
    for l in (0..mat.layer_count()).rev() {
        let (nu, eps) = (mat.nu_values()[l], mat.eps_values()[l]);
        let (lo, hi) = (bps[l], bps[l + 1]);
        let mut z = hi;
        while z > lo {
            let k_eff = k0 * (nu + eps * e.norm_sqr()).sqrt();
            let mut h = (phase_step / k_eff).min(z - lo);
            let coef = taylor_coefficients(k0, nu, eps, e, de, cfg.order);
            let scale = e.norm() + de.norm() / k_eff;
            let n = cfg.order;
            loop {
                let tail = coef[n - 1].norm() * h.powi(n as i32 - 1) + coef[n - 2].norm() * h.powi(n as i32 - 2);
                if tail <= cfg.tail_tol * scale || h < 1e-12 {
                    break;
                }
                h *= 0.5;
            }
            let last = z - h <= lo;
            let step = TaylorStep { z0: z, h: if last { lo - z } else { -h }, coef };
            let (ne, nde) = step.eval(step.h);
            e = ne;
            de = nde;
            z = if last { lo } else { z - h };
            steps.push(step);
        }
    }
    Trajectory { steps }
}

/// Implied incoming amplitude `(E(0) + E'(0) / (i k0)) / 2` of a trajectory.
fn incoming_amplitude(k0: f64, traj: &Trajectory) -> C64 {
    let (e, de) = traj.end_state();
    (e + de / C64::new(0.0, k0)) * 0.5
}

/// Implied incoming amplitude when the transmitted amplitude is `tau` (real).
pub fn incoming_for_transmitted(spec: &ProblemSpec, tau: f64, cfg: &ShootingConfig) -> C64 {
    incoming_amplitude(spec.k0(), &integrate(spec, C64::new(tau, 0.0), cfg, cfg.max_phase_step))
}

/// Locked continuum solution.
#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub t: C64,
    pub r: C64,
    traj: Trajectory,
}

impl ShootingSolution {
    pub fn field_at(&self, z: f64) -> C64 {
        self.traj.eval(z).0
    }

    pub fn derivative_at(&self, z: f64) -> C64 {
        self.traj.eval(z).1
    }

    pub fn sample(&self, z: &[f64]) -> Vec<C64> {
        z.iter().map(|zz| self.field_at(*zz)).collect()
    }

    /// `Im(conj(E) E') / k0`, constant in lossless media.
    pub fn flux_at(&self, z: f64, k0: f64) -> f64 {
        let (e, de) = self.traj.eval(z);
        (e.conj() * de).im / k0
    }
}

/// Brent's method on `f` over a bracketing interval.
fn brent(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64, max_iter: usize) -> Option<f64> {
    if fa * fb > 0.0 {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 4.0 * f64::EPSILON * b.abs();
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol || xm.abs() <= tol1 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    None
}

/// Continuum solution whose `|T|` is the root of `|E_inc implied| = 1` nearest
/// to `|t_guess|`, sampled at `z`.
pub fn shooting_reference(spec: &ProblemSpec, z: &[f64], t_guess: C64, cfg: &ShootingConfig) -> Result<(Vec<C64>, ShootingSolution)> {
    let sol = shooting_solve(spec, t_guess, cfg)?;
    Ok((sol.sample(z), sol))
}

pub fn shooting_solve(spec: &ProblemSpec, t_guess: C64, cfg: &ShootingConfig) -> Result<ShootingSolution> {
    cfg.validate()?;
    let k0 = spec.k0();
    let mut g = |tau: f64| incoming_for_transmitted(spec, tau, cfg).norm() - 1.0;
    let tau0 = t_guess.norm().max(1e-6);
    let g0 = g(tau0);
    let tau = if g0.abs() <= cfg.root_tol {
        tau0
    } else {
        // Widen outward from the guess until a sign change appears on either side.
        let mut delta = 1e-3 * tau0;
        let (mut lo, mut glo, mut hi, mut ghi) = (tau0, g0, tau0, g0);
        let mut bracket = None;
        for _ in 0..200 {
            let up = hi + delta;
            let gup = g(up);
            if gup * ghi <= 0.0 {
                bracket = Some((hi, ghi, up, gup));
                break;
            }
            hi = up;
            ghi = gup;
            let down = lo - delta;
            if down > 0.0 {
                let gdown = g(down);
                if gdown * glo <= 0.0 {
                    bracket = Some((down, gdown, lo, glo));
                    break;
                }
                lo = down;
                glo = gdown;
            }
            delta *= 1.25;
        }
        let (a, fa, b, fb) =
            bracket.ok_or_else(|| NlhError::RootNotFound(format!("no sign change of |E_inc| - 1 near |T| = {tau0}")))?;
        brent(&mut g, a, b, fa, fb, cfg.root_tol, cfg.max_root_iter)
            .ok_or_else(|| NlhError::RootNotFound(format!("root iteration did not settle in [{a}, {b}]")))?
    };
    let phase_of = |step: f64| {
        let traj = integrate(spec, C64::new(tau, 0.0), cfg, step);
        let a = incoming_amplitude(k0, &traj);
        (traj, a)
    };
    let (_, a) = phase_of(cfg.max_phase_step);
    let t = C64::from_polar(tau, -a.arg());
    let traj = integrate(spec, t, cfg, cfg.max_phase_step);
    let (e0, _) = traj.end_state();
    let a_locked = incoming_amplitude(k0, &traj);
    let sol = ShootingSolution { t, r: e0 - a_locked, traj };
    if cfg.self_check {
        let fine = integrate(spec, t, cfg, 0.5 * cfg.max_phase_step);
        let n = 257;
        let delta = (0..n)
            .map(|j| {
                let zz = spec.z_max() * j as f64 / (n - 1) as f64;
                (fine.eval(zz).0 - sol.traj.eval(zz).0).norm()
            })
            .fold(0.0, f64::max);
        if delta > 1e-10 {
            return Err(NlhError::StiffnessWarning { delta });
        }
    }
    Ok(sol)
}

/// Points of the continuum transmittance curve. For `eps` values scaled by a
/// common multiplier, the solution with transmitted amplitude `tau` and unit
/// multiplier rescales to unit incoming amplitude at multiplier `|a(tau)|^2`,
/// with transmittance `tau^2 / |a(tau)|^2`. Returns `(multiplier, transmittance)`.
pub fn transmittance_curve(spec: &ProblemSpec, taus: &[f64], cfg: &ShootingConfig) -> Vec<(f64, f64)> {
    taus.iter()
        .map(|&tau| {
            let a2 = incoming_for_transmitted(spec, tau, cfg).norm_sqr();
            (a2, tau * tau / a2)
        })
        .collect()
}
