//! Exact solution of the Riemann problem for the 1D Euler equations of an
//! ideal gas.

use crate::error::{Error, Result};

/// Primitive variables `(rho, u, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl Primitive {
    pub const fn new(rho: f64, u: f64, p: f64) -> Self {
        Self { rho, u, p }
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }
}

/// Initial discontinuity at `x_d` between two constant states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannState {
    pub left: Primitive,
    pub right: Primitive,
    pub gamma: f64,
    pub x_d: f64,
    pub t_f: f64,
    pub domain: (f64, f64),
}

impl RiemannState {
    /// Shock-tube setup with left state `(2, 0, p_l)` and right state
    /// `(0.001, 0, 1)` split at `x = -10` on `[-20, 20]`.
    pub fn leblanc(p_l: f64) -> Self {
        Self {
            left: Primitive::new(2.0, 0.0, p_l),
            right: Primitive::new(0.001, 0.0, 1.0),
            gamma: 1.4,
            x_d: -10.0,
            t_f: 1e-4,
            domain: (-20.0, 20.0),
        }
    }

    /// The standard Sod tube on `[0, 1]` at `t = 0.2`.
    pub fn sod() -> Self {
        Self {
            left: Primitive::new(1.0, 0.0, 1.0),
            right: Primitive::new(0.125, 0.0, 0.1),
            gamma: 1.4,
            x_d: 0.5,
            t_f: 0.2,
            domain: (0.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (side, w) in [("left", self.left), ("right", self.right)] {
            if !(w.rho > 0.0 && w.p > 0.0)
                || !w.u.is_finite()
                || !w.rho.is_finite()
                || !w.p.is_finite()
            {
                return Err(Error::contract(format!(
                    "{side} state needs positive finite rho and p, got {w:?}"
                )));
            }
        }
        if !(self.gamma > 1.0) {
            return Err(Error::contract(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        let g = self.gamma;
        let critical = 2.0 / (g - 1.0) * (self.left.sound_speed(g) + self.right.sound_speed(g));
        if critical <= self.right.u - self.left.u {
            return Err(Error::contract("initial states generate vacuum"));
        }
        Ok(())
    }
}

/// Non-linear wave bounding the star region on one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    Shock { speed: f64 },
    Rarefaction { head: f64, tail: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarState {
    pub p: f64,
    pub u: f64,
    pub rho_left: f64,
    pub rho_right: f64,
    pub left_wave: Wave,
    pub right_wave: Wave,
    pub iterations: usize,
}

/// Pressure function `f_K(p)` of one side and its derivative.
fn side_function(p: f64, w: &Primitive, g: f64) -> (f64, f64) {
    let c = w.sound_speed(g);
    if p > w.p {
        let a = 2.0 / ((g + 1.0) * w.rho);
        let b = (g - 1.0) / (g + 1.0) * w.p;
        let q = (a / (p + b)).sqrt();
        ((p - w.p) * q, q * (1.0 - 0.5 * (p - w.p) / (b + p)))
    } else {
        let z = (g - 1.0) / (2.0 * g);
        let r = p / w.p;
        (
            2.0 * c / (g - 1.0) * (r.powf(z) - 1.0),
            r.powf(-(g + 1.0) / (2.0 * g)) / (w.rho * c),
        )
    }
}

const PRESSURE_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

/// Star-region pressure, velocity and densities.
pub fn star_state(s: &RiemannState) -> Result<StarState> {
    s.validate()?;
    let (l, r, g) = (s.left, s.right, s.gamma);
    let du = r.u - l.u;
    let f = |p: f64| {
        let (fl, dl) = side_function(p, &l, g);
        let (fr, dr) = side_function(p, &r, g);
        (fl + fr + du, dl + dr)
    };
    let (cl, cr) = (l.sound_speed(g), r.sound_speed(g));
    let z = (g - 1.0) / (2.0 * g);
    let guess =
        ((cl + cr - 0.5 * (g - 1.0) * du) / (cl / l.p.powf(z) + cr / r.p.powf(z))).powf(1.0 / z);

    // f is increasing with f(0+) < 0 when no vacuum forms
    let mut lo = 0.0;
    let mut hi = guess.max(l.p).max(r.p);
    let mut expand = 0;
    while f(hi).0 < 0.0 {
        hi *= 2.0;
        expand += 1;
        if expand > 2000 || !hi.is_finite() {
            return Err(Error::Solver(format!(
                "could not bracket star pressure; last upper bound {hi:e}"
            )));
        }
    }
    let mut p = if guess > 0.0 && guess.is_finite() {
        guess.min(hi)
    } else {
        0.5 * hi
    };
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::Solver(format!(
                "star pressure did not converge: p = {p:e}, bracket [{lo:e}, {hi:e}]"
            )));
        }
        let (fp, dp) = f(p);
        if fp == 0.0 {
            break;
        }
        if fp < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let mut next = p - fp / dp;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let change = (next - p).abs() / (0.5 * (next + p));
        p = next;
        if change < PRESSURE_TOL {
            // one more step reaches round-off with quadratic convergence
            let (fp, dp) = f(p);
            let polished = p - fp / dp;
            if polished > lo && polished < hi {
                p = polished;
            }
            break;
        }
    }
    let (fl, _) = side_function(p, &l, g);
    let (fr, _) = side_function(p, &r, g);
    let u = 0.5 * (l.u + r.u) + 0.5 * (fr - fl);
    let g6 = (g - 1.0) / (g + 1.0);
    let (rho_left, left_wave) = if p > l.p {
        let ratio = p / l.p;
        let speed = l.u - cl * ((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g)).sqrt();
        (
            l.rho * (ratio + g6) / (g6 * ratio + 1.0),
            Wave::Shock { speed },
        )
    } else {
        let ratio = p / l.p;
        let c_star = cl * ratio.powf(z);
        (
            l.rho * ratio.powf(1.0 / g),
            Wave::Rarefaction {
                head: l.u - cl,
                tail: u - c_star,
            },
        )
    };
    let (rho_right, right_wave) = if p > r.p {
        let ratio = p / r.p;
        let speed = r.u + cr * ((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g)).sqrt();
        (
            r.rho * (ratio + g6) / (g6 * ratio + 1.0),
            Wave::Shock { speed },
        )
    } else {
        let ratio = p / r.p;
        let c_star = cr * ratio.powf(z);
        (
            r.rho * ratio.powf(1.0 / g),
            Wave::Rarefaction {
                head: r.u + cr,
                tail: u + c_star,
            },
        )
    };
    Ok(StarState {
        p,
        u,
        rho_left,
        rho_right,
        left_wave,
        right_wave,
        iterations,
    })
}

/// Solution at similarity coordinate `xi = (x - x_d) / t`.
pub fn sample(s: &RiemannState, star: &StarState, xi: f64) -> Primitive {
    let g = s.gamma;
    let (l, r) = (s.left, s.right);
    if xi <= star.u {
        match star.left_wave {
            Wave::Shock { speed } if xi <= speed => l,
            Wave::Shock { .. } => Primitive::new(star.rho_left, star.u, star.p),
            Wave::Rarefaction { head, .. } if xi <= head => l,
            Wave::Rarefaction { tail, .. } if xi > tail => {
                Primitive::new(star.rho_left, star.u, star.p)
            }
            Wave::Rarefaction { .. } => {
                let cl = l.sound_speed(g);
                let u = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * l.u + xi);
                let c = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * (l.u - xi));
                let ratio = c / cl;
                Primitive::new(
                    l.rho * ratio.powf(2.0 / (g - 1.0)),
                    u,
                    l.p * ratio.powf(2.0 * g / (g - 1.0)),
                )
            }
        }
    } else {
        match star.right_wave {
            Wave::Shock { speed } if xi >= speed => r,
            Wave::Shock { .. } => Primitive::new(star.rho_right, star.u, star.p),
            Wave::Rarefaction { head, .. } if xi >= head => r,
            Wave::Rarefaction { tail, .. } if xi <= tail => {
                Primitive::new(star.rho_right, star.u, star.p)
            }
            Wave::Rarefaction { .. } => {
                let cr = r.sound_speed(g);
                let u = 2.0 / (g + 1.0) * (-cr + 0.5 * (g - 1.0) * r.u + xi);
                let c = 2.0 / (g + 1.0) * (cr - 0.5 * (g - 1.0) * (r.u - xi));
                let ratio = c / cr;
                Primitive::new(
                    r.rho * ratio.powf(2.0 / (g - 1.0)),
                    u,
                    r.p * ratio.powf(2.0 * g / (g - 1.0)),
                )
            }
        }
    }
}

/// `(rho, u, p)` at each position `x` and time `t > 0`.
pub fn riemann_exact(s: &RiemannState, x: &[f64], t: f64) -> Result<Vec<Primitive>> {
    if !(t > 0.0) {
        return Err(Error::contract(format!(
            "sampling time must be positive, got {t}"
        )));
    }
    let star = star_state(s)?;
    Ok(x.iter()
        .map(|&xi| sample(s, &star, (xi - s.x_d) / t))
        .collect())
}
