//! The simple random walk embedded in Brownian motion at successive exit times.
//!
//! Step `k` moves by `+-h` after an exit time `dtau_k = (h/sigma)^2 * tau_unit`; the sign and
//! the time are independent. One `u64` per step supplies both: its top 52 bits feed the
//! exit-time quantile and its lowest bit is the sign.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::rng::{open_unit, RngStream};
use super::tau;
use crate::error::Result;
use crate::lattice::{theta_of, LatticeParams};

/// One trajectory, kept in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitWalkPath {
    /// Exit-time increments in physical time.
    pub dtau: Vec<f64>,
    /// Steps, each `+h` or `-h`.
    pub dx: Vec<f64>,
    pub n_theta: usize,
    pub theta_n: f64,
    /// First even index with `tau_J > theta_n`.
    pub j: usize,
    /// Largest index with `tau_L < theta_n`; `L` is `J-1` or `J-2`.
    pub l: usize,
    pub x_at_ntheta: f64,
    pub x_at_j: f64,
    pub x_at_l: f64,
    pub tau_at_j: f64,
}

/// The fields of a path needed by the estimators, with positions in units of `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkSummary {
    pub j: u32,
    pub l: u32,
    pub steps_at_ntheta: i32,
    pub steps_at_j: i32,
    /// `tau_J` in units of `(h/sigma)^2`.
    pub tau_at_j: f64,
}

#[inline]
fn draw<R: RngCore>(rng: &mut R) -> (f64, i32) {
    let r = rng.next_u64();
    (tau::table().quantile(open_unit(r)), if r & 1 == 1 { 1 } else { -1 })
}

/// Simulates until both `n_theta` and `J` are reached, in units where `theta_n = n_theta`.
#[inline]
pub fn simulate_summary<R: RngCore>(n_theta: usize, rng: &mut R) -> WalkSummary {
    let theta = n_theta as f64;
    let mut tau = 0.0;
    let mut pos = 0i32;
    let mut k = 0u32;
    let mut l = 0u32;
    let mut at_ntheta = 0i32;
    loop {
        let (dt, s) = draw(rng);
        k += 1;
        tau += dt;
        pos += s;
        if tau < theta {
            l = k;
        }
        if k as usize == n_theta {
            at_ntheta = pos;
        }
        if k.is_multiple_of(2) && tau > theta {
            // J is found; keep stepping only if n_theta is still ahead.
            let j = k;
            let at_j = pos;
            let tau_j = tau;
            while (k as usize) < n_theta {
                let (_, s) = draw(rng);
                k += 1;
                pos += s;
            }
            if (j as usize) < n_theta {
                at_ntheta = pos;
            }
            return WalkSummary { j, l, steps_at_ntheta: at_ntheta, steps_at_j: at_j, tau_at_j: tau_j };
        }
    }
}

/// Full path for the query time `t` on the lattice `lp`.
pub fn simulate_walk(t: f64, lp: &LatticeParams, stream: RngStream) -> Result<ExitWalkPath> {
    let ti = theta_of(t, lp)?;
    let h = lp.h();
    let unit = lp.delta();
    let mut rng = stream.rng();
    let theta = ti.n_theta as f64;
    let mut dtau = Vec::new();
    let mut dx = Vec::new();
    let (mut tau, mut pos) = (0.0, 0i64);
    let mut positions = vec![0i64];
    let mut l = 0usize;
    let mut j = None;
    let mut tau_j = 0.0;
    while j.is_none() || dx.len() < ti.n_theta {
        let (dt, s) = draw(&mut rng);
        tau += dt;
        pos += i64::from(s);
        dtau.push(dt * unit);
        dx.push(f64::from(s) * h);
        positions.push(pos);
        let k = dx.len();
        if j.is_none() {
            if tau < theta {
                l = k;
            }
            if k.is_multiple_of(2) && tau > theta {
                j = Some(k);
                tau_j = tau * unit;
            }
        }
    }
    let j = j.expect("loop exits with J set");
    Ok(ExitWalkPath {
        dtau,
        dx,
        n_theta: ti.n_theta,
        theta_n: ti.theta_n,
        j,
        l,
        x_at_ntheta: positions[ti.n_theta] as f64 * h,
        x_at_j: positions[j] as f64 * h,
        x_at_l: positions[l] as f64 * h,
        tau_at_j: tau_j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_matches_full_path() {
        let lp = LatticeParams::new(32, 1.0, 1.0).unwrap();
        for s in 0..200 {
            let stream = RngStream::new(11, s);
            let full = simulate_walk(0.0, &lp, stream).unwrap();
            let sum = simulate_summary(32, &mut stream.rng());
            assert_eq!(full.j, sum.j as usize);
            assert_eq!(full.l, sum.l as usize);
            assert_eq!(full.x_at_j, f64::from(sum.steps_at_j) * lp.h());
            assert_eq!(full.x_at_ntheta, f64::from(sum.steps_at_ntheta) * lp.h());
            assert!((full.tau_at_j - sum.tau_at_j * lp.delta()).abs() < 1e-12);
        }
    }

    #[test]
    fn path_invariants() {
        let lp = LatticeParams::new(16, 2.0, 0.5).unwrap();
        let h = lp.h();
        for s in 0..500 {
            let p = simulate_walk(0.3, &lp, RngStream::new(5, s)).unwrap();
            assert!(p.j >= 2 && p.j.is_multiple_of(2));
            assert!(p.l + 1 == p.j || p.l + 2 == p.j);
            assert!((p.x_at_j - p.x_at_l).abs() <= 2.0 * h + 1e-12);
            assert!(p.dtau.iter().all(|&d| d > 0.0));
            assert!(p.dx.len() >= p.n_theta.max(p.j));
            let tau_l: f64 = p.dtau[..p.l].iter().sum();
            assert!(tau_l < p.theta_n && p.tau_at_j > p.theta_n);
        }
    }
}
