#![allow(dead_code)]

use entangle_core::linalg::{c, Gate, Matrix4c};
use entangle_core::weyl::su2;
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Haar-random U(4) from the QR decomposition of a complex Ginibre matrix.
pub fn haar_u4<R: Rng + ?Sized>(rng: &mut R) -> Gate {
    let z = Matrix4c::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / 2f64.sqrt()
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..4 {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..4 {
            q[(i, k)] *= phase;
        }
    }
    Gate(q)
}

pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<Complex64> {
    let tau = std::f64::consts::TAU;
    su2(rng.random::<f64>() * tau, rng.random::<f64>() * tau, rng.random::<f64>() * tau)
}

pub fn random_local<R: Rng + ?Sized>(rng: &mut R) -> Gate {
    Gate::local(&random_su2(rng), &random_su2(rng))
}
