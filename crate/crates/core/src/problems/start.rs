//! The four benchmark starting points.

use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StartKind {
    /// Zero primal point and multiplier.
    Sp0,
    /// Cone axis point `(1, 0, …, 0)` with zero multiplier.
    Sp1,
    /// First canonical vector with an all-ones multiplier.
    Sp2,
    /// Uniform `[0, 1)` coordinates from the seed.
    Sp3,
}

impl StartKind {
    pub const ALL: [StartKind; 4] = [StartKind::Sp0, StartKind::Sp1, StartKind::Sp2, StartKind::Sp3];

    pub fn as_str(&self) -> &'static str {
        match self {
            StartKind::Sp0 => "SP0",
            StartKind::Sp1 => "SP1",
            StartKind::Sp2 => "SP2",
            StartKind::Sp3 => "SP3",
        }
    }
}

impl core::fmt::Display for StartKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StartKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SP0" => Ok(StartKind::Sp0),
            "SP1" => Ok(StartKind::Sp1),
            "SP2" => Ok(StartKind::Sp2),
            "SP3" => Ok(StartKind::Sp3),
            other => Err(Error::InvalidArgument(alloc::format!("unknown starting point {other:?}"))),
        }
    }
}

/// `(x⁰, λ⁰)` of dimensions `(primal_dim, dual_dim)`. `SP1` needs a primal
/// cone, so `has_primal_cone = false` rejects it.
pub fn starting_point(
    primal_dim: usize,
    dual_dim: usize,
    kind: StartKind,
    has_primal_cone: bool,
    seed: u64,
) -> Result<(Vector, Vector)> {
    let e1 = || {
        let mut v = Vector::zeros(primal_dim);
        if primal_dim > 0 {
            v[0] = 1.0;
        }
        v
    };
    match kind {
        StartKind::Sp0 => Ok((Vector::zeros(primal_dim), Vector::zeros(dual_dim))),
        StartKind::Sp1 => {
            if !has_primal_cone {
                return Err(Error::InvalidArgument(
                    "SP1 needs a problem with a primal cone".into(),
                ));
            }
            Ok((e1(), Vector::zeros(dual_dim)))
        }
        StartKind::Sp2 => Ok((e1(), Vector::from_element(dual_dim, 1.0))),
        StartKind::Sp3 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Vector::from_fn(primal_dim, |_, _| rng.random::<f64>());
            let l = Vector::from_fn(dual_dim, |_, _| rng.random::<f64>());
            Ok((x, l))
        }
    }
}
