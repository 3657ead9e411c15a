//! `‖H(y, σ)‖` over a plane of `y` for a two-dimensional second-order-cone
//! program with the multiplier `σ` held fixed.

use std::f64::consts::FRAC_PI_4;

use conewton::problems::{build_circular, generate_circular, CircularConeInstance};
use conewton::{solve, ResidualSystem, SolverConfig, Status, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Grid,
    Feasible,
    Boundary,
    Solution,
    Minimum,
}

impl PointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointKind::Grid => "grid",
            PointKind::Feasible => "feasible",
            PointKind::Boundary => "boundary",
            PointKind::Solution => "solution",
            PointKind::Minimum => "minimum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub kind: PointKind,
    pub y1: f64,
    pub y2: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub instance: CircularConeInstance,
    pub sigma: f64,
    /// Solver solution `(y, σ)` when the solve succeeded.
    pub solution: Option<(Vector, f64)>,
    pub window: [f64; 4],
    pub points: Vec<Point>,
}

impl Landscape {
    pub fn grid(&self) -> impl Iterator<Item = &Point> {
        self.points.iter().filter(|p| p.kind == PointKind::Grid)
    }

    pub fn of_kind(&self, kind: PointKind) -> impl Iterator<Item = &Point> + '_ {
        self.points.iter().filter(move |p| p.kind == kind)
    }
}

pub enum Multiplier {
    Optimal,
    Fixed(f64),
}

impl std::str::FromStr for Multiplier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("optimal") {
            Ok(Multiplier::Optimal)
        } else {
            s.parse::<f64>().map(Multiplier::Fixed).map_err(|_| format!("bad multiplier `{s}`"))
        }
    }
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

pub fn compute(seed: u64, multiplier: Multiplier, window: Option<[f64; 4]>, points: usize) -> Result<Landscape, String> {
    if points < 2 {
        return Err("need at least two grid points per axis".into());
    }
    let inst = generate_circular(2, 1, FRAC_PI_4, seed).map_err(|e| e.to_string())?;
    let p = build_circular(&inst).map_err(|e| e.to_string())?;
    let report = solve(&p, Vector::zeros(2), Vector::zeros(1), &SolverConfig::default()).map_err(|e| e.to_string())?;
    let solution = (report.status == Status::Solved).then(|| (report.iterate.x.clone(), report.iterate.lambda[0]));
    let sigma = match multiplier {
        Multiplier::Fixed(s) => s,
        Multiplier::Optimal => solution
            .as_ref()
            .map(|s| s.1)
            .ok_or_else(|| format!("solver ended with {} so no optimal multiplier is known", report.status))?,
    };
    let window = match window {
        Some(w) => w,
        None => {
            let centre = solution.as_ref().map(|s| s.0.clone()).unwrap_or_else(|| Vector::zeros(2));
            let r = 3.0 * centre.norm().max(1.0);
            [centre[0] - r, centre[0] + r, centre[1] - r, centre[1] + r]
        }
    };
    if !(window[0] < window[1] && window[2] < window[3]) {
        return Err("window must satisfy y1min < y1max and y2min < y2max".into());
    }
    let xs = linspace(window[0], window[1], points);
    let ys = linspace(window[2], window[3], points);
    let sig = Vector::from_element(1, sigma);
    let eval = |y1: f64, y2: f64| -> Result<(f64, f64), String> {
        let it = p.evaluate(Vector::from_row_slice(&[y1, y2]), sig.clone()).map_err(|e| e.to_string())?;
        Ok((it.residual_norm(), it.h[2]))
    };

    let mut out = Vec::new();
    let mut feas = vec![vec![0.0; points]; points];
    let mut best = Point {
        kind: PointKind::Minimum,
        y1: 0.0,
        y2: 0.0,
        value: f64::INFINITY,
    };
    for (j, &y2) in ys.iter().enumerate() {
        for (i, &y1) in xs.iter().enumerate() {
            let (value, f) = eval(y1, y2)?;
            feas[j][i] = f;
            out.push(Point {
                kind: PointKind::Grid,
                y1,
                y2,
                value,
            });
            if value < best.value {
                best = Point { y1, y2, value, ..best };
            }
        }
    }
    let mut cross = |a: (f64, f64, f64), b: (f64, f64, f64)| {
        if a.2 == 0.0 || a.2.signum() != b.2.signum() && b.2 != 0.0 {
            let t = if a.2 == b.2 { 0.0 } else { a.2 / (a.2 - b.2) };
            out.push(Point {
                kind: PointKind::Feasible,
                y1: a.0 + t * (b.0 - a.0),
                y2: a.1 + t * (b.1 - a.1),
                value: 0.0,
            });
        }
    };
    for j in 0..points {
        for i in 0..points - 1 {
            cross((xs[i], ys[j], feas[j][i]), (xs[i + 1], ys[j], feas[j][i + 1]));
        }
    }
    for i in 0..points {
        for j in 0..points - 1 {
            if feas[j][i] != 0.0 {
                cross((xs[i], ys[j], feas[j][i]), (xs[i], ys[j + 1], feas[j + 1][i]));
            }
        }
    }
    for &y1 in xs.iter().filter(|v| **v >= 0.0) {
        for y2 in [y1, -y1] {
            if y2 >= window[2] && y2 <= window[3] {
                out.push(Point {
                    kind: PointKind::Boundary,
                    y1,
                    y2,
                    value: 0.0,
                });
            }
        }
    }
    out.push(best);
    if let Some((y, s)) = &solution {
        out.push(Point {
            kind: PointKind::Solution,
            y1: y[0],
            y2: y[1],
            value: *s,
        });
    }
    Ok(Landscape {
        instance: inst,
        sigma,
        solution,
        window,
        points: out,
    })
}

pub fn to_csv(l: &Landscape) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "y1", "y2", "value"]).map_err(|e| e.to_string())?;
    for p in &l.points {
        w.write_record([p.kind.as_str().to_string(), format!("{:e}", p.y1), format!("{:e}", p.y2), format!("{:e}", p.value)])
            .map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_feasible_set_outside_window() {
        let l = compute(0, Multiplier::Fixed(0.0), Some([-30.0, -20.0, -5.0, 5.0]), 21).unwrap();
        let f = l.instance.b[0];
        // Left of the apex `Π(y)` is zero, so the feasibility residual is the constant `-b`.
        assert!(f.abs() > 0.0);
        assert_eq!(l.of_kind(PointKind::Feasible).count(), 0);
        assert_eq!(l.of_kind(PointKind::Boundary).count(), 0);
    }
}
