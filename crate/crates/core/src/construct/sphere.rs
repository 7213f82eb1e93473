//! Obstacle-avoiding paths on the unit sphere.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::math;

/// Detours follow a small circle of chordal radius `DETOUR_MARGIN · ρ/2`.
pub const DETOUR_MARGIN: f64 = 1.1;

const MAX_REFINEMENTS: usize = 64;
const CIRCLE_SAMPLES: usize = 512;

/// A discretised path for one column.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePath {
    pub column_index: usize,
    /// Unit vectors from the current column to its target.
    pub waypoints: Vec<Vec<f64>>,
    /// Upper bound on consecutive waypoint distances.
    pub step_cap: f64,
    /// Points every waypoint must keep at distance `rho / 2`.
    pub obstacles: Vec<Vec<f64>>,
    pub rho: f64,
}

/// The first invariant a path breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum PathViolation {
    NotUnit { waypoint: usize, norm: f64 },
    StepTooLong { waypoint: usize, length: f64 },
    TooClose { waypoint: usize, obstacle: usize, distance: f64 },
}

impl SpherePath {
    /// Number of mover units the path needs.
    pub fn steps(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// Largest distance between consecutive waypoints.
    pub fn longest_step(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| math::dist2(&w[0], &w[1]))
            .fold(0.0, f64::max)
    }

    /// Smallest distance from any waypoint to any obstacle.
    pub fn clearance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for w in &self.waypoints {
            for o in &self.obstacles {
                best = best.min(math::dist2(w, o));
            }
        }
        best
    }

    pub fn verify(&self) -> core::result::Result<(), PathViolation> {
        let half = 0.5 * self.rho;
        for (k, w) in self.waypoints.iter().enumerate() {
            let norm = math::norm2(w);
            if (norm - 1.0).abs() > 1e-12 {
                return Err(PathViolation::NotUnit { waypoint: k, norm });
            }
            if k > 0 {
                let length = math::dist2(&self.waypoints[k - 1], w);
                if length > self.step_cap * (1.0 + 1e-12) {
                    return Err(PathViolation::StepTooLong { waypoint: k, length });
                }
            }
            for (j, o) in self.obstacles.iter().enumerate() {
                let distance = math::dist2(w, o);
                if distance < half * (1.0 - 1e-12) {
                    return Err(PathViolation::TooClose { waypoint: k, obstacle: j, distance });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Piece {
    /// Great-circle arc `cos θ·from + sin θ·dir`, θ ∈ [0, angle].
    Arc { from: Vec<f64>, dir: Vec<f64>, angle: f64, to: Vec<f64> },
    /// Small circle `cos α·center + sin α(cos ψ·w + sin ψ·v)`, ψ ∈ [0, sweep].
    Circle { center: Vec<f64>, cos_a: f64, sin_a: f64, w: Vec<f64>, v: Vec<f64>, sweep: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Arc { angle, .. } => *angle,
            Piece::Circle { sin_a, sweep, .. } => sin_a * sweep,
        }
    }

    fn at(&self, s: f64) -> Vec<f64> {
        match self {
            Piece::Arc { from, dir, .. } => {
                let (c, sn) = (math::cos(s), math::sin(s));
                from.iter().zip(dir).map(|(a, u)| c * a + sn * u).collect()
            }
            Piece::Circle { center, cos_a, sin_a, w, v, .. } => {
                let psi = s / sin_a;
                let (c, sn) = (math::cos(psi), math::sin(psi));
                center
                    .iter()
                    .zip(w.iter().zip(v))
                    .map(|(o, (a, b))| cos_a * o + sin_a * (c * a + sn * b))
                    .collect()
            }
        }
    }
}

fn normalized(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = math::norm2(&v);
    (n > 1e-14).then(|| v.into_iter().map(|x| x / n).collect())
}

/// Component of `v` orthogonal to the unit vectors in `basis`, normalised.
fn orthogonal_part(v: &[f64], basis: &[&[f64]]) -> Option<Vec<f64>> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let p = math::dot(&r, b);
            r.iter_mut().zip(b.iter()).for_each(|(x, y)| *x -= p * y);
        }
    }
    normalized(r)
}

/// Some unit vector orthogonal to every vector in `basis`.
fn any_orthogonal(d: usize, basis: &[&[f64]]) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        let mut r = e;
        for _ in 0..2 {
            for b in basis {
                let p = math::dot(&r, b);
                r.iter_mut().zip(b.iter()).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = math::norm2(&r);
        if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-12) {
            best = Some((n, r));
        }
    }
    best.and_then(|(_, r)| normalized(r))
}

fn arc(from: &[f64], to: &[f64]) -> Result<Piece> {
    let c = math::dot(from, to).clamp(-1.0, 1.0);
    let perp: Vec<f64> = to.iter().zip(from).map(|(b, a)| b - c * a).collect();
    let s = math::norm2(&perp);
    let angle = math::atan2(s, c);
    let dir = if s > 1e-12 {
        perp.into_iter().map(|x| x / s).collect()
    } else if c > 0.0 {
        // degenerate zero-length arc
        any_orthogonal(from.len(), &[from]).ok_or_else(|| Error::Planner("no orthogonal direction".into()))?
    } else {
        return Err(Error::Planner("antipodal endpoints have no unique geodesic".into()));
    };
    Ok(Piece::Arc { from: from.to_vec(), dir, angle, to: to.to_vec() })
}

/// Angle at which an arc first comes within angular radius `trigger` of `o`,
/// as `(φ0, K)` with `K = |proj of o onto the arc plane|`, or `None`.
fn arc_conflict(piece: &Piece, o: &[f64], trigger: f64) -> Option<(f64, f64)> {
    let Piece::Arc { from, dir, angle, to } = piece else { return None };
    let (ca, cu) = (math::dot(from, o), math::dot(dir, o));
    let k = math::hypot(ca, cu);
    let phi0 = math::atan2(cu, ca);
    let closest = if phi0 > 0.0 && phi0 < *angle {
        math::acos(k)
    } else {
        math::acos(math::dot(from, o)).min(math::acos(math::dot(to, o)))
    };
    (closest < trigger).then_some((phi0, k))
}

fn circle_min_distance(piece: &Piece, obstacles: &[&[f64]]) -> f64 {
    let len = piece.length();
    let mut best = f64::INFINITY;
    for k in 0..=CIRCLE_SAMPLES {
        let p = piece.at(len * k as f64 / CIRCLE_SAMPLES as f64);
        for o in obstacles {
            best = best.min(math::dist2(&p, o));
        }
    }
    best
}

/// Replaces a conflicting arc with arc, small circle around `o`, arc.
fn detour(piece: &Piece, o: &[f64], phi0: f64, k: f64, alpha: f64, others: &[&[f64]], rho: f64) -> Result<Vec<Piece>> {
    let Piece::Arc { from, dir, angle, to } = piece else { unreachable!() };
    let (cos_a, sin_a) = (math::cos(alpha), math::sin(alpha));
    if k <= cos_a {
        return Err(Error::Planner("arc does not cross the detour circle".into()));
    }
    let beta = math::acos(cos_a / k);
    let (t1, t2) = (phi0 - beta, phi0 + beta);
    if t1 <= 0.0 || t2 >= *angle {
        return Err(Error::Planner(format!(
            "an endpoint of the arc lies inside the detour circle around an obstacle (entry {t1:.4}, exit {t2:.4}, length {angle:.4})"
        )));
    }
    let point = |t: f64| -> Vec<f64> {
        let (c, s) = (math::cos(t), math::sin(t));
        from.iter().zip(dir).map(|(a, u)| c * a + s * u).collect()
    };
    let (e1, e2) = (point(t1), point(t2));
    let radial = |e: &[f64]| -> Option<Vec<f64>> { orthogonal_part(e, &[o]) };
    let w = radial(&e1).ok_or_else(|| Error::Planner("entry point coincides with obstacle".into()))?;
    let w2 = radial(&e2).ok_or_else(|| Error::Planner("exit point coincides with obstacle".into()))?;
    let cos_g = math::dot(&w, &w2).clamp(-1.0, 1.0);
    let (v, gamma) = match orthogonal_part(&w2, &[o, &w]) {
        Some(v) => (v, math::acos(cos_g)),
        None => {
            // the arc runs through o: go around in any free direction
            let v = any_orthogonal(o.len(), &[o, &w])
                .ok_or_else(|| Error::Planner("no free direction around obstacle".into()))?;
            (v, core::f64::consts::PI)
        }
    };
    let half = 0.5 * rho;
    let minor = Piece::Circle { center: o.to_vec(), cos_a, sin_a, w: w.clone(), v: v.clone(), sweep: gamma };
    let major = Piece::Circle {
        center: o.to_vec(),
        cos_a,
        sin_a,
        w,
        v: v.iter().map(|x| -x).collect(),
        sweep: 2.0 * core::f64::consts::PI - gamma,
    };
    let circle = if circle_min_distance(&minor, others) >= half {
        minor
    } else if circle_min_distance(&major, others) >= half {
        major
    } else {
        return Err(Error::Planner("both ways around an obstacle meet another obstacle".into()));
    };
    Ok(vec![arc(from, &e1)?, circle, arc(&e2, to)?])
}

fn plan_pieces(start: &[f64], target: &[f64], obstacles: &[&[f64]], rho: f64) -> Result<Vec<Piece>> {
    let trigger = 2.0 * math::asin(rho / 4.0);
    let alpha = 2.0 * math::asin((DETOUR_MARGIN * rho / 4.0).min(1.0));
    let mut pieces = vec![arc(start, target)?];
    for _ in 0..MAX_REFINEMENTS {
        let mut conflict = None;
        'find: for (p, piece) in pieces.iter().enumerate() {
            let mut earliest: Option<(usize, f64, f64)> = None;
            for (j, o) in obstacles.iter().enumerate() {
                if let Some((phi0, k)) = arc_conflict(piece, o, trigger) {
                    if earliest.is_none_or(|(_, e, _)| phi0 < e) {
                        earliest = Some((j, phi0, k));
                    }
                }
            }
            if let Some(found) = earliest {
                conflict = Some((p, found));
                break 'find;
            }
        }
        let Some((p, (j, phi0, k))) = conflict else { return Ok(pieces) };
        let others: Vec<&[f64]> = obstacles
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, o)| *o)
            .collect();
        let replacement = detour(&pieces[p], obstacles[j], phi0, k, alpha, &others, rho)?;
        pieces.splice(p..=p, replacement);
    }
    Err(Error::Planner(format!("no conflict-free path after {MAX_REFINEMENTS} detours")))
}

/// Plans a path for column `i` of `a` to `target` that keeps every
/// waypoint at distance at least `rho/2` from the other columns of `a`,
/// with consecutive waypoints at most `delta` apart. Both endpoints must be
/// at least `rho` from the other columns. Waypoints are spaced at equal arc
/// length.
pub fn plan_sphere_path(a: &Matrix, i: usize, target: &[f64], rho: f64, delta: f64) -> Result<SpherePath> {
    let (d, m) = a.shape();
    if d < 3 {
        return Err(invalid(format!("sphere paths need d >= 3, got {d}")));
    }
    if i >= m || target.len() != d {
        return Err(invalid("column index or vector length out of range"));
    }
    if !(rho > 0.0) || !(delta > 0.0) {
        return Err(invalid("rho and delta must be positive"));
    }
    let start = a.column(i);
    for v in core::iter::once(&start).chain(core::iter::once(&target.to_vec())) {
        if (math::norm2(v) - 1.0).abs() > 1e-9 {
            return Err(Error::Assumption { name: "unit-norm columns", detail: "path endpoint is not a unit vector".into() });
        }
    }
    let obstacles: Vec<Vec<f64>> = (0..m).filter(|&j| j != i).map(|j| a.column(j)).collect();
    for (what, p) in [("start", &start), ("target", &target.to_vec())] {
        if let Some(o) = obstacles.iter().find(|o| math::dist2(p, o) < rho * (1.0 - 1e-12)) {
            return Err(Error::Assumption {
                name: "minimum distance rho",
                detail: format!("path {what} is {:.6} from an obstacle; need >= {rho:.6}", math::dist2(p, o)),
            });
        }
    }

    let refs: Vec<&[f64]> = obstacles.iter().map(|o| o.as_slice()).collect();
    let pieces = plan_pieces(&start, target, &refs, rho)?;
    let total: f64 = pieces.iter().map(Piece::length).sum();
    let steps = if math::dist2(&start, target) == 0.0 { 0 } else { (math::ceil(total / delta) as usize).max(1) };

    let mut waypoints = Vec::with_capacity(steps + 1);
    waypoints.push(start.clone());
    let (mut piece, mut offset) = (0usize, 0.0f64);
    for k in 1..steps {
        let s = total * k as f64 / steps as f64;
        while piece + 1 < pieces.len() && s > offset + pieces[piece].length() {
            offset += pieces[piece].length();
            piece += 1;
        }
        let local = (s - offset).clamp(0.0, pieces[piece].length());
        let p = normalized(pieces[piece].at(local)).ok_or_else(|| Error::Planner("zero waypoint".into()))?;
        waypoints.push(p);
    }
    if steps > 0 {
        waypoints.push(target.to_vec());
    }

    let path = SpherePath { column_index: i, waypoints, step_cap: delta, obstacles, rho };
    path.verify().map_err(|v| Error::Planner(format!("planned path breaks an invariant: {v:?}")))?;
    Ok(path)
}
