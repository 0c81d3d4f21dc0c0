use std::collections::HashMap;

use nalgebra::DVector;
use serde::Serialize;

use super::{flow, reflect_refract, BilliardError, Ham, PhasePoint, Segment, Tolerances, ACCUMULATION_RUN};
use crate::geometry::{BoundaryParam, Domain, Medium};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Specular,
    Refracted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadEndReason {
    Grazing,
    ReflectionAccumulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PathClass {
    Ordinary,
    DeadEnd { reason: DeadEndReason },
    Periodic { period: f64, segments: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub segments: Vec<Segment>,
    pub class: PathClass,
    /// Branch taken at each event.
    pub choices: Vec<Choice>,
    pub elapsed: f64,
    /// Phase-space distance at closure, for periodic paths.
    pub closure: Option<f64>,
}

/// Follows one non-splitting billiard trajectory.
///
/// At each event with both branches available the next bit of `policy`
/// (cycled; `true` = refract) picks the branch; events without a refracted
/// branch consume no bit. The path ends as
///
/// * `periodic` once it returns to `init` within `tol.tol_close`,
/// * `dead_end(grazing)` on a grazing hit,
/// * `dead_end(reflection_accumulation)` after [`ACCUMULATION_RUN`]
///   consecutive events closer than `tol.t_min` in time, or after
///   `tol.max_events` events before `t_max`,
/// * `ordinary` when the elapsed time reaches `t_max`.
pub fn trace_path(
    init: &PhasePoint,
    policy: &[bool],
    medium: &Medium,
    domain: &Domain,
    tol: &Tolerances,
    t_max: f64,
) -> Result<TraceResult, BilliardError> {
    let h = super::hamiltonian(init.ham, medium, &init.x, &init.xi);
    if (h - 1.0).abs() > 1e-8 {
        return Err(BilliardError::NotNormalized(h));
    }
    let mut out = TraceResult { segments: Vec::new(), class: PathClass::Ordinary, choices: Vec::new(), elapsed: 0.0, closure: None };
    let mut p = init.clone();
    let mut bit = 0usize;
    let mut short_run = 0usize;
    let dead = |mut out: TraceResult, reason| {
        out.class = PathClass::DeadEnd { reason };
        Ok(out)
    };
    loop {
        if out.choices.len() >= tol.max_events {
            return dead(out, DeadEndReason::ReflectionAccumulation);
        }
        let Ok(fr) = flow(&p, medium, domain, tol) else {
            return dead(out, DeadEndReason::Grazing);
        };
        // Interior starts close in the middle of a segment.
        if !out.segments.is_empty() {
            if let Some((tau, dist)) = passes_through(&fr.segment, init, tol.tol_close) {
                out.elapsed += tau;
                out.closure = Some(dist);
                out.class = PathClass::Periodic { period: out.elapsed, segments: out.segments.len() };
                return Ok(out);
            }
        }
        out.elapsed += fr.segment.duration;
        short_run = if fr.segment.duration < tol.t_min { short_run + 1 } else { 0 };
        out.segments.push(fr.segment);
        if fr.grazing {
            return dead(out, DeadEndReason::Grazing);
        }
        if short_run >= ACCUMULATION_RUN {
            return dead(out, DeadEndReason::ReflectionAccumulation);
        }
        if out.elapsed >= t_max {
            return Ok(out);
        }
        let Ok(branches) = reflect_refract(&fr.hit, medium, domain, tol.tol_graze) else {
            return dead(out, DeadEndReason::Grazing);
        };
        let (choice, next) = match branches.refracted {
            Some(r) => {
                let refract = !policy.is_empty() && policy[bit % policy.len()];
                bit += 1;
                if refract {
                    (Choice::Refracted, r)
                } else {
                    (Choice::Specular, branches.specular)
                }
            }
            None => (Choice::Specular, branches.specular),
        };
        out.choices.push(choice);
        p = next;
        let dist = p.distance(init);
        if dist < tol.tol_close && p.ham == init.ham {
            out.closure = Some(dist);
            out.class = PathClass::Periodic { period: out.elapsed, segments: out.segments.len() };
            return Ok(out);
        }
    }
}

/// Time along a straight segment at which it passes `target` with the same
/// momentum, strictly after its start.
fn passes_through(seg: &Segment, target: &PhasePoint, tol: f64) -> Option<(f64, f64)> {
    if seg.ham != target.ham || !seg.polyline.is_empty() {
        return None;
    }
    let dxi = (&seg.xi - &target.xi).norm();
    if dxi >= tol {
        return None;
    }
    let dir = &seg.end - &seg.start;
    let len2 = dir.norm_squared();
    let u = (&target.x - &seg.start).dot(&dir) / len2;
    if !(u > 0.0 && u < 1.0) {
        return None;
    }
    let dx = (&seg.start + &dir * u - &target.x).norm();
    let dist = dx.hypot(dxi);
    (dist < tol).then_some((u * seg.duration, dist))
}

/// One node of the branching tree: the segment flowed after an event.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchNode {
    pub segment: Segment,
    pub parent: Option<usize>,
    pub via: Option<Choice>,
    pub depth: usize,
    pub children: Vec<usize>,
    /// Index into the distinct-segment list, if counted.
    pub distinct: Option<usize>,
    /// First occurrence of its segment; only these are expanded.
    pub new: bool,
    pub dead_end: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchResult {
    pub root: PhasePoint,
    pub nodes: Vec<BranchNode>,
    /// Directed segments up to `dedup_tol`.
    pub distinct: Vec<Segment>,
    /// Distinct-segment count after each event depth (index 0: lead-in).
    pub distinct_by_depth: Vec<usize>,
    /// Every branch closed onto known segments before the depth limit.
    pub strongly_periodic: bool,
    /// Node cap reached; the tree is partial.
    pub truncated: bool,
    pub dead_ends: usize,
    /// Largest endpoint mismatch between a repeated segment and its match.
    pub closure_residual: f64,
    /// The first segment starts on the boundary and is a full chord.
    pub lead_in_counted: bool,
}

/// Largest tree built before giving up.
pub const NODE_CAP: usize = 200_000;

struct SegmentIndex {
    cell: f64,
    dedup: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl SegmentIndex {
    fn key(&self, x: &DVector<f64>) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    /// Matching distinct segment and the endpoint mismatch.
    fn find(&self, distinct: &[Segment], s: &Segment) -> Option<(usize, f64)> {
        let base = self.key(&s.start);
        let d = base.len();
        for code in 0..3usize.pow(d as u32) {
            let mut key = base.clone();
            let mut c = code;
            for k in key.iter_mut() {
                *k += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(ids) = self.map.get(&key) {
                for &i in ids {
                    let t = &distinct[i];
                    if t.ham != s.ham {
                        continue;
                    }
                    let err = (&t.start - &s.start).norm().max((&t.end - &s.end).norm());
                    if err < self.dedup {
                        return Some((i, err));
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, s: &Segment, i: usize) {
        let key = self.key(&s.start);
        self.map.entry(key).or_default().push(i);
    }
}

/// Full binary branching to `depth` events, expanding only segments not
/// seen before.
///
/// The distinct-segment set is nondecreasing in depth. When every branch
/// at some depth repeats a known segment the set is finite and the result
/// is flagged strongly periodic. A lead-in segment from an interior start is
/// kept in the tree but not counted, since it is only part of a chord.
pub fn trace_branching(
    init: &PhasePoint,
    depth: usize,
    medium: &Medium,
    domain: &Domain,
    tol: &Tolerances,
) -> Result<BranchResult, BilliardError> {
    let h = super::hamiltonian(init.ham, medium, &init.x, &init.xi);
    if (h - 1.0).abs() > 1e-8 {
        return Err(BilliardError::NotNormalized(h));
    }
    let mut index = SegmentIndex { cell: (1e3 * tol.dedup_tol).max(1e-6), dedup: tol.dedup_tol, map: HashMap::new() };
    let mut res = BranchResult {
        root: init.clone(),
        nodes: Vec::new(),
        distinct: Vec::new(),
        distinct_by_depth: Vec::new(),
        strongly_periodic: false,
        truncated: false,
        dead_ends: 0,
        closure_residual: 0.0,
        lead_in_counted: domain.level(&init.x).abs() < 1e-9,
    };
    let first = flow(init, medium, domain, tol)?;
    let mut root = BranchNode {
        segment: first.segment.clone(),
        parent: None,
        via: None,
        depth: 0,
        children: Vec::new(),
        distinct: None,
        new: true,
        dead_end: first.grazing,
    };
    if res.lead_in_counted {
        root.distinct = Some(0);
        index.insert(&first.segment, 0);
        res.distinct.push(first.segment.clone());
    }
    res.nodes.push(root);
    res.distinct_by_depth.push(res.distinct.len());
    let mut frontier: Vec<(usize, PhasePoint)> = if first.grazing {
        res.dead_ends += 1;
        Vec::new()
    } else {
        vec![(0, first.hit)]
    };
    for level in 1..=depth {
        let mut next = Vec::new();
        for (parent, hit) in frontier {
            let Ok(branches) = reflect_refract(&hit, medium, domain, tol.tol_graze) else {
                res.nodes[parent].dead_end = true;
                res.dead_ends += 1;
                continue;
            };
            let kids = std::iter::once((Choice::Specular, branches.specular))
                .chain(branches.refracted.map(|r| (Choice::Refracted, r)));
            for (choice, start) in kids {
                if res.nodes.len() >= NODE_CAP {
                    res.truncated = true;
                    break;
                }
                let Ok(fr) = flow(&start, medium, domain, tol) else {
                    res.dead_ends += 1;
                    continue;
                };
                let id = res.nodes.len();
                let mut node = BranchNode {
                    segment: fr.segment.clone(),
                    parent: Some(parent),
                    via: Some(choice),
                    depth: level,
                    children: Vec::new(),
                    distinct: None,
                    new: false,
                    dead_end: fr.grazing,
                };
                match index.find(&res.distinct, &fr.segment) {
                    Some((i, err)) => {
                        node.distinct = Some(i);
                        res.closure_residual = res.closure_residual.max(err);
                    }
                    None => {
                        let i = res.distinct.len();
                        index.insert(&fr.segment, i);
                        res.distinct.push(fr.segment.clone());
                        node.distinct = Some(i);
                        node.new = true;
                        if fr.grazing {
                            res.dead_ends += 1;
                        } else {
                            next.push((id, fr.hit));
                        }
                    }
                }
                res.nodes[parent].children.push(id);
                res.nodes.push(node);
            }
        }
        res.distinct_by_depth.push(res.distinct.len());
        frontier = next;
        if res.truncated {
            break;
        }
        if frontier.is_empty() {
            res.strongly_periodic = res.dead_ends == 0;
            break;
        }
    }
    Ok(res)
}

/// Exterior ray `origin + t direction`, `t ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorRay {
    pub origin: DVector<f64>,
    pub direction: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorTrajectory {
    /// `h₂` chords, one per undirected chord.
    pub kept: Vec<Segment>,
    /// Two rays per undirected `h₁` chord, continuing its line outward.
    pub rays: Vec<ExteriorRay>,
}

fn same_chord(a: &Segment, b: &Segment, tol: f64) -> bool {
    let direct = (&a.start - &b.start).norm().max((&a.end - &b.end).norm());
    let reversed = (&a.start - &b.end).norm().max((&a.end - &b.start).norm());
    direct.min(reversed) < tol
}

/// Replaces every `h₁` chord `[P, Q]` by its complement on the line through
/// `P` and `Q`, that is the rays from `P` away from `Q` and from `Q` away
/// from `P`; `h₂` chords are kept.
pub fn exterior_correspondence(tree: &BranchResult, dedup_tol: f64) -> Result<ExteriorTrajectory, BilliardError> {
    if !tree.strongly_periodic {
        return Err(BilliardError::NotStronglyPeriodic);
    }
    let mut chords: Vec<&Segment> = Vec::new();
    let mut kept: Vec<Segment> = Vec::new();
    for s in &tree.distinct {
        match s.ham {
            Ham::H1 => {
                if !chords.iter().any(|c| same_chord(c, s, dedup_tol)) {
                    chords.push(s);
                }
            }
            Ham::H2 => {
                if !kept.iter().any(|c| same_chord(c, s, dedup_tol)) {
                    kept.push(s.clone());
                }
            }
        }
    }
    let mut rays = Vec::with_capacity(2 * chords.len());
    for c in chords {
        let u = (&c.end - &c.start).normalize();
        rays.push(ExteriorRay { origin: c.start.clone(), direction: -&u });
        rays.push(ExteriorRay { origin: c.end.clone(), direction: u });
    }
    Ok(ExteriorTrajectory { kept, rays })
}

/// Boundary-started periodic billiard path and the branch pattern that
/// closes it.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub start: PhasePoint,
    pub choices: Vec<Choice>,
    pub period: f64,
}

impl PeriodicOrbit {
    /// From a periodic trace that started on the boundary.
    pub fn from_trace(init: &PhasePoint, trace: &TraceResult, domain: &Domain) -> Option<Self> {
        match trace.class {
            PathClass::Periodic { period, .. } if domain.level(&init.x).abs() < 1e-9 => {
                Some(PeriodicOrbit { start: init.clone(), choices: trace.choices.clone(), period })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub rho: f64,
    /// Phase-space distance after replaying the pattern, if feasible.
    pub return_distance: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Least-squares slope of `log d` against `log ρ` over feasible `ρ > 0`.
    pub slope: Option<f64>,
    /// Slopes between consecutive feasible rows.
    pub local_slopes: Vec<f64>,
}

/// Start perturbed by `ρ`: shifted along the boundary by `ρ` in the
/// boundary parameter and turned by `ρ` toward the first tangent.
fn perturbed_start(orbit: &PeriodicOrbit, rho: f64, medium: &Medium, domain: &Domain) -> Result<PhasePoint, BilliardError> {
    let param = match domain.param_of(&orbit.start.x) {
        BoundaryParam::Curve(s) => BoundaryParam::Curve(s + rho),
        BoundaryParam::Sphere { polar, azimuth } => BoundaryParam::Sphere { polar, azimuth: azimuth + rho },
    };
    let frame = domain.frame_at(param)?;
    let old = domain.frame_at_point(&orbit.start.x)?;
    // Same momentum relative to the moved frame, then rotated by ρ.
    let local = &old.transfer * &orbit.start.xi;
    let mut xi = frame.transfer.transpose() * local;
    let e = &frame.tangents[0];
    let (s, c) = rho.sin_cos();
    let along = xi.dot(e);
    let across = xi.dot(&frame.normal);
    xi += e * (along * (c - 1.0) - across * s) + &frame.normal * (along * s + across * (c - 1.0));
    PhasePoint::normalized(orbit.start.ham, medium, frame.point, &xi)
}

/// Return distances of perturbed starts replaying the orbit's branch
/// pattern, with an empirical vanishing order. This is finite-order
/// evidence only.
pub fn periodicity_probe(
    orbit: &PeriodicOrbit,
    rhos: &[f64],
    medium: &Medium,
    domain: &Domain,
    tol: &Tolerances,
) -> Result<ProbeReport, BilliardError> {
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let start = perturbed_start(orbit, rho, medium, domain)?;
        let mut p = start.clone();
        let mut note = None;
        for (i, choice) in orbit.choices.iter().enumerate() {
            let step = flow(&p, medium, domain, tol).and_then(|fr| reflect_refract(&fr.hit, medium, domain, tol.tol_graze));
            match step {
                Ok(b) => match (choice, b.refracted) {
                    (Choice::Specular, _) => p = b.specular,
                    (Choice::Refracted, Some(r)) => p = r,
                    (Choice::Refracted, None) => {
                        note = Some(format!("refracted branch lost at event {i}"));
                        break;
                    }
                },
                Err(e) => {
                    note = Some(format!("event {i}: {e}"));
                    break;
                }
            }
        }
        let return_distance = note.is_none().then(|| p.distance(&start));
        rows.push(ProbeRow { rho, return_distance, note });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match r.return_distance {
            Some(d) if r.rho > 0.0 && d > 0.0 => Some((r.rho.ln(), d.ln())),
            _ => None,
        })
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let local_slopes = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    Ok(ProbeReport { rows, slope, local_slopes })
}
