use std::fmt::Write;

use serde_json::{json, Value};

use super::{BilliardError, ExteriorTrajectory, Ham, Segment};
use crate::geometry::{BoundaryParam, Domain};

fn point(x: &nalgebra::DVector<f64>) -> Value {
    json!(x.iter().copied().collect::<Vec<_>>())
}

fn segment_json(s: &Segment) -> Value {
    let mut v = json!({
        "start": point(&s.start),
        "end": point(&s.end),
        "hamiltonian": s.ham,
        "time": s.duration,
    });
    if !s.polyline.is_empty() {
        v["polyline"] = Value::Array(s.polyline.iter().map(point).collect());
    }
    v
}

/// JSON array of `{start, end, hamiltonian, time[, polyline]}`.
pub fn segments_json(segments: &[Segment]) -> Value {
    Value::Array(segments.iter().map(segment_json).collect())
}

const H1_COLOUR: &str = "#1f5fa8";
const H2_COLOUR: &str = "#c2402a";
const SIZE: f64 = 600.0;

/// SVG drawing of the boundary and the segments, projected on the first two
/// coordinates. Exterior rays, if given, are drawn dashed out to twice the
/// domain's bounding radius; `h₁` segments are then omitted, as they are
/// replaced by the rays.
pub fn svg(domain: &Domain, segments: &[Segment], exterior: Option<&ExteriorTrajectory>) -> Result<String, BilliardError> {
    let r = domain.bounding_radius();
    let extent = if exterior.is_some() { 2.2 * r } else { 1.1 * r };
    let scale = SIZE / (2.0 * extent);
    let px = |x: f64, y: f64| ((x + extent) * scale, (extent - y) * scale);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let outline: Vec<(f64, f64)> = match domain.dimension() {
        2 => domain
            .sample_boundary(360)
            .into_iter()
            .map(|p| domain.boundary_point(p).map(|x| px(x[0], x[1])))
            .collect::<Result<_, _>>()?,
        _ => (0..360)
            .map(|i| {
                let phi = i as f64 * std::f64::consts::TAU / 360.0;
                domain
                    .boundary_point(BoundaryParam::Sphere { polar: std::f64::consts::FRAC_PI_2, azimuth: phi })
                    .map(|x| px(x[0], x[1]))
            })
            .collect::<Result<_, _>>()?,
    };
    let pts: Vec<String> = outline.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
    let _ = writeln!(out, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, pts.join(" "));

    let draw = |out: &mut String, s: &Segment| {
        let colour = if s.ham == Ham::H1 { H1_COLOUR } else { H2_COLOUR };
        let mut path: Vec<&nalgebra::DVector<f64>> = vec![&s.start];
        path.extend(s.polyline.iter());
        path.push(&s.end);
        let pts: Vec<String> = path
            .iter()
            .map(|x| {
                let (a, b) = px(x[0], x[1]);
                format!("{a:.3},{b:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.2"/>"#,
            pts.join(" ")
        );
    };
    match exterior {
        None => segments.iter().for_each(|s| draw(&mut out, s)),
        Some(ext) => {
            ext.kept.iter().for_each(|s| draw(&mut out, s));
            for ray in &ext.rays {
                let (a, b) = px(ray.origin[0], ray.origin[1]);
                let far = &ray.origin + &ray.direction * (2.0 * extent);
                let (c, d) = px(far[0], far[1]);
                let _ = writeln!(
                    out,
                    r#"<line x1="{a:.3}" y1="{b:.3}" x2="{c:.3}" y2="{d:.3}" stroke="{H1_COLOUR}" stroke-width="1.2" stroke-dasharray="6,4"/>"#
                );
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
