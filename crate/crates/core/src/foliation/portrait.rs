use super::{kernel_direction, PulledBack, Singularity, SingularityKind};
use std::fmt::Write;

fn grid(radius: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let n = n.max(2);
    (0..n).flat_map(move |i| {
        (0..n).filter_map(move |j| {
            let u = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
            let v = -radius + 2.0 * radius * j as f64 / (n - 1) as f64;
            (u.hypot(v) <= radius + 1e-12).then_some((u, v))
        })
    })
}

/// Foliation portrait on a disk: `u,v,direction_u,direction_v,singular_flag`.
pub fn portrait_csv(pb: &PulledBack, radius: f64, n: usize) -> String {
    let mut s = String::from("u,v,direction_u,direction_v,singular_flag\n");
    for (u, v) in grid(radius, n) {
        match kernel_direction(pb, u, v) {
            Some(d) => writeln!(s, "{u:.6},{v:.6},{:.6},{:.6},0", d[0], d[1]).unwrap(),
            None => writeln!(s, "{u:.6},{v:.6},0.000000,0.000000,1").unwrap(),
        }
    }
    s
}

/// Line-segment rendering of the portrait with singularities marked.
pub fn portrait_svg(pb: &PulledBack, radius: f64, n: usize, sings: &[Singularity]) -> String {
    let size = 600.0;
    let scale = size / (2.0 * radius * 1.05);
    let tx = |u: f64| size / 2.0 + u * scale;
    let ty = |v: f64| size / 2.0 - v * scale;
    let seg = 0.35 * 2.0 * radius / n.max(2) as f64;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#).unwrap();
    writeln!(s, r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="black"/>"#, size / 2.0, size / 2.0, radius * scale).unwrap();
    for (u, v) in grid(radius, n) {
        if let Some(d) = kernel_direction(pb, u, v) {
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-width="1"/>"#,
                tx(u - seg * d[0]),
                ty(v - seg * d[1]),
                tx(u + seg * d[0]),
                ty(v + seg * d[1])
            )
            .unwrap();
        }
    }
    for x in sings {
        let color = if x.sign > 0 { "red" } else { "blue" };
        let (cx, cy) = (tx(x.location[0]), ty(x.location[1]));
        match x.kind {
            SingularityKind::Elliptic => {
                writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{color}"/>"#).unwrap()
            }
            SingularityKind::Hyperbolic => writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="9" height="9" fill="{color}"/>"#,
                cx - 4.5,
                cy - 4.5
            )
            .unwrap(),
        }
    }
    s.push_str("</svg>\n");
    s
}
