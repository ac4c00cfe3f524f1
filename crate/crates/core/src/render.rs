//! Static SVG rendering of flow over the event raster.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::event_model::{Direction, DvsEvent, Polarity, SensorGeometry};
use crate::flow_engine::{dominant_direction, DirectionHistogram};
use crate::io::FlowRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Output pixels per sensor pixel.
    pub scale: f64,
    /// Arrow length, in sensor pixels, of the fastest flow vector.
    pub arrow_length: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { scale: 4.0, arrow_length: 6.0 }
    }
}

/// Colour wheel hue for a direction: East is 0, counter-clockwise.
pub fn direction_hue(direction: Direction) -> f64 {
    let (dx, dy) = direction.offset();
    (-(dy as f64)).atan2(dx as f64).to_degrees().rem_euclid(360.0)
}

fn direction_color(direction: Direction) -> String {
    if direction.is_center() {
        "#808080".to_string()
    } else {
        format!("hsl({:.0},90%,45%)", direction_hue(direction))
    }
}

/// Renders the last polarity seen at each pixel in green (On) or red
/// (Off), one arrow per flow record coloured by direction, and a 3x3 gray
/// histogram of flow directions laid out by offset.
pub fn render_svg(
    geometry: SensorGeometry,
    events: &[DvsEvent],
    flow: &[FlowRecord],
    options: &RenderOptions,
) -> Result<String> {
    for f in flow {
        geometry
            .check(f.x as u32, f.y as u32)
            .map_err(|e| Error::GeometryMismatch(format!("flow record at t={}: {e}", f.timestamp)))?;
    }
    for e in events {
        geometry
            .check(e.x as u32, e.y as u32)
            .map_err(|err| Error::GeometryMismatch(format!("event at t={}: {err}", e.timestamp)))?;
    }

    let s = options.scale;
    let (w, h) = (geometry.width as f64 * s, geometry.height as f64 * s);
    let inset = 3.0 * 14.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w,
        h + inset + 8.0,
        w,
        h + inset + 8.0
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="black"/>"#);

    let mut raster: Vec<Option<Polarity>> = vec![None; geometry.pixel_count()];
    for e in events {
        raster[e.y as usize * geometry.width as usize + e.x as usize] = Some(e.polarity);
    }
    let _ = writeln!(svg, r#"<g id="events">"#);
    for (i, p) in raster.iter().enumerate() {
        if let Some(p) = p {
            let (x, y) = ((i % geometry.width as usize) as f64, (i / geometry.width as usize) as f64);
            let fill = if *p == Polarity::On { "#00a000" } else { "#c00000" };
            let _ = writeln!(svg, r#"<rect x="{}" y="{}" width="{s}" height="{s}" fill="{fill}"/>"#, x * s, y * s);
        }
    }
    let _ = writeln!(svg, "</g>");

    let max_speed = flow.iter().map(|f| f.velocity.norm()).fold(0.0, f64::max);
    let _ = writeln!(svg, r#"<g id="flow" stroke-width="1.5">"#);
    for f in flow {
        let (cx, cy) = ((f.x as f64 + 0.5) * s, (f.y as f64 + 0.5) * s);
        let color = direction_color(f.direction);
        if max_speed == 0.0 || f.velocity.is_zero() {
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="1" fill="{color}"/>"#);
            continue;
        }
        let k = options.arrow_length * s / max_speed;
        let (ex, ey) = (cx + f.velocity.vx * k, cy + f.velocity.vy * k);
        // Arrow head: two short strokes back from the tip.
        let angle = f.velocity.vy.atan2(f.velocity.vx);
        let head = 0.35 * options.arrow_length * s * f.velocity.norm() / max_speed;
        let (ax, ay) = (ex - head * (angle - 0.5).cos(), ey - head * (angle - 0.5).sin());
        let (bx, by) = (ex - head * (angle + 0.5).cos(), ey - head * (angle + 0.5).sin());
        let _ = writeln!(
            svg,
            r#"<path d="M{cx:.2},{cy:.2} L{ex:.2},{ey:.2} M{ax:.2},{ay:.2} L{ex:.2},{ey:.2} L{bx:.2},{by:.2}" stroke="{color}" fill="none"/>"#
        );
    }
    let _ = writeln!(svg, "</g>");

    let hist = DirectionHistogram::from_flow_records(flow);
    let peak = hist.counts.iter().copied().max().unwrap_or(0);
    let cell = inset / 3.0;
    let _ = writeln!(svg, r#"<g id="histogram" transform="translate(4,{})">"#, h + 4.0);
    for d in Direction::ALL {
        let (dx, dy) = d.offset();
        let level = (255 * hist.counts[d.index()]).checked_div(peak).unwrap_or(0) as u8;
        let _ = writeln!(
            svg,
            r##"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="rgb({level},{level},{level})" stroke="#404040"/>"##,
            (dx + 1) as f64 * cell,
            (dy + 1) as f64 * cell
        );
    }
    let label = match dominant_direction(&hist) {
        Ok(d) => d.name(),
        Err(_) => "-",
    };
    let _ = writeln!(
        svg,
        r#"<text id="dominant" x="{}" y="{}" font-family="monospace" font-size="14">{label}</text>"#,
        inset + 8.0,
        cell * 2.0
    );
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

impl DirectionHistogram {
    pub fn from_flow_records(flow: &[FlowRecord]) -> Self {
        let mut hist = Self::default();
        for f in flow {
            hist.record(f.direction);
        }
        hist
    }
}
