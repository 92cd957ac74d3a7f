//! Poincare-disc drawings of d = 2 configurations.
//!
//! The unit disc maps onto a 1000x1000 view box. A hyperbolic disc of radius
//! `rho` around a point at distance `D` from `o` is a Euclidean disc whose
//! diameter runs from `tanh((D - rho)/2)` to `tanh((D + rho)/2)` along the
//! point's direction.

use std::fmt::Write;

use hyperrcm::rcm::Configuration;

const SIZE: f64 = 1000.0;
const HALF: f64 = SIZE / 2.0;

/// `2 arsinh(1/(2 sqrt pi))`: the radius of the disc of unit hyperbolic area.
pub fn unit_area_radius() -> f64 {
    2.0 * (1.0 / (2.0 * std::f64::consts::PI.sqrt())).asinh()
}

/// Euclidean centre (along the direction) and radius of the image of `B_rho(x)`, `d(o,x) = dist`.
pub fn image_circle(dist: f64, rho: f64) -> (f64, f64) {
    let t1 = ((dist - rho) / 2.0).tanh();
    let t2 = ((dist + rho) / 2.0).tanh();
    ((t1 + t2) / 2.0, (t2 - t1) / 2.0)
}

fn px(x: f64) -> f64 {
    HALF + HALF * x
}

fn py(y: f64) -> f64 {
    HALF - HALF * y
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `config` (which must be planar). `metadata` is embedded verbatim
/// (escaped) so the drawing carries the run configuration.
pub fn render(config: &Configuration, vertex_radius: f64, metadata: &str) -> String {
    let cloud = &config.cloud;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", escape(metadata));
    let _ = writeln!(
        s,
        "<circle cx=\"{HALF}\" cy=\"{HALF}\" r=\"{HALF}\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"1.5\"/>"
    );
    let coords: Vec<Vec<f64>> = (0..cloud.len()).map(|i| cloud.ball_coords(i)).collect();
    s.push_str("<g stroke=\"#555555\" stroke-width=\"0.6\">\n");
    for &(i, j) in &config.edges {
        let (a, b) = (&coords[i], &coords[j]);
        let _ = writeln!(
            s,
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\"/>",
            px(a[0]),
            py(a[1]),
            px(b[0]),
            py(b[1])
        );
    }
    s.push_str("</g>\n<g fill=\"#1f4e9c\" fill-opacity=\"0.85\">\n");
    for i in 0..cloud.len() {
        let (c, r) = image_circle(cloud.radius(i), vertex_radius);
        let u = cloud.direction(i);
        let _ = writeln!(s, "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{:.3}\"/>", px(c * u[0]), py(c * u[1]), HALF * r);
    }
    s.push_str("</g>\n</svg>\n");
    s
}
