//! BEV scene snapshots as SVG: occluders, actors, agents, and point clouds.

use crate::geometry::OrientedBox3D;
use crate::scene::{AgentKind, Scene};
use crate::sensing::{default_lidar_for, raycast};

const CLOUD_COLORS: [&str; 6] = [
    "#4d4d4d", "#c9a227", "#4477aa", "#aa4477", "#44aa77", "#7744aa",
];

fn polygon(b: &OrientedBox3D, fill: &str, stroke: &str, opacity: f64) -> String {
    let pts: Vec<String> = b
        .corners_bev()
        .iter()
        .map(|c| format!("{:.2},{:.2}", c[0], -c[1]))
        .collect();
    format!(
        "<polygon points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"0.3\" fill-opacity=\"{}\"/>\n",
        pts.join(" "),
        fill,
        stroke,
        opacity
    )
}

/// Render one frame top-down. North is up (world y is flipped into SVG
/// coordinates). With `with_clouds`, each agent's LiDAR sweep is cast and
/// drawn in that agent's color.
pub fn render_scene_svg(scene: &Scene, frame: usize, with_clouds: bool) -> String {
    let frame_idx = frame.min(scene.frames.len().saturating_sub(1));
    let fr = &scene.frames[frame_idx];

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for b in fr.actors.iter().chain(scene.occluders.iter()) {
        for c in b.corners_bev() {
            x_min = x_min.min(c[0]);
            x_max = x_max.max(c[0]);
            y_min = y_min.min(c[1]);
            y_max = y_max.max(c[1]);
        }
    }
    for p in &fr.agent_poses {
        x_min = x_min.min(p.x);
        x_max = x_max.max(p.x);
        y_min = y_min.min(p.y);
        y_max = y_max.max(p.y);
    }
    if !x_min.is_finite() {
        x_min = -50.0;
        x_max = 50.0;
        y_min = -50.0;
        y_max = 50.0;
    }
    let pad = 10.0;
    let vb = format!(
        "{:.1} {:.1} {:.1} {:.1}",
        x_min - pad,
        -(y_max + pad),
        (x_max - x_min) + 2.0 * pad,
        (y_max - y_min) + 2.0 * pad
    );

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" viewBox=\"{vb}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#101318\"/>\n",
        x_min - pad,
        -(y_max + pad),
        (x_max - x_min) + 2.0 * pad,
        (y_max - y_min) + 2.0 * pad
    ));

    for occ in &scene.occluders {
        out.push_str(&polygon(occ, "#3a3f47", "#565d68", 0.9));
    }

    if with_clouds {
        for (ai, _) in scene.agents.iter().enumerate() {
            let cloud = raycast(scene, frame_idx, ai, &default_lidar_for(scene, ai));
            let pose = fr.agent_poses[ai];
            let color = CLOUD_COLORS[ai % CLOUD_COLORS.len()];
            for p in &cloud.points {
                let w = pose.local_to_world(*p);
                out.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"0.12\" fill=\"{}\"/>\n",
                    w[0], -w[1], color
                ));
            }
        }
    }

    for (i, a) in fr.actors.iter().enumerate() {
        let is_body = scene.agent_body_actor.contains(&Some(i));
        let color = if is_body { "#d0d0d0" } else { "#3ddc84" };
        out.push_str(&polygon(a, "none", color, 1.0));
    }

    for (ai, agent) in scene.agents.iter().enumerate() {
        let p = fr.agent_poses[ai];
        let (tag, color) = match (agent.is_ego, agent.kind) {
            (true, _) => ("E", "#ff5555"),
            (false, AgentKind::Vehicle) => ("A", "#ffd24d"),
            (false, AgentKind::Infrastructure) => ("A", "#66c2ff"),
        };
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.2\" fill=\"{}\"/>\n",
            p.x, -p.y, color
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"3\" fill=\"white\" font-family=\"sans-serif\">{}{}</text>\n",
            p.x + 1.6,
            -p.y + 1.0,
            tag,
            ai
        ));
    }

    out.push_str("</svg>\n");
    out
}
