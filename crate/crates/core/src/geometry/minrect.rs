//! Minimum-area oriented rectangle over a point set.
//!
//! Convex hull via Andrew's monotone chain, then rotating calipers: the
//! minimum-area enclosing rectangle has a side collinear with a hull edge.
//! Classic degenerate case: an L-shaped point set (two visible faces of a
//! box) has a right-triangle hull whose edge-aligned rectangles all tie on
//! area. Ties are broken toward the candidate whose boundary passes through
//! the most hull points, which keeps the fit aligned with sampled faces
//! instead of the unsupported hypotenuse.

/// An oriented rectangle in the BEV plane.
#[derive(Debug, Clone, Copy)]
pub struct MinAreaRect {
    pub cx: f64,
    pub cy: f64,
    /// Extent along `yaw`.
    pub len: f64,
    /// Extent across `yaw`.
    pub width: f64,
    /// Direction of the longer extent, normalized to (-pi, pi].
    pub yaw: f64,
}

/// Convex hull in counter-clockwise order (monotone chain, collinear
/// points dropped). Returns fewer than 3 points for degenerate inputs.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

struct Candidate {
    area: f64,
    cx: f64,
    cy: f64,
    e_along: f64,
    e_across: f64,
    dir: [f64; 2],
}

fn candidate_for_edge(hull: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Option<Candidate> {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let n = (dx * dx + dy * dy).sqrt();
    if n < 1e-12 {
        return None;
    }
    let dir = [dx / n, dy / n];
    let mut min_u = f64::INFINITY;
    let mut max_u = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    for p in hull {
        let u = p[0] * dir[0] + p[1] * dir[1];
        let v = -p[0] * dir[1] + p[1] * dir[0];
        min_u = min_u.min(u);
        max_u = max_u.max(u);
        min_v = min_v.min(v);
        max_v = max_v.max(v);
    }
    let e_along = max_u - min_u;
    let e_across = max_v - min_v;
    let cu = (min_u + max_u) / 2.0;
    let cv = (min_v + max_v) / 2.0;
    Some(Candidate {
        area: e_along * e_across,
        cx: cu * dir[0] - cv * dir[1],
        cy: cu * dir[1] + cv * dir[0],
        e_along,
        e_across,
        dir,
    })
}

/// How many input points sit on (within `tol` of) the candidate boundary.
/// Counted over the full point set, not the hull: collinear face samples
/// are dropped from the hull but are exactly the support that should
/// decide between equal-area orientations.
fn boundary_support(points: &[[f64; 2]], c: &Candidate, tol: f64) -> usize {
    let half_u = c.e_along / 2.0;
    let half_v = c.e_across / 2.0;
    points
        .iter()
        .filter(|p| {
            let rx = p[0] - c.cx;
            let ry = p[1] - c.cy;
            let u = rx * c.dir[0] + ry * c.dir[1];
            let v = -rx * c.dir[1] + ry * c.dir[0];
            (half_u - u.abs()).abs() <= tol || (half_v - v.abs()).abs() <= tol
        })
        .count()
}

/// Minimum-area oriented rectangle enclosing `points`, with face-support
/// disambiguation.
///
/// Returns `None` for collinear or empty input. Candidates within 25% of
/// the minimum area compete on how many input points lie within
/// `support_tol` of their boundary. Two partially seen faces of a box often
/// project into the same narrow band, making a misaligned rectangle the
/// strict area minimum; support pulls the fit back onto the sampled faces
/// while plain minimum area still decides unambiguous shapes.
pub fn min_area_rect(points: &[[f64; 2]], support_tol: f64) -> Option<MinAreaRect> {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return None;
    }
    let mut cands: Vec<Candidate> = Vec::with_capacity(hull.len());
    for i in 0..hull.len() {
        if let Some(c) = candidate_for_edge(&hull, hull[i], hull[(i + 1) % hull.len()]) {
            cands.push(c);
        }
    }
    let min_area = cands
        .iter()
        .map(|c| c.area)
        .fold(f64::INFINITY, f64::min);
    let best = cands
        .iter()
        .filter(|c| c.area <= min_area * 1.25)
        .max_by_key(|c| boundary_support(points, c, support_tol))?;

    let (len, width, mut yaw) = if best.e_along >= best.e_across {
        (best.e_along, best.e_across, best.dir[1].atan2(best.dir[0]))
    } else {
        (
            best.e_across,
            best.e_along,
            best.dir[1].atan2(best.dir[0]) + std::f64::consts::FRAC_PI_2,
        )
    };
    yaw = super::normalize_angle(yaw);
    Some(MinAreaRect {
        cx: best.cx,
        cy: best.cy,
        len,
        width,
        yaw,
    })
}
