//! Speed, heading, turn-rate, distance and body-acceleration markers.

use super::{displacements, mean, speed_series, variance, Segment};
use crate::error::Result;
use crate::geom::{wrap_angle, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicStats {
    /// M1: net displacement over the elapsed time.
    pub segment_speed: f64,
    /// M2: path length over the elapsed time.
    pub path_rate: f64,
    /// M3, M4
    pub speed_mean: f64,
    pub speed_var: f64,
    /// M5: circular mean heading (frame dependent).
    pub heading_mean: f64,
    /// M6: circular variance `1 - R` of headings.
    pub heading_var: f64,
    /// M14: mean signed heading change per unit time.
    pub turn_rate: f64,
    /// M17..M20: distance to the shepherd.
    pub dist_mean: f64,
    pub dist_var: f64,
    pub dist_max: f64,
    pub dist_min: f64,
}

/// Kinematic markers of agent `i` over the segment.
///
/// Rates divide by the elapsed time `(k - 1) * dt` spanned by the `k`
/// observations.
pub fn kinematic_stats(seg: &Segment, i: usize) -> Result<KinematicStats> {
    seg.require(3, "kinematic markers")?;
    let path = seg.path(i);
    let elapsed = (path.len() - 1) as f64 * seg.dt;
    let steps = displacements(&path);
    let speeds = speed_series(&path, seg.dt);

    let net = (path[path.len() - 1] - path[0]).norm();
    let length: f64 = steps.iter().map(|d| d.norm()).sum();

    let moving: Vec<Vec2> = steps.iter().copied().filter(|d| *d != Vec2::ZERO).collect();
    let (heading_mean, heading_var) = if moving.is_empty() {
        (0.0, 0.0)
    } else {
        let (s, c) = moving.iter().fold((0.0, 0.0), |(s, c), d| {
            let a = d.angle();
            (s + a.sin(), c + a.cos())
        });
        let m = moving.len() as f64;
        let r = ((s / m).powi(2) + (c / m).powi(2)).sqrt();
        (s.atan2(c), (1.0 - r).max(0.0))
    };

    let turns: Vec<f64> = steps
        .windows(2)
        .filter(|w| w[0] != Vec2::ZERO && w[1] != Vec2::ZERO)
        .map(|w| wrap_angle(w[1].angle() - w[0].angle()) / seg.dt)
        .collect();

    let shepherd = seg.shepherd();
    let dists: Vec<f64> = seg
        .frames
        .iter()
        .map(|f| f[i].distance(f[shepherd]))
        .collect();

    Ok(KinematicStats {
        segment_speed: net / elapsed,
        path_rate: length / elapsed,
        speed_mean: mean(&speeds),
        speed_var: variance(&speeds),
        heading_mean,
        heading_var,
        turn_rate: mean(&turns),
        dist_mean: mean(&dists),
        dist_var: variance(&dists),
        dist_max: dists.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        dist_min: dists.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbaStats {
    /// M11, M12: mean and variance of the 2D acceleration magnitude.
    pub mean: f64,
    pub var: f64,
    /// M13: sum of `|a_x| + |a_y|` over interior ticks.
    pub odba: f64,
}

/// Second-difference accelerations at the interior ticks of a path.
pub fn accelerations(path: &[Vec2], dt: f64) -> Vec<Vec2> {
    path.windows(3)
        .map(|w| (w[2] - w[1] * 2.0 + w[0]) * (1.0 / (dt * dt)))
        .collect()
}

pub fn dba_stats(seg: &Segment, i: usize) -> Result<DbaStats> {
    seg.require(3, "body acceleration markers")?;
    let acc = accelerations(&seg.path(i), seg.dt);
    let mags: Vec<f64> = acc.iter().map(|a| a.norm()).collect();
    Ok(DbaStats {
        mean: mean(&mags),
        var: variance(&mags),
        odba: acc.iter().map(|a| a.x.abs() + a.y.abs()).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    /// Frames for a single sheep following `path` with a fixed shepherd.
    fn frames(path: &[Vec2], shepherd: Vec2) -> Vec<Vec<Vec2>> {
        path.iter().map(|p| vec![*p, shepherd]).collect()
    }

    fn line(n: usize) -> Vec<Vec2> {
        (0..n).map(|t| Vec2::new(t as f64, 0.0)).collect()
    }

    #[test]
    fn stationary_agent_is_still() {
        let f = frames(&vec![Vec2::new(3.0, 4.0); 6], Vec2::ZERO);
        let seg = Segment::new(&f, 1, 1.0).unwrap();
        let k = kinematic_stats(&seg, 0).unwrap();
        assert_eq!(
            [k.segment_speed, k.path_rate, k.speed_mean, k.speed_var, k.turn_rate],
            [0.0; 5]
        );
        assert_eq!((k.dist_mean, k.dist_var, k.dist_min, k.dist_max), (5.0, 0.0, 5.0, 5.0));
    }

    #[test]
    fn straight_line_unit_steps() {
        let f = frames(&line(10), Vec2::new(0.0, -1.0));
        let seg = Segment::new(&f, 1, 1.0).unwrap();
        let k = kinematic_stats(&seg, 0).unwrap();
        assert_eq!(k.speed_mean, 1.0);
        assert_eq!(k.speed_var, 0.0);
        assert_eq!(k.heading_var, 0.0);
        assert_eq!(k.segment_speed, k.path_rate);
        assert_eq!(k.turn_rate, 0.0);
    }

    /// Independent per-step evaluation of the square path markers.
    fn square_oracle(path: &[Vec2], dt: f64) -> (f64, f64) {
        let mut total_turn = 0.0;
        let mut turns = 0;
        let mut length = 0.0;
        for t in 1..path.len() {
            let d = path[t] - path[t - 1];
            length += (d.x * d.x + d.y * d.y).sqrt();
            if t >= 2 {
                let prev = path[t - 1] - path[t - 2];
                // left turn magnitude from the cross and dot products
                let ang = prev.cross(d).atan2(prev.dot(d));
                total_turn += ang;
                turns += 1;
            }
        }
        (total_turn / turns as f64 / dt, length / ((path.len() - 1) as f64 * dt))
    }

    #[test]
    fn unit_square_turn_rate() {
        let path = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.0),
        ];
        for dt in [1.0, 0.5] {
            let f = frames(&path, Vec2::new(5.0, 5.0));
            let seg = Segment::new(&f, 1, dt).unwrap();
            let k = kinematic_stats(&seg, 0).unwrap();
            let (turn, rate) = square_oracle(&path, dt);
            assert!((turn - FRAC_PI_2 / dt).abs() < 1e-12);
            assert!((rate - 4.0 / (4.0 * dt)).abs() < 1e-12);
            assert!((k.turn_rate - turn).abs() < 1e-12);
            assert!((k.path_rate - rate).abs() < 1e-12);
            assert_eq!(k.segment_speed, 0.0);
        }
    }

    #[test]
    fn too_short_window_is_an_error() {
        let f = frames(&line(2), Vec2::ZERO);
        let seg = Segment::new(&f, 1, 1.0).unwrap();
        assert!(kinematic_stats(&seg, 0).is_err());
        assert!(dba_stats(&seg, 0).is_err());
    }

    #[test]
    fn constant_velocity_has_no_body_acceleration() {
        let f = frames(&line(8), Vec2::ZERO);
        let seg = Segment::new(&f, 1, 1.0).unwrap();
        let d = dba_stats(&seg, 0).unwrap();
        assert_eq!((d.mean, d.var, d.odba), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_unit_kick() {
        // x: 0, 0, 0, 1, 2 -> second differences 0, 1, 0
        let path: Vec<Vec2> = [0.0, 0.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&x| Vec2::new(x, 0.0))
            .collect();
        let f = frames(&path, Vec2::ZERO);
        let seg = Segment::new(&f, 1, 1.0).unwrap();
        let d = dba_stats(&seg, 0).unwrap();
        assert_eq!(d.odba, 1.0);
        assert!((d.mean - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn odba_grows_with_window_and_adds_over_concatenation() {
        let path: Vec<Vec2> = (0..40)
            .map(|t| {
                let t = t as f64;
                Vec2::new((t * 0.7).sin() * 3.0 + t, (t * 0.3).cos() * 2.0)
            })
            .collect();
        let f = frames(&path, Vec2::ZERO);
        let odba = |a: usize, b: usize| {
            dba_stats(&Segment::new(&f[a..b], 1, 1.0).unwrap(), 0).unwrap().odba
        };
        let mut last = 0.0;
        for k in 3..=40 {
            let o = odba(0, k);
            assert!(o >= last);
            last = o;
        }
        // windows overlapping by two frames share no interior tick
        let whole = odba(0, 40);
        let split = odba(0, 21) + odba(19, 40);
        assert!((whole - split).abs() < 1e-9);
    }
}
