//! Top-down schematic of an episode: grid, objects at one frame, the snitch
//! trail faded by time, and an optional per-cell heatmap.

use cater_core::episode::Episode;
use cater_core::geometry::Point2;
use cater_core::labels::quantize_cell;
use cater_core::program::ActionType;
use cater_core::world::{Color, Shape};
use image::{Rgb, RgbImage};
use imageproc::drawing::{
    draw_filled_circle_mut, draw_filled_rect_mut, draw_hollow_circle_mut, draw_hollow_rect_mut, draw_line_segment_mut,
    draw_polygon_mut,
};
use imageproc::point::Point;
use imageproc::rect::Rect;

use crate::error::{CliError, Result};

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const GRID: Rgb<u8> = Rgb([200, 200, 200]);
const BLACK: Rgb<u8> = Rgb([20, 20, 20]);
const GOLD: Rgb<u8> = Rgb([212, 160, 23]);

#[derive(Debug, Clone)]
pub struct VizOptions {
    pub size: u32,
    /// Frame whose object poses are drawn; defaults to the last one.
    pub frame: Option<usize>,
    pub grid: u32,
    /// One score per cell of a `grid x grid` board, row-major.
    pub heatmap: Option<Vec<f64>>,
}

/// Trail points with consecutive duplicates removed, each with its
/// recency in `(0, 1]`.
pub fn trail_points(track: &[Point2]) -> Vec<(Point2, f64)> {
    let mut pts: Vec<Point2> = Vec::new();
    for p in track {
        if pts.last() != Some(p) {
            pts.push(*p);
        }
    }
    let n = pts.len() as f64;
    pts.into_iter().enumerate().map(|(i, p)| (p, (i + 1) as f64 / n)).collect()
}

fn rgb(c: Color) -> Rgb<u8> {
    match c {
        Color::Gray => Rgb([128, 128, 128]),
        Color::Red => Rgb([200, 40, 40]),
        Color::Blue => Rgb([40, 70, 200]),
        Color::Green => Rgb([40, 160, 60]),
        Color::Brown => Rgb([130, 80, 40]),
        Color::Purple => Rgb([130, 50, 170]),
        Color::Cyan => Rgb([40, 180, 190]),
        Color::Yellow => Rgb([230, 210, 40]),
        Color::Gold => GOLD,
    }
}

fn blend(a: Rgb<u8>, b: Rgb<u8>, t: f64) -> Rgb<u8> {
    let mix = |x: u8, y: u8| (f64::from(x) * (1.0 - t) + f64::from(y) * t).round() as u8;
    Rgb([mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])])
}

struct Canvas {
    size: f64,
    margin: f64,
    half: f64,
}

impl Canvas {
    fn scale(&self) -> f64 {
        (self.size - 2.0 * self.margin) / (2.0 * self.half)
    }

    fn px(&self, p: Point2) -> (f32, f32) {
        let s = self.scale();
        (
            (self.margin + (p.x + self.half) * s) as f32,
            (self.margin + (self.half - p.y) * s) as f32,
        )
    }

    fn len(&self, l: f64) -> i32 {
        (l * self.scale()).round().max(1.0) as i32
    }
}

pub fn render(ep: &Episode, opts: &VizOptions) -> Result<RgbImage> {
    let config = &ep.program.config;
    let n_frames = ep.timeline.frames.len();
    let frame = opts.frame.unwrap_or(n_frames - 1);
    if frame >= n_frames {
        return Err(CliError::Validation(format!("frame {frame} beyond {n_frames} frames")));
    }
    let grid = opts.grid.max(1);
    let half = config.plane_half_extent;
    let cv = Canvas {
        size: f64::from(opts.size),
        margin: 16.0,
        half,
    };
    let mut img = RgbImage::from_pixel(opts.size, opts.size, WHITE);
    let cell = 2.0 * half / f64::from(grid);

    if let Some(scores) = &opts.heatmap {
        if scores.len() != (grid * grid) as usize {
            return Err(CliError::Validation(format!(
                "heatmap has {} scores for a {grid}x{grid} grid",
                scores.len()
            )));
        }
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, s) in scores.iter().enumerate() {
            let t = if hi > lo { (s - lo) / (hi - lo) } else { 0.0 };
            let (row, col) = (i as u32 / grid, i as u32 % grid);
            let top_left = Point2::new(-half + f64::from(col) * cell, -half + f64::from(row + 1) * cell);
            let (x, y) = cv.px(top_left);
            let w = cv.len(cell) as u32;
            draw_filled_rect_mut(&mut img, Rect::at(x as i32, y as i32).of_size(w, w), blend(WHITE, Rgb([220, 60, 60]), 0.85 * t));
        }
    }

    for k in 0..=grid {
        let v = -half + f64::from(k) * cell;
        draw_line_segment_mut(&mut img, cv.px(Point2::new(v, -half)), cv.px(Point2::new(v, half)), GRID);
        draw_line_segment_mut(&mut img, cv.px(Point2::new(-half, v)), cv.px(Point2::new(half, v)), GRID);
    }

    let track = &ep.timeline.snitch_track;
    let last = *track.last().expect("non-empty timeline");
    if let Ok(c) = quantize_cell(last, grid, half) {
        let top_left = Point2::new(-half + f64::from(c.col) * cell, -half + f64::from(c.row + 1) * cell);
        let (x, y) = cv.px(top_left);
        let w = cv.len(cell) as u32;
        for inset in 0..2 {
            draw_hollow_rect_mut(
                &mut img,
                Rect::at(x as i32 + inset, y as i32 + inset).of_size(w - 2 * inset as u32, w - 2 * inset as u32),
                GOLD,
            );
        }
    }

    let trail = trail_points(&track[..=frame]);
    for w in trail.windows(2) {
        draw_line_segment_mut(&mut img, cv.px(w[0].0), cv.px(w[1].0), blend(WHITE, GOLD, 0.25 + 0.5 * w[1].1));
    }
    for (p, recency) in &trail {
        let (x, y) = cv.px(*p);
        draw_filled_circle_mut(&mut img, (x as i32, y as i32), 2, blend(WHITE, GOLD, 0.2 + 0.8 * recency));
    }

    // contained objects first so their containers cover them
    let states = &ep.timeline.frames[frame];
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by_key(|i| states[*i].contained_by.is_none());
    for i in order {
        let o = &ep.program.scene.objects[i];
        let st = &states[i];
        let (x, y) = cv.px(st.position.xy());
        let (cx, cy) = (x as i32, y as i32);
        let r = cv.len(o.spec.radius());
        let color = rgb(o.spec.color);
        if st.contained_by.is_some() {
            draw_hollow_circle_mut(&mut img, (cx, cy), r, color);
            continue;
        }
        match o.spec.shape {
            Shape::Cube => {
                let side = (2.0 * f64::from(r) / std::f64::consts::SQRT_2) as i32;
                draw_filled_rect_mut(&mut img, Rect::at(cx - side / 2, cy - side / 2).of_size(side as u32, side as u32), color);
            }
            Shape::Sphere => draw_filled_circle_mut(&mut img, (cx, cy), r, color),
            Shape::Cylinder => {
                draw_filled_circle_mut(&mut img, (cx, cy), r, color);
                draw_hollow_circle_mut(&mut img, (cx, cy), r, BLACK);
            }
            Shape::Cone => {
                let pts = [
                    Point::new(cx, cy - r),
                    Point::new(cx - r * 87 / 100, cy + r / 2),
                    Point::new(cx + r * 87 / 100, cy + r / 2),
                ];
                draw_polygon_mut(&mut img, &pts, color);
            }
            Shape::Snitch => {
                draw_filled_circle_mut(&mut img, (cx, cy), r, GOLD);
                draw_hollow_circle_mut(&mut img, (cx, cy), r, BLACK);
            }
        }
        let moving = ep
            .program
            .actions
            .iter()
            .any(|a| a.actor_id == o.spec.id && a.action != ActionType::Rotate && a.interval.contains(frame as u32));
        if moving {
            draw_hollow_circle_mut(&mut img, (cx, cy), r + 2, BLACK);
        }
    }
    Ok(img)
}

pub fn save_png(img: &RgbImage, path: &std::path::Path) -> Result<()> {
    img.save(path).map_err(|source| CliError::Image {
        path: path.to_path_buf(),
        source,
    })
}
