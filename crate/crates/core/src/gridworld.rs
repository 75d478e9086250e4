//! Deterministic navigation gridworld with binary-image observations.
//!
//! Each cell of the grid owns a small binary texture. The agent sees the
//! `(2r+1) x (2r+1)` block of textures around its cell, with one extra ring
//! of padding textures outside the grid so boundary cells look like any
//! other cell. An artifact mask over the arena is OR-ed onto the textures.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, DynamicPathParams};
use crate::bitmap::Bitmap;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Crop sides the transduction accepts.
pub const CROP_SIDES: [usize; 5] = [4, 8, 16, 20, 24];

pub const NUM_ACTIONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl From<[usize; 2]> for Cell {
    fn from([x, y]: [usize; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    /// Column and row offsets; rows grow downward.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal: Cell,
    pub tile_size: usize,
    pub view_radius: usize,
    pub noise_fraction: f64,
    pub texture_seed: u64,
    /// Steps after which an episode is cut off and restarted without reward.
    pub episode_cap: usize,
    /// Per-step, per-pixel flip probability applied to observations. Zero keeps
    /// the textures static.
    pub flip_probability: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            width: 13,
            height: 13,
            start: Cell::new(1, 1),
            goal: Cell::new(11, 11),
            tile_size: 8,
            view_radius: 1,
            noise_fraction: 0.10,
            texture_seed: 0,
            episode_cap: 2000,
            flip_probability: 0.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("grid must have at least one cell"));
        }
        for (name, c) in [("start", self.start), ("goal", self.goal)] {
            if !self.contains(c) {
                return Err(Error::config(format!(
                    "{name} ({}, {}) lies outside the {}x{} grid",
                    c.x, c.y, self.width, self.height
                )));
            }
        }
        if self.start == self.goal {
            return Err(Error::config("start and goal must differ"));
        }
        if self.tile_size < 2 {
            return Err(Error::config("tile_size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return Err(Error::config("noise_fraction must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::config("flip_probability must lie in [0, 1]"));
        }
        if self.episode_cap == 0 {
            return Err(Error::config("episode_cap must be positive"));
        }
        Ok(())
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Side length in pixels of the full observation.
    pub fn observation_side(&self) -> usize {
        self.tile_size * (2 * self.view_radius + 1)
    }

    pub fn arena_width(&self) -> usize {
        self.width * self.tile_size
    }

    pub fn arena_height(&self) -> usize {
        self.height * self.tile_size
    }

    /// ON pixels per tile.
    pub fn pixels_per_tile(&self) -> usize {
        let area = (self.tile_size * self.tile_size) as f64;
        (self.noise_fraction * area).round() as usize
    }

    pub fn empty_mask(&self) -> Bitmap {
        Bitmap::new(self.arena_width(), self.arena_height())
    }

    /// Cell reached from `from` by `action`; walls self-loop.
    pub fn neighbor(&self, from: Cell, action: Action) -> Cell {
        let (dx, dy) = action.delta();
        let x = from.x as isize + dx;
        let y = from.y as isize + dy;
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            from
        } else {
            Cell::new(x as usize, y as usize)
        }
    }
}

/// Per-cell textures plus the padding ring, pre-composed into one background.
#[derive(Clone, Debug)]
pub struct Textures {
    tile: usize,
    pad: usize,
    width: usize,
    height: usize,
    /// Tiles of the padded grid, row-major over `(width + 2 pad) x (height + 2 pad)`.
    tiles: Vec<Bitmap>,
    background: Bitmap,
}

impl Textures {
    pub fn tile_size(&self) -> usize {
        self.tile
    }

    /// Texture of an in-grid cell.
    pub fn tile(&self, c: Cell) -> &Bitmap {
        let cols = self.width + 2 * self.pad;
        &self.tiles[(c.y + self.pad) * cols + c.x + self.pad]
    }

    /// All tiles, interior and padding, in padded row-major order.
    pub fn all_tiles(&self) -> &[Bitmap] {
        &self.tiles
    }

    pub fn interior_tiles(&self) -> impl Iterator<Item = (Cell, &Bitmap)> {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
            .map(move |c| (c, self.tile(c)))
    }

    /// Padded background image, `(width + 2 pad) * tile` pixels per side.
    pub fn background(&self) -> &Bitmap {
        &self.background
    }

    /// Width in pixels of the padding border.
    pub fn pad_pixels(&self) -> usize {
        self.pad * self.tile
    }
}

/// Draw a distinct random texture for every cell and every padding cell.
pub fn generate_textures(spec: &GridSpec) -> Result<Textures> {
    spec.validate()?;
    let tile = spec.tile_size;
    let area = tile * tile;
    let on = spec.pixels_per_tile();
    let pad = spec.view_radius;
    let cols = spec.width + 2 * pad;
    let rows = spec.height + 2 * pad;

    let mut interior_rng = stream(spec.texture_seed, Stream::Texture);
    let mut padding_rng = stream(spec.texture_seed.wrapping_add(1), Stream::Texture);
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(cols * rows);
    let mut draw = |rng: &mut ChaCha8Rng| -> Result<Bitmap> {
        const MAX_ATTEMPTS: usize = 10_000;
        for _ in 0..MAX_ATTEMPTS {
            let mut idx = sample(rng, area, on).into_vec();
            idx.sort_unstable();
            if seen.insert(idx.clone()) {
                let mut b = Bitmap::new(tile, tile);
                for i in idx {
                    b.set_index(i, true);
                }
                return Ok(b);
            }
        }
        Err(Error::config(format!(
            "could not draw {} distinct {tile}x{tile} tiles with {on} ON pixels",
            cols * rows
        )))
    };

    let mut slots: Vec<Option<Bitmap>> = vec![None; cols * rows];
    for y in 0..spec.height {
        for x in 0..spec.width {
            slots[(y + pad) * cols + x + pad] = Some(draw(&mut interior_rng)?);
        }
    }
    for slot in slots.iter_mut() {
        if slot.is_none() {
            *slot = Some(draw(&mut padding_rng)?);
        }
    }
    let tiles: Vec<Bitmap> = slots.into_iter().map(|t| t.expect("filled")).collect();

    let mut background = Bitmap::new(cols * tile, rows * tile);
    for (k, t) in tiles.iter().enumerate() {
        let (cx, cy) = (k % cols, k / cols);
        for i in t.on_indices() {
            background.set(cx * tile + i % tile, cy * tile + i / tile, true);
        }
    }

    Ok(Textures {
        tile,
        pad,
        width: spec.width,
        height: spec.height,
        tiles,
        background,
    })
}

/// Square binary observation flattened to reals in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    side: usize,
    flat: Vec<f64>,
}

impl Observation {
    pub fn from_bitmap(b: &Bitmap) -> Self {
        assert_eq!(b.width(), b.height(), "observations are square");
        Self {
            side: b.width(),
            flat: b.bits().iter().map(|&p| if p { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn pixel(&self, x: usize, y: usize) -> bool {
        self.flat[y * self.side + x] != 0.0
    }

    pub fn to_bitmap(&self) -> Bitmap {
        Bitmap::from_bits(
            self.side,
            self.side,
            self.flat.iter().map(|&v| v != 0.0).collect(),
        )
    }
}

/// Compose the view around `pos`: textures (with padding beyond the walls)
/// OR-ed with the artifact mask.
pub fn render_observation(textures: &Textures, mask: &Bitmap, pos: Cell) -> Observation {
    let tile = textures.tile;
    let side = tile * (2 * textures.pad + 1);
    let pad_px = textures.pad_pixels();
    let bg = &textures.background;
    // Window origin in padded coordinates: (pos - r + pad) * tile == pos * tile.
    let (ox, oy) = (pos.x * tile, pos.y * tile);
    let mut flat = Vec::with_capacity(side * side);
    for y in 0..side {
        let py = oy + y;
        for x in 0..side {
            let px = ox + x;
            let mut on = bg.get(px, py);
            if !on && px >= pad_px && py >= pad_px {
                let (ax, ay) = (px - pad_px, py - pad_px);
                if ax < mask.width() && ay < mask.height() {
                    on = mask.get(ax, ay);
                }
            }
            flat.push(if on { 1.0 } else { 0.0 });
        }
    }
    Observation { side, flat }
}

/// Centered square crop of an observation.
pub fn transduce(obs: &Observation, crop_side: usize) -> Result<Observation> {
    if !CROP_SIDES.contains(&crop_side) {
        return Err(Error::config(format!(
            "crop side {crop_side} is not one of {CROP_SIDES:?}"
        )));
    }
    let side = obs.side;
    if crop_side > side || !(side - crop_side).is_multiple_of(2) {
        return Err(Error::config(format!(
            "crop side {crop_side} cannot be centered in a {side}x{side} observation"
        )));
    }
    if crop_side == side {
        return Ok(obs.clone());
    }
    let off = (side - crop_side) / 2;
    let mut flat = Vec::with_capacity(crop_side * crop_side);
    for y in 0..crop_side {
        let row = (y + off) * side + off;
        flat.extend_from_slice(&obs.flat[row..row + crop_side]);
    }
    Ok(Observation {
        side: crop_side,
        flat,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Observation,
    pub done: bool,
}

/// How the artifact mask evolves while the agent moves.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskDynamics {
    Static,
    DynamicPath(DynamicPathParams),
}

#[derive(Clone, Debug)]
pub struct EnvState {
    pub agent_pos: Cell,
    pub step_count: u64,
    pub episode_count: u64,
    pub episode_steps: usize,
    pub truncations: u64,
    pub artifact_mask: Bitmap,
    rng: ChaCha8Rng,
}

/// Outcome of one environment step.
#[derive(Clone, Debug)]
pub struct Step {
    pub transition: Transition,
    /// The episode hit the step cap and was restarted without reward.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct GridWorld {
    spec: GridSpec,
    textures: Textures,
    dynamics: MaskDynamics,
    state: EnvState,
    current: Observation,
}

impl GridWorld {
    /// `seed` drives per-step randomness (dynamic paths, observation flips);
    /// textures come from `spec.texture_seed`.
    pub fn new(spec: GridSpec, mask: Bitmap, dynamics: MaskDynamics, seed: u64) -> Result<Self> {
        let textures = generate_textures(&spec)?;
        Self::with_textures(spec, textures, mask, dynamics, seed)
    }

    pub fn with_textures(
        spec: GridSpec,
        textures: Textures,
        mask: Bitmap,
        dynamics: MaskDynamics,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        if (mask.width(), mask.height()) != (spec.arena_width(), spec.arena_height()) {
            return Err(Error::config(format!(
                "artifact mask is {}x{}, arena is {}x{}",
                mask.width(),
                mask.height(),
                spec.arena_width(),
                spec.arena_height()
            )));
        }
        if let MaskDynamics::DynamicPath(p) = &dynamics {
            p.validate()?;
        }
        let state = EnvState {
            agent_pos: spec.start,
            step_count: 0,
            episode_count: 0,
            episode_steps: 0,
            truncations: 0,
            artifact_mask: mask,
            rng: stream(seed, Stream::Environment),
        };
        let mut env = Self {
            current: Observation {
                side: 0,
                flat: Vec::new(),
            },
            spec,
            textures,
            dynamics,
            state,
        };
        env.current = env.observe(env.state.agent_pos);
        Ok(env)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn textures(&self) -> &Textures {
        &self.textures
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    /// Observation at the agent's current cell.
    pub fn observation(&self) -> &Observation {
        &self.current
    }

    fn observe(&mut self, pos: Cell) -> Observation {
        let mut obs = render_observation(&self.textures, &self.state.artifact_mask, pos);
        let p = self.spec.flip_probability;
        if p > 0.0 {
            for v in obs.flat.iter_mut() {
                if self.state.rng.random::<f64>() < p {
                    *v = 1.0 - *v;
                }
            }
        }
        obs
    }

    pub fn step(&mut self, action: Action) -> Step {
        let from = self.state.agent_pos;
        let to = self.spec.neighbor(from, action);
        if let MaskDynamics::DynamicPath(params) = &self.dynamics {
            artifacts::dynamic_path_update(
                &mut self.state.artifact_mask,
                &self.spec,
                from,
                to,
                params,
                &mut self.state.rng,
            );
        }
        self.state.step_count += 1;
        self.state.episode_steps += 1;

        let obs = std::mem::replace(&mut self.current, Observation { side: 0, flat: Vec::new() });
        let next_obs = self.observe(to);
        let done = to == self.spec.goal;
        let truncated = !done && self.state.episode_steps >= self.spec.episode_cap;
        if done || truncated {
            self.state.agent_pos = self.spec.start;
            self.state.episode_steps = 0;
            if done {
                self.state.episode_count += 1;
            } else {
                self.state.truncations += 1;
            }
            self.current = self.observe(self.spec.start);
        } else {
            self.state.agent_pos = to;
            self.current = next_obs.clone();
        }
        Step {
            transition: Transition {
                obs,
                action,
                reward: if done { 1.0 } else { 0.0 },
                next_obs,
                done,
            },
            truncated,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_at(pos: Cell) -> GridWorld {
        let spec = GridSpec::default();
        let mask = spec.empty_mask();
        let mut env = GridWorld::new(spec, mask, MaskDynamics::Static, 0).unwrap();
        env.state.agent_pos = pos;
        env.current = env.observe(pos);
        env
    }

    #[test]
    fn textures_have_six_on_pixels() {
        let t = generate_textures(&GridSpec::default()).unwrap();
        assert_eq!(t.all_tiles().len(), 15 * 15);
        for tile in t.all_tiles() {
            assert_eq!(tile.count_on(), 6);
            assert_eq!((tile.width(), tile.height()), (8, 8));
        }
    }

    #[test]
    fn textures_deterministic_and_distinct() {
        let spec = GridSpec::default();
        let a = generate_textures(&spec).unwrap();
        let b = generate_textures(&spec).unwrap();
        assert_eq!(a.all_tiles(), b.all_tiles());
        let tiles: Vec<&Bitmap> = a.interior_tiles().map(|(_, t)| t).collect();
        assert_eq!(tiles.len(), 169);
        let mut pairs = 0;
        for i in 0..tiles.len() {
            for j in i + 1..tiles.len() {
                assert_ne!(tiles[i], tiles[j], "tiles {i} and {j} collide");
                pairs += 1;
            }
        }
        assert_eq!(pairs, 169 * 168 / 2);
        let other = generate_textures(&GridSpec {
            texture_seed: 1,
            ..spec
        })
        .unwrap();
        assert_ne!(a.all_tiles(), other.all_tiles());
    }

    #[test]
    fn step_into_goal_resets() {
        let mut env = env_at(Cell::new(10, 11));
        let s = env.step(Action::Right);
        assert_eq!(s.transition.reward, 1.0);
        assert!(s.transition.done);
        assert_eq!(env.state().agent_pos, Cell::new(1, 1));
        assert_eq!(env.state().episode_count, 1);
        assert_eq!(env.observation(), &env.clone().observe(Cell::new(1, 1)));
    }

    #[test]
    fn wall_self_loops() {
        let mut env = env_at(Cell::new(0, 5));
        let s = env.step(Action::Left);
        assert_eq!(env.state().agent_pos, Cell::new(0, 5));
        assert_eq!(s.transition.reward, 0.0);
        assert!(!s.transition.done);
        assert_eq!(s.transition.obs, s.transition.next_obs);
    }

    #[test]
    fn interior_move() {
        let mut env = env_at(Cell::new(5, 5));
        let s = env.step(Action::Up);
        assert_eq!(env.state().agent_pos, Cell::new(5, 4));
        assert_eq!(s.transition.reward, 0.0);
    }

    #[test]
    fn episode_cap_truncates_without_reward() {
        let spec = GridSpec {
            episode_cap: 5,
            ..GridSpec::default()
        };
        let mask = spec.empty_mask();
        let mut env = GridWorld::new(spec, mask, MaskDynamics::Static, 0).unwrap();
        let mut truncated = 0;
        for _ in 0..10 {
            let s = env.step(Action::Up);
            assert_eq!(s.transition.reward, 0.0);
            truncated += s.truncated as usize;
        }
        assert_eq!(truncated, 2);
        assert_eq!(env.state().truncations, 2);
        assert_eq!(env.state().episode_count, 0);
    }

    #[test]
    fn center_view_is_texture_mosaic() {
        let spec = GridSpec::default();
        let t = generate_textures(&spec).unwrap();
        let obs = render_observation(&t, &spec.empty_mask(), Cell::new(6, 6));
        assert_eq!(obs.side(), 24);
        for dy in 0..3 {
            for dx in 0..3 {
                let tile = t.tile(Cell::new(5 + dx, 5 + dy));
                for y in 0..8 {
                    for x in 0..8 {
                        assert_eq!(obs.pixel(dx * 8 + x, dy * 8 + y), tile.get(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn corner_view_uses_padding_tiles() {
        let spec = GridSpec::default();
        let t = generate_textures(&spec).unwrap();
        let obs = render_observation(&t, &spec.empty_mask(), Cell::new(0, 0));
        assert_eq!(obs.len(), 576);
        let interior: HashSet<&Bitmap> = t.interior_tiles().map(|(_, b)| b).collect();
        let mut padding = 0;
        for ty in 0..3 {
            for tx in 0..3 {
                let mut b = Bitmap::new(8, 8);
                for y in 0..8 {
                    for x in 0..8 {
                        b.set(x, y, obs.pixel(tx * 8 + x, ty * 8 + y));
                    }
                }
                assert_eq!(b.count_on(), 6, "padding tiles share the texture statistics");
                if !interior.contains(&b) {
                    padding += 1;
                }
            }
        }
        assert_eq!(padding, 5);
    }

    #[test]
    fn full_mask_saturates() {
        let spec = GridSpec::default();
        let t = generate_textures(&spec).unwrap();
        let mask = Bitmap::filled(104, 104);
        let obs = render_observation(&t, &mask, Cell::new(4, 7));
        assert!(obs.flat().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn transduce_identity_and_sizes() {
        let env = env_at(Cell::new(3, 3));
        let o = env.observation();
        assert_eq!(&transduce(o, 24).unwrap(), o);
        for (side, len) in [(4, 16), (8, 64), (16, 256), (20, 400), (24, 576)] {
            assert_eq!(transduce(o, side).unwrap().len(), len);
        }
        assert!(matches!(transduce(o, 5), Err(Error::Config(_))));
        assert!(matches!(transduce(o, 12), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = GridSpec {
            goal: Cell::new(1, 1),
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = GridSpec {
            start: Cell::new(13, 0),
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
