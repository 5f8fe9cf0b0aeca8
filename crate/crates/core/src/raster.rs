//! Row-major rasters: metric depth, entity ids and binary masks.

use std::collections::BTreeSet;

/// Metric depth in meters (camera-space z). `0.0` marks "no geometry" in
/// rendered maps and "invalid" in estimator output.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl DepthMap {
    pub const SENTINEL: f32 = 0.0;

    pub fn new(width: u32, height: u32) -> DepthMap {
        DepthMap { width, height, data: vec![Self::SENTINEL; (width * height) as usize] }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<f32>) -> DepthMap {
        assert_eq!(data.len(), (width * height) as usize, "depth raster size mismatch");
        DepthMap { width, height, data }
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: f32) {
        self.data[(y * self.width + x) as usize] = v;
    }

    pub fn is_valid(v: f32) -> bool {
        v.is_finite() && v > 0.0
    }

    pub fn max_depth(&self) -> f32 {
        self.data.iter().copied().filter(|v| v.is_finite()).fold(0.0, f32::max)
    }
}

/// Entity id per pixel; `0` is background.
#[derive(Debug, Clone, PartialEq)]
pub struct IdMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u32>,
}

impl IdMap {
    pub fn new(width: u32, height: u32) -> IdMap {
        IdMap { width, height, data: vec![0; (width * height) as usize] }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<u32>) -> IdMap {
        assert_eq!(data.len(), (width * height) as usize, "id raster size mismatch");
        IdMap { width, height, data }
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.data[(y * self.width + x) as usize]
    }

    /// Nonzero ids present in the map, ascending.
    pub fn ids(&self) -> BTreeSet<u32> {
        self.data.iter().copied().filter(|&i| i != 0).collect()
    }

    pub fn mask_for(&self, id: u32) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v == id && id != 0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Mask {
        Mask { width, height, data: vec![false; (width * height) as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[(y * self.width + x) as usize] = v;
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// `(x, y)` of every set pixel in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w))
    }
}
