use crate::field::Field2;
use crate::geometry::Vec2;

pub const DEFAULT_DEPOSIT: f64 = 0.3;
pub const DEFAULT_FADE: f64 = 0.1;

/// Per-cell trail intensity in `[0, 1]`, rendered white on black.
#[derive(Clone, Debug, PartialEq)]
pub struct TrailField {
    pub intensity: Field2,
    pub deposit: f64,
}

impl TrailField {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            intensity: Field2::new(nx, ny, 0.0),
            deposit: DEFAULT_DEPOSIT,
        }
    }

    /// Fades by `alpha`, then adds `deposit` to the cell under each position
    /// (clamped to 1). Positions outside the grid deposit nothing.
    pub fn deposit_and_fade(&mut self, positions: impl IntoIterator<Item = Vec2>, alpha: f64) {
        assert!(alpha > 0.0 && alpha <= 1.0, "fade must lie in (0, 1]");
        let keep = 1.0 - alpha;
        for v in self.intensity.as_mut_slice() {
            *v *= keep;
        }
        let (nx, ny) = self.intensity.dims();
        for p in positions {
            if !(p.x >= 0.0 && p.y >= 0.0 && p.x < nx as f64 && p.y < ny as f64) {
                continue;
            }
            let (i, j) = (p.x as usize, p.y as usize);
            let v = self.intensity.get(i, j);
            self.intensity.set(i, j, (v + self.deposit).min(1.0));
        }
    }

    /// Intensities quantised to bytes, row-major with row 0 south.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.intensity
            .as_slice()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_fade_keeps_only_this_frame() {
        let mut t = TrailField::new(4, 4);
        t.intensity.fill(0.8);
        t.deposit_and_fade([Vec2::new(1.5, 2.5)], 1.0);
        for j in 0..4 {
            for i in 0..4 {
                let want = if (i, j) == (1, 2) { t.deposit } else { 0.0 };
                assert_eq!(t.intensity.get(i, j), want);
            }
        }
    }

    #[test]
    fn stationary_particle_follows_geometric_series() {
        let mut t = TrailField::new(3, 3);
        t.deposit = 0.05;
        let alpha = 0.1;
        let p = Vec2::new(1.2, 1.7);
        for k in 1..=200 {
            t.deposit_and_fade([p], alpha);
            // x_k = d * sum_{m<k} (1 - a)^m, capped at 1.
            let closed = (t.deposit * (1.0 - (1.0 - alpha).powi(k)) / alpha).min(1.0);
            assert!((t.intensity.get(1, 1) - closed).abs() < 1e-12, "k={k}");
        }
        assert!((t.intensity.get(1, 1) - 0.5).abs() < 1e-8);
    }
}
