use crate::error::{Error, Result};

/// A batch of equal-length trajectories stored as one `M x N x D` row-major
/// tensor (trajectory, time step, state coordinate).
///
/// `timestamps`, when present, apply to every trajectory and must be
/// strictly increasing; otherwise step `j` sits at time `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    data: Vec<f64>,
    shape: (usize, usize, usize),
    timestamps: Option<Vec<f64>>,
}

impl TrajectorySet {
    pub fn new(
        shape: (usize, usize, usize),
        data: Vec<f64>,
        timestamps: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (m, n, d) = shape;
        let len = m
            .checked_mul(n)
            .and_then(|v| v.checked_mul(d))
            .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows")))?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (traj, rest) = (pos / (n * d).max(1), pos % (n * d).max(1));
            return Err(Error::Domain(format!(
                "non-finite value at trajectory {traj}, step {}, coordinate {}",
                rest / d.max(1),
                rest % d.max(1)
            )));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != n {
                return Err(Error::Shape(format!(
                    "{} timestamps for trajectories of length {n}",
                    ts.len()
                )));
            }
            if ts.windows(2).any(|w| !(w[0] < w[1])) || ts.iter().any(|t| !t.is_finite()) {
                return Err(Error::Domain("timestamps must be finite and strictly increasing".into()));
            }
        }
        Ok(Self {
            data,
            shape,
            timestamps,
        })
    }

    /// Stacks per-trajectory buffers of `len * dim` values each.
    pub fn from_trajectories(trajectories: Vec<Vec<f64>>, len: usize, dim: usize) -> Result<Self> {
        let m = trajectories.len();
        let mut data = Vec::with_capacity(m * len * dim);
        for (i, t) in trajectories.into_iter().enumerate() {
            if t.len() != len * dim {
                return Err(Error::Shape(format!(
                    "trajectory {i} has {} values, expected {}",
                    t.len(),
                    len * dim
                )));
            }
            data.extend(t);
        }
        Self::new((m, len, dim), data, None)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn num_trajectories(&self) -> usize {
        self.shape.0
    }

    pub fn traj_len(&self) -> usize {
        self.shape.1
    }

    pub fn dim(&self) -> usize {
        self.shape.2
    }

    pub fn is_empty(&self) -> bool {
        self.shape.0 == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    /// Time of step `j`: the explicit timestamp, or `j`.
    pub fn time_of(&self, j: usize) -> f64 {
        self.timestamps.as_ref().map_or(j as f64, |ts| ts[j])
    }

    /// All `N * D` values of trajectory `i`.
    pub fn trajectory(&self, i: usize) -> &[f64] {
        let stride = self.shape.1 * self.shape.2;
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn state(&self, i: usize, j: usize) -> &[f64] {
        let d = self.shape.2;
        let start = (i * self.shape.1 + j) * d;
        &self.data[start..start + d]
    }

    /// Applies `f` to every state vector in place.
    pub fn map_states(&mut self, mut f: impl FnMut(&mut [f64])) {
        let d = self.shape.2;
        if d == 0 {
            return;
        }
        self.data.chunks_exact_mut(d).for_each(&mut f);
    }

    /// The first `count` trajectories (all of them if fewer exist).
    pub fn truncated(&self, count: usize) -> Self {
        let m = count.min(self.shape.0);
        let stride = self.shape.1 * self.shape.2;
        Self {
            data: self.data[..m * stride].to_vec(),
            shape: (m, self.shape.1, self.shape.2),
            timestamps: self.timestamps.clone(),
        }
    }

    /// Splits off the first `count` trajectories from the rest.
    pub fn split_at(&self, count: usize) -> (Self, Self) {
        let m = count.min(self.shape.0);
        let stride = self.shape.1 * self.shape.2;
        let (head, tail) = self.data.split_at(m * stride);
        let make = |data: &[f64], rows| Self {
            data: data.to_vec(),
            shape: (rows, self.shape.1, self.shape.2),
            timestamps: self.timestamps.clone(),
        };
        (make(head, m), make(tail, self.shape.0 - m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accessors() {
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let set = TrajectorySet::new((2, 3, 2), data, None).unwrap();
        assert_eq!(set.state(1, 2), &[10.0, 11.0]);
        assert_eq!(set.trajectory(0), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(set.time_of(2), 2.0);
        let (a, b) = set.split_at(1);
        assert_eq!(a.shape(), (1, 3, 2));
        assert_eq!(b.state(0, 0), &[6.0, 7.0]);
        assert_eq!(set.truncated(5).shape(), (2, 3, 2));
    }

    #[test]
    fn validation() {
        assert!(matches!(TrajectorySet::new((1, 2, 1), vec![0.0], None), Err(Error::Shape(_))));
        assert!(matches!(
            TrajectorySet::new((1, 2, 1), vec![0.0, f64::NAN], None),
            Err(Error::Domain(_))
        ));
        assert!(TrajectorySet::new((1, 2, 1), vec![0.0; 2], Some(vec![1.0, 1.0])).is_err());
        assert!(TrajectorySet::new((1, 2, 1), vec![0.0; 2], Some(vec![0.0])).is_err());
        let ok = TrajectorySet::new((1, 2, 1), vec![0.0; 2], Some(vec![0.0, 0.5])).unwrap();
        assert_eq!(ok.time_of(1), 0.5);
    }
}
