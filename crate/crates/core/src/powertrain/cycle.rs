use std::path::Path;

use serde::Deserialize;

use super::PowertrainError;

/// Speed trace sampled at a uniform interval.
///
/// `speed` holds one more sample than there are steps; step `k` uses
/// `speed[k]` and the forward difference `accel[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub dt: f64,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
    pub distance: f64,
}

impl DriveCycle {
    pub fn new(dt: f64, speed: Vec<f64>) -> Result<Self, PowertrainError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(PowertrainError::InvalidCycle(format!("time step {dt} must be positive")));
        }
        if speed.len() < 2 {
            return Err(PowertrainError::InvalidCycle("need at least two samples".into()));
        }
        if let Some((i, v)) = speed.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(PowertrainError::InvalidCycle(format!("speed {v} at sample {i}")));
        }
        let accel: Vec<f64> = speed.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        let distance: f64 = speed[..speed.len() - 1].iter().map(|v| v * dt).sum();
        if distance <= 0.0 {
            return Err(PowertrainError::InvalidCycle("cycle covers no distance".into()));
        }
        Ok(DriveCycle {
            dt,
            speed,
            accel,
            distance,
        })
    }

    pub fn steps(&self) -> usize {
        self.accel.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    /// Speed at the start of each step.
    pub fn step_speeds(&self) -> &[f64] {
        &self.speed[..self.steps()]
    }

    pub fn max_speed(&self) -> f64 {
        self.speed.iter().copied().fold(0.0, f64::max)
    }

    /// Parses a CSV with columns `t_s, v_mps`; the time step must be uniform.
    pub fn parse_csv(text: &str) -> Result<Self, PowertrainError> {
        #[derive(Deserialize)]
        struct Row {
            t_s: f64,
            v_mps: f64,
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut times = Vec::new();
        let mut speeds = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| PowertrainError::InvalidCycle(format!("row {}: {e}", i + 1)))?;
            times.push(row.t_s);
            speeds.push(row.v_mps);
        }
        if times.len() < 2 {
            return Err(PowertrainError::InvalidCycle("need at least two samples".into()));
        }
        let dt = times[1] - times[0];
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(PowertrainError::InvalidCycle(format!(
                    "non-uniform time step at row {}: {} vs {dt}",
                    i + 2,
                    w[1] - w[0]
                )));
            }
        }
        Self::new(dt, speeds)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, PowertrainError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PowertrainError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    /// WLTC class 3b, 1800 s at 1 Hz.
    pub fn wltc_class3() -> Self {
        Self::parse_csv(crate::data::WLTC_CLASS3_CSV).expect("bundled cycle parses")
    }
}
