//! Serializable environment descriptors.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    PlaneTicket,
    LinearGaussian,
}

impl EnvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::PlaneTicket => "plane_ticket",
            EnvKind::LinearGaussian => "linear_gaussian",
        }
    }
}

fn default_m() -> usize {
    30
}

/// `{"env", "k", "T", "M", "noise_scale", "params": {...}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub env: EnvKind,
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    /// Coefficient of u^ε in recorded actions. Defaults to 10 for the plane
    /// ticket and 1 for the linear-Gaussian env.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

impl EnvSpec {
    pub fn plane_ticket(k: usize, horizon: usize) -> Self {
        Self {
            env: EnvKind::PlaneTicket,
            k,
            horizon,
            m: default_m(),
            noise_scale: None,
            params: Map::new(),
        }
    }

    pub fn linear_gaussian(k: usize, horizon: usize, params: LinearGaussianParams) -> Self {
        let params = match serde_json::to_value(params) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        Self {
            env: EnvKind::LinearGaussian,
            k,
            horizon,
            m: 1,
            noise_scale: None,
            params,
        }
    }

    pub fn with_noise_scale(mut self, c: f64) -> Self {
        self.noise_scale = Some(c);
        self
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale.unwrap_or(match self.env {
            EnvKind::PlaneTicket => 10.0,
            EnvKind::LinearGaussian => 1.0,
        })
    }

    pub fn plane_params(&self) -> Result<PlaneTicketParams> {
        parse_params(&self.params)
    }

    pub fn linear_params(&self) -> Result<LinearGaussianParams> {
        parse_params(&self.params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("env.k must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("env.T must be >= 1".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("env.M must be >= 1".into()));
        }
        if !self.noise_scale().is_finite() {
            return Err(Error::InvalidConfig("env.noise_scale must be finite".into()));
        }
        match self.env {
            EnvKind::PlaneTicket => self.plane_params()?.validate(),
            EnvKind::LinearGaussian => self.linear_params()?.validate(),
        }
    }
}

fn parse_params<T: for<'de> Deserialize<'de>>(m: &Map<String, Value>) -> Result<T> {
    let v = Value::Object(m.clone());
    serde_path_to_error::deserialize(v)
        .map_err(|e| Error::InvalidConfig(format!("env.params.{}: {}", e.path(), e.inner())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaneTicketParams {
    /// Per-draw u^ε std is `ueps_std * sqrt(k)`.
    pub ueps_std: f64,
    pub uo_low: f64,
    pub uo_high: f64,
}

impl Default for PlaneTicketParams {
    fn default() -> Self {
        Self {
            ueps_std: 0.1,
            uo_low: -1.0,
            uo_high: 1.0,
        }
    }
}

impl PlaneTicketParams {
    fn validate(&self) -> Result<()> {
        if !(self.ueps_std >= 0.0) || !(self.uo_high >= self.uo_low) {
            return Err(Error::InvalidConfig("plane ticket params out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearGaussianParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_s: f64,
    pub sigma_o: f64,
    /// Std of u^ε; each of the k draws has std `sigma_eps * sqrt(k)`.
    pub sigma_eps: f64,
    pub sigma_w: f64,
    pub action_low: f64,
    pub action_high: f64,
    pub overflow_guard: f64,
}

impl Default for LinearGaussianParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            gamma: 0.2,
            c_s: 0.2,
            sigma_o: 1.5,
            sigma_eps: 0.5,
            sigma_w: 0.005,
            action_low: -6.0,
            action_high: 6.0,
            overflow_guard: 1e6,
        }
    }
}

impl LinearGaussianParams {
    fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha,
            self.beta,
            self.gamma,
            self.c_s,
            self.sigma_o,
            self.sigma_eps,
            self.sigma_w,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite
            || self.sigma_o < 0.0
            || self.sigma_eps < 0.0
            || self.sigma_w < 0.0
            || !(self.action_high >= self.action_low)
            || !(self.overflow_guard > 0.0)
        {
            return Err(Error::InvalidConfig("linear-Gaussian params out of range".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let s: EnvSpec = serde_json::from_str(r#"{"env":"plane_ticket","k":3,"T":200}"#).unwrap();
        assert_eq!(s.m, 30);
        assert_eq!(s.noise_scale(), 10.0);
        assert_eq!(s.plane_params().unwrap(), PlaneTicketParams::default());
        let back: EnvSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_param_reports_path() {
        let s: EnvSpec = serde_json::from_str(
            r#"{"env":"linear_gaussian","k":1,"T":50,"params":{"alpha":0.5,"alpah":1}}"#,
        )
        .unwrap();
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("alpah"), "{err}");
    }

    #[test]
    fn linear_spec_carries_params() {
        let p = LinearGaussianParams {
            beta: 0.0,
            ..Default::default()
        };
        let s = EnvSpec::linear_gaussian(2, 40, p);
        assert_eq!(s.linear_params().unwrap(), p);
        assert_eq!(s.noise_scale(), 1.0);
        s.validate().unwrap();
    }
}
