use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("c_min ({c_min}) exceeds c_max ({c_max})")]
    Bounds { c_min: f64, c_max: f64 },
}

/// Rate constants of the kinetic model.
///
/// Attachment of tile `i` happens at `kf * c_i`; a tile held by total
/// matched strength `b` detaches at `kr * exp(-b * gse)`. `r` is the
/// lock-in rate used by the per-site error model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticParams {
    pub kf: f64,
    pub kr: f64,
    pub gse: f64,
    pub r: f64,
    pub c_min: f64,
    pub c_max: f64,
}

fn positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NotPositive { name, value })
    }
}

impl KineticParams {
    /// Builds parameters with the lock-in rate at its upper bound `2 kf c_max`.
    pub fn new(kf: f64, kr: f64, gse: f64, c_min: f64, c_max: f64) -> Result<Self, ParamError> {
        positive("k_f", kf)?;
        positive("k_r", kr)?;
        positive("G_se", gse)?;
        positive("c_min", c_min)?;
        positive("c_max", c_max)?;
        if c_min > c_max {
            return Err(ParamError::Bounds { c_min, c_max });
        }
        Ok(KineticParams {
            kf,
            kr,
            gse,
            r: 2.0 * kf * c_max,
            c_min,
            c_max,
        })
    }

    /// Overrides the lock-in rate. Zero is allowed and means errors never lock.
    pub fn with_r(mut self, r: f64) -> Result<Self, ParamError> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(ParamError::NotPositive { name: "r", value: r });
        }
        self.r = r;
        Ok(self)
    }

    pub fn forward_rate(&self, c: f64) -> f64 {
        self.kf * c
    }

    pub fn reverse_rate(&self, b: u32) -> f64 {
        self.kr * (-(b as f64) * self.gse).exp()
    }

    /// Probability that a wrong tile with input mismatch `m` locks in
    /// before falling off: `r / (r + kr exp(-(tau - m) gse))`.
    pub fn epsilon(&self, m: u32, tau: u32) -> f64 {
        epsilon(m, tau, self)
    }

    /// Violations of the operating regime
    /// `kr e^{-(tau-1)gse} >> kf c_max > kf c_min >> kr e^{-tau gse}`,
    /// using a factor of 10 for `>>`.
    pub fn regime_warnings(&self, tau: u32) -> Vec<String> {
        let mut out = Vec::new();
        let weak = self.kr * (-((tau as f64) - 1.0) * self.gse).exp();
        let strong = self.kr * (-(tau as f64) * self.gse).exp();
        if weak < 10.0 * self.kf * self.c_max {
            out.push(format!(
                "k_r e^{{-(tau-1)G_se}} = {weak:e} is not >> k_f c_max = {:e}",
                self.kf * self.c_max
            ));
        }
        if self.kf * self.c_min < 10.0 * strong {
            out.push(format!(
                "k_f c_min = {:e} is not >> k_r e^{{-tau G_se}} = {strong:e}",
                self.kf * self.c_min
            ));
        }
        out
    }
}

pub fn forward_rate(c: f64, params: &KineticParams) -> f64 {
    params.forward_rate(c)
}

pub fn reverse_rate(b: u32, params: &KineticParams) -> f64 {
    params.reverse_rate(b)
}

pub fn epsilon(m: u32, tau: u32, params: &KineticParams) -> f64 {
    let r = params.r;
    if r == 0.0 {
        return 0.0;
    }
    let off = params.kr * (-((tau as f64) - (m as f64)) * params.gse).exp();
    r / (r + off)
}
